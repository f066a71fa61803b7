"""Simulation toolkit for sensing with random communication signals."""

__version__ = "0.1.0"

from .config import (
    ExperimentConfig,
    parse_config,
    scene_geometry,
    validate_text,
)
from .constellation import (
    Constellation,
    MomentReport,
    from_json,
    make_standard,
    moments,
    normalize_power,
    sample_block,
    to_json,
)
from .experiments import (
    RunManifest,
    run_experiment,
)
from .metrics import (
    Acf,
    C_LIGHT,
    RangeProfile,
    RangeScene,
    SensingStats,
    acf,
    expected_acf_profile,
    expected_isl,
    isl,
    isl_db,
    psd,
    range_profile,
    sensing_stats,
    transmit_samples,
    write_profile_csv,
)
from .precoding import (
    CommLink,
    PrecodedFrame,
    TirModel,
    comm_rate,
    ddp_precoder,
    dip_precoder,
    ergodic_error,
    lmmse_error,
    lse_error,
)
from .pulses import (
    DesignResult,
    PulseSpec,
    RegionIslr,
    design_pulse,
    nyquist_defect,
    pulse_acf,
    region_islr,
    rrc_pulse,
    weak_target_detection_prob,
    weak_target_improvement,
)
from .shaping import (
    AwgnChannel,
    ShapingProblem,
    ShapingResult,
    mutual_information,
    shape,
    tradeoff_frontier,
)
from .utils import (
    ConfigError,
    ConvergenceError,
    InfeasibleError,
    complex_gaussian,
    db_to_lin,
    derive_seed,
    lin_to_db,
    rng_from,
)
from .waveform import (
    ModulationBasis,
    SignalBlock,
    basis_descriptor,
    basis_from_descriptor,
    build_basis,
    modulate,
    unitarity_defect,
)
