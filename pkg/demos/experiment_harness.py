"""Drive a full experiment through the config harness and inspect the manifest.

Everything an experiment needs lives in one flat JSON object; validation
returns a list of field-level diagnostics (empty means runnable) and a run
leaves behind CSVs plus a manifest with a config hash and per-file digests,
so a rerun with the same seed is byte-for-byte reproducible.
"""

import json
import tempfile
from pathlib import Path

from isacsim import parse_config, run_experiment, validate_text

config = {
    "experiment": "acf-compare",
    "seed": 7,
    "trials": 400,
    "bases": ["SC", "OFDM", "OTFS", "AFDM"],
    "constellation": "16QAM",
    "block_len": 64,
}
text = json.dumps(config, indent=2)

diags = validate_text(text)
print(f"diagnostics: {diags!r}")

broken = dict(config, block_len=60, bases=["SC", "OFDM", "OTFS"])
for line in validate_text(json.dumps(broken)):
    print(f"  rejected: {line}")

with tempfile.TemporaryDirectory() as tmp:
    manifest = run_experiment(parse_config(text), out_dir=tmp)
    print(f"config hash {manifest.config_hash[:16]}...")
    for name, digest in sorted(manifest.outputs.items()):
        print(f"  {name}: {digest[:16]}...")
    print(Path(tmp, "eisl.csv").read_text())
    rerun = run_experiment(parse_config(text), out_dir=tmp + "-again")
    print(f"rerun digests identical: {rerun.outputs == manifest.outputs}")
