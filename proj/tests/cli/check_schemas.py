"""Runs every report-producing command on the bundled data and validates
each JSON output against the schema shipped in schemas/."""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

cli, data_dir, schema_dir = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])

outputs = {
    "point_estimates.json": "point_estimates",
    "bootstrap_summary.json": "bootstrap_summary",
    "outliers.json": "outliers",
    "sensitivity.json": "sensitivity",
    "control.json": "control",
    "importance.json": "importance",
    "synthetic.json": "synthetic",
}

failures = 0
with tempfile.TemporaryDirectory() as tmp:
    common = ["--input", str(data_dir / "stemcell_like.csv"), "--out", tmp, "--trees", "15",
              "--replicates", "4", "--repetitions", "5", "--control", "H01", "--threshold", "0.6"]
    for cmd in ["validate", "bootstrap", "outliers", "sensitivity", "control", "importance"]:
        subprocess.run([cli, cmd, *common], check=True, stdout=subprocess.DEVNULL)
    subprocess.run([cli, "synth", "--out", tmp], check=True, stdout=subprocess.DEVNULL)
    for name, schema in outputs.items():
        doc = json.loads((Path(tmp) / name).read_text())
        validator = jsonschema.Draft202012Validator(json.loads((schema_dir / f"{schema}.schema.json").read_text()))
        errors = list(validator.iter_errors(doc))
        for e in errors:
            print(f"{name}: {e.message} at {list(e.absolute_path)}")
        failures += len(errors)
        print(f"{name}: {'ok' if not errors else 'INVALID'}")

sys.exit(1 if failures else 0)
