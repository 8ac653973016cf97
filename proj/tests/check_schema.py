"""Checks that every preset's config echo validates against the published schema."""
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

binary, schema_path = sys.argv[1], Path(sys.argv[2])
schema = json.loads(schema_path.read_text())
jsonschema.Draft202012Validator.check_schema(schema)
validator = jsonschema.Draft202012Validator(schema)

presets = ["fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig3c", "fig3d", "fig4a", "fig4b"]
with tempfile.TemporaryDirectory() as tmp:
    for name in presets:
        out = Path(tmp) / name
        subprocess.run([binary, "reproduce", name, "--scale-N", "100", "--out", str(out)], check=True,
                       stdout=subprocess.DEVNULL)
        validator.validate(json.loads((out / "config.echo.json").read_text()))

for bad in [{"colour": "blue"}, {"couplings": {"T4": 0.1, "t6": -0.1}}, {"scale_N": 0},
            {"flow": {"legs": [{"coupling": "T3", "target": 1}]}}]:
    if validator.is_valid(bad):
        sys.exit(f"schema accepted {bad}")
print("schema ok")
