"""
The command-line tool
=====================

Each subcommand writes CSV files, an SVG figure and a manifest.json into
its output directory.  Same as running ``qbratu <command> ...`` in a shell.
"""

import json
import sys
from pathlib import Path

from qbratu import cli

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo-out")

# classical path, fold and profiles at two lambdas
cli.main(["classical", "--lambda", "1.0", "--lambda", "3.0", "--out", str(out / "classical")])

# one quantum solve with its classical comparison
code = cli.main(["solve", "--lambda", "1.0", "--seed", "42", "--out", str(out / "solve")])
manifest = json.loads((out / "solve" / "manifest.json").read_text())
print("solve exit code", code, "->", manifest["points"][0])

# a short lower-branch sweep from a config file; flags override the file
cfg = out / "lower.json"
cfg.write_text(json.dumps({"lower_schedule": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]}))
cli.main(["continue", "--branch", "lower", "--config", str(cfg), "--out", str(out / "lower")])
print((out / "lower" / "diagram.csv").read_text())

for p in sorted(out.rglob("*")):
    if p.is_file():
        print(p)
