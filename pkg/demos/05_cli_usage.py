"""Driving the command-line front end from Python.

The same calls work from a shell as ``bcs-tc sweep --config run.ini``.
With ``--no-timing`` two runs produce byte-identical files.
"""
import tempfile
from pathlib import Path

from bcs_tc.cli import main

config = """
[potential]
kind = gaussian
depth = 1.0
length = 1.0

[run]
mu_list = 1e-2, 1e-3
"""

with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp) / "run.ini"
    cfg.write_text(config)
    out = Path(tmp) / "sweep.csv"
    status = main(["sweep", "--config", str(cfg), "--out", str(out), "--no-timing"])
    print(f"exit status {status}")
    print(out.read_text())
