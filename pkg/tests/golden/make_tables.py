"""Regenerate the ``reproduce`` regression tables under ``v1/reproduce``.

Run from the repository root: ``python tests/golden/make_tables.py``.
Only rerun after an intentional change to a model; the tests compare the
CLI output against these files byte for byte.
"""

from pathlib import Path

from qudit_memory.config_io import ExperimentConfig
from qudit_memory.reproduce import FIGURES, reproduce

OUT = Path(__file__).resolve().parent / "v1" / "reproduce"

for name in FIGURES:
    reproduce(name, ExperimentConfig(), OUT, seed=0)
