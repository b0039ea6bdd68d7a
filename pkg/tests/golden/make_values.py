"""Regenerate ``v1/values.json`` from the independent oracles.

Run from the repository root: ``python tests/golden/make_values.py``.
The package is not imported, so these values are not derived from the
code under test.
"""

import json
import math
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

import oracles as o  # noqa: E402

W0_MEDIUM = 0.6 * 2 * 0.075 / (2 * math.pi / 795e-9 * 0.5e-3)

values = {
    "bessel_i1_over_i0_at_100": o.bessel_i_ratio_miller(1, 100.0),
    "second_moment_width_0_1_10": o.second_moment_width_mp(0, 1.0, 10.0),
    "eta_closed_form_D50": o.eta_closed_form(50),
    "eta_closed_form_D100": o.eta_closed_form(100),
    "eta_closed_form_D200": o.eta_closed_form(200),
    "transparency_width_D200_rad_s": o.transparency_width_mp(200),
    "classical_bound_n0p5": o.classical_bound_series(0.5),
    "classical_bound_n0p5_eta0p6": o.classical_bound_series(0.5, 0.6),
    "classical_bound_n0p5_eta_limit": o.classical_bound_low_eta_series(0.5),
    "overlap_map_condition_d25": float(__import__("numpy").linalg.cond(o.overlap_map_loops(25))),
    "pov_overlap_kr5_ell0": o.pov_radial_overlap(0, 5 * 43.6e-6, W0_MEDIUM, 275e-6),
    "pov_overlap_kr5_ell12": o.pov_radial_overlap(12, 5 * 43.6e-6, W0_MEDIUM, 275e-6),
}

(HERE / "v1" / "values.json").write_text(json.dumps(values, indent=2, sort_keys=True) + "\n")
