"""Acceptance criteria, one test and one PASS/FAIL line each.

Every test prints ``criterion N: PASS|FAIL <detail>`` (also collected into
the pytest terminal summary). Tolerances and runtime limits are fixed here
and are not adjusted to make a criterion pass.
"""

import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from qudit_memory.beam_optics import (
    BeamSpec,
    bessel_gaussian_field,
    fourier_lens_transform,
    measured_ring_radius,
    pov_field_analytic,
    render_grid,
)
from qudit_memory.cli import main
from qudit_memory.config_io import ExperimentConfig
from qudit_memory.eit_storage import (
    GAMMA_D1,
    EITParams,
    PulseSpec,
    effective_od,
    efficiency_vs_mode,
    optimal_od,
    storage_efficiency_analytic,
    uniform_mode_range,
)
from qudit_memory.maxwell_bloch import convergence_report
from qudit_memory.metrics import CrosstalkMatrix, crosstalk_contrast, mode_overlap_matrix, similarity
from qudit_memory.qudit_channel import (
    EfficiencyVector,
    apply_memory,
    classical_fidelity_bound,
    classical_fidelity_bound_with_efficiency,
    cloning_bound,
    fidelity_pure,
    fidelity_vs_uniformity,
    make_uniform_qudit,
)
from qudit_memory.reproduce import FIGS3_ELLS, FIGS3_KR, FIGS3B_OD, figure_S3a, figure_S3b
from qudit_memory.tomography import (
    linear_inversion,
    mle_reconstruct,
    monte_carlo_errorbars,
    simulate_counts,
    standard_projector_set,
)

P = EITParams()
PULSE = PulseSpec()


def report(n: int, checks: dict[str, bool], runtime: float, limit: float, detail: str = ""):
    """Print the criterion line, then fail with the list of failed checks."""
    checks = {**checks, f"runtime {runtime:.2f}s < {limit:g}s": runtime < limit}
    failed = [k for k, ok in checks.items() if not ok]
    status = "FAIL" if failed else "PASS"
    line = f"criterion {n}: {status} {detail}".rstrip()
    if failed:
        line += " | failed: " + "; ".join(failed)
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert not failed, line


def test_criterion_01_closed_form_sanity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    n = 10_000
    D = rng.uniform(0, 1e3, n)
    g21 = rng.uniform(0, 0.1 * GAMMA_D1, n)
    # kappa in (0, 3]: reflect the half-open draw [0, 3) onto (0, 3]
    kappa = 3.0 - rng.uniform(0, 3.0, n)
    etas = np.array([
        storage_efficiency_analytic(P.replace(gamma21=g), PulseSpec(kappa=k), d) for d, g, k in zip(D, g21, kappa)
    ])
    zero = storage_efficiency_analytic(P, PULSE, 0.0)
    rt = time.perf_counter() - t0
    report(1, {"eta(0) == 0": zero == 0.0, "0 <= eta <= 1": bool(np.all((etas >= 0) & (etas <= 1)))},
           rt, 5, f"eta(0)={zero} range=[{etas.min():.3g}, {etas.max():.3g}] over {n} draws")


def test_criterion_02_solver_matches_closed_form():
    t0 = time.perf_counter()
    checks, parts = {}, []
    for D in (50, 100, 200):
        rep = convergence_report(P, PULSE, float(D))
        eta_mb = rep["efficiency"][1]
        eta_cf = float(storage_efficiency_analytic(P, PULSE, D))
        diff = abs(eta_mb - eta_cf)
        checks[f"|MB-closed| at D={D} < 0.03"] = diff < 0.03
        checks[f"self-convergence at D={D} < 0.002"] = rep["change"] < 0.002
        parts.append(f"D={D}: {eta_mb:.4f} vs {eta_cf:.4f} (refine {rep['change']:.1e})")
    report(2, checks, time.perf_counter() - t0, 120, "; ".join(parts))


def test_criterion_03_gaussian_mode():
    t0 = time.perf_counter()
    eta = float(efficiency_vs_mode(P, PULSE, BeamSpec(k_r_index=0.0), [0])[0])
    report(3, {"eta = 0.723 +/- 0.03": abs(eta - 0.723) <= 0.03}, time.perf_counter() - t0, 1,
           f"Gaussian-mode eta={eta:.4f} with D0={P.D0:.2f}")


def _non_increasing_in_abs_ell(ells, etas) -> bool:
    by_abs = {}
    for ell, eta in zip(ells, etas):
        by_abs.setdefault(abs(ell), []).append(eta)
    seq = [max(by_abs[m]) for m in sorted(by_abs)]
    low = [min(by_abs[m]) for m in sorted(by_abs)]
    return all(b <= a * (1 + 1e-12) for a, b in zip(low, seq[1:]))


def test_criterion_04_mode_uniformity():
    t0 = time.perf_counter()
    ells = list(range(-12, 13))
    e5 = efficiency_vs_mode(P, PULSE, BeamSpec(), ells, k_r_index=5.0)
    e1 = efficiency_vs_mode(P, PULSE, BeamSpec(), ells, k_r_index=1.0)
    spread5 = (e5.max() - e5.min()) / e5[12]
    checks = {
        "k_r=5 spread < 5%": spread5 < 0.05,
        "k_r=1 eta(12) < 0.5 eta(0)": e1[24] < 0.5 * e1[12] and e1[0] < 0.5 * e1[12],
        "non-increasing in |ell|": _non_increasing_in_abs_ell(ells, e5) and _non_increasing_in_abs_ell(ells, e1),
    }
    report(4, checks, time.perf_counter() - t0, 30,
           f"k_r=5 spread={spread5:.4f}; k_r=1 eta(0)={e1[12]:.4f} eta(12)={e1[24]:.4f}")


def test_criterion_05_figS3_properties(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig()
    _, rows_a = figure_S3a(cfg)
    _, rows_b = figure_S3b(cfg)
    eta_a = {(kr, ell): eta for kr, ell, _, eta in rows_a}
    ranges, peaks = [], []
    for kr in FIGS3_KR:
        etas = [eta_a[(kr, ell)] for ell in FIGS3_ELLS]
        ranges.append(uniform_mode_range(FIGS3_ELLS, etas))
        peaks.append(max(etas))
    d_opt = optimal_od(P, PULSE)
    restored = True
    for ell in FIGS3_ELLS:
        series = sorted((od, eta) for _, e, od, eta in rows_b if e == ell)
        # keep the peak ODs whose effective OD lies below the efficiency optimum
        pre = [eta for od, eta in series if od * _overlap13(ell) <= d_opt]
        restored &= all(b > a for a, b in zip(pre, pre[1:]))
    restored &= max(eta for *_, eta in rows_b) > max(eta_a[(13.0, ell)] for ell in FIGS3_ELLS)
    code = main(["reproduce", "figS3a", "--out", str(tmp_path)]) + main(["reproduce", "figS3b", "--out", str(tmp_path)])
    emitted = code == 0 and all((tmp_path / f"figS3{s}.csv").exists() for s in "ab")
    checks = {
        "uniform range non-decreasing in k_r": all(b >= a for a, b in zip(ranges, ranges[1:])),
        "peak eta non-increasing in k_r": all(b <= a * (1 + 1e-12) for a, b in zip(peaks, peaks[1:])),
        "OD restores eta at k_r=13": restored,
        "figS3a/figS3b emitted": emitted,
    }
    report(5, checks, time.perf_counter() - t0, 120,
           f"ranges={ranges}; peak eta {peaks[0]:.3f}->{peaks[-1]:.3f}; OD grid {FIGS3B_OD[0]:g}..{FIGS3B_OD[-1]:g}")


def _overlap13(ell: int) -> float:
    return effective_od(BeamSpec(ell=ell, k_r_index=13.0), p=P.replace(D0=1.0))


def _spec_with_ratio(ell: int, ratio: float) -> BeamSpec:
    base = BeamSpec()
    return BeamSpec(ell=ell, k_r_index=ratio * base.omega_0 / base.k_r_calibration)


def _xcorr(a, b) -> float:
    return float(np.sum(a * b) / np.sqrt(np.sum(a * a) * np.sum(b * b)))


def test_criterion_06_ring_invariance():
    t0 = time.perf_counter()
    radii, xcorrs = [], []
    for ell in range(-12, 13):
        spec = _spec_with_ratio(ell, 8.0)
        ft = fourier_lens_transform(bessel_gaussian_field(spec), spec.focal_length)
        assert ft.grid.samples_per_side == 512
        radii.append(measured_ring_radius(ft))
        xcorrs.append(_xcorr(ft.intensity, pov_field_analytic(spec, ft.grid, "fourier").intensity))
    radii = np.array(radii)
    spread = (radii.max() - radii.min()) / radii[12]
    checks = {"ring radius spread < 2%": spread < 0.02, "cross-correlation >= 0.999": min(xcorrs) >= 0.999}
    report(6, checks, time.perf_counter() - t0, 60,
           f"r_r/w0=8: radius spread={spread:.4f}; min xcorr={min(xcorrs):.6f}")


def test_criterion_07_qudit_channel():
    t0 = time.perf_counter()
    exact, etas_out = True, []
    for d in (2, 5, 10, 15, 20, 25):
        labels = list(range(-(d // 2), d - d // 2))
        state = make_uniform_qudit(labels)
        out = apply_memory(state, EfficiencyVector(tuple(labels), [0.6] * d))
        exact &= np.allclose(out.retrieved.amplitudes, state.amplitudes, rtol=0, atol=1e-15)
        exact &= fidelity_pure(state, out.retrieved.density_matrix()) == pytest.approx(1.0, abs=1e-15)
        etas_out.append(out.channel_efficiency)
    k = np.linspace(0, 1, 201)
    err = max(abs(fidelity_vs_uniformity(2, [1.0, x]) - (1 + x) ** 2 / (2 * (1 + x * x))) for x in k)
    points = {kk: fidelity_vs_uniformity(2, [1.0, kk]) for kk in (1.0, 0.0, 0.5)}
    checks = {
        "uniform eta returns the state": bool(exact),
        "eta independent of d": max(etas_out) - min(etas_out) <= 1e-15,
        "F(d=2) closed form to 1e-12": err <= 1e-12,
        "F(1)=1, F(0)=0.5, F(0.5)=0.9": all(
            abs(points[kk] - v) <= 1e-12 for kk, v in ((1.0, 1.0), (0.0, 0.5), (0.5, 0.9))
        ),
    }
    report(7, checks, time.perf_counter() - t0, 1, f"max closed-form error={err:.1e}; eta={etas_out[0]}")


def test_criterion_08_classical_benchmarks(golden):
    t0 = time.perf_counter()
    f_small = classical_fidelity_bound(1e-9)
    f_half = classical_fidelity_bound(0.5)
    f_eta, _ = classical_fidelity_bound_with_efficiency(0.5, 0.6)
    f_clone = cloning_bound(25)
    checks = {
        "F_class(0+) = 2/3 +/- 1e-6": abs(f_small - 2 / 3) <= 1e-6,
        "F_class(0.5) golden": abs(f_half - golden["classical_bound_n0p5"]) <= 1e-12,
        "eta-adjusted in [0.69, 0.71]": 0.69 <= f_eta <= 0.71,
        # 0.53846 is 7/13 quoted to five digits; the 1e-9 tolerance applies to 7/13
        "cloning F(25) = 7/13 (0.53846) +/- 1e-9": abs(f_clone - 7 / 13) <= 1e-9 and round(f_clone, 5) == 0.53846,
    }
    report(8, checks, time.perf_counter() - t0, 1,
           f"F(0+)={f_small:.9f} F(0.5)={f_half:.6f} F(0.5,0.6)={f_eta:.5f} F_clone(25)={f_clone:.9f}")


def test_criterion_09_tomography():
    t0 = time.perf_counter()
    rng = np.random.default_rng(9)
    li_err = []
    for d in (2, 3, 5, 25):
        pset = standard_projector_set(d)
        rho = oracles.random_density_matrix(d, rng)
        rec = simulate_counts(rho, pset, 1000, noiseless=True)
        li_err.append(float(np.max(np.abs(linear_inversion(rec, pset).matrix - rho))))
    psi = oracles.psi6_state()
    rho6 = np.outer(psi, psi.conj())
    pset25 = standard_projector_set(25)
    res = mle_reconstruct(simulate_counts(rho6, pset25, 10**6, seed=6), pset25)
    m = res.state.matrix
    fid = float(np.real(psi.conj() @ m @ psi))
    w = np.linalg.eigvalsh(m)
    physical = bool(np.allclose(m, m.conj().T, atol=0) and w[0] >= -8 * np.finfo(float).eps
                    and abs(np.trace(m).real - 1) <= 1e-12)
    monotone = bool(np.all(np.diff(res.history) >= -1e-9 * np.abs(res.history[1:])))
    pset5 = standard_projector_set(5)
    rho5 = oracles.random_density_matrix(5, np.random.default_rng(5))
    bars = [
        monte_carlo_errorbars(simulate_counts(rho5, pset5, n, seed=1), pset5, n_resamples=30, seed=2, target=rho5)
        for n in (10**4, 10**6)
    ]
    ratio = float(np.mean(bars[0].element_std) / np.mean(bars[1].element_std))
    checks = {
        "LI round trip to 1e-8": max(li_err) <= 1e-8,
        "psi6 MLE fidelity > 0.98": fid > 0.98,
        "MLE PSD and trace 1": physical,
        "likelihood monotone": monotone,
        "error bars ~ 1/sqrt(counts) within x2": 10 / 2 <= ratio <= 10 * 2,
    }
    report(9, checks, time.perf_counter() - t0, 600,
           f"LI err={max(li_err):.1e}; psi6 F={fid:.5f} min eig={w[0]:.1e}; error-bar ratio (100x counts)={ratio:.2f}")


def test_criterion_10_metrics():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    sim_ok = True
    for _ in range(50):
        a = rng.random((32, 32))
        s = float(rng.uniform(1e-6, 1e6))
        sim_ok &= abs(similarity(a, a) - 1) <= 1e-12 and abs(similarity(a, s * a) - 1) <= 1e-12
        b = rng.random((32, 32))
        sim_ok &= abs(similarity(s * a, b) - similarity(a, b)) <= 1e-12
    c_diag = crosstalk_contrast(CrosstalkMatrix(tuple(range(25)), np.diag(rng.uniform(0.5, 2, 25)))).average
    ells = list(range(-12, 13))
    grid = render_grid(BeamSpec(), "medium", 256)
    fields = [pov_field_analytic(BeamSpec(ell=l), grid, plane="medium").normalized() for l in ells]
    c_ideal = crosstalk_contrast(mode_overlap_matrix(fields, ells)).average
    e = np.full((25, 25), 0.076)
    np.fill_diagonal(e, 1.0)
    c_def = crosstalk_contrast(CrosstalkMatrix(tuple(ells), e)).average
    checks = {
        "S(A,A)=1 and scale invariance": bool(sim_ok),
        "diagonal contrast = 1": c_diag == 1.0,
        "ideal 25-mode C >= 0.99": c_ideal >= 0.99,
        "uniform 0.076 gives C = 0.924": abs(c_def - 0.924) <= 1e-12,
    }
    report(10, checks, time.perf_counter() - t0, 30, f"C_ideal={c_ideal:.6f}; C(0.076)={c_def:.6f}")


def test_criterion_11_determinism(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for tag in "ab":
        out = tmp_path / tag
        assert main(["reproduce", "all", "--seed", "0", "--out", str(out)]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    same = outs[0].keys() == outs[1].keys() and all(outs[0][k] == outs[1][k] for k in outs[0])
    # no runtime limit is stated for this criterion
    report(11, {"byte-identical reproduce output": same}, time.perf_counter() - t0, float("inf"),
           f"{len(outs[0])} files compared")
