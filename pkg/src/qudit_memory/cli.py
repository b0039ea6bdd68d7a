"""Command-line entry point: ``qudit-memory <group> <command> [flags]``.

Exit codes: 0 success, 2 invalid input or configuration, 3 numerical
non-convergence, 64 usage error (unknown subcommand or bad flag), 74 I/O
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from ._version import __version__
from .beam_optics import four_f_rescale, pov_field_analytic, render_grid, second_moment_width
from .config_io import (
    TABLE_SCHEMAS,
    ExperimentConfig,
    emit_json,
    emit_table,
    load_config,
    output_directory,
)
from .eit_storage import (
    efficiency_map,
    efficiency_map_rows,
    storage_efficiency_analytic,
    transmission_spectrum,
)
from .exceptions import ConvergenceError, ParameterError
from .field_io import write_field_binary, write_field_csv
from .maxwell_bloch import convergence_report, maxwell_bloch_store
from .metrics import (
    crosstalk_contrast,
    crosstalk_csv,
    mode_overlap_matrix,
    similarity,
)
from .qudit_channel import (
    EfficiencyVector,
    QuditState,
    apply_memory,
    classical_fidelity_bound_with_efficiency,
    fidelity_pure,
    interference_fringe,
    make_uniform_qudit,
)
from .reproduce import FIGURES, reproduce
from .tomography import (
    CountRecord,
    density_matrix_csv,
    mle_reconstruct,
    monte_carlo_errorbars,
    simulate_counts,
    standard_projector_set,
    su_d_generators,
)

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGED, EXIT_USAGE, EXIT_IO = 0, 2, 3, 64, 74
TWO_PI = 2 * math.pi

# Schemas of JSON outputs, printed by --schema next to the CSV table schemas.
JSON_SCHEMAS = {
    "counts": {"dimension": "int", "record": "CountRecord", "state": "QuditState|null"},
    "CountRecord": {"counts": "[number]", "exposure": "int", "seed": "int|null", "noise_floor": "number", "corrections": "[str]"},
    "QuditState": {"labels": "[int]", "re": "[number]", "im": "[number]"},
    "reconstruction": {"converged": "bool", "iterations": "int", "log_likelihood": "number", "likelihood_gap_bound": "number", "method": "str", "fidelity": "number|null"},
    "convergence_report": {"D_eff": "number", "window": "str", "nz": "[int]", "dt_s": "[number]", "efficiency": "[number]", "change": "number", "tolerance": "number", "converged": "bool"},
    "errorbars": {"fidelity_mean": "number", "fidelity_std": "number", "purity_mean": "number", "purity_std": "number", "element_std": "[[number]]", "n_resamples": "int", "seed": "int"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _range_arg(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    if ":" in text:
        try:
            start, stop, step = (float(v) for v in text.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected start:stop:step, got {text!r}") from None
        if step <= 0:
            raise argparse.ArgumentTypeError("step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return _float_list(text)


# ---------------------------------------------------------------- handlers


def _beam(args, cfg):
    beam = cfg.beam
    if args.kr is not None:
        beam = dataclasses.replace(beam, k_r_index=args.kr)
    if args.command == "render":
        spec = beam.with_ell(args.ell)
        grid = render_grid(spec, args.plane, args.samples)
        field = pov_field_analytic(spec, grid, plane=args.plane)
        suffix = "bin" if args.format == "binary" else "csv"
        path = args.out_dir / f"beam_{args.plane}_ell{args.ell}.{suffix}"
        path.parent.mkdir(parents=True, exist_ok=True)
        (write_field_binary if args.format == "binary" else write_field_csv)(field, path)
        return path
    ells = args.ells or list(range(-12, 13))
    r_r, w0 = beam.radius_and_waist(args.plane)
    rows = [(ell, w0, r_r, second_moment_width(ell, w0, r_r)) for ell in ells]
    return emit_table(rows, "beam_width", args.out_dir / "beam_width.csv", cfg, args.seed)


def _eit(args, cfg):
    p, pulse = cfg.medium, cfg.pulse
    if args.command == "spectrum":
        span = args.span_mhz * 1e6 * TWO_PI
        det = np.linspace(-span, span, args.points)
        trans = transmission_spectrum(p, det, args.d_eff)
        rows = list(zip(det.tolist(), trans.tolist()))
        return emit_table(rows, "spectrum", args.out_dir / "eit_spectrum.csv", cfg, args.seed)
    if args.command == "efficiency":
        d = args.d_eff or [p.D0]
        etas = np.atleast_1d(storage_efficiency_analytic(p, pulse, np.array(d)))
        return emit_table(list(zip(d, etas.tolist())), "efficiency", args.out_dir / "eit_efficiency.csv", cfg, args.seed)
    if args.command == "map":
        od = args.od or [p.D0]
        etas = efficiency_map(p, pulse, args.kr, args.ell, od, cfg.beam)
        rows = sorted(efficiency_map_rows(etas, args.kr, args.ell, od))
        return emit_table(rows, "efficiency_map", args.out_dir / "eit_map.csv", cfg, args.seed)
    # simulate
    hold = None if args.hold_ns is None else args.hold_ns * 1e-9
    res = maxwell_bloch_store(p, pulse, args.d_eff, hold=hold, window=args.window)
    step = max(1, len(res.input.times) // args.samples)
    rows = [
        (t, a, b)
        for t, a, b in zip(res.input.times[::step], res.input.values[::step], res.output.values[::step])
    ]
    path = emit_table(rows, "waveform", args.out_dir / "eit_waveform.csv", cfg, args.seed,
                      extra={"efficiency": res.efficiency, "total_efficiency": res.total_efficiency})
    if args.check_convergence:
        report = convergence_report(p, pulse, args.d_eff, hold=hold, window=args.window)
        emit_json(report, args.out_dir / "eit_convergence.json")
        if not report["converged"]:
            raise ConvergenceError(f"efficiency changed by {report['change']:.2e} under refinement")
    return path


def _labels_for(args) -> list[int]:
    if args.labels:
        return args.labels
    d = args.d
    return list(range(-(d // 2), d - d // 2))


def _qudit(args, cfg):
    if args.command == "classical-bound":
        value, model = classical_fidelity_bound_with_efficiency(args.n, args.eta)
        rows = [("classical_bound", value, model, f"n={args.n!r} eta={args.eta!r}")]
        return emit_table(rows, "fidelity_report", args.out_dir / "classical_bound.csv", cfg, args.seed)
    if args.command == "fidelity":
        labels = _labels_for(args)
        state = make_uniform_qudit(labels)
        etas = args.etas or [args.eta] * len(labels)
        if len(etas) != len(labels):
            raise ParameterError(f"{len(etas)} efficiencies for {len(labels)} modes")
        out = apply_memory(state, EfficiencyVector(tuple(labels), etas), args.convention)
        fid = fidelity_pure(state, out.retrieved.density_matrix())
        rows = [
            ("fidelity", fid, f"apply_memory/{args.convention}", f"d={len(labels)}"),
            ("channel_efficiency", out.channel_efficiency, "sum eta_m |a_m|^2", ""),
        ]
        return emit_table(rows, "fidelity_report", args.out_dir / "qudit_fidelity.csv", cfg, args.seed)
    # fringe
    state = QuditState.from_unnormalized((0, 12), [1.0, args.kappa])
    phases = np.linspace(0, TWO_PI, args.points)
    rates, vis = interference_fringe(state, phases, args.noise_floor)
    return emit_table(list(zip(phases.tolist(), rates.tolist())), "fringe", args.out_dir / "qudit_fringe.csv",
                      cfg, args.seed, extra={"visibility": vis})


def _read_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: invalid JSON ({exc.msg})") from None


def _load_counts(path: Path):
    data = _read_json(path)
    if "record" not in data or "dimension" not in data:
        raise ParameterError(f"{path}: expected keys 'dimension' and 'record'")
    record = CountRecord.from_dict(data["record"])
    state = QuditState.from_dict(data["state"]) if data.get("state") else None
    return int(data["dimension"]), record, state


def _tomo(args, cfg):
    seed = cfg.tomography.seed if args.seed is None else args.seed
    if args.command == "generators":
        d = args.d or cfg.tomography.dimension
        basis = su_d_generators(d)
        rows = [
            (j, a, b, float(op[a, b].real), float(op[a, b].imag))
            for j, op in enumerate(basis.operators)
            for a, b in zip(*np.nonzero(op))
        ]
        return emit_table(rows, "generators", args.out_dir / f"generators_d{d}.csv", cfg, seed)
    if args.command == "simulate":
        d = args.d or cfg.tomography.dimension
        state = make_uniform_qudit(range(d)) if args.labels is None else make_uniform_qudit(args.labels)
        if state.dim != d:
            raise ParameterError(f"--labels gives {state.dim} modes but --d is {d}")
        counts = args.counts or cfg.tomography.counts
        floor = cfg.tomography.noise_floor if args.noise_floor is None else args.noise_floor
        record = simulate_counts(state.density_matrix(), standard_projector_set(d), counts, floor, seed, args.noiseless)
        return emit_json({"dimension": d, "record": record.to_dict(), "state": state.to_dict()},
                         args.out_dir / f"counts_d{d}.json")
    d, record, state = _load_counts(args.input)
    if args.d is not None and args.d != d:
        raise ParameterError(f"--d {args.d} does not match the counts file (d={d})")
    pset = standard_projector_set(d)
    if args.command == "reconstruct":
        res = mle_reconstruct(record, pset, max_iters=args.max_iters, tol=args.tol)
        fid = fidelity_pure(state, res.state.matrix) if state is not None else None
        report = {**res.report(), "fidelity": fid}
        (args.out_dir).mkdir(parents=True, exist_ok=True)
        (args.out_dir / "rho.csv").write_text(density_matrix_csv(res.state.matrix), encoding="utf-8", newline="\n")
        emit_json(res.state.to_dict(), args.out_dir / "rho.json")
        path = emit_json(report, args.out_dir / "reconstruction.json")
        if fid is not None:
            print(f"fidelity {fid:.6f}")
        if not res.converged:
            raise ConvergenceError(f"MLE did not converge in {res.iterations} iterations")
        return path
    target = state.density_matrix() if state is not None else None
    bars = monte_carlo_errorbars(record, pset, n_resamples=args.resamples, seed=seed, target=target)
    return emit_json(bars.to_dict(), args.out_dir / "errorbars.json")


def _metrics(args, cfg):
    if args.command == "similarity":
        if args.a and args.b:
            a = np.loadtxt(args.a, delimiter=",", ndmin=2)
            b = np.loadtxt(args.b, delimiter=",", ndmin=2)
            rows = [("similarity", similarity(a, b))]
        else:
            # stored ring vs its 4-f relayed image under a uniform channel
            spec = cfg.beam.with_ell(args.ell)
            grid = render_grid(spec, "fourier", 256)
            field = pov_field_analytic(spec, grid, plane="fourier")
            relayed = four_f_rescale(field, 1.0, invert_image=False)
            retrieved = np.sqrt(args.eta) * relayed.amplitude
            rows = [("similarity", similarity(field.intensity, np.abs(retrieved) ** 2))]
        return emit_table(rows, "similarity", args.out_dir / "similarity.csv", cfg, args.seed)
    ells = list(range(-12, 13))
    grid = render_grid(cfg.beam, "medium", 256)
    fields = [pov_field_analytic(cfg.beam.with_ell(l), grid, plane="medium").normalized() for l in ells]
    m = mode_overlap_matrix(fields, ells)
    if args.background:
        m = m.with_background(args.background)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "crosstalk_matrix.csv").write_text(crosstalk_csv(m), encoding="utf-8", newline="\n")
    c = crosstalk_contrast(m)
    rows = list(zip(ells, c.per_mode))
    return emit_table(rows, "contrast", args.out_dir / "crosstalk_contrast.csv", cfg, args.seed,
                      extra={"average_contrast": c.average})


def _reproduce(args, cfg):
    names = list(FIGURES) if args.figure == "all" else [args.figure]
    path = None
    for name in names:
        path = reproduce(name, cfg, args.out_dir, args.seed)
    return path


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    def shared(default):
        # the flags are accepted before and after the subcommand; subparsers
        # suppress their defaults so they never overwrite a value given earlier
        p = _Parser(add_help=False)
        p.add_argument("--config", type=Path, default=default, help="JSON configuration file (empty file = defaults)")
        p.add_argument("--seed", type=int, default=default, help="RNG seed (unsigned 64-bit); overrides tomography.seed")
        p.add_argument("--out", default=default, help="output directory (default: config output.directory)")
        return p

    common = shared(argparse.SUPPRESS)
    parser = _Parser(
        prog="qudit-memory",
        description="OAM qudit quantum-memory toolkit. Negative ranges need the --flag=value form.",
        parents=[shared(None)],
    )
    parser.add_argument("--schema", action="store_true", help="print output schemas as JSON and exit")
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", parser_class=_Parser)

    def group(name, help_text):
        g = groups.add_parser(name, help=help_text, parents=[common])
        return g.add_subparsers(dest="command", parser_class=_Parser, required=True)

    beam = group("beam", "vortex-beam rendering")
    p = beam.add_parser("render", help="write an analytic POV field", parents=[common])
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--kr", type=float, help="radial wave-vector index")
    p.add_argument("--plane", choices=("fourier", "medium"), default="medium")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p = beam.add_parser("width", help="second-moment width per charge", parents=[common])
    p.add_argument("--ells", type=_int_list)
    p.add_argument("--kr", type=float)
    p.add_argument("--plane", choices=("fourier", "medium"), default="medium")

    eit = group("eit", "EIT storage model")
    p = eit.add_parser("spectrum", help="transmission spectrum", parents=[common])
    p.add_argument("--d-eff", type=float, default=200.0)
    p.add_argument("--span-mhz", type=float, default=20.0, help="half span of the scan (MHz)")
    p.add_argument("--points", type=int, default=401)
    p = eit.add_parser("efficiency", help="closed-form efficiency", parents=[common])
    p.add_argument("--d-eff", type=_float_list, help="comma-separated effective ODs")
    p = eit.add_parser("map", help="efficiency over (k_r, ell, OD)", parents=[common])
    p.add_argument("--kr", type=_range_arg, default=_range_arg("1:15:1"))
    p.add_argument("--ell", type=lambda s: [int(v) for v in _range_arg(s)], default=list(range(-12, 13)))
    p.add_argument("--od", type=_range_arg, help="peak ODs (default: medium.D0)")
    p = eit.add_parser("simulate", help="Maxwell-Bloch write/hold/read", parents=[common])
    p.add_argument("--d-eff", type=float, default=200.0)
    p.add_argument("--hold-ns", type=float)
    p.add_argument("--window", choices=("retrieved", "total"), default="retrieved")
    p.add_argument("--samples", type=int, default=2000, help="approximate rows in the waveform table")
    p.add_argument("--check-convergence", action="store_true")

    qudit = group("qudit", "qudit channel and benchmarks")
    p = qudit.add_parser("fidelity", help="fidelity after the memory channel", parents=[common])
    p.add_argument("--d", type=int, default=25)
    p.add_argument("--labels", type=_int_list)
    p.add_argument("--eta", type=float, default=0.6)
    p.add_argument("--etas", type=_float_list)
    p.add_argument("--convention", choices=("literal", "physical"), default="literal")
    p = qudit.add_parser("classical-bound", help="classical fidelity bound", parents=[common])
    p.add_argument("--n", type=float, default=0.5)
    p.add_argument("--eta", type=float, default=1.0)
    p = qudit.add_parser("fringe", help="two-mode interference fringe", parents=[common])
    p.add_argument("--kappa", type=float, default=1.0, help="amplitude ratio of the second mode")
    p.add_argument("--noise-floor", type=float, default=0.0)
    p.add_argument("--points", type=int, default=73)

    tomo = group("tomo", "state tomography")
    p = tomo.add_parser("generators", help="SU(d) generator entries", parents=[common])
    p.add_argument("--d", type=int)
    p = tomo.add_parser("simulate", help="simulate counts for a uniform qudit", parents=[common])
    p.add_argument("--d", type=int)
    p.add_argument("--labels", type=_int_list)
    p.add_argument("--counts", type=int, help="trials per projector")
    p.add_argument("--noise-floor", type=float)
    p.add_argument("--noiseless", action="store_true", help="write expected counts")
    p = tomo.add_parser("reconstruct", help="maximum-likelihood reconstruction", parents=[common])
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-10)
    p = tomo.add_parser("errorbars", help="Monte Carlo error bars", parents=[common])
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--d", type=int)
    p.add_argument("--resamples", type=int, default=100)

    metrics = group("metrics", "image and cross-talk metrics")
    p = metrics.add_parser("similarity", help="image similarity", parents=[common])
    p.add_argument("--a", type=Path, help="CSV image")
    p.add_argument("--b", type=Path, help="CSV image")
    p.add_argument("--ell", type=int, default=6)
    p.add_argument("--eta", type=float, default=0.6)
    p = metrics.add_parser("crosstalk", help="25-mode overlap matrix and contrast", parents=[common])
    p.add_argument("--background", type=float, default=0.0)

    rep = groups.add_parser("reproduce", help="figure data tables", parents=[common])
    rep.add_argument("figure", choices=list(FIGURES) + ["all"])
    return parser


HANDLERS = {"beam": _beam, "eit": _eit, "qudit": _qudit, "tomo": _tomo, "metrics": _metrics, "reproduce": _reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.schema:
        print(json.dumps({"tables": {k: list(v) for k, v in TABLE_SCHEMAS.items()}, "json": JSON_SCHEMAS},
                         indent=2, sort_keys=True))
        return EXIT_OK
    if args.group is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ParameterError("--seed must be an unsigned 64-bit integer")
        args.out_dir = output_directory(cfg, args.out)
        path = HANDLERS[args.group](args, cfg)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except ParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    if path is not None:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
