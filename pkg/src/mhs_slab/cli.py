"""Command-line driver: ``solve``, ``verify`` and ``linear``.

Exit codes: 0 success, 1 invalid input (configuration, data, compatibility,
smallness), 2 the solver failed to converge or a solver stage broke down,
3 ``verify`` found stored diagnostics that do not match the stored fields.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import fieldio
from .boundary_data import BoundaryData, validate
from .config import SolverConfig
from .errors import MHSError, ValidationError
from .fixed_point import DiagnosticsReport, pressure_reconstruct, residual_report, solve
from .linear_oracle import linear_field

log = logging.getLogger("mhs_slab")

EXIT_OK, EXIT_INVALID, EXIT_SOLVER, EXIT_MISMATCH = 0, 1, 2, 3
VERIFY_TOL = 1e-12

_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "quiet": logging.ERROR}


def configure_logging() -> None:
    level = _LEVELS.get(os.environ.get("MHS_LOG", "info").lower(), logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("mhs_slab").setLevel(level)


def _set_threads(n: int) -> None:
    if n <= 0:
        return
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover
        pass


def _load_inputs(args) -> tuple[SolverConfig, BoundaryData]:
    config = SolverConfig.from_file(args.config) if args.config else SolverConfig()
    if args.data:
        data = fieldio.load_data_spec(args.data, config.torus)
    else:
        data = BoundaryData.zeros(config.torus)
    return config, data


def _write_common(out: Path, config: SolverConfig, data: BoundaryData) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config.to_text())
    fieldio.write_field(out / "data.mhsf", fieldio.data_to_surface(data), config.L)


def _json_dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _summary_lines(title: str, report: dict, extra: dict) -> list[str]:
    lines = [title, ""]
    for key in sorted(extra):
        lines.append(f"{key:28s} {extra[key]}")
    lines.append("")
    for key in DiagnosticsReport.RECOMPUTABLE:
        val = report[key]
        if isinstance(val, (list, tuple)):
            val = ", ".join(f"{v:.3e}" for v in val)
        else:
            val = f"{val:.3e}"
        lines.append(f"{key:28s} {val}")
    return lines


def cmd_solve(args) -> int:
    config, data = _load_inputs(args)
    validate(data, config.M_max, config.alpha)
    if args.seed is not None:
        np.random.seed(args.seed)
    t0 = time.perf_counter()
    state = solve(data, config, check=False)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    _write_common(out, config, data)
    fieldio.write_field(out / "B.mhsf", state.B, config.L)
    fieldio.write_field(out / "j.mhsf", state.j, config.L)
    fieldio.write_field(out / "p.mhsf", state.p[None], config.L)
    fieldio.write_field(out / "j0.mhsf", state.j0.as_array(), config.L)
    report = state.diagnostics.to_dict()
    payload = {
        "kind": "solve",
        "version": __version__,
        "converged": True,
        "outer_iterations": state.iterate,
        "iterate_deltas": state.deltas,
        "lipschitz_quotients": state.lipschitz_quotients,
        "fluxes": {"J1": state.flux.J1, "J2": state.flux.J2},
        "diagnostics": report,
        "seed": args.seed,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    _json_dump(out / "diagnostics.json", payload)
    extra = {
        "outer iterations": state.iterate,
        "wall time [s]": f"{elapsed:.2f}",
        "flux J1": f"{state.flux.J1:.6e}",
        "flux J2": f"{state.flux.J2:.6e}",
        "contraction estimate": f"{report['contraction_estimate']:.3e}",
    }
    (out / "summary.txt").write_text("\n".join(_summary_lines("solve: converged", report, extra)) + "\n")
    if args.csv:
        fieldio.write_csv_slice(out / "B3_inflow.csv", state.B[2, 0], config.torus)
        fieldio.write_csv_slice(out / "B3_outflow.csv", state.B[2, -1], config.torus)
    print(f"converged in {state.iterate} outer iterations; results in {out}")
    return EXIT_OK


def cmd_linear(args) -> int:
    config, data = _load_inputs(args)
    validate(data, config.M_max, config.alpha)
    lin = linear_field(data.f_minus, data.f_plus, data.g, config.L, config.n_z)
    j = np.broadcast_to(lin.j0[:, None], lin.B.shape).copy()
    p = pressure_reconstruct(lin.B, j, config.L, tol=None)
    report = residual_report(lin.B, j, p, data, config.L).to_dict()
    out = Path(args.out)
    _write_common(out, config, data)
    fieldio.write_field(out / "B.mhsf", lin.B, config.L)
    fieldio.write_field(out / "j.mhsf", j, config.L)
    fieldio.write_field(out / "p.mhsf", p[None], config.L)
    fieldio.write_field(out / "j0.mhsf", lin.j0, config.L)
    payload = {
        "kind": "linear",
        "version": __version__,
        "fluxes": {"J1": lin.flux.J1, "J2": lin.flux.J2},
        "diagnostics": report,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    extra = {"flux J1": f"{lin.flux.J1:.6e}", "flux J2": f"{lin.flux.J2:.6e}"}
    if args.compare:
        other = Path(args.compare)
        B_nl = fieldio.read_field(other / "B.mhsf").values
        j0_nl = fieldio.read_field(other / "j0.mhsf").surface
        if B_nl.shape != lin.B.shape:
            raise ValidationError("companion run uses a different grid")
        gap = {
            "B_max_gap": float(np.max(np.abs(B_nl - lin.B))),
            "j0_max_gap": float(np.max(np.abs(j0_nl - lin.j0))),
        }
        payload["comparison"] = gap
        extra.update({k: f"{v:.3e}" for k, v in gap.items()})
    _json_dump(out / "diagnostics.json", payload)
    (out / "summary.txt").write_text("\n".join(_summary_lines("linear solution", report, extra)) + "\n")
    print(f"linear solution written to {out}")
    return EXIT_OK


def recompute_diagnostics(directory: Path) -> tuple[dict, dict]:
    """Stored and recomputed residual entries of a solution directory."""
    stored = json.loads((directory / "diagnostics.json").read_text())["diagnostics"]
    config = SolverConfig.from_file(directory / "config.txt")
    data = fieldio.data_from_surface(fieldio.read_field(directory / "data.mhsf").surface)
    B = fieldio.read_field(directory / "B.mhsf").values
    j = fieldio.read_field(directory / "j.mhsf").values
    p = fieldio.read_field(directory / "p.mhsf").values[0]
    fresh = residual_report(B, j, p, data, config.L).to_dict()
    return stored, fresh


def cmd_verify(args) -> int:
    directory = Path(args.solution_dir)
    if not (directory / "diagnostics.json").is_file():
        raise ValidationError(f"{directory} holds no diagnostics.json")
    try:
        stored, fresh = recompute_diagnostics(directory)
    except (fieldio.FieldFormatError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"verify: unreadable solution files: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    ok = True
    print(f"{'entry':24s} {'stored':>14s} {'recomputed':>14s}  status")
    for key in DiagnosticsReport.RECOMPUTABLE:
        a = np.atleast_1d(np.asarray(stored[key], dtype=float))
        b = np.atleast_1d(np.asarray(fresh[key], dtype=float))
        good = a.shape == b.shape and bool(np.all(np.abs(a - b) <= VERIFY_TOL))
        ok &= good
        print(f"{key:24s} {a.max():14.6e} {b.max():14.6e}  {'ok' if good else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mhs-slab", description="Magneto-hydrostatic slab equilibria.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, need_out=True):
        p.add_argument("--config", help="key=value solver configuration file")
        p.add_argument("--data", help="boundary data specification (zero data if omitted)")
        p.add_argument("--out", required=need_out, help="output directory")
        p.add_argument("--threads", type=int, default=0, help="worker threads (0 = automatic)")
        p.add_argument("--seed", type=int, default=None, help="seed for randomized runs")

    p_solve = sub.add_parser("solve", help="run the nonlinear fixed-point solver")
    common(p_solve)
    p_solve.add_argument("--csv", action="store_true", help="also export B3 face slices as CSV")
    p_solve.set_defaults(func=cmd_solve)

    p_lin = sub.add_parser("linear", help="closed-form solution of the linearized problem")
    common(p_lin)
    p_lin.add_argument("--compare", help="nonlinear solution directory to compare against")
    p_lin.set_defaults(func=cmd_linear)

    p_ver = sub.add_parser("verify", help="recompute and check stored diagnostics")
    p_ver.add_argument("solution_dir")
    p_ver.add_argument("--threads", type=int, default=0)
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    _set_threads(args.threads)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MHSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
