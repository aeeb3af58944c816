"""Command-line surface: forward, spectrum, invert, and roundtrip runs.

Exit codes: 0 success, 1 parse or validation failure, 2 the discretized
main-equation operator was numerically singular, 3 the transition matrix
falls outside the implemented regime, 4 any other numerical rejection
(the message names the stage that failed).

All JSON artifacts are written through the canonical serializer, so a
rerun with identical inputs is byte-identical.  The roundtrip report is
the one exception: it records wall-clock stage timings.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from . import io as sio
from . import plots
from .contour import (
    DECAY_REJECT_ORDER,
    SolutionCache,
    build_contour,
    check_Mhat_decay,
    default_s_max,
    recover_q,
)
from .errors import (
    BadTruncation,
    NumericalFailure,
    ProblemValidationError,
    SConditionFailed,
    SLWError,
    UnsupportedRegime,
)
from .forward import choose_h, spectrum, weyl_samples
from .problem import Potential, SingularProblem

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SCONDITION = 2
EXIT_UNSUPPORTED = 3
EXIT_NUMERICAL = 4

DEFAULT_NODES = 1028
DEFAULT_ROUNDTRIP_GRID = 129
SPECTRUM_KMAX_FOR_H = 8
REFORWARD_PROBES = 16


def _exit_code(exc: SLWError) -> int:
    # BadTruncation means the requested (h, s_max) pair is malformed,
    # which is a configuration problem, not a numerical one
    if isinstance(exc, (ProblemValidationError, BadTruncation)):
        return EXIT_VALIDATION
    if isinstance(exc, SConditionFailed):
        return EXIT_SCONDITION
    if isinstance(exc, UnsupportedRegime):
        return EXIT_UNSUPPORTED
    return EXIT_NUMERICAL


@dataclass(frozen=True)
class RunConfig:
    """One resolved command invocation; invariants checked on build."""

    command: str
    problem: str | None = None
    weyl: str | None = None
    model: str | None = None
    out: str | None = None
    report: str | None = None
    emit_csv: str | None = None
    h: float | str = "auto"
    s_max: float | None = None
    nodes: int = DEFAULT_NODES
    grid: tuple[float, float, int] | None = None
    exclude: float | None = None
    kmax: int = 12
    workers: int = 1
    verbose: bool = False

    def __post_init__(self):
        items = []
        if isinstance(self.h, float) and not self.h > 0:
            items.append("h must be positive")
        if self.s_max is not None and not self.s_max > 0:
            items.append("s-max must be positive")
        if self.nodes < 8 or self.nodes % 2:
            items.append("nodes must be an even count of at least 8")
        if self.grid is not None:
            start, stop, num = self.grid
            if start < 0:
                items.append("grid start must be >= 0")
            if stop <= start:
                items.append("grid stop must exceed start")
            if num < 2:
                items.append("grid needs at least 2 points")
        if self.exclude is not None and self.exclude < 0:
            items.append("exclusion radius must be >= 0")
        if self.kmax < 1:
            items.append("kmax must be >= 1")
        if self.workers < 1:
            items.append("workers must be >= 1")
        if items:
            raise ProblemValidationError(
                "invalid configuration:\n  " + "\n  ".join(items))


class RunReport:
    """Stage timings, metrics, and coded warnings for one run."""

    def __init__(self, command: str, verbose: bool = False):
        self.command = command
        self.verbose = verbose
        self.stages: list[dict] = []
        self.metrics: dict = {}
        self.warnings: list[dict] = []
        self.outputs: list[str] = []
        self.current_stage = "setup"

    @contextmanager
    def stage(self, name: str):
        self.current_stage = name
        if self.verbose:
            print(f"[{self.command}] {name}...", file=sys.stderr)
        t0 = time.perf_counter()
        yield
        self.stages.append(
            {"name": name, "seconds": time.perf_counter() - t0})

    def warn(self, code: str, message: str) -> None:
        self.warnings.append({"code": code, "message": message})
        print(f"warning [{code}]: {message}", file=sys.stderr)

    def wrote(self, path) -> None:
        self.outputs.append(str(path))

    def data(self, config: RunConfig) -> dict:
        cfg = {
            "problem": config.problem, "weyl": config.weyl,
            "model": config.model,
            "h": config.h, "s_max": config.s_max, "nodes": config.nodes,
            "grid": list(config.grid) if config.grid else None,
            "exclude": config.exclude, "workers": config.workers,
        }
        return {
            "command": self.command,
            "config": cfg,
            "stages": self.stages,
            "metrics": self.metrics,
            "warnings": self.warnings,
            "outputs": self.outputs,
        }


def _workers_from_env() -> int:
    raw = os.environ.get("SLW_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ProblemValidationError(
            f"SLW_THREADS must be an integer, got {raw!r}") from None


def _parse_h(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise ProblemValidationError(
            f"--h must be 'auto' or a number, got {text!r}") from None


def _parse_grid(text: str) -> tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ProblemValidationError(
            f"--grid must be start:stop:n, got {text!r}")
    try:
        return float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ProblemValidationError(
            f"--grid must be start:stop:n with numeric fields, got {text!r}"
        ) from None


def _exclusion(config: RunConfig, a: float) -> float:
    r = 0.05 * a if config.exclude is None else config.exclude
    if r >= a:
        raise ProblemValidationError(
            f"exclusion radius {r:g} must be smaller than a = {a:g}")
    return r


def _grid_points(config: RunConfig, a: float, t: float) -> np.ndarray:
    if config.grid is None:
        spec = (0.0, t, DEFAULT_ROUNDTRIP_GRID)
    else:
        spec = config.grid
    grid = np.linspace(spec[0], spec[1], spec[2])
    r = _exclusion(config, a)
    grid = grid[np.abs(grid - a) >= max(r, 1e-6 * a)]
    if grid.size < 2:
        raise ProblemValidationError(
            "grid has fewer than 2 points outside the exclusion disk")
    return grid


def _core_mismatch(model: SingularProblem, other: SingularProblem) -> list:
    """Fields of (a, nu, A) on which the two problems differ."""
    bad = []
    if abs(model.a - other.a) > 1e-12 * max(1.0, abs(other.a)):
        bad.append("a")
    if abs(model.nu - other.nu) > 1e-12 * max(1.0, abs(other.nu)):
        bad.append("nu")
    if np.max(np.abs(model.A.as_array() - other.A.as_array())) > 1e-12 * \
            max(1.0, float(np.max(np.abs(other.A.as_array())))):
        bad.append("A")
    return bad


def _spectrum_estimates(problems, report: RunReport):
    """Spectrum estimate per problem, or None where the regime lacks one."""
    out = []
    for prob in problems:
        try:
            out.append(spectrum(prob, k_max=SPECTRUM_KMAX_FOR_H))
        except UnsupportedRegime:
            out.append(None)
        except SLWError as exc:
            report.warn("SPECTRUM_UNAVAILABLE",
                        f"spectrum estimation failed ({exc}); "
                        "contour height check is incomplete")
            out.append(None)
    return out


def _resolve_h(config: RunConfig, problems, report: RunReport) -> float:
    """Contour height from --h; 'auto' clears every found zero of Delta."""
    with report.stage("spectrum"):
        estimates = _spectrum_estimates(problems, report)
        if config.h == "auto":
            if all(est is None for est in estimates):
                report.warn(
                    "REGIME_WITHOUT_LATTICE",
                    "no asymptotic zero lattice; contour height falls "
                    "back to the free-problem margin")
            h = max(choose_h(prob, est) if est is not None
                    else 0.25 * np.pi / prob.a
                    for prob, est in zip(problems, estimates))
        else:
            h = float(config.h)
            heights = [r.rho.imag for est in estimates if est is not None
                       for r in est.eigenvalues]
            if heights and h < max(heights):
                report.warn(
                    "H_BELOW_SPECTRUM",
                    f"explicit h = {h:g} lies below a characteristic zero "
                    f"at height {max(heights):g}; M samples may sit near "
                    "poles")
    report.metrics["h"] = h
    return h


def _build_contour(config: RunConfig, h: float, a: float):
    s_max = config.s_max if config.s_max is not None \
        else default_s_max(h, a)
    contour = build_contour(h, s_max, config.nodes)
    report_smax = {"s_max": contour.s_max, "nodes": len(contour)}
    return contour, report_smax


def _decay_gate(mhat, contour, report: RunReport):
    """Reject data whose tail cannot feed the contour integrals."""
    with report.stage("decay-check"):
        decay = check_Mhat_decay(mhat, contour)
        report.metrics["mhat_decay_order"] = (
            None if not np.isfinite(decay.order) else float(decay.order))
        if decay.order < DECAY_REJECT_ORDER:
            report.warn(
                "DECAY_REJECTED",
                f"Mhat decay order {decay.order:.3f} is below "
                f"{DECAY_REJECT_ORDER}; the data is not consistent with "
                "the model's (a, nu, A)")
            raise NumericalFailure(
                f"Mhat tail decay order {decay.order:.3f} below "
                f"{DECAY_REJECT_ORDER}; refusing to invert")
        if decay.marginal:
            report.warn(
                "DECAY_MARGINAL",
                f"Mhat decay order {decay.order:.3f} < 1; contour "
                "integrals converge only in the principal-value sense")
    return decay


def _emit_recovered_files(config: RunConfig, rec, decay_order, contour,
                          mhat, report: RunReport) -> None:
    if config.out is not None:
        sio.save_recovered(config.out, rec, decay_order)
        report.wrote(config.out)
    if config.emit_csv is not None:
        os.makedirs(config.emit_csv, exist_ok=True)
        base = os.path.join(config.emit_csv, "recovered")
        sio.write_csv(base + ".csv", rec.x, rec.q_hat, rec.epsilon0)
        report.wrote(base + ".csv")
        plots.plot_recovered(base + ".png", rec.x, rec.q_hat, rec.epsilon0,
                             a=None)
        report.wrote(base + ".png")
        decay_png = os.path.join(config.emit_csv, "mhat_decay.png")
        plots.plot_mhat_decay(decay_png, contour, mhat)
        report.wrote(decay_png)


def _invert_core(config: RunConfig, contour, model, mhat, cache,
                 report: RunReport):
    with report.stage("invert"):
        grid = _grid_points(config, model.a, model.T)
        rec = recover_q(grid, contour, model, mhat, cache=cache,
                        workers=config.workers)
    if not rec.epsilon_class_ok:
        report.warn(
            "EPSILON_CLASS",
            "recovered correction failed the weighted-integrability check")
    report.metrics["s_condition_min"] = rec.s_condition_min
    finite = rec.route_discrepancy[np.isfinite(rec.route_discrepancy)]
    report.metrics["route_discrepancy_max"] = (
        float(finite.max()) if finite.size else None)
    return rec


def cmd_forward(config: RunConfig, report: RunReport) -> int:
    with report.stage("validate"):
        problem = sio.load_problem(config.problem)
    h = _resolve_h(config, [problem], report)
    with report.stage("forward"):
        contour, info = _build_contour(config, h, problem.a)
        report.metrics.update(info)
        m = weyl_samples(problem, contour.rho)
    with report.stage("write"):
        sio.save_weyl(config.out, contour, m, problem)
        report.wrote(config.out)
    print(f"wrote {config.out} (N={len(contour)}, h={h:.6g}, "
          f"s_max={contour.s_max:.6g})")
    return EXIT_OK


def cmd_spectrum(config: RunConfig, report: RunReport) -> int:
    with report.stage("validate"):
        problem = sio.load_problem(config.problem)
    with report.stage("spectrum"):
        estimate = spectrum(problem, k_max=config.kmax)
    text = sio.canonical_json(sio.spectrum_data(estimate))
    if config.out is not None:
        with open(config.out, "w", encoding="ascii") as fh:
            fh.write(text)
        report.wrote(config.out)
        print(f"wrote {config.out} ({len(estimate.eigenvalues)} eigenvalues)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_invert(config: RunConfig, report: RunReport) -> int:
    with report.stage("validate"):
        contour, m, embedded = sio.load_weyl(config.weyl)
        model = sio.load_problem(config.model)
        if embedded is not None:
            bad = _core_mismatch(model, embedded)
            if bad:
                report.warn(
                    "MODEL_MISMATCH",
                    "model differs from the problem embedded in the Weyl "
                    f"file on: {', '.join(bad)}")
    with report.stage("model"):
        cache = SolutionCache(model, contour)
        mhat = m - cache.weyl_at_nodes()
    decay = _decay_gate(mhat, contour, report)
    rec = _invert_core(config, contour, model, mhat, cache, report)
    with report.stage("write"):
        _emit_recovered_files(config, rec, decay.order, contour, mhat,
                              report)
    print(f"wrote {config.out} ({rec.x.size} grid points, "
          f"s_condition_min={rec.s_condition_min:.3g})")
    return EXIT_OK


def _reforward_residual(target, rec, m, contour) -> float:
    """Max relative defect of M recomputed from the recovered potential."""
    qhat_problem = SingularProblem(
        a=target.a, nu=target.nu, A=target.A, T=target.T,
        q=Potential.grid(rec.x, rec.q_hat))
    idx = np.unique(np.round(
        np.linspace(0, len(contour) - 1, REFORWARD_PROBES)).astype(int))
    m_re = weyl_samples(qhat_problem, contour.rho[idx])
    return float(np.max(np.abs(m_re - m[idx]) / (1.0 + np.abs(m[idx]))))


def cmd_roundtrip(config: RunConfig, report: RunReport) -> int:
    with report.stage("validate"):
        target = sio.load_problem(config.problem)
        if config.model is not None:
            model = sio.load_problem(config.model)
            bad = _core_mismatch(model, target)
            if bad:
                report.warn(
                    "MODEL_MISMATCH",
                    f"model differs from the target on: {', '.join(bad)}")
        else:
            model = SingularProblem(a=target.a, nu=target.nu, A=target.A,
                                    T=target.T, q=Potential.zero())
    h = _resolve_h(config, [target, model], report)
    with report.stage("forward"):
        contour, info = _build_contour(config, h, target.a)
        report.metrics.update(info)
        m = weyl_samples(target, contour.rho)
    with report.stage("model"):
        cache = SolutionCache(model, contour)
        mhat = m - cache.weyl_at_nodes()
    decay = _decay_gate(mhat, contour, report)
    rec = _invert_core(config, contour, model, mhat, cache, report)

    with report.stage("error-table"):
        q_true = target.q.eval(rec.x)
        abs_err = np.abs(rec.q_hat - q_true)
        denom = float(np.linalg.norm(q_true))
        rel_l2 = float(np.linalg.norm(rec.q_hat - q_true)) / denom \
            if denom > 0 else float(np.linalg.norm(rec.q_hat))
        report.metrics["rel_l2_error"] = rel_l2
        report.metrics["max_abs_error"] = float(abs_err.max())
    with report.stage("reforward"):
        report.metrics["m_reproduction_max_rel"] = _reforward_residual(
            target, rec, m, contour)

    with report.stage("write"):
        _emit_recovered_files(config, rec, decay.order, contour, mhat,
                              report)
        if config.emit_csv is not None:
            err_png = os.path.join(config.emit_csv, "roundtrip_error.png")
            r = _exclusion(config, target.a)
            plots.plot_roundtrip_error(err_png, rec.x, abs_err,
                                       exclusion=(target.a - r,
                                                  target.a + r))
            report.wrote(err_png)
        report.wrote(config.report)
        data = report.data(config)
        data["error_table"] = {
            "x": [float(v) for v in rec.x],
            "q_true": [sio.pair(z) for z in q_true],
            "q_hat": [sio.pair(z) for z in rec.q_hat],
            "abs_error": [float(v) for v in abs_err],
        }
        sio.dump_json(data, config.report)
    print(f"wrote {config.report} (rel L2 error {rel_l2:.3e}, "
          f"decay order {decay.order:.3g})")
    return EXIT_OK


_COMMANDS = {
    "forward": cmd_forward,
    "spectrum": cmd_spectrum,
    "invert": cmd_invert,
    "roundtrip": cmd_roundtrip,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap onto the validation code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error [arguments]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="slw",
        description="Forward and inverse Weyl-function solver for an "
                    "interior Bessel-type singularity with transition "
                    "matching.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, contour_opts=False, grid_opts=False):
        p.add_argument("--verbose", action="store_true",
                       help="print stage progress to stderr")
        if contour_opts:
            p.add_argument("--h", default="auto", metavar="auto|VALUE",
                           help="contour height (default: auto via the "
                                "spectrum estimate)")
            p.add_argument("--s-max", type=float, default=None,
                           help="contour truncation half-length")
            p.add_argument("--nodes", type=int, default=DEFAULT_NODES,
                           help=f"contour node count "
                                f"(default {DEFAULT_NODES})")
        if grid_opts:
            p.add_argument("--grid", default=None, metavar="START:STOP:N",
                           help="recovery grid (default 0:T:"
                                f"{DEFAULT_ROUNDTRIP_GRID})")
            p.add_argument("--exclude", type=float, default=None,
                           metavar="R",
                           help="exclusion radius around the singular "
                                "point (default 0.05*a)")
            p.add_argument("--emit-csv", default=None, metavar="DIR",
                           help="also write CSV and PNG plots into DIR")

    p = sub.add_parser("forward", help="Weyl samples on a contour")
    p.add_argument("--problem", required=True)
    p.add_argument("--out", required=True)
    common(p, contour_opts=True)

    p = sub.add_parser("spectrum", help="eigenvalue localization")
    p.add_argument("--problem", required=True)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--out", default=None,
                   help="output path (default: stdout)")
    common(p)

    p = sub.add_parser("invert", help="recover q from Weyl samples")
    p.add_argument("--weyl", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    common(p, grid_opts=True)

    p = sub.add_parser("roundtrip",
                       help="forward then invert, with an error report")
    p.add_argument("--problem", required=True)
    p.add_argument("--model", default=None,
                   help="model problem (default: target with q = 0)")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default=None,
                   help="also write the recovered-potential JSON here")
    common(p, contour_opts=True, grid_opts=True)

    return parser


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        command=args.command,
        problem=getattr(args, "problem", None),
        weyl=getattr(args, "weyl", None),
        model=getattr(args, "model", None),
        out=getattr(args, "out", None),
        report=getattr(args, "report", None),
        emit_csv=getattr(args, "emit_csv", None),
        h=_parse_h(getattr(args, "h", "auto")),
        s_max=getattr(args, "s_max", None),
        nodes=getattr(args, "nodes", DEFAULT_NODES),
        grid=(_parse_grid(args.grid)
              if getattr(args, "grid", None) is not None else None),
        exclude=getattr(args, "exclude", None),
        kmax=getattr(args, "kmax", 12),
        workers=_workers_from_env(),
        verbose=args.verbose,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report = None
    try:
        config = _config_from_args(args)
        report = RunReport(config.command, verbose=config.verbose)
        return _COMMANDS[config.command](config, report)
    except SLWError as exc:
        stage = report.current_stage if report is not None else "arguments"
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
