"""Command-line front end: ``classical``, ``solve``, ``continue`` and ``compare``.

Configuration is a flat JSON object; command-line flags override the file,
which overrides the defaults below.  Every run writes ``manifest.json`` with
the full configuration, the seed, the RNG and per-point convergence flags.
The manifest carries no timestamps or paths, so repeating a run reproduces it
byte for byte.

Exit codes: 0 success, 2 I/O or configuration error, 3 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _svg, classical, continuation, optim, pde
from .ansatz import weight_table

log = logging.getLogger("qbratu")

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3
BRANCHES = ("lower", "upper")


class ConfigError(ValueError):
    pass


def _schedule(start, stop, step):
    n = int(round((stop - start) / step))
    return [round(start + k * step, 10) for k in range(n + 1)]


@dataclasses.dataclass
class RunConfig:
    n_qubits: int = 3
    n_layers: int = 4
    learning_rate: float = 0.005
    iterations: int = 500
    upper_iterations: int = continuation.UPPER_ITERATIONS
    grid_points: int = 100
    stencil_h: float = 1e-3
    scale_s: float = 4.0
    seed: int = 0
    starts: int = 8
    coarse_M: int = continuation.COARSE_M
    lower_schedule: list = dataclasses.field(default_factory=lambda: _schedule(0.1, 3.4, 0.1))
    upper_schedule: list = dataclasses.field(default_factory=lambda: _schedule(3.0, 0.5, -0.25))
    compare_lambdas: list = dataclasses.field(default_factory=lambda: [0.1, 1.0, 3.0])
    classical_lambdas: list = dataclasses.field(default_factory=lambda: [0.1, 1.0, 3.0])
    classical_M: int = classical.DEFAULT_M
    classical_delta_s: float = 0.05
    classical_steps: int = 5000
    output_dir: str = "qbratu-out"

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.type == "int":
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{f.name} must be an integer, got {value!r}")
            elif f.type == "float":
                if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                    raise ConfigError(f"{f.name} must be a finite number, got {value!r}")
                setattr(self, f.name, float(value))
            elif f.type == "list":
                if not isinstance(value, list) or not all(
                    isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) for v in value
                ):
                    raise ConfigError(f"{f.name} must be a list of numbers, got {value!r}")
                setattr(self, f.name, [float(v) for v in value])
            elif not isinstance(value, str):
                raise ConfigError(f"{f.name} must be a string, got {value!r}")
        positive = ("n_qubits", "n_layers", "grid_points", "starts", "coarse_M", "classical_M", "classical_steps")
        for name in positive:
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.iterations < 0 or self.upper_iterations < 0:
            raise ConfigError("iterations must be nonnegative")
        if self.learning_rate <= 0 or self.classical_delta_s <= 0:
            raise ConfigError("learning_rate and classical_delta_s must be positive")
        try:
            self.trial_template(0.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in dataclasses.fields(cls)]

    def trial_template(self, lam: float) -> pde.TrialConfig:
        return pde.TrialConfig(lam=lam, scale_s=self.scale_s, stencil_h=self.stencil_h, grid_n=self.grid_points)

    def echo(self) -> dict:
        """Everything that affects results (the output directory does not)."""
        d = dataclasses.asdict(self)
        d.pop("output_dir")
        return d


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                values = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a single flat JSON object")
        unknown = sorted(set(values) - set(RunConfig.keys()))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


# -- file emission ----------------------------------------------------------------


def fmt_real(v) -> str:
    return f"{float(v):.17g}"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_real(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_csv(path: Path, header, rows) -> None:
    write_text(path, csv_text(header, rows))


def read_csv(path: Path):
    """Header and rows; numeric cells come back as floats."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = []
            for cell in raw:
                try:
                    row.append(float(cell))
                except ValueError:
                    row.append(cell)
            rows.append(row)
    return header, rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path, data) -> None:
    write_text(path, json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def write_weights(path: Path, weights) -> None:
    write_csv(path, ["index", "layer", "qubit", "rotation", "angle"], weight_table(weights))


def lam_tag(lam: float) -> str:
    return f"lambda{lam:g}"


class Run:
    """Output directory plus the manifest being assembled."""

    def __init__(self, cfg: RunConfig, command: str, arguments: dict):
        self.cfg = cfg
        self.out = Path(cfg.output_dir)
        self.manifest = {
            "tool": "qbratu",
            "version": __version__,
            "command": command,
            "arguments": arguments,
            "config": cfg.echo(),
            "seed": cfg.seed,
            "rng": optim.RNG_NAME,
            "points": [],
            "files": [],
        }
        self.out.mkdir(parents=True, exist_ok=True)
        probe = self.out / ".write-test"
        probe.write_text("")
        probe.unlink()

    def path(self, name: str) -> Path:
        self.manifest["files"].append(name)
        return self.out / name

    def finish(self, code: int) -> int:
        self.manifest["exit_code"] = code
        self.manifest["files"] = sorted(set(self.manifest["files"] + ["manifest.json"]))
        write_json(self.out / "manifest.json", self.manifest)
        return code


# -- classical references -----------------------------------------------------------


def classical_reference(lam: float, branch: str, M: int, path=None):
    """Callable discrete classical solution on ``branch``, or ``None`` if unavailable."""
    if lam == 0.0 and branch == "lower":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    if not 0.0 < lam < classical.critical_lambda():
        return None
    try:
        if branch == "lower":
            return classical.newton_solve(lam, M=M)
        return classical.solve_on_branch(lam, branch, M=M, path=path)
    except (classical.ConvergenceError, ValueError) as exc:
        log.warning("no classical %s-branch solution at lambda=%g: %s", branch, lam, exc)
        return None


def classical_path(cfg: RunConfig, lambda_stop: float = 0.05):
    start = classical.newton_solve(0.05, M=cfg.classical_M)
    return classical.arc_length_continue(
        start, cfg.classical_delta_s, cfg.classical_steps, lambda_stop=lambda_stop
    )


def _profile_rows(point: continuation.BranchPoint, ref):
    u_cls = ref(point.grid_xs) if ref is not None else np.full(point.grid_xs.shape, np.nan)
    err = np.abs(point.u_values - u_cls)
    return zip(point.grid_xs, point.u_values, u_cls, err), float(np.nanmax(err)) if ref is not None else None


def _point_record(point: continuation.BranchPoint, error=None) -> dict:
    return {
        "branch": point.branch,
        "lambda": point.lam,
        "u_max": point.u_max,
        "final_cost": point.final_cost,
        "converged": point.converged,
        "status": point.status,
        "max_abs_error_vs_classical": error,
    }


# -- solves ---------------------------------------------------------------------------


def _train_kwargs(cfg: RunConfig) -> dict:
    return {"learning_rate": cfg.learning_rate}


def solve_point(cfg: RunConfig, lam: float, branch: str, seed) -> continuation.BranchPoint:
    template = cfg.trial_template(lam)
    if branch == "lower":
        init = optim.initialize_weights("lower", seed, cfg.n_layers, cfg.n_qubits)
        report = optim.train(init, template, cfg.iterations, **_train_kwargs(cfg))
        report.seed = seed
        return continuation.make_point(report, template, "lower")
    return continuation.bootstrap_upper(
        lam, template, cfg.iterations, seed, n_starts=cfg.starts, coarse_M=cfg.coarse_M,
        n_layers=cfg.n_layers, n_qubits=cfg.n_qubits, **_train_kwargs(cfg),
    )


def _check_lambda(lam: float, branch: str) -> None:
    lam_c = classical.critical_lambda()
    if not math.isfinite(lam) or lam < 0:
        raise ConfigError(f"lambda must be a nonnegative real, got {lam}")
    if lam >= lam_c:
        raise ConfigError(f"lambda={lam} is at or above the fold lambda_c={lam_c:.6f}: no solution exists")
    if branch == "upper" and lam == 0:
        raise ConfigError("the upper branch does not extend to lambda = 0")


def cmd_solve(cfg: RunConfig, args) -> int:
    if not args.lam or len(args.lam) != 1:
        raise ConfigError("solve needs exactly one --lambda")
    lam, branch = args.lam[0], args.branch
    _check_lambda(lam, branch)
    run = Run(cfg, "solve", {"lambda": lam, "branch": branch})
    point = solve_point(cfg, lam, branch, cfg.seed)
    ref = classical_reference(lam, branch, cfg.classical_M)
    rows, err = _profile_rows(point, ref)
    write_csv(run.path("profile.csv"), ["x", "u_vqa", "u_classical", "abs_error"], rows)
    write_weights(run.path("weights.csv"), point.weights)
    report = point.report.to_dict()
    report["status"] = point.status
    report["extra"] = point.report.extra
    write_json(run.path("report.json"), report)
    run.manifest["points"].append(_point_record(point, err))
    log.info("lambda=%g %s: cost=%.3e u_max=%.6f %s", lam, branch, point.final_cost, point.u_max, point.status)
    return run.finish(EXIT_OK if point.converged else EXIT_NONCONVERGED)


# -- classical ------------------------------------------------------------------------


def _path_rows(path):
    return [(k, s.lam, s.u_max, int(np.sign(s.lam_dot))) for k, s in enumerate(path)]


def cmd_classical(cfg: RunConfig, args) -> int:
    lambdas = args.lam if args.lam else cfg.classical_lambdas
    run = Run(cfg, "classical", {"lambdas": lambdas})
    code = EXIT_OK
    try:
        path = classical_path(cfg)
    except classical.ConvergenceError as exc:
        log.error("%s", exc)
        path, code = exc.last or [], EXIT_NONCONVERGED
    write_csv(run.path("classical_path.csv"), ["step", "lambda", "u_max", "lambda_dot_sign"], _path_rows(path))
    fold = classical.fold_from_path(path) if path else None
    run.manifest["fold_lambda"] = fold
    run.manifest["critical_lambda"] = classical.critical_lambda()

    panel = _svg.Panel("Classical continuation", "lambda", "u_max(x = 0.5)")
    if path:
        panel.line([s.lam for s in path], [s.u_max for s in path], "pseudo arc-length")
    write_text(run.path("classical_path.svg"), _svg.render([panel]))

    lam_c = classical.critical_lambda()
    for lam in lambdas:
        if not 0.0 < lam < lam_c:
            log.warning("skipping profile at lambda=%g: outside (0, %.6f)", lam, lam_c)
            continue
        for branch in BRANCHES:
            sol = classical_reference(lam, branch, cfg.classical_M, path=path or None)
            if sol is None:
                code = EXIT_NONCONVERGED
                continue
            xs = np.r_[0.0, sol.x, 1.0]
            write_csv(run.path(f"classical_{branch}_{lam_tag(lam)}.csv"), ["x", "u"], zip(xs, sol(xs)))
            run.manifest["points"].append(
                {"branch": branch, "lambda": lam, "u_max": sol.u_max, "converged": True,
                 "newton_iterations": sol.newton_iterations, "residual_norm": sol.residual_norm}
            )
    return run.finish(code)


# -- continuation ---------------------------------------------------------------------


def sweep(cfg: RunConfig, branch: str) -> list[continuation.BranchPoint]:
    if branch == "lower":
        schedule = cfg.lower_schedule
        for lam in schedule:
            _check_lambda(lam, branch)
        return continuation.sweep_lower(
            schedule, cfg.trial_template(0.0), cfg.iterations, cfg.seed, n_layers=cfg.n_layers,
            n_qubits=cfg.n_qubits, **_train_kwargs(cfg),
        )
    schedule = cfg.upper_schedule
    for lam in schedule:
        _check_lambda(lam, branch)
    if not schedule:
        return []
    first = solve_point(cfg, schedule[0], "upper", cfg.seed)
    points = [first]
    if first.converged:
        points += continuation.sweep_upper(
            schedule[1:], first, cfg.trial_template(0.0), cfg.upper_iterations, cfg.seed, **_train_kwargs(cfg)
        )
    return points


def diagram_panel(points, path, title="Bifurcation diagram") -> _svg.Panel:
    panel = _svg.Panel(title, "lambda", "u_max(x = 0.5)")
    if path:
        panel.line([s.lam for s in path], [s.u_max for s in path], "classical (arc-length)", _svg.PALETTE[5])
    for branch, color in zip(BRANCHES, _svg.PALETTE):
        pts = [p for p in points if p.branch == branch and p.converged]
        if pts:
            panel.markers([p.lam for p in pts], [p.u_max for p in pts], f"quantum, {branch}", color)
    return panel


def cmd_continue(cfg: RunConfig, args) -> int:
    branch = args.branch
    run = Run(cfg, "continue", {"branch": branch})
    points = sweep(cfg, branch)
    rows = [(p.branch, p.lam, p.u_max, p.final_cost, str(p.converged).lower()) for p in points]
    write_csv(run.path("diagram.csv"), ["branch", "lambda", "u_max", "final_cost", "converged"], rows)

    path = classical_path(cfg)
    for p in points:
        ref = classical_reference(p.lam, p.branch, cfg.classical_M, path=path)
        err = continuation.max_abs_error(p, ref) if ref is not None and p.converged else None
        run.manifest["points"].append(_point_record(p, err))
    write_text(run.path("bifurcation.svg"), _svg.render([diagram_panel(points, path)]))

    violations = continuation.BifurcationDiagram(points).violations()
    run.manifest["violations"] = violations
    for v in violations:
        log.error("diagram invariant violated: %s", v)
    lost = any(p.status == "branch-lost" for p in points)
    failed = any(not p.converged for p in points)
    return run.finish(EXIT_NONCONVERGED if (lost or failed or violations) else EXIT_OK)


# -- compare --------------------------------------------------------------------------


def cmd_compare(cfg: RunConfig, args) -> int:
    lambdas = args.lam if args.lam else cfg.compare_lambdas
    run = Run(cfg, "compare", {"lambdas": lambdas})
    lam_c = classical.critical_lambda()
    code = EXIT_OK
    panels = {branch: [] for branch in BRANCHES}
    kept = []
    for lam in lambdas:
        if not 0.0 < lam < lam_c:
            log.warning("skipping lambda=%g: outside (0, %.6f)", lam, lam_c)
            continue
        kept.append(lam)
        for branch in BRANCHES:
            point = solve_point(cfg, lam, branch, cfg.seed)
            ref = classical_reference(lam, branch, cfg.classical_M)
            rows, err = _profile_rows(point, ref)
            write_csv(run.path(f"compare_{branch}_{lam_tag(lam)}.csv"),
                      ["x", "u_vqa", "u_classical", "abs_error"], rows)
            run.manifest["points"].append(_point_record(point, err))
            panel = _svg.Panel(f"{branch} branch, lambda = {lam:g}", "x", "u(x)")
            if ref is not None:
                xs = np.linspace(0.0, 1.0, 201)
                panel.line(xs, ref(xs), "classical", _svg.PALETTE[5])
            if point.converged:
                panel.markers(point.grid_xs[::3], point.u_values[::3], "quantum", _svg.PALETTE[1])
            else:
                panel.note = f"quantum solve {point.status} (cost {point.final_cost:.2e})"
                log.warning("lambda=%g %s: %s", lam, branch, panel.note)
                code = EXIT_NONCONVERGED
            panels[branch].append(panel)
    if kept:
        write_text(run.path("compare.svg"), _svg.render(panels["lower"] + panels["upper"], ncols=len(kept)))
    return run.finish(code)


# -- entry point ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON file of RunConfig keys")
    common.add_argument("--lambda", dest="lam", type=float, action="append",
                        help="lambda value (repeat for classical/compare)")
    common.add_argument("--branch", choices=BRANCHES, default="lower")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--iterations", type=int, help="Adam iterations per single solve / start")
    common.add_argument("--starts", type=int, help="multi-start runs for the first upper-branch point")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="qbratu", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qbratu {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classical", parents=[common], help="pseudo arc-length reference and profiles")
    sub.add_parser("solve", parents=[common], help="quantum solve at one lambda")
    sub.add_parser("continue", parents=[common], help="quantum predictor-corrector sweep of one branch")
    sub.add_parser("compare", parents=[common], help="quantum vs classical profiles on both branches")
    return parser


COMMANDS = {"classical": cmd_classical, "solve": cmd_solve, "continue": cmd_continue, "compare": cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    overrides = {"seed": args.seed, "output_dir": args.out, "iterations": args.iterations, "starts": args.starts}
    try:
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"qbratu: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"qbratu: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
