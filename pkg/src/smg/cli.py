"""``smg`` command line: config file in, CSV artifacts out.

Exit status is 0 on success, 1 on configuration or IO errors and 2 when a
numerical solve does not converge (or a viscosity stage breaks the
Lipschitz cap). Diagnostics go to stderr as a single line.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import io as smgio
from .config import REQUIRED, RunConfig, parse_lattice
from .diagnostics import CutoffFunction, caccioppoli_sides, first_derivative_rhs, uniformity_sweep
from .errors import ConfigError, NonConvergence, SMGError
from .expr import Expression, ExpressionError
from .foliation import foliate, seed_lattice
from .frames import builtin, load_frame_file
from .grid import Grid, GridFunction
from .lifting import PROBES, approximation_order, freeze, probe
from .projected import ProjectedContext
from .solver import SolverConfig, solve_regularized, viscosity_continuation

DEFAULT_ALPHAS = [0.5, 1.0, 1.5]
DEFAULT_RADII = [1e-1, 1e-2, 1e-3, 1e-4]


# --- config helpers ---------------------------------------------------------


def load_frame(cfg: RunConfig):
    sec = cfg.section("frame")
    name, path = sec.string("builtin"), sec.string("file")
    if (name is None) == (path is None):
        raise ConfigError("[frame] needs exactly one of 'builtin' or 'file'")
    if name is not None:
        return builtin(name)
    p = cfg.resolve(path)
    if not p.is_file():
        raise ConfigError(f"frame file not found: {p}")
    return load_frame_file(p)


def load_grid(cfg: RunConfig) -> Grid:
    sec = cfg.section("domain")
    a1, b1, a2, b2 = (sec.number(k, REQUIRED) for k in ("a1", "b1", "a2", "b2"))
    n1, n2 = (sec.integer(k, REQUIRED, minimum=3) for k in ("n1", "n2"))
    try:
        return Grid(a1, b1, a2, b2, n1, n2)
    except ValueError as exc:
        raise ConfigError(f"[domain] {exc}") from None


def solver_config(cfg: RunConfig) -> SolverConfig:
    sec = cfg.section("solver")
    kw = {}
    if "theta" in sec:
        kw["theta"] = sec.number("theta")
    if "residual_tol" in sec:
        kw["residual_tol"] = sec.number("residual_tol", positive=True)
    if "update_tol" in sec:
        kw["update_tol"] = sec.number("update_tol", positive=True)
    if "max_iters" in sec:
        kw["max_outer_iters"] = sec.integer("max_iters", minimum=1)
    if "linear_solver" in sec:
        kw["linear_solver"] = sec.string("linear_solver")
    if "sweeps" in sec:
        kw["sweeps"] = sec.integer("sweeps", minimum=1)
    if "linear_tol" in sec:
        kw["linear_tol"] = sec.number("linear_tol", positive=True)
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None


def _expression_2d(text: str, where: str):
    try:
        ex = Expression(text, variables=("x1", "x2"))
    except ExpressionError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    return lambda x1, x2: ex(x1=x1, x2=x2)


def boundary_data(cfg: RunConfig, grid: Grid):
    sec = cfg.section("bc")
    kind = sec.string("kind", REQUIRED)
    value = sec.string("value", REQUIRED)
    if kind == "expression":
        return _expression_2d(value, "[bc] value")
    if kind == "csv":
        gf = smgio.read_grid_function(cfg.resolve(value))
        if gf.grid != grid:
            raise ConfigError("[bc] csv grid does not match [domain]")
        return gf
    raise ConfigError(f"[bc] kind must be 'expression' or 'csv', got {kind!r}")


def load_u(cfg: RunConfig, sec, what: str) -> GridFunction:
    """Grid function from ``solution`` (CSV) or ``u_expression`` sampled on [domain]."""
    sol, expr = sec.string("solution"), sec.string("u_expression")
    if (sol is None) == (expr is None):
        raise ConfigError(f"[{what}] needs exactly one of 'solution' or 'u_expression'")
    if sol is not None:
        return smgio.read_grid_function(cfg.resolve(sol))
    return load_grid(cfg).sample(_expression_2d(expr, f"[{what}] u_expression"))


def out_dir(cfg: RunConfig, arg) -> Path:
    if arg:
        d = Path(arg)
    elif cfg.has("output"):
        d = cfg.resolve(cfg.section("output").string("dir", REQUIRED))
    else:
        d = Path("smg_out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _threads(arg) -> int:
    if arg is not None:
        n = arg
    else:
        env = os.environ.get("SMG_THREADS")
        if env is None or env == "":
            return 1
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"SMG_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# --- commands ---------------------------------------------------------------


def cmd_solve(cfg: RunConfig, args) -> int:
    frame = load_frame(cfg)
    grid = load_grid(cfg)
    sec = cfg.section("solver")
    if "eps_schedule" in sec:
        raise ConfigError("solve takes a single 'eps'; use the viscosity command for 'eps_schedule'")
    eps = sec.number("eps", REQUIRED, positive=True)
    scfg = solver_config(cfg)
    g = boundary_data(cfg, grid)
    out = out_dir(cfg, args.out)
    try:
        res = solve_regularized(frame, grid, eps, g, cfg=scfg)
    except NonConvergence as exc:
        if exc.result is not None:
            smgio.write_grid_function(out / "u.csv", exc.result.u)
            smgio.write_residuals(out / "residuals.csv", [exc.result.residual_history])
        raise
    smgio.write_grid_function(out / "u.csv", res.u)
    smgio.write_residuals(out / "residuals.csv", [res.residual_history])
    if args.figures:
        from . import plotting
        plotting.plot_solution(res.u, out / "u.png", title=f"{frame.name}, eps={eps:g}")
        plotting.plot_residuals([res.residual_history], out / "residuals.png")
    print(f"solve: converged in {res.iterations} iterations, residual {_fmt(res.residual_history[-1])}")
    return 0


def _norm_settings(cfg: RunConfig, grid: Grid):
    sec = cfg.section("norms", required=False)
    c1 = grid.a1 + 0.25 * (grid.b1 - grid.a1)
    c2 = grid.a2 + 0.25 * (grid.b2 - grid.a2)
    half = [c1, c1 + 0.5 * (grid.b1 - grid.a1), c2, c2 + 0.5 * (grid.b2 - grid.a2)]
    if sec is None:
        return 2, 4.0, tuple(half), 3.0, None
    m = sec.integer("m", 2, minimum=0)
    p = sec.number("p", 4.0, minimum=1.0)
    sub = tuple(sec.numbers("subdomain", half, length=4))
    factor = sec.number("uniformity_factor", 3.0, positive=True)
    m_y = sec.integer("m_y", None, minimum=0)
    return m, p, sub, factor, m_y


def cmd_viscosity(cfg: RunConfig, args) -> int:
    frame = load_frame(cfg)
    grid = load_grid(cfg)
    sec = cfg.section("solver")
    if "eps" in sec:
        raise ConfigError("viscosity takes 'eps_schedule', not 'eps'")
    schedule = sec.numbers("eps_schedule", REQUIRED)
    if not schedule:
        raise ConfigError("eps_schedule is empty")
    if any(not e > 0 for e in schedule):
        raise ConfigError("eps must be positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ConfigError("eps_schedule must be strictly decreasing")
    cap = sec.number("lipschitz_cap", None, positive=True)
    scfg = solver_config(cfg)
    m, p, sub, factor, m_y = _norm_settings(cfg, grid)
    g = boundary_data(cfg, grid)
    out = out_dir(cfg, args.out)
    try:
        run = viscosity_continuation(frame, grid, g, schedule, cfg=scfg, lipschitz_cap=cap)
    except NonConvergence as exc:
        raise NonConvergence(f"viscosity stage {exc.stage}: {exc}", exc.result, exc.stage) from exc
    for k, res in enumerate(run.results):
        smgio.write_grid_function(out / f"u_stage{k}.csv", res.u)
    smgio.write_grid_function(out / "u.csv", run.final.u)
    smgio.write_residuals(out / "residuals.csv", [r.residual_history for r in run.results])
    sweep = uniformity_sweep(run, m, p, sub, factor=factor, m_y=m_y)
    smgio.write_sweep(out / "sweep.csv", sweep)
    if args.figures:
        from . import plotting
        plotting.plot_solution(run.final.u, out / "u.png", title=f"{frame.name}, eps={schedule[-1]:g}")
        plotting.plot_residuals([r.residual_history for r in run.results], out / "residuals.png")
        plotting.plot_sweep(sweep, out / "sweep.png")
    if run.over_cap:
        k = run.over_cap[0]
        budget = sum(run.budgets[k])
        print(f"smg: error: Lipschitz budget {_fmt(budget)} exceeds cap {_fmt(cap)} at stage {k} "
              f"(eps={schedule[k]:g})", file=sys.stderr)
        return 2
    flag = "uniform" if sweep.uniform else "NOT uniform"
    print(f"viscosity: {len(schedule)} stages, sweep ratios u {_fmt(sweep.ratio_u)}, "
          f"Yu {_fmt(sweep.ratio_Yu)} ({flag} at factor {factor:g})")
    return 0


def cmd_foliate(cfg: RunConfig, args) -> int:
    frame = load_frame(cfg)
    sec = cfg.section("foliate")
    u = load_u(cfg, sec, "foliate")
    grid = u.grid
    eps = sec.number("eps", 1.0, positive=True)
    dt = sec.number("dt", 1e-2, positive=True)
    t_min = sec.number("t_min", -1.0)
    t_max = sec.number("t_max", 1.0)
    if not t_min <= 0.0 <= t_max:
        raise ConfigError("[foliate] need t_min <= 0 <= t_max")
    if args.seed_lattice:
        seeds = seed_lattice((grid.a1, grid.b1, grid.a2, grid.b2), *parse_lattice(args.seed_lattice))
    elif "seeds" in sec:
        raw = sec.table["seeds"]
        if not isinstance(raw, list) or any(not isinstance(s, list) or len(s) != 2 for s in raw):
            raise ConfigError("[foliate] 'seeds' must be a list of [x1, x2] pairs")
        seeds = [(float(a), float(b)) for a, b in raw]
    else:
        r, c = parse_lattice(sec.string("lattice", "7x7"))
        seeds = seed_lattice((grid.a1, grid.b1, grid.a2, grid.b2), r, c)
    threads = _threads(args.threads)
    out = out_dir(cfg, args.out)
    ctx = ProjectedContext(frame, u, eps)
    # an analytic u is evaluated exactly along leaves, skipping the interpolation floor
    expr = sec.string("u_expression")
    u_func = _expression_2d(expr, "[foliate] u_expression") if expr is not None else None
    leaves, report = foliate(ctx, seeds, (t_min, t_max), dt, u_func=u_func, threads=threads)
    smgio.write_grid_function(out / "solution.csv", u)
    smgio.write_leaves(out / "leaves.csv", leaves)
    smgio.write_foliation_report(out / "foliation_report.csv", report)
    if args.figures:
        from . import plotting
        plotting.plot_leaves(leaves, grid, out / "leaves.png", background=u)
    for k, msg in report.errors.items():
        print(f"smg: warning: leaf {k}: {msg}", file=sys.stderr)
    print(f"foliate: {len(seeds)} seeds, {len(report.errors)} flagged, "
          f"global max residual {_fmt(report.global_max)}")
    return 0


def _order_name(frame_name, probe_name, alpha):
    return f"order_{frame_name}_{probe_name}_alpha{alpha:g}.csv"


def cmd_diagnose(cfg: RunConfig, args) -> int:
    sec = cfg.section("diagnose")
    probes = sec.strings("probes", REQUIRED)
    if not probes:
        raise ConfigError("[diagnose] probe list is empty")
    bad = [p for p in probes if p not in PROBES]
    if bad:
        raise ConfigError(f"unknown probe {bad[0]!r}; choose from {sorted(PROBES)}")
    alphas = sec.numbers("alphas", DEFAULT_ALPHAS)
    if not alphas or any(not a > 0 for a in alphas):
        raise ConfigError("[diagnose] alphas must be a non-empty list of positive numbers")
    radii = sec.numbers("radii", DEFAULT_RADII)
    if not radii or any(not r > 0 for r in radii) or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("[diagnose] radii must be positive and strictly decreasing")
    x0 = sec.numbers("base_point", [0.0, 0.0], length=2)
    u0 = sec.number("u0", 0.0)
    n_angles = sec.integer("n_angles", 64, minimum=4)
    names = sec.strings("frames", None)
    frames = [builtin(n) for n in names] if names else [load_frame(cfg)]
    if not frames:
        raise ConfigError("[diagnose] frame list is empty")
    caccio = cfg.section("caccioppoli", required=False)
    out = out_dir(cfg, args.out)
    summary = []
    for frame in frames:
        ff = freeze(frame, x0, u0)
        for pname in probes:
            h = probe(pname)
            table = {}
            for alpha in alphas:
                ratios = approximation_order(ff, h, alpha, radii, n_angles=n_angles)
                table[alpha] = ratios
                smgio.write_rows(out / _order_name(frame.name, pname, alpha), ("radius", "ratio"),
                                 zip(radii, (float(r) for r in ratios)))
            if args.figures:
                from . import plotting
                plotting.plot_order(radii, table, out / f"order_{frame.name}_{pname}.png",
                                    title=f"{frame.name} / {pname}")
            summary.append(f"{frame.name}/{pname}")
    if caccio is not None:
        frame = load_frame(cfg)
        u = load_u(cfg, caccio, "caccioppoli")
        eps = caccio.number("eps", REQUIRED, positive=True)
        p = caccio.number("p", 3.0, minimum=3.0)
        g = u.grid
        inner = caccio.numbers("inner", None, length=4)
        outer = caccio.numbers("outer", None, length=4)
        if inner is None or outer is None:
            w1, w2 = g.b1 - g.a1, g.b2 - g.a2
            outer = outer or [g.a1 + 0.1 * w1, g.b1 - 0.1 * w1, g.a2 + 0.1 * w2, g.b2 - 0.1 * w2]
            inner = inner or [g.a1 + 0.3 * w1, g.b1 - 0.3 * w1, g.a2 + 0.3 * w2, g.b2 - 0.3 * w2]
        try:
            phi = CutoffFunction(tuple(inner), tuple(outer))
        except ValueError as exc:
            raise ConfigError(f"[caccioppoli] {exc}") from None
        ctx = ProjectedContext(frame, u, eps)
        z, f = first_derivative_rhs(ctx)
        lhs, rhs1, rhs2 = caccioppoli_sides(ctx, z, f, p, phi)
        denom = rhs1 + abs(rhs2)
        ratio = lhs / denom if denom > 0 else 0.0
        smgio.write_rows(out / "caccioppoli.csv", ("eps", "p", "lhs", "rhs1", "rhs2", "ratio"),
                         [(eps, p, lhs, rhs1, rhs2, ratio)])
        summary.append(f"caccioppoli ratio {_fmt(ratio)}")
    print("diagnose: " + ", ".join(summary))
    return 0


COMMANDS = {"solve": cmd_solve, "viscosity": cmd_viscosity, "foliate": cmd_foliate, "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smg", description="Intrinsic minimal graphs in step-2 frames.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (fallback: SMG_THREADS)")
    ap.add_argument("--seed-lattice", default=None, metavar="RxC", help="override foliation seeds")
    ap.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSVs")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.load(args.config)
        return COMMANDS[args.command](cfg, args)
    except NonConvergence as exc:
        print(f"smg: non-convergence: {exc}", file=sys.stderr)
        return 2
    except (SMGError, ValueError, OSError) as exc:
        print(f"smg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

