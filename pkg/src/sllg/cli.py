"""Command line front end: inspection commands and convergence studies.

Every command resolves its settings into a RunConfig, writes CSV files
plus a JSON manifest into the output directory, and prints a short
summary.  Floats are serialized with repr, so a rerun with the same
manifest reproduces each file byte for byte.

Exit codes: 0 on success, 2 on configuration errors, 3 when a linear
solve or a sample evaluation fails.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import collocation as coll
from .indexset import ProfitParams, index_to_line, new_grid_points
from .interp1d import NodeFamily1D, make_nodes
from .llg import SolverError, diagnostics_csv, sample_path, save_trajectory
from .sparsegrid import SamplerError, combination_coeffs
from .wiener import wiener_eval

__all__ = ["ConfigError", "RunConfig", "main"]


class ConfigError(ValueError):
    pass


_COMMANDS = ("nodes", "wiener", "grid", "path", "conv-sg", "conv-ml")


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Resolved settings for one command run.

    The same bundle backs every subcommand; each one reads the fields it
    needs.  scale defaults per command (1.0 for relaxation runs, 0.2 for
    the level studies) when left unset.
    """

    command: str
    p: int = 2
    sigma2: float = 5.0
    profit: str = "improved"
    mesh_n: int = 16
    tau: float = 2.0**-6
    levels: int = 3
    mc: int = 16
    seed: int = 0
    budget: int | None = None
    out: str = "."
    dims: int = 128
    scale: float | None = None
    level: int = 1
    start: str | None = None
    ref_tau: float | None = None
    ref_mesh_n: int | None = None
    c_fe: float = coll.DEFAULT_FE_CONSTANT
    c_sg: float = coll.DEFAULT_SG_CONSTANT
    rate: float = coll.DEFAULT_SG_RATE
    save_traj: bool = False

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.p < 2:
            raise ConfigError(f"p must be >= 2, got {self.p}")
        if self.sigma2 <= 1.0:
            raise ConfigError(f"sigma2 must exceed 1, got {self.sigma2}")
        if self.profit not in ("basic", "improved"):
            raise ConfigError(f"profit must be basic or improved, got {self.profit!r}")
        _require_power_of_two(self.mesh_n, "mesh-n")
        _require_dyadic(self.tau, "tau")
        if self.ref_tau is not None:
            _require_dyadic(self.ref_tau, "ref-tau")
        if self.ref_mesh_n is not None:
            _require_power_of_two(self.ref_mesh_n, "ref-mesh-n")
        if self.levels < 0:
            raise ConfigError(f"levels must be >= 0, got {self.levels}")
        if self.mc < 1:
            raise ConfigError(f"mc must be >= 1, got {self.mc}")
        if self.budget is not None and self.budget < 1:
            raise ConfigError(f"budget must be >= 1, got {self.budget}")
        if self.dims < 1:
            raise ConfigError(f"dims must be >= 1, got {self.dims}")
        if self.scale is not None and self.scale < 0:
            raise ConfigError(f"scale must be >= 0, got {self.scale}")
        if self.level < 0:
            raise ConfigError(f"level must be >= 0, got {self.level}")
        if self.start not in (None, "constant", "aligned"):
            raise ConfigError(f"start must be constant or aligned, got {self.start!r}")
        if not 0.0 < self.rate <= 0.5:
            raise ConfigError(f"rate must lie in (0, 0.5], got {self.rate}")
        if self.c_fe <= 0 or self.c_sg <= 0:
            raise ConfigError("constants must be positive")

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def family(self) -> NodeFamily1D:
        return NodeFamily1D(self.p, self.sigma2)

    def profit_params(self) -> ProfitParams:
        return ProfitParams(p=self.p, variant=self.profit)

    def problem(self, default_scale: float, default_start: str) -> coll.Problem:
        scale = default_scale if self.scale is None else self.scale
        start = default_start if self.start is None else self.start
        if start == "aligned":
            return coll.aligned_problem(dims=self.dims, scale=scale)
        return coll.relaxation_problem(dims=self.dims, scale=scale)


def _require_power_of_two(n: int, name: str) -> None:
    if n < 1 or n & (n - 1):
        raise ConfigError(f"{name} must be a power of two, got {n}")


def _require_dyadic(tau: float, name: str) -> None:
    if tau <= 0:
        raise ConfigError(f"{name} must be positive, got {tau}")
    steps = round(1.0 / tau)
    if steps < 1 or steps & (steps - 1) or steps * tau != 1.0:
        raise ConfigError(f"{name} must be 2^-k with k >= 0, got {tau}")


# ---------------------------------------------------------------------------
# serialization helpers


def _cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    text = str(value)
    if "," in text or '"' in text:
        return '"' + text.replace('"', '""') + '"'
    return text


def _csv_text(header: str, rows) -> str:
    lines = [header] + [",".join(_cell(c) for c in row) for row in rows]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(cfg: RunConfig, extra: dict) -> str:
    data = dataclasses.asdict(cfg)
    data.update(extra)
    return json.dumps(data, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands


def cmd_nodes(cfg: RunConfig) -> int:
    nodes = make_nodes(cfg.family(), cfg.level)
    rows = [(i, x) for i, x in enumerate(nodes.points)]
    out = cfg.out_dir / "nodes.csv"
    _write(out, _csv_text("index,node", rows))
    _write(cfg.out_dir / "nodes_manifest.json",
           _manifest(cfg, {"points": int(nodes.points.size)}))
    print(f"level {cfg.level}: {nodes.points.size} nodes "
          f"({nodes.main.size} main, {nodes.extras.size} extra) -> {out}")
    return 0


def cmd_wiener(cfg: RunConfig) -> int:
    y = np.random.default_rng(cfg.seed).standard_normal(cfg.dims)
    steps = round(1.0 / cfg.tau)
    times = np.arange(steps + 1) * cfg.tau
    values = wiener_eval(y, times)
    out = cfg.out_dir / "wiener.csv"
    _write(out, _csv_text("time,value", zip(times, values)))
    _write(cfg.out_dir / "wiener_manifest.json", _manifest(cfg, {"steps": steps}))
    print(f"path from {cfg.dims} coefficients at {steps} steps -> {out}")
    return 0


def cmd_grid(cfg: RunConfig) -> int:
    params = cfg.profit_params()
    lam = coll.quasi_optimal_prefix(cfg.budget or 9, params)
    coeffs = combination_coeffs(lam)
    rows = [
        (index_to_line(nu), coeffs.get(nu, 0), new_grid_points(nu, cfg.p))
        for nu in sorted(lam, key=lambda nu: nu.shortlex())
    ]
    size = sum(r[2] for r in rows)
    out = cfg.out_dir / "grid.csv"
    _write(out, _csv_text("multi_index,coefficient,new_points", rows))
    _write(cfg.out_dir / "grid_manifest.json",
           _manifest(cfg, {"indices": len(rows), "points": size,
                           "active_dimensions": lam.support_size}))
    print(f"{len(rows)} indices, {size} points, "
          f"{lam.support_size} active dimensions -> {out}")
    return 0


def cmd_path(cfg: RunConfig) -> int:
    problem = cfg.problem(default_scale=1.0, default_start="constant")
    mesh = coll.shared_mesh(cfg.mesh_n)
    y = np.random.default_rng(cfg.seed).standard_normal(cfg.dims)
    traj = sample_path(y, cfg.tau, mesh, problem.coeff, problem.initial_state(mesh))
    out = cfg.out_dir / "path.csv"
    _write(out, diagnostics_csv(traj))
    _write(cfg.out_dir / "path_manifest.json", _manifest(cfg, {"steps": traj.steps}))
    print(f"{traj.steps} steps on a {cfg.mesh_n}x{cfg.mesh_n} mesh -> {out}")
    if cfg.save_traj:
        save_trajectory(cfg.out_dir / "path.bin", traj)
        print(f"fields -> {cfg.out_dir / 'path.bin'}")
    return 0


def cmd_conv_sg(cfg: RunConfig) -> int:
    problem = cfg.problem(default_scale=1.0, default_start="constant")
    params = cfg.profit_params()
    fam = cfg.family()
    budget = cfg.budget or 200
    sizes = coll.doubling_grid_sizes(budget, params)
    tau, h = cfg.tau, 1.0 / cfg.mesh_n
    reference = coll.path_sampler(problem, tau, h)
    cache: dict = {}
    out = cfg.out_dir / "conv_sg.csv"
    header = "collocation_points,error,active_dimensions"
    rows: list[tuple] = []
    _write(out, _csv_text(header, rows))
    try:
        for size in sizes:
            lam = coll.quasi_optimal_prefix(size, params)
            sl = coll.single_level(lam, tau, h, problem, family=fam, cache=cache)
            err = coll.estimate_error_mc(sl, reference, cfg.mc, cfg.dims, cfg.seed)
            rows.append((sl.grid_size, err, sl.active_dimensions))
            _write(out, _csv_text(header, rows))
    finally:
        # partial CSV stays on disk if a solve fails mid-study
        _write(out, _csv_text(header, rows))
    _write(
        cfg.out_dir / "conv_sg_manifest.json",
        _manifest(cfg, {"grid_sizes": list(sizes), "budget_used": budget}),
    )
    print(f"{len(rows)} grids up to {sizes[-1]} points (budget {budget}) -> {out}")
    if len(rows) >= 2:
        pts = [r[0] for r in rows if r[1] > 0]
        errs = [r[1] for r in rows if r[1] > 0]
        if len(pts) >= 2:
            _, rate = coll.fit_power_law(pts, errs)
            print(f"fitted error ~ points^-{rate:.3f}")
    return 0


def cmd_conv_ml(cfg: RunConfig) -> int:
    problem = cfg.problem(default_scale=0.2, default_start="aligned")
    params = cfg.profit_params()
    fam = cfg.family()
    K = cfg.levels
    ref_tau = cfg.ref_tau if cfg.ref_tau is not None else coll.level_tau(K + 2)
    ref_n = cfg.ref_mesh_n if cfg.ref_mesh_n is not None else coll.level_mesh_n(K + 2)
    reference = coll.path_sampler(problem, ref_tau, 1.0 / ref_n)

    sl_out = cfg.out_dir / "conv_sl.csv"
    ml_out = cfg.out_dir / "conv_ml.csv"
    header = "cost,error"
    sl_rows: list[tuple] = []
    ml_rows: list[tuple] = []
    sizing = [list(coll.ml_grid_sizing(j, cfg.c_fe, cfg.c_sg, cfg.rate,
                                       params=params, budget=cfg.budget))
              for j in range(K + 1)]
    try:
        for k in range(K + 1):
            lam = coll.quasi_optimal_prefix(4**k, params, strict=True)
            sl = coll.single_level(
                lam, coll.level_tau(k), coll.level_h(k), problem, family=fam
            )
            err = coll.estimate_error_mc(sl, reference, cfg.mc, cfg.dims, cfg.seed)
            sl_rows.append((sl.counted_cost, err))
            _write(sl_out, _csv_text(header, sl_rows))
        for j in range(K + 1):
            sched = coll.schedule_from_sizes(sizing[j], params)
            ml = coll.multi_level(sched, problem, family=fam)
            err = coll.estimate_error_mc(ml, reference, cfg.mc, cfg.dims, cfg.seed)
            ml_rows.append((ml.counted_cost, err))
            _write(ml_out, _csv_text(header, ml_rows))
    finally:
        _write(sl_out, _csv_text(header, sl_rows))
        _write(ml_out, _csv_text(header, ml_rows))
    _write(
        cfg.out_dir / "conv_ml_manifest.json",
        _manifest(cfg, {
            "ml_grid_sizes": sizing,
            "ref_tau": ref_tau,
            "ref_mesh_n": ref_n,
        }),
    )
    print(f"single-level rows: {len(sl_rows)} -> {sl_out}")
    print(f"multilevel rows: {len(ml_rows)} -> {ml_out}")
    if len(sl_rows) >= 2 and len(ml_rows) >= 2:
        _, sl_rate = coll.fit_power_law([r[0] for r in sl_rows], [r[1] for r in sl_rows])
        _, ml_rate = coll.fit_power_law([r[0] for r in ml_rows], [r[1] for r in ml_rows])
        print(f"fitted slopes: single-level -{sl_rate:.3f}, multilevel -{ml_rate:.3f}")
    return 0


_DISPATCH = {
    "nodes": cmd_nodes,
    "wiener": cmd_wiener,
    "grid": cmd_grid,
    "path": cmd_path,
    "conv-sg": cmd_conv_sg,
    "conv-ml": cmd_conv_ml,
}


# ---------------------------------------------------------------------------
# argument handling


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sllg",
        description="Sparse-grid collocation toolkit for a noise-driven "
        "magnetization equation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, help="local polynomial degree of the"
                        " interpolation family")
    common.add_argument("--sigma2", type=float, help="auxiliary density variance")
    common.add_argument("--profit", choices=["basic", "improved"],
                        help="profit model ordering the index stream")
    common.add_argument("--mesh-n", type=int, help="squares per mesh side")
    common.add_argument("--tau", type=float, help="time step (2^-k)")
    common.add_argument("--levels", type=int, help="number of refinement levels K")
    common.add_argument("--mc", type=int, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--budget", type=int, help="collocation point budget")
    common.add_argument("--out", help="output directory")
    common.add_argument("--dims", type=int, help="parameter dimension for draws")
    common.add_argument("--scale", type=float, help="noise amplitude")
    common.add_argument("--config", help="JSON file whose entries override flags")

    sub.add_parser("nodes", parents=[common],
                   help="emit one level of the 1D node family").add_argument(
        "--level", type=int, help="node level")
    sub.add_parser("wiener", parents=[common],
                   help="evaluate one truncated Brownian path")
    sub.add_parser("grid", parents=[common],
                   help="emit the quasi-optimal index set for a point budget")
    p_path = sub.add_parser("path", parents=[common],
                            help="run one trajectory and emit diagnostics")
    p_path.add_argument("--start", choices=["constant", "aligned"],
                        help="initial state")
    p_path.add_argument("--save-traj", action="store_true", default=None,
                        help="also store the raw fields")
    sub.add_parser("conv-sg", parents=[common],
                   help="interpolation convergence study at fixed resolution")
    p_ml = sub.add_parser("conv-ml", parents=[common],
                          help="single- vs multi-level cost-error study")
    p_ml.add_argument("--ref-tau", type=float, help="reference time step")
    p_ml.add_argument("--ref-mesh-n", type=int, help="reference mesh side")
    return parser


_CONFIG_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"command"}


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config") and v is not None
    }
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(data)
    try:
        return RunConfig(command=args.command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _DISPATCH[cfg.command](cfg)
    except (SolverError, SamplerError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
