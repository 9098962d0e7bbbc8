"""Command-line interface.

    regret-bw optimize --n1 25 --n0 25 --c 0.1 --s 50000
    regret-bw normal   --data trial.csv --target 0.5 --c 0.2
    regret-bw table1   --s 50000 --seed 7
    regret-bw curve    --n1 5 --n0 5 --c 5 --theta-grid 0.05:1.0:40
    regret-bw verify   --max-n 6

Settings come from defaults, then ``--config FILE`` (JSON, keys named like
the long flags), then flags on the command line.  Output is JSON unless
``--format csv``.  Exit codes: 0 success, 1 verification failures,
2 configuration error, 3 data error, 4 numeric/degenerate error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

from .bandwidth_opt import TABLE1_THETA, ThetaGridSpec, optimize_bandwidth, regret_curve, table1
from .design_space import ExperimentDesign, make_grid_design
from .errors import ConfigurationError, InvalidDesignError, RegretBWError
from .io import SCHEMA_VERSION, build_id, dumps_csv, dumps_json, load_dataset
from .kernels import KERNEL_FAMILIES, KernelSpec
from .normal_ref import NormalModelSpec, normal_optimal_bandwidth
from .regret_exact import verify_reduction
from .regret_mc import DEFAULT_P_RESOLUTION, DEFAULT_S, PGridSpec, make_draws

log = logging.getLogger("regret_bw")

COMMANDS = ("optimize", "normal", "table1", "curve", "verify")

DEFAULTS: dict[str, Any] = {
    "n1": None,
    "n0": None,
    "c": None,
    "kernel": "gaussian",
    "s": DEFAULT_S,
    "seed": 0,
    "p_grid": DEFAULT_P_RESOLUTION,
    "theta_min": None,
    "theta_max": None,
    "theta_count": 60,
    "theta_spacing": "log",
    "theta_grid": None,
    "crn_scope": "global",
    "sigma": 0.5,
    "data": None,
    "target": None,
    "out": None,
    "format": "json",
    "stamp": False,
    "plateau_tol": 1e-4,
    "cs": "0.1,0.2,0.3",
    "ns": "10,50,100,200",
    "max_n": 6,
    "instances": 54,
    "resolution": 41,
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    n1: int | None
    n0: int | None
    c: float | None
    kernel: str
    s: int
    seed: int
    p_grid: int
    theta_min: float | None
    theta_max: float | None
    theta_count: int
    theta_spacing: str
    theta_grid: str | None
    crn_scope: str
    sigma: float
    data: str | None
    target: str | None
    out: str | None
    format: str
    stamp: bool
    plateau_tol: float
    cs: str
    ns: str
    max_n: int
    instances: int
    resolution: int

    def __post_init__(self) -> None:
        checks = [
            (self.s >= 1, "--s must be >= 1"),
            (self.p_grid >= 2, "--p-grid must be >= 2"),
            (self.theta_count >= 2, "--theta-count must be >= 2"),
            (self.sigma > 0, "--sigma must be positive"),
            (self.c is None or self.c >= 0, "--c must be >= 0"),
            (self.kernel in KERNEL_FAMILIES, f"--kernel must be one of {', '.join(KERNEL_FAMILIES)}"),
            (self.crn_scope in ("global", "per-theta"), "--crn-scope must be global or per-theta"),
            (self.theta_spacing in ("log", "linear"), "--theta-spacing must be log or linear"),
            (self.format in ("json", "csv"), "--format must be json or csv"),
            (self.plateau_tol >= 0, "--plateau-tol must be >= 0"),
            (self.max_n >= 2, "--max-n must be >= 2"),
            (self.instances >= 1, "--instances must be >= 1"),
            (self.resolution >= 2, "--resolution must be >= 2"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigurationError(msg)
        if self.data is not None and not Path(self.data).is_file():
            raise ConfigurationError(f"--data file not found: {self.data}")

    def echo(self) -> dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if k not in ("out", "stamp")}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would print usage and exit(2)
        raise ConfigurationError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with default settings")
    g = p.add_argument_group("design")
    g.add_argument("--n1", type=int, default=S, help="treated grid size")
    g.add_argument("--n0", type=int, default=S, help="control grid size")
    g.add_argument("--c", type=float, default=S, help="Lipschitz constant")
    g.add_argument("--data", default=S, help="CSV with header y,d,x1[,...]")
    g.add_argument("--target", default=S, help="target covariate value(s), comma separated")
    g = p.add_argument_group("computation")
    g.add_argument("--kernel", default=S, choices=KERNEL_FAMILIES)
    g.add_argument("--s", type=int, default=S, help=f"Monte Carlo draws (default {DEFAULT_S})")
    g.add_argument("--seed", type=int, default=S)
    g.add_argument("--p-grid", type=int, default=S, help="anchor grid resolution on [0, 1]")
    g.add_argument("--theta-min", type=float, default=S)
    g.add_argument("--theta-max", type=float, default=S)
    g.add_argument("--theta-count", type=int, default=S)
    g.add_argument("--theta-spacing", default=S, choices=("log", "linear"))
    g.add_argument("--theta-grid", default=S, help="shorthand MIN:MAX:COUNT")
    g.add_argument("--crn-scope", default=S, choices=("global", "per-theta"))
    g.add_argument("--sigma", type=float, default=S, help="outcome sd for the normal benchmark")
    g.add_argument("--plateau-tol", type=float, default=S)
    g = p.add_argument_group("output")
    g.add_argument("--out", default=S, help="output file (default stdout)")
    g.add_argument("--format", default=S, choices=("json", "csv"))
    g.add_argument("--stamp", action="store_true", default=S, help="record the wall-clock time")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="regret-bw", description="Minimax-regret bandwidth selection for binary outcomes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "optimize": "binary-outcome minimax bandwidth (Monte Carlo)",
        "normal": "normal-outcome benchmark bandwidth (closed form)",
        "table1": "binary vs normal bandwidths on the equidistant design",
        "curve": "maximum regret at each grid bandwidth",
        "verify": "check the two-anchor reduction against full brute force",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=helps[name])
        _add_common(p)
        if name == "table1":
            p.add_argument("--cs", default=argparse.SUPPRESS, help="comma-separated Lipschitz constants")
            p.add_argument("--ns", default=argparse.SUPPRESS, help="comma-separated total sample sizes")
        if name == "verify":
            p.add_argument("--max-n", type=int, default=argparse.SUPPRESS)
            p.add_argument("--instances", type=int, default=argparse.SUPPRESS)
            p.add_argument("--resolution", type=int, default=argparse.SUPPRESS)
    return parser


def _read_config_file(path: str) -> dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config file must hold a JSON object")
    out = {}
    for k, v in raw.items():
        key = k.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigurationError(f"unknown config key {k!r}")
        out[key] = v
    return out


def resolve_config(argv: Sequence[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    settings = dict(DEFAULTS)
    if "config" in ns:
        settings.update(_read_config_file(ns.pop("config")))
    settings.update(ns)
    try:
        return RunConfig(command=command, **settings)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


def _floats(text: str, flag: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"{flag} must be comma-separated numbers, got {text!r}") from None


def make_design(cfg: RunConfig) -> ExperimentDesign:
    if cfg.c is None:
        raise ConfigurationError("--c (Lipschitz constant) is required")
    if cfg.data is not None:
        target = None if cfg.target is None else _floats(cfg.target, "--target")
        return load_dataset(cfg.data, target, cfg.c)
    if cfg.n1 is None or cfg.n0 is None:
        raise ConfigurationError("give --data or both --n1 and --n0")
    try:
        return make_grid_design(cfg.n1, cfg.n0, cfg.c)
    except InvalidDesignError as exc:
        raise ConfigurationError(str(exc)) from exc


def make_theta_grid(cfg: RunConfig, design: ExperimentDesign | None) -> ThetaGridSpec:
    if cfg.theta_grid is not None:
        parts = str(cfg.theta_grid).split(":")
        if len(parts) != 3:
            raise ConfigurationError(f"--theta-grid must be MIN:MAX:COUNT, got {cfg.theta_grid!r}")
        try:
            return ThetaGridSpec(float(parts[0]), float(parts[1]), int(parts[2]), cfg.theta_spacing)
        except ValueError:
            raise ConfigurationError(f"bad --theta-grid {cfg.theta_grid!r}") from None
    if design is None:
        lo, hi = TABLE1_THETA[:2]
    else:
        base = ThetaGridSpec.default_for(design, cfg.theta_count, cfg.theta_spacing)
        lo, hi = base.theta_min, base.theta_max
    lo = cfg.theta_min if cfg.theta_min is not None else lo
    hi = cfg.theta_max if cfg.theta_max is not None else hi
    return ThetaGridSpec(lo, hi, cfg.theta_count, cfg.theta_spacing)


def _provenance(cfg: RunConfig, theta_grid: ThetaGridSpec | None) -> dict[str, Any]:
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds") if cfg.stamp else None
    prov = {"seed": cfg.seed, "s_draws": cfg.s, "p_grid": cfg.p_grid}
    if theta_grid is not None:
        prov["theta_grid"] = {
            "theta_min": theta_grid.theta_min,
            "theta_max": theta_grid.theta_max,
            "count": theta_grid.count,
            "spacing": theta_grid.spacing,
        }
    prov["build"] = build_id()
    prov["timestamp"] = stamp
    return prov


def _solution_doc(sol) -> dict[str, Any]:
    doc = {
        "theta_star": sol.theta_star,
        "plateau": list(sol.plateau),
        "min_regret": sol.min_regret,
        "theta_argmin": sol.theta_argmin,
        "method": sol.method,
        "curve": [{"theta": c.theta, "regret": c.regret, "se": c.se} for c in sol.curve],
    }
    if sol.breakdown:
        for item, br in zip(doc["curve"], sol.breakdown):
            item["s"], item["b"] = br.s_theta, br.b_theta
    return doc


def run(cfg: RunConfig) -> tuple[str, int]:
    """Execute one subcommand; returns the rendered output and the exit status."""
    kernel = KernelSpec(cfg.kernel)
    p_grid = PGridSpec(cfg.p_grid)
    status = 0

    if cfg.command in ("optimize", "normal", "curve"):
        design = make_design(cfg)
        tgrid = make_theta_grid(cfg, design)
        prov = _provenance(cfg, tgrid)
        if cfg.command == "normal":
            sol = normal_optimal_bandwidth(NormalModelSpec(design, kernel, cfg.sigma), tgrid)
        elif cfg.command == "optimize":
            draws = make_draws(cfg.seed, cfg.s, design)
            sol = optimize_bandwidth(design, kernel, draws, p_grid, tgrid, cfg.crn_scope, cfg.plateau_tol)
        if cfg.command == "curve":
            draws = make_draws(cfg.seed, cfg.s, design)
            pts = regret_curve(design, kernel, draws, p_grid, tgrid, cfg.crn_scope)
            curve = [
                {"theta": t, "regret": None, "se": None} if pt is None
                else {"theta": pt.theta, "regret": pt.regret, "se": pt.se}
                for t, pt in zip(tgrid.points().tolist(), pts)
            ]
            if cfg.format == "csv":
                rows = [(c["theta"], c["regret"], c["se"]) for c in curve]
                return dumps_csv(["theta", "regret", "se"], rows, {"config": cfg.echo(), "provenance": prov}), 0
            doc = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "curve": curve, "provenance": prov}
            return dumps_json(doc), 0
        sdoc = _solution_doc(sol)
        if cfg.format == "csv":
            cols = ["theta", "regret", "se"] + (["s", "b"] if sol.breakdown else [])
            rows = [[c[k] for k in cols] for c in sdoc["curve"]]
            meta = {"theta_star": sol.theta_star, "plateau": list(sol.plateau), "min_regret": sol.min_regret,
                    "config": cfg.echo(), "provenance": prov}
            return dumps_csv(cols, rows, meta), 0
        doc = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "solution": sdoc, "provenance": prov}
        return dumps_json(doc), 0

    if cfg.command == "table1":
        tgrid = make_theta_grid(cfg, None)
        ns = [int(v) for v in _floats(cfg.ns, "--ns")]
        rows = table1(cfg.s, cfg.seed, p_grid, tgrid, kernel, cfg.sigma, _floats(cfg.cs, "--cs"), ns, cfg.crn_scope)
        recs = [
            {
                "C": r.lipschitz_c,
                "n": r.n,
                "binary_theta_star": r.binary.theta_star,
                "binary_plateau": list(r.binary.plateau),
                "binary_min_regret": r.binary.min_regret,
                "normal_theta_star": r.normal.theta_star,
                "normal_min_regret": r.normal.min_regret,
                "divergent": r.divergent,
            }
            for r in rows
        ]
        prov = _provenance(cfg, tgrid)
        if cfg.format == "csv":
            cols = ["C", "n", "binary_theta_star", "binary_lo", "binary_hi", "binary_min_regret",
                    "normal_theta_star", "normal_min_regret", "divergent"]
            body = [
                [r["C"], r["n"], r["binary_theta_star"], *r["binary_plateau"], r["binary_min_regret"],
                 r["normal_theta_star"], r["normal_min_regret"], int(r["divergent"])]
                for r in recs
            ]
            return dumps_csv(cols, body, {"config": cfg.echo(), "provenance": prov}), 0
        doc = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "rows": recs, "provenance": prov}
        return dumps_json(doc), 0

    # verify
    checks = verify_reduction(cfg.instances, cfg.max_n, cfg.resolution, cfg.seed, kernel)
    violations = sum(c.violation for c in checks)
    status = 1 if violations else 0
    items = [
        {
            "x1": list(c.x1), "x0": list(c.x0), "C": c.lipschitz_c, "theta": c.theta,
            "reduced": c.reduced, "bruteforce": c.bruteforce,
            "reduced_at_bruteforce_anchors": c.at_bruteforce_anchors,
            "difference": c.difference, "violation": c.violation,
        }
        for c in checks
    ]
    prov = _provenance(cfg, None)
    if cfg.format == "csv":
        cols = ["n1", "n0", "C", "theta", "reduced", "bruteforce", "difference", "violation"]
        body = [[len(i["x1"]), len(i["x0"]), i["C"], i["theta"], i["reduced"], i["bruteforce"],
                 i["difference"], int(i["violation"])] for i in items]
        return dumps_csv(cols, body, {"violations": violations, "config": cfg.echo(), "provenance": prov}), status
    report = {
        "instances": len(items),
        "violations": violations,
        "tolerance": 2.0 / (cfg.resolution - 1),
        "max_difference": max(i["difference"] for i in items),
        "checks": items,
    }
    doc = {"schema_version": SCHEMA_VERSION, "config": cfg.echo(), "report": report, "provenance": prov}
    return dumps_json(doc), status


def _error_doc(exc: RegretBWError) -> str:
    return json.dumps(
        {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}}
    )


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(argv)
        text, status = run(cfg)
        if cfg.out:
            Path(cfg.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return status
    except RegretBWError as exc:
        print(_error_doc(exc), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
