"""Command-line orchestration: build, prebound, solve, evaluate, report.

Subcommands: solve, bounds, breakpoints, export-lp, oracle, knapsack.
Configuration may come from a JSON file via --config; explicit flags override
file values, which override defaults.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from . import breakpoints as bp
from . import milp, oracle, prebounds, relax
from .instance import grid_instance, load_instance
from .knapsack import SigmoidFn, continuous_optimum, integer_optimum
from .probit import ProbitCurve, objective_spec, true_objective

RELAX_CHOICES = ("step-max", "step-exp", "pwl", "va-pwl", "loge", "bn")
OBJECTIVE_CHOICES = ("bvap", "brh-rim", "brh-deep", "cpvi")

DEFAULTS = {
    "objective": "bvap",
    "relax": "step-max",
    "ell": 10,
    "nu": 3,
    "resolution": 1000,
    "dominating": False,
    "symmetry": False,
    "prebounds": False,
    "gradient_cuts": False,
    "time_limit": None,
    "node_limit": None,
    "seed": 0,
    "out": None,
    "cache_dir": ".districtbounds_cache",
    "beta": None,
    "beta0": None,
}


@dataclass
class RunConfig:
    instance: str = None
    objective: str = "bvap"
    relax: str = "step-max"
    ell: int = 10
    nu: int = 3
    resolution: int = 1000
    dominating: bool = False
    symmetry: bool = False
    prebounds: bool = False
    gradient_cuts: bool = False
    time_limit: float = None
    node_limit: int = None
    seed: int = 0
    out: str = None
    cache_dir: str = ".districtbounds_cache"
    beta: float = None
    beta0: float = None

    def validate(self, inst=None):
        if self.relax not in RELAX_CHOICES:
            raise ValueError(f"unknown relaxation {self.relax!r}")
        if self.objective not in OBJECTIVE_CHOICES:
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.objective == "cpvi" and self.relax not in ("step-max", "step-exp"):
            raise ValueError("the two-ratio objective requires a step relaxation")
        if inst is not None and self.objective == "cpvi" and not inst.has_votes:
            raise ValueError("instance has no vote data; cpvi objective unavailable")


@dataclass
class Report:
    """The standard result table: relaxation bound, solver objective,
    runtime-or-gap, and the incumbent's true value and true gap."""

    family: str
    objective: str
    status: str
    mip_bound: float
    mip_objective: float
    true_objective: float
    true_gap: float
    certified: bool
    step_error: float = None
    nodes: int = 0
    wall_time_s: float = 0.0       # volatile; excluded from determinism checks
    assignment: list = None

    def time_or_gap(self):
        if self.status == "optimal":
            return f"{self.wall_time_s:.2f} s"
        if self.mip_objective and self.mip_bound is not None:
            gap = (self.mip_bound - self.mip_objective) / max(abs(self.mip_objective), 1e-12)
            return f"{100 * gap:.2f}%"
        return self.status

    def to_json(self):
        data = asdict(self)
        return json.dumps(data, sort_keys=True, indent=1)

    def table(self):
        def num(v):
            return "-" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.4f}"

        rows = [
            ("Family", self.family),
            ("Objective", self.objective),
            ("Status", self.status),
            ("MIP Bound" if self.certified else "MIP Bound (uncertified)",
             num(self.mip_bound)),
            ("MIP Obj.", num(self.mip_objective)),
            ("Time/Gap", self.time_or_gap()),
            ("True Objective", num(self.true_objective)),
            ("True Gap", "-" if self.true_gap is None else f"{100 * self.true_gap:.2f}%"),
        ]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _curve_domain(inst, spec):
    lo, hi = relax._node_ratio_range(inst, spec.terms[0])
    return max(0.0, lo), hi


def make_breakpoints(inst, spec, config):
    lo, hi = _curve_domain(inst, spec)
    if hi <= lo:
        hi = lo + 1e-6
    if config.relax == "step-exp" and config.ell >= 2:
        return bp.step_exp_breakpoints(spec.curve, lo, hi, config.ell)
    return bp.step_max_breakpoints(spec.curve, lo, hi, config.ell)


def build_model(inst, spec, config, bounds=None, cuts=None):
    if spec.kind == "cpvi":
        domains = []
        for term in spec.terms:
            domains.append(relax._node_ratio_range(inst, term))
        grid = bp.multi_ratio_grid(spec.curve, domains, config.ell)
        return relax.build_step_multi(inst, spec, grid, ordering=config.symmetry,
                                      cuts=cuts), grid
    bs = make_breakpoints(inst, spec, config)
    if config.relax in ("step-max", "step-exp"):
        f_bounds = bounds.f_bounds() if (bounds and config.symmetry) else None
        build = relax.build_step_single(
            inst, spec, bs, dominating=config.dominating,
            ordering=config.symmetry or cuts is not None,
            f_bounds=f_bounds, cuts=cuts)
    elif config.relax == "pwl":
        build = relax.build_pwl_discretized(inst, spec, bs,
                                            resolution=config.resolution)
    elif config.relax == "va-pwl":
        build = relax.build_va_pwl(inst, spec, bs)
    elif config.relax == "loge":
        build = relax.build_loge_pwl(inst, spec, config.nu, bs=None,
                                     boxes=bounds.boxes() if bounds else None)
    elif config.relax == "bn":
        build = relax.build_bn_pwl(inst, spec, config.nu)
    else:
        raise ValueError(config.relax)
    return build, bs


def run(config: RunConfig, inst=None) -> Report:
    """End-to-end pipeline for one instance and one relaxation."""
    if inst is None:
        inst = load_instance(config.instance)
    config.validate(inst)
    spec = objective_spec(config.objective, beta=config.beta, beta0=config.beta0)

    bounds = cuts = None
    limits = {}
    if config.time_limit:
        limits["time"] = config.time_limit
    if config.node_limit:
        limits["nodes"] = config.node_limit
    if config.prebounds or config.gradient_cuts:
        bounds = prebounds.load_cached_bounds(config.cache_dir, inst, spec)
        if bounds is None:
            bounds = prebounds.compute_variable_ranges(inst, spec, limits)
            prebounds.save_cached_bounds(config.cache_dir, inst, spec, bounds)
        else:
            print("prebounds: cache hit, skipping range solves", file=sys.stderr)
    if config.gradient_cuts:
        feasible = oracle.brute_force_optimum(inst, spec) if inst.n <= 10 else None
        f_star = feasible.optimum if feasible else sum(bounds.f_lo)
        cuts = prebounds.gradient_cuts(inst, spec, f_star, limits=limits,
                                       bounds=bounds)

    build, _ = build_model(inst, spec, config, bounds=bounds, cuts=cuts)
    result = milp.solve(build.model, limits=limits)

    true_val = None
    true_gap = None
    if result.incumbent is not None:
        assignment = build.assignment_from(result.incumbent)
        try:
            true_val = true_objective(inst, assignment, spec)
            if true_val:
                true_gap = (result.dual_bound - true_val) / true_val
        except Exception:
            true_val = float("nan")
        assignment_list = list(assignment.district)
    else:
        assignment_list = None

    return Report(
        family=config.relax,
        objective=config.objective,
        status=result.status,
        mip_bound=result.dual_bound if result.dual_bound > -math.inf else None,
        mip_objective=result.mip_objective,
        true_objective=true_val,
        true_gap=true_gap,
        certified=build.certified_bound,
        step_error=build.total_delta(),
        nodes=result.nodes,
        wall_time_s=result.wall_time,
        assignment=assignment_list,
    )


def _merge_config(args) -> RunConfig:
    data = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            data.update(json.load(fh))
    for key in list(data.keys()) + ["instance"]:
        flag = getattr(args, key, None)
        if flag is not None:
            data[key] = flag
    return RunConfig(**{k: v for k, v in data.items() if k in RunConfig.__dataclass_fields__})


def _add_common(p):
    p.add_argument("--instance", help="instance JSON path")
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--objective", choices=OBJECTIVE_CHOICES)
    p.add_argument("--relax", choices=RELAX_CHOICES)
    p.add_argument("--ell", type=int, help="breakpoint count for step families")
    p.add_argument("--nu", type=int, help="binary budget for loge/bn")
    p.add_argument("--resolution", type=int, help="ratio grid for pwl")
    p.add_argument("--dominating", action="store_const", const=True)
    p.add_argument("--symmetry", action="store_const", const=True)
    p.add_argument("--prebounds", action="store_const", const=True)
    p.add_argument("--gradient-cuts", dest="gradient_cuts",
                   action="store_const", const=True)
    p.add_argument("--time-limit", dest="time_limit", type=float)
    p.add_argument("--node-limit", dest="node_limit", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--beta", type=float, help="override curve slope")
    p.add_argument("--beta0", type=float, help="override curve intercept")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--out", help="write report/artifact JSON here")


def _write_out(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text)


def cmd_solve(args):
    config = _merge_config(args)
    report = run(config)
    print(report.table())
    if config.out:
        _write_out(report.to_json(), config.out)
    return 0


def cmd_bounds(args):
    config = _merge_config(args)
    inst = load_instance(config.instance)
    spec = objective_spec(config.objective, beta=config.beta, beta0=config.beta0)
    limits = {}
    if config.time_limit:
        limits["time"] = config.time_limit
    if config.node_limit:
        limits["nodes"] = config.node_limit
    bounds = prebounds.compute_variable_ranges(inst, spec, limits)
    path = prebounds.save_cached_bounds(config.cache_dir, inst, spec, bounds)
    print(f"cached bounds at {path}", file=sys.stderr)
    _write_out(bounds.to_json(), config.out)
    return 0


def cmd_breakpoints(args):
    config = _merge_config(args)
    spec = objective_spec(config.objective, beta=config.beta, beta0=config.beta0)
    lo, hi = args.lo, args.hi
    if args.scheme == "geometric":
        bs, gamma = bp.multiplicative_breakpoints(lo, hi, config.ell)
        payload = {"scheme": args.scheme, "points": list(bs.points), "gamma": gamma}
    else:
        fn = (bp.step_exp_breakpoints if args.scheme == "step-exp"
              else bp.step_max_breakpoints)
        bs = fn(spec.curve, lo, hi, config.ell)
        payload = {
            "scheme": args.scheme,
            "points": list(bs.points),
            "max_error": bp.max_error(spec.curve, bs),
            "expected_error": bp.expected_error(spec.curve, bs),
        }
    _write_out(json.dumps(payload, sort_keys=True, indent=1), config.out)
    return 0


def cmd_export_lp(args):
    config = _merge_config(args)
    inst = load_instance(config.instance)
    config.validate(inst)
    spec = objective_spec(config.objective, beta=config.beta, beta0=config.beta0)
    bounds = None
    if config.prebounds:
        bounds = prebounds.load_cached_bounds(config.cache_dir, inst, spec)
        if bounds is None:
            bounds = prebounds.compute_variable_ranges(inst, spec, {})
            prebounds.save_cached_bounds(config.cache_dir, inst, spec, bounds)
    build, bs = build_model(inst, spec, config, bounds=bounds)
    if args.with_cuts:
        result = milp.solve(build.model)
        for cut in result.cuts:
            build.model.constraints.append(cut)
    text = milp.export_lp(build.model)
    _write_out(text, config.out)
    if config.out and hasattr(bs, "points"):
        side = config.out + ".breakpoints.json"
        with open(side, "w", encoding="utf-8") as fh:
            json.dump({"points": list(bs.points)}, fh, sort_keys=True, indent=1)
    return 0


def cmd_oracle(args):
    config = _merge_config(args)
    inst = load_instance(config.instance)
    spec = objective_spec(config.objective, beta=config.beta, beta0=config.beta0)
    res = oracle.brute_force_optimum(inst, spec)
    payload = {
        "optimum": res.optimum,
        "assignment": None if res.assignment is None else list(res.assignment.district),
        "feasible_count": res.feasible_count,
    }
    _write_out(json.dumps(payload, sort_keys=True, indent=1), config.out)
    return 0


def cmd_knapsack(args):
    beta = args.beta if args.beta is not None else 6.826
    beta0 = args.beta0 if args.beta0 is not None else 2.827
    curve = ProbitCurve(beta, beta0)
    f = SigmoidFn.from_curve(curve, args.a, args.b)
    cont = continuous_optimum(f, args.a, args.b, args.n, args.m)
    integral = integer_optimum(f, args.a, args.b, args.n, args.m)
    payload = {
        "continuous": asdict(cont),
        "integer": asdict(integral),
    }
    _write_out(json.dumps(payload, sort_keys=True, indent=1), getattr(args, "out", None))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="districtbounds",
        description="Certified dual bounds for probit-objective graph partitioning")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="build a relaxation, solve it, report")
    _add_common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bounds", help="compute per-district aggregate ranges")
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("breakpoints", help="emit a breakpoint set as JSON")
    _add_common(p)
    p.add_argument("--scheme", choices=("step-max", "step-exp", "geometric"),
                   default="step-max")
    p.add_argument("--lo", type=float, default=0.0)
    p.add_argument("--hi", type=float, default=1.0)
    p.set_defaults(func=cmd_breakpoints)

    p = sub.add_parser("export-lp", help="write the model as a CPLEX LP file")
    _add_common(p)
    p.add_argument("--with-cuts", dest="with_cuts", action="store_true",
                   help="solve first and include the lazy cuts found")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("oracle", help="brute-force optimum (desk scale)")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("knapsack", help="closed-form boundaryless allocation")
    p.add_argument("--beta", type=float)
    p.add_argument("--beta0", type=float)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_knapsack)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
