"""Command-line harness: one subcommand per operation, JSON or CSV reports.

Exit status: 0 when every asserted check passes, 1 when one fails, 2 for
usage or configuration errors.  Rationals cross the boundary as "p/q".
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
import warnings
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction

from . import bounds, dp2xor, xor2dp
from ._random import derive
from .boolfn import (
    DEFAULT_CAP,
    EnumerationCapError,
    TruthTable,
    empirical_xor_zero_rate,
    set_default_cap,
    unpack,
    xor_zero_advantage,
)
from .gldecode import GLParams, gl_decode_list
from .oracles import (
    AdversaryModel,
    RandomizedAlgorithm,
    dp_target,
    frac_str,
    mc_success,
    parse_fraction,
    plant_dp_adversary,
    plant_xor_adversary,
)

VARIANTS = ("thm1", "thm3", "thm2", "lemma-basic", "lemma1", "lemma2", "lemma3", "lemma5", "lemma7")
MODELS = ("random-subset", "planted-function")
CSV_COLUMNS = ("n", "k", "epsilon_achieved", "variant", "success", "ci95", "gamma_mean",
               "beta_mean", "pass_count")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 2
    k: int = 2
    epsilon: Fraction = Fraction(1, 4)
    model: str = "random-subset"
    variant: str = "thm1"
    seed: int = 0
    trials: int = 200
    cap: int = DEFAULT_CAP
    list_size: int | None = None
    c_const: int = 1
    mode: str = dp2xor.FRESH
    select: str = "best-parity"
    guess_bits: int | None = None
    delta: Fraction = Fraction(1, 4)
    workers: int = 1

    def __post_init__(self):
        def bad(name, why):
            raise ConfigError(f"{name}: {why}")

        if not 1 <= self.n <= 20:
            bad("n", "must lie in [1, 20]")
        if not 1 <= self.k <= 16:
            bad("k", "must lie in [1, 16]")
        if not isinstance(self.epsilon, Fraction):
            try:
                object.__setattr__(self, "epsilon", parse_fraction(self.epsilon))
            except ValueError as e:
                bad("epsilon", str(e))
        if not isinstance(self.delta, Fraction):
            try:
                object.__setattr__(self, "delta", parse_fraction(self.delta))
            except ValueError as e:
                bad("delta", str(e))
        if self.model not in MODELS:
            bad("model", f"must be one of {MODELS}")
        if self.variant not in VARIANTS:
            bad("variant", f"must be one of {VARIANTS}")
        if self.mode not in dp2xor.FILLER_MODES:
            bad("mode", f"must be one of {dp2xor.FILLER_MODES}")
        if self.select not in dp2xor.SELECT_MODES:
            bad("select", f"must be one of {dp2xor.SELECT_MODES}")
        if self.seed < 0:
            bad("seed", "must be non-negative")
        if self.trials < 1:
            bad("trials", "must be positive")
        if self.cap < 1:
            bad("cap", "must be positive")
        if self.list_size is not None and self.list_size < 1:
            bad("list_size", "must be at least 1")
        if self.c_const < 1:
            bad("c_const", "must be positive")
        if self.workers < 1:
            bad("workers", "must be positive")
        if self.guess_bits is not None and not 1 <= self.guess_bits <= 20:
            bad("guess_bits", "must lie in [1, 20]")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(obj) - names
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
        try:
            return cls(**obj)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["epsilon"] = frac_str(self.epsilon)
        out["delta"] = frac_str(self.delta)
        del out["workers"]
        return out


def _function(cfg: ExperimentConfig) -> TruthTable:
    return TruthTable.random(cfg.n, derive(cfg.seed, "function", cfg.n))


def _check(name: str, lemma: str, actual, expected, relation: str, ok: bool) -> dict:
    fmt = lambda v: frac_str(v) if isinstance(v, (Fraction, int)) else v
    return {"name": name, "lemma": lemma, "actual": fmt(actual), "expected": fmt(expected),
            "relation": relation, "pass": bool(ok)}


def _rows_to_checks(report, lemma: str) -> list[dict]:
    return [_check(r.label, lemma, r.lhs, r.rhs, r.relation, r.ok) for r in report.rows]


def _exact_or_none(fn):
    try:
        return fn()
    except EnumerationCapError as e:
        return {"skipped": str(e)}


def _run_dp2xor(cfg: ExperimentConfig, report: dict) -> None:
    f = _function(cfg)
    n, k = cfg.n, cfg.k
    M, achieved = plant_xor_adversary(f, k, cfg.epsilon, AdversaryModel(cfg.model, cfg.seed), cfg.cap)
    report["epsilon_achieved"] = frac_str(achieved)
    stages = report["stages"]
    checks = report["checks"]
    gamma = _exact_or_none(lambda: dp2xor.gamma_profile(M, f, k, cfg.cap))
    if isinstance(gamma, dp2xor.AdvantageProfile):
        stages["gamma_mean"] = frac_str(gamma.mean)
        checks.append(_check("mean gamma == eps_achieved", "lemma1", gamma.mean, achieved, "==",
                             gamma.mean == achieved))
    else:
        stages["gamma_mean"] = gamma
    variant = "k" if cfg.variant == "thm1" else "2k"
    mode = dp2xor.FRESH if variant == "k" else cfg.mode
    beta = _exact_or_none(lambda: dp2xor.beta_profile(M, f, k, variant, mode, cfg.cap))
    if isinstance(beta, dp2xor.AdvantageProfile):
        stages["beta_mean"] = frac_str(beta.mean)
        stages["branches"] = {str(h): frac_str(v) for h, v in beta.branches.items()}
        if variant == "k":
            checks.append(_check("mean beta >= eps^2", "lemma4", beta.mean, achieved**2, ">=",
                                 beta.mean >= achieved**2))
        elif k % 2 == 0:
            r = dp2xor.lemma5_exact_check(M, f, k, mode, cfg.cap)
            checks.extend(_rows_to_checks(r, "lemma5"))
    else:
        stages["beta_mean"] = beta
    params = GLParams(cfg.guess_bits, None, cfg.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if cfg.variant == "thm1":
            stages["gl_gamma"] = frac_str(dp2xor.thm1_gamma(achieved))
            Mp = dp2xor.reduce_thm1(M, n, k, achieved, params, cfg.select)
        else:
            select = "best" if cfg.select == "best-parity" else cfg.select
            stages["gl_gamma"] = frac_str(dp2xor.thm3_gamma(achieved, k))
            Mp = dp2xor.truncate(dp2xor.reduce_thm3(M, n, k, achieved, params, select, mode), n, k)
    report["warnings"] = [str(w.message) for w in caught]
    M.reset_count()
    est = mc_success(Mp, dp_target(f, k), cfg.trials, cfg.seed, cfg.workers)
    report["success"] = {**est.to_dict(), "select": cfg.select if cfg.variant == "thm1" else
                         ("best" if cfg.select == "best-parity" else cfg.select),
                         "baseline": 2.0**-k, "meets_0.9": est.point >= 0.9}
    report["queries"] = {"M_total": M.query_count, "M_per_trial": M.query_count / cfg.trials}


def _run_thm2(cfg: ExperimentConfig, report: dict) -> None:
    f = _function(cfg)
    C, achieved = plant_dp_adversary(f, cfg.k, cfg.epsilon, AdversaryModel(cfg.model, cfg.seed), cfg.cap)
    report["epsilon_achieved"] = frac_str(achieved)
    params = xor2dp.DecoderParams(c_const=cfg.c_const)
    l = cfg.list_size or 1
    res = xor2dp.list_reduce_thm2(C, f, cfg.k, achieved, l, cfg.seed, params, cap=cfg.cap)
    best = res.best
    report["stages"].update(best.to_dict())
    report["stages"]["list"] = res.to_dict()
    report["stages"]["precondition_threshold"] = xor2dp.thm2_threshold(cfg.k, cfg.c_const)
    for j, m in enumerate(res.members):
        report["checks"].append(_check(f"member {j}: advantage == (1-2delta')^k/2", "lemma-basic",
                                       m.advantage, m.predicted, "==", m.identity_holds))
    report["success"] = {"point": float(Fraction(1, 2) + best.advantage), "method": "exact",
                         "trials": 0, "ci95": 0.0, "list_success": res.success}
    report["queries"] = {"C_total": C.query_count}


def _run_lemma(cfg: ExperimentConfig, report: dict) -> None:
    n, k = cfg.n, cfg.k
    if cfg.variant == "lemma-basic":
        rng = derive(cfg.seed, "lemma-basic")
        for j in range(cfg.trials):
            length = int(rng.integers(1, 257))
            m = [int(b) for b in rng.integers(0, 2, size=length)]
            rate = empirical_xor_zero_rate(m, k, cfg.cap)
            want = xor_zero_advantage(Fraction(sum(m), length), k)
            report["checks"].append(_check(f"string {j} (length {length})", "lemma-basic", rate, want,
                                           "==", rate == want))
        return
    f = _function(cfg)
    if cfg.variant == "lemma7":
        size = 1 << n
        flips = derive(cfg.seed, "lemma7", n).choice(size, size=math.ceil(cfg.delta * size),
                                                      replace=False)
        g = f.flip(int(x) for x in flips)
        r = bounds.lemma7_check(f, g, k, cfg.delta, cfg.cap)
        report["stages"] = r.to_dict()
        report["checks"] = [_check(c.label, "lemma7", c.lhs, c.rhs, c.relation, c.ok)
                            for c in r.conclusions]
        return
    M, achieved = plant_xor_adversary(f, k, cfg.epsilon, AdversaryModel(cfg.model, cfg.seed), cfg.cap)
    report["epsilon_achieved"] = frac_str(achieved)
    if cfg.variant == "lemma1":
        r = dp2xor.lemma1_exact_check(M, f, k, cfg.cap)
    elif cfg.variant == "lemma2":
        rng = derive(cfg.seed, "lemma2-hosts")
        hosts = range(1 << (2 * n * k)) if 2 * n * k <= 8 else \
            [int(rng.integers(0, 1 << (2 * n * k))) for _ in range(cfg.trials)]
        failures, rows = 0, []
        for v in hosts:
            r = dp2xor.lemma2_exact_check(M, f, unpack(v, n, 2 * k), k)
            failures += not r.passed
            rows.extend(_rows_to_checks(r, "lemma2"))
        report["stages"]["tuples"] = len(hosts)
        report["stages"]["violating_tuples"] = failures
        report["checks"].extend(rows)
        return
    elif cfg.variant == "lemma3":
        r = dp2xor.lemma3_lemma4_exact_check(M, f, k, cfg.mode, cfg.cap)
    else:
        r = dp2xor.lemma5_exact_check(M, f, k, cfg.mode, cfg.cap)
    report["stages"].update({key: val for key, val in r.to_dict().items() if key != "rows"})
    checks = _rows_to_checks(r, r.lemma)
    if not r.asserted:
        for c in checks:
            c["asserted"] = False
    report["checks"].extend(checks)


def run(config: ExperimentConfig, timing: bool = False) -> dict:
    """Dispatch one experiment and return its report."""
    start = time.perf_counter()
    report = {"config": config.to_dict(), "stages": {}, "checks": []}
    if config.variant in ("thm1", "thm3"):
        _run_dp2xor(config, report)
    elif config.variant == "thm2":
        _run_thm2(config, report)
    else:
        _run_lemma(config, report)
    asserted = [c for c in report["checks"] if c.get("asserted", True)]
    report["pass_count"] = sum(c["pass"] for c in asserted)
    report["fail_count"] = len(asserted) - report["pass_count"]
    if timing:
        report["wall_time_s"] = round(time.perf_counter() - start, 3)
    return report


def sweep(base: ExperimentConfig, grid: dict) -> str:
    """One CSV row per grid cell, in the product order of the grid keys."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    keys = [key for key in ("n", "k", "variant", "epsilon") if key in grid]
    if any(len(grid[key]) == 0 for key in keys) or not keys:
        return buf.getvalue()
    for values in itertools.product(*(grid[key] for key in keys)):
        cfg = replace(base, **dict(zip(keys, values)))
        rep = run(cfg)
        succ = rep.get("success", {})
        writer.writerow([cfg.n, cfg.k, rep.get("epsilon_achieved", ""), cfg.variant,
                         succ.get("point", ""), succ.get("ci95", ""),
                         _plain(rep["stages"].get("gamma_mean", "")),
                         _plain(rep["stages"].get("beta_mean", "")), rep["pass_count"]])
    return buf.getvalue()


def _plain(v):
    return v if isinstance(v, str) else ""


def _emit(obj, args, failed: bool = False) -> int:
    if isinstance(obj, str):
        text = obj
    else:
        text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 1 if failed else 0


def _config_from_args(args, variant: str) -> ExperimentConfig:
    obj = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            obj = json.load(fh)
        obj.pop("grid", None)
    for name in ("n", "k", "epsilon", "model", "seed", "trials", "cap", "list_size", "c_const",
                 "mode", "select", "guess_bits", "delta", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            obj[name] = value
    obj["variant"] = variant
    return ExperimentConfig.from_dict(obj)


def _fail(report: dict) -> bool:
    return report["fail_count"] > 0


def cmd_gen_function(args) -> int:
    n = args.n or 2
    if args.kind == "random":
        f = TruthTable.random(n, derive(args.seed or 0, "function", n))
    elif args.kind == "parity":
        f = TruthTable.parity_function(n)
    else:
        f = TruthTable.constant(n, args.value)
    return _emit(f.to_dict(), args)


def cmd_plant(args) -> int:
    cfg = _config_from_args(args, "thm1")
    f = TruthTable.from_json(open(args.function).read()) if args.function else _function(cfg)
    model = AdversaryModel(cfg.model, cfg.seed)
    if args.direction == "xor":
        M, achieved = plant_xor_adversary(f, cfg.k, cfg.epsilon, model, cfg.cap)
        table = TruthTable(cfg.n * cfg.k, M.table).to_dict()
    else:
        M, achieved = plant_dp_adversary(f, cfg.k, cfg.epsilon, model, cfg.cap)
        table = list(M.table)
    out = {"function": f.to_dict(), "model": model.to_dict(cfg.epsilon), "k": cfg.k,
           "direction": args.direction, "epsilon_achieved": frac_str(achieved), "table": table}
    if M.decoy is not None:
        out["decoy"] = M.decoy.to_dict()
    return _emit(out, args)


def cmd_reduce(args) -> int:
    if args.direction == "dp2xor":
        cfg = _config_from_args(args, args.variant)
    else:
        cfg = _config_from_args(args, "thm2")
    report = run(cfg, args.timing)
    return _emit(report, args, _fail(report))


def cmd_gl_decode(args) -> int:
    n = args.n or 6
    gamma = parse_fraction(args.gamma)
    agree = parse_fraction(args.agreement)
    rng = derive(args.seed or 0, "gl-secret", n)
    secret = int(rng.integers(0, 1 << n))
    table = [(r & secret).bit_count() & 1 for r in range(1 << n)]
    wrong = (1 << n) - int(agree * (1 << n))
    for r in rng.permutation(1 << n)[:wrong]:
        table[int(r)] ^= 1
    B = RandomizedAlgorithm.from_table(n, 1, table)
    cl = gl_decode_list(B, n, gamma, GLParams(args.guess_bits, None, args.seed or 0))
    out = {"n": n, "gamma": frac_str(gamma), "agreement": frac_str(Fraction(len(table) - wrong, len(table))),
           "secret": format(secret, f"0{n}b")[::-1], "contains_secret": secret in cl,
           "queries": cl.queries, **cl.to_dict()}
    return _emit(out, args)


def cmd_verify(args) -> int:
    report = run(_config_from_args(args, args.lemma), args.timing)
    return _emit(report, args, _fail(report))


def _load_b(path: str, family, k: int):
    obj = json.load(open(path))
    if isinstance(obj, dict):
        return bounds.PiecewiseB.from_dict(obj).table(family, k)
    return obj


def cmd_bounds(args) -> int:
    k = args.k or 2
    if args.op == "construct-thm9":
        res = bounds.construct_thm9_family(args.n or 3, k, parse_fraction(args.delta or "1/4"),
                                           args.t, args.seed or 0, args.cap)
        audit = bounds.thm8_family_audit(res.family, res.B_table, k, Fraction(1, args.t), args.cap)
        out = {"family": res.family.to_list(), "B": res.B.to_dict(), "properties": res.report.to_dict(),
               "thm8_audit": audit.to_dict()}
        return _emit(out, args, not (res.report.conclusion_holds and audit.passed))
    if args.op == "search-counterexample":
        rep = bounds.search_counterexample(args.n or 2, k, args.families, args.seed or 0)
        out = rep.to_dict()
        return _emit(out, args, out["thm11_literal_violations"] > 0 or out["thm6_violations"] > 0)
    if not args.family or not args.b:
        raise ConfigError("family: --family and --b files are required for audits")
    family = bounds.FunctionFamily.from_json(open(args.family).read())
    B = _load_b(args.b, family, k)
    eps = parse_fraction(args.epsilon or "1/4")
    if args.op == "audit-thm6":
        delta = parse_fraction(args.delta) if args.delta else None
        audit = bounds.thm6_family_audit(family, B, k, eps, delta, args.cap)
    else:
        audit = bounds.thm8_family_audit(family, B, k, eps, args.cap)
    return _emit(audit.to_dict(), args, not audit.passed)


def cmd_demo(args) -> int:
    rep = xor2dp.nonuniformity_demo(args.n or 1, args.k or 3, args.seed or 0)
    return _emit(rep.to_dict(), args, not rep.passed)


def cmd_sweep(args) -> int:
    grid = {}
    base_obj = {}
    if args.config:
        with open(args.config) as fh:
            base_obj = json.load(fh)
        grid = base_obj.pop("grid", {})
    if args.epsilons:
        grid["epsilon"] = args.epsilons.split(",")
    if args.variants:
        grid["variant"] = args.variants.split(",")
    for name in ("n", "k"):
        if getattr(args, name) is not None:
            base_obj[name] = getattr(args, name)
    for name in ("seed", "trials", "cap", "model", "select", "workers"):
        if getattr(args, name, None) is not None:
            base_obj[name] = getattr(args, name)
    base = ExperimentConfig.from_dict(base_obj)
    if "epsilon" in grid:
        grid["epsilon"] = [parse_fraction(e) for e in grid["epsilon"]]
    text = sweep(base, grid)
    if args.format == "json":
        rows = list(csv.DictReader(io.StringIO(text)))
        return _emit(rows, args)
    return _emit(text, args)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("json", "csv"), help="sweep defaults to csv, others to json")
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="add wall time (breaks byte-identity)")
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig")
    return p


def _sizes(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)


def _experiment(p: argparse.ArgumentParser) -> None:
    _sizes(p)
    p.add_argument("--epsilon")
    p.add_argument("--model", choices=MODELS)
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=dp2xor.FILLER_MODES)
    p.add_argument("--select", choices=dp2xor.SELECT_MODES)
    p.add_argument("--guess-bits", dest="guess_bits", type=int)
    p.add_argument("--delta")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="dpxor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-function", parents=[common], help="emit a truth table")
    p.add_argument("--n", type=int)
    p.add_argument("--kind", choices=("random", "parity", "constant"), default="random")
    p.add_argument("--value", type=int, choices=(0, 1), default=0)
    p.set_defaults(func=cmd_gen_function)

    p = sub.add_parser("plant", parents=[common], help="build a planted adversary")
    _experiment(p)
    p.add_argument("--direction", choices=("xor", "dp"), default="xor")
    p.add_argument("--function", help="truth-table JSON file (default: seeded random)")
    p.set_defaults(func=cmd_plant)

    p = sub.add_parser("reduce", parents=[common], help="run a reduction end to end")
    p.add_argument("direction", choices=("dp2xor", "xor2dp"))
    _experiment(p)
    p.add_argument("--variant", choices=("thm1", "thm3"), default="thm1")
    p.add_argument("--list-size", dest="list_size", type=int)
    p.add_argument("--c-const", dest="c_const", type=int)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("gl-decode", parents=[common], help="decode a noisy Hadamard oracle")
    p.add_argument("--n", type=int)
    p.add_argument("--gamma", default="1/4")
    p.add_argument("--agreement", default="3/4")
    p.add_argument("--guess-bits", dest="guess_bits", type=int)
    p.set_defaults(func=cmd_gl_decode)

    p = sub.add_parser("verify", parents=[common], help="exact lemma checks")
    p.add_argument("lemma", choices=("lemma-basic", "lemma1", "lemma2", "lemma3", "lemma5", "lemma7"))
    _experiment(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", parents=[common], help="family audits and constructions")
    p.add_argument("op", choices=("audit-thm6", "audit-thm8", "construct-thm9", "search-counterexample"))
    _sizes(p)
    p.add_argument("--epsilon")
    p.add_argument("--delta")
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--families", type=int, default=10_000)
    p.add_argument("--family", help="JSON array of truth tables")
    p.add_argument("--b", help="JSON PiecewiseB object or list of B values")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("demo-nonuniformity", parents=[common], help="why one advice bit is needed")
    _sizes(p)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("sweep", parents=[common], help="grid of experiments as CSV")
    _experiment(p)
    p.add_argument("--epsilons", help="comma-separated p/q values")
    p.add_argument("--variants", help="comma-separated variants")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.cap is not None:
            set_default_cap(args.cap)
        return args.func(args)
    except (ConfigError, ValueError, EnumerationCapError, FileNotFoundError) as e:
        print(f"dpxor: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
