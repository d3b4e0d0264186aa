"""Command-line interface.

Exit codes: 0 ok, 1 verification failure, 2 input parse error, 3 usage
error, 4 capacity exceeded.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import sys

import numpy as np

from . import __version__, stepup
from .engine import (
    CapacityError,
    StrategyError,
    check_membership,
    critical_alpha,
    largest_prefix,
    singleton_rejections,
)
from .oracle import (
    MAX_BRUTE_M,
    MAX_ENUM_M,
    brute_critical_alpha_many,
    brute_membership_many,
    random_evalues,
    random_pvalues,
)
from .simlab import COV_KINDS, METHODS, SimConfig, run_experiment
from .suites import (
    EValueVector,
    MeanESuite,
    PValueVector,
    by_suite,
    clique_feasibility,
    mean_e_suite,
    su_suite,
    with_feasibility,
)

SCHEMA_VERSION = 1

EXIT_OK, EXIT_VERIFY, EXIT_PARSE, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3, 4

E_METHODS = ("ebh", "ebh_plus")
P_METHODS = ("by", "by_plus", "su", "su_plus")


class ParseError(ValueError):
    pass


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# -- input ------------------------------------------------------------------


def read_evidence(text):
    """Parse ``id,e`` or ``id,p`` CSV text into an evidence vector.

    Returns ``(kind, vector)`` with kind ``"e_values"`` or ``"p_values"``.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(n, r) for n, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("line 1: empty input")
    n0, header = rows[0]
    header = [h.strip().lower() for h in header]
    if header not in (["id", "e"], ["id", "p"]):
        raise ParseError(f"line {n0}: header must be 'id,e' or 'id,p', got {','.join(header)}")
    kind = "e_values" if header[1] == "e" else "p_values"
    ids, vals, errors = [], [], []
    for n, row in rows[1:]:
        if len(row) != 2:
            errors.append(f"line {n}: expected 2 fields, got {len(row)}")
            continue
        ident, raw = row[0].strip(), row[1].strip()
        try:
            x = float(raw)
        except ValueError:
            errors.append(f"line {n}: cannot parse number {raw!r}")
            continue
        if not ident:
            errors.append(f"line {n}: empty id")
        elif ident in ids:
            errors.append(f"line {n}: duplicate id {ident!r}")
        elif math.isnan(x) or math.isinf(x):
            errors.append(f"line {n}: non-finite value {raw!r}")
        elif kind == "e_values" and x < 0:
            errors.append(f"line {n}: negative e-value {raw!r}")
        elif kind == "p_values" and not 0.0 <= x <= 1.0:
            errors.append(f"line {n}: p-value {raw!r} outside [0, 1]")
        else:
            ids.append(ident)
            vals.append(x)
    if errors:
        raise ParseError("\n".join(errors))
    if not ids:
        raise ParseError("no data rows")
    cls = EValueVector if kind == "e_values" else PValueVector
    return kind, cls.from_values(vals, ids)


def build_suite(method, vec, alpha, pairwise_params=None):
    base = method.replace("_plus", "")
    if base == "ebh":
        suite = mean_e_suite(vec)
    elif base == "by":
        suite = by_suite(vec, alpha)
    else:
        suite = su_suite(vec, alpha)
    if pairwise_params is not None:
        feas = clique_feasibility(pairwise_params)
        if feas.m != vec.m:
            raise UsageError(
                f"{pairwise_params} parameters give {feas.m} pairwise hypotheses, input has {vec.m}"
            )
        if vec.m > MAX_BRUTE_M:
            raise CapacityError(f"restricted combinations are capped at m={MAX_BRUTE_M}")
        suite = with_feasibility(suite, feas)
    return suite


def _check_method(method, kind):
    if method not in E_METHODS + P_METHODS:
        raise UsageError(f"unknown method {method!r}")
    if kind == "e_values" and method not in E_METHODS:
        raise UsageError(f"method {method} needs p-values (header id,p)")
    if kind == "p_values" and method not in P_METHODS:
        raise UsageError(f"method {method} needs e-values (header id,e)")


def _parse_query(q, vec):
    pos = {ident: i for i, ident in enumerate(vec.ids)}
    out = []
    for tok in (t.strip() for t in q.split(",")):
        if not tok:
            continue
        if tok not in pos:
            raise UsageError(f"query refers to unknown id {tok!r}")
        out.append(pos[tok])
    return sorted(set(out))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _ids(vec, positions):
    order = {int(i): r for r, i in enumerate(vec.perm)}
    return [vec.ids[i] for i in sorted(positions, key=lambda i: order[int(i)])]


# -- analyze ----------------------------------------------------------------


def analyze(text, method, alpha, queries=(), pairwise_params=None, strategy="auto", seed=None):
    """Run one analysis and return the JSON-ready report dict."""
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {alpha}")
    kind, vec = read_evidence(text)
    _check_method(method, kind)
    qsets = [_parse_query(q, vec) for q in queries]
    report = {
        "schema": "epartition.report",
        "schema_version": SCHEMA_VERSION,
        "method": method,
        "alpha": alpha,
        "m": vec.m,
        "input_kind": kind,
        "order": list(vec.ids[i] for i in vec.perm),
        "restricted_pairs": pairwise_params,
        "provenance": {
            "input_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest(),
            "version": __version__,
            "seed": seed,
        },
    }
    if not method.endswith("_plus"):
        if pairwise_params is not None:
            raise UsageError("restricted combinations need a *_plus method")
        proc = {"ebh": stepup.ebh, "by": stepup.by, "su": stepup.su}[method]
        rej = proc(vec, alpha)
        chosen = set(rej.indices)
        report["largest_set"] = list(rej.rejected_ids)
        report["fwer_set"] = None
        report["queries"] = [
            {
                "set": _ids(vec, q),
                # a classical procedure offers only its own set (and the empty set)
                "member": not q or set(q) == chosen,
                "witness": None,
                "critical_alpha": None,
            }
            for q in qsets
        ]
        return report

    suite = build_suite(method, vec, alpha, pairwise_params)
    if pairwise_params is not None and strategy == "auto":
        strategy = "brute"
    best = largest_prefix(suite, alpha, strategy)
    report["strategy"] = strategy
    report["largest_set"] = list(best.rejected_ids)
    report["fwer_set"] = _ids(vec, singleton_rejections(suite, alpha, strategy))
    answers = []
    for q in qsets:
        res = check_membership(suite, q, alpha, strategy)
        ans = {"set": _ids(vec, q), "member": res.member, "witness": None, "critical_alpha": None}
        if res.witness is not None:
            w = res.witness
            ans["witness"] = {
                "S": _ids(vec, w.S),
                "e_S": _num(w.e_S),
                "fdp_bound": _num(w.fdp_bound),
            }
        if suite.alpha_free and q:
            ans["critical_alpha"] = _num(critical_alpha(suite, q))
        answers.append(ans)
    report["queries"] = answers
    return report


# -- verify -----------------------------------------------------------------


def _candidate_sets(suite, rng, extra=(), n_random=256):
    m = suite.m
    if m <= 10:
        return [tuple(int(i) for i in np.flatnonzero((c >> np.arange(m)) & 1)) for c in range(2 ** m)]
    sets = [tuple(int(i) for i in suite.prefix(r)) for r in range(m + 1)]
    sets += [(i,) for i in range(m)]
    sets += [tuple(int(i) for i in q) for q in extra]
    sets += [tuple(int(i) for i in np.flatnonzero(rng.random(m) < 0.5)) for _ in range(n_random)]
    return sets


def verify_suite(suite, alpha, rng=None, extra=()):
    """Cross-check every query strategy against brute force on one instance.

    Returns a list of human-readable disagreement descriptions (empty when
    everything agrees).
    """
    if suite.m > MAX_ENUM_M:
        raise CapacityError(f"verification is capped at m={MAX_ENUM_M}, got {suite.m}")
    rng = np.random.default_rng(0) if rng is None else rng
    # "auto" resolves to one of these, so it is not checked separately
    if isinstance(suite, MeanESuite):
        strategies = ["mean_e_fast"]
    elif suite.monotone_in_p:
        strategies = ["monotone"]
    else:
        strategies = ["auto"]
    sets = _candidate_sets(suite, rng, extra)
    truth = brute_membership_many(suite, sets, alpha)
    problems = []
    for R, want in zip(sets, truth):
        for strat in strategies:
            got = check_membership(suite, R, alpha, strat).member
            if got != want:
                problems.append(f"R={list(R)} strategy={strat}: fast={got} brute={bool(want)}")
    if suite.alpha_free and isinstance(suite, MeanESuite):
        nonempty = [R for R in sets if R]
        for R, slow in zip(nonempty, brute_critical_alpha_many(suite, nonempty)):
            fast = critical_alpha(suite, R)
            if not (fast == slow or abs(fast - slow) <= 1e-12 * max(1.0, abs(slow))):
                problems.append(f"R={list(R)} critical alpha: fast={fast} brute={slow}")
    singles = singleton_rejections(suite, alpha)
    ok = brute_membership_many(suite, [(i,) for i in range(suite.m)], alpha)
    direct = tuple(int(i) for i in np.flatnonzero(ok))
    if singles != direct:
        problems.append(f"singletons: fast={list(singles)} brute={list(direct)}")
    return problems


def _fuzz_suites(method, m, n, alpha, seed):
    rng = np.random.default_rng([seed, m])
    for _ in range(n):
        if method.startswith("ebh"):
            yield build_suite(method, EValueVector.from_values(random_evalues(rng, m)), alpha)
        else:
            yield build_suite(method, PValueVector.from_values(random_pvalues(rng, m)), alpha)


# -- commands ---------------------------------------------------------------


def _read_input(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not valid UTF-8 ({exc.reason})")


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_analyze(args):
    report = analyze(
        _read_input(args.input),
        args.method,
        args.alpha,
        args.query or (),
        args.pairwise_params,
        args.strategy,
        args.seed,
    )
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK


def cmd_verify(args):
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"alpha must lie in (0, 1), got {args.alpha}")
    method = args.method if args.method.endswith("_plus") else args.method + "_plus"
    problems = []
    checked = 0
    if args.fuzz:
        if args.m is None:
            raise UsageError("--fuzz needs --m")
        if args.m > MAX_ENUM_M:
            raise CapacityError(f"verification is capped at m={MAX_ENUM_M}")
        for j, suite in enumerate(_fuzz_suites(method, args.m, args.fuzz, args.alpha, args.seed or 0)):
            problems += [f"instance {j}: {msg}" for msg in verify_suite(suite, args.alpha)]
            checked += 1
    if args.input:
        kind, vec = read_evidence(_read_input(args.input))
        _check_method(method, kind)
        if vec.m > MAX_ENUM_M:
            raise CapacityError(f"verification is capped at m={MAX_ENUM_M}, got {vec.m}")
        suite = build_suite(method, vec, args.alpha, args.pairwise_params)
        extra = [_parse_query(q, vec) for q in args.query or ()]
        problems += verify_suite(suite, args.alpha, np.random.default_rng(args.seed or 0), extra)
        checked += 1
    if not checked:
        raise UsageError("verify needs --input or --fuzz")
    for msg in problems:
        print(msg, file=sys.stderr)
    if problems:
        print(f"{len(problems)} disagreement(s) across {checked} instance(s)")
        return EXIT_VERIFY
    print(f"all strategies agree ({checked} instance(s))")
    return EXIT_OK


def _floats(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ParseError(f"cannot parse number list {text!r}")
    if not vals:
        raise ParseError(f"empty number list {text!r}")
    return vals


def cmd_simulate(args):
    grid = _floats(args.grid_A)
    kinds = [k.strip() for k in args.cov.split(",") if k.strip()]
    methods = [k.strip() for k in args.methods.split(",") if k.strip()]
    for k in kinds:
        if k not in COV_KINDS:
            raise ParseError(f"unknown covariance kind {k!r}")
    for meth in methods:
        if meth not in METHODS:
            raise ParseError(f"unknown method {meth!r}")
    try:
        configs = [
            SimConfig(
                A=A,
                m=args.m,
                pi0=args.pi0,
                cov_kind=k,
                n_obs=args.n_obs,
                alpha=args.alpha,
                reps=args.reps,
                seed=args.seed,
            )
            for k in kinds
            for A in grid
        ]
    except ValueError as exc:
        raise ParseError(str(exc))
    result = run_experiment(configs, methods)
    _emit(result.to_csv(), args.output)
    return EXIT_OK


def make_parser():
    parser = _Parser(prog="epartition", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--method", default="ebh_plus", choices=E_METHODS + P_METHODS)
        p.add_argument("--query", action="append", metavar="IDS",
                       help="comma-separated external ids; repeatable")
        p.add_argument("--pairwise-params", type=int, default=None, metavar="K",
                       help="hypotheses are the K(K-1)/2 pairwise equalities of K parameters")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("analyze", help="rejected sets and membership queries")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--strategy", default="auto", choices=("auto", "brute", "monotone", "mean_e_fast"))
    p.add_argument("--output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="cross-check fast paths against brute force")
    common(p)
    p.add_argument("--input")
    p.add_argument("--fuzz", type=int, default=0, metavar="N", help="also check N random instances")
    p.add_argument("--m", type=int, default=None, help="instance size for --fuzz")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="power/FDR table for the Gaussian experiment")
    p.add_argument("--grid-A", default="0.125,0.25,0.375,0.5")
    p.add_argument("--cov", default="ar1,neg_equicorr")
    p.add_argument("--methods", default="ebh,ebh_plus")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-obs", type=int, default=100)
    p.add_argument("--pi0", type=float, default=0.25)
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--output")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error:\n{exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (UsageError, StrategyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run():
    sys.exit(main())
