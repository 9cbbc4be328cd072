"""
Command-line interface.

    mmle estimate --dist gamma --input data.csv [--method mmle|mle|both] [--format json|text]
    mmle simulate --dist gamma --lambda 1.5 --phi 2 --n-grid 10:100:5 --reps 10000 --seed 42 --out fig1.csv
    mmle verify [--dist beta] [--points 25] [--seed 0] [--include-invalid]
    mmle replay run.manifest.json

Exit codes: 0 success, 1 failed verification, 2 usage or I/O error,
3 degenerate sample, 4 value outside the support, 5 solver did not converge.
"""

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from mmle import __version__
from mmle.distributions import (
    POSITIVE,
    UNIT_INTERVAL,
    BetaParams,
    GammaParams,
    GeneralizedGammaParams,
    SampleBatch,
    derive_seed,
    sample_beta,
    sample_generalized_gamma,
)
from mmle.errors import DegenerateSample, DomainError, NonConvergence
from mmle.estimators import (
    beta_q,
    jk_matrices_beta,
    jk_matrices_power_gamma,
    mmle_beta,
    mmle_power_gamma,
    modified_eq_residuals,
    power_gamma_avar,
    sandwich_covariance,
    verify_score_zero,
    well_spread,
)
from mmle.mle import mle_beta, mle_power_gamma
from mmle.montecarlo import ConfigError, ExperimentConfig, run_experiment

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DEGENERATE, EXIT_DOMAIN, EXIT_NONCONVERGENCE = 0, 1, 2, 3, 4, 5

DISTS = ("gamma", "nakagami", "wilson-hilferty", "beta")
_POWER = {"gamma": 1.0, "nakagami": 2.0, "wilson-hilferty": 3.0}


class InputError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _dumps(obj):
    return json.dumps(obj, indent=2, sort_keys=False)


# -- input --------------------------------------------------------------------

def read_column(path, support):
    """Read a single-column numeric file.

    Blank lines and lines starting with ``#`` are skipped; a header line
    ``x`` is tolerated. Errors name the 1-based line number.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}", EXIT_USAGE) from exc
    values = []
    seen_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.rstrip(",").strip().lower() == "x" and not seen_data:
            seen_data = True
            continue
        seen_data = True
        try:
            v = float(line.rstrip(",").strip())
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse {line!r} as a number", EXIT_USAGE) from None
        if not math.isfinite(v) or v <= 0 or (support == UNIT_INTERVAL and v >= 1):
            where = "(0, 1)" if support == UNIT_INTERVAL else "(0, inf)"
            raise InputError(f"{path}:{lineno}: value {v!r} is outside the support {where}", EXIT_DOMAIN)
        values.append(v)
    if len(values) < 2:
        raise InputError(f"{path}: need at least two values, found {len(values)}", EXIT_DEGENERATE)
    return SampleBatch(np.array(values), support)


# -- estimate -------------------------------------------------------------------

def _fit(dist, sample, method):
    if dist == "beta":
        return mmle_beta(sample) if method == "mmle" else mle_beta(sample)
    fn = mmle_power_gamma if method == "mmle" else mle_power_gamma
    return fn(sample, _POWER[dist])


def cmd_estimate(args, out=sys.stdout):
    support = UNIT_INTERVAL if args.dist == "beta" else POSITIVE
    sample = read_column(args.input, support)
    methods = ("mmle", "mle") if args.method == "both" else (args.method,)
    reports = {}
    for m in methods:
        try:
            reports[m] = _fit(args.dist, sample, m)
        except DegenerateSample as exc:
            raise InputError(f"{args.input}: degenerate sample: {exc}", EXIT_DEGENERATE) from exc
        except NonConvergence as exc:
            raise InputError(f"{args.input}: {m} did not converge: {exc}", EXIT_NONCONVERGENCE) from exc
    if args.method == "both":
        doc = {"dist": args.dist, "method": "both", "n": sample.n}
        for m, rep in reports.items():
            d = rep.as_dict()
            d.pop("n")
            doc[m] = d
        names = reports["mmle"].names
        diff = reports["mmle"].estimates - reports["mle"].estimates
        doc["difference"] = {k: float(v) for k, v in zip(names, diff)}
    else:
        rep = reports[args.method]
        doc = {"dist": args.dist, "method": args.method, **rep.as_dict()}
    if args.format == "json":
        out.write(_dumps(doc) + "\n")
    else:
        out.write(_text_report(doc))
    return EXIT_OK


def _text_report(doc):
    lines = [f"distribution: {doc['dist']}   n = {doc['n']}"]
    blocks = [(m, doc[m]) for m in ("mmle", "mle")] if doc["method"] == "both" else [(doc["method"], doc)]
    for m, d in blocks:
        lines.append(f"[{m}]")
        for k, v in d["estimates"].items():
            se = d["std_errors"][k] if d["std_errors"] else float("nan")
            lines.append(f"  {k:<8} {v:.10g}   (se {se:.4g})")
        if d["flags"]:
            lines.append("  flags: " + ", ".join(d["flags"]))
    if "difference" in doc:
        lines.append("[mmle - mle]")
        for k, v in doc["difference"].items():
            lines.append(f"  {k:<8} {v:+.4g}")
    return "\n".join(lines) + "\n"


# -- simulate ---------------------------------------------------------------------

def _n_grid(spec):
    try:
        lo, hi, step = (int(v) for v in spec.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi:step, got {spec!r}") from None
    if step < 1 or lo < 2 or hi < lo:
        raise argparse.ArgumentTypeError("need 2 <= lo <= hi and step >= 1")
    return tuple(range(lo, hi + 1, step))


def _estimators(spec):
    names = tuple(s.strip() for s in spec.split(",") if s.strip())
    if not names or any(s not in ("mmle", "mle") for s in names):
        raise argparse.ArgumentTypeError("estimators must be a comma list of mmle, mle")
    return names


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def cmd_simulate(args, argv, parser, out=sys.stdout):
    started = _now()
    family = args.dist.replace("-", "_")
    try:
        if family == "beta":
            if args.alpha is None or args.beta is None:
                parser.error("--dist beta needs --alpha and --beta")
            params = BetaParams(args.alpha, args.beta)
        else:
            if args.lam is None or args.phi is None:
                parser.error(f"--dist {args.dist} needs --lambda and --phi")
            params = GammaParams(args.lam, args.phi)
        cfg = ExperimentConfig(family, params, args.n_grid, args.reps, args.seed,
                               args.estimators, not args.include_flagged)
    except (ConfigError, DomainError) as exc:
        parser.error(str(exc))
    result = run_experiment(cfg, workers=args.workers)
    outputs = []
    out_path = Path(args.out)
    _write(out_path, result.to_csv())
    outputs.append(str(out_path))
    if args.json:
        _write(Path(args.json), result.to_json())
        outputs.append(args.json)
    manifest_path = Path(args.manifest) if args.manifest else out_path.with_name(out_path.name + ".manifest.json")
    manifest = {
        "command": "simulate",
        "args": list(argv),
        "config": cfg.to_dict(),
        "seed": cfg.master_seed,
        "version": __version__,
        "started_at": started,
        "finished_at": _now(),
        "elapsed_seconds": result.elapsed,
        "outputs": outputs,
    }
    _write(manifest_path, _dumps(manifest) + "\n")
    failures = sum(r.failures for r in result.rows if r.parameter == cfg.param_names[0])
    out.write(f"wrote {len(result.rows)} rows to {out_path} ({failures} failed replications)\n")
    return EXIT_OK


def _write(path, text):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}", EXIT_USAGE) from exc


def cmd_replay(args, out=sys.stdout):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot load manifest {args.manifest}: {exc}", EXIT_USAGE) from exc
    return main([manifest["command"], *manifest["args"]], out=out)


# -- verify -------------------------------------------------------------------------

class _Checks:
    def __init__(self):
        self.rows = []

    def add(self, check, dist, point, ok, value, detail=""):
        self.rows.append((check, dist, point, bool(ok), value, detail))


def _random_points(rng, dist, k):
    if dist == "beta":
        return [BetaParams(*rng.uniform(2.2, 15.0, 2)) for _ in range(k)]
    lam = np.exp(rng.uniform(np.log(0.2), np.log(20.0), k))
    phi = np.exp(rng.uniform(np.log(0.6), np.log(20.0), k))
    return [GammaParams(a, b) for a, b in zip(lam, phi)]


def _verify_dist(dist, points, rng, checks):
    alpha0 = _POWER.get(dist)
    for p in points:
        tag = ", ".join(f"{v:.6g}" for v in p.as_array())
        # expected estimating functions vanish at the truth
        try:
            if dist == "beta":
                e = verify_score_zero("beta", p)
            else:
                e = verify_score_zero("power_gamma", p, alpha0)
            worst = max(abs(e[0]), abs(e[1]))
            checks.add("score_zero", dist, tag, worst <= 1e-6, worst)
        except Exception as exc:  # reported, not raised
            checks.add("score_zero", dist, tag, False, math.nan, type(exc).__name__)
        # J invertible and the sandwich identity
        try:
            if dist == "beta":
                pair = jk_matrices_beta(p)
                S = sandwich_covariance(pair)
                ref = np.array([beta_q(p.alpha, p.beta), beta_q(p.beta, p.alpha)])
                err = float(np.max(np.abs(np.diag(S) - ref) / ref))
            else:
                pair = jk_matrices_power_gamma(p, alpha0)
                S = sandwich_covariance(pair)
                err = float(np.max(np.abs(S - power_gamma_avar(p))))
            det = abs(np.linalg.det(pair.J))
            checks.add("j_invertible", dist, tag, det > 1e-12, det)
            checks.add("sandwich_identity", dist, tag, err <= 1e-9, err)
        except DomainError as exc:
            checks.add("j_invertible", dist, tag, False, math.nan, f"DomainError: {exc}")
            continue
        # closed-form estimates solve the modified equations
        n = int(rng.choice([2, 5, 50]))
        x = _draw_valid(dist, p, n, rng)
        while not well_spread(x):
            x = _draw_valid(dist, p, n, rng)
        try:
            if dist == "beta":
                rep = mmle_beta(x)
                res = modified_eq_residuals("beta", rep.params, x)
            else:
                rep = mmle_power_gamma(x, alpha0)
                res = modified_eq_residuals("power_gamma", rep.params, x, alpha0)
            worst = float(np.max(np.abs(res)))
            checks.add("residual_oracle", dist, tag, worst <= 1e-8, worst, f"n={n}")
        except DegenerateSample:
            checks.add("residual_oracle", dist, tag, False, math.nan, "degenerate sample")


def _draw_valid(dist, p, n, rng):
    seed = int(rng.integers(0, 2**63))
    if dist == "beta":
        return sample_beta(p, n, derive_seed(seed))
    return sample_generalized_gamma(GeneralizedGammaParams(p.lam, p.phi, _POWER[dist]), n, derive_seed(seed))


def cmd_verify(args, parser, out=sys.stdout):
    if args.points < 1:
        parser.error("--points must be a positive integer")
    rng = np.random.default_rng(args.seed)
    dists = [args.dist] if args.dist else list(DISTS)
    checks = _Checks()
    for dist in dists:
        points = _random_points(rng, dist, args.points)
        if args.include_invalid and dist == "beta":
            points += [BetaParams(1.5, 3.0), BetaParams(3.0, 1.5)]
        _verify_dist(dist, points, rng, checks)
    # worst value: largest error, or smallest |det J| for the invertibility check
    summary = {}
    for check, dist, _pt, ok, value, _d in checks.rows:
        first = math.inf if check == "j_invertible" else 0.0
        s = summary.setdefault((check, dist), [0, 0, first])
        s[0] += 1
        s[1] += ok
        if math.isfinite(value):
            s[2] = min(s[2], value) if check == "j_invertible" else max(s[2], value)
    out.write(f"{'check':<18} {'dist':<16} {'passed':>9}  worst\n")
    for (check, dist), (tot, good, worst) in summary.items():
        status = "PASS" if good == tot else "FAIL"
        out.write(f"{check:<18} {dist:<16} {good:>4}/{tot:<4}  {worst:.3g}  {status}\n")
    failed = [r for r in checks.rows if not r[3]]
    if failed:
        out.write("\nfailed checks:\n")
        for check, dist, pt, _ok, value, detail in failed:
            out.write(f"  {check:<18} {dist:<16} ({pt})  value={value:.3g}  {detail}\n")
        return EXIT_FAIL
    return EXIT_OK


# -- entry point ---------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="mmle", description="Closed-form modified maximum likelihood estimation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    e = sub.add_parser("estimate", help="fit a distribution to a data file")
    e.add_argument("--dist", choices=DISTS, required=True)
    e.add_argument("--input", required=True, help="single-column file, '#' comments ignored")
    e.add_argument("--method", choices=("mmle", "mle", "both"), default="mmle")
    e.add_argument("--format", choices=("json", "text"), default="json")
    e.set_defaults(subparser=e)

    s = sub.add_parser("simulate", help="Monte Carlo bias/RMSE sweep")
    s.add_argument("--dist", choices=DISTS, required=True)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--phi", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--n-grid", type=_n_grid, default=_n_grid("10:100:5"))
    s.add_argument("--reps", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--estimators", type=_estimators, default=("mmle", "mle"))
    s.add_argument("--out", required=True, help="CSV output path")
    s.add_argument("--json", help="optional JSON output path")
    s.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    s.add_argument("--workers", type=int, help="worker threads (default: CPU count, capped by MMLE_THREADS)")
    s.add_argument("--include-flagged", action="store_true",
                   help="keep beta replications with closed-form estimates <= 2 in the aggregates")
    s.set_defaults(subparser=s)

    v = sub.add_parser("verify", help="numerical checks of the estimator identities")
    v.add_argument("--dist", choices=DISTS)
    v.add_argument("--points", type=int, default=25)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--include-invalid", action="store_true",
                   help="add beta points with a shape below 2")
    v.set_defaults(subparser=v)

    r = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    r.add_argument("manifest")
    r.set_defaults(subparser=r)
    return p


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = args.subparser
    try:
        if args.command == "estimate":
            return cmd_estimate(args, out)
        if args.command == "simulate":
            return cmd_simulate(args, argv[1:], sub, out)
        if args.command == "verify":
            return cmd_verify(args, sub, out)
        return cmd_replay(args, out)
    except InputError as exc:
        print(f"mmle: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
