"""Command-line harness.

Every run writes a CSV (two ``#`` header lines with the library version and
the resolved configuration, then RFC 4180 rows) and, unless streaming to
stdout, a JSON summary next to it.  Exit codes: 0 success, 2 refused input,
1 internal error, 64 usage error.
"""

import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from circle_lab import __version__
from circle_lab.cache import atomic_write, cached_representation_table
from circle_lab.errors import PreconditionError
from circle_lab.exponents import FormParams
from circle_lab.parallel import ThreadMap

EXIT_OK, EXIT_INTERNAL, EXIT_REFUSED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def fmt(v):
    """CSV/JSON cell text: exact rationals as num/den, floats as shortest round-trip."""
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if v is None:
        return ""
    return str(v)


def _ints(text):
    return [int(t) for t in str(text).split(",") if t.strip()]


def _floats(text):
    return [float(Fraction(t)) for t in str(text).split(",") if t.strip()]


class Result:
    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []
        self.summary = {}

    def add(self, *row):
        self.rows.append([fmt(v) for v in row])


# ----------------------------------------------------------------- commands


def cmd_exponents(a, pmap):
    from circle_lab import exponents as ex

    if a.table1 or a.k is None:
        res = Result(["k", "d0", "d0_decimal", "d0_star", "l0", "tau"])
        for k, d0, star, l0 in ex.table1():
            res.add(k, d0, float(d0), star, l0, ex.tau(k))
        res.summary["d0_star"] = [r[3] for r in res.rows]
        return res
    if a.d is None:
        d0, l0 = ex.d0_with_index(a.k)
        res = Result(["k", "d0", "d0_decimal", "d0_star", "l0", "tau"])
        res.add(a.k, d0, float(d0), ex.d0_star(a.k), l0, ex.tau(a.k))
        return res
    b = ex.exponent_budget(FormParams(a.k, a.d))
    res = Result(["k", "d", "d0", "d0_star", "l0", "tau", "delta0", "delta0_decimal", "delta0_regime",
                  "p0", "p0_decimal", "gamma"])
    res.add(a.k, a.d, b.d0, b.d0_star, b.l0, b.tau, b.delta0, float(b.delta0), b.delta0_regime,
            b.p0, None if b.p0 is None else float(b.p0), b.gamma)
    return res


def cmd_repcount(a, pmap):
    table, hit = cached_representation_table(FormParams(a.k, a.d), a.lambda_max, a.cache_dir, pmap=pmap)
    res = Result(["lambda", "count"])
    for lam, c in enumerate(table.as_ints()):
        res.add(lam, c)
    res.summary.update(cache_hit=hit, lambda_max=a.lambda_max)
    return res


def cmd_maximal(a, pmap):
    from circle_lab.lattice import GridFunction, empirical_lp_ratio, maximal_function

    spec = json.loads(Path(a.input).read_text())
    d, box = int(spec["d"]), int(spec["box"])
    if a.d is not None and a.d != d:
        raise PreconditionError("--d disagrees with the grid file")
    params = FormParams(a.k, d)
    f = GridFunction.from_triples(d, box, spec["values"])
    lams = _ints(a.lambdas)
    g = maximal_function(f, lams, params)
    res = Result([f"x{j + 1}" for j in range(d)] + ["value"])
    for pos in np.argwhere(g.values.real != 0):
        res.add(*[int(p) - g.box for p in pos], float(g.values[tuple(pos)].real))
    res.summary["box"] = g.box
    if a.p is not None:
        res.summary["lp_ratio_lower_bound"] = empirical_lp_ratio(f, a.p, lams, params)
    return res


def cmd_gauss(a, pmap):
    from math import gcd

    from circle_lab.expsum import gauss_fourier_check, gauss_sum

    units = [x for x in range(a.q) if gcd(x, a.q) == 1] if a.a is None else [a.a]
    if a.fourier_check:
        res = Result(["q", "a", "m", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_diff"])
        worst = 0.0
        for u in units:
            for m in range(a.q):
                lhs, rhs = gauss_fourier_check(a.q, u, m, a.k)
                worst = max(worst, abs(lhs - rhs))
                res.add(a.q, u, m, lhs.real, lhs.imag, rhs.real, rhs.imag, abs(lhs - rhs))
        res.summary["max_abs_diff"] = worst
        return res
    bs = range(a.q) if a.b is None else [a.b]
    res = Result(["q", "a", "b", "k", "re", "im", "abs"])
    for u in units:
        for b in bs:
            g = gauss_sum(a.q, u, b, a.k)
            res.add(g.q, g.a, g.b, g.k, g.value.real, g.value.imag, abs(g.value))
    return res


def cmd_meanvalue(a, pmap):
    from circle_lab import expsum
    from circle_lab.arcs import dissect
    from circle_lab.rng import SplitMix64

    Ns = _ints(a.n)
    if a.mode == "vinogradov":
        res = Result(["s", "k", "N", "J"])
        vals = [expsum.vinogradov_count(a.s, a.k, N) for N in Ns]
        for N, J in zip(Ns, vals):
            res.add(a.s, a.k, N, J)
        if len(Ns) > 1:
            res.summary["slope"] = expsum.loglog_slope(Ns, vals)
        return res
    if a.mode == "identity":
        res = Result(["N", "theta", "lhs", "rhs_re", "rhs_im", "rel_diff"])
        worst = 0.0
        for N in Ns:
            for t in SplitMix64(a.seed).uniform(a.samples):
                lhs, rhs = expsum.mean_value_identity_check(float(t), a.s, a.l, a.k, N)
                rel = abs(lhs - rhs) / max(abs(lhs), 1e-300)
                worst = max(worst, rel)
                res.add(N, float(t), lhs.real, rhs.real, rhs.imag, rel)
        res.summary["max_rel_diff"] = worst
        return res
    if a.mode == "minor-sup":
        rows, slope = expsum.minor_arc_sweep(a.k, Ns, n_theta=a.samples, seed=a.seed, pmap=pmap)
        res = Result(["N", "sup_abs_S"])
        for N, v in rows:
            res.add(N, v)
        res.summary["slope"] = slope
        return res
    if a.mode == "integral":
        res = Result(["N", "r", "integral"])
        vals = [expsum.mean_value_integral_estimate(a.r, a.k, N, dissect(N, a.k), pmap=pmap) for N in Ns]
        for N, v in zip(Ns, vals):
            res.add(N, a.r, v)
        if len(Ns) > 1:
            res.summary["slope"] = expsum.loglog_slope(Ns, vals)
        return res
    raise UsageError(f"unknown mode {a.mode}")


def cmd_arcs(a, pmap):
    from circle_lab.arcs import dissect, major_total_measure

    d = dissect(a.n, a.k)
    res = Result(["a", "q", "center", "radius"])
    for aa, q, c, r in d.rows():
        res.add(aa, q, c, r)
    major, minor = major_total_measure(d)
    res.summary.update(count=len(d), major_measure=fmt(major), minor_measure=fmt(minor))
    return res


def _read_spec(path):
    from circle_lab.oscillatory import QuadratureSpec

    if path is None:
        return QuadratureSpec()
    entries = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return QuadratureSpec.from_mapping(entries)


def cmd_oscillatory(a, pmap):
    from circle_lab import oscillatory as osc

    spec = _read_spec(a.spec_file)
    if a.mode == "vn":
        v = osc.v_N(a.theta, a.xi, a.n, a.k, spec)
        res = Result(["N", "theta", "xi", "re", "im", "bound_ratio"])
        res.add(a.n, a.theta, a.xi, v.real, v.imag, osc.vN_bound_ratio(a.theta, a.xi, a.n, a.k, spec))
        return res
    params = FormParams(a.k, a.d)
    if a.mode == "jlambda":
        eta = _floats(a.eta) if a.eta else [0.0] * a.d
        v = osc.j_lambda(eta, a.lam, params, spec, a.method)
        res = Result(["lambda"] + [f"eta{j + 1}" for j in range(a.d)] + ["re", "im"])
        res.add(a.lam, *eta, v.real, v.imag)
        return res
    if a.mode == "sigma0-check":
        v = osc.sigma_hat([0.0] * a.d, a.lam, params, spec, a.method)
        ref = osc.sigma0(params)
        res = Result(["lambda", "sigma_hat_0", "reference", "rel_diff"])
        res.add(a.lam, v.real, ref, abs(v - ref) / ref)
        res.summary["rel_diff"] = abs(v - ref) / ref
        return res
    raise UsageError(f"unknown mode {a.mode}")


def cmd_multiplier(a, pmap):
    from circle_lab import multiplier as mu

    params = FormParams(a.k, a.d)
    if a.mode == "decay":
        lams = _ints(a.lambdas) if a.lambdas else [256, 1024, 4096]
        t = mu.dyadic_error_decay(lams, a.samples, a.q_max, params, a.seed, pmap=pmap)
        res = Result(["Lambda", "max_abs_error", "mean_abs_error", "lambdas"])
        for L, mx, mean, ls in t.rows:
            res.add(L, mx, mean, " ".join(map(str, ls)))
        res.summary["slope"] = t.slope
        return res
    if a.mode == "kernel-sup":
        from circle_lab.arcs import dissect

        res = Result(["N", "integral", "scaled"])
        for N in _ints(a.n):
            ks = mu.kernel_sup_bound(dissect(N, a.k), N, params, pmap=pmap)
            res.add(N, ks.integral, ks.scaled)
        return res
    if a.lam is None:
        raise UsageError("--lambda is required for this mode")
    N = a.lam ** (1 / a.k)
    xis = np.array([_floats(a.xi)]) if a.xi else mu.sample_frequencies(a.samples, a.d, a.seed, N)
    xcols = [f"xi{j + 1}" for j in range(a.d)]
    if a.mode == "ahat":
        res = Result(["lambda"] + xcols + ["re", "im"])
        for x in xis:
            v = mu.a_hat(a.lam, x, params)
            res.add(a.lam, *x, v.real, v.imag)
        return res
    if a.mode == "main":
        qm = a.q_max if a.q_max is not None else mu.default_q_max(a.lam, params)
        vals = pmap(lambda x: mu.main_term(a.lam, x, qm, params), list(xis))
        res = Result(["lambda", "q_max"] + xcols + ["re", "im"])
        for x, v in zip(xis, vals):
            res.add(a.lam, qm, *x, v.real, v.imag)
        return res
    if a.mode == "error":
        samples, summary = mu.error_field(a.lam, xis, a.q_max, params, pmap=pmap)
        res = Result(["lambda", "q_max"] + xcols + ["a_hat_re", "a_hat_im", "main_re", "main_im", "error_abs"])
        for s in samples:
            res.add(s.lam, s.q_max, *s.xi, s.a_hat.real, s.a_hat.imag, s.main.real, s.main.imag, abs(s.error))
        res.summary.update(summary)
        return res
    raise UsageError(f"unknown mode {a.mode}")


# ------------------------------------------------------------------ parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="CSV path, or - for stdout")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--cache-dir", default=None)
    common.add_argument("--seed", type=int, default=0)

    p = _Parser(prog="circle-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"circle_lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exponents", parents=[common])
    s.add_argument("--k", type=int)
    s.add_argument("--d", type=int)
    s.add_argument("--table1", action="store_true")
    s.set_defaults(func=cmd_exponents)

    s = sub.add_parser("repcount", parents=[common])
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--lambda-max", type=int, required=True)
    s.set_defaults(func=cmd_repcount)

    s = sub.add_parser("maximal", parents=[common])
    s.add_argument("--input", required=True, help="grid JSON with d, box and values [[index], re, im]")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int)
    s.add_argument("--lambdas", required=True, help="comma-separated lambda values")
    s.add_argument("--p", type=float)
    s.set_defaults(func=cmd_maximal)

    s = sub.add_parser("gauss", parents=[common])
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--a", type=int)
    s.add_argument("--b", type=int)
    s.add_argument("--fourier-check", action="store_true")
    s.set_defaults(func=cmd_gauss)

    s = sub.add_parser("meanvalue", parents=[common])
    s.add_argument("--mode", choices=["vinogradov", "identity", "minor-sup", "integral"], required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--s", type=int, default=2)
    s.add_argument("--l", type=int, default=2)
    s.add_argument("--r", type=float, default=10)
    s.add_argument("--n", required=True, help="N or comma-separated list of N")
    s.add_argument("--samples", type=int, default=20)
    s.set_defaults(func=cmd_meanvalue)

    s = sub.add_parser("arcs", parents=[common])
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.set_defaults(func=cmd_arcs)

    s = sub.add_parser("oscillatory", parents=[common])
    s.add_argument("--mode", choices=["vn", "jlambda", "sigma0-check"], required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--lambda", dest="lam", type=float, default=100.0)
    s.add_argument("--n", type=float, default=10.0)
    s.add_argument("--theta", type=float, default=0.0)
    s.add_argument("--xi", type=float, default=0.0)
    s.add_argument("--eta", default=None, help="comma-separated eta vector")
    s.add_argument("--method", choices=["theta", "coarea"], default="theta")
    s.add_argument("--spec-file", default=None, help="key=value lines: order, phase_budget, tail_tolerance")
    s.set_defaults(func=cmd_oscillatory)

    s = sub.add_parser("multiplier", parents=[common])
    s.add_argument("--mode", choices=["ahat", "main", "error", "decay", "kernel-sup"], required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--lambda", dest="lam", type=int)
    s.add_argument("--lambdas", default=None, help="dyadic Lambda list for decay mode")
    s.add_argument("--q-max", type=int, default=None)
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--xi", default=None, help="single comma-separated xi instead of random samples")
    s.add_argument("--n", default="16,32", help="N list for kernel-sup mode")
    s.set_defaults(func=cmd_multiplier)
    return p


def _config(args):
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def render(args, res):
    buf = io.StringIO()
    buf.write(f"# circle_lab {__version__}\n")
    buf.write("# config " + json.dumps(_config(args), sort_keys=True, default=str) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(res.columns)
    w.writerows(res.rows)
    return buf.getvalue()


def _summary_json(args, res):
    doc = {"version": __version__, "command": args.command, "config": _config(args),
           "rows": len(res.rows), "summary": {k: fmt(v) if not isinstance(v, list) else v for k, v in res.summary.items()}}
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"circle-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        with ThreadMap(args.threads) as pmap:
            res = args.func(args, pmap)
        text = render(args, res)
        if args.out == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
        else:
            out = Path(args.out)
            atomic_write(out, text.encode())
            atomic_write(out.with_suffix(".json"), _summary_json(args, res).encode())
    except UsageError as exc:
        print(f"circle-lab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PreconditionError as exc:
        print(f"circle-lab: refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except Exception as exc:  # noqa: BLE001
        print(f"circle-lab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


def main():
    sys.exit(run())
