"""Command-line front end.

Every subcommand writes a JSON report to stdout (or ``--report``) and,
where there is sampled data, a CSV file to ``--out``.  Both carry the
SHA-256 of the resolved configuration and the tolerances in force.
Exit status is 0 on success, 1 on invalid input and 2 when a result is
flagged (non-convergence, out of domain, tolerance missed).
"""

import os

# cap BLAS pools before numpy loads
_THREADS = os.environ.get("SELFSIM_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
from concurrent.futures import ThreadPoolExecutor  # noqa: E402
import hashlib  # noqa: E402
import io  # noqa: E402
import json  # noqa: E402
import math  # noqa: E402
import sys  # noqa: E402

import numpy as np  # noqa: E402

from . import acceptance, canonical, coherent, pantograph, qseries  # noqa: E402
from .chain import ChainParams, hamdek, march_delay, solve_series  # noqa: E402
from .errors import NumericalFailure, PreconditionError  # noqa: E402
from .grid import GridFunction  # noqa: E402
from .spectral import discretize, lowest_eigenpairs, verify_arithmetic, verify_geometric  # noqa: E402

#: keys left out of the configuration hash (they do not change results)
_OUTPUT_KEYS = {"out", "report", "config", "vectors"}


class UsageError(PreconditionError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def threads():
    """Worker cap from ``SELFSIM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SELFSIM_THREADS", "1")))
    except ValueError:
        raise UsageError("SELFSIM_THREADS must be an integer") from None


# number formatting

def fmt(x):
    """17 significant digits; complex numbers as ``a+bj`` (parsable by ``complex``)."""
    if isinstance(x, (complex, np.complexfloating)):
        z = complex(x) + 0.0  # drops negative zeros
        if z.imag == 0:
            return format(z.real, ".17g")
        return f"{z.real:.17g}{z.imag:+.17g}j"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    return format(float(x) + 0.0, ".17g")


def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (str, type(None))):
        return obj
    return fmt(obj)


def config_hash(cfg):
    kept = {k: v for k, v in sorted(cfg.items()) if k not in _OUTPUT_KEYS and k != "handler"}
    blob = json.dumps(kept, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


class Emitter:
    """Writes reports and tables with the shared metadata header."""

    def __init__(self, cfg, tolerances):
        self.cfg = cfg
        self.hash = config_hash(cfg)
        self.tolerances = tolerances

    def header(self):
        tol = ",".join(f"{k}={fmt(v)}" for k, v in sorted(self.tolerances.items()))
        return f"# selfsim {self.cfg['command']} config_sha256={self.hash} tolerances={tol or 'none'}"

    def csv(self, columns, data):
        path = self.cfg.get("out")
        if not path:
            return
        buf = io.StringIO()
        buf.write(self.header() + "\n")
        buf.write(",".join(columns) + "\n")
        for row in zip(*data):
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())

    def report(self, result, flagged=False):
        doc = {
            "command": self.cfg["command"],
            "config_sha256": self.hash,
            "tolerances": _encode(self.tolerances),
            "flagged": bool(flagged),
            "result": _encode(result),
        }
        text = json.dumps(doc, indent=2, ensure_ascii=False) + "\n"
        path = self.cfg.get("report")
        if path:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 2 if flagged else 0


def _numbers(s, kind):
    try:
        return [kind(v) for v in s.split(",") if v.strip()] if s else []
    except ValueError:
        raise UsageError(f"cannot parse {s!r} as comma-separated numbers") from None


def _complex_list(s):
    return _numbers(s, complex)


def _float_list(s):
    return _numbers(s, float)


def _complex(s):
    (z,) = _numbers(str(s), complex) or [0j]
    return z


def _grid(spec):
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise UsageError(f"grid must be lo:hi:n, got {spec!r}") from None


def _split(values):
    v = np.asarray(values)
    return [v.real, v.imag] if np.iscomplexobj(v) else [v, np.zeros_like(v, dtype=float)]


# subcommands

def cmd_qseries(cfg):
    fn, q = cfg["function"], cfg["q"]
    a, b, z = _complex_list(cfg["a"]), _complex_list(cfg["b"]), _complex(cfg["z"])
    em = Emitter(cfg, {"series_tail": qseries.SERIES_TAIL})
    if fn == "qbracket":
        return em.report({"value": qseries.qbracket(cfg["n"], q)})
    if fn == "qfactorial":
        return em.report({"value": qseries.qfactorial(cfg["n"], q)})
    if fn == "qpochhammer":
        n = np.inf if cfg["n"] is None else cfg["n"]
        val = qseries.qpochhammer(a[0] if a else 0.0, q, n)
    elif fn == "q_exp_small":
        val = qseries.q_exp_small(z, q, cfg["form"])
    elif fn == "q_exp_big":
        val = qseries.q_exp_big(z, q, cfg["form"])
    elif fn == "basic_phi":
        val = qseries.basic_phi(a, b, q, z)
    elif fn == "bilateral_psi":
        val = qseries.bilateral_psi(a, b, q, z)
    elif fn == "beta_integral":
        val = qseries.ramanujan_beta_integral(cfg["tau"], cfg["c"], q, cfg["method"])
    else:
        raise UsageError(f"unknown function {fn}")
    out = {"value": val.value, "est_error": val.est_error, "terms_used": val.terms_used, "in_domain": val.in_domain}
    return em.report(out, flagged=not val.in_domain)


def cmd_canon(cfg):
    alpha, state = _complex(cfg["alpha"]), cfg["state"]
    if state == "canonical":
        fv = canonical.canonical_cs(alpha, cfg["nmax"])
    elif state == "parity":
        fv = canonical.parity_cs(alpha, cfg["phi"], cfg["nmax"])
    elif state == "yurke_stoler":
        fv = canonical.yurke_stoler(alpha, cfg["nmax"])
    elif state == "root":
        fv = canonical.root_superposition(alpha, cfg["M"], cfg["l"], cfg["nmax"])
    else:
        raise UsageError(f"unknown state {state}")
    x = _grid(cfg["grid"]) if cfg["grid"] else canonical.default_grid(alpha)
    psi = canonical.synthesize(fv, x)
    em = Emitter(cfg, {})
    em.csv(["x", "re_psi", "im_psi"], [x, *_split(psi)])
    m = canonical.moments(fv)
    out = {"nmax": fv.nmax, "norm": fv.norm(), "moments": {
        "mean_x": m.mean_x, "mean_p": m.mean_p, "sigma_xx": m.sigma_xx,
        "sigma_pp": m.sigma_pp, "sigma_xp": m.sigma_xp, "delta": m.delta}}
    if state == "parity":
        out["delta_closed_form"] = canonical.delta_phi_closed(alpha, cfg["phi"])
    return em.report(out)


def _chain_params(cfg):
    mu = _float_list(cfg["mu"])
    if not mu:
        if cfg["N"] != 1:
            raise UsageError("give --mu for N > 1")
        mu = [cfg["omega"]]
    seeds = tuple(_float_list(cfg["seeds"])) or None
    return ChainParams(cfg["N"], cfg["q"], tuple(mu), parity=cfg["parity"], seeds=seeds)


def cmd_chain(cfg):
    tol = cfg["tol"]
    sol = solve_series(_chain_params(cfg), cfg["order"])
    grid = march_delay(sol, cfg["x_max"], cfg["step"])
    _, res = grid.residual(-cfg["x_max"], cfg["x_max"])
    worst = float(np.max(np.abs(res)))
    em = Emitter(cfg, {"chain_residual": tol})
    if cfg["action"] == "solve":
        u = grid.potential()
        cols = ["x"] + [f"f_{j}" for j in range(sol.N)] + ["u"]
        em.csv(cols, [grid.x, *grid.f[: sol.N], u.values])
        i0 = int(np.argmin(np.abs(grid.x)))
        out = {"N": sol.N, "q": sol.q, "omega": sol.omega, "nu": sol.nu, "lambda": list(sol.lam),
               "u_at_0": u.values[i0], "points": grid.x.size, "max_residual": worst}
    else:
        out = {"max_residual": worst, "interval": [-cfg["x_max"], cfg["x_max"]], "passed": worst < tol}
    return em.report(out, flagged=worst >= tol)


def cmd_spectrum(cfg):
    k = cfg["levels"]
    x = _grid(cfg["grid"])
    if cfg["potential"] == "hamdek":
        u = GridFunction.from_samples(x, hamdek(x))
    elif cfg["potential"] == "harmonic":
        u = GridFunction.from_samples(x, x * x)
    else:
        sol = solve_series(_chain_params(cfg), cfg["order"])
        u = march_delay(sol, cfg["x_max"], cfg["step"]).potential()
    rep, vecs = lowest_eigenpairs(discretize(u), k)
    E = rep.eigenvalues
    out = {"eigenvalues": E, "eigen_residuals": rep.per_level_residual, "grid": rep.grid_meta}
    flagged = False
    tol = cfg["tol"]
    if cfg["potential"] == "chain" and k >= 2 * cfg["N"]:
        fit = verify_geometric(rep, cfg["q"], cfg["N"], tol)
        out["model"] = {"name": fit.model, "params": fit.fit_params, "residuals": fit.per_level_residual}
        flagged = fit.grid_meta["mismatch"]
    elif cfg["potential"] == "hamdek" and k >= 3:
        fit = verify_arithmetic(E[1:], tol)
        out["model"] = {"name": fit.model, "params": fit.fit_params, "residuals": fit.per_level_residual,
                        "isolated_level": E[0]}
        flagged = fit.grid_meta["mismatch"]
    em = Emitter(cfg, {"model": tol})
    if cfg["vectors"]:
        sub = dict(cfg, out=cfg["vectors"])
        Emitter(sub, {"model": tol}).csv(["x"] + [f"psi_{i}" for i in range(k)], [vecs[0].x] + [v.values for v in vecs])
    return em.report(out, flagged=flagged)


def cmd_pantograph(cfg):
    alpha, q, beta = _complex(cfg["alpha"]), cfg["q"], cfg["beta"]
    alpha = alpha.real if alpha.imag == 0 else alpha
    kind = cfg["kind"]
    em = Emitter(cfg, {"seed": pantograph.SEED_TOL})
    if kind == "free":
        x = _grid(cfg["grid"])
        psi = pantograph.free_cs_quadrature(alpha, q, [beta], cfg["branch"], x)
        res = float(pantograph.generalized_residual(alpha, q, [beta], cfg["branch"], x).max())
        em.csv(["x", "re_psi", "im_psi"], [x, *_split(psi)])
        return em.report({"max_residual": res, "norm_exponent": pantograph.norm_exponent(alpha, q, [beta])})
    p = pantograph.PantographProblem(alpha, q, beta, kind=kind, gamma=cfg["gamma"], branch=cfg["branch"])
    if kind == "retarded":
        g = pantograph.march_retarded(p, cfg["x_max"], cfg["step"])
        flagged = False
        extra = {}
    else:
        g = pantograph.march_advanced(p, cfg["x_min"], cfg["x_max"], cfg["step"])
        flagged = not g.seed_consistent
        extra = {"kappa": p.kappa, "seed_residual": g.seed_residual, "seed_consistent": g.seed_consistent}
        lo, hi = cfg["fit"] if cfg["fit"] else (g.x[-1] / 8, g.x[-1] / 2)
        extra["fitted_exponent"] = pantograph.fit_decay_exponent(g, lo, hi)
    _, rel = pantograph.residual(p, g)
    em.csv(["x", "re_psi", "im_psi"], [g.x, *_split(g.values)])
    return em.report(dict(extra, max_residual=float(rel.max()), points=g.n), flagged=flagged)


def _coeff_table(st):
    return {int(n): c for n, c in zip(st.support, st.coeffs)}


def cmd_coherent(cfg):
    alpha, q, omega, kind = _complex(cfg["alpha"]), cfg["q"], cfg["omega"], cfg["kind"]
    alpha = alpha.real if alpha.imag == 0 else alpha
    E = _float_list(cfg["E"])
    em = Emitter(cfg, {"coeff_tol": coherent.COEFF_TOL, "tail_flag": coherent.TAIL_FLAG})
    if kind == "coordinate":
        sol = solve_series(ChainParams(1, q, (omega,)), cfg["order"])
        grid = march_delay(sol, cfg["x_max"], cfg["step"])
        _, vecs = lowest_eigenpairs(discretize(grid.potential()), cfg["levels"])
        cs = coherent.coordinate_cs(grid, vecs, alpha, negative_q=cfg["negative_q"], window=cfg["window"])
        em.csv(["x", "re_psi", "im_psi"], [cs.psi.x, *_split(cs.psi.values)])
        out = {"residual": cs.residual, "truncation_dominated": cs.truncation_dominated,
               "coefficients": _coeff_table(cs.fock)}
        return em.report(out, flagged=cs.truncation_dominated)
    if kind == "harmonic_limit":
        rep = coherent.harmonic_limit_check(alpha, cfg["N"], omega, l=cfg["l"])
        out = {"eps": rep.eps, "distance": rep.distance, "rate": rep.rate, "support_ok": rep.support_ok}
        return em.report(out, flagged=not (rep.support_ok and rep.distance[-1] < 1e-6))
    if kind == "qcoh":
        st = coherent.qcoherent_fock(alpha, q, omega, cfg["nmax"])
    elif kind == "qgt1":
        st = coherent.qcoherent_fock_qgt1(alpha, q, omega, cfg["nmax"])
    elif kind == "negative_q":
        st = coherent.negative_q_fock(alpha, q, omega, cfg["nmax"])
    elif kind == "general":
        if not E:
            raise UsageError("general needs --E")
        st = coherent.general_N_fock(alpha, E, q, cfg["l"], cfg["nmax"])
    elif kind == "bilateral":
        st = coherent.bilateral_fock(alpha, cfg["lam"], E or None, q, cfg["nmax"], None if E else omega / (1 - q * q))
    else:
        raise UsageError(f"unknown kind {kind}")
    out = {"kind": st.kind, "in_domain": st.in_domain, "norm_const": st.norm_const,
           "params": {k: v for k, v in st.params.items()}, "coefficients": _coeff_table(st)}
    if kind in ("qcoh", "qgt1"):
        out["eigen_residual"] = coherent.eigen_residual(st, q, omega)
    elif kind == "bilateral":
        out["raise_residual"] = coherent.bilateral_raise_residual(st)
    return em.report(out, flagged=not st.in_domain)


def cmd_verify_all(cfg):
    checks = acceptance.CHECKS
    if cfg["only"]:
        wanted = {int(v) for v in cfg["only"].split(",")}
        checks = [c for i, c in enumerate(checks, 1) if i in wanted]
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(lambda c: c(), checks))
    for r in results:
        print(r.line(), file=sys.stderr)
    # timings are left out so re-runs are byte identical
    rows = [{"number": r.number, "name": r.name, "passed": r.passed, "value": r.value,
             "threshold": r.threshold, "detail": r.detail} for r in results]
    ok = all(r.passed for r in results)
    em = Emitter(cfg, {r.name: r.threshold for r in results})
    return em.report({"criteria": rows, "passed": ok}, flagged=not ok)


# parser

def _common(p):
    p.add_argument("--config", help="JSON file with option values (flags take precedence)")
    p.add_argument("--report", help="write the JSON report here instead of stdout")


def _chain_opts(p, x_max=40.0):
    p.add_argument("--N", type=int, default=1)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--omega", type=float, default=1.0, help="chain constant for N = 1")
    p.add_argument("--mu", default="", help="comma-separated chain constants")
    p.add_argument("--parity", default="antisymmetric", choices=["antisymmetric", "general"])
    p.add_argument("--seeds", default="", help="f_j(0) values for --parity general")
    p.add_argument("--order", type=int, default=120)
    p.add_argument("--x-max", type=float, default=x_max)
    p.add_argument("--step", type=float, default=0.01)


def build_parser():
    parser = _Parser(prog="selfsim", description="Self-similar potentials and q-coherent states.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("qseries", help="evaluate q-special functions")
    p.add_argument("action", choices=["eval"])
    p.add_argument("--function", required=True, choices=[
        "qpochhammer", "qbracket", "qfactorial", "q_exp_small", "q_exp_big",
        "basic_phi", "bilateral_psi", "beta_integral"])
    p.add_argument("--q", type=float, required=True, help="base")
    p.add_argument("--a", default="", help="comma-separated upper parameters")
    p.add_argument("--b", default="", help="comma-separated lower parameters")
    p.add_argument("--z", default="0")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--form", default="product", choices=["product", "series"])
    p.add_argument("--method", default="closed", choices=["closed", "quadrature"])
    _common(p)
    p.set_defaults(handler=cmd_qseries)

    p = sub.add_parser("canon", help="oscillator coherent states and moments")
    p.add_argument("--state", default="canonical", choices=["canonical", "parity", "yurke_stoler", "root"])
    p.add_argument("--alpha", default="1")
    p.add_argument("--phi", type=float, default=math.pi / 2)
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--grid", default="", help="lo:hi:n, e.g. --grid=-6:6:601")
    p.add_argument("--out", help="CSV of x, Re psi, Im psi")
    _common(p)
    p.set_defaults(handler=cmd_canon)

    p = sub.add_parser("chain", help="solve a q-closed dressing chain")
    p.add_argument("action", choices=["solve", "residual"])
    _chain_opts(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", help="CSV of x, f_j, u")
    _common(p)
    p.set_defaults(handler=cmd_chain)

    p = sub.add_parser("spectrum", help="bound states of a potential")
    p.add_argument("--potential", default="hamdek", choices=["hamdek", "chain", "harmonic"])
    p.add_argument("--levels", type=int, default=5)
    p.add_argument("--grid", default="-12:12:4000", help="lo:hi:n for hamdek and harmonic, e.g. --grid=-12:12:4000")
    _chain_opts(p)
    p.add_argument("--tol", type=float, default=2e-3)
    p.add_argument("--vectors", help="CSV of eigenvectors")
    _common(p)
    p.set_defaults(handler=cmd_spectrum)

    p = sub.add_parser("pantograph", help="pantograph equations")
    p.add_argument("--kind", default="retarded", choices=["retarded", "advanced", "free"])
    p.add_argument("--alpha", default="1")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=1.0, help="psi(0) for the retarded equation")
    p.add_argument("--branch", type=int, default=0)
    p.add_argument("--x-min", type=float, default=0.05)
    p.add_argument("--x-max", type=float, default=10.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--fit", type=float, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--grid", default="-20:20:401", help="lo:hi:n for --kind free, e.g. --grid=-20:20:401")
    p.add_argument("--out", help="CSV of x, Re psi, Im psi")
    _common(p)
    p.set_defaults(handler=cmd_pantograph)

    p = sub.add_parser("coherent", help="q-coherent states")
    p.add_argument("--kind", default="qcoh", choices=[
        "qcoh", "qgt1", "negative_q", "general", "bilateral", "coordinate", "harmonic_limit"])
    p.add_argument("--alpha", default="0.5")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--E", default="", help="comma-separated lowest levels of the towers")
    p.add_argument("--N", type=int, default=2, help="tower count for harmonic_limit")
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--nmax", type=int, default=None)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--order", type=int, default=120)
    p.add_argument("--x-max", type=float, default=80.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--window", type=float, default=None)
    p.add_argument("--negative-q", action="store_true")
    p.add_argument("--out", help="CSV of x, Re psi, Im psi (coordinate)")
    _common(p)
    p.set_defaults(handler=cmd_coherent)

    p = sub.add_parser("verify-all", help="run the acceptance checks")
    p.add_argument("--only", default="", help="comma-separated check numbers")
    _common(p)
    p.set_defaults(handler=cmd_verify_all)
    return parser


def parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("no subcommand given")
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                conf = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        sp = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = set(conf) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        sp.set_defaults(**conf)
        args = parser.parse_args(argv)
    return vars(args)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        build_parser().print_help(sys.stderr)
        return 1
    try:
        cfg = parse(argv)
        return cfg["handler"](cfg)
    except PreconditionError as exc:
        print(f"selfsim: error: {exc}", file=sys.stderr)
        return 1
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"selfsim: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
