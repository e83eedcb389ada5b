"""Command-line interface: CSV tables of gap probabilities and verification reports.

Exit codes: 0 ok, 1 verification failure, 2 usage error, 3 numeric failure.
"""

import argparse
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import __version__, checks, painleve, twode
from .ensemble import (BesselKernel, DoubleTail, FiniteCauchyKernel, ScaledDouble, ScaledSingle, SingleTail,
                       exact_gap_double, exact_gap_single)
from .errors import DomainError, NumericError
from .fredholm import det_gap, resolvent_at_endpoints
from .params import EnsembleParams

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
METHOD_CHOICES = ("fredholm", "coupled", "sigma", "closed-form", "all")
FMT = "%.15e"


@dataclass(frozen=True)
class RunSpec:
    command: str
    params: EnsembleParams
    s_min: float = 0.2
    s_max: float = 10.0
    steps: int = 50
    method: str = "all"
    quad_order: int = 128
    rel_tol: float = 1e-6
    out: str | None = None
    seed: int = 0
    rho: float = 1.0
    threads: int = 1
    kind: str = "single"
    perturb: float = 0.0
    mc_seeds: int = 20
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.steps < 1:
            raise DomainError(f"grid must be non-empty, got --steps {self.steps}")
        if not self.s_max >= self.s_min:
            raise DomainError(f"need s_max >= s_min, got {self.s_min}, {self.s_max}")
        if not (self.rel_tol > 0 and self.rho > 0):
            raise DomainError("tolerances and rho must be positive")
        if self.threads < 1 or self.quad_order < 4:
            raise DomainError("threads must be >= 1 and quad order >= 4")

    def grid(self):
        return np.linspace(self.s_min, self.s_max, self.steps)


@dataclass
class Table:
    columns: list
    rows: list
    meta: list = field(default_factory=list)

    def render(self, spec: RunSpec) -> str:
        buf = io.StringIO()
        buf.write(f"# cauchygap {__version__}\n# command: {spec.command}\n")
        buf.write(f"# N={spec.params.N} a={spec.params.a!r} s_min={spec.s_min!r} s_max={spec.s_max!r} "
                  f"steps={spec.steps} method={spec.method} quad_order={spec.quad_order} rel_tol={spec.rel_tol!r} "
                  f"seed={spec.seed} rho={spec.rho!r}\n")
        for line in self.meta:
            buf.write(f"# {line}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(v if isinstance(v, str) else FMT % v for v in row) + "\n")
        return buf.getvalue()


def _pool_map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _methods(spec: RunSpec, double: bool):
    p = spec.params
    if spec.method != "all":
        if spec.method == "closed-form" and p.N > 2:
            raise DomainError("closed forms exist for N = 1, 2 only")
        if spec.method == "coupled" and not checks.coupled_available(p):
            raise DomainError("the coupled system needs a = 0 or a > 1/2; use --method sigma")
        return [spec.method], []
    chosen, skipped = ["fredholm", "sigma"], []
    (chosen if checks.coupled_available(p) else skipped).insert(1, "coupled")
    (chosen if p.N <= 2 else skipped).append("closed-form")
    return chosen, skipped


def _gap_table(spec: RunSpec, double: bool) -> tuple:
    p = spec.params
    s = spec.grid()
    if double and not s[0] > 0:
        raise DomainError("the double tail needs s_min > 0")
    methods, skipped = _methods(spec, double)
    E, sigma, R0 = {}, {}, {}
    failed = []
    kernel = FiniteCauchyKernel(p)
    for m in methods:
        if m == "fredholm":
            def solve(x):
                data = resolvent_at_endpoints(kernel, DoubleTail(x) if double else SingleTail(x), order=spec.quad_order)
                i = 1 if double else 0
                return data.E, (1 + x * x) * data.R[i], abs(data.q[1] * data.p[1]) / x if double else math.nan
            res = np.array(_pool_map(solve, s, spec.threads))
            E[m], sigma[m], R0[m] = res[:, 0], res[:, 1], res[:, 2]
        elif m == "closed-form":
            fn = exact_gap_double if double else exact_gap_single
            res = np.array([fn(p, x)[:2] for x in s])
            E[m], sigma[m] = res[:, 0], res[:, 1]
        else:
            method = "coupled" if m == "coupled" else "sigma-ode"
            integ = twode.integrate_double if double else twode.integrate_single
            s_end = float(s[0])
            try:
                g = integ(p, s_start=max(twode.S_START, 2 * float(s[-1])), s_end=s_end, grid=s, method=method)
            except NumericError as exc:
                # under --method all one unstable route should not hide the others
                if spec.method != "all" or m != "coupled":
                    raise
                failed.append(f"dropped coupled: {exc}")
                continue
            E[m], sigma[m] = g.E, g.sigma
            if double:
                R0[m] = g.tracks["R0"]
    methods = [m for m in methods if m in E]
    cols = ["s"] + [f"E2_{m}" for m in methods] + ["sigma"] + (["R0"] if double else []) + ["max_abs_diff"]
    ref = methods[0]
    stack = np.vstack([E[m] for m in methods])
    diff = stack.max(axis=0) - stack.min(axis=0)
    r0 = next((R0[m] for m in methods if m in R0), None)
    rows = []
    for i, x in enumerate(s):
        row = [x] + [E[m][i] for m in methods] + [sigma[ref][i]]
        if double:
            row.append(r0[i] if r0 is not None else math.nan)
        rows.append(row + [diff[i]])
    meta = [f"sigma from {ref}"] + [f"skipped {m}: not available for these parameters" for m in skipped] + failed
    ok = spec.method != "all" or len(methods) < 2 or float(diff.max()) <= spec.rel_tol
    return Table(cols, rows, meta), ok


def cmd_gap_single(spec: RunSpec):
    """E2 of the one-sided tail (s, inf) by every available route."""
    return _gap_table(spec, double=False)


def cmd_gap_double(spec: RunSpec):
    """E2 of the two-sided tail |x| > s by every available route."""
    return _gap_table(spec, double=True)


def cmd_scaled(spec: RunSpec):
    """Scaled one-sided (tau_a) or symmetric (Bessel) gaps on a grid of physical x."""
    a, rho = spec.params.a, spec.rho
    x = spec.grid()
    if not x[0] > 0:
        raise DomainError("scaled grids need s_min > 0 (it is the physical x)")
    X = math.pi * rho * x
    kernel = BesselKernel(a, rho)
    if spec.kind == "single":
        g = twode.integrate_scaled_single(a, float(X[-1]) * 1.001, grid=X if X[0] > 1e-3 else None)
        g = g.resample(X)
        fred = _pool_map(lambda v: det_gap(kernel, ScaledSingle(v), order=spec.quad_order), x, spec.threads)
        cols = ["x", "tau", "E2_tau", "E2_fredholm", "series_ratio"]
        series = g.tracks["tau"] / twode.tau_leading(a, X)
        extra = []
        if a == 1.0:
            # a = 1 gap from the a = 0 curve: -(1/rho) dE_0/dx
            g0 = twode.integrate_scaled_single(0.0, float(X[-1]) * 1.01)
            extra = -math.pi * twode.centered_derivative(g0.resample(X), "E")
            cols.insert(4, "E2_identity")
        rows = []
        for i in range(x.size):
            row = [x[i], g.tracks["tau"][i], g.E[i], fred[i]]
            if a == 1.0:
                row.append(extra[i])
            rows.append(row + [series[i]])
        diff = np.max(np.abs(g.E - np.array(fred)))
        return Table(cols, rows, [f"max |E2_tau - E2_fredholm| = {diff:.3e}"]), diff <= spec.rel_tol
    if spec.kind != "double":
        raise DomainError(f"unknown kind {spec.kind!r}")
    g = twode.integrate_bessel(a, float(X[-1]) * 1.001, grid=X if X[0] >= twode.X0_BESSEL else None)
    g = g.resample(X)
    fred = _pool_map(lambda v: det_gap(kernel, ScaledDouble(v), order=spec.quad_order), x, spec.threads)
    rows = [[x[i], g.tracks["sigma1"][i], g.E[i], fred[i]] for i in range(x.size)]
    diff = np.max(np.abs(g.E - np.array(fred)))
    return Table(["x", "sigma1", "E2_bessel", "E2_fredholm"], rows,
                 ["sigma1 is evaluated at r = 2 pi rho x", f"max |E2_bessel - E2_fredholm| = {diff:.3e}"]), \
        diff <= spec.rel_tol


SPACING_CUTOFF = 5.0


def cmd_spacing(spec: RunSpec):
    """Nearest-neighbour spacing density p2(x) at unit mean spacing."""
    x = spec.grid()
    if not x[0] > 0:
        raise DomainError("spacing grid needs s_min > 0")
    fine = np.linspace(1e-4, SPACING_CUTOFF, 20001)
    tau1 = twode.integrate_scaled_single(1.0, math.pi * max(SPACING_CUTOFF, float(x[-1])) * 1.001)
    p2 = twode.spacing_pdf(x, tau1)
    pf = twode.spacing_pdf(fine, tau1)
    norm = simpson(pf, x=fine)
    mean = simpson(fine * pf, x=fine)
    # mass beyond the cutoff is E(0;(0,5);1), below 1e-9
    tail = float(tau1.resample([math.pi * SPACING_CUTOFF]).E[0])
    meta = [f"normalization={norm:.15e}", f"mean={mean:.15e}", f"truncated at x={SPACING_CUTOFF:g}, tail mass <= {tail:.3e}"]
    ok = abs(norm - 1) < 1e-3 and abs(mean - 1) < 1e-3
    return Table(["x", "p2"], [[a, b] for a, b in zip(x, p2)], meta), ok


def cmd_verify(spec: RunSpec):
    """Residual, first-integral, identity and Monte Carlo checks with pass/fail status."""
    rows = []
    found = checks.all_checks(spec.params, perturb=spec.perturb,
                              mc_seeds=range(spec.seed, spec.seed + spec.mc_seeds), threads=spec.threads)
    for c in found:
        rows.append([c.name.replace(",", ";"), c.value, c.tolerance, "pass" if c.passed else "FAIL"])
    ok = all(c.passed for c in found)
    meta = [f"perturb={spec.perturb!r}", f"{sum(c.passed for c in found)}/{len(found)} checks passed"]
    return Table(["check", "value", "tolerance", "status"], rows, meta), ok


def cmd_painleve_params(spec: RunSpec):
    """Painleve parameter sets for the given N and a."""
    p = spec.params
    rows = []
    for row in painleve.pvi_parameter_table(p):
        for label, pp in zip(("+", "-"), row.branches):
            rows.append(["single", str(row.row), label, pp.family, *pp.as_tuple()])
    sets = painleve.scaled_pv_params(p.a, p.N)
    for key, branches in sets.items():
        labels = ("-", "+") if len(branches) == 2 else ("",)
        for label, pp in zip(labels, branches):
            rows.append([key, "", label, pp.family, *pp.as_tuple()])
    c = painleve.canonical_coeffs_single(p)
    meta = [f"canonical A1={c.A1!r} A2={c.A2!r} A3={c.A3!r} A4={c.A4!r}"]
    return Table(["source", "row", "branch", "family", "alpha", "beta", "gamma", "delta"], rows, meta), True


COMMANDS = {
    "gap-single": cmd_gap_single,
    "gap-double": cmd_gap_double,
    "scaled": cmd_scaled,
    "spacing": cmd_spacing,
    "verify": cmd_verify,
    "painleve-params": cmd_painleve_params,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--N", type=int, default=1, help="matrix size (default 1)")
    common.add_argument("--a", type=float, default=0.0, help="weight parameter a >= 0 (default 0)")
    common.add_argument("--s-min", type=float, default=0.2, help="grid start; physical x for scaled/spacing (default 0.2)")
    common.add_argument("--s-max", type=float, default=10.0, help="grid end (default 10)")
    common.add_argument("--steps", type=int, default=50, help="number of grid points (default 50)")
    common.add_argument("--method", choices=METHOD_CHOICES, default="all", help="route for gap tables (default all)")
    common.add_argument("--quad-order", type=int, default=128, help="Gauss-Legendre order per piece (default 128)")
    common.add_argument("--rel-tol", type=float, default=1e-6, help="cross-check tolerance (default 1e-6)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0, help="first Monte Carlo seed (default 0)")
    common.add_argument("--rho", type=float, default=1.0, help="bulk density for scaled commands (default 1)")
    common.add_argument("--threads", type=int, default=1, help="worker pool size (default 1)")
    parser = argparse.ArgumentParser(prog="cauchygap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cauchygap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=COMMANDS[name].__doc__ or name)
        if name == "scaled":
            sp.add_argument("--kind", choices=("single", "double"), default="single",
                            help="(0, x) with tau_a, or (-x, x) with the Bessel system")
        if name == "verify":
            sp.add_argument("--perturb", type=float, default=0.0, help="offset injected into the tau identity check")
            sp.add_argument("--mc-seeds", type=int, default=20, help="Monte Carlo seeds (0 skips calibration)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = RunSpec(args.command, EnsembleParams(args.N, args.a), args.s_min, args.s_max, args.steps,
                       args.method, args.quad_order, args.rel_tol, args.out, args.seed, args.rho, args.threads,
                       getattr(args, "kind", "single"), getattr(args, "perturb", 0.0), getattr(args, "mc_seeds", 20))
        table, ok = COMMANDS[args.command](spec)
    except DomainError as exc:
        print(f"cauchygap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"cauchygap: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = table.render(spec)
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
