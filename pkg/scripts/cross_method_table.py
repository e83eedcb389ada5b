"""Largest disagreement between gap routes over a grid of (N, a)."""
import argparse

import numpy as np

from cauchygap import twode
from cauchygap.checks import coupled_available
from cauchygap.errors import NumericError
from cauchygap.ensemble import DoubleTail, FiniteCauchyKernel, SingleTail
from cauchygap.fredholm import det_gap
from cauchygap.params import EnsembleParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--Ns", type=int, nargs="+", default=[1, 2, 3, 5, 8])
    ap.add_argument("--as", dest="a_values", type=float, nargs="+", default=[0.0, 0.3, 1.0, 2.0, 3.5])
    ap.add_argument("--order", type=int, default=128)
    args = ap.parse_args()
    s = np.linspace(0.2, 10.0, 40)
    print("kind,N,a,method,max_abs_diff_vs_fredholm")
    for kind, integ, tail in (("single", twode.integrate_single, SingleTail),
                              ("double", twode.integrate_double, DoubleTail)):
        for N in args.Ns:
            for a in args.a_values:
                p = EnsembleParams(N, a)
                ref = np.array([det_gap(FiniteCauchyKernel(p), tail(v), args.order) for v in s])
                methods = ["sigma-ode"] + (["coupled"] if coupled_available(p) else [])
                for m in methods:
                    try:
                        diff = f"{np.max(np.abs(integ(p, grid=s, method=m).E - ref)):.3e}"
                    except NumericError as exc:
                        diff = f"failed ({type(exc).__name__})"
                    print(f"{kind},{N},{a:g},{m},{diff}")


if __name__ == "__main__":
    main()
