"""Seeds whose Monte Carlo gap estimate misses the exact value by more than 3 standard errors."""
import argparse
import time

from cauchygap.checks import mc_calibration
from cauchygap.params import EnsembleParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--Ns", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--as", dest="a_values", type=float, nargs="+", default=[0.0, 1.0, 3.0])
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    cases = (("single", 0.0), ("single", 1.0), ("double", 0.5), ("double", 2.0))
    print("N,a,kind,s,misses,seeds,seconds")
    for N in args.Ns:
        for a in args.a_values:
            t0 = time.perf_counter()
            misses, n = mc_calibration(EnsembleParams(N, a), cases, range(args.seeds), threads=args.threads)
            dt = time.perf_counter() - t0
            for (kind, s), m in misses.items():
                print(f"{N},{a:g},{kind},{s:g},{m},{n},{dt:.1f}")


if __name__ == "__main__":
    main()
