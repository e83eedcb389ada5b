"""Convergence of finite-N sigma to its scaled limit as N doubles."""
import argparse

from cauchygap.twode import scaled_limit_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--as", dest="a_values", type=float, nargs="+", default=[0.0, 1.0, 2.0])
    ap.add_argument("--y", type=float, nargs="+", default=[0.2, 0.5, 1.0])
    args = ap.parse_args()
    print("kind,a,y,N,deviation,ratio_to_previous")
    for kind in ("single", "double"):
        for a in args.a_values:
            for y in args.y:
                rep = scaled_limit_check(a, y, kind=kind)
                prev = None
                for N, d in zip(rep.Ns, rep.deviations):
                    ratio = "" if prev is None else f"{prev / d:.3f}"
                    print(f"{kind},{a:g},{y:g},{N},{d:.3e},{ratio}")
                    prev = d


if __name__ == "__main__":
    main()
