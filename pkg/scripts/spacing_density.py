"""Spacing density at unit mean spacing against the Wigner surmise for beta = 2."""
import math

import numpy as np

from cauchygap.twode import spacing_pdf


def main():
    x = np.linspace(0.05, 3.0, 60)
    p2 = spacing_pdf(x)
    surmise = 32 / math.pi ** 2 * x ** 2 * np.exp(-4 * x ** 2 / math.pi)
    print("x,p2,wigner_surmise,diff")
    for xi, a, b in zip(x, p2, surmise):
        print(f"{xi:.4f},{a:.8f},{b:.8f},{a - b:+.2e}")
    xx = np.linspace(1e-4, 6.0, 12001)
    pp = spacing_pdf(xx)
    print(f"# mass={np.trapezoid(pp, xx):.8f} mean={np.trapezoid(xx * pp, xx):.8f}")


if __name__ == "__main__":
    main()
