"""The adaptive self-labeling loss, piece by piece.

Run:  python3 demos/loss_landscape.py [--plot out.png]
Prints the two log-argument pieces, the loss surface over (q, nu), and
the gradient signs that make the threshold one-directed. With --plot it
also renders the curves (requires matplotlib).
"""

import argparse

import numpy as np

from adclust.cluster import (grad_one_directed, linear_piece_slope,
                             one_directed_loss_value, one_directed_terms)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--plot", default=None, help="write a PNG of the curves here")
    args = parser.parse_args()

    qs = np.linspace(0.02, 1.0, 50)
    print("the value inside the logarithm, by target and threshold:")
    print("  target 0 piece q**(1-nu): rises toward 1 faster as nu grows")
    for nu in (0.2, 0.5, 0.8):
        vals = qs ** (1.0 - nu)
        print(f"    nu={nu}: q=0.1 -> {0.1 ** (1 - nu):.3f}   q=0.5 -> "
              f"{0.5 ** (1 - nu):.3f}   q=0.9 -> {0.9 ** (1 - nu):.3f}")
    print("  target 1 piece slope*(q-1)+1 with slope in (0,1):")
    for nu in (0.2, 0.5, 0.8):
        print(f"    nu={nu}: slope={float(linear_piece_slope(nu)):.4f}")

    print("\nloss at sample points (q, p, nu) -> value:")
    for q, p, nu in [(0.25, 0, 0.5), (0.9, 1, 0.5), (1.0, 1, 0.3), (0.5, 0, 0.8)]:
        print(f"  ({q}, {p}, {nu}) -> {one_directed_loss_value([q], [p], nu):.6f}")

    print("\ngradient signs on a coarse grid (every entry must be negative):")
    for p in (0.0, 1.0):
        worst_q = worst_nu = -np.inf
        for nu in np.linspace(0.05, 0.95, 19):
            for q in np.linspace(0.05, 0.95, 19):
                dq, dnu = grad_one_directed([q], [p], nu)
                worst_q = max(worst_q, dq[0])
                worst_nu = max(worst_nu, dnu)
        print(f"  p={p:.0f}: max dL/dq = {worst_q:.4f}, max dL/dnu = {worst_nu:.4f}")

    if args.plot:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(10, 4))
        for nu in (0.2, 0.4, 0.6, 0.8):
            inner = np.where(qs < nu, qs ** (1 - nu),
                             linear_piece_slope(nu) * (qs - 1) + 1)
            axes[0].plot(qs, inner, label=f"nu={nu}")
            axes[1].plot(qs, one_directed_terms(qs, (qs >= nu).astype(float), nu),
                         label=f"nu={nu}")
        axes[0].set_title("value inside the logarithm")
        axes[0].set_xlabel("q")
        axes[1].set_title("per-point loss with hard targets")
        axes[1].set_xlabel("q")
        for ax in axes:
            ax.legend()
            ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(args.plot, dpi=120)
        print(f"\nwrote {args.plot}")


if __name__ == "__main__":
    main()
