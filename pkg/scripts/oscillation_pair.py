"""Two uniformly close maps whose pushforward densities stay far apart.

Prints the sup-distance of the maps and the sup-distance of their exact
densities on a fine grid for a range of perturbation sizes.
"""
import numpy as np

from splinepdf import problems
from splinepdf.density import exact_pdf_1d


def main():
    ys = np.linspace(0.05, 0.95, 20001)
    print(f"{'delta':>8s} {'sup|f-g|':>10s} {'sup|p_f-p_g|':>13s}")
    for delta in (1e-1, 1e-2, 1e-3, 1e-4):
        pair = problems.lemma3_pair(delta)
        a = np.linspace(0.0, 1.0, 200001)
        gap = np.max(np.abs(pair.f(a) - pair.g(a)))
        pf = exact_pdf_1d(pair.f, pair.df, pair.input, ys)
        pg = exact_pdf_1d(pair.g, pair.dg, pair.input, ys)
        print(f"{delta:8.0e} {gap:10.3e} {np.max(np.abs(pf.pdf - pg.pdf)):13.3f}")


if __name__ == "__main__":
    main()
