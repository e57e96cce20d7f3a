"""Print the LASSO path of the 10-row worked example with closures and Betti numbers."""

import sys

import numpy as np

from topolasso.regression import Dataset, build_design, lars_lasso_path, standardize_response
from topolasso.selection import support_betti
from topolasso.terms import enumerate_candidate_terms

DATA = np.array([
    [0, 0, 0, 1], [0, 1, 0, 1], [1, 1, 1, 1], [1, 1, 1, 0], [0, 1, 1, 0],
    [0, 0, 1, 0], [1, 0, 0, 0], [0, 0, 1, 0], [1, 1, 0, 1], [1, 0, 1, 0],
], dtype=float)


def main(interactions="raw", scaling="lars"):
    data = Dataset(DATA[:, :3], DATA[:, 3])
    terms = enumerate_candidate_terms(3, 3)
    dm = build_design(data, terms, interactions=interactions)
    y, _, _ = standardize_response(data.y)
    path = lars_lasso_path(dm.columns, y, scaling, terms)
    print("lambda " + " ".join(f"{t:>6}" for t in terms.labels()) + "   M / closure / betti")
    for lam, coef in zip(path.lambdas, path.coefs):
        support = terms.subset(coef != 0)
        closure, betti = support_betti(support, 3)
        cells = " ".join(f"{c:6.2f}" for c in coef)
        print(f"{lam:6.2f} {cells}   {support} {closure} {betti[:2]}")


if __name__ == "__main__":
    main(*sys.argv[1:])
