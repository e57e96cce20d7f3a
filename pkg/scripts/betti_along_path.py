"""Betti numbers and term counts by degree along one simulated LASSO path (CSV on stdout)."""

import sys

from topolasso.regression import TRAIN, build_design, lars_lasso_path
from topolasso.selection import support_betti
from topolasso.simulate import SimConfig, _stream, gen_design, gen_response, model_presets
from topolasso.terms import enumerate_candidate_terms

model = sys.argv[1] if len(sys.argv) > 1 else "model2"
sigma = float(sys.argv[2]) if len(sys.argv) > 2 else 3.0
cfg = SimConfig(model=model, sigmas=(sigma,))
cand = enumerate_candidate_terms(cfg.p, cfg.k)
data = gen_design(cfg, 0)
dm = build_design(data, cand)
y = gen_response(dm.columns, model_presets()[model].theta(cand), sigma, _stream(cfg.seed, 0, 0, 1))
tr = data.split == TRAIN
path = lars_lasso_path(dm.part(TRAIN), y[tr], terms=cand)
print("lambda,beta0,beta1,beta2,mains,pairs,triples")
for lam, coef in zip(path.lambdas, path.coefs):
    support = cand.subset(coef != 0)
    _, betti = support_betti(support, cfg.k)
    by_degree = [sum(t.degree == d for t in support) for d in (1, 2, 3)]
    print(",".join([f"{lam:.6g}"] + [str(b) for b in betti] + [str(c) for c in by_degree]))
