"""Run the simulation study for one or more model presets.

    python scripts/run_experiments.py --models model1 model2 --replications 50 --jobs 4 --out results
"""

import argparse
from dataclasses import replace
from pathlib import Path

from topolasso.simulate import SimConfig, run_experiment

ap = argparse.ArgumentParser()
ap.add_argument("--models", nargs="+", default=["model1", "model2", "model3", "model4"])
ap.add_argument("--sigmas", type=float, nargs="+", default=[1.0, 3.0, 6.0])
ap.add_argument("--rhos", type=float, nargs="+", default=[0.0, 0.3])
ap.add_argument("--replications", type=int, default=50)
ap.add_argument("--seed", type=int, default=2018)
ap.add_argument("--jobs", type=int, default=1)
ap.add_argument("--out", default="results")
args = ap.parse_args()

out = Path(args.out)
out.mkdir(parents=True, exist_ok=True)
base = SimConfig(rhos=tuple(args.rhos), sigmas=tuple(args.sigmas),
                 replications=args.replications, seed=args.seed)
for model in args.models:
    report = run_experiment(replace(base, model=model), jobs=args.jobs)
    (out / f"{model}.json").write_text(report.to_json())
    (out / f"{model}.txt").write_text(report.to_text())
    print(report.to_text())
