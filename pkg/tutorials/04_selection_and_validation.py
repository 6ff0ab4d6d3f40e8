"""
Annealing a descriptor subset and validating the model
======================================================

Simulated annealing searches fixed-size subsets for the highest leave-one-out
q2. The chosen model is then checked internally (q2), externally (pred_r2
on held-out compounds) and against Y-scrambled refits.
"""

from qsarkit.datasets import make_planted
from qsarkit.feature_select import SAConfig, exhaustive_select, sa_select
from qsarkit.regression import ModelSpec, fit_dataset
from qsarkit.splitter import tune_dissimilarity
from qsarkit.validation import evaluate_gate, validate_model, y_randomization

ds = make_planted(n=40, p=8, informative=(1, 4, 6), noise=0.2, seed=3)
_, split = tune_dissimilarity(ds, 10)
train, test = ds.subset(split.train_ids), ds.subset(split.test_ids)

subset, trace = sa_select(train, "MLR", 3, SAConfig(3, rng_seed=0))
print("annealed subset:", subset, f"q2 = {trace[-1].best:.4f} after {len(trace)} steps")
print("exhaustive best:", exhaustive_select(train, "MLR", 3)[0])

spec = ModelSpec("MLR", subset)
model = fit_dataset(spec, train)
report = validate_model(model, train, test)
print(f"r2 {report.r2:.4f}  q2 {report.q2:.4f}  pred_r2 {report.pred_r2:.4f}  F {report.f_test:.2f}  df {report.df}")

rand = y_randomization(train, spec, 100, rng_seed=0)
print(f"best scrambled q2 {rand.best_ran_q2:.4f}, Z(q2) {rand.z_score_q2:.2f}, alpha {rand.alpha_q2}")

verdict = evaluate_gate(report)
print("gate:", "passes" if verdict.passes else "fails on " + ", ".join(verdict.failed_criteria))
