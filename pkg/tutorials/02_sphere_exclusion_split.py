"""
Sphere-exclusion train/test splits
==================================

The most active compound seeds the training set. Everything within radius
R = d * sqrt(K) of a training compound (in standardized descriptor space)
goes to the test set; the next training compound is the one farthest from
the current training set.
"""

from qsarkit.datasets import make_planted
from qsarkit.splitter import check_split, size_profile, sphere_exclusion_split, tune_dissimilarity

ds = make_planted(n=40, p=6, seed=11)

# test-set size grows stepwise with d
for d, n_test in size_profile(ds, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]):
    print(f"d = {d:.1f}: {n_test} test compounds")

split = sphere_exclusion_split(ds, 0.5)
sep, cover = check_split(ds, split)
print(f"R = {split.radius:.3f}, min train-train distance {sep:.3f}, max test-to-train {cover:.3f}")

# bisection on d for a target test size
d, split = tune_dissimilarity(ds, 10)
print(f"d = {d:.4f} gives {split.n_train}/{split.n_test}")
print("activity ranges:", split.activity_ranges(ds))
