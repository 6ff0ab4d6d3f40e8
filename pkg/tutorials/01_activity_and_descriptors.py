"""
From IC50 tables to a clean descriptor matrix
=============================================

Convert micromolar IC50 values to pIC50, then drop descriptors that carry
no information (constant) or duplicate information (highly correlated).
"""

import numpy as np

from qsarkit import compute_pic50
from qsarkit.data_ingest import DescriptorMatrix
from qsarkit.preprocess import preprocess

# pIC50 = -log10(IC50 in molar); IC50 arrives in micromolar
for ic50 in (4.41, 1.0, 98.23):
    print(f"IC50 {ic50:6.2f} uM -> pIC50 {compute_pic50(ic50):.4f}")

# A small matrix with one constant column and one near-copy
rng = np.random.default_rng(0)
base = rng.normal(size=(12, 3))
values = np.column_stack([base, np.full(12, 2.0), 3 * base[:, 0] + 1e-4 * rng.normal(size=12)])
m = DescriptorMatrix(
    tuple(f"m{i + 1}" for i in range(12)),
    ("a", "b", "c", "flat", "a_scaled"),
    values,
)

reduced, report = preprocess(m, tol=1e-8, threshold=0.99)
print("kept:", reduced.descriptor_names)
print("constant:", report.removed_constant)
for dropped, kept, r in report.removed_correlated:
    print(f"{dropped} dropped in favour of {kept} (r = {r:.5f})")
