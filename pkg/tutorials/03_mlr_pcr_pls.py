"""
MLR, PCR and PLS on the same data
=================================

All three models end up as ``pIC50 = c + sum b_i x_i`` in original units.
PCR and PLS with every component reproduce MLR; with fewer components they
trade fit for stability, and leave-one-out q2 picks the count.
"""

import numpy as np

from qsarkit.datasets import make_latent
from qsarkit.regression import choose_components, contributions, fit_mlr, fit_pcr, fit_pls, load_model, predict

ds = make_latent(n=30, p=6, n_factors=3, seed=1)
X, y = ds.X, ds.activity

mlr = fit_mlr(X, y, ds.names)
print(mlr.equation())

for c in (1, 2, 3, 6):
    pls = fit_pls(X, y, c, ds.names)
    gap = np.abs(pls.predict_array(X) - mlr.predict_array(X)).max()
    print(f"PLS c={c}: max gap to MLR {gap:.2e}")

print("LOO-optimal components: PLS", choose_components(X, y, "PLS", 5), "PCR", choose_components(X, y, "PCR", 5))

pcr = fit_pcr(X, y, 3, ds.names)
print("PCR explained variance:", np.round(pcr.extras["explained_variance_ratio"], 3))

# signed percentage contributions, |values| sum to 100
for name, pct in contributions(pls).sorted():
    print(f"{name:>4} {pct:8.2f}%")

# models transcribed from elsewhere load from JSON and predict the same way
import json, tempfile, pathlib

path = pathlib.Path(tempfile.mkdtemp()) / "pcr.json"
path.write_text(json.dumps({"method": "PCR", "descriptors": ["StsCcount"], "coefficients": [1.7397],
                            "intercept": 5.3563, "n_components": 1}))
external = load_model(path)
print("external model at StsCcount = 1:", round(predict(external, {"StsCcount": 1.0}), 4))
