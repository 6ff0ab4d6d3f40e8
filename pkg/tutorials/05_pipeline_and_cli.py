"""
The whole workflow from one config
==================================

``run`` chains ingest, preprocessing, splitting, selection, fitting,
validation, randomization, the gate and the reports. ``compare_methods``
repeats the modelling for MLR, PCR and PLS on the same split. The same
steps are available from the ``qsarkit`` command.
"""

import csv
import subprocess
import sys
import tempfile
from pathlib import Path

from qsarkit.datasets import make_planted
from qsarkit.pipeline import RunConfig, compare_methods

work = Path(tempfile.mkdtemp())
ds = make_planted(n=40, p=10, seed=0)

with open(work / "activity.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["id", "pic50"])
    w.writerows(zip(ds.ids, ds.activity.tolist()))
with open(work / "descriptors.csv", "w", newline="") as fh:
    w = csv.writer(fh)
    w.writerow(["id", *ds.names])
    w.writerows([cid, *row] for cid, row in zip(ds.ids, ds.X.tolist()))

config = RunConfig(
    activity_path=str(work / "activity.csv"),
    descriptor_path=str(work / "descriptors.csv"),
    out_dir=str(work / "compare"),
    test_size=10,
    k=5,
    steps_per_temp=10,
    n_randomizations=50,
    seed=7,
)
compare_methods(config)
print((work / "compare" / "stats_table.txt").read_text())

# equivalent command line, driven by a flat key = value file
(work / "run.cfg").write_text(
    f"activity_path = {work / 'activity.csv'}\n"
    f"descriptor_path = {work / 'descriptors.csv'}\n"
    "test_size = 10\nk = 5\nmethod = MLR\nn_randomizations = 50\n"
)
cmd = [sys.executable, "-m", "qsarkit", "--config", str(work / "run.cfg"), "--out-dir", str(work / "cli"), "run"]
print(subprocess.run(cmd, capture_output=True, text=True, check=True).stdout)
print(sorted(p.name for p in (work / "cli").iterdir()))
