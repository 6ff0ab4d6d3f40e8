import csv
import json

import pytest

from conftest import write_csvs
from qsarkit.cli import main
from qsarkit.datasets import make_noise, make_planted
from qsarkit.errors import ConfigError, StageError
from qsarkit.pipeline import RunConfig, compare_methods, run, stage_seed

ARTIFACTS = (
    "config.json",
    "preprocess.json",
    "split.json",
    "selection.json",
    "sa_trace.csv",
    "model.json",
    "predictions.csv",
    "validation.json",
    "randomization.json",
    "gate.json",
    "scatter.csv",
    "scatter.svg",
    "contributions.csv",
    "contributions.svg",
    "stats_table.txt",
    "stats_table.csv",
)

FAST = dict(steps_per_temp=5, cooling=0.7, n_randomizations=20)


@pytest.fixture
def planted_files(tmp_path):
    ds = make_planted(n=40, p=10, informative=(0, 1, 2, 3, 4), noise=0.1, seed=0)
    return write_csvs(tmp_path, ds)


def config(files, out, **kw):
    act, desc = files
    base = dict(activity_path=str(act), descriptor_path=str(desc), out_dir=str(out), **FAST)
    base.update(kw)
    return RunConfig(**base)


def test_run_forty_compounds(planted_files, tmp_path):
    art = run(config(planted_files, tmp_path / "out", test_size=10, k=5, method="MLR"))
    assert (art.split.n_train, art.split.n_test) == (30, 10)
    assert len(art.model.descriptors) == 5
    assert art.validation.df == 24
    for name in ARTIFACTS:
        assert (tmp_path / "out" / name).exists(), name


def test_prediction_table_invariants(planted_files, tmp_path):
    art = run(config(planted_files, tmp_path / "out", test_size=10, k=3, method="PLS", n_components=2))
    assert len(art.predictions) == 40
    for row in art.predictions:
        assert abs(row["residual"] - (row["observed"] - row["predicted"])) <= 1e-12
    train = {r["id"] for r in art.predictions if r["set"] == "train"}
    assert train == set(art.split.train_ids)
    with open(tmp_path / "out" / "predictions.csv", newline="") as fh:
        assert next(csv.reader(fh)) == ["id", "set", "observed", "predicted", "residual"]


def test_config_invariants(planted_files, tmp_path):
    with pytest.raises(ConfigError):
        config(planted_files, tmp_path, test_size=10, dissimilarity=0.5, k=5)
    with pytest.raises(ConfigError):
        config(planted_files, tmp_path, k=5)
    with pytest.raises(ConfigError):
        config(planted_files, tmp_path, test_size=10)
    with pytest.raises(ConfigError):
        config(planted_files, tmp_path, test_size=10, k=5, descriptors=("d00",))


def test_byte_identical_reruns(planted_files, tmp_path):
    cfg = dict(test_size=10, k=3, method="PLS")
    run(config(planted_files, tmp_path / "a", **cfg))
    run(config(planted_files, tmp_path / "b", **cfg))
    for name in ARTIFACTS:
        a = (tmp_path / "a" / name).read_bytes()
        b = (tmp_path / "b" / name).read_bytes()
        if name == "config.json":
            a, b = (json.loads(x) for x in (a, b))
            a.pop("out_dir"), b.pop("out_dir")
        assert a == b, name


def test_seed_changes_selection_stream(planted_files, tmp_path):
    a = run(config(planted_files, tmp_path / "a", test_size=10, k=3, method="MLR", seed=1))
    b = run(config(planted_files, tmp_path / "b", test_size=10, k=3, method="MLR", seed=2))
    assert a.sa_trace != b.sa_trace


def test_stage_seeds_independent():
    assert stage_seed(0, "select") != stage_seed(0, "randomize")
    assert stage_seed(0, "select") == stage_seed(0, "select")
    assert 0 <= stage_seed(123, "x") < 2**64


def test_randomization_count_does_not_touch_selection(planted_files, tmp_path):
    a = run(config(planted_files, tmp_path / "a", test_size=10, k=3, method="MLR"))
    b = run(config(planted_files, tmp_path / "b", test_size=10, k=3, method="MLR", **{**FAST, "n_randomizations": 30}))
    assert a.sa_trace == b.sa_trace


def test_stage_error_keeps_earlier_artifacts(planted_files, tmp_path):
    out = tmp_path / "out"
    with pytest.raises(StageError) as info:
        run(config(planted_files, out, test_size=10, descriptors=("d00", "nope"), method="MLR"))
    assert info.value.stage == "select"
    assert isinstance(info.value.cause, ConfigError)
    assert (out / "split.json").exists() and (out / "preprocess.json").exists()
    assert not (out / "model.json").exists()


def test_compare_planted_full_components(planted_files, tmp_path):
    pool = ("d00", "d01", "d02", "d03", "d04")
    res = compare_methods(config(planted_files, tmp_path / "cmp", test_size=10, descriptors=pool, n_components=5))
    assert set(res) == {"PLS", "MLR", "PCR"}
    assert not any(isinstance(r, Exception) for r in res.values())
    assert abs(res["PLS"].validation.q2 - res["MLR"].validation.q2) < 0.05
    assert res["MLR"].validation.q2 > 0.9


def test_compare_planted_with_selection(planted_files, tmp_path):
    res = compare_methods(config(planted_files, tmp_path / "cmp", test_size=10, k=5))
    for method, art in res.items():
        assert not isinstance(art, Exception), method
        assert len(art.model.descriptors) == 5
    with open(tmp_path / "cmp" / "stats_table.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["parameter", "PLS", "MLR", "PCR"]
    assert all("" not in r for r in rows)


def test_compare_single_descriptor_pool(tmp_path):
    ds = make_planted(n=30, p=3, informative=(0, 1), seed=5)
    files = write_csvs(tmp_path, ds)
    res = compare_methods(config(files, tmp_path / "cmp", test_size=6, descriptors=("d00",)))
    pcr = res["PCR"].validation
    assert pcr.n_components == 1
    assert pcr.df == pcr.n_train - 2


def test_compare_noise_fails_gate_everywhere(tmp_path):
    files = write_csvs(tmp_path, make_noise(n=30, p=5, seed=3))
    res = compare_methods(config(files, tmp_path / "cmp", test_size=8, k=2))
    for method, art in res.items():
        assert not art.gate.passes, method


def test_compare_reports_failures_per_column(tmp_path):
    ds = make_planted(n=12, p=7, informative=(0,), seed=1)
    files = write_csvs(tmp_path, ds)
    # 7 descriptors on 9 training rows: MLR fits but its 8-row folds cannot
    res = compare_methods(config(files, tmp_path / "cmp", test_size=3, descriptors=tuple(ds.names), n_components=2))
    assert isinstance(res["MLR"], StageError)
    assert res["MLR"].stage == "validate"
    assert not isinstance(res["PLS"], Exception)


def test_config_file(planted_files, tmp_path):
    act, desc = planted_files
    path = tmp_path / "run.cfg"
    path.write_text(
        f"activity_path = {act}\ndescriptor_path = {desc}\n# split\ntest_size = 10\nk = 2\nmethod = mlr\n"
        "steps_per_temp = 5\nn_randomizations = 10\n"
    )
    cfg = RunConfig.from_file(path, out_dir=str(tmp_path / "o"))
    assert (cfg.method, cfg.k, cfg.test_size) == ("MLR", 2, 10)
    path.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        RunConfig.from_file(path)


def test_cli_subcommands(planted_files, tmp_path, capsys):
    act, desc = planted_files
    data = ["--activity", str(act), "--descriptors", str(desc)]
    out = tmp_path / "cli"
    assert main(["--out-dir", str(out), "ingest", *data]) == 0
    assert main(["--out-dir", str(out), "preprocess", *data]) == 0
    assert main(["--out-dir", str(out), "split", *data, "--test-size", "10"]) == 0
    split = str(out / "split.json")
    assert main(["--out-dir", str(out), "select", *data, "--split", split, "--method", "mlr", "--k", "2",
                 "--steps-per-temp", "5"]) == 0
    assert main(["--out-dir", str(out), "fit", *data, "--split", split, "--method", "PLS",
                 "--selection", str(out / "selection.json")]) == 0
    model = str(out / "model.json")
    assert main(["--out-dir", str(out), "randomize", *data, "--split", split, "--model", model,
                 "--iterations", "10"]) == 0
    capsys.readouterr()
    assert main(["--out-dir", str(out), "validate", *data, "--split", split, "--model", model, "--table2",
                 "--randomization", str(out / "randomization.json")]) == 0
    text = capsys.readouterr().out
    assert "pred_r2_se" in text and "gate:" in text
    assert main(["predict", "--model", model, "--descriptors", str(desc)]) == 0
    assert capsys.readouterr().out.startswith("id,predicted\n")


def test_cli_run_and_exit_codes(planted_files, tmp_path):
    act, desc = planted_files
    data = ["--activity", str(act), "--descriptors", str(desc)]
    args = ["--out-dir", str(tmp_path / "r"), "run", *data, "--test-size", "10", "--k", "2", "--method", "MLR",
            "--n-randomizations", "10"]
    assert main(args) == 0
    assert (tmp_path / "r" / "gate.json").exists()
    # both split modes
    assert main(["run", *data, "--k", "2"]) == 2
    # unknown subcommand
    assert main(["frobnicate"]) == 2
    # pipeline error: missing input file
    assert main(["--out-dir", str(tmp_path / "x"), "run", "--activity", str(tmp_path / "none.csv"),
                 "--descriptors", str(desc), "--test-size", "10", "--k", "2"]) == 1


def test_cli_config_file_with_override(planted_files, tmp_path):
    act, desc = planted_files
    path = tmp_path / "run.cfg"
    path.write_text(f"activity_path = {act}\ndescriptor_path = {desc}\ntest_size = 10\nk = 2\nmethod = MLR\n"
                    "steps_per_temp = 5\nn_randomizations = 10\n")
    out = tmp_path / "c"
    assert main(["--config", str(path), "--out-dir", str(out), "--seed", "7", "run"]) == 0
    assert json.loads((out / "config.json").read_text())["seed"] == 7
