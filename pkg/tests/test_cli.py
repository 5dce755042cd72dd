import csv
import json

import numpy as np
import pytest

from fracbsm import io
from fracbsm.cli import main
from fracbsm.dataset import FeatureConfig, build_dataset
from fracbsm.nn import forward, init_mlp
from fracbsm.pipeline import evaluate, predict_denormalized, prepare

SMALL_TRAIN = ["--epochs", "15", "--patience", "5"]


@pytest.fixture(scope="module")
def features(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "features.csv"
    assert main(["generate", "--n", "150", "--seed", "11", "--n-grid", "200", "--out", str(path)]) == 0
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_features_round_trip_is_exact(tmp_path):
    rows = build_dataset(20, 5, cfg=FeatureConfig(n_grid=50))
    path = io.write_features(tmp_path / "f.csv", rows)
    assert io.read_features(path) == rows
    assert read_rows(path)[0] == io.FEATURES_HEADER


def test_read_features_rejects_bad_files(tmp_path):
    bad_header = tmp_path / "a.csv"
    bad_header.write_text("S,K\n1,2\n")
    with pytest.raises(io.FormatError):
        io.read_features(bad_header)
    bad_value = tmp_path / "b.csv"
    bad_value.write_text(",".join(io.FEATURES_HEADER) + "\n1,2,3,4,5,6,7,8,maybe\n")
    with pytest.raises(io.FormatError):
        io.read_features(bad_value)
    empty = tmp_path / "c.csv"
    empty.write_text("")
    with pytest.raises(io.FormatError):
        io.read_features(empty)


def test_model_round_trip_is_bit_exact(tmp_path, features):
    parts = prepare(io.read_features(features))
    model = init_mlp(seed=3)
    io.save_model(tmp_path / "m.json", model, parts.stats, 3, {"note": "x"})
    loaded, stats, doc = io.load_model(tmp_path / "m.json")
    assert stats == parts.stats
    assert doc["config"] == {"note": "x"} and doc["seed"] == 3
    assert np.array_equal(forward(model, parts.X_test), forward(loaded, parts.X_test))
    assert np.array_equal(
        predict_denormalized(model, stats, parts.X_test), predict_denormalized(loaded, stats, parts.X_test)
    )


def test_load_model_rejects_wrong_schema(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(io.FormatError):
        io.load_model(tmp_path / "m.json")


def test_generate_single_row(tmp_path):
    assert main(["generate", "--n", "1", "--seed", "0", "--n-grid", "20", "--out", str(tmp_path / "one.csv")]) == 0
    assert len(read_rows(tmp_path / "one.csv")) == 2


def test_generate_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", "--n", "30", "--seed", "4", "--n-grid", "50", "--out", str(tmp_path / name / "f.csv")]) == 0
    for suffix in ("f.csv", "f.stats.json"):
        assert (tmp_path / "a" / suffix).read_bytes() == (tmp_path / "b" / suffix).read_bytes()


def test_generate_manifest_digests(tmp_path):
    out = tmp_path / "f.csv"
    main(["generate", "--n", "10", "--seed", "1", "--n-grid", "30", "--out", str(out)])
    manifest = json.loads((tmp_path / "f.manifest.json").read_text())
    listed = {a["path"]: a["sha256"] for a in manifest["artifacts"]}
    assert set(listed) == {"f.csv", "f.stats.json"}
    for name, digest in listed.items():
        assert io.sha256_file(tmp_path / name) == digest
    assert manifest["seed"] == 1 and manifest["config"]["n"] == 10


def test_seed_is_required(tmp_path, capsys):
    assert main(["generate", "--out", str(tmp_path / "f.csv")]) == 1
    assert "--seed" in capsys.readouterr().err


def test_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "gen.cfg"
    cfg.write_text("# generation\nn = 7\nseed = 3\nn-grid = 40\nsigma_range = 0.2, 0.3\n")
    out = tmp_path / "f.csv"
    assert main(["generate", "--config", str(cfg), "--n", "5", "--out", str(out)]) == 0
    rows = io.read_features(out)
    assert len(rows) == 5
    assert all(0.2 <= r.params.sigma <= 0.3 for r in rows)


def test_config_file_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["generate", "--config", str(cfg), "--seed", "1"]) == 1


def test_invalid_ranges_exit_code(tmp_path):
    assert main(["generate", "--seed", "1", "--s-range", "150,50", "--out", str(tmp_path / "f.csv")]) == 1


def test_price_command(capsys):
    assert main(["price", "put", "--S", "80", "--K", "100", "--T", "1e-12", "--r", "0.05", "--sigma", "0.2"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(20.0, abs=1e-9)
    main(["price", "call", "--S", "100", "--K", "100", "--T", "1", "--r", "0.05", "--sigma", "0.2"])
    call = float(capsys.readouterr().out)
    main(["price", "put", "--S", "100", "--K", "100", "--T", "1", "--r", "0.05", "--sigma", "0.2"])
    put = float(capsys.readouterr().out)
    assert call == pytest.approx(10.4506, abs=1e-4)
    assert put == pytest.approx(5.5735, abs=1e-4)


def test_price_negative_sigma(capsys):
    assert main(["price", "call", "--S", "100", "--K", "100", "--T", "1", "--r", "0.05", "--sigma", "-0.2"]) == 1
    assert "sigma" in capsys.readouterr().err


def test_missing_file_is_io_error(tmp_path):
    assert main(["train", "--features", str(tmp_path / "missing.csv"), "--seed", "1"]) == 2


def test_malformed_features_is_validation_error(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not,a,features,file\n")
    assert main(["train", "--features", str(bad), "--seed", "1"]) == 1


def test_train_then_evaluate(tmp_path, features, capsys):
    model, hist = tmp_path / "model.json", tmp_path / "history.csv"
    assert main(["train", "--features", str(features), "--seed", "2", "--model", str(model),
                 "--history", str(hist), *SMALL_TRAIN]) == 0
    history = read_rows(hist)
    assert history[0] == io.HISTORY_HEADER
    assert 1 <= len(history) - 1 <= 15
    manifest = json.loads((tmp_path / "model.manifest.json").read_text())
    assert {a["path"] for a in manifest["artifacts"]} == {"model.json", "history.csv"}

    preds = tmp_path / "preds.csv"
    assert main(["evaluate", "--model", str(model), "--features", str(features), "--predictions", str(preds)]) == 0
    out = capsys.readouterr().out
    assert "test MSE (normalized)" in out and "test MSE (price units)" in out
    rows = read_rows(preds)
    assert rows[0] == io.PREDICTIONS_HEADER
    assert len(rows) - 1 == 150 - int(0.8 * 150)
    assert [int(r[0]) for r in rows[1:]] == list(range(120, 150))
    metrics = json.loads((tmp_path / "preds.metrics.json").read_text())
    assert metrics["n_test"] == 30 and metrics["mse_normalized"] >= 0


def test_two_seeds_record_different_losses(tmp_path, features):
    finals = []
    for seed in (0, 1):
        d = tmp_path / str(seed)
        main(["train", "--features", str(features), "--seed", str(seed), "--model", str(d / "model.json"),
              "--history", str(d / "history.csv"), *SMALL_TRAIN])
        finals.append(json.loads((d / "model.manifest.json").read_text())["metrics"]["final_train_loss"])
    assert finals[0] != finals[1]


def test_train_only_stats_option(tmp_path, features):
    model = tmp_path / "model.json"
    main(["train", "--features", str(features), "--seed", "0", "--model", str(model),
          "--history", str(tmp_path / "h.csv"), "--train-only-stats", "true", *SMALL_TRAIN])
    _, stats, _ = io.load_model(model)
    rows = io.read_features(features)
    train_prices = [r.option_price for r in rows[: int(0.8 * len(rows))]]
    assert stats.mean[2] == pytest.approx(np.mean(train_prices), rel=1e-12)


def test_perfect_oracle_stub_scores_zero(features):
    parts = prepare(io.read_features(features))

    class Oracle:
        def predict(self, X):
            lookup = {tuple(x): y for x, y in zip(parts.X_test, parts.y_test)}
            return np.array([lookup[tuple(x)] for x in X])

    result = evaluate(Oracle(), parts)
    assert result.mse_normalized == 0.0
    assert result.mse_price == pytest.approx(0.0, abs=1e-20)
    assert len(result.row_ids) == len(parts.test_rows)


def test_zero_model_predicts_mean(features):
    parts = prepare(io.read_features(features))
    m = init_mlp(seed=0)
    zero = m.with_params([np.zeros_like(p) for p in m.params()])
    preds = predict_denormalized(zero, parts.stats, parts.X_test)
    assert np.all(preds == parts.stats.mean[2])


def test_compare_optimizers(tmp_path, features):
    out = tmp_path / "cmp.csv"
    assert main(["compare-optimizers", "--features", str(features), "--seeds", "0,1", "--out", str(out), *SMALL_TRAIN]) == 0
    rows = read_rows(out)
    assert rows[0] == io.COMPARISON_HEADER
    body = rows[1:]
    for seed in ("0", "1"):
        assert {r[0] for r in body if r[1] == seed} == {"adam", "sgd", "rmsprop"}
        initial = {r[3] + "/" + r[4] for r in body if r[1] == seed and r[2] == "0"}
        assert len(initial) == 1
    manifest = json.loads((tmp_path / "cmp.manifest.json").read_text())
    assert len(manifest["metrics"]["final_val_loss"]) == 6
