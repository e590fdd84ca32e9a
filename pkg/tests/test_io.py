import numpy as np
import pytest

from mogpfill import io
from mogpfill.errors import ModelFormatError
from mogpfill.gp import TrainConfig, gp_predict, gp_train
from mogpfill.mogp import mogp_predict, mogp_train
from mogpfill.series import TimeSeries

from conftest import reference_model


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(5)
    t1 = np.arange(0.0, 200.0, 9.0)
    t2 = np.arange(0.0, 200.0, 4.0)
    s1 = TimeSeries(t1, 3.0 + np.sin(t1 / 25.0) + 0.05 * rng.normal(size=t1.size))
    s2 = TimeSeries(t2, 0.5 + 0.2 * np.sin(t2 / 25.0) + 0.02 * rng.normal(size=t2.size))
    cfg = TrainConfig(restarts=2)
    return gp_train(s1, cfg), mogp_train(s1, s2, cfg)


def test_series_csv_roundtrip(tmp_path):
    s = TimeSeries([0.5, 1.0 / 3.0 + 2, 7.25], [0.1, 2.0 / 3.0, -1e-12], "lai")
    path = tmp_path / "lai.csv"
    io.write_series_csv(path, s)
    back = io.read_series_csv(path)
    assert back.label == "lai"
    assert back.times.tobytes() == s.times.tobytes()
    assert back.values.tobytes() == s.values.tobytes()
    assert path.read_bytes().startswith(b"time,value\n")


def test_series_csv_epoch_and_sorting():
    s = io.parse_series_csv("time,value\n5,2\n1,1\n\n", epoch=100.0)
    np.testing.assert_array_equal(s.times, [101.0, 105.0])
    np.testing.assert_array_equal(s.values, [1.0, 2.0])
    assert io.series_to_csv(s, epoch=100.0) == "time,value\n1.0,1.0\n5.0,2.0\n"


@pytest.mark.parametrize("text", ["", "t,v\n1,2\n", "time,value\n1,abc\n", "time,value\n1,2\n1,3\n"])
def test_series_csv_rejects(text):
    with pytest.raises(ValueError):
        io.parse_series_csv(text)


def test_grid():
    np.testing.assert_array_equal(io.parse_grid("0:10:5"), [0.0, 5.0, 10.0])
    np.testing.assert_array_equal(io.parse_grid("0:9:5"), [0.0, 5.0])
    np.testing.assert_allclose(io.parse_grid("0:1:0.1"), np.linspace(0, 1, 11), atol=1e-15)
    for bad in ("0:10", "0:10:0", "10:0:1", "a:b:c"):
        with pytest.raises(ValueError):
            io.parse_grid(bad)


@pytest.mark.parametrize("which", [0, 1])
def test_model_roundtrip_byte_identical(tmp_path, trained, which):
    model = trained[which]
    p1, p2 = tmp_path / "a.model", tmp_path / "b.model"
    io.save_model(model, p1)
    io.save_model(io.load_model(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_loaded_models_predict_identically(tmp_path, trained):
    gp, slfm = trained
    q = np.linspace(-20.0, 220.0, 97)
    io.save_model(gp, tmp_path / "m.gp")
    a, b = gp_predict(gp, q), gp_predict(io.load_model(tmp_path / "m.gp"), q)
    assert a.mean.tobytes() == b.mean.tobytes() and a.std.tobytes() == b.std.tobytes()
    io.save_model(slfm, tmp_path / "m.slfm")
    loaded = io.load_model(tmp_path / "m.slfm")
    for a, b in zip(mogp_predict(slfm, q), mogp_predict(loaded, q)):
        assert a.mean.tobytes() == b.mean.tobytes() and a.std.tobytes() == b.std.tobytes()
    assert loaded.info == slfm.info


def test_model_file_contents(trained):
    text = io.model_to_text(trained[1])
    keys = [line.split(" = ")[0] for line in text.splitlines()]
    assert keys[:2] == ["format_version", "kind"]
    for k in ("lengthscales", "coreg_1", "coreg_2", "noise_variances", "norm_mean", "norm_std",
              "jitter", "iterations", "log_likelihood", "restart_index"):
        assert k in keys


def test_model_version_and_format_errors(trained):
    text = io.model_to_text(trained[0])
    with pytest.raises(ModelFormatError, match="version"):
        io.model_from_text(text.replace("format_version = 1", "format_version = 2"))
    with pytest.raises(ModelFormatError):
        io.model_from_text(text.replace("kind = GP", "kind = RNN"))
    with pytest.raises(ModelFormatError):
        io.model_from_text("\n".join(line for line in text.splitlines() if not line.startswith("lengthscale")))
    with pytest.raises(ModelFormatError):
        io.model_from_text("format_version = 1\ngarbage\n")


def test_reference_model_serializes():
    text = io.model_to_text(reference_model())
    assert "lengthscales = [76.44, 13.43]" in text
    assert "coreg_1 = [0.842, 1.0831]" in text
    assert io.model_to_text(io.model_from_text(text)) == text


def test_predictions_csv_columns(trained):
    q = np.array([0.0, 5.0, 10.0])
    two = io.predictions_to_csv(q, mogp_predict(trained[1], q)).splitlines()
    assert two[0] == "time,mean_1,std_1,mean_2,std_2"
    assert all(len(r.split(",")) == 5 for r in two)
    one = io.predictions_to_csv(q, (gp_predict(trained[0], q),)).splitlines()
    assert one[0] == "time,mean_1,std_1" and len(one) == 4


def test_atomic_write_leaves_no_temp(tmp_path):
    io.atomic_write_text(tmp_path / "x.txt", "hello\n")
    io.atomic_write_text(tmp_path / "x.txt", "again\n")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["x.txt"]
    assert (tmp_path / "x.txt").read_text() == "again\n"
