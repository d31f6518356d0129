import json

import numpy as np
import pytest

from photonic_qml import gkm, persist, qerks, report, vqc
from photonic_qml.config import RunConfig, env_overrides, load_config, parse_ini
from photonic_qml.errors import ConfigError

PROBE = np.stack(np.meshgrid(np.linspace(-1, 1, 21), np.linspace(-1, 1, 21)), -1).reshape(-1, 2)


@pytest.fixture(scope="module")
def models(synth_split):
    tr, va = synth_split["train"], synth_split["validation"]
    g = gkm.train_gkm(tr.x[:300], tr.y[:300], gkm.fit_observable_ls(4), seeds={"delta_seed": 7})
    r = qerks.train_rks(tr.x, tr.y, r=30, seed=2, dist="chi2")
    v = vqc.train_vqc(tr.x[:200], tr.y[:200], restarts=2, max_iter=20, x_val=va.x, y_val=va.y, polish=False)
    return {"gkm": g, "rks": r, "vqc": v}


@pytest.mark.parametrize("kind", ["gkm", "rks", "vqc"])
def test_round_trip_predictions(models, kind, tmp_path):
    m = models[kind]
    path = tmp_path / f"{kind}.json"
    persist.save_model(m, path)
    back = persist.load_model(path)
    assert back.kind == kind
    assert np.max(np.abs(back.decision_function(PROBE) - m.decision_function(PROBE))) < 1e-12
    obj = json.loads(path.read_text())
    assert obj["format_version"] == persist.FORMAT_VERSION and obj["kind"] == kind


def test_vqc_file_records_restarts(models, tmp_path):
    persist.save_model(models["vqc"], tmp_path / "v.json")
    back = persist.load_model(tmp_path / "v.json")
    assert back.restart_losses == models["vqc"].restart_losses
    assert back.retained == models["vqc"].retained and back.seeds == models["vqc"].seeds


def test_rks_file_fields(models):
    obj = persist.model_to_json(models["rks"])
    assert {"R", "gamma", "k", "dist", "seed", "W", "b", "c", "observable"} <= set(obj)


@pytest.mark.parametrize(
    "obj,match",
    [({"format_version": 99, "kind": "gkm"}, "format_version"),
     ({"format_version": 1, "kind": "svm"}, "unknown model kind"),
     ({"format_version": 1, "kind": "rks"}, "missing field")],
)
def test_bad_model_files(obj, match):
    with pytest.raises(ConfigError, match=match):
        persist.model_from_json(obj)


def test_not_json(tmp_path):
    (tmp_path / "x.json").write_text("nope")
    with pytest.raises(ConfigError):
        persist.load_model(tmp_path / "x.json")


# ---------------------------------------------------------------- config

def test_config_defaults():
    c = RunConfig()
    assert (c.sigma, c.gamma, c.k, c.restarts, c.R) == (1.0, 0.1, 1, 8, 100)
    assert c.n_photons == 4
    assert c.replace(method="rks").n_photons == 1
    assert c.replace(method="vqc", input_state="2,2,1").n_photons == 5


def test_config_file_round_trip(tmp_path):
    c = RunConfig(method="vqc", alpha=1e-4, split_ratios=(70.0, 15.0, 15.0), polish=False, photons=3)
    p = tmp_path / "run.ini"
    p.write_text(c.to_ini())
    assert load_config(p, environ={}) == c


def test_precedence(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nR = 20\ngamma = 0.5\nsigma = 2.0\n")
    env = {"PHOTONIC_QML_R": "30", "PHOTONIC_QML_GAMMA": "0.7", "OTHER": "x"}
    c = load_config(p, {"R": 40, "gamma": None}, environ=env)
    assert (c.R, c.gamma, c.sigma) == (40, 0.7, 2.0)


@pytest.mark.parametrize("text", ["[run]\nbogus = 1\n", "[run]\nR = ten\n", "[other]\nR = 1\n",
                                  "[run]\nmethod = svm\n", "[run]\nsplit_ratios = 1,2\n"])
def test_bad_config(text):
    with pytest.raises(ConfigError):
        parse_ini(text)


def test_bad_env():
    with pytest.raises(ConfigError):
        env_overrides({"PHOTONIC_QML_NOPE": "1"})


def test_config_invariants():
    with pytest.raises(ConfigError):
        RunConfig(sigma=0.0)
    with pytest.raises(ConfigError):
        RunConfig(restarts=0)


# ---------------------------------------------------------------- reports

class Const:
    def __init__(self, value):
        self.value = value

    def decision_function(self, x):
        return np.full(len(x), self.value)


def test_zero_model_grid_all_plus(tmp_path):
    pts, dec = report.boundary_grid(Const(0.0), 16)
    report.write_grid_csv(tmp_path / "g.csv", pts, dec)
    rows = (tmp_path / "g.csv").read_text().splitlines()
    assert rows[0] == "x1,x2,decision,sign"
    assert len(rows) == 257
    assert all(r.endswith(",1") for r in rows[1:])


def test_grid_resolution_floor():
    with pytest.raises(ConfigError):
        report.boundary_grid(Const(1.0), 8)


def test_grid_thresholding_matches_score(models, synth_split):
    m, te = models["gkm"], synth_split["test"]
    res = 201
    pts, dec = report.boundary_grid(m, res)
    # nearest grid node for each test point
    ij = np.rint((te.x + 1) / 2 * (res - 1)).astype(int)
    grid_pred = np.where(dec.reshape(res, res)[ij[:, 1], ij[:, 0]] >= 0, 1, -1)
    direct = m.predict(te.x)
    assert np.mean(grid_pred == direct) >= 0.97


def test_ppm_round_trip(tmp_path):
    _, dec = report.boundary_grid(Const(-1.0), 20)
    img = report.sign_image(dec, 20, np.array([[0.0, 0.0]]))
    report.write_ppm(tmp_path / "h.ppm", img)
    back = report.read_ppm(tmp_path / "h.ppm")
    assert back.shape == (20, 20, 3)
    assert tuple(back[0, 0]) == report.MINUS_RGB
    assert (back == np.array(report.POINT_RGB, np.uint8)).all(axis=-1).any()


def test_kernel_curve():
    d, t, m = report.kernel_fit_curve(gkm.fit_observable_ls(4))
    assert len(d) == 200 and d[0] == 0.0 and d[-1] == 3.0
    assert t[0] == 1.0
    assert np.max(np.abs(t - m)) < 0.1
