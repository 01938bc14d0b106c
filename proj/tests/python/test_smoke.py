import json
import math
import os
import pathlib

import numpy as np
import pytest

import vibronic_td as vt

SOURCE = pathlib.Path(os.environ.get("VIBRONIC_TD_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_version():
    assert vt.__version__


def test_unit_map():
    delta, omega_s = vt.map_units(vt.So2Params.standard(), vt.UnitMap.standard())
    assert delta / (2 * math.pi) == pytest.approx(1704.3, rel=1e-4)
    assert omega_s / (2 * math.pi) == pytest.approx(1462.3, rel=1e-4)


def test_noiseless_run_matches_closed_form():
    t = np.linspace(0.0, 1e-3, 21)
    p, u = vt.So2Params.standard(), vt.UnitMap.standard()
    out = vt.run_so2(p, u, vt.NoiseSpec.none(), t, n_max=32)
    ref = vt.analytic_so2_autocorrelation(p, t, u)
    assert np.max(np.abs(out["values"] - ref)) < 1e-8


def test_pade_peak_sits_on_the_line():
    t = np.arange(200) * 1e-5
    w0 = 2 * math.pi * 2e3
    a = np.exp(-1j * w0 * t - t / 2e-3)
    freq = np.linspace(w0 - 3e3, w0 + 3e3, 1201)
    f, s = vt.fourier_pade(t, a, freq)
    assert abs(f[np.argmax(s)] - w0) <= freq[1] - freq[0]


def test_poisson_sticks_sum_to_one():
    w, p = vt.poisson_sticks(1.0, 1.716, 40)
    assert p.sum() == pytest.approx(1.0)
    assert p[0] == pytest.approx(math.exp(-1.716**2))


def test_invalid_noise_raises():
    n = vt.NoiseSpec()
    n.gamma_h = -1.0
    with pytest.raises(ValueError):
        n.validate()


def test_config_round_trip(tmp_path):
    errors, _ = vt.validate_config(SOURCE / "configs" / "so2_fig4_noiseless.json")
    assert errors == []
    cfg = {
        "experiment": "displacement-fit",
        "calibration": {"beta": 0.5, "t_max_s": 6e-4, "points": 31},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    vt.run_config(path, output_dir=tmp_path / "out")
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert {o["path"] for o in manifest["outputs"]} >= {"scan.csv", "fit.json"}
    fit = json.loads((tmp_path / "out" / "fit.json").read_text())
    assert fit["params"]["beta"] == pytest.approx(0.5, rel=1e-5)
