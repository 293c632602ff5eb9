import json
import math

import numpy as np
import pytest

import skewrd


def test_meshes_and_dofs():
    assert skewrd.interval_mesh(-60, 60, 0.1).num_elements == 1200
    tri = skewrd.triangular_mesh([-1, 1], [-1, 1], 8)
    assert tri.num_elements == 128
    assert skewrd.DgSpace(tri, 1).size == 384
    assert skewrd.DgSpace(tri, 2).size == 768


def test_operators():
    space = skewrd.DgSpace(skewrd.interval_mesh(0, 1, 0.25), 2)
    m = space.mass().toarray()
    s = space.stiffness(1.0).toarray()
    assert np.allclose(m, m.T)
    assert np.allclose(s, s.T)
    c = space.project(lambda x, y: 1.0)
    assert c @ m @ c == pytest.approx(1.0)
    assert np.abs(s @ c).max() < 1e-12


def test_kinetics():
    g = 7500 / 2316
    mono = skewrd.TwoComponentModel.bistable(2 / 25, g - 1e-3, 0.7)
    bi = skewrd.TwoComponentModel.bistable(2 / 25, g + 1e-3, 0.7)
    assert skewrd.classify_stability(mono) == skewrd.Stability.MONOSTABLE
    assert skewrd.classify_stability(bi) == skewrd.Stability.BISTABLE
    spots = skewrd.TwoComponentModel.turing(-0.05, 0.00028, 0.005)
    (u, v), = skewrd.steady_states(spots)
    assert u == pytest.approx(-0.368403, abs=1e-5)
    c3, _ = skewrd.turing_thresholds(spots)
    assert c3 == pytest.approx(0.000472, abs=1e-6)


def test_pod_and_deim():
    rng = np.random.default_rng(0)
    u = rng.standard_normal((30, 10))
    psi, s = skewrd.pod_basis(u, 4)
    assert np.allclose(psi.T @ psi, np.eye(4), atol=1e-10)
    assert np.all(np.diff(s) <= 0)
    assert skewrd.deim_select(np.array([[0.1], [-0.9], [0.3]])) == [1]


def test_presets_and_run(tmp_path):
    assert "front" in skewrd.preset_names()
    cfg = json.loads(skewrd.preset_config("front", '{"time": {"t_end": 2.0}}'))
    assert cfg["time"]["t_end"] == 2.0
    summary = skewrd.run("front", '{"time": {"t_end": 2.0}}', str(tmp_path))
    assert summary["steps"] == 4
    assert math.isfinite(summary["final_energy"])
    assert (tmp_path / "energy.csv").exists()
    fields, energy = skewrd.simulate("front", '{"time": {"t_end": 2.0}}')
    assert len(fields) == 2 and len(energy) == 5
    assert energy[-1] == pytest.approx(summary["final_energy"], rel=1e-12)


def test_analysis_and_errors():
    report = dict(skewrd.analyze("multi-pulse"))
    assert report["skew-gradient"] == "satisfied"
    with pytest.raises(skewrd.ConfigError):
        skewrd.run("nope")
    with pytest.raises(ValueError):
        skewrd.run("front", '{"time": {"dt": -1}}')
