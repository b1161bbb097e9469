import math

import numpy as np
import pytest

import heavyclip as hc


def test_clip():
    g = np.array([3.0, 4.0])
    np.testing.assert_allclose(hc.clip(g, 1.0), [0.6, 0.8], rtol=1e-15)
    np.testing.assert_array_equal(hc.clip(g, 5.0), g)
    with pytest.raises(ValueError):
        hc.clip(g, 0.0)


def test_noise_is_standardized_and_reproducible():
    a = hc.sample_noise("gaussian", 200000, seed=1)
    assert abs(a.mean()) < 0.01
    assert abs(a.var() - 1.0) < 0.02
    np.testing.assert_array_equal(a, hc.sample_noise("gaussian", 200000, seed=1))
    assert hc.noise_tail("weibull", 10.0) > hc.noise_tail("gaussian", 10.0)
    with pytest.raises(ValueError):
        hc.sample_noise("cauchy", 3)


def test_schedule_and_alpha():
    alpha, A = hc.sstm_alpha(0, 1.0, 1.0)
    assert alpha == 1.0 and A == 1.0
    s = hc.resolve_schedule({"problem": {"n": 4}, "method": "clipped-sstm", "policy": "theorem", "N": 100})
    assert s["method"] == "clipped-sstm"
    assert s["iterations"] == 100
    assert s["a"] >= 1.0


def test_run_experiment():
    cfg = {
        "problem": {"n": 3, "noise": "burr"},
        "method": "clipped-sgd",
        "params": {"gamma": 0.1, "lambda": 1.0},
        "N": 200,
        "trials": 3,
        "record_every": 50,
        "workers": 1,
    }
    out = hc.run_experiment(cfg)
    assert len(out["trials"]) == 3
    recs = out["trials"][0]["records"]
    assert [r["k"] for r in recs] == [0, 50, 100, 150, 200]
    assert recs[-1]["calls"] == 200
    assert out["trials"][0]["final_gap"] < recs[0]["f_gap"]
    assert out == hc.run_experiment(cfg)
    with pytest.raises(ValueError):
        hc.run_experiment({"nonsense": 1})


def test_diagnostics():
    g = hc.sample_noise("gaussian", 10000, seed=2).tolist()
    assert hc.subgaussian_score(g)["light"]
    assert not hc.subgaussian_score(hc.sample_noise("burr", 10000, seed=3).tolist())["light"]
    assert hc.oscillation_metric([1.0] * 9 + [5.0], 0.5) == 5.0
    assert hc.quantile([1.0, 3.0], 0.5) == 2.0
    assert hc.ks_normal_fit(g) < 0.03


def test_solve_and_diagnose(tmp_path):
    rng = np.random.default_rng(0)
    lines = []
    for _ in range(200):
        x = rng.normal(size=4)
        y = 1 if x.sum() + rng.normal() > 0 else -1
        lines.append(f"{y} " + " ".join(f"{j + 1}:{v:.6f}" for j, v in enumerate(x)))
    data = tmp_path / "d.libsvm"
    data.write_text("\n".join(lines) + "\n")
    ref = hc.solve_reference(data)
    assert ref["converged"]
    assert ref["grad_norm"] <= 1e-8
    rep = hc.diagnose(data)
    assert rep["rows"] == 200
    assert math.isfinite(rep["score"])


def test_verify_one_criterion():
    r = hc.verify(2)
    assert r["status"] == "PASS"
