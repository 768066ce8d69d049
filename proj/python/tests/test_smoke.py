import numpy as np
import pytest

import tgdr


@pytest.fixture(scope="module")
def sim():
    return tgdr.simulate(example=1, n_train=100, n_test=200, features=30, seed=3)


def test_simulate_shapes(sim):
    x, y, xt, yt = sim
    assert x.shape == (100, 30)
    assert xt.shape == (200, 30)
    assert set(y) <= {1, 2, 3}


def test_fit_and_predict(sim):
    x, y, xt, yt = sim
    cfg = tgdr.Config()
    cfg.tau = 0.8
    cfg.max_steps = 200
    model = tgdr.fit(x, y, 3, cfg)
    assert model.betas[0].shape == (2, 30)
    labels, probs = tgdr.predict(model, xt)
    assert probs.shape == (200, 3)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    error = np.mean(np.asarray(labels) != np.asarray(yt))
    assert error < 0.5
    assert 0.0 <= tgdr.gbs(probs, yt) <= 1.0


def test_tau_one_is_sparser(sim):
    x, y, _, _ = sim
    dense, sparse = tgdr.Config(), tgdr.Config()
    dense.tau, sparse.tau = 0.0, 1.0
    dense.max_steps = sparse.max_steps = 100
    assert tgdr.fit(x, y, 3, sparse).active_count() <= tgdr.fit(x, y, 3, dense).active_count()


def test_cross_validate(sim):
    x, y, _, _ = sim
    cv = tgdr.cross_validate(x, y, 3, tau_grid=[0.5, 1.0], max_steps=60, folds=3, seed=1)
    assert cv["tau"] in (0.5, 1.0)
    assert len(cv["grid"]) > 0
    assert cv["config"].max_steps == cv["k"]


def test_bagging(sim):
    x, y, _, _ = sim
    cfg = tgdr.Config()
    cfg.tau = 0.8
    cfg.max_steps = 60
    out = tgdr.bagging(x, y, 3, cfg, n_bootstrap=10, seed=2, cutoffs=[0.4, 0.8])
    assert out["succeeded"] == 10
    freq = out["frequencies"]
    assert freq.shape == (30,)
    assert np.all((freq >= 0) & (freq <= 1))
    assert out["cutoff"] in (0.4, 0.8)


def test_meta_and_pool(sim):
    x, y, _, _ = sim
    studies = [1 + i % 2 for i in range(len(y))]
    cfg = tgdr.Config()
    cfg.tau = 0.8
    cfg.max_steps = 80
    model = tgdr.fit(x, y, 3, cfg, studies=studies, fitter=tgdr.Fitter.META)
    assert model.intercepts.shape == (2, 2)
    overall, sigma2 = tgdr.pool(model, x, y, 3, studies)
    assert sigma2.shape == (2, 2)
    assert overall.intercepts.shape == (1, 2)


def test_save_and_load(sim, tmp_path):
    x, y, _, _ = sim
    cfg = tgdr.Config()
    cfg.max_steps = 50
    model = tgdr.fit(x, y, 3, cfg)
    path = tmp_path / "model.json"
    tgdr.save_model(model, str(path), 3)
    again = tgdr.load_model(str(path))
    np.testing.assert_array_equal(again.betas[0], model.betas[0])


def test_errors_are_translated():
    with pytest.raises(tgdr.TgdrError, match="DIM_MISMATCH|INVALID_ARGUMENT"):
        tgdr.fit(np.zeros((4, 2)), [1, 2, 1], 2)
