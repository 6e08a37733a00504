"""Waypoint policy: features, encoding, backprop gradients, training, I/O."""

import math

import numpy as np
import pytest
from sklearn.base import clone

from proxops.graph import K_MAX, WaypointPlan, sample_campaign, sample_heuristic_waypoints
from proxops.orbits import RoeState
from proxops.policy import (
    N_CATEGORIES,
    N_FEATURES,
    TARGET_DIM,
    WaypointPolicy,
    decode_plan,
    encode_plan,
    featurize,
    forward,
    infer,
    init_layers,
    load_weights,
    nll_loss_grad,
    project_durations,
    save_weights,
)

X0 = RoeState(0.0, -150.0, 0.0, 2.0, 0.0, 2.0)
DT = 900.0


def scenario_features(primitives=(6, 1, 7), t_f=27 * DT):
    return featurize(X0, t_f, primitives, mean_anomaly=0.7, r_koz=30.0, beta=1.0)


def small_net(rng, d_in=5, d_out=3, hidden=(8, 8)):
    return init_layers(rng, [d_in, *hidden, 2 * d_out])


class TestFeaturize:
    def test_length_and_determinism(self):
        f1 = scenario_features()
        f2 = scenario_features()
        assert f1.shape == (N_FEATURES,) == (47,)
        np.testing.assert_array_equal(f1, f2)

    def test_blocks(self):
        f = scenario_features(primitives=(6, 1, 7))
        assert f[:6] == pytest.approx(X0.as_array())
        assert f[6] == 27 * DT
        onehot = f[7 : 7 + K_MAX * N_CATEGORIES].reshape(K_MAX, N_CATEGORIES)
        assert onehot.sum() == K_MAX
        assert onehot[0, 5] == 1.0  # primitive 6
        assert onehot[1, 0] == 1.0  # primitive 1
        assert onehot[2, 6] == 1.0  # primitive 7
        assert f[-4] == pytest.approx(math.sin(0.7))
        assert f[-3] == pytest.approx(math.cos(0.7))
        assert f[-2:] == pytest.approx([30.0, 1.0])

    def test_padding_noop(self):
        f = scenario_features(primitives=(4, 2))
        onehot = f[7 : 7 + K_MAX * N_CATEGORIES].reshape(K_MAX, N_CATEGORIES)
        assert onehot[2, N_CATEGORIES - 1] == 1.0

    def test_oversize_rejected(self):
        with pytest.raises(ValueError):
            scenario_features(primitives=(1, 1, 1, 1))
        with pytest.raises(ValueError):
            scenario_features(primitives=(1, 99, 1))


class TestEncoding:
    def test_roundtrip(self):
        plan = WaypointPlan(
            coords=((-180.0, 55.0), (0.0, 40.0), (200.0, 2.0)), durations=(12, 8, 10)
        )
        y = encode_plan(plan)
        assert y.shape == (TARGET_DIM,)
        back = decode_plan(y, t_f=30 * DT, dt=DT)
        assert back.durations == plan.durations
        for (a, b), (c, d) in zip(back.coords, plan.coords):
            assert a == pytest.approx(c, abs=1e-9)
            assert b == pytest.approx(d, abs=1e-9)

    def test_sampled_plans_encode_in_unit_box(self):
        rng = np.random.default_rng(31)
        for k in range(100):
            campaign = ("Circumnavigation", "Flyby", "Ducking")[k % 3]
            starts = ("B_plusV_safe", "C_plusV_axis", "D_minusV_safe", "E_minusV_axis")
            s = sample_campaign(campaign, starts[int(rng.integers(4))], rng)
            plan = sample_heuristic_waypoints(s.path, rng, durations=s.durations)
            y = encode_plan(plan)
            assert np.all(np.abs(y) <= 1.0 + 1e-12)

    def test_short_plan_rejected_for_training(self):
        with pytest.raises(ValueError):
            encode_plan(WaypointPlan(coords=((0.0, 40.0),), durations=(10,)))

    def test_duration_projection(self):
        assert project_durations([10.2, 9.9, 10.1], 30) == (10, 10, 10)
        # rint gives (11, 10, 10); the most over-rounded entry gives back a step
        assert project_durations([10.6, 9.9, 10.1], 30) == (10, 10, 10)
        assert project_durations([10.6, 9.9, 10.1], 31) == (11, 10, 10)
        assert project_durations([0.2, 0.1, 40.0], 12) == (1, 1, 10)
        assert sum(project_durations([33.0, 33.0, 33.0], 100)) == 100
        with pytest.raises(ValueError):
            project_durations([5.0, 5.0, 5.0], 2)


class TestNetwork:
    def test_zero_net_outputs(self):
        layers = [(np.zeros((4, 8)), np.zeros(8)), (np.zeros((8, 6)), np.zeros(6))]
        mu, ls, _ = forward(layers, np.ones((3, 4)))
        assert np.all(mu == 0.0)
        assert np.all(ls == 0.0)

    def test_batch_order_invariance(self):
        rng = np.random.default_rng(0)
        layers = small_net(rng)
        x = rng.normal(size=(6, 5))
        mu, ls, _ = forward(layers, x)
        mu_r, ls_r, _ = forward(layers, x[::-1])
        np.testing.assert_allclose(mu, mu_r[::-1], rtol=1e-12)
        np.testing.assert_allclose(ls, ls_r[::-1], rtol=1e-12)

    def test_finite_everywhere(self):
        rng = np.random.default_rng(1)
        layers = small_net(rng)
        x = rng.normal(scale=20.0, size=(10000, 5))
        mu, ls, _ = forward(layers, x)
        assert np.isfinite(mu).all() and np.isfinite(ls).all()
        assert ls.min() >= -5.0 and ls.max() <= 2.0

    def test_shape_mismatch(self):
        layers = small_net(np.random.default_rng(2))
        with pytest.raises(ValueError):
            forward(layers, np.ones((2, 7)))

    def test_nll_closed_form(self):
        # zero net: mu = 0, log sigma = 0, so NLL at y = 0 is D/2 * ln(2pi)
        layers = [(np.zeros((4, 8)), np.zeros(8)), (np.zeros((8, 6)), np.zeros(6))]
        loss, _ = nll_loss_grad(layers, np.ones((2, 4)), np.zeros((2, 3)), [0.5, 0.5])
        assert loss == pytest.approx(0.5 * 3 * math.log(2 * math.pi), rel=1e-12)

    def test_nll_decreases_toward_target(self):
        rng = np.random.default_rng(3)
        layers = small_net(rng)
        x = rng.normal(size=(4, 5))
        y = rng.normal(size=(4, 3))
        mu, _, _ = forward(layers, x)
        w = np.full(4, 0.25)
        loss_far, _ = nll_loss_grad(layers, x, y + 5.0, w)
        loss_near, _ = nll_loss_grad(layers, x, mu, w)
        assert loss_near < loss_far

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(7)
        layers = small_net(rng)
        x = rng.normal(size=(6, 5))
        y = rng.normal(scale=0.5, size=(6, 3))
        w = np.asarray([0.3, 0.1, 0.2, 0.1, 0.15, 0.15])
        _, grads = nll_loss_grad(layers, x, y, w)
        eps = 1e-6
        worst = 0.0
        for _ in range(20):
            li = int(rng.integers(len(layers)))
            part = int(rng.integers(2))
            arr = layers[li][part]
            pos = tuple(int(rng.integers(s)) for s in arr.shape)
            saved = arr[pos]
            arr[pos] = saved + eps
            lp, _ = nll_loss_grad(layers, x, y, w)
            arr[pos] = saved - eps
            lm, _ = nll_loss_grad(layers, x, y, w)
            arr[pos] = saved
            fd = (lp - lm) / (2 * eps)
            an = grads[li][part][pos]
            worst = max(worst, abs(fd - an) / max(abs(fd), abs(an), 1e-8))
        assert worst < 1e-5

    def test_single_weight_matches_single_sample(self):
        rng = np.random.default_rng(11)
        layers = small_net(rng)
        x = rng.normal(size=(5, 5))
        y = rng.normal(size=(5, 3))
        w = np.zeros(5)
        w[2] = 1.0
        loss_batch, grads_batch = nll_loss_grad(layers, x, y, w)
        loss_one, grads_one = nll_loss_grad(layers, x[2:3], y[2:3], [1.0])
        assert loss_batch == pytest.approx(loss_one, rel=1e-12)
        for (gw_b, gb_b), (gw_o, gb_o) in zip(grads_batch, grads_one):
            np.testing.assert_allclose(gw_b, gw_o, rtol=1e-10, atol=1e-14)
            np.testing.assert_allclose(gb_b, gb_o, rtol=1e-10, atol=1e-14)


def synthetic_dataset(rng, n=512, d_in=6, target=None):
    x = rng.normal(size=(n, d_in))
    if target is None:
        target = np.asarray([0.4, -0.2, 0.1])
    y = np.tile(target, (n, 1))
    return x, y


class TestTraining:
    def test_constant_target_convergence(self):
        rng = np.random.default_rng(5)
        x, y = synthetic_dataset(rng)
        policy = WaypointPolicy(
            hidden_units=16, hidden_layers=2, epochs=150, batch_size=64, seed=1
        )
        policy.fit(x, y)
        mu = policy.predict(x[:100])
        # output scale is 2 (targets live in [-1, 1]); 2% of that is 0.04
        assert np.max(np.abs(mu - y[:100])) < 0.04

    def test_seeded_determinism(self):
        rng = np.random.default_rng(6)
        x, y = synthetic_dataset(rng, n=256)
        r = rng.normal(size=256)
        p1 = WaypointPolicy(hidden_units=8, hidden_layers=1, epochs=3, seed=9).fit(x, y, r)
        p2 = WaypointPolicy(hidden_units=8, hidden_layers=1, epochs=3, seed=9).fit(x, y, r)
        for (w1, b1), (w2, b2) in zip(p1.layers_, p2.layers_):
            assert np.array_equal(w1, w2)
            assert np.array_equal(b1, b2)

    def test_validation_nll_improves(self):
        rng = np.random.default_rng(8)
        x, y = synthetic_dataset(rng, n=400)
        lazy = WaypointPolicy(hidden_units=16, hidden_layers=2, epochs=0, seed=3)
        with pytest.raises(Exception):
            lazy.predict(x)  # unfitted
        policy = WaypointPolicy(hidden_units=16, hidden_layers=2, epochs=25, seed=3)
        policy.fit(x, y)
        assert policy.history_[-1]["val_nll"] < policy.history_[0]["val_nll"]

    def test_reward_weighting_pulls_toward_high_mode(self):
        # bimodal targets; rewards favor the +0.5 mode in every coordinate
        hi = np.full(3, 0.5)
        lo = np.full(3, -0.5)
        wins = 0
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            n = 256
            x = rng.normal(size=(n, 4))
            pick = rng.random(n) < 0.5
            y = np.where(pick[:, None], hi, lo) + rng.normal(scale=0.02, size=(n, 3))
            rewards = np.where(pick, 1.0, 0.0)
            kw = dict(hidden_units=8, hidden_layers=1, epochs=30, batch_size=64, seed=seed)
            weighted = WaypointPolicy(weighted=True, **kw).fit(x, y, rewards)
            unweighted = WaypointPolicy(weighted=False, **kw).fit(x, y, rewards)
            probe = rng.normal(size=(64, 4))
            d_w = np.linalg.norm(weighted.predict(probe) - hi, axis=1).mean()
            d_u = np.linalg.norm(unweighted.predict(probe) - hi, axis=1).mean()
            if d_w < d_u:
                wins += 1
        assert wins == 10

    def test_nan_abort_with_diagnostics(self):
        rng = np.random.default_rng(12)
        x, y = synthetic_dataset(rng, n=128)
        policy = WaypointPolicy(
            hidden_units=8, hidden_layers=1, epochs=5, learning_rate=1e18,
            clip_norm=None, seed=0
        )
        with np.errstate(all="ignore"), pytest.raises(RuntimeError, match="non-finite"):
            policy.fit(x, y)

    def test_standardization_stats(self):
        rng = np.random.default_rng(13)
        x = np.hstack([rng.normal(5.0, 3.0, size=(500, 4)), np.ones((500, 1))])
        y = rng.normal(size=(500, 2))
        policy = WaypointPolicy(hidden_units=4, hidden_layers=1, epochs=1, seed=0)
        policy.fit(x, y)
        xs = (x - policy.feature_mean_) / policy.feature_std_
        live = x.std(axis=0) > 1e-6
        assert np.abs(xs.mean(axis=0)) .max() < 0.1
        assert np.abs(xs[:, live].std(axis=0) - 1.0).max() < 0.1
        # constant column maps to exactly zero, not inf
        assert np.allclose(xs[:, ~live], 0.0)

    def test_estimator_api(self):
        policy = WaypointPolicy(hidden_units=32, seed=4)
        params = policy.get_params()
        assert params["hidden_units"] == 32
        twin = clone(policy)
        assert twin.get_params() == params


class TestPersistenceAndInfer:
    def _fitted(self, tmp_path=None):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(300, N_FEATURES))
        y = rng.uniform(-1, 1, size=(300, TARGET_DIM))
        r = rng.normal(size=300)
        policy = WaypointPolicy(hidden_units=16, hidden_layers=2, epochs=3, seed=2)
        return policy.fit(x, y, r)

    def test_roundtrip(self, tmp_path):
        policy = self._fitted()
        path = tmp_path / "weights.json"
        save_weights(policy, path)
        loaded = load_weights(path)
        probe = np.random.default_rng(0).normal(size=(5, N_FEATURES))
        np.testing.assert_allclose(loaded.predict(probe), policy.predict(probe), rtol=1e-12)
        import json

        doc = json.loads(path.read_text())
        assert doc["schema_version"] == 1
        assert set(doc) >= {"schema_version", "feature_stats", "layers", "clamp"}
        assert len(doc["layers"]) == 3
        with pytest.raises(ValueError):
            doc2 = dict(doc, schema_version=99)
            bad = tmp_path / "bad.json"
            bad.write_text(json.dumps(doc2))
            load_weights(bad)

    def test_infer_contract(self):
        policy = self._fitted()
        t_f = 30 * DT
        plan1 = infer(policy, X0, t_f, (6, 1, 7), 0.7, 30.0, 1.0, DT)
        plan2 = infer(policy, X0, t_f, (6, 1, 7), 0.7, 30.0, 1.0, DT)
        assert plan1 == plan2
        assert len(plan1.coords) == 3
        assert all(d >= 1 for d in plan1.durations)
        assert plan1.total_steps == 30

    def test_infer_random_horizons(self):
        policy = self._fitted()
        rng = np.random.default_rng(77)
        for _ in range(50):
            steps = int(rng.integers(12, 101))
            plan = infer(policy, X0, steps * DT, (4, 2, 5), 1.1, 20.0, 1.5, DT)
            assert plan.total_steps == steps
            assert min(plan.durations) >= 1

    def test_infer_short_sequence(self):
        policy = self._fitted()
        plan = infer(policy, X0, 20 * DT, (6,), 0.7, 30.0, 1.0, DT)
        assert len(plan.coords) == 1
        assert plan.total_steps == 20
        with pytest.raises(ValueError):
            infer(policy, X0, 20 * DT, (), 0.7, 30.0, 1.0, DT)

    def test_sample_mode_tracks_mean_when_sigma_tiny(self):
        policy = self._fitted()
        # force the clamp ceiling far down so sigma = e^-30
        policy.clamp_lo = -30.0
        policy.clamp_hi = -30.0
        feats = featurize(X0, 30 * DT, (6, 1, 7), 0.7, 30.0, 1.0)[None, :]
        mu = policy.predict(feats)[0]
        y = policy.sample(feats, np.random.default_rng(5))[0]
        np.testing.assert_allclose(y, mu, atol=1e-9)
        plan_mean = infer(policy, X0, 30 * DT, (6, 1, 7), 0.7, 30.0, 1.0, DT, mode="mean")
        plan_samp = infer(
            policy,
            X0,
            30 * DT,
            (6, 1, 7),
            0.7,
            30.0,
            1.0,
            DT,
            mode="sample",
            rng=np.random.default_rng(5),
        )
        assert plan_samp.durations == plan_mean.durations
        np.testing.assert_allclose(plan_samp.coords, plan_mean.coords, atol=1e-6)

    def test_sample_mode_needs_rng(self):
        policy = self._fitted()
        with pytest.raises(ValueError):
            infer(policy, X0, 30 * DT, (6, 1, 7), 0.7, 30.0, 1.0, DT, mode="sample")
        with pytest.raises(ValueError):
            infer(policy, X0, 30 * DT, (6, 1, 7), 0.7, 30.0, 1.0, DT, mode="bogus")
