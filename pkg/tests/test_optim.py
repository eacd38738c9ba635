import math

import numpy as np
import pytest

from tweettopics.classifier import ModelSnapshot, bce_from_logits, init_bias
from tweettopics.features import ExtractorConfig, FeatureVector
from tweettopics.labels import N_TOPICS, LabelStats, TopicLabels
from tweettopics.metrics import f1_scores
from tweettopics.optim import (
    NonFiniteGradient,
    OptimizerState,
    TrainConfig,
    adamw_step,
    lr_at,
    train,
)

EXT = ExtractorConfig(dim=2**10, ngram_min=1, ngram_max=2, seed=0)
CFG = TrainConfig()


class TestSchedule:
    def test_peak_reached_at_warmup_end(self):
        assert lr_at(100, 1000, CFG) == pytest.approx(5e-5, abs=1e-20)

    def test_linear_decay_midpoint(self):
        assert lr_at(550, 1000, CFG) == pytest.approx(2.5e-5, abs=1e-18)

    def test_end_lr_exact_at_total(self):
        assert lr_at(1000, 1000, CFG) == 0.0
        cfg = TrainConfig(end_lr=1e-6)
        assert lr_at(1000, 1000, cfg) == 1e-6

    def test_continuous_at_warmup_boundary(self):
        total, warmup = 1000, 100
        left = lr_at(warmup - 1, total, CFG)
        at = lr_at(warmup, total, CFG)
        right = lr_at(warmup + 1, total, CFG)
        step_size = CFG.peak_lr / warmup
        assert at == CFG.peak_lr
        assert abs(at - left) <= step_size + 1e-18
        assert abs(right - at) <= CFG.peak_lr / (total - warmup) + 1e-18

    def test_nonincreasing_after_warmup(self):
        values = [lr_at(s, 1000, CFG) for s in range(100, 1001)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_warmup_is_linear_from_zero(self):
        assert lr_at(0, 1000, CFG) == 0.0
        assert lr_at(50, 1000, CFG) == pytest.approx(2.5e-5)

    def test_decay_power_two(self):
        cfg = TrainConfig(decay_power=2.0)
        # quarter through decay: (1 - 0.25)^2 = 0.5625 of peak
        assert lr_at(325, 1000, cfg) == pytest.approx(5e-5 * 0.75**2)

    def test_zero_total_steps_error(self):
        with pytest.raises(ValueError):
            lr_at(0, 0, CFG)

    def test_step_out_of_range_error(self):
        with pytest.raises(ValueError):
            lr_at(1001, 1000, CFG)


class TestAdamW:
    def test_zero_gradient_pure_decoupled_decay(self):
        # the signature that separates AdamW from Adam+L2
        params = {"W": np.array([1.0])}
        grads = {"W": np.array([0.0])}
        state = OptimizerState.for_params(params)
        cfg = TrainConfig(weight_decay=0.01)
        adamw_step(params, grads, state, lr=0.1, cfg=cfg, decay_params=frozenset({"W"}))
        assert abs(params["W"][0] - 0.999) < 1e-15

    def test_first_step_bias_correction(self):
        params = {"W": np.array([0.0])}
        grads = {"W": np.array([1.0])}
        state = OptimizerState.for_params(params)
        cfg = TrainConfig(weight_decay=0.0)
        adamw_step(params, grads, state, lr=0.01, cfg=cfg)
        # m_hat = g, v_hat = g^2, so the step is lr * g/(|g|+eps) ~ lr
        assert params["W"][0] == pytest.approx(-0.01, abs=1e-9)

    def test_lr_zero_updates_moments_not_params(self):
        params = {"W": np.array([2.0])}
        grads = {"W": np.array([3.0])}
        state = OptimizerState.for_params(params)
        adamw_step(params, grads, state, lr=0.0, cfg=CFG)
        assert params["W"][0] == 2.0
        assert state.m["W"][0] == pytest.approx(0.3)
        assert state.v["W"][0] == pytest.approx(0.009)
        assert state.step == 1

    def test_no_decay_on_excluded_params(self):
        params = {"b": np.array([1.0])}
        grads = {"b": np.array([0.0])}
        state = OptimizerState.for_params(params)
        cfg = TrainConfig(weight_decay=0.01)
        adamw_step(params, grads, state, lr=0.1, cfg=cfg)  # default decay set lacks "b"
        assert params["b"][0] == 1.0

    def test_non_finite_gradient_aborts(self):
        params = {"W": np.array([1.0])}
        state = OptimizerState.for_params(params)
        with pytest.raises(NonFiniteGradient, match="W"):
            adamw_step(params, {"W": np.array([float("nan")])}, state, lr=0.1, cfg=CFG)

    def test_matches_textbook_adam_oracle_100_steps(self):
        # independent straight-line Adam, explicit loops over a flat array
        class Adam:
            def __init__(self, n, lr, b1=0.9, b2=0.999, eps=1e-8):
                self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
                self.m = [0.0] * n
                self.v = [0.0] * n
                self.t = 0

            def step(self, theta, g):
                self.t += 1
                out = list(theta)
                for i in range(len(theta)):
                    self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g[i]
                    self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g[i] * g[i]
                    m_hat = self.m[i] / (1 - self.b1**self.t)
                    v_hat = self.v[i] / (1 - self.b2**self.t)
                    out[i] = theta[i] - self.lr * m_hat / (math.sqrt(v_hat) + self.eps)
                return out

        rng = np.random.default_rng(11)
        n = 16
        lr = 3e-3
        theta_oracle = list(rng.normal(size=n))
        params = {"W": np.array(theta_oracle, dtype=np.float64)}
        state = OptimizerState.for_params(params)
        cfg = TrainConfig(weight_decay=0.0)
        oracle = Adam(n, lr)
        for _ in range(100):
            g = rng.normal(size=n)
            theta_oracle = oracle.step(theta_oracle, list(g))
            adamw_step(params, {"W": g.copy()}, state, lr=lr, cfg=cfg)
        diff = np.max(np.abs(params["W"] - np.array(theta_oracle)))
        assert diff < 1e-12


def _example(idx_on, dim=EXT.dim, labels=(True,) + (False,) * 7):
    entries = {i: 1.0 for i in idx_on}
    norm = math.sqrt(len(entries)) if entries else 1.0
    return (FeatureVector(dim=dim, entries={i: 1 / norm for i in idx_on}),
            TopicLabels(labels))


class TestTrain:
    def test_zero_epochs_identity(self):
        init = ModelSnapshot.initial(EXT, np.zeros(N_TOPICS))
        data = [_example([1, 2])]
        result = train(data, TrainConfig(epochs=0), init)
        assert result.snapshot is init
        assert result.losses == []

    def test_overfit_single_sample(self):
        # with batch size 1 the batch norm zeroes the feature path, so the
        # bias alone must drive the loss down
        init = ModelSnapshot.initial(EXT, np.zeros(N_TOPICS))
        data = [_example([5], labels=(True,) + (False,) * 7)]
        cfg = TrainConfig(peak_lr=0.1, weight_decay=0.0, epochs=800,
                          batch_size=1, seed=0)
        result = train(data, cfg, init)
        losses = result.losses
        assert losses[-1] < 0.01
        warmup = round(cfg.warmup_frac * len(losses))
        tail = losses[warmup:]
        # monotone within noise: median of each third strictly decreases
        third = len(tail) // 3
        m1 = float(np.median(tail[:third]))
        m2 = float(np.median(tail[third : 2 * third]))
        m3 = float(np.median(tail[2 * third :]))
        assert m1 > m2 > m3

    def test_separable_two_label_set_reaches_f1_99(self):
        # 200 samples, only the first two topics ever positive, each marked
        # by its own disjoint feature
        rng = np.random.default_rng(5)
        data = []
        for i in range(200):
            a, b = bool(rng.random() < 0.4), bool(rng.random() < 0.3)
            on = [10] * a + [20] * b + [30 + int(rng.integers(5))]
            labels = (a, b) + (False,) * 6
            data.append(_example(on, labels=labels))
        stats = LabelStats.from_labels([lab for _, lab in data]).smoothed()
        init = ModelSnapshot.initial(EXT, init_bias(stats))
        cfg = TrainConfig(peak_lr=0.3, weight_decay=0.0, epochs=40, batch_size=32, seed=0)
        result = train(data, cfg, init)
        from tweettopics.classifier import predict_batch

        preds = predict_batch([x for x, _ in data], result.snapshot)
        report = f1_scores([p.values for p in preds], [lab.values for _, lab in data])
        assert report.weighted_f1 >= 0.99

    def test_bias_init_never_worse_than_zero_bias_at_step_zero(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n = int(rng.integers(50, 400))
            pos = rng.integers(1, n, size=N_TOPICS)
            Y = np.zeros((n, N_TOPICS))
            for k in range(N_TOPICS):
                Y[rng.permutation(n)[: pos[k]], k] = 1.0
            stats = LabelStats(tuple(int(p) for p in pos), tuple(int(n - p) for p in pos))
            b = init_bias(stats)
            # with W = 0 the logits equal the bias for every sample
            loss_init = bce_from_logits(np.tile(b, (n, 1)), Y)
            loss_zero = bce_from_logits(np.zeros((n, N_TOPICS)), Y)
            assert loss_init <= loss_zero + 1e-12

    def test_fixed_seed_bit_identical_loss_curves(self):
        rng = np.random.default_rng(9)
        data = []
        for i in range(64):
            on = [int(rng.integers(0, 50))]
            labels = tuple(bool(rng.random() < 0.3) for _ in range(N_TOPICS))
            data.append(_example(on, labels=labels))
        init = ModelSnapshot.initial(EXT, np.zeros(N_TOPICS))
        cfg = TrainConfig(peak_lr=0.01, epochs=3, batch_size=16, seed=123)
        r1 = train(data, cfg, init)
        r2 = train(data, cfg, init)
        assert r1.losses == r2.losses
        assert r1.snapshot.W.tobytes() == r2.snapshot.W.tobytes()

    def test_empty_dataset_rejected(self):
        init = ModelSnapshot.initial(EXT, np.zeros(N_TOPICS))
        with pytest.raises(ValueError):
            train([], CFG, init)
