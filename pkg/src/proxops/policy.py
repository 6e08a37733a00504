"""Conditional-Gaussian waypoint generator with hand-rolled backprop.

Input features: start state, horizon, three behavior one-hot blocks, and
scenario context (chief phase, zone radius, dispersion scale). Targets are
the per-phase (d_lambda, d_eyiy, duration) triples normalized to [-1, 1] by
the domain-box and duration-window hulls. A small MLP predicts a diagonal
Gaussian over the targets; training maximizes reward-weighted log-likelihood
with momentum descent and cosine learning-rate decay.
"""

from __future__ import annotations

import json
import math

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from proxops.graph import (
    DEFAULT_DURATION_WINDOWS,
    DOMAIN_BOXES,
    K_MAX,
    PRIMITIVES,
    WaypointPlan,
)
from proxops.orbits import RoeState
from proxops.rewards import batch_weights

SCHEMA_VERSION = 1

N_CATEGORIES = len(PRIMITIVES) + 1  # 11 primitives plus a no-op padding slot
NOOP_CATEGORY = N_CATEGORIES - 1
N_FEATURES = 6 + 1 + K_MAX * N_CATEGORIES + 4
TARGET_DIM = 3 * K_MAX

_LOG_2PI = math.log(2.0 * math.pi)


def _hull(intervals) -> tuple[float, float]:
    lo = min(v[0] for v in intervals)
    hi = max(v[1] for v in intervals)
    return 0.5 * (hi + lo), 0.5 * (hi - lo)


_LAM_CENTER, _LAM_HALF = _hull([b.d_lambda for b in DOMAIN_BOXES.values()])
_E_CENTER, _E_HALF = _hull([b.d_eyiy for b in DOMAIN_BOXES.values()])
_DUR_CENTER, _DUR_HALF = _hull(list(DEFAULT_DURATION_WINDOWS.values()))


def featurize(
    x0: RoeState,
    t_f: float,
    primitives,
    mean_anomaly: float,
    r_koz: float,
    beta: float,
) -> np.ndarray:
    """Fixed-length raw feature vector; standardization happens in the model."""
    primitives = tuple(primitives)
    if len(primitives) > K_MAX:
        raise ValueError(f"behavior sequence longer than K_max={K_MAX}: {primitives}")
    onehot = np.zeros(K_MAX * N_CATEGORIES)
    for slot in range(K_MAX):
        if slot < len(primitives):
            pid = primitives[slot]
            if pid not in PRIMITIVES:
                raise ValueError(f"unknown primitive id {pid}")
            onehot[slot * N_CATEGORIES + (pid - 1)] = 1.0
        else:
            onehot[slot * N_CATEGORIES + NOOP_CATEGORY] = 1.0
    return np.concatenate(
        [
            x0.as_array(),
            [float(t_f)],
            onehot,
            [math.sin(mean_anomaly), math.cos(mean_anomaly), float(r_koz), float(beta)],
        ]
    )


def encode_plan(plan: WaypointPlan) -> np.ndarray:
    """Normalized 9-vector of per-phase (d_lambda, d_eyiy, duration)."""
    if len(plan.coords) != K_MAX:
        raise ValueError(f"training plans must have {K_MAX} phases, got {len(plan.coords)}")
    y = np.empty(TARGET_DIM)
    for k, ((dl, de), dur) in enumerate(zip(plan.coords, plan.durations)):
        y[3 * k] = (dl - _LAM_CENTER) / _LAM_HALF
        y[3 * k + 1] = (de - _E_CENTER) / _E_HALF
        y[3 * k + 2] = (dur - _DUR_CENTER) / _DUR_HALF
    return y


def project_durations(raw, total: int) -> tuple[int, ...]:
    """Integers >= 1 summing to total, nearest to the raw real durations."""
    raw = np.asarray(raw, dtype=float)
    k = raw.size
    if total < k:
        raise ValueError(f"cannot fit {k} phases of >= 1 step into {total} steps")
    d = np.maximum(1, np.rint(raw)).astype(int)
    residual = raw - d
    while d.sum() < total:
        j = int(np.argmax(residual))
        d[j] += 1
        residual[j] -= 1.0
    while d.sum() > total:
        order = np.argsort(residual)
        for j in order:
            if d[j] > 1:
                d[j] -= 1
                residual[j] += 1.0
                break
        else:
            raise RuntimeError("duration projection stuck")  # unreachable: sum > total >= k
    return tuple(int(v) for v in d)


def decode_plan(y, t_f: float, dt: float, k: int = K_MAX) -> WaypointPlan:
    """Denormalize k phases and project durations to match the horizon."""
    y = np.asarray(y, dtype=float)
    if y.shape != (TARGET_DIM,):
        raise ValueError(f"expected a {TARGET_DIM}-vector, got shape {y.shape}")
    if not 1 <= k <= K_MAX:
        raise ValueError(f"k must be 1..{K_MAX}")
    coords = []
    raw_durs = []
    for j in range(k):
        coords.append(
            (
                float(y[3 * j] * _LAM_HALF + _LAM_CENTER),
                float(y[3 * j + 1] * _E_HALF + _E_CENTER),
            )
        )
        raw_durs.append(float(y[3 * j + 2] * _DUR_HALF + _DUR_CENTER))
    total = int(np.rint(t_f / dt))
    durations = project_durations(raw_durs, total)
    return WaypointPlan(coords=tuple(coords), durations=durations)


def init_layers(rng: np.random.Generator, sizes) -> list[tuple[np.ndarray, np.ndarray]]:
    """Glorot-uniform weights, zero biases, for consecutive size pairs."""
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((w, np.zeros(fan_out)))
    return layers


def _silu(z):
    s = expit(z)
    return z * s, s


def forward(layers, x, clamp=(-5.0, 2.0)):
    """Batch forward pass: (mu, log_sigma, cache) with log_sigma clamped."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != layers[0][0].shape[0]:
        raise ValueError(f"input dim {x.shape[1]} != {layers[0][0].shape[0]}")
    h = x
    hidden = []
    for w, b in layers[:-1]:
        z = h @ w + b
        a, s = _silu(z)
        hidden.append((h, z, s))
        h = a
    w, b = layers[-1]
    out = h @ w + b
    m = out.shape[1] // 2
    mu = out[:, :m]
    s_raw = out[:, m:]
    log_sigma = np.clip(s_raw, clamp[0], clamp[1])
    return mu, log_sigma, (hidden, h, s_raw)


def nll_loss_grad(layers, x, y, weights, clamp=(-5.0, 2.0)):
    """Weighted diagonal-Gaussian NLL and its parameter gradients.

    loss = sum_n w_n * sum_i [0.5 ln 2pi + ls_ni + 0.5 ((y - mu)/sigma)^2].
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    w_batch = np.asarray(weights, dtype=float)
    mu, ls, (hidden, h_last, s_raw) = forward(layers, x, clamp)
    inv_var = np.exp(-2.0 * ls)
    err = mu - y
    per_sample = np.sum(0.5 * _LOG_2PI + ls + 0.5 * err * err * inv_var, axis=1)
    loss = float(w_batch @ per_sample)

    wn = w_batch[:, None]
    dmu = wn * err * inv_var
    dls = wn * (1.0 - err * err * inv_var)
    # clamped entries contribute no gradient to the raw head
    mask = (s_raw > clamp[0]) & (s_raw < clamp[1])
    dout = np.concatenate([dmu, dls * mask], axis=1)

    grads = [None] * len(layers)
    w, _ = layers[-1]
    grads[-1] = (h_last.T @ dout, dout.sum(axis=0))
    dh = dout @ w.T
    for idx in range(len(layers) - 2, -1, -1):
        h_in, z, s = hidden[idx]
        dz = dh * (s * (1.0 + z * (1.0 - s)))
        grads[idx] = (h_in.T @ dz, dz.sum(axis=0))
        dh = dz @ layers[idx][0].T
    return loss, grads


class WaypointPolicy(BaseEstimator):
    """Gaussian waypoint regressor with reward-weighted likelihood training."""

    def __init__(
        self,
        hidden_units: int = 128,
        hidden_layers: int = 3,
        learning_rate: float = 1e-3,
        momentum: float = 0.9,
        epochs: int = 400,
        batch_size: int = 256,
        val_fraction: float = 0.1,
        weighted: bool = True,
        clamp_lo: float = -5.0,
        clamp_hi: float = 2.0,
        clip_norm: float = 10.0,
        seed: int = 0,
    ):
        self.hidden_units = hidden_units
        self.hidden_layers = hidden_layers
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.epochs = epochs
        self.batch_size = batch_size
        self.val_fraction = val_fraction
        self.weighted = weighted
        self.clamp_lo = clamp_lo
        self.clamp_hi = clamp_hi
        self.clip_norm = clip_norm
        self.seed = seed

    @property
    def _clamp(self):
        return (self.clamp_lo, self.clamp_hi)

    def fit(self, X, y, rewards=None):
        X = check_array(X, dtype=float)
        y = check_array(y, dtype=float)
        n, d_in = X.shape
        if y.shape[0] != n:
            raise ValueError("X and y row counts differ")
        if rewards is not None:
            rewards = np.asarray(rewards, dtype=float)
            if rewards.shape != (n,):
                raise ValueError(f"rewards must be shape ({n},)")

        rng = np.random.default_rng(self.seed)
        perm = rng.permutation(n)
        n_val = int(round(self.val_fraction * n))
        n_val = min(max(n_val, 1 if n > 1 else 0), n - 1)
        val_idx, train_idx = perm[:n_val], perm[n_val:]

        mean = X[train_idx].mean(axis=0)
        std = X[train_idx].std(axis=0)
        std = np.where(std < 1e-8, 1.0, std)
        self.feature_mean_, self.feature_std_ = mean, std
        xt = (X[train_idx] - mean) / std
        xv = (X[val_idx] - mean) / std
        yt, yv = y[train_idx], y[val_idx]
        rt = rewards[train_idx] if rewards is not None else None

        sizes = [d_in] + [self.hidden_units] * self.hidden_layers + [2 * y.shape[1]]
        layers = init_layers(rng, sizes)
        velocity = [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]

        n_train = xt.shape[0]
        batch = min(self.batch_size, n_train)
        n_batches = max(1, n_train // batch)
        total_steps = max(1, self.epochs * n_batches)
        step = 0
        history = []
        for epoch in range(self.epochs):
            order = rng.permutation(n_train)
            epoch_losses = []
            for k in range(n_batches):
                idx = order[k * batch : (k + 1) * batch]
                if self.weighted and rt is not None:
                    w_batch = batch_weights(rt[idx])
                else:
                    w_batch = np.full(idx.size, 1.0 / idx.size)
                loss, grads = nll_loss_grad(layers, xt[idx], yt[idx], w_batch, self._clamp)
                if not np.isfinite(loss):
                    raise RuntimeError(
                        f"non-finite training loss {loss} at epoch {epoch} batch {k}"
                    )
                # the NLL landscape stiffens as sigma approaches the clamp
                # floor; a global-norm clip keeps momentum steps bounded there
                if self.clip_norm is not None:
                    gsq = sum(float((gw * gw).sum() + (gb * gb).sum()) for gw, gb in grads)
                    gnorm = math.sqrt(gsq)
                    if gnorm > self.clip_norm:
                        scale = self.clip_norm / gnorm
                        grads = [(gw * scale, gb * scale) for gw, gb in grads]
                lr = self.learning_rate * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
                new_layers, new_velocity = [], []
                for (w, b), (vw, vb), (gw, gb) in zip(layers, velocity, grads):
                    vw = self.momentum * vw - lr * gw
                    vb = self.momentum * vb - lr * gb
                    new_layers.append((w + vw, b + vb))
                    new_velocity.append((vw, vb))
                layers, velocity = new_layers, new_velocity
                epoch_losses.append(loss)
                step += 1
            val_nll = self._mean_nll(layers, xv, yv) if xv.shape[0] else float("nan")
            history.append(
                {
                    "epoch": epoch,
                    "train_nll": float(np.mean(epoch_losses)),
                    "val_nll": val_nll,
                }
            )
        self.layers_ = layers
        self.history_ = history
        self.n_features_in_ = d_in
        return self

    def _mean_nll(self, layers, x_std, y):
        if x_std.shape[0] == 0:
            return float("nan")
        w = np.full(x_std.shape[0], 1.0 / x_std.shape[0])
        loss, _ = nll_loss_grad(layers, x_std, y, w, self._clamp)
        return float(loss)

    def _standardize(self, X):
        X = check_array(X, dtype=float)
        return (X - self.feature_mean_) / self.feature_std_

    def predict(self, X) -> np.ndarray:
        """Deterministic mean prediction in the normalized target space."""
        check_is_fitted(self, "layers_")
        mu, _, _ = forward(self.layers_, self._standardize(X), self._clamp)
        return mu

    def predict_dist(self, X):
        check_is_fitted(self, "layers_")
        mu, ls, _ = forward(self.layers_, self._standardize(X), self._clamp)
        return mu, ls

    def sample(self, X, rng: np.random.Generator) -> np.ndarray:
        mu, ls = self.predict_dist(X)
        return mu + np.exp(ls) * rng.standard_normal(mu.shape)

    def validation_nll(self) -> float:
        check_is_fitted(self, "history_")
        return self.history_[-1]["val_nll"]


def infer(
    policy: WaypointPolicy,
    x0: RoeState,
    t_f: float,
    primitives,
    mean_anomaly: float,
    r_koz: float,
    beta: float,
    dt: float,
    mode: str = "mean",
    rng: np.random.Generator | None = None,
) -> WaypointPlan:
    """Predict a waypoint plan for one scenario; durations honor t_f exactly."""
    primitives = tuple(primitives)
    if not primitives:
        raise ValueError("cannot infer a plan for an empty behavior sequence")
    feats = featurize(x0, t_f, primitives, mean_anomaly, r_koz, beta)[None, :]
    if mode == "mean":
        y = policy.predict(feats)[0]
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        y = policy.sample(feats, rng)[0]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return decode_plan(y, t_f, dt, k=len(primitives))


def save_weights(policy: WaypointPolicy, path) -> None:
    check_is_fitted(policy, "layers_")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "feature_stats": {
            "mean": policy.feature_mean_.tolist(),
            "std": policy.feature_std_.tolist(),
        },
        "layers": [
            {"weight": w.tolist(), "bias": b.tolist()} for w, b in policy.layers_
        ],
        "clamp": [policy.clamp_lo, policy.clamp_hi],
        "config": policy.get_params(),
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True)


def load_weights(path) -> WaypointPolicy:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported weights schema {doc.get('schema_version')}")
    policy = WaypointPolicy(**doc["config"])
    policy.clamp_lo, policy.clamp_hi = doc["clamp"]
    policy.feature_mean_ = np.asarray(doc["feature_stats"]["mean"], dtype=float)
    policy.feature_std_ = np.asarray(doc["feature_stats"]["std"], dtype=float)
    policy.layers_ = [
        (np.asarray(layer["weight"], dtype=float), np.asarray(layer["bias"], dtype=float))
        for layer in doc["layers"]
    ]
    policy.history_ = doc.get("history", [])
    policy.n_features_in_ = policy.layers_[0][0].shape[0]
    return policy
