"""Chance-constrained passive safety of post-maneuver free-drift arcs.

Every control epoch t_j must satisfy: if no further burns happen, the drifted
state stays outside the keep-out ellipsoid at each drift offset tau_i in
[0, tau_s], with confidence 1 - delta. The deterministic form of the chance
constraint is

    margin_ji = 1 - x_j^T S_ji x_j + q(delta) * sqrt(g_ji^T Sigma_ji g_ji) <= 0

with S_ji = (Psi_ji Phi_ji)^T P (Psi_ji Phi_ji), g_ji the gradient of the
quadratic part in the drifted state, and Sigma_ji the dispersion propagated
along the drift arc. Feasible states have margin <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from proxops.orbits import (
    Impulse,
    OrbitalElements,
    RoeState,
    gamma_batch,
    psi_batch,
    stm_batch,
)
from proxops.uncertainty import propagate_covariance, risk_quantile


@dataclass(frozen=True)
class KeepOutZone:
    """Ellipsoidal keep-out region around the target plus observation shell."""

    r_koz: float
    shape: tuple[float, float, float] = None  # type: ignore[assignment]
    delta_r_obs: float = 50.0

    def __post_init__(self):
        if self.shape is None:
            object.__setattr__(self, "shape", (self.r_koz, self.r_koz, self.r_koz))
        if any(s <= 0 for s in self.shape):
            raise ValueError(f"KOZ semi-axes must be positive, got {self.shape}")
        if self.delta_r_obs < 0:
            raise ValueError(f"delta_r_obs must be nonnegative, got {self.delta_r_obs}")


@dataclass
class SafetyConstraintEval:
    margin: float
    gradient_x: np.ndarray
    worst_drift_step: int


def shape_matrix(koz: KeepOutZone) -> np.ndarray:
    """6x6 ellipsoid matrix: positional semi-axes, zero velocity weight."""
    p = np.zeros((6, 6))
    p[0, 0] = 1.0 / koz.shape[0] ** 2
    p[1, 1] = 1.0 / koz.shape[1] ** 2
    p[2, 2] = 1.0 / koz.shape[2] ** 2
    return p


def drift_grid(tau_s: float, dt: float) -> np.ndarray:
    """Offsets {0, dt, 2dt, ...} up to and including tau_s."""
    if tau_s <= 0 or dt <= 0:
        raise ValueError("tau_s and dt must be positive")
    grid = np.arange(0.0, tau_s, dt)
    if tau_s - grid[-1] > 1e-9:
        grid = np.append(grid, tau_s)
    return grid


class PhaseSafetyModel:
    """Precomputed drift-arc geometry for a batch of control epochs.

    Vectorizes the margin evaluation over control epochs j (axis 0) and drift
    offsets i (axis 1) so the SCP loop pays the STM/Psi assembly cost once.
    """

    def __init__(
        self,
        oe: OrbitalElements,
        epochs: np.ndarray,
        offsets: np.ndarray,
        koz: KeepOutZone,
        delta: float,
        q_process: np.ndarray | None = None,
    ):
        self.oe = oe
        self.epochs = np.asarray(epochs, dtype=float)
        self.offsets = np.asarray(offsets, dtype=float)
        self.koz = koz
        self.q = risk_quantile(delta)
        self.q_process = np.zeros((6, 6)) if q_process is None else np.asarray(q_process)

        tj = self.epochs[:, None]
        tau = self.offsets[None, :]
        phis = stm_batch(oe, tj, tau)  # (d, m, 6, 6)
        psis = psi_batch(oe, tj + tau)  # (d, m, 6, 6)
        self.d2 = 1.0 / np.asarray(koz.shape, dtype=float) ** 2
        self.psi_pos = psis[..., :3, :]  # (d, m, 3, 6)
        self.mpos = self.psi_pos @ phis  # rows of Psi Phi mapping x_j -> drifted RTN position
        if len(self.offsets) > 1:
            steps = np.diff(self.offsets)
            self.phi_steps = stm_batch(oe, tj + self.offsets[None, :-1], steps[None, :])
        else:
            self.phi_steps = np.zeros((len(self.epochs), 0, 6, 6))
        self.gammas = gamma_batch(oe, self.epochs)  # (d, 6, 3)

    def drift_covariances(self, sigma0: np.ndarray) -> np.ndarray:
        """Sigma_ji for every drift offset; sigma0 has shape (d, 6, 6)."""
        d, m = self.mpos.shape[:2]
        out = np.empty((d, m, 6, 6))
        sig = np.asarray(sigma0, dtype=float)
        out[:, 0] = sig
        for i in range(m - 1):
            phi = self.phi_steps[:, i]
            sig = phi @ sig @ phi.transpose(0, 2, 1) + self.q_process
            sig = 0.5 * (sig + sig.transpose(0, 2, 1))
            out[:, i + 1] = sig
        return out

    def margin_terms(self, x: np.ndarray, sigma0: np.ndarray):
        """Quadratic and inflation pieces of the margins.

        x: (d, 6) post-maneuver states; sigma0: (d, 6, 6) initial dispersions.
        Returns (quad, inflation, p, g) with quad/inflation shaped (d, m).
        """
        p = np.einsum("dmij,dj->dmi", self.mpos, x)  # scaled RTN positions
        quad = 1.0 - np.einsum("dmi,i,dmi->dm", p, self.d2, p)
        g = -2.0 * np.einsum("dmij,i,dmi->dmj", self.psi_pos, self.d2, p)
        sig = self.drift_covariances(sigma0)
        var = np.einsum("dmi,dmij,dmj->dm", g, sig, g)
        inflation = self.q * np.sqrt(np.maximum(var, 0.0))
        return quad, inflation, p, g

    def margins(self, x: np.ndarray, sigma0: np.ndarray) -> np.ndarray:
        quad, inflation, _, _ = self.margin_terms(x, sigma0)
        return quad + inflation

    def post_states(self, x_pre: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Post-maneuver states x_j + Gamma_j u_j; inputs (d, 6) and (d, 3)."""
        return x_pre + np.einsum("djk,dk->dj", self.gammas, u)

    def linear_rows(self, x_pre_ref: np.ndarray, u_ref: np.ndarray, sigma0_ref: np.ndarray):
        """Affine margin rows about a reference, per control epoch.

        The margin acts on the post-maneuver state x_j + Gamma_j u_j; the row
        is expressed over the pre-maneuver pair (x_j, u_j). The inflation term
        sqrt(g^T Sigma g) is frozen at the reference; the concave quadratic is
        expanded to first order. Returns (A, b) with A shaped (d, m, 9) over
        [x_j, u_j] and b shaped (d, m), so that model margin = A @ [x, u] + b.
        """
        x_post = self.post_states(x_pre_ref, u_ref)
        quad, inflation, p, _ = self.margin_terms(x_post, sigma0_ref)
        grad_x = -2.0 * np.einsum("dmij,i,dmi->dmj", self.mpos, self.d2, p)  # (d, m, 6)
        grad_u = np.einsum("dmj,djk->dmk", grad_x, self.gammas)  # (d, m, 3)
        a = np.concatenate([grad_x, grad_u], axis=-1)
        ref = np.concatenate([x_pre_ref, u_ref], axis=-1)  # (d, 9)
        margin_ref = quad + inflation
        b = margin_ref - np.einsum("dmk,dk->dm", a, ref)
        return a, b


def drift_constraint_margin(
    x_post: RoeState,
    sigma0: np.ndarray,
    koz: KeepOutZone,
    delta: float,
    drift_offsets: np.ndarray,
    oe: OrbitalElements,
    t_j: float = 0.0,
    q_process: np.ndarray | None = None,
):
    """Per-drift-step safety evaluations plus the aggregate worst case.

    Returns (evals, worst): evals[i] carries the margin, its gradient in the
    post-maneuver state (inflation term frozen), and the step index.
    """
    model = PhaseSafetyModel(oe, np.array([t_j]), drift_offsets, koz, delta, q_process)
    x = x_post.as_array()[None, :]
    sig = np.asarray(sigma0, dtype=float)[None, :, :]
    quad, inflation, p, g = model.margin_terms(x, sig)
    grad = -2.0 * np.einsum("dmij,i,dmi->dmj", model.mpos, model.d2, p)
    # inflation term varies with x through g = B x; add q * B^T Sigma g / ||.||
    sigs = model.drift_covariances(sig)
    bmat = -2.0 * np.einsum("dmaj,a,dmak->dmjk", model.psi_pos, model.d2, model.mpos)
    sg = np.einsum("dmjk,dmk->dmj", sigs, g)
    norm = np.sqrt(np.maximum(np.einsum("dmj,dmj->dm", g, sg), 0.0))
    safe = norm > 0.0
    infl_grad = np.zeros_like(grad)
    infl_grad[safe] = (
        model.q * np.einsum("njk,nj->nk", bmat[safe], sg[safe]) / norm[safe][:, None]
    )
    grad = (grad + infl_grad)[0]
    margins = (quad + inflation)[0]
    evals = [
        SafetyConstraintEval(margin=float(margins[i]), gradient_x=grad[i], worst_drift_step=i)
        for i in range(len(margins))
    ]
    worst = int(np.argmax(margins))
    aggregate = SafetyConstraintEval(
        margin=float(margins[worst]), gradient_x=grad[worst], worst_drift_step=worst
    )
    return evals, aggregate


def linearize_margin(
    x_ref: RoeState,
    u_ref: Impulse,
    sigma0_ref: np.ndarray,
    koz: KeepOutZone,
    delta: float,
    drift_offsets: np.ndarray,
    oe: OrbitalElements,
    t_j: float = 0.0,
    q_process: np.ndarray | None = None,
):
    """Affine rows (A, b) over (x_j, u_j) for one control epoch.

    A has shape (m, 9), b shape (m,); evaluating A @ [x_ref, u_ref] + b
    reproduces the nonlinear margins at the reference exactly.
    """
    model = PhaseSafetyModel(oe, np.array([t_j]), drift_offsets, koz, delta, q_process)
    a, b = model.linear_rows(
        x_ref.as_array()[None, :],
        u_ref.as_array()[None, :],
        np.asarray(sigma0_ref, dtype=float)[None, :, :],
    )
    return a[0], b[0]
