"""Navigation/execution uncertainty models and the Gaussian quantile.

Covariances live in meter-scaled qnsROE coordinates (m^2). The navigation
covariance is the rank-1 range-proportional model, execution errors follow a
Gates-style magnitude + pointing decomposition, and drift-arc propagation is
the usual linear-Gaussian recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from proxops.orbits import Impulse, OrbitalElements, RoeState, gamma_batch, rtn_range

# 1-sigma qnsROE navigation error shape at beta = 1 (meters)
NAV_SIGMA_SHAPE = 1e-3 * np.array([0.1, 4.0, 2.0, 2.0, 2.0, 2.0])


def _default_q() -> np.ndarray:
    return np.diag(np.full(6, 1e-4))


@dataclass
class UncertaintyConfig:
    """Knobs of the uncertainty model; all overridable from the run config."""

    beta: float = 1.0
    q_process: np.ndarray = field(default_factory=_default_q)
    gates_mag_frac: float = 0.01
    gates_mag_fixed: float = 1e-4
    gates_point_sigma: float = 0.0175
    tau_s: float | None = None  # None -> one orbital period of the chief
    delta_risk: float = 0.01

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0.0 < self.delta_risk < 0.5:
            raise ValueError(f"delta_risk must be in (0, 0.5), got {self.delta_risk}")
        if self.tau_s is not None and not self.tau_s > 0:
            raise ValueError(f"tau_s must be positive, got {self.tau_s}")
        q = np.asarray(self.q_process, dtype=float)
        if q.shape != (6, 6):
            raise ValueError(f"q_process must be 6x6, got {q.shape}")
        if np.max(np.abs(q - q.T)) > 1e-9 * max(1.0, float(np.trace(q))):
            raise ValueError("q_process must be symmetric")
        if np.min(np.linalg.eigvalsh(0.5 * (q + q.T))) < -1e-9 * max(1.0, float(np.trace(q))):
            raise ValueError("q_process must be positive semidefinite")
        self.q_process = 0.5 * (q + q.T)


def _normal_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


# rational initial guess for the quantile (Acklam's coefficients), refined by
# Newton steps on the erf-based CDF to push the error to machine level
_A = (-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
      1.383577518672690e2, -3.066479806614716e1, 2.506628277459239e0)
_B = (-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
      6.680131188771972e1, -1.328068155288572e1)
_C = (-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838e0,
      -2.549732539343734e0, 4.374664141464968e0, 2.938163982698783e0)
_D = (7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996e0,
      3.754408661907416e0)


def _quantile_guess(p: float) -> float:
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        )
    if p > p_high:
        return -_quantile_guess(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    )


def inverse_normal_cdf(p: float) -> float:
    """Standard-normal quantile, |error| well under 1e-9 on (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"probability must lie strictly in (0, 1), got {p}")
    z = _quantile_guess(p)
    for _ in range(2):
        err = _normal_cdf(z) - p
        pdf = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        if pdf <= 0.0:
            break
        z -= err / pdf
    return z


def risk_quantile(delta: float) -> float:
    """q(delta) = inverse_normal_cdf(1 - delta); positive for delta < 0.5."""
    return inverse_normal_cdf(1.0 - delta)


def nav_covariance(x: RoeState, beta: float, oe: OrbitalElements, t: float = 0.0) -> np.ndarray:
    """Range-proportional rank-1 navigation covariance rho(x) s s^T."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    s = beta * NAV_SIGMA_SHAPE
    return rtn_range(x, oe, t) * np.outer(s, s)


def exe_covariance(u: Impulse, cfg: UncertaintyConfig) -> np.ndarray:
    """Gates-style execution-error covariance of an RTN impulse (m^2/s^2)."""
    uv = u.as_array()
    mag = float(np.linalg.norm(uv))
    if mag == 0.0:
        return cfg.gates_mag_fixed**2 * np.eye(3)
    uhat = uv / mag
    var_mag = cfg.gates_mag_fixed**2 + (cfg.gates_mag_frac * mag) ** 2
    var_point = (cfg.gates_point_sigma * mag) ** 2
    along = np.outer(uhat, uhat)
    return var_mag * along + var_point * (np.eye(3) - along)


def initial_dispersion(
    x: RoeState,
    u: Impulse,
    oe: OrbitalElements,
    t: float,
    cfg: UncertaintyConfig,
) -> np.ndarray:
    """Post-maneuver state covariance: navigation plus mapped execution error.

    A zero impulse executes nothing, so it contributes no execution term.
    """
    sigma = nav_covariance(x, cfg.beta, oe, t)
    if u.norm() > 0.0:
        gam = gamma_batch(oe, t)
        sigma = sigma + gam @ exe_covariance(u, cfg) @ gam.T
    return 0.5 * (sigma + sigma.T)


def propagate_covariance(sigma: np.ndarray, phi: np.ndarray, q: np.ndarray) -> np.ndarray:
    """One drift step of the covariance: Phi Sigma Phi^T + Q."""
    out = phi @ sigma @ phi.T + q
    return 0.5 * (out + out.T)
