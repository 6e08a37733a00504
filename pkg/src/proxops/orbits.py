"""Quasi-nonsingular relative orbital element (qnsROE) dynamics.

State convention: x = [d_a, d_lambda, d_ex, d_ey, d_ix, d_iy], every component
scaled by the chief semi-major axis so the whole vector is in meters. Impulses
are delta-v vectors resolved in the chief RTN frame (m/s).

The secular-J2 state transition matrix is the closed form for near-circular
chiefs; the chief itself is propagated with secular rates only (no short
period terms). All epoch arguments are seconds measured from the epoch at
which the chief elements are given.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MU_EARTH = 3.986004418e14  # m^3/s^2
J2_EARTH = 1.08263e-3
R_EARTH = 6.378137e6  # m


@dataclass(frozen=True)
class OrbitalElements:
    """Keplerian elements of the chief orbit (angles in rad, a in m)."""

    a: float
    e: float
    i: float
    raan: float
    argp: float
    M: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"semi-major axis must be positive, got {self.a}")
        if not 0.0 <= self.e < 1.0:
            raise ValueError(f"eccentricity must be in [0, 1), got {self.e}")
        for name in ("i", "raan", "argp", "M"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"element {name} must be finite")


@dataclass(frozen=True)
class RoeState:
    """Meter-scaled qnsROE components."""

    d_a: float
    d_lambda: float
    d_ex: float
    d_ey: float
    d_ix: float
    d_iy: float

    @classmethod
    def from_array(cls, arr) -> "RoeState":
        a = np.asarray(arr, dtype=float).reshape(6)
        return cls(*a.tolist())

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.d_a, self.d_lambda, self.d_ex, self.d_ey, self.d_ix, self.d_iy]
        )


@dataclass(frozen=True)
class RtnState:
    """Relative position (m) and velocity (m/s) in the chief RTN frame."""

    r_R: float
    r_T: float
    r_N: float
    v_R: float
    v_T: float
    v_N: float

    @classmethod
    def from_array(cls, arr) -> "RtnState":
        a = np.asarray(arr, dtype=float).reshape(6)
        return cls(*a.tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.r_R, self.r_T, self.r_N, self.v_R, self.v_T, self.v_N])

    def position(self) -> np.ndarray:
        return np.array([self.r_R, self.r_T, self.r_N])


@dataclass(frozen=True)
class Impulse:
    """Impulsive delta-v in the chief RTN frame (m/s)."""

    dv_R: float
    dv_T: float
    dv_N: float

    @classmethod
    def from_array(cls, arr) -> "Impulse":
        a = np.asarray(arr, dtype=float).reshape(3)
        return cls(*a.tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.dv_R, self.dv_T, self.dv_N])

    def norm(self) -> float:
        return float(np.hypot(np.hypot(self.dv_R, self.dv_T), self.dv_N))


def mean_motion(oe: OrbitalElements) -> float:
    """Two-body mean motion sqrt(mu/a^3) in rad/s."""
    if not oe.a > 0:
        raise ValueError(f"semi-major axis must be positive, got {oe.a}")
    return float(np.sqrt(MU_EARTH / oe.a**3))


def orbital_period(oe: OrbitalElements) -> float:
    return 2.0 * np.pi / mean_motion(oe)


def secular_constants(oe: OrbitalElements, j2: float = J2_EARTH) -> dict:
    """Chief-dependent constants of the secular-J2 model.

    kappa collects the J2 strength, the remaining letters are the standard
    inclination/eccentricity factors of the closed-form qnsROE STM.
    """
    n = mean_motion(oe)
    eta = np.sqrt(1.0 - oe.e**2)
    kappa = 0.75 * j2 * R_EARTH**2 * np.sqrt(MU_EARTH) / (oe.a**3.5 * eta**4)
    ci = np.cos(oe.i)
    si = np.sin(oe.i)
    return {
        "n": n,
        "eta": eta,
        "kappa": kappa,
        "E": 1.0 + eta,
        "F": 4.0 + 3.0 * eta,
        "G": 1.0 / eta**2,
        "P": 3.0 * ci**2 - 1.0,
        "Q": 5.0 * ci**2 - 1.0,
        "R": ci,
        "S": np.sin(2.0 * oe.i),
        "T": si**2,
    }


def secular_rates(oe: OrbitalElements, j2: float = J2_EARTH) -> tuple[float, float, float]:
    """Secular rates (M_dot, argp_dot, raan_dot) in rad/s."""
    c = secular_constants(oe, j2)
    m_dot = c["n"] + c["kappa"] * c["eta"] * c["P"]
    argp_dot = c["kappa"] * c["Q"]
    raan_dot = -2.0 * c["kappa"] * c["R"]
    return float(m_dot), float(argp_dot), float(raan_dot)


def propagate_chief(oe: OrbitalElements, t: float, j2: float = J2_EARTH) -> OrbitalElements:
    """Chief elements t seconds later under secular-J2 rates."""
    m_dot, argp_dot, raan_dot = secular_rates(oe, j2)
    return OrbitalElements(
        a=oe.a,
        e=oe.e,
        i=oe.i,
        raan=oe.raan + raan_dot * t,
        argp=oe.argp + argp_dot * t,
        M=oe.M + m_dot * t,
    )


def mean_arg_latitude(oe: OrbitalElements, t=0.0, j2: float = J2_EARTH):
    """Chief mean argument of latitude u = argp + M at epoch offset t (array ok)."""
    m_dot, argp_dot, _ = secular_rates(oe, j2)
    return oe.argp + oe.M + (m_dot + argp_dot) * np.asarray(t, dtype=float)


def stm_batch(oe: OrbitalElements, t0, tau, j2: float = J2_EARTH) -> np.ndarray:
    """Secular-J2 qnsROE STM Phi(t0 + tau, t0), broadcast over t0 and tau.

    t0/tau may be scalars or broadcastable arrays; returns shape
    broadcast(t0, tau) + (6, 6). The chief argument of perigee entering the
    eccentricity-vector columns is propagated to t0 with the secular rate.
    """
    c = secular_constants(oe, j2)
    n, kappa = c["n"], c["kappa"]
    E, F, G = c["E"], c["F"], c["G"]
    P, Q, S, T = c["P"], c["Q"], c["S"], c["T"]
    argp_dot = kappa * Q

    t0 = np.asarray(t0, dtype=float)
    tau = np.asarray(tau, dtype=float)
    shape = np.broadcast_shapes(t0.shape, tau.shape)
    t0, tau = np.broadcast_to(t0, shape), np.broadcast_to(tau, shape)

    w_i = oe.argp + argp_dot * t0  # argp at the departure epoch
    theta = argp_dot * tau  # perigee rotation over the transfer
    w_f = w_i + theta
    exi, eyi = oe.e * np.cos(w_i), oe.e * np.sin(w_i)
    exf, eyf = oe.e * np.cos(w_f), oe.e * np.sin(w_f)
    ct, st = np.cos(theta), np.sin(theta)
    kt = kappa * tau

    phi = np.zeros(shape + (6, 6))
    phi[..., 0, 0] = 1.0
    phi[..., 1, 0] = -(1.5 * n + 3.5 * kappa * E * P) * tau
    phi[..., 1, 1] = 1.0
    phi[..., 1, 2] = exi * F * G * P * kt
    phi[..., 1, 3] = eyi * F * G * P * kt
    phi[..., 1, 4] = -F * S * kt
    phi[..., 2, 0] = 3.5 * eyf * Q * kt
    phi[..., 2, 2] = ct - 4.0 * exi * eyf * G * Q * kt
    phi[..., 2, 3] = -st - 4.0 * eyi * eyf * G * Q * kt
    phi[..., 2, 4] = 5.0 * eyf * S * kt
    phi[..., 3, 0] = -3.5 * exf * Q * kt
    phi[..., 3, 2] = st + 4.0 * exi * exf * G * Q * kt
    phi[..., 3, 3] = ct + 4.0 * eyi * exf * G * Q * kt
    phi[..., 3, 4] = -5.0 * exf * S * kt
    phi[..., 4, 4] = 1.0
    phi[..., 5, 0] = 3.5 * S * kt
    phi[..., 5, 2] = -4.0 * exi * G * S * kt
    phi[..., 5, 3] = -4.0 * eyi * G * S * kt
    phi[..., 5, 4] = 2.0 * T * kt
    phi[..., 5, 5] = 1.0
    return phi


def stm(oe: OrbitalElements, t1: float, t0: float, j2: float = J2_EARTH) -> np.ndarray:
    """STM Phi(t1, t0) of the meter-scaled qnsROE under secular J2."""
    if t1 < t0:
        raise ValueError(f"t1 must be >= t0, got t1={t1} t0={t0}")
    return stm_batch(oe, t0, t1 - t0, j2)


def gamma_batch(oe: OrbitalElements, t, j2: float = J2_EARTH) -> np.ndarray:
    """Impulsive control-input matrix Gamma(t), broadcast over t.

    Near-circular Gauss variational form: columns are the instantaneous
    meter-scaled qnsROE response to unit RTN delta-v. Shape t.shape + (6, 3).
    """
    n = mean_motion(oe)
    u = mean_arg_latitude(oe, t, j2)
    u = np.asarray(u, dtype=float)
    su, cu = np.sin(u), np.cos(u)

    g = np.zeros(u.shape + (6, 3))
    g[..., 0, 1] = 2.0
    g[..., 1, 0] = -2.0
    g[..., 2, 0] = su
    g[..., 2, 1] = 2.0 * cu
    g[..., 3, 0] = -cu
    g[..., 3, 1] = 2.0 * su
    g[..., 4, 2] = cu
    g[..., 5, 2] = su
    return g / n


def control_input_matrix(oe: OrbitalElements, t: float = 0.0, j2: float = J2_EARTH) -> np.ndarray:
    """6x3 matrix mapping an RTN impulse to a meter-scaled qnsROE jump."""
    return gamma_batch(oe, t, j2)


def psi_batch(oe: OrbitalElements, t, j2: float = J2_EARTH) -> np.ndarray:
    """Linear qnsROE -> RTN map Psi(t), broadcast over t, shape t.shape + (6, 6).

    Rows are [r_R, r_T, r_N, v_R, v_T, v_N]; valid to first order in the
    separation for near-circular chiefs.
    """
    n = mean_motion(oe)
    u = np.asarray(mean_arg_latitude(oe, t, j2), dtype=float)
    su, cu = np.sin(u), np.cos(u)

    psi = np.zeros(u.shape + (6, 6))
    psi[..., 0, 0] = 1.0
    psi[..., 0, 2] = -cu
    psi[..., 0, 3] = -su
    psi[..., 1, 1] = 1.0
    psi[..., 1, 2] = 2.0 * su
    psi[..., 1, 3] = -2.0 * cu
    psi[..., 2, 4] = su
    psi[..., 2, 5] = -cu
    psi[..., 3, 2] = n * su
    psi[..., 3, 3] = -n * cu
    psi[..., 4, 0] = -1.5 * n
    psi[..., 4, 2] = 2.0 * n * cu
    psi[..., 4, 3] = 2.0 * n * su
    psi[..., 5, 4] = n * cu
    psi[..., 5, 5] = n * su
    return psi


def roe_to_rtn(x: RoeState, oe: OrbitalElements, t: float = 0.0) -> RtnState:
    """Apply the linear map Psi(t) to a meter-scaled qnsROE state."""
    return RtnState.from_array(psi_batch(oe, t) @ x.as_array())


def rtn_range(x: RoeState, oe: OrbitalElements, t: float = 0.0) -> float:
    """Euclidean RTN separation (m) of the mapped state."""
    return float(np.linalg.norm(roe_to_rtn(x, oe, t).position()))


def propagate(
    x: RoeState, u: Impulse, oe: OrbitalElements, t0: float, t1: float
) -> RoeState:
    """One impulsive step: Phi(t1, t0) @ (x + Gamma(t0) u)."""
    kicked = x.as_array() + gamma_batch(oe, t0) @ u.as_array()
    return RoeState.from_array(stm(oe, t1, t0) @ kicked)
