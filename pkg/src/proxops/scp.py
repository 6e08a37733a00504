"""Sequential convex programming for multi-impulse relative-orbit transfers.

A phase connects two relative-orbit states over a fixed node grid. Impulses
live at nodes 0..d-1 and the arrival state at node d must match the target
exactly. Node states are affine in the impulse stack, so they are eliminated
and the decision variable is the stacked impulse vector alone. The nonconvex
piece is the passive-safety margin; each outer iteration linearizes it about
the current reference and solves one second-order cone subproblem with
exact-penalty slacks on the safety rows and an infinity-norm trust region on
the impulses.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from proxops.orbits import (
    J2_EARTH,
    Impulse,
    OrbitalElements,
    RoeState,
    gamma_batch,
    orbital_period,
    stm_batch,
)
from proxops.safety import KeepOutZone, PhaseSafetyModel, drift_grid
from proxops.socp import OPTIMAL, PRIMAL_INFEASIBLE, ConeDims, solve_cone_program
from proxops.uncertainty import UncertaintyConfig, initial_dispersion

CONVERGED = "converged"
MAX_ITERS = "max_iters"
SUBPROBLEM_INFEASIBLE = "subproblem_infeasible"

N_MAX = 100

# plateau detection: give up (or settle, if feasible) once this many accepted
# steps in a row each improve the merit by less than _STALL_TOL * conv_tol_cost
# relative, or once this many consecutive rejections pile up on an infeasible
# reference that the shrinking trust region is clearly not going to repair
_STALL_ACCEPTS = 3
_STALL_TOL = 10.0
_STALL_REJECTS = 6
_SETTLE_REJECTS = 3


@dataclass(frozen=True)
class ScpConfig:
    max_iters: int = 20
    conv_tol_state: float = 0.1
    conv_tol_cost: float = 1e-4
    slack_penalty: float = 1e3
    feas_tol: float = 1e-6
    trust_radius: float = 0.1
    trust_min: float = 1e-9
    trust_max: float = 1.0
    ratio_reject: float = 0.1
    ratio_grow: float = 0.9
    screen_margin: float = 3.0
    j2: float = J2_EARTH

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.trust_radius <= 0 or self.trust_min <= 0 or self.trust_max <= 0:
            raise ValueError("trust region radii must be positive")
        if not 0.0 <= self.ratio_reject < self.ratio_grow <= 1.0:
            raise ValueError("need 0 <= ratio_reject < ratio_grow <= 1")


@dataclass(frozen=True)
class PhaseSpec:
    """One transfer leg: from x_start at t_start to x_target after n_steps."""

    oe: OrbitalElements
    t_start: float
    dt: float
    n_steps: int
    x_start: np.ndarray
    x_target: np.ndarray
    koz: KeepOutZone | None = None
    uncertainty: UncertaintyConfig | None = None

    def __post_init__(self):
        if self.n_steps < 1:
            raise ValueError("phase needs at least one impulse node")
        if self.dt <= 0:
            raise ValueError("node spacing must be positive")
        for name in ("x_start", "x_target"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (6,):
                raise ValueError(f"{name} must have shape (6,)")
            object.__setattr__(self, name, arr)


@dataclass
class PhaseResult:
    status: str
    impulses: np.ndarray  # (d, 3) RTN impulses at nodes 0..d-1
    states: np.ndarray  # (d+1, 6) pre-impulse node states
    epochs: np.ndarray  # (d+1,)
    fuel: float
    iterations: int
    merit_history: list[float] = field(default_factory=list)
    max_margin: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


@dataclass(frozen=True)
class MissionSegment:
    x_target: np.ndarray
    n_steps: int

    def __post_init__(self):
        arr = np.asarray(self.x_target, dtype=float)
        if arr.shape != (6,):
            raise ValueError("x_target must have shape (6,)")
        object.__setattr__(self, "x_target", arr)
        if self.n_steps < 1:
            raise ValueError("segment needs at least one node")


@dataclass(frozen=True)
class MissionSpec:
    """A chain of phases; each segment starts where the previous one ends."""

    oe: OrbitalElements
    t_start: float
    dt: float
    x_start: np.ndarray
    segments: tuple[MissionSegment, ...]
    koz: KeepOutZone | None = None
    uncertainty: UncertaintyConfig | None = None

    def __post_init__(self):
        arr = np.asarray(self.x_start, dtype=float)
        if arr.shape != (6,):
            raise ValueError("x_start must have shape (6,)")
        object.__setattr__(self, "x_start", arr)
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("mission needs at least one segment")

    @property
    def total_steps(self) -> int:
        return sum(seg.n_steps for seg in self.segments)


@dataclass
class MissionResult:
    status: str
    phases: list[PhaseResult]
    fuel: float

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


class StateMap:
    """Affine map from the stacked impulses of a phase to its node states.

    Node j sees every impulse fired strictly before it:
        x_j = Phi(t_j, t_0) x_0 + sum_{k<j} Phi(t_j, t_k) Gamma_k u_k
    """

    def __init__(self, oe: OrbitalElements, t_start: float, dt: float, n_steps: int, j2: float = J2_EARTH):
        d = n_steps
        self.n_steps = d
        self.epochs = t_start + dt * np.arange(d + 1)
        self.gammas = gamma_batch(oe, self.epochs[:d], j2=j2)  # (d, 6, 3)
        self.f = stm_batch(oe, t_start, self.epochs - t_start, j2=j2)  # (d+1, 6, 6)
        taus = self.epochs[:, None] - self.epochs[None, :d]
        phis = stm_batch(oe, self.epochs[None, :d], taus, j2=j2)  # (d+1, d, 6, 6)
        h = np.einsum("jkab,kbc->jkac", phis, self.gammas)
        h *= np.tril(np.ones((d + 1, d)), k=-1)[:, :, None, None]
        self.h_flat = h.transpose(0, 2, 1, 3).reshape(d + 1, 6, 3 * d)

    def states(self, x0: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Pre-impulse states at nodes 0..d given impulses u of shape (d, 3)."""
        free = np.einsum("jab,b->ja", self.f, np.asarray(x0, dtype=float))
        return free + np.einsum("jak,k->ja", self.h_flat, np.asarray(u, dtype=float).ravel())

    def terminal_rows(self, x0: np.ndarray, x_target: np.ndarray):
        """Equality A u = b pinning the arrival state to the target."""
        a = self.h_flat[self.n_steps]
        b = np.asarray(x_target, dtype=float) - self.f[self.n_steps] @ np.asarray(x0, dtype=float)
        return a, b


def _node_dispersions(
    spec: PhaseSpec, ucfg: UncertaintyConfig, x_pre: np.ndarray, u: np.ndarray, epochs: np.ndarray
) -> np.ndarray:
    out = np.empty((len(epochs), 6, 6))
    for j, t in enumerate(epochs):
        out[j] = initial_dispersion(
            RoeState.from_array(x_pre[j]), Impulse.from_array(u[j]), spec.oe, t, ucfg
        )
    return out


# impulses are solved in mm/s so dynamics, box, and margin rows all carry
# entries of comparable size; results are mapped back to m/s
_U_SCALE = 1e-3


def _solve_subproblem(
    d: int,
    a_eq_u: np.ndarray,
    b_eq: np.ndarray,
    penalty: float,
    safety_w: np.ndarray | None = None,
    safety_c: np.ndarray | None = None,
    u_ref: np.ndarray | None = None,
    radius: float | None = None,
):
    """One convex subproblem over z = [u (3d), t (d), xi (ns)].

    minimize  sum(t) + penalty * sum(xi)
    s.t.      arrival equality, |u - u_ref|_inf <= radius,
              safety_w u + safety_c <= xi,  xi >= 0,  ||u_k|| <= t_k

    The returned objective is the linearized merit in m/s units.
    """
    nu = 3 * d
    ns = 0 if safety_w is None else safety_w.shape[0]
    boxed = radius is not None
    n = nu + d + ns

    c = np.zeros(n)
    c[nu : nu + d] = _U_SCALE
    c[nu + d :] = penalty

    a_eq = np.zeros((6, n))
    a_eq[:, :nu] = a_eq_u * _U_SCALE
    row_norm = np.abs(a_eq).max(axis=1)
    row_norm[row_norm == 0.0] = 1.0
    a_eq /= row_norm[:, None]
    b_eq = np.asarray(b_eq, dtype=float) / row_norm

    n_box = 2 * nu if boxed else 0
    l = n_box + 2 * ns
    g = np.zeros((l + 4 * d, n))
    h = np.zeros(l + 4 * d)
    row = 0
    if boxed:
        ref = u_ref.ravel() / _U_SCALE
        r = radius / _U_SCALE
        g[row : row + nu, :nu] = np.eye(nu)
        h[row : row + nu] = ref + r
        row += nu
        g[row : row + nu, :nu] = -np.eye(nu)
        h[row : row + nu] = r - ref
        row += nu
    if ns:
        g[row : row + ns, nu + d :] = -np.eye(ns)
        row += ns
        g[row : row + ns, :nu] = safety_w * _U_SCALE
        g[row : row + ns, nu + d :] -= np.eye(ns)
        h[row : row + ns] = -safety_c
        row += ns
    for k in range(d):
        g[row, nu + k] = -1.0
        g[row + 1 : row + 4, 3 * k : 3 * k + 3] = -np.eye(3)
        row += 4

    dims = ConeDims(l=l, q=[4] * d)
    # merit comparisons downstream resolve 1e-4 relative changes, so the
    # subproblem gap has to be well below that
    sol = solve_cone_program(c, g, h, dims, a_eq, b_eq, abstol=1e-9, reltol=1e-9)
    u = None if sol.x is None else _U_SCALE * sol.x[:nu].reshape(d, 3)
    return sol, u


def _phase_result(status, smap, u, states, fuel, iterations, history, max_margin):
    return PhaseResult(
        status=status,
        impulses=u.copy(),
        states=states.copy(),
        epochs=smap.epochs.copy(),
        fuel=fuel,
        iterations=iterations,
        merit_history=history,
        max_margin=max_margin,
    )


def solve_phase(
    spec: PhaseSpec,
    config: ScpConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> PhaseResult:
    cfg = config or ScpConfig()
    d = spec.n_steps
    smap = StateMap(spec.oe, spec.t_start, spec.dt, d, j2=cfg.j2)
    a_eq_u, b_eq = smap.terminal_rows(spec.x_start, spec.x_target)

    if spec.koz is None:
        # the subproblem is the exact problem, so a single solve settles it
        sol, u = _solve_subproblem(d, a_eq_u, b_eq, cfg.slack_penalty)
        if sol.status == PRIMAL_INFEASIBLE or u is None:
            zero = np.zeros((d, 3))
            return _phase_result(
                SUBPROBLEM_INFEASIBLE, smap, zero, smap.states(spec.x_start, zero), 0.0, 1, [], None
            )
        fuel = float(np.linalg.norm(u, axis=1).sum())
        status = CONVERGED if sol.status == OPTIMAL else MAX_ITERS
        return _phase_result(status, smap, u, smap.states(spec.x_start, u), fuel, 1, [fuel], None)

    ucfg = spec.uncertainty if spec.uncertainty is not None else UncertaintyConfig()
    tau_s = ucfg.tau_s if ucfg.tau_s is not None else orbital_period(spec.oe)
    offsets = drift_grid(tau_s, spec.dt)
    model = PhaseSafetyModel(
        spec.oe, smap.epochs[:d], offsets, spec.koz, ucfg.delta_risk, ucfg.q_process
    )

    def evaluate(u):
        states = smap.states(spec.x_start, u)
        x_pre = states[:d]
        sigma0 = _node_dispersions(spec, ucfg, x_pre, u, smap.epochs[:d])
        margins = model.margins(model.post_states(x_pre, u), sigma0)
        fuel = float(np.linalg.norm(u, axis=1).sum())
        merit = fuel + cfg.slack_penalty * float(np.maximum(margins, 0.0).sum())
        return states, sigma0, margins, fuel, merit

    iterations = 0
    if warm_start is None:
        # start from the minimum-fuel transfer so every later reference
        # satisfies the arrival equality and the trust box never cuts it off
        sol, u_ref = _solve_subproblem(d, a_eq_u, b_eq, cfg.slack_penalty)
        iterations += 1
        if sol.status == PRIMAL_INFEASIBLE or u_ref is None:
            zero = np.zeros((d, 3))
            return _phase_result(
                SUBPROBLEM_INFEASIBLE,
                smap,
                zero,
                smap.states(spec.x_start, zero),
                0.0,
                iterations,
                [],
                None,
            )
    else:
        u_ref = np.asarray(warm_start, dtype=float).copy()
        if u_ref.shape != (d, 3):
            raise ValueError("warm_start must have shape (n_steps, 3)")
    states_ref, sigma_ref, margins_ref, fuel_ref, merit_ref = evaluate(u_ref)
    radius = cfg.trust_radius
    history = [merit_ref]
    status = MAX_ITERS
    stalls = 0
    rejects = 0

    while iterations < cfg.max_iters:
        iterations += 1
        feasible_ref = float(margins_ref.max()) <= cfg.feas_tol
        a_rows, b_rows = model.linear_rows(states_ref[:d], u_ref, sigma_ref)
        # compose rows over the stacked impulse vector: x_j is affine in u
        w_x = np.einsum("dmi,dik->dmk", a_rows[..., :6], smap.h_flat[:d])  # (d, m, 3d)
        for j in range(d):
            w_x[j, :, 3 * j : 3 * j + 3] += a_rows[j, :, 6:]
        free = np.einsum("jab,b->ja", smap.f[:d], spec.x_start)
        consts = b_rows + np.einsum("dmi,di->dm", a_rows[..., :6], free)

        w_flat = w_x.reshape(-1, 3 * d)
        c_flat = consts.ravel()
        ref_margin = margins_ref.ravel()
        keep = (ref_margin > -cfg.screen_margin) | (
            ref_margin + np.abs(w_flat).sum(axis=1) * radius > 0.0
        )
        sol, u_new = _solve_subproblem(
            d,
            a_eq_u,
            b_eq,
            cfg.slack_penalty,
            safety_w=w_flat[keep],
            safety_c=c_flat[keep],
            u_ref=u_ref,
            radius=radius,
        )

        if sol.status == PRIMAL_INFEASIBLE:
            # the box always contains the equality-feasible reference, so
            # this only fires when the problem itself is inconsistent
            status = SUBPROBLEM_INFEASIBLE
            break
        usable = u_new is not None and (sol.status == OPTIMAL or sol.pres <= 1e-6)
        if not usable:
            rejects += 1
            radius *= 0.5
            if radius < cfg.trust_min:
                break
            if rejects >= _STALL_REJECTS and not feasible_ref:
                break
            continue

        predicted = merit_ref - float(sol.obj)
        scale = max(1.0, abs(merit_ref))
        if feasible_ref and predicted <= cfg.conv_tol_cost * scale:
            # the model cannot improve the merit within the trust region and
            # the reference already satisfies the margins
            status = CONVERGED
            break

        states_new, sigma_new, margins_new, fuel_new, merit_new = evaluate(u_new)
        actual = merit_ref - merit_new
        if predicted <= 1e-12 * scale:
            accept = actual >= -1e-12 * scale
            ratio = 1.0
        else:
            ratio = actual / predicted
            accept = ratio >= cfg.ratio_reject

        if not accept:
            rejects += 1
            radius *= 0.5
            if radius < cfg.trust_min:
                if feasible_ref:
                    status = CONVERGED
                break
            if feasible_ref and rejects >= _SETTLE_REJECTS:
                # the model keeps overpromising near the margin boundary;
                # the reference satisfies every constraint, so keep it
                status = CONVERGED
                break
            if rejects >= _STALL_REJECTS and not feasible_ref:
                break
            continue

        rejects = 0
        stalls = stalls + 1 if actual <= _STALL_TOL * cfg.conv_tol_cost * scale else 0
        dx_inf = float(np.abs(states_new - states_ref).max())
        d_merit = abs(merit_new - merit_ref)
        u_ref, states_ref, sigma_ref = u_new, states_new, sigma_new
        margins_ref, fuel_ref, merit_ref = margins_new, fuel_new, merit_new
        history.append(merit_ref)
        if ratio > cfg.ratio_grow:
            radius = min(cfg.trust_max, 2.0 * radius)
        if (
            dx_inf < cfg.conv_tol_state
            and d_merit <= cfg.conv_tol_cost * scale
            and float(margins_ref.max()) <= cfg.feas_tol
        ):
            status = CONVERGED
            break
        if stalls >= _STALL_ACCEPTS:
            # merit has flatlined; settle for the iterate if it is feasible,
            # otherwise stop burning subproblem solves on a dead plateau
            if float(margins_ref.max()) <= cfg.feas_tol:
                status = CONVERGED
            break

    return _phase_result(
        status, smap, u_ref, states_ref, fuel_ref, iterations, history, float(margins_ref.max())
    )


def solve_mission(
    spec: MissionSpec,
    config: ScpConfig | None = None,
    warm_starts: list[np.ndarray | None] | None = None,
    n_max: int = N_MAX,
) -> MissionResult:
    """Solve each segment as an independent phase between fixed waypoints."""
    if spec.total_steps > n_max:
        raise ValueError(f"mission has {spec.total_steps} nodes, limit is {n_max}")
    if warm_starts is not None and len(warm_starts) != len(spec.segments):
        raise ValueError("need one warm start entry per segment")

    phases = []
    x_from = spec.x_start
    t0 = spec.t_start
    for i, seg in enumerate(spec.segments):
        phase = PhaseSpec(
            oe=spec.oe,
            t_start=t0,
            dt=spec.dt,
            n_steps=seg.n_steps,
            x_start=x_from,
            x_target=seg.x_target,
            koz=spec.koz,
            uncertainty=spec.uncertainty,
        )
        warm = None if warm_starts is None else warm_starts[i]
        phases.append(solve_phase(phase, config, warm_start=warm))
        x_from = seg.x_target
        t0 += seg.n_steps * spec.dt

    statuses = {p.status for p in phases}
    if SUBPROBLEM_INFEASIBLE in statuses:
        status = SUBPROBLEM_INFEASIBLE
    elif MAX_ITERS in statuses:
        status = MAX_ITERS
    else:
        status = CONVERGED
    fuel = float(sum(p.fuel for p in phases))
    return MissionResult(status=status, phases=phases, fuel=fuel)
