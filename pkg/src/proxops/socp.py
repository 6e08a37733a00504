"""Dense primal-dual interior-point solver for second-order cone programs.

Problem form:

    minimize    c^T x
    subject to  A x = b
                G x + s = h,  s in K

where K is a product of a nonnegative orthant of dimension `l` followed by
second-order cones with dimensions `q`. The algorithm is the standard
homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step, so primal/dual infeasibility is detected through
the embedding rather than by ad-hoc heuristics.

The solver is deliberately dense: subproblems in this package have a few
hundred variables at most, and a dense Cholesky-based KKT solve beats sparse
machinery at that size.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITERS = "max_iters"
NUMERICAL_ERROR = "numerical_error"

_STEP_BACKOFF = 0.98
_REG = 1e-10


@dataclass
class ConeDims:
    l: int = 0
    q: list[int] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.l + sum(self.q)

    @property
    def degree(self) -> int:
        return self.l + len(self.q)


@dataclass
class ConeSolution:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    s: np.ndarray | None = None
    obj: float | None = None
    iterations: int = 0
    gap: float = np.inf
    pres: float = np.inf
    dres: float = np.inf


class _Cone:
    """Vectorized Jordan-algebra helpers for R+^l x SOC(q1) x ... x SOC(qN).

    When every second-order cone has the same dimension (the layout all the
    package's subproblems produce) the blocks form a contiguous tail of the
    cone vector and every operation runs batched on an (n_cones, q) reshape;
    mixed dimensions fall back to a per-block loop.
    """

    def __init__(self, dims: ConeDims):
        self.dims = dims
        self.l = dims.l
        starts = np.cumsum([dims.l] + dims.q[:-1]) if dims.q else np.array([], dtype=int)
        self.q_starts = starts.astype(int)
        self.q = list(dims.q)
        self.nq = len(self.q)
        self.uq = self.q[0] if self.nq and all(v == self.q[0] for v in self.q) else 0

    def _blocks(self, v: np.ndarray) -> np.ndarray:
        return v[self.l :].reshape(self.nq, self.uq)

    def identity(self) -> np.ndarray:
        e = np.zeros(self.dims.total)
        e[: self.l] = 1.0
        for s in self.q_starts:
            e[s] = 1.0
        return e

    def min_eig(self, v: np.ndarray) -> float:
        m = float(np.min(v[: self.l])) if self.l else np.inf
        if not self.nq:
            return m
        if self.uq:
            vb = self._blocks(v)
            return min(m, float(np.min(vb[:, 0] - np.linalg.norm(vb[:, 1:], axis=1))))
        for s, q in zip(self.q_starts, self.q):
            m = min(m, v[s] - np.linalg.norm(v[s + 1 : s + q]))
        return m

    def shift_into(self, v: np.ndarray, margin: float = 1.0) -> np.ndarray:
        """v + alpha*e with alpha chosen so v becomes strictly interior."""
        m = self.min_eig(v)
        if m > 0:
            return v
        return v + (margin - m) * self.identity()

    def product(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v."""
        out = np.empty_like(u)
        out[: self.l] = u[: self.l] * v[: self.l]
        if self.uq:
            ub, vb = self._blocks(u), self._blocks(v)
            blk = np.empty_like(ub)
            blk[:, 0] = np.einsum("ij,ij->i", ub, vb)
            blk[:, 1:] = ub[:, :1] * vb[:, 1:] + vb[:, :1] * ub[:, 1:]
            out[self.l :] = blk.ravel()
            return out
        for s, q in zip(self.q_starts, self.q):
            u0, u1 = u[s], u[s + 1 : s + q]
            v0, v1 = v[s], v[s + 1 : s + q]
            out[s] = u0 * v0 + u1 @ v1
            out[s + 1 : s + q] = u0 * v1 + v0 * u1
        return out

    def solve_product(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """u with lam o u = d (lam strictly interior)."""
        out = np.empty_like(d)
        out[: self.l] = d[: self.l] / lam[: self.l]
        if self.uq:
            lb, db = self._blocks(lam), self._blocks(d)
            l0, l1 = lb[:, 0], lb[:, 1:]
            d0, d1 = db[:, 0], db[:, 1:]
            det = l0 * l0 - np.einsum("ij,ij->i", l1, l1)
            u0 = (l0 * d0 - np.einsum("ij,ij->i", l1, d1)) / det
            blk = np.empty_like(db)
            blk[:, 0] = u0
            blk[:, 1:] = (d1 - u0[:, None] * l1) / l0[:, None]
            out[self.l :] = blk.ravel()
            return out
        for s, q in zip(self.q_starts, self.q):
            l0, l1 = lam[s], lam[s + 1 : s + q]
            d0, d1 = d[s], d[s + 1 : s + q]
            det = l0 * l0 - l1 @ l1
            u0 = (l0 * d0 - l1 @ d1) / det
            out[s] = u0
            out[s + 1 : s + q] = (d1 - u0 * l1) / l0
        return out

    def max_step(self, p: np.ndarray, d: np.ndarray) -> float:
        """Largest alpha with p + alpha*d still in the cone (p interior)."""
        alpha = np.inf
        if self.l:
            neg = d[: self.l] < 0
            if np.any(neg):
                alpha = float(np.min(-p[: self.l][neg] / d[: self.l][neg]))
        if not self.nq:
            return alpha
        if self.uq:
            pb, db = self._blocks(p), self._blocks(d)
            p0, p1 = pb[:, 0], pb[:, 1:]
            d0, d1 = db[:, 0], db[:, 1:]
            a = d0 * d0 - np.einsum("ij,ij->i", d1, d1)
            b = 2.0 * (p0 * d0 - np.einsum("ij,ij->i", p1, d1))
            c = p0 * p0 - np.einsum("ij,ij->i", p1, p1)
            lin = np.abs(a) < 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                r_lin = np.where(lin & (b < 0), -c / b, np.inf)
                disc = b * b - 4.0 * a * c
                ok = ~lin & (disc >= 0)
                sq = np.sqrt(np.where(ok, disc, 0.0))
                r1 = np.where(ok, (-b - sq) / (2.0 * a), np.inf)
                r2 = np.where(ok, (-b + sq) / (2.0 * a), np.inf)
            roots = np.minimum(
                np.where(r_lin > 0, r_lin, np.inf),
                np.minimum(np.where(r1 > 0, r1, np.inf), np.where(r2 > 0, r2, np.inf)),
            )
            return min(alpha, float(np.min(roots)))
        for s, q in zip(self.q_starts, self.q):
            p0, p1 = p[s], p[s + 1 : s + q]
            d0, d1 = d[s], d[s + 1 : s + q]
            a = d0 * d0 - d1 @ d1
            b = 2.0 * (p0 * d0 - p1 @ d1)
            c = p0 * p0 - p1 @ p1
            roots = []
            if abs(a) < 1e-14:
                if b < 0:
                    roots.append(-c / b)
            else:
                disc = b * b - 4.0 * a * c
                if disc >= 0:
                    sq = np.sqrt(disc)
                    roots.extend(r for r in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)) if r > 0)
            if roots:
                alpha = min(alpha, min(roots))
        return alpha


class _Scaling:
    """Nesterov-Todd scaling W with W z = W^{-1} s = lambda."""

    def __init__(self, cone: _Cone, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        l = cone.l
        self.w = np.sqrt(s[:l] / z[:l]) if l else np.zeros(0)
        self.etas = []
        self.wbars = []
        self.eta_arr = None
        self.wbar_mat = None
        if cone.uq:
            sb, zb = cone._blocks(s), cone._blocks(z)
            rs = np.sqrt(sb[:, 0] ** 2 - np.einsum("ij,ij->i", sb[:, 1:], sb[:, 1:]))
            rz = np.sqrt(zb[:, 0] ** 2 - np.einsum("ij,ij->i", zb[:, 1:], zb[:, 1:]))
            sn = sb / rs[:, None]
            zn = zb / rz[:, None]
            gamma = np.sqrt((1.0 + np.einsum("ij,ij->i", sn, zn)) / 2.0)
            wbar = np.empty_like(sn)
            wbar[:, 0] = (sn[:, 0] + zn[:, 0]) / (2.0 * gamma)
            wbar[:, 1:] = (sn[:, 1:] - zn[:, 1:]) / (2.0 * gamma[:, None])
            # P(wbar) is W^2 up to eta^2; the scaling itself uses the Jordan
            # square root v of wbar, another unit-hyperbolic point
            v = wbar.copy()
            v[:, 0] += 1.0
            v /= np.sqrt(2.0 * (1.0 + wbar[:, 0]))[:, None]
            self.eta_arr = np.sqrt(rs / rz)
            self.wbar_mat = v
            return
        for st, q in zip(cone.q_starts, cone.q):
            sb, zb = s[st : st + q], z[st : st + q]
            rs = np.sqrt(sb[0] ** 2 - sb[1:] @ sb[1:])
            rz = np.sqrt(zb[0] ** 2 - zb[1:] @ zb[1:])
            sn, zn = sb / rs, zb / rz
            gamma = np.sqrt((1.0 + sn @ zn) / 2.0)
            wbar = np.empty(q)
            wbar[0] = (sn[0] + zn[0]) / (2.0 * gamma)
            wbar[1:] = (sn[1:] - zn[1:]) / (2.0 * gamma)
            v = wbar.copy()
            v[0] += 1.0
            v /= np.sqrt(2.0 * (1.0 + wbar[0]))
            self.etas.append(np.sqrt(rs / rz))
            self.wbars.append(v)

    def _soc_apply(self, wbar, v, inverse: bool):
        # W v = eta (2 wbar wbar^T - J) v; inverse conjugates by J and flips eta
        if inverse:
            v = np.concatenate([[v[0]], -v[1:]])
        t = 2.0 * (wbar @ v) * wbar
        t[0] -= v[0]
        t[1:] += v[1:]
        if inverse:
            t[1:] = -t[1:]
        return t

    def _soc_apply_batch(self, vb: np.ndarray, inverse: bool) -> np.ndarray:
        wbar = self.wbar_mat
        if inverse:
            vb = vb.copy()
            vb[:, 1:] = -vb[:, 1:]
        t = 2.0 * wbar * np.einsum("ij,ij->i", wbar, vb)[:, None]
        t[:, 0] -= vb[:, 0]
        t[:, 1:] += vb[:, 1:]
        if inverse:
            t[:, 1:] = -t[:, 1:]
        return t

    def apply(self, v: np.ndarray) -> np.ndarray:
        """W v."""
        out = np.empty_like(v)
        l = self.cone.l
        out[:l] = self.w * v[:l]
        if self.cone.uq:
            t = self._soc_apply_batch(self.cone._blocks(v), False)
            out[l:] = (self.eta_arr[:, None] * t).ravel()
            return out
        for st, q, eta, wbar in zip(self.cone.q_starts, self.cone.q, self.etas, self.wbars):
            out[st : st + q] = eta * self._soc_apply(wbar, v[st : st + q], False)
        return out

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        """W^{-1} v."""
        out = np.empty_like(v)
        l = self.cone.l
        out[:l] = v[:l] / self.w
        if self.cone.uq:
            t = self._soc_apply_batch(self.cone._blocks(v), True)
            out[l:] = (t / self.eta_arr[:, None]).ravel()
            return out
        for st, q, eta, wbar in zip(self.cone.q_starts, self.cone.q, self.etas, self.wbars):
            out[st : st + q] = self._soc_apply(wbar, v[st : st + q], True) / eta
        return out

    def lam(self, z: np.ndarray) -> np.ndarray:
        return self.apply(z)

    def apply_inv2(self, v: np.ndarray) -> np.ndarray:
        """W^{-2} v (W is symmetric, so two inverse applications)."""
        return self.apply_inv(self.apply_inv(v))

    def _inv_reflect_batch(self, blk: np.ndarray) -> np.ndarray:
        # one W^{-1} application (up to eta) on stacked (nq, q, ncol) blocks
        wbar = self.wbar_mat
        jb = blk.copy()
        jb[:, 1:, :] = -jb[:, 1:, :]
        t = 2.0 * wbar[:, :, None] * np.einsum("bq,bqc->bc", wbar, jb)[:, None, :]
        t[:, 0, :] -= jb[:, 0, :]
        t[:, 1:, :] += jb[:, 1:, :]
        t[:, 1:, :] = -t[:, 1:, :]
        return t

    def apply_inv2_mat(self, m: np.ndarray) -> np.ndarray:
        """W^{-2} M for a matrix M, column-wise (used for G)."""
        out = np.empty_like(m)
        l = self.cone.l
        out[:l] = m[:l] / (self.w**2)[:, None]
        if self.cone.uq:
            blk = m[l:].reshape(self.cone.nq, self.cone.uq, -1)
            t = self._inv_reflect_batch(self._inv_reflect_batch(blk))
            out[l:] = (t / (self.eta_arr**2)[:, None, None]).reshape(out[l:].shape)
            return out
        for st, q, eta, wbar in zip(self.cone.q_starts, self.cone.q, self.etas, self.wbars):
            blk = m[st : st + q]
            jb = blk.copy()
            jb[1:] = -jb[1:]
            t = 2.0 * np.outer(wbar, wbar @ jb)
            t[0] -= jb[0]
            t[1:] += jb[1:]
            t[1:] = -t[1:]
            # applied W^{-1} once; repeat for W^{-2}
            jb = t
            jb2 = jb.copy()
            jb2[1:] = -jb2[1:]
            t = 2.0 * np.outer(wbar, wbar @ jb2)
            t[0] -= jb2[0]
            t[1:] += jb2[1:]
            t[1:] = -t[1:]
            out[st : st + q] = t / eta**2
        return out


class _KKT:
    """Factorized reduced KKT system for one scaling W.

    Eliminates dz via the bottom row, leaving a positive definite
    M = G^T W^{-2} G block solved by Cholesky, with the equality block
    handled through a Schur complement.
    """

    def __init__(self, A, G, scaling: _Scaling):
        self.A, self.G = A, G
        self.scaling = scaling
        self.w2g = scaling.apply_inv2_mat(G)  # W^{-2} G
        m = G.T @ self.w2g
        n = m.shape[0]
        # per-column relative shift: the scaled diagonal spans many orders of
        # magnitude near convergence and a global shift would dominate the
        # small-curvature columns beyond what refinement can recover
        diag = np.einsum("ii->i", m)
        diag += _REG * (diag + 1.0 + diag.max() * 1e-8)
        self.m_factor = cho_factor(m, lower=True, check_finite=False)
        self.p = A.shape[0] if A is not None and A.size else 0
        if self.p:
            self.mia = cho_solve(self.m_factor, A.T, check_finite=False)
            schur = A @ self.mia
            sdiag = np.einsum("ii->i", schur)
            sdiag += _REG * (sdiag + 1.0 + sdiag.max() * 1e-8)
            self.s_factor = cho_factor(schur, lower=True, check_finite=False)

    def _solve_once(self, r1, r2, r3):
        rhs = r1 + self.G.T @ self.scaling.apply_inv2(r3)
        if self.p:
            rhs_y = self.A @ cho_solve(self.m_factor, rhs, check_finite=False) - r2
            dy = cho_solve(self.s_factor, rhs_y, check_finite=False)
            dx = cho_solve(self.m_factor, rhs - self.A.T @ dy, check_finite=False)
        else:
            dy = np.zeros(0)
            dx = cho_solve(self.m_factor, rhs, check_finite=False)
        dz = self.scaling.apply_inv2(self.G @ dx - r3)
        return dx, dy, dz

    def solve(self, r1, r2, r3, refine: int = 2):
        """Solve [0 A^T G^T; A 0 0; G 0 -W^2] [dx dy dz] = [r1 r2 r3].

        A couple of iterative-refinement sweeps recover the accuracy lost to
        the static regularization once the scaling becomes extreme.
        """
        dx, dy, dz = self._solve_once(r1, r2, r3)
        for _ in range(refine):
            w2dz = self.scaling.apply(self.scaling.apply(dz))
            e1 = r1 - (self.A.T @ dy + self.G.T @ dz) if self.p else r1 - self.G.T @ dz
            e2 = r2 - self.A @ dx if self.p else r2
            e3 = r3 - (self.G @ dx - w2dz)
            cx, cy, cz = self._solve_once(e1, e2, e3)
            dx = dx + cx
            dy = dy + cy
            dz = dz + cz
        return dx, dy, dz


def solve_cone_program(
    c: np.ndarray,
    G: np.ndarray,
    h: np.ndarray,
    dims: ConeDims,
    A: np.ndarray | None = None,
    b: np.ndarray | None = None,
    max_iters: int = 60,
    feastol: float = 1e-7,
    abstol: float = 1e-7,
    reltol: float = 1e-7,
    verbose: bool = False,
) -> ConeSolution:
    """Solve the cone program; never raises on numerical trouble."""
    c = np.asarray(c, dtype=float)
    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    n = c.size
    if A is None or A.size == 0:
        A = np.zeros((0, n))
        b = np.zeros(0)
    else:
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
    cone = _Cone(dims)
    if dims.total != h.size or G.shape != (h.size, n):
        raise ValueError("inconsistent cone program dimensions")

    # normalize the cost so penalty-sized entries do not blow up the duals
    # and with them the achievable dual residual; tolerances act on the
    # scaled problem and duals are mapped back on exit
    cscale = max(1.0, float(np.abs(c).max()) if c.size else 1.0)
    try:
        sol = _solve(c / cscale, G, h, A, b, cone, max_iters, feastol, abstol, reltol, verbose)
    except np.linalg.LinAlgError:
        return ConeSolution(status=NUMERICAL_ERROR)
    if cscale != 1.0 and sol.status in (OPTIMAL, MAX_ITERS):
        if sol.obj is not None:
            sol.obj = float(sol.obj * cscale)
        if sol.y is not None:
            sol.y = sol.y * cscale
        if sol.z is not None:
            sol.z = sol.z * cscale
        sol.gap = float(sol.gap * cscale)
    return sol


def _solve(c, G, h, A, b, cone, max_iters, feastol, abstol, reltol, verbose=False):
    n, p = c.size, b.size
    e = cone.identity()
    degree = cone.dims.degree + 1

    resx0 = max(1.0, np.linalg.norm(c))
    resy0 = max(1.0, np.linalg.norm(b))
    resz0 = max(1.0, np.linalg.norm(h))

    # initial point from two least-squares solves with unit scaling
    ident = _Scaling(cone, e.copy(), e.copy())
    try:
        kkt0 = _KKT(A, G, ident)
        x, _, zt = kkt0.solve(np.zeros(n), b.copy(), h.copy())
        s = cone.shift_into(-zt)
        xd, y, z = kkt0.solve(-c, np.zeros(p), np.zeros(cone.dims.total))
        z = cone.shift_into(z)
        if not np.all(np.isfinite(np.concatenate([x, s, y, z]))):
            raise np.linalg.LinAlgError("non-finite initialization")
    except np.linalg.LinAlgError:
        x = np.zeros(n)
        y = np.zeros(p)
        s = e.copy()
        z = e.copy()
    tau, kappa = 1.0, 1.0

    best = ConeSolution(status=MAX_ITERS)
    best_score = np.inf
    for it in range(max_iters):
        # residuals of the embedding
        rx = A.T @ y + G.T @ z + c * tau
        ry = A @ x - b * tau
        rz = G @ x + s - h * tau
        rtau = kappa + c @ x + b @ y + h @ z

        mu = (s @ z + tau * kappa) / degree

        pcost = c @ x / tau
        dcost = -(b @ y + h @ z) / tau
        gap = s @ z / tau**2
        relgap = gap / max(1.0, abs(pcost), abs(dcost))
        pres = max(
            np.linalg.norm(ry) / resy0 if p else 0.0, np.linalg.norm(rz) / resz0
        ) / tau
        dres = np.linalg.norm(rx) / resx0 / tau

        if verbose:
            print(
                f"it {it:3d} pres {pres:9.2e} dres {dres:9.2e} gap {gap:9.2e} "
                f"mu {mu:9.2e} tau {tau:9.2e} kappa {kappa:9.2e}"
            )
        score = max(pres, dres, min(gap, relgap))
        if score < best_score:
            best_score = score
            best = ConeSolution(
                status=MAX_ITERS, x=x / tau, y=y / tau, z=z / tau, s=s / tau,
                obj=float(pcost), iterations=it, gap=float(gap), pres=float(pres),
                dres=float(dres),
            )
        if pres <= feastol and dres <= feastol and (gap <= abstol or relgap <= reltol):
            best.status = OPTIMAL
            best.iterations = it
            return best
        if mu < 1e-13:
            if verbose:
                print("stop: mu floor")
            break

        # infeasibility certificates
        by_hz = b @ y + h @ z
        if by_hz < -1e-12:
            if np.linalg.norm(A.T @ y + G.T @ z) / resx0 <= -feastol * by_hz:
                return ConeSolution(
                    status=PRIMAL_INFEASIBLE, y=y / -by_hz, z=z / -by_hz,
                    iterations=it, gap=float(gap),
                )
        cx = c @ x
        if cx < -1e-12:
            unb = max(
                np.linalg.norm(A @ x) / resy0 if p else 0.0,
                np.linalg.norm(G @ x + s) / resz0,
            )
            if unb <= -feastol * cx:
                return ConeSolution(
                    status=DUAL_INFEASIBLE, x=x / -cx, s=s / -cx,
                    iterations=it, gap=float(gap),
                )

        scaling = _Scaling(cone, s, z)
        lam = scaling.lam(z)
        kkt = _KKT(A, G, scaling)

        # solve for the tau-coefficient direction once per scaling
        v1, v2, v3 = kkt.solve(-c, b.copy(), h.copy())

        def direction(d_s, d_tk, sigma_rhs):
            """Newton direction for complementarity targets (d_s, d_tk)."""
            f = 1.0 - sigma_rhs
            wrho = scaling.apply(cone.solve_product(lam, d_s))
            u1, u2, u3 = kkt.solve(-f * rx, -f * ry, -f * rz - wrho)
            num = f * rtau + d_tk / tau + c @ u1 + b @ u2 + h @ u3
            den = kappa / tau - (c @ v1 + b @ v2 + h @ v3)
            dtau = num / den
            dx = u1 + dtau * v1
            dy = u2 + dtau * v2
            dz = u3 + dtau * v3
            ds = wrho - scaling.apply(scaling.apply(dz))
            dkappa = (d_tk - kappa * dtau) / tau
            return dx, dy, dz, ds, dtau, dkappa

        # affine direction
        lam2 = cone.product(lam, lam)
        dxa, dya, dza, dsa, dtaua, dkappaa = direction(-lam2, -tau * kappa, 0.0)

        step_s = scaling.apply_inv(dsa)
        step_z = scaling.apply(dza)
        alpha = min(
            cone.max_step(lam, step_s),
            cone.max_step(lam, step_z),
            -tau / dtaua if dtaua < 0 else np.inf,
            -kappa / dkappaa if dkappaa < 0 else np.inf,
        )
        alpha_aff = min(1.0, alpha)
        mu_aff = (
            (s + alpha_aff * dsa) @ (z + alpha_aff * dza)
            + (tau + alpha_aff * dtaua) * (kappa + alpha_aff * dkappaa)
        ) / degree
        sigma = min(0.99, max(0.0, (mu_aff / mu)) ** 3)

        # combined direction with Mehrotra correction
        corr = cone.product(scaling.apply_inv(dsa), scaling.apply(dza))
        d_s = sigma * mu * e - lam2 - corr
        d_tk = sigma * mu - tau * kappa - dtaua * dkappaa
        dx, dy, dz, ds, dtau, dkappa = direction(d_s, d_tk, sigma)

        step_s = scaling.apply_inv(ds)
        step_z = scaling.apply(dz)
        alpha = min(
            cone.max_step(lam, step_s),
            cone.max_step(lam, step_z),
            -tau / dtau if dtau < 0 else np.inf,
            -kappa / dkappa if dkappa < 0 else np.inf,
        )
        alpha = min(1.0, _STEP_BACKOFF * alpha)
        if not np.isfinite(alpha) or alpha <= 0:
            if verbose:
                print(f"stop: step size {alpha}")
            break

        # roundoff can push a boundary-grazing step outside the cone; halve
        # alpha until the trial point is strictly interior
        stepped = False
        for _ in range(30):
            s_n = s + alpha * ds
            z_n = z + alpha * dz
            tau_n = tau + alpha * dtau
            kappa_n = kappa + alpha * dkappa
            if (
                tau_n > 0
                and kappa_n > 0
                and cone.min_eig(s_n) > 0
                and cone.min_eig(z_n) > 0
            ):
                stepped = True
                break
            alpha *= 0.5
        if not stepped:
            if verbose:
                print("stop: cone boundary")
            break

        x = x + alpha * dx
        y = y + alpha * dy
        z, s, tau, kappa = z_n, s_n, tau_n, kappa_n

    if not np.isfinite(best_score):
        return ConeSolution(status=NUMERICAL_ERROR)
    return best
