import numpy as np
import pytest

from proxops.socp import (
    DUAL_INFEASIBLE,
    OPTIMAL,
    PRIMAL_INFEASIBLE,
    ConeDims,
    _Cone,
    _Scaling,
    solve_cone_program,
)


def random_interior(cone, rng):
    v = rng.normal(size=cone.dims.total)
    return cone.shift_into(v, margin=0.5)


class TestJordanAlgebra:
    def test_identity_element(self):
        cone = _Cone(ConeDims(l=3, q=[4, 3]))
        e = cone.identity()
        assert np.allclose(e, [1, 1, 1, 1, 0, 0, 0, 1, 0, 0])

    def test_product_solve_round_trip(self):
        rng = np.random.default_rng(0)
        cone = _Cone(ConeDims(l=5, q=[4, 4, 3]))
        for _ in range(50):
            lam = random_interior(cone, rng)
            d = rng.normal(size=cone.dims.total)
            u = cone.solve_product(lam, d)
            assert np.allclose(cone.product(lam, u), d, atol=1e-10)

    def test_max_step_is_boundary(self):
        rng = np.random.default_rng(1)
        cone = _Cone(ConeDims(l=4, q=[4, 5]))
        for _ in range(50):
            p = random_interior(cone, rng)
            d = rng.normal(size=cone.dims.total)
            alpha = cone.max_step(p, d)
            if not np.isfinite(alpha):
                assert cone.min_eig(p + 1000.0 * d) > -1e-9
                continue
            assert cone.min_eig(p + (alpha - 1e-7) * d) > -1e-6
            assert cone.min_eig(p + (alpha + 1e-5) * d) < 1e-6


class TestNTScaling:
    def test_scaling_maps_to_common_point(self):
        rng = np.random.default_rng(2)
        cone = _Cone(ConeDims(l=6, q=[4, 4, 3]))
        for _ in range(50):
            s = random_interior(cone, rng)
            z = random_interior(cone, rng)
            w = _Scaling(cone, s, z)
            lam_z = w.apply(z)
            lam_s = w.apply_inv(s)
            assert np.allclose(lam_z, lam_s, rtol=1e-9, atol=1e-9)

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        cone = _Cone(ConeDims(l=2, q=[4]))
        s = random_interior(cone, rng)
        z = random_interior(cone, rng)
        w = _Scaling(cone, s, z)
        v = rng.normal(size=cone.dims.total)
        assert np.allclose(w.apply_inv(w.apply(v)), v, atol=1e-10)

    def test_inv2_mat(self):
        rng = np.random.default_rng(4)
        cone = _Cone(ConeDims(l=3, q=[4, 4]))
        s = random_interior(cone, rng)
        z = random_interior(cone, rng)
        w = _Scaling(cone, s, z)
        m = rng.normal(size=(cone.dims.total, 5))
        direct = np.column_stack([w.apply_inv(w.apply_inv(m[:, k])) for k in range(5)])
        assert np.allclose(w.apply_inv2_mat(m), direct, atol=1e-10)


def verify_optimality(sol, c, G, h, dims, A=None, b=None, tol=1e-6):
    """Strong-duality certificate: feasibility both sides plus tiny gap."""
    cone = _Cone(dims)
    assert sol.status == OPTIMAL
    assert cone.min_eig(sol.s) >= -tol
    assert cone.min_eig(sol.z) >= -tol
    assert np.linalg.norm(G @ sol.x + sol.s - h) <= tol * max(1, np.linalg.norm(h))
    if A is not None and A.size:
        assert np.linalg.norm(A @ sol.x - b) <= tol * max(1, np.linalg.norm(b))
        stat = A.T @ sol.y + G.T @ sol.z + c
    else:
        stat = G.T @ sol.z + c
    assert np.linalg.norm(stat) <= tol * max(1, np.linalg.norm(c))
    assert abs(sol.s @ sol.z) <= tol * max(1.0, abs(sol.obj))


class TestLinearPrograms:
    def test_simple_lp(self):
        # min x1 + x2, x >= 0, x1 + 2 x2 = 2 -> (0, 1)
        c = np.array([1.0, 1.0])
        G = -np.eye(2)
        h = np.zeros(2)
        A = np.array([[1.0, 2.0]])
        b = np.array([2.0])
        dims = ConeDims(l=2)
        sol = solve_cone_program(c, G, h, dims, A, b)
        verify_optimality(sol, c, G, h, dims, A, b)
        assert sol.obj == pytest.approx(1.0, abs=1e-7)
        assert np.allclose(sol.x, [0.0, 1.0], atol=1e-6)

    def test_box_lp(self):
        # min -x1 - 2 x2 over the unit box
        c = np.array([-1.0, -2.0])
        G = np.vstack([np.eye(2), -np.eye(2)])
        h = np.array([1.0, 1.0, 0.0, 0.0])
        dims = ConeDims(l=4)
        sol = solve_cone_program(c, G, h, dims, abstol=1e-9, reltol=1e-9)
        verify_optimality(sol, c, G, h, dims)
        assert sol.obj == pytest.approx(-3.0, abs=1e-7)

    def test_primal_infeasible(self):
        # x >= 1 while x = 0
        c = np.array([1.0])
        G = np.array([[-1.0]])
        h = np.array([-1.0])
        A = np.array([[1.0]])
        b = np.array([0.0])
        sol = solve_cone_program(c, G, h, ConeDims(l=1), A, b)
        assert sol.status == PRIMAL_INFEASIBLE
        # certificate: A^T y + G^T z ~ 0, b^T y + h^T z = -1, z in cone
        assert sol.z[0] >= -1e-9
        assert abs(A.T @ sol.y + G.T @ sol.z) < 1e-6
        assert b @ sol.y + h @ sol.z == pytest.approx(-1.0, abs=1e-6)

    def test_dual_infeasible(self):
        # min -x, x >= 0: unbounded below
        c = np.array([-1.0])
        G = np.array([[-1.0]])
        h = np.array([0.0])
        sol = solve_cone_program(c, G, h, ConeDims(l=1))
        assert sol.status == DUAL_INFEASIBLE
        # improving ray: c^T x = -1, G x + s = 0, s in cone
        assert c @ sol.x == pytest.approx(-1.0, abs=1e-6)
        assert abs(G @ sol.x + sol.s) < 1e-6


class TestSecondOrderCones:
    def test_least_norm_single_equality(self):
        # min ||u|| s.t. a^T u = b0: optimum b0 * a / ||a||^2
        rng = np.random.default_rng(7)
        for _ in range(10):
            a = rng.normal(size=3)
            b0 = rng.normal()
            # variables (t, u): min t s.t. (t, u) in SOC, a^T u = b0
            c = np.array([1.0, 0.0, 0.0, 0.0])
            G = np.zeros((4, 4))
            G[0, 0] = -1.0
            G[1:, 1:] = -np.eye(3)
            h = np.zeros(4)
            A = np.zeros((1, 4))
            A[0, 1:] = a
            b = np.array([b0])
            dims = ConeDims(l=0, q=[4])
            sol = solve_cone_program(c, G, h, dims, A, b)
            verify_optimality(sol, c, G, h, dims, A, b)
            assert sol.obj == pytest.approx(abs(b0) / np.linalg.norm(a), rel=1e-6)
            assert np.allclose(sol.x[1:], b0 * a / (a @ a), atol=1e-6)

    def test_projection_with_box(self):
        # min ||u - p||, |u_i| <= 1; solution clips p into the box
        p = np.array([2.0, -0.3, 5.0])
        c = np.array([1.0, 0.0, 0.0, 0.0])
        G_soc = np.zeros((4, 4))
        G_soc[0, 0] = -1.0
        G_soc[1:, 1:] = -np.eye(3)
        h_soc = np.concatenate([[0.0], -p])
        G_box = np.zeros((6, 4))
        G_box[:3, 1:] = np.eye(3)
        G_box[3:, 1:] = -np.eye(3)
        h_box = np.ones(6)
        G = np.vstack([G_box, G_soc])
        h = np.concatenate([h_box, h_soc])
        dims = ConeDims(l=6, q=[4])
        sol = solve_cone_program(c, G, h, dims)
        verify_optimality(sol, c, G, h, dims)
        clipped = np.clip(p, -1.0, 1.0)
        # flat-direction coordinates are only sqrt(gap)-accurate
        assert np.allclose(sol.x[1:], clipped, atol=1e-4)
        assert sol.obj == pytest.approx(np.linalg.norm(p - clipped), rel=1e-6)

    def test_random_feasible_socps(self):
        rng = np.random.default_rng(11)
        for trial in range(20):
            n = int(rng.integers(4, 12))
            dims = ConeDims(l=int(rng.integers(2, 8)), q=[4] * int(rng.integers(1, 4)))
            m = dims.total
            G = rng.normal(size=(m, n))
            x0 = rng.normal(size=n)
            cone = _Cone(dims)
            s0 = cone.shift_into(rng.normal(size=m), margin=0.5)
            h = G @ x0 + s0
            p = int(rng.integers(0, 3))
            A = rng.normal(size=(p, n)) if p else None
            b = A @ x0 if p else None
            # bounded objective: c = G^T z0 (+ A^T y0) for an interior dual point
            z0 = cone.shift_into(rng.normal(size=m), margin=0.5)
            cvec = -(G.T @ z0)
            if p:
                cvec -= A.T @ rng.normal(size=p)
            sol = solve_cone_program(cvec, G, h, dims, A, b)
            assert sol.status == OPTIMAL, f"trial {trial}: {sol.status}"
            verify_optimality(sol, cvec, G, h, dims, A, b, tol=1e-5)

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        n = 8
        dims = ConeDims(l=4, q=[4])
        G = rng.normal(size=(dims.total, n))
        x0 = rng.normal(size=n)
        cone = _Cone(dims)
        h = G @ x0 + cone.shift_into(rng.normal(size=dims.total))
        cvec = -(G.T @ cone.shift_into(rng.normal(size=dims.total)))
        a = solve_cone_program(cvec, G, h, dims)
        bsol = solve_cone_program(cvec, G, h, dims)
        assert a.iterations == bsol.iterations
        assert np.array_equal(a.x, bsol.x)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            solve_cone_program(
                np.zeros(2), np.zeros((3, 2)), np.zeros(3), ConeDims(l=2, q=[4])
            )
