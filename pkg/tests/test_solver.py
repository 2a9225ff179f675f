import copy
import json

import numpy as np
import pytest

from colombeau import genfunc as gf
from colombeau.mollifier import scale
from colombeau.problem import BUILTIN_PROBLEMS, ProblemSpec, build_R, builtin_problem
from colombeau.solver import (
    Grid, ResolutionError, SolverError, boundary_operator, contraction_estimate, fixed_point_residual,
    nonlocal_integral, pde_residual, picard_solve, plan_slabs, required_nx,
)

from oracles import bump, transport2_data, transport2_exact


def doc(name="transport2", **changes):
    d = copy.deepcopy(BUILTIN_PROBLEMS[name])
    d.update(changes)
    return d


@pytest.fixture(scope="module")
def transport_fine(m2):
    p = builtin_problem("transport2")
    return p, picard_solve(p, m2, 1e-2, 401, 401)


# -- contraction estimate ---------------------------------------------------------


def test_contraction_pure_transport(m2):
    est = contraction_estimate(builtin_problem("transport2"), m2, 0.01)
    assert est.E_F == 0 and est.E_D == 0 and est.q0 == 0
    assert est.t0 == 1.0 and est.rho == 1.0 and est.E_R == 1.0


def test_contraction_lipschitz_term(m2):
    est = contraction_estimate(builtin_problem("saturated2"), m2, 0.01)
    assert est.E_F == 0.5 and est.q0 >= 2 * 0.5
    # n^2 rho n E_F beta + n E_F with rho = beta = 1
    assert est.q0 == pytest.approx(4 * 2 * 0.5 + 1.0)
    assert est.t0 == pytest.approx(1 / (2 * est.q0))
    assert est.t0 <= min(1.0 / est.E_Lambda_max, 1 / est.q0)


def test_contraction_speed_scaling(m2):
    p = ProblemSpec.from_dict(doc(**{"lambda": [-2, 2]}))
    assert contraction_estimate(p, m2, 0.01).t0 == 0.5


def test_contraction_floors(m2):
    p = ProblemSpec.from_dict(doc(B=[[1, 0], [0, 0]], C=[[0, 0], [0, 1]]))
    with pytest.raises(SolverError, match="det R"):
        contraction_estimate(p, m2, 0.01)
    slow = ProblemSpec.from_dict(doc(**{"lambda": ["-x*x", 1]}))
    with pytest.raises(SolverError, match="floor"):
        contraction_estimate(slow, m2, 0.01)


# -- boundary operator ---------------------------------------------------------


def test_boundary_operator_homogeneous(m2):
    p = builtin_problem("transport2")
    M = boundary_operator(p, build_R(p, m2), scale(m2, 0.1), [0.3], np.zeros(2), np.zeros(2))
    assert np.all(M == 0)


@pytest.mark.parametrize("k", [1, 2])
def test_boundary_operator_matches_linear_solve(k, m2):
    B = [["2 + t", "0.5"], ["-1", "3*cos(t)"]]
    C = [["1", "t*t"], ["0.25", "4 - t"]]
    H = ["sin(t)", "1 + t"]
    lam = [-1, 1] if k == 1 else [-1, -2]
    p = ProblemSpec.from_dict(doc(k=k, B=B, C=C, H=H, **{"lambda": lam}))
    sm = scale(m2, 0.1)
    rng = np.random.default_rng(1)
    UL, UR = rng.normal(size=2), rng.normal(size=2)
    for t in (0.0, 0.4, 1.3):
        M = boundary_operator(p, build_R(p, m2), sm, [t], UL, UR)[:, 0]
        Bn = np.array([[2 + t, 0.5], [-1, 3 * np.cos(t)]])
        Cn = np.array([[1, t * t], [0.25, 4 - t]])
        Hn = np.array([np.sin(t), 1 + t])
        # unknowns: U_s(-L) for s >= k, then U_s(L) for s < k
        A = np.column_stack([Bn[:, k:], Cn[:, :k]])
        rhs = Hn - Bn[:, :k] @ UL[:k] - Cn[:, k:] @ UR[k:]
        np.testing.assert_allclose(M, np.linalg.solve(A, rhs), rtol=1e-12, atol=1e-14)
        # and the completed boundary values satisfy the condition itself
        left, right = UL.copy(), UR.copy()
        for c in range(2):
            (right if c < k else left)[c] = M[p.incoming_position(c)]
        np.testing.assert_allclose(Bn @ left + Cn @ right, Hn, atol=1e-12)


def test_nonlocal_integral_constant(m2):
    d, L, nx = 0.3, 1.0, 101
    Dg = np.zeros((2, 2, nx))
    Dg[0, 0] = Dg[1, 1] = d
    val = nonlocal_integral(Dg, np.ones((2, nx)), 2 * L / (nx - 1))
    np.testing.assert_allclose(val, [2 * L * d, 2 * L * d], rtol=1e-14)
    p = builtin_problem("transport2")
    M = boundary_operator(p, build_R(p, m2), scale(m2, 0.1), [0.5], np.zeros(2), np.zeros(2), val)
    # R = [[0, 1], [1, 0]] so M = -R^-1 (2Ld, 2Ld)
    np.testing.assert_allclose(M[:, 0], [-2 * L * d, -2 * L * d])


def test_boundary_operator_det_floor(m2):
    p = ProblemSpec.from_dict(doc(B=[[1, 0], [0, 0]], C=[[0, 0], [0, 1]]))
    with pytest.raises(SolverError, match="eps=0.1, t=0.2"):
        boundary_operator(p, build_R(p, m2), scale(m2, 0.1), [0.2], np.zeros(2), np.zeros(2))


# -- transport oracles --------------------------------------------------------


def test_pure_transport(m2):
    p = ProblemSpec.from_dict(doc(T=0.5))
    sol = picard_solve(p, m2, 1e-2, 401, 401)
    X, T = np.meshgrid(sol.grid.x, sol.grid.t)
    a1, _ = transport2_data(X + T)
    _, a2 = transport2_data(X - T)
    err = max(np.max(np.abs(sol.values[0] - a1)), np.max(np.abs(sol.values[1] - a2)))
    assert err <= 1e-4


def test_reflection_oracle(transport_fine):
    p, sol = transport_fine
    X, T = np.meshgrid(sol.grid.x, sol.grid.t)
    u1, u2 = transport2_exact(X, T)
    err = max(np.max(np.abs(sol.values[0] - u1)), np.max(np.abs(sol.values[1] - u2)))
    assert err <= 1e-3
    # component 1 leaves through x = -1 from t = 0.6, so reflection is exercised
    assert np.max(np.abs(u1[T > 1.2])) > 0.1


def test_linear_growth_oracle(m2):
    p = ProblemSpec.from_dict(doc(T=0.3, f={"name": "linear", "params": {"a": [0.7, -0.4]}}))
    sol = picard_solve(p, m2, 1e-2, 201, 61)
    X, T = np.meshgrid(sol.grid.x, sol.grid.t)
    a1, _ = transport2_data(X + T)
    _, a2 = transport2_data(X - T)
    err = max(np.max(np.abs(sol.values[0] - a1 * np.exp(0.7 * T))),
              np.max(np.abs(sol.values[1] - a2 * np.exp(-0.4 * T))))
    assert err <= 1e-3


# -- residuals ---------------------------------------------------------------------


def test_pde_residual_transport(transport_fine, m2):
    p, sol = transport_fine
    assert pde_residual(sol, p, m2) <= 1e-2


def test_pde_residual_zero_and_defect(m2):
    p = ProblemSpec.from_dict(doc(A=[0, 0], T=0.5))
    sol = picard_solve(p, m2, 0.1, 41, 21)
    assert np.all(sol.values == 0)
    assert pde_residual(sol, p, m2) <= 1e-12
    bad = sol.values.copy()
    bad[0, 10, 20] += 1.0
    assert pde_residual(sol, p, m2, bad) >= 1 / (2 * sol.grid.h)


def test_fixed_point_equivalence(transport_fine, m2):
    p, sol = transport_fine
    assert fixed_point_residual(sol, p, m2) <= sol.tol


def test_fixed_point_equivalence_nonlinear(m2):
    p = builtin_problem("saturated2")
    sol = picard_solve(p, m2, 1e-2, 101, 61)
    assert fixed_point_residual(sol, p, m2) <= sol.tol


# -- iteration behavior -----------------------------------------------------------


def test_slab_chaining_and_contraction(m2):
    p = builtin_problem("saturated2")
    sol = picard_solve(p, m2, 1e-2, 101, 61)
    est = sol.estimates[0]
    assert len(sol.slab_boundaries) - 1 == int(np.ceil(p.T / est.t0 - 1e-9))
    np.testing.assert_allclose(np.diff(sol.slab_boundaries), est.t0)
    for hist in sol.residual_history:
        assert all(np.isfinite(hist)) and hist[-1] <= sol.tol
        for a, b in zip(hist[1:], hist[2:]):
            if a > 0:
                assert b / a <= 0.9


def test_slab_planning(m2):
    p = builtin_problem("transport2")
    plan = plan_slabs(p, m2, 0.01, Grid(p.L, p.T, 51, 41))
    assert [(a, b) for a, b, _ in plan] == [(0, 20), (20, 40)]


def test_max_iter_exceeded(m2):
    with pytest.raises(SolverError, match="did not reach tol"):
        picard_solve(builtin_problem("saturated2"), m2, 1e-2, 51, 31, max_iter=2)


def test_resolution_rule(m2):
    p = builtin_problem("delta_transport")
    assert required_nx(p, m2, 1e-2) == 1601
    with pytest.raises(ResolutionError, match="nx >= 1601"):
        picard_solve(p, m2, 1e-2, 801, 11)
    # smooth problems are not subject to the rule
    picard_solve(builtin_problem("transport2"), m2, 1e-4, 21, 11)


def test_argument_errors(m2):
    p = builtin_problem("transport2")
    with pytest.raises(ValueError):
        picard_solve(p, m2, 0.0, 21, 11)
    with pytest.raises(ValueError):
        picard_solve(p, m2, 0.1, 21, 11, tol=0)
    with pytest.raises(ValueError):
        picard_solve(p, m2, 0.1, 2, 11)


def test_determinism(m2):
    p = builtin_problem("saturated2")
    a = picard_solve(p, m2, 1e-2, 51, 31)
    b = picard_solve(p, m2, 1e-2, 51, 31)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.manifest() == b.manifest()


def test_causality(m2):
    p = ProblemSpec.from_dict(doc(T=0.5))
    changed = ProblemSpec.from_dict(doc(T=0.5, A=["bump(x, 0.1, 0.5) + bump(x, 0.4, 0.1)", "0.5*bump(x, -0.2, 0.4)"]))
    a = picard_solve(p, m2, 1e-2, 201, 101)
    b = picard_solve(changed, m2, 1e-2, 201, 101)
    X, T = np.meshgrid(a.grid.x, a.grid.t)
    diff = np.abs(b.values - a.values)
    # only component 1 sees the change, and only on the cone x + t in (0.3, 0.5)
    assert np.all(diff[1] == 0)
    outside = (X + T <= 0.3 - 2 * a.grid.h) | (X + T >= 0.5 + 2 * a.grid.h)
    assert np.all(diff[0][outside] == 0)
    assert np.max(diff[0]) > 0.1 * np.max(bump(np.array([0.4]), 0.4, 0.1))


def test_solution_exports(tmp_path, m2):
    sol = picard_solve(builtin_problem("transport2"), m2, 0.1, 5, 3)
    sol.to_csv(tmp_path / "u.csv")
    lines = (tmp_path / "u.csv").read_text().splitlines()
    assert lines[0] == "component,x,t,value" and len(lines) == 1 + 2 * 3 * 5
    assert lines[1].startswith("1,-1,0,")
    sol.to_json(tmp_path / "m.json")
    man = json.loads((tmp_path / "m.json").read_text())
    assert man["slabs"] == [0.0, 1.0, 2.0] and man["grid"]["nx"] == 5
