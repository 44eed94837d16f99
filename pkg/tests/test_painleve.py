import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.special import airy

from sasatsuma import painleve as pp
from sasatsuma.algebra import dagger
from sasatsuma.errors import InvalidInputError

from conftest import painleve_solution

WINDOW = (-6.0, 2.0)


def test_zero_s_trivial():
    c = pp.contour_P(4.0)
    assert np.all(pp.painleve_jump(c, 0.0, 1.3) == 0)
    sol = pp.solve_painleve(pp.PainleveData(0.0, np.linspace(-2, 2, 9)))
    assert np.all(sol.u == 0)
    assert pp.ode_residual(sol.y, sol.u) == 0
    assert sol.phase_spread() == 0.0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 1), st.floats(0, 2 * np.pi), st.floats(-6, 3))
def test_jump_symmetry(r, a, y):
    s = r * np.exp(1j * a)
    c = pp.contour_P(4.0)
    v = pp.painleve_jump(c, s, y) + np.eye(3)
    up = np.flatnonzero(c.tag == pp.UPPER)
    # nearest node to conj(z) for every node on the upper rays
    partner = np.argmin(np.abs(c.z[None, :] - np.conj(c.z[up])[:, None]), axis=1)
    assert np.max(np.abs(c.z[partner] - np.conj(c.z[up]))) < 1e-12
    scale = 1 + np.max(np.abs(v[up]))
    assert np.max(np.abs(v[up] - dagger(v[partner]))) < 1e-12 * scale


def test_jump_decay_on_ray():
    # at y = 0, z = R e^{i pi/6}: |(v - I)_13| = |s| e^{-8R^3/3}
    s = 0.7 - 0.2j
    c = pp.contour_P(3.0)
    w = pp.painleve_jump(c, s, 0.0)
    on = (c.tag == pp.UPPER) & (c.z.real > 0)
    R = np.abs(c.z[on])
    expected = abs(s) * np.exp(-8 * R**3 / 3)
    assert np.allclose(np.abs(w[on, 0, 2]), expected, rtol=1e-10, atol=0)


def test_truncation_radius_cuts_jump():
    R = pp.truncation_radius(4.0, amplitude=2.0)
    c = pp.contour_P(R + 1.0)
    far = np.abs(c.z) > R
    for y in (-8.0, 0.0, 4.0):
        assert np.max(np.abs(pp.painleve_jump(c, 1.0, y)[far])) < pp.JUMP_CUTOFF


def test_linearization_small_s():
    # for |s| << 1 the decaying branch is i sqrt(2) conj(s) Ai(-y)
    s = 1e-4 * np.exp(1j * np.pi / 3)
    solver = pp.PainleveSolver(s)
    y = np.linspace(-8, -4, 9)
    u = np.array([2 * pp.SQRT2 * solver.solve(v).m1[0, 2] for v in y])
    ratio = u / airy(-y)[0]
    assert np.max(np.abs(ratio - ratio[0])) < 1e-6 * abs(s)
    assert abs(ratio[0] - 1j * np.sqrt(2) * np.conj(s)) < 1e-3 * abs(s)


@pytest.fixture(scope="module")
def sol_half():
    return painleve_solution(0.5)


def test_constant_phase(sol_half):
    assert sol_half.phase_spread() < 1e-6


def test_ode_residual(sol_half):
    assert pp.ode_residual(sol_half.y, sol_half.u, WINDOW) < 1e-5


def test_psi_system(sol_half):
    assert pp.psi_system_check(sol_half, WINDOW) < 1e-5
    d = sol_half.structure_defects()
    assert max(d.values()) < 1e-10


def test_c0_vanishes(sol_half):
    assert np.max(np.abs(pp.phase_flux(sol_half))) < 1e-8


def test_u_prime_against_differences(sol_half):
    h = sol_half.y[1] - sol_half.y[0]
    fd = pp._d1(sol_half.u, h)
    assert np.max(np.abs(fd - sol_half.u_prime[2:-2])) < 1e-6


def test_ode_cross_oracle(sol_half):
    y = sol_half.y
    i0 = int(np.argmin(np.abs(y)))
    ode = pp.solve_painleve_ode(0.5, (y[i0], sol_half.u[i0], sol_half.u_prime[i0]), y)
    m = (y >= WINDOW[0]) & (y <= WINDOW[1])
    assert np.max(np.abs(ode - sol_half.u)[m]) < 1e-4


def test_ode_zero_anchor():
    y = np.linspace(-3, 3, 13)
    assert np.all(pp.solve_painleve_ode(0.0, (0.0, 0.0, 0.0), y) == 0)


def test_real_s_real_reduction():
    # real s: u_P = i r with r real, and r'' + y r + 2 r^3 = 0
    y = np.round(np.arange(-6.0, 2.0 + 1e-9, 0.1), 10)
    sol = pp.solve_painleve(pp.PainleveData(0.3, y))
    r = -1j * sol.u
    assert np.max(np.abs(r.imag)) < 1e-10
    i0 = int(np.argmin(np.abs(y)))
    rp = (-1j * sol.u_prime[i0]).real

    def rhs(t, q):
        return [q[1], -t * q[0] - 2 * q[0] ** 3]

    fwd = solve_ivp(rhs, (0.0, 2.0), [r[i0].real, rp], t_eval=y[i0:], rtol=1e-12, atol=1e-14)
    bwd = solve_ivp(rhs, (0.0, -6.0), [r[i0].real, rp], t_eval=y[:i0 + 1][::-1],
                    rtol=1e-12, atol=1e-14)
    ref = np.concatenate([bwd.y[0][::-1][:-1], fwd.y[0]])
    assert np.max(np.abs(ref - r.real)) < 1e-6


def test_solution_serialization(sol_half):
    doc = json.loads(sol_half.to_json())
    assert doc
    rows = list(sol_half.to_csv_rows())
    assert len(rows) == sol_half.y.size
    assert rows[0][0] == sol_half.y[0]


def test_data_validation():
    with pytest.raises(InvalidInputError):
        pp.PainleveData(0.5, np.array([1.0, 0.0]))
    with pytest.raises(InvalidInputError):
        pp.PainleveSolver(0.5, y_max=1.0).solve(2.0)


def test_model_problem_zero_data():
    d = pp.ModelProblemData(y=0.5, t=10.0, z0=0.5, s=0.0)
    m10, _ = pp.solve_model_problem(d)
    assert np.all(m10 == 0)


def test_model_problem_reduces_to_painleve():
    s = 0.5 * np.exp(1j * np.pi / 3)
    solver = pp.PainleveSolver(s)
    for y in (0.0, 1.0):
        target = solver.solve(y).m1[0, 2]
        d = pp.ModelProblemData(y=y, t=50.0, z0=np.sqrt(y) / 2, s=s)
        m10, _ = pp.solve_model_problem(d)
        assert abs(m10[0, 2] - target) < 1e-8


def test_model_problem_symmetry():
    d = pp.ModelProblemData(y=0.5, t=20.0, z0=0.6, s=0.4 + 0.3j, p_coeffs=(0.2, 0.1j))
    _, _, sol = pp.solve_model_problem(d, return_solution=True)
    pts = np.array([0.3 + 0.9j, -1.0 + 0.1j, 1.5 - 0.4j, 0.2j])
    m = sol.evaluate(pts)
    mbar = sol.evaluate(np.conj(pts))
    assert np.max(np.abs(m - np.linalg.inv(dagger(mbar)))) < 1e-6


def test_model_parameter_set_enforced():
    with pytest.raises(InvalidInputError):
        pp.solve_model_problem(pp.ModelProblemData(y=1.0, t=10.0, z0=0.0, s=0.5))
