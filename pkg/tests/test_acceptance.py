"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a ``[PASS]``/``[FAIL]`` line, repeated in the terminal
summary under "acceptance criteria".
"""

import numpy as np

from sasatsuma import asympt, painleve as pp, pde, scattering as sc
from sasatsuma.algebra import zero_curvature_residual
from sasatsuma.rh import jump
from sasatsuma.rh.line import LineGrid

from conftest import acceptance_line, gaussian_record, painleve_solution, sector_report

PAINLEVE_S = (0.2, 0.5 * np.exp(1j * np.pi / 3), 0.9j)
WINDOW = (-6.0, 2.0)


def test_criterion_01_scattering_symmetries():
    worst = {}
    for eps in (0.05, 0.1, 0.3):
        _, rec = gaussian_record(eps)
        assert rec.k[0] == -12.0 and rec.k[-1] == 12.0
        worst[eps] = max(rec.det_defect, rec.unitarity_defect, rec.swap_defect)
    ok = max(worst.values()) < 1e-8
    acceptance_line(1, "scattering symmetries", ok,
                    ", ".join(f"eps={e}: {v:.2e}" for e, v in worst.items()) + " (< 1e-8)")
    assert ok


def test_criterion_02_round_trip():
    datum, rec = gaussian_record(0.1)
    xs = np.linspace(-4, 4, 33)
    u, _, _ = jump.reconstruct(rec, xs, 0.0)
    err = float(np.max(np.abs(u - datum(xs))))
    # mesh doubling of the line quadrature (budget check off: refinement study only)
    errs = []
    for n in (32, 64):
        un, _, _ = jump.reconstruct(rec, xs, 0.0, LineGrid(n, 4.0), check_budget=False)
        errs.append(float(np.max(np.abs(un - datum(xs)))))
    order = np.log2(errs[0] / errs[1])
    ok = err < 1e-4 and order >= 4
    acceptance_line(2, "round-trip IST at t=0", ok,
                    f"sup error {err:.2e} (< 1e-4); n=32->64 errors {errs[0]:.1e}->{errs[1]:.1e}, "
                    f"observed order {order:.1f} (spectral quadrature, >= 4)")
    assert ok


def test_criterion_03_soliton_regression():
    u0 = pde.soliton_field(L=80.0, n=1024)
    times = np.round(np.arange(0.1, 1.0001, 0.1), 10)
    final, snaps = pde.evolve(u0, pde.EvolveConfig(dt=1e-3, T=1.0), snapshot_times=list(times))
    sup = max(float(np.max(np.abs(s.values - pde.one_soliton(1, 0, 0, s.x, s.t)))) for s in snaps)
    dts = np.array([1e-2, 5e-3, 2.5e-3, 1.25e-3])
    errs = []
    for dt in dts:
        out = pde.evolve(u0, pde.EvolveConfig(dt=dt, T=1.0, check_edges=False))
        errs.append(float(np.max(np.abs(out.values - pde.one_soliton(1, 0, 0, out.x, 1.0)))))
    order = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
    ok = sup < 1e-6 and order >= 3.7
    acceptance_line(3, "one-soliton regression", ok,
                    f"sup error over [0,1] {sup:.2e} (< 1e-6); dt order {order:.2f} (>= 3.7)")
    assert ok


def test_criterion_04_conservation():
    data = {
        "soliton a=1": lambda x: pde.one_soliton(1, 0, 0, x, 0),
        "soliton a=1.5 phi=0.7": lambda x: pde.one_soliton(1.5, 0.7, 2.0, x, 0),
        "gaussian 0.05": lambda x: 0.05 * np.exp(-x**2),
        "gaussian 0.1": lambda x: 0.1 * np.exp(-x**2),
        "gaussian 0.3": lambda x: 0.3 * np.exp(-x**2),
        "complex sech 0.5": lambda x: 0.5 * np.exp(0.4j) / np.cosh(x),
    }
    drift = {}
    for name, f in data.items():
        u0 = pde.WaveField.from_function(f, 80.0, 1024)
        out = pde.evolve(u0, pde.EvolveConfig(dt=1e-3, T=1.0, check_edges=False))
        drift[name] = abs(pde.conserved_l2(out) / pde.conserved_l2(u0) - 1)
    worst = max(drift.values())
    ok = worst < 1e-8
    acceptance_line(4, "L2 conservation", ok, f"worst relative drift {worst:.2e} (< 1e-8) over "
                    f"{len(drift)} data")
    assert ok


def test_criterion_05_painleve():
    parts, ok = [], True
    for s in PAINLEVE_S:
        sol = painleve_solution(s)
        y = sol.y
        res4 = pp.ode_residual(y, sol.u, WINDOW)
        h = y[1] - y[0]
        u = sol.u
        d2 = (u[2:] - 2 * u[1:-1] + u[:-2]) / h**2
        r2 = np.abs(d2 + y[1:-1] * u[1:-1] + 2 * u[1:-1] * np.abs(u[1:-1]) ** 2)
        res2 = float(np.max(r2[(y[1:-1] >= WINDOW[0]) & (y[1:-1] <= WINDOW[1])]))
        phase = sol.phase_spread()
        psi = pp.psi_system_check(sol, WINDOW)
        i0 = int(np.argmin(np.abs(y)))
        ode = pp.solve_painleve_ode(s, (y[i0], sol.u[i0], sol.u_prime[i0]), y)
        m = (y >= WINDOW[0]) & (y <= WINDOW[1])
        cross = float(np.max(np.abs(ode - sol.u)[m]))
        good = res4 < 1e-5 and phase < 1e-6 and psi < 1e-5 and cross < 1e-4
        ok &= good
        parts.append(f"s={complex(s):.3g}: residual {res4:.1e} (2nd-order stencil {res2:.1e}), "
                     f"phase {phase:.1e}, psi {psi:.1e}, cross {cross:.1e}")
    acceptance_line(5, "modified Painleve II", ok, "; ".join(parts))
    assert ok


def test_criterion_06_model_problem():
    worst = 0.0
    for s in (0.5, 0.5 * np.exp(1j * np.pi / 3)):
        solver = pp.PainleveSolver(s)
        for y in (0.0, 0.5, 1.0):
            target = solver.solve(y).m1[0, 2]
            for z0 in (0.0, np.sqrt(y) / 2):
                d = pp.ModelProblemData(y=y, t=100.0, z0=z0, s=s)
                m10, _ = pp.solve_model_problem(d, enforce_parameter_set=z0 > 0)
                worst = max(worst, abs(m10[0, 2] - target))
    ok = worst < 1e-4
    acceptance_line(6, "model problem reduces to Painleve", ok,
                    f"max |(m10)_13 - u_P/(2 sqrt 2)| = {worst:.2e} (< 1e-4), z0 in {{0, sqrt(y)/2}}")
    assert ok


def test_criterion_07_sector_asymptotics():
    rep = sector_report()
    ok = rep.exponent <= -0.55 and rep.phase_flatness < 1e-6
    acceptance_line(7, "sector asymptotics", ok,
                    f"fitted exponent {rep.exponent:.3f} (<= -0.55, theory -2/3); "
                    f"phase flatness {rep.phase_flatness:.1e} (< 1e-6); errors "
                    + ", ".join(f"{e:.2e}" for e in rep.sup_errors)
                    + (f"; flags: {'; '.join(rep.flags)}" if rep.flags else ""))
    assert ok


def test_criterion_08_hierarchy():
    lt = asympt.LeadingTerm(painleve_solution(0.5))
    win = (lt.y[0] + 0.05, lt.y[-1] - 0.05)
    res = asympt.hierarchy_residual(lt.y, lt.u1, window=win)
    control = asympt.hierarchy_residual(lt.y, lt.u1 * np.exp(1j * lt.y), window=win)
    conj = asympt.hierarchy_residual(lt.y, 1j * np.conj(lt.u1), window=win)
    ok = res < 1e-4 and control > 1e-1
    acceptance_line(8, "hierarchy ODE", ok,
                    f"u1 residual {res:.1e} (< 1e-4); negative control e^(iy) u1 {control:.2f} "
                    f"(> 0.1); i conj(u1) {conj:.1e} (an exact solution, reported only)")
    assert ok


def test_criterion_09_zero_curvature():
    hs = np.array([0.04, 0.02, 0.01])
    res = []
    for h in hs:
        x = np.arange(-10, 10 + h / 2, h)
        res.append(zero_curvature_residual(x, pde.one_soliton(1, 0.3, 0, x, -h / 2),
                                           pde.one_soliton(1, 0.3, 0, x, h / 2), h, 0.7 + 0.2j))
    order = float(np.polyfit(np.log(hs), np.log(res), 1)[0])
    ok = order >= 1.8
    acceptance_line(9, "zero-curvature convergence", ok,
                    f"residuals {', '.join(f'{r:.1e}' for r in res)}; order {order:.2f} (>= 1.8)")
    assert ok


def test_criterion_10_cauchy_operators():
    grid = LineGrid(384, 4.0)
    k = grid.k
    dens = [np.exp(-k**2), np.exp(-k**2) * (1 + 1j * k), k * np.exp(-((k - 1) ** 2) / 2),
            1 / (1 + k**2) ** 3, np.exp(-k**2) / (k**2 + 0.25)]
    plemelj = max(float(np.max(np.abs(grid.c_plus(h) - grid.c_minus(h) - h))) for h in dens)
    # boundary values of functions analytic (and vanishing at infinity) on one side
    lower = [1 / (k - 1j), 1 / (k - 0.5j) ** 2, 1 / (k - 2j) ** 3]
    upper = [1 / (k + 1j), 1 / (k + 0.5j) ** 2, 1 / (k + 2j) ** 3]
    filt = max([float(np.max(np.abs(grid.c_plus(h)))) for h in lower]
               + [float(np.max(np.abs(grid.c_minus(h)))) for h in upper])
    ok = plemelj < 1e-8 and filt < 1e-6
    acceptance_line(10, "Plemelj identity and analyticity filter", ok,
                    f"Plemelj defect {plemelj:.1e} (< 1e-8); filter defect {filt:.1e} (< 1e-6)")
    assert ok
