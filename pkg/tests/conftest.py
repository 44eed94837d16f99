import functools

import numpy as np
import pytest

from sasatsuma import painleve, scattering

Y_GRID = np.round(np.arange(-8.0, 4.0 + 1e-9, 0.01), 10)


@functools.lru_cache(maxsize=None)
def gaussian_record(eps, n=512, K=12.0, n_k=1025):
    datum = scattering.InitialDatum.profile("gaussian", eps=eps, n=n)
    return datum, scattering.compute_s(datum, K=K, n_k=n_k)


@functools.lru_cache(maxsize=None)
def painleve_solution(s):
    return painleve.solve_painleve(painleve.PainleveData(s, Y_GRID))


@pytest.fixture(scope="session")
def y_grid():
    return Y_GRID.copy()


@functools.lru_cache(maxsize=None)
def sector_report(eps=0.1):
    from sasatsuma import asympt

    datum, rec = gaussian_record(eps)
    sol = painleve_solution(rec.s_at_zero)
    return asympt.validate_sector(datum, M=1.0, t_list=(25.0, 50.0, 100.0, 200.0),
                                  painleve_sol=sol, record=rec)


ACCEPTANCE_LINES = []


def acceptance_line(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
