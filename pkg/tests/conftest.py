import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def sympy_riemann(coords, entries, point):
    """Independent symbolic oracle: lowered Riemann tensor R_ijkl = g(R(d_i, d_j) d_k, d_l)."""
    import sympy as sp

    x = sp.symbols(coords)
    n = len(x)
    g = sp.Matrix([[sp.sympify(e, locals={str(s): s for s in x}) for e in row] for row in entries])
    ginv = g.inv()
    gam = [[[sum(ginv[i, m] * (sp.diff(g[m, j], x[k]) + sp.diff(g[m, k], x[j]) - sp.diff(g[j, k], x[m]))
                 for m in range(n)) / 2 for k in range(n)] for j in range(n)] for i in range(n)]
    subs = dict(zip(x, point))
    out = np.zeros((n,) * 4)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                up = []
                for l in range(n):
                    e = (sp.diff(gam[l][j][k], x[i]) - sp.diff(gam[l][i][k], x[j])
                         + sum(gam[l][i][m] * gam[m][j][k] - gam[l][j][m] * gam[m][i][k] for m in range(n)))
                    up.append(e)
                for l in range(n):
                    out[i, j, k, l] = float(sum(g[l, m] * up[m] for m in range(n)).subs(subs))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
