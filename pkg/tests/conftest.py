"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the library's computational paths:
log-densities come from scipy.stats, log-determinants from dense LU
(slogdet), residuals from direct formula-level loops, and derivatives from
central finite differences.
"""

import numpy as np
import pytest
from scipy import stats

import pstarann as pa


# ----------------------------------------------------------------------
# Independent oracles
# ----------------------------------------------------------------------

def oracle_log_pdf(density, s):
    """Unit-variance log densities straight from scipy.stats."""
    s = np.asarray(s, dtype=float)
    if density.family == "normal":
        return stats.norm.logpdf(s)
    if density.family == "laplace":
        return stats.laplace.logpdf(s, scale=np.sqrt(2.0) / 2.0)
    c = np.sqrt((density.nu - 2.0) / density.nu)
    return stats.t.logpdf(s / c, density.nu) - np.log(c)


def oracle_log_likelihood(spec, theta, data):
    """Dense formula-level log-likelihood: LU log-det plus summed log pdfs."""
    W = spec.W.W.toarray()
    A0 = np.eye(spec.n) - theta.phi0 * W
    sign, logdet = np.linalg.slogdet(A0)
    assert sign > 0
    total = data.T * logdet
    for t in range(1, data.T + 1):
        e = data.Y[data.p + t - 1].copy()
        for i in range(spec.p + 1):
            phi = theta.phi0 if i == 0 else theta.phi[i - 1]
            e -= phi * (W @ data.Y[data.p + t - 1 - i])
        X_t = data.X[t - 1]
        if spec.n_beta:
            e -= X_t @ theta.beta
        with np.errstate(over="ignore"):
            for i in range(spec.h):
                e -= theta.lam[i] / (1.0 + np.exp(-X_t @ theta.gamma[i]))
        total += float(np.sum(oracle_log_pdf(spec.density, e)))
    return total


def fd_gradient(f, x0, rel=1e-6):
    """Central finite differences with per-coordinate step rel*(1+|x_i|)."""
    x0 = np.asarray(x0, dtype=float)
    g = np.zeros_like(x0)
    for i in range(x0.size):
        h = rel * (1.0 + abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def fd_jacobian(vf, x0, rel=1e-6):
    """Central differences of a vector function (rows index x coordinates)."""
    x0 = np.asarray(x0, dtype=float)
    rows = []
    for i in range(x0.size):
        h = rel * (1.0 + abs(x0[i]))
        xp, xm = x0.copy(), x0.copy()
        xp[i] += h
        xm[i] -= h
        rows.append((vf(xp) - vf(xm)) / (2.0 * h))
    return np.array(rows)


def random_causal_theta(spec, rng, phi0_range=0.5):
    """A generic parameter draw that stays well inside the causal region."""
    theta = pa.ParameterVector(
        phi0=rng.uniform(-phi0_range, phi0_range),
        phi=rng.uniform(-0.25, 0.25, spec.p),
        beta=rng.uniform(-1.0, 1.0, spec.n_beta),
        lam=np.sort(rng.uniform(0.3, 1.5, spec.h))[::-1],
        gamma=rng.standard_normal((spec.h, spec.q)),
    )
    if spec.h:
        theta.gamma[:, 0] = np.abs(theta.gamma[:, 0]) + 0.1
    return theta


def random_panel(spec, T, rng, y_scale=1.5, x_scale=1.0):
    """Arbitrary finite panel (residual algebra needs no model structure)."""
    Y = y_scale * rng.standard_normal((spec.p + T, spec.n))
    X = x_scale * rng.standard_normal((T, spec.n, spec.q))
    return pa.PanelData(Y=Y, X=X, p=spec.p)


MODEL1_THETA = dict(phi0=0.6, phi=[-0.274], beta=[], lam=[1.5], gamma=[[0.75, -0.35]])
MODEL1_COLUMNS = [{"kind": "normal", "sd": 1.5}, {"kind": "normal", "sd": 3.0}]


def model1_spec(W, density=None):
    return pa.ModelSpec(W=W, p=1, q=2, h=1, density=density or pa.normal(),
                        linear_term=False)


def model1_theta():
    return pa.ParameterVector(**MODEL1_THETA)


# ----------------------------------------------------------------------
# Session-scoped weight matrices (eigendecompositions are reused a lot)
# ----------------------------------------------------------------------

@pytest.fixture(scope="session")
def w22():
    return pa.build_queen_lattice(2, 2)


@pytest.fixture(scope="session")
def w33():
    return pa.build_queen_lattice(3, 3)


@pytest.fixture(scope="session")
def w44():
    return pa.build_queen_lattice(4, 4)


@pytest.fixture(scope="session")
def w1010():
    return pa.build_queen_lattice(10, 10)


@pytest.fixture(scope="session")
def w2020():
    return pa.build_queen_lattice(20, 20)
