"""
Model specification, parameter vector, panel container, and core algebra
for the PSTAR-ANN(p) model

    Y_t = phi0 W Y_t + sum_{i=1..p} phi_i W Y_{t-i} + X_t beta
          + F(X_t gamma') lambda + eps_t,

where F is the logistic sigmoid applied entrywise and the network term is
sum_i lambda_i F(x_{s,t}' gamma_i) per location s. The canonical parameter
layout used everywhere (gradients, Hessians, optimizer vectors) is

    theta = (phi0, phi_1..phi_p, beta_1..beta_q, lambda_1..lambda_h,
             gamma_11..gamma_1q, ..., gamma_h1..gamma_hq).

phi0 is kept separate from the other autoregressive entries because its
score carries the extra log-determinant trace term.

Identification conventions: lambda_1 >= ... >= lambda_h and gamma_i1 > 0
for every neuron. The sigmoid symmetry F(x) = 1 - F(-x) makes
(lambda_i, gamma_i) and (-lambda_i, -gamma_i, intercept + lambda_i)
observationally equivalent whenever the design has an intercept column, so
``canonicalize`` can always restore the convention in that case.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .densities import ErrorDensity
from .weights import WeightMatrix

__all__ = [
    "ModelSpec",
    "ParameterVector",
    "PanelData",
    "CausalityCheck",
    "sigmoid",
    "nn_component",
    "residuals",
    "residual_matrix",
    "check_causal",
    "psi_expansion",
    "canonicalize",
    "param_names",
]


def sigmoid(z):
    """Logistic function with the numerically stable two-branch form."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ModelSpec:
    """Dimensions and ingredients of a PSTAR-ANN(p) model.

    ``q`` counts the columns of X; they always feed the network component.
    ``linear_term`` controls whether X also enters linearly through beta
    (the one-neuron simulation design omits it). ``include_intercept``
    declares that column 0 of X is the constant 1, which is what makes the
    sign-flip canonicalization available.
    """

    W: WeightMatrix
    p: int
    q: int
    h: int
    density: ErrorDensity
    linear_term: bool = True
    include_intercept: bool = False

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.h < 0:
            raise ValueError("orders p, q, h must be nonnegative")
        if self.h > 0 and self.q == 0:
            raise ValueError("network component needs q >= 1 covariates")

    @property
    def n(self):
        return self.W.n

    @property
    def n_beta(self):
        return self.q if self.linear_term else 0

    @property
    def dim(self):
        return 1 + self.p + self.n_beta + self.h + self.h * self.q


@dataclass
class ParameterVector:
    """Parameters in canonical layout.

    ``phi``: (p,) temporal lags; ``beta``: (n_beta,) linear coefficients;
    ``lam``: (h,) output weights; ``gamma``: (h, q) neuron weights.
    """

    phi0: float
    phi: np.ndarray
    beta: np.ndarray
    lam: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=float)) if np.size(self.beta) else np.zeros(0)
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float)) if np.size(self.lam) else np.zeros(0)
        g = np.asarray(self.gamma, dtype=float)
        self.gamma = g.reshape(len(self.lam), -1) if g.size else np.zeros((0, 0))
        if len(self.lam) and self.gamma.shape[0] != len(self.lam):
            raise ValueError("gamma must have one row per neuron")

    # ------------------------------------------------------------------

    @property
    def p(self):
        return len(self.phi)

    @property
    def h(self):
        return len(self.lam)

    @property
    def dim(self):
        return 1 + self.phi.size + self.beta.size + self.lam.size + self.gamma.size

    def to_array(self):
        return np.concatenate(
            ([self.phi0], self.phi, self.beta, self.lam, self.gamma.ravel())
        )

    @classmethod
    def from_array(cls, arr, spec: ModelSpec):
        arr = np.asarray(arr, dtype=float)
        if arr.size != spec.dim:
            raise ValueError(f"parameter array has length {arr.size}, expected {spec.dim}")
        p, qb, h, q = spec.p, spec.n_beta, spec.h, spec.q
        i = 1 + p
        j = i + qb
        k = j + h
        return cls(
            phi0=float(arr[0]),
            phi=arr[1:i],
            beta=arr[i:j],
            lam=arr[j:k],
            gamma=arr[k:].reshape(h, q) if h else np.zeros((0, q)),
        )

    def copy(self):
        return ParameterVector(self.phi0, self.phi.copy(), self.beta.copy(),
                               self.lam.copy(), self.gamma.copy())

    def validate(self, spec: ModelSpec):
        if self.phi.size != spec.p:
            raise ValueError(f"phi has {self.phi.size} entries, spec.p={spec.p}")
        if self.beta.size != spec.n_beta:
            raise ValueError(f"beta has {self.beta.size} entries, expected {spec.n_beta}")
        if self.lam.size != spec.h:
            raise ValueError(f"lambda has {self.lam.size} entries, spec.h={spec.h}")
        if spec.h and self.gamma.shape != (spec.h, spec.q):
            raise ValueError(f"gamma has shape {self.gamma.shape}, expected {(spec.h, spec.q)}")
        return self

    def is_canonical(self):
        if self.h == 0:
            return True
        desc = np.all(np.diff(self.lam) <= 0)
        return bool(desc and np.all(self.gamma[:, 0] > 0))

    # JSON wire format: keys phi0, phi, beta, lambda, gamma ---------------

    def to_json_dict(self):
        return {
            "phi0": self.phi0,
            "phi": self.phi.tolist(),
            "beta": self.beta.tolist(),
            "lambda": self.lam.tolist(),
            "gamma": self.gamma.tolist(),
        }

    @classmethod
    def from_json_dict(cls, d):
        return cls(
            phi0=float(d.get("phi0", 0.0)),
            phi=np.asarray(d.get("phi", []), dtype=float),
            beta=np.asarray(d.get("beta", []), dtype=float),
            lam=np.asarray(d.get("lambda", []), dtype=float),
            gamma=np.asarray(d.get("gamma", []), dtype=float),
        )

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    @classmethod
    def load_json(cls, path):
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))


def param_names(spec: ModelSpec):
    """Canonical-order parameter names, e.g. phi0, phi1, beta1, lambda1, gamma11."""
    names = ["phi0"] + [f"phi{i}" for i in range(1, spec.p + 1)]
    names += [f"beta{j}" for j in range(1, spec.n_beta + 1)]
    names += [f"lambda{i}" for i in range(1, spec.h + 1)]
    names += [f"gamma{i}{j}" for i in range(1, spec.h + 1) for j in range(1, spec.q + 1)]
    return names


@dataclass
class PanelData:
    """T sample slices plus p presample slices of the panel.

    ``Y`` has shape (p + T, n): rows 0..p-1 are the presample, row p + t - 1
    is Y_t for t = 1..T. ``X`` has shape (T, n, q), aligned with the sample
    window. ``eps`` optionally carries the innovations injected by the
    simulator (testing hook for exact residual round-trips).
    """

    Y: np.ndarray
    X: np.ndarray
    p: int
    eps: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.X = np.asarray(self.X, dtype=float)
        if self.Y.ndim != 2:
            raise ValueError("Y must be a (p + T, n) array")
        if self.X.ndim != 3:
            raise ValueError("X must be a (T, n, q) array")
        if self.Y.shape[0] != self.p + self.X.shape[0]:
            raise ValueError(
                f"Y has {self.Y.shape[0]} slices; expected p + T = {self.p + self.X.shape[0]}"
            )
        if self.X.shape[1] != self.Y.shape[1]:
            raise ValueError("X and Y disagree on the number of locations")
        if not np.all(np.isfinite(self.Y)) or not np.all(np.isfinite(self.X)):
            raise ValueError("panel contains non-finite values")

    @property
    def T(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.Y.shape[1]

    @property
    def q(self):
        return self.X.shape[2]

    @property
    def Y_sample(self):
        return self.Y[self.p:]

    def check_against(self, spec: ModelSpec, rank_check=True):
        if self.n != spec.n:
            raise ValueError(f"panel has n={self.n}, weights have n={spec.n}")
        if self.q != spec.q:
            raise ValueError(f"panel has q={self.q}, spec.q={spec.q}")
        if self.p != spec.p:
            raise ValueError(f"panel has p={self.p} presample slices, spec.p={spec.p}")
        if spec.include_intercept and self.q and not np.allclose(self.X[:, :, 0], 1.0):
            raise ValueError("spec declares an intercept but X[:, :, 0] is not constant 1")
        if rank_check and self.q:
            for t in range(self.T):
                if np.linalg.matrix_rank(self.X[t]) < self.q:
                    raise ValueError(f"X_t is rank deficient at t={t + 1}")
        return self


# ----------------------------------------------------------------------
# Core operations
# ----------------------------------------------------------------------

def nn_component(X_t, lam, gamma):
    """Network output per location: sum_i lambda_i * F(x_s' gamma_i).

    ``X_t`` is (n, q); returns an n-vector. h = 0 yields zeros.
    """
    X_t = np.asarray(X_t, dtype=float)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.size == 0:
        return np.zeros(X_t.shape[0])
    gamma = np.asarray(gamma, dtype=float).reshape(lam.size, -1)
    return sigmoid(X_t @ gamma.T) @ lam


def residual_matrix(spec: ModelSpec, theta: ParameterVector, data: PanelData, wy=None):
    """All residuals as a (T, n) matrix.

    eps_{s,t} = y_{s,t} - sum_{i=0..p} phi_i (W Y_{t-i})_s - x_{s,t}' beta
                - sum_i lambda_i F(x_{s,t}' gamma_i)

    ``wy`` optionally supplies the precomputed (p + T, n) stack of W Y
    slices (it does not depend on theta, so callers doing repeated
    evaluations cache it).
    """
    theta.validate(spec)
    data.check_against(spec, rank_check=False)
    if wy is None:
        wy = spec.W.W.dot(data.Y.T).T
    p, T = spec.p, data.T
    E = data.Y_sample - theta.phi0 * wy[p:]
    for i in range(1, p + 1):
        E = E - theta.phi[i - 1] * wy[p - i:p - i + T]
    if spec.n_beta:
        E = E - data.X @ theta.beta
    if spec.h:
        E = E - sigmoid(np.einsum("tnq,hq->tnh", data.X, theta.gamma)) @ theta.lam
    return E


def residuals(spec: ModelSpec, theta: ParameterVector, data: PanelData):
    """Residual slices eps_t(theta) for t = 1..T, as a list of n-vectors."""
    return list(residual_matrix(spec, theta, data))


class CausalityCheck(NamedTuple):
    causal: bool
    max_root_modulus: float


def check_causal(spec: ModelSpec, theta: ParameterVector, margin=1e-6):
    """Verify the stationarity condition of the autoregressive operator.

    The determinant det[z^p A0 - sum_i phi_i W z^{p-i}] factors through the
    eigenvalues tau of W into scalar polynomials

        (1 - phi0 tau) z^p - phi_1 tau z^{p-1} - ... - phi_p tau,

    so the process is causal iff every root of every factor has modulus at
    most 1 - margin. p = 0 is trivially causal.
    """
    theta.validate(spec)
    if spec.p == 0:
        return CausalityCheck(True, 0.0)
    max_mod = 0.0
    for tau in spec.W.eigenvalues:
        lead = 1.0 - theta.phi0 * tau
        if abs(lead) < 1e-14:
            raise ValueError(f"leading coefficient vanishes at eigenvalue tau={tau}")
        coeffs = np.concatenate(([lead], -theta.phi * tau))
        roots = np.roots(coeffs)
        if roots.size:
            max_mod = max(max_mod, float(np.max(np.abs(roots))))
    return CausalityCheck(max_mod <= 1.0 - margin, max_mod)


def psi_expansion(spec: ModelSpec, theta: ParameterVector, J, margin=1e-6):
    """Moving-average matrices Psi_0..Psi_J of the causal expansion.

    Psi_0 = I and Psi_j = sum_{k=1..min(j,p)} (A0^{-1} A_k) Psi_{j-k} with
    A_k = phi_k W. Returned dense; intended for moderate n (the recursion
    is a correctness oracle, not a production path).
    """
    chk = check_causal(spec, theta, margin=margin)
    if not chk.causal:
        raise ValueError(
            f"non-causal parameters (max root modulus {chk.max_root_modulus:.6g}); "
            "the expansion would diverge"
        )
    n = spec.n
    psis = [np.eye(n)]
    if spec.p == 0 or J == 0:
        return psis + [np.zeros((n, n)) for _ in range(J if spec.p == 0 else 0)]
    # B_k = A0^{-1} A_k = phi_k * A0^{-1} W, built once with a block solve
    A0inv_W = spec.W.solve_a0(theta.phi0, spec.W.W.toarray())
    B = [theta.phi[k - 1] * A0inv_W for k in range(1, spec.p + 1)]
    for j in range(1, J + 1):
        acc = np.zeros((n, n))
        for k in range(1, min(j, spec.p) + 1):
            acc += B[k - 1] @ psis[j - k]
        psis.append(acc)
    return psis


def canonicalize(theta: ParameterVector, include_intercept):
    """Map a parameter vector to its identified representative.

    Neurons with gamma_i1 < 0 are sign-flipped using F(x) = 1 - F(-x),
    which sends (lambda_i, gamma_i) to (-lambda_i, -gamma_i) and adds
    lambda_i to the intercept beta_1; this requires an intercept column.
    Neurons are then sorted by lambda descending. The transformation leaves
    all residuals (hence the likelihood) unchanged.
    """
    out = theta.copy()
    if out.h == 0:
        return out
    flip = out.gamma[:, 0] < 0
    if np.any(flip):
        if not include_intercept:
            raise ValueError(
                "gamma_i1 < 0 cannot be canonicalized without an intercept column; "
                "report the fit as-is"
            )
        if out.beta.size == 0:
            raise ValueError("intercept shift needs a beta block (linear term)")
        out.beta[0] += out.lam[flip].sum()
        out.lam[flip] = -out.lam[flip]
        out.gamma[flip] = -out.gamma[flip]
    order = np.argsort(-out.lam, kind="stable")
    out.lam = out.lam[order]
    out.gamma = out.gamma[order]
    if np.any(out.lam == 0.0) or np.any(out.gamma[:, 0] == 0.0):
        warnings.warn(
            "degenerate neuron (lambda_i = 0 or gamma_i1 = 0); the fit is not "
            "identified in that direction",
            RuntimeWarning,
            stacklevel=2,
        )
    return out
