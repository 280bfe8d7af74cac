"""
Maximum-likelihood fitting with box constraints, multi-start, post-hoc
canonicalization, and sandwich covariance.

The optimizer is L-BFGS-B (bound-constrained limited-memory quasi-Newton)
driven by the analytic gradient. Default boxes keep the search compact and
sigmoid arguments sane:

    phi0 in [-0.995, 0.995] / tau_max,  phi_i in [-3, 3],
    beta, lambda in [-50, 50],          gamma in [-25, 25].

The identification convention gamma_i1 > 0 is NOT imposed during the
search (it is a labeling convention, not a statistical constraint); it is
restored afterwards by ``canonicalize`` whenever the design has an
intercept column.

Asymptotic covariance is the sandwich

    Omega = A^{-1} B A^{-1},   A = -(1/nT) Hessian,   B = (1/nT) sum of
                                   per-observation score outer products,

with per-parameter standard errors sqrt(diag(Omega) / nT). For the Laplace
family A is unavailable (no curvature at 0), so fits report point
estimates only.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize, stats

from .likelihood import LikelihoodWorkspace
from .model import (
    CausalityCheck,
    ModelSpec,
    PanelData,
    ParameterVector,
    canonicalize,
    check_causal,
    param_names,
)

__all__ = [
    "FitResult",
    "FitError",
    "CovarianceUnavailableError",
    "default_bounds",
    "initial_points",
    "fit",
    "sandwich_covariance",
    "likelihood_ratio_test",
]

_PENALTY = 1e15  # finite stand-in for the -inf sentinel inside line searches


class FitError(RuntimeError):
    """Raised when no start produces a usable optimum."""


class CovarianceUnavailableError(RuntimeError):
    """Raised when the sandwich covariance cannot be formed."""


@dataclass
class FitResult:
    """Fitted parameters plus inference and convergence metadata."""

    theta: ParameterVector
    loglik: float
    gradient_norm: float
    converged: bool
    n_starts: int
    n_iterations: int
    aic: float
    covariance: Optional[np.ndarray] = None
    std_errors: Optional[np.ndarray] = None
    ci95: Optional[np.ndarray] = None
    cov_note: Optional[str] = None
    canonical: bool = True
    causality: Optional[CausalityCheck] = None
    boundary_warning: bool = False
    start_logliks: list = field(default_factory=list)
    n_domain_rejections: int = 0
    nT: int = 0
    names: list = field(default_factory=list)

    def to_json_dict(self):
        d = {
            "parameters": self.theta.to_json_dict(),
            "loglik": self.loglik,
            "aic": self.aic,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
            "canonical": self.canonical,
            "n_starts": self.n_starts,
            "n_iterations": self.n_iterations,
            "start_logliks": self.start_logliks,
            "boundary_warning": self.boundary_warning,
            "n_domain_rejections": self.n_domain_rejections,
            "nT": self.nT,
            "names": self.names,
        }
        if self.causality is not None:
            d["causal"] = self.causality.causal
            d["max_root_modulus"] = self.causality.max_root_modulus
        if self.std_errors is not None:
            d["std_errors"] = np.asarray(self.std_errors).tolist()
            d["ci95"] = np.asarray(self.ci95).tolist()
            d["covariance"] = np.asarray(self.covariance).tolist()
        if self.cov_note:
            d["covariance_note"] = self.cov_note
        return d

    def save_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)

    def format_table(self):
        """Human-readable table: Parameter | Estimate | Std. | 95% C.I.

        A trailing * marks coefficients whose interval covers zero; the
        Std./C.I. columns are omitted when the covariance is unavailable.
        """
        est = self.theta.to_array()
        lines = []
        have_se = self.std_errors is not None
        if have_se:
            lines.append(f"{'Parameter':<10} {'Estimate':>10} {'Std.':>9}  {'95% C.I.':>22}")
            for k, name in enumerate(self.names):
                lo, hi = self.ci95[k]
                star = "*" if lo <= 0.0 <= hi else ""
                lines.append(
                    f"{name:<10} {est[k]:>10.4f} {self.std_errors[k]:>9.4f}  "
                    f"({lo:>9.4f}, {hi:>9.4f}){star}"
                )
        else:
            lines.append(f"{'Parameter':<10} {'Estimate':>10}")
            for k, name in enumerate(self.names):
                lines.append(f"{name:<10} {est[k]:>10.4f}")
        lines.append("")
        lines.append(f"log-likelihood  {self.loglik:.4f}")
        lines.append(f"AIC             {self.aic:.4f}")
        lines.append(f"converged       {self.converged}  (grad norm {self.gradient_norm:.3e})")
        if self.causality is not None:
            lines.append(
                f"causal          {self.causality.causal}  "
                f"(max root modulus {self.causality.max_root_modulus:.4f})"
            )
        if self.cov_note:
            lines.append(f"note: {self.cov_note}")
        if self.boundary_warning:
            lines.append("warning: phi0 pinned at its search bound")
        if not self.canonical:
            lines.append("warning: estimate reported in non-canonical form "
                         "(gamma_i1 < 0 without an intercept column)")
        return "\n".join(lines)


# ----------------------------------------------------------------------


def default_bounds(spec: ModelSpec):
    """Box constraints in canonical order, as an (dim, 2) array."""
    phi0_cap = 0.995 / spec.W.tau_max
    rows = [(-phi0_cap, phi0_cap)]
    rows += [(-3.0, 3.0)] * spec.p
    rows += [(-50.0, 50.0)] * spec.n_beta
    rows += [(-50.0, 50.0)] * spec.h
    rows += [(-25.0, 25.0)] * (spec.h * spec.q)
    return np.array(rows)


def initial_points(spec: ModelSpec, data: PanelData, n_starts=5, seed=0, ws=None):
    """Deterministic multi-start initial values.

    Start 1 profiles a linear model: phi0 on a grid with (phi_1..phi_p,
    beta) from least squares at each grid point under a Gaussian
    criterion, lambda as small positive descending values 0.5/i, and gamma
    standard normal with gamma_i1 forced positive. Remaining starts jitter
    the linear block multiplicatively (30% relative scale) and redraw the
    gamma rows; keeping every start in one gamma orbit would defeat the
    point of multi-start on a multimodal network surface.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    ws = ws or LikelihoodWorkspace(spec, data)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(7,)))
    T, n = data.T, data.n

    L0 = ws.wy_lags[0].ravel()
    cols = [ws.wy_lags[i].ravel() for i in range(1, spec.p + 1)]
    if spec.n_beta:
        cols += [data.X[:, :, j].ravel() for j in range(spec.q)]
    Z = np.column_stack(cols) if cols else np.zeros((T * n, 0))
    y = data.Y_sample.ravel()

    best = None
    phi0_cap = 0.99 / spec.W.tau_max
    for phi0 in np.linspace(-0.9, 0.9, 37) * (1.0 / spec.W.tau_max):
        if abs(phi0) > phi0_cap:
            continue
        target = y - phi0 * L0
        if Z.shape[1]:
            coef, *_ = np.linalg.lstsq(Z, target, rcond=None)
            rss = float(np.sum((target - Z @ coef) ** 2))
        else:
            coef = np.zeros(0)
            rss = float(target @ target)
        ll = T * spec.W.log_det_a0(phi0) - 0.5 * rss
        if best is None or ll > best[0]:
            best = (ll, phi0, coef)
    _, phi0_hat, coef = best

    base = ParameterVector(
        phi0=phi0_hat,
        phi=coef[: spec.p],
        beta=coef[spec.p:] if spec.n_beta else np.zeros(0),
        lam=0.5 / np.arange(1, spec.h + 1) if spec.h else np.zeros(0),
        gamma=np.zeros((spec.h, spec.q)),
    )
    if spec.h:
        g = rng.standard_normal((spec.h, spec.q))
        g[:, 0] = np.abs(g[:, 0])
        base.gamma = g

    bounds = default_bounds(spec)
    starts = [_clip_start(base, bounds, spec)]
    for _ in range(n_starts - 1):
        x = base.to_array() * (1.0 + 0.3 * rng.standard_normal(spec.dim))
        cand = ParameterVector.from_array(x, spec)
        if spec.h:
            g = rng.standard_normal((spec.h, spec.q))
            g[:, 0] = np.abs(g[:, 0])
            cand.gamma = g
        starts.append(_clip_start(cand, bounds, spec))
    return starts


def _clip_start(theta, bounds, spec):
    x = np.clip(theta.to_array(), bounds[:, 0] + 1e-6, bounds[:, 1] - 1e-6)
    return ParameterVector.from_array(x, spec)


def _projected_gradient(x, g, lb, ub, tol=1e-10):
    pg = g.copy()
    pg[(x <= lb + tol) & (g > 0)] = 0.0
    pg[(x >= ub - tol) & (g < 0)] = 0.0
    return pg


def _newton_polish(ws, spec, x, lb, ub, tol, max_steps=25):
    """Sharpen an L-BFGS-B optimum with damped Newton steps.

    Quasi-Newton line searches stall once improvements fall below the
    floating-point resolution of the objective; a few analytic-Hessian
    steps push the projected gradient well under the convergence
    threshold. Interior points only; steps are backtracked on the
    log-likelihood and clipped to the box.
    """
    theta = ParameterVector.from_array(x, spec)
    ll = ws.log_likelihood(theta)
    for _ in range(max_steps):
        g = ws.gradient(theta)
        pg = _projected_gradient(x, -g, lb, ub)
        if np.max(np.abs(pg)) <= 0.1 * tol * (1.0 + abs(ll)):
            break
        try:
            H = ws.hessian(theta)
            step = np.linalg.solve(H, -g)
        except (ValueError, np.linalg.LinAlgError):
            break
        if step @ g <= 0:  # not an ascent direction (H not negative definite)
            break
        improved = False
        for alpha in (1.0, 0.5, 0.25, 0.1, 0.01):
            x_new = np.clip(x + alpha * step, lb, ub)
            theta_new = ParameterVector.from_array(x_new, spec)
            ll_new = ws.log_likelihood(theta_new)
            if np.isfinite(ll_new) and ll_new >= ll:
                improved = ll_new > ll or not np.array_equal(x_new, x)
                x, theta, ll = x_new, theta_new, ll_new
                break
        if not improved:
            break
    return x


def fit(spec: ModelSpec, data: PanelData, n_starts=5, seed=0, bounds=None,
        tol=1e-8, max_iter=500, memory=10, covariance=True, rank_check=True,
        starts=None):
    """Maximize the conditional log-likelihood from multiple starts.

    Returns the best local optimum (ties broken by start index) after
    canonicalization. For twice-differentiable families ``converged``
    means the projected-gradient infinity norm of the winner satisfies
    ||pg|| <= tol * (1 + |loglik|); for the Laplace family it reports the
    line search's own termination status, since the one-sided gradient
    does not vanish at a kink optimum.
    """
    data.check_against(spec, rank_check=rank_check)
    ws = LikelihoodWorkspace(spec, data, validate=False)
    if bounds is None:
        bounds = default_bounds(spec)
    else:
        bounds = np.asarray(bounds, dtype=float).reshape(spec.dim, 2)
    lb, ub = bounds[:, 0], bounds[:, 1]

    def objective(x):
        theta = ParameterVector.from_array(x, spec)
        ll, g = ws.loglik_and_gradient(theta)
        if not np.isfinite(ll):
            return _PENALTY, np.zeros(spec.dim)
        return -ll, -g

    if starts is None:
        starts = initial_points(spec, data, n_starts, seed, ws=ws)
    else:
        starts = [s if isinstance(s, ParameterVector)
                  else ParameterVector.from_array(np.asarray(s, dtype=float), spec)
                  for s in starts]
        n_starts = len(starts)
    candidates = []
    for idx, theta0 in enumerate(starts):
        res = optimize.minimize(
            objective,
            theta0.to_array(),
            jac=True,
            method="L-BFGS-B",
            bounds=list(map(tuple, bounds)),
            options={"maxiter": max_iter, "maxcor": memory, "ftol": 1e-14,
                     "gtol": 1e-7, "maxls": 50},
        )
        if np.isfinite(res.fun) and res.fun < _PENALTY / 2:
            candidates.append((idx, res))

    if not candidates:
        raise FitError(
            f"all {n_starts} starts failed to produce a finite optimum; "
            "check data scaling and bounds"
        )

    start_logliks = [-float(r.fun) for _, r in candidates]
    _, best = min(candidates, key=lambda c: (c[1].fun, c[0]))

    x_hat = best.x
    if spec.density.differentiable:
        x_hat = _newton_polish(ws, spec, x_hat, lb, ub, tol)
    theta_raw = ParameterVector.from_array(x_hat, spec)
    ll_hat = ws.log_likelihood(theta_raw)
    g_hat = ws.gradient(theta_raw)
    pg = _projected_gradient(x_hat, -g_hat, lb, ub)
    grad_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
    if spec.density.differentiable:
        converged = grad_norm <= tol * (1.0 + abs(ll_hat))
    else:
        # At the kink optimum of a non-smooth (Laplace) surface the
        # one-sided gradient does not vanish even though the subgradient
        # contains zero; take the line search's own termination instead.
        converged = bool(best.success)

    canonical = True
    theta_hat = theta_raw
    if spec.h:
        try:
            theta_hat = canonicalize(theta_raw, spec.include_intercept)
        except ValueError as exc:
            warnings.warn(str(exc), RuntimeWarning, stacklevel=2)
            canonical = False
    if canonical:
        ll_canon = ws.log_likelihood(theta_hat)
        if abs(ll_canon - ll_hat) > 1e-10 * (1.0 + abs(ll_hat)):
            raise AssertionError(
                f"canonicalization changed the log-likelihood by {ll_canon - ll_hat:.3e}"
            )

    boundary = bool(abs(x_hat[0] - lb[0]) < 1e-8 or abs(x_hat[0] - ub[0]) < 1e-8)
    if boundary:
        warnings.warn("phi0 pinned at its search bound", RuntimeWarning, stacklevel=2)

    result = FitResult(
        theta=theta_hat,
        loglik=float(ll_hat),
        gradient_norm=grad_norm,
        converged=bool(converged),
        n_starts=n_starts,
        n_iterations=int(best.nit),
        aic=2.0 * spec.dim - 2.0 * float(ll_hat),
        canonical=canonical,
        causality=check_causal(spec, theta_hat) if spec.p else CausalityCheck(True, 0.0),
        boundary_warning=boundary,
        start_logliks=start_logliks,
        n_domain_rejections=ws.n_domain_rejections,
        nT=data.n * data.T,
        names=param_names(spec),
    )

    if covariance:
        try:
            cov = sandwich_covariance(spec, theta_hat, data, ws=ws)
            result.covariance = cov["omega"]
            result.std_errors = cov["se"]
            result.ci95 = cov["ci95"]
        except (CovarianceUnavailableError, ValueError) as exc:
            # point estimates stand; inference degrades with an explanation
            result.cov_note = str(exc)
    return result


def sandwich_covariance(spec: ModelSpec, theta_hat: ParameterVector, data: PanelData,
                        ws=None):
    """Omega = A^{-1} B A^{-1} with SEs and 95% intervals.

    A is the averaged negated Hessian, B the averaged per-observation score
    outer product. Raises :class:`CovarianceUnavailableError` for the
    Laplace family and a ValueError (with condition number) when A is
    singular or not positive definite.
    """
    if not spec.density.differentiable:
        raise CovarianceUnavailableError(
            "sandwich covariance unavailable for the Laplace family: the "
            "log-density has no second derivative at 0; point estimates only"
        )
    ws = ws or LikelihoodWorkspace(spec, data, validate=False)
    nT = data.n * data.T
    A = -ws.hessian(theta_hat) / nT
    B = ws.score_outer_product(theta_hat)
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] <= 0:
        cond = np.inf if eigs[0] == 0 else eigs[-1] / eigs[0]
        raise ValueError(
            f"averaged negated Hessian is not positive definite "
            f"(min eigenvalue {eigs[0]:.3e}, condition number {cond:.3e})"
        )
    Ainv = np.linalg.inv(A)
    omega = Ainv @ B @ Ainv
    omega = 0.5 * (omega + omega.T)
    if np.linalg.eigvalsh(omega)[0] <= 0:
        warnings.warn("sandwich covariance is not positive definite", RuntimeWarning,
                      stacklevel=2)
    se = np.sqrt(np.diag(omega) / nT)
    est = theta_hat.to_array()
    ci95 = np.column_stack((est - 1.96 * se, est + 1.96 * se))
    return {"omega": omega, "A": A, "B": B, "se": se, "ci95": ci95}


def likelihood_ratio_test(full: FitResult, nested: FitResult, df):
    """Chi-square likelihood-ratio test of a nested model.

    stat = 2 (loglik_full - loglik_nested), p-value from the chi-square
    upper tail with ``df`` degrees of freedom. The chi-square reference is
    approximate when extra neurons are unidentified under the null; the
    p-value is reported with that caveat in mind.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    stat = 2.0 * (full.loglik - nested.loglik)
    if stat < -1e-6 * (1.0 + abs(full.loglik)):
        raise ValueError(
            f"nested model has higher log-likelihood (stat = {stat:.6g}); "
            "models do not nest or a fit did not converge"
        )
    stat = max(stat, 0.0)
    return {"stat": stat, "df": int(df), "pvalue": float(stats.chi2.sf(stat, df))}
