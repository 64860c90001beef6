"""Minimum-distance smoothing of the projection coefficients.

The horizon-1..h1 coefficient matrices are projected onto the set of
paths generated by some p-lag recursion, weighted by inverse bootstrap
variances. The fitted lag matrices then produce smoothed responses at any
horizon, and pushing every bootstrap draw through the same fit yields
smoothed bands.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateWeightWarning
from .estimate import ThetaVector, backward_recursion, forward_c
from .inference import DrawSet, quantile_spread
from .structural import impact_vector

WEIGHT_CAP = 1e24
SPREAD_FLOOR = 1e-12


@dataclass
class MDProblem:
    """Stacked projection coefficients, diagonal weights and lag order.

    ``g_lp`` is the column-major flattening of (C_1, ..., C_h1), matching
    the coefficient block of ThetaVector.to_array.
    """

    g_lp: np.ndarray
    weights: np.ndarray
    p: int
    n: int

    def __post_init__(self):
        self.g_lp = np.asarray(self.g_lp, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.g_lp.size != self.weights.size:
            raise ValueError("weights must match g_lp in length")
        if self.g_lp.size % (self.n * self.n) != 0:
            raise ValueError("g_lp length must be a multiple of n^2")
        if np.any(self.weights <= 0.0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be positive and finite")
        if self.h1 < self.p:
            raise ValueError("need at least p coefficient matrices")

    @property
    def h1(self) -> int:
        return self.g_lp.size // (self.n * self.n)


@dataclass
class MDSolution:
    a_md: np.ndarray
    objective_value: float
    converged: bool
    iterations: int
    grad_norm: float


def md_weights(drawset: DrawSet) -> np.ndarray:
    """Inverse bootstrap variances of the coefficient coordinates.

    Coordinates whose quantile spread is ~0 get their weight capped, with
    a DegenerateWeightWarning.
    """
    n, h1 = drawset.base.n, drawset.base.h1
    cols = slice(n * n, n * n * (h1 + 1))
    spread = quantile_spread(drawset.draws[:, cols])
    degenerate = spread < SPREAD_FLOOR
    if degenerate.any():
        warnings.warn(f"{int(degenerate.sum())} coefficient coordinates have "
                      "near-zero bootstrap spread; weights capped",
                      DegenerateWeightWarning)
    w = np.empty_like(spread)
    w[~degenerate] = 1.0 / spread[~degenerate] ** 2
    w[degenerate] = WEIGHT_CAP
    return np.minimum(w, WEIGHT_CAP)


def stack_c(c: np.ndarray) -> np.ndarray:
    """Column-major flattening of a (h, n, n) coefficient stack."""
    c = np.asarray(c, dtype=float)
    return np.concatenate([c[j].ravel(order="F") for j in range(c.shape[0])])


def _c_and_jacobian(a: np.ndarray, h1: int) -> tuple[np.ndarray, np.ndarray]:
    """Forward recursion values g(A) and d g / d vec(A), both column-major.

    d vec(C_h) = (C_{h-m}' kron I) d vec(A_m) + sum_l (I kron A_l) d vec(C_{h-l}).
    """
    p, n = a.shape[0], a.shape[1]
    eye = np.eye(n)
    c = forward_c(a, h1)
    nn = n * n
    deriv = np.zeros((h1 + 1, p, nn, nn))
    for h in range(1, h1 + 1):
        for m in range(1, min(h, p) + 1):
            deriv[h, m - 1] = np.kron(c[h - m].T, eye)
        for ell in range(1, min(h - 1, p) + 1):
            ia = np.kron(eye, a[ell - 1])
            for m in range(p):
                deriv[h, m] += ia @ deriv[h - ell, m]
    jac = np.concatenate(
        [np.concatenate([deriv[h, m] for m in range(p)], axis=1)
         for h in range(1, h1 + 1)], axis=0)
    return stack_c(c[1:]), jac


def _unstack_a(vec: np.ndarray, p: int, n: int) -> np.ndarray:
    a = np.empty((p, n, n))
    for m in range(p):
        a[m] = vec[m * n * n: (m + 1) * n * n].reshape(n, n, order="F")
    return a


def fit_md(problem: MDProblem, init: np.ndarray | None = None,
           max_iter: int = 200, grad_tol: float = 1e-8) -> MDSolution:
    """Weighted least-squares fit of lag matrices to the coefficient stack.

    Gauss-Newton with a Levenberg damping fallback; initialized at the
    backward recursion of the first p matrices unless ``init`` is given.
    The gradient tolerance applies to the objective normalized by the
    largest weight, so the stopping rule does not depend on the scale of
    the weights. Non-convergence is reported through the flag, not an
    exception.
    """
    p, n, h1 = problem.p, problem.n, problem.h1
    w = problem.weights
    grad_tol = grad_tol * max(1.0, float(w.max()))
    if init is None:
        c_head = np.stack([
            problem.g_lp[j * n * n: (j + 1) * n * n].reshape(n, n, order="F")
            for j in range(p)])
        init = backward_recursion(c_head, p)
    a_vec = np.concatenate([np.asarray(init, dtype=float)[m].ravel(order="F")
                            for m in range(p)])

    def objective(vec):
        g, jac = _c_and_jacobian(_unstack_a(vec, p, n), h1)
        r = g - problem.g_lp
        return float(r @ (w * r)), r, jac

    obj, r, jac = objective(a_vec)
    best_vec, best_obj = a_vec.copy(), obj
    grad = 2.0 * jac.T @ (w * r)
    grad_norm = float(np.max(np.abs(grad)))
    it = 0
    lam = 0.0
    while it < max_iter and grad_norm >= grad_tol:
        it += 1
        jw = jac * w[:, None]
        hess = jac.T @ jw
        rhs = jw.T @ r
        step_ok = False
        for _ in range(20):
            damped = hess if lam == 0.0 else hess + lam * np.diag(np.diag(hess))
            try:
                delta = np.linalg.solve(damped, rhs)
            except np.linalg.LinAlgError:
                delta, *_ = np.linalg.lstsq(damped, rhs, rcond=None)
            cand = a_vec - delta
            cand_obj, cand_r, cand_jac = objective(cand)
            if cand_obj <= obj:
                step_ok = True
                break
            lam = 1e-4 if lam == 0.0 else lam * 10.0
        if not step_ok:
            break
        a_vec, obj, r, jac = cand, cand_obj, cand_r, cand_jac
        lam = 0.0 if lam == 0.0 else lam / 10.0
        if obj < best_obj:
            best_vec, best_obj = a_vec.copy(), obj
        grad = 2.0 * jac.T @ (w * r)
        grad_norm = float(np.max(np.abs(grad)))
    return MDSolution(a_md=_unstack_a(best_vec, p, n),
                      objective_value=best_obj,
                      converged=bool(grad_norm < grad_tol),
                      iterations=it,
                      grad_norm=grad_norm)


def smoothed_irf(a_md: np.ndarray, h2: int) -> np.ndarray:
    """Coefficient matrices C_1..C_h2 implied by the fitted lag matrices."""
    return forward_c(np.asarray(a_md, dtype=float), h2)[1:]


def smoothed_irf_functional(n: int, h1: int, p: int, h2: int,
                            weights: np.ndarray,
                            warm_start: np.ndarray | None = None,
                            first_var: int = 0, negate: bool = False,
                            variables: list[int] | None = None,
                            linearized: bool = False):
    """Identified-shock responses after the minimum-distance refit.

    Each draw's coefficient block is refit (warm-started at the point
    solution) and pushed through the recursion; ``linearized=True``
    replaces the refit by a single Gauss-Newton step from the warm start,
    which is cheaper and first-order equivalent.
    """
    sel = list(range(n)) if variables is None else list(variables)
    max_iter = 1 if linearized else 200

    def f(arr: np.ndarray) -> np.ndarray:
        th = ThetaVector.from_array(arr, n, h1)
        problem = MDProblem(g_lp=stack_c(th.c), weights=weights, p=p, n=n)
        sol = fit_md(problem, init=warm_start, max_iter=max_iter)
        c_full = forward_c(sol.a_md, h2)
        b = impact_vector(th.gamma, th.sigma, first_var=first_var,
                          negate=negate).b
        psi = c_full @ b
        return psi[:, sel].T.ravel()

    labels = [f"var{v + 1}:h{h}" for v in sel for h in range(h2 + 1)]
    return f, labels
