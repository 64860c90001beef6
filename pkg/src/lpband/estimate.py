"""Multi-horizon projection estimates in levels.

For every horizon h the response y_{t+h} is regressed on p lags and a
polynomial trend dated t. Horizon-h impulse coefficients are recovered
from cross products of residuals; lag matrices are re-derived from the
first p coefficient matrices by inverting the moving-average recursion,
which then extends the impulse responses to any reporting horizon.

All flattened parameter blocks use column-major (``order="F"``) vec
ordering; see ThetaVector.to_array for the canonical layout.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .design import DesignSpec, Panel, build_design, _lstsq
from .errors import SingularCovariance, WeakInstrumentWarning

# Relative eigenvalue cutoff for treating a covariance/Gram matrix as singular.
SING_TOL = 1e-12


@dataclass
class ResidualBlock:
    """Residual pair for one horizon.

    ``lead`` holds residuals of the y_{t+h} regression; ``base`` holds
    residuals of y_t regressed on the same regressors over the same rows
    (for h = 0 the two coincide). Refitting the base per horizon keeps the
    cross-product coefficient exactly equal to the direct projection
    coefficient on y_t (Frisch-Waugh identity), which a shared full-sample
    base would only match to O(1/T).
    """

    h: int
    lead: np.ndarray
    base: np.ndarray
    t_index: np.ndarray

    @property
    def m(self) -> int:
        return self.lead.shape[0]


@dataclass
class ResidualSet:
    """Residual blocks for h = 0..h1 plus the layout they were built from.

    ``scale`` is the root mean square of the panel values; residual
    covariances negligible against it mark a (near-)deterministic panel.
    """

    blocks: list[ResidualBlock]
    T: int
    n: int
    p: int
    h1: int
    scale: float = 1.0

    def __getitem__(self, h: int) -> ResidualBlock:
        return self.blocks[h]


@dataclass
class ThetaVector:
    """Joint parameter block: innovation covariance, impulse coefficient
    matrices for horizons 1..h1, and the instrument covariance vector.

    The canonical flattening is
    ``[vec(sigma), vec(C_1), ..., vec(C_h1), gamma]`` with column-major
    vec, total length ``n^2 (h1 + 1) + n``.
    """

    sigma: np.ndarray          # n x n, symmetric
    c: np.ndarray              # (h1, n, n); c[j] is the horizon-(j+1) matrix
    gamma: np.ndarray          # (n,)

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        self.gamma = np.asarray(self.gamma, dtype=float).ravel()
        n = self.sigma.shape[0]
        if self.sigma.shape != (n, n):
            raise ValueError("sigma must be square")
        if np.max(np.abs(self.sigma - self.sigma.T)) > 1e-10 * max(
            1.0, float(np.max(np.abs(self.sigma)))
        ):
            raise ValueError("sigma must be symmetric to 1e-10")
        if self.c.ndim != 3 or self.c.shape[1:] != (n, n):
            raise ValueError("c must have shape (h1, n, n)")
        if self.gamma.shape != (n,):
            raise ValueError("gamma must have length n")

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def h1(self) -> int:
        return self.c.shape[0]

    @property
    def dim(self) -> int:
        n, h1 = self.n, self.h1
        return n * n * (h1 + 1) + n

    def to_array(self) -> np.ndarray:
        parts = [self.sigma.ravel(order="F")]
        parts += [self.c[j].ravel(order="F") for j in range(self.h1)]
        parts.append(self.gamma)
        return np.concatenate(parts)

    @classmethod
    def from_array(cls, arr: np.ndarray, n: int, h1: int) -> "ThetaVector":
        arr = np.asarray(arr, dtype=float).ravel()
        if arr.size != n * n * (h1 + 1) + n:
            raise ValueError("array length does not match layout")
        sigma = arr[: n * n].reshape(n, n, order="F")
        sigma = 0.5 * (sigma + sigma.T)
        c = np.empty((h1, n, n))
        for j in range(h1):
            lo = n * n * (j + 1)
            c[j] = arr[lo: lo + n * n].reshape(n, n, order="F")
        gamma = arr[-n:].copy()
        return cls(sigma=sigma, c=c, gamma=gamma)


@dataclass
class IRFBundle:
    """Reduced-form impulse coefficients through the reporting horizon.

    ``c_full[0]`` is the identity; entries 1..h1 are projection estimates
    and entries beyond h1 come from the lag-matrix recursion. ``psi`` holds
    the identified-shock responses when an impact vector is available.
    """

    c_full: np.ndarray                 # (h2+1, n, n)
    a_br: np.ndarray                   # (p, n, n)
    psi: np.ndarray | None = None      # (h2+1, n)

    @property
    def h2(self) -> int:
        return self.c_full.shape[0] - 1


def estimate_residuals(panel: Panel, spec: DesignSpec, workers: int = 1) -> ResidualSet:
    """Run the horizon regressions for h = 0..h1 and store residual pairs.

    Each horizon solves one stacked least-squares problem with responses
    (y_t, y_{t+h}) on the common rows t = p+1..T-h, so the ``base``
    residuals are refit per horizon.
    """
    spec.validate_sample(panel.T, panel.n)
    v = panel.values
    T, n = v.shape
    p = spec.p
    prob0 = build_design(panel, spec, 0)
    x_full = prob0.x
    y0_full = prob0.y                       # y_t for t = p+1..T

    def solve_h(h: int) -> ResidualBlock:
        m = T - h - p
        x = x_full[:m]
        # non-strict solve: residuals stay well defined when trend and lag
        # columns are exactly collinear (e.g. a deterministic panel)
        if h == 0:
            _, resid = _lstsq(x, y0_full, strict=False)
            return ResidualBlock(h=0, lead=resid, base=resid,
                                 t_index=prob0.t_index)
        lead_y = v[p + h: T]                # y_{t+h} for t = p+1..T-h
        stacked = np.hstack([y0_full[:m], lead_y])
        _, resid = _lstsq(x, stacked, strict=False)
        return ResidualBlock(h=h, lead=resid[:, n:], base=resid[:, :n],
                             t_index=prob0.t_index[:m])

    horizons = range(spec.h1 + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(solve_h, horizons))
    else:
        blocks = [solve_h(h) for h in horizons]
    return ResidualSet(blocks=blocks, T=T, n=n, p=p, h1=spec.h1,
                       scale=float(np.sqrt(np.mean(v ** 2))))


def estimate_sigma(res: ResidualSet) -> np.ndarray:
    """Innovation covariance from the horizon-0 residuals.

    The divisor is the actual row count of the block. The result may be
    singular; inversion sites check and raise.
    """
    e = res[0].lead
    sigma = e.T @ e / e.shape[0]
    return 0.5 * (sigma + sigma.T)


def _solve_psd(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve mat @ x = rhs for a symmetric PSD matrix with a rank guard."""
    w = np.linalg.eigvalsh(mat)
    if w[0] <= SING_TOL * max(w[-1], 0.0) or w[-1] <= 0.0:
        raise SingularCovariance(
            f"{what} is numerically singular "
            f"(eigenvalue ratio {w[0] / w[-1] if w[-1] > 0 else 0.0:.2e})"
        )
    return np.linalg.solve(mat, rhs)


def inverse_sigma(sigma: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric covariance; raises SingularCovariance."""
    return _solve_psd(sigma, np.eye(sigma.shape[0]), "covariance")


def estimate_c(res: ResidualSet, h: int) -> np.ndarray:
    """Horizon-h impulse coefficient matrix from residual cross products.

    Solves gram @ C_h' = sum_t base_t lead_t' over the rows t = p+1..T-h;
    the result equals the coefficient on y_t in the direct projection of
    y_{t+h} on (y_t, trend, lags).
    """
    if h < 1 or h > res.h1:
        raise ValueError("h must be in 1..h1")
    block = res[h]
    gram = block.base.T @ block.base
    # residuals that are pure rounding noise against the data scale mean a
    # deterministic panel; the relative eigenvalue check cannot see that
    if np.max(np.abs(gram)) / block.m <= (1e-12 * res.scale) ** 2:
        raise SingularCovariance(
            "residuals are negligible against the data scale; "
            "the panel is (numerically) deterministic")
    cross = block.base.T @ block.lead
    return _solve_psd(gram, cross, "residual Gram matrix").T


def estimate_gamma(res: ResidualSet, z: np.ndarray, first_var: int = 0) -> np.ndarray:
    """Covariance of residual products with the instrument.

    Both factors are centered on the same rows t = p+1..T; the divisor is
    the row count. A constant instrument yields the zero vector and a
    WeakInstrumentWarning.
    """
    e = res[0].lead
    m = e.shape[0]
    z = np.asarray(z, dtype=float).ravel()
    if z.size != res.T:
        raise ValueError(f"instrument length {z.size} != panel length {res.T}")
    zs = z[res.p:]
    if np.ptp(zs) == 0.0:
        warnings.warn("instrument is constant over the sample; gamma is zero",
                      WeakInstrumentWarning)
    prod = e * e[:, [first_var]]
    prod_c = prod - prod.mean(axis=0)
    z_c = zs - zs.mean()
    return prod_c.T @ z_c / m


def backward_recursion(c: np.ndarray, p: int | None = None) -> np.ndarray:
    """Recover lag matrices from the first p impulse coefficient matrices.

    A_i = C_i - sum_{l=1}^{i-1} A_l C_{i-l}, the exact inverse of the
    forward recursion used by forward_c.
    """
    c = np.asarray(c, dtype=float)
    if p is None:
        p = c.shape[0]
    n = c.shape[1]
    a = np.zeros((p, n, n))
    for i in range(1, p + 1):
        acc = c[i - 1].copy()
        for ell in range(1, i):
            acc -= a[ell - 1] @ c[i - ell - 1]
        a[i - 1] = acc
    return a


def forward_c(a: np.ndarray, horizon: int) -> np.ndarray:
    """Impulse coefficients C_0..C_horizon implied by lag matrices.

    C_0 = I and C_h = sum_{l=1}^{min(h,p)} A_l C_{h-l}.
    """
    a = np.asarray(a, dtype=float)
    p, n = a.shape[0], a.shape[1]
    c = np.zeros((horizon + 1, n, n))
    c[0] = np.eye(n)
    for h in range(1, horizon + 1):
        acc = np.zeros((n, n))
        for ell in range(1, min(h, p) + 1):
            acc += a[ell - 1] @ c[h - ell]
        c[h] = acc
    return c


def extend_irf(a_br: np.ndarray, c: np.ndarray, h2: int) -> np.ndarray:
    """Extend projection coefficients beyond h1 by the lag recursion.

    Returns the full stack C_0..C_h2 where entries 1..h1 are the inputs
    and later entries apply C_h = sum_l A_l C*_{h-l} with C* drawn from
    the projection estimates while available.
    """
    c = np.asarray(c, dtype=float)
    a_br = np.asarray(a_br, dtype=float)
    h1, n = c.shape[0], c.shape[1]
    if h2 < h1:
        raise ValueError("h2 must be >= h1")
    p = a_br.shape[0]
    full = np.zeros((h2 + 1, n, n))
    full[0] = np.eye(n)
    full[1: h1 + 1] = c
    for h in range(h1 + 1, h2 + 1):
        acc = np.zeros((n, n))
        for ell in range(1, min(h, p) + 1):
            acc += a_br[ell - 1] @ full[h - ell]
        full[h] = acc
    return full


def estimate_theta(
    panel: Panel,
    z: np.ndarray,
    spec: DesignSpec,
    first_var: int = 0,
    negate_impact: bool = False,
    workers: int = 1,
) -> tuple[ThetaVector, ResidualSet, IRFBundle]:
    """Full point-estimation pass: residuals, covariance, impulse
    coefficients, instrument covariances, lag recursion, structural
    responses.

    Returns (theta, residual set, irf bundle). The bundle's ``psi`` is
    None when the instrument covariance vector is numerically zero.
    """
    from .structural import impact_vector, structural_irf
    from .errors import ZeroGamma

    res = estimate_residuals(panel, spec, workers=workers)
    sigma = estimate_sigma(res)
    c = np.stack([estimate_c(res, h) for h in range(1, spec.h1 + 1)])
    gamma = estimate_gamma(res, z, first_var=first_var)
    theta = ThetaVector(sigma=sigma, c=c, gamma=gamma)
    a_br = backward_recursion(c, spec.p)
    c_full = extend_irf(a_br, c, spec.h2)
    try:
        b = impact_vector(gamma, sigma, first_var=first_var, negate=negate_impact)
        psi = structural_irf(c_full, b.b)
    except ZeroGamma:
        warnings.warn("instrument covariance vector is zero; structural "
                      "responses are unavailable", WeakInstrumentWarning)
        psi = None
    return theta, res, IRFBundle(c_full=c_full, a_br=a_br, psi=psi)
