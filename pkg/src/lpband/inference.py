"""Joint inference on the estimated parameter block.

The per-period influence rows (scores) feed two interchangeable devices: a
kernel-weighted long-run covariance estimate, and bootstrap draws formed
by weighting the rows with overlapping moving sums of Gaussian noise. The
moving-sum construction makes the draws' conditional covariance equal, up
to edge terms, to the triangular-kernel covariance at the same bandwidth.
Bands are read off the draws: per-horizon quantile spreads give standard
errors, and the quantile of the maximum standardized deviation gives a
simultaneous critical value.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import BandwidthTooLarge, LPBandError, ZeroSpread
from .estimate import (
    ResidualSet,
    ThetaVector,
    backward_recursion,
    extend_irf,
    inverse_sigma,
)
from .structural import cholesky_impact, fevd, impact_vector

PHI_ONE = float(norm.cdf(1.0))     # quantile level whose spread spans 2 sd


@dataclass(frozen=True)
class KernelSpec:
    """Lag-window kind and bandwidth for the long-run covariance.

    ``weight_scale`` defaults to the bandwidth; passing the sample size
    instead reproduces the (inconsistent) sample-size-scaled weighting for
    comparison purposes only.
    """

    kind: str = "bartlett"          # bartlett | truncated
    bandwidth: int = 1
    weight_scale: int | None = None

    def __post_init__(self):
        if self.kind not in ("bartlett", "truncated"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.bandwidth < 0:
            raise ValueError("bandwidth must be >= 0")

    def weight(self, lag: int) -> float:
        lag = abs(lag)
        if self.kind == "truncated":
            return 1.0 if lag <= self.bandwidth else 0.0
        scale = self.bandwidth if self.weight_scale is None else self.weight_scale
        if scale == 0:
            return 1.0 if lag == 0 else 0.0
        return max(0.0, 1.0 - lag / scale)


@dataclass
class ScorePanel:
    """Per-period influence rows, one column per parameter coordinate.

    Column layout matches ThetaVector.to_array: covariance block, one
    block per horizon 1..h1, then the instrument block. Every column is
    exactly mean zero.
    """

    rows: np.ndarray            # m x d
    n: int
    h1: int
    first_var: int

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]


@dataclass
class DrawSet:
    """Bootstrap replicas of the parameter block.

    Row s is theta + mean_t(score_t * u_t^s) with the u's built from
    moving sums of N(0, 1/B_T) noise keyed by (seed, s).
    """

    draws: np.ndarray           # S x d
    base: ThetaVector
    seed: int
    b_t: int

    @property
    def S(self) -> int:
        return self.draws.shape[0]


@dataclass
class BandSet:
    """Per-horizon confidence band around a functional path."""

    kind: str                   # pointwise | supt | bonferroni
    alpha: float
    center: np.ndarray
    sigma: np.ndarray
    half_width: np.ndarray
    cv: float | None = None
    labels: list[str] | None = None

    @property
    def lower(self) -> np.ndarray:
        return self.center - self.half_width

    @property
    def upper(self) -> np.ndarray:
        return self.center + self.half_width


@dataclass
class SuptTestResult:
    statistic: float
    p_value: float
    cv: float
    alpha: float
    alternative: str


def compute_scores(res: ResidualSet, z: np.ndarray, theta: ThetaVector,
                   first_var: int = 0) -> ScorePanel:
    """Stack the influence rows for every parameter coordinate.

    Rows cover t = p+1..T-h1 so every horizon block is defined. Each
    column is recentered on that common sample, making the column means
    exactly zero.
    """
    n, h1 = theta.n, theta.h1
    m = res.T - res.p - h1
    if m < 2:
        raise ValueError("score sample has fewer than 2 rows")
    sig_inv = inverse_sigma(theta.sigma)
    e0 = res[0].lead[:m]
    d = n * n * (h1 + 1) + n
    rows = np.empty((m, d))

    # Covariance block: outer products of the one-step residuals. The
    # per-row matrices are symmetric, so flattening order is immaterial.
    rows[:, : n * n] = np.einsum("ti,tj->tij", e0, e0).reshape(m, n * n)

    # Horizon blocks: sigma^{-1} (e0_t lead_t' - mean), transposed so the
    # flat order pairs with vec(C_h) rather than vec(C_h').
    for h in range(1, h1 + 1):
        lead = res[h].lead[:m]
        prod = np.einsum("ti,tj->tij", e0, lead)
        prod -= prod.mean(axis=0)
        block = np.einsum("ij,tjk->tik", sig_inv, prod)
        # ravel in C order == column-major vec of the transpose
        rows[:, n * n * h: n * n * (h + 1)] = block.reshape(m, n * n)

    z = np.asarray(z, dtype=float).ravel()
    if z.size != res.T:
        raise ValueError(f"instrument length {z.size} != panel length {res.T}")
    zc = z[res.p: res.p + m]
    zc = zc - zc.mean()
    prod1 = e0 * e0[:, [first_var]]
    prod1 = prod1 - prod1.mean(axis=0)
    rows[:, -n:] = prod1 * zc[:, None]

    rows -= rows.mean(axis=0)
    return ScorePanel(rows=rows, n=n, h1=h1, first_var=first_var)


def default_bandwidth(T: int) -> int:
    """Nearest integer (half away from zero) of 0.75 T^{1/3}, at least 1."""
    if T < 1:
        raise ValueError("T must be >= 1")
    # snap to 9 decimals first so cube roots of perfect cubes land exactly
    x = round(0.75 * float(T) ** (1.0 / 3.0), 9)
    return max(1, math.floor(x + 0.5))


def hac(scores: ScorePanel, kernel: KernelSpec) -> np.ndarray:
    """Kernel-weighted long-run covariance of the score rows.

    Each lag-l autocovariance is divided by its own term count m - |l|,
    and the result is symmetrized.
    """
    x = scores.rows
    m = x.shape[0]
    b = kernel.bandwidth
    if b >= m:
        raise BandwidthTooLarge(f"bandwidth {b} must be smaller than m = {m}")
    omega = (x.T @ x) / m * kernel.weight(0)
    for lag in range(1, b + 1):
        w = kernel.weight(lag)
        if w == 0.0:
            continue
        gam = (x[:-lag].T @ x[lag:]) / (m - lag)
        omega = omega + w * (gam + gam.T)
    return 0.5 * (omega + omega.T)


def wild_draws(scores: ScorePanel, theta: ThetaVector, S: int, b_t: int,
               seed: int, workers: int = 1) -> DrawSet:
    """Bootstrap replicas via moving-sum Gaussian row weights.

    Draw s multiplies the score rows by u_t = zeta_t + ... + zeta_{t-B+1}
    where zeta ~ N(0, 1/B) come from a stream keyed by (seed, s); row s of
    the output is theta + the weighted row mean. Results are identical for
    any worker count because streams are keyed per draw.
    """
    if S < 1:
        raise ValueError("S must be >= 1")
    if b_t < 1:
        raise ValueError("b_t must be >= 1")
    x = scores.rows
    m = x.shape[0]
    base = theta.to_array()
    if base.size != x.shape[1]:
        raise ValueError("theta layout does not match score columns")
    out = np.empty((S, base.size))
    scale = 1.0 / math.sqrt(b_t)

    def fill(lo: int, hi: int) -> None:
        zeta = np.empty((hi - lo, m + b_t - 1))
        for s in range(lo, hi):
            rng = np.random.default_rng(
                np.random.SeedSequence(entropy=seed, spawn_key=(s,)))
            zeta[s - lo] = rng.standard_normal(m + b_t - 1)
        zeta *= scale
        cum = np.cumsum(zeta, axis=1)
        u = cum[:, b_t - 1:].copy()
        u[:, 1:] -= cum[:, : m - 1]
        out[lo:hi] = base + (u @ x) / m

    chunk = 1024
    spans = [(lo, min(lo + chunk, S)) for lo in range(0, S, chunk)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: fill(*span), spans))
    else:
        for span in spans:
            fill(*span)
    return DrawSet(draws=out, base=theta, seed=seed, b_t=b_t)


def nearest_rank_quantile(sorted_values: np.ndarray, beta: float) -> float:
    """Order statistic at rank ceil(beta * S) of pre-sorted values."""
    s = sorted_values.shape[0]
    rank = min(max(int(math.ceil(beta * s)), 1), s)
    return float(sorted_values[rank - 1])


def evaluate_functional(drawset: DrawSet, f) -> tuple[np.ndarray, np.ndarray]:
    """Apply f to the base parameter array and to every draw.

    f maps a flat parameter array to a 1-D array of functional values.
    Draws on which f raises an LPBandError (or yields non-finite values)
    are dropped with a warning.
    """
    center = np.asarray(f(drawset.base.to_array()), dtype=float).ravel()
    values = np.empty((drawset.S, center.size))
    bad = 0
    for s in range(drawset.S):
        try:
            row = np.asarray(f(drawset.draws[s]), dtype=float).ravel()
        except LPBandError:
            row = np.full(center.size, np.nan)
        values[s] = row
    keep = np.all(np.isfinite(values), axis=1)
    bad = int(drawset.S - keep.sum())
    if bad:
        warnings.warn(f"dropped {bad} of {drawset.S} draws where the "
                      "functional was undefined")
        values = values[keep]
    if values.shape[0] < 2:
        raise ZeroSpread("fewer than 2 usable draws")
    return center, values


def quantile_spread(values: np.ndarray) -> np.ndarray:
    """Per-column scale: half the spread between the +1 and -1 sd quantiles."""
    srt = np.sort(values, axis=0)
    s = srt.shape[0]
    r_hi = min(max(math.ceil(PHI_ONE * s), 1), s)
    r_lo = min(max(math.ceil((1.0 - PHI_ONE) * s), 1), s)
    return (srt[r_hi - 1] - srt[r_lo - 1]) / 2.0


def pointwise_from_values(center: np.ndarray, values: np.ndarray,
                          alpha: float = 0.32,
                          labels: list[str] | None = None) -> BandSet:
    sigma = quantile_spread(values)
    zcrit = float(norm.ppf(1.0 - alpha / 2.0))
    return BandSet(kind="pointwise", alpha=alpha, center=center, sigma=sigma,
                   half_width=zcrit * sigma, cv=zcrit, labels=labels)


def supt_from_values(center: np.ndarray, values: np.ndarray,
                     alpha: float = 0.32,
                     labels: list[str] | None = None) -> BandSet:
    sigma = quantile_spread(values)
    if np.any(sigma == 0.0):
        raise ZeroSpread("zero bootstrap spread at some horizon")
    xi = np.sort(np.max(np.abs(values - center) / sigma, axis=1))
    cv = nearest_rank_quantile(xi, 1.0 - alpha)
    return BandSet(kind="supt", alpha=alpha, center=center, sigma=sigma,
                   half_width=cv * sigma, cv=cv, labels=labels)


def bonferroni_from_values(center: np.ndarray, values: np.ndarray,
                           alpha: float = 0.32,
                           labels: list[str] | None = None) -> BandSet:
    sigma = quantile_spread(values)
    H = center.size
    if values.shape[0] < 100 * H / alpha:
        warnings.warn(f"only {values.shape[0]} draws for level "
                      f"{alpha}/{H}; tail quantiles are noisy")
    dev = np.sort(np.abs(values - center), axis=0)
    s = dev.shape[0]
    rank = min(max(math.ceil((1.0 - alpha / H) * s), 1), s)
    half = dev[rank - 1]
    positive = sigma > 0.0
    cv = float(np.max(half[positive] / sigma[positive])) if positive.any() else None
    return BandSet(kind="bonferroni", alpha=alpha, center=center, sigma=sigma,
                   half_width=half, cv=cv, labels=labels)


def pointwise_bands(drawset: DrawSet, f, alpha: float = 0.32,
                    labels: list[str] | None = None) -> BandSet:
    """Per-horizon Gaussian bands with quantile-spread standard errors."""
    center, values = evaluate_functional(drawset, f)
    return pointwise_from_values(center, values, alpha, labels)


def supt_bands(drawset: DrawSet, f, alpha: float = 0.32,
               labels: list[str] | None = None) -> BandSet:
    """Simultaneous bands scaled by the quantile of the max standardized
    deviation across horizons."""
    center, values = evaluate_functional(drawset, f)
    return supt_from_values(center, values, alpha, labels)


def bonferroni_bands(drawset: DrawSet, f, alpha: float = 0.32,
                     labels: list[str] | None = None) -> BandSet:
    """Union-bound bands: per-horizon absolute-deviation quantiles at
    level alpha / H."""
    center, values = evaluate_functional(drawset, f)
    return bonferroni_from_values(center, values, alpha, labels)


def empirical_pointwise_cv_from_values(center: np.ndarray, values: np.ndarray,
                                       alpha: float = 0.32) -> np.ndarray:
    sigma = quantile_spread(values)
    if np.any(sigma == 0.0):
        raise ZeroSpread("zero bootstrap spread at some horizon")
    std = np.sort(np.abs(values - center) / sigma, axis=0)
    s = std.shape[0]
    rank = min(max(math.ceil((1.0 - alpha) * s), 1), s)
    return std[rank - 1]


def empirical_pointwise_cv(drawset: DrawSet, f, alpha: float = 0.32) -> np.ndarray:
    """Per-horizon quantile of |standardized deviation| from the same draws.

    The sup-t critical value dominates every entry of this vector exactly,
    which is the order-statistics form of 'simultaneous bands contain
    per-horizon bands'.
    """
    center, values = evaluate_functional(drawset, f)
    return empirical_pointwise_cv_from_values(center, values, alpha)


def supt_test_from_values(center: np.ndarray, values: np.ndarray, null_value,
                          alpha: float = 0.32,
                          alternative: str = "two-sided") -> SuptTestResult:
    sigma = quantile_spread(values)
    if np.any(sigma == 0.0):
        raise ZeroSpread("zero bootstrap spread at some coordinate")
    null = np.broadcast_to(np.asarray(null_value, dtype=float), center.shape)
    dev = values - center
    gap = center - null
    if alternative == "two-sided":
        xi = np.max(np.abs(dev) / sigma, axis=1)
        stat = float(np.max(np.abs(gap) / sigma))
    elif alternative == "greater":
        xi = np.max(dev / sigma, axis=1)
        stat = float(np.max(gap / sigma))
    elif alternative == "less":
        xi = np.max(-dev / sigma, axis=1)
        stat = float(np.max(-gap / sigma))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    p = float(np.mean(xi >= stat))
    cv = nearest_rank_quantile(np.sort(xi), 1.0 - alpha)
    return SuptTestResult(statistic=stat, p_value=p, cv=cv, alpha=alpha,
                          alternative=alternative)


def supt_test(drawset: DrawSet, f, null_value, alpha: float = 0.32,
              alternative: str = "two-sided") -> SuptTestResult:
    """Max standardized deviation of f from a null path, with bootstrap
    critical value and p-value.

    ``alternative`` is ``two-sided``, ``greater`` (deviations above the
    null count) or ``less``.
    """
    center, values = evaluate_functional(drawset, f)
    return supt_test_from_values(center, values, null_value, alpha, alternative)


# ---------------------------------------------------------------------------
# Built-in functionals. Each factory returns (f, labels) where f maps a
# flat parameter array to a path vector.

def structural_irf_functional(n: int, h1: int, p: int, h2: int,
                              first_var: int = 0, negate: bool = False,
                              variables: list[int] | None = None):
    """Identified-shock responses, variable-major: (var, h=0..h2)."""
    sel = list(range(n)) if variables is None else list(variables)

    def f(arr: np.ndarray) -> np.ndarray:
        th = ThetaVector.from_array(arr, n, h1)
        a = backward_recursion(th.c, p)
        c_full = extend_irf(a, th.c, h2)
        b = impact_vector(th.gamma, th.sigma, first_var=first_var,
                          negate=negate).b
        psi = c_full @ b
        return psi[:, sel].T.ravel()

    labels = [f"var{v + 1}:h{h}" for v in sel for h in range(h2 + 1)]
    return f, labels


def reduced_irf_functional(n: int, h1: int, p: int, h2: int,
                           response: int, impulse: int):
    """One reduced-form coefficient path over h = 1..h2."""

    def f(arr: np.ndarray) -> np.ndarray:
        th = ThetaVector.from_array(arr, n, h1)
        a = backward_recursion(th.c, p)
        c_full = extend_irf(a, th.c, h2)
        return c_full[1:, response, impulse]

    labels = [f"c[{response},{impulse}]:h{h}" for h in range(1, h2 + 1)]
    return f, labels


def gamma_functional(n: int, h1: int, coords: list[int] | None = None):
    """Instrument covariance coordinates."""
    sel = list(range(n)) if coords is None else list(coords)

    def f(arr: np.ndarray) -> np.ndarray:
        return arr[-n:][sel]

    return f, [f"gamma{j + 1}" for j in sel]


def impact_gap_functional(n: int, h1: int, first_var: int = 0,
                          shock_index: int = 0,
                          ordering: list[int] | None = None,
                          negate: bool = False):
    """Per-variable difference between the recursive-scheme impact and the
    instrument-identified impact."""

    def f(arr: np.ndarray) -> np.ndarray:
        th = ThetaVector.from_array(arr, n, h1)
        b_rec = cholesky_impact(th.sigma, shock_index=shock_index,
                                ordering=ordering).b
        b_iv = impact_vector(th.gamma, th.sigma, first_var=first_var,
                             negate=negate).b
        return b_rec - b_iv

    return f, [f"var{j + 1}" for j in range(n)]


def fevd_functional(n: int, h1: int, p: int, h2: int, horizons: list[int],
                    first_var: int = 0, negate: bool = False,
                    variables: list[int] | None = None):
    """Variance shares of the identified shock, variable-major."""
    sel = list(range(n)) if variables is None else list(variables)

    def f(arr: np.ndarray) -> np.ndarray:
        th = ThetaVector.from_array(arr, n, h1)
        a = backward_recursion(th.c, p)
        c_full = extend_irf(a, th.c, h2)
        b = impact_vector(th.gamma, th.sigma, first_var=first_var,
                          negate=negate).b
        psi = c_full @ b
        table = fevd(psi, c_full, th.sigma, horizons)
        return table.shares[sel].ravel()

    labels = [f"var{v + 1}:H{H}" for v in sel for H in horizons]
    return f, labels
