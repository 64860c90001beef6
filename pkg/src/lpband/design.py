"""Design matrices for trend-augmented lagged regressions and the shared
least-squares kernel.

Time is indexed 1..T. The first usable regression row is t = p+1, so that
the deepest lag y_{t-p} always exists, and the last is t = T-h for a
forecast horizon h. Trend columns are raw powers of the absolute time
index t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSample, RankDeficient

# Relative singular-value cutoff below which a design is treated as rank
# deficient. Trend and unit-root columns are badly conditioned, hence the
# orthogonal-decomposition solver rather than normal equations.
RANK_TOL = 1e-10


@dataclass
class Panel:
    """A T x n block of time series observed in levels.

    Parameters
    ----------
    values : ndarray, shape (T, n)
        Rows are time, columns are variables.
    names : list of str, optional
        Column labels; defaults to y1..yn.
    t0_label : str, optional
        Calendar label of the first row (echoed in reports, never used in
        computations).
    """

    values: np.ndarray
    names: list[str] = field(default_factory=list)
    t0_label: str | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError("panel values must be a T x n array with T, n >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("panel values must be finite")
        self.values = v
        if not self.names:
            self.names = [f"y{i + 1}" for i in range(v.shape[1])]
        if len(self.names) != v.shape[1]:
            raise ValueError("number of names must match number of columns")

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class DesignSpec:
    """Lag order, trend degree and horizon layout of an estimation run.

    ``k = -1`` means no deterministic terms, ``k = 0`` a constant only,
    ``k >= 1`` polynomial trend columns 1, t, ..., t^k. ``h1`` is the
    largest horizon estimated by direct projection; ``h2 >= h1`` is the
    reporting horizon reached by recursion.
    """

    p: int
    k: int = 0
    h1: int | None = None
    h2: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "h1", self.p if self.h1 is None else int(self.h1))
        object.__setattr__(self, "h2", self.h1 if self.h2 is None else int(self.h2))
        if self.p < 1:
            raise ValueError("lag order p must be >= 1")
        if self.k < -1:
            raise ValueError("trend degree k must be >= -1")
        if self.h1 < self.p:
            raise ValueError("h1 must be >= p")
        if self.h2 < self.h1:
            raise ValueError("h2 must be >= h1")

    @property
    def n_trend(self) -> int:
        return self.k + 1

    def n_regressors(self, n: int) -> int:
        return n * self.p + self.n_trend

    def validate_sample(self, T: int, n: int) -> None:
        """Raise InsufficientSample unless every horizon regression is feasible."""
        need = self.n_regressors(n) + 2
        have = T - self.p - self.h1
        if have < need:
            raise InsufficientSample(
                f"effective sample T - p - h1 = {have} rows, "
                f"need at least n*p + k + 2 = {need}"
            )


@dataclass
class RegressionProblem:
    """One stacked least-squares problem: responses, regressors, time stamps."""

    y: np.ndarray          # m x n responses
    x: np.ndarray          # m x q regressors: (y_{t-1}..y_{t-p}, 1, t, ..., t^k)
    t_index: np.ndarray    # the m (1-based) conditioning times t


def trend_columns(t_index: np.ndarray, k: int) -> np.ndarray:
    """Raw polynomial trend block 1, t, ..., t^k for the given times."""
    t = np.asarray(t_index, dtype=float)
    if k < 0:
        return np.empty((t.shape[0], 0))
    return np.vander(t, N=k + 1, increasing=True)


def build_design(panel: Panel, spec: DesignSpec, h: int) -> RegressionProblem:
    """Pair y_{t+h} with (y_{t-1}, ..., y_{t-p}, trend at t) for t = p+1..T-h.

    Parameters
    ----------
    panel : Panel
    spec : DesignSpec
    h : int
        Forecast horizon, 0 <= h <= spec.h2.

    Returns
    -------
    RegressionProblem
        With m = T - h - p rows.
    """
    if h < 0:
        raise ValueError("horizon h must be >= 0")
    v = panel.values
    T, n = v.shape
    p, k = spec.p, spec.k
    m = T - h - p
    if m < 1:
        raise InsufficientSample(f"horizon {h}: no usable rows (T={T}, p={p})")
    t_index = np.arange(p + 1, T - h + 1)            # 1-based conditioning times
    y = v[t_index + h - 1]                           # y_{t+h}
    lags = np.hstack([v[t_index - 1 - lag - 1] for lag in range(p)])
    x = np.hstack([lags, trend_columns(t_index, k)])
    return RegressionProblem(y=y, x=x, t_index=t_index)


def least_squares(prob: RegressionProblem) -> tuple[np.ndarray, np.ndarray]:
    """Solve min ||Y - X B|| by SVD and return (coefficients, residuals).

    Raises
    ------
    RankDeficient
        If the smallest singular value of X is below RANK_TOL times the
        largest.
    """
    beta, resid = _lstsq(prob.x, prob.y)
    return beta, resid


def _lstsq(x: np.ndarray, y: np.ndarray,
           strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    # rcond zeroes tiny singular values, so the solution is the
    # minimum-norm one and the residual is the exact projection even for
    # rank-deficient designs (residuals are unique; coefficients are not).
    beta, _, rank, sv = np.linalg.lstsq(x, y, rcond=RANK_TOL)
    if strict and sv.size and (sv[-1] <= RANK_TOL * sv[0] or rank < x.shape[1]):
        raise RankDeficient(
            f"design is rank deficient: singular value ratio "
            f"{sv[-1] / sv[0]:.2e} < {RANK_TOL:.0e}"
        )
    return beta, y - x @ beta
