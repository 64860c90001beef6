"""Synthetic data generator with known dynamics, regime-switching shock
volatility and an observable volatility instrument.

The generated process follows

    y_t = V mu_t + A_1 y_{t-1} + ... + A_p y_{t-p} + B eps_t,

where eps_{it} = xi_{it} sigma_{it}, xi is i.i.d. with unit variance, and
sigma follows a two-state Markov chain (or is constant). The instrument
Z_t is the regime indicator or a regime-dependent count. Exact population
impulse responses and moments are produced alongside, so the simulator
doubles as the verification oracle for the estimators.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import Panel, trend_columns
from .errors import ExplosiveRoots
from .estimate import IRFBundle, ThetaVector, forward_c

# Companion roots may touch the unit circle (unit roots allowed) but not
# exceed it.
ROOT_TOL = 1e-12
# Below this spectral radius the level recursion is burnt in; at or above,
# accumulating components start at zero instead.
STABLE_TOL = 1e-6


@dataclass
class VolatilityProcess:
    """Shock scale process.

    ``constant`` keeps all scales at one and draws an i.i.d. binary
    instrument that is independent of the shocks. ``markov2`` switches a
    per-shock multiplier between two regimes; the instrument is either the
    regime indicator itself or a count in 0..4 drawn binomially with a
    regime-dependent success probability.
    """

    kind: str = "constant"                      # constant | markov2
    stay_prob: tuple[float, float] = (0.7, 0.7)
    vol_multipliers: np.ndarray | None = None   # (2, n): [regime, shock]
    instrument_rule: str = "regime_indicator"   # regime_indicator | counts
    count_probs: tuple[float, float] = (0.25, 0.75)

    def __post_init__(self):
        if self.kind not in ("constant", "markov2"):
            raise ValueError(f"unknown volatility kind {self.kind!r}")
        if self.kind == "markov2":
            if not all(0.0 < q < 1.0 for q in self.stay_prob):
                raise ValueError("stay probabilities must be in (0, 1)")
            if self.vol_multipliers is None:
                raise ValueError("markov2 requires vol_multipliers")
            mult = np.asarray(self.vol_multipliers, dtype=float)
            if mult.ndim != 2 or mult.shape[0] != 2 or np.any(mult <= 0.0):
                raise ValueError("vol_multipliers must be (2, n) and positive")
            self.vol_multipliers = mult
            if self.instrument_rule not in ("regime_indicator", "counts"):
                raise ValueError(f"unknown instrument rule {self.instrument_rule!r}")

    def stationary_regime_probs(self) -> np.ndarray:
        q0, q1 = self.stay_prob
        denom = (1.0 - q0) + (1.0 - q1)
        return np.array([(1.0 - q1) / denom, (1.0 - q0) / denom])

    def shock_second_moments(self, n: int) -> np.ndarray:
        """Unconditional E[eps_i^2] per shock."""
        if self.kind == "constant":
            return np.ones(n)
        pi = self.stationary_regime_probs()
        return pi @ self.vol_multipliers ** 2

    def instrument_volatility_cov(self, n: int) -> np.ndarray:
        """Population Cov(eps_i^2, Z) per shock."""
        if self.kind == "constant":
            return np.zeros(n)
        pi = self.stationary_regime_probs()
        gap = self.vol_multipliers[1] ** 2 - self.vol_multipliers[0] ** 2
        base = pi[0] * pi[1] * gap
        if self.instrument_rule == "regime_indicator":
            return base
        p0, p1 = self.count_probs
        return base * 4.0 * (p1 - p0)


@dataclass
class SimConfig:
    """Everything needed to regenerate one dataset bit for bit."""

    a: np.ndarray                       # (p, n, n) lag matrices
    b: np.ndarray                       # (n, n) mixing matrix, columns = shocks
    T: int
    v: np.ndarray | None = None         # (n, k+1) trend loadings
    vol: VolatilityProcess = field(default_factory=VolatilityProcess)
    shock: int = 0                      # identified column of b
    burn_in: int = 500
    seed: int = 0
    innovation: str = "gaussian"        # gaussian | student_t8
    names: list[str] | None = None

    def __post_init__(self):
        self.a = np.atleast_3d(np.asarray(self.a, dtype=float))
        if self.a.ndim != 3 or self.a.shape[1] != self.a.shape[2]:
            raise ValueError("a must be a (p, n, n) stack")
        self.b = np.asarray(self.b, dtype=float)
        n = self.a.shape[1]
        if self.b.shape != (n, n):
            raise ValueError("b must be n x n")
        sv = np.linalg.svd(self.b, compute_uv=False)
        if sv[-1] <= 1e-12 * sv[0]:
            raise ValueError("mixing matrix b must have full rank")
        if self.v is not None:
            self.v = np.atleast_2d(np.asarray(self.v, dtype=float))
            if self.v.shape[0] != n:
                raise ValueError("v must have n rows")
        if self.vol.kind == "markov2" and self.vol.vol_multipliers.shape[1] != n:
            raise ValueError("vol_multipliers must have one column per shock")
        if not (0 <= self.shock < n):
            raise ValueError("shock index out of range")
        if self.innovation not in ("gaussian", "student_t8"):
            raise ValueError(f"unknown innovation {self.innovation!r}")
        rad = spectral_radius(self.a)
        if rad > 1.0 + ROOT_TOL:
            raise ExplosiveRoots(f"companion spectral radius {rad:.6f} > 1")

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def p(self) -> int:
        return self.a.shape[0]


@dataclass
class SimOutput:
    """Simulated panel plus the exact quantities the estimators target."""

    panel: Panel
    instrument: np.ndarray
    regimes: np.ndarray
    true_irf: IRFBundle
    true_theta: ThetaVector
    config: SimConfig


def companion_matrix(a: np.ndarray) -> np.ndarray:
    """Stack lag matrices into the (np x np) one-lag transition matrix."""
    a = np.atleast_3d(np.asarray(a, dtype=float))
    p, n = a.shape[0], a.shape[1]
    comp = np.zeros((n * p, n * p))
    comp[:n] = np.concatenate(list(a), axis=1)
    if p > 1:
        comp[n:, : n * (p - 1)] = np.eye(n * (p - 1))
    return comp


def spectral_radius(a: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(a)))))


def true_irf(a: np.ndarray, b: np.ndarray, horizon: int, shock: int = 0,
             shock_scale: float = 1.0) -> IRFBundle:
    """Exact impulse responses implied by lag matrices and a mixing matrix.

    ``psi`` is the response path to ``shock_scale`` units of the selected
    structural shock.
    """
    a = np.atleast_3d(np.asarray(a, dtype=float))
    b = np.asarray(b, dtype=float)
    c_full = forward_c(a, horizon)
    impact = b[:, shock] * shock_scale
    return IRFBundle(c_full=c_full, a_br=a.copy(), psi=c_full @ impact)


def population_theta(config: SimConfig, h1: int) -> ThetaVector:
    """Closed-form population values of the estimated parameter block."""
    n = config.n
    moments = config.vol.shock_second_moments(n)
    sigma = config.b @ np.diag(moments) @ config.b.T
    c = forward_c(config.a, h1)[1:]
    rho = config.vol.instrument_volatility_cov(n)
    gamma = np.zeros(n)
    for i in range(n):
        gamma += config.b[:, i] * config.b[0, i] * rho[i]
    return ThetaVector(sigma=sigma, c=c, gamma=gamma)


def simulate(config: SimConfig, truth_horizon: int = 24) -> SimOutput:
    """Generate one dataset. Identical (config, seed) gives identical bytes.

    The regime chain starts from its stationary law. When the companion
    roots are all strictly stable the level recursion is burnt in for
    ``burn_in`` periods; with roots at the unit circle the accumulating
    components instead start at zero in period 1.

    Draw order is fixed (regimes, shocks, instrument) so outputs do not
    depend on host parallelism.
    """
    rng = np.random.default_rng(config.seed)
    n, p, T = config.n, config.p, config.T
    stable = spectral_radius(config.a) < 1.0 - STABLE_TOL
    burn = config.burn_in if stable else 0
    total = burn + T

    if config.vol.kind == "markov2":
        pi = config.vol.stationary_regime_probs()
        q0, q1 = config.vol.stay_prob
        u = rng.random(total)
        regimes = np.zeros(total, dtype=np.int64)
        regimes[0] = 1 if u[0] < pi[1] else 0
        stay = np.array([q0, q1])
        for t in range(1, total):
            regimes[t] = regimes[t - 1] if u[t] < stay[regimes[t - 1]] \
                else 1 - regimes[t - 1]
        scales = config.vol.vol_multipliers[regimes]
    else:
        regimes = np.zeros(total, dtype=np.int64)
        scales = np.ones((total, n))

    if config.innovation == "gaussian":
        xi = rng.standard_normal((total, n))
    else:
        # Student t with 8 df, rescaled to unit variance.
        xi = rng.standard_t(8, size=(total, n)) * np.sqrt(6.0 / 8.0)
    eta = (xi * scales) @ config.b.T

    times = np.arange(1 - burn, T + 1, dtype=float)
    if config.v is not None:
        k = config.v.shape[1] - 1
        drift = trend_columns(times, k) @ config.v.T
        eta = eta + drift

    y = np.zeros((total + p, n))
    for t in range(total):
        acc = eta[t]
        for ell in range(p):
            acc = acc + config.a[ell] @ y[t + p - 1 - ell]
        y[t + p] = acc
    values = y[p + burn:]

    sample_regimes = regimes[burn:]
    if config.vol.kind == "markov2":
        if config.vol.instrument_rule == "regime_indicator":
            z = sample_regimes.astype(float)
        else:
            probs = np.asarray(config.vol.count_probs)[sample_regimes]
            z = rng.binomial(4, probs).astype(float)
    else:
        z = (rng.random(T) < 0.5).astype(float)

    moments = config.vol.shock_second_moments(n)
    bundle = true_irf(config.a, config.b, truth_horizon, shock=config.shock,
                      shock_scale=float(np.sqrt(moments[config.shock])))
    theta = population_theta(config, truth_horizon)
    panel = Panel(values=values, names=list(config.names or []))
    return SimOutput(panel=panel, instrument=z, regimes=sample_regimes,
                     true_irf=bundle, true_theta=theta, config=config)


def replication_seed(seed: int, rep: int) -> np.random.SeedSequence:
    """Derive an independent, order-free stream key for replication ``rep``."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(rep,))


# ---------------------------------------------------------------------------
# Ready-made configurations used by the CLI presets and the test suite.

def static_mixing_config(T: int, seed: int = 0, stay: float = 0.5) -> SimConfig:
    """Two variables, no dynamics, triangular mixing, two-state shock-1
    volatility with multipliers (1, 2) and the regime itself observed.

    With ``stay=0.5`` the regime is i.i.d. with P(high) = 1/2, giving
    population gamma (0.75, 0.375) and one-standard-deviation impact
    sqrt(2.5) * (1, 0.5).
    """
    vol = VolatilityProcess(
        kind="markov2",
        stay_prob=(stay, stay),
        vol_multipliers=np.array([[1.0, 1.0], [2.0, 1.0]]),
        instrument_rule="regime_indicator",
    )
    return SimConfig(
        a=np.zeros((1, 2, 2)),
        b=np.array([[1.0, 0.0], [0.5, 1.0]]),
        T=T,
        vol=vol,
        seed=seed,
        names=["rate", "output"],
    )


def switching_var4_config(T: int, seed: int = 0,
                          factor: float = 4.0) -> SimConfig:
    """Four-variable, four-lag stable system; shock 1's standard deviation
    is multiplied by ``factor`` in the high regime (stay probability 0.7
    per regime) and the regime indicator is observed. Dynamics are kept
    moderate (companion spectral radius about 0.5) so short samples carry
    little estimation bias relative to their sampling noise.
    """
    a1 = np.array([
        [0.225, 0.030, 0.000, 0.020],
        [0.040, 0.200, 0.025, 0.000],
        [0.000, 0.040, 0.175, 0.030],
        [0.025, 0.000, 0.030, 0.225],
    ])
    a2 = np.array([
        [0.040, 0.000, 0.015, 0.000],
        [0.000, 0.030, 0.000, 0.015],
        [0.015, 0.000, 0.025, 0.000],
        [0.000, 0.015, 0.000, 0.030],
    ])
    a3 = 0.3 * a2
    a4 = np.diag([0.010, 0.0075, 0.0075, 0.010])
    # Non-identified shocks carry most of the innovation variance; the
    # identified column stays modest so its normalization noise is well
    # inside the bootstrap's reach at short samples.
    b = np.array([
        [0.80, 0.00, 0.00, 0.00],
        [0.30, 2.10, 0.00, 0.00],
        [-0.20, 0.75, 1.80, 0.00],
        [0.15, -0.30, 0.60, 1.50],
    ])
    vol = VolatilityProcess(
        kind="markov2",
        stay_prob=(0.7, 0.7),
        vol_multipliers=np.vstack([np.ones(4),
                                   np.array([factor, 1.0, 1.0, 1.0])]),
        instrument_rule="regime_indicator",
    )
    return SimConfig(a=np.stack([a1, a2, a3, a4]), b=b, T=T, vol=vol,
                     seed=seed, names=["rate", "output", "prices", "credit"])


PRESETS = {
    "static2": static_mixing_config,
    "var4_switching": switching_var4_config,
}
