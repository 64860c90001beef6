"""Exception and warning types shared across the package."""


class LPBandError(Exception):
    """Base class for all lpband errors."""


class InsufficientSample(LPBandError):
    """Not enough usable rows for the requested lag/trend/horizon layout."""


class RankDeficient(LPBandError):
    """Regressor matrix is numerically rank deficient."""


class SingularCovariance(LPBandError):
    """A covariance or Gram matrix cannot be inverted reliably."""


class ExplosiveRoots(LPBandError):
    """Companion matrix has a root outside the unit circle."""


class BandwidthTooLarge(LPBandError):
    """Kernel bandwidth is not smaller than the score sample."""


class ZeroGamma(LPBandError):
    """Instrument covariance vector is numerically zero; no impact direction."""


class ZeroSpread(LPBandError):
    """A bootstrap spread is zero where a positive scale is required."""


class IngestError(LPBandError):
    """CSV input is malformed (ragged rows, non-numeric cells, missing columns)."""


class ConfigError(LPBandError):
    """Run configuration failed validation."""


class WeakInstrumentWarning(UserWarning):
    """Instrument carries no (or almost no) variance signal."""


class DegenerateWeightWarning(UserWarning):
    """A minimum-distance weight was capped because its variance was ~0."""
