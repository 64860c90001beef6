"""Structural objects: impact vector, shock responses, variance shares,
and the recursive-ordering comparison impact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCovariance, ZeroGamma
from .estimate import _solve_psd

ZERO_GAMMA_TOL = 1e-14


@dataclass
class ImpactVector:
    """Contemporaneous responses to a one-standard-deviation shock.

    ``normalization_check`` is b' sigma^{-1} b, equal to 1 by construction.
    """

    b: np.ndarray
    normalization_check: float


def impact_vector(
    gamma: np.ndarray,
    sigma: np.ndarray,
    first_var: int = 0,
    negate: bool = False,
) -> ImpactVector:
    """Scale the instrument covariance vector into a unit-shock impact.

    b = gamma / sqrt(gamma' sigma^{-1} gamma), with the sign chosen so the
    ``first_var`` entry is nonnegative (``negate`` flips it).

    Raises
    ------
    ZeroGamma
        If the covariance vector is numerically zero.
    SingularCovariance
        If sigma cannot be inverted.
    """
    gamma = np.asarray(gamma, dtype=float).ravel()
    if np.linalg.norm(gamma) < ZERO_GAMMA_TOL:
        raise ZeroGamma("instrument covariance vector is numerically zero")
    siginv_g = _solve_psd(np.asarray(sigma, dtype=float), gamma, "covariance")
    quad = float(gamma @ siginv_g)
    if quad <= 0.0:
        raise SingularCovariance("gamma' sigma^{-1} gamma is not positive")
    b = gamma / np.sqrt(quad)
    if b[first_var] < 0.0:
        b = -b
    if negate:
        b = -b
    check = float(b @ _solve_psd(np.asarray(sigma, dtype=float), b, "covariance"))
    return ImpactVector(b=b, normalization_check=check)


def structural_irf(c_full: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Shock responses psi_h = C_h b for every horizon in the stack."""
    c_full = np.asarray(c_full, dtype=float)
    return c_full @ np.asarray(b, dtype=float).ravel()


@dataclass
class FEVDTable:
    """Forecast-error variance shares of the identified shock.

    ``shares[r, i]`` is the share for variable r at ``horizons[i]`` steps.
    """

    shares: np.ndarray          # n x len(horizons)
    horizons: list[int]


def fevd(
    psi: np.ndarray,
    c_full: np.ndarray,
    sigma: np.ndarray,
    horizons: int | list[int],
    literal_denominator: bool = False,
) -> FEVDTable:
    """Share of each variable's H-step forecast-error variance due to the
    identified shock.

    share_r(H) = sum_{h<H} (psi_{h,r})^2 / sum_{h<H} [C_h sigma C_h']_{rr}.

    ``literal_denominator=True`` switches to the alternative denominator
    sum_{h<=H} e_r' C_h sigma C_h' 1 (row sums against a ones vector),
    kept only for comparison; it is not a variance decomposition.
    """
    psi = np.asarray(psi, dtype=float)
    c_full = np.asarray(c_full, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    hs = [horizons] if np.isscalar(horizons) else list(horizons)
    if any(h < 1 for h in hs):
        raise ValueError("FEVD horizons must be >= 1")
    hmax = max(hs)
    if c_full.shape[0] < hmax + 1:
        raise ValueError("c_full is too short for the requested horizons")
    var_terms = np.einsum("hij,jk,hlk->hil", c_full[: hmax + 1], sigma,
                          c_full[: hmax + 1])
    shares = np.empty((n, len(hs)))
    ones = np.ones(n)
    for i, H in enumerate(hs):
        num = np.sum(psi[:H] ** 2, axis=0)
        if literal_denominator:
            den = np.einsum("hil,l->i", var_terms[: H + 1], ones)
        else:
            den = np.einsum("hii->i", var_terms[:H])
        shares[:, i] = num / den
    return FEVDTable(shares=shares, horizons=hs)


def cholesky_impact(
    sigma: np.ndarray,
    shock_index: int = 0,
    ordering: list[int] | None = None,
) -> ImpactVector:
    """Impact of one shock under a recursive (triangular) scheme.

    The covariance is permuted to ``ordering``, factored lower
    triangularly, and the column belonging to ``shock_index`` is mapped
    back to the original variable order.
    """
    sigma = np.asarray(sigma, dtype=float)
    n = sigma.shape[0]
    order = list(range(n)) if ordering is None else list(ordering)
    if sorted(order) != list(range(n)):
        raise ValueError("ordering must be a permutation of 0..n-1")
    pos = order.index(shock_index)
    perm = np.asarray(order)
    sig_ord = sigma[np.ix_(perm, perm)]
    try:
        lower = np.linalg.cholesky(sig_ord)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(f"covariance is not positive definite: {exc}")
    b = np.zeros(n)
    b[perm] = lower[:, pos]
    check = float(b @ _solve_psd(sigma, b, "covariance"))
    return ImpactVector(b=b, normalization_check=check)
