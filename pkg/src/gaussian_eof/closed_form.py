"""Closed-form entanglement of formation for symmetric two-mode Gaussian states.

All entropies are in bits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AsymmetricStateError, InputError, InvalidCovarianceError
from .symplectic import (
    DEFAULT_TOL,
    StandardFormParams,
    reduce_to_standard_form,
    validate_cm,
)

LN2 = math.log(2.0)


@dataclass(frozen=True)
class EntanglementReport:
    valid: bool
    symmetric: bool
    separable: bool
    delta: float
    r_delta: float
    eof_bits: float
    standard_form: StandardFormParams

    def as_record(self):
        sf = self.standard_form
        return {
            "n": sf.n,
            "m": sf.m,
            "kx": sf.kx,
            "kp": sf.kp,
            "valid": self.valid,
            "symmetric": self.symmetric,
            "separable": self.separable,
            "delta": self.delta,
            "r_delta": self.r_delta,
            "eof_bits": self.eof_bits,
        }


def _check_delta(delta):
    delta = float(delta)
    if not math.isfinite(delta) or delta <= 0.0 or delta > 1.0:
        raise InputError(f"EPR uncertainty must lie in (0, 1], got {delta}")
    return delta


def _check_r(r):
    r = float(r)
    if not math.isfinite(r) or r < 0.0:
        raise InputError(f"squeezing parameter must be >= 0, got {r}")
    return r


def _bose_entropy(s):
    """``(1+s) log2(1+s) - s log2(s)`` evaluated without cancellation.

    This is the entropy of a thermal distribution with mean occupation ``s``.
    """
    if s <= 0.0:
        return 0.0
    if s < 1.0:
        return ((1.0 + s) * math.log1p(s) - s * math.log(s)) / LN2
    return (math.log(s) + (1.0 + s) * math.log1p(1.0 / s)) / LN2


def r_of_delta(delta):
    """Squeezing of the two-mode squeezed state with EPR uncertainty ``delta``."""
    return -0.5 * math.log(_check_delta(delta))


def delta_of_tmss(r):
    """EPR uncertainty ``exp(-2r)`` of the two-mode squeezed state."""
    return math.exp(-2.0 * _check_r(r))


def entropy_of_tmss(r):
    """Entropy of entanglement of the two-mode squeezed state, in bits.

    ``cosh^2 log cosh^2 - sinh^2 log sinh^2``, rearranged so it stays
    accurate for large ``r`` and is exactly 0 at ``r = 0``.
    """
    r = _check_r(r)
    if r == 0.0:
        return 0.0
    return _bose_entropy(math.sinh(r) ** 2)


def c_plus_minus(delta):
    """``c± = (delta**-1/2 ± delta**1/2)**2 / 4``.

    Computed as ``(1 ± delta)**2 / (4 delta)`` so that ``c+ - c- == 1``
    up to rounding.
    """
    delta = _check_delta(delta)
    return (1.0 + delta) ** 2 / (4.0 * delta), (1.0 - delta) ** 2 / (4.0 * delta)


def f_of_delta(delta):
    """EoF as a function of the EPR uncertainty: ``c+ log2 c+ - c- log2 c-``.

    Convex and strictly decreasing on (0, 1] with ``f(1) == 0``.
    """
    _, c_minus = c_plus_minus(delta)
    return _bose_entropy(c_minus)


def epr_uncertainty_of_standard_form(params: StandardFormParams, tol=DEFAULT_TOL):
    """``min(1, sqrt((n - kx)(n - kp)))`` for a symmetric standard form."""
    if not params.is_symmetric(tol):
        raise AsymmetricStateError(f"state is not symmetric (n = {params.n}, m = {params.m})")
    prod = (params.n - params.kx) * (params.n - params.kp)
    if prod >= 1.0:
        return 1.0
    return math.sqrt(max(prod, 0.0))


def is_entangled(params: StandardFormParams, tol=DEFAULT_TOL):
    return (params.n - params.kx) * (params.n - params.kp) < 1.0 - tol


def eof_symmetric(gamma, tol=DEFAULT_TOL, symmetry_tol=None) -> EntanglementReport:
    """Entanglement of formation of a symmetric two-mode Gaussian state.

    Parameters
    ----------
    gamma : array_like, shape (4, 4)
        Covariance matrix in ``(X_A, P_A, X_B, P_B)`` ordering, vacuum = 1.
    tol : float
        Tolerance for validity and separability tests.
    symmetry_tol : float, optional
        Relative tolerance on ``|m - n|``; defaults to ``tol``.

    Raises
    ------
    InvalidCovarianceError
        If ``gamma`` violates the uncertainty relation.
    AsymmetricStateError
        If the local determinants differ; the formula does not apply.
    """
    report = validate_cm(gamma, tol)
    if not report.valid:
        raise InvalidCovarianceError(
            f"not a covariance matrix (min eig of gamma + i*Omega = {report.min_eigenvalue:.3e})"
        )
    params = reduce_to_standard_form(gamma, tol)
    sym_tol = tol if symmetry_tol is None else symmetry_tol
    if not params.is_symmetric(sym_tol):
        raise AsymmetricStateError(
            f"asymmetric state: n = {params.n:.12g}, m = {params.m:.12g}; "
            "closed form covers m == n only"
        )
    delta = epr_uncertainty_of_standard_form(params, sym_tol)
    separable = not is_entangled(params, tol)
    eof = 0.0 if separable else f_of_delta(delta)
    return EntanglementReport(
        valid=True,
        symmetric=True,
        separable=separable,
        delta=delta,
        r_delta=r_of_delta(delta),
        eof_bits=eof,
        standard_form=params,
    )
