"""Covariance-matrix algebra for two bosonic modes.

Quadratures are ordered ``R = (X_A, P_A, X_B, P_B)`` with ``[X, P] = i`` and
``a = (X + iP)/sqrt(2)``.  The covariance matrix is

    gamma_ij = <R_i R_j + R_j R_i> - 2 <R_i><R_j>,

so the vacuum has ``gamma = 1``.  The standard form used throughout is

    [[n, 0, kx, 0], [0, n, 0, -kp], [kx, 0, m, 0], [0, -kp, 0, m]].
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundaryStateError, ConditioningError, InputError, InvalidCovarianceError

DEFAULT_TOL = 1e-9

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA = np.block([[_J, np.zeros((2, 2))], [np.zeros((2, 2)), _J]])
OMEGA.setflags(write=False)

X_IDX = (0, 2)
P_IDX = (1, 3)


@dataclass(frozen=True)
class StandardFormParams:
    """Local-unitary invariants ``(n, m, kx, kp)`` of a two-mode CM.

    ``kx >= |kp|``.  ``kp`` is negative only for states whose correlation
    block has positive determinant; those are always separable.
    """

    n: float
    m: float
    kx: float
    kp: float

    @classmethod
    def symmetric(cls, n, kx, kp):
        return cls(float(n), float(n), float(kx), float(kp))

    def is_symmetric(self, tol=DEFAULT_TOL):
        return abs(self.m - self.n) <= tol * max(1.0, abs(self.n))

    def to_matrix(self):
        n, m, kx, kp = self.n, self.m, self.kx, self.kp
        return np.array(
            [
                [n, 0.0, kx, 0.0],
                [0.0, n, 0.0, -kp],
                [kx, 0.0, m, 0.0],
                [0.0, -kp, 0.0, m],
            ]
        )

    def invariants(self):
        """``(det A, det B, det C, det gamma)`` evaluated in closed form."""
        nm = self.n * self.m
        return (
            self.n**2,
            self.m**2,
            -self.kx * self.kp,
            (nm - self.kx**2) * (nm - self.kp**2),
        )


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    symmetric: bool
    min_eigenvalue: float
    asymmetry: float

    def __bool__(self):
        return self.valid


@dataclass(frozen=True)
class BalancedParams:
    """Symmetric CM after the local X/P balancing squeeze.

    The X-sector block on ``(X_A, X_B)`` is ``[[nx, kx], [kx, nx]]`` and the
    P-sector block on ``(P_A, P_B)`` is ``[[np_, -kp], [-kp, np_]]``.
    """

    nx: float
    np_: float
    kx: float
    kp: float
    scale: float

    def to_matrix(self):
        return np.array(
            [
                [self.nx, 0.0, self.kx, 0.0],
                [0.0, self.np_, 0.0, -self.kp],
                [self.kx, 0.0, self.nx, 0.0],
                [0.0, -self.kp, 0.0, self.np_],
            ]
        )

    @property
    def x_gap(self):
        return self.nx - self.kx

    @property
    def p_gap(self):
        return self.np_ - self.kp


def as_cm(gamma) -> np.ndarray:
    """Coerce to a finite 4x4 float array or raise :class:`InputError`."""
    arr = np.asarray(gamma, dtype=float)
    if arr.shape != (4, 4):
        raise InputError(f"covariance matrix must be 4x4, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("covariance matrix has non-finite entries")
    return arr


def blocks(gamma):
    """Split into the 2x2 blocks ``(A, B, C)`` with ``gamma = [[A, C], [C^T, B]]``."""
    g = as_cm(gamma)
    return g[:2, :2], g[2:, 2:], g[:2, 2:]


def local_invariants(gamma):
    """``(det A, det B, det C, det gamma)`` of an arbitrary 4x4 CM."""
    a, b, c = blocks(gamma)
    return (
        float(np.linalg.det(a)),
        float(np.linalg.det(b)),
        float(np.linalg.det(c)),
        float(np.linalg.det(as_cm(gamma))),
    )


def validate_cm(gamma, tol=DEFAULT_TOL) -> ValidityReport:
    """Check symmetry and the uncertainty relation ``gamma + i*Omega >= 0``.

    Returns a :class:`ValidityReport`; ``valid`` is true iff the matrix is
    symmetric within ``tol`` and the smallest eigenvalue of the Hermitian
    matrix ``gamma + i*Omega`` is at least ``-tol``.
    """
    g = as_cm(gamma)
    asym = float(np.max(np.abs(g - g.T)))
    symmetric = asym <= tol
    sym = 0.5 * (g + g.T)
    min_eig = float(np.linalg.eigvalsh(sym + 1j * OMEGA)[0])
    return ValidityReport(symmetric and min_eig >= -tol, symmetric, min_eig, asym)


def symplectic_eigenvalues(gamma):
    """Sorted symplectic eigenvalues (moduli of the eigenvalues of ``i*Omega*gamma``)."""
    g = as_cm(gamma)
    ev = np.abs(np.linalg.eigvals(1j * OMEGA @ g))
    return np.sort(ev)[::2]


def standard_form_is_valid(params: StandardFormParams, tol=DEFAULT_TOL):
    """Scalar validity test for a symmetric standard form.

    The two symplectic eigenvalues are ``sqrt((n - kx)(n + kp))`` and
    ``sqrt((n + kx)(n - kp))``; the state is physical iff both are >= 1.
    For ``kx == kp`` this is ``n**2 - kx**2 >= 1``.
    """
    n, kx, kp = params.n, params.kx, params.kp
    return (n - kx) * (n + kp) >= 1 - tol and (n + kx) * (n - kp) >= 1 - tol


def _normalizer(block):
    """Single-mode symplectic ``S`` with ``S block S^T = sqrt(det block) * 1``."""
    w, v = np.linalg.eigh(0.5 * (block + block.T))
    if w[0] <= 0:
        raise ConditioningError("local block is not positive definite")
    inv_sqrt = (v / np.sqrt(w)) @ v.T
    return np.sqrt(np.sqrt(w[0] * w[1])) * inv_sqrt


def standard_form_from_invariants(det_a, det_b, det_c, det_g, tol=DEFAULT_TOL):
    """Quadratic solve for ``(n, m, kx, kp)`` from the four local invariants.

    With ``s = kx**2 + kp**2`` and ``p = kx*kp = -det C``,
    ``det gamma = (nm)**2 - nm*s + p**2`` fixes ``s``; then
    ``kx ± kp = sqrt(s ± 2p)``.  Loses about half the digits when
    ``kx ~ kp``; :func:`reduce_to_standard_form` avoids that.
    """
    n, m = np.sqrt(det_a), np.sqrt(det_b)
    nm = n * m
    p = -det_c
    s = (nm**2 + p**2 - det_g) / nm
    plus, minus = s + 2 * p, s - 2 * p
    for val in (plus, minus):
        if val < -100 * tol * max(1.0, nm):
            raise ConditioningError(f"inconsistent local invariants (s ± 2p = {val:.3e})")
    root_plus = np.sqrt(max(plus, 0.0))
    root_minus = np.sqrt(max(minus, 0.0))
    return StandardFormParams(
        float(n), float(m), float(0.5 * (root_plus + root_minus)), float(0.5 * (root_plus - root_minus))
    )


def reduce_to_standard_form(gamma, tol=DEFAULT_TOL) -> StandardFormParams:
    """Local-unitary invariants ``(n, m, kx, kp)`` of a two-mode CM.

    Each diagonal block is mapped to a multiple of the identity by a local
    symplectic; the remaining freedom is local rotations, so ``kx`` and
    ``|kp|`` are the singular values of the transformed off-diagonal block
    and the sign of ``kp`` is that of ``-det C``.  The result is checked
    against all four local invariants.
    """
    g = as_cm(gamma)
    g = 0.5 * (g + g.T)
    a, b, c = g[:2, :2], g[2:, 2:], g[:2, 2:]
    sa, sb = _normalizer(a), _normalizer(b)
    c_norm = sa @ c @ sb.T
    sv = np.linalg.svd(c_norm, compute_uv=False)
    det_c = np.linalg.det(c_norm)
    kp = -np.sign(det_c) * sv[1] if sv[1] > 0 else 0.0
    params = StandardFormParams(
        float(np.sqrt(np.linalg.det(a))), float(np.sqrt(np.linalg.det(b))), float(sv[0]), float(kp)
    )

    expected = np.array(local_invariants(g))
    got = np.array(params.invariants())
    err = np.max(np.abs(got - expected) / np.maximum(1.0, np.abs(expected)))
    if err > 1e3 * tol:
        raise ConditioningError(f"standard form fails to reproduce invariants (rel. err {err:.3e})")
    return params


def apply_balancing_squeezing(params: StandardFormParams, tol=DEFAULT_TOL) -> BalancedParams:
    """Squeeze X up and P down locally so both sectors have the same gap.

    With ``s = ((n - kp)/(n - kx))**(1/4)`` the X entries scale by ``s**2``
    and the P entries by ``s**-2``.  Afterwards
    ``nx - kx' == np - kp' == sqrt((n - kx)(n - kp))``.
    """
    if not params.is_symmetric(tol):
        raise InputError("balancing squeeze is defined for symmetric states only")
    n, kx, kp = params.n, params.kx, params.kp
    if n - kx <= tol * max(1.0, n):
        raise BoundaryStateError(f"n - kx = {n - kx:.3e}: balancing squeeze is singular")
    if n - kp <= 0:
        raise InputError("n - kp must be positive")
    s = ((n - kp) / (n - kx)) ** 0.25
    s2 = s * s
    return BalancedParams(nx=n * s2, np_=n / s2, kx=kx * s2, kp=kp / s2, scale=s)


def psd_order(gamma_a, gamma_b, tol=DEFAULT_TOL) -> bool:
    """True iff ``gamma_a - gamma_b`` is positive semidefinite within ``tol``."""
    diff = as_cm(gamma_a) - as_cm(gamma_b)
    return bool(np.linalg.eigvalsh(0.5 * (diff + diff.T))[0] >= -tol)


def two_mode_squeezer(r):
    """Heisenberg-picture symplectic matrix of two-mode squeezing."""
    c, s = np.cosh(r), np.sinh(r)
    z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])


def tmss_cm(r) -> np.ndarray:
    """CM of the two-mode squeezed vacuum with squeezing ``r >= 0``."""
    if not np.isfinite(r) or r < 0:
        raise InputError(f"squeezing parameter must be >= 0, got {r}")
    return StandardFormParams.symmetric(np.cosh(2 * r), np.sinh(2 * r), np.sinh(2 * r)).to_matrix()


def is_symplectic(S, tol=1e-10):
    S = np.asarray(S, dtype=float)
    return bool(np.max(np.abs(S @ OMEGA @ S.T - OMEGA)) <= tol)


def single_mode_symplectic(theta, squeeze, phi):
    """Rotation-squeeze-rotation; every 2x2 symplectic has this form."""

    def rot(a):
        return np.array([[np.cos(a), np.sin(a)], [-np.sin(a), np.cos(a)]])

    return rot(theta) @ np.diag([np.exp(squeeze), np.exp(-squeeze)]) @ rot(phi)


def local_symplectic(sa, sb):
    return np.block([[sa, np.zeros((2, 2))], [np.zeros((2, 2)), sb]])


def random_local_symplectic(rng, max_squeeze=1.0):
    """Random ``S_A (+) S_B`` for property tests."""
    mats = [
        single_mode_symplectic(
            rng.uniform(0, 2 * np.pi), rng.uniform(-max_squeeze, max_squeeze), rng.uniform(0, 2 * np.pi)
        )
        for _ in range(2)
    ]
    return local_symplectic(*mats)


def conjugate(S, gamma):
    """Transform a CM by ``gamma -> S gamma S^T``."""
    S = np.asarray(S, dtype=float)
    return S @ as_cm(gamma) @ S.T


def require_valid(gamma, tol=DEFAULT_TOL):
    report = validate_cm(gamma, tol)
    if not report.valid:
        raise InvalidCovarianceError(
            f"not a covariance matrix (min eig of gamma + i*Omega = {report.min_eigenvalue:.3e}, "
            f"asymmetry = {report.asymmetry:.3e})"
        )
    return report
