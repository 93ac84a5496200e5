"""Brute-force checks in truncated Fock space.

States are coefficient grids ``psi[N, M]`` over ``|N>_A |M>_B``.  Moments
are evaluated after padding the grid by one Fock level, so a single
quadrature acting on the state never touches the truncation edge and all
first and second moments are exact for the truncated vector.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from . import symplectic
from .closed_form import epr_uncertainty_of_standard_form, f_of_delta, is_entangled, r_of_delta
from .errors import InputError, TruncationError, TruncationWarning
from .schmidt import check_schmidt, entropy_e

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class LadderMatrices:
    a: np.ndarray
    a_dagger: np.ndarray

    @property
    def x(self):
        return (self.a + self.a_dagger) / SQRT2

    @property
    def p(self):
        return (self.a - self.a_dagger) / (1j * SQRT2)


def ladder(d) -> LadderMatrices:
    """Truncated annihilation operator with ``a|N> = sqrt(N)|N-1>``."""
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1).astype(complex)
    return LadderMatrices(a, a.conj().T)


@dataclass(frozen=True)
class TruncatedPureState:
    coeff: np.ndarray
    discarded_weight: float = 0.0

    def __post_init__(self):
        c = np.asarray(self.coeff, dtype=complex)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise InputError(f"coefficient grid must be square, got shape {c.shape}")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise InputError(f"state is not normalised (norm^2 = {norm:.12g})")
        object.__setattr__(self, "coeff", c)

    @property
    def d(self):
        return self.coeff.shape[0]

    @classmethod
    def normalised(cls, grid, discarded_weight=0.0):
        grid = np.asarray(grid, dtype=complex)
        return cls(grid / np.linalg.norm(grid), discarded_weight)


def tmss_state(r, d, warn_threshold=1e-10) -> TruncatedPureState:
    """Diagonal grid ``tanh(r)**N / cosh(r)``, renormalised over ``N < d``."""
    if d < 2:
        raise InputError("dimension must be >= 2")
    if r < 0:
        raise InputError("squeezing parameter must be >= 0")
    t = math.tanh(r)
    amps = t ** np.arange(d) / math.cosh(r)
    discarded = max(0.0, 1.0 - float(np.sum(amps**2)))
    if r > 0:
        # geometric tail, exact and free of cancellation
        discarded = t ** (2 * d)
    if discarded > warn_threshold:
        warnings.warn(
            f"two-mode squeezed state truncated at d = {d} discards weight {discarded:.3e}",
            TruncationWarning,
            stacklevel=2,
        )
    return TruncatedPureState.normalised(np.diag(amps), discarded)


def fock_aligned_state(c) -> TruncatedPureState:
    """State with Schmidt vectors ``|N>_A |N>_B`` in order."""
    c = check_schmidt(c)
    return TruncatedPureState.normalised(np.diag(c.astype(complex)))


def _pad(grid, extra=1):
    pad = [(0, 0)] * (grid.ndim - 2) + [(0, extra), (0, extra)]
    return np.pad(grid, pad)


def _lower(grid, axis):
    """Apply the annihilation operator along ``axis`` (-2 for A, -1 for B)."""
    d = grid.shape[axis]
    out = np.zeros_like(grid)
    root = np.sqrt(np.arange(1, d, dtype=float))
    if axis == -2:
        out[..., :-1, :] = root[:, None] * grid[..., 1:, :]
    else:
        out[..., :, :-1] = root[None, :] * grid[..., :, 1:]
    return out


def _raise(grid, axis):
    d = grid.shape[axis]
    out = np.zeros_like(grid)
    root = np.sqrt(np.arange(1, d, dtype=float))
    if axis == -2:
        out[..., 1:, :] = root[:, None] * grid[..., :-1, :]
    else:
        out[..., :, 1:] = root[None, :] * grid[..., :, :-1]
    return out


def _quadrature_images(grid):
    """``R_i psi`` for ``R = (X_A, P_A, X_B, P_B)`` on a padded grid stack."""
    images = []
    for axis in (-2, -1):
        lo, hi = _lower(grid, axis), _raise(grid, axis)
        images += [(lo + hi) / SQRT2, (lo - hi) / (1j * SQRT2)]
    return images


def quadrature_moments(coeff):
    """First moments and covariance matrix of a pure-state grid (or a stack of grids).

    Returns ``(mean, gamma)`` with shapes ``(..., 4)`` and ``(..., 4, 4)``.
    """
    grid = _pad(np.asarray(coeff, dtype=complex))
    norm = np.sum(np.abs(grid) ** 2, axis=(-2, -1))
    size = grid.shape[-1] ** 2
    vecs = np.stack(_quadrature_images(grid), axis=-3).reshape(grid.shape[:-2] + (4, size))
    flat = grid.reshape(grid.shape[:-2] + (size, 1))
    mean = (vecs @ flat.conj())[..., 0].real
    gram = (vecs.conj() @ np.swapaxes(vecs, -1, -2)).real
    mean = mean / norm[..., None]
    second = 2.0 * gram / norm[..., None, None]
    gamma = second - 2.0 * mean[..., :, None] * mean[..., None, :]
    return mean, gamma


def edge_occupancy(psi: TruncatedPureState, levels=2):
    """Probability in the top ``levels`` Fock levels of either mode."""
    prob = np.abs(psi.coeff) ** 2
    return float(prob[-levels:, :].sum() + prob[:, -levels:].sum() - prob[-levels:, -levels:].sum())


def epr_uncertainty_state(psi: TruncatedPureState, max_edge_occupancy=None):
    """``min(1, [Var(X_A - X_B) + Var(P_A + P_B)] / 2)`` of a truncated state.

    The variances are exact for the truncated vector.  Pass
    ``max_edge_occupancy`` to reject states whose weight near the cutoff
    suggests the truncation itself is too coarse.
    """
    if max_edge_occupancy is not None:
        occ = edge_occupancy(psi)
        if occ > max_edge_occupancy:
            raise TruncationError(f"edge occupancy {occ:.3e} exceeds {max_edge_occupancy:.3e}")
    grid = _pad(psi.coeff)
    xa, pa, xb, pb = _quadrature_images(grid)

    def variance(v):
        mean = np.vdot(grid, v).real
        return float(np.vdot(v, v).real - mean * mean)

    value = 0.5 * (variance(xa - xb) + variance(pa + pb))
    return min(1.0, value)


def schmidt_coefficients(psi: TruncatedPureState):
    """Singular values of the grid, nonincreasing."""
    return np.linalg.svd(psi.coeff, compute_uv=False)


def entropy_of_state(psi: TruncatedPureState):
    """Entropy of entanglement in bits, from the singular values of the grid."""
    c = schmidt_coefficients(psi)
    return entropy_e(c / np.linalg.norm(c))


def haar_unitary(rng, d):
    """Haar-random unitary from a QR factorisation with phase correction."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / SQRT2
    q, r = np.linalg.qr(z)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_state(seed, d, schmidt_spec=None) -> TruncatedPureState:
    """Seeded random state, optionally with prescribed Schmidt coefficients.

    With ``schmidt_spec`` the state is ``sum_N c_N |u_N>|v_N>`` where the
    bases are the columns of independent Haar unitaries.
    """
    if d < 2:
        raise InputError("dimension must be >= 2")
    rng = np.random.default_rng(seed)
    if schmidt_spec is None:
        grid = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return TruncatedPureState.normalised(grid)
    c = check_schmidt(schmidt_spec)
    if c.size > d:
        raise InputError(f"Schmidt spec of length {c.size} does not fit in dimension {d}")
    c = np.concatenate((c, np.zeros(d - c.size)))
    u = haar_unitary(rng, d)
    v = haar_unitary(rng, d)
    return TruncatedPureState.normalised((u * c) @ v.T)


def near_aligned_state(seed, d, schmidt_spec, strength=0.2) -> TruncatedPureState:
    """Schmidt vectors close to the ordered Fock states.

    Each basis is ``exp(i * strength * H)`` applied to the Fock basis with
    ``H`` a seeded random Hermitian matrix; ``strength = 0`` gives the
    aligned state.
    """
    rng = np.random.default_rng(seed)
    c = check_schmidt(schmidt_spec)
    if c.size > d:
        raise InputError(f"Schmidt spec of length {c.size} does not fit in dimension {d}")
    c = np.concatenate((c, np.zeros(d - c.size)))
    bases = []
    for _ in range(2):
        h = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = 0.5 * (h + h.conj().T)
        bases.append(expm(1j * strength * h))
    u, v = bases
    return TruncatedPureState.normalised((u * c) @ v.T)


@dataclass(frozen=True)
class Prop1Check:
    entropy: float
    delta: float
    margin: float


def prop1_check(psi: TruncatedPureState, max_edge_occupancy=None) -> Prop1Check:
    """Entropy of ``psi`` minus the smallest entropy compatible with its EPR uncertainty."""
    e = entropy_of_state(psi)
    delta = epr_uncertainty_state(psi, max_edge_occupancy)
    return Prop1Check(e, delta, e - f_of_delta(delta))


# --------------------------------------------------------------------------
# displacements and the Gaussian mixture of displaced squeezed states


def weyl_generator(xi, d):
    """``i xi.R`` on two truncated modes, as a sparse ``d**2 x d**2`` matrix."""
    lad = ladder(d)
    eye = sparse.identity(d, format="csr")
    x, p = sparse.csr_matrix(lad.x), sparse.csr_matrix(lad.p)
    ops = [sparse.kron(x, eye), sparse.kron(p, eye), sparse.kron(eye, x), sparse.kron(eye, p)]
    return 1j * sum(float(c) * op for c, op in zip(xi, ops)).tocsr()


@functools.lru_cache(maxsize=8)
def _weyl_shift_map(d):
    vac = np.zeros(d * d, dtype=complex)
    vac[0] = 1.0
    cols = []
    for j in range(4):
        xi = np.zeros(4)
        xi[j] = 1.0
        state = expm_multiply(weyl_generator(xi, d), vac).reshape(d, d)
        cols.append(quadrature_moments(state)[0])
    shift = np.stack(cols, axis=1)
    shift.setflags(write=False)
    return shift


def weyl_shift_map(d=40):
    """Measure how ``W(xi) = exp(i xi.R)`` moves the quadrature means.

    Displaces the two-mode vacuum by each unit vector ``xi = e_j`` using a
    sparse matrix exponential and records ``<R>``; column ``j`` of the
    result is the mean shift produced by ``e_j``.
    """
    return _weyl_shift_map(int(d)).copy()


def alpha_from_xi(xi):
    """Coherent amplitudes ``(alpha_A, alpha_B)`` with ``W(xi) = D(alpha_A) (x) D(alpha_B)``.

    ``i(xi_1 X + xi_2 P) = alpha a^dag - alpha^* a`` with
    ``alpha = (-xi_2 + i xi_1)/sqrt(2)``.
    """
    xi = np.asarray(xi, dtype=float)
    return (-xi[..., 1] + 1j * xi[..., 0]) / SQRT2, (-xi[..., 3] + 1j * xi[..., 2]) / SQRT2


def displacement_matrices(alpha, d):
    """Exact ``d x d`` blocks of ``D(alpha)`` for an array of amplitudes.

    Column 0 is the coherent state; the rest follow from
    ``D|N+1> = (a^dag - alpha^*) D|N> / sqrt(N+1)``.  Entry ``m`` of each new
    column only uses entries ``<= m`` of the previous one, so the truncated
    block is exact.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    m = np.arange(d)
    out = np.empty(alpha.shape + (d, d), dtype=complex)
    log_fact = 0.5 * gammaln(m + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        powers = alpha[..., None] ** m
    col = np.exp(-0.5 * np.abs(alpha[..., None]) ** 2 - log_fact) * powers
    out[..., :, 0] = col
    root = np.sqrt(m.astype(float))
    conj = np.conj(alpha)[..., None]
    for n in range(d - 1):
        shifted = np.zeros_like(col)
        shifted[..., 1:] = root[1:] * col[..., :-1]
        col = (shifted - conj * col) / math.sqrt(n + 1)
        out[..., :, n + 1] = col
    return out


@dataclass
class D0Result:
    applicable: bool
    gamma: np.ndarray
    gamma_delta: np.ndarray | None = None
    r_delta: float | None = None
    shift_map: np.ndarray | None = None
    weight_cov: np.ndarray | None = None
    weight_form: np.ndarray | None = None
    mixture_cm: np.ndarray | None = None
    max_deviation: float | None = None
    mc_cm: np.ndarray | None = None
    mc_mean: np.ndarray | None = None
    mc_deviation: float | None = None
    mc_samples: int = 0
    reason: str = ""


def d0_moment_check(
    gamma,
    *,
    tol=symplectic.DEFAULT_TOL,
    shift_map=None,
    monte_carlo=False,
    samples=100_000,
    dim=25,
    seed=0,
    batch=2_000,
) -> D0Result:
    """Moments of the Gaussian mixture of displaced squeezed states reproducing ``gamma``.

    The mixture is ``int dxi p(xi) W(xi) |Psi(r_delta)><Psi(r_delta)| W(xi)^dag``
    with ``gamma_delta`` the CM of the squeezed state.  ``W(xi)`` shifts the
    means by ``L xi`` (``L`` measured by :func:`weyl_shift_map`, equal to
    ``Omega^T``), so a Gaussian weight of covariance ``S`` adds ``2 L S L^T``
    to the CM.  The weight reproducing ``gamma`` therefore has covariance
    ``S = L^T (gamma - gamma_delta) L / 2``, i.e.
    ``p(xi) ∝ exp(-xi^T Q xi / 4)`` with ``Q = 4 [L^T (gamma - gamma_delta) L]^+``
    on its support.  ``gamma`` must already be balanced.

    With ``monte_carlo=True`` the mixture CM is also estimated by sampling
    ``xi``, displacing the truncated squeezed state in Fock space at
    dimension ``dim`` and averaging the exact moments of each sample.
    """
    gamma = symplectic.as_cm(gamma)
    params = symplectic.reduce_to_standard_form(gamma, tol)
    if not is_entangled(params, tol):
        return D0Result(False, gamma, reason="state is separable")
    delta = epr_uncertainty_of_standard_form(params, tol)
    r_delta = r_of_delta(delta)
    gamma_delta = symplectic.tmss_cm(r_delta)
    if not symplectic.psd_order(gamma, gamma_delta, tol):
        return D0Result(
            False, gamma, gamma_delta, r_delta, reason="gamma - gamma_delta is not positive semidefinite"
        )

    L = weyl_shift_map() if shift_map is None else np.asarray(shift_map, dtype=float)
    excess = gamma - gamma_delta
    excess = 0.5 * (excess + excess.T)
    weight_cov = 0.5 * L.T @ excess @ L
    weight_form = 4.0 * np.linalg.pinv(L.T @ excess @ L, hermitian=True, rcond=1e-12)
    # moment algebra: displaced pure states keep gamma_delta, means spread by L xi
    mixture = gamma_delta + 2.0 * L @ weight_cov @ L.T
    result = D0Result(
        applicable=True,
        gamma=gamma,
        gamma_delta=gamma_delta,
        r_delta=r_delta,
        shift_map=L,
        weight_cov=weight_cov,
        weight_form=weight_form,
        mixture_cm=mixture,
        max_deviation=float(np.max(np.abs(mixture - gamma))),
    )
    if monte_carlo:
        mc_mean, mc_cm = _sample_mixture(r_delta, weight_cov, samples, dim, seed, batch)
        result.mc_cm = mc_cm
        result.mc_mean = mc_mean
        result.mc_deviation = float(np.max(np.abs(mc_cm - gamma)))
        result.mc_samples = samples
    return result


def _sample_mixture(r, weight_cov, samples, dim, seed, batch):
    rng = np.random.default_rng(seed)
    w, v = np.linalg.eigh(weight_cov)
    factor = v * np.sqrt(np.clip(w, 0.0, None))
    amps = np.diagonal(tmss_state(r, dim).coeff)
    mean_sum = np.zeros(4)
    second_sum = np.zeros((4, 4))
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        xi = rng.standard_normal((size, 4)) @ factor.T
        alpha_a, alpha_b = alpha_from_xi(xi)
        da = displacement_matrices(alpha_a, dim)
        db = displacement_matrices(alpha_b, dim)
        grids = (da * amps) @ np.swapaxes(db, -1, -2)
        mean, gamma = quadrature_moments(grids)
        mean_sum += mean.sum(axis=0)
        # per-sample symmetrised second moments
        second_sum += (gamma + 2.0 * mean[:, :, None] * mean[:, None, :]).sum(axis=0)
        done += size
    mean = mean_sum / samples
    cm = second_sum / samples - 2.0 * np.outer(mean, mean)
    return mean, cm
