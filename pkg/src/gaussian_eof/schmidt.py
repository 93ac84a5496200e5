"""Functionals on ordered Schmidt-coefficient sequences.

A sequence ``c`` is nonincreasing, nonnegative and unit-norm.  Two
functionals matter here: the entropy of entanglement ``e(c)`` and the
correlation functional

    delta(c) = 1 + 2 * sum_N N * (c_N**2 - c_N * c_{N-1}),

which equals the EPR uncertainty of the state whose Schmidt vectors are the
Fock states in order.  Geometric sequences minimise ``e`` at fixed ``delta``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.optimize import brentq, minimize, root

from .closed_form import f_of_delta
from .errors import ConvergenceWarning, InputError, RangeError

LN2 = math.log(2.0)


def check_schmidt(c, tol=1e-9):
    """Return ``c`` as a float array after checking it is an ordered unit vector."""
    c = np.asarray(c, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise InputError("Schmidt sequence must be a nonempty 1-d array")
    if not np.all(np.isfinite(c)):
        raise InputError("Schmidt sequence has non-finite entries")
    if np.any(c < -tol):
        raise InputError("Schmidt coefficients must be nonnegative")
    if np.any(np.diff(c) > tol):
        raise InputError("Schmidt coefficients must be nonincreasing")
    norm = float(np.sum(c * c))
    if abs(norm - 1.0) > tol:
        raise InputError(f"Schmidt sequence is not normalised (sum c^2 = {norm:.12g})")
    return c


def entropy_e(c, tol=1e-9):
    """``-sum c_N^2 log2 c_N^2`` with ``0 log 0 = 0``."""
    c = check_schmidt(c, tol)
    p = c * c
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def delta_functional(c, tol=1e-9):
    """The correlation functional ``delta(c)``; at most 1 for ordered sequences.

    The ``N = 0`` term carries a factor 0, so ``c_{-1}`` never enters.
    """
    c = check_schmidt(c, tol)
    n = np.arange(c.size)
    prev = np.concatenate(([0.0], c[:-1]))
    return float(1.0 + 2.0 * np.sum(n * (c * c - c * prev)))


def geometric_ratio(delta):
    """Ratio ``q = (1 - delta)/(1 + delta) = tanh(r_delta)``."""
    delta = float(delta)
    if not 0.0 < delta <= 1.0:
        raise InputError(f"delta must lie in (0, 1], got {delta}")
    return (1.0 - delta) / (1.0 + delta)


def geometric_sequence(delta, d):
    """Normalised truncation of ``c_N ∝ q**N`` with ``delta(c) -> delta`` as ``d -> inf``."""
    if d < 2:
        raise InputError("truncation length must be >= 2")
    q = geometric_ratio(delta)
    if q == 0.0:
        out = np.zeros(d)
        out[0] = 1.0
        return out
    c = q ** np.arange(d, dtype=float)
    return c / np.linalg.norm(c)


@dataclass(frozen=True)
class MultiplierState:
    """Lagrange multipliers of the constrained entropy problem.

    ``lam`` is parametrised as ``2 r / sinh(r)**2``; ``x`` holds the ratios
    ``c_{N+1}/c_N`` of an attached sequence, if any.
    """

    r: float
    lam: float
    mu: float
    x: tuple = ()

    @classmethod
    def from_lambda(cls, lam, mu, x=()):
        return cls(lambda_to_r(lam), float(lam), float(mu), tuple(x))


def r_to_lambda(r):
    return 2.0 * r / math.sinh(r) ** 2


def lambda_to_r(lam):
    """Invert ``lam = 2r/sinh(r)**2`` (strictly decreasing in ``r``)."""
    if lam <= 0:
        raise InputError("lambda must be positive")
    hi = 1.0
    while r_to_lambda(hi) > lam:
        hi *= 2.0
        if hi > 700:
            raise RangeError("lambda too small to invert")
    lo = hi / 2.0
    while r_to_lambda(lo) < lam:
        lo /= 2.0
    return brentq(lambda r: r_to_lambda(r) - lam, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def _el_columns(c):
    n = np.arange(c.size)
    prev = np.concatenate(([1.0], c[:-1]))
    nxt = np.concatenate((c[1:], [0.0]))
    lam_col = 2 * n * c - (n * prev + (n + 1) * nxt)
    return lam_col, 2 * c, 2 * c * np.log(c * c)


def euler_lagrange_residual(c, lam, mu):
    """Left minus right side of the stationarity condition, per index.

    ``2 c_N (N lam + mu - ln c_N^2) - lam (N c_{N-1} + (N+1) c_{N+1})``
    with ``c_{-1} = 1`` and ``c_d = 0`` past the truncation.
    """
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise InputError("stationarity residual needs strictly positive coefficients")
    lam_col, mu_col, rhs = _el_columns(c)
    return lam * lam_col + mu * mu_col - rhs


def fit_multipliers(c, indices=(1, 2)):
    """Least-squares ``(lam, mu)`` from the stationarity condition at ``indices``."""
    c = np.asarray(c, dtype=float)
    lam_col, mu_col, rhs = _el_columns(c)
    idx = np.asarray(indices)
    design = np.stack([lam_col[idx], mu_col[idx]], axis=1)
    (lam, mu), *_ = np.linalg.lstsq(design, rhs[idx], rcond=None)
    return float(lam), float(mu)


def geometric_multipliers(q, c0):
    """Exact multipliers making ``c_N = c0 q**N`` stationary (infinite sequence)."""
    rho = -0.5 * math.log(q)
    lam = r_to_lambda(rho)
    mu = 0.5 * lam * q + math.log(c0 * c0)
    return MultiplierState(rho, lam, mu, (q,))


# --------------------------------------------------------------------------
# recursion for the coefficient ratios


@dataclass(frozen=True)
class RecursionTrajectory:
    r: float
    x: tuple
    classification: str
    steps: int
    max_deviation: float
    precision_bits: int

    @property
    def fixed_point(self):
        return math.exp(-2.0 * self.r)

    @property
    def monotone(self):
        diffs = np.diff(self.x)
        if np.all(diffs < 0):
            return "decreasing"
        if np.all(diffs > 0):
            return "increasing"
        if np.all(diffs == 0):
            return "constant"
        return "mixed"


def _working_precision(r, n_max):
    # deviations from the fixed point grow by about exp(4r) per step
    return 128 + int(math.ceil(n_max * 4.0 * r / LN2))


def recursion_iterate(r, x0=None, n_max=1000, *, offset=0.0, tol=1e-12, precision_bits=None):
    """Iterate ``x_{N+1} = x_N - A_N - B_N`` for the ratios ``x_N = c_{N+1}/c_N``.

    ``A_N = 4/(N+2) [sinh^2(r_N) - (r_N/r) sinh^2(r)]`` with
    ``r_N = -ln(x_N)/2`` and ``B_N = N/(N+2) (1/x_N - 1/x_{N-1})``.

    The fixed point ``exp(-2r)`` is unstable with growth factor about
    ``exp(4r)`` per step, so the iteration runs in multiprecision with
    enough bits to keep rounding invisible for ``n_max`` steps.  When ``x0``
    is omitted the start is ``exp(-2r) + offset`` evaluated at that
    precision; an explicit float ``x0`` is taken as an exact binary value.

    Classification: ``"collapses"`` once some ``x_N <= 0``,
    ``"escapes-normalization"`` once some ``x_N > 1``, ``"fixed-point"`` if every iterate
    stays within ``tol`` of ``x0``, else ``"undetermined"``.
    """
    r = float(r)
    if not math.isfinite(r) or r <= 0:
        raise InputError(f"r must be positive, got {r}")
    if r > 700:
        raise RangeError(f"r = {r} overflows sinh in double precision")
    n_max = int(n_max)
    bits = precision_bits or _working_precision(r, n_max)
    if bits > 2_000_000:
        raise RangeError(f"{bits} bits needed for r = {r}, n_max = {n_max}")

    with mpmath.workprec(bits):
        rr = mpmath.mpf(r)
        sh2 = mpmath.sinh(rr) ** 2
        x = mpmath.exp(-2 * rr) + mpmath.mpf(offset) if x0 is None else mpmath.mpf(x0)
        start = x
        xs = [x]
        prev = None
        label = None
        max_dev = mpmath.mpf(0)
        for n in range(n_max):
            if x <= 0:
                label = "collapses"
                break
            if x > 1:
                label = "escapes-normalization"
                break
            rn = -mpmath.log(x) / 2
            a = mpmath.mpf(4) / (n + 2) * (mpmath.sinh(rn) ** 2 - rn / rr * sh2)
            b = mpmath.mpf(0) if n == 0 else mpmath.mpf(n) / (n + 2) * (1 / x - 1 / prev)
            prev, x = x, x - a - b
            xs.append(x)
            max_dev = max(max_dev, abs(x - start))
        else:
            if x <= 0:
                label = "collapses"
            elif x > 1:
                label = "escapes-normalization"
        if label is None:
            label = "fixed-point" if max_dev <= tol else "undetermined"
        return RecursionTrajectory(
            r=r,
            x=tuple(float(v) for v in xs),
            classification=label,
            steps=len(xs) - 1,
            max_deviation=float(max_dev),
            precision_bits=bits,
        )


# --------------------------------------------------------------------------
# constrained minimisation


@dataclass
class MinimizationResult:
    c: np.ndarray
    minimum: float
    target: float
    converged: bool
    diagnostics: dict = field(default_factory=dict)

    @property
    def ratios(self):
        return self.c[1:] / self.c[:-1]


def _entropy_and_grad(c):
    p = c * c
    lp = np.log2(np.maximum(p, 1e-300))
    return float(-np.sum(p * lp)), -(2.0 * c * lp + 2.0 * c / LN2)


def _delta_and_grad(c):
    n = np.arange(c.size)
    prev = np.concatenate(([0.0], c[:-1]))
    nxt = np.concatenate((c[1:], [0.0]))
    val = 1.0 + 2.0 * np.sum(n * (c * c - c * prev))
    grad = 4 * n * c - 2 * n * prev - 2 * (n + 1) * nxt
    return float(val), grad


def _random_start(rng, d):
    q = rng.uniform(0.02, 0.95)
    c = q ** np.arange(d) * (1.0 + 0.5 * rng.random(d))
    c = np.sort(c)[::-1]
    return c / np.linalg.norm(c)


def _slsqp(c0, delta, maxiter):
    d = c0.size
    # monotone cone: c = U t with t >= 0, U upper-triangular ones
    U = np.triu(np.ones((d, d)))
    t0 = np.append(-np.diff(c0), c0[-1])

    def obj(t):
        val, g = _entropy_and_grad(U @ t)
        return val, U.T @ g

    def eq_delta(t):
        return _delta_and_grad(U @ t)[0] - delta

    def eq_delta_jac(t):
        return U.T @ _delta_and_grad(U @ t)[1]

    def eq_norm(t):
        c = U @ t
        return c @ c - 1.0

    def eq_norm_jac(t):
        return 2.0 * U.T @ (U @ t)

    res = minimize(
        obj,
        t0,
        jac=True,
        method="SLSQP",
        bounds=[(0.0, None)] * d,
        constraints=[
            {"type": "eq", "fun": eq_delta, "jac": eq_delta_jac},
            {"type": "eq", "fun": eq_norm, "jac": eq_norm_jac},
        ],
        options={"ftol": 1e-15, "maxiter": maxiter},
    )
    c = np.maximum(U @ res.x, 0.0)
    return c, res


def _polish(c, delta):
    """Newton solve of the stationarity system in log-coefficients.

    Starts from a near-optimal SLSQP point.  Coefficients too small for
    SLSQP to resolve are seeded by continuing the last resolved ratio.
    """
    d = c.size
    n = np.arange(d)
    c = c.copy()
    resolved = np.nonzero(c > 1e-7 * c[0])[0]
    last = resolved[-1]
    if last == 0:
        return None
    ratio = c[last] / c[last - 1]
    for k in range(last + 1, d):
        c[k] = c[k - 1] * ratio
    if c[-1] < 1e-300:
        return None
    y = np.log(c)
    lam, mu = fit_multipliers(c, indices=np.arange(min(last + 1, d)))

    def system(z):
        y, lam, mu = z[:d], z[d], z[d + 1]
        down = np.concatenate(([0.0], np.exp(y[:-1] - y[1:])))
        up = np.concatenate((np.exp(y[1:] - y[:-1]), [0.0]))
        stat = 2.0 * (n * lam + mu - 2.0 * y) - lam * (n * down + (n + 1) * up)
        cc = np.exp(y)
        return np.concatenate((stat, [cc @ cc - 1.0, _delta_and_grad(cc)[0] - delta]))

    sol = root(system, np.concatenate((y, [lam, mu])), method="hybr", options={"xtol": 1e-14})
    resid = float(np.max(np.abs(system(sol.x))))
    if not np.all(np.isfinite(sol.x)) or resid > 1e-9:
        return None
    cc = np.exp(sol.x[:d])
    if np.any(np.diff(cc) > 0):
        return None
    return cc, float(sol.x[d]), float(sol.x[d + 1]), resid


def minimize_entropy_constrained(delta, d=40, *, restarts=6, seed=0, polish=True, maxiter=3000, feas_tol=1e-8):
    """Minimise ``e(c)`` over ordered unit sequences of length ``d`` with ``delta(c) = delta``.

    Each restart runs SLSQP over the monotone cone (``c = U t``, ``t >= 0``)
    from a seeded random nonincreasing start, then optionally polishes the
    result with a Newton solve of the first-order conditions.  The lowest
    feasible value over all restarts is returned.

    Returns
    -------
    MinimizationResult
        ``minimum`` in bits, ``target = f(delta)``, and diagnostics holding
        the per-restart minima, the feasibility residual, the fitted
        multipliers and ``tol_truncation``.
    """
    delta = float(delta)
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta must lie in (0, 1), got {delta}")
    if d < 10:
        raise InputError("truncation length must be >= 10")
    rng = np.random.default_rng(seed)
    target = f_of_delta(delta)

    runs = []
    for k in range(restarts):
        c, res = _slsqp(_random_start(rng, d), delta, maxiter)
        c = c / np.linalg.norm(c)
        record = {"restart": k, "slsqp_success": bool(res.success), "nit": int(res.nit)}
        lam = mu = None
        if polish:
            polished = _polish(c, delta)
            if polished is not None:
                cc, lam, mu, resid = polished
                if _entropy_and_grad(cc)[0] <= _entropy_and_grad(c)[0] + 1e-12:
                    c = cc
                    record["polish_residual"] = resid
        feas = abs(_delta_and_grad(c)[0] - delta) + abs(c @ c - 1.0)
        record.update(value=_entropy_and_grad(c)[0], feasibility=float(feas), lam=lam, mu=mu)
        runs.append((record, c))

    feasible = [(rec, c) for rec, c in runs if rec["feasibility"] <= feas_tol]
    converged = bool(feasible)
    pool = feasible or runs
    best_rec, best_c = min(pool, key=lambda item: item[0]["value"])
    if not converged:
        warnings.warn(
            f"no restart met the feasibility tolerance {feas_tol:g}; returning best found",
            ConvergenceWarning,
            stacklevel=2,
        )
    values = [rec["value"] for rec, _ in feasible]
    diagnostics = {
        "restarts": [rec for rec, _ in runs],
        "spread": float(max(values) - min(values)) if values else float("nan"),
        "feasibility": best_rec["feasibility"],
        "lam": best_rec["lam"],
        "mu": best_rec["mu"],
        "tol_truncation": 1e-4 * 40.0 / d,
        "d": d,
    }
    return MinimizationResult(best_c, best_rec["value"], target, converged, diagnostics)


def random_sequence(rng, d, kind=None):
    """Random ordered unit sequence of length ``d`` for property runs.

    ``kind`` is one of ``"uniform"``, ``"geometric"``, ``"exponential"``,
    ``"sparse"``; drawn at random when omitted.
    """
    kinds = ("uniform", "geometric", "exponential", "sparse")
    kind = kind or kinds[rng.integers(len(kinds))]
    if kind == "uniform":
        c = rng.random(d)
    elif kind == "geometric":
        q = rng.uniform(0.05, 0.97)
        c = q ** np.arange(d) * (1.0 + rng.uniform(0.0, 0.3) * rng.random(d))
    elif kind == "exponential":
        c = rng.exponential(size=d) ** rng.uniform(1.0, 4.0)
    elif kind == "sparse":
        c = rng.random(d) * (rng.random(d) < 0.5)
        c[0] = 1.0
    else:
        raise InputError(f"unknown sequence kind {kind!r}")
    c = np.sort(c)[::-1]
    return c / np.linalg.norm(c)
