"""Property suites behind ``gaussian-eof verify``.

Each runner returns a :class:`SuiteReport`.  Every violating instance is
kept with the inputs needed to reproduce it.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import fock, schmidt
from .closed_form import f_of_delta
from .symplectic import StandardFormParams, apply_balancing_squeezing

SUITES = ("lemma1", "lemma2", "prop1", "recursion", "d0")


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SuiteReport:
    suite: str
    checks: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self):
        return all(c.passed for c in self.checks) and not self.failures

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def lines(self):
        for c in self.checks:
            yield f"[{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else "")
        for f in self.failures:
            yield "counterexample: " + ", ".join(f"{k}={_fmt(v)}" for k, v in f.items())
        yield f"{self.suite}: {'PASS' if self.passed else 'FAIL'} ({self.elapsed:.2f} s)"


def _fmt(v):
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=17, separator=",", max_line_width=10**6)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _trial_seeds(seed, trials):
    return np.random.SeedSequence(seed).generate_state(trials, dtype=np.uint32).tolist()


def run_lemma1(seed=0, trials=500, dim=8, tol=1e-8, max_failures=10):
    """EPR uncertainty versus the correlation functional of the Schmidt coefficients.

    Two thirds of the trials use Haar bases; the rest use bases close to
    the ordered Fock states, where the bound is nearly tight.
    """
    t0 = time.perf_counter()
    rep = SuiteReport("lemma1")
    worst = np.inf
    tight = 0
    for i, s in enumerate(_trial_seeds(seed, trials)):
        rng = np.random.default_rng(s)
        length = int(rng.integers(2, dim + 1))
        c = schmidt.random_sequence(rng, length)
        if i % 3 == 2:
            strength = float(rng.uniform(0.0, 0.3))
            psi = fock.near_aligned_state(s, dim, c, strength)
        else:
            strength = None
            psi = fock.random_state(s, dim, c)
        gap = fock.epr_uncertainty_state(psi) - schmidt.delta_functional(c)
        worst = min(worst, gap)
        tight += gap < 1e-3
        if gap < -tol and len(rep.failures) < max_failures:
            rep.failures.append({"trial": i, "seed": s, "dim": dim, "near_aligned": strength, "c": c, "gap": gap})
    rep.add(
        f"Delta(psi) >= delta(c) - {tol:g} over {trials} states (d = {dim})",
        worst >= -tol,
        f"min gap {worst:.3e}, {tight} within 1e-3 of equality",
    )
    rep.elapsed = time.perf_counter() - t0
    return rep


def run_lemma2(seed=0, deltas=(0.2, 0.5, 0.8), dim=40, trials=1000, tol_min=1e-4, tol_ratio=1e-3):
    """Constrained minimisation at fixed delta against ``f(delta)``, plus random sequences."""
    t0 = time.perf_counter()
    rep = SuiteReport("lemma2")
    for delta in deltas:
        res = schmidt.minimize_entropy_constrained(delta, dim, seed=seed)
        q = schmidt.geometric_ratio(delta)
        ratio_err = float(np.max(np.abs(res.ratios[:10] - q)))
        gap = res.minimum - res.target
        rep.add(
            f"min e(c) at delta={delta:g}, d={dim} within {tol_min:g} of f(delta)",
            res.converged and abs(gap) <= tol_min and gap >= -res.diagnostics["tol_truncation"],
            f"min {res.minimum:.12f}, f {res.target:.12f}, gap {gap:.2e}",
        )
        rep.add(
            f"minimiser ratios at delta={delta:g} within {tol_ratio:g} of {q:.6f}",
            ratio_err <= tol_ratio,
            f"max ratio error {ratio_err:.2e}",
        )
    worst = np.inf
    for i, s in enumerate(_trial_seeds(seed + 1, trials)):
        rng = np.random.default_rng(s)
        c = schmidt.random_sequence(rng, int(rng.integers(2, 60)))
        d = schmidt.delta_functional(c)
        if not 0.0 < d < 1.0:
            continue
        gap = schmidt.entropy_e(c) - f_of_delta(d)
        worst = min(worst, gap)
        if gap < -1e-9 and len(rep.failures) < 10:
            rep.failures.append({"trial": i, "seed": s, "c": c, "gap": gap})
    rep.add(f"e(c) >= f(delta(c)) over {trials} random sequences", worst >= -1e-9, f"min gap {worst:.3e}")
    rep.elapsed = time.perf_counter() - t0
    return rep


_EXPECTED = {-1: "collapses", 0: "fixed-point", 1: "escapes-normalization"}


def run_recursion(rs=(0.1, 0.5, 1.0, 2.0), perturb=1e-3, n_max=1000, tol=1e-12):
    t0 = time.perf_counter()
    rep = SuiteReport("recursion")
    for r in rs:
        for sign in (-1, 0, 1):
            traj = schmidt.recursion_iterate(r, offset=sign * perturb, n_max=n_max, tol=tol)
            want = _EXPECTED[sign]
            ok = traj.classification == want
            if sign == 0:
                ok = ok and traj.max_deviation <= tol and traj.steps == n_max
            else:
                ok = ok and traj.monotone == ("decreasing" if sign < 0 else "increasing")
            rep.add(
                f"r={r:g}, x0=exp(-2r){sign * perturb:+g}: {traj.classification}",
                ok,
                f"{traj.steps} steps, {traj.monotone}, max |x_N - x_0| = {traj.max_deviation:.3e}",
            )
            if not ok:
                rep.failures.append({"r": r, "offset": sign * perturb, "classification": traj.classification})
    rep.elapsed = time.perf_counter() - t0
    return rep


def _prop1_corpus(seed, trials, max_dim):
    for i, s in enumerate(_trial_seeds(seed, trials)):
        rng = np.random.default_rng(s)
        d = int(rng.integers(2, max_dim + 1))
        kind = i % 4
        if kind == 0:
            yield i, s, "random-grid", fock.random_state(s, d)
            continue
        c = schmidt.random_sequence(rng, int(rng.integers(1, d + 1)))
        if kind == 1:
            yield i, s, "haar-bases", fock.random_state(s, d, c)
        elif kind == 2:
            yield i, s, "fock-aligned", fock.fock_aligned_state(c)
        else:
            yield i, s, "near-aligned", fock.near_aligned_state(s, d, c, float(rng.uniform(0.0, 0.3)))


def run_prop1(seed=0, trials=1000, max_dim=12, tol=1e-8, tmss_rs=(0.1, 0.5, 1.0), tmss_dim=60, tmss_tol=1e-6):
    t0 = time.perf_counter()
    rep = SuiteReport("prop1")
    worst = np.inf
    nontrivial = 0
    for i, s, kind, psi in _prop1_corpus(seed, trials, max_dim):
        check = fock.prop1_check(psi)
        worst = min(worst, check.margin)
        nontrivial += check.delta < 1.0
        if check.margin < -tol and len(rep.failures) < 10:
            rep.failures.append({"trial": i, "seed": s, "kind": kind, "d": psi.d, "margin": check.margin})
    rep.add(
        f"E(psi) >= f(Delta(psi)) - {tol:g} over {trials} states (d <= {max_dim})",
        worst >= -tol,
        f"min margin {worst:.3e}, {nontrivial} states with Delta < 1",
    )
    for r in tmss_rs:
        check = fock.prop1_check(fock.tmss_state(r, tmss_dim))
        rep.add(
            f"two-mode squeezed state r={r:g}, d={tmss_dim} saturates the bound",
            abs(check.margin) <= tmss_tol,
            f"margin {check.margin:.3e}",
        )
    rep.elapsed = time.perf_counter() - t0
    return rep


def run_d0(n=2.0, kx=1.5, kp=1.5, *, tol=1e-10, monte_carlo=False, samples=100_000, dim=25, seed=0, mc_tol=1e-2):
    t0 = time.perf_counter()
    rep = SuiteReport("d0")
    balanced = apply_balancing_squeezing(StandardFormParams.symmetric(n, kx, kp)).to_matrix()
    res = fock.d0_moment_check(balanced, monte_carlo=monte_carlo, samples=samples, dim=dim, seed=seed)
    if not res.applicable:
        rep.add("decomposition applicable", False, res.reason)
        rep.failures.append({"n": n, "kx": kx, "kp": kp, "reason": res.reason})
    else:
        rep.add(
            f"analytic mixture CM equals balanced gamma within {tol:g}",
            res.max_deviation <= tol,
            f"max deviation {res.max_deviation:.3e}, r_delta {res.r_delta:.12g}",
        )
        if monte_carlo:
            rep.add(
                f"Monte Carlo mixture CM ({samples} samples, d={dim}) within {mc_tol:g}",
                res.mc_deviation <= mc_tol,
                f"max deviation {res.mc_deviation:.3e}",
            )
    rep.elapsed = time.perf_counter() - t0
    return rep
