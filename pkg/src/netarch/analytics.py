"""Analytic quantities attached to an attachment function.

``muhat`` is the Laplace transform of the reproduction intensity,
``mu_hat(theta) = sum_k prod_{i<=k} f(i) / (theta + f(i))``, and the
Malthusian rate ``lambda*`` solves ``mu_hat(lambda*) = 1``.  The rest of the
module turns these into the radius ``r_n``, the set-size bound ``b_n`` and
the budget exponents used by the root-finding experiments.

Theorem shapes carry unspecified multiplicative constants; every such
constant is fixed at 1 here and the output says so (``unit_constants``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .attachment import AttachmentFunction, PhiTable
from .errors import BracketFailure, DivergenceDetected, DomainError

__all__ = [
    "MalthusianSolution",
    "BudgetBound",
    "LinearTheorem",
    "GeneralTree",
    "GeneralM",
    "muhat",
    "malthusian_rate",
    "tilde_alpha_star",
    "radius_rn",
    "budget_bn",
    "budget_bounds",
    "yule_mgf",
]

MAX_TERMS = 10_000_000
SUM_CAP = 1e15
_CHUNK = 4096
_GRID_POINTS = 256
_GOLDEN_TOL = 1e-8


# -- mu_hat ----------------------------------------------------------------

def _muhat_numeric(f: AttachmentFunction, theta: float, tol: float) -> tuple[float, int]:
    """Chunked partial sums of the product terms ``p_k``.

    The remainder after ``K`` terms is estimated by the geometric tail with
    the local ratio ``r = f(K+1)/(theta+f(K+1))``, i.e. ``p_K * f(K+1) / theta``;
    summation stops once that estimate drops below ``tol``.  The estimate is
    exact for constant f and biased upwards when f grows.
    """
    total = 0.0
    log_p = 0.0
    k0 = 1
    while k0 <= MAX_TERMS:
        k = np.arange(k0, k0 + _CHUNK)
        fk = f.values_at(k)
        logs = log_p + np.cumsum(np.log(fk) - np.log(theta + fk))
        p = np.exp(logs)
        total += float(p.sum())
        log_p = float(logs[-1])
        p_last = float(p[-1])
        f_next = float(f.values_at(k0 + _CHUNK))
        if not math.isfinite(total) or total > SUM_CAP:
            break
        tail = p_last * f_next / theta
        if tail < tol:
            return total + tail, int(k[-1])
        k0 += _CHUNK
    raise DivergenceDetected(
        f"mu_hat({theta}) did not converge within {MAX_TERMS} terms "
        f"(partial sum {total:.6g}); theta is at or below the divergence threshold"
    )


def _muhat_full(f: AttachmentFunction, theta: float, tol: float) -> tuple[float, int]:
    if f.kind == "constant":
        return f.c / theta, 0
    if f.kind == "linear":
        if theta <= 1.0:
            raise DivergenceDetected(f"mu_hat diverges for linear f at theta={theta} <= 1")
        return (1.0 + f.beta) / (theta - 1.0), 0
    if f.kind == "power" and f.alpha == 1.0:
        return _muhat_full(AttachmentFunction.linear(0.0), theta / f.c0, tol)
    if f.kind == "table" and f.tail.kind in ("constant", "linear"):
        return _muhat_table(f, theta)
    return _muhat_numeric(f, theta, tol)


def _muhat_table(f: AttachmentFunction, theta: float) -> tuple[float, int]:
    # finite head summed directly, tail from the tail preset's closed form
    vals = np.asarray(f.values, dtype=np.float64)
    L = vals.size
    p = np.exp(np.cumsum(np.log(vals) - np.log(theta + vals)))
    head = float(p.sum())
    pL = float(p[-1])
    tail = f.tail
    if tail.kind == "constant":
        return head + pL * tail.c / theta, L
    if theta <= 1.0:
        raise DivergenceDetected(f"mu_hat diverges for a linear tail at theta={theta} <= 1")
    # sum_{j>=1} prod_{i=L+1}^{L+j} (i+b)/(theta+i+b) = (L+1+b)/(theta-1)
    return head + pL * (L + 1 + tail.beta) / (theta - 1.0), L


def muhat(f: AttachmentFunction, theta: float, tol: float = 1e-12) -> float:
    """``mu_hat(theta)``.  Raises :class:`DivergenceDetected` when the series blows up."""
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    return _muhat_full(f, float(theta), tol)[0]


# -- Malthusian rate -------------------------------------------------------

@dataclass(frozen=True)
class MalthusianSolution:
    lambda_star: float
    bracket: tuple[float, float]
    tolerance: float
    muhat_at_solution: float
    term_count_used: int

    def to_dict(self) -> dict:
        return {
            "lambda_star": self.lambda_star,
            "bracket": list(self.bracket),
            "tolerance": self.tolerance,
            "muhat_at_solution": self.muhat_at_solution,
            "term_count_used": self.term_count_used,
        }


def _excess(f, theta, tol):
    """``mu_hat(theta) - 1``; divergence counts as +inf."""
    try:
        val, terms = _muhat_full(f, theta, tol)
    except DivergenceDetected:
        return math.inf, 0
    return val - 1.0, terms


def malthusian_rate(f: AttachmentFunction, tol: float = 1e-9, max_iter: int = 64) -> MalthusianSolution:
    """Bisection for ``mu_hat(theta) = 1`` on ``[f_*, 2 C_f]``.

    ``mu_hat`` is strictly decreasing, so the root is unique.  ``tol`` is the
    target width on ``theta``; the reported ``tolerance`` is the larger of
    ``|mu_hat - 1|`` at the two final bracket ends.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    series_tol = min(1e-12, tol * 1e-3)
    lo, hi = float(f.f_star), 2.0 * float(f.c_f)
    g_hi, t_hi = _excess(f, hi, series_tol)
    if g_hi > 0:
        raise BracketFailure(
            f"mu_hat(2*C_f = {hi}) = {g_hi + 1:.6g} > 1; the declared C_f is too small"
        )
    g_lo, t_lo = _excess(f, lo, series_tol)
    if g_lo < 0:
        raise BracketFailure(f"mu_hat(f_* = {lo}) = {g_lo + 1:.6g} < 1; the declared f_* is too large")
    terms = max(t_lo, t_hi)
    a, b, ga, gb = lo, hi, g_lo, g_hi
    if ga == 0.0:
        b, gb = a, ga
    elif gb == 0.0:
        a, ga = b, gb
    it = 0
    while b - a > tol and it < max_iter:
        mid = 0.5 * (a + b)
        gm, tm = _excess(f, mid, series_tol)
        terms = max(terms, tm)
        if gm == 0.0:
            a = b = mid
            ga = gb = gm
            break
        if gm > 0:
            a, ga = mid, gm
        else:
            b, gb = mid, gm
        it += 1
    lam = 0.5 * (a + b)
    g_mid, tm = _excess(f, lam, series_tol)
    terms = max(terms, tm)
    finite = [abs(x) for x in (ga, gb, g_mid) if math.isfinite(x)]
    return MalthusianSolution(
        lambda_star=lam,
        bracket=(a, b),
        tolerance=max(finite) if finite else math.inf,
        muhat_at_solution=g_mid + 1.0,
        term_count_used=int(terms),
    )


# -- alpha-tilde -----------------------------------------------------------

def tilde_alpha_star(f: AttachmentFunction, lambda_star: float, x: float) -> float:
    """``inf_{0 < theta <= lambda*} x log mu_hat(theta) + theta``.

    A 256-point log grid is scanned from ``lambda*`` downwards; the scan
    stops once ``mu_hat`` diverges or the objective has clearly turned up
    (the objective is unimodal for the presets).  The best grid cell is then
    refined by golden-section search.
    """
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    if not lambda_star > 0:
        raise DomainError("lambda_star must be positive")

    def g(theta):
        return x * math.log(muhat(f, theta)) + theta

    grid = lambda_star * np.logspace(0.0, -12.0, _GRID_POINTS)
    vals = []
    for th in grid:
        try:
            vals.append(g(float(th)))
        except DivergenceDetected:
            break
        if len(vals) > 2 and vals[-1] > vals[-2] > vals[-3] and vals[-1] > min(vals) + 1.0:
            break
    if not vals:
        raise DivergenceDetected(f"mu_hat diverges at lambda_star={lambda_star}")
    i = int(np.argmin(vals))
    a = float(grid[min(i + 1, len(vals) - 1)])
    b = float(grid[max(i - 1, 0)])
    best = min(vals[i], _golden(g, a, b))
    return best


def _golden(g: Callable[[float], float], a: float, b: float) -> float:
    if b - a <= _GOLDEN_TOL:
        return g(a)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    gc, gd = g(c), g(d)
    while b - a > _GOLDEN_TOL * max(1.0, abs(a)):
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - invphi * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + invphi * (b - a)
            gd = g(d)
    return min(gc, gd)


# -- r_n, b_n --------------------------------------------------------------

def radius_rn(n: int, lambda_star: float, c1: float, phi: PhiTable | AttachmentFunction) -> float:
    """``c1 * lambda* * K(log(n) / lambda*)``."""
    if n < 3:
        raise DomainError(f"n must be >= 3, got {n}")
    if c1 < 0:
        raise DomainError("c1 must be nonnegative")
    if c1 == 0:
        return 0.0
    table = phi.phi_table if isinstance(phi, AttachmentFunction) else phi
    return c1 * lambda_star * table.kappa(math.log(n) / lambda_star)


def budget_bn(n: float, r_n: float, alpha: float, lambda_star: float) -> float:
    """``exp(8/(1-alpha) * r_n * log(log(n) / (2 lambda* r_n)))``; ``inf`` on overflow."""
    if not 0 < alpha <= 0.5:
        raise DomainError(f"alpha must lie in (0, 1/2], got {alpha}")
    if not r_n > 0:
        raise DomainError("r_n must be positive")
    log_n = math.log(n)
    ratio = log_n / (2.0 * lambda_star * r_n)
    if not ratio > 1.0:
        raise DomainError(
            f"log n = {log_n:.6g} does not exceed 2*lambda*r_n = {2 * lambda_star * r_n:.6g}"
        )
    return _exp_capped(8.0 / (1.0 - alpha) * r_n * math.log(ratio))


def _exp_capped(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


# -- budget exponents ------------------------------------------------------

@dataclass(frozen=True)
class LinearTheorem:
    m: int
    beta: float


@dataclass(frozen=True)
class GeneralTree:
    lambda_star: float
    f_star: float
    delta: float


@dataclass(frozen=True)
class GeneralM:
    c_f: float
    f_star: float
    f_m: float
    m: int
    delta: float


Regime = Union[LinearTheorem, GeneralTree, GeneralM]


@dataclass(frozen=True)
class BudgetBound:
    """Lower and upper budget shapes ``K(eps)`` with every constant set to 1."""

    epsilon: float
    lower_exponent: float
    upper_exponent: float
    regime: str
    params: dict = field(default_factory=dict)
    unit_constants: bool = True

    def lower_shape(self, eps: float | None = None) -> float:
        eps = self.epsilon if eps is None else eps
        return _exp_capped(-self.lower_exponent * math.log(eps))

    def upper_shape(self, eps: float | None = None) -> float:
        eps = self.epsilon if eps is None else eps
        log_val = -self.upper_exponent * math.log(eps)
        if self.regime == "LinearTheorem":
            log_val += math.sqrt(math.log(1.0 / eps))
        return _exp_capped(log_val)

    def to_dict(self) -> dict:
        return {
            "regime": self.regime,
            "params": dict(self.params),
            "epsilon": self.epsilon,
            "lower_exponent": self.lower_exponent,
            "upper_exponent": self.upper_exponent,
            "lower_shape": self.lower_shape(),
            "upper_shape": self.upper_shape(),
            "unit_constants": self.unit_constants,
        }


def _check_delta(delta: float) -> None:
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0,1), got {delta}")


def budget_bounds(epsilon: float, regime: Regime) -> BudgetBound:
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0,1), got {epsilon}")
    if isinstance(regime, LinearTheorem):
        m, beta = regime.m, regime.beta
        if int(m) != m or m < 1 or not beta > -m:
            raise DomainError("LinearTheorem needs integer m >= 1 and beta > -m")
        e = (2 * m + beta) / (m * (m + beta))
        lo, hi = e, e
    elif isinstance(regime, GeneralTree):
        _check_delta(regime.delta)
        if not (regime.lambda_star > 0 and regime.f_star > 0):
            raise DomainError("GeneralTree needs positive lambda_star and f_star")
        lo = regime.lambda_star / regime.f_star
        hi = regime.lambda_star / ((1 - regime.delta) * regime.f_star)
    elif isinstance(regime, GeneralM):
        _check_delta(regime.delta)
        if not (regime.c_f > 0 and regime.f_star > 0 and regime.f_m > 0 and regime.m >= 1):
            raise DomainError("GeneralM needs positive C_f, f_*, f(m) and m >= 1")
        lo = regime.f_star / (regime.m * regime.f_m)
        hi = 2 * regime.c_f / ((1 - regime.delta) * regime.f_star)
    else:
        raise DomainError(f"unknown regime {regime!r}")
    return BudgetBound(epsilon=float(epsilon), lower_exponent=float(lo), upper_exponent=float(hi),
                       regime=type(regime).__name__, params=dict(vars(regime)))


# -- Yule process with immigration -----------------------------------------

def yule_mgf(theta: float, t: float, nu: float, beta_imm: float) -> float:
    """``E exp(theta N(t))`` for a Yule process (rate ``nu``) with immigration ``beta_imm``, ``N(0)=1``.

    Defined for ``theta < -log(1 - exp(-nu t))`` (all theta when ``t = 0``).
    """
    if t < 0 or not nu > 0 or beta_imm < 0:
        raise DomainError("need t >= 0, nu > 0, beta_imm >= 0")
    if t > 0 and theta >= -math.log1p(-math.exp(-nu * t)):
        raise DomainError(f"theta={theta} is outside the validity domain at t={t}")
    et = math.exp(theta)
    denom = (1.0 - et) * math.exp(nu * t) + et
    return et / denom ** (1.0 + beta_imm / nu)
