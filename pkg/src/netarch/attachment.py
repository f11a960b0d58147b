"""Attachment functions and the prefix-sum transforms built on them.

An attachment function ``f`` maps a vertex degree ``k >= 1`` to a positive
weight.  Besides evaluating ``f`` this module maintains the prefix sums

    Phi_1(l) = sum_{i < l} 1 / f(i),     Phi_2(l) = sum_{i < l} 1 / f(i)**2

extended to ``[0, inf)`` by linear interpolation (and zero on ``[0, 1]``),
their inverses, and the composition ``kappa = Phi_2 o Phi_1^{-1}``.

JSON layout (``AttachmentFunction.to_json`` / ``from_json``)::

    {"kind": "constant", "c": 1.0}
    {"kind": "linear", "beta": 0.0}
    {"kind": "power", "alpha": 0.5, "c0": 1.0}
    {"kind": "table", "values": [1.0, 2.5, ...], "tail": {<preset>}}

Any of them may carry ``"bounds": {"f_star": ..., "c_f": ..., "alpha_bound": ...}``
to override the derived bounds.  For ``table`` the entry ``values[k-1]`` is
``f(k)`` and the preset ``tail`` gives ``f(k)`` for every ``k > len(values)``.
"""
from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError, RangeError

__all__ = [
    "AttachmentFunction",
    "PhiTable",
    "Regime",
    "classify_regime",
    "eval_f",
    "phi",
    "phi_inverse",
    "kappa",
]

_PRESETS = ("constant", "linear", "power")
_INITIAL_CACHE = 1024
# 2**24 doubles per order is ~134 MB; beyond that phi_inverse reports a range error.
MAX_CACHE = 1 << 24


class Regime(enum.Enum):
    PERSISTENT = "persistent"
    NON_PERSISTENT = "non_persistent"
    UNKNOWN = "unknown"


@dataclass(frozen=True, repr=False)
class AttachmentFunction:
    """A degree-based attachment function.

    Use the constructors :meth:`constant`, :meth:`linear`, :meth:`power`
    and :meth:`table` rather than the raw dataclass fields.
    """

    kind: str
    c: float = 1.0
    beta: float = 0.0
    alpha: float = 1.0
    c0: float = 1.0
    values: tuple[float, ...] = ()
    tail: AttachmentFunction | None = None
    declared_f_star: float | None = None
    declared_c_f: float | None = None
    declared_alpha_bound: float | None = None
    _phi: list = field(default_factory=list, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "constant":
            if not self.c > 0:
                raise DomainError(f"constant attachment needs c > 0, got {self.c}")
        elif self.kind == "linear":
            if not self.beta >= 0:
                raise DomainError(f"linear attachment needs beta >= 0, got {self.beta}")
        elif self.kind == "power":
            if not 0 < self.alpha <= 1:
                raise DomainError(f"power attachment needs alpha in (0, 1], got {self.alpha}")
            if not self.c0 > 0:
                raise DomainError(f"power attachment needs c0 > 0, got {self.c0}")
        elif self.kind == "table":
            if len(self.values) == 0:
                raise DomainError("table attachment needs at least one value")
            if any(not v > 0 for v in self.values):
                raise DomainError("table values must be positive")
            if self.tail is None or self.tail.kind not in _PRESETS:
                raise DomainError("table attachment needs a preset tail rule "
                                  "(constant, linear or power)")
        else:
            raise DomainError(f"unknown attachment kind {self.kind!r}")

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, c: float = 1.0, **bounds) -> AttachmentFunction:
        return cls("constant", c=float(c), **_bound_kwargs(bounds))

    @classmethod
    def linear(cls, beta: float = 0.0, **bounds) -> AttachmentFunction:
        """``f(k) = k + beta``."""
        return cls("linear", beta=float(beta), **_bound_kwargs(bounds))

    @classmethod
    def power(cls, alpha: float, c0: float = 1.0, **bounds) -> AttachmentFunction:
        """``f(k) = c0 * k**alpha``."""
        return cls("power", alpha=float(alpha), c0=float(c0), **_bound_kwargs(bounds))

    @classmethod
    def table(cls, values, tail: AttachmentFunction, **bounds) -> AttachmentFunction:
        return cls("table", values=tuple(float(v) for v in values), tail=tail,
                   **_bound_kwargs(bounds))

    def __repr__(self) -> str:
        return f"AttachmentFunction({self.to_json()})"

    # -- evaluation -------------------------------------------------------

    def __call__(self, k) -> float:
        return eval_f(self, k)

    def values_at(self, k) -> np.ndarray:
        """Vectorised ``f`` over an integer array ``k >= 1`` (no checks)."""
        k = np.asarray(k, dtype=np.float64)
        if self.kind == "constant":
            return np.full(k.shape, self.c)
        if self.kind == "linear":
            return k + self.beta
        if self.kind == "power":
            return self.c0 * k ** self.alpha
        table = np.asarray(self.values)
        L = table.size
        out = self.tail.values_at(k)
        inside = k <= L
        if np.any(inside):
            out = np.where(inside, table[np.clip(k.astype(np.int64) - 1, 0, L - 1)], out)
        return out

    def weight_table(self, max_degree: int) -> np.ndarray:
        """Array ``w`` with ``w[k] = f(k)`` for ``1 <= k <= max_degree`` and ``w[0] = 0``."""
        w = np.zeros(max_degree + 1)
        w[1:] = self.values_at(np.arange(1, max_degree + 1))
        return w

    # -- declared bounds --------------------------------------------------

    @property
    def f_star(self) -> float:
        """``min_{i >= 1} f(i)``."""
        if self.declared_f_star is not None:
            return self.declared_f_star
        if self.kind == "constant":
            return self.c
        if self.kind == "linear":
            return 1.0 + self.beta
        if self.kind == "power":
            return self.c0
        return min(min(self.values), self.tail._tail_min(len(self.values) + 1))

    @property
    def c_f(self) -> float:
        """Smallest slope ``C_f`` with ``f(i) <= C_f * i`` for all ``i >= 1``."""
        if self.declared_c_f is not None:
            return self.declared_c_f
        if self.kind == "constant":
            return self.c
        if self.kind == "linear":
            return 1.0 + self.beta
        if self.kind == "power":
            return self.c0
        ratios = [v / i for i, v in enumerate(self.values, start=1)]
        return max(max(ratios), self.tail._tail_slope(len(self.values) + 1))

    @property
    def alpha_bound(self) -> float:
        """Smallest exponent ``a`` with ``f(i) <= C i**a`` for some ``C``."""
        if self.declared_alpha_bound is not None:
            return self.declared_alpha_bound
        if self.kind == "constant":
            return 0.0
        if self.kind == "linear":
            return 1.0
        if self.kind == "power":
            return self.alpha
        return self.tail.alpha_bound

    def _tail_min(self, start: int) -> float:
        # minimum of a preset over i >= start; all presets are non-decreasing
        return float(self.values_at(start))

    def _tail_slope(self, start: int) -> float:
        # sup_{i >= start} f(i)/i for a preset; each ratio is non-increasing in i
        return float(self.values_at(start)) / start

    # -- transforms -------------------------------------------------------

    @property
    def phi_table(self) -> PhiTable:
        if not self._phi:
            with _PHI_LOCK:
                if not self._phi:
                    self._phi.append(PhiTable(self))
        return self._phi[0]

    def regime(self) -> Regime:
        return classify_regime(self)

    # -- serialisation ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "constant":
            d: dict[str, Any] = {"kind": "constant", "c": self.c}
        elif self.kind == "linear":
            d = {"kind": "linear", "beta": self.beta}
        elif self.kind == "power":
            d = {"kind": "power", "alpha": self.alpha, "c0": self.c0}
        else:
            d = {"kind": "table", "values": list(self.values), "tail": self.tail.to_dict()}
        bounds = {k: v for k, v in (("f_star", self.declared_f_star),
                                    ("c_f", self.declared_c_f),
                                    ("alpha_bound", self.declared_alpha_bound))
                  if v is not None}
        if bounds:
            d["bounds"] = bounds
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AttachmentFunction:
        d = dict(d)
        kind = d.pop("kind", None)
        bounds = d.pop("bounds", {}) or {}
        unknown_bounds = set(bounds) - {"f_star", "c_f", "alpha_bound"}
        if unknown_bounds:
            raise DomainError(f"unknown bound fields {sorted(unknown_bounds)}")
        allowed = {"constant": {"c"}, "linear": {"beta"}, "power": {"alpha", "c0"},
                   "table": {"values", "tail"}}
        if kind not in allowed:
            raise DomainError(f"unknown attachment kind {kind!r}")
        extra = set(d) - allowed[kind]
        if extra:
            raise DomainError(f"unexpected fields for {kind}: {sorted(extra)}")
        if kind == "constant":
            return cls.constant(d.get("c", 1.0), **bounds)
        if kind == "linear":
            return cls.linear(d.get("beta", 0.0), **bounds)
        if kind == "power":
            if "alpha" not in d:
                raise DomainError("power attachment needs 'alpha'")
            return cls.power(d["alpha"], d.get("c0", 1.0), **bounds)
        if "tail" not in d:
            raise DomainError("table attachment needs an explicit 'tail' rule")
        return cls.table(d.get("values", []), cls.from_dict(d["tail"]), **bounds)

    @classmethod
    def from_json(cls, text: str) -> AttachmentFunction:
        return cls.from_dict(json.loads(text))


_PHI_LOCK = threading.Lock()


def _bound_kwargs(bounds: dict) -> dict:
    out = {}
    for key in ("f_star", "c_f", "alpha_bound"):
        if key in bounds and bounds[key] is not None:
            out[f"declared_{key}"] = float(bounds.pop(key))
    if bounds:
        raise TypeError(f"unexpected keyword arguments {sorted(bounds)}")
    return out


def eval_f(f: AttachmentFunction, k) -> float:
    """Evaluate ``f(k)``; real ``k >= 1`` is read as ``f(floor(k))``."""
    if k < 1:
        raise DomainError(f"attachment function is defined for k >= 1, got {k}")
    return float(f.values_at(math.floor(k)))


class PhiTable:
    """Lazily grown prefix sums of ``1/f`` and ``1/f**2``.

    ``_tables[order][j]`` holds ``Phi_order(j + 1)``.  Growth doubles the
    cached length; readers always see a fully written prefix because a
    grown table replaces the old one in a single assignment.
    """

    def __init__(self, f: AttachmentFunction, initial: int = _INITIAL_CACHE):
        self.f = f
        self._lock = threading.Lock()
        self._tables = {1: np.zeros(1), 2: np.zeros(1)}
        self._sup: dict[int, tuple[float, float]] = {}
        self._grow(initial)

    @property
    def size(self) -> int:
        """Largest ``l`` with ``Phi(l)`` cached."""
        return self._tables[1].size

    def _grow(self, new_size: int) -> None:
        with self._lock:
            old = self.size
            if new_size <= old:
                return
            if new_size > MAX_CACHE:
                raise RangeError(f"Phi cache would exceed {MAX_CACHE} entries")
            i = np.arange(old, new_size, dtype=np.float64)  # terms f(old) .. f(new_size-1)
            w = self.f.values_at(i)
            c_f = self.f.c_f
            if np.any(w > c_f * i * (1 + 1e-12)):
                bad = int(i[np.argmax(w > c_f * i * (1 + 1e-12))])
                raise DomainError(f"declared C_f={c_f} violated at i={bad}")
            tables = {}
            for order in (1, 2):
                prev = self._tables[order]
                tables[order] = np.concatenate([prev, prev[-1] + np.cumsum(w ** -order)])
            self._tables = tables

    def ensure(self, l: int) -> None:
        if l > self.size:
            if l > MAX_CACHE:
                raise RangeError(f"Phi cache would exceed {MAX_CACHE} entries")
            target = self.size
            while target < l:
                target *= 2
            self._grow(min(target, MAX_CACHE))

    def table(self, order: int) -> np.ndarray:
        """Cached values ``Phi_order(1), ..., Phi_order(size)``."""
        _check_order(order)
        return self._tables[order]

    def sup(self, order: int) -> tuple[float, float]:
        """Bracket ``(lower, upper)`` for ``Phi_order(inf)``; ``(inf, inf)`` if divergent."""
        _check_order(order)
        if order not in self._sup:
            self._sup[order] = _phi_sup(self.f, order, self)
        return self._sup[order]

    def phi(self, order: int, x):
        _check_order(order)
        xa = np.asarray(x, dtype=np.float64)
        if np.any(xa < 0) or np.any(np.isnan(xa)):
            raise DomainError("Phi is defined for x >= 0")
        top = float(np.max(xa)) if xa.size else 0.0
        if not math.isfinite(top):
            raise DomainError("Phi(inf) is not tabulated; use sup()")
        self.ensure(int(math.ceil(top)) + 1)
        tab = self._tables[order]
        out = np.interp(xa, np.arange(1, tab.size + 1, dtype=np.float64), tab)
        return float(out) if np.ndim(x) == 0 else out

    def phi_inverse(self, order: int, y: float) -> float:
        _check_order(order)
        if not y >= 0:
            raise DomainError(f"Phi inverse needs y >= 0, got {y}")
        if y == 0:
            return 1.0
        lo_sup, _ = self.sup(order)
        if y >= lo_sup:
            raise RangeError(f"y={y} is not below Phi_{order}(inf) >= {lo_sup}")
        while self._tables[order][-1] < y:
            if self.size >= MAX_CACHE:
                raise RangeError(f"Phi_{order}^-1({y}) needs more than {MAX_CACHE} terms")
            self._grow(min(2 * self.size, MAX_CACHE))
        tab = self._tables[order]
        idx = int(np.searchsorted(tab, y, side="left"))
        if tab[idx] == y:
            return float(idx + 1)
        lo, hi = tab[idx - 1], tab[idx]
        return idx + (y - lo) / (hi - lo)

    def kappa(self, t: float) -> float:
        if not t >= 0:
            raise DomainError(f"kappa needs t >= 0, got {t}")
        return self.phi(2, self.phi_inverse(1, t))


def _check_order(order: int) -> None:
    if order not in (1, 2):
        raise DomainError(f"Phi order must be 1 or 2, got {order}")


def _preset_tail_integral(f: AttachmentFunction, order: int, start: float) -> float:
    """``int_start^inf f(x)**-order dx`` for a preset (inf when divergent)."""
    if f.kind == "constant":
        return math.inf
    if f.kind == "linear":
        if order == 1:
            return math.inf
        return 1.0 / (start + f.beta)
    p = order * f.alpha
    if p <= 1:
        return math.inf
    return f.c0 ** -order * start ** (1 - p) / (p - 1)


def _phi_sup(f: AttachmentFunction, order: int, table: PhiTable) -> tuple[float, float]:
    tail = f.tail if f.kind == "table" else f
    n = table.size  # partial sum covers i = 1 .. n-1
    start = max(n, len(f.values) + 1)
    table.ensure(start)
    partial = float(table.table(order)[start - 1])
    integral = _preset_tail_integral(tail, order, start)
    if math.isinf(integral):
        return math.inf, math.inf
    # f is non-decreasing on the tail, so the integral test brackets the remainder
    first = float(tail.values_at(start)) ** -order
    return partial + integral, partial + integral + first


def classify_regime(f: AttachmentFunction) -> Regime:
    """Persistent iff ``sum_i f(i)**-2 < inf`` (decided analytically for presets)."""
    if f.kind == "table":
        return classify_regime(f.tail) if f.tail is not None else Regime.UNKNOWN
    if f.kind == "constant":
        return Regime.NON_PERSISTENT
    if f.kind == "linear":
        return Regime.PERSISTENT
    return Regime.PERSISTENT if f.alpha > 0.5 else Regime.NON_PERSISTENT


def phi(f: AttachmentFunction, order: int, x):
    return f.phi_table.phi(order, x)


def phi_inverse(f: AttachmentFunction, order: int, y: float) -> float:
    return f.phi_table.phi_inverse(order, y)


def kappa(f: AttachmentFunction, t: float) -> float:
    return f.phi_table.kappa(t)
