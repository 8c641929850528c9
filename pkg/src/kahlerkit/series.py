"""Truncated power series in ``z_1..z_n`` and their conjugates.

A :class:`BiSeries` stores the coefficients of ``z^j zbar^k`` in a sparse
dictionary, truncated by total degree ``|j| + |k| <= order``.  Keys are flat
tuples ``j + k`` of length ``2n``.  Coefficients live in one of two modes:

``exact``
    :class:`fractions.Fraction` or :class:`~kahlerkit.surd.Surd`; no rounding.
``float``
    ``mpc`` values from a private mpmath context with a 113-bit mantissa;
    comparisons use ``tol`` (default ``1e-12``).

A :class:`HoloMap` is a tuple of series without conjugate variables and
encodes holomorphic coordinate changes and embeddings.
"""
from __future__ import annotations

from fractions import Fraction
from math import factorial
from numbers import Rational
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .surd import Surd, exact_inverse

__all__ = [
    "BiSeries",
    "HoloMap",
    "SeriesError",
    "FLOAT_CTX",
    "DEFAULT_TOL",
    "add",
    "mul",
    "log1p",
    "exp",
    "diff",
    "compose",
    "det",
    "invert_map",
    "grlex_key",
]

DEFAULT_TOL = 1e-12
FLOAT_PREC = 113
# stored float coefficients below this magnitude are treated as exact zeros
FLOAT_ZERO = 1e-28

FLOAT_CTX = mpmath.MPContext()
FLOAT_CTX.prec = FLOAT_PREC
_MPC = type(FLOAT_CTX.mpc(0))
_MPF = type(FLOAT_CTX.mpf(0))


class SeriesError(ValueError):
    """Raised when a series operation's precondition is violated."""


def to_float_coeff(c):
    if isinstance(c, _MPC):
        return c
    if isinstance(c, _MPF):
        return FLOAT_CTX.mpc(c)
    if isinstance(c, Surd):
        return c.to_mpc(FLOAT_CTX)
    if isinstance(c, Rational):
        c = Fraction(c)
        return FLOAT_CTX.mpc(FLOAT_CTX.mpf(c.numerator) / c.denominator)
    if isinstance(c, (float, complex, np.number)):
        return FLOAT_CTX.mpc(complex(c))
    # foreign mpmath values
    return FLOAT_CTX.mpc(c)


def to_exact_coeff(c):
    if isinstance(c, Surd):
        return c
    if isinstance(c, Rational):
        return Fraction(c)
    raise SeriesError(f"coefficient {c!r} is not exact; use mode='float'")


def conj_coeff(c):
    if isinstance(c, Rational):
        return c
    return c.conjugate()


def coeff_abs(c) -> float:
    if isinstance(c, _MPC):
        return float(abs(c))
    return abs(complex(c))


def grlex_key(key: tuple[int, ...]):
    """Graded lexicographic sort key for a flat exponent tuple."""
    return (sum(key), tuple(-e for e in key))


def _is_zero(c, mode: str) -> bool:
    if mode == "exact":
        return c == 0
    return abs(c) <= FLOAT_ZERO


def _kadd(a, b):
    return tuple(map(int.__add__, a, b))


class BiSeries:
    """Immutable truncated series in ``z`` and ``zbar``.

    Parameters
    ----------
    dim : number of holomorphic variables ``n``
    order : truncation bound on the total degree ``|j| + |k|``
    terms : mapping from a flat key ``j + k`` (or a pair ``(j, k)``) to a coefficient
    mode : ``"exact"`` or ``"float"``
    tol : comparison tolerance used in float mode
    """

    __slots__ = ("dim", "order", "mode", "tol", "_terms", "_buckets")

    def __init__(self, dim: int, order: int, terms=None, mode: str = "exact", tol: float = DEFAULT_TOL):
        if dim < 1:
            raise SeriesError("dimension must be positive")
        if order < 0:
            raise SeriesError("order must be non-negative")
        if mode not in ("exact", "float"):
            raise SeriesError(f"unknown mode {mode!r}")
        self.dim = dim
        self.order = order
        self.mode = mode
        self.tol = tol
        conv = to_exact_coeff if mode == "exact" else to_float_coeff
        clean: dict = {}
        for key, c in (terms or {}).items():
            key = self._norm_key(key)
            if sum(key) > order:
                continue
            c = conv(c)
            if key in clean:
                c = clean[key] + c
            clean[key] = c
        self._terms = {k: v for k, v in clean.items() if not _is_zero(v, mode)}
        self._buckets = None

    def _norm_key(self, key) -> tuple[int, ...]:
        n = self.dim
        if len(key) == 2 and not isinstance(key[0], int):
            j, k = key
            key = tuple(j) + tuple(k)
        key = tuple(int(e) for e in key)
        if len(key) != 2 * n:
            raise SeriesError(f"multi-index length {len(key)} does not match 2*dim={2 * n}")
        if any(e < 0 for e in key):
            raise SeriesError("multi-index entries must be non-negative")
        return key

    @classmethod
    def _wrap(cls, dim, order, terms, mode, tol) -> "BiSeries":
        # trusted constructor: keys already flat and within order
        obj = cls.__new__(cls)
        obj.dim = dim
        obj.order = order
        obj.mode = mode
        obj.tol = tol
        obj._terms = {k: v for k, v in terms.items() if not _is_zero(v, mode)}
        obj._buckets = None
        return obj

    # ---- constructors -------------------------------------------------
    @classmethod
    def zero(cls, dim, order, mode="exact", tol=DEFAULT_TOL):
        return cls(dim, order, {}, mode, tol)

    @classmethod
    def constant(cls, value, dim, order, mode="exact", tol=DEFAULT_TOL):
        return cls(dim, order, {(0,) * (2 * dim): value}, mode, tol)

    @classmethod
    def one(cls, dim, order, mode="exact", tol=DEFAULT_TOL):
        return cls.constant(1, dim, order, mode, tol)

    @classmethod
    def variable(cls, i, dim, order, conjugate=False, mode="exact", tol=DEFAULT_TOL):
        if not 0 <= i < dim:
            raise SeriesError(f"variable index {i} out of range for dim {dim}")
        key = [0] * (2 * dim)
        key[i + dim if conjugate else i] = 1
        return cls(dim, order, {tuple(key): 1}, mode, tol)

    @classmethod
    def norm_squared(cls, dim, order, mode="exact", tol=DEFAULT_TOL, indices=None):
        """``sum |z_i|^2`` over ``indices`` (all variables by default)."""
        terms = {}
        for i in range(dim) if indices is None else indices:
            key = [0] * (2 * dim)
            key[i] = key[dim + i] = 1
            terms[tuple(key)] = 1
        return cls(dim, order, terms, mode, tol)

    # ---- basic access -------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        """Terms as ``((j, k), coeff)`` in graded lexicographic order."""
        n = self.dim
        for key in sorted(self._terms, key=grlex_key):
            yield (key[:n], key[n:]), self._terms[key]

    def coeff(self, j, k):
        key = tuple(j) + tuple(k)
        if len(key) != 2 * self.dim:
            raise SeriesError("multi-index length mismatch")
        return self._terms.get(key, Fraction(0) if self.mode == "exact" else FLOAT_CTX.mpc(0))

    def constant_term(self):
        return self.coeff((0,) * self.dim, (0,) * self.dim)

    def __len__(self):
        return len(self._terms)

    def is_zero(self, tol: float | None = None) -> bool:
        if self.mode == "exact" and tol is None:
            return not self._terms
        tol = self.tol if tol is None else tol
        return all(coeff_abs(c) <= tol for c in self._terms.values())

    def max_abs(self) -> float:
        return max((coeff_abs(c) for c in self._terms.values()), default=0.0)

    def degree_range(self):
        degs = [sum(k) for k in self._terms]
        return (min(degs), max(degs)) if degs else (None, None)

    def _bucketed(self):
        if self._buckets is None:
            buckets = [[] for _ in range(self.order + 1)]
            for key, c in self._terms.items():
                buckets[sum(key)].append((key, c))
            self._buckets = buckets
        return self._buckets

    # ---- mode handling ------------------------------------------------
    def to_float(self, tol: float | None = None) -> "BiSeries":
        tol = self.tol if tol is None else tol
        if self.mode == "float":
            return self if tol == self.tol else BiSeries._wrap(self.dim, self.order, self._terms, "float", tol)
        terms = {k: to_float_coeff(c) for k, c in self._terms.items()}
        return BiSeries._wrap(self.dim, self.order, terms, "float", tol)

    def _coerce_scalar(self, c):
        return to_exact_coeff(c) if self.mode == "exact" else to_float_coeff(c)

    def _binary_prep(self, other: "BiSeries"):
        if not isinstance(other, BiSeries):
            raise TypeError("expected a BiSeries")
        if other.dim != self.dim:
            raise SeriesError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if self.mode == other.mode:
            return self, other
        return self.to_float(), other.to_float(self.tol)

    # ---- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, BiSeries):
            return self + BiSeries.constant(other, self.dim, self.order, self.mode, self.tol)
        a, b = self._binary_prep(other)
        order = min(a.order, b.order)
        out = {k: v for k, v in a._terms.items() if sum(k) <= order}
        for k, v in b._terms.items():
            if sum(k) <= order:
                out[k] = out[k] + v if k in out else v
        return BiSeries._wrap(a.dim, order, out, a.mode, a.tol)

    __radd__ = __add__

    def __neg__(self):
        return BiSeries._wrap(self.dim, self.order, {k: -v for k, v in self._terms.items()}, self.mode, self.tol)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "BiSeries":
        c = self._coerce_scalar(c)
        return BiSeries._wrap(self.dim, self.order, {k: v * c for k, v in self._terms.items()}, self.mode, self.tol)

    def __mul__(self, other):
        if not isinstance(other, BiSeries):
            return self.scale(other)
        a, b = self._binary_prep(other)
        order = min(a.order, b.order)
        ba, bb = a._bucketed(), b._bucketed()
        out: dict = {}
        get = out.get
        for da in range(min(order, a.order) + 1):
            ta = ba[da]
            if not ta:
                continue
            for db in range(min(order - da, b.order) + 1):
                tb = bb[db]
                for ka, ca in ta:
                    for kb, cb in tb:
                        key = _kadd(ka, kb)
                        out[key] = get(key, 0) + ca * cb
        return BiSeries._wrap(a.dim, order, out, a.mode, a.tol)

    def __rmul__(self, other):
        return self.scale(other)

    def __truediv__(self, other):
        if isinstance(other, BiSeries):
            return self * other.reciprocal()
        if self.mode == "exact":
            return self.scale(exact_inverse(to_exact_coeff(other)))
        return self.scale(1 / to_float_coeff(other))

    def __pow__(self, m: int):
        if not isinstance(m, int) or m < 0:
            raise SeriesError("only non-negative integer powers are supported")
        result = BiSeries.one(self.dim, self.order, self.mode, self.tol)
        base = self
        while m:
            if m & 1:
                result = result * base
            m >>= 1
            if m:
                base = base * base
        return result

    def truncate(self, order: int) -> "BiSeries":
        if order > self.order:
            raise SeriesError(f"cannot raise truncation order from {self.order} to {order}")
        return BiSeries._wrap(self.dim, order, {k: v for k, v in self._terms.items() if sum(k) <= order}, self.mode, self.tol)

    def with_order(self, order: int) -> "BiSeries":
        """Truncate to ``min(order, self.order)``."""
        return self.truncate(min(order, self.order))

    def filter(self, keep) -> "BiSeries":
        """Keep terms for which ``keep(j, k)`` is true."""
        n = self.dim
        return BiSeries._wrap(
            self.dim, self.order, {key: v for key, v in self._terms.items() if keep(key[:n], key[n:])}, self.mode, self.tol
        )

    def conj(self) -> "BiSeries":
        """Complex conjugate: swap ``j`` and ``k`` and conjugate coefficients."""
        n = self.dim
        return BiSeries._wrap(
            self.dim, self.order, {key[n:] + key[:n]: conj_coeff(v) for key, v in self._terms.items()}, self.mode, self.tol
        )

    def is_real(self, tol: float | None = None) -> bool:
        diff = self - self.conj()
        return diff.is_zero(tol)

    def diff(self, i: int, conjugate: bool = False) -> "BiSeries":
        if not 0 <= i < self.dim:
            raise SeriesError(f"variable index {i} out of range for dim {self.dim}")
        pos = i + self.dim if conjugate else i
        out = {}
        for key, v in self._terms.items():
            e = key[pos]
            if e:
                nk = key[:pos] + (e - 1,) + key[pos + 1 :]
                out[nk] = v * e
        return BiSeries._wrap(self.dim, max(self.order - 1, 0), out, self.mode, self.tol)

    def reciprocal(self) -> "BiSeries":
        c0 = self.constant_term()
        if _is_zero(c0, self.mode):
            raise SeriesError("reciprocal of a series with zero constant term")
        inv0 = exact_inverse(c0) if self.mode == "exact" else 1 / c0
        u = self.scale(inv0) - 1
        term = BiSeries.one(self.dim, self.order, self.mode, self.tol)
        total = term
        for _ in range(self.order):
            term = -(term * u)
            if term.is_zero():
                break
            total = total + term
        return total.scale(inv0)

    def log1p(self) -> "BiSeries":
        if not _is_zero(self.constant_term(), self.mode):
            raise SeriesError("log1p requires a zero constant term")
        total = BiSeries.zero(self.dim, self.order, self.mode, self.tol)
        power = self
        for m in range(1, self.order + 1):
            if power.is_zero():
                break
            total = total + power.scale(Fraction((-1) ** (m + 1), m))
            power = power * self
        return total

    def log(self) -> "BiSeries":
        """Logarithm of a series whose constant term is 1 (float mode: any positive constant)."""
        c0 = self.constant_term()
        if self.mode == "exact":
            if c0 != 1:
                raise SeriesError("exact log needs constant term 1; use log1p or float mode")
            return (self - 1).log1p()
        rest = (self.scale(1 / c0) - 1).log1p()
        return rest + FLOAT_CTX.log(c0)

    def exp(self) -> "BiSeries":
        if not _is_zero(self.constant_term(), self.mode):
            raise SeriesError("exp requires a zero constant term; scale by exp(c) separately")
        total = BiSeries.one(self.dim, self.order, self.mode, self.tol)
        power = total
        for m in range(1, self.order + 1):
            power = power * self
            if power.is_zero():
                break
            total = total + power.scale(Fraction(1, factorial(m)))
        return total

    def compose(self, m: "HoloMap") -> "BiSeries":
        """Substitute ``z := m(Z)`` and ``zbar := conj(m)(Zbar)``."""
        if not isinstance(m, HoloMap):
            raise TypeError("compose expects a HoloMap")
        if m.dim_out != self.dim:
            raise SeriesError(f"map target dim {m.dim_out} does not match series dim {self.dim}")
        if not m.fixes_origin():
            raise SeriesError("composition requires a map with zero constant term")
        s = self
        comps = list(m.components)
        if s.mode != m.mode:
            s = s.to_float()
            comps = [c.to_float(s.tol) for c in comps]
        order = min(s.order, m.order)
        n_in = m.dim_in
        comps = [c.truncate(order) if c.order > order else c for c in comps]
        # the series is in the target variables; each factor is z_i or zbar_i pulled back
        factors = comps + [c.conj() for c in comps]
        one = BiSeries.one(n_in, order, s.mode, s.tol)
        cache: dict = {(0,) * (2 * s.dim): one}

        def monomial(key):
            hit = cache.get(key)
            if hit is not None:
                return hit
            # peel the last non-zero exponent so prefixes are shared
            p = max(i for i, e in enumerate(key) if e)
            prev = key[:p] + (key[p] - 1,) + key[p + 1 :]
            val = monomial(prev) * factors[p]
            cache[key] = val
            return val

        out: dict = {}
        for key in sorted(s._terms, key=grlex_key):
            if sum(key) > order:
                continue
            c = s._terms[key]
            for k2, v in monomial(key)._terms.items():
                out[k2] = out[k2] + c * v if k2 in out else c * v
        return BiSeries._wrap(n_in, order, out, s.mode, s.tol)

    # ---- comparison ---------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, BiSeries):
            return NotImplemented
        return (
            self.dim == other.dim and self.order == other.order and self.mode == other.mode and self._terms == other._terms
        )

    def __hash__(self):
        return hash((self.dim, self.order, self.mode, frozenset(self._terms)))

    def is_close(self, other: "BiSeries", tol: float | None = None, order: int | None = None) -> bool:
        """Coefficientwise comparison up to ``order`` (defaults to the smaller order)."""
        tol = self.tol if tol is None else tol
        order = min(self.order, other.order) if order is None else order
        d = self.with_order(order) - other.with_order(order)
        if d.mode == "exact" and tol == 0:
            return d.is_zero()
        return d.is_zero(tol)

    # ---- numerics -----------------------------------------------------
    def evaluate(self, points) -> np.ndarray:
        """Evaluate at complex points of shape ``(..., n)`` in double precision."""
        z = np.asarray(points, dtype=complex)
        if z.shape[-1] != self.dim:
            raise SeriesError("point dimension mismatch")
        zb = np.conj(z)
        out = np.zeros(z.shape[:-1], dtype=complex)
        n = self.dim
        for key, c in self._terms.items():
            term = np.full(z.shape[:-1], complex(c), dtype=complex)
            for i in range(n):
                if key[i]:
                    term = term * z[..., i] ** key[i]
                if key[n + i]:
                    term = term * zb[..., i] ** key[n + i]
            out = out + term
        return out

    def __repr__(self):
        n = self.dim
        parts = []
        for (j, k), c in list(self.items())[:12]:
            mono = "".join(f"z{i + 1}^{e}" for i, e in enumerate(j) if e) + "".join(
                f"zb{i + 1}^{e}" for i, e in enumerate(k) if e
            )
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        more = " + ..." if len(self._terms) > 12 else ""
        body = " + ".join(parts) if parts else "0"
        return f"BiSeries(dim={n}, order={self.order}, mode={self.mode}: {body}{more})"

    # ---- serialization ------------------------------------------------
    def to_dict(self) -> dict:
        from .jsonio import coeff_to_json

        terms = []
        for (j, k), c in self.items():
            entry = {"j": list(j), "k": list(k)}
            entry.update(coeff_to_json(c))
            terms.append(entry)
        doc = {"dim": self.dim, "order": self.order, "mode": self.mode, "terms": terms}
        if self.mode == "float":
            doc["tol"] = self.tol
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "BiSeries":
        from .jsonio import coeff_from_json

        mode = doc.get("mode", "exact")
        terms = {}
        for t in doc["terms"]:
            key = tuple(t["j"]) + tuple(t["k"])
            if key in terms:
                raise SeriesError(f"duplicate term {t['j']}, {t['k']}")
            terms[key] = coeff_from_json(t)
        return cls(int(doc["dim"]), int(doc["order"]), terms, mode, float(doc.get("tol", DEFAULT_TOL)))


class HoloMap:
    """Holomorphic map ``C^dim_in -> C^dim_out`` given by truncated series."""

    __slots__ = ("dim_in", "dim_out", "components")

    def __init__(self, components: Sequence[BiSeries]):
        comps = tuple(components)
        if not comps:
            raise SeriesError("a HoloMap needs at least one component")
        dim_in = comps[0].dim
        modes = {c.mode for c in comps}
        if len(modes) > 1:
            comps = tuple(c.to_float() for c in comps)
        for c in comps:
            if c.dim != dim_in:
                raise SeriesError("all components must share the source dimension")
            for key in c._terms:
                if any(key[dim_in:]):
                    raise SeriesError("HoloMap components may not depend on conjugate variables")
        order = min(c.order for c in comps)
        self.dim_in = dim_in
        self.dim_out = len(comps)
        self.components = tuple(c.truncate(order) for c in comps)

    @property
    def order(self) -> int:
        return self.components[0].order

    @property
    def mode(self) -> str:
        return self.components[0].mode

    @classmethod
    def identity(cls, dim, order, mode="exact"):
        return cls([BiSeries.variable(i, dim, order, mode=mode) for i in range(dim)])

    @classmethod
    def linear(cls, matrix, order, mode="exact"):
        """Map ``Z -> A Z`` with ``A`` given as rows (dim_out x dim_in)."""
        rows = [list(r) for r in matrix]
        dim_in = len(rows[0])
        comps = []
        for row in rows:
            terms = {}
            for i, a in enumerate(row):
                key = [0] * (2 * dim_in)
                key[i] = 1
                terms[tuple(key)] = a
            comps.append(BiSeries(dim_in, order, terms, mode))
        return cls(comps)

    @classmethod
    def from_polynomials(cls, dim_in, order, polys: Iterable[dict], mode="exact"):
        """Build from dicts mapping holomorphic exponent tuples to coefficients."""
        comps = []
        for poly in polys:
            terms = {tuple(e) + (0,) * dim_in: c for e, c in poly.items()}
            comps.append(BiSeries(dim_in, order, terms, mode))
        return cls(comps)

    def fixes_origin(self) -> bool:
        return all(_is_zero(c.constant_term(), c.mode) for c in self.components)

    def linear_part(self) -> list[list]:
        n = self.dim_in
        rows = []
        for c in self.components:
            row = []
            for i in range(n):
                j = [0] * n
                j[i] = 1
                row.append(c.coeff(j, [0] * n))
            rows.append(row)
        return rows

    def to_float(self) -> "HoloMap":
        return HoloMap([c.to_float() for c in self.components])

    def truncate(self, order) -> "HoloMap":
        return HoloMap([c.truncate(order) for c in self.components])

    def compose(self, inner: "HoloMap") -> "HoloMap":
        """Return ``self o inner``."""
        return HoloMap([c.compose(inner) for c in self.components])

    def evaluate(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=complex)
        return np.stack([c.evaluate(z) for c in self.components], axis=-1)

    def is_polynomial(self) -> bool:
        return True

    def __eq__(self, other):
        if not isinstance(other, HoloMap):
            return NotImplemented
        return self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def is_close(self, other: "HoloMap", tol: float | None = None) -> bool:
        if self.dim_out != other.dim_out:
            return False
        return all(a.is_close(b, tol) for a, b in zip(self.components, other.components))

    def __repr__(self):
        return f"HoloMap(dim_in={self.dim_in}, dim_out={self.dim_out}, order={self.order}, mode={self.mode})"

    def to_dict(self) -> dict:
        return {
            "dim_in": self.dim_in,
            "dim_out": self.dim_out,
            "order": self.order,
            "mode": self.mode,
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "HoloMap":
        comps = [BiSeries.from_dict(c) for c in doc["components"]]
        m = cls(comps)
        if "dim_out" in doc and int(doc["dim_out"]) != m.dim_out:
            raise SeriesError("dim_out does not match the number of components")
        return m


# ---- linear algebra over the coefficient field ---------------------------

def _field_zero(c, mode, tol=DEFAULT_TOL) -> bool:
    if mode == "exact":
        return c == 0
    return abs(c) <= tol


def _field_inv(c, mode):
    return exact_inverse(c) if mode == "exact" else 1 / c


def matrix_inverse(a: list[list], mode: str) -> list[list]:
    """Gauss-Jordan inverse of a small square matrix of coefficients."""
    n = len(a)
    if any(len(r) != n for r in a):
        raise SeriesError("matrix must be square")
    conv = to_exact_coeff if mode == "exact" else to_float_coeff
    m = [[conv(x) for x in row] + [conv(1 if i == j else 0) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        if mode == "exact":
            piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        else:
            piv = max(range(col, n), key=lambda r: abs(m[r][col]))
            if abs(m[piv][col]) <= DEFAULT_TOL:
                piv = None
        if piv is None:
            raise SeriesError("singular linear part")
        m[col], m[piv] = m[piv], m[col]
        inv = _field_inv(m[col][col], mode)
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and not _field_zero(m[r][col], mode, 0):
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


# ---- module-level operations ----------------------------------------------

def add(a: BiSeries, b: BiSeries) -> BiSeries:
    return a + b


def mul(a: BiSeries, b: BiSeries) -> BiSeries:
    return a * b


def log1p(s: BiSeries) -> BiSeries:
    return s.log1p()


def exp(s: BiSeries) -> BiSeries:
    return s.exp()


def diff(s: BiSeries, var_index: int, conjugate: bool = False) -> BiSeries:
    return s.diff(var_index, conjugate)


def compose(s: BiSeries, m: HoloMap) -> BiSeries:
    return s.compose(m)


def det(m: Sequence[Sequence[BiSeries]]) -> BiSeries:
    """Determinant over the series ring.

    Cofactor expansion for n <= 4; fraction-free Bareiss elimination above.
    """
    rows = [list(r) for r in m]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise SeriesError("det requires a non-empty square matrix")
    if n <= 4:
        return _det_cofactor(rows)
    return _det_bareiss(rows)


def _det_cofactor(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for c in range(n):
        entry = rows[0][c]
        if entry.is_zero():
            continue
        minor = [r[:c] + r[c + 1 :] for r in rows[1:]]
        term = entry * _det_cofactor(minor)
        if c % 2:
            term = -term
        total = term if total is None else total + term
    if total is None:
        ref = rows[0][0]
        order = min(e.order for r in rows for e in r)
        return BiSeries.zero(ref.dim, order, ref.mode, ref.tol)
    return total


def _det_bareiss(rows):
    n = len(rows)
    a = [list(r) for r in rows]
    sign = 1
    prev = None
    for k in range(n - 1):
        piv = next((r for r in range(k, n) if not _is_zero(a[r][k].constant_term(), a[r][k].mode)), None)
        if piv is None:
            raise SeriesError("Bareiss elimination needs an invertible constant-term pivot")
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                val = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = val if prev is None else val / prev
        prev = a[k][k]
    result = a[n - 1][n - 1]
    return result if sign > 0 else -result


def invert_map(m: HoloMap) -> HoloMap:
    """Formal inverse of ``m`` to its truncation order."""
    if m.dim_in != m.dim_out:
        raise SeriesError("only square maps can be inverted")
    if not m.fixes_origin():
        raise SeriesError("map must fix the origin")
    n, order, mode = m.dim_in, m.order, m.mode
    a = m.linear_part()
    a_inv = matrix_inverse(a, mode)
    lin = HoloMap.linear(a, order, mode)
    higher = [c - l for c, l in zip(m.components, lin.components)]
    w = HoloMap.identity(n, order, mode).components
    g = HoloMap.linear(a_inv, order, mode)
    # g = A^{-1} (w - h(g)); each pass fixes one more degree
    for _ in range(order):
        hg = [h.compose(g) for h in higher]
        rhs = [wi - hi for wi, hi in zip(w, hg)]
        new = []
        for row in a_inv:
            acc = BiSeries.zero(n, order, mode)
            for coef, r in zip(row, rhs):
                if not _field_zero(coef, mode, 0):
                    acc = acc + r.scale(coef)
            new.append(acc)
        new_map = HoloMap(new)
        if new_map == g:
            break
        g = new_map
    return g
