"""Exact numbers in the field Q(i, sqrt(2), sqrt(3), sqrt(5), ...).

Normalizing a diagonal quadratic form or weighting sections by the square
root of a multinomial coefficient needs square roots of rationals.  A
:class:`Surd` stores a finite sum ``sum q * i**e * sqrt(r)`` with rational
``q``, ``e`` in {0, 1} and ``r`` a square-free positive integer, so those
operations stay exact.  Purely rational results collapse back to
:class:`fractions.Fraction`, which keeps the common rational path fast.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt
from numbers import Rational

import mpmath

__all__ = ["Surd", "sqrt_rational", "exact_inverse", "is_exact_number", "square_free_part"]


def square_free_part(m: int) -> tuple[int, int]:
    """Split ``m > 0`` as ``s**2 * r`` with ``r`` square-free; return ``(s, r)``."""
    if m <= 0:
        raise ValueError("square_free_part expects a positive integer")
    s, r = 1, 1
    p = 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            r *= p
        p += 1 if p == 2 else 2
    r *= m
    return s, r


def _prime_factors(m: int) -> list[int]:
    out = []
    p = 2
    while p * p <= m:
        if m % p == 0:
            out.append(p)
            while m % p == 0:
                m //= p
        p += 1 if p == 2 else 2
    if m > 1:
        out.append(m)
    return out


def _key_mul(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, tuple[int, int]]:
    # (i^e1 sqrt r1)(i^e2 sqrt r2) = sign * g * i^e sqrt r
    e1, r1 = a
    e2, r2 = b
    g = gcd(r1, r2)
    r = (r1 // g) * (r2 // g)
    e = e1 + e2
    factor = g
    if e == 2:
        factor = -g
        e = 0
    return factor, (e, r)


def _collapse(terms: dict) -> "Fraction | Surd":
    terms = {k: v for k, v in terms.items() if v != 0}
    if not terms:
        return Fraction(0)
    if len(terms) == 1 and (0, 1) in terms:
        return terms[(0, 1)]
    return Surd._raw(terms)


class Surd:
    """Element of a multi-quadratic extension of the Gaussian rationals."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, value=0):
        if isinstance(value, Surd):
            self._terms = dict(value._terms)
        elif isinstance(value, Rational):
            self._terms = {(0, 1): Fraction(value)} if value != 0 else {}
        else:
            raise TypeError(f"cannot build a Surd from {type(value).__name__}")
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Surd":
        obj = cls.__new__(cls)
        obj._terms = terms
        obj._hash = None
        return obj

    @classmethod
    def sqrt(cls, q) -> "Fraction | Surd":
        return sqrt_rational(q)

    @classmethod
    def imag_unit(cls) -> "Surd":
        return cls._raw({(1, 1): Fraction(1)})

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def _coerce(self, other):
        if isinstance(other, Surd):
            return other._terms
        if isinstance(other, Rational):
            return {(0, 1): Fraction(other)} if other != 0 else {}
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for k, v in o.items():
            out[k] = out.get(k, 0) + v
        return _collapse(out)

    __radd__ = __add__

    def __neg__(self):
        return Surd._raw({k: -v for k, v in self._terms.items()})

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self._terms)
        for k, v in o.items():
            out[k] = out.get(k, 0) - v
        return _collapse(out)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: dict = {}
        for ka, va in self._terms.items():
            for kb, vb in o.items():
                f, k = _key_mul(ka, kb)
                out[k] = out.get(k, 0) + f * va * vb
        return _collapse(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Rational):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return _collapse({k: v / other for k, v in self._terms.items()})
        if isinstance(other, Surd):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, Rational):
            return self.inverse() * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result: Fraction | Surd = Fraction(1)
        base: Fraction | Surd = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def conjugate(self) -> "Surd":
        return Surd._raw({k: (-v if k[0] else v) for k, v in self._terms.items()})

    def _galois(self, gen) -> "Surd":
        # gen == "i" flips sqrt(-1); an integer prime p flips sqrt(p)
        out = {}
        for (e, r), v in self._terms.items():
            flip = e == 1 if gen == "i" else r % gen == 0
            out[(e, r)] = -v if flip else v
        return Surd._raw(out)

    def inverse(self) -> "Fraction | Surd":
        """Multiplicative inverse via the product of Galois conjugates."""
        if not self._terms:
            raise ZeroDivisionError("inverse of zero")
        gens: list = []
        if any(e for e, _ in self._terms):
            gens.append("i")
        primes = set()
        for _, r in self._terms:
            primes.update(_prime_factors(r))
        gens.extend(sorted(primes))
        num: Fraction | Surd = Fraction(1)
        cur: Fraction | Surd = self
        for g in gens:
            if not isinstance(cur, Surd):
                break
            c = cur._galois(g)
            num = num * c
            cur = cur * c
        if isinstance(cur, Surd):
            raise ArithmeticError("failed to rationalize surd norm")
        return num * (1 / cur)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self._terms == o

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self):
        return bool(self._terms)

    def __complex__(self):
        total = 0j
        for (e, r), v in self._terms.items():
            total += float(v) * r ** 0.5 * (1j if e else 1)
        return total

    def to_mpc(self, ctx=mpmath.mp):
        total = ctx.mpc(0)
        for (e, r), v in self._terms.items():
            val = ctx.mpf(v.numerator) / v.denominator * ctx.sqrt(r)
            total += ctx.mpc(0, val) if e else val
        return total

    def __abs__(self):
        return abs(complex(self))

    def __repr__(self):
        parts = []
        for (e, r), v in sorted(self._terms.items()):
            unit = ("i" if e else "") + (f"sqrt({r})" if r != 1 else "")
            parts.append(f"{v}" + (f"*{unit}" if unit else ""))
        return "Surd(" + " + ".join(parts) + ")"


def sqrt_rational(q) -> "Fraction | Surd":
    """Exact square root of a rational; negative input yields an imaginary surd."""
    q = Fraction(q)
    if q == 0:
        return Fraction(0)
    neg = q < 0
    q = abs(q)
    a, b = q.numerator, q.denominator
    s, r = square_free_part(a * b)
    coeff = Fraction(s, b)
    if r == 1 and not neg:
        return coeff
    return Surd._raw({(1 if neg else 0, r): coeff})


def exact_inverse(x):
    if isinstance(x, Surd):
        return x.inverse()
    return 1 / Fraction(x)


def is_exact_number(x) -> bool:
    return isinstance(x, (Rational, Surd))


def is_perfect_square(q: Fraction) -> bool:
    q = Fraction(q)
    if q < 0:
        return False
    return isqrt(q.numerator) ** 2 == q.numerator and isqrt(q.denominator) ** 2 == q.denominator
