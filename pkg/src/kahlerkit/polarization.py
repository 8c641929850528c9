"""Sections of L^k on (products of) projective spaces and Bergman diastases.

Sections of ``O(k)`` on CP^n are homogeneous polynomials of degree ``k`` in
``Z_0..Z_n``.  With the Fubini-Study volume form and the induced hermitian
metric ``h^k(s, s) = |s(Z)|^2 / |Z|^(2k)`` distinct monomials are orthogonal
and, in the affine chart ``Z_0 = 1``,

    <Z^j, Z^j> = pi^n j_0! j_1! ... j_n! / (k + n)!

Norms are stored as ratios to ``<Z_0^k, Z_0^k>`` (``1 / multinomial(k; j)``),
so the overall volume constant cancels.  Products of projective spaces use
one exponent block per factor and bidegree ``(k, ..., k)``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, pi, prod

import numpy as np

from .series import BiSeries, HoloMap
from .surd import sqrt_rational

__all__ = [
    "PolarizationError",
    "SectionBasis",
    "KodairaMap",
    "monomial_basis",
    "product_basis",
    "monomial_inner",
    "section_inner",
    "quadrature_inner",
    "gram_matrix",
    "kodaira_map",
    "bergman_diastasis",
    "check_condition_C",
    "check_condition_D",
    "fs_volume",
]


class PolarizationError(ValueError):
    pass


def _multinomial(k: int, exps) -> int:
    return factorial(k) // prod(factorial(e) for e in exps)


def _compositions(total: int, parts: int):
    """All exponent vectors of length ``parts`` summing to ``total``, in lex-descending order."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def fs_volume(n: int) -> float:
    """Volume of CP^n for ``omega = (i/2) d dbar log |Z|^2``: ``pi^n / n!``."""
    return pi**n / factorial(n)


@dataclass
class SectionBasis:
    """Sections of ``L^k`` over a product of projective spaces.

    ``sections[i]`` maps a homogeneous exponent tuple (one block of length
    ``n_f + 1`` per factor) to a coefficient; the normalized section is
    ``scalars[i] * sections[i]``.  Scalars are relative to the basepoint
    section ``Z_0^k``, whose absolute squared norm is ``base_norm``.
    """

    factor_dims: tuple
    k: int
    sections: list
    scalars: list
    base_norm: float = 1.0

    @property
    def n(self) -> int:
        return sum(self.factor_dims)

    @property
    def d_k(self) -> int:
        return len(self.sections) - 1

    @property
    def n_homogeneous(self) -> int:
        return sum(d + 1 for d in self.factor_dims)

    def blocks(self):
        start = 0
        for d in self.factor_dims:
            yield start, start + d + 1
            start += d + 1

    def exponents(self) -> list:
        out = []
        for s in self.sections:
            if len(s) != 1:
                raise PolarizationError("section is not a monomial")
            out.append(next(iter(s)))
        return out

    def validate(self) -> None:
        """Check the monomial-basis invariants; raise :class:`PolarizationError` if violated."""
        exps = self.exponents()
        if len(set(exps)) != len(exps):
            raise PolarizationError("exponent vectors are not distinct")
        for e in exps:
            for lo, hi in self.blocks():
                if sum(e[lo:hi]) != self.k:
                    raise PolarizationError(f"exponent {e} does not have degree {self.k} in every factor")
        for c in self.scalars:
            if not complex(c).real > 0:
                raise PolarizationError("normalization scalars must be positive")

    def with_sections(self, sections, scalars=None) -> "SectionBasis":
        scalars = [Fraction(1)] * len(sections) if scalars is None else list(scalars)
        return SectionBasis(self.factor_dims, self.k, list(sections), scalars, self.base_norm)


def _closed_norm_ratio(factor_dims, k, exp) -> Fraction:
    # <Z^e, Z^e> / <Z_0^k, Z_0^k> for each factor, multiplied
    out = Fraction(1)
    start = 0
    for d in factor_dims:
        block = exp[start : start + d + 1]
        out *= Fraction(prod(factorial(e) for e in block), factorial(k))
        start += d + 1
    return out


def _base_norm(factor_dims, k) -> float:
    return prod(pi**d * factorial(k) / factorial(k + d) for d in factor_dims)


def product_basis(factor_dims, k: int) -> SectionBasis:
    """Orthonormal monomial basis of ``H^0(L^k)`` on ``CP^{n_1} x ... x CP^{n_r}``."""
    factor_dims = tuple(int(d) for d in factor_dims)
    if any(d < 1 for d in factor_dims) or k < 1:
        raise PolarizationError("need n >= 1 and k >= 1")
    blocks = [list(_compositions(k, d + 1)) for d in factor_dims]
    sections, scalars = [], []
    for combo in itertools.product(*blocks):
        exp = tuple(itertools.chain.from_iterable(combo))
        sections.append({exp: Fraction(1)})
        scalars.append(sqrt_rational(1 / _closed_norm_ratio(factor_dims, k, exp)))
    return SectionBasis(factor_dims, k, sections, scalars, _base_norm(factor_dims, k))


def monomial_basis(n: int, k: int) -> SectionBasis:
    """All degree-``k`` monomials in ``Z_0..Z_n`` with ``Z_0^k`` first."""
    return product_basis((n,), k)


def monomial_inner(n: int, k: int, j, jp, factor_dims=None) -> Fraction:
    """``<Z^j, Z^j'>`` as an exact multiple of the total volume.

    The result is zero for ``j != j'``.  ``factor_dims`` selects a product of
    projective spaces (default: the single factor ``(n,)``); the volume is
    then that of the product.
    """
    factor_dims = (n,) if factor_dims is None else tuple(factor_dims)
    j, jp = tuple(j), tuple(jp)
    width = sum(d + 1 for d in factor_dims)
    if len(j) != width or len(jp) != width:
        raise PolarizationError("exponent vector length mismatch")
    start = 0
    for d in factor_dims:
        if sum(j[start : start + d + 1]) != k or sum(jp[start : start + d + 1]) != k:
            raise PolarizationError("degree mismatch: exponents must have degree k")
        start += d + 1
    if j != jp:
        return Fraction(0)
    out = Fraction(1)
    start = 0
    for d in factor_dims:
        block = j[start : start + d + 1]
        # pi^d j! / (k+d)!  divided by  pi^d / d!
        out *= Fraction(factorial(d) * prod(factorial(e) for e in block), factorial(k + d))
        start += d + 1
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, ca in p.items():
        for b, cb in q.items():
            e = tuple(x + y for x, y in zip(a, b))
            out[e] = out.get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c != 0}


def section_inner(p: dict, q: dict, factor_dims, k: int):
    """Exact ``<p, q>`` of polynomial sections, relative to ``<Z_0^k, Z_0^k>``."""
    total = Fraction(0)
    for e, c in p.items():
        if e in q:
            cq = q[e]
            total = total + c * (cq if isinstance(cq, Fraction) else cq.conjugate()) * _closed_norm_ratio(
                factor_dims, k, e
            )
    return total


# ---- quadrature ---------------------------------------------------------------

def _factor_grid(d: int, k: int, m: int):
    """Nodes and weights on the affine chart of one CP^d factor, d in {1, 2}.

    The radius is compactified as ``|u| = tan(theta)``; for d = 1 this is
    ``u = tan(theta) e^{i phi}``, for d = 2 the direction is written in Hopf
    coordinates ``(cos chi e^{i phi_1}, sin chi e^{i phi_2})``.
    """
    x, w = np.polynomial.legendre.leggauss(m)
    t = (x + 1) * (np.pi / 4)
    wt = w * (np.pi / 4)
    m_phi = 2 * k + 4
    phi = np.arange(m_phi) * (2 * np.pi / m_phi)
    wphi = np.full(m_phi, 2 * np.pi / m_phi)
    r = np.tan(t)
    # radial density r^(2d-1) dr, dr = sec^2 dtheta, times the FS weight (1 + r^2)^-(k+d+1)
    wr = wt * r ** (2 * d - 1) / np.cos(t) ** 2 * (1 + r**2) ** (-(k + d + 1))
    if d == 1:
        R, P = np.meshgrid(r, phi, indexing="ij")
        WR, WP = np.meshgrid(wr, wphi, indexing="ij")
        return (R * np.exp(1j * P)).reshape(-1, 1), (WR * WP).ravel()
    if d == 2:
        chi, wchi = t, wt * np.cos(t) * np.sin(t)
        R, C, P1, P2 = np.meshgrid(r, chi, phi, phi, indexing="ij")
        W = np.einsum("a,b,c,d->abcd", wr, wchi, wphi, wphi)
        u1 = R * np.cos(C) * np.exp(1j * P1)
        u2 = R * np.sin(C) * np.exp(1j * P2)
        return np.stack([u1.ravel(), u2.ravel()], axis=-1), W.ravel()
    raise PolarizationError("quadrature supports factors of dimension 1 or 2")


def _quad_grid(factor_dims, k, m):
    grids = [_factor_grid(d, k, m) for d in factor_dims]
    u, w = grids[0]
    for u2, w2 in grids[1:]:
        nu, nv = len(w), len(w2)
        u = np.concatenate([np.repeat(u, nv, axis=0), np.tile(u2, (nu, 1))], axis=1)
        w = np.repeat(w, nv) * np.tile(w2, nu)
    return u, w


def _affine_monomial(u, exp, factor_dims):
    # homogeneous exponent -> affine monomial with Z_0 = 1 in every factor
    out = np.ones(u.shape[0], dtype=complex)
    hs, us = 0, 0
    for d in factor_dims:
        for i in range(1, d + 1):
            e = exp[hs + i]
            if e:
                out = out * u[:, us + i - 1] ** e
        hs += d + 1
        us += d
    return out


def _quad_gram(factor_dims, k, exps, tol, max_nodes):
    m = 8
    prev = None
    while True:
        u, w = _quad_grid(factor_dims, k, m)
        F = np.stack([_affine_monomial(u, e, factor_dims) for e in exps])
        # numpy matmul/sum accumulate in a fixed order, so results are reproducible
        G = (F * w) @ np.conj(F).T
        if prev is not None and np.max(np.abs(G - prev)) <= tol * max(1.0, np.max(np.abs(G))):
            return G
        if m >= max_nodes:
            return G
        prev = G
        m *= 2


def quadrature_inner(n: int, k: int, j, jp, factor_dims=None, tol: float = 1e-14, max_nodes: int = 64) -> complex:
    """Absolute ``<Z^j, Z^j'>`` by tensor Gauss-Legendre / trapezoid quadrature.

    Gauss nodes are doubled until successive values agree to ``tol``.
    """
    factor_dims = (n,) if factor_dims is None else tuple(factor_dims)
    if sum(factor_dims) > 2:
        raise PolarizationError("quadrature is limited to at most two complex dimensions")
    G = _quad_gram(factor_dims, k, [tuple(j), tuple(jp)], tol, max_nodes)
    return complex(G[0, 1])


def gram_matrix(basis: SectionBasis, method: str = "closed") -> np.ndarray:
    """Gram matrix of the normalized basis; ``method`` is ``closed`` or ``quadrature``."""
    N = len(basis.sections)
    scal = np.array([complex(c) for c in basis.scalars])
    if method == "closed":
        G = np.zeros((N, N), dtype=complex)
        for a in range(N):
            for b in range(N):
                val = section_inner(basis.sections[a], basis.sections[b], basis.factor_dims, basis.k)
                G[a, b] = complex(val)
    elif method == "quadrature":
        if basis.n > 2:
            raise PolarizationError("quadrature is limited to at most two complex dimensions")
        G = _quad_gram(basis.factor_dims, basis.k, basis.exponents(), 1e-14, 64) / basis.base_norm
    else:
        raise ValueError(f"unknown method {method!r}")
    return scal[:, None] * G * np.conj(scal)[None, :]


# ---- Kodaira maps ---------------------------------------------------------------

@dataclass
class KodairaMap:
    """Affine-chart expression ``u -> (s_0/sigma, ..., s_d/sigma)`` of a Kodaira map."""

    n: int
    d_k: int
    components: tuple  # BiSeries in the affine chart, component 0 is the basepoint section
    basis: SectionBasis = field(repr=False)
    chart: tuple = (0,)
    basepoint_index: int = 0

    @property
    def order(self) -> int:
        return self.components[0].order

    def affine_map(self, order: int | None = None) -> HoloMap:
        """Ratios ``s_j / s_0`` for ``j >= 1`` as a map into the affine chart of CP^d."""
        order = self.order if order is None else order
        c0 = self.components[0].with_order(order)
        inv = c0.reciprocal()
        ratios = [(c.with_order(order) * inv) for c in self.components[1:]]
        for r in ratios:
            if r.constant_term() != 0:
                raise PolarizationError("basepoint does not map to [1, 0, ..., 0]: condition (C) fails")
        return HoloMap(ratios)


def kodaira_map(basis: SectionBasis, chart=None, order: int | None = None) -> KodairaMap:
    """Express the normalized basis in the affine chart ``Z_chart = 1`` of each factor.

    The section not vanishing at the chart origin is moved to the front.
    """
    fd = basis.factor_dims
    chart = tuple([0] * len(fd)) if chart is None else (tuple(chart) if not isinstance(chart, int) else (chart,))
    if len(chart) != len(fd) or any(not 0 <= c <= d for c, d in zip(chart, fd)):
        raise PolarizationError(f"invalid chart {chart}")
    n = basis.n
    degree = basis.k * len(fd)
    order = degree if order is None else order
    comps = []
    for sec, scal in zip(basis.sections, basis.scalars):
        terms = {}
        for exp, c in sec.items():
            aff = []
            hs = 0
            for d, ch in zip(fd, chart):
                block = exp[hs : hs + d + 1]
                aff.extend(block[i] for i in range(d + 1) if i != ch)
                hs += d + 1
            key = tuple(aff) + (0,) * n
            terms[key] = terms.get(key, 0) + c * scal
        comps.append(BiSeries(n, order, terms))
    base = [i for i, c in enumerate(comps) if c.constant_term() != 0]
    if not base:
        raise PolarizationError("no section is non-zero at the chart origin")
    b = base[0]
    comps = [comps[b]] + comps[:b] + comps[b + 1 :]
    return KodairaMap(n, basis.d_k, tuple(comps), basis, chart, b)


def bergman_diastasis(kmap: KodairaMap, order: int) -> BiSeries:
    """Pullback of the Fubini-Study diastasis of CP^d_k at ``[1, 0, ..., 0]``.

    Computed as ``log(1 + sum_j |s_j / s_0|^2)`` directly in the source chart,
    which avoids expanding the ambient series in ``d_k`` variables.
    """
    if kmap.order < order:
        kmap = kodaira_map(kmap.basis, kmap.chart, order)
    amap = kmap.affine_map(order)
    t = BiSeries.zero(kmap.n, order)
    for r in amap.components:
        t = t + r * r.conj()
    return t.log1p()


def _eval_homogeneous(poly: dict, point) -> object:
    total = Fraction(0)
    for e, c in poly.items():
        term = c
        for x, p in zip(point, e):
            if p:
                term = term * x**p
        total = total + term
    return total


def check_condition_C(basis: SectionBasis, basepoint=None) -> bool:
    """All sections except ``s_0`` vanish at ``basepoint``, and ``s_0`` does not.

    ``basepoint`` is in homogeneous coordinates; the default is ``[1, 0, ..., 0]``
    in every factor.
    """
    if basepoint is None:
        basepoint = []
        for d in basis.factor_dims:
            basepoint.extend([1] + [0] * d)
    basepoint = [Fraction(x) if not isinstance(x, complex) else x for x in basepoint]
    if len(basepoint) != basis.n_homogeneous:
        raise PolarizationError("basepoint has the wrong number of homogeneous coordinates")
    vals = [_eval_homogeneous(s, basepoint) for s in basis.sections]
    return vals[0] != 0 and all(v == 0 for v in vals[1:])


def condition_D_report(basis: SectionBasis, k_max: int) -> dict:
    """Per-``k`` orthogonality of ``s_0^k`` against every other product of basis sections."""
    fd = basis.factor_dims
    secs = [{e: c * basis.scalars[i] for e, c in s.items()} for i, s in enumerate(basis.sections)]
    d = len(secs) - 1
    per_k = {}
    worst = {}
    for k in range(1, k_max + 1):
        powers = [[{tuple([0] * basis.n_homogeneous): Fraction(1)}] for _ in secs]
        for i, s in enumerate(secs):
            for _ in range(k):
                powers[i].append(_poly_mul(powers[i][-1], s))
        base = powers[0][k]
        ok = True
        bad = None
        for js in _compositions(k, d + 1):
            if js[0] == k:
                continue
            prodp = {tuple([0] * basis.n_homogeneous): Fraction(1)}
            for i, e in enumerate(js):
                if e:
                    prodp = _poly_mul(prodp, powers[i][e])
            val = section_inner(base, prodp, fd, k * basis.k)
            if val != 0:
                ok = False
                bad = list(js)
                break
        per_k[k] = ok
        worst[k] = bad
    return {"k_range": [1, k_max], "per_k": per_k, "first_violation": worst}


def check_condition_D(basis: SectionBasis, k_max: int) -> dict:
    """Verdict per ``k <= k_max``: ``{k: bool}``."""
    return condition_D_report(basis, k_max)["per_k"]
