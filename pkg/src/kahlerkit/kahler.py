"""Diastasis, Bochner coordinates, metric and Ricci jets.

Normalization conventions (used by every report):

* Kahler form ``omega = (i/2) d dbar Phi``
* metric ``g_{a bbar} = d^2 Phi / dz_a dzbar_b``
* Ricci form ``rho = -i d dbar log det g``
* Einstein condition ``rho = lambda * omega``, which componentwise reads
  ``d_a dbar_b (-log det g) = (lambda / 2) g_{a bbar}``
* scalar curvature ``s = 2 m lambda`` in complex dimension ``m``

With these, Fubini-Study on CP^n has ``lambda = 2(n + 1)`` and the unit-disc
hyperbolic metric ``-log(1 - |z|^2)`` has ``lambda = -4``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .series import (
    FLOAT_CTX,
    BiSeries,
    HoloMap,
    SeriesError,
    coeff_abs,
    conj_coeff,
    det,
    invert_map,
    matrix_inverse,
    to_float_coeff,
)
from .surd import Surd, exact_inverse, sqrt_rational

log = logging.getLogger(__name__)

CONVENTIONS = {
    "kahler_form": "omega = (i/2) d dbar Phi",
    "metric": "g_{a bbar} = d^2 Phi / (dz_a dzbar_b)",
    "ricci_form": "rho = -i d dbar log det g",
    "einstein": "rho = lambda omega, i.e. d_a dbar_b (-log det g) = (lambda/2) g_{a bbar}",
    "scalar_curvature": "s = 2 m lambda",
    "volume_form": "omega^m / m! = det(g) (i/2)^m dz_1 ^ dzbar_1 ^ ... ^ dz_m ^ dzbar_m",
}


class KahlerError(ValueError):
    """Input is not a valid Kahler potential or diastasis for the operation."""


@dataclass(frozen=True)
class MetricJet:
    entries: tuple  # tuple of tuples of BiSeries, entry [a][b] = g_{a bbar}
    order: int
    source: BiSeries | None = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __getitem__(self, ab):
        a, b = ab
        return self.entries[a][b]

    def constant_matrix(self) -> list[list]:
        return [[e.constant_term() for e in row] for row in self.entries]

    def is_hermitian(self, tol: float | None = None) -> bool:
        n = self.dim
        for a in range(n):
            for b in range(n):
                d = self.entries[a][b] - self.entries[b][a].conj()
                if not d.is_zero(tol):
                    return False
        return True

    def det(self) -> BiSeries:
        return det(self.entries)

    def evaluate(self, points) -> np.ndarray:
        z = np.asarray(points, dtype=complex)
        n = self.dim
        out = np.empty(z.shape[:-1] + (n, n), dtype=complex)
        for a in range(n):
            for b in range(n):
                out[..., a, b] = self.entries[a][b].evaluate(z)
        return out


@dataclass(frozen=True)
class BochnerResult:
    """Outcome of :func:`bochner_normalize`.

    ``change`` expresses the old coordinates in terms of the new ones
    (``z = change(Z)``) so that ``normal_form = d o change``; ``inverse`` gives
    ``Z`` in terms of ``z``.  ``unitary_residual_flag`` is set when the input
    quadratic part was already the identity, so the linear step was trivial
    and only the unitary ambiguity of Bochner coordinates remains.
    """

    change: HoloMap
    inverse: HoloMap
    normal_form: BiSeries
    unitary_residual_flag: bool
    rounds: int = 0


@dataclass(frozen=True)
class EinsteinReport:
    is_einstein_to_order: bool
    lam: object
    scalar_curvature: object
    residual_norm: float
    checked_order: int
    dim: int
    mode: str
    tol: float

    def to_dict(self) -> dict:
        from .jsonio import render_number

        return {
            "is_einstein_to_order": self.is_einstein_to_order,
            "lambda": render_number(self.lam),
            "scalar_curvature": render_number(self.scalar_curvature),
            "residual_norm": self.residual_norm,
            "checked_order": self.checked_order,
            "dim": self.dim,
            "mode": self.mode,
            "tol": self.tol,
            "sign": _sign_label(self.lam),
        }


def _sign_label(x) -> str:
    if isinstance(x, (Rational, Surd)):
        v = float(x) if isinstance(x, Rational) else complex(x).real
    else:
        v = float(getattr(x, "real", x))
    if abs(v) < 1e-12:
        return "zero"
    return "positive" if v > 0 else "negative"


# ---- small helpers ----------------------------------------------------------

def is_pure(j, k) -> bool:
    return not any(j) or not any(k)


def is_diastasis(s: BiSeries, tol: float | None = None) -> bool:
    """True when every pure (j = 0 or k = 0) coefficient, constant included, vanishes."""
    pure = s.filter(is_pure)
    return pure.is_zero(tol)


def classify_terms(s: BiSeries, tol: float | None = None) -> dict:
    """Count pure and mixed terms above ``tol``."""
    tol = s.tol if tol is None else tol
    pure = mixed = 0
    for (j, k), c in s.items():
        if coeff_abs(c) <= (0 if s.mode == "exact" else tol):
            continue
        if is_pure(j, k):
            pure += 1
        else:
            mixed += 1
    kind = "zero" if pure + mixed == 0 else ("pure" if mixed == 0 else ("mixed" if pure == 0 else "both"))
    return {"pure_terms": pure, "mixed_terms": mixed, "type": kind}


def quadratic_part(s: BiSeries) -> list[list]:
    """Hermitian matrix ``H[a][b]`` = coefficient of ``z_a zbar_b``."""
    n = s.dim
    H = []
    for a in range(n):
        row = []
        for b in range(n):
            j = [0] * n
            k = [0] * n
            j[a] = 1
            k[b] = 1
            row.append(s.coeff(j, k))
        H.append(row)
    return H


def _positive(x, mode, tol) -> bool:
    if mode == "exact" and isinstance(x, Rational):
        return x > 0
    c = complex(x) if not hasattr(x, "imag") or isinstance(x, Surd) else complex(float(x.real), float(x.imag))
    return c.real > tol and abs(c.imag) <= max(tol, 1e-12 * abs(c.real))


def ldl_hermitian(H: list[list], mode: str, order=None, tol: float = 1e-12):
    """Factor ``H = L D L^H`` (L unit lower triangular) following ``order``.

    Raises :class:`KahlerError` if ``H`` is not positive definite.
    """
    n = len(H)
    perm = list(range(n)) if order is None else list(order)
    P = [[H[perm[a]][perm[b]] for b in range(n)] for a in range(n)]
    L = [[Fraction(1) if a == b else Fraction(0) for b in range(n)] for a in range(n)]
    if mode == "float":
        L = [[to_float_coeff(x) for x in row] for row in L]
        P = [[to_float_coeff(x) for x in row] for row in P]
    D = []
    for j in range(n):
        d = P[j][j]
        for k in range(j):
            d = d - L[j][k] * D[k] * conj_coeff(L[j][k])
        if not _positive(d, mode, tol):
            raise KahlerError("quadratic part is not positive definite")
        D.append(d)
        inv = exact_inverse(d) if mode == "exact" else 1 / d
        for i in range(j + 1, n):
            v = P[i][j]
            for k in range(j):
                v = v - L[i][k] * D[k] * conj_coeff(L[j][k])
            L[i][j] = v * inv
    return perm, L, D


def _check_real(s: BiSeries, what: str):
    if not s.is_real():
        raise KahlerError(f"{what} must be real (coefficient of z^j zbar^k conjugate to that of z^k zbar^j)")


# ---- operations -------------------------------------------------------------

def diastasis_from_potential(phi: BiSeries) -> BiSeries:
    """Diastasis at the chart origin: drop every pure and constant term."""
    _check_real(phi, "potential")
    return phi.filter(lambda j, k: any(j) and any(k))


def metric_from_potential(phi: BiSeries) -> MetricJet:
    _check_real(phi, "potential")
    if phi.order < 2:
        raise KahlerError("potential order must be at least 2")
    n = phi.dim
    rows = []
    for a in range(n):
        da = phi.diff(a)
        rows.append(tuple(da.diff(b, conjugate=True) for b in range(n)))
    jet = MetricJet(tuple(rows), phi.order - 2, phi)
    try:
        ldl_hermitian(jet.constant_matrix(), phi.mode, tol=phi.tol)
    except KahlerError:
        raise KahlerError("metric at the origin is degenerate or indefinite; not a Kahler metric there") from None
    return jet


def log_det_metric(phi: BiSeries):
    """Return ``(log(det g / det g(0)), det g(0))``."""
    g = metric_from_potential(phi)
    dg = g.det()
    d0 = dg.constant_term()
    if phi.mode == "exact":
        normalized = dg * exact_inverse(d0)
    else:
        normalized = dg * (1 / d0)
    return (normalized - 1).log1p(), d0


def ricci_potential(phi: BiSeries) -> BiSeries:
    """``log det g`` normalized to vanish at the origin.

    The dropped constant ``log det g(0)`` is annihilated by ``d dbar`` and so
    does not change the Ricci form.
    """
    return log_det_metric(phi)[0]


def einstein_check(phi: BiSeries, order: int | None = None) -> EinsteinReport:
    """Test ``d_a dbar_b(-log det g) = (lambda/2) g_{a bbar}`` coefficientwise.

    ``order`` truncates the potential; the curvature components are then
    known to ``order - 4``, which is the order reported as checked.
    """
    if order is not None:
        phi = phi.with_order(order)
    if phi.order < 4:
        raise KahlerError("einstein_check needs a potential of order >= 4")
    n = phi.dim
    g = metric_from_potential(phi)
    neg_logdet = -ricci_potential(phi)
    checked = phi.order - 4
    ric = [[neg_logdet.diff(a).diff(b, conjugate=True) for b in range(n)] for a in range(n)]
    tr_r = sum((ric[a][a].constant_term() for a in range(n)), Fraction(0) if phi.mode == "exact" else FLOAT_CTX.mpc(0))
    tr_g = sum((g[a, a].constant_term() for a in range(n)), Fraction(0) if phi.mode == "exact" else FLOAT_CTX.mpc(0))
    half = tr_r * exact_inverse(tr_g) if phi.mode == "exact" else tr_r / tr_g
    residual = 0.0
    exact_zero = True
    for a in range(n):
        for b in range(n):
            d = ric[a][b] - g[a, b].truncate(checked).scale(half)
            residual = max(residual, d.max_abs())
            exact_zero = exact_zero and d.is_zero()
    if phi.mode == "exact":
        ok = exact_zero
        lam = 2 * half
    else:
        ok = residual <= phi.tol
        lam = 2 * half
        if abs(lam.imag) <= phi.tol:
            lam = lam.real
    return EinsteinReport(ok, lam, 2 * n * lam, residual, checked, n, phi.mode, phi.tol)


def volume_factor_check(phi_bochner: BiSeries, lam) -> BiSeries:
    """Residual ``log det g + (lambda/2) phi``.

    It vanishes identically for a Kahler-Einstein potential written in Bochner
    coordinates.  In a non-Bochner presentation the residual is ``F + Fbar``
    for a holomorphic ``F`` and so contains only pure terms.  When ``det g(0)``
    is not 1 in exact mode the constant ``log det g(0)`` is irrational and the
    residual is returned in float mode.
    """
    logdet, d0 = log_det_metric(phi_bochner)
    phi = phi_bochner
    if phi.mode == "exact" and d0 != 1:
        logdet = logdet.to_float() + FLOAT_CTX.log(to_float_coeff(d0))
        phi = phi.to_float()
    elif phi.mode == "float":
        logdet = logdet + FLOAT_CTX.log(d0)
    if phi.mode == "exact" and not isinstance(lam, (Rational, Surd)):
        logdet, phi = logdet.to_float(), phi.to_float()
    half = lam * Fraction(1, 2) if phi.mode == "exact" else to_float_coeff(lam) / 2
    return logdet + phi.truncate(logdet.order).scale(half)


def pullback_potential(phi_ambient: BiSeries, embedding: HoloMap) -> BiSeries:
    """Pull a potential back along a holomorphic map fixing the origin.

    Pulling back a diastasis yields a diastasis; this is checked and a
    warning is logged if the check fails (it can only fail when the input was
    not a diastasis).
    """
    if not embedding.fixes_origin():
        raise KahlerError("embedding must map the origin to the origin")
    if embedding.dim_out != phi_ambient.dim:
        raise KahlerError("embedding target dimension does not match the potential")
    out = phi_ambient.compose(embedding)
    if is_diastasis(phi_ambient) and not is_diastasis(out):
        log.warning("pullback of a diastasis is not a diastasis; check the inputs")
    return out


def is_bochner_form(d: BiSeries, tol: float | None = None) -> bool:
    """Quadratic part is ``|Z|^2`` and every other term has ``|j|, |k| >= 2``."""
    n = d.dim
    target = BiSeries.norm_squared(n, d.order, d.mode, d.tol)
    rest = d - target
    bad = rest.filter(lambda j, k: sum(j) <= 1 or sum(k) <= 1)
    return bad.is_zero(tol)


def _linear_normalization(H, mode, pivot_order, tol):
    """Return rows of ``M`` with ``Z = M z`` turning ``z^T H zbar`` into ``|Z|^2``."""
    n = len(H)
    perm, L, D = ldl_hermitian(H, mode, pivot_order, tol)
    roots = []
    for d in D:
        if mode == "exact" and isinstance(d, Rational):
            roots.append(sqrt_rational(d))
        else:
            roots.append(FLOAT_CTX.sqrt(to_float_coeff(d)))
    # P H P^T = L D L^H ; Z'_b = sqrt(D_b) sum_a L[a][b] z_{perm[a]}
    M = [[Fraction(0)] * n for _ in range(n)]
    for b in range(n):
        for a in range(n):
            if L[a][b] != 0:
                M[b][perm[a]] = roots[b] * L[a][b]
    return M


def bochner_normalize(d: BiSeries, mode: str = "auto", pivot_order=None) -> BochnerResult:
    """Compute Bochner coordinates for a diastasis centered at the origin.

    Step one rescales the quadratic Hermitian part to the identity through an
    ``L D L^H`` factorization (exact whenever the pivots are rational, since
    their square roots are representable as surds).  Step two clears, for
    each degree ``delta = 2 .. order-1``, all terms ``Z^j Zbar_b`` with
    ``|j| = delta`` by the substitution ``Z_b <- Z_b - sum_j c_{jb} Z^j``;
    the conjugate terms disappear at the same time by reality.

    ``mode="float"`` forces float coefficients; ``pivot_order`` permutes the
    factorization order, which yields Bochner coordinates differing by a
    unitary change.
    """
    if d.order < 2:
        raise KahlerError("diastasis order must be at least 2")
    _check_real(d, "diastasis")
    if not is_diastasis(d):
        raise KahlerError("input is not a diastasis: pure terms present")
    if mode == "float" and d.mode == "exact":
        d = d.to_float()
    n, N = d.dim, d.order
    H = quadratic_part(d)
    if d.mode == "exact":
        _, _, D = ldl_hermitian(H, "exact", pivot_order, d.tol)
        if not all(isinstance(x, Rational) for x in D):
            d = d.to_float()
            H = quadratic_part(d)
    M = _linear_normalization(H, d.mode, pivot_order, d.tol)
    mode_ = d.mode
    trivial = all(
        (H[a][b] == (1 if a == b else 0)) if mode_ == "exact" else abs(H[a][b] - (1 if a == b else 0)) <= d.tol
        for a in range(n)
        for b in range(n)
    )
    M_inv = matrix_inverse(M, mode_)
    change = HoloMap.linear(M_inv, N, mode_)
    cur = d.compose(change)
    rounds = 0
    for delta in range(2, N):
        polys = []
        any_term = False
        for b in range(n):
            terms = {}
            for (j, k), c in cur.items():
                if sum(j) == delta and sum(k) == 1 and k[b] == 1:
                    terms[tuple(j) + (0,) * n] = -c
                    any_term = True
            key = [0] * (2 * n)
            key[b] = 1
            terms[tuple(key)] = 1
            polys.append(BiSeries(n, N, terms, mode_, d.tol))
        if not any_term:
            continue
        step = HoloMap(polys)
        cur = cur.compose(step)
        change = change.compose(step)
        rounds += 1
        if mode_ == "float":
            # coefficients that the step cancels analytically are rounding noise
            cur = cur.filter(lambda j, k, dl=delta: not ((sum(j) == dl and sum(k) == 1) or (sum(k) == dl and sum(j) == 1)))
    if mode_ == "float":
        cur = _snap_quadratic(cur)
    normal = cur
    if not is_bochner_form(normal):
        raise KahlerError("Bochner normalization failed to reach normal form")
    return BochnerResult(change, invert_map(change), normal, trivial, rounds)


def _snap_quadratic(s: BiSeries) -> BiSeries:
    # float mode: replace diagonal quadratic coefficients within tol of 1 by 1
    n = s.dim
    terms = s.terms
    for a in range(n):
        for b in range(n):
            key = [0] * (2 * n)
            key[a] += 1
            key[n + b] += 1
            key = tuple(key)
            target = 1 if a == b else 0
            c = terms.get(key, 0)
            if abs(complex(c) - target) <= s.tol:
                if target:
                    terms[key] = target
                else:
                    terms.pop(key, None)
    return BiSeries(n, s.order, terms, s.mode, s.tol)
