"""Volume obstruction for Kahler-Einstein submanifolds of model spaces.

For a Kahler-Einstein submanifold written in Bochner coordinates ``w`` (the
restriction of ambient Bochner coordinates), the volume form is

    omega^m / m! = exp(-(lambda/2) D) (i/2)^m dw_1 ^ dwbar_1 ^ ...

with ``D`` the ambient diastasis.  :func:`verify_eqforms` checks this pointwise
and :func:`volume_probe` integrates both sides of the comparison
``vol(M, g) >= vol_eucl(pi(M))`` over an increasing ladder of radii.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial, log, pi

import numpy as np

from .kahler import (
    BochnerResult,
    EinsteinReport,
    KahlerError,
    bochner_normalize,
    classify_terms,
    einstein_check,
    is_bochner_form,
    is_diastasis,
    pullback_potential,
    volume_factor_check,
)
from .models import ModelSpec, flat
from .series import BiSeries, HoloMap, matrix_inverse

log_ = logging.getLogger(__name__)

DEFAULT_RADII = (1.0, 2.0, 4.0, 8.0, 16.0)
DEFAULT_SAMPLES = 100_000
# log-log slope over the last radius step separating bounded from divergent growth
DIVERGENCE_SLOPE = 0.5

CHEVALLEY_NOTE = (
    "the image of an open algebraic projection contains a Zariski open subset of C^m "
    "(Chevalley's constructibility theorem), hence has infinite "
    "Euclidean volume; the probe exhibits the trend, it does not prove divergence"
)


class ObstructionError(ValueError):
    pass


@dataclass
class EmbeddedSubmanifold:
    ambient: ModelSpec
    embedding: HoloMap
    m: int
    induced: BiSeries
    einstein: EinsteinReport
    bochner: BochnerResult | None = None
    factor_residual: BiSeries | None = None

    @property
    def lam(self):
        return self.einstein.lam if self.einstein.is_einstein_to_order else None

    def to_dict(self) -> dict:
        out = {
            "ambient": self.ambient.to_dict(),
            "intrinsic_dim": self.m,
            "induced_is_diastasis": is_diastasis(self.induced),
            "einstein": self.einstein.to_dict(),
        }
        if self.factor_residual is not None:
            out["factor_residual"] = {
                "is_zero": self.factor_residual.is_zero(),
                "max_abs": self.factor_residual.max_abs(),
                **classify_terms(self.factor_residual),
            }
        return out


def _rank(rows, mode) -> int:
    # row echelon rank over the coefficient field
    a = [list(r) for r in rows]
    if not a:
        return 0
    rank = 0
    ncol = len(a[0])
    for col in range(ncol):
        piv = None
        for r in range(rank, len(a)):
            x = a[r][col]
            if (x != 0) if mode == "exact" else (abs(x) > 1e-12):
                piv = r
                break
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][col]
        for r in range(len(a)):
            if r != rank:
                f = a[r][col] / p
                if (f != 0) if mode == "exact" else (abs(f) > 0):
                    a[r] = [x - f * y for x, y in zip(a[r], a[rank])]
        rank += 1
    return rank


def embed_submanifold(ambient: ModelSpec, embedding: HoloMap, order: int | None = None) -> EmbeddedSubmanifold:
    """Pull back the ambient diastasis and run the Einstein and volume-factor checks.

    The volume-factor residual is computed in intrinsic Bochner coordinates
    when the induced metric is Kahler-Einstein to the checked order.
    """
    if embedding.dim_out != ambient.dim:
        raise ObstructionError("embedding target dimension does not match the ambient model")
    if not embedding.fixes_origin():
        raise ObstructionError("embedding must map 0 to 0")
    if _rank(embedding.linear_part(), embedding.mode) < embedding.dim_in:
        raise ObstructionError("degenerate differential at the origin")
    order = order or max(ambient.order, embedding.order)
    emb = embedding if embedding.order >= order else _raise_order(embedding, order)
    induced = pullback_potential(ambient.series(order), emb)
    rep = einstein_check(induced)
    sub = EmbeddedSubmanifold(ambient, emb, embedding.dim_in, induced, rep)
    if rep.is_einstein_to_order:
        sub.bochner = bochner_normalize(induced)
        sub.factor_residual = volume_factor_check(sub.bochner.normal_form, rep.lam)
    return sub


def _raise_order(m: HoloMap, order: int) -> HoloMap:
    # polynomial maps: reinterpret the stored terms at a higher truncation order
    comps = []
    for c in m.components:
        top = c.degree_range()[1] or 0
        if top >= c.order and c.order < order:
            log_.info("embedding component reaches its truncation order; treating it as a polynomial")
        comps.append(BiSeries(c.dim, order, c.terms, c.mode, c.tol))
    return HoloMap(comps)


def _jacobian(m: HoloMap, points: np.ndarray) -> np.ndarray:
    # J[..., a, alpha] = d m_a / d u_alpha
    out = np.empty(points.shape[:-1] + (m.dim_out, m.dim_in), dtype=complex)
    for a, c in enumerate(m.components):
        for al in range(m.dim_in):
            out[..., a, al] = c.diff(al).evaluate(points)
    return out


def _projection(sub: EmbeddedSubmanifold, projection_coords) -> tuple:
    coords = tuple(range(sub.m)) if projection_coords is None else tuple(projection_coords)
    if len(coords) != sub.m or len(set(coords)) != sub.m or any(not 0 <= c < sub.ambient.dim for c in coords):
        raise ObstructionError(f"projection must select {sub.m} distinct ambient coordinates")
    return coords


def induced_log_det(sub: EmbeddedSubmanifold, points) -> np.ndarray:
    """``log det g`` of the induced metric in the embedding's parameters."""
    u = np.asarray(points, dtype=complex)
    Z = sub.embedding.evaluate(u)
    G = sub.ambient.metric(Z)
    J = _jacobian(sub.embedding, u)
    g = np.einsum("...ai,...ab,...bj->...ij", J, G, np.conj(J))
    return np.log(np.real(np.linalg.det(g)))


def verify_eqforms(sub: EmbeddedSubmanifold, sample_points, projection_coords=None) -> float:
    """Max over samples of ``|log det g_w + (lambda/2) D|`` in the projected coordinates ``w``.

    ``w = pi(phi(u))`` must be Bochner coordinates of the submanifold; this is
    checked on the series before evaluating.
    """
    if sub.lam is None:
        raise ObstructionError("verify_eqforms requires a Kahler-Einstein submanifold")
    coords = _projection(sub, projection_coords)
    proj = HoloMap([sub.embedding.components[c] for c in coords])
    try:
        w_to_u = _invert(proj)
    except Exception as exc:
        raise ObstructionError("projection is not open at the origin") from exc
    if not is_bochner_form(sub.induced.compose(w_to_u)):
        raise ObstructionError("projected coordinates are not Bochner coordinates of the submanifold")
    u = np.asarray(sample_points, dtype=complex)
    if u.ndim == 1:
        u = u[:, None]
    lam = float(complex(sub.lam).real) if not isinstance(sub.lam, Fraction) else float(sub.lam)
    ld = induced_log_det(sub, u)
    Jp = _jacobian(proj, u)
    ld_w = ld - np.log(np.abs(np.linalg.det(Jp)) ** 2)
    D = np.real(sub.ambient.evaluate(sub.embedding.evaluate(u)))
    return float(np.max(np.abs(ld_w + 0.5 * lam * D)))


def _invert(m: HoloMap) -> HoloMap:
    from .series import invert_map

    return invert_map(m)


@dataclass
class VolumeProbeReport:
    radii: list
    vol_g: list
    vol_g_se: list
    vol_eucl_proj: list
    vol_eucl_proj_se: list
    vol_eucl_exact: list
    weight_lambda: float
    samples: int
    seed: int
    verdict: str
    slopes: dict = field(default_factory=dict)
    domination: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    note: str = CHEVALLEY_NOTE

    def rows(self) -> list:
        out = []
        for i, R in enumerate(self.radii):
            out.append(
                {
                    "R": R,
                    "vol_g": self.vol_g[i],
                    "vol_g_se": self.vol_g_se[i],
                    "vol_eucl_proj": self.vol_eucl_proj[i],
                    "vol_eucl_proj_se": self.vol_eucl_proj_se[i],
                    "vol_eucl_exact": self.vol_eucl_exact[i],
                    "vol_g_increment": self.increments[i],
                    "dominates_within_3se": self.domination[i],
                }
            )
        return out

    def to_dict(self) -> dict:
        return {
            "rows": self.rows(),
            "weight_lambda": self.weight_lambda,
            "samples_per_radius": self.samples,
            "seed": self.seed,
            "verdict": self.verdict,
            "tail_slopes": self.slopes,
            "note": self.note,
        }

    def to_csv(self) -> str:
        rows = self.rows()
        cols = list(rows[0])
        lines = [",".join(cols)]
        for r in rows:
            lines.append(",".join(repr(r[c]) for c in cols))
        return "\n".join(lines) + "\n"


def _ball_volume(m: int, R: float) -> float:
    return pi**m * R ** (2 * m) / factorial(m)


def _sample_shell(rng, m: int, r0: float, r1: float, count: int):
    """Draw ``count`` points in the shell r0 <= |w| <= r1 of C^m from a defensive mixture.

    Half the points are uniform in the shell, half have ``log(1 + |w|^2)``
    uniform; returns the points and the mixture density at each point.
    """
    half = count // 2
    rest = count - half
    d = 2 * m
    # uniform in volume
    u = rng.random(half)
    r_u = (r0**d + u * (r1**d - r0**d)) ** (1.0 / d)
    # log-radial
    v = rng.random(rest)
    a0, a1 = np.log1p(r0**2), np.log1p(r1**2)
    r_l = np.sqrt(np.expm1(a0 + v * (a1 - a0)))
    r = np.concatenate([r_u, r_l])
    g = rng.standard_normal((count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    w = (g[:, :m] + 1j * g[:, m:]) * r[:, None]
    vol = _ball_volume(m, r1) - _ball_volume(m, r0)
    sphere = 2 * pi**m / factorial(m - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        q_log = 2 * r / ((1 + r**2) * (a1 - a0)) / (sphere * r ** (d - 1))
    q = 0.5 / vol + 0.5 * q_log
    return w, q, half


def _mis_estimate(vals: np.ndarray, half: int):
    # balance-heuristic estimate with a fixed split between the two components
    a, b = vals[:half], vals[half:]
    est = 0.5 * a.mean() + 0.5 * b.mean()
    var = 0.25 * (a.var(ddof=1) / len(a) + b.var(ddof=1) / len(b))
    return float(est), float(np.sqrt(var))


def _slope(v0, v1, r0, r1) -> float:
    if v0 <= 0 or v1 <= 0:
        return float("inf")
    return log(v1 / v0) / log(r1 / r0)


def volume_probe(
    sub: EmbeddedSubmanifold,
    projection_coords=None,
    radii=DEFAULT_RADII,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    weight_lambda=None,
) -> VolumeProbeReport:
    """Compare ``vol_g`` with the Euclidean volume of the projection over a radius ladder.

    The region at radius ``R`` is the part of the submanifold whose projection
    ``w = pi(phi(u))`` satisfies ``|w| <= R``.  The projection restricted to
    the submanifold must be linear in the parameters, with invertible linear
    part (the graph form given by restricted Bochner coordinates).  Shell
    integrals are accumulated, so both sequences are non-decreasing.
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])) or radii[0] <= 0:
        raise ObstructionError("radii must be positive and strictly increasing")
    if samples < 4:
        raise ObstructionError("need at least 4 samples per radius")
    coords = _projection(sub, projection_coords)
    proj = HoloMap([sub.embedding.components[c] for c in coords])
    A = proj.linear_part()
    if _rank(A, proj.mode) < sub.m:
        raise ObstructionError("projection is not open at the origin (degenerate Jacobian)")
    lin = HoloMap.linear(A, proj.order, proj.mode)
    if not all((c - l).is_zero() for c, l in zip(proj.components, lin.components)):
        raise ObstructionError("projection of the embedding must be linear in the parameters")
    if weight_lambda is None:
        if sub.lam is None:
            raise ObstructionError("submanifold is not Kahler-Einstein; pass weight_lambda")
        weight_lambda = sub.lam
    lam = float(complex(weight_lambda).real) if not isinstance(weight_lambda, (int, float, Fraction)) else float(weight_lambda)
    A_inv = np.array([[complex(x) for x in row] for row in matrix_inverse(A, proj.mode)])
    m = sub.m
    rng_seeds = np.random.SeedSequence(seed).spawn(len(radii))
    vol_g, vol_e, se_g, se_e = [], [], [], []
    acc_g = acc_e = var_g = var_e = 0.0
    r_prev = 0.0
    for R, ss in zip(radii, rng_seeds):
        rng = np.random.default_rng(ss)
        w, q, half = _sample_shell(rng, m, r_prev, R, samples)
        u = w @ A_inv.T
        Z = sub.embedding.evaluate(u)
        if sub.ambient.domain_radius < np.inf:
            if not (np.sum(np.abs(Z) ** 2, axis=-1) < sub.ambient.domain_radius**2).all():
                raise ObstructionError("radius ladder leaves the model's domain")
        D = np.real(sub.ambient.evaluate(Z))
        weight = np.exp(-0.5 * lam * D)
        eg, sg = _mis_estimate(weight / q, half)
        ee, se = _mis_estimate(1.0 / q, half)
        acc_g += eg
        acc_e += ee
        var_g += sg**2
        var_e += se**2
        vol_g.append(acc_g)
        vol_e.append(acc_e)
        se_g.append(float(np.sqrt(var_g)))
        se_e.append(float(np.sqrt(var_e)))
        r_prev = R
    exact_e = [_ball_volume(m, R) for R in radii]
    incr = [None] + [(b - a) / a if a > 0 else None for a, b in zip(vol_g, vol_g[1:])]
    # the weight is >= 1 only when lambda <= 0 (D >= 0 by condition (A))
    if lam <= 0:
        dom = [bool(g_ >= e_ - 3 * np.hypot(sg_, se_)) for g_, e_, sg_, se_ in zip(vol_g, vol_e, se_g, se_e)]
    else:
        dom = [None] * len(radii)
    if len(radii) >= 2:
        sl_g = _slope(vol_g[-2], vol_g[-1], radii[-2], radii[-1])
        sl_e = _slope(vol_e[-2], vol_e[-1], radii[-2], radii[-1])
    else:
        sl_g = sl_e = float("nan")
    g_div = sl_g >= DIVERGENCE_SLOPE
    e_div = sl_e >= DIVERGENCE_SLOPE
    if g_div and e_div:
        verdict = "both-divergent"
    elif e_div:
        verdict = "vol_g-bounded-proj-divergent"
    elif not g_div:
        verdict = "both-bounded"
    else:
        verdict = "vol_g-divergent-proj-bounded"
    _check_monotone(vol_g, vol_e)
    return VolumeProbeReport(
        radii=radii,
        vol_g=vol_g,
        vol_g_se=se_g,
        vol_eucl_proj=vol_e,
        vol_eucl_proj_se=se_e,
        vol_eucl_exact=exact_e,
        weight_lambda=lam,
        samples=samples,
        seed=seed,
        verdict=verdict,
        slopes={"vol_g": sl_g, "vol_eucl_proj": sl_e, "threshold": DIVERGENCE_SLOPE},
        domination=dom,
        increments=incr,
    )


def _check_monotone(*seqs):
    for s in seqs:
        if any(b < a for a, b in zip(s, s[1:])):
            raise AssertionError("volume estimates must be non-decreasing in R")


def torus_b2_witness(n: int = 1, lattice_basis=None) -> dict:
    """Fundamental domain of ``C^n / Lambda`` for the flat metric.

    ``lattice_basis`` is a list of ``2n`` real vectors of length ``2n``
    (default: the unit lattice).  The Euclidean volume ``|det|`` is exact,
    so condition (B2) fails while the flat metric has ``lambda = 0``.
    """
    size = 2 * n
    if lattice_basis is None:
        lattice_basis = [[1 if i == j else 0 for j in range(size)] for i in range(size)]
    M = [[Fraction(x) for x in row] for row in lattice_basis]
    if len(M) != size or any(len(r) != size for r in M):
        raise ObstructionError(f"lattice basis must be {size} x {size}")
    vol = abs(_exact_det(M))
    if vol == 0:
        raise ObstructionError("lattice basis is degenerate")
    model = flat(n)
    rep = model.einstein
    return {
        "model": "flat",
        "dim": n,
        "euclidean_volume": vol,
        "lambda": rep.lam,
        "is_einstein": rep.is_einstein_to_order,
        "condition_B2": False,
        "condition_B2_reason": "fundamental domain has finite Euclidean volume",
        "consistent_with": "lambda = 0: first Chern class is not positive",
    }


def _exact_det(M) -> Fraction:
    a = [list(r) for r in M]
    n = len(a)
    sign = 1
    out = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            sign = -sign
        out *= a[c][c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return sign * out


def builtin_embedding(name: str, dim_out: int = 2, order: int = 8) -> HoloMap:
    """Named polynomial embeddings used by the CLI and tests.

    ``identity`` is the identity of ``C^dim_out``.  The curves map into
    ``C^2``: ``line`` is ``u -> (u, 0)``, ``conic`` is ``u -> (sqrt2 u, u^2)``
    (twice Fubini-Study on ``CP^1`` when pulled back from ``CP^2``) and
    ``cubic`` is ``u -> (u, u^3)``.
    """
    from .surd import sqrt_rational

    if name == "identity":
        return HoloMap.identity(dim_out, order)
    polys = {
        "line": [{(1,): 1}, {}],
        "conic": [{(1,): sqrt_rational(2)}, {(2,): 1}],
        "cubic": [{(1,): 1}, {(3,): 1}],
    }
    if name not in polys:
        raise ObstructionError(f"unknown embedding {name!r}; choose from {', '.join(BUILTIN_EMBEDDINGS)}")
    if dim_out != 2:
        raise ObstructionError(f"embedding {name!r} maps into C^2, the ambient model has dimension {dim_out}")
    return HoloMap.from_polynomials(1, order, polys[name])


BUILTIN_EMBEDDINGS = ("identity", "line", "conic", "cubic")
