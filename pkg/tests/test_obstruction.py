from fractions import Fraction
from math import pi

import numpy as np
import pytest

from kahlerkit.models import flat, fubini_study, hyperbolic
from kahlerkit.obstruction import (
    ObstructionError,
    builtin_embedding,
    embed_submanifold,
    torus_b2_witness,
    verify_eqforms,
    volume_probe,
)
from kahlerkit.series import BiSeries, HoloMap
from kahlerkit.surd import Surd, sqrt_rational


def conic():
    return embed_submanifold(fubini_study(2), builtin_embedding("conic"))


def sample(rng, m=1, count=30, scale=0.8):
    return scale * (rng.uniform(-1, 1, (count, m)) + 1j * rng.uniform(-1, 1, (count, m)))


def test_conic_is_einstein_with_lambda_two():
    sub = conic()
    assert sub.lam == 2
    assert sub.factor_residual.is_zero()
    assert sub.induced == BiSeries.norm_squared(1, 8).log1p().scale(2)


def test_line_inherits_ambient_lambda():
    sub = embed_submanifold(fubini_study(2), builtin_embedding("line"))
    assert sub.lam == 4


def test_cubic_is_not_einstein():
    sub = embed_submanifold(fubini_study(2), builtin_embedding("cubic"))
    assert sub.lam is None
    assert sub.factor_residual is None
    with pytest.raises(ObstructionError):
        verify_eqforms(sub, [[0.1]])


def test_degenerate_differential_rejected():
    m = HoloMap.from_polynomials(1, 8, [{(2,): 1}, {(3,): 1}])
    with pytest.raises(ObstructionError, match="degenerate"):
        embed_submanifold(fubini_study(2), m)


def test_eqforms_residual(rng):
    assert verify_eqforms(conic(), sample(rng)) < 1e-10
    sub = embed_submanifold(hyperbolic(), HoloMap.identity(1, 8))
    assert verify_eqforms(sub, sample(rng, scale=0.6)) < 1e-10


def test_eqforms_unitary_invariance(rng):
    i = Surd.imag_unit()
    rotated = HoloMap.from_polynomials(1, 8, [{(1,): i * sqrt_rational(2)}, {(2,): -1}])
    sub2 = embed_submanifold(fubini_study(2), rotated)
    u = sample(rng)
    r1 = verify_eqforms(conic(), 1j * u)
    r2 = verify_eqforms(sub2, u)
    assert abs(r1 - r2) < 1e-12


def test_eqforms_requires_bochner_projection():
    sub = conic()
    with pytest.raises(ObstructionError):
        verify_eqforms(sub, [[0.1]], projection_coords=[1])


def test_probe_conic_trend():
    rep = volume_probe(conic(), radii=[1, 2, 4, 8, 16, 32, 64], samples=20_000, seed=3)
    assert rep.verdict == "vol_g-bounded-proj-divergent"
    # vol_g(R) = 2 pi s / (1 + s), s = R^2 / 2, in w = sqrt2 u
    for R, v, se in zip(rep.radii, rep.vol_g, rep.vol_g_se):
        s = R * R / 2
        assert abs(v - 2 * pi * s / (1 + s)) < 5 * se + 1e-3
    assert all(b >= a for a, b in zip(rep.vol_g, rep.vol_g[1:]))
    assert all(x is None for x in rep.domination)


def test_probe_flat_control_domination():
    sub = embed_submanifold(flat(1), HoloMap.identity(1, 8))
    rep = volume_probe(sub, samples=5000, seed=1)
    assert rep.verdict == "both-divergent"
    assert all(rep.domination)


def test_probe_negative_weight_dominates():
    # lambda < 0 weight on the flat chart: e^(2|w|^2) >= 1
    sub = embed_submanifold(flat(1), HoloMap.identity(1, 8))
    rep = volume_probe(sub, radii=[0.5, 1.0], samples=5000, seed=2, weight_lambda=-4)
    assert all(rep.domination)


def test_probe_is_seeded():
    a = volume_probe(conic(), radii=[1, 2], samples=1000, seed=7)
    b = volume_probe(conic(), radii=[1, 2], samples=1000, seed=7)
    assert a.to_dict() == b.to_dict()
    assert a.to_csv().splitlines()[0].startswith("R,")


def test_probe_input_validation():
    sub = conic()
    with pytest.raises(ObstructionError):
        volume_probe(sub, radii=[2, 1])
    with pytest.raises(ObstructionError):
        volume_probe(sub, projection_coords=[1])
    cubic = embed_submanifold(fubini_study(2), builtin_embedding("cubic"))
    with pytest.raises(ObstructionError):
        volume_probe(cubic, radii=[1])
    hyp = embed_submanifold(hyperbolic(), HoloMap.identity(1, 8))
    with pytest.raises(ObstructionError, match="domain"):
        volume_probe(hyp, radii=[0.5, 2.0], samples=100)


def test_torus_witness():
    rep = torus_b2_witness()
    assert rep["euclidean_volume"] == Fraction(1)
    assert rep["lambda"] == 0
    assert rep["condition_B2"] is False
    assert torus_b2_witness(1, [[2, 0], [1, 3]])["euclidean_volume"] == 6
    with pytest.raises(ObstructionError):
        torus_b2_witness(1, [[1, 1], [1, 1]])
