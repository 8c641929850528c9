"""Catalog of model diastases: Fubini-Study, products, flat, hyperbolic.

Each entry carries a series generator, a closed-form numeric evaluator and
the status of the global conditions used by the volume obstruction:

* (A)  the diastasis is globally defined and non-negative;
* (B)  Bochner coordinates (here the chart coordinates) are global;
* (B2) the chart has infinite Euclidean volume.

Einstein constants are never hard-coded: :attr:`ModelSpec.expected_lambda`
runs :func:`~kahlerkit.kahler.einstein_check` in exact mode.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .kahler import EinsteinReport, einstein_check
from .series import BiSeries

__all__ = ["ModelSpec", "fubini_study", "product_fs", "flat", "hyperbolic", "get_model", "MODEL_NAMES"]

LAMBDA_CHECK_ORDER = 6


@dataclass(frozen=True)
class ModelSpec:
    name: str
    dim: int
    generator: Callable[[int], BiSeries] = field(repr=False, compare=False)
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    metric_evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False, compare=False)
    order: int
    condition_A: bool
    condition_A_reason: str
    condition_B: bool
    condition_B2: bool
    domain_radius: float = float("inf")
    notes: tuple = ()
    params: tuple = ()

    @cached_property
    def diastasis(self) -> BiSeries:
        return self.generator(self.order)

    def series(self, order: int | None = None) -> BiSeries:
        return self.generator(self.order if order is None else order)

    def evaluate(self, points) -> np.ndarray:
        """Closed-form diastasis at complex points of shape ``(..., dim)``."""
        return self.evaluator(np.asarray(points, dtype=complex))

    def metric(self, points) -> np.ndarray:
        """Closed-form ``g_{a bbar}`` at points of shape ``(..., dim)``; result ``(..., dim, dim)``."""
        return self.metric_evaluator(np.asarray(points, dtype=complex))

    @cached_property
    def einstein(self) -> EinsteinReport:
        return einstein_check(self.generator(max(LAMBDA_CHECK_ORDER, 4)), LAMBDA_CHECK_ORDER)

    @property
    def expected_lambda(self):
        """Einstein constant computed in exact mode, or ``None`` if not Einstein."""
        rep = self.einstein
        return rep.lam if rep.is_einstein_to_order else None

    def to_dict(self) -> dict:
        from .jsonio import render_number

        lam = self.expected_lambda
        return {
            "name": self.name,
            "dim": self.dim,
            "params": list(self.params),
            "order": self.order,
            "expected_lambda": render_number(lam) if lam is not None else None,
            "condition_A": self.condition_A,
            "condition_A_reason": self.condition_A_reason,
            "condition_B": self.condition_B,
            "condition_B2": self.condition_B2,
            "notes": list(self.notes),
        }


def _norm2(z: np.ndarray, lo=0, hi=None) -> np.ndarray:
    return np.sum(np.abs(z[..., lo:hi]) ** 2, axis=-1)


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    r, s = a.shape[-1], b.shape[-1]
    out = np.zeros(a.shape[:-2] + (r + s, r + s), dtype=complex)
    out[..., :r, :r] = a
    out[..., r:, r:] = b
    return out


def _fs_metric(z: np.ndarray, sign: int = 1) -> np.ndarray:
    # d_a dbar_b of sign*log(1 + sign*|z|^2)
    t = _norm2(z)[..., None, None]
    eye = np.eye(z.shape[-1])
    outer = np.conj(z)[..., :, None] * z[..., None, :]
    return eye / (1 + sign * t) - sign * outer / (1 + sign * t) ** 2


def fubini_study(n: int, order: int = 8) -> ModelSpec:
    """``log(1 + sum |u_j|^2)`` in the affine chart around ``[1, 0, ..., 0]``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return ModelSpec(
        name="fubini_study",
        dim=n,
        generator=lambda N: BiSeries.norm_squared(n, N).log1p(),
        evaluator=lambda z: np.log1p(_norm2(z)),
        metric_evaluator=_fs_metric,
        order=order,
        condition_A=True,
        condition_A_reason="log(1+|u|^2) is defined on the whole affine chart and is >= 0",
        condition_B=True,
        condition_B2=True,
        params=(n,),
    )


def product_fs(r: int, s: int, order: int = 8) -> ModelSpec:
    """CP^r x CP^s with the sum metric: sum of the two factor diastases."""
    if r < 1 or s < 1:
        raise ValueError("r and s must be >= 1")
    n = r + s

    def gen(N):
        a = BiSeries.norm_squared(n, N, indices=range(r)).log1p()
        b = BiSeries.norm_squared(n, N, indices=range(r, n)).log1p()
        return a + b

    return ModelSpec(
        name="product_fs",
        dim=n,
        generator=gen,
        evaluator=lambda z: np.log1p(_norm2(z, 0, r)) + np.log1p(_norm2(z, r, None)),
        metric_evaluator=lambda z: _block_diag(_fs_metric(z[..., :r]), _fs_metric(z[..., r:])),
        order=order,
        condition_A=True,
        condition_A_reason="sum of two non-negative globally defined factor diastases",
        condition_B=True,
        condition_B2=True,
        notes=(
            "diastasis taken as log(1+sum_{l<=r}|u_l|^2) + log(1+sum_{l>r}|u_l|^2) (additivity for products); "
            "the single-logarithm formula log(1+sum_{l<=r+s}|u_l|^2) is the Fubini-Study diastasis of CP^(r+s), "
            "not of the product",
        ),
        params=(r, s),
    )


def flat(n: int, order: int = 8) -> ModelSpec:
    """Flat ``sum |z_j|^2``: the torus, where (B2) fails (finite fundamental domain)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return ModelSpec(
        name="flat",
        dim=n,
        generator=lambda N: BiSeries.norm_squared(n, N),
        evaluator=lambda z: _norm2(z).astype(complex),
        metric_evaluator=lambda z: np.broadcast_to(np.eye(n, dtype=complex), z.shape[:-1] + (n, n)).copy(),
        order=order,
        condition_A=True,
        condition_A_reason="|z|^2 >= 0 on the universal cover",
        condition_B=True,
        condition_B2=False,
        notes=("on the torus C^n/Z^2n the fundamental domain has Euclidean volume 1, so (B2) fails",),
        params=(n,),
    )


def hyperbolic(order: int = 8) -> ModelSpec:
    """Unit disc with ``-log(1 - |z|^2)``; uniformizes genus >= 2 surfaces."""

    def gen(N):
        return -(BiSeries.norm_squared(1, N).scale(-1).log1p())

    def ev(z):
        return -np.log1p(-_norm2(z)).astype(complex)

    return ModelSpec(
        name="hyperbolic",
        dim=1,
        generator=gen,
        evaluator=ev,
        metric_evaluator=lambda z: _fs_metric(z, sign=-1),
        order=order,
        condition_A=True,
        condition_A_reason="-log(1-t) has positive Taylor coefficients, so D >= 0 on the disc",
        condition_B=True,
        condition_B2=False,
        domain_radius=1.0,
        notes=("a fundamental domain of a genus >= 2 surface has finite volume, so (B2) fails",),
        params=(),
    )


MODEL_NAMES = ("fubini_study", "product_fs", "flat", "hyperbolic")


def get_model(name: str, dim: int | None = None, order: int = 8, r: int | None = None, s: int | None = None) -> ModelSpec:
    if name == "fubini_study":
        return fubini_study(dim or 1, order)
    if name == "flat":
        return flat(dim or 1, order)
    if name == "hyperbolic":
        if dim not in (None, 1):
            raise ValueError("the hyperbolic model is one-dimensional")
        return hyperbolic(order)
    if name == "product_fs":
        if r is None or s is None:
            if dim is None or dim < 2:
                raise ValueError("product_fs needs r and s (or dim >= 2, split evenly)")
            r = dim // 2
            s = dim - r
        return product_fs(r, s, order)
    raise ValueError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
