"""Truncated bidegree power series and Calabi's diastasis machinery."""

__version__ = "0.1.0"

from .kahler import (
    CONVENTIONS,
    BochnerResult,
    EinsteinReport,
    KahlerError,
    MetricJet,
    bochner_normalize,
    diastasis_from_potential,
    einstein_check,
    is_bochner_form,
    is_diastasis,
    metric_from_potential,
    pullback_potential,
    ricci_potential,
    volume_factor_check,
)
from .models import ModelSpec, flat, fubini_study, get_model, hyperbolic, product_fs
from .obstruction import (
    EmbeddedSubmanifold,
    ObstructionError,
    VolumeProbeReport,
    builtin_embedding,
    embed_submanifold,
    torus_b2_witness,
    verify_eqforms,
    volume_probe,
)
from .polarization import (
    KodairaMap,
    PolarizationError,
    SectionBasis,
    bergman_diastasis,
    check_condition_C,
    check_condition_D,
    gram_matrix,
    kodaira_map,
    monomial_basis,
    monomial_inner,
    product_basis,
    quadrature_inner,
)
from .series import BiSeries, HoloMap, SeriesError, compose, det, invert_map
from .surd import Surd, sqrt_rational
