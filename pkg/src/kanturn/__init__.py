"""kanturn: exact Kantorovich distances for urn models, with draw channels
that provably preserve them and an experiment harness for the limit laws."""

from .core import (
    Dist,
    Multiset,
    Space,
    acc,
    acc_preimage,
    arr,
    as_rational,
    binom,
    channel_compose,
    coefm,
    dist_flatten,
    dist_unit,
    enumerate_msets,
    enumerate_sub_msets,
    flrn,
    format_rational,
    iid,
    kleisli_push,
    klin,
    mix,
    mset_tensor,
    multichoose,
    prm,
    tensor,
    tensor_tuple,
    validity,
    variance,
)
from .draws import (
    DrawDist,
    dd,
    hypergeometric,
    hypergeometric_via_dd,
    kl_divergence,
    kl_multinomial_check,
    mn_moment,
    multinomial,
    multinomial_pmf,
    mzip,
    mzip_naive_distance,
    pd,
    pml,
    polya,
    polya_via_seqpolya,
    psa,
    seqpolya,
)
from .metric import (
    GroundMetric,
    MetricError,
    MsetDistanceCache,
    MsetTransport,
    TransportResult,
    couplings_enumerate,
    dcpl,
    diameter,
    fractionality_check,
    kantorovich,
    kantorovich_cost,
    mset_kantorovich,
    mset_kantorovich_enumerated,
    nested_kantorovich,
    sum_metric,
    tuple_dist,
    tvd,
    tvd_bound_check,
    tvd_coupling,
    validate_metric,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
