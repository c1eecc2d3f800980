"""Compact ultrametric products with prescribed coarse measure behavior.

The package builds product sets K = prod_k {1, ..., n_k} under the
first-difference ultrametric whose gauge-weighted cover and packing
values stay positive and finite for a user-supplied gauge pair, and
ships the machinery to check that claim: exact premeasure recursions
with brute-force oracles, density streams of the uniform mass, scale
bracketing along one-parameter gauge families, and a bi-Lipschitz-like
embedding with certified distortion bounds.
"""

from .enclosure import LogReal, Pow2, DEFAULT_PRECISION
from .errors import (CantorScalesError, DepthLimitError,
                     DominationViolatedError, InvalidParameterError,
                     InvalidSpecError, OutOfDepthError, TooLargeError,
                     UndefinedRatioError)
from .gauge import (DominationCertificate, Gauge, HalfArgumentGauge,
                    IteratedGauge, PowerGauge, ScaledGauge, ScalingFamily,
                    SeparationReport, check_domination, eval_log_at_level,
                    make_iterated_gauge, make_power_gauge, parse_gauge,
                    scaling_member, scaling_separation_trend)
from .seqbuild import (ConstructionResult, DivisibilityChain, Envelope,
                       OscillationSchedule, TargetSequences,
                       branching_from_chain, build_chain, build_envelope,
                       construct_prescribed_product, gauges_for_scale_pair,
                       oscillation_times, targets_from_gauges,
                       targets_from_values)
from .product import (CompactProduct, DensityStream, PointPrefix,
                      StreamExtrema, density_ratio_stream,
                      density_stream_csv, first_differing_index,
                      level_of_radius, stream_extrema, ultrametric_distance,
                      window_liminf, window_limsup)
from .measure import (MeasureReport, PremeasureValue, Pow2Sum,
                      TruncationWindow, cover_oracle, hausdorff_premeasure,
                      measure_via_density, pack_oracle, packing_premeasure,
                      premeasure_csv, premeasure_rows)
from .scale import (LocalScaleEstimate, ScaleEstimate, ScaleSearch,
                    check_scale_order, classify_gauge_on_product,
                    construction_window, estimate_hausdorff_scale,
                    estimate_local_scales, estimate_packing_scale,
                    order_check_details)
from .embed import (DistortionRecord, EmbeddedPoint, distortion_ratio,
                    embed_prefix, embedded_distance, sample_distortion_pairs,
                    sample_split_pair, verify_distortion_bounds)

__version__ = "0.1.0"

__all__ = [
    "LogReal", "Pow2", "DEFAULT_PRECISION",
    "CantorScalesError", "DepthLimitError", "DominationViolatedError",
    "InvalidParameterError", "InvalidSpecError", "OutOfDepthError",
    "TooLargeError", "UndefinedRatioError",
    "DominationCertificate", "Gauge", "HalfArgumentGauge", "IteratedGauge",
    "PowerGauge", "ScaledGauge", "ScalingFamily", "SeparationReport",
    "check_domination", "eval_log_at_level", "make_iterated_gauge",
    "make_power_gauge", "parse_gauge", "scaling_member",
    "scaling_separation_trend",
    "ConstructionResult", "DivisibilityChain", "Envelope",
    "OscillationSchedule", "TargetSequences", "branching_from_chain",
    "build_chain", "build_envelope", "construct_prescribed_product",
    "gauges_for_scale_pair", "oscillation_times", "targets_from_gauges",
    "targets_from_values",
    "CompactProduct", "DensityStream", "PointPrefix", "StreamExtrema",
    "density_ratio_stream", "density_stream_csv", "first_differing_index",
    "level_of_radius", "stream_extrema", "ultrametric_distance",
    "window_liminf", "window_limsup",
    "MeasureReport", "PremeasureValue", "Pow2Sum", "TruncationWindow",
    "cover_oracle", "hausdorff_premeasure", "measure_via_density",
    "pack_oracle", "packing_premeasure", "premeasure_csv", "premeasure_rows",
    "LocalScaleEstimate", "ScaleEstimate", "ScaleSearch", "check_scale_order",
    "classify_gauge_on_product", "construction_window",
    "estimate_hausdorff_scale", "estimate_local_scales",
    "estimate_packing_scale", "order_check_details",
    "DistortionRecord", "EmbeddedPoint", "distortion_ratio", "embed_prefix",
    "embedded_distance", "sample_distortion_pairs", "sample_split_pair",
    "verify_distortion_bounds",
]
