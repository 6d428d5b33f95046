"""Physical-layer message authentication for non-coherent massive-antenna links.

The receiver sees only the energy of each faded symbol, so both the message
and a one-bit-per-symbol authentication tag are carried in transmit power
levels.  This package designs the power constellation, embeds and detects
tags, evaluates the error rates in closed form, optimizes the per-symbol tag
powers under message-quality and power-budget constraints, and validates
everything with seeded Monte Carlo simulation.
"""

from .constellation import (
    MessageConstellation,
    SystemConfig,
    design_constellation,
    detect_message,
    message_ser_analytic,
    message_thresholds,
    pair_threshold,
    quantize_energy,
    solve_ratio,
)
from .embedding import (
    ErrorReport,
    TagEmbedding,
    build_embedding,
    detect,
    error_report,
    message_ser_embedded,
    message_ser_upper,
    tag_power,
    tag_ser_analytic,
    uniform_embedding,
    uniform_power_for_message_ser,
)
from .numerics import RngStream, chi2_cdf, chi2_sf, max_clamp_violation, sample_received_energy
from .optimize import (
    AllocationResult,
    EmbeddingProblem,
    InfeasibleError,
    SolveResult,
    SolverError,
    TradeoffPoint,
    allocate_power,
    constraint_functions,
    objective_and_derivatives,
    optimized_embedding,
    solve_embedding,
    tagfree_msg_ser_bound,
    tradeoff_curve,
)
from .simulate import (
    AuthPacket,
    AuthResult,
    PacketStats,
    SerEstimate,
    SimConfig,
    authenticate_roundtrip,
    keyed_tag_bits,
    make_packet,
    measure_error_report,
    reproduce_fig3,
    simulate_packets,
    simulate_ser,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "SystemConfig",
    "MessageConstellation",
    "solve_ratio",
    "pair_threshold",
    "message_thresholds",
    "design_constellation",
    "quantize_energy",
    "detect_message",
    "message_ser_analytic",
    "TagEmbedding",
    "build_embedding",
    "uniform_embedding",
    "uniform_power_for_message_ser",
    "tag_power",
    "detect",
    "message_ser_embedded",
    "tag_ser_analytic",
    "message_ser_upper",
    "ErrorReport",
    "error_report",
    "chi2_cdf",
    "chi2_sf",
    "max_clamp_violation",
    "RngStream",
    "sample_received_energy",
    "EmbeddingProblem",
    "InfeasibleError",
    "SolverError",
    "SolveResult",
    "solve_embedding",
    "objective_and_derivatives",
    "constraint_functions",
    "tagfree_msg_ser_bound",
    "AllocationResult",
    "allocate_power",
    "TradeoffPoint",
    "tradeoff_curve",
    "optimized_embedding",
    "SimConfig",
    "SerEstimate",
    "wilson_interval",
    "simulate_ser",
    "measure_error_report",
    "AuthPacket",
    "AuthResult",
    "PacketStats",
    "keyed_tag_bits",
    "make_packet",
    "authenticate_roundtrip",
    "simulate_packets",
    "reproduce_fig3",
]
