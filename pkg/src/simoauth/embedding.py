"""One-bit tag embedding on top of the message constellation.

Each message symbol splits into two transmit points: the bare symbol (tag
bit 0) and a boosted copy whose receive variance is scaled by exp(k_i) with
0 < k_i < ln R.  That bound keeps the boosted point of symbol i strictly
below the bare point of symbol i+1, so the merged ladder stays ordered and
the two-step detector (message cell, then tag bit within the cell) is the
exact ML rule.  All error formulas below are sums of chi-squared tail masses
and stay accurate down to denormal probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .constellation import MessageConstellation, pair_threshold, quantize_energy
from .numerics import chi2_cdf, chi2_sf

if TYPE_CHECKING:  # pragma: no cover
    from .simulate import SerEstimate

__all__ = [
    "TagEmbedding",
    "ErrorReport",
    "build_embedding",
    "tag_power",
    "detect",
    "message_ser_embedded",
    "tag_ser_analytic",
    "message_ser_upper",
    "error_report",
    "uniform_embedding",
    "uniform_power_for_message_ser",
]


@dataclass(frozen=True, eq=False)
class TagEmbedding:
    """Embedded two-point-per-symbol modulation with its detector thresholds."""

    base: MessageConstellation
    log_ratios: np.ndarray      # ln(var_tag1 / var_tag0) per symbol
    var_tag0: np.ndarray        # receive variance with tag bit 0 (no tag power)
    var_tag1: np.ndarray        # receive variance with tag bit 1
    msg_thresholds: np.ndarray  # message boundaries of the embedded ladder
    tag_thresholds: np.ndarray  # per-symbol boundary separating the two tag points
    symbol_ok: np.ndarray       # per-symbol structural validity (0 < k_i < ln R)

    @property
    def order(self) -> int:
        return len(self.var_tag0)

    @property
    def ratios(self) -> np.ndarray:
        return np.exp(self.log_ratios)

    @property
    def tag_symbol_powers(self) -> np.ndarray:
        """|t_{i,2}|^2: extra transmit power of each boosted point."""
        return self.var_tag1 - self.var_tag0

    @property
    def detector_ok(self) -> bool:
        """True when the message thresholds are strictly increasing."""
        return bool(np.all(np.diff(self.msg_thresholds) > 0))


def _assemble(base: MessageConstellation, log_ratios: np.ndarray, symbol_ok: np.ndarray) -> TagEmbedding:
    var0 = base.variances.copy()
    var1 = var0 * np.exp(log_ratios)
    msg_thr = pair_threshold(var1[:-1], var0[1:])  # symmetric, tolerates reversed pairs
    tag_thr = pair_threshold(var0, var1)
    for arr in (log_ratios, var0, var1, msg_thr, tag_thr, symbol_ok):
        arr.setflags(write=False)
    return TagEmbedding(
        base=base,
        log_ratios=log_ratios,
        var_tag0=var0,
        var_tag1=var1,
        msg_thresholds=np.atleast_1d(msg_thr),
        tag_thresholds=np.atleast_1d(tag_thr),
        symbol_ok=symbol_ok,
    )


def build_embedding(base: MessageConstellation, log_ratios) -> TagEmbedding:
    """Validated embedding from per-symbol log power ratios.

    Rejects any k_i outside the open box (0, ln R); inside it the interleaving
    var0_i < tag_thr_i < var1_i < msg_thr_i < var0_{i+1} holds automatically
    and is re-checked here.
    """
    k = np.array(log_ratios, dtype=float)
    if k.shape != (base.order,):
        raise ValueError(f"log_ratios must have shape ({base.order},)")
    hi = base.log_step
    for i, ki in enumerate(k):
        if not np.isfinite(ki) or ki <= 0:
            raise ValueError(f"log_ratios[{i}] = {ki!r} violates the lower bound 0")
        if ki >= hi:
            raise ValueError(f"log_ratios[{i}] = {ki!r} violates the upper bound ln(ratio) = {hi!r}")
    emb = _assemble(base, k, np.ones(base.order, dtype=bool))
    merged = np.empty(2 * base.order)
    merged[0::2] = emb.var_tag0
    merged[1::2] = emb.var_tag1
    cuts = np.empty(2 * base.order - 1)
    cuts[0::2] = emb.tag_thresholds
    cuts[1::2] = emb.msg_thresholds
    interleaved = np.empty(4 * base.order - 1)
    interleaved[0::2] = merged
    interleaved[1::2] = cuts
    if np.any(np.diff(interleaved) <= 0):
        raise ValueError("embedded ladder failed to interleave; log_ratios too extreme")
    return emb


def tag_power(emb: TagEmbedding) -> float:
    """Average transmit power spent on the tag (equiprobable symbols and bits)."""
    return float(np.sum(emb.tag_symbol_powers) / (2 * emb.order))


def detect(energy, emb: TagEmbedding):
    """Two-step decision: message cell against msg_thresholds, then tag bit.

    Returns (msg_index, tag_bit); vectorized over energy.  An energy exactly
    on a tag threshold resolves to bit 0.
    """
    if not emb.detector_ok:
        raise ValueError("embedding has non-increasing message thresholds; detector undefined")
    e = np.asarray(energy, dtype=float)
    idx = quantize_energy(e, emb.msg_thresholds)
    bit = (e > emb.tag_thresholds[idx]).astype(np.int64)
    if e.ndim == 0:
        return int(idx), int(bit)
    return idx, bit


def _require_detector(emb: TagEmbedding):
    if not emb.detector_ok:
        raise ValueError("embedding has non-increasing message thresholds; analysis undefined")


def message_ser_embedded(emb: TagEmbedding, n_antennas: int) -> float:
    """Exact message SER of the two-step detector, averaged over tag bits."""
    _require_detector(emb)
    n = int(n_antennas)
    b = emb.msg_thresholds
    order = emb.order
    total = 0.0
    for i in range(order):
        for var in (emb.var_tag0[i], emb.var_tag1[i]):
            mass = 0.0
            if i < order - 1:
                mass += chi2_sf(n, n * b[i] / var)
            if i > 0:
                mass += chi2_cdf(n, n * b[i - 1] / var)
            total += 0.5 * mass
    return total / order


def tag_ser_analytic(emb: TagEmbedding, n_antennas: int) -> float:
    """Tag bit error rate given correct message detection (small-error regime)."""
    _require_detector(emb)
    n = int(n_antennas)
    c = emb.tag_thresholds
    term = 0.5 * (chi2_sf(n, n * c / emb.var_tag0) + chi2_cdf(n, n * c / emb.var_tag1))
    return float(np.mean(term))


def message_ser_upper(emb: TagEmbedding, n_antennas: int) -> float:
    """Closed-form upper bound on the embedded message SER.

    Sum of both one-sided tail masses across each adjacent boosted/bare pair;
    it dominates the exact SER because every cell error is charged to one of
    its two boundaries without the offsetting inner terms.
    """
    _require_detector(emb)
    n = int(n_antennas)
    b = emb.msg_thresholds
    up = chi2_sf(n, n * b / emb.var_tag1[:-1])
    down = chi2_cdf(n, n * b / emb.var_tag0[1:])
    return float(np.sum(up + down) / emb.order)


@dataclass
class ErrorReport:
    """Analytic error rates of an embedding, optionally with empirical rates."""

    msg_ser: float
    tag_ser: float
    msg_ser_upper: float
    empirical_msg: "SerEstimate | None" = None
    empirical_tag: "SerEstimate | None" = None
    empirical_tag_uncond: "SerEstimate | None" = None

    def __post_init__(self):
        if self.msg_ser > self.msg_ser_upper + 1e-12:
            raise ValueError("message SER exceeds its upper bound; inconsistent report")


def error_report(emb: TagEmbedding, n_antennas: int) -> ErrorReport:
    return ErrorReport(
        msg_ser=message_ser_embedded(emb, n_antennas),
        tag_ser=tag_ser_analytic(emb, n_antennas),
        msg_ser_upper=message_ser_upper(emb, n_antennas),
    )


def uniform_embedding(base: MessageConstellation, t_power: float) -> TagEmbedding:
    """Baseline that spends the same absolute tag power on every symbol.

    Symbols where the implied log ratio leaves the open box (0, ln R) are
    flagged in symbol_ok instead of rejected, so the degenerate and
    structurally broken regimes remain representable.
    """
    if t_power < 0:
        raise ValueError("t_power must be nonnegative")
    k = np.log1p(t_power / base.variances)
    ok = (k > 0) & (k < base.log_step)
    return _assemble(base, k, ok)


def uniform_power_for_message_ser(base: MessageConstellation, n_antennas: int, target: float) -> float:
    """Uniform tag power whose embedded message SER equals ``target``.

    The embedded message SER increases with tag power, so a bisection over
    [0, variances[0] * (R - 1)) suffices.  Raises if the target is below the
    tag-free SER or out of reach within the structurally valid range.
    """
    if not 0 < target < 1:
        raise ValueError("target must lie in (0, 1)")
    lo, hi = 0.0, base.variances[0] * (base.ratio - 1.0) * (1 - 1e-9)

    def ser_at(tp):
        return message_ser_embedded(uniform_embedding(base, tp), n_antennas)

    if ser_at(lo) > target:
        raise ValueError("target below the tag-free message SER; unreachable")
    if ser_at(hi) < target:
        raise ValueError("target above the reachable message SER range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if ser_at(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)
