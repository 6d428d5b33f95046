"""Non-negative PAM constellation design for non-coherent energy detection.

The receiver only sees per-antenna average energy, so the message alphabet is
a ladder of symbol powers chosen to make the receive variances
``A_i = |m_i|^2 + sigma2`` geometric with common ratio R > 1.  Under that law
the maximum-likelihood detector reduces to quantizing the received energy
against fixed per-pair boundaries, and symbol error probabilities have closed
forms in the chi-squared CDF.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .numerics import chi2_cdf, chi2_sf

__all__ = [
    "SystemConfig",
    "MessageConstellation",
    "solve_ratio",
    "design_constellation",
    "message_thresholds",
    "pair_threshold",
    "quantize_energy",
    "detect_message",
    "message_ser_analytic",
]


@dataclass(frozen=True)
class SystemConfig:
    """Operating point shared by design, optimization and simulation."""

    n_antennas: int
    sigma2: float
    msg_order: int
    total_power: float
    max_msg_ser: float
    msg_power: float | None = None

    def __post_init__(self):
        if int(self.n_antennas) < 1:
            raise ValueError("n_antennas must be a positive integer")
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if int(self.msg_order) < 2:
            raise ValueError("msg_order must be at least 2")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        if not 0 < self.max_msg_ser < 1:
            raise ValueError("max_msg_ser must lie in (0, 1)")
        if self.msg_power is not None:
            if not self.msg_power > 0:
                raise ValueError("msg_power must be positive (message SNR must be positive)")
            if self.msg_power > self.total_power:
                raise ValueError("msg_power cannot exceed total_power")

    @property
    def msg_snr(self) -> float:
        if self.msg_power is None:
            raise ValueError("msg_power is not set")
        return self.msg_power / self.sigma2


@dataclass(frozen=True, eq=False)
class MessageConstellation:
    """Designed message alphabet: symbol powers plus detector boundaries."""

    powers: np.ndarray      # |m_i|^2, powers[0] == 0, strictly increasing
    ratio: float            # common ratio of the receive-variance ladder
    sigma2: float
    thresholds: np.ndarray  # decision boundaries on ||y||^2 / n, length order-1

    @property
    def variances(self) -> np.ndarray:
        """Per-antenna receive variance for each symbol: powers + sigma2."""
        return self.powers + self.sigma2

    @property
    def order(self) -> int:
        return len(self.powers)

    @property
    def log_step(self) -> float:
        """ln(ratio): the width of the admissible per-symbol tag range."""
        return float(np.log(self.ratio))


def solve_ratio(msg_order: int, msg_snr: float) -> float:
    """Variance ratio R > 1 with sum_{j<order} R^j = order * (msg_snr + 1)."""
    order = int(msg_order)
    if order < 2:
        raise ValueError("msg_order must be at least 2")
    if not msg_snr > 0:
        raise ValueError("msg_snr must be positive")
    target = order * (msg_snr + 1.0)

    def residual(r):
        return np.sum(r ** np.arange(order)) - target

    # residual is strictly increasing in r; target > order pins the root above 1
    lo, hi = 1.0 + 1e-9, target
    return float(brentq(residual, lo, hi, xtol=1e-13, rtol=4e-15, maxiter=200))


def pair_threshold(var_low: float, var_high: float):
    """ML decision boundary between two receive variances.

    Energy below the boundary favors var_low.  Stable for nearly equal
    variances (log1p form) and symmetric in its arguments.
    """
    a = np.asarray(var_low, dtype=float)
    b = np.asarray(var_high, dtype=float)
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("variances must be positive")
    diff = b - a
    with np.errstate(invalid="ignore"):
        out = np.where(diff == 0, a, a * b * np.log1p(diff / a) / np.where(diff == 0, 1.0, diff))
    return float(out) if out.ndim == 0 else out


def message_thresholds(variances) -> np.ndarray:
    """Boundaries between consecutive symbols of a variance ladder."""
    v = np.asarray(variances, dtype=float)
    if v.ndim != 1 or len(v) < 2:
        raise ValueError("variances must be a 1-D array of length >= 2")
    if np.any(np.diff(v) <= 0) or np.any(v <= 0):
        raise ValueError("variances must be positive and strictly increasing")
    return pair_threshold(v[:-1], v[1:])


def design_constellation(cfg: SystemConfig) -> MessageConstellation:
    if cfg.msg_power is None:
        raise ValueError("msg_power must be set to design a constellation")
    ratio = solve_ratio(cfg.msg_order, cfg.msg_snr)
    variances = cfg.sigma2 * ratio ** np.arange(cfg.msg_order)
    powers = variances - cfg.sigma2
    powers[0] = 0.0
    thresholds = message_thresholds(variances)
    for arr in (powers, thresholds):
        arr.setflags(write=False)
    return MessageConstellation(powers=powers, ratio=ratio, sigma2=cfg.sigma2, thresholds=thresholds)


def quantize_energy(energy, thresholds):
    """Map energies to 0-based cells of an increasing threshold ladder.

    An energy exactly on thresholds[0] goes to cell 1 (the first decision
    branch is strict); an exact hit on any later threshold stays in the lower
    adjacent cell.  Both cases are measure-zero for continuous energies.
    """
    t = np.asarray(thresholds, dtype=float)
    e = np.asarray(energy, dtype=float)
    idx = np.searchsorted(t, e, side="left")
    idx = np.where((idx == 0) & (e == t[0]), 1, idx)
    return int(idx) if idx.ndim == 0 else idx


def detect_message(energy, thresholds):
    """ML message decision from received energy; equals quantization."""
    return quantize_energy(energy, thresholds)


def message_ser_analytic(constellation: MessageConstellation, n_antennas: int) -> float:
    """Exact average symbol error rate of the threshold detector."""
    n = int(n_antennas)
    v = constellation.variances
    b = constellation.thresholds
    order = constellation.order
    err = np.empty(order)
    err[0] = chi2_sf(n, n * b[0] / v[0])
    for i in range(1, order - 1):
        err[i] = chi2_sf(n, n * b[i] / v[i]) + chi2_cdf(n, n * b[i - 1] / v[i])
    err[-1] = chi2_cdf(n, n * b[-1] / v[-1])
    return float(np.mean(err))
