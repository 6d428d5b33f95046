"""Shared fixtures: common design points and the expensive allocation suite."""

import numpy as np
import pytest

import simoauth as sa


def snr_config(n_antennas: int, msg_order: int, snr_db: float,
               total_power: float | None = None,
               max_msg_ser: float = 0.5) -> sa.SystemConfig:
    """System at a given message SNR with the message power pinned."""
    g = 10.0 ** (snr_db / 10.0)
    return sa.SystemConfig(
        n_antennas=n_antennas,
        sigma2=1.0,
        msg_order=msg_order,
        total_power=g + 1.0 if total_power is None else total_power,
        max_msg_ser=max_msg_ser,
        msg_power=g,
    )


@pytest.fixture(scope="session")
def base_4x128():
    """Four-point design at 10 dB message SNR, 128 antennas."""
    return sa.design_constellation(snr_config(128, 4, 10.0))


@pytest.fixture(scope="session")
def operating_point():
    """Optimized embedding at the 10 dB headline configuration.

    Message power 10, unit tag budget, message-SER bound 1e-5; both
    constraints are active at this optimum.
    """
    cfg = sa.SystemConfig(n_antennas=128, sigma2=1.0, msg_order=4,
                          total_power=11.0, max_msg_ser=1e-5, msg_power=10.0)
    emb, res = sa.optimized_embedding(cfg)
    assert res.status == "optimal"
    return emb, res


@pytest.fixture(scope="session")
def allocation_suite():
    """Power-allocation searches over both budgets and three SER bounds.

    Minutes-scale; computed once per session and shared by the acceptance
    criteria that examine curve shape and optimum activity.
    """
    out = {}
    for etot in (11.0, 22.0):
        for delta in (1e-6, 1e-5, 1e-4):
            cfg = sa.SystemConfig(n_antennas=128, sigma2=1.0, msg_order=4,
                                  total_power=etot, max_msg_ser=delta)
            out[(etot, delta)] = sa.allocate_power(cfg)
    return out
