"""Monte Carlo machinery: intervals, sharded sampling, packets, and the sweep."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

import simoauth as sa
from conftest import snr_config

# Wilson 95% bounds recomputed from the score-interval roots at 30 digits.
WILSON_REFERENCE = [
    (50, 1000, 0.038130262392748809, 0.065313820244250802),
    (3, 17, 0.061911266376209947, 0.41029458568834122),
    (0, 500, 0.0, 0.0076243404615522401),
    (500, 500, 0.99237565953844776, 1.0),
]


@pytest.fixture(scope="module")
def noisy_embedding():
    """Two-point ladder at 0 dB: message and tag errors are both common."""
    base = sa.design_constellation(snr_config(8, 2, 0.0))
    return sa.build_embedding(base, np.full(2, 0.5 * base.log_step))


class TestWilsonInterval:
    def test_frozen_reference(self):
        for errors, trials, lo, hi in WILSON_REFERENCE:
            got_lo, got_hi = sa.wilson_interval(errors, trials)
            assert got_lo == pytest.approx(lo, rel=1e-12, abs=1e-15)
            assert got_hi == pytest.approx(hi, rel=1e-12)

    def test_contains_point_estimate(self):
        for errors, trials in [(1, 50), (10, 100), (499, 500)]:
            lo, hi = sa.wilson_interval(errors, trials)
            assert lo <= errors / trials <= hi
            assert 0.0 <= lo < hi <= 1.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="trials must be positive"):
            sa.wilson_interval(0, 0)

    def test_estimate_helpers(self):
        est = sa.SerEstimate(errors=50, trials=1000)
        assert est.rate == 0.05
        assert est.contains(0.05)
        assert not est.contains(0.2)


class TestSimulateSer:
    def test_deterministic_across_worker_counts(self, noisy_embedding):
        counts = []
        for workers in (1, 3):
            cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8,
                               trials=2_000_000, master_seed=51, workers=workers)
            msg, tag_cond, tag_un = sa.simulate_ser(cfg)
            counts.append((msg.errors, tag_cond.errors, tag_cond.trials, tag_un.errors))
        assert counts[0] == counts[1]

    def test_agrees_with_analytic_rates(self, noisy_embedding):
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8,
                           trials=2_000_000, master_seed=52, workers=2)
        msg, tag_cond, _ = sa.simulate_ser(cfg)
        assert msg.contains(sa.message_ser_embedded(noisy_embedding, 8))
        # the closed-form conditional rate carries an O(msg SER) bias, so give
        # it a widened band rather than the bare Wilson interval
        analytic = sa.tag_ser_analytic(noisy_embedding, 8)
        slack = 2.0 * sa.message_ser_embedded(noisy_embedding, 8) * analytic
        lo, hi = tag_cond.wilson95
        assert lo - slack <= analytic <= hi + slack

    def test_unconditional_rate_exceeds_conditional(self, noisy_embedding):
        # message-error trials flip a near-fair coin on the tag bit, which is
        # worse than the within-cell rate at this operating point
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8,
                           trials=2_000_000, master_seed=53, workers=2)
        _, tag_cond, tag_un = sa.simulate_ser(cfg)
        assert tag_un.trials == 2_000_000
        assert tag_cond.trials < tag_un.trials
        assert tag_un.rate > tag_cond.rate

    def test_full_vector_path_matches_distribution(self, noisy_embedding):
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8, trials=200_000,
                           master_seed=54, workers=1, full_vector=True)
        msg, _, _ = sa.simulate_ser(cfg)
        assert msg.contains(sa.message_ser_embedded(noisy_embedding, 8))

    def test_config_guards(self, noisy_embedding):
        with pytest.raises(ValueError, match="trials must be at least 10000"):
            sa.SimConfig(emb=noisy_embedding, n_antennas=8, trials=100)
        with pytest.raises(ValueError, match="workers must be at least 1"):
            sa.SimConfig(emb=noisy_embedding, n_antennas=8, trials=10_000, workers=0)

    def test_measure_error_report_fills_empirical(self, noisy_embedding):
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8,
                           trials=500_000, master_seed=55, workers=2)
        report = sa.measure_error_report(cfg)
        assert isinstance(report.empirical_msg, sa.SerEstimate)
        assert isinstance(report.empirical_tag, sa.SerEstimate)
        assert isinstance(report.empirical_tag_uncond, sa.SerEstimate)
        assert report.empirical_msg.contains(report.msg_ser)


class TestKeyedTagBits:
    def test_deterministic_and_key_sensitive(self):
        bits = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
        a = sa.keyed_tag_bits(bits, b"k1", 16)
        b = sa.keyed_tag_bits(bits, b"k1", 16)
        c = sa.keyed_tag_bits(bits, b"k2", 16)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert a.dtype == np.uint8 and set(np.unique(a)) <= {0, 1}

    def test_avalanche_on_message_flip(self):
        rng = np.random.default_rng(61)
        bits = rng.integers(0, 2, size=64).astype(np.uint8)
        base = sa.keyed_tag_bits(bits, b"key", 64)
        distances = []
        for i in range(16):
            flipped = bits.copy()
            flipped[i] ^= 1
            distances.append(int(np.sum(base != sa.keyed_tag_bits(flipped, b"key", 64))))
        # each single-bit flip rewrites about half of a 64-bit tag
        assert min(distances) >= 12 and max(distances) <= 52

    def test_prefix_property_and_length_cap(self):
        bits = np.ones(8, dtype=np.uint8)
        long = sa.keyed_tag_bits(bits, b"key", 32)
        short = sa.keyed_tag_bits(bits, b"key", 10)
        assert np.array_equal(long[:10], short)
        with pytest.raises(ValueError, match="beyond one digest"):
            sa.keyed_tag_bits(bits, b"key", 300)


class TestPackets:
    def test_make_packet_invariants(self, noisy_embedding):
        rng = np.random.default_rng(71)
        bits = rng.integers(0, 2, size=12).astype(np.uint8)
        packet = sa.make_packet(bits, b"secret", noisy_embedding)
        assert np.array_equal(packet.tag_bits, sa.keyed_tag_bits(bits, b"secret", 12))
        idx = bits  # one bit per symbol at order 2
        var = np.where(packet.tag_bits == 1,
                       noisy_embedding.var_tag1[idx], noisy_embedding.var_tag0[idx])
        assert_allclose(packet.symbols**2 + noisy_embedding.base.sigma2, var, rtol=1e-12)

    def test_make_packet_guards(self, noisy_embedding):
        with pytest.raises(ValueError, match="must be 0/1"):
            sa.make_packet(np.array([0, 2, 1], dtype=np.uint8), b"k", noisy_embedding)
        base3 = sa.design_constellation(snr_config(8, 3, 3.0))
        emb3 = sa.build_embedding(base3, np.full(3, 0.3 * base3.log_step))
        with pytest.raises(ValueError, match="power-of-two"):
            sa.make_packet(np.zeros(4, dtype=np.uint8), b"k", emb3)

    def test_noiseless_roundtrip_accepts(self, noisy_embedding):
        rng = np.random.default_rng(72)
        bits = rng.integers(0, 2, size=20).astype(np.uint8)
        packet = sa.make_packet(bits, b"secret", noisy_embedding)
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8, trials=10_000)
        exact = packet.symbols**2 + noisy_embedding.base.sigma2
        result = sa.authenticate_roundtrip(packet, cfg, energies=exact)
        assert result.accepted and result.reason is None
        assert np.array_equal(result.tag_bits, packet.tag_bits)

    def test_roundtrip_reports_failure_reason(self, noisy_embedding):
        bits = np.zeros(4, dtype=np.uint8)
        packet = sa.make_packet(bits, b"secret", noisy_embedding)
        cfg = sa.SimConfig(emb=noisy_embedding, n_antennas=8, trials=10_000)
        exact = packet.symbols**2 + noisy_embedding.base.sigma2
        # push the first symbol into the other message cell
        wrong_cell = exact.copy()
        wrong_cell[0] = noisy_embedding.var_tag0[1 - bits[0]]
        res = sa.authenticate_roundtrip(packet, cfg, energies=wrong_cell)
        assert not res.accepted and res.reason == "message-demodulation-corrupted"
        # flip only the tag bit of the first symbol, keeping the message cell
        tag_flip = exact.copy()
        i = bits[0]
        tag_flip[0] = (noisy_embedding.var_tag1[i] if packet.tag_bits[0] == 0
                       else noisy_embedding.var_tag0[i])
        res = sa.authenticate_roundtrip(packet, cfg, energies=tag_flip)
        assert not res.accepted and res.reason == "tag-mismatch"

    def test_legitimate_acceptance_matches_prediction(self, operating_point):
        emb, _ = operating_point
        cfg = sa.SimConfig(emb=emb, n_antennas=128, trials=10_000,
                           master_seed=81, workers=4)
        stats = sa.simulate_packets(cfg, 50_000, 10)
        p_sym = 1.0 - (1.0 - sa.message_ser_embedded(emb, 128)) * (
            1.0 - sa.tag_ser_analytic(emb, 128))
        predicted = (1.0 - p_sym) ** 10
        sigma = np.sqrt(predicted * (1.0 - predicted) / stats.n_packets)
        assert stats.n_packets == 50_000
        assert stats.accepted + stats.message_corrupted + stats.tag_mismatch == 50_000
        assert abs(stats.acceptance_rate - predicted) < 3.0 * sigma

    def test_forgery_acceptance_near_coin_flip_power(self, operating_point):
        # a uniformly random sent bit matches the expected keyed bit with
        # probability exactly 1/2 per symbol, whatever the tag SER is
        emb, _ = operating_point
        cfg = sa.SimConfig(emb=emb, n_antennas=128, trials=10_000,
                           master_seed=82, workers=4)
        stats = sa.simulate_packets(cfg, 50_000, 10, forge_tags=True)
        predicted = 0.5**10
        sigma = np.sqrt(predicted * (1.0 - predicted) / stats.n_packets)
        assert abs(stats.acceptance_rate - predicted) < 3.0 * sigma


class TestReproduceSweep:
    def test_two_point_grid_structure(self):
        rows, meta = sa.reproduce_fig3(
            n_antennas=128, msg_order=4, max_msg_ser=1e-5,
            snr_db_grid=[9.0, 8.0], trials=50_000, master_seed=91, workers=4)
        assert [row["snr_db"] for row in rows] == [8.0, 9.0]
        for row in rows:
            assert row["msg_ser_analytic"] < 1e-5
            assert row["tag_ser_analytic"] < row["uniform_tag_ser_analytic"]
            assert row["tag_wilson_lo"] <= row["tag_ser_empirical"] <= row["tag_wilson_hi"]
        # higher message SNR leaves more tag headroom
        assert rows[1]["tag_ser_analytic"] < rows[0]["tag_ser_analytic"]
        assert meta["snr_db_grid"] == [8.0, 9.0]
        assert meta["uniform_tag_power"] > 0
        assert meta["tag_hash"] == "hmac-sha256"

    def test_rejects_all_infeasible_grid(self):
        with pytest.raises(ValueError, match="fewer than two feasible points"):
            sa.reproduce_fig3(n_antennas=16, msg_order=4, max_msg_ser=1e-30,
                              trials=10_000)
