"""Shared test oracles: brute-force ML detection and exact conditional rates.

Everything here is implemented independently of the library's detection and
error-rate code paths, so agreement between the two is evidence, not
tautology.
"""

import numpy as np

from simoauth.numerics import chi2_cdf


def ml_detect_message(energies, variances):
    """Brute-force maximum-likelihood index over per-symbol energy variances.

    The averaged energy of an N-antenna burst is exponential-family in the
    per-entry variance a, with log-likelihood proportional to
    -ln a - energy / a (constants dropped).  Ties break to the lower index.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    variances = np.asarray(variances, dtype=float)
    ll = -np.log(variances)[None, :] - energies[:, None] / variances[None, :]
    return np.argmax(ll, axis=1)


def ml_detect_pair(energies, var_tag0, var_tag1):
    """Two-step brute-force ML: message over the merged grid, then tag bit.

    Step one classifies against all 2L candidate variances and keeps only the
    message identity; step two picks the better tag bit within that message.
    Mirrors the library's two-step detector contract without using its
    thresholds.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    levels = np.empty(2 * len(var_tag0))
    levels[0::2] = var_tag0
    levels[1::2] = var_tag1
    pick = ml_detect_message(energies, levels)
    msg = pick // 2
    ll0 = -np.log(var_tag0)[msg] - energies / np.asarray(var_tag0)[msg]
    ll1 = -np.log(var_tag1)[msg] - energies / np.asarray(var_tag1)[msg]
    # ties keep bit 0, matching the detector's "<= threshold" convention
    bit = (ll1 > ll0).astype(int)
    return msg, bit


def exact_conditional_tag_ser(emb, n_antennas):
    """Conditional tag error rate by direct integration over decision regions.

    For each of the 2L transmitted hypotheses, integrates the energy density
    over the exact message-correct region and over its tag-wrong part, then
    forms the ratio.  Uses only chi2_cdf, none of the closed-form error sums.
    """
    n = n_antennas
    tau = np.asarray(emb.tag_thresholds, dtype=float)
    msg_b = np.asarray(emb.msg_thresholds, dtype=float)
    lo_bnd = np.concatenate([[0.0], msg_b])
    up_bnd = np.concatenate([msg_b, [np.inf]])

    def cdf(x):
        return 1.0 if np.isinf(x) else float(chi2_cdf(n, n * x))

    num = den = 0.0
    for i in range(emb.order):
        for bit, var in ((0, emb.var_tag0[i]), (1, emb.var_tag1[i])):
            wrong = (tau[i], up_bnd[i]) if bit == 0 else (lo_bnd[i], tau[i])
            den += cdf(up_bnd[i] / var) - cdf(lo_bnd[i] / var)
            num += cdf(wrong[1] / var) - cdf(wrong[0] / var)
    return num / den


def random_feasible_embeddings(base, count, rng, span=(0.05, 0.95)):
    """Yield random embeddings with every log ratio strictly inside the box."""
    from simoauth.embedding import build_embedding

    lo, hi = span
    for _ in range(count):
        k = rng.uniform(lo, hi, size=len(base.powers)) * base.log_step
        yield build_embedding(base, k)


def second_differences(values, step):
    """Central second differences of a uniformly sampled function."""
    values = np.asarray(values, dtype=float)
    return (values[2:] - 2.0 * values[1:-1] + values[:-2]) / step**2
