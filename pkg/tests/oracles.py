"""Independent brute-force reference implementations used as test oracles.

Everything here is written from the published formula definitions with plain
loops, deliberately sharing no code with the package under test.
"""

import itertools
import math

import numpy as np


def ad_statistic_bruteforce(groups):
    """Standardized k-sample Anderson-Darling statistic, midrank version.

    Direct transcription of the tie-adjusted statistic and its variance:
    A2 = (N-1)/N * sum_i (1/n_i) sum_j l_j/N * (N*Ma_ij - n_i*B_j)^2
                                            / (B_j*(N-B_j) - N*l_j/4)
    with Ma_ij counting sample-i values below z_j plus half those equal,
    and B_j the analogous pooled count. The variance polynomial in N uses
    the coefficients built from H = sum 1/n_i, h = sum_{i<N} 1/i, and
    g = sum_{i<N-1} sum_{j>i} 1/((N-i) j).
    """
    pooled = sorted(x for g in groups for x in g)
    n_sizes = [len(g) for g in groups]
    k = len(groups)
    big_n = len(pooled)
    distinct = sorted(set(pooled))

    a2 = 0.0
    for sample, n_i in zip(groups, n_sizes):
        inner = 0.0
        for z in distinct:
            l_j = sum(1 for x in pooled if x == z)
            b_j = sum(1 for x in pooled if x < z) + l_j / 2.0
            ma_ij = sum(1 for x in sample if x < z) + sum(1 for x in sample if x == z) / 2.0
            numerator = (big_n * ma_ij - n_i * b_j) ** 2
            denominator = b_j * (big_n - b_j) - big_n * l_j / 4.0
            inner += (l_j / big_n) * numerator / denominator
        a2 += inner / n_i
    a2 *= (big_n - 1.0) / big_n

    cap_h = sum(1.0 / n_i for n_i in n_sizes)
    h = sum(1.0 / i for i in range(1, big_n))
    g = 0.0
    for i in range(1, big_n - 1):
        for j in range(i + 1, big_n):
            g += 1.0 / ((big_n - i) * j)
    a = (4.0 * g - 6.0) * (k - 1) + (10.0 - 6.0 * g) * cap_h
    b = (
        (2.0 * g - 4.0) * k**2 + 8.0 * h * k
        + (2.0 * g - 14.0 * h - 4.0) * cap_h - 8.0 * h + 4.0 * g - 6.0
    )
    c = (
        (6.0 * h + 2.0 * g - 2.0) * k**2 + (4.0 * h - 4.0 * g + 6.0) * k
        + (2.0 * h - 6.0) * cap_h + 4.0 * h
    )
    d = (2.0 * h + 6.0) * k**2 - 4.0 * h * k
    sigma2 = (a * big_n**3 + b * big_n**2 + c * big_n + d) / (
        (big_n - 1.0) * (big_n - 2.0) * (big_n - 3.0)
    )
    return (a2 - (k - 1)) / math.sqrt(sigma2)


def anova_f_bruteforce(groups):
    """Textbook one-way ANOVA F from explicit sums of squares."""
    all_values = [x for g in groups for x in g]
    grand = sum(all_values) / len(all_values)
    k = len(groups)
    n = len(all_values)
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ss_within = sum(sum((x - sum(g) / len(g)) ** 2 for x in g) for g in groups)
    return (ss_between / (k - 1)) / (ss_within / (n - k))


def ks_two_sample_bruteforce(a, b):
    """sup |F_a(x) - F_b(x)| evaluated at every pooled point."""
    best = 0.0
    for x in list(a) + list(b):
        fa = sum(1 for v in a if v <= x) / len(a)
        fb = sum(1 for v in b if v <= x) / len(b)
        best = max(best, abs(fa - fb))
    return best


def ks_max_pairwise_bruteforce(groups):
    best = 0.0
    for ga, gb in itertools.combinations(groups, 2):
        best = max(best, ks_two_sample_bruteforce(ga, gb))
    return best


def lstsq_pinv_oracle(X, y):
    """Minimum-norm least squares via the pseudo-inverse of X."""
    return np.linalg.pinv(np.asarray(X, dtype=float)) @ np.asarray(y, dtype=float)


def leverage_hat_oracle(X):
    """Leverages as the diagonal of the hat projector X X^+."""
    X = np.asarray(X, dtype=float)
    return np.diag(X @ np.linalg.pinv(X))


def inclusion_probability_series(sizes):
    """The alternating inclusion-exclusion series, term by term over subsets."""
    qs = [1.0 / s for s in sizes]
    total = 0.0
    for r in range(1, len(qs) + 1):
        sign = (-1.0) ** (r + 1)
        for combo in itertools.combinations(qs, r):
            total += sign * math.prod(combo)
    return total


def simulate_round_inclusion(sizes, trials, seed):
    """Monte Carlo of one independent-selection round.

    Each decision's stratum picks one member uniformly; the tracked universe
    is included if any decision picks it (probability 1/size per decision,
    independently).
    """
    rng = np.random.default_rng(seed)
    hits = rng.random((trials, len(sizes))) < (1.0 / np.asarray(sizes, dtype=float))
    return float(hits.any(axis=1).mean())
