"""Ternary correlations: exact identities, brute-force oracle, counting."""

import random
from fractions import Fraction

import numpy as np
import pytest

from terncorr.correlate import (
    CorrelationRequest,
    Method,
    compare_to_main_term,
    correlation_windows,
    count_triples,
    fejer_overlap_weight,
    ternary_convolution,
    ternary_direct,
)
from terncorr.dirichlet import singular_series_sum
from terncorr.errors import DomainError
from terncorr.multfunc import MultSpec, WindowCache, eval_at, sieve_window

ONE = MultSpec.divisor_k(1)
CACHE = WindowCache(max_items=128)


def brute_correlation(s1, s2, s3, x, h):
    """Triple loop over eval_at, the independent oracle at toy sizes."""
    total = Fraction(0)
    for hh in range(-h, h + 1):
        w = Fraction(h - abs(hh), h)
        for n in range(x, 2 * x + 1):
            total += w * Fraction(
                eval_at(s1, n) * eval_at(s2, n + hh) * eval_at(s3, n + 2 * hh)
            )
    return total


# ---------------------------------------------------------------------------
# Spec examples


def test_constant_function_value():
    req = CorrelationRequest(ONE, ONE, ONE, 100, 10)
    res = ternary_direct(req, cache=CACHE)
    assert res.exact_value == 1010
    assert res.method is Method.DIRECT
    conv = ternary_convolution(req, cache=CACHE)
    assert conv.exact_value == 1010
    assert conv.method is Method.CONVOLUTION


def test_zero_middle_factor():
    primes = [p for p in range(2, 300) if all(p % d for d in range(2, p))]
    zero = MultSpec.user_euler(
        {(p, e): 0.0 for p in primes for e in range(1, 10)}, k_bound=1
    )
    req = CorrelationRequest(ONE, zero, ONE, 100, 10)
    res = ternary_direct(req, cache=WindowCache())
    assert res.value == 0


def test_degenerate_h_is_diagonal_sum():
    d2 = MultSpec.divisor_k(2)
    req = CorrelationRequest(d2, d2, d2, 50, 1)
    res = ternary_direct(req, cache=CACHE)
    win = sieve_window(d2, 50, 100)
    assert res.exact_value == int((win.ivalues.astype(object) ** 3).sum())


def test_toy_case_against_brute_force():
    d2 = MultSpec.divisor_k(2)
    req = CorrelationRequest(d2, d2, d2, 10, 2)
    expect = brute_correlation(d2, d2, d2, 10, 2)
    assert ternary_direct(req, cache=CACHE).exact_value == expect
    assert ternary_convolution(req, cache=CACHE).exact_value == expect


def test_mixed_specs_against_brute_force():
    s1, s2, s3 = MultSpec.moebius(), MultSpec.one_star_chi4(), MultSpec.divisor_k(2)
    req = CorrelationRequest(s1, s2, s3, 30, 5)
    expect = brute_correlation(s1, s2, s3, 30, 5)
    assert ternary_direct(req, cache=CACHE).exact_value == expect
    assert ternary_convolution(req, cache=CACHE).exact_value == expect


def test_direct_conv_equivalence_randomized():
    rng = random.Random(424242)
    pool = [ONE, MultSpec.divisor_k(2), MultSpec.divisor_k(3),
            MultSpec.moebius(), MultSpec.one_star_chi4()]
    for _ in range(20):
        s1, s2, s3 = (rng.choice(pool) for _ in range(3))
        x = rng.randint(50, 2000)
        h = rng.randint(1, min(50, (x - 1) // 2))
        req = CorrelationRequest(s1, s2, s3, x, h)
        a = ternary_direct(req, cache=CACHE)
        b = ternary_convolution(req, cache=CACHE)
        assert a.exact_numerator == b.exact_numerator


def test_float_path_direct_conv_close():
    tau = MultSpec.ramanujan_tau_norm()
    req = CorrelationRequest(tau, tau, tau, 4000, 80)
    a = ternary_direct(req, cache=CACHE)
    b = ternary_convolution(req, cache=CACHE)
    scale = max(abs(complex(a.value)), 1e-12)
    assert abs(complex(a.value) - complex(b.value)) <= 1e-8 * scale
    assert complex(a.value).imag == 0.0  # real spec stays real


def test_reversed_iteration_stability():
    tau = MultSpec.ramanujan_tau_norm()
    req = CorrelationRequest(tau, tau, tau, 3000, 60)
    fwd = ternary_direct(req, cache=CACHE)
    rev = ternary_direct(req, cache=CACHE, h_order="reverse")
    assert abs(complex(fwd.value) - complex(rev.value)) <= 1e-9 * max(
        abs(complex(fwd.value)), 1e-30
    )


# ---------------------------------------------------------------------------
# Fejer weight


def test_fejer_weight_examples():
    assert fejer_overlap_weight(0, 10) == 20
    assert fejer_overlap_weight(10, 10) == 0
    assert fejer_overlap_weight(5, 10) == 10
    with pytest.raises(DomainError):
        fejer_overlap_weight(11, 10)


def test_fejer_weight_identity_exact():
    for h_span in range(1, 101):
        for h in range(-h_span, h_span + 1):
            w = fejer_overlap_weight(h, h_span)
            assert Fraction(w, 2 * h_span) == 1 - Fraction(abs(h), h_span)


# ---------------------------------------------------------------------------
# Main-term comparison


def test_compare_constant_function_gap_is_one_over_x():
    x, h = 1000, 30
    series = singular_series_sum(ONE, 20, 10**5, cache=CACHE)
    req = CorrelationRequest(ONE, ONE, ONE, x, h)
    res = ternary_direct(req, cache=CACHE)
    res = compare_to_main_term(res, series, x, h)
    # value = H(X+1), main = X H series with series = 1 up to floor noise
    assert res.relative_gap == pytest.approx(1.0 / x, rel=1e-2)


def test_compare_requires_symmetric_request():
    series = singular_series_sum(ONE, 10, 10**4, cache=CACHE)
    req = CorrelationRequest(ONE, ONE, MultSpec.divisor_k(2), 100, 5)
    res = ternary_direct(req, cache=CACHE)
    with pytest.raises(DomainError):
        compare_to_main_term(res, series, 100, 5)


def test_compare_polefree_reports_smallness_ratio():
    tau = MultSpec.ramanujan_tau_norm()
    x, h = 2000, 40
    series = singular_series_sum(tau, 6, 10**4, cache=CACHE)
    req = CorrelationRequest(tau, tau, tau, x, h)
    res = ternary_direct(req, cache=CACHE)
    res = compare_to_main_term(res, series, x, h, epsilon=0.05)
    assert res.main_term == 0.0
    expected = abs(complex(res.value)) / (x * h**0.95)
    assert res.relative_gap == pytest.approx(expected, rel=1e-12)


# ---------------------------------------------------------------------------
# Triple counting


def test_count_triples_all_and_none():
    x, h = 100, 10
    win = sieve_window(ONE, x - 2 * h, 2 * x + 2 * h)
    res = count_triples(win, x, h, 0.0)
    assert res.count == (x + 1) * (2 * h + 1)
    assert res.normalized == pytest.approx((x + 1) * (2 * h + 1) / (x * (2 * h + 1)))
    assert count_triples(win, x, h, 10**9).count == 0


def test_count_triples_monotone_in_threshold():
    tau = MultSpec.ramanujan_tau_norm()
    x, h = 2000, 40
    win = CACHE.window(tau, 1, x - 2 * h, 2 * x + 2 * h)
    counts = [count_triples(win, x, h, float(c)).count for c in np.linspace(0, 2, 10)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_count_triples_coverage_guard():
    win = sieve_window(ONE, 100, 300)
    with pytest.raises(DomainError):
        count_triples(win, 100, 10, 0.5)  # misses [80, 100) and (300, 420]


def test_request_validation():
    with pytest.raises(DomainError):
        CorrelationRequest(ONE, ONE, ONE, 100, 0)
    with pytest.raises(DomainError):
        CorrelationRequest(ONE, ONE, ONE, 10, 11)


def test_windows_are_shared_between_methods():
    d2 = MultSpec.divisor_k(2)
    req = CorrelationRequest(d2, d2, d2, 500, 20)
    wins = correlation_windows(req, CACHE)
    a = ternary_direct(req, windows=wins)
    b = ternary_convolution(req, windows=wins)
    assert a.exact_numerator == b.exact_numerator
