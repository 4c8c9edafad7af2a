"""Characters, Gauss sums, mean densities, singular series."""

import math
import random

import numpy as np
import pytest

from terncorr.dirichlet import (
    characters_mod,
    euler_phi,
    gauss_sum,
    mean_density,
    moebius,
    singular_coefficient,
    singular_series_sum,
    twisted_progression_check,
)
from terncorr.errors import BudgetError, DomainError
from terncorr.multfunc import MultSpec, WindowCache

N_FAST = 2 * 10**5  # density scale for the quicker checks here

ONE = MultSpec.divisor_k(1)
OSC = MultSpec.one_star_chi4()
CACHE = WindowCache(max_items=96)


# Closed forms for the simple-pole witness, derived from its Euler factors:
# C_1 = pi/4, C_p = chi4(p) pi/(4p) for odd primes, C_{p^2} = pi/(4 p^2),
# and every even q vanishes.
WITNESS_CLOSED_FORMS = {
    1: math.pi / 4,
    2: 0.0,
    3: -math.pi / 12,
    4: 0.0,
    5: math.pi / 20,
    6: 0.0,
}


# ---------------------------------------------------------------------------
# Group construction


def test_group_sizes_and_examples():
    g1 = characters_mod(1)
    assert len(g1) == 1 and g1.principal.values[0] == 1
    assert g1.principal.is_primitive
    assert len(characters_mod(8)) == 4
    g5 = characters_mod(5)
    assert any(abs(chi(2) - 1j) < 1e-12 for chi in g5.characters)


def test_principal_first_and_flags():
    for q in (1, 2, 7, 12, 40):
        group = characters_mod(q)
        assert group.characters[0].is_principal
        assert sum(c.is_principal for c in group.characters) == 1
        assert len(group) == euler_phi(q)
        for chi in group.characters:
            n = np.arange(q)
            units = np.array([math.gcd(int(v), q) == 1 for v in n]) if q > 1 else np.array([True])
            assert (np.abs(chi.values[units]) - 1 < 1e-12).all()
            assert (chi.values[~units] == 0).all()


def test_complete_multiplicativity():
    rng = random.Random(3)
    for q in (5, 8, 12, 36):
        for chi in characters_mod(q).characters:
            for _ in range(30):
                a, b = rng.randint(0, 3 * q), rng.randint(0, 3 * q)
                assert chi(a * b) == pytest.approx(chi(a) * chi(b), abs=1e-12)
            assert chi(1) == 1
            assert chi(1 + q) == pytest.approx(chi(1), abs=1e-12)


def test_orthogonality_to_1e9():
    for q in range(1, 101):
        group = characters_mod(q)
        mat = np.array([c.values for c in group.characters])
        gram = mat @ mat.conj().T
        assert np.abs(gram - np.eye(len(group)) * euler_phi(q)).max() < 1e-9, q


def test_primitive_counts_partition_group():
    # phi(q) characters mod q = sum over d | q of primitive characters mod d
    for q in (12, 24, 36, 40, 45, 48, 50):
        total = sum(
            sum(1 for c in characters_mod(d).characters if c.is_primitive)
            for d in range(1, q + 1)
            if q % d == 0
        )
        assert total == euler_phi(q), q


def test_modulus_budget():
    with pytest.raises(BudgetError):
        characters_mod(10**6 + 1)
    with pytest.raises(BudgetError):
        characters_mod(999_983)  # prime: phi*q blows the table budget
    with pytest.raises(DomainError):
        characters_mod(0)


# ---------------------------------------------------------------------------
# Gauss sums


def test_gauss_sum_examples():
    assert gauss_sum(characters_mod(1).principal) == 1
    assert abs(gauss_sum(characters_mod(4).principal)) < 1e-12
    chi3 = [c for c in characters_mod(3).characters if not c.is_principal][0]
    assert gauss_sum(chi3) == pytest.approx(1j * math.sqrt(3), abs=1e-12)


def test_gauss_sum_modulus_and_ramanujan():
    for q in range(1, 51):
        # brute-force Ramanujan sum oracle for the principal character
        cq1 = sum(
            complex(np.exp(2j * np.pi * m / q))
            for m in range(1, q + 1)
            if math.gcd(m, q) == 1
        )
        for chi in characters_mod(q).characters:
            t = gauss_sum(chi)
            if chi.is_primitive:
                assert abs(abs(t) - math.sqrt(q)) <= 1e-9
            if chi.is_principal:
                assert abs(t - cq1) <= 1e-9
                assert abs(t - moebius(q)) <= 1e-9


# ---------------------------------------------------------------------------
# Mean densities


def test_mean_density_constant_function():
    d = mean_density(ONE, 1, 1, characters_mod(1).principal, 10**6, CACHE)
    assert d.estimate == pytest.approx(1.0, abs=1e-6)
    assert d.error_gap == 0.0
    d = mean_density(ONE, 1, 2, characters_mod(2).principal, 10**6, CACHE)
    assert d.estimate == pytest.approx(0.5, abs=1e-5)  # density of odd integers


def test_mean_density_witness_is_quarter_pi():
    # independent oracle: the Leibniz value L(chi4, 1) = pi/4
    d = mean_density(OSC, 1, 1, characters_mod(1).principal, 10**6, CACHE)
    assert d.estimate.real == pytest.approx(math.pi / 4, abs=5e-3)
    assert not d.expected_zero


def test_mean_density_flags_polefree():
    tau = MultSpec.ramanujan_tau_norm()
    d = mean_density(tau, 1, 1, characters_mod(1).principal, 2 * 10**4, CACHE)
    assert d.expected_zero
    assert abs(d.estimate) < 0.05


def test_mean_density_validation():
    with pytest.raises(DomainError):
        mean_density(ONE, 1, 3, characters_mod(2).principal, 1000, CACHE)


# ---------------------------------------------------------------------------
# Singular coefficients and series


def test_singular_coefficient_constant():
    assert singular_coefficient(ONE, 1, N_FAST, CACHE) == pytest.approx(1.0, abs=1e-6)
    assert abs(singular_coefficient(ONE, 2, N_FAST, CACHE)) < 1e-4


@pytest.mark.parametrize("q", sorted(WITNESS_CLOSED_FORMS))
def test_witness_coefficients_match_closed_forms(q):
    got = singular_coefficient(OSC, q, 10**6, CACHE)
    assert got.real == pytest.approx(WITNESS_CLOSED_FORMS[q], abs=7e-3)
    assert abs(got.imag) < 1e-12


def test_witness_coefficients_match_progression_densities():
    # direct cross-check of C_3 against raw progression densities at two
    # scales, with no character machinery: C_3 = (1/3) mean f(3n) - (1/2)
    # times the density of f on integers coprime to 3.
    n_terms = 10**6
    win3 = CACHE.window(OSC, 3, 1, n_terms)
    mean_f3 = float(win3.values.sum()) / n_terms
    win1 = CACHE.window(OSC, 1, 1, n_terms)
    n = np.arange(1, n_terms + 1)
    coprime = float(win1.values[n % 3 != 0].sum()) / n_terms
    direct = mean_f3 / 3.0 - coprime / 2.0
    got = singular_coefficient(OSC, 3, n_terms, CACHE)
    assert got.real == pytest.approx(direct, abs=2e-3)


def test_series_constant_function():
    series = singular_series_sum(ONE, 50, N_FAST, cache=CACHE)
    assert series.series_value == pytest.approx(1.0, abs=1e-3)
    assert series.series_imag == 0.0
    assert series.tail_estimate < 1e-6
    assert len(series.c_table) == 49


def test_series_witness_golden_value():
    # Golden number recorded from the first verified run at Q=50, N=1e6
    # (cross-checked against the q<=6 closed forms and the Euler-product
    # estimate 0.4578 of the full series).
    series = singular_series_sum(OSC, 50, 10**6, cache=CACHE, threads=4)
    assert series.series_value == pytest.approx(0.45798189343971213, abs=1e-9)
    assert abs(series.series_imag) <= 1e-6 * abs(series.series_value)
    assert series.tail_estimate < 0.02
    # fitted envelope should sit near |C_q| ~ (pi/4) / q
    assert series.fit_c == pytest.approx(math.pi / 4, rel=0.2)
    assert abs(series.fit_delta) < 0.2


def test_series_tail_handles_all_zero():
    primes = [p for p in range(2, 400) if all(p % d for d in range(2, p))]
    zero = MultSpec.user_euler(
        {(p, e): 0.0 for p in primes for e in range(1, 10)},
        k_bound=1,
    )
    series = singular_series_sum(zero, 4, 360, cache=WindowCache())
    assert series.series_value == pytest.approx(0.0, abs=1e-12)
    assert series.tail_estimate == 0.0


# ---------------------------------------------------------------------------
# Twisted decomposition


def test_twisted_examples():
    assert twisted_progression_check(ONE, 1, 0, 100, CACHE) == pytest.approx(0.0, abs=1e-9)
    assert twisted_progression_check(MultSpec.divisor_k(2), 3, 1, 10**4, CACHE) <= 1e-6
    assert twisted_progression_check(OSC, 4, 3, 10**4, CACHE) <= 1e-6


def test_twisted_random_suite():
    rng = random.Random(99)
    pool = [ONE, MultSpec.divisor_k(2), MultSpec.moebius(), OSC,
            MultSpec.ramanujan_tau_norm()]
    for _ in range(30):
        spec = rng.choice(pool)
        q = rng.randint(1, 24)
        n_terms = rng.randint(1000, 10**4)
        units = [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
        a = 0 if q == 1 else rng.choice(units)
        diff = twisted_progression_check(spec, q, a, n_terms, CACHE)
        assert diff <= n_terms * 2**-35


def test_twisted_gcd_guard():
    with pytest.raises(DomainError):
        twisted_progression_check(ONE, 6, 3, 100, CACHE)


def test_density_stability_trend():
    gap_small = mean_density(OSC, 1, 1, characters_mod(1).principal, 10**6, CACHE).error_gap
    gap_large = mean_density(OSC, 1, 1, characters_mod(1).principal, 4 * 10**6).error_gap
    assert gap_small <= 4.0 * gap_large
