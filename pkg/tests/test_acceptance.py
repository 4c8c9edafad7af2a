"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them all
inline; the same driver backs `terncorr accept`).  Criterion 9 is a known
honest failure: the chi4-twisted L-function of the built-in simple-pole
witness itself has a pole at s=1, so the principal-character-only local
densities C_q cannot model exponential sums at denominators divisible by 4,
and oscillation resonances exceed the stated allowance near |gamma| = beta.
The failure detail documents the measured residuals.
"""

import time

import pytest

from terncorr import acceptance


def _run(number: int):
    name, fn = {n: (nm, f) for n, nm, f in acceptance.CRITERIA}[number]
    t0 = time.perf_counter()
    passed, detail, failures = fn()
    dt = time.perf_counter() - t0
    status = "PASS" if passed else "FAIL"
    print(f"{status}  criterion {number:2d}  {name:<30s} {detail}  [{dt:.1f}s]")
    for line in failures[:10]:
        print(f"      - {line}")
    return passed, detail, failures, dt


def test_criterion_01_constant_correlation_exact():
    passed, detail, failures, dt = _run(1)
    assert passed, failures
    assert dt < 5.0


def test_criterion_02_direct_conv_bit_identical():
    passed, detail, failures, dt = _run(2)
    assert passed, failures
    assert dt < 30.0


def test_criterion_03_gauss_sum_suite():
    passed, detail, failures, dt = _run(3)
    assert passed, failures
    assert dt < 5.0


def test_criterion_04_twisted_progression_identity():
    passed, detail, failures, dt = _run(4)
    assert passed, failures
    assert dt < 60.0


def test_criterion_05_singular_series_sanity():
    passed, detail, failures, dt = _run(5)
    assert passed, failures
    assert dt < 120.0


def test_criterion_06_main_term_trend():
    passed, detail, failures, dt = _run(6)
    assert passed, failures
    assert dt < 1200.0


def test_criterion_07_pole_free_smallness():
    passed, detail, failures, dt = _run(7)
    assert passed, failures
    assert dt < 1200.0


def test_criterion_08_exponential_sum_envelope():
    passed, detail, failures, dt = _run(8)
    assert passed, failures
    assert dt < 600.0


def test_criterion_09_major_arc_model():
    # Known honest failure; the assertion message carries the analysis.
    passed, detail, failures, dt = _run(9)
    assert dt < 120.0
    assert passed, (
        "criterion 9 is unattainable as stated: the witness function's "
        "chi4-twisted Dirichlet series has a simple pole at s=1 (residue "
        "pi/8), so the principal-only C_q model misses an O(H) term at "
        "q = 4, and divisor resonances at |gamma| near beta exceed the "
        "allowance; measured: " + "; ".join(failures[:4])
    )


def test_criterion_10_triple_counting_stability():
    passed, detail, failures, dt = _run(10)
    assert passed, failures
    assert dt < 600.0


def test_criterion_11_property_suites():
    passed, detail, failures, dt = _run(11)
    assert passed, failures
    assert dt < 300.0


# ---------------------------------------------------------------------------
# Property suite, individually addressable


@pytest.mark.parametrize(
    "name,prop", acceptance.PROPERTY_SUITE, ids=[n for n, _ in acceptance.PROPERTY_SUITE]
)
def test_property(name, prop):
    prop()
