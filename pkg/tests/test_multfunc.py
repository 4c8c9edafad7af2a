"""Window sieving: spec examples, independent oracles, cache format."""

import math
import random

import numpy as np
import pytest

from terncorr import multfunc
from terncorr.errors import BudgetError, DomainError, SpecificationError
from terncorr.multfunc import (
    MultSpec,
    WindowCache,
    eval_at,
    read_window_cache,
    sieve_one_star_chi4,
    sieve_window,
    tau_normalized,
    window_on_progression,
    write_window_cache,
)

# ---------------------------------------------------------------------------
# Oracles (independent of the sieve implementation)


def divisors(n):
    out = [d for d in range(1, int(math.isqrt(n)) + 1) if n % d == 0]
    return sorted(set(out + [n // d for d in out]))


def dk_oracle(n, k):
    """Number of ordered k-factorizations, by direct recursion."""
    if k == 1:
        return 1
    return sum(dk_oracle(n // d, k - 1) for d in divisors(n))


def chi4(n):
    return 0 if n % 2 == 0 else (1 if n % 4 == 1 else -1)


def one_star_chi4_oracle(n):
    return sum(chi4(d) for d in divisors(n))


def moebius_oracle(n):
    out = 1
    for p in range(2, n + 1):
        if p * p > n:
            break
        if n % p == 0:
            n //= p
            out = -out
            if n % p == 0:
                return 0
    return -out if n > 1 else out


def tau_oracle(n_max):
    """tau via a naive O(n^2) expansion of the 24th power of the pentagonal
    series, exact integers throughout."""
    pent = [0] * n_max
    k = 0
    while k * (3 * k - 1) // 2 < n_max:
        for kk in (k, -k):
            idx = kk * (3 * kk - 1) // 2
            if 0 <= idx < n_max:
                pent[idx] = -1 if kk % 2 else 1
        k += 1
    pent[0] = 1
    power = [1] + [0] * (n_max - 1)
    for _ in range(24):
        nxt = [0] * n_max
        for i, a in enumerate(power):
            if a == 0:
                continue
            for j, b in enumerate(pent[: n_max - i]):
                if b:
                    nxt[i + j] += a * b
        power = nxt
    return power  # tau(n) = power[n-1]


# ---------------------------------------------------------------------------
# Spec examples


def test_sieve_window_examples():
    assert list(sieve_window(MultSpec.divisor_k(2), 12, 12).ivalues) == [6]
    assert list(sieve_window(MultSpec.divisor_k(3), 1, 1).ivalues) == [1]
    assert list(sieve_window(MultSpec.moebius(), 4, 6).ivalues) == [0, -1, 1]


def test_one_star_chi4_examples():
    assert list(sieve_one_star_chi4(1, 3).ivalues) == [1, 1, 0]
    assert list(sieve_one_star_chi4(25, 25).ivalues) == [3]
    assert list(sieve_one_star_chi4(2, 2).ivalues) == [1]
    win = sieve_one_star_chi4(1, 2000)
    for n in (1, 9, 25, 50, 325, 1989):
        assert win.ivalues[n - 1] == one_star_chi4_oracle(n)
    d2 = sieve_window(MultSpec.divisor_k(2), 1, 2000)
    assert (win.ivalues >= 0).all()
    assert (win.ivalues <= d2.ivalues).all()


def test_progression_examples():
    w = window_on_progression(MultSpec.divisor_k(2), 2, 1, 5)
    assert list(w.ivalues) == [2, 3, 4, 4, 4]
    w = window_on_progression(MultSpec.moebius(), 4, 1, 3)
    assert list(w.ivalues) == [0, 0, 0]
    # q0 = 1 reduces to the plain window
    a = window_on_progression(MultSpec.one_star_chi4(), 1, 7, 30)
    b = sieve_window(MultSpec.one_star_chi4(), 7, 30)
    assert (a.ivalues == b.ivalues).all()


def test_progression_matches_pointwise():
    rng = random.Random(5)
    spec = MultSpec.divisor_k(3)
    w = window_on_progression(spec, 6, 3, 400)
    for _ in range(40):
        n = rng.randint(3, 400)
        assert w.ivalues[n - 3] == eval_at(spec, 6 * n)


def test_eval_at_examples():
    assert eval_at(MultSpec.divisor_k(3), 4) == 6
    assert eval_at(MultSpec.moebius(), 1) == 1
    assert eval_at(MultSpec.one_star_chi4(), 5) == 2
    assert eval_at(MultSpec.divisor_k(3), 4) == dk_oracle(4, 3)


@pytest.mark.parametrize("n", [1, 2, 6, 12, 36, 210, 1024])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_divisor_rule_against_enumeration(n, k):
    assert eval_at(MultSpec.divisor_k(k), n) == dk_oracle(n, k)


def test_moebius_against_oracle():
    win = sieve_window(MultSpec.moebius(), 1, 500)
    for n in range(1, 501):
        assert win.ivalues[n - 1] == moebius_oracle(n)


# ---------------------------------------------------------------------------
# Ramanujan tau


def test_tau_normalized_against_naive_eta_power():
    taus = tau_oracle(60)
    win = tau_normalized(60)
    assert taus[0] == 1 and taus[1] == -24
    for n in range(1, 61):
        expect = taus[n - 1] / n**5.5
        assert win.values[n - 1] == pytest.approx(expect, rel=2**-40, abs=1e-300)


def test_tau_window_basics():
    win = tau_normalized(6)
    assert win.values[0] == 1.0
    assert win.values[1] == pytest.approx(-24 / 2**5.5, rel=1e-12)
    assert win.values[5] == pytest.approx(win.values[1] * win.values[2], rel=1e-12)


def test_tau_eval_consistent_with_window():
    spec = MultSpec.ramanujan_tau_norm()
    win = tau_normalized(3000)
    rng = random.Random(11)
    for n in rng.sample(range(1, 3001), 60):
        assert eval_at(spec, n) == pytest.approx(
            float(win.values[n - 1]), rel=2**-30, abs=1e-300
        )


# ---------------------------------------------------------------------------
# Invariants


@pytest.mark.parametrize(
    "sid", ["divisor1", "divisor2", "divisor3", "moebius", "one_star_chi4"]
)
def test_multiplicativity_exact(sid):
    spec = multfunc.spec_from_id(sid)
    rng = random.Random(hash(sid) & 0xFFFF)
    done = 0
    while done < 200:
        m = rng.randint(2, 1000)
        n = rng.randint(2, 10**6 // m)
        if math.gcd(m, n) != 1:
            continue
        assert eval_at(spec, m * n) == eval_at(spec, m) * eval_at(spec, n)
        done += 1


def test_hyperbola_identity():
    for top in (10**3, 10**5):
        win = sieve_window(MultSpec.divisor_k(2), 1, top)
        assert int(win.ivalues.sum()) == sum(top // a for a in range(1, top + 1))


def test_sieve_eval_agreement_full_range():
    for sid in ("divisor2", "moebius", "one_star_chi4"):
        spec = multfunc.spec_from_id(sid)
        win = sieve_window(spec, 1, 10**4)
        direct = np.array([eval_at(spec, n) for n in range(1, 10**4 + 1)])
        assert (win.ivalues == direct).all(), sid


def test_window_invariants():
    win = sieve_window(MultSpec.one_star_chi4(), 10, 50)
    assert len(win) == 41
    assert not np.iscomplexobj(win.values)  # built-ins are real
    with pytest.raises(DomainError):
        sieve_window(MultSpec.moebius(), 10, 5)
    with pytest.raises(DomainError):
        window_on_progression(MultSpec.moebius(), 0, 1, 5)


# ---------------------------------------------------------------------------
# Errors and budgets


def test_budget_errors():
    with pytest.raises(BudgetError):
        sieve_window(MultSpec.divisor_k(2), 1, multfunc.MAX_WINDOW_LEN + 2)
    with pytest.raises(BudgetError):
        window_on_progression(
            MultSpec.divisor_k(2), multfunc.MAX_POINT, 1, 2
        )
    with pytest.raises(BudgetError):
        tau_normalized(multfunc._tau.MAX_TAU_INDEX + 1)


def test_user_euler_rules():
    spec = MultSpec.user_euler({(2, 1): 1j, (3, 1): -1.0, (5, 1): 2.0}, k_bound=1)
    win = sieve_window(spec, 5, 6)
    assert win.values[1] == 1j * -1.0
    with pytest.raises(SpecificationError, match=r"2\^2"):
        sieve_window(spec, 1, 8)
    zero = MultSpec.user_euler(
        {(p, e): 0.0 for p in (2, 3, 5, 7, 11, 13) for e in range(1, 8)}, k_bound=1
    )
    assert (sieve_window(zero, 2, 13).values == 0).all()


# ---------------------------------------------------------------------------
# Cache files


def test_window_cache_roundtrip(tmp_path):
    for spec in (MultSpec.one_star_chi4(), MultSpec.ramanujan_tau_norm()):
        win = (
            sieve_window(spec, 3, 200)
            if spec.is_exact
            else tau_normalized(200)
        )
        path = tmp_path / f"{spec.spec_id}.bin"
        write_window_cache(win, path)
        back = read_window_cache(path)
        assert back.lo == win.lo and back.hi == win.hi and back.q0 == win.q0
        assert back.spec == win.spec
        assert (back.values == win.values).all()
        if win.ivalues is not None:
            assert (back.ivalues == win.ivalues).all()
    raw = (tmp_path / "one_star_chi4.bin").read_bytes()
    assert raw[:4] == b"MFW1"


def test_window_cache_directory(tmp_path):
    cache = WindowCache(tmp_path)
    a = cache.window(MultSpec.moebius(), 1, 1, 64)
    assert any(p.suffix == ".bin" for p in tmp_path.iterdir())
    fresh = WindowCache(tmp_path)
    b = fresh.window(MultSpec.moebius(), 1, 1, 64)
    assert (a.ivalues == b.ivalues).all()
