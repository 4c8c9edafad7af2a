"""Windows of divisor-bounded multiplicative functions.

A window holds f(q0*n) for n in a contiguous integer range.  Built-in
function families are described by their values on prime powers; windows are
filled by a segmented sieve that stamps exact prime-power exponents, divides
the smooth part out, and finishes with the (at most one) leftover prime
above the segment's square root.  Integer-valued families are sieved in
exact int64 arithmetic and carry both float and integer value arrays.
"""

from __future__ import annotations

import enum
import math
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import tau as _tau
from .errors import BudgetError, DomainError, SpecificationError

MAX_WINDOW_LEN = 1 << 26
MAX_POINT = 1 << 44
TRIAL_DIVISION_BOUND = 1_000_000
_SEGMENT = 1 << 20

_MAGIC = b"MFW1"


class Kind(enum.Enum):
    DIVISOR_K = "divisor_k"
    MOEBIUS = "moebius"
    ONE_STAR_CHI4 = "one_star_chi4"
    RAMANUJAN_TAU_NORM = "tau_norm"
    USER_EULER = "user_euler"


_KIND_TAGS = {
    Kind.DIVISOR_K: 1,
    Kind.MOEBIUS: 2,
    Kind.ONE_STAR_CHI4: 3,
    Kind.RAMANUJAN_TAU_NORM: 4,
}


@dataclass(frozen=True)
class MultSpec:
    """A multiplicative function given by its prime-power rule plus metadata.

    k_bound is the divisor-bound order: |f(n)| <= d_{k_bound}(n).  alpha is
    the declared second-moment growth exponent (metadata only, never
    computed).  has_pole declares whether the principal-character Dirichlet
    series of f has a simple pole at s=1; pole-free specs get a zero main
    term downstream.  continuation_declared records the (untestable)
    analytic-continuation attribute for user-supplied rules.
    """

    kind: Kind
    k: int = 1
    rule: Mapping[tuple[int, int], complex] | None = None
    k_bound: int = 1
    alpha: float = 0.0
    has_pole: bool = False
    hypothesis_conditional: bool = False
    continuation_declared: bool = True

    # -- factories ---------------------------------------------------------

    @staticmethod
    def divisor_k(k: int) -> "MultSpec":
        if k < 1:
            raise DomainError("divisor order k must be >= 1")
        return MultSpec(kind=Kind.DIVISOR_K, k=k, k_bound=k, has_pole=True)

    @staticmethod
    def moebius() -> "MultSpec":
        # Membership of mu in the pole-free class is only conjectural, so
        # runs with it are tagged hypothesis-conditional.
        return MultSpec(
            kind=Kind.MOEBIUS, k_bound=1, has_pole=False, hypothesis_conditional=True
        )

    @staticmethod
    def one_star_chi4() -> "MultSpec":
        return MultSpec(kind=Kind.ONE_STAR_CHI4, k_bound=2, has_pole=True)

    @staticmethod
    def ramanujan_tau_norm() -> "MultSpec":
        return MultSpec(kind=Kind.RAMANUJAN_TAU_NORM, k_bound=2, has_pole=False)

    @staticmethod
    def user_euler(
        rule: Mapping[tuple[int, int], complex],
        k_bound: int,
        alpha: float = 0.0,
        has_pole: bool = False,
        continuation_declared: bool = True,
    ) -> "MultSpec":
        return MultSpec(
            kind=Kind.USER_EULER,
            rule=dict(rule),
            k_bound=k_bound,
            alpha=alpha,
            has_pole=has_pole,
            continuation_declared=continuation_declared,
        )

    # -- metadata ----------------------------------------------------------

    @property
    def spec_id(self) -> str:
        if self.kind is Kind.DIVISOR_K:
            return f"divisor{self.k}"
        return self.kind.value

    @property
    def is_exact(self) -> bool:
        """True when values are integers computed in exact arithmetic."""
        return self.kind in (Kind.DIVISOR_K, Kind.MOEBIUS, Kind.ONE_STAR_CHI4)

    @property
    def is_real(self) -> bool:
        if self.kind is Kind.USER_EULER:
            return all(complex(v).imag == 0.0 for v in self.rule.values())
        return True

    def __eq__(self, other) -> bool:  # rule dicts break dataclass eq when frozen
        if not isinstance(other, MultSpec):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.k == other.k
            and (self.rule == other.rule)
        )

    def __hash__(self) -> int:
        rule_key = None
        if self.rule is not None:
            rule_key = tuple(sorted((pk, complex(v)) for pk, v in self.rule.items()))
        return hash((self.kind, self.k, rule_key))


def spec_from_id(spec_id: str) -> MultSpec:
    """Resolve a CLI/config identifier to a built-in MultSpec."""
    s = spec_id.strip().lower()
    if s.startswith("divisor"):
        try:
            return MultSpec.divisor_k(int(s[len("divisor"):]))
        except ValueError:
            raise DomainError(f"bad divisor spec id {spec_id!r}") from None
    if s in ("moebius", "mu"):
        return MultSpec.moebius()
    if s == "one_star_chi4":
        return MultSpec.one_star_chi4()
    if s in ("tau", "tau_norm", "ramanujan_tau_norm"):
        return MultSpec.ramanujan_tau_norm()
    raise DomainError(f"unknown spec id {spec_id!r}")


@dataclass(frozen=True)
class CoefficientWindow:
    """f(q0*n) for n in [lo, hi], immutable after construction.

    values is float64 for real families and complex128 otherwise; ivalues
    additionally holds the exact int64 values for integer-valued families.
    """

    lo: int
    hi: int
    q0: int
    values: np.ndarray
    ivalues: np.ndarray | None = None
    spec: MultSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (1 <= self.lo <= self.hi):
            raise DomainError("window requires 1 <= lo <= hi")
        if self.q0 < 1:
            raise DomainError("stride base q0 must be >= 1")
        if len(self.values) != self.hi - self.lo + 1:
            raise DomainError("values length must equal hi - lo + 1")
        self.values.setflags(write=False)
        if self.ivalues is not None:
            self.ivalues.setflags(write=False)

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def covers(self, a: int, b: int) -> bool:
        return self.lo <= a and b <= self.hi

    def segment(self, a: int, b: int, exact: bool = False) -> np.ndarray:
        """Values for n in [a, b] (indices, not multiplied by q0)."""
        if not self.covers(a, b):
            raise DomainError(
                f"window [{self.lo},{self.hi}] does not cover [{a},{b}]"
            )
        src = self.ivalues if (exact and self.ivalues is not None) else self.values
        return src[a - self.lo : b - self.lo + 1]

    def at(self, n: int) -> complex:
        return self.values[n - self.lo]


# ---------------------------------------------------------------------------
# Prime tables


_prime_lock = threading.Lock()
_prime_limit = 0
_primes = np.empty(0, dtype=np.int64)


def primes_up_to(limit: int) -> np.ndarray:
    """All primes <= limit (cached, grown on demand)."""
    global _prime_limit, _primes
    if limit <= 1:
        return np.empty(0, dtype=np.int64)
    with _prime_lock:
        if limit > _prime_limit:
            size = max(limit, 2 * _prime_limit, 1 << 16)
            sieve = np.ones(size + 1, dtype=bool)
            sieve[:2] = False
            for p in range(2, math.isqrt(size) + 1):
                if sieve[p]:
                    sieve[p * p :: p] = False
            _primes = np.nonzero(sieve)[0].astype(np.int64)
            _prime_limit = size
        cut = np.searchsorted(_primes, limit, side="right")
        return _primes[:cut]


def factorize(n: int, bound: int = TRIAL_DIVISION_BOUND) -> list[tuple[int, int]]:
    """Trial-division factorisation; BudgetError when a cofactor resists."""
    if n < 1:
        raise DomainError("factorize requires n >= 1")
    out: list[tuple[int, int]] = []
    m = n
    for p in primes_up_to(min(math.isqrt(n), bound)):
        p = int(p)
        if p * p > m:
            break
        if m % p == 0:
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
    if m > 1:
        if m > bound * bound:
            raise BudgetError(
                f"cannot certify factor {m} of {n} with trial division up to {bound}"
            )
        out.append((m, 1))
    return out


# ---------------------------------------------------------------------------
# Prime-power rules


def _binom(n: int, r: int) -> int:
    return math.comb(n, r)


def _rule_table(spec: MultSpec, p: int, emax: int) -> np.ndarray:
    """f(p^e) for e = 0..emax; int64 for exact kinds, complex128 for user rules."""
    if spec.kind is Kind.DIVISOR_K:
        return np.array(
            [_binom(e + spec.k - 1, spec.k - 1) for e in range(emax + 1)],
            dtype=np.int64,
        )
    if spec.kind is Kind.MOEBIUS:
        t = np.zeros(emax + 1, dtype=np.int64)
        t[0] = 1
        if emax >= 1:
            t[1] = -1
        return t
    if spec.kind is Kind.ONE_STAR_CHI4:
        # f(p^e) = sum_{j<=e} chi4(p^j): p=2 -> 1, p=1 mod 4 -> e+1,
        # p=3 mod 4 -> 1 for even e, 0 for odd e.
        if p == 2:
            return np.ones(emax + 1, dtype=np.int64)
        if p % 4 == 1:
            return np.arange(1, emax + 2, dtype=np.int64)
        t = np.arange(emax + 1, dtype=np.int64)
        return 1 - (t % 2)
    if spec.kind is Kind.USER_EULER:
        vals = np.empty(emax + 1, dtype=np.complex128)
        vals[0] = 1.0
        for e in range(1, emax + 1):
            try:
                vals[e] = complex(spec.rule[(p, e)])
            except KeyError:
                raise SpecificationError(
                    f"user Euler rule has no value for prime power {p}^{e}"
                ) from None
        return vals
    raise DomainError(f"no sieve rule for kind {spec.kind}")


def _rule_values(spec: MultSpec, p: int, expos: np.ndarray) -> np.ndarray:
    """f(p^e) for an array of exponents, demanding only the powers that occur."""
    if spec.kind is Kind.USER_EULER:
        out = np.ones(expos.shape, dtype=np.complex128)
        for e in np.unique(expos):
            e = int(e)
            if e == 0:
                continue
            try:
                out[expos == e] = complex(spec.rule[(p, e)])
            except KeyError:
                raise SpecificationError(
                    f"user Euler rule has no value for prime power {p}^{e}"
                ) from None
        return out
    table = _rule_table(spec, p, int(expos.max()))
    return table[expos]


def _rule_at_prime(spec: MultSpec, ps: np.ndarray) -> np.ndarray:
    """Vectorised f(p) for an array of primes p."""
    if spec.kind is Kind.DIVISOR_K:
        return np.full(ps.shape, spec.k, dtype=np.int64)
    if spec.kind is Kind.MOEBIUS:
        return np.full(ps.shape, -1, dtype=np.int64)
    if spec.kind is Kind.ONE_STAR_CHI4:
        r = ps % 4
        return np.where(r == 1, 2, np.where(r == 3, 0, 1)).astype(np.int64)
    if spec.kind is Kind.USER_EULER:
        out = np.empty(ps.shape, dtype=np.complex128)
        for i, p in enumerate(ps):
            try:
                out[i] = complex(spec.rule[(int(p), 1)])
            except KeyError:
                raise SpecificationError(
                    f"user Euler rule has no value for prime power {int(p)}^1"
                ) from None
        return out
    raise DomainError(f"no sieve rule for kind {spec.kind}")


# ---------------------------------------------------------------------------
# Segmented sieve


def _sieve_segment(spec: MultSpec, q0: int, lo: int, hi: int) -> np.ndarray:
    """Exact f(q0*n) for n in [lo, hi]; int64 for exact kinds else complex128."""
    size = hi - lo + 1
    exact = spec.is_exact
    vals = np.ones(size, dtype=np.int64 if exact else np.complex128)
    rem = np.arange(lo, hi + 1, dtype=np.int64)

    q0_fac = dict(factorize(q0)) if q0 > 1 else {}
    sieve_to = math.isqrt(hi)
    plist = [int(p) for p in primes_up_to(sieve_to)]
    for p in q0_fac:
        if p not in plist:
            plist.append(p)

    expo = np.zeros(size, dtype=np.int64)
    for p in sorted(plist):
        e0 = q0_fac.get(p, 0)
        start = ((lo + p - 1) // p) * p
        if start > hi and e0 == 0:
            continue
        first = start - lo
        # Stamp exact exponents: multiples of p^e overwrite with e.
        if start <= hi:
            expo[first::p] = 1
            pe = p * p
            e = 2
            while pe <= hi:
                s = ((lo + pe - 1) // pe) * pe - lo
                if s < size:
                    expo[s::pe] = e
                pe *= p
                e += 1
            idx = np.arange(first, size, p)
        else:
            idx = np.empty(0, np.int64)
        if e0 == 0:
            if idx.size:
                vals[idx] *= _rule_values(spec, p, expo[idx])
        else:
            # Every window entry carries the q0 part of this prime.
            vals *= _rule_values(spec, p, expo + e0)
        if idx.size:
            ppow = p ** expo[idx]
            rem[idx] //= ppow
            expo[idx] = 0

    leftover = rem > 1
    if leftover.any():
        vals_left = _rule_at_prime(spec, rem[leftover])
        vals[leftover] *= vals_left
    return vals


def _check_budget(q0: int, lo: int, hi: int):
    if hi - lo + 1 > MAX_WINDOW_LEN:
        raise BudgetError(
            f"window length {hi - lo + 1} exceeds budget {MAX_WINDOW_LEN}"
        )
    if q0 * hi > MAX_POINT:
        raise BudgetError(f"window endpoint {q0 * hi} exceeds budget {MAX_POINT}")


def _build_window(spec: MultSpec, q0: int, lo: int, hi: int) -> CoefficientWindow:
    if not (1 <= lo <= hi):
        raise DomainError("window requires 1 <= lo <= hi")
    if q0 < 1:
        raise DomainError("q0 must be >= 1")
    _check_budget(q0, lo, hi)

    if spec.kind is Kind.RAMANUJAN_TAU_NORM:
        lam = _tau.tau_normalized_values(q0 * hi)
        vals = lam[q0 * lo - 1 : q0 * hi : q0].copy()
        win = CoefficientWindow(lo=lo, hi=hi, q0=q0, values=vals, spec=spec)
        _assert_deligne(win)
        return win

    if spec.kind is Kind.DIVISOR_K and spec.k == 1:
        size = hi - lo + 1
        ones = np.ones(size, dtype=np.int64)
        return CoefficientWindow(
            lo=lo, hi=hi, q0=q0, values=ones.astype(np.float64),
            ivalues=ones, spec=spec,
        )

    size = hi - lo + 1
    exact = spec.is_exact
    out = np.empty(size, dtype=np.int64 if exact else np.complex128)
    a = lo
    while a <= hi:
        b = min(a + _SEGMENT - 1, hi)
        out[a - lo : b - lo + 1] = _sieve_segment(spec, q0, a, b)
        a = b + 1

    if exact:
        return CoefficientWindow(
            lo=lo, hi=hi, q0=q0, values=out.astype(np.float64),
            ivalues=out, spec=spec,
        )
    if spec.is_real:
        real = out.real.copy()  # imaginary parts exactly zero for real rules
        return CoefficientWindow(lo=lo, hi=hi, q0=q0, values=real, spec=spec)
    return CoefficientWindow(lo=lo, hi=hi, q0=q0, values=out, spec=spec)


def _assert_deligne(win: CoefficientWindow):
    """Runtime check |lambda(n)| <= d_2(n), full range, on every tau window."""
    d2 = _build_window(MultSpec.divisor_k(2), win.q0, win.lo, win.hi)
    if not (np.abs(win.values) <= d2.values + 1e-9).all():
        raise AssertionError("Deligne bound violated in tau window")


def sieve_window(spec: MultSpec, lo: int, hi: int) -> CoefficientWindow:
    """Window of f(n) for n in [lo, hi], exact for integer-valued kinds."""
    return _build_window(spec, 1, lo, hi)


def sieve_one_star_chi4(lo: int, hi: int) -> CoefficientWindow:
    """Window of sum_{d|n} chi4(d), the built-in simple-pole witness."""
    return _build_window(MultSpec.one_star_chi4(), 1, lo, hi)


def tau_normalized(hi: int) -> CoefficientWindow:
    """Window of tau(n)/n^(11/2) on [1, hi] from the exact eta-power series."""
    if hi < 1:
        raise DomainError("hi must be >= 1")
    return _build_window(MultSpec.ramanujan_tau_norm(), 1, 1, hi)


def window_on_progression(
    spec: MultSpec, q0: int, lo: int, hi: int
) -> CoefficientWindow:
    """Window of f(q0*n) for n in [lo, hi]."""
    return _build_window(spec, q0, lo, hi)


# ---------------------------------------------------------------------------
# Point evaluation


def _eval_exact(spec: MultSpec, n: int):
    out = 1
    for p, e in factorize(n):
        out *= int(_rule_table(spec, p, e)[e])
        if out == 0:
            return 0
    return out


def eval_at(spec: MultSpec, n: int) -> complex:
    """f(n) via trial-division factorisation and the prime-power rule."""
    if n < 1:
        raise DomainError("eval_at requires n >= 1")
    if n == 1:
        return 1
    if spec.kind is Kind.RAMANUJAN_TAU_NORM:
        out = 1.0
        for p, e in factorize(n):
            out *= _tau_prime_power(p, e)
        return out
    if spec.kind is Kind.USER_EULER:
        out = complex(1.0)
        for p, e in factorize(n):
            out *= complex(_rule_table(spec, p, e)[e])
        return out
    return _eval_exact(spec, n)


def _tau_prime_power(p: int, e: int) -> float:
    # Normalised Hecke recursion: lam(p^(e+1)) = lam(p) lam(p^e) - lam(p^(e-1)).
    lam_p = float(_tau.tau_values(p)[p - 1]) / p ** 5.5
    if e == 1:
        return lam_p
    prev, cur = 1.0, lam_p
    for _ in range(e - 1):
        prev, cur = cur, lam_p * cur - prev
    return cur


# ---------------------------------------------------------------------------
# Window cache files (binary layout MFW1)


def _kind_tag(spec: MultSpec) -> int:
    try:
        code = _KIND_TAGS[spec.kind]
    except KeyError:
        raise DomainError("user Euler windows cannot be cached") from None
    return (code << 32) | (spec.k if spec.kind is Kind.DIVISOR_K else 0)


def _spec_from_tag(tag: int) -> MultSpec:
    code, param = tag >> 32, tag & 0xFFFFFFFF
    for kind, c in _KIND_TAGS.items():
        if c == code:
            if kind is Kind.DIVISOR_K:
                return MultSpec.divisor_k(param)
            return {
                Kind.MOEBIUS: MultSpec.moebius,
                Kind.ONE_STAR_CHI4: MultSpec.one_star_chi4,
                Kind.RAMANUJAN_TAU_NORM: MultSpec.ramanujan_tau_norm,
            }[kind]()
    raise DomainError(f"unknown kind tag {tag:#x} in cache file")


def write_window_cache(win: CoefficientWindow, path: str | Path) -> None:
    """Serialise a window: MFW1 header, float64 values, int64 exact values."""
    if win.spec is None:
        raise DomainError("window has no spec attached; cannot cache")
    tag = _kind_tag(win.spec)
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<QQQQ", tag, win.q0, win.lo, win.hi))
        if np.iscomplexobj(win.values):
            pairs = np.empty(2 * len(win), dtype="<f8")
            pairs[0::2] = win.values.real
            pairs[1::2] = win.values.imag
            fh.write(pairs.tobytes())
        else:
            fh.write(win.values.astype("<f8").tobytes())
        if win.ivalues is not None:
            fh.write(win.ivalues.astype("<i8").tobytes())


def read_window_cache(path: str | Path) -> CoefficientWindow:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != _MAGIC:
        raise DomainError(f"{path} is not a coefficient cache file")
    tag, q0, lo, hi = struct.unpack_from("<QQQQ", raw, 4)
    spec = _spec_from_tag(tag)
    size = hi - lo + 1
    off = 4 + 32
    vals = np.frombuffer(raw, dtype="<f8", count=size, offset=off).astype(np.float64)
    off += 8 * size
    ivals = None
    if spec.is_exact:
        ivals = np.frombuffer(raw, dtype="<i8", count=size, offset=off).astype(
            np.int64
        )
    return CoefficientWindow(
        lo=int(lo), hi=int(hi), q0=int(q0), values=vals, ivalues=ivals, spec=spec
    )


def cache_file_name(spec: MultSpec, q0: int, lo: int, hi: int) -> str:
    return f"mfw_{_kind_tag(spec):012x}_{q0}_{lo}_{hi}.bin"


class WindowCache:
    """In-memory window cache with an optional on-disk directory."""

    def __init__(self, directory: str | Path | None = None, max_items: int = 64):
        self._dir = Path(directory) if directory else None
        self._max = max_items
        self._mem: dict[tuple, CoefficientWindow] = {}
        self._lock = threading.Lock()

    def window(self, spec: MultSpec, q0: int, lo: int, hi: int) -> CoefficientWindow:
        if spec.kind is Kind.DIVISOR_K and spec.k == 1:
            return _build_window(spec, q0, lo, hi)  # cheaper to rebuild than hold
        key = (spec, q0, lo, hi)
        with self._lock:
            hit = self._mem.get(key)
        if hit is not None:
            return hit
        win = None
        if self._dir is not None and spec.kind is not Kind.USER_EULER:
            p = self._dir / cache_file_name(spec, q0, lo, hi)
            if p.exists():
                win = read_window_cache(p)
        if win is None:
            win = _build_window(spec, q0, lo, hi)
            if self._dir is not None and spec.kind is not Kind.USER_EULER:
                self._dir.mkdir(parents=True, exist_ok=True)
                write_window_cache(win, self._dir / cache_file_name(spec, q0, lo, hi))
        with self._lock:
            if len(self._mem) >= self._max:
                self._mem.pop(next(iter(self._mem)))
            self._mem[key] = win
        return win
