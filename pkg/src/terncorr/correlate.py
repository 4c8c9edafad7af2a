"""Averaged ternary correlations of coefficient windows.

The central quantity is

    S(X, H) = sum_{|h| <= H} (1 - |h|/H) sum_{X <= n <= 2X} f1(n) f2(n+h) f3(n+2h),

with the triangular weight realised exactly: H * S is accumulated as
sum_h (H - |h|) T_h, which is an integer for integer-valued families, so the
direct and convolution evaluations can be compared bit for bit.  Shifted
arguments run outside [X, 2X]; windows are padded by 2H on both sides.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .dirichlet import SingularSeries
from .errors import DomainError
from .multfunc import CoefficientWindow, MultSpec, WindowCache

_INT64_GUARD = 1 << 61


class Weight(enum.Enum):
    FEJER = "fejer"


class Method(enum.Enum):
    DIRECT = "direct"
    CONVOLUTION = "conv"


@dataclass(frozen=True)
class CorrelationRequest:
    spec1: MultSpec
    spec2: MultSpec
    spec3: MultSpec
    x_start: int
    h_span: int
    weight: Weight = Weight.FEJER

    def __post_init__(self):
        if self.h_span < 1:
            raise DomainError("H must be >= 1")
        if self.h_span > self.x_start:
            raise DomainError("H must not exceed X")
        if self.x_start - 2 * self.h_span < 1:
            raise DomainError(
                "shifted window X - 2H must stay positive; "
                f"got X={self.x_start}, H={self.h_span}"
            )

    @property
    def symmetric(self) -> bool:
        return self.spec1 == self.spec2 == self.spec3


@dataclass(frozen=True)
class CorrelationResult:
    value: complex
    method: Method
    x_start: int
    h_span: int
    request: CorrelationRequest | None = None
    main_term: float | None = None
    relative_gap: float | None = None
    timing: float = 0.0
    exact_numerator: int | None = None  # H * S as an exact integer

    @property
    def exact_value(self) -> Fraction | None:
        if self.exact_numerator is None:
            return None
        return Fraction(self.exact_numerator, self.h_span)


def correlation_windows(
    req: CorrelationRequest, cache: WindowCache | None = None
) -> tuple[CoefficientWindow, CoefficientWindow, CoefficientWindow]:
    """The three padded windows needed by either evaluation method."""
    x, h = req.x_start, req.h_span
    cache = cache or WindowCache()
    w1 = cache.window(req.spec1, 1, x, 2 * x)
    w2 = cache.window(req.spec2, 1, x - h, 2 * x + h)
    w3 = cache.window(req.spec3, 1, x - 2 * h, 2 * x + 2 * h)
    return w1, w2, w3


def _use_exact(req: CorrelationRequest) -> bool:
    return req.spec1.is_exact and req.spec2.is_exact and req.spec3.is_exact


def _exact_fits_int64(windows, x: int, h: int) -> bool:
    m = [int(np.abs(w.ivalues).max()) for w in windows]
    per_h = m[0] * m[1] * m[2] * (x + 1)
    total = per_h * (2 * h + 1) * h
    return per_h < _INT64_GUARD and total < _INT64_GUARD


def ternary_direct(
    req: CorrelationRequest,
    windows: tuple[CoefficientWindow, ...] | None = None,
    cache: WindowCache | None = None,
    h_order: str = "forward",
) -> CorrelationResult:
    """S(X, H) by the h-loop: one vector triple product per shift.

    h_order ("forward" | "reverse") only permutes the outer accumulation and
    exists so reproducibility under reordering can be measured.
    """
    t0 = time.perf_counter()
    w1, w2, w3 = windows or correlation_windows(req, cache)
    x, h = req.x_start, req.h_span
    hs = range(-h, h + 1) if h_order == "forward" else range(h, -h - 1, -1)

    if _use_exact(req):
        a1 = w1.segment(x, 2 * x, exact=True)
        numerator = 0
        fits = _exact_fits_int64((w1, w2, w3), x, h)
        for hh in hs:
            a2 = w2.segment(x + hh, 2 * x + hh, exact=True)
            a3 = w3.segment(x + 2 * hh, 2 * x + 2 * hh, exact=True)
            if fits:
                t_h = int(np.dot(a1 * a2, a3))
            else:
                t_h = sum(
                    int(u) * int(v) * int(w) for u, v, w in zip(a1, a2, a3)
                )
            numerator += (h - abs(hh)) * t_h
        value = numerator / h
        return CorrelationResult(
            value=value,
            method=Method.DIRECT,
            x_start=x,
            h_span=h,
            request=req,
            timing=time.perf_counter() - t0,
            exact_numerator=numerator,
        )

    a1 = w1.segment(x, 2 * x)
    total = 0.0 + 0.0j
    comp = 0.0 + 0.0j  # Kahan carry over the mixed-sign h-accumulation
    for hh in hs:
        a2 = w2.segment(x + hh, 2 * x + hh)
        a3 = w3.segment(x + 2 * hh, 2 * x + 2 * hh)
        term = (h - abs(hh)) * complex(np.dot(a1 * a2, a3))
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    value = total / h
    if req.spec1.is_real and req.spec2.is_real and req.spec3.is_real:
        value = value.real
    return CorrelationResult(
        value=value,
        method=Method.DIRECT,
        x_start=x,
        h_span=h,
        request=req,
        timing=time.perf_counter() - t0,
    )


def ternary_convolution(
    req: CorrelationRequest,
    windows: tuple[CoefficientWindow, ...] | None = None,
    cache: WindowCache | None = None,
) -> CorrelationResult:
    """S(X, H) via the diagonal-pair contraction.

    With r = n + h the sum becomes sum_r f2(r) K(r) where
    K(r) = sum_{|j| <= H} (H - |j|) f1(r - j) f3(r + j) and f1 is cut to
    [X, 2X]: a banded convolution along the antidiagonals n + m = 2r,
    accumulated lag by lag with full-window vector operations, then
    contracted against the middle window.  Odd n + m never appears since
    n and m = n + 2h share parity.
    """
    t0 = time.perf_counter()
    w1, w2, w3 = windows or correlation_windows(req, cache)
    x, h = req.x_start, req.h_span
    r_lo, r_hi = x - h, 2 * x + h
    nr = r_hi - r_lo + 1

    if _use_exact(req):
        f1 = np.zeros(nr + 2 * h, dtype=np.int64)  # indexed by r - j over padding
        f1_src = w1.segment(x, 2 * x, exact=True)
        fits = _exact_fits_int64((w1, w2, w3), x, h)
        if fits:
            off = x - (r_lo - h)
            f1[off : off + len(f1_src)] = f1_src
            acc = np.zeros(nr, dtype=np.int64)
            f3 = w3.segment(r_lo - h, r_hi + h, exact=True)
            for j in range(-h, h + 1):
                # r - j and r + j as slices of the padded arrays
                s1 = f1[h - j : h - j + nr]
                s3 = f3[h + j : h + j + nr]
                acc += (h - abs(j)) * (s1 * s3)
            f2 = w2.segment(r_lo, r_hi, exact=True)
            numerator = int(np.dot(f2, acc))
        else:
            numerator = _conv_exact_python((w1, w2, w3), x, h)
        return CorrelationResult(
            value=numerator / h,
            method=Method.CONVOLUTION,
            x_start=x,
            h_span=h,
            request=req,
            timing=time.perf_counter() - t0,
            exact_numerator=numerator,
        )

    complex_case = not (
        req.spec1.is_real and req.spec2.is_real and req.spec3.is_real
    )
    dtype = np.complex128 if complex_case else np.float64
    f1 = np.zeros(nr + 2 * h, dtype=dtype)
    f1_src = w1.segment(x, 2 * x)
    off = x - (r_lo - h)
    f1[off : off + len(f1_src)] = f1_src
    f3 = w3.segment(r_lo - h, r_hi + h).astype(dtype, copy=False)
    acc = np.zeros(nr, dtype=dtype)
    for j in range(-h, h + 1):
        acc += (h - abs(j)) * (f1[h - j : h - j + nr] * f3[h + j : h + j + nr])
    f2 = w2.segment(r_lo, r_hi).astype(dtype, copy=False)
    value = complex(np.dot(f2, acc)) / h
    if not complex_case:
        value = value.real
    return CorrelationResult(
        value=value,
        method=Method.CONVOLUTION,
        x_start=x,
        h_span=h,
        request=req,
        timing=time.perf_counter() - t0,
    )


def _conv_exact_python(windows, x: int, h: int) -> int:
    """Arbitrary-precision fallback for the banded contraction."""
    w1, w2, w3 = windows
    numerator = 0
    for r in range(x - h, 2 * x + h + 1):
        acc = 0
        for j in range(-h, h + 1):
            n = r - j
            if not (x <= n <= 2 * x):
                continue
            acc += (h - abs(j)) * int(w1.ivalues[n - w1.lo]) * int(
                w3.ivalues[r + j - w3.lo]
            )
        numerator += int(w2.ivalues[r - w2.lo]) * acc
    return numerator


def fejer_overlap_weight(h: int, h_span: int) -> int:
    """Overlap length 2H - 2|h| of three length-2H windows shifted by h, 2h."""
    if abs(h) > h_span:
        raise DomainError(f"|h| = {abs(h)} exceeds H = {h_span}")
    return 2 * h_span - 2 * abs(h)


def compare_to_main_term(
    result: CorrelationResult,
    series: SingularSeries,
    x_start: int,
    h_span: int,
    epsilon: float = 0.05,
) -> CorrelationResult:
    """Attach the singular-series main term X*H*sum phi(q) C_q^3.

    For pole-free specs the main term is zero by construction and the gap
    reported is the smallness ratio |S| / (X * H^(1 - epsilon)).
    """
    req = result.request
    if req is None or not req.symmetric:
        raise DomainError("main-term comparison requires spec1 = spec2 = spec3")
    if req.spec1.spec_id != series.spec_id:
        raise DomainError(
            f"series computed for {series.spec_id!r}, result uses {req.spec1.spec_id!r}"
        )
    if not req.spec1.has_pole:
        gap = abs(result.value) / (x_start * h_span ** (1.0 - epsilon))
        return replace(result, main_term=0.0, relative_gap=gap)
    main = x_start * h_span * series.series_value
    gap = abs(result.value - main) / max(abs(main), 1.0)
    return replace(result, main_term=main, relative_gap=gap)


@dataclass(frozen=True)
class TripleCountResult:
    c: float
    count: int
    normalized: float


def count_triples(
    window: CoefficientWindow, x_start: int, h_span: int, c: float
) -> TripleCountResult:
    """#{(n, h) in [X, 2X] x [-H, H] : |f(n) f(n+h) f(n+2h)| >= c}."""
    x, h = x_start, h_span
    if x - 2 * h < 1:
        raise DomainError(f"shifted range X - 2H must stay positive (X={x}, H={h})")
    if not window.covers(x - 2 * h, 2 * x + 2 * h):
        raise DomainError(
            f"window [{window.lo},{window.hi}] does not cover "
            f"[{x - 2 * h},{2 * x + 2 * h}]"
        )
    absvals = np.abs(window.values)
    base = absvals[x - window.lo : 2 * x - window.lo + 1]
    count = 0
    for hh in range(-h, h + 1):
        a2 = absvals[x + hh - window.lo : 2 * x + hh - window.lo + 1]
        a3 = absvals[x + 2 * hh - window.lo : 2 * x + 2 * hh - window.lo + 1]
        count += int(np.count_nonzero(base * a2 * a3 >= c))
    return TripleCountResult(
        c=c, count=count, normalized=count / (x_start * (2 * h_span + 1))
    )
