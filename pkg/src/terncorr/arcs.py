"""Farey arc decompositions, short exponential sums, and supremum scans.

The circle [1/Q, 1+1/Q) is split into major arcs (a/q +- beta, q < Q,
beta = H^(8 eps - 1)) and their complement.  Window sums
S(alpha; x) = sum_{x <= n <= x+L} f(n) e(n alpha) are evaluated either
pointwise (phase recurrence, resynchronised in blocks) or on a full uniform
grid at once through an FFT of the zero-padded window, which is what makes
the certified-spacing sup scans affordable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.fft

from .errors import BudgetError, ConfigurationError, DomainError
from .multfunc import CoefficientWindow, MultSpec, sieve_window

_RESYNC_BLOCK = 1 << 14
_PHASE_SPLIT = 1 << 26
MAX_GRID_POINTS = 1 << 27
MAX_DECOMPOSE_Q = 2000


@dataclass(frozen=True)
class MajorArc:
    a: int
    q: int
    center: Fraction
    radius: float


@dataclass(frozen=True)
class ArcDecomposition:
    q_cut: int
    h_span: int
    epsilon: float
    beta: float
    major: tuple[MajorArc, ...]
    domain: tuple[Fraction, Fraction]  # [1/Q, 1 + 1/Q)

    def minor_intervals(self) -> list[tuple[float, float]]:
        """Complement of the major arcs inside the domain, as float intervals."""
        lo, hi = float(self.domain[0]), float(self.domain[1])
        cuts = []
        for arc in self.major:
            c = float(arc.center)
            cuts.append((max(lo, c - arc.radius), min(hi, c + arc.radius)))
        cuts.sort()
        out = []
        cursor = lo
        for a, b in cuts:
            if a > cursor:
                out.append((cursor, a))
            cursor = max(cursor, b)
        if cursor < hi:
            out.append((cursor, hi))
        return out


def decompose(q_cut: int, h_span: int, epsilon: float) -> ArcDecomposition:
    """Major arcs around all a/q with q < Q; rejects overlapping arcs."""
    if q_cut < 2:
        raise DomainError("Q must be >= 2")
    if h_span < 2:
        raise DomainError("H must be >= 2")
    if not (0.0 < epsilon < 0.125):
        raise DomainError("epsilon must lie in (0, 1/8)")
    beta = float(h_span) ** (-1.0 + 8.0 * epsilon)

    # Adjacent Farey fractions at denominators Q-1, Q-2 realise the minimum
    # gap 1/((Q-1)(Q-2)); reject without enumerating when it already fails.
    if q_cut >= 4:
        tight = Fraction(1, (q_cut - 1) * (q_cut - 2))
        if float(tight) < 2.0 * beta:
            raise ConfigurationError(
                f"major arcs around 1/{q_cut - 1} and 1/{q_cut - 2} overlap "
                f"(gap {float(tight):.3g} < 2*beta = {2 * beta:.3g}); "
                f"Q = {q_cut} too large for H = {h_span}"
            )
    if q_cut > MAX_DECOMPOSE_Q:
        raise BudgetError(f"Q = {q_cut} exceeds arc budget {MAX_DECOMPOSE_Q}")

    fracs = sorted(
        Fraction(a, q)
        for q in range(1, q_cut)
        for a in range(1, q + 1)
        if math.gcd(a, q) == 1
    )
    for left, right in zip(fracs, fracs[1:]):
        if float(right - left) < 2.0 * beta:
            raise ConfigurationError(
                f"major arcs around {left} and {right} overlap "
                f"(gap {float(right - left):.3g} < 2*beta = {2 * beta:.3g}); "
                f"Q = {q_cut} too large for H = {h_span}"
            )
    arcs = tuple(
        MajorArc(a=f.numerator, q=f.denominator, center=f, radius=beta) for f in fracs
    )
    return ArcDecomposition(
        q_cut=q_cut,
        h_span=h_span,
        epsilon=epsilon,
        beta=beta,
        major=arcs,
        domain=(Fraction(1, q_cut), 1 + Fraction(1, q_cut)),
    )


def largest_disjoint_q(q_cut: int, h_span: int, epsilon: float) -> int:
    """Largest Q' <= Q for which the decomposition has disjoint arcs.

    Adjacent Farey fractions with denominators < Q are at least
    1/((Q-1)(Q-2)) apart, which pins the answer near sqrt(1/(2 beta)).
    """
    beta = float(h_span) ** (-1.0 + 8.0 * epsilon)
    analytic = 2 + math.isqrt(max(0, int(1.0 / (2.0 * beta))))
    q = min(max(2, q_cut), analytic + 2)
    while q > 2:
        try:
            decompose(q, h_span, epsilon)
            return q
        except ConfigurationError:
            q -= 1
    return 2


# ---------------------------------------------------------------------------
# Short exponential sums


def _phase_at(n: int, alpha: float) -> complex:
    """e(n*alpha) with the product n*alpha reduced mod 1 in split arithmetic."""
    k = round(alpha * _PHASE_SPLIT)
    alo = alpha - k / _PHASE_SPLIT
    frac = ((n * k) % _PHASE_SPLIT) / _PHASE_SPLIT + n * alo
    return complex(np.exp(2j * np.pi * frac))


def unit_phases(n0: int, count: int, alpha: float) -> np.ndarray:
    """e(n*alpha) for n = n0..n0+count-1.

    Generated by the one-step recurrence z -> z*e(alpha) inside blocks,
    re-anchored against a directly evaluated phase every 2^14 terms so the
    drift never exceeds a block's worth of rounding.
    """
    out = np.empty(count, dtype=np.complex128)
    step = complex(np.exp(2j * np.pi * (alpha % 1.0)))
    ladder = np.concatenate(
        [[1.0 + 0.0j], np.cumprod(np.full(min(count, _RESYNC_BLOCK) - 1, step))]
    ) if count > 1 else np.ones(1, dtype=np.complex128)
    pos = 0
    while pos < count:
        m = min(_RESYNC_BLOCK, count - pos)
        anchor = _phase_at(n0 + pos, alpha)
        out[pos : pos + m] = anchor * ladder[:m]
        pos += m
    return out


@dataclass(frozen=True)
class ExpSumSample:
    x: int
    alpha: float
    value: complex
    trivial_bound: float


def short_exp_sum(
    window: CoefficientWindow, x: int, length: int, alpha: float
) -> ExpSumSample:
    """S(alpha; x) = sum_{x <= n <= x+length} f(n) e(n alpha)."""
    if window.q0 != 1:
        raise DomainError("exponential sums need a plain (q0 = 1) window")
    vals = window.segment(x, x + length)
    phases = unit_phases(x, length + 1, alpha)
    value = complex(np.dot(vals, phases))
    trivial = float(np.abs(vals).sum())
    return ExpSumSample(x=x, alpha=alpha % 1.0, value=value, trivial_bound=trivial)


# ---------------------------------------------------------------------------
# Bound shapes


@dataclass(frozen=True)
class ShortSumBound:
    value: float
    gamma_regime_large: bool  # |gamma| * H^(eta - eps/2) >= 10


def short_sum_bound(
    q: int,
    gamma: float,
    x_scale: int,
    h_span: int,
    eta: float,
    k: int,
    epsilon: float,
) -> ShortSumBound:
    """(q |gamma| X)^(1/2 + eps^2) H^(1/2) + H^eta (log X)^(k^2 - 1)."""
    if q < 1 or h_span < 2:
        raise DomainError("need q >= 1 and H >= 2")
    if not (0.0 < eta < 1.0):
        raise DomainError("eta must lie in (0, 1)")
    main = (q * abs(gamma) * x_scale) ** (0.5 + epsilon**2) * h_span**0.5
    tail = h_span**eta * math.log(x_scale) ** (k * k - 1)
    flag = abs(gamma) * h_span ** (eta - epsilon / 2.0) >= 10.0
    return ShortSumBound(value=main + tail, gamma_regime_large=flag)


def geometric_minor_envelope(beta: float) -> float:
    """Exact sup of |sum_{n=x}^{x+L} e(n alpha)| at distance >= beta from
    the integers: the Dirichlet-kernel bound 1/sin(pi beta)."""
    if not (0.0 < beta <= 0.5):
        raise DomainError("beta must lie in (0, 1/2]")
    return 1.0 / math.sin(math.pi * beta)


def edge_divisor_sum(x: int, length: int, eta: float, k: int) -> float:
    """Companion tail term: sum of d_k over the two length-L^eta edges."""
    span = max(1, math.ceil(length**eta))
    left = sieve_window(MultSpec.divisor_k(k), max(1, x - span), x)
    right = sieve_window(MultSpec.divisor_k(k), x + length, x + length + span)
    return float(left.ivalues.sum() + right.ivalues.sum())


# ---------------------------------------------------------------------------
# Supremum scans


@dataclass(frozen=True)
class SupScanReport:
    kind: str
    sup_abs: float
    argmax_x: int
    argmax_alpha: float
    bound_value: float
    ratio: float
    nearest_q: int
    nearest_a: int
    gamma: float
    grid_spacing: float
    refinement_depth: int
    round_sups: tuple[float, ...]
    trivial_bound: float
    edge_sum: float


def _arc_index_ranges(dec: ArcDecomposition, m_grid: int) -> list[tuple[int, int]]:
    """Half-open index ranges [i, j) of grid points j/M inside major arcs,
    folded mod 1 into [0, M)."""
    ranges = []
    for arc in dec.major:
        c = float(arc.center) % 1.0
        lo = (c - arc.radius) * m_grid
        hi = (c + arc.radius) * m_grid
        i, j = math.ceil(lo), math.floor(hi) + 1
        ranges.append((i, j))
    return ranges


def _mask_for_kind(
    dec: ArcDecomposition, m_grid: int, half: int, kind: str, fold: bool
) -> np.ndarray:
    """Boolean mask over spectrum bins 0..half for the requested arc set.

    With fold=True (real windows) bins above M/2 are reflected onto the half
    spectrum: |S| is symmetric under alpha -> 1 - alpha and the Farey arc
    set shares that symmetry, so the half spectrum carries the full sup.
    """
    major = np.zeros(half + 1, dtype=bool)
    for i, j in _arc_index_ranges(dec, m_grid):
        idx = np.arange(i, j, dtype=np.int64) % m_grid
        if fold:
            idx = np.minimum(idx, m_grid - idx)
        major[idx[idx <= half]] = True
    if kind == "major":
        return major
    return ~major


def _refine(
    window: CoefficientWindow,
    x: int,
    length: int,
    seeds: list[float],
    spacing: float,
    rounds: int,
    clamp,
) -> tuple[float, float, list[float]]:
    """Local refinement: 10x finer grids around the best points per round."""
    best_alpha, best_val = None, -1.0
    for s in seeds:
        v = abs(short_exp_sum(window, x, length, s).value)
        if v > best_val:
            best_val, best_alpha = v, s
    round_sups = [best_val]
    step = spacing
    current = list(seeds)
    for _ in range(rounds):
        step /= 10.0
        nxt = []
        for s in current:
            for t in np.linspace(s - 5 * step, s + 5 * step, 11):
                t = clamp(float(t))
                if t is None:
                    continue
                nxt.append(t)
        vals = [abs(short_exp_sum(window, x, length, t).value) for t in nxt]
        if vals:
            i = int(np.argmax(vals))
            if vals[i] > best_val:
                best_val, best_alpha = vals[i], nxt[i]
            order = np.argsort(vals)[::-1][:5]
            current = [nxt[int(o)] for o in order]
        round_sups.append(best_val)
    return best_val, best_alpha, round_sups


def sup_scan(
    window: CoefficientWindow,
    dec: ArcDecomposition,
    x: int,
    length: int,
    kind: str,
    eta: float = 0.65,
    k: int = 2,
    epsilon: float = 0.05,
) -> SupScanReport:
    """Certified-spacing supremum of |S(alpha; x)| over major or minor arcs.

    The uniform grid j/M satisfies M >= 2 pi (x+L) / tol with
    tol = 1e-2 * trivial_bound, so |S| moves by at most 1% of its trivial
    bound between neighbouring grid points (|dS/d alpha| <= 2 pi (x+L) sum|f|).
    Three rounds of tenfold local refinement around the best five grid
    points and the arc centers/edges follow.
    """
    if kind not in ("major", "minor"):
        raise DomainError("kind must be 'major' or 'minor'")
    vals = window.segment(x, x + length)
    trivial = float(np.abs(vals).sum())
    if trivial == 0.0:
        raise DomainError("window is identically zero on the scan range")

    m_min = math.ceil(2.0 * math.pi * (x + length) * 100.0)
    m_grid = scipy.fft.next_fast_len(m_min, real=True)
    if m_grid > MAX_GRID_POINTS:
        raise BudgetError(
            f"scan grid needs {m_grid} points, budget {MAX_GRID_POINTS}"
        )

    is_real = not np.iscomplexobj(vals)
    buf = np.zeros(m_grid, dtype=np.float64 if is_real else np.complex128)
    buf[x : x + length + 1] = vals
    if is_real:
        spec = scipy.fft.rfft(buf)
        half = m_grid // 2
    else:
        spec = scipy.fft.ifft(buf) * m_grid  # +2 pi i convention
        half = m_grid - 1
    mags = np.abs(spec).astype(np.float32)
    del spec, buf

    mask = _mask_for_kind(dec, m_grid, half, kind, fold=is_real)
    if not mask.any():
        raise ConfigurationError(
            f"{kind} arc set is empty at Q = {dec.q_cut}, beta = {dec.beta:.3g}"
        )
    mags[~mask] = -1.0
    top = np.argpartition(mags, -5)[-5:]
    seeds = [float(t) / m_grid for t in top if mags[t] >= 0.0]

    # Insurance points: arc centers for major scans, arc edges for minor.
    if kind == "major":
        seeds.extend(float(arc.center) % 1.0 for arc in dec.major)
    else:
        for a, b in dec.minor_intervals():
            seeds.extend((a % 1.0, (b - 1e-15) % 1.0))

    clamp = _make_clamp(dec, kind)
    seeds = [s for s in (clamp(s) for s in seeds) if s is not None]
    sup, arg, round_sups = _refine(
        window, x, length, seeds, 1.0 / m_grid, rounds=3, clamp=clamp
    )

    near_q, near_a, gamma = _nearest_center(dec, arg)
    bound = short_sum_bound(near_q, gamma, x, max(2, length), eta, k, epsilon)
    return SupScanReport(
        kind=kind,
        sup_abs=sup,
        argmax_x=x,
        argmax_alpha=arg,
        bound_value=bound.value,
        ratio=sup / bound.value if bound.value > 0 else math.inf,
        nearest_q=near_q,
        nearest_a=near_a,
        gamma=gamma,
        grid_spacing=1.0 / m_grid,
        refinement_depth=3,
        round_sups=tuple(round_sups),
        trivial_bound=trivial,
        edge_sum=edge_divisor_sum(x, length, eta, k),
    )


def _make_clamp(dec: ArcDecomposition, kind: str):
    """Return a function snapping alpha onto the requested arc set (mod 1)."""
    if kind == "major":
        arcs = [(float(a.center) % 1.0, a.radius) for a in dec.major]

        def clamp(alpha: float):
            al = alpha % 1.0
            best, bdist = None, math.inf
            for c, r in arcs:
                d = _signed_diff(al, c)
                if abs(d) <= r:
                    return al
                if abs(d) - r < bdist:
                    bdist = abs(d) - r
                    best = (c + math.copysign(r, d)) % 1.0
            return best

    else:
        intervals = dec.minor_intervals()  # endpoints may exceed 1

        def clamp(alpha: float):
            al = alpha % 1.0
            best, bdist = None, math.inf
            for a, b in intervals:
                for cand in (al, al + 1.0):
                    if a <= cand <= b:
                        return al
                    t = min(max(cand, a), b)
                    d = abs(t - cand)
                    if d < bdist:
                        bdist, best = d, t % 1.0
            return best

    return clamp


def _signed_diff(alpha: float, center: float) -> float:
    d = alpha - center
    if d > 0.5:
        d -= 1.0
    if d < -0.5:
        d += 1.0
    return d


def _nearest_center(dec: ArcDecomposition, alpha: float) -> tuple[int, int, float]:
    best = (1, 1, math.inf)
    for arc in dec.major:
        c = float(arc.center)
        for shift in (-1.0, 0.0, 1.0):
            g = (alpha % 1.0) + shift - (c % 1.0)
            if abs(g) < abs(best[2]):
                best = (arc.q, arc.a, g)
    return best


# ---------------------------------------------------------------------------
# Major-arc model


@dataclass(frozen=True)
class MajorArcModel:
    model: complex
    actual: complex
    residual: float


def major_arc_model(
    spec: MultSpec,
    c_q: complex,
    q: int,
    a: int,
    gamma: float,
    x: int,
    h_span: int,
    window: CoefficientWindow | None = None,
) -> MajorArcModel:
    """Compare S(a/q + gamma; x) over [x, x+2H] with C_q * integral of
    e(gamma y) over the same range (closed form, gamma -> 0 safe)."""
    if q < 1 or math.gcd(a, q) != 1:
        raise DomainError(f"need gcd(a, q) = 1, got a={a}, q={q}")
    length = 2 * h_span
    if window is None:
        window = sieve_window(spec, x, x + length)
    actual = short_exp_sum(window, x, length, a / q + gamma).value
    # integral of e(gamma y) over [x, x+2H] = 2H e(gamma (x+H)) sinc(2 gamma H)
    phase = _phase_at(x + h_span, gamma) if gamma != 0.0 else 1.0
    model = complex(c_q) * 2.0 * h_span * float(np.sinc(2.0 * gamma * h_span)) * phase
    return MajorArcModel(model=model, actual=actual, residual=abs(actual - model))
