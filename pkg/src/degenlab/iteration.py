"""Moser and Bombieri recurrences in the b-domain and the constants they
produce.

Iterates of the bump functions grow doubly exponentially, so every sequence
here is stored as b = (ln B)^{1/m} (large side) or b = (ln(A/B))^{1/m}
(small side), where a single iteration step is an affine-plus-log update.
The module also builds cutoff schedules with their iteration constants K,
Harnack constants from superradius/doubling data, the dyadic continuity
criterion, oscillation runs, and the claim-verdict table for the profile
families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma_fn
from scipy.special import gammaincc

from .geometry import DegeneracyFamily, Geometry
from .metric import ball_area_2d, ball_volume_3d, doubling_increment
from .numerics import LogVal
from .orlicz import (
    LargeBump,
    SmallBump,
    Superradius,
    phi_eval,
    phi_inv,
    psi_iter_ln,
    superradius_eval,
    superradius_log,
)

__all__ = [
    "MoserGapError",
    "MoserParams",
    "IterationTrace",
    "GapReport",
    "CutoffSchedule",
    "HarnackParams",
    "HarnackReport",
    "DeGiorgiReport",
    "GrowthReport",
    "cstar",
    "moser_run",
    "moser_constant",
    "moser_gap",
    "separation_index",
    "cutoff_schedule",
    "k_standard",
    "k_nonstandard",
    "bombieri_schedule",
    "bombieri_bound",
    "harnack_constant",
    "degiorgi_criterion",
    "growth_condition_check",
    "verdict",
    "oscillation_run",
    "generalized_ibi_sharp",
]

_LN_MAX = math.log(np.finfo(float).max)
_STANDARD_C = 3.0 / math.pi**2
_CLAIMS = ("local_bound", "max_principle", "continuity")


class MoserGapError(ValueError):
    """Raised when a comparison constant is requested for m <= 2, where the
    affine majorant construction breaks down."""


# -- domain types ----------------------------------------------------------


@dataclass(frozen=True)
class MoserParams:
    """Parameters of one b-domain run.

    `m` is the bump exponent, `K` the prefactor of the n-th step (on the
    small side K is the full multiplier of Theta(B), normalization
    included), `gamma` the polynomial rate, `b0` the starting value
    (ln B0)^{1/m} on the large side or (ln(A/B0))^{1/m} on the small side.
    `M` is the small-side bump threshold; None selects e^{2^m}.
    """

    m: float
    K: float
    gamma: float
    b0: float
    side: str = "large"
    M: float | None = None

    def __post_init__(self) -> None:
        if not (self.m > 1 and math.isfinite(self.m)):
            raise ValueError(f"m must be > 1 and finite, got {self.m!r}")
        if not (self.K > 1 and math.isfinite(self.K)):
            raise ValueError(f"K must be > 1 and finite, got {self.K!r}")
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be >= 0 and finite, got {self.gamma!r}")
        if self.side not in ("large", "small"):
            raise ValueError(f"side must be 'large' or 'small', got {self.side!r}")
        if not math.isfinite(self.b0):
            raise ValueError(f"b0 must be finite, got {self.b0!r}")
        if self.side == "large":
            if not self.b0 > 2:
                raise ValueError(f"large side requires b0 > 2, got {self.b0!r}")
            return
        if self.M is None:
            object.__setattr__(self, "M", math.exp(2.0**self.m))
        floor = self.ln_M ** (1.0 / self.m) + 1.0
        if not self.b0 > floor:
            raise ValueError(
                f"small side requires b0 > (ln M)^(1/m) + 1 = {floor:.6g}, got {self.b0!r}"
            )

    @property
    def ln_M(self) -> float:
        if self.M is None:
            raise ValueError("ln_M is defined on the small side only")
        return math.log(self.M)


@dataclass(frozen=True)
class IterationTrace:
    """b-domain iterates against the affine comparison a_n = a0 + n.

    `verdict` says the comparison dominates (a >= b, large side) or is
    dominated (a <= b, small side) at every computed index; `gap_witness`
    is the first failing index when it does not.
    """

    b: np.ndarray = field(repr=False)
    a: np.ndarray = field(repr=False)
    verdict: bool
    gap_witness: int | None


@dataclass(frozen=True)
class GapReport:
    """Growth demonstration for the quadratic case m = 2 with gamma = 0.

    `excess` is b_n - n - b0 and `back_exponent` the back-iterate exponent
    (b_n - n)^2; an affine majorant would force `excess` to stay bounded,
    but it grows like a multiple of ln n instead.
    """

    b0: float
    b: np.ndarray = field(repr=False)
    excess: np.ndarray = field(repr=False)
    back_exponent: np.ndarray = field(repr=False)
    log_growth_ok: bool
    back_increasing: bool


@dataclass(frozen=True)
class CutoffSchedule:
    """Nested radii r_1 = r > r_2 > ... with Lipschitz gradient bounds.

    Standard decrements are (c/j^2) r with c = 3/pi^2, so they accumulate
    to r/2; nonstandard decrements are doubling increments scaled by
    (1-nu)/j^2, which keeps consecutive ball ratios below `ratio_bound`.
    Gradient bounds are the reciprocal decrements.
    """

    kind: str
    r: float
    nu: float
    radii: tuple[float, ...]
    gradient_bounds: tuple[float, ...]
    ratio_bound: float | None = None


@dataclass(frozen=True)
class HarnackParams:
    """Constants feeding the oscillation-splitting bound: suprema c1star,
    c2star >= 1 of the scale-dependent constants over [nu r, r], radius
    fractions 0 < nu0 <= nu < 1, exponent tau, and amplitude A."""

    c1star: float
    c2star: float
    nu: float
    nu0: float
    tau: float
    A: float

    def __post_init__(self) -> None:
        if not (self.c1star >= 1 and math.isfinite(self.c1star)):
            raise ValueError(f"c1star must be >= 1 and finite, got {self.c1star!r}")
        if not (self.c2star >= 1 and math.isfinite(self.c2star)):
            raise ValueError(f"c2star must be >= 1 and finite, got {self.c2star!r}")
        if not 0 < self.nu0 <= self.nu < 1:
            raise ValueError(
                f"need 0 < nu0 <= nu < 1, got nu0={self.nu0!r}, nu={self.nu!r}"
            )
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if not (self.A > 0 and math.isfinite(self.A)):
            raise ValueError(f"A must be positive, got {self.A!r}")


@dataclass(frozen=True)
class HarnackReport:
    """C_Har at one radius with the constituent suprema recorded."""

    value: LogVal
    c1_star: LogVal
    c2_star: float
    nu: float
    tau: float


@dataclass(frozen=True)
class DeGiorgiReport:
    """Dyadic partial sums of 1/C_Har(tau^k); `diverges` compares the last
    partial sum against the one at the square-root horizon."""

    diverges: bool
    ks: np.ndarray = field(repr=False)
    partial_sums: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class GrowthReport:
    """Doubling-increment growth check for the iterated-log family.

    `ratios` samples (l_{k+1} + l_k^{sigma(m-1)})^m / l_3 at r = 10^{-j},
    where l_i is the i-th iterated logarithm of 1/r with levels beyond the
    representable range plateaued at 0.  `holds` classifies the trend of
    the same expression structurally: the numerator grows at iterated-log
    level `dominant_level` with total exponent `dominant_power`, so the
    ratio tends to 0 exactly when that level exceeds 3, or equals 3 with
    power below 1.
    """

    holds: bool
    radii: tuple[float, ...]
    ratios: tuple[float, ...]
    satisfied: tuple[bool, ...]
    dominant_level: int
    dominant_power: float
    eps: float


# -- comparison series and Moser runs --------------------------------------


def _series_sum(m: float, ln_K: float, gamma: float, b0: float) -> float:
    """(1/m) sum_{j>=1} (ln K + gamma ln j) / (b0 + j - 1)^{m-1}, summed
    until the terms are negligible and closed with the integral tail bound
    over 1/u^{m-1} (an upper estimate, as required for a valid comparison
    constant; b0 > 1 makes the substitution one-sided)."""
    if m <= 2.0:
        raise MoserGapError(
            f"the comparison series diverges for m = {m!r} <= 2 (Moser gap)"
        )
    total = 0.0
    j_hi = 0
    block = 1 << 14
    while j_hi < (1 << 22):
        js = np.arange(j_hi + 1, j_hi + block + 1, dtype=float)
        terms = (ln_K + gamma * np.log(js)) / (b0 + js - 1.0) ** (m - 1.0)
        total += float(np.sum(terms))
        j_hi += block
        if abs(terms[-1]) < 1e-12 * max(abs(total), 1.0):
            break
    U = float(j_hi)
    tail = ln_K * U ** (2.0 - m) / (m - 2.0) + gamma * (
        U ** (2.0 - m) * math.log(U) / (m - 2.0) + U ** (2.0 - m) / (m - 2.0) ** 2
    )
    return (total + tail) / m


def _series_sum_small(m: float, ln_K: float, gamma: float) -> float:
    """sum_{j>=1} (ln K + (gamma+1) ln j) / j^{m-1}; the extra +1 on the
    rate absorbs the per-step correction from the Theta factor, so this
    dominates the small-side drift of b_n below b0 + n."""
    if m <= 2.0:
        raise MoserGapError(
            f"the comparison series diverges for m = {m!r} <= 2 (Moser gap)"
        )
    total = 0.0
    j_hi = 0
    block = 1 << 14
    while j_hi < (1 << 22):
        js = np.arange(j_hi + 1, j_hi + block + 1, dtype=float)
        terms = (ln_K + (gamma + 1.0) * np.log(js)) / js ** (m - 1.0)
        total += float(np.sum(terms))
        j_hi += block
        if abs(terms[-1]) < 1e-12 * max(abs(total), 1.0):
            break
    U = float(j_hi)
    tail = ln_K * U ** (2.0 - m) / (m - 2.0) + (gamma + 1.0) * (
        U ** (2.0 - m) * math.log(U) / (m - 2.0) + U ** (2.0 - m) / (m - 2.0) ** 2
    )
    return total + tail


def _a0(params: MoserParams, enforce_floor: bool) -> float:
    if params.side == "large":
        return params.b0 + _series_sum(
            params.m, math.log(params.K), params.gamma, params.b0
        )
    S = _series_sum_small(params.m, math.log(params.K), params.gamma)
    if enforce_floor:
        if params.K < math.e:
            raise ValueError(
                f"small side comparison needs K >= e, got {params.K!r}"
            )
        floor = (
            1.0
            + params.ln_M ** (1.0 / params.m)
            + params.gamma
            + math.log(params.K)
            + S
        )
        if params.b0 < floor:
            raise ValueError(
                f"small side needs b0 >= {floor:.6g} for a valid comparison, "
                f"got {params.b0!r}"
            )
    return params.b0 - S


def cstar(params: MoserParams) -> LogVal:
    """Comparison constant for the iterated bump inequality.

    Large side: exp(a0^m) with a0 = b0 + (1/m) sum_{j>=1} (ln K + gamma
    ln j)/(b0+j-1)^{m-1}.  Small side: exp(-a0^m) with a0 = b0 minus the
    coarser sum of (ln K + (gamma+1) ln j)/j^{m-1}, admissible only when
    K >= e and b0 clears 1 + (ln M)^{1/m} + gamma + ln K plus that sum.
    Both require m > 2; for m <= 2 the series diverges and no affine
    comparison exists.
    """
    return LogVal.from_ln(_signed_a0_power(params))


def _signed_a0_power(params: MoserParams) -> float:
    a0 = _a0(params, enforce_floor=True)
    power = a0**params.m
    return power if params.side == "large" else -power


def moser_run(params: MoserParams, N: int) -> IterationTrace:
    """Run the b-domain recursion for N steps against a_n = a0 + n.

    Large side: b_n = (b_{n-1}^m + ln(K n^gamma))^{1/m} + 1.  Small side:
    b_n = (b_{n-1}^m - ln(K n^gamma) - (1/m) ln I_{n-1})^{1/m} + 1 with
    I = ((b^m - ln A)^{1/m} + 1)^m - ln A; the iterate must keep the
    argument of the bump inside (0, 1/M), otherwise a ValueError reports
    the escaping index.
    """
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    m = params.m
    ln_K = math.log(params.K)
    gamma = params.gamma
    inv_m = 1.0 / m
    b = np.empty(N + 1)
    b[0] = params.b0
    if params.side == "large":
        prev = params.b0
        for n in range(1, N + 1):
            prev = (prev**m + ln_K + gamma * math.log(n)) ** inv_m + 1.0
            b[n] = prev
    else:
        bump = SmallBump(m, params.M)
        ln_A, ln_M = bump.ln_A, bump.ln_M
        prev = params.b0
        for n in range(1, N + 1):
            bm = prev**m
            if bm <= ln_A:
                raise ValueError(
                    f"Theta argument escaped (0, 1/M) at index {n}: iterate "
                    f"left the curved domain"
                )
            inner = ((bm - ln_A) ** inv_m + 1.0) ** m - ln_A
            ln_inv_arg = bm - ln_K - gamma * math.log(n) - inv_m * math.log(inner)
            if ln_inv_arg <= ln_M:
                raise ValueError(
                    f"Theta argument escaped (0, 1/M) at index {n}: "
                    f"ln(1/arg) = {ln_inv_arg:.6g} <= ln M = {ln_M:.6g}"
                )
            prev = ln_inv_arg**inv_m + 1.0
            b[n] = prev
    a0 = _a0(params, enforce_floor=False)
    a = a0 + np.arange(N + 1, dtype=float)
    diff = a - b if params.side == "large" else b - a
    bad = np.flatnonzero(diff < 0)
    verdict = bad.size == 0
    witness = None if verdict else int(bad[0])
    return IterationTrace(b=b, a=a, verdict=verdict, gap_witness=witness)


def moser_constant(
    geom: Geometry,
    m: float,
    r: float,
    eps: float = 0.1,
    Cm: float | None = None,
    C: float = 1.0,
    dim: int = 2,
) -> LogVal:
    """Large-side comparison constant at scale r: cstar evaluated with
    B0 = 9 e^{2^m}, K = k_standard(geom, m, r), and gamma = m + 1 + eps."""
    ln_K = k_standard(geom, m, r, Cm=Cm, eps=eps, C=C, dim=dim).ln_value
    b0 = (math.log(9.0) + 2.0**m) ** (1.0 / m)
    S = _series_sum(m, ln_K, m + 1.0 + eps, b0)
    return LogVal.from_ln((b0 + S) ** m)


def moser_gap(K: float, N: int, b0: float | None = None) -> GapReport:
    """Demonstrate the failure of the affine comparison at m = 2, gamma = 0.

    The run requires K > e; the excess b_n - n - b0 then keeps growing like
    a multiple of ln n (the report checks it stays above 0.1 ln n) and the
    back-iterate exponent (b_n - n)^2 increases strictly, so no a0 + n can
    dominate.
    """
    if not K > math.e:
        raise ValueError(f"the gap demonstration needs K > e, got {K!r}")
    if not (isinstance(N, (int, np.integer)) and N >= 1):
        raise ValueError(f"N must be an integer >= 1, got {N!r}")
    if b0 is None:
        b0 = math.sqrt(math.log(9.0) + 4.0)
    ln_K = math.log(K)
    b = np.empty(N + 1)
    b[0] = prev = float(b0)
    for n in range(1, N + 1):
        prev = math.sqrt(prev * prev + ln_K) + 1.0
        b[n] = prev
    ns = np.arange(N + 1, dtype=float)
    excess = b - ns - b0
    back_exponent = (b - ns) ** 2
    with np.errstate(divide="ignore"):
        required = 0.1 * np.log(np.maximum(ns[1:], 1.0))
    log_growth_ok = bool(np.all(excess[1:] >= required))
    hi = min(N, 10**5)
    back_increasing = bool(np.all(np.diff(back_exponent[10 : hi + 1]) > 0)) if hi >= 11 else True
    return GapReport(
        b0=float(b0),
        b=b,
        excess=excess,
        back_exponent=back_exponent,
        log_growth_ok=log_growth_ok,
        back_increasing=back_increasing,
    )


def separation_index(
    m: float,
    M: float,
    M1: float,
    M2: float | None,
    delta: float,
    side: str,
    cap: int = 100_000,
) -> int:
    """Minimal n with delta Phi^{(n)}(M) >= Phi^{(n)}(M1) (large side, needs
    M > M1 > 0) or delta Psi^{(n)}(1/M2) >= Psi^{(n)}(1/M1) (small side,
    needs M1 > M2 > M).  Values are iterated in the log domain; if no index
    at or below `cap` works, `cap` is returned."""
    if not (0 < delta <= 1 and math.isfinite(delta)):
        raise ValueError(f"delta must lie in (0, 1], got {delta!r}")
    if side not in ("large", "small"):
        raise ValueError(f"side must be 'large' or 'small', got {side!r}")
    if not (isinstance(cap, (int, np.integer)) and cap >= 0):
        raise ValueError(f"cap must be a nonnegative integer, got {cap!r}")
    ln_delta = math.log(delta)
    if side == "large":
        if not (M > M1 > 0):
            raise ValueError(f"large side needs M > M1 > 0, got M={M!r}, M1={M1!r}")
        bump = LargeBump(m)
        x, y = math.log(M), math.log(M1)
        for n in range(cap + 1):
            if x + ln_delta >= y:
                return n
            x = phi_eval(bump, LogVal.from_ln(x)).ln_value
            y = phi_eval(bump, LogVal.from_ln(y)).ln_value
        return cap
    if M2 is None or not (M1 > M2 > M > 1):
        raise ValueError(
            f"small side needs M1 > M2 > M > 1, got M={M!r}, M1={M1!r}, M2={M2!r}"
        )
    bump = SmallBump(m, M)
    x1, x2 = math.log(M1), math.log(M2)
    for n in range(cap + 1):
        if x1 - x2 >= -ln_delta:
            return n
        x1 = psi_iter_ln(bump, x1, 1)
        x2 = psi_iter_ln(bump, x2, 1)
    return cap


# -- cutoff schedules and K constants --------------------------------------


def _ball_measure(geom: Geometry, r: float, dim: int) -> float:
    if dim == 2:
        return ball_area_2d(geom, 0.0, r)
    return ball_volume_3d(geom, 0.0, r, cross_check=False)


def cutoff_schedule(
    kind: str,
    geom: Geometry,
    r: float,
    nu: float = 0.5,
    n_terms: int = 64,
    dim: int = 2,
    G: float = 1.0,
) -> CutoffSchedule:
    """Build the nested cutoff radii with their Lipschitz gradient bounds.

    `standard` uses decrements (c/j^2) r with c = 3/pi^2 (so the radii
    converge to r/2); `nonstandard` uses ((1-nu)/j^2) times the doubling
    increment at the current radius, which bounds consecutive ball ratios
    by the doubling constant.  `G` scales the nonstandard gradient bounds.
    """
    if kind not in ("standard", "nonstandard"):
        raise ValueError(f"kind must be 'standard' or 'nonstandard', got {kind!r}")
    if not (geom.R > r > 0):
        raise ValueError(f"need 0 < r < R = {geom.R:.6g}, got {r!r}")
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu!r}")
    if not (isinstance(n_terms, (int, np.integer)) and n_terms >= 1):
        raise ValueError(f"n_terms must be an integer >= 1, got {n_terms!r}")
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if kind == "standard":
        js = np.arange(1, n_terms + 1, dtype=float)
        decrements = _STANDARD_C * r / js**2
        radii = np.concatenate([[r], r - np.cumsum(decrements)])
        grads = 1.0 / decrements
        return CutoffSchedule(
            kind=kind,
            r=float(r),
            nu=float(nu),
            radii=tuple(float(v) for v in radii),
            gradient_bounds=tuple(float(v) for v in grads),
        )
    radii = [float(r)]
    grads = []
    for j in range(1, n_terms + 1):
        rj = radii[-1]
        delta = doubling_increment(geom, 0.0, rj, dim)
        dec = (1.0 - nu) * delta / j**2
        nxt = rj - dec
        if not nxt > 0:
            raise ValueError(f"cutoff radii collapsed to 0 at j = {j}")
        grads.append(G / dec)
        radii.append(nxt)
    measures = [_ball_measure(geom, rj, dim) for rj in radii]
    ratio = max(measures[j] / measures[j + 1] for j in range(n_terms))
    return CutoffSchedule(
        kind=kind,
        r=float(r),
        nu=float(nu),
        radii=tuple(radii),
        gradient_bounds=tuple(grads),
        ratio_bound=float(ratio),
    )


def k_standard(
    geom: Geometry,
    m: float,
    r: float,
    Cm: float | None = None,
    eps: float = 0.1,
    C: float = 1.0,
    dim: int = 2,
    n_terms: int = 400,
    variant: str = "large",
) -> LogVal:
    """Iteration constant for the standard cutoff schedule.

    Returns sup_n gamma_n^* M(n) / (n+1)^{m+1+eps} over the schedule, where
    gamma_n is the consecutive ball ratio, gamma_n^* = 1/Phi^{-1}(1/gamma_n),
    and M(n) = 4 C n^{(m-1)/2} grad_n phi(r_n) combines the cutoff gradient
    bound with the superradius.  The supremum is finite because the gradient
    bounds grow like n^2 while the denominator grows at rate m+1+eps.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    sched = cutoff_schedule("standard", geom, r, n_terms=n_terms, dim=dim)
    sr = Superradius(geom, m, Cm=Cm, variant=variant)
    bump = LargeBump(m)
    radii = sched.radii
    measures = [_ball_measure(geom, rho, dim) for rho in radii]
    best = -math.inf
    for n in range(1, n_terms + 1):
        ln_gamma = math.log(measures[n - 1]) - math.log(measures[n])
        ln_gamma_star = -phi_inv(bump, LogVal.from_ln(-ln_gamma)).ln_value
        term = (
            math.log(4.0)
            + math.log(C)
            + 0.5 * (m - 1.0) * math.log(n)
            + math.log(sched.gradient_bounds[n - 1])
            + superradius_log(sr, radii[n - 1])
            + ln_gamma_star
            - (m + 1.0 + eps) * math.log(n + 1.0)
        )
        best = max(best, term)
    return LogVal.from_ln(best)


def k_nonstandard(
    geom: Geometry,
    m: float,
    r: float,
    nu: float,
    Cm: float | None = None,
    C: float = 1.0,
    dim: int = 2,
    variant: str = "small",
) -> float:
    """Iteration constant for the nonstandard schedule:
    C phi(nu r) / ((1 - nu) delta(nu r))."""
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu!r}")
    if not (geom.R > r > 0):
        raise ValueError(f"need 0 < r < R = {geom.R:.6g}, got {r!r}")
    sr = Superradius(geom, m, Cm=Cm, variant=variant)
    ln_phi = superradius_log(sr, nu * r)
    delta = doubling_increment(geom, 0.0, nu * r, dim)
    ln_K = math.log(C) + ln_phi - math.log1p(-nu) - math.log(delta)
    return math.exp(ln_K) if ln_K <= _LN_MAX else math.inf


# -- Bombieri schedules and bounds -----------------------------------------


def _schedule_sum(ln_C: float, ln_eta: float, A: float, tau: float) -> float:
    """sum_{k>=1} exp(-((k ln eta + ln C)/(4A))^{1/tau}) plus an integral
    tail bound, so the result is an upper estimate."""
    total = 0.0
    k_hi = 0
    block = 1 << 14
    last = math.inf
    while k_hi < (1 << 21):
        ks = np.arange(k_hi + 1, k_hi + block + 1, dtype=float)
        exponents = ((ks * ln_eta + ln_C) / (4.0 * A)) ** (1.0 / tau)
        terms = np.exp(-exponents)
        total += float(np.sum(terms))
        last = float(terms[-1])
        k_hi += block
        if last < 1e-15:
            break
    # Tail bound: for k > k_hi, k ln eta + ln C >= k ln eta / 2 once
    # k >= 2 |ln C| / ln eta, so the terms are below exp(-c k^{1/tau}) with
    # c = (ln eta / (8A))^{1/tau}, whose sum is an incomplete-gamma integral.
    if last > 0.0:
        c = (ln_eta / (8.0 * A)) ** (1.0 / tau)
        s0 = c * k_hi ** (1.0 / tau)
        if k_hi >= 2.0 * abs(ln_C) / ln_eta:
            total += tau / c**tau * float(_gamma_fn(tau) * gammaincc(tau, s0))
    return total


def bombieri_schedule(
    nu: float, A: float, tau: float, eta: float, n_terms: int = 64
) -> tuple[LogVal, np.ndarray]:
    """Radius fractions nu_k = 1 - exp(-((k ln eta + ln C)/(4A))^{1/tau})
    with the minimal constant C making sum_k (1 - nu_k) < 1 - nu, found by
    bisection; the product of the nu_k then exceeds nu, and each nu_k turns
    the amplitude identity exp(4A (ln 1/(1-nu_k))^tau) = C eta^k into an
    exact equality.  C is returned as a LogVal: slow stretched-exponential
    decay (tau > 1) can push it far beyond float range."""
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu!r}")
    if not (A > 0 and math.isfinite(A)):
        raise ValueError(f"A must be positive, got {A!r}")
    if not (tau > 0 and math.isfinite(tau)):
        raise ValueError(f"tau must be positive, got {tau!r}")
    if not (eta > 1 and math.isfinite(eta)):
        raise ValueError(f"eta must be > 1, got {eta!r}")
    if not (isinstance(n_terms, (int, np.integer)) and n_terms >= 1):
        raise ValueError(f"n_terms must be an integer >= 1, got {n_terms!r}")
    ln_eta = math.log(eta)
    target = 1.0 - nu
    lo = -ln_eta * (1.0 - 1e-12)
    hi = 1.0
    while _schedule_sum(hi, ln_eta, A, tau) >= target:
        hi *= 2.0
        if hi > 1e12:
            raise RuntimeError("bisection bracket for the schedule constant blew up")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _schedule_sum(mid, ln_eta, A, tau) < target:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, abs(hi)):
            break
    ks = np.arange(1, n_terms + 1, dtype=float)
    nu_seq = -np.expm1(-(((ks * ln_eta + hi) / (4.0 * A)) ** (1.0 / tau)))
    return LogVal.from_ln(hi), nu_seq


def _three_quarters_series(inner_C: float, tau: float) -> float:
    """sum_{k>=0} (3/4)^{k/2 - inner_C k^{1-1/tau}}; the linear term wins
    eventually, so the series always converges."""
    exponent_rate = 1.0 - 1.0 / tau
    k_turn = (2.0 * inner_C * exponent_rate) ** tau if exponent_rate > 0 else 0.0
    total = 1.0  # k = 0 term
    k_hi = 0
    block = 1 << 12
    cap = max(1 << 20, 8 * int(k_turn) + 8)
    ln34 = math.log(0.75)
    while k_hi < cap:
        ks = np.arange(k_hi + 1, k_hi + block + 1, dtype=float)
        exponents = 0.5 * ks - inner_C * ks**exponent_rate
        total += float(np.sum(np.exp(ln34 * exponents)))
        k_hi += block
        if k_hi > k_turn and ln34 * (0.5 * k_hi - inner_C * k_hi**exponent_rate) < math.log(1e-14):
            break
    return total


def bombieri_bound(
    hp: HarnackParams, inner_C: float = 1.0, omega_r: float | None = None
) -> float:
    """Fixed-point constant of the oscillation recursion
    Omega(nu r) <= (3/4) Omega(r) + 8 c2 c1^4 exp(4A (ln 1/(1-nu))^tau).

    Concatenating the recursion over the scheduled radii gives
    b = exp(2 S exp(4 A inner_C (ln 1/(1-nu0))^tau) c2star c1star^4) with
    S the three-quarters series.  When the initial oscillation `omega_r`
    is supplied, the degenerate branches short-circuit: a nonpositive
    oscillation needs only b = e, and omega_r <= 2 c2star yields
    exp(2 c2star).
    """
    if not (inner_C > 0 and math.isfinite(inner_C)):
        raise ValueError(f"inner_C must be positive, got {inner_C!r}")
    if omega_r is not None:
        if omega_r <= 0:
            return math.e
        if omega_r <= 2.0 * hp.c2star:
            arg = 2.0 * hp.c2star
            return math.exp(arg) if arg <= _LN_MAX else math.inf
    S = _three_quarters_series(inner_C, hp.tau)
    ln_cfun = (
        math.log(2.0)
        + math.log(S)
        + 4.0 * hp.A * inner_C * (-math.log1p(-hp.nu0)) ** hp.tau
    )
    if ln_cfun > _LN_MAX:
        return math.inf
    ln_b = math.exp(ln_cfun) * hp.c2star * hp.c1star**4
    return math.exp(ln_b) if ln_b <= _LN_MAX else math.inf


# -- Harnack constants and the continuity criterion ------------------------


def harnack_constant(
    geom: Geometry,
    m: float,
    r: float,
    nu: float,
    Cm: float | None = None,
    C: float = 1.0,
    C_W: float = 1.0,
    dim: int = 2,
    n_scan: int = 33,
    variant: str = "small",
) -> HarnackReport:
    """C_Har(r) = exp(64 c1star^4 c2star / (C (1-nu)^{4 tau})) with tau = m.

    The constituents are c1(rho) = exp(C (ln(phi(rho)/delta(rho)))^m) and
    c2(rho) = C_W rho / delta(rho), with suprema taken over a geometric
    scan of [nu r, r].  The superradius must be nondecreasing on (0, r]
    (validated up front); the result saturates to the LogVal +inf state
    when even the logarithm overflows.
    """
    if not 0 < nu < 1:
        raise ValueError(f"nu must lie in (0, 1), got {nu!r}")
    if not (geom.R > r > 0):
        raise ValueError(f"need 0 < r < R = {geom.R:.6g}, got {r!r}")
    sr = Superradius(geom, m, Cm=Cm, variant=variant)
    superradius_eval(sr, r, check_monotone=True)
    c1_ln = -math.inf
    c2 = -math.inf
    for s in np.geomspace(nu * r, r, n_scan):
        delta = doubling_increment(geom, 0.0, float(s), dim)
        gap = superradius_log(sr, float(s)) - math.log(delta)
        c1_ln = max(c1_ln, C * gap**m)
        c2 = max(c2, C_W * float(s) / delta)
    tau = m
    ln_inner = (
        math.log(64.0)
        + 4.0 * c1_ln
        + math.log(c2)
        - math.log(C)
        - 4.0 * tau * math.log1p(-nu)
    )
    ln_value = math.exp(ln_inner) if ln_inner <= _LN_MAX else math.inf
    return HarnackReport(
        value=LogVal.from_ln(ln_value),
        c1_star=LogVal.from_ln(c1_ln),
        c2_star=c2,
        nu=float(nu),
        tau=float(tau),
    )


def _eval_on_logradii(fn, L: np.ndarray) -> np.ndarray:
    """Evaluate a scalar-or-vectorized callable on an array of ln(1/r)
    values, accepting LogVal scalar returns."""
    try:
        out = np.asarray(fn(L), dtype=float)
        if out.shape == L.shape:
            return out
    except (TypeError, ValueError):
        pass
    vals = np.empty(L.shape)
    for i, li in enumerate(L):
        v = fn(float(li))
        vals[i] = v.to_float() if isinstance(v, LogVal) else float(v)
    return vals


def degiorgi_criterion(
    c_har_fn, tau: float, Kmax: int, tol: float = 0.05
) -> DeGiorgiReport:
    """Divergence test for sum_k 1/C_Har(tau^k) over a dyadic horizon.

    `c_har_fn` receives the radius in log form ln(1/r) = k ln(1/tau) (so
    that 2^20 dyadic steps stay representable) and may return floats,
    arrays, or LogVal.  Partial sums are recorded at k = 1, 2, 4, ...;
    `diverges` holds when the final sum exceeds the one at the square-root
    horizon by at least `tol` — a sum settling before then is treated as
    convergent, which is what stops the oscillation argument.
    """
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    if not (isinstance(Kmax, (int, np.integer)) and Kmax >= 4):
        raise ValueError(f"Kmax must be an integer >= 4, got {Kmax!r}")
    L = np.arange(1, Kmax + 1, dtype=float) * math.log(1.0 / tau)
    values = _eval_on_logradii(c_har_fn, L)
    if np.any(values <= 0):
        raise ValueError("C_Har values must be positive")
    with np.errstate(divide="ignore"):
        terms = 1.0 / values
    cums = np.cumsum(terms)
    J = int(math.floor(math.log2(Kmax)))
    ks = 2 ** np.arange(0, J + 1)
    partial_sums = cums[ks - 1]
    diverges = bool(partial_sums[-1] - partial_sums[J // 2] >= tol)
    return DeGiorgiReport(diverges=diverges, ks=ks, partial_sums=partial_sums)


def _iterated_logs(L: float, depth: int) -> list[float]:
    """[l_1, ..., l_depth] with l_1 = L and l_{i+1} = ln l_i, plateaued at 0
    once the previous level drops to 1 or below (deeper levels are not
    representable in float for any reachable radius)."""
    levels = [L]
    for _ in range(depth - 1):
        prev = levels[-1]
        levels.append(math.log(prev) if prev > 1.0 else 0.0)
    return levels


def growth_condition_check(geom, m: float, eps: float = 1.0) -> GrowthReport:
    """Check whether (ln phi(r)/delta(r))^m is negligible against the
    third iterated logarithm of 1/r for an iterated-log profile.

    For the family with F = ln(1/r) (ln^{(k)} 1/r)^sigma the quotient is
    (l_{k+1} + l_k^{sigma(m-1)})^m / l_3.  The report samples it at
    r = 10^{-j}, j = 2..12 (`satisfied` flags ratio <= eps per radius) and
    classifies the trend structurally: the numerator lives at iterated-log
    level k with total exponent sigma (m-1) m, so the ratio tends to 0
    exactly when k > 3 or k = 3 with that exponent below 1.  Sampling
    alone cannot reach the asymptotic regime for k >= 4 — float radii
    cannot make l_4 large — which is why the trend is classified from the
    exponents while the samples serve as the per-radius evidence.

    Accepts a bare `DegeneracyFamily` as well as a `Geometry`: the check
    reads only the exponent data (k, sigma), and levels k >= 4 admit no
    float-representable domain radius for a full geometry.
    """
    fam = geom.family if isinstance(geom, Geometry) else geom
    if not isinstance(fam, DegeneracyFamily):
        raise TypeError(f"expected a Geometry or DegeneracyFamily, got {type(geom)!r}")
    if fam.kind != "fksigma":
        raise ValueError(
            f"growth check applies to the iterated-log family, got {fam.kind!r}"
        )
    if not (m > 1 and math.isfinite(m)):
        raise ValueError(f"m must be > 1 and finite, got {m!r}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps!r}")
    k, sigma = fam.k, fam.sigma
    power = sigma * (m - 1.0)
    radii = []
    ratios = []
    satisfied = []
    for j in range(2, 13):
        L = j * math.log(10.0)
        levels = _iterated_logs(L, max(k + 1, 3))
        l3 = levels[2]
        if not l3 > 0:
            continue
        lk = levels[k - 1]
        lk1 = levels[k]
        ratio = (lk1 + lk**power) ** m / l3
        radii.append(10.0**-j)
        ratios.append(ratio)
        satisfied.append(bool(ratio <= eps))
    dominant_power = power * m
    holds = k > 3 or (k == 3 and dominant_power < 1.0)
    return GrowthReport(
        holds=holds,
        radii=tuple(radii),
        ratios=tuple(ratios),
        satisfied=tuple(satisfied),
        dominant_level=k,
        dominant_power=dominant_power,
        eps=float(eps),
    )


# -- verdicts, oscillation, sharp exponent ---------------------------------


def verdict(geom, dim: int, claim: str, m: float = 3.0) -> str:
    """Claim-verdict table per degeneracy family.

    Finite-type profiles (hn / power_type) satisfy all three claims in both
    dimensions.  For the iterated-log family the boundedness and maximum
    principle claims hold when k >= 2, or k = 1 with sigma < 1; continuity
    needs k >= 4, or k = 3 with sigma < 1 in the plane and sigma < 1/(m-1)
    in three dimensions (`m` parametrizes the bump used there).  The
    remaining parameter ranges are open.  The power-scale family dsigma,
    and the faster exp_decay / inverse_x profiles, admit unbounded weak
    solutions in three dimensions (all claims fail; dsigma only for
    sigma >= 1), while their planar behavior is open.
    """
    fam = geom.family if isinstance(geom, Geometry) else geom
    if not isinstance(fam, DegeneracyFamily):
        raise TypeError(f"expected a Geometry or DegeneracyFamily, got {type(geom)!r}")
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim!r}")
    if claim not in _CLAIMS:
        raise ValueError(f"claim must be one of {_CLAIMS}, got {claim!r}")
    if not (m > 1 and math.isfinite(m)):
        raise ValueError(f"m must be > 1 and finite, got {m!r}")
    kind = fam.kind
    if kind == "custom":
        raise ValueError("no verdict table for custom profiles")
    if kind in ("hn", "power_type"):
        return "holds"
    if kind == "fksigma":
        k, sigma = fam.k, fam.sigma
        if claim in ("local_bound", "max_principle"):
            if k >= 2 or sigma < 1.0:
                return "holds"
            return "open"
        threshold = 1.0 if dim == 2 else 1.0 / (m - 1.0)
        if k >= 4 or (k == 3 and sigma < threshold):
            return "holds"
        return "open"
    if kind == "dsigma":
        if dim == 3 and fam.sigma >= 1.0:
            return "fails"
        return "open"
    # exp_decay and inverse_x decay faster than every admissible profile.
    return "fails" if dim == 3 else "open"


def oscillation_run(
    omega0: float, gamma_fn, sigma_fn, tau: float, steps: int
) -> np.ndarray:
    """Iterate omega_{k+1} = gamma_k omega_k + sigma_k over dyadic radii.

    The callables receive the radius in log form ln(1/R_k) = k ln(1/tau),
    k = 1..steps.  Every gamma must lie in (0, 1) and the sigma values must
    be nonnegative and nonincreasing along the run (the radius shrinks).
    The returned sequence tends to 0 exactly when the gamma product
    vanishes and the sigma tail is summable over the horizon.
    """
    if not (omega0 >= 0 and math.isfinite(omega0)):
        raise ValueError(f"omega0 must be >= 0 and finite, got {omega0!r}")
    if not 0 < tau < 1:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    if not (isinstance(steps, (int, np.integer)) and steps >= 1):
        raise ValueError(f"steps must be an integer >= 1, got {steps!r}")
    L = np.arange(1, steps + 1, dtype=float) * math.log(1.0 / tau)
    g = _eval_on_logradii(gamma_fn, L)
    s = _eval_on_logradii(sigma_fn, L)
    if not np.all((g > 0) & (g < 1)):
        raise ValueError("gamma values must lie in (0, 1)")
    if not np.all(s >= 0):
        raise ValueError("sigma values must be nonnegative")
    if np.any(np.diff(s) > 1e-12 * (1.0 + float(np.max(s)))):
        raise ValueError("sigma values must be nonincreasing along the run")
    omega = np.empty(steps + 1)
    omega[0] = w = float(omega0)
    gl = g.tolist()
    sl = s.tolist()
    for k in range(steps):
        w = gl[k] * w + sl[k]
        omega[k + 1] = w
    return omega


def generalized_ibi_sharp(sigma: float) -> float:
    """Sharp inner-ball exponent 1 + sigma for the power-scale family; the
    inequality holds with exponent m exactly when m >= 1 + sigma."""
    if not (0 < sigma < 1 and math.isfinite(sigma)):
        raise ValueError(f"sigma must lie in (0, 1), got {sigma!r}")
    return 1.0 + sigma
