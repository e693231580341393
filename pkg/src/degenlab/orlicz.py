"""Young-function machinery.

Large bumps Phi_m (linear below E_m = e^{2^m}, near-power above), small
bumps Psi_m on (0, 1/M) with affine extension, their iterates, inverses and
Legendre conjugates, the concave companion Theta, sub/supermultiplicativity
checks, Luxemburg norms against probability measures, superradii phi(r),
and the recursing-generator construction.

All Phi-side arithmetic happens in the log domain (and where possible in
the b-domain b = (ln value)^{1/m}, where one iterate is b -> b + 1), so
iterate counts up to 10^6 stay exact to machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .geometry import Geometry
from .numerics import BracketError, LogVal, Seed, brent_root

__all__ = [
    "LargeBump",
    "SmallBump",
    "Superradius",
    "Generator",
    "MultReport",
    "phi_eval",
    "phi_inv",
    "phi_iter",
    "psi_eval",
    "psi_inv",
    "psi_iter",
    "psi_iter_ln",
    "theta_eval",
    "mult_check",
    "conjugate_eval",
    "conjugate_asymptotic",
    "orlicz_norm",
    "default_Cm",
    "superradius_eval",
    "superradius_log",
    "superradius_closed",
    "generator_build",
]


def _as_logval(t) -> LogVal:
    if isinstance(t, LogVal):
        return t
    return LogVal.from_float(float(t))


def _ln1mexp(x: float) -> float:
    """ln(1 - e^{-x}) for x > 0, stable at both ends."""
    if x <= 0:
        raise ValueError(f"ln(1 - e^-x) needs x > 0, got {x!r}")
    if x < 0.693:
        return math.log(-math.expm1(-x))
    return math.log1p(-math.exp(-x))


# ---------------------------------------------------------------------------
# Large bumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LargeBump:
    """Near-power Young function: t -> e^{((ln t)^{1/m}+1)^m} above E = e^{2^m},
    linear with slope Phi(E)/E = e^{3^m - 2^m} on [0, E]."""

    m: float
    E: float = field(init=False)

    def __post_init__(self) -> None:
        m = float(self.m)
        if not (1.0 < m <= 30.0) or not math.isfinite(m):
            raise ValueError(f"m must lie in (1, 30], got {self.m!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "E", math.exp(2.0**m) if 2.0**m < 709 else math.inf)

    @property
    def ln_E(self) -> float:
        return 2.0**self.m

    @property
    def ln_slope(self) -> float:
        """ln(Phi(E)/E) of the linear piece."""
        return 3.0**self.m - 2.0**self.m

    @property
    def ln_corner_slope(self) -> float:
        """ln Phi'(E+); the right slope at the kink (>= the linear slope)."""
        return self.ln_slope + (self.m - 1.0) * math.log(1.5)


def _phi_ln(m: float, ln_t):
    """ln Phi_m(e^{ln_t}) on the curved piece (requires ln_t >= 2^m)."""
    return (np.asarray(ln_t, dtype=float) ** (1.0 / m) + 1.0) ** m


def phi_eval(bump: LargeBump, t) -> LogVal:
    """Phi_m(t) in the log domain; t may be a float or LogVal."""
    tv = _as_logval(t)
    if tv.is_zero:
        return LogVal.zero()
    l = tv.ln_value
    if l >= bump.ln_E:
        return LogVal.from_ln(float(_phi_ln(bump.m, l)))
    return LogVal.from_ln(bump.ln_slope + l)


def phi_inv(bump: LargeBump, s) -> LogVal:
    """Inverse of phi_eval, exact on both pieces."""
    sv = _as_logval(s)
    if sv.is_zero:
        return LogVal.zero()
    l = sv.ln_value
    if l >= 3.0**bump.m:
        return LogVal.from_ln((l ** (1.0 / bump.m) - 1.0) ** bump.m)
    return LogVal.from_ln(l - bump.ln_slope)


def phi_iter(bump: LargeBump, t, n: int) -> LogVal:
    """n-fold iterate Phi_m^{(n)}(t).

    Uses the b-domain closed form ((ln t)^{1/m} + n)^m once the argument is
    above E (all later intermediates then stay above E); below E each linear
    step is applied literally.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a nonnegative integer, got {n!r}")
    tv = _as_logval(t)
    n = int(n)
    if n == 0 or tv.is_zero:
        return tv
    l = tv.ln_value
    m = bump.m
    while n > 0 and l < bump.ln_E:
        l = l + bump.ln_slope
        n -= 1
    if n > 0:
        l = (l ** (1.0 / m) + n) ** m
    return LogVal.from_ln(l)


# ---------------------------------------------------------------------------
# Small bumps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmallBump:
    """Small-value Young function Psi_m(t) = A e^{-((ln 1/t)^{1/m}+1)^m} on
    (0, 1/M), affine with slope Psi'(1/M) above; A is pinned by Psi(1/M) = 1/M."""

    m: float
    M: float

    def __post_init__(self) -> None:
        m, M = float(self.m), float(self.M)
        if not (m > 1.0) or not math.isfinite(m):
            raise ValueError(f"m must exceed 1, got {self.m!r}")
        if not (M > 1.0) or not math.isfinite(M):
            raise ValueError(f"M must exceed 1, got {self.M!r}")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "M", M)

    @classmethod
    def standard(cls, m: float) -> "SmallBump":
        """Threshold M = e^{2^m}, mirroring the large bump's breakpoint."""
        return cls(m, math.exp(2.0 ** float(m)))

    @property
    def ln_M(self) -> float:
        return math.log(self.M)

    @property
    def ln_A(self) -> float:
        return (self.ln_M ** (1.0 / self.m) + 1.0) ** self.m - self.ln_M

    @property
    def A(self) -> float:
        return math.exp(self.ln_A)

    @property
    def affine_slope(self) -> float:
        """Psi'(1/M-), the slope of the affine extension."""
        return (1.0 + self.ln_M ** (-1.0 / self.m)) ** (self.m - 1.0)


def _psi_step_ln(bump: SmallBump, x: float) -> float:
    """One forward step in x = ln(1/t): x -> ln(1/Psi(e^{-x}))."""
    return (x ** (1.0 / bump.m) + 1.0) ** bump.m - bump.ln_A


def _psi_unstep_ln(bump: SmallBump, x: float) -> float:
    """One inverse step in x = ln(1/t): x -> ln(1/Psi^{-1}(e^{-x}))."""
    return ((x + bump.ln_A) ** (1.0 / bump.m) - 1.0) ** bump.m


def psi_eval(bump: SmallBump, t: float) -> float:
    """Psi_m(t) for t > 0."""
    t = float(t)
    if not (t > 0) or not math.isfinite(t):
        raise ValueError(f"t must be positive and finite, got {t!r}")
    cut = 1.0 / bump.M
    if t >= cut:
        return cut + bump.affine_slope * (t - cut)
    return math.exp(-_psi_step_ln(bump, -math.log(t)))


def psi_inv(bump: SmallBump, s: float) -> float:
    """Inverse of psi_eval, exact on both pieces."""
    s = float(s)
    if not (s > 0) or not math.isfinite(s):
        raise ValueError(f"s must be positive and finite, got {s!r}")
    cut = 1.0 / bump.M
    if s >= cut:
        return cut + (s - cut) / bump.affine_slope
    return math.exp(-_psi_unstep_ln(bump, -math.log(s)))


def psi_iter_ln(bump: SmallBump, x: float, n: int) -> float:
    """Signed iterate in x = ln(1/t) with t in (0, 1/M): n >= 0 applies Psi
    n times, n < 0 applies Psi^{-1} |n| times (the H_N direction)."""
    if x <= bump.ln_M:
        raise ValueError(f"ln(1/t) must exceed ln M = {bump.ln_M!r}, got {x!r}")
    x = float(x)
    if n >= 0:
        for _ in range(int(n)):
            x = _psi_step_ln(bump, x)
    else:
        for _ in range(-int(n)):
            x = _psi_unstep_ln(bump, x)
    return x


def psi_iter(bump: SmallBump, t: float, n: int) -> float:
    """Signed iterate Psi^{(n)}(t); both half-lines (0,1/M) and [1/M,oo) are
    invariant under Psi and its inverse."""
    t = float(t)
    if not (t > 0) or not math.isfinite(t):
        raise ValueError(f"t must be positive and finite, got {t!r}")
    n = int(n)
    cut = 1.0 / bump.M
    if t >= cut:
        # Affine orbit: Psi^{(n)}(t) = 1/M + slope^n (t - 1/M).
        return cut + bump.affine_slope**n * (t - cut)
    return math.exp(-psi_iter_ln(bump, -math.log(t), n))


def theta_eval(bump: SmallBump, t: float) -> float:
    """Theta(t) = t (ln 1/Psi(t))^{1/m} on (0, 1/M]."""
    t = float(t)
    if not (0 < t <= 1.0 / bump.M):
        raise ValueError(f"t must lie in (0, 1/M], got {t!r}")
    x = _psi_step_ln(bump, -math.log(t))
    return t * x ** (1.0 / bump.m)


# ---------------------------------------------------------------------------
# Multiplicativity checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MultReport:
    """Outcome of a sampled sub/supermultiplicativity check."""

    kind: str
    checked: int
    holds: bool
    worst_margin: float
    worst_pair: tuple[float, float]
    plain_submult_witness: tuple[float, float] | None = None


def _phi_ln_piecewise(bump: LargeBump, l):
    l = np.asarray(l, dtype=float)
    return np.where(l >= bump.ln_E, _phi_ln(bump.m, np.maximum(l, bump.ln_E)), bump.ln_slope + l)


def mult_check(bump, kind: str, n_pairs: int, seed: Seed) -> MultReport:
    """Sampled multiplicativity margins, all in the log domain.

    kind='sub' (LargeBump): margin = ln Phi(a) + ln Phi(b) - ln Phi(ab) >= 0.
    kind='super' (SmallBump): margin = ln A + ln Psi(ab) - ln Psi(a) - ln Psi(b)
    >= 0 on (0, 1/M)^2; the report also carries a pair witnessing that plain
    submultiplicativity of Psi fails there.
    """
    rng = seed.generator()
    if kind == "sub":
        if not isinstance(bump, LargeBump):
            raise TypeError("kind='sub' expects a LargeBump")
        la = rng.uniform(-10.0, 3.0 * bump.ln_E, size=n_pairs)
        lb = rng.uniform(-10.0, 3.0 * bump.ln_E, size=n_pairs)
        margins = (
            _phi_ln_piecewise(bump, la)
            + _phi_ln_piecewise(bump, lb)
            - _phi_ln_piecewise(bump, la + lb)
        )
        worst = int(np.argmin(margins))
        return MultReport(
            kind="sub",
            checked=n_pairs,
            holds=bool(np.all(margins >= -1e-12)),
            worst_margin=float(margins[worst]),
            worst_pair=(math.exp(la[worst]), math.exp(lb[worst])),
        )
    if kind == "super":
        if not isinstance(bump, SmallBump):
            raise TypeError("kind='super' expects a SmallBump")
        m, ln_A = bump.m, bump.ln_A
        x = bump.ln_M * rng.uniform(1.0 + 1e-9, 6.0, size=n_pairs)
        y = bump.ln_M * rng.uniform(1.0 + 1e-9, 6.0, size=n_pairs)
        bpow = lambda z: (z ** (1.0 / m) + 1.0) ** m
        # ln A + ln Psi(ab) - ln Psi(a) - ln Psi(b) in x = ln(1/a); the ln A
        # of the prefactor cancels one of the two in Psi(a)Psi(b).
        margins = bpow(x) + bpow(y) - bpow(x + y)
        worst = int(np.argmin(margins))
        # Plain submultiplicativity asks Psi(ab) <= Psi(a)Psi(b), which flips
        # into margin <= ln A; any sampled excess over ln A is a witness.
        witness = None
        for xw in np.geomspace(bump.ln_M * 1.5, bump.ln_M * 64.0, 48):
            if 2.0 * bpow(xw) - bpow(2.0 * xw) > ln_A:
                witness = (math.exp(-xw), math.exp(-xw))
                break
        return MultReport(
            kind="super",
            checked=n_pairs,
            holds=bool(np.all(margins >= -1e-12)),
            worst_margin=float(margins[worst]),
            worst_pair=(math.exp(-x[worst]), math.exp(-y[worst])),
            plain_submult_witness=witness,
        )
    raise ValueError(f"kind must be 'sub' or 'super', got {kind!r}")


# ---------------------------------------------------------------------------
# Legendre conjugate
# ---------------------------------------------------------------------------


def _ln_phi_prime(bump: LargeBump, l: float) -> float:
    """ln Phi'(t) on the curved piece, as a function of l = ln t >= 2^m."""
    m = bump.m
    b = l ** (1.0 / m)
    return (b + 1.0) ** m - l + (m - 1.0) * math.log(b + 1.0) - (m - 1.0) / m * math.log(l)


def conjugate_eval(bump: LargeBump, s) -> LogVal:
    """Legendre conjugate sup_t (st - Phi(t)) in the log domain.

    Returns zero for s up to the linear slope, uses the corner branch while
    s is inside the subdifferential jump at E, and otherwise inverts Phi'
    numerically on the curved piece.
    """
    sv = _as_logval(s)
    if sv.is_zero:
        return LogVal.zero()
    ls = sv.ln_value
    if ls <= bump.ln_slope:
        return LogVal.zero()
    if ls <= bump.ln_corner_slope:
        # sup at the kink t = E: sE - Phi(E) = e^{ls + 2^m} - e^{3^m}.
        hi = ls + bump.ln_E
        return LogVal.from_ln(hi + _ln1mexp(hi - 3.0**bump.m))
    hi = bump.ln_E + 1.0
    for _ in range(200):
        if _ln_phi_prime(bump, hi) >= ls:
            break
        hi = 2.0 * hi
    else:
        raise BracketError(f"could not bracket Phi' = e^{ls}")
    l_star = brent_root(lambda l: _ln_phi_prime(bump, l) - ls, bump.ln_E, hi, tol=1e-13)
    ln_st = ls + l_star
    ln_phi = float(_phi_ln(bump.m, l_star))
    return LogVal.from_ln(ln_st + _ln1mexp(ln_st - ln_phi))


def conjugate_asymptotic(bump: LargeBump, s) -> LogVal:
    """Closed asymptotic form of the conjugate for large s:
    ln result = ln s + ((ln s)/m)^{m/(m-1)} - ln(ln s)/(m-1)."""
    sv = _as_logval(s)
    ls = sv.ln_value
    if ls <= 1.0:
        raise ValueError(f"asymptotic form needs ln s > 1, got {ls!r}")
    m = bump.m
    return LogVal.from_ln(ls + (ls / m) ** (m / (m - 1.0)) - math.log(ls) / (m - 1.0))


# ---------------------------------------------------------------------------
# Luxemburg norm
# ---------------------------------------------------------------------------


def orlicz_norm(values, bump: LargeBump, weights) -> float:
    """Luxemburg norm inf{k > 0 : sum_i mu_i Phi(|w_i|/k) <= 1} against a
    probability measure, by bisection on ln k to relative width 1e-9."""
    w = np.abs(np.asarray(values, dtype=float)).ravel()
    mu = np.asarray(weights, dtype=float).ravel()
    if w.shape != mu.shape:
        raise ValueError(f"values and weights differ in size: {w.size} vs {mu.size}")
    if not np.all(np.isfinite(w)):
        raise ValueError("values must be finite")
    if np.any(mu < 0) or abs(float(mu.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must form a probability measure")
    keep = (w > 0) & (mu > 0)
    if not np.any(keep):
        return 0.0
    ln_w, ln_mu = np.log(w[keep]), np.log(mu[keep])

    def crosses(ln_k: float) -> bool:
        """True when the integral at k = e^{ln_k} exceeds 1."""
        terms = _phi_ln_piecewise(bump, ln_w - ln_k) + ln_mu
        return float(logsumexp(terms)) > 0.0

    ln_hi = float(np.max(ln_w)) + bump.ln_slope  # k = max|w| / Phi^{-1}(1)
    ln_lo = ln_hi - 1.0
    for _ in range(200):
        if crosses(ln_lo):
            break
        ln_lo -= 2.0 * (ln_hi - ln_lo)
    else:
        return 0.0
    while ln_hi - ln_lo > 1e-9:
        mid = 0.5 * (ln_lo + ln_hi)
        if crosses(mid):
            ln_lo = mid
        else:
            ln_hi = mid
    return math.exp(ln_hi)


# ---------------------------------------------------------------------------
# Superradii
# ---------------------------------------------------------------------------


def default_Cm(m: float) -> float:
    """Binomial-bound constant (1/2) m (2m-1) (m-1)^{2m}."""
    m = float(m)
    return 0.5 * m * (2.0 * m - 1.0) * (m - 1.0) ** (2.0 * m)


@dataclass(frozen=True)
class Superradius:
    """phi(r) = (1/|F'(r)|) e^{Cm (|F'|^2/F'' + 1)^{m-1}} ('large') or
    r e^{Cm (...)^{m-1}} ('small')."""

    geom: Geometry
    m: float
    Cm: float | None = None
    variant: str = "large"

    def __post_init__(self) -> None:
        if self.variant not in ("large", "small"):
            raise ValueError(f"variant must be 'large' or 'small', got {self.variant!r}")
        if not (float(self.m) > 1.0):
            raise ValueError(f"m must exceed 1, got {self.m!r}")
        if self.Cm is None:
            object.__setattr__(self, "Cm", default_Cm(self.m))
        elif not (float(self.Cm) > 0):
            raise ValueError(f"Cm must be positive, got {self.Cm!r}")


def superradius_log(sr: Superradius, r: float) -> float:
    """ln phi(r) without monotonicity screening.

    The raw formula is floored at r itself: the radius is always an
    admissible superradius, and the floor keeps phi(r) >= r for every Cm.
    """
    geom = sr.geom
    if not (0 < r < geom.R):
        raise ValueError(f"r must lie in (0, R), got {r!r}")
    if geom.is_flat:
        return math.log(r)
    f1 = abs(float(geom.F1(r)))
    f2 = float(geom.F2(r))
    if not (f2 > 0):
        raise ValueError(f"superradius needs F'' > 0, found {f2!r} at r = {r!r}")
    bulk = sr.Cm * (f1 * f1 / f2 + 1.0) ** (sr.m - 1.0)
    lead = -math.log(f1) if sr.variant == "large" else math.log(r)
    return max(lead + bulk, math.log(r))


def superradius_eval(sr: Superradius, r: float, check_monotone: bool = True) -> float:
    """phi(r), first verifying monotonicity on (0, r] by a log-domain scan."""
    value_ln = superradius_log(sr, r)
    if check_monotone and not sr.geom.is_flat:
        rs = np.geomspace(max(r * 1e-6, 1e-300), r, 160)
        lns = [superradius_log(sr, float(x)) for x in rs]
        for a, b, ra in zip(lns, lns[1:], rs):
            if b < a - 1e-9 * max(1.0, abs(a)):
                raise ValueError(
                    f"superradius is not nondecreasing on (0, {r!r}): "
                    f"decrease detected near r = {float(ra)!r}"
                )
    return math.exp(value_ln) if value_ln < 709 else math.inf


def superradius_closed(geom: Geometry, m: float, r: float, Cm: float | None = None) -> float:
    """Closed power form of phi(r) for the F_{k,sigma} family:
    r^{1 - Cm (ln^{(k)} 1/r)^{sigma(m-1)} / ln(1/r)} for k >= 2, and
    r^{1 - Cm / (ln 1/r)^{1 - sigma(m-1)}} for k = 1, sigma < 1/(m-1)."""
    fam = geom.family
    if fam.kind != "fksigma":
        raise ValueError(f"closed superradius form requires an fksigma family, got {fam.kind!r}")
    if not (0 < r < 1):
        raise ValueError(f"r must lie in (0, 1), got {r!r}")
    if Cm is None:
        Cm = default_Cm(m)
    k, sigma = fam.k, fam.sigma
    L = math.log(1.0 / r)
    if k >= 2:
        Lk = L
        for _ in range(k - 1):
            Lk = math.log(Lk)
        expo = 1.0 - Cm * Lk ** (sigma * (m - 1.0)) / L
    else:
        if sigma >= 1.0 / (m - 1.0):
            raise ValueError(
                f"closed k=1 form needs sigma < 1/(m-1); got sigma = {sigma!r}, m = {m!r}"
            )
        expo = 1.0 - Cm / L ** (1.0 - sigma * (m - 1.0))
    return r**expo


# ---------------------------------------------------------------------------
# Recursing generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Generator:
    """Trivial generator G for a Young function: linear in ln t on the base
    orbit interval [a0, a1), extended by G(Phi(t)) = G(t) + 1."""

    ln_orbit: tuple[float, ...]
    phi_ln: Callable[[float], float] = field(repr=False)
    phi_inv_ln: Callable[[float], float] = field(repr=False)
    joint_dd: tuple[float, ...]
    recursion_residual: float

    @property
    def orbit(self) -> tuple[LogVal, ...]:
        return tuple(LogVal.from_ln(l) for l in self.ln_orbit)

    @property
    def concave_at_joints(self) -> bool:
        return all(d <= 1e-10 for d in self.joint_dd)

    def g(self, s: float) -> float:
        """g(s) = G(e^s) with G(a0) = 0."""
        lo, hi = self.ln_orbit[0], self.ln_orbit[-1]
        if not (lo <= s <= hi):
            raise ValueError(f"s must lie in [{lo!r}, {hi!r}], got {s!r}")
        n = int(np.searchsorted(self.ln_orbit, s, side="right")) - 1
        if n >= 1 and s == self.ln_orbit[n]:
            return float(n)
        n = min(n, len(self.ln_orbit) - 2)
        l = s
        for _ in range(n):
            l = self.phi_inv_ln(l)
        base = (l - self.ln_orbit[0]) / (self.ln_orbit[1] - self.ln_orbit[0])
        return n + base

    def G(self, t: LogVal) -> float:
        return self.g(t.ln_value)


def generator_build(phi, a: float, depth: int = 32) -> Generator:
    """Build the trivial generator for ``phi`` started at ``a``.

    ``phi`` is either a LargeBump or a pair (phi_ln, phi_inv_ln) of ln-domain
    maps.  The hypothesis Phi(t)/(t Phi'(t)) <= 1 -- equivalently
    d(ln Phi)/d(ln t) >= 1 -- is screened on [a, Phi^{(5)}(a)] and a witness
    is reported on failure.
    """
    if isinstance(phi, LargeBump):
        bump = phi
        phi_ln = lambda l: phi_eval(bump, LogVal.from_ln(l)).ln_value
        phi_inv_ln = lambda l: phi_inv(bump, LogVal.from_ln(l)).ln_value
    else:
        phi_ln, phi_inv_ln = phi
    if not (a > 0) or not math.isfinite(a):
        raise ValueError(f"a must be positive and finite, got {a!r}")
    ln_a = math.log(a)

    ln_a5 = ln_a
    for _ in range(5):
        ln_a5 = phi_ln(ln_a5)
    h = 1e-6 * max(1.0, abs(ln_a))
    for l in np.linspace(ln_a, ln_a5, 240):
        slope = (phi_ln(float(l) + h) - phi_ln(float(l) - h)) / (2.0 * h)
        if slope < 1.0 - 1e-9:
            raise ValueError(
                f"generator hypothesis fails: d(ln Phi)/d(ln t) = {slope!r} < 1 "
                f"at t = e^{float(l)!r}"
            )

    ln_orbit = [ln_a]
    for _ in range(depth):
        ln_orbit.append(phi_ln(ln_orbit[-1]))

    dds = []
    for i in range(1, len(ln_orbit) - 1):
        d1 = ln_orbit[i] - ln_orbit[i - 1]
        d2 = ln_orbit[i + 1] - ln_orbit[i]
        dds.append((1.0 / d2 - 1.0 / d1) / (d1 + d2))

    gen = Generator(
        ln_orbit=tuple(ln_orbit),
        phi_ln=phi_ln,
        phi_inv_ln=phi_inv_ln,
        joint_dd=tuple(dds),
        recursion_residual=0.0,
    )
    residual = 0.0
    for l in np.linspace(ln_orbit[0], ln_orbit[-2], 64):
        residual = max(residual, abs(gen.g(phi_ln(float(l))) - gen.g(float(l)) - 1.0))
    object.__setattr__(gen, "recursion_residual", float(residual))
    return gen
