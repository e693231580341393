"""Degeneracy profiles f = exp(-F) and their structural diagnostics.

A profile lives on the interval (0, R), is extended evenly in x, and is
specified through F with f = e^{-F}.  The checks in this module probe the
qualitative features the rest of the package leans on: divergence of F at
the origin, signs of F' and F'', octave comparability of |F'|, monotone
decay of -xF', the curvature balance xF'' ~ -F', and the vanishing of
r*F(r) that separates hypoelliptic profiles from the rest.

Derivatives are always taken in the radial variable |x|.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

import numpy as np
import sympy

from .numerics import Seed

__all__ = [
    "DomainError",
    "DegeneracyFamily",
    "Geometry",
    "ConditionResult",
    "ConditionReport",
    "ConsequencesReport",
    "KusuokaResult",
    "eval_f",
    "eval_F",
    "eval_F1",
    "eval_F2",
    "check_structure",
    "consequences_check",
    "kusuoka_limit",
]


class DomainError(ValueError):
    """Raised when an evaluation point leaves the profile's domain."""


ProfileFn = Callable[[np.ndarray], np.ndarray]

_KINDS = ("fksigma", "dsigma", "hn", "power_type", "inverse_x", "exp_decay", "custom")

#: Nominal domain radius per family; shrunk further by the iterated-log guard.
_NOMINAL_R = {
    "fksigma": 0.3,
    "dsigma": 0.3,
    "hn": 0.9,
    "power_type": 0.9,
    "inverse_x": 0.5,
    "exp_decay": 0.5,
    "custom": 0.3,
}


def _elementwise(fn: Callable) -> ProfileFn:
    """Wrap a scalar-or-array callable so it maps arrays to same-shape arrays."""

    def wrapped(x: np.ndarray) -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        try:
            out = np.asarray(fn(arr), dtype=float)
        except (TypeError, ValueError):
            flat = [float(fn(float(v))) for v in arr.ravel()]
            out = np.asarray(flat, dtype=float).reshape(arr.shape)
        if out.shape != arr.shape:
            out = np.broadcast_to(out, arr.shape).copy()
        return out

    return wrapped


def _log_guard_radius(k: int) -> float:
    """Largest radius keeping the k-fold iterated log of 1/r at least 1.

    Returns one ulp above exp(-e^^(k-1)) so the boundary point itself stays
    admissible under a strict |x| < R comparison.
    """
    t = 1.0
    for _ in range(k - 1):
        t = math.exp(t)
    radius = math.exp(-t)
    if radius == 0.0:
        raise DomainError(
            f"iterated logarithm level {k} needs a domain radius at most "
            f"exp(-{t:.6g}), which underflows float64"
        )
    return math.nextafter(radius, math.inf)


@dataclass(frozen=True)
class DegeneracyFamily:
    """Parameter pack selecting one degeneracy profile f = e^{-F}.

    Use the classmethod constructors; `kind` is one of `fksigma` (iterated-log
    profile), `dsigma` (power-of-1/x times log), `hn` / `power_type` (finite
    type |x|^N), `inverse_x`, `exp_decay` (F = delta0/x), or `custom`.
    """

    kind: str
    k: int = 0
    sigma: float = 0.0
    N: float = 0.0
    delta0: float = 0.0
    F: Callable | None = None
    F1: Callable | None = None
    F2: Callable | None = None

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "fksigma":
            if int(self.k) != self.k or self.k < 1:
                raise ValueError(f"fksigma requires integer k >= 1, got {self.k!r}")
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise ValueError(f"fksigma requires sigma > 0, got {self.sigma!r}")
        elif self.kind == "dsigma":
            if not (self.sigma > 0 and math.isfinite(self.sigma)):
                raise ValueError(f"dsigma requires sigma > 0, got {self.sigma!r}")
        elif self.kind == "hn":
            if not (self.N >= 0 and math.isfinite(self.N)):
                raise ValueError(f"hn requires N >= 0, got {self.N!r}")
        elif self.kind == "power_type":
            if not (self.N > 0 and math.isfinite(self.N)):
                raise ValueError(f"power_type requires N > 0, got {self.N!r}")
        elif self.kind == "exp_decay":
            if not (self.delta0 > 0 and math.isfinite(self.delta0)):
                raise ValueError(f"exp_decay requires delta0 > 0, got {self.delta0!r}")
        elif self.kind == "custom":
            if not (callable(self.F) and callable(self.F1) and callable(self.F2)):
                raise ValueError("custom requires callables F, F1, F2")

    @classmethod
    def fksigma(cls, k: int, sigma: float) -> "DegeneracyFamily":
        return cls(kind="fksigma", k=int(k), sigma=float(sigma))

    @classmethod
    def dsigma(cls, sigma: float) -> "DegeneracyFamily":
        return cls(kind="dsigma", sigma=float(sigma))

    @classmethod
    def hn(cls, N: float) -> "DegeneracyFamily":
        return cls(kind="hn", N=float(N))

    @classmethod
    def power_type(cls, N: float) -> "DegeneracyFamily":
        return cls(kind="power_type", N=float(N))

    @classmethod
    def inverse_x(cls) -> "DegeneracyFamily":
        return cls(kind="inverse_x")

    @classmethod
    def exp_decay(cls, delta0: float) -> "DegeneracyFamily":
        return cls(kind="exp_decay", delta0=float(delta0))

    @classmethod
    def custom(cls, F: Callable, F1: Callable, F2: Callable) -> "DegeneracyFamily":
        return cls(kind="custom", F=F, F1=F1, F2=F2)

    @property
    def is_flat(self) -> bool:
        """True for the non-degenerate reference profile f = 1 (hn with N = 0)."""
        return self.kind == "hn" and self.N == 0


@functools.lru_cache(maxsize=128)
def _build_profile(family: DegeneracyFamily) -> tuple[ProfileFn, ProfileFn, ProfileFn]:
    """Construct vectorized F, F', F'' callables for a family."""
    if family.kind == "custom":
        return (_elementwise(family.F), _elementwise(family.F1), _elementwise(family.F2))
    if family.is_flat:
        def zero(x: np.ndarray) -> np.ndarray:
            return np.zeros_like(np.asarray(x, dtype=float))

        return zero, zero, zero
    x = sympy.Symbol("x", positive=True)
    L = sympy.log(1 / x)
    if family.kind == "fksigma":
        lk = L
        for _ in range(family.k - 1):
            lk = sympy.log(lk)
        expr = L * lk ** sympy.Float(family.sigma)
    elif family.kind == "dsigma":
        expr = L * x ** sympy.Float(-family.sigma)
    elif family.kind in ("hn", "power_type"):
        expr = sympy.Float(family.N) * L
    elif family.kind == "inverse_x":
        expr = 1 / x
    else:  # exp_decay
        expr = sympy.Float(family.delta0) / x
    d1 = sympy.diff(expr, x)
    d2 = sympy.diff(d1, x)
    fns = tuple(
        _elementwise(sympy.lambdify(x, e, modules="numpy")) for e in (expr, d1, d2)
    )
    return fns


def _validate_custom(F: ProfileFn, F1: ProfileFn, F2: ProfileFn, R: float) -> None:
    """Finite-difference consistency check for user-supplied derivatives."""
    xs = np.geomspace(R * 1e-4, R * 0.98, 21)
    h = xs * 1e-6
    for got, expect, name in (
        ((F(xs + h) - F(xs - h)) / (2 * h), F1(xs), "F1"),
        ((F1(xs + h) - F1(xs - h)) / (2 * h), F2(xs), "F2"),
    ):
        scale = np.maximum(np.maximum(np.abs(got), np.abs(expect)), 1e-12)
        rel = np.abs(got - expect) / scale
        worst = int(np.argmax(rel))
        if not np.all(rel <= 1e-4):
            raise ValueError(
                f"custom profile derivative {name} inconsistent with finite "
                f"differences: relative deviation {rel[worst]:.3e} at x={xs[worst]:.6g}"
            )


def _octave_constants(F1fn: ProfileFn, R: float, floor: float) -> tuple[list[int], list[float]]:
    """Per-octave comparability constants of |F'| on dyadic radii r = R/2^j."""
    js: list[int] = []
    cs: list[float] = []
    j = 1
    while j <= 26:
        r = R / 2.0**j
        if r < floor * 4.0:
            break
        lo = r / 2.0 * (1 + 1e-12)
        hi = min(2.0 * r, R * (1 - 1e-12))
        xx = np.geomspace(lo, hi, 33)
        base = float(np.abs(F1fn(np.asarray([r])))[0])
        vals = np.abs(F1fn(xx))
        if base <= 0 or np.any(vals <= 0) or not np.all(np.isfinite(vals)):
            c = math.inf
        else:
            ratios = vals / base
            c = float(max(ratios.max(), (1.0 / ratios).max()))
        js.append(j)
        cs.append(c)
        j += 1
    return js, cs


@dataclass(frozen=True)
class Geometry:
    """A degeneracy profile together with its computed structural constants.

    `eps` is the sampled infimum of -xF'(x) over (0, R) and `C` the sampled
    octave comparability constant of |F'|; both are concrete numbers because
    distance and ball estimates consume them directly.
    """

    family: DegeneracyFamily
    R: float | None = None
    eps: float = field(init=False)
    C: float = field(init=False)
    _F: ProfileFn = field(init=False, repr=False, compare=False)
    _F1: ProfileFn = field(init=False, repr=False, compare=False)
    _F2: ProfileFn = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        fF, fF1, fF2 = _build_profile(self.family)
        cap = math.inf
        if self.family.kind == "fksigma":
            cap = _log_guard_radius(self.family.k)
        elif self.family.kind in ("dsigma", "hn", "power_type"):
            cap = 1.0
        if self.R is None:
            nominal = _NOMINAL_R[self.family.kind]
            radius = min(nominal, 0.9 * cap) if math.isfinite(cap) else nominal
        else:
            if not (self.R > 0 and math.isfinite(self.R)):
                raise ValueError(f"R must be positive and finite, got {self.R!r}")
            radius = min(float(self.R), cap)
        object.__setattr__(self, "R", radius)
        object.__setattr__(self, "_F", fF)
        object.__setattr__(self, "_F1", fF1)
        object.__setattr__(self, "_F2", fF2)
        if self.family.kind == "custom":
            _validate_custom(fF, fF1, fF2, radius)
        if self.family.is_flat:
            eps, comp = 0.0, 1.0
        else:
            xs = np.geomspace(radius * 1e-8, radius * (1 - 1e-12), 4096)
            eps = float(np.min(-xs * fF1(xs)))
            _, cs = _octave_constants(fF1, radius, radius * 1e-8)
            comp = float(max(cs)) if cs else 1.0
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "C", comp)

    @property
    def is_flat(self) -> bool:
        return self.family.is_flat

    def _radii(self, x, allow_zero: bool) -> tuple[np.ndarray, np.ndarray, bool]:
        arr = np.asarray(x, dtype=float)
        scalar = arr.ndim == 0
        r = np.abs(np.atleast_1d(arr))
        if not np.all(np.isfinite(r)):
            raise DomainError("evaluation points must be finite")
        if np.any(r >= self.R):
            raise DomainError(
                f"|x| must lie strictly below R={self.R:.6g}; got {float(np.max(r)):.6g}"
            )
        if not allow_zero and np.any(r == 0.0):
            raise DomainError("x = 0 is outside the profile's differentiable range")
        return arr, r, scalar

    def f(self, x) -> float | np.ndarray:
        """Profile value f(|x|) = e^{-F(|x|)}, with f(0) = 0 when degenerate."""
        _, r, scalar = self._radii(x, allow_zero=True)
        if self.is_flat:
            out = np.ones_like(r)
        else:
            out = np.zeros_like(r)
            mask = r > 0
            if np.any(mask):
                out[mask] = np.exp(-self._F(r[mask]))
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    def _eval(self, fn: ProfileFn, x) -> float | np.ndarray:
        _, r, scalar = self._radii(x, allow_zero=False)
        out = fn(r)
        return float(out[0]) if scalar else out.reshape(np.shape(x))

    def F(self, x) -> float | np.ndarray:
        """Exponent F(|x|) with f = e^{-F}."""
        return self._eval(self._F, x)

    def F1(self, x) -> float | np.ndarray:
        """Radial derivative F'(|x|)."""
        return self._eval(self._F1, x)

    def F2(self, x) -> float | np.ndarray:
        """Second radial derivative F''(|x|)."""
        return self._eval(self._F2, x)

    def to_config(self) -> dict[str, float | int | str]:
        """Serializable key/value form (family plus its parameters and R)."""
        fam = self.family
        if fam.kind == "custom":
            raise ValueError("custom profiles are not serializable")
        out: dict[str, float | int | str] = {"family": fam.kind, "R": float(self.R)}
        if fam.kind == "fksigma":
            out["k"] = int(fam.k)
            out["sigma"] = float(fam.sigma)
        elif fam.kind == "dsigma":
            out["sigma"] = float(fam.sigma)
        elif fam.kind in ("hn", "power_type"):
            out["N"] = float(fam.N)
        elif fam.kind == "exp_decay":
            out["delta0"] = float(fam.delta0)
        return out

    @classmethod
    def from_config(cls, cfg: Mapping[str, object]) -> "Geometry":
        """Rebuild a Geometry from `to_config` output (or parsed CLI config)."""
        kind = str(cfg["family"]).lower()
        radius = float(cfg["R"]) if "R" in cfg else None
        if kind == "fksigma":
            fam = DegeneracyFamily.fksigma(int(float(cfg["k"])), float(cfg["sigma"]))
        elif kind == "dsigma":
            fam = DegeneracyFamily.dsigma(float(cfg["sigma"]))
        elif kind == "hn":
            fam = DegeneracyFamily.hn(float(cfg["N"]))
        elif kind == "power_type":
            fam = DegeneracyFamily.power_type(float(cfg["N"]))
        elif kind == "inverse_x":
            fam = DegeneracyFamily.inverse_x()
        elif kind == "exp_decay":
            fam = DegeneracyFamily.exp_decay(float(cfg["delta0"]))
        else:
            raise ValueError(f"unknown family kind {kind!r} in config")
        return cls(family=fam, R=radius)


def eval_f(geom: Geometry, x) -> float | np.ndarray:
    """Evaluate f(|x|) = e^{-F(|x|)}."""
    return geom.f(x)


def eval_F(geom: Geometry, x) -> float | np.ndarray:
    """Evaluate the exponent F(|x|)."""
    return geom.F(x)


def eval_F1(geom: Geometry, x) -> float | np.ndarray:
    """Evaluate the radial derivative F'(|x|)."""
    return geom.F1(x)


def eval_F2(geom: Geometry, x) -> float | np.ndarray:
    """Evaluate the second radial derivative F''(|x|)."""
    return geom.F2(x)


@dataclass(frozen=True)
class ConditionResult:
    """Outcome of a single structural check."""

    passed: bool
    witness: float | None = None
    value: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ConditionReport:
    """Verdicts for the five structure conditions, in order (1)-(5)."""

    limit_divergence: ConditionResult
    derivative_signs: ConditionResult
    octave_comparability: ConditionResult
    decay_monotonicity: ConditionResult
    curvature_ratio: ConditionResult

    def as_tuple(self) -> tuple[ConditionResult, ...]:
        return (
            self.limit_divergence,
            self.derivative_signs,
            self.octave_comparability,
            self.decay_monotonicity,
            self.curvature_ratio,
        )

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.as_tuple())


def _sample_points(geom: Geometry, n: int) -> np.ndarray:
    return np.geomspace(geom.R * 1e-6, geom.R * (1 - 1e-9), n)


def check_structure(
    geom: Geometry,
    n_samples: int = 1000,
    strictness: str = "nondecreasing",
    kappa: float = 10.0,
) -> ConditionReport:
    """Probe the five structure conditions on log-spaced sample points.

    Condition (4)'s "increasing" is read per `strictness`; condition (5) is
    the two-sided bound xF''/(-F') in [1/kappa, kappa].  A report is always
    produced, with a witness point for each failing condition.
    """
    if n_samples < 10:
        raise ValueError(f"n_samples must be at least 10, got {n_samples}")
    if strictness not in ("strict", "nondecreasing"):
        raise ValueError(f"strictness must be 'strict' or 'nondecreasing', got {strictness!r}")
    if not kappa > 1:
        raise ValueError(f"kappa must exceed 1, got {kappa}")
    xs = _sample_points(geom, n_samples)
    Fv = geom._F(xs)
    d1 = geom._F1(xs)
    d2 = geom._F2(xs)

    # (1) F must blow up toward the origin: decreasing in x with real growth
    # across the sampled six decades.
    diffs = np.diff(Fv)
    tol1 = 1e-12 * np.maximum(1.0, np.abs(Fv[:-1]))
    mono_bad = np.nonzero(diffs > tol1)[0]
    grew = Fv[0] >= min(Fv[-1] + 2.0, 3.0 * max(Fv[-1], 0.25))
    if mono_bad.size:
        cond1 = ConditionResult(
            False, float(xs[mono_bad[0] + 1]), float(Fv[0] - Fv[-1]),
            "F fails to decrease in x",
        )
    elif not grew:
        cond1 = ConditionResult(
            False, float(xs[0]), float(Fv[0] - Fv[-1]),
            "F stays bounded toward the origin",
        )
    else:
        cond1 = ConditionResult(True, None, float(Fv[0] - Fv[-1]), "F diverges at 0")

    # (2) F' < 0 and F'' > 0 throughout.
    bad2 = np.nonzero((d1 >= 0) | (d2 <= 0) | ~np.isfinite(d1) | ~np.isfinite(d2))[0]
    if bad2.size:
        i = int(bad2[0])
        cond2 = ConditionResult(
            False, float(xs[i]), float(d1[i]), "need F' < 0 and F'' > 0"
        )
    else:
        cond2 = ConditionResult(True, None, float(np.max(d1)), "F' < 0 and F'' > 0")

    # (3) |F'| comparable across each octave, uniformly over dyadic scales:
    # the per-octave constants must be finite with no growth trend.
    js, cs = _octave_constants(geom._F1, geom.R, geom.R * 1e-6)
    cs_arr = np.asarray(cs, dtype=float)
    if cs_arr.size == 0 or not np.all(np.isfinite(cs_arr)):
        bad_j = js[int(np.argmax(~np.isfinite(cs_arr)))] if cs_arr.size else 1
        cond3 = ConditionResult(
            False, geom.R / 2.0**bad_j, math.inf, "octave ratio of |F'| unbounded"
        )
    else:
        cmax = float(np.max(cs_arr))
        if cs_arr.size >= 3:
            slope = float(np.polyfit(np.asarray(js, dtype=float), cs_arr, 1)[0])
        else:
            slope = 0.0
        stable = slope <= 0.05 * max(1.0, float(np.median(cs_arr)))
        witness = None if stable else geom.R / 2.0 ** js[int(np.argmax(cs_arr))]
        cond3 = ConditionResult(
            stable, witness, cmax, f"octave constants peak {cmax:.4g}, trend {slope:.3g}/level"
        )

    # (4) 1/(-xF') finite, positive, and increasing in x.
    neg = -xs * d1
    if np.any(neg <= 0) or not np.all(np.isfinite(neg)):
        i = int(np.argmax((neg <= 0) | ~np.isfinite(neg)))
        cond4 = ConditionResult(False, float(xs[i]), float(neg[i]), "-xF' must stay positive")
    else:
        g = 1.0 / neg
        dg = np.diff(g)
        if strictness == "strict":
            bad4 = np.nonzero(dg <= 1e-15 * np.abs(g[:-1]))[0]
        else:
            bad4 = np.nonzero(dg < -1e-9 * np.abs(g[:-1]))[0]
        if bad4.size:
            i = int(bad4[0])
            cond4 = ConditionResult(
                False, float(xs[i + 1]), float(g[i + 1] - g[i]),
                f"1/(-xF') not {strictness} in x",
            )
        else:
            cond4 = ConditionResult(
                True, None, float(np.min(neg)), f"1/(-xF') {strictness}; inf(-xF') sampled"
            )

    # (5) balance xF'' ~ -F' within [1/kappa, kappa].
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = xs * d2 / (-d1)
    bad5 = ~np.isfinite(ratio) | (ratio < 1.0 / kappa) | (ratio > kappa)
    if np.any(bad5):
        i = int(np.argmax(bad5))
        cond5 = ConditionResult(
            False, float(xs[i]), float(ratio[i]), f"xF''/(-F') outside [1/{kappa}, {kappa}]"
        )
    else:
        extreme = float(ratio[np.argmax(np.abs(np.log(ratio)))])
        cond5 = ConditionResult(True, None, extreme, "xF''/(-F') balanced")

    return ConditionReport(cond1, cond2, cond3, cond4, cond5)


@dataclass(frozen=True)
class ConsequencesReport:
    """Sampled verdicts for the power decay, local comparability, and
    curvature balance consequences of the structure conditions."""

    power_decay: ConditionResult
    local_comparability: ConditionResult
    curvature_balance: ConditionResult

    @property
    def all_pass(self) -> bool:
        return (
            self.power_decay.passed
            and self.local_comparability.passed
            and self.curvature_balance.passed
        )


def consequences_check(
    geom: Geometry,
    n_samples: int = 1000,
    kappa: float = 8.0,
    seed: Seed | None = None,
) -> ConsequencesReport:
    """Verify the sampled consequences of the structure conditions.

    (1) f(x1) <= (x1/x2)^eps f(x2) for x1 < x2; (2) f and |F'| move by at
    most a bounded factor over steps of length 1/|F'|; (3) the curvature
    balance xF''/(-F') within [1/kappa, kappa] plus F''/F'^2 <= kappa/eps.
    """
    if n_samples < 10:
        raise ValueError(f"n_samples must be at least 10, got {n_samples}")
    if geom.is_flat:
        trivial = ConditionResult(True, None, 1.0, "flat profile: all ratios are 1")
        return ConsequencesReport(trivial, trivial, trivial)
    rng = (seed if seed is not None else Seed(0)).generator()
    lo, hi = geom.R * 1e-6, geom.R * (1 - 1e-9)

    pair_logs = rng.uniform(math.log(lo), math.log(hi), size=(n_samples, 2))
    x1 = np.exp(np.min(pair_logs, axis=1))
    x2 = np.exp(np.max(pair_logs, axis=1))
    keep = x2 > x1
    x1, x2 = x1[keep], x2[keep]
    # F(x2) - F(x1) + eps*ln(x2/x1) <= 0 is the log form of part (1).
    margin = geom._F(x2) - geom._F(x1) + geom.eps * np.log(x2 / x1)
    tol = 1e-9 * (1.0 + np.abs(geom._F(x1)))
    bad = margin > tol
    if np.any(bad):
        i = int(np.argmax(margin - tol))
        part1 = ConditionResult(
            False, float(x2[i]), float(margin[i]), "power decay f(x1) <= (x1/x2)^eps f(x2) violated"
        )
    else:
        part1 = ConditionResult(True, None, float(np.max(margin)), "power decay holds")

    xa = np.exp(rng.uniform(math.log(lo), math.log(hi * 0.5), size=n_samples))
    d1a = geom._F1(xa)
    steps = rng.uniform(0.0, 1.0, size=n_samples)
    with np.errstate(divide="ignore"):
        reach = np.where(np.abs(d1a) > 0, 1.0 / np.abs(d1a), np.inf)
    xb = xa + steps * np.minimum(reach, hi - xa)
    ln_f_ratio = np.abs(geom._F(xa) - geom._F(xb))
    d1b = geom._F1(xb)
    ln_d_ratio = np.abs(np.log(np.abs(d1b)) - np.log(np.abs(d1a)))
    bound = max(kappa, 2.0 * (1.0 + 1.0 / geom.eps)) if geom.eps > 0 else kappa
    worst = float(max(np.max(np.exp(ln_f_ratio)), np.max(np.exp(ln_d_ratio))))
    if worst > bound:
        i = int(np.argmax(np.maximum(ln_f_ratio, ln_d_ratio)))
        part2 = ConditionResult(
            False, float(xa[i]), worst, f"comparability ratio {worst:.4g} exceeds {bound:.4g}"
        )
    else:
        part2 = ConditionResult(True, None, worst, f"ratios within {bound:.4g} over 1/|F'| steps")

    xs = np.geomspace(lo, hi, n_samples)
    d1s = geom._F1(xs)
    d2s = geom._F2(xs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = xs * d2s / (-d1s)
        second = d2s / d1s**2
    ok = (
        np.all(np.isfinite(ratio))
        and float(np.min(ratio)) >= 1.0 / kappa
        and float(np.max(ratio)) <= kappa
        and (geom.eps <= 0 or float(np.max(second)) <= kappa / geom.eps)
    )
    value = float(np.max(ratio[np.isfinite(ratio)])) if np.any(np.isfinite(ratio)) else math.inf
    if ok:
        part3 = ConditionResult(True, None, value, "curvature balance holds")
    else:
        i = int(np.argmax(np.where(np.isfinite(ratio), np.abs(np.log(np.abs(ratio))), np.inf)))
        part3 = ConditionResult(False, float(xs[i]), value, "curvature balance violated")

    return ConsequencesReport(part1, part2, part3)


class KusuokaResult(NamedTuple):
    """Limit of rF(r) on dyadic radii, with the hypoellipticity verdict."""

    limit_estimate: float
    hypoelliptic: bool
    trend_slope: float


def _aitken(seq: np.ndarray) -> float:
    """Iterated Aitken extrapolation of a convergent sequence's limit."""
    cur = seq.astype(float)
    for _ in range(6):
        if cur.size < 3:
            break
        d2 = cur[2:] - 2.0 * cur[1:-1] + cur[:-2]
        safe = np.abs(d2) > 1e-14 * np.maximum(1.0, np.abs(cur[2:]))
        if not np.any(safe):
            break
        nxt = np.where(safe, cur[2:] - (cur[2:] - cur[1:-1]) ** 2 / d2, cur[2:])
        cur = nxt
    return float(cur[-1])


def kusuoka_limit(geom: Geometry) -> KusuokaResult:
    """Richardson-style limit of rF(r) on r = 2^{-j}; zero means hypoelliptic.

    A divergent sequence is flagged non-hypoelliptic and reported with the
    trend slope of its tail.
    """
    if geom.is_flat:
        return KusuokaResult(0.0, True, 0.0)
    j0 = 1
    while 2.0**-j0 >= geom.R:
        j0 += 1
    js = np.arange(j0, 41)
    rs = 2.0 ** -js.astype(float)
    a = rs * geom._F(rs)
    tail = a[-8:] if a.size >= 8 else a
    slope = float(np.polyfit(np.arange(tail.size, dtype=float), tail, 1)[0])
    increasing = np.all(np.diff(tail) > 0)
    if increasing and tail[-1] > tail[0]:
        return KusuokaResult(float(a[-1]), False, slope)
    est = _aitken(a)
    return KusuokaResult(est, abs(est) <= 1e-3, slope)
