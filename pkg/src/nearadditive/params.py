"""Phase schedules and stretch budgets.

All rational quantities are ``Fraction``s so ceilings never drift. Degree
thresholds have the form ``n ** e``; integer comparisons against them are
done exactly by raising both sides to the exponent's denominator.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

CENTRALIZED = "centralized"
DISTRIBUTED = "distributed"
SPANNER = "spanner"

DEFAULT_DELTA_CAP = 10**15


class ConfigError(ValueError):
    """Parameters outside their admissible ranges."""


class InfeasibleSchedule(ValueError):
    """A schedule that cannot be realised at this scale."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(str(x))


@dataclass(frozen=True)
class RealPower:
    """The real number ``base ** exponent``.

    Rational exponents compare exactly; a float exponent (only produced for
    spanner schedules with kappa > 16) falls back to floating point.
    """

    base: int
    exponent: Fraction | float

    @property
    def exact(self) -> bool:
        return isinstance(self.exponent, Fraction)

    def __float__(self) -> float:
        return float(self.base) ** float(self.exponent)

    def _cmp(self, a) -> int:
        """Sign of ``a - self`` for an int or Fraction ``a``."""
        if a < 0:
            return -1
        if not self.exact:
            v = float(self)
            return (a > v) - (a < v)
        p, q = self.exponent.numerator, self.exponent.denominator
        lhs = Fraction(a) ** q
        rhs = Fraction(self.base) ** p
        return (lhs > rhs) - (lhs < rhs)

    def at_most(self, a: int) -> bool:
        """``self <= a``"""
        return self._cmp(a) >= 0

    def exceeds(self, a: int) -> bool:
        """``self > a``"""
        return self._cmp(a) < 0

    def bounds(self, a: int) -> bool:
        """``a <= self``"""
        return self._cmp(a) <= 0

    def ceil(self) -> int:
        c = max(0, math.ceil(float(self)))
        while self._cmp(c) < 0:
            c += 1
        while c > 0 and self._cmp(c - 1) >= 0:
            c -= 1
        return c

    def __str__(self) -> str:
        return f"{self.base}^({self.exponent})"


@dataclass(frozen=True)
class Config:
    n: int
    eps: Fraction
    kappa: int
    rho: Fraction | None = None

    @classmethod
    def make(cls, n, eps, kappa, rho=None) -> "Config":
        if isinstance(kappa, float) and not kappa.is_integer():
            raise ConfigError(f"kappa must be an integer, got {kappa}")
        cfg = cls(int(n), as_fraction(eps), int(kappa), None if rho is None else as_fraction(rho))
        cfg.validate()
        return cfg

    def validate(self, need_rho: bool = False) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n}")
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps must lie in (0, 1), got {self.eps}")
        if self.kappa < 2:
            raise ConfigError(f"kappa must be >= 2, got {self.kappa}")
        if self.rho is None:
            if need_rho:
                raise ConfigError("rho is required for distributed builds")
            return
        if not Fraction(1, self.kappa) < self.rho < Fraction(1, 2):
            raise ConfigError(f"rho must lie in (1/kappa, 1/2) = (1/{self.kappa}, 1/2), got {self.rho}")


@dataclass
class Schedule:
    kind: str
    n: int
    kappa: int
    eps_user: Fraction
    eps_internal: Fraction
    ell: int
    deg: list[RealPower]
    delta: list[int]
    radius: list[int]
    rho: Fraction | None = None
    i0: int | None = None
    gamma: Fraction | float | None = None
    sep: list[int] = field(default_factory=list)
    rul: list[int] = field(default_factory=list)

    @property
    def phases(self) -> range:
        return range(self.ell + 1)

    def deg_ceil(self, i: int) -> int:
        return self.deg[i].ceil()

    def report(self) -> str:
        head = f"# kind={self.kind} n={self.n} kappa={self.kappa} eps={self.eps_user} eps_internal={self.eps_internal} ell={self.ell}"
        if self.rho is not None:
            head += f" rho={self.rho} i0={self.i0}"
        if self.gamma is not None:
            head += f" gamma={self.gamma}"
        lines = [head, "i deg delta R sep rul"]
        for i in self.phases:
            sep = self.sep[i] if self.sep else "-"
            rul = self.rul[i] if self.rul else "-"
            lines.append(f"{i} {float(self.deg[i]):.6g} {self.delta[i]} {self.radius[i]} {sep} {rul}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def frac(x):
            return None if x is None else str(x)

        return json.dumps(
            {
                "kind": self.kind,
                "n": self.n,
                "kappa": self.kappa,
                "eps_user": frac(self.eps_user),
                "eps_internal": frac(self.eps_internal),
                "ell": self.ell,
                "deg_exponents": [str(d.exponent) if d.exact else d.exponent for d in self.deg],
                "delta": self.delta,
                "radius": self.radius,
                "rho": frac(self.rho),
                "i0": self.i0,
                "gamma": self.gamma if isinstance(self.gamma, float) else frac(self.gamma),
                "sep": self.sep,
                "rul": self.rul,
            },
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        d = json.loads(text)

        def frac(x):
            return None if x is None else Fraction(x)

        degs = [RealPower(d["n"], e if isinstance(e, float) else Fraction(e)) for e in d["deg_exponents"]]
        gamma = d["gamma"]
        return cls(
            kind=d["kind"],
            n=d["n"],
            kappa=d["kappa"],
            eps_user=Fraction(d["eps_user"]),
            eps_internal=Fraction(d["eps_internal"]),
            ell=d["ell"],
            deg=degs,
            delta=d["delta"],
            radius=d["radius"],
            rho=frac(d["rho"]),
            i0=d["i0"],
            gamma=gamma if isinstance(gamma, float) else frac(gamma),
            sep=d["sep"],
            rul=d["rul"],
        )


def floor_log2(x) -> int:
    """Largest k with 2**k <= x, exact for rationals."""
    if isinstance(x, float):
        return math.floor(math.log2(x))
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log of non-positive number")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while Fraction(2) ** k > x:
        k -= 1
    while Fraction(2) ** (k + 1) <= x:
        k += 1
    return k


def ceil_log2(x: int) -> int:
    return (x - 1).bit_length() if x > 1 else 0


def _deltas(ell: int, eps: Fraction, grow, cap: int) -> tuple[list[int], list[int]]:
    """delta_i = ceil(eps^-i) + 2 R_i with R_{i+1} = grow(delta_i) + R_i."""
    inv = 1 / eps
    delta, radius = [], [0]
    for i in range(ell + 1):
        d = math.ceil(inv**i) + 2 * radius[i]
        if d > cap:
            raise InfeasibleSchedule(f"delta_{i} = {d} exceeds the cap {cap}; schedule infeasible at this scale")
        delta.append(d)
        if i < ell:
            radius.append(grow(d) + radius[i])
    return delta, radius


def centralized_schedule(cfg: Config, delta_cap: int = DEFAULT_DELTA_CAP) -> Schedule:
    cfg.validate()
    k = cfg.kappa
    ell = ceil_log2(k + 1) - 1
    eps = cfg.eps / (34 * ell)
    deg = [RealPower(cfg.n, Fraction(2**i, k)) for i in range(ell + 1)]
    delta, radius = _deltas(ell, eps, lambda d: 2 * d, delta_cap)
    return Schedule(CENTRALIZED, cfg.n, k, cfg.eps, eps, ell, deg, delta, radius)


def _distributed_tail(cfg: Config, ell: int, eps: Fraction, delta_cap: int):
    rho = cfg.rho
    grow_factor = math.ceil(4 / rho) + 2
    delta, radius = _deltas(ell, eps, lambda d: grow_factor * d, delta_cap)
    sep = [2 * d + 1 for d in delta]
    rul = [math.floor(2 * d / rho) for d in delta]
    return delta, radius, sep, rul


def distributed_schedule(cfg: Config, delta_cap: int = DEFAULT_DELTA_CAP) -> Schedule:
    cfg.validate(need_rho=True)
    k, rho = cfg.kappa, cfg.rho
    i0 = floor_log2(k * rho)
    ell = i0 + math.ceil(Fraction(k + 1) / (k * rho)) - 1
    eps = cfg.eps * rho / (90 * ell)
    if rho < 25 * eps:
        raise ConfigError(f"rho={rho} < 25 * eps_internal={25 * eps}")
    deg = [RealPower(cfg.n, Fraction(2**i, k) if i <= i0 else rho) for i in range(ell + 1)]
    delta, radius, sep, rul = _distributed_tail(cfg, ell, eps, delta_cap)
    return Schedule(DISTRIBUTED, cfg.n, k, cfg.eps, eps, ell, deg, delta, radius, rho, i0, None, sep, rul)


def spanner_gamma(kappa: int) -> Fraction | float:
    if kappa <= 16:
        return Fraction(2)
    lk = math.log2(kappa)
    if kappa & (kappa - 1) == 0 and int(lk) & (int(lk) - 1) == 0:
        return Fraction(int(math.log2(int(lk))))
    return max(2.0, math.log2(lk))


def spanner_feasibility(n: int, kappa: int, rho: Fraction, eps: Fraction, ell: int) -> tuple[bool, str]:
    """Whether ``90 ell / (rho eps) <= n^(1/(2 kappa)) / 2``."""
    lhs = Fraction(90 * ell) / (rho * eps)
    ok = (2 * lhs) ** (2 * kappa) <= n
    msg = f"90*ell'/(rho*eps) = {float(lhs):.6g} > n^(1/(2 kappa))/2 = {n ** (1 / (2 * kappa)) / 2:.6g}"
    return ok, msg


def spanner_schedule(cfg: Config, check_feasibility: bool = True, delta_cap: int = DEFAULT_DELTA_CAP) -> Schedule:
    cfg.validate(need_rho=True)
    k, rho = cfg.kappa, cfg.rho
    gamma = spanner_gamma(k)
    i0 = min(floor_log2(gamma * k * rho), math.floor(k * rho))
    ell = i0 + math.ceil(1 / rho - Fraction(1, 2))
    if check_feasibility:
        ok, msg = spanner_feasibility(cfg.n, k, rho, cfg.eps, ell)
        if not ok:
            raise InfeasibleSchedule(f"spanner schedule infeasible: {msg}")
    eps = cfg.eps * rho / (90 * ell)
    deg = []
    for i in range(ell + 1):
        if i <= i0:
            e = (2**i - 1) / (gamma * k) + Fraction(1, k) if isinstance(gamma, Fraction) else (2**i - 1) / (gamma * k) + 1 / k
        elif i == i0 + 1:
            e = rho / 2
        else:
            e = rho
        deg.append(RealPower(cfg.n, e))
    delta, radius, sep, rul = _distributed_tail(cfg, ell, eps, delta_cap)
    return Schedule(SPANNER, cfg.n, k, cfg.eps, eps, ell, deg, delta, radius, rho, i0, gamma, sep, rul)


def make_schedule(kind: str, cfg: Config, check_feasibility: bool = True) -> Schedule:
    if kind == CENTRALIZED:
        return centralized_schedule(cfg)
    if kind == DISTRIBUTED:
        return distributed_schedule(cfg)
    if kind == SPANNER:
        return spanner_schedule(cfg, check_feasibility)
    raise ConfigError(f"unknown algorithm {kind!r}")


@dataclass(frozen=True)
class StretchBudget:
    alpha: Fraction
    beta: Fraction
    alphas: tuple[Fraction, ...]
    betas: tuple[Fraction, ...]


def stretch_budget(s: Schedule) -> StretchBudget:
    """Per-level multiplicative and additive stretch for the schedule."""
    eps = s.eps_internal
    alphas, betas = [Fraction(1)], [Fraction(0)]
    for i in range(1, s.ell + 1):
        b = 2 * betas[-1] + 6 * s.radius[i]
        e = eps**i
        alphas.append(alphas[-1] + e / (1 - e) * b)
        betas.append(b)
    return StretchBudget(alphas[-1], betas[-1], tuple(alphas), tuple(betas))


def check_schedule_invariants(s: Schedule) -> list[str]:
    """Violated schedule invariants, as readable strings (empty if none)."""
    bad = []
    for i in range(s.ell):
        a, b = s.deg[i], s.deg[i + 1]
        if s.kind != SPANNER and float(b.exponent) < float(a.exponent):
            bad.append(f"deg decreases at phase {i + 1}")
        if float(b.exponent) > 2 * float(a.exponent) + 1e-12:
            bad.append(f"deg_{i + 1} > deg_{i}^2")
    if s.kind == DISTRIBUTED:
        for i, d in enumerate(s.deg):
            if d.exponent > s.rho:
                bad.append(f"deg_{i} > n^rho")
    return bad
