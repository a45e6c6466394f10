"""Expert weights over label sequences for bandit feedback.

The learner keeps a distribution ``mu_t`` over label sequences for the
instances ``x_1..x_t`` seen so far.  Only sequences realized by some
hypothesis ever get an SOA prediction; every other sequence predicts nothing,
keeps the generic ``1/k^3`` weight per extension forever, and only enters
through the normalizer.  So the state stores realized sequences explicitly and
folds all unrealized ones into a single ``residual`` mass.  This is exact: no
quantity the learner uses depends on how the residual is split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .concepts import HypothesisClass
from .littlestone import ldim_mask, soa_label_mask

PRUNE_THRESHOLD = 1e-15


class PotentialUndefined(ValueError):
    pass


class DegenerateNormalizer(ArithmeticError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass(frozen=True)
class BanditState:
    cls: HypothesisClass
    xs: tuple = ()
    masses: dict = field(default_factory=dict)  # realized sequence -> mass > 0
    residual: float = 0.0
    support_size: int = 1  # number of sequences with positive mass

    @property
    def t(self) -> int:
        return len(self.xs)

    @property
    def k(self) -> int:
        return self.cls.num_labels

    def total(self) -> float:
        return math.fsum(self.masses.values()) + self.residual

    def sequence_of(self, h: int) -> tuple:
        return tuple(int(self.cls.labels[h, x]) for x in self.xs)

    def mass_of(self, h: int) -> float:
        return self.masses.get(self.sequence_of(h), 0.0)

    def alive(self) -> list[int]:
        """Hypotheses whose label sequence still carries mass."""
        return [h for h in range(self.cls.num_hypotheses) if self.mass_of(h) > 0]

    def sequence_mask(self, s) -> int:
        return self.cls.consistent_mask(zip(self.xs, s))


@dataclass(frozen=True)
class UpdateStats:
    instance: int
    wrong_label: int
    nu_total: float
    zero_branch_mass: float
    kappa: tuple


def bandit_init(cls: HypothesisClass) -> BanditState:
    return BanditState(cls, (), {(): 1.0}, 0.0, 1)


def soa_rule(cls: HypothesisClass, xs, s, x: int):
    if len(xs) != len(s):
        raise LengthMismatch(f"{len(xs)} instances but {len(s)} labels")
    mask = cls.consistent_mask(zip(xs, s))
    if not mask:
        return None
    return soa_label_mask(cls, mask, x)


def _rules(state: BanditState, x: int) -> dict:
    return {s: soa_rule(state.cls, state.xs, s, x) for s in state.masses}


def kappa_all(state: BanditState, x: int, rules=None) -> list[float]:
    rules = _rules(state, x) if rules is None else rules
    out = [0.0] * state.k
    for s, mu in state.masses.items():
        r = rules[s]
        if r is not None:
            out[r] += mu
    return out


def kappa(state: BanditState, x: int, j: int) -> float:
    return kappa_all(state, x)[j]


def boost_factor(k: int, kap: list, i: int, j: int) -> float:
    """Multiplier on ``mu_t(s)`` for the extension ``(s, j)`` when SOA predicts ``j``."""
    return 1 - (k - 1) / k ** 3 + kap[i] / (kap[j] * k)


def nu_total(state: BanditState, x: int, i: int, rules=None, kap=None) -> float:
    """Sum of the unnormalized update weights for wrong label ``i`` at ``x``."""
    k = state.k
    rules = _rules(state, x) if rules is None else rules
    kap = kappa_all(state, x, rules) if kap is None else kap
    base = (k - 1) / k ** 3
    parts = []
    for s, mu in state.masses.items():
        r = rules[s]
        if r is None or r == i:
            parts.append(mu * base)
        else:
            parts.append(mu * (boost_factor(k, kap, i, r) + (k - 2) / k ** 3))
    parts.append(state.residual * base)
    return math.fsum(parts)


def bandit_update_with_stats(state: BanditState, x: int, i: int, prune: bool = False):
    k = state.k
    if not 0 <= i < k:
        raise ValueError(f"label {i} out of range")
    cls = state.cls
    rules = _rules(state, x)
    kap = kappa_all(state, x, rules)
    small = 1 / k ** 3
    nu = {}
    residual = state.residual * (k - 1) * small
    for s, mu in state.masses.items():
        r = rules[s]
        vmask = state.sequence_mask(s)
        for j in range(k):
            if j == i:
                continue
            w = mu * boost_factor(k, kap, i, j) if r == j else mu * small
            if vmask & cls.masks[x][j]:
                nu[s + (j,)] = w
            else:
                residual += w
    total = math.fsum(nu.values()) + residual
    if not total > 0:
        raise DegenerateNormalizer("update weights sum to zero")
    zero_branch = math.fsum(w for s, w in nu.items() if s[-1] == i)
    masses = {s: w / total for s, w in nu.items()}
    residual /= total
    support = state.support_size * (k - 1)
    if prune:
        dropped = [s for s, w in masses.items() if w < PRUNE_THRESHOLD]
        for s in dropped:
            del masses[s]
        support -= len(dropped)
        z = math.fsum(masses.values()) + residual
        masses = {s: w / z for s, w in masses.items()}
        residual /= z
    new = BanditState(cls, state.xs + (int(x),), masses, residual, support)
    return new, UpdateStats(int(x), int(i), total, zero_branch, tuple(kap))


def bandit_update(state: BanditState, x: int, i: int, prune: bool = False) -> BanditState:
    return bandit_update_with_stats(state, x, i, prune)[0]


def level(state: BanditState, h: int, x: int | None = None) -> int:
    """Ldim of hypotheses agreeing with ``h`` on ``x_1..x_t`` (and on ``x`` if given)."""
    cls = state.cls
    mask = state.sequence_mask(state.sequence_of(h))
    if x is not None:
        mask &= cls.masks[x][cls(h, x)]
    return ldim_mask(cls, mask)


def potential(state: BanditState, h: int) -> float:
    mu = state.mass_of(h)
    if mu <= 0:
        raise PotentialUndefined(f"hypothesis {h} has zero mass")
    return 8 * math.log(state.k) * level(state, h) - math.log(mu)


class RoundTables:
    """Per-round quantities shared by every payoff entry at a fixed ``mu_t``."""

    def __init__(self, state: BanditState):
        self.state = state
        self._rules = {}
        self._kappa = {}
        self._totals = {}

    def rules(self, x):
        if x not in self._rules:
            self._rules[x] = _rules(self.state, x)
        return self._rules[x]

    def kappa(self, x):
        if x not in self._kappa:
            self._kappa[x] = kappa_all(self.state, x, self.rules(x))
        return self._kappa[x]

    def nu_total(self, x, i):
        if (x, i) not in self._totals:
            self._totals[x, i] = nu_total(self.state, x, i, self.rules(x), self.kappa(x))
        return self._totals[x, i]

    def log_mass_ratio(self, c: int, x: int, i: int) -> float:
        """``ln mu^{(i)}_{t+1}(c) - ln mu_t(c)`` for the extension by ``c(x) != i``."""
        state = self.state
        k = state.k
        s = state.sequence_of(c)
        if state.masses.get(s, 0.0) <= 0:
            raise PotentialUndefined(f"hypothesis {c} has zero mass")
        j = state.cls(c, x)
        if j == i:
            raise PotentialUndefined(f"hypothesis {c} predicts the rejected label at {x}")
        if self.rules(x)[s] == j:
            factor = boost_factor(k, self.kappa(x), i, j)
        else:
            factor = 1 / k ** 3
        return math.log(factor) - math.log(self.nu_total(x, i))

    def pointwise_payoff(self, h: int, c: int, x: int) -> float:
        """Potential increment of ``c`` when ``h`` is rejected with counterexample ``x``."""
        state = self.state
        i = state.cls(h, x)
        drop = level(state, c, x) - level(state, c)
        return 8 * math.log(state.k) * drop - self.log_mass_ratio(c, x, i)
