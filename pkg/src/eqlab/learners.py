"""Learning rules: minimax (full information), score argmax, and bandit experts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adversary import RandomCE
from .bandit import (
    BanditState,
    RoundTables,
    bandit_init,
    bandit_update_with_stats,
)
from .concepts import HypothesisClass, VersionSpace, restrict
from .littlestone import ldim, ldim_mask
from .minimax import PayoffMatrix, bandit_payoff_matrix, fullinfo_payoff_matrix, solve_minimax

SCORE_TIE_TOL = 1e-12


@dataclass(frozen=True)
class LearnerDecision:
    players: tuple
    probs: np.ndarray
    certificate: float | None = None
    game: PayoffMatrix | None = None

    @classmethod
    def single(cls, h: int, certificate=None) -> "LearnerDecision":
        return cls((int(h),), np.ones(1), certificate)

    @property
    def deterministic(self) -> bool:
        return len(self.players) == 1

    def sample(self, u: float) -> int:
        cdf = np.cumsum(self.probs)
        idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return self.players[min(idx, len(self.players) - 1)]


def fullinfo_next(V: VersionSpace, adversary, history=(), epsilon=None) -> LearnerDecision:
    if len(V) == 1:
        return LearnerDecision.single(V.members[0], 0.0)
    game = fullinfo_payoff_matrix(V, adversary, history)
    p, v = solve_minimax(game, epsilon)
    return LearnerDecision(game.players, p, v, game)


def scores(V: VersionSpace, mu) -> dict:
    """``Pr_{x~mu}[Ldim(V_{x->h(x)}) = Ldim(V)]`` for each member ``h``."""
    cls = V.cls
    d = ldim(V)
    full = [[ldim_mask(cls, V.mask & m) == d for m in cls.masks[x]] for x in range(cls.domain_size)]
    out = {}
    for h in V.members:
        out[h] = math.fsum(float(mu[x]) for x in range(cls.domain_size) if full[x][cls(h, x)])
    return out


def score_learner_next(V: VersionSpace, mu) -> int:
    sc = scores(V, mu)
    best = max(sc.values())
    return min(h for h, s in sc.items() if s >= best - SCORE_TIE_TOL)


def conditional_retention(V: VersionSpace, mu, h: int, c: int) -> float:
    """``Pr_{x~mu}[Ldim(V_{x->c(x)}) = Ldim(V) | h(x) != c(x)]``."""
    cls = V.cls
    d = ldim(V)
    D = [x for x in range(cls.domain_size) if cls(h, x) != cls(c, x)]
    mass = math.fsum(float(mu[x]) for x in D)
    hit = math.fsum(float(mu[x]) for x in D if ldim(restrict(V, x, cls(c, x))) == d)
    return hit / mass


def bandit_next(state: BanditState, cls: HypothesisClass, adversary, history=(), epsilon=None) -> LearnerDecision:
    game = bandit_payoff_matrix(cls, state, adversary, history, RoundTables(state))
    if len(game) == 1:
        return LearnerDecision(game.players, np.ones(1), -1.0, game)
    p, v = solve_minimax(game, epsilon)
    return LearnerDecision(game.players, p, v, game)


# Episode-local learner sessions used by the protocol.  ``propose`` returns a
# decision; ``observe`` receives the counterexample and, under full
# information, its true label.


class MinimaxSession:
    kind = "minimax_full"

    def __init__(self, cls, adversary, epsilon=None):
        self.V = VersionSpace.full(cls)
        self.adversary = adversary
        self.epsilon = epsilon
        self.history = []

    def propose(self) -> LearnerDecision:
        return fullinfo_next(self.V, self.adversary, tuple(self.history), self.epsilon)

    def observe(self, h, x, y):
        self.history.append(h)
        self.V = restrict(self.V, x, y)


class ScoreSession:
    kind = "score_det"

    def __init__(self, cls, adversary, mu=None):
        self.V = VersionSpace.full(cls)
        if mu is None:
            mu = adversary.mu if isinstance(adversary, RandomCE) else [1.0 / cls.domain_size] * cls.domain_size
        self.mu = mu

    def propose(self) -> LearnerDecision:
        h = score_learner_next(self.V, self.mu)
        worst = max(
            (conditional_retention(self.V, self.mu, h, c) for c in self.V.members if c != h),
            default=0.0,
        )
        return LearnerDecision.single(h, worst)

    def observe(self, h, x, y):
        self.V = restrict(self.V, x, y)


class BanditSession:
    kind = "bandit"

    def __init__(self, cls, adversary, epsilon=None, prune=False):
        self.cls = cls
        self.state = bandit_init(cls)
        self.adversary = adversary
        self.epsilon = epsilon
        self.prune = prune
        self.history = []
        self.update_log = []

    def propose(self) -> LearnerDecision:
        return bandit_next(self.state, self.cls, self.adversary, tuple(self.history), self.epsilon)

    def observe(self, h, x, y=None):
        self.history.append(h)
        self.state, stats = bandit_update_with_stats(self.state, x, self.cls(h, x), self.prune)
        self.update_log.append(stats)


class TargetFirstSession:
    """Test stub that knows the target and proposes it immediately."""

    kind = "target_first"

    def __init__(self, cls, adversary, target=None):
        self.target = target

    def propose(self) -> LearnerDecision:
        return LearnerDecision.single(self.target)

    def observe(self, h, x, y=None):
        pass


LEARNER_KINDS = {
    "minimax_full": "full",
    "score_det": "full",
    "bandit": "bandit",
    "target_first": None,
}


def make_session(spec: dict, cls, adversary, target=None):
    kind = spec.get("kind")
    eps = spec.get("epsilon")
    if kind == "minimax_full":
        return MinimaxSession(cls, adversary, eps)
    if kind == "score_det":
        return ScoreSession(cls, adversary, spec.get("mu"))
    if kind == "bandit":
        return BanditSession(cls, adversary, eps, bool(spec.get("prune", False)))
    if kind == "target_first":
        return TargetFirstSession(cls, adversary, target)
    raise ValueError(f"unknown learner kind {kind!r}")
