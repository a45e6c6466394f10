"""Payoff games for the two learners and a certified matrix-game solver.

Rows are the learner's hypotheses (minimizing), columns the adversary's
targets.  Every solve returns the row strategy together with its best-response
value, which is the number the progress arguments actually need.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .adversary import AdversaryNotExact
from .bandit import BanditState, RoundTables
from .concepts import VersionSpace
from .littlestone import ldim, ldim_mask

log = logging.getLogger(__name__)

EXACT_MAX_DIM = 64
EXACT_EPS = 1e-9
ITERATIVE_EPS = 1e-6


class NonSquare(ValueError):
    pass


class NonFinite(ValueError):
    pass


@dataclass(frozen=True)
class PayoffMatrix:
    players: tuple  # hypothesis index of each row / column
    values: np.ndarray

    def __len__(self):
        return len(self.players)

    def entry(self, h: int, c: int) -> float:
        return float(self.values[self.players.index(h), self.players.index(c)])

    def to_csv(self, path) -> None:
        header = ",".join(["h\\c"] + [str(p) for p in self.players])
        lines = [header]
        for h, row in zip(self.players, self.values):
            lines.append(",".join([str(h)] + [repr(float(v)) for v in row]))
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")


def _require_exact(adversary):
    if not getattr(adversary, "exact", False):
        raise AdversaryNotExact(f"{type(adversary).__name__} exposes no exact distributions")


def fullinfo_payoff_matrix(V: VersionSpace, adversary, history=()) -> PayoffMatrix:
    """Probability that the counterexample leaves the target with full Ldim."""
    _require_exact(adversary)
    cls = V.cls
    players = tuple(V.members)
    d = ldim(V)
    keeps = {}  # (x, y) -> Ldim(V_{x->y}) == d

    def keeps_full(x, y):
        if (x, y) not in keeps:
            keeps[x, y] = ldim_mask(cls, V.mask & cls.masks[x][y]) == d
        return keeps[x, y]

    M = np.zeros((len(players), len(players)))
    for a, h in enumerate(players):
        for b, c in enumerate(players):
            if h == c:
                continue
            dist = adversary.distribution(h, c, history)
            M[a, b] = float(sum(p for x, p in dist.support if keeps_full(x, cls(c, x))))
    return PayoffMatrix(players, M)


def bandit_payoff_matrix(cls, state: BanditState, adversary, history=(), tables=None) -> PayoffMatrix:
    """Expected potential increment of the target, over hypotheses still carrying mass.

    Hypotheses whose label sequence already lost all mass were ruled out by an
    earlier rejection; their potential is infinite, so they are left out of the
    game on both sides.
    """
    _require_exact(adversary)
    tables = RoundTables(state) if tables is None else tables
    players = tuple(state.alive())
    M = np.empty((len(players), len(players)))
    for a, h in enumerate(players):
        for b, c in enumerate(players):
            if h == c:
                M[a, b] = -1.0
                continue
            dist = adversary.distribution(h, c, history)
            if dist.accept:
                M[a, b] = -1.0
                continue
            M[a, b] = math.fsum(float(p) * tables.pointwise_payoff(h, c, x) for x, p in dist.support)
    return PayoffMatrix(players, M)


def _as_array(matrix) -> np.ndarray:
    A = np.asarray(matrix.values if isinstance(matrix, PayoffMatrix) else matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFinite("payoff matrix has non-finite entries")
    return A


def best_response_value(matrix, p) -> float:
    """Largest column payoff against row strategy ``p``."""
    A = np.asarray(matrix.values if isinstance(matrix, PayoffMatrix) else matrix, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(np.max(p @ A))


def worst_row_value(matrix, q) -> float:
    """Smallest row payoff against column strategy ``q`` (a lower bound on the value)."""
    A = np.asarray(matrix.values if isinstance(matrix, PayoffMatrix) else matrix, dtype=float)
    return float(np.min(A @ np.asarray(q, dtype=float)))


def _clean(p) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    return p / p.sum()


_HIGHS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def _lp_rows(A: np.ndarray) -> np.ndarray:
    n = A.shape[0]
    # variables (p_1..p_n, v): minimize v s.t. A^T p <= v, sum p = 1
    c = np.zeros(n + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A.T, -np.ones((n, 1))])
    A_eq = np.hstack([np.ones((1, n)), np.zeros((1, 1))])
    bounds = [(0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs", options=_HIGHS)
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    return _clean(res.x[:n])


def _solve_exact(A):
    p = _lp_rows(A)
    q = _lp_rows(-A.T)  # column player maximizes, i.e. minimizes -A^T
    return p, q


def _solve_mwu(A, epsilon, max_iter=200_000):
    """Hedge self-play; averaged strategies carry the duality-gap certificate."""
    n = A.shape[0]
    span = max(float(A.max() - A.min()), 1e-12)
    lr = math.sqrt(8 * math.log(n) / max_iter) / span
    wp = np.zeros(n)
    wq = np.zeros(n)
    sp = np.zeros(n)
    sq = np.zeros(n)
    for it in range(1, max_iter + 1):
        p = np.exp(wp - wp.max())
        p /= p.sum()
        q = np.exp(wq - wq.max())
        q /= q.sum()
        sp += p
        sq += q
        wp -= lr * (A @ q)
        wq += lr * (p @ A)
        if it % 500 == 0:
            pa, qa = sp / it, sq / it
            if best_response_value(A, pa) - worst_row_value(A, qa) <= epsilon:
                return pa, qa, True
    return sp / max_iter, sq / max_iter, False


def solve_minimax(matrix, epsilon: float | None = None, method: str = "auto"):
    """Row strategy ``p`` and bound ``v`` with ``max_c (pA)_c <= v``.

    ``v`` is the best-response value of ``p`` itself.  Games up to 64 players
    go to an LP; larger ones run multiplicative weights until the duality gap is
    below ``epsilon``, falling back to the LP if that stalls.
    """
    A = _as_array(matrix)
    if method == "auto":
        method = "exact" if A.shape[0] <= EXACT_MAX_DIM else "mwu"
    if method == "exact":
        eps = EXACT_EPS if epsilon is None else epsilon
        p, q = _solve_exact(A)
    elif method == "mwu":
        eps = ITERATIVE_EPS if epsilon is None else epsilon
        p, q, ok = _solve_mwu(A, eps)
        if not ok:
            log.warning("multiplicative weights stalled above gap %g; using LP", eps)
            p, q = _solve_exact(A)
    else:
        raise ValueError(f"unknown method {method!r}")
    v = best_response_value(A, p)
    gap = v - worst_row_value(A, q)
    if gap > eps:
        log.warning("duality gap %.3g exceeds epsilon %.3g", gap, eps)
    return p, v
