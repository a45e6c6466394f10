"""Counterexample generators with exact output distributions.

Every generator answers ``distribution(h, c, history)`` where ``h`` is the
learner's hypothesis and ``c`` the target.  The answer is either ACCEPT or a
finite distribution over instances in the disagreement set of ``h`` and ``c``.
Probabilities are plain Python numbers, so passing ``Fraction`` weights gives
exact arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .concepts import HypothesisClass, VersionSpace
from .littlestone import MistakeTree, ldim, shattered_tree

SYMMETRY_TOL = 1e-12


class ZeroMassDisagreement(ValueError):
    pass


class AdversaryNotExact(TypeError):
    pass


@dataclass(frozen=True)
class CEDistribution:
    support: tuple = ()  # ((instance, probability), ...) sorted by instance
    accept: bool = False

    @classmethod
    def accepting(cls) -> "CEDistribution":
        return cls((), True)

    @classmethod
    def point(cls, x: int) -> "CEDistribution":
        return cls(((int(x), 1),))

    def sample(self, u: float) -> int:
        """Inverse-CDF draw from a uniform ``u`` in [0, 1)."""
        if self.accept:
            raise ValueError("ACCEPT has no counterexample to sample")
        total = 0.0
        for x, p in self.support:
            total += float(p)
            if u < total:
                return x
        return self.support[-1][0]

    def as_dict(self) -> dict:
        return dict(self.support)


ACCEPT = CEDistribution.accepting()


def _disagreement(cls: HypothesisClass, h: int, c: int) -> list[int]:
    return [int(x) for x in np.flatnonzero(cls.labels[h] != cls.labels[c])]


def _normalize_mu(mu, n: int) -> tuple:
    if mu is None:
        return tuple(1.0 / n for _ in range(n))
    if len(mu) != n:
        raise ValueError(f"mu has {len(mu)} weights for a domain of size {n}")
    if any(w < 0 for w in mu):
        raise ValueError("mu must be nonnegative")
    total = sum(mu)
    if total <= 0:
        raise ValueError("mu has zero total mass")
    return tuple(w / total for w in mu)


class Adversary:
    """Base class; subclasses fill in ``_distribution``."""

    kind = "abstract"
    exact = True

    def __init__(self, cls: HypothesisClass):
        self.cls = cls

    def distribution(self, h: int, c: int, history=()) -> CEDistribution:
        if h == c:
            return ACCEPT
        return self._distribution(h, c, history)

    def _distribution(self, h, c, history):
        raise NotImplementedError

    def spec(self) -> dict:
        return {"kind": self.kind}


class RandomCE(Adversary):
    """``x ~ mu`` conditioned on ``h(x) != c(x)``."""

    kind = "random"

    def __init__(self, cls, mu=None):
        super().__init__(cls)
        self.mu = _normalize_mu(mu, cls.domain_size)

    def _distribution(self, h, c, history):
        return random_ce_distribution(self.mu, self.cls, h, c)

    def spec(self):
        return {"kind": self.kind, "mu": [float(w) for w in self.mu]}


def random_ce_distribution(mu, cls: HypothesisClass, h: int, c: int) -> CEDistribution:
    D = _disagreement(cls, h, c)
    mass = sum(mu[x] for x in D)
    if mass <= 0:
        raise ZeroMassDisagreement(f"mu gives no mass to the disagreement of {h} and {c}")
    return CEDistribution(tuple((x, mu[x] / mass) for x in D if mu[x] > 0))


def iid_order_distribution(mu, cls: HypothesisClass, h: int, c: int) -> CEDistribution:
    """First disagreement along an infinite i.i.d. ``mu`` sequence, in closed form.

    The first hit lands on ``x`` at position ``j`` with probability
    ``q**(j-1) * mu[x]`` where ``q`` is the mass outside the disagreement set;
    summing the geometric series over ``j`` gives ``mu[x] / (1 - q)``.
    """
    D = set(_disagreement(cls, h, c))
    miss = sum(mu[x] for x in range(cls.domain_size) if x not in D)
    if miss >= 1:
        raise ZeroMassDisagreement(f"mu gives no mass to the disagreement of {h} and {c}")
    series = 1 / (1 - miss)
    return CEDistribution(tuple((x, mu[x] * series) for x in sorted(D) if mu[x] > 0))


class OrderCE(Adversary):
    kind = "order"

    def __init__(self, cls, sequence):
        super().__init__(cls)
        self.sequence = tuple(int(x) for x in sequence)
        if any(not 0 <= x < cls.domain_size for x in self.sequence):
            raise ValueError("sequence mentions an instance outside the domain")

    def _distribution(self, h, c, history):
        return order_induced_distribution(self.sequence, self.cls, h, c)

    def spec(self):
        return {"kind": self.kind, "sequence": list(self.sequence)}


def order_induced_distribution(sequence, cls: HypothesisClass, h: int, c: int) -> CEDistribution:
    rh, rc = cls.labels[h], cls.labels[c]
    for x in sequence:
        if rh[x] != rc[x]:
            return CEDistribution.point(x)
    return ACCEPT


def _walk(tree: MistakeTree, row) -> tuple:
    """Edge-index path followed by ``row`` until no edge matches."""
    path = []
    node = tree
    while not node.is_leaf:
        for i, (y, sub) in enumerate(node.edges):
            if row[node.instance] == y:
                path.append(i)
                node = sub
                break
        else:
            break
    return tuple(path)


def _node_at(tree: MistakeTree, path) -> MistakeTree:
    node = tree
    for i in path:
        node = node.edges[i][1]
    return node


def _divergence(tree: MistakeTree, ph: tuple, pc: tuple) -> CEDistribution:
    if ph == pc:
        return ACCEPT
    j = 0
    while j < min(len(ph), len(pc)) and ph[j] == pc[j]:
        j += 1
    return CEDistribution.point(_node_at(tree, ph[:j]).instance)


class DecisionTreeCE(Adversary):
    """Instance at the first node where the two induced paths part ways."""

    kind = "dtree"

    def __init__(self, cls, tree: MistakeTree):
        super().__init__(cls)
        self.tree = tree

    def _distribution(self, h, c, history):
        return decision_tree_distribution(self.tree, self.cls, h, c)

    def spec(self):
        return {"kind": self.kind, "tree": self.tree.to_json()}


def decision_tree_distribution(tree: MistakeTree, cls: HypothesisClass, h: int, c: int) -> CEDistribution:
    return _divergence(tree, _walk(tree, cls.labels[h]), _walk(tree, cls.labels[c]))


@dataclass(frozen=True)
class TreeAdversaryState:
    cls: HypothesisClass
    tree: MistakeTree
    nodes: tuple = field(default=(), repr=False)  # nodes[h] = edge-index path of nu(h)

    @classmethod
    def build(cls_, hc: HypothesisClass, tree: MistakeTree | None = None) -> "TreeAdversaryState":
        if tree is None:
            tree = shattered_tree(VersionSpace.full(hc))
        nodes = tuple(_walk(tree, hc.labels[h]) for h in range(hc.num_hypotheses))
        return cls_(hc, tree, nodes)

    @property
    def depth(self) -> int:
        return self.tree.depth

    def leaf_targets(self) -> list[int]:
        """One hypothesis per leaf: the lowest index realizing that path."""
        out = []
        for path in self.tree.paths():
            mask = self.cls.consistent_mask(path)
            out.append((mask & -mask).bit_length() - 1)
        return out


def assign_node(state: TreeAdversaryState, h: int) -> tuple:
    """Edge-index path from the root to the deepest node reached by ``h``."""
    return state.nodes[h]


def tree_adversary_distribution(state: TreeAdversaryState, h: int, c: int) -> CEDistribution:
    return _divergence(state.tree, state.nodes[h], state.nodes[c])


class TreeAdversary(Adversary):
    kind = "ldim_tree"

    def __init__(self, cls, tree: MistakeTree | None = None):
        super().__init__(cls)
        self.state = TreeAdversaryState.build(cls, tree)

    def distribution(self, h, c, history=()):
        # nu(h) == nu(c) accepts even for distinct rows
        return tree_adversary_distribution(self.state, h, c)

    def spec(self):
        return {"kind": self.kind, "tree": self.state.tree.to_json()}


class MinIndexPositiveCE(Adversary):
    """Least ``x`` with ``h(x) = 1 != c(x)``, else the least disagreement.

    Deliberately asymmetric; used to exercise ``check_symmetric``.
    """

    kind = "min_positive"

    def _distribution(self, h, c, history):
        D = _disagreement(self.cls, h, c)
        for x in D:
            if self.cls(h, x) == 1:
                return CEDistribution.point(x)
        return CEDistribution.point(D[0])


@dataclass
class SymmetryReport:
    passed: bool
    witness: tuple | None = None
    detail: str = ""

    def __str__(self):
        if self.passed:
            return "PASS"
        return f"FAIL at (h, c) = {self.witness}: {self.detail}"


def same_distribution(a: CEDistribution, b: CEDistribution, tol=SYMMETRY_TOL) -> bool:
    if a.accept or b.accept:
        return a.accept == b.accept
    da, db = a.as_dict(), b.as_dict()
    if set(da) != set(db):
        return False
    return all(abs(da[x] - db[x]) <= tol for x in da)


def check_symmetric(adversary: Adversary, cls: HypothesisClass) -> SymmetryReport:
    if not getattr(adversary, "exact", False):
        raise AdversaryNotExact(f"{type(adversary).__name__} exposes no exact distributions")
    m = cls.num_hypotheses
    for h in range(m):
        for c in range(m):
            if h == c:
                continue
            a = adversary.distribution(h, c, ())
            b = adversary.distribution(c, h, ())
            if not same_distribution(a, b):
                return SymmetryReport(False, (h, c), f"{a} != {b}")
    return SymmetryReport(True)


def random_decision_tree(cls: HypothesisClass, depth: int, seed: int) -> MistakeTree:
    """A random labeled decision tree with up to ``k`` edges per node."""
    rng = np.random.default_rng(seed)
    k = cls.num_labels

    def grow(d):
        if d == 0 or rng.random() < 0.2:
            return MistakeTree()
        x = int(rng.integers(cls.domain_size))
        width = int(rng.integers(1, k + 1))
        labels = sorted(int(y) for y in rng.choice(k, size=width, replace=False))
        return MistakeTree(x, tuple((y, grow(d - 1)) for y in labels))

    return grow(depth)


def adversary_from_spec(spec: dict, cls: HypothesisClass) -> Adversary:
    kind = spec.get("kind")
    if kind == "random":
        return RandomCE(cls, spec.get("mu"))
    if kind == "order":
        seq = spec.get("sequence", list(range(cls.domain_size)))
        return OrderCE(cls, seq)
    if kind == "dtree":
        if "tree" not in spec:
            raise ValueError("dtree adversary needs a 'tree'")
        return DecisionTreeCE(cls, MistakeTree.from_json(spec["tree"]))
    if kind == "ldim_tree":
        tree = MistakeTree.from_json(spec["tree"]) if "tree" in spec else None
        adv = TreeAdversary(cls, tree)
        if tree is not None and tree.depth != ldim(VersionSpace.full(cls)):
            raise ValueError("ldim_tree needs a tree of depth Ldim(H)")
        return adv
    raise ValueError(f"unknown adversary kind {kind!r}")
