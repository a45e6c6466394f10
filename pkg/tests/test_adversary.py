import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlab.adversary import (
    ACCEPT,
    AdversaryNotExact,
    CEDistribution,
    DecisionTreeCE,
    MinIndexPositiveCE,
    OrderCE,
    RandomCE,
    TreeAdversary,
    TreeAdversaryState,
    ZeroMassDisagreement,
    adversary_from_spec,
    assign_node,
    check_symmetric,
    decision_tree_distribution,
    iid_order_distribution,
    order_induced_distribution,
    random_ce_distribution,
    random_decision_tree,
    tree_adversary_distribution,
)
from eqlab.concepts import (
    VersionSpace,
    disagreement_set,
    gen_cube,
    gen_linear_functionals,
    gen_random_class,
    gen_singletons,
)
from eqlab.littlestone import MistakeTree, shattered_tree

LEAF = MistakeTree()


def builtins(cls, seed=0):
    rng = np.random.default_rng(seed)
    return [
        RandomCE(cls),
        RandomCE(cls, list(rng.random(cls.domain_size) + 0.1)),
        OrderCE(cls, list(rng.permutation(cls.domain_size))),
        OrderCE(cls, [0]),
        DecisionTreeCE(cls, random_decision_tree(cls, 3, seed)),
        TreeAdversary(cls),
    ]


class TestRandomCE:
    def test_singletons_half(self):
        cls = gen_singletons(5)
        dist = random_ce_distribution([Fraction(1, 5)] * 5, cls, 1, 3)
        assert dist.as_dict() == {1: Fraction(1, 2), 3: Fraction(1, 2)}

    def test_point_mass(self):
        cls = gen_singletons(4)
        mu = [0, 0, 1, 0]
        assert random_ce_distribution(mu, cls, 2, 0).as_dict() == {2: 1}

    def test_zero_mass(self):
        with pytest.raises(ZeroMassDisagreement):
            random_ce_distribution([1, 0, 0, 0], gen_singletons(4), 2, 3)

    def test_linear_uniform_over_six(self):
        cls = gen_linear_functionals(3, 2)
        mu = [Fraction(1, 9)] * 9
        for h, c in itertools.permutations(range(8), 2):
            dist = random_ce_distribution(mu, cls, h, c)
            assert len(dist.support) == 6
            assert set(dist.as_dict().values()) == {Fraction(1, 6)}

    def test_accept_on_equal(self):
        assert RandomCE(gen_singletons(3)).distribution(1, 1).accept


class TestOrder:
    def test_first_disagreement(self):
        cls = gen_singletons(5)
        assert order_induced_distribution(range(5), cls, 0, 3).as_dict() == {0: 1}

    def test_accept_when_sequence_misses(self):
        cls = gen_singletons(5)
        assert order_induced_distribution([1, 2, 4], cls, 0, 3).accept

    def test_iid_equals_random_exact(self):
        cls = gen_singletons(5)
        mu = [Fraction(w, 15) for w in (1, 2, 3, 4, 5)]
        for h, c in itertools.permutations(range(5), 2):
            assert iid_order_distribution(mu, cls, h, c) == random_ce_distribution(mu, cls, h, c)

    def test_iid_equals_random_bruteforce(self):
        # oracle: sum over finite prefixes of the i.i.d. sequence (first hit at step t)
        cls = gen_random_class(3, 3, 6, seed=5)
        mu = [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
        for h, c in itertools.permutations(range(6), 2):
            D = disagreement_set(cls, h, c)
            miss = 1 - sum(mu[x] for x in D)
            series = {x: sum(miss ** t * mu[x] for t in range(200)) for x in D}
            got = iid_order_distribution(mu, cls, h, c).as_dict()
            assert all(abs(float(got[x] - series[x])) < 1e-12 for x in D)


class TestDecisionTree:
    def tree(self):
        # root asks x=0; on label 0 ask x=1, on label 1 stop
        return MistakeTree(0, ((0, MistakeTree(1, ((0, LEAF), (1, LEAF)))), (1, LEAF)))

    def test_same_hypothesis(self):
        cls = gen_cube(2)
        assert decision_tree_distribution(self.tree(), cls, 1, 1).accept

    def test_root_split(self):
        cls = gen_cube(2)
        rows = [tuple(r) for r in cls.labels.tolist()]
        h, c = rows.index((0, 0)), rows.index((1, 0))
        assert decision_tree_distribution(self.tree(), cls, h, c).as_dict() == {0: 1}

    def test_same_leaf_accepts_early(self):
        cls = gen_cube(2)
        rows = [tuple(r) for r in cls.labels.tolist()]
        h, c = rows.index((1, 0)), rows.index((1, 1))
        assert decision_tree_distribution(self.tree(), cls, h, c).accept

    def test_outputs_disagree_exhaustive(self):
        for seed in range(20):
            cls = gen_random_class(4, 3, 10, seed)
            tree = random_decision_tree(cls, 4, seed)
            for h, c in itertools.permutations(range(10), 2):
                dist = decision_tree_distribution(tree, cls, h, c)
                assert dist.accept or all(cls(h, x) != cls(c, x) for x, _ in dist.support)


class TestTreeAdversary:
    def test_leaf_pair_parent(self):
        cls = gen_cube(3)
        state = TreeAdversaryState.build(cls)
        leaves = state.leaf_targets()
        by_path = {state.nodes[h]: h for h in leaves}
        for path, h in by_path.items():
            sib = path[:-1] + (1 - path[-1],)
            c = by_path[sib]
            node = state.tree
            for i in path[:-1]:
                node = node.edges[i][1]
            assert tree_adversary_distribution(state, h, c).as_dict() == {node.instance: 1}

    def test_equal_node_accepts(self):
        cls = gen_singletons(8)
        state = TreeAdversaryState.build(cls)
        groups = {}
        for h in range(8):
            groups.setdefault(assign_node(state, h), []).append(h)
        pair = next(g for g in groups.values() if len(g) > 1)
        assert tree_adversary_distribution(state, pair[0], pair[1]).accept

    def test_binary_reaches_leaves(self):
        for cls in (gen_cube(4), gen_singletons(6), gen_random_class(4, 2, 9, 3)):
            state = TreeAdversaryState.build(cls)
            assert all(len(assign_node(state, h)) == state.depth for h in range(cls.num_hypotheses))

    def test_root_halt(self):
        # k=3 tree whose root edges miss label 2
        cls = gen_linear_functionals(3, 1)
        tree = MistakeTree(1, ((0, LEAF), (1, LEAF)))
        state = TreeAdversaryState.build(cls, tree)
        h = next(h for h in range(cls.num_hypotheses) if cls(h, 1) == 2)
        assert assign_node(state, h) == ()

    @pytest.mark.parametrize("cls", [gen_singletons(8), gen_linear_functionals(3, 2)], ids=["s8", "lin32"])
    def test_valid_and_accept_semantics(self, cls):
        state = TreeAdversaryState.build(cls)
        for h, c in itertools.permutations(range(cls.num_hypotheses), 2):
            dist = tree_adversary_distribution(state, h, c)
            if dist.accept:
                assert assign_node(state, h) == assign_node(state, c)
                node = state.tree
                for i in assign_node(state, h):
                    assert cls(h, node.instance) == cls(c, node.instance)
                    node = node.edges[i][1]
            else:
                assert assign_node(state, h) != assign_node(state, c)
                (x, p), = dist.support
                assert p == 1 and cls(h, x) != cls(c, x)


class TestSymmetry:
    @pytest.mark.parametrize("cls", [gen_singletons(6), gen_linear_functionals(3, 1), gen_random_class(4, 3, 8, 2)],
                             ids=["s6", "lin31", "rand"])
    def test_builtins_pass(self, cls):
        for adv in builtins(cls):
            assert check_symmetric(adv, cls).passed, adv.kind

    def test_min_positive_fails(self):
        cls = gen_singletons(3)
        rep = check_symmetric(MinIndexPositiveCE(cls), cls)
        assert not rep.passed
        h, c = rep.witness
        a = MinIndexPositiveCE(cls).distribution(h, c)
        b = MinIndexPositiveCE(cls).distribution(c, h)
        assert a != b

    def test_inexact_rejected(self):
        class Sampler:
            exact = False

        with pytest.raises(AdversaryNotExact):
            check_symmetric(Sampler(), gen_singletons(3))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_validity_all(self, seed):
        cls = gen_random_class(4, 3, 7, seed)
        for adv in builtins(cls, seed):
            for h, c in itertools.permutations(range(7), 2):
                dist = adv.distribution(h, c)
                if dist.accept:
                    continue
                assert abs(sum(float(p) for _, p in dist.support) - 1) <= 1e-12
                assert all(p > 0 and cls(h, x) != cls(c, x) for x, p in dist.support)


class TestDistribution:
    def test_sample_inverse_cdf(self):
        dist = CEDistribution(((2, 0.25), (5, 0.75)))
        assert dist.sample(0.0) == 2 and dist.sample(0.3) == 5 and dist.sample(0.999) == 5

    def test_accept_cannot_sample(self):
        with pytest.raises(ValueError):
            ACCEPT.sample(0.5)


class TestSpec:
    def test_kinds(self):
        cls = gen_singletons(4)
        tree = shattered_tree(VersionSpace.full(cls)).to_json()
        for spec, kind in [({"kind": "random"}, "random"), ({"kind": "order", "sequence": [3, 2]}, "order"),
                           ({"kind": "dtree", "tree": tree}, "dtree"), ({"kind": "ldim_tree", "tree": tree}, "ldim_tree")]:
            assert adversary_from_spec(spec, cls).kind == kind

    def test_bad_specs(self):
        cls = gen_singletons(4)
        with pytest.raises(ValueError):
            adversary_from_spec({"kind": "nope"}, cls)
        with pytest.raises(ValueError):
            adversary_from_spec({"kind": "dtree"}, cls)
        deep = {"instance": 0, "edges": [{"label": 0, "child": {"instance": 1, "edges": [
            {"label": 0, "child": {"instance": None, "edges": []}},
            {"label": 1, "child": {"instance": None, "edges": []}}]}},
            {"label": 1, "child": {"instance": None, "edges": []}}]}
        with pytest.raises(ValueError):
            adversary_from_spec({"kind": "ldim_tree", "tree": deep}, cls)
