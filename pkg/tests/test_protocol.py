import dataclasses

import numpy as np
import pytest

from eqlab.adversary import DecisionTreeCE, OrderCE, RandomCE, TreeAdversary, random_decision_tree
from eqlab.concepts import gen_cube, gen_linear_functionals, gen_random_class, gen_singletons
from eqlab.learners import LearnerDecision, make_session
from eqlab.protocol import (
    ACCEPTED_EARLY,
    ACCEPTED_EXACT,
    BUDGET_EXHAUSTED,
    Adaptive,
    FixedTarget,
    InconsistentTarget,
    keep_rule,
    run_adaptive_episode,
    run_episode,
    tree_depth_progress,
    uniform_rule,
    validate_transcript,
)


class Stubborn:
    """Always proposes the same hypothesis."""

    def __init__(self, h):
        self.h = h

    def propose(self):
        return LearnerDecision.single(self.h)

    def observe(self, h, x, y):
        pass


def minimax(cls, adv):
    return make_session({"kind": "minimax_full"}, cls, adv)


class TestEpisode:
    def test_target_first(self):
        cls = gen_singletons(5)
        adv = RandomCE(cls)
        tr = run_episode(cls, make_session({"kind": "target_first"}, cls, adv, 3), adv, FixedTarget(3))
        assert tr.queries == 1 and tr.status == ACCEPTED_EXACT

    def test_singletons_constant(self):
        cls = gen_singletons(8)
        adv = RandomCE(cls)
        q = [run_episode(cls, minimax(cls, adv), adv, FixedTarget(s % 8), seed=s).queries for s in range(200)]
        assert np.mean(q) <= 3.5

    def test_tree_lower_bound_regime(self):
        cls = gen_cube(4)
        adv = TreeAdversary(cls)
        leaves = adv.state.leaf_targets()
        q = [run_episode(cls, minimax(cls, adv), adv, FixedTarget(leaves[s % len(leaves)]), seed=s).queries
             for s in range(200)]
        assert np.mean(q) >= 2

    def test_deterministic(self):
        cls = gen_linear_functionals(3, 2)
        adv = RandomCE(cls)
        a = run_episode(cls, minimax(cls, adv), adv, FixedTarget(5), seed=42)
        b = run_episode(cls, minimax(cls, adv), adv, FixedTarget(5), seed=42)
        assert a.records() == b.records()

    def test_budget(self):
        cls = gen_singletons(4)
        adv = OrderCE(cls, [0, 1, 2, 3])
        tr = run_episode(cls, Stubborn(0), adv, FixedTarget(2), budget=5)
        assert tr.status == BUDGET_EXHAUSTED and tr.queries == 5
        assert tr.repeat_rounds == 4
        assert validate_transcript(tr, cls).passed

    def test_bad_inputs(self):
        cls = gen_singletons(4)
        adv = RandomCE(cls)
        with pytest.raises(InconsistentTarget):
            run_episode(cls, Stubborn(0), adv, FixedTarget(9))
        with pytest.raises(ValueError):
            run_episode(cls, Stubborn(0), adv, FixedTarget(1), budget=0)
        with pytest.raises(ValueError):
            run_episode(cls, Stubborn(0), adv, FixedTarget(1), feedback_mode="partial")

    def test_early_acceptance(self):
        cls = gen_singletons(4)
        adv = TreeAdversary(cls)
        groups = {}
        for h in range(4):
            groups.setdefault(adv.state.nodes[h], []).append(h)
        h, c = next(g for g in groups.values() if len(g) > 1)[:2]
        tr = run_episode(cls, Stubborn(h), adv, FixedTarget(c))
        assert tr.status == ACCEPTED_EARLY and validate_transcript(tr, cls).passed

    def test_bandit_hides_labels(self):
        cls = gen_linear_functionals(3, 2)
        adv = RandomCE(cls)
        tr = run_episode(cls, make_session({"kind": "bandit"}, cls, adv), adv, FixedTarget(1), "bandit", seed=3)
        assert all(r.label is None and r.vs_size is None for r in tr.rounds)
        assert validate_transcript(tr, cls).passed

    def test_jsonl(self):
        cls = gen_singletons(4)
        adv = RandomCE(cls)
        tr = run_episode(cls, minimax(cls, adv), adv, FixedTarget(2), seed=1)
        lines = tr.to_jsonl({"trial": 7}).splitlines()
        assert len(lines) == tr.queries and '"trial": 7' in lines[0]


class TestAdaptive:
    def test_keep_equals_fixed(self):
        cls = gen_linear_functionals(3, 2)
        adv = RandomCE(cls)
        a = run_adaptive_episode(cls, minimax(cls, adv), adv, keep_rule, seed=9, initial_target=4)
        b = run_episode(cls, minimax(cls, adv), adv, FixedTarget(4), seed=9)
        strip = lambda tr: [(r.hypothesis, r.target, r.counterexample, r.label) for r in tr.rounds]
        assert strip(a) == strip(b)

    def test_uniform_consistent(self):
        cls = gen_singletons(8)
        adv = RandomCE(cls)
        q = []
        for s in range(300):
            tr = run_episode(cls, minimax(cls, adv), adv, Adaptive(uniform_rule), seed=s)
            assert validate_transcript(tr, cls).passed
            for r in tr.rounds:
                if r.label is not None:
                    assert cls(r.target, r.counterexample) == r.label
            q.append(tr.queries)
        assert np.mean(q) <= 3.5


class TestValidation:
    def episode(self):
        cls = gen_linear_functionals(3, 2)
        adv = RandomCE(cls)
        for s in range(50):
            tr = run_episode(cls, minimax(cls, adv), adv, FixedTarget(1 + s % 7), seed=s)
            if tr.queries >= 3:
                return cls, tr
        raise AssertionError("no long episode")

    def test_flipped_label(self):
        cls, tr = self.episode()
        r = tr.rounds[0]
        tr.rounds[0] = dataclasses.replace(r, label=(r.label + 1) % 3)
        rep = validate_transcript(tr, cls)
        assert not rep.passed and rep.round == 0 and "FAIL" in str(rep)

    def test_not_a_counterexample(self):
        cls, tr = self.episode()
        r = tr.rounds[0]
        agree = next(x for x in range(9) if cls(r.hypothesis, x) == cls(r.target, x))
        tr.rounds[0] = dataclasses.replace(r, counterexample=agree)
        assert validate_transcript(tr, cls).round == 0

    def test_continued_after_accept(self):
        cls, tr = self.episode()
        tr.rounds[0] = dataclasses.replace(tr.rounds[0], accepted=True)
        assert not validate_transcript(tr, cls).passed

    def test_sweep(self):
        rng = np.random.default_rng(0)
        n = 0
        for i in range(50):
            cls = gen_random_class(4, 3, int(rng.integers(2, 10)), i)
            advs = [RandomCE(cls), OrderCE(cls, list(rng.permutation(4))),
                    DecisionTreeCE(cls, random_decision_tree(cls, 3, i)), TreeAdversary(cls)]
            for adv in advs:
                for kind, mode in (("minimax_full", "full"), ("score_det", "full"), ("bandit", "bandit")):
                    for rep in range(2):
                        target = int(rng.integers(cls.num_hypotheses))
                        session = make_session({"kind": kind}, cls, adv)
                        tr = run_episode(cls, session, adv, FixedTarget(target), mode, 500, 1000 * i + rep)
                        assert validate_transcript(tr, cls).passed
                        n += 1
        assert n >= 1000


class TestTreeProgress:
    def test_progress_sums_to_depth(self):
        cls = gen_cube(5)
        adv = TreeAdversary(cls)
        leaves = adv.state.leaf_targets()
        for s in range(30):
            tr = run_episode(cls, minimax(cls, adv), adv, FixedTarget(leaves[s % len(leaves)]), seed=s)
            prog = tree_depth_progress(tr, adv.state)
            assert prog[0][0] == 5
            assert sum(delta for _, delta in prog) == 5
            assert all(1 <= delta <= K for K, delta in prog)
