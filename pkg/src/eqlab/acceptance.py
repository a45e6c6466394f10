"""Executable exit criteria.

Each ``criterion_*`` function runs one check at its pinned tolerance and
returns a ``CriterionResult``.  Experiments shared between criteria are run
once per process and cached.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .adversary import (
    DecisionTreeCE,
    MinIndexPositiveCE,
    OrderCE,
    RandomCE,
    TreeAdversary,
    check_symmetric,
    iid_order_distribution,
    random_ce_distribution,
    random_decision_tree,
)
from .bandit import RoundTables, bandit_init, bandit_update_with_stats
from .concepts import (
    VersionSpace,
    gen_cube,
    gen_linear_functionals,
    gen_random_class,
    gen_singletons,
)
from .harness import ExperimentConfig, run_experiment
from .learners import make_session
from .littlestone import ldim, ldim_bruteforce
from .minimax import best_response_value, fullinfo_payoff_matrix
from .protocol import FixedTarget, run_episode, tree_depth_progress, validate_transcript


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number:2d} {self.name}: {self.detail}"


_RUNS = {}


def _config(eid, class_spec, adversary, learner, feedback, policy, trials, seed=2024, budget=100_000):
    return ExperimentConfig.from_dict({
        "experiment_id": eid,
        "class": class_spec,
        "adversary": adversary,
        "learner": learner,
        "feedback": feedback,
        "target_policy": policy,
        "trials": trials,
        "seed": seed,
        "budget": budget,
    })


@dataclass
class RunRecord:
    rows: list
    transcripts: list
    sessions: list
    games: list
    seconds: float

    @property
    def mean(self) -> float:
        return float(np.mean([r.queries for r in self.rows]))


def _run(config: ExperimentConfig, keep_games=False, keep_sessions=False) -> RunRecord:
    key = (repr(config.to_dict()), keep_games, keep_sessions)
    if key in _RUNS:
        return _RUNS[key]
    transcripts, sessions, games = [], [], []

    def on_trial(row, tr, session):
        transcripts.append(tr)
        if keep_sessions:
            sessions.append(session)

    sink = (lambda i: lambda t, g: games.append(g)) if keep_games else None
    t0 = time.perf_counter()
    rows = run_experiment(config, on_trial, sink)
    rec = RunRecord(rows, transcripts, sessions, games, time.perf_counter() - t0)
    _RUNS[key] = rec
    return rec


UNIFORM = {"kind": "uniform"}
SINGLETONS16 = {"builtin": "singletons", "params": {"n": 16}}
LINEAR32 = {"builtin": "linear", "params": {"p": 3, "d": 2}}
CUBE6 = {"builtin": "cube", "params": {"n": 6}}


def fullinfo_run(class_spec, learner_kind, trials):
    cfg = _config(f"fullinfo-{class_spec['builtin']}-{learner_kind}", class_spec, {"kind": "random"},
                  {"kind": learner_kind}, "full", UNIFORM, trials)
    return _run(cfg, keep_games=learner_kind == "minimax_full")


def tree_lb_run(learner_kind, trials):
    cfg = _config(f"tree-lb-{learner_kind}", CUBE6, {"kind": "ldim_tree"}, {"kind": learner_kind},
                  "full", {"kind": "tree_leaves"}, trials)
    return _run(cfg)


def bandit_run(trials):
    cfg = _config("bandit-linear", LINEAR32, {"kind": "random"}, {"kind": "bandit"}, "bandit", UNIFORM, trials)
    return _run(cfg, keep_sessions=True)


def fullinfo_twin_run(trials):
    cfg = _config("fullinfo-linear", LINEAR32, {"kind": "random"}, {"kind": "minimax_full"}, "full", UNIFORM, trials)
    return _run(cfg)


# -- criteria ---------------------------------------------------------------


def criterion_1(count=200):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad = []
    for i in range(count):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(2, 4))
        m = int(rng.integers(1, min(10, k ** n) + 1))
        V = VersionSpace.full(gen_random_class(n, k, m, seed=10_000 + i))
        if ldim(V) != ldim_bruteforce(V):
            bad.append(i)
    secs = time.perf_counter() - t0
    ok = not bad and secs < 60
    return CriterionResult(1, "Ldim oracle equivalence", ok,
                           f"{count} classes, {len(bad)} mismatches, {secs:.1f}s (limit 60s)")


def named_dimensions() -> dict:
    """``name -> (computed Ldim, expected Ldim)`` for the named classes."""
    got = {}
    for n in range(2, 11):
        got[f"singletons({n})"] = (ldim(VersionSpace.full(gen_singletons(n))), 1)
    for p, d in [(2, 1), (2, 2), (3, 1), (3, 2)]:
        got[f"linear({p},{d})"] = (ldim(VersionSpace.full(gen_linear_functionals(p, d))), d)
    return got


def criterion_2():
    wrong = {k: v for k, v in named_dimensions().items() if v[0] != v[1]}
    return CriterionResult(2, "named dimensions", not wrong,
                           "all match" if not wrong else f"(computed, expected) mismatches {wrong}")


def criterion_3(trials=2000):
    worst = -math.inf
    games = 0
    for spec in (SINGLETONS16, LINEAR32):
        run = fullinfo_run(spec, "minimax_full", trials)
        for tr in run.transcripts:
            for r in tr.rounds:
                if r.certificate is not None:
                    worst = max(worst, r.certificate)
        games += len(run.games)
    ok = worst <= 0.5 + 1e-6
    return CriterionResult(3, "game value <= 1/2", ok,
                           f"{games} games, max certificate {worst:.9f} (limit 0.5 + 1e-6)")


def _random_adversary(kind, cls, rng):
    if kind == "random":
        return RandomCE(cls, list(rng.random(cls.domain_size) + 0.05))
    if kind == "order":
        seq = list(rng.permutation(cls.domain_size))
        return OrderCE(cls, seq[: int(rng.integers(1, cls.domain_size + 1))])
    if kind == "dtree":
        return DecisionTreeCE(cls, random_decision_tree(cls, 3, int(rng.integers(1 << 30))))
    return TreeAdversary(cls)


def criterion_4(pairs=50):
    rng = np.random.default_rng(4)
    kinds = ["random", "order", "dtree", "ldim_tree"]
    worst_sum = -math.inf
    worst_diag = 0.0
    matrices = 0
    for i in range(pairs):
        n = int(rng.integers(3, 6))
        k = int(rng.integers(2, 4))
        m = int(rng.integers(2, min(12, k ** n) + 1))
        cls = gen_random_class(n, k, m, seed=40_000 + i)
        adv = _random_adversary(kinds[i % 4], cls, rng)
        spaces = [VersionSpace.full(cls)]
        x = int(rng.integers(n))
        y = cls(int(rng.integers(m)), x)
        sub = VersionSpace(cls, cls.masks[x][y] & cls.full_mask, ((x, y),))
        if len(sub) > 1:
            spaces.append(sub)
        for V in spaces:
            M = fullinfo_payoff_matrix(V, adv).values
            matrices += 1
            worst_sum = max(worst_sum, float((M + M.T).max()))
            worst_diag = max(worst_diag, float(np.abs(np.diag(M)).max()))
    ok = worst_sum <= 1 + 1e-12 and worst_diag == 0.0
    return CriterionResult(4, "symmetry inequality sweep", ok,
                           f"{matrices} matrices, max pair sum {worst_sum:.12f}, max |diag| {worst_diag}")


def criterion_5(trials=2000):
    t0 = time.perf_counter()
    res = []
    ok = True
    for spec, bound in ((SINGLETONS16, 3.5), (LINEAR32, 5.5)):
        run = fullinfo_run(spec, "minimax_full", trials)
        ok &= run.mean <= bound and all(r.status == "ACCEPTED_EXACT" for r in run.rows)
        res.append(f"{run.rows[0].cls} mean {run.mean:.3f} (<= {bound})")
    secs = time.perf_counter() - t0
    total = sum(fullinfo_run(s, "minimax_full", trials).seconds for s in (SINGLETONS16, LINEAR32))
    ok &= total < 300
    return CriterionResult(5, "full-information upper bound (minimax)", ok,
                           "; ".join(res) + f"; {total:.0f}s (limit 300s)")


def criterion_6(trials=2000):
    res = []
    ok = True
    worst = 0.0
    for spec, bound in ((SINGLETONS16, 3.5), (LINEAR32, 5.5)):
        run = fullinfo_run(spec, "score_det", trials)
        ok &= run.mean <= bound
        for tr in run.transcripts:
            worst = max([worst] + [r.certificate for r in tr.rounds])
        res.append(f"{run.rows[0].cls} mean {run.mean:.3f} (<= {bound})")
    ok &= worst <= 0.5 + 1e-12
    return CriterionResult(6, "deterministic score learner", ok,
                           "; ".join(res) + f"; max conditional retention {worst:.12f} (<= 1/2)")


def criterion_7(trials=2000):
    ok = True
    res = []
    tail_excess = -math.inf
    for kind in ("minimax_full", "score_det"):
        run = tree_lb_run(kind, trials)
        ok &= run.mean >= 2.7
        res.append(f"{kind} mean {run.mean:.3f} (>= 2.7)")
        adv = TreeAdversary(gen_cube(6))
        counts = {}
        for tr in run.transcripts:
            for K, delta in tree_depth_progress(tr, adv.state):
                c = counts.setdefault(K, [0] * (K + 1))
                for i in range(1, delta + 1):
                    c[i] += 1
                c[0] += 1
        for K, c in counts.items():
            for i in range(1, K + 1):
                tail_excess = max(tail_excess, c[i] / c[0] - 2.0 ** -(i - 1))
    ok &= tail_excess <= 0.05
    return CriterionResult(7, "tree-adversary lower bound", ok,
                           "; ".join(res) + f"; max tail excess over 2^-(i-1): {tail_excess:.4f} (<= 0.05)")


def _recorded_bandit_states(cls, episodes, max_t, seed):
    """Bandit states at rounds ``0..max_t`` of episodes against uniform random CE."""
    adv = RandomCE(cls)
    states = []
    for e in range(episodes):
        target = e % cls.num_hypotheses
        session = make_session({"kind": "bandit"}, cls, adv)
        tr = run_episode(cls, session, adv, FixedTarget(target), "bandit", 1000, seed + e)
        state = bandit_init(cls)
        states.append((0, state, tr))
        for t, r in enumerate(tr.rounds[:max_t]):
            if r.accepted:
                break
            state = bandit_update_with_stats(state, r.counterexample, cls(r.hypothesis, r.counterexample))[0]
            states.append((t + 1, state, tr))
    return states


def _pointwise_classes():
    yield gen_linear_functionals(3, 1)
    yield gen_random_class(4, 3, 8, seed=8)


def criterion_8(episodes=20):
    worst = -math.inf
    checked = 0
    bound = None
    for cls in _pointwise_classes():
        k = cls.num_labels
        bound = -1 / (6 * k)
        for t, state, _ in _recorded_bandit_states(cls, episodes, 2, seed=800):
            tables = RoundTables(state)
            alive = state.alive()
            for h in alive:
                for c in alive:
                    if h >= c:
                        continue
                    for x in range(cls.domain_size):
                        if x in state.xs or cls(h, x) == cls(c, x):
                            continue
                        s = tables.pointwise_payoff(h, c, x) + tables.pointwise_payoff(c, h, x)
                        worst = max(worst, s - bound)
                        checked += 1
    ok = worst <= 1e-9
    return CriterionResult(8, "bandit pointwise pair bound", ok,
                           f"{checked} (h, c, x) triples at t in {{0,1,2}}; "
                           f"max excess over -1/(6k): {worst:.3e} (<= 1e-9)")


def criterion_9(trials=300):
    worst = -math.inf
    rounds = 0
    transcripts = list(bandit_run(trials).transcripts)
    for cls in _pointwise_classes():
        transcripts += [tr for _, _, tr in _recorded_bandit_states(cls, 20, 0, seed=800)]
    k = 3
    for tr in transcripts:
        for r in tr.rounds:
            worst = max(worst, r.certificate + 1 / (12 * k))
            rounds += 1
    ok = worst <= 1e-6
    return CriterionResult(9, "bandit per-round certificate", ok,
                           f"{rounds} rounds; max certificate + 1/(12k) = {worst:.4f} (<= 1e-6)")


def criterion_10(trials=300):
    run = bandit_run(trials)
    d, k = 2, 3
    bound = 120 * d * k * math.log(k)
    within = all(r.status == "ACCEPTED_EXACT" for r in run.rows)
    repeats = sum(r.repeat_rounds for r in run.rows) / max(1, sum(r.queries for r in run.rows))
    ok = run.mean <= bound and within and run.seconds < 1800
    return CriterionResult(10, "bandit upper bound", ok,
                           f"mean {run.mean:.3f} (<= {bound:.1f}), all accepted within budget: {within}, "
                           f"repeat-round fraction {repeats:.3f}, {run.seconds:.0f}s (limit 1800s)")


def criterion_11(trials=300):
    run = bandit_run(trials)
    twin = fullinfo_twin_run(trials)
    d, p = 2, 3
    floor = d * p * math.log2(p) / 6
    ratio = run.mean / twin.mean
    return CriterionResult(11, "bandit lower-bound floor", run.mean >= floor,
                           f"bandit mean {run.mean:.3f} (>= {floor:.3f}); "
                           f"bandit/full-info ratio {ratio:.3f} (observational)")


def criterion_12(trials=300):
    run = bandit_run(trials)
    cls = gen_linear_functionals(3, 2)
    worst_nu = -math.inf
    worst_sum = 0.0
    zero_branch = 0.0
    min_true = math.inf
    updates = 0
    for tr in run.transcripts:
        state = bandit_init(cls)
        c = tr.rounds[0].target
        for r in tr.rounds:
            if r.accepted:
                break
            i = cls(r.hypothesis, r.counterexample)
            state, stats = bandit_update_with_stats(state, r.counterexample, i)
            updates += 1
            worst_nu = max(worst_nu, stats.nu_total)
            zero_branch = max(zero_branch, sum(w for s, w in state.masses.items() if s[-1] == i))
            worst_sum = max(worst_sum, abs(state.total() - 1))
            min_true = min(min_true, state.mass_of(c))
    ok = worst_nu <= 1 + 1e-12 and zero_branch == 0 and worst_sum <= 1e-10 and min_true > 0
    return CriterionResult(12, "update-rule conservation", ok,
                           f"{updates} updates; max sum nu {worst_nu:.12f}; j=i mass {zero_branch}; "
                           f"max |sum mu - 1| {worst_sum:.2e}; min true mass {min_true:.3e}")


def criterion_13():
    lines = []
    ok = True
    for cls in (gen_singletons(6), gen_linear_functionals(3, 1)):
        rng = np.random.default_rng(13)
        advs = [
            RandomCE(cls, list(rng.random(cls.domain_size) + 0.1)),
            OrderCE(cls, list(rng.permutation(cls.domain_size))),
            DecisionTreeCE(cls, random_decision_tree(cls, 3, 13)),
            TreeAdversary(cls),
        ]
        for adv in advs:
            rep = check_symmetric(adv, cls)
            ok &= rep.passed
            lines.append(f"{adv.kind}@{cls.name}:{rep}")
    s3 = gen_singletons(3)
    rep = check_symmetric(MinIndexPositiveCE(s3), s3)
    ok &= not rep.passed and rep.witness is not None
    lines.append(f"min_positive@{s3.name}: {'FAIL' if not rep.passed else 'PASS'} witness {rep.witness}")
    return CriterionResult(13, "symmetry verifier", ok, "; ".join(lines))


def criterion_14(trials=2000):
    cfg = _config("adaptive-reselection", {"builtin": "singletons", "params": {"n": 8}}, {"kind": "random"},
                  {"kind": "minimax_full"}, "full", {"kind": "adaptive_uniform"}, trials)
    run = _run(cfg)
    cls = gen_singletons(8)
    bad = [i for i, tr in enumerate(run.transcripts) if not validate_transcript(tr, cls).passed]
    ok = not bad and run.mean <= 3.5
    return CriterionResult(14, "adaptive reselection", ok,
                           f"mean {run.mean:.3f} (<= 3.5), {len(bad)} invalid transcripts")


def criterion_15():
    cls = gen_singletons(5)
    rng = np.random.default_rng(15)
    mu = [Fraction(int(w), 97) for w in rng.integers(1, 50, size=5)]
    total = sum(mu)
    mu = [w / total for w in mu]
    bad = []
    for h in range(5):
        for c in range(5):
            if h != c and iid_order_distribution(mu, cls, h, c) != random_ce_distribution(mu, cls, h, c):
                bad.append((h, c))
    return CriterionResult(15, "i.i.d. order-induced equals random CE", not bad,
                           f"20 ordered pairs, exact rational comparison, {len(bad)} mismatches")


ALL = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13, 14: criterion_14, 15: criterion_15,
}
