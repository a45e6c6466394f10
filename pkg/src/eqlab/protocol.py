"""Equivalence-query episodes, transcripts and transcript validation.

Randomness: an episode seed feeds ``numpy.random.SeedSequence(seed)``, whose
two spawned children drive (0) target selection and reselection and (1) play.
Each round of play draws exactly one uniform for the learner, then one for the
adversary, whether or not the draw is needed; adaptive episodes draw one
reselection uniform per round from the target stream.  Identical seeds
therefore give identical transcripts, and an adaptive episode whose rule keeps
the target replays the fixed-target episode exactly.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .concepts import HypothesisClass, VersionSpace, replay
from .littlestone import ldim

ACCEPTED_EXACT = "ACCEPTED_EXACT"
ACCEPTED_EARLY = "ACCEPTED_EARLY"
BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"
DEFAULT_BUDGET = 100_000


class InconsistentTarget(ValueError):
    pass


class EmptyConsistentSet(RuntimeError):
    pass


@dataclass
class RoundRecord:
    round: int
    hypothesis: int
    target: int
    accepted: bool
    counterexample: int | None = None
    label: int | None = None
    vs_size: int | None = None
    ldim: int | None = None
    certificate: float | None = None
    repeat: bool = False


@dataclass
class Transcript:
    feedback: str
    adaptive: bool = False
    rounds: list = field(default_factory=list)
    status: str = BUDGET_EXHAUSTED

    @property
    def queries(self) -> int:
        return len(self.rounds)

    @property
    def repeat_rounds(self) -> int:
        return sum(r.repeat for r in self.rounds)

    def records(self) -> list[dict]:
        return [asdict(r) for r in self.rounds]

    def to_jsonl(self, extra: dict | None = None) -> str:
        lines = []
        for rec in self.records():
            if extra:
                rec = {**extra, **rec}
            lines.append(json.dumps(rec))
        return "\n".join(lines)


@dataclass(frozen=True)
class FixedTarget:
    target: int


@dataclass(frozen=True)
class Adaptive:
    """``rule(consistent, current, u) -> next target`` with ``consistent`` the
    sorted list of hypotheses agreeing with every revealed label.  Without an
    ``initial`` target the first one is drawn uniformly from the class."""

    rule: object
    initial: int | None = None


def keep_rule(consistent, current, u):
    return current


def uniform_rule(consistent, current, u):
    return consistent[min(int(u * len(consistent)), len(consistent) - 1)]


def episode_streams(seed: int):
    target_ss, play_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(target_ss), np.random.default_rng(play_ss)


def run_episode(cls: HypothesisClass, learner, adversary, target_policy, feedback_mode: str = "full",
                budget: int = DEFAULT_BUDGET, seed: int = 0, game_sink=None) -> Transcript:
    """Play one episode.

    ``learner`` is a session object (see ``learners.make_session``);
    ``target_policy`` is ``FixedTarget`` or ``Adaptive``.  ``game_sink``, if
    given, receives ``(round, PayoffMatrix)`` for every solved game.
    """
    if feedback_mode not in ("full", "bandit"):
        raise ValueError(f"unknown feedback mode {feedback_mode!r}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    target_rng, rng = episode_streams(seed)
    adaptive = isinstance(target_policy, Adaptive)
    if adaptive:
        c = target_policy.initial
        if c is None:
            c = uniform_rule(list(range(cls.num_hypotheses)), None, target_rng.random())
    else:
        c = target_policy.target
    if not 0 <= c < cls.num_hypotheses:
        raise InconsistentTarget(f"target {c} is not a hypothesis of the class")

    transcript = Transcript(feedback_mode, adaptive)
    revealed = []  # (x, c_t(x)) pairs; defines H_{t+1}
    seen = set()
    history = []
    for t in range(budget):
        u_learner = rng.random()
        u_adv = rng.random()
        u_target = target_rng.random() if adaptive else None
        decision = learner.propose()
        h = decision.sample(u_learner)
        if game_sink is not None and decision.game is not None:
            game_sink(t, decision.game)
        dist = adversary.distribution(h, c, tuple(history))
        history.append(h)
        rec = RoundRecord(t, int(h), int(c), dist.accept, certificate=decision.certificate)
        transcript.rounds.append(rec)
        if dist.accept:
            transcript.status = ACCEPTED_EXACT if h == c else ACCEPTED_EARLY
            return transcript
        x = dist.sample(u_adv)
        y = cls(c, x)
        rec.counterexample = int(x)
        rec.repeat = x in seen
        seen.add(x)
        revealed.append((x, y))
        if feedback_mode == "full":
            rec.label = y
            learner.observe(h, x, y)
            V = replay(cls, revealed)
            rec.vs_size = len(V)
            rec.ldim = ldim(V)
        else:
            learner.observe(h, x, None)
        if adaptive:
            consistent = VersionSpace(cls, cls.consistent_mask(revealed)).members
            if not consistent:
                raise EmptyConsistentSet("no hypothesis agrees with the revealed labels")
            c = target_policy.rule(consistent, c, u_target)
            if cls.consistent_mask(revealed) >> c & 1 == 0:
                raise InconsistentTarget(f"reselected target {c} contradicts revealed labels")
    transcript.status = BUDGET_EXHAUSTED
    return transcript


def run_adaptive_episode(cls, learner, adversary, reselection_rule, feedback_mode="full",
                         budget=DEFAULT_BUDGET, seed=0, initial_target=None, game_sink=None) -> Transcript:
    return run_episode(cls, learner, adversary, Adaptive(reselection_rule, initial_target),
                       feedback_mode, budget, seed, game_sink)


@dataclass
class ValidationReport:
    passed: bool
    round: int | None = None
    reason: str = ""

    def __str__(self):
        return "PASS" if self.passed else f"FAIL at round {self.round}: {self.reason}"


def validate_transcript(transcript: Transcript, cls: HypothesisClass) -> ValidationReport:
    def fail(t, why):
        return ValidationReport(False, t, why)

    revealed = []
    prev_ldim = ldim(VersionSpace.full(cls))
    first_target = transcript.rounds[0].target if transcript.rounds else None
    for i, r in enumerate(transcript.rounds):
        if r.round != i:
            return fail(i, f"round index {r.round} out of sequence")
        h, c = r.hypothesis, r.target
        if not transcript.adaptive and c != first_target:
            return fail(i, "target changed in a fixed-target episode")
        if not cls.consistent_mask(revealed) >> c & 1:
            return fail(i, f"target {c} contradicts revealed labels")
        if transcript.feedback == "full":
            V = replay(cls, revealed)
            if c not in V:
                return fail(i, "target left the version space")
        if h == c and not r.accepted:
            return fail(i, "hypothesis equals target but was rejected")
        last = i == len(transcript.rounds) - 1
        if r.accepted:
            if not last:
                return fail(i, "interaction continued after acceptance")
            want = ACCEPTED_EXACT if h == c else ACCEPTED_EARLY
            if transcript.status != want:
                return fail(i, f"status {transcript.status} but expected {want}")
            continue
        x = r.counterexample
        if x is None or not 0 <= x < cls.domain_size:
            return fail(i, "missing counterexample")
        if cls(h, x) == cls(c, x):
            return fail(i, f"instance {x} is not a counterexample")
        y = cls(c, x)
        if transcript.feedback == "full":
            if r.label != y:
                return fail(i, f"revealed label {r.label} but target says {y}")
            revealed.append((x, y))
            V = replay(cls, revealed)
            if r.vs_size != len(V) or r.ldim != ldim(V):
                return fail(i, "recorded version space does not match replay")
            if r.ldim > prev_ldim:
                return fail(i, "Ldim increased")
            prev_ldim = r.ldim
        else:
            if r.label is not None:
                return fail(i, "bandit round revealed a label")
            revealed.append((x, y))
    if transcript.rounds and not transcript.rounds[-1].accepted and transcript.status != BUDGET_EXHAUSTED:
        return fail(len(transcript.rounds) - 1, "unfinished episode not marked BUDGET_EXHAUSTED")
    return ValidationReport(True)


def tree_depth_progress(transcript: Transcript, state) -> list[tuple[int, int]]:
    """``(K_t, Delta_t)`` for every round of a fixed-target tree-adversary episode.

    ``K_t`` is the depth of the subtree hanging below the deepest tree node on
    the target's path whose instance has been returned so far.
    """
    tree = state.tree
    d = tree.depth
    c = transcript.rounds[0].target
    # instance -> depth along the target's path
    depth_of = {}
    node = tree
    for depth, i in enumerate(state.nodes[c]):
        depth_of[node.instance] = depth
        node = node.edges[i][1]
    K = d
    out = []
    for r in transcript.rounds:
        if K == 0:
            break
        if r.accepted:
            new = 0
        else:
            new = min(K, d - depth_of[r.counterexample] - 1)
        out.append((K, K - new))
        K = new
    return out
