"""Experiment configs, Monte Carlo sweeps, summary statistics and outputs."""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
import xml.etree.ElementTree as ET
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from . import concepts
from .adversary import TreeAdversary, adversary_from_spec
from .concepts import VersionSpace
from .learners import LEARNER_KINDS, make_session
from .littlestone import ldim
from .protocol import (
    DEFAULT_BUDGET,
    Adaptive,
    FixedTarget,
    episode_streams,
    keep_rule,
    run_episode,
    uniform_rule,
)

CSV_HEADER = ("experiment_id,class,adversary,learner,feedback,d,k,trial,seed,"
              "queries,status,repeat_rounds")
CI_LEVEL = 0.99
MIN_TRIALS_FOR_CI = 30


class ConfigError(ValueError):
    pass


class EmptyTable(ValueError):
    pass


BUILTINS = {
    "singletons": concepts.gen_singletons,
    "linear": concepts.gen_linear_functionals,
    "random": concepts.gen_random_class,
    "cube": concepts.gen_cube,
}

TARGET_POLICIES = ("uniform", "fixed", "tree_leaves", "adaptive_uniform", "adaptive_keep")


@dataclass
class ExperimentConfig:
    experiment_id: str
    class_spec: dict
    adversary: dict
    learner: dict
    feedback: str = "full"
    target_policy: dict = field(default_factory=lambda: {"kind": "uniform"})
    trials: int = 1
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    epsilon: float | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict, base_dir: str = ".") -> "ExperimentConfig":
        try:
            cfg = cls(
                experiment_id=str(data.get("experiment_id", "exp")),
                class_spec=dict(data["class"]),
                adversary=dict(data["adversary"]),
                learner=dict(data["learner"]),
                feedback=data.get("feedback", "full"),
                target_policy=dict(data.get("target_policy", {"kind": "uniform"})),
                trials=int(data.get("trials", 1)),
                seed=int(data.get("seed", 0)),
                budget=int(data.get("budget", DEFAULT_BUDGET)),
                epsilon=data.get("epsilon"),
                workers=int(data.get("workers", 1)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"bad config: {e}") from e
        if "file" in cfg.class_spec and not os.path.isabs(cfg.class_spec["file"]):
            cfg.class_spec["file"] = os.path.join(base_dir, cfg.class_spec["file"])
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return cls.from_dict(data, os.path.dirname(os.path.abspath(path)))

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.feedback not in ("full", "bandit"):
            raise ConfigError(f"feedback must be 'full' or 'bandit', not {self.feedback!r}")
        kind = self.learner.get("kind")
        if kind not in LEARNER_KINDS:
            raise ConfigError(f"unknown learner kind {kind!r}")
        mode = LEARNER_KINDS[kind]
        if mode is not None and mode != self.feedback:
            raise ConfigError(f"learner {kind!r} runs with {mode} feedback, not {self.feedback}")
        if self.target_policy.get("kind") not in TARGET_POLICIES:
            raise ConfigError(f"target_policy kind must be one of {TARGET_POLICIES}")
        if "file" in self.class_spec:
            if not os.path.exists(self.class_spec["file"]):
                raise ConfigError(f"class file {self.class_spec['file']} does not exist")
        elif self.class_spec.get("builtin") not in BUILTINS:
            raise ConfigError(f"class needs 'file' or 'builtin' in {sorted(BUILTINS)}")

    def to_dict(self) -> dict:
        return {
            "experiment_id": self.experiment_id,
            "class": self.class_spec,
            "adversary": self.adversary,
            "learner": self.learner,
            "feedback": self.feedback,
            "target_policy": self.target_policy,
            "trials": self.trials,
            "seed": self.seed,
            "budget": self.budget,
            "epsilon": self.epsilon,
            "workers": self.workers,
        }


def build_class(spec: dict):
    if "file" in spec:
        return concepts.load_class(spec["file"])
    try:
        return BUILTINS[spec["builtin"]](**spec.get("params", {}))
    except (TypeError, concepts.ClassError) as e:
        raise ConfigError(f"cannot build class {spec}: {e}") from e


@dataclass
class ResultRow:
    experiment_id: str
    cls: str
    adversary: str
    learner: str
    feedback: str
    d: int
    k: int
    trial: int
    seed: int
    queries: int
    status: str
    repeat_rounds: int


def trial_seed(master: int, trial: int) -> int:
    """Per-trial episode seed: first word of ``SeedSequence([master, trial])``."""
    return int(np.random.SeedSequence([master, trial]).generate_state(1)[0])


@dataclass
class Experiment:
    """A config resolved into live objects, ready to run trials."""

    config: ExperimentConfig
    cls: object
    adversary: object
    d: int

    @classmethod
    def prepare(cls_, config: ExperimentConfig) -> "Experiment":
        hc = build_class(config.class_spec)
        try:
            adv = adversary_from_spec(config.adversary, hc)
        except ValueError as e:
            raise ConfigError(f"bad adversary: {e}") from e
        fixed = config.target_policy.get("target")
        if config.target_policy["kind"] == "fixed" and (fixed is None or not 0 <= int(fixed) < hc.num_hypotheses):
            raise ConfigError("fixed target policy needs a valid 'target' index")
        return cls_(config, hc, adv, ldim(VersionSpace.full(hc)))

    def _target_policy(self, seed: int):
        policy = self.config.target_policy
        kind = policy["kind"]
        if kind == "adaptive_uniform":
            return Adaptive(uniform_rule)
        if kind == "adaptive_keep":
            return Adaptive(keep_rule)
        target_rng, _ = episode_streams(seed)
        if kind == "fixed":
            return FixedTarget(int(policy["target"]))
        if kind == "uniform":
            pool = list(range(self.cls.num_hypotheses))
        else:
            adv = self.adversary
            state = adv.state if isinstance(adv, TreeAdversary) else TreeAdversary(self.cls).state
            pool = state.leaf_targets()
        return FixedTarget(pool[int(target_rng.integers(len(pool)))])

    def run_trial(self, trial: int, game_sink=None):
        cfg = self.config
        seed = trial_seed(cfg.seed, trial)
        policy = self._target_policy(seed)
        spec = dict(cfg.learner)
        if cfg.epsilon is not None and "epsilon" not in spec:
            spec["epsilon"] = cfg.epsilon
        first = policy.target if isinstance(policy, FixedTarget) else None
        session = make_session(spec, self.cls, self.adversary, first)
        tr = run_episode(self.cls, session, self.adversary, policy, cfg.feedback, cfg.budget, seed, game_sink)
        row = ResultRow(cfg.experiment_id, self.cls.name, self.adversary.kind, spec["kind"], cfg.feedback,
                        self.d, self.cls.num_labels, trial, seed, tr.queries, tr.status, tr.repeat_rounds)
        return row, tr, session


def _worker(args):
    cfg_dict, trials = args
    exp = Experiment.prepare(ExperimentConfig.from_dict(cfg_dict))
    return [exp.run_trial(i)[0] for i in trials]


def run_experiment(config: ExperimentConfig, on_trial=None, game_sink_for=None) -> list[ResultRow]:
    """Run every trial and return rows ordered by trial index.

    ``on_trial(row, transcript, session)`` and ``game_sink_for(trial)`` are
    only honoured in serial mode (``workers == 1``).
    """
    exp = Experiment.prepare(config)
    if config.workers > 1 and on_trial is None and game_sink_for is None:
        chunks = [list(range(w, config.trials, config.workers)) for w in range(config.workers)]
        with ProcessPoolExecutor(config.workers) as pool:
            rows = [r for part in pool.map(_worker, [(config.to_dict(), c) for c in chunks]) for r in part]
        return sorted(rows, key=lambda r: r.trial)
    rows = []
    for i in range(config.trials):
        sink = game_sink_for(i) if game_sink_for else None
        row, tr, session = exp.run_trial(i, sink)
        if on_trial is not None:
            on_trial(row, tr, session)
        rows.append(row)
    return rows


def summarize(rows) -> dict:
    if not rows:
        raise EmptyTable("no rows to summarize")
    z = statistics.NormalDist().inv_cdf(0.5 + CI_LEVEL / 2)
    groups = {}
    for r in rows:
        groups.setdefault(r.experiment_id, []).append(r)
    out = {}
    for eid, rs in groups.items():
        q = [r.queries for r in rs]
        n = len(q)
        mean = statistics.fmean(q)
        std = statistics.stdev(q) if n > 1 else 0.0
        statuses = {}
        for r in rs:
            statuses[r.status] = statuses.get(r.status, 0) + 1
        out[eid] = {
            "n": n,
            "mean": mean,
            "std": std,
            "ci99_half_width": z * std / math.sqrt(n),
            "ci_reliable": n >= MIN_TRIALS_FOR_CI,
            "min": min(q),
            "max": max(q),
            "status_counts": statuses,
            "repeat_rounds": sum(r.repeat_rounds for r in rs),
        }
    return out


def write_csv(rows, path) -> None:
    if not rows:
        raise EmptyTable("refusing to write an empty table")
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        w = csv.writer(f, lineterminator="\n")
        for r in rows:
            w.writerow(astuple(r))


def read_csv(path) -> list[ResultRow]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if ",".join(header) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        types = [f.type for f in fields(ResultRow)]
        out = []
        for rec in reader:
            vals = [int(v) if t == "int" else v for v, t in zip(rec, types)]
            out.append(ResultRow(*vals))
        return out


def ecdf_svg(rows, path, width=480, height=320) -> None:
    """Step plot of the empirical CDF of query counts, one line per experiment."""
    if not rows:
        raise EmptyTable("nothing to plot")
    groups = {}
    for r in rows:
        groups.setdefault(r.experiment_id, []).append(r.queries)
    qmax = max(r.queries for r in rows)
    pad = 40
    sx = (width - 2 * pad) / max(qmax, 1)
    sy = height - 2 * pad
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(width), height=str(height))
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width), height=str(height), fill="white")
    ET.SubElement(svg, "line", x1=str(pad), y1=str(height - pad), x2=str(width - pad), y2=str(height - pad), stroke="black")
    ET.SubElement(svg, "line", x1=str(pad), y1=str(pad), x2=str(pad), y2=str(height - pad), stroke="black")
    label = ET.SubElement(svg, "text", x=str(width // 2), y=str(height - 8), **{"text-anchor": "middle"})
    label.text = f"queries (max {qmax})"
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    for n, (eid, qs) in enumerate(sorted(groups.items())):
        qs = sorted(qs)
        pts = [(pad, height - pad)]
        for i, q in enumerate(qs):
            x = pad + q * sx
            pts.append((x, height - pad - i / len(qs) * sy))
            pts.append((x, height - pad - (i + 1) / len(qs) * sy))
        ET.SubElement(svg, "polyline", fill="none", stroke=colors[n % len(colors)],
                      points=" ".join(f"{x:.1f},{y:.1f}" for x, y in pts))
        t = ET.SubElement(svg, "text", x=str(width - pad), y=str(pad + 14 * n), fill=colors[n % len(colors)],
                          **{"text-anchor": "end"})
        t.text = eid
    ET.ElementTree(svg).write(path, encoding="unicode", xml_declaration=False)


def emit_outputs(rows, stats, csv_path=None, stats_path=None, plot_path=None) -> None:
    if not rows:
        raise EmptyTable("refusing to write outputs for an empty table")
    if csv_path:
        write_csv(rows, csv_path)
    if stats_path:
        with open(stats_path, "w") as f:
            json.dump(stats, f, indent=2, sort_keys=True)
    if plot_path:
        ecdf_svg(rows, plot_path)
