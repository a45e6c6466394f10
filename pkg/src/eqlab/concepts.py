"""Finite hypothesis classes, version spaces and disagreement sets.

A class is a materialized label matrix: row ``h`` column ``x`` holds ``h(x)``.
Member sets of version spaces are stored as integer bitmasks over row
indices, which keeps restriction a single ``&`` and makes member sets
hashable for the Littlestone-dimension cache.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np


class ClassError(ValueError):
    pass


class DuplicateHypothesis(ClassError):
    pass


class LabelOutOfRange(ClassError):
    pass


class EmptyClass(ClassError):
    pass


@dataclass(frozen=True, eq=False)
class HypothesisClass:
    labels: np.ndarray
    num_labels: int
    name: str = "custom"
    # masks[x][y] = bitmask of rows h with h(x) == y
    masks: tuple = field(init=False, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2 or labels.shape[0] == 0 or labels.shape[1] == 0:
            raise EmptyClass("label matrix must be a non-empty m x n array")
        if not np.issubdtype(labels.dtype, np.integer):
            raise ClassError("labels must be integers")
        if self.num_labels < 2:
            raise ClassError("need at least two labels")
        if labels.min() < 0 or labels.max() >= self.num_labels:
            raise LabelOutOfRange(f"labels must lie in 0..{self.num_labels - 1}")
        seen = {}
        for h, row in enumerate(labels):
            key = row.tobytes()
            if key in seen:
                raise DuplicateHypothesis(f"rows {seen[key]} and {h} are identical")
            seen[key] = h
        labels = labels.astype(np.int64)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        masks = []
        for x in range(labels.shape[1]):
            col = labels[:, x]
            masks.append(tuple(
                sum(1 << int(h) for h in np.flatnonzero(col == y))
                for y in range(self.num_labels)
            ))
        object.__setattr__(self, "masks", tuple(masks))

    @property
    def num_hypotheses(self) -> int:
        return self.labels.shape[0]

    @property
    def domain_size(self) -> int:
        return self.labels.shape[1]

    @property
    def full_mask(self) -> int:
        return (1 << self.num_hypotheses) - 1

    def __call__(self, h: int, x: int) -> int:
        return int(self.labels[h, x])

    def row(self, h: int) -> tuple:
        return tuple(int(v) for v in self.labels[h])

    def consistent_mask(self, constraints) -> int:
        mask = self.full_mask
        for x, y in constraints:
            mask &= self.masks[x][y]
        return mask

    def to_json(self) -> dict:
        return {
            "domain_size": self.domain_size,
            "num_labels": self.num_labels,
            "hypotheses": self.labels.tolist(),
        }


def members(mask: int) -> list[int]:
    out = []
    h = 0
    while mask:
        if mask & 1:
            out.append(h)
        mask >>= 1
        h += 1
    return out


def build_class(label_matrix, k: int, name: str = "custom") -> HypothesisClass:
    rows = [list(r) for r in label_matrix]
    if not rows or not rows[0]:
        raise EmptyClass("empty label matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ClassError("label matrix is not rectangular")
    return HypothesisClass(np.array(rows, dtype=np.int64), k, name)


def load_class(path) -> HypothesisClass:
    with open(path) as f:
        data = json.load(f)
    cls = build_class(data["hypotheses"], int(data["num_labels"]), name=str(path))
    if cls.domain_size != int(data["domain_size"]):
        raise ClassError(
            f"domain_size {data['domain_size']} does not match rows of width {cls.domain_size}"
        )
    return cls


def save_class(cls: HypothesisClass, path) -> None:
    with open(path, "w") as f:
        json.dump(cls.to_json(), f)


def gen_singletons(n: int) -> HypothesisClass:
    if n < 2:
        raise ClassError("singletons need n >= 2")
    return HypothesisClass(np.eye(n, dtype=np.int64), 2, f"singletons({n})")


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % q for q in range(2, int(p ** 0.5) + 1))


def field_points(p: int, d: int) -> list[tuple]:
    """F_p^d in lexicographic order of coordinate tuples."""
    return list(itertools.product(range(p), repeat=d))


def gen_linear_functionals(p: int, d: int) -> HypothesisClass:
    """All nonzero functionals ``x -> <w, x> mod p`` on F_p^d."""
    if not _is_prime(p):
        raise ClassError(f"{p} is not prime")
    if d < 1:
        raise ClassError("d must be >= 1")
    pts = np.array(field_points(p, d), dtype=np.int64)
    ws = pts[1:]  # drop w = 0
    return HypothesisClass((ws @ pts.T) % p, p, f"linear({p},{d})")


def gen_cube(n: int) -> HypothesisClass:
    """Every binary labeling of ``n`` points; Ldim is ``n``."""
    return HypothesisClass(np.array(field_points(2, n), dtype=np.int64), 2, f"cube({n})")


def gen_random_class(n: int, k: int, m: int, seed: int) -> HypothesisClass:
    total = k ** n
    if m > total:
        raise ClassError(f"cannot draw {m} distinct rows from {total}")
    if m < 1:
        raise EmptyClass("m must be >= 1")
    rng = np.random.default_rng(seed)
    codes = np.sort(rng.choice(total, size=m, replace=False))
    rows = [[(int(c) // k ** (n - 1 - j)) % k for j in range(n)] for c in codes]
    return HypothesisClass(np.array(rows, dtype=np.int64), k, f"random({n},{k},{m},{seed})")


@dataclass(frozen=True)
class VersionSpace:
    cls: HypothesisClass
    mask: int
    constraints: tuple = ()

    @classmethod
    def full(cls_, hc: HypothesisClass) -> "VersionSpace":
        return cls_(hc, hc.full_mask, ())

    @property
    def members(self) -> list[int]:
        return members(self.mask)

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, h: int) -> bool:
        return bool(self.mask >> h & 1)


def restrict(V: VersionSpace, x: int, y: int) -> VersionSpace:
    if not 0 <= x < V.cls.domain_size or not 0 <= y < V.cls.num_labels:
        raise IndexError(f"instance {x} or label {y} out of range")
    return VersionSpace(V.cls, V.mask & V.cls.masks[x][y], V.constraints + ((x, y),))


def replay(cls: HypothesisClass, constraints) -> VersionSpace:
    return VersionSpace(cls, cls.consistent_mask(constraints), tuple(constraints))


def disagreement_set(cls: HypothesisClass, h: int, c: int) -> frozenset:
    return frozenset(int(x) for x in np.flatnonzero(cls.labels[h] != cls.labels[c]))
