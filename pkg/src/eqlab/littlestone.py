"""Littlestone dimension, SOA predictions and shattered mistake trees."""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass

from .concepts import HypothesisClass, VersionSpace, members


class EmptyVersionSpace(ValueError):
    pass


class GuardExceeded(ValueError):
    pass


@dataclass(frozen=True)
class MistakeTree:
    """A node; leaves have ``instance is None`` and no edges."""

    instance: int | None = None
    edges: tuple = ()  # ((label, MistakeTree), ...)

    @property
    def is_leaf(self) -> bool:
        return not self.edges

    @property
    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(child.depth for _, child in self.edges)

    def child(self, label: int):
        for y, sub in self.edges:
            if y == label:
                return sub
        return None

    def paths(self):
        """Yield every root-to-leaf path as a tuple of (instance, label)."""
        if self.is_leaf:
            yield ()
            return
        for y, sub in self.edges:
            for rest in sub.paths():
                yield ((self.instance, y),) + rest

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "edges": [{"label": y, "child": sub.to_json()} for y, sub in self.edges],
        }

    @classmethod
    def from_json(cls, data) -> "MistakeTree":
        if not data.get("edges"):
            return cls()
        edges = tuple((int(e["label"]), cls.from_json(e["child"])) for e in data["edges"])
        labels = [y for y, _ in edges]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate edge labels at instance {data['instance']}")
        return cls(int(data["instance"]), edges)


# Per-class memo: canonical member bitmask -> Ldim. Cached values depend only on
# the mask, so any interleaving of queries gives the same answers.
_CACHE: "weakref.WeakKeyDictionary[HypothesisClass, dict]" = weakref.WeakKeyDictionary()


def _cache(cls: HypothesisClass) -> dict:
    memo = _CACHE.get(cls)
    if memo is None:
        memo = _CACHE[cls] = {}
    return memo


def clear_cache() -> None:
    _CACHE.clear()


def ldim_mask(cls: HypothesisClass, mask: int) -> int:
    memo = _cache(cls)
    found = memo.get(mask)
    if found is not None:
        return found
    size = mask.bit_count()
    if size == 0:
        return -1
    if size == 1:
        return 0
    bound = size.bit_length() - 1  # floor(log2 |V|)
    best = 0
    for x in range(cls.domain_size):
        parts = [mask & m for m in cls.masks[x]]
        parts = [p for p in parts if p]
        if len(parts) < 2:
            continue
        # cheap bound before recursing: the second-largest part caps the depth
        sizes = sorted((p.bit_count() for p in parts), reverse=True)
        if sizes[1].bit_length() - 1 + 1 <= best:
            continue
        dims = sorted((ldim_mask(cls, p) for p in parts), reverse=True)
        best = max(best, 1 + dims[1])
        if best == bound:
            break
    memo[mask] = best
    return best


def ldim(V: VersionSpace) -> int:
    return ldim_mask(V.cls, V.mask)


def soa_label_mask(cls: HypothesisClass, mask: int, x: int):
    if not mask:
        raise EmptyVersionSpace("SOA needs a nonempty version space")
    d = ldim_mask(cls, mask)
    for y, m in enumerate(cls.masks[x]):
        if mask & m and ldim_mask(cls, mask & m) == d:
            return y
    return None


def soa_label(V: VersionSpace, x: int):
    """The unique label keeping full dimension at ``x``, or ``None``."""
    return soa_label_mask(V.cls, V.mask, x)


def _tree(cls: HypothesisClass, mask: int, depth: int) -> MistakeTree:
    if depth == 0:
        return MistakeTree()
    for x in range(cls.domain_size):
        parts = [mask & m for m in cls.masks[x]]
        for y1, y2 in itertools.combinations(range(cls.num_labels), 2):
            a, b = parts[y1], parts[y2]
            if a and b and min(ldim_mask(cls, a), ldim_mask(cls, b)) >= depth - 1:
                return MistakeTree(x, ((y1, _tree(cls, a, depth - 1)),
                                       (y2, _tree(cls, b, depth - 1))))
    raise AssertionError("no split found; Ldim cache is inconsistent")


def shattered_tree(V: VersionSpace) -> MistakeTree:
    if not V.mask:
        raise EmptyVersionSpace("cannot build a tree for an empty version space")
    return _tree(V.cls, V.mask, ldim(V))


def verify_shattered(tree: MistakeTree, V: VersionSpace) -> bool:
    cls = V.cls
    for path in tree.paths():
        if not cls.consistent_mask(path) & V.mask:
            return False
    return True


def ldim_bruteforce(V: VersionSpace, max_domain: int = 6, max_size: int = 16) -> int:
    """Largest depth of an explicitly enumerated tree passing ``verify_shattered``.

    Trees are grown node by node, keeping only partial paths that some member
    still realizes; every complete candidate is then checked path by path.
    Nothing here touches the memoized recursion.
    """
    cls = V.cls
    hs = members(V.mask)
    if cls.domain_size > max_domain or len(hs) > max_size:
        raise GuardExceeded(f"oracle limited to |X| <= {max_domain}, |V| <= {max_size}")
    if not hs:
        return -1
    rows = [cls.row(h) for h in hs]

    def realized(path):
        return any(all(r[x] == y for x, y in path) for r in rows)

    def trees(path, depth):
        if depth == 0:
            yield MistakeTree()
            return
        for x in range(cls.domain_size):
            for y1, y2 in itertools.combinations(range(cls.num_labels), 2):
                left_path = path + ((x, y1),)
                right_path = path + ((x, y2),)
                if not (realized(left_path) and realized(right_path)):
                    continue
                for left in trees(left_path, depth - 1):
                    for right in trees(right_path, depth - 1):
                        yield MistakeTree(x, ((y1, left), (y2, right)))

    top = len(hs).bit_length() - 1
    for depth in range(top, 0, -1):
        for t in trees((), depth):
            if verify_shattered(t, V):
                return depth
    return 0
