import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eqlab.concepts import (
    ClassError,
    DuplicateHypothesis,
    EmptyClass,
    LabelOutOfRange,
    VersionSpace,
    build_class,
    disagreement_set,
    field_points,
    gen_cube,
    gen_linear_functionals,
    gen_random_class,
    gen_singletons,
    load_class,
    replay,
    restrict,
    save_class,
)


@st.composite
def small_classes(draw, max_n=4, max_k=3, max_m=8):
    n = draw(st.integers(1, max_n))
    k = draw(st.integers(2, max_k))
    m = draw(st.integers(1, min(max_m, k ** n)))
    seed = draw(st.integers(0, 2 ** 16))
    return gen_random_class(n, k, m, seed)


class TestBuildClass:
    def test_identity_matrix(self):
        cls = build_class([[1, 0], [0, 1]], 2)
        assert cls.num_hypotheses == 2 and cls.domain_size == 2 and cls.num_labels == 2
        assert cls(0, 0) == 1 and cls(1, 0) == 0

    def test_duplicate_rows_rejected(self):
        with pytest.raises(DuplicateHypothesis):
            build_class([[0, 0], [0, 0]], 2)

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRange):
            build_class([[0, 2]], 2)
        with pytest.raises(LabelOutOfRange):
            build_class([[0, -1]], 2)

    def test_empty(self):
        with pytest.raises(EmptyClass):
            build_class([], 2)

    def test_ragged(self):
        with pytest.raises(ClassError):
            build_class([[0, 1], [1]], 2)

    def test_linear_matrix_accepted(self):
        cls = gen_linear_functionals(3, 2)
        again = build_class(cls.labels.tolist(), 3)
        assert again.num_hypotheses == 8

    def test_masks_partition_rows(self):
        cls = gen_random_class(4, 3, 10, seed=7)
        for x in range(cls.domain_size):
            masks = cls.masks[x]
            assert sum(masks) == cls.full_mask
            assert all(a & b == 0 for a, b in itertools.combinations(masks, 2))

    def test_json_round_trip(self, tmp_path):
        cls = gen_linear_functionals(3, 2)
        path = tmp_path / "lin.json"
        save_class(cls, path)
        data = json.loads(path.read_text())
        assert set(data) >= {"domain_size", "num_labels", "hypotheses"}
        back = load_class(path)
        assert np.array_equal(back.labels, cls.labels) and back.num_labels == 3

    def test_json_domain_size_mismatch(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"domain_size": 3, "num_labels": 2, "hypotheses": [[0, 1]]}))
        with pytest.raises(ClassError):
            load_class(path)


class TestGenerators:
    def test_singletons_two(self):
        assert gen_singletons(2).labels.tolist() == [[1, 0], [0, 1]]

    def test_singletons_five(self):
        cls = gen_singletons(5)
        assert cls.labels.shape == (5, 5)
        assert (cls.labels.sum(axis=1) == 1).all()
        assert np.array_equal(cls.labels, np.eye(5, dtype=int))

    def test_singletons_too_small(self):
        with pytest.raises(ValueError):
            gen_singletons(1)

    def test_linear_shape(self):
        cls = gen_linear_functionals(3, 2)
        assert (cls.num_hypotheses, cls.domain_size, cls.num_labels) == (8, 9, 3)

    def test_linear_matches_enumeration(self):
        # independent enumeration: nonzero w in lexicographic order, <w, x> mod p
        p, d = 3, 2
        pts = list(itertools.product(range(p), repeat=d))
        ws = [w for w in pts if any(w)]
        expected = [[sum(a * b for a, b in zip(w, x)) % p for x in pts] for w in ws]
        assert gen_linear_functionals(p, d).labels.tolist() == expected

    def test_field_points_lexicographic(self):
        assert field_points(2, 2) == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_linear_not_prime(self):
        with pytest.raises(ValueError):
            gen_linear_functionals(4, 2)

    @pytest.mark.parametrize("p,d", [(2, 2), (3, 1), (3, 2), (5, 1), (2, 3)])
    def test_linear_disagreement_size(self, p, d):
        cls = gen_linear_functionals(p, d)
        want = (p - 1) * p ** (d - 1)
        for h, c in itertools.combinations(range(cls.num_hypotheses), 2):
            assert len(disagreement_set(cls, h, c)) == want

    def test_random_full_cube(self):
        cls = gen_random_class(3, 2, 8, seed=0)
        assert sorted(map(tuple, cls.labels.tolist())) == list(itertools.product(range(2), repeat=3))

    def test_random_deterministic(self):
        a = gen_random_class(4, 3, 10, seed=7)
        b = gen_random_class(4, 3, 10, seed=7)
        assert np.array_equal(a.labels, b.labels)
        assert len({tuple(r) for r in a.labels.tolist()}) == 10

    def test_random_too_many(self):
        with pytest.raises(ValueError):
            gen_random_class(2, 2, 5, seed=0)

    def test_cube(self):
        cls = gen_cube(3)
        assert cls.num_hypotheses == 8 and cls.domain_size == 3


class TestVersionSpace:
    def test_restrict_singletons(self):
        V = VersionSpace.full(gen_singletons(3))
        assert restrict(V, 0, 0).members == [1, 2]

    def test_restrict_idempotent(self):
        V = VersionSpace.full(gen_linear_functionals(3, 2))
        once = restrict(V, 4, 1)
        assert restrict(once, 4, 1).members == once.members

    def test_restrict_linear(self):
        cls = gen_linear_functionals(3, 2)
        x = field_points(3, 2).index((1, 0))
        sub = restrict(VersionSpace.full(cls), x, 1)
        ws = [w for w in itertools.product(range(3), repeat=2) if any(w)]
        assert [ws[h] for h in sub.members] == [(1, 0), (1, 1), (1, 2)]

    def test_restrict_may_empty(self):
        V = restrict(VersionSpace.full(gen_singletons(3)), 0, 1)
        assert len(restrict(V, 1, 1)) == 0

    def test_disagreement(self):
        cls = gen_singletons(6)
        assert disagreement_set(cls, 2, 2) == frozenset()
        assert disagreement_set(cls, 1, 4) == {1, 4}

    @settings(max_examples=60, deadline=None)
    @given(small_classes(), st.data())
    def test_properties(self, cls, data):
        V = VersionSpace.full(cls)
        for _ in range(3):
            x = data.draw(st.integers(0, cls.domain_size - 1))
            y = data.draw(st.integers(0, cls.num_labels - 1))
            W = restrict(V, x, y)
            assert set(W.members) <= set(V.members)
            assert replay(cls, W.constraints).members == W.members
            V = W
        for h, c in itertools.combinations(range(cls.num_hypotheses), 2):
            D = disagreement_set(cls, h, c)
            assert D and D == disagreement_set(cls, c, h)
