import numpy as np
import pytest

from conftest import line
from temporal_sortition import (
    DivisibilityError,
    InputError,
    StructuralError,
    equal_size_capture,
    fixture,
    modified_greedy_capture,
)
from temporal_sortition.capture import FULL, GroupNode, individuals_of


def sets(coll):
    return [sorted(g.members) for g in coll.groups]


def test_figure1_level2_minimal(fig1):
    coll = modified_greedy_capture(fig1, 4)
    assert sets(coll) == [[0, 1], [2, 3], [4, 5], [6, 7]]
    assert [g.radius for g in coll.groups] == [0, 0, 0, 0]
    assert coll.residual == []


def test_figure1_level2_full(fig1):
    coll = modified_greedy_capture(fig1, 4, mode=FULL)
    assert sets(coll) == [[0, 1], [2, 3], [4, 5, 6, 7]]


def test_figure1_level1_over_groups(fig1):
    g2 = modified_greedy_capture(fig1, 4, level=2).groups
    partition = g2[:3] + [6, 7]
    coll = modified_greedy_capture(fig1, 2, partition, level=1)
    first, second = coll.groups
    assert first.radius == 0 and first.members == {4, 5, 6, 7}
    assert first.children == [g2[2], 6, 7]
    assert second.radius == 1 and second.members == {0, 1, 2, 3}
    assert second.children == [g2[0], g2[1]]


def test_colocated_points():
    inst = line(*[3.0] * 10)
    coll = modified_greedy_capture(inst, 3)
    sizes = sorted(g.size for g in coll.groups)
    assert all(s in (3, 4) for s in sizes)
    assert all(g.radius == 0 for g in coll.groups)


def test_individuals_of(fig1):
    assert individuals_of(5) == {5}
    a = GroupNode("a", 2, 0, 0, 0.0, [0, 1], frozenset({0, 1}))
    b = GroupNode("b", 2, 1, 2, 0.0, [2, 3], frozenset({2, 3}))
    top = GroupNode("t", 1, 0, 0, 1.0, [a, b], frozenset(range(4)))
    assert individuals_of(top) == {0, 1, 2, 3}
    with pytest.raises(StructuralError):
        individuals_of(GroupNode("x", 1, 0, 0, 0.0, ["dangling"], frozenset()))
    with pytest.raises(StructuralError):
        individuals_of(GroupNode("y", 1, 0, 0, 0.0, [a, 1], frozenset()))


def test_equal_size_figure1(fig1):
    assert sets(equal_size_capture(fig1, 4)) == [[0, 1], [2, 3], [4, 5], [6, 7]]


def test_equal_size_theorem1(thm1):
    coll = equal_size_capture(thm1, 3)
    assert sorted(sets(coll)) == [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
    assert [g.radius for g in coll.groups] == [0, 0, 1]


def test_equal_size_singletons(thm1):
    coll = equal_size_capture(thm1, thm1.n)
    assert sorted(sets(coll)) == [[v] for v in range(thm1.n)]
    assert all(g.radius == 0 for g in coll.groups)


def test_equal_size_errors(fig1):
    with pytest.raises(DivisibilityError):
        equal_size_capture(fig1, 3)
    with pytest.raises(InputError):
        equal_size_capture(fig1, 0)
    loose = equal_size_capture(fig1, 3, strict=False)
    assert sorted(v for g in loose.groups for v in g.members) == list(range(8))
    # leftovers v7, v8 join the group whose center is nearest
    assert sorted(g.size for g in loose.groups) == [2, 2, 4]


def test_equal_size_exclusions(fig1):
    coll = equal_size_capture(fig1, 3, exclusions=[6, 7])
    assert sorted(v for g in coll.groups for v in g.members) == list(range(6))


def test_capture_rejects_bad_arguments(fig1):
    with pytest.raises(InputError):
        modified_greedy_capture(fig1, 0)
    with pytest.raises(InputError):
        modified_greedy_capture(fig1, 2, mode="greedy")
    with pytest.raises(StructuralError):
        modified_greedy_capture(fig1, 2, [0, 0, 1])


def test_group_json(fig1):
    g = modified_greedy_capture(fig1, 4).groups[0]
    assert g.to_json() == {
        "id": "G0.1", "level": 0, "center": 0, "radius": 0.0, "children": [0, 1], "members_flat": [0, 1],
    }


def test_intro_toy_groups():
    inst = fixture("intro_toy")
    coll = equal_size_capture(inst, 8)
    assert all(g.size == 2 and g.radius == 0 for g in coll.groups)
    assert np.unique([inst.matrix[g.center, 0] for g in coll.groups]).size == 4
