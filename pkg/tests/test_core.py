import pytest
from hypothesis import given
from hypothesis import strategies as st

from tasep_lab.core import (
    INFINITE_M,
    NotSpaceLike,
    SpaceLikeSequence,
    SpaceTimePoint,
    SystemSpec,
    WallLabelError,
    initial_position,
    is_space_like,
    precedes,
    sort_space_like,
    wall_relative_initial_position,
)

points = st.builds(
    SpaceTimePoint,
    n=st.integers(min_value=1, max_value=6),
    t=st.sampled_from([0.0, 1.0, 2.5, 2.5, 7.0]),
)


def test_space_like_examples():
    assert is_space_like(SpaceTimePoint(1, 5.0), SpaceTimePoint(2, 3.0))
    assert not is_space_like(SpaceTimePoint(1, 5.0), SpaceTimePoint(1, 5.0))
    assert is_space_like(SpaceTimePoint(3, 2.0), SpaceTimePoint(1, 7.0))


def test_initial_positions():
    assert initial_position(3, SystemSpec(M=3, alpha=0.5)) == 0
    assert initial_position(1, SystemSpec(M=3, alpha=0.5)) == 4
    assert initial_position(5, SystemSpec(M=1, alpha=0.5)) == -8
    assert wall_relative_initial_position(4) == -8


def test_infinite_m_rejected_for_absolute_labels():
    spec = SystemSpec(M=INFINITE_M, alpha=2.0)
    assert spec.infinite
    with pytest.raises(WallLabelError):
        initial_position(1, spec)
    assert spec.jump_rate(17) == 2.0


def test_spec_validation():
    with pytest.raises(ValueError):
        SystemSpec(M=0, alpha=0.5)
    with pytest.raises(ValueError):
        SystemSpec(M=2, alpha=-1.0)
    assert SystemSpec(M=2, alpha=0.4).jump_rate(2) == 0.4
    assert SystemSpec(M=2, alpha=0.4).jump_rate(3) == 1.0


@given(points, points)
def test_precedes_antisymmetric_irreflexive(p, q):
    assert not precedes(p, p)
    assert not (precedes(p, q) and precedes(q, p))


@given(points, points, points)
def test_precedes_transitive(p, q, r):
    if precedes(p, q) and precedes(q, r):
        assert precedes(p, r)


def test_sort_space_like_examples():
    a, b = SpaceTimePoint(2, 3.0), SpaceTimePoint(1, 5.0)
    assert sort_space_like([a, b]).points == [b, a]
    assert sort_space_like([b]).points == [b]
    with pytest.raises(NotSpaceLike):
        sort_space_like([SpaceTimePoint(1, 3.0), SpaceTimePoint(2, 5.0)])


@given(st.permutations([SpaceTimePoint(1, 9.0), SpaceTimePoint(2, 6.0), SpaceTimePoint(4, 2.5), SpaceTimePoint(5, 1.0)]))
def test_sort_permutation_invariant(perm):
    assert sort_space_like(list(perm)).points == [
        SpaceTimePoint(1, 9.0),
        SpaceTimePoint(2, 6.0),
        SpaceTimePoint(4, 2.5),
        SpaceTimePoint(5, 1.0),
    ]


def test_sequence_thresholds_validated():
    pts = [SpaceTimePoint(1, 5.0), SpaceTimePoint(2, 3.0)]
    seq = SpaceLikeSequence(points=pts, thresholds=[0, -2])
    assert len(seq) == 2
    with pytest.raises(ValueError):
        SpaceLikeSequence(points=pts, thresholds=[0])
    with pytest.raises(NotSpaceLike):
        SpaceLikeSequence(points=list(reversed(pts)))
