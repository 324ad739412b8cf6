import pytest

from fiid_forest.partitions import build_block_hierarchy, check_hierarchy, class_of
from fiid_forest.substrates import SubstrateSpec, make_window


@pytest.fixture(scope="module")
def h8():
    return build_block_hierarchy(make_window(SubstrateSpec("torus2d", 8)))


def test_level_counts(h8):
    assert len(h8.classes(0)) == 64
    assert [len(c) for c in h8.classes(1)] == [4] * 16
    assert len(h8.classes(3)) == 1
    assert h8.max_level == 3


def test_class_of_examples(h8):
    assert class_of(h8, 3, 0) == class_of(h8, 3, 63)
    assert class_of(h8, 0, 1) != class_of(h8, 0, 2)
    assert class_of(h8, 2, 17) == class_of(h8, 2, 17)
    with pytest.raises(ValueError, match="level out of range"):
        class_of(h8, 4, 0)


@pytest.mark.parametrize("kind", ["torus2d", "grid2d"])
@pytest.mark.parametrize("side", [8, 16, 32])
def test_hierarchy_properties(kind, side):
    w = make_window(SubstrateSpec(kind, side))
    assert check_hierarchy(w, build_block_hierarchy(w)) == []


def test_non_dyadic_rejected():
    with pytest.raises(ValueError, match="side must be dyadic"):
        build_block_hierarchy(make_window(SubstrateSpec("torus2d", 24)))
