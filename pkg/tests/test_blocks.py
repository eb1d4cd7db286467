import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holder_rbcd.blocks import BlockPartition


@st.composite
def partitions(draw, max_dim=8):
    d = draw(st.integers(1, max_dim))
    perm = draw(st.permutations(range(d)))
    cuts = sorted(draw(st.sets(st.integers(1, d - 1), max_size=d - 1))) if d > 1 else []
    bounds = [0, *cuts, d]
    return BlockPartition([perm[a:b] for a, b in zip(bounds, bounds[1:])], d)


def test_project_examples():
    assert np.array_equal(BlockPartition([[0], [1]]).project(0, [3, 4]), [3, 0])
    assert np.array_equal(BlockPartition([[0, 1]]).project(0, [3, 4]), [3, 4])
    assert np.array_equal(BlockPartition([[0], [1, 2]]).project(1, [1, 2, 3]), [0, 2, 3])


def test_reconstruct_examples():
    assert np.array_equal(BlockPartition([[0, 2], [1]]).reconstruct([1, -2, 5]), [1, -2, 5])
    assert np.array_equal(BlockPartition([[0], [1]]).reconstruct([0, 0]), [0, 0])
    assert np.array_equal(BlockPartition([[1], [0, 2]]).reconstruct([7, 8, 9]), [7, 8, 9])


@pytest.mark.parametrize("blocks,dim", [
    ([], None), ([[0], []], None), ([[0, 1], [1]], None), ([[0], [2]], None), ([[0]], 2),
])
def test_invalid_partitions(blocks, dim):
    with pytest.raises(ValueError):
        BlockPartition(blocks, dim)


def test_bad_index_and_dimension():
    p = BlockPartition.singletons(2)
    with pytest.raises(IndexError):
        p.project(2, [1, 2])
    with pytest.raises(IndexError):
        p.project(-1, [1, 2])
    with pytest.raises(ValueError):
        p.project(0, [1, 2, 3])


def test_order_matters_for_equality():
    assert BlockPartition([[0], [1]]) != BlockPartition([[1], [0]])
    assert BlockPartition([[0], [1]]) == BlockPartition.singletons(2)


def test_contiguous_and_sizes():
    p = BlockPartition.contiguous([2, 1, 3])
    assert p.blocks == ((0, 1), (2,), (3, 4, 5))
    assert p.sizes == (2, 1, 3) and p.m == 3 and p.dim == 6
    assert BlockPartition.from_list(p.to_list()) == p


@settings(max_examples=60, deadline=None)
@given(partitions(), st.data())
def test_projection_properties(part, data):
    x = np.array(data.draw(st.lists(st.floats(-1e3, 1e3), min_size=part.dim, max_size=part.dim)))
    assert np.array_equal(part.reconstruct(x), x)
    projs = [part.project(i, x) for i in range(part.m)]
    for i in range(part.m):
        assert np.array_equal(part.project(i, projs[i]), projs[i])
        for j in range(i + 1, part.m):
            assert projs[i] @ projs[j] == 0.0
    assert np.isclose(np.sum(part.block_norms(x) ** 2), x @ x, rtol=1e-12, atol=1e-12)


def test_block_norms_batched():
    p = BlockPartition([[0, 2], [1]])
    X = np.array([[3.0, 1.0, 4.0], [0.0, -2.0, 0.0]])
    assert np.allclose(p.block_norms(X), [[5.0, 1.0], [0.0, 2.0]])
