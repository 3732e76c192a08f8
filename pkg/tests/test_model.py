import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gnepkit import (
    BlockVector,
    DimensionError,
    GameSpec,
    GradientUnavailable,
    OracleObjective,
    PreconditionError,
    QuadraticObjective,
    SharedConstraints,
    SharedSet,
    WeightVector,
    evaluate_objective,
    feasible,
    is_fixed_point,
    partial_gradient,
)

finite = st.floats(-1e3, 1e3, allow_nan=False)


@given(st.lists(st.integers(1, 4), min_size=2, max_size=4), st.data())
def test_block_roundtrip(dims, data):
    x = data.draw(arrays(float, sum(dims), elements=finite))
    bv = BlockVector(x, tuple(dims))
    assert np.array_equal(BlockVector.from_blocks(bv.blocks).data, x)
    for i in range(len(dims)):
        again = BlockVector.assemble(bv.dims, i, bv.block(i), bv.minus(i))
        assert np.array_equal(again.data, x)


def test_block_vector_is_read_only():
    bv = BlockVector([1.0, 2.0, 3.0], (1, 2))
    with pytest.raises(ValueError):
        bv.data[0] = 5.0
    other = bv.replace(1, [7.0, 8.0])
    assert bv.data.tolist() == [1.0, 2.0, 3.0]
    assert other.data.tolist() == [1.0, 7.0, 8.0]


def test_block_vector_rejects_bad_input():
    with pytest.raises(DimensionError):
        BlockVector([1.0, 2.0], (1, 2))
    with pytest.raises(DimensionError):
        BlockVector([1.0, np.nan], (1, 1))
    with pytest.raises(DimensionError):
        BlockVector([1.0, 2.0], (1, 1)).replace(0, [1.0, 2.0])


def test_quadratic_objective_validation():
    with pytest.raises(PreconditionError):
        QuadraticObjective([[1.0, 2.0], [0.0, 1.0]], [0.0, 0.0])
    with pytest.raises(DimensionError):
        QuadraticObjective(np.eye(2), [0.0])


def _toy_game(constraints=None):
    objs = (QuadraticObjective(np.eye(2), [-1.0, 0.0]), QuadraticObjective(np.eye(2), [0.0, -1.0]))
    return GameSpec((1, 1), objs, ([0.0], [0.0]), ([1.0], [1.0]),
                    constraints if constraints is not None else SharedConstraints(
                        SharedSet([[1.0, 1.0]], [1.0], [0.0, 0.0])))


def test_game_validation():
    objs = (QuadraticObjective(np.eye(2), np.zeros(2)),) * 2
    with pytest.raises(PreconditionError):
        GameSpec((1, 1), objs, ([0.0], [0.0]), ([1.0], [np.inf]), SharedConstraints(
            SharedSet([[1.0, 1.0]], [1.0], [0.0, 0.0])))
    with pytest.raises(PreconditionError):
        GameSpec((1, 1), objs, ([0.0], [2.0]), ([1.0], [1.0]), SharedConstraints(
            SharedSet([[1.0, 1.0]], [1.0], [0.0, 0.0])))
    with pytest.raises(PreconditionError):
        GameSpec((2,), objs[:1], ([0.0, 0.0],), ([1.0, 1.0],), None)
    neg = QuadraticObjective(-np.eye(2), np.zeros(2))
    with pytest.raises(PreconditionError):
        GameSpec((1, 1), (neg, neg), ([0.0], [0.0]), ([1.0], [1.0]), None)


def test_shared_set_requires_feasible_point():
    with pytest.raises(PreconditionError):
        SharedSet([[1.0, 1.0]], [1.0], [1.0, 1.0])
    empty = SharedSet(np.zeros((0, 2)), [], [0.0, 0.0])
    assert empty.contains(np.array([5.0, -5.0]))


def test_feasible_and_fixed_point():
    game = _toy_game()
    assert feasible(game, 0, [0.5], [0.5])
    assert not feasible(game, 0, [0.6], [0.5])
    assert not feasible(game, 0, [1.5], [0.0])
    assert is_fixed_point(game, [0.5, 0.5])
    assert not is_fixed_point(game, [0.8, 0.5])


def test_partial_gradient_and_oracle():
    game = _toy_game()
    assert partial_gradient(game, 0, [0.25, 0.5]).tolist() == [-0.75]
    objs = (OracleObjective(lambda x: float(x @ x)), OracleObjective(lambda x: float(x[1])))
    og = GameSpec((1, 1), objs, ([0.0], [0.0]), ([1.0], [1.0]), None)
    assert evaluate_objective(og, 0, [0.5, 0.5]) == 0.5
    with pytest.raises(GradientUnavailable):
        partial_gradient(og, 0, [0.5, 0.5])
    with pytest.raises(DimensionError):
        evaluate_objective(og, 2, [0.5, 0.5])


def test_weight_vector():
    assert tuple(WeightVector.ones(3)) == (1.0, 1.0, 1.0)
    with pytest.raises(PreconditionError):
        WeightVector((1.0, 0.0))


@settings(max_examples=30)
@given(st.floats(0.1, 10.0), st.floats(0.1, 10.0))
def test_scaling_scales_objectives(r1, r2):
    game = _toy_game()
    scaled = game.scaled((r1, r2))
    x = np.array([0.3, 0.6])
    assert np.isclose(evaluate_objective(scaled, 0, x), r1 * evaluate_objective(game, 0, x))
    assert np.isclose(evaluate_objective(scaled, 1, x), r2 * evaluate_objective(game, 1, x))
