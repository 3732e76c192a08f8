import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnepkit import GameSpec, PreconditionError, QuadraticObjective, SharedConstraints, SharedSet
from gnepkit.structure import (
    BUILTIN_MAPS,
    EmptyGraphError,
    check_dsc,
    check_geometric_equilibrium,
    check_graph_convexity,
    check_kkm,
    check_lsc_interval,
    constraint_map_oracle,
    replay_witness,
)


def test_witnesses_replay(cournot_cap1):
    gc = check_graph_convexity(BUILTIN_MAPS["kkm-demo-a"].oracle())
    assert not gc.holds and replay_witness(gc, BUILTIN_MAPS["kkm-demo-a"].oracle())
    kkm = check_kkm(BUILTIN_MAPS["kkm-demo-b"].oracle())
    assert not kkm.holds and replay_witness(kkm, BUILTIN_MAPS["kkm-demo-b"].oracle())
    lsc = check_lsc_interval(BUILTIN_MAPS["kkm-demo-a"], 0.0)
    assert replay_witness(lsc, BUILTIN_MAPS["kkm-demo-a"])
    geo = check_geometric_equilibrium(cournot_cap1, [0.5, 0.25])
    assert not geo.holds and replay_witness(geo, cournot_cap1)


def test_holding_verdict_has_nothing_to_replay():
    v = check_kkm(BUILTIN_MAPS["constant"].oracle())
    assert v.holds and v.witness is None and not replay_witness(v, None)


@pytest.mark.parametrize("name", sorted(set(BUILTIN_MAPS) - {"shift"}))
def test_checks_are_deterministic(name):
    oracle = BUILTIN_MAPS[name].oracle()
    assert check_kkm(oracle, seed=3).to_dict() == check_kkm(oracle, seed=3).to_dict()
    assert check_graph_convexity(oracle, seed=3).to_dict() == check_graph_convexity(oracle, seed=3).to_dict()


def test_kkm_subsets_of_size_one_test_fixed_points():
    # x in F(x) everywhere for the two-branch map, nowhere for the shift map
    assert check_kkm(BUILTIN_MAPS["kkm-demo-b"].oracle(), max_subset_size=1).holds
    assert not check_kkm(BUILTIN_MAPS["shift"].oracle(), max_subset_size=1).holds


def test_empty_graph_is_an_error():
    with pytest.raises(EmptyGraphError):
        check_graph_convexity(BUILTIN_MAPS["shift"].oracle())


def test_lsc_holds_where_expected():
    assert check_lsc_interval(BUILTIN_MAPS["ramp"], 0.5).holds
    assert check_lsc_interval(BUILTIN_MAPS["constant"], 0.0).holds
    with pytest.raises(PreconditionError):
        check_lsc_interval(BUILTIN_MAPS["ramp"], 1.5)


def _quadratic_game(D):
    Q1 = np.array([[D[0, 0], D[0, 1]], [D[0, 1], 1.0]])
    Q2 = np.array([[1.0, D[1, 0]], [D[1, 0], D[1, 1]]])
    objs = (QuadraticObjective(Q1, np.zeros(2)), QuadraticObjective(Q2, np.zeros(2)))
    return GameSpec((1, 1), objs, ([-1.0], [-1.0]), ([1.0], [1.0]),
                    SharedConstraints(SharedSet([[1.0, 1.0]], [1.0], [0.0, 0.0])))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-3.0, 3.0), st.floats(-3.0, 3.0), st.floats(0.05, 3.0),
       st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_dsc_verdict_matches_eigenvalue(a, b, c, d, r1, r2):
    D = np.array([[a, b], [c, d]])
    game = _quadratic_game(D)
    R = np.diag([r1, r2]) @ D
    lam = np.linalg.eigvalsh(R + R.T)[0]
    if abs(lam) < 1e-6:
        return
    v = check_dsc(game, (r1, r2), n_pairs=200)
    assert v.details["min_eigenvalue"] == pytest.approx(lam, abs=1e-9)
    assert v.holds == (lam > 0)
    if not v.holds:
        assert replay_witness(v, (game, (r1, r2)))


def test_geometric_needs_a_fixed_point(cournot_cap1):
    with pytest.raises(PreconditionError):
        check_geometric_equilibrium(cournot_cap1, [0.9, 0.9])
    assert check_geometric_equilibrium(cournot_cap1, [0.75, 0.25]).holds


def test_constraint_map_graph_convexity(cournot_cap1):
    for i in range(2):
        assert check_graph_convexity(constraint_map_oracle(cournot_cap1, i), n_samples=500).holds


def test_verdict_serializes(cournot_cap1):
    import json

    v = check_dsc(cournot_cap1, (1, 100))
    d = json.loads(json.dumps(v.to_dict()))
    assert d["holds"] is False and d["witness"]["x"]
