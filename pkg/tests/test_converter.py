import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flycap.converter import (
    ConverterParams,
    PlantState,
    all_switch_vectors,
    derive_inputs,
    dynamics,
    mode_table,
    nominal_params,
    plant_rhs,
    switches_from_inputs,
    system_matrices,
)


def test_params_validation():
    with pytest.raises(ValueError, match="p must be >= 2"):
        ConverterParams(E=1, R=1, L=1, c=(), p=1)
    with pytest.raises(ValueError, match="E must be positive"):
        ConverterParams(E=0, R=1, L=1, c=(1e-6, 1e-6))
    with pytest.raises(ValueError, match="R must be positive"):
        ConverterParams(E=1, R=-3, L=1, c=(1e-6, 1e-6))
    with pytest.raises(ValueError, match="capacitances"):
        ConverterParams(E=1, R=1, L=1, c=(1e-6,), p=3)
    with pytest.raises(ValueError, match="positive"):
        ConverterParams(E=1, R=1, L=1, c=(1e-6, 0.0), p=3)


def test_derive_inputs_examples():
    assert derive_inputs((0, 1, 0)).u == (1, -1, 0)
    assert derive_inputs((0, 0, 0)).u == (0, 0, 0)
    assert derive_inputs((1, 0, 1)).u == (-1, 1, 1)


def test_derive_inputs_rejects_bad_switches():
    with pytest.raises(ValueError, match="binary"):
        derive_inputs((0, 2, 0))
    with pytest.raises(ValueError, match="expected 3"):
        derive_inputs((0, 1), p=3)


@pytest.mark.parametrize("p", [2, 3, 4, 5])
def test_input_transform_bijective(p):
    for S in all_switch_vectors(p):
        m = derive_inputs(S)
        assert switches_from_inputs(m.u) == S


def test_unrealizable_inputs_rejected_by_inverse():
    # valid input entries, but no binary switch vector produces them
    with pytest.raises(ValueError, match="binary switches"):
        switches_from_inputs((1, -1, 1))


def test_as_inputs_validation():
    from flycap.converter import as_inputs
    assert as_inputs((1, -1, 1)) == (1, -1, 1)
    assert as_inputs(derive_inputs((0, 1, 0))) == (1, -1, 0)
    with pytest.raises(ValueError, match="invalid input"):
        as_inputs((2, 0, 1))
    with pytest.raises(ValueError, match="invalid input"):
        as_inputs((0, 0, -1))  # u_p is a raw switch state, never -1
    with pytest.raises(ValueError, match="expected 3"):
        as_inputs((0, 1), p=3)


def test_dynamics_all_off_decay(params):
    m = derive_inputs((0, 0, 0))
    d = dynamics(PlantState(I=1.0, Vc=(3.0, 7.0)), m, params)
    assert d[0] == -params.R / params.L
    assert d[1] == 0.0 and d[2] == 0.0


def test_dynamics_hand_evaluated(params):
    # Term-by-term: -R/L*I + E/L*u3 - Vc1/L*u1 - Vc2/L*u2
    #             = -13100 + 15000 - 500 + 1000 = 2400 A/s
    # dVc1 = I/c1 * u1 = 25000 V/s, dVc2 = I/c2 * u2 = -25000 V/s
    d = dynamics(PlantState(I=1.0, Vc=(5.0, 10.0)), (1, -1, 1), params)
    assert d[0] == pytest.approx(2400.0, rel=1e-12)
    assert d[1] == pytest.approx(25000.0, rel=1e-12)
    assert d[2] == pytest.approx(-25000.0, rel=1e-12)


def test_capacitors_frozen_when_inner_inputs_zero(params):
    for S in [(0, 0, 0), (1, 1, 1)]:
        m = derive_inputs(S)
        d = dynamics(PlantState(I=2.5, Vc=(50.0, 100.0)), m, params)
        assert d[1] == 0.0 and d[2] == 0.0


def test_system_matrices_zero_inputs(params):
    mats = system_matrices((0, 0, 0), params)
    expected = np.zeros((3, 3))
    expected[0, 0] = -params.R / params.L
    assert np.array_equal(mats.A, expected)
    assert np.array_equal(mats.B, np.zeros(3))


def test_system_matrices_entries(params):
    mats = system_matrices((1, -1, 1), params)
    assert mats.A[0, 1] == -1.0 / params.L
    assert mats.A[1, 0] == 1.0 / params.c[0]
    assert mats.B[0] == params.E / params.L


def test_output_row_selects_current(params):
    rng = np.random.default_rng(7)
    for S in all_switch_vectors(3):
        mats = system_matrices(derive_inputs(S), params)
        x = rng.normal(size=3)
        assert mats.C @ x == x[0]


def test_affine_equivalence_machine_precision(params):
    """dynamics(x, u) equals A(u) x + B(u) up to float summation order."""
    rng = np.random.default_rng(123)
    modes = [derive_inputs(S) for S in all_switch_vectors(3)]
    for _ in range(1000):
        m = modes[rng.integers(len(modes))]
        x = PlantState(I=float(rng.normal(scale=10)),
                       Vc=tuple(rng.normal(scale=100, size=2)))
        mats = system_matrices(m, params)
        direct = dynamics(x, m, params)
        affine = mats.A @ x.as_array() + mats.B
        scale = np.abs(mats.A) @ np.abs(x.as_array()) + np.abs(mats.B)
        assert np.all(np.abs(direct - affine) <= 1e-13 * scale)


@given(
    I=st.floats(-1e3, 1e3),
    vc1=st.floats(-1e3, 1e3),
    vc2=st.floats(-1e3, 1e3),
    k=st.integers(0, 7),
)
@settings(max_examples=200, deadline=None)
def test_affine_equivalence_property(I, vc1, vc2, k):
    params = nominal_params()
    m = derive_inputs(all_switch_vectors(3)[k])
    x = PlantState(I=I, Vc=(vc1, vc2))
    mats = system_matrices(m, params)
    direct = dynamics(x, m, params)
    affine = mats.A @ x.as_array() + mats.B
    scale = np.abs(mats.A) @ np.abs(x.as_array()) + np.abs(mats.B) + 1e-30
    assert np.all(np.abs(direct - affine) <= 1e-13 * scale)


def test_plant_rhs_matches_dynamics(params):
    rng = np.random.default_rng(5)
    for S in all_switch_vectors(3):
        m = derive_inputs(S)
        I, vc = float(rng.normal()), tuple(rng.normal(size=2))
        dI, dVc = plant_rhs(I, vc, m.u, params)
        ref = dynamics(PlantState(I=I, Vc=vc), m, params)
        assert dI == ref[0] and dVc == tuple(ref[1:])


def test_generalizes_beyond_three_cells():
    prm = ConverterParams(E=100.0, R=10.0, L=1e-3, c=(1e-5,) * 4, p=5)
    m = derive_inputs((0, 1, 0, 1, 1))
    d = dynamics(PlantState(I=1.0, Vc=(1.0, 2.0, 3.0, 4.0)), m, prm)
    assert d.shape == (5,)
    mats = system_matrices(m, prm)
    x = np.array([1.0, 1.0, 2.0, 3.0, 4.0])
    assert np.array_equal(d, mats.A @ x + mats.B)


TABLE_3CELL = [
    (0, (0, 0, 0), (0, 0), ("const", "const"), ("I",)),
    (1, (0, 0, 1), (0, 1), ("const", "up"), ("I", "Vc2")),
    (2, (0, 1, 0), (1, -1), ("up", "down"), ("I", "Vc1", "Vc2")),
    (3, (0, 1, 1), (1, 0), ("up", "const"), ("I", "Vc1")),
    (4, (1, 0, 0), (-1, 0), ("down", "const"), ("I", "Vc1")),
    (5, (1, 0, 1), (-1, 1), ("down", "up"), ("I", "Vc1", "Vc2")),
    (6, (1, 1, 0), (0, -1), ("const", "down"), ("I", "Vc2")),
    (7, (1, 1, 1), (0, 0), ("const", "const"), ("I",)),
]


def test_mode_table_rows():
    rows = mode_table(3)
    assert len(rows) == 8
    for row, (idx, S, u, trends, observable) in zip(rows, TABLE_3CELL):
        assert row.index == idx
        assert row.S == S
        assert row.u == u
        assert row.trends == trends
        assert row.observable == observable


def test_mode_table_gated_to_three_cells():
    with pytest.raises(ValueError, match="p = 3"):
        mode_table(4)
