import cmath
import math

import pytest
from hypothesis import given, settings, strategies as st

from dualem.core import DomainError, Excitation, SolverError, ValidationError
from dualem.circuit import (
    GROUND,
    RECEIVER_NODES,
    ACNetwork,
    InstrumentModel,
    InversionError,
    SimultaneousParams,
    TopologyError,
    build_simultaneous_network,
    common_mode_current,
    common_mode_forward,
    common_mode_voltage,
    differential_voltage,
    extract_cm,
    measured_capacitance,
    mna_solve,
    simultaneous_readout,
    track_resistance,
)
from dualem.electrostatic import aggregate_coupling

W1M = 2 * math.pi * 1e6
INST = InstrumentModel()
SEG_R = tuple(track_resistance(42.9e-3) for _ in range(5))


def _params(couplings=(0.2e-12,) * 6, m=5e-9, **kw):
    base = dict(l1=320e-9, l2=320e-9, m=m, couplings=tuple(couplings), segment_r=SEG_R)
    base.update(kw)
    return SimultaneousParams(**base)


# -- solver against hand results -------------------------------------------------


def test_rc_divider():
    r, c = 1e3, 1e-9
    net = ACNetwork().voltage_source("V", "in", GROUND, 1.0).resistor("R", "in", "out", r).capacitor("C", "out", GROUND, c)
    sol = mna_solve(net, W1M)
    expected = 1 / (1 + 1j * W1M * r * c)
    assert abs(sol["out"] - expected) < 1e-12
    assert sol.kcl_residual < 1e-12


def test_unloaded_output_follows_source():
    net = ACNetwork().voltage_source("V", "in", GROUND, 2.0).resistor("R", "in", "out", 1e3).resistor("Rl", "out", GROUND, 1e15)
    assert mna_solve(net, W1M)["out"] == pytest.approx(2.0, rel=1e-9)


def test_coupled_inductors_open_secondary():
    i1, m = 1e-3, 2e-9
    net = (ACNetwork().current_source("I", GROUND, "p", i1).inductor("L1", "p", GROUND, 1e-6)
           .inductor("L2", "s", GROUND, 1e-6).resistor("Rs", "s", GROUND, 1e12).mutual("M", "L1", "L2", m))
    sol = mna_solve(net, W1M)
    assert sol["s"] == pytest.approx(1j * W1M * m * i1, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(r=st.floats(1.0, 1e6), c=st.floats(1e-13, 1e-6), f=st.floats(1e2, 1e7))
def test_network_reciprocity(r, c, f):
    def transfer(src, probe):
        net = (ACNetwork().current_source("I", GROUND, src, 1.0)
               .resistor("Ra", "a", GROUND, r).resistor("Rab", "a", "b", 2 * r)
               .capacitor("Cb", "b", GROUND, c).resistor("Rb", "b", GROUND, 3 * r))
        return mna_solve(net, 2 * math.pi * f)[probe]

    assert transfer("a", "b") == pytest.approx(transfer("b", "a"), rel=1e-9)


def test_floating_subgraph_is_named():
    net = ACNetwork().voltage_source("V", "a", GROUND, 1.0).resistor("R", "a", GROUND, 1.0).resistor("Rf", "x", "y", 1.0)
    with pytest.raises(TopologyError) as info:
        mna_solve(net, W1M)
    assert set(info.value.nodes) == {"x", "y"}
    assert isinstance(info.value, SolverError)


def test_coupling_coefficient_above_one_rejected():
    net = (ACNetwork().voltage_source("V", "a", GROUND, 1.0).inductor("L1", "a", GROUND, 1e-6)
           .inductor("L2", "b", GROUND, 1e-6).mutual("M", "L1", "L2", 2e-6))
    with pytest.raises(ValidationError, match="exceeds 1"):
        mna_solve(net, W1M)


def test_bad_values_and_frequency():
    net = ACNetwork().voltage_source("V", "a", GROUND, 1.0).resistor("R", "a", GROUND, 1.0)
    for omega in (0.0, -1.0, math.inf):
        with pytest.raises(DomainError):
            mna_solve(net, omega)
    with pytest.raises(ValidationError):
        mna_solve(ACNetwork().voltage_source("V", "a", GROUND, 1.0).resistor("R", "a", GROUND, -1.0), W1M)
    with pytest.raises(ValidationError, match="duplicate"):
        ACNetwork().resistor("R", "a", GROUND, 1.0).resistor("R", "a", GROUND, 1.0)


# -- mode relations --------------------------------------------------------------


def test_differential_voltage_examples():
    v = differential_voltage(2e-9, Excitation(1e6, current=10e-3))
    assert abs(v) == pytest.approx(125.66e-6, rel=1e-4)
    assert cmath.phase(v) == pytest.approx(math.pi / 2)
    assert differential_voltage(0.0, Excitation(1e6, current=10e-3)) == 0
    with pytest.raises(DomainError):
        differential_voltage(1e-9, Excitation(1e6, source_voltage=1.0))


def test_measured_capacitance_examples():
    assert measured_capacitance(1e-12, 2e-12, 2e-12, 2e-12) == pytest.approx(1e-12 + 2e-12 / 3)
    assert measured_capacitance(1e-12, 0.0, 5e-12, 5e-12) == 1e-12
    with pytest.raises(DomainError):
        measured_capacitance(-1e-12, 1e-12, 1e-12, 1e-12)


@given(cd=st.floats(0, 1e-9), c1=st.floats(1e-15, 1e-9), c2=st.floats(1e-15, 1e-9), c3=st.floats(1e-15, 1e-9))
def test_measured_capacitance_bounds(cd, c1, c2, c3):
    c = measured_capacitance(cd, c1, c3, c2)
    assert cd <= c <= cd + min(c1, c2, c3) * (1 + 1e-12)


def test_common_mode_current_superposes():
    single = common_mode_current([(1e-12, 1.0)], W1M)
    assert single == pytest.approx(1j * W1M * 1e-12)
    both = common_mode_current([(1e-12, 1.0), (2e-12, 0.5)], W1M)
    assert both == pytest.approx(single + common_mode_current([(2e-12, 0.5)], W1M))
    with pytest.raises(DomainError):
        common_mode_current([(1e-12, 1.0)], 0.0)


def test_common_mode_current_matches_aggregate(default_matrix):
    taps = default_matrix.receiver_couplings()
    via_taps = common_mode_current([(c, 1.0) for c in taps.values()], W1M)
    via_aggregate = common_mode_current([(aggregate_coupling(default_matrix), 1.0)], W1M)
    assert abs(via_taps - via_aggregate) <= 0.05 * abs(via_aggregate)


def test_common_mode_voltage():
    assert common_mode_voltage(0j, INST, W1M) == 0
    resistive = InstrumentModel(zs_r=1e3, zs_c=1e-18)
    v = common_mode_voltage(1e-3, resistive, W1M)
    assert abs(cmath.phase(v)) < 1e-5


def test_extract_cm_round_trip():
    for c in (0.1e-12, 1.56e-12, 10e-12):
        v_a = common_mode_forward(c, 1.0, INST, W1M)
        assert extract_cm(v_a, 1.0, INST, W1M) == pytest.approx(c, rel=1e-9)
    assert extract_cm(1e-15, 1.0, INST, W1M) == pytest.approx(0.0, abs=1e-18)


@given(c=st.floats(1e-15, 1e-9), f=st.floats(1e3, 1e7))
def test_extract_cm_inverts_forward(c, f):
    w = 2 * math.pi * f
    assert extract_cm(common_mode_forward(c, 1.0, INST, w), 1.0, INST, w) == pytest.approx(c, rel=1e-9)


def test_extract_cm_rejects_impossible_readings():
    with pytest.raises(InversionError):
        extract_cm(1.0, 1.0, INST, W1M)
    with pytest.raises(InversionError):
        extract_cm(-0.1, 1.0, INST, W1M)


# -- simultaneous network ---------------------------------------------------------


def test_network_layout():
    net = build_simultaneous_network(_params())
    assert set(RECEIVER_NODES) <= set(net.nodes)
    assert net.element("L2").b == "D_F"
    assert net.element("C_A").a == "tx"


def test_no_capacitance_matches_loaded_transformer():
    p = _params(couplings=(0.0,) * 6)
    ro = simultaneous_readout(p, W1M)
    zp = 1 / (1 / INST.zs(W1M) + 1 / INST.r1)
    z_loop = sum(SEG_R) + 1j * W1M * p.l2 + INST.r2 + zp
    i1 = p.v_exc / (1j * W1M * p.l1 + (W1M * p.m) ** 2 / z_loop)
    i2 = -1j * W1M * p.m * i1 / z_loop
    expected = (INST.r2 + zp) * i2
    assert abs(ro.v_diff - expected) <= 1e-9 * abs(expected)


def test_no_mutual_leaves_only_common_mode():
    ro = simultaneous_readout(_params(m=0.0), W1M)
    assert abs(ro.v_diff) < 1e-3 * abs(ro.v_common)
    assert abs(ro.v_common) > 0


def test_both_channels_follow_their_closed_forms():
    p = _params()
    ro = simultaneous_readout(p, W1M)
    assert abs(ro.v_diff) / abs(p.m / p.l1 * p.v_exc) == pytest.approx(1, abs=0.01)
    assert ro.c_m == pytest.approx(sum(p.couplings), rel=0.05)


def test_modes_are_separated():
    base = simultaneous_readout(_params(), W1M)
    for s in (0.5, 1.5):
        cap = simultaneous_readout(_params(couplings=tuple(s * 0.2e-12 for _ in range(6))), W1M)
        assert abs(cap.v_diff - base.v_diff) < 1e-3 * abs(base.v_diff)
        assert abs(cap.v_common / base.v_common - 1) > 0.1
        ind = simultaneous_readout(_params(m=s * 5e-9), W1M)
        assert abs(ind.v_common - base.v_common) < 0.01 * abs(base.v_common)
        assert abs(ind.v_diff / base.v_diff - 1) > 0.1


def test_params_need_full_chain():
    with pytest.raises(ValidationError):
        SimultaneousParams(1e-6, 1e-6, 1e-9, (1e-12,) * 5, SEG_R)


def test_instrument_invariants():
    with pytest.raises(DomainError):
        InstrumentModel(zs_c=0.0)
    z = INST.zs(W1M)
    assert z.imag < 0 and abs(z) < INST.zs_r
