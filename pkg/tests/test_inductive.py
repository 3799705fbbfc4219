import dataclasses
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from dualem.core import (
    COPPER_CONDUCTIVITY,
    DEFAULT_GEOMETRY,
    MU_0,
    CoilPairGeometry,
    ConvergenceError,
    DomainError,
    Excitation,
    GeometryError,
    PlateSample,
)
from dualem.inductive import (
    ComplexInductance,
    QuadratureSpec,
    bessel_j1,
    delta_L,
    induced_voltage,
    kernel_I,
    mutual_inductance_above_plate,
    mutual_inductance_free_space,
    neumann_oracle,
    reflection_coefficient,
    solve_coupling,
)
from dualem.validation import j1_series

W100K = 2 * math.pi * 1e5
COPPER_300 = PlateSample(COPPER_CONDUCTIVITY, 1.0, 300e-6, 5e-3)


@pytest.fixture(scope="module")
def free_space():
    return mutual_inductance_free_space(DEFAULT_GEOMETRY)


# -- Bessel function and kernel -------------------------------------------


def test_j1_zero_and_reference_value():
    assert bessel_j1(0.0) == 0.0
    assert abs(bessel_j1(1.0) - j1_series(1.0)) < 1e-15
    assert bessel_j1(1.0) == pytest.approx(0.4400505857449335, abs=1e-15)


def test_j1_first_zero_matches_series_root():
    root = optimize.brentq(j1_series, 3.0, 4.5, xtol=1e-15)
    assert root == pytest.approx(3.8317059702, abs=1e-9)
    assert abs(bessel_j1(3.8317059702)) < 1e-9


@pytest.mark.parametrize("x", [12.5, 97.0, 433.3, 1000.0])
def test_j1_against_arbitrary_precision(x):
    assert abs(float(bessel_j1(x)) - float(mpmath.besselj(1, x))) < 1e-12


@given(st.floats(-1e3, 1e3))
def test_j1_is_odd(x):
    assert bessel_j1(-x) == -bessel_j1(x)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_j1_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        bessel_j1(bad)


@given(st.floats(0, 100))
def test_kernel_empty_interval(x):
    assert kernel_I(x, x) == 0.0


@pytest.mark.parametrize("x", [1e-3, 1e-2, 5e-2])
def test_kernel_small_argument(x):
    assert kernel_I(0.0, x) == pytest.approx(x**3 / 6, rel=x**2)


def test_kernel_against_adaptive_quadrature():
    ref, _ = integrate.quad(lambda t: t * bessel_j1(t), 0, 5, epsabs=1e-13, limit=200)
    assert abs(kernel_I(0.0, 5.0) - ref) < 1e-10


@pytest.mark.parametrize("x1,x2", [(0.3, 2.0), (4.0, 40.0), (10.0, 300.0)])
def test_kernel_against_mpmath(x1, x2):
    ref = mpmath.quad(lambda t: t * mpmath.besselj(1, t), mpmath.linspace(x1, x2, 40))
    assert kernel_I(x1, x2) == pytest.approx(float(ref), rel=1e-10, abs=1e-12)


def test_kernel_domain():
    with pytest.raises(DomainError):
        kernel_I(2.0, 1.0)
    with pytest.raises(DomainError):
        kernel_I(-1.0, 1.0)


# -- reflection coefficient --------------------------------------------------


@settings(max_examples=100)
@given(alpha=st.floats(1e-2, 1e5), omega=st.floats(0, 1e8), c=st.floats(1e-7, 1.0))
def test_reflection_vanishes_for_air(alpha, omega, c):
    r = reflection_coefficient(np.array([alpha]), omega, PlateSample(0.0, 1.0, c))
    assert abs(r[0]) <= 1e-12


def test_reflection_magnetic_half_space_limit():
    for mu in (2.0, 100.0):
        r = reflection_coefficient(np.array([500.0]), 0.0, PlateSample(0.0, mu, 1.0))[0]
        assert abs(r - (mu - 1) / (mu + 1)) < 1e-6


def test_reflection_strong_skin_limit():
    r = reflection_coefficient(np.array([10.0]), 2 * math.pi * 1e6, PlateSample(COPPER_CONDUCTIVITY, 1.0, 1e-2))[0]
    assert abs(r + 1) < 1e-3


def test_reflection_thin_plate_limit():
    r = reflection_coefficient(np.array([100.0]), W100K, PlateSample(COPPER_CONDUCTIVITY, 50.0, 1e-15))[0]
    assert abs(r) < 1e-9


@given(alpha=st.floats(1e-1, 1e5), f=st.floats(0, 1e7), sigma=st.floats(0, 1e8),
       mu=st.floats(1.0, 1e4), c=st.floats(1e-6, 1e-1))
def test_reflection_is_passive(alpha, f, sigma, mu, c):
    r = reflection_coefficient(np.array([alpha]), 2 * math.pi * f, PlateSample(sigma, mu, c))[0]
    assert abs(r) <= 1 + 1e-12


# -- free-space coupling -------------------------------------------------------


def test_free_space_agrees_with_filament_sum(free_space):
    nm = neumann_oracle(DEFAULT_GEOMETRY)
    assert abs(free_space.real - nm) / abs(nm) < 0.05
    assert free_space.imag == 0.0


def test_free_space_scales_with_turns(free_space):
    doubled = mutual_inductance_free_space(dataclasses.replace(DEFAULT_GEOMETRY, n1=8))
    assert doubled.real == pytest.approx(2 * free_space.real, rel=1e-12)


def test_free_space_reciprocity(free_space):
    g = dataclasses.replace(DEFAULT_GEOMETRY, r_p1=4e-3, r_p2=15e-3, n2=3, l_p1=1e-4, l_p2=2e-4)
    a = mutual_inductance_free_space(g).real
    b = mutual_inductance_free_space(g.swapped()).real
    assert abs(a - b) <= 1e-3 * abs(a)


def test_coaxial_thin_loops_match_filament_sum():
    g = CoilPairGeometry(10e-3, 10.1e-3, 10e-3, 10.1e-3, 0.0, 0.1e-3, 5e-3, 5.1e-3, 1, 1, 0.0)
    dd = mutual_inductance_free_space(g).real
    assert abs(dd - neumann_oracle(g)) / abs(dd) < 0.01


def test_refinement_changes_result_by_less_than_tolerance():
    q = QuadratureSpec()
    sol = solve_coupling(DEFAULT_GEOMETRY, COPPER_300, W100K, q)
    tight = solve_coupling(DEFAULT_GEOMETRY, COPPER_300, W100K, QuadratureSpec(rel_tol=1e-4))
    assert tight.quadrature.alpha_points > sol.quadrature.alpha_points
    assert abs(tight.total - sol.total) < q.rel_tol * abs(sol.free_space)


def test_convergence_error_carries_estimates():
    q = QuadratureSpec(rel_tol=1e-15, max_refinements=1)
    with pytest.raises(ConvergenceError) as info:
        solve_coupling(DEFAULT_GEOMETRY, None, 0.0, q)
    assert info.value.previous is not None and info.value.last is not None


def test_quadrature_spec_invariants():
    with pytest.raises(DomainError):
        QuadratureSpec(alpha_points=4)
    with pytest.raises(DomainError):
        QuadratureSpec(rel_tol=0.1)
    with pytest.raises(DomainError):
        QuadratureSpec(alpha_max=-1.0)


def test_bad_geometry_is_rejected():
    with pytest.raises(GeometryError):
        mutual_inductance_free_space(dataclasses.replace(DEFAULT_GEOMETRY, l_e2=0.0))


def test_results_are_bit_reproducible():
    a = solve_coupling(DEFAULT_GEOMETRY, COPPER_300, W100K)
    b = solve_coupling(DEFAULT_GEOMETRY, COPPER_300, W100K)
    assert a == b


# -- plates --------------------------------------------------------------------


def test_air_plate_equals_free_space(free_space):
    above = mutual_inductance_above_plate(DEFAULT_GEOMETRY, PlateSample(), W100K)
    assert above.value == free_space.value
    assert delta_L(DEFAULT_GEOMETRY, PlateSample(), W100K).value == 0


def test_copper_lowers_and_ferrite_raises_coupling():
    assert delta_L(DEFAULT_GEOMETRY, COPPER_300, W100K).real < 0
    assert delta_L(DEFAULT_GEOMETRY, PlateSample(0.0, 100.0, 1e-3, 5e-3), W100K).real > 0


def test_lossy_plate_has_non_positive_imaginary_part():
    for f in (1e3, 1e5, 1e6):
        L = mutual_inductance_above_plate(DEFAULT_GEOMETRY, COPPER_300, 2 * math.pi * f)
        assert L.imag <= 0


def test_plate_effect_decays_with_liftoff():
    mags = [abs(delta_L(DEFAULT_GEOMETRY, dataclasses.replace(COPPER_300, liftoff=h), W100K))
            for h in (1e-3, 2e-3, 5e-3, 10e-3)]
    assert all(a >= b for a, b in zip(mags, mags[1:]))


def test_foil_stack_change_shrinks_with_thickness():
    # Sixty-micron foils already screen almost perfectly at 100 kHz; extra
    # thickness moves the eddy currents deeper, so |dL| falls slightly.
    mags = [abs(delta_L(DEFAULT_GEOMETRY, PlateSample(COPPER_CONDUCTIVITY, 1.0, n * 60e-6, 5e-3), W100K))
            for n in (1, 5)]
    assert mags[1] < mags[0]


def test_plate_solve_needs_positive_frequency():
    with pytest.raises(DomainError):
        delta_L(DEFAULT_GEOMETRY, COPPER_300, 0.0)


# -- induced voltage -----------------------------------------------------------


def test_induced_voltage_is_j_omega_l_i(free_space):
    v = induced_voltage(free_space, Excitation(1e5, current=10e-3))
    assert v == pytest.approx(1j * W100K * free_space.real * 10e-3)
    assert induced_voltage(free_space, Excitation(0.0, current=1.0)) == 0
    v2 = induced_voltage(free_space, Excitation(1e5, current=20e-3))
    assert v2 == pytest.approx(2 * v)


def test_voltage_difference_reproduces_mutual_change():
    exc = Excitation(1e5, current=10e-3)
    a = mutual_inductance_above_plate(DEFAULT_GEOMETRY, COPPER_300, W100K)
    b = mutual_inductance_above_plate(DEFAULT_GEOMETRY, dataclasses.replace(COPPER_300, liftoff=8e-3), W100K)
    dv = induced_voltage(a, exc) - induced_voltage(b, exc)
    assert dv == pytest.approx(1j * W100K * (a.value - b.value) * 10e-3, rel=1e-12)


def test_induced_voltage_domain():
    L = ComplexInductance(1e-9, 1e5)
    with pytest.raises(DomainError):
        induced_voltage(L, Excitation(1e5, source_voltage=1.0))
    with pytest.raises(DomainError):
        induced_voltage(L, Excitation(2e5, current=1.0))


# -- filament oracle -----------------------------------------------------------


def test_filament_sum_far_field_dipole():
    a, d = 5e-3, 0.1
    g = CoilPairGeometry(a, a + 1e-6, a, a + 1e-6, 0.0, 1e-7, d, d + 1e-7, 1, 1, 0.0)
    m = neumann_oracle(g, 16, 64, sense=1)
    assert m == pytest.approx(MU_0 * math.pi * a**4 / (2 * d**3), rel=0.02)


def test_filament_sum_symmetric_in_coil_order():
    g = dataclasses.replace(DEFAULT_GEOMETRY, r_p2=12e-3, n2=2)
    assert neumann_oracle(g) == pytest.approx(neumann_oracle(g.swapped()), rel=1e-12)


def test_filament_sum_rejects_small_counts_and_overlap():
    with pytest.raises(DomainError):
        neumann_oracle(DEFAULT_GEOMETRY, 8, 64)
    overlap = dataclasses.replace(DEFAULT_GEOMETRY, w=0.0)
    with pytest.raises(GeometryError):
        neumann_oracle(overlap, 16, 16)
