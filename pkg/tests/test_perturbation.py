import math

import numpy as np
import pytest

from nvground.presets import TABLE3, params_at, thermal_presets
from nvground.spin_core import N14, N15, CouplingParams, FieldConfig
from nvground.perturbation import (
    PerturbationContext,
    ValidityMarginError,
    beta_coefficient,
    exact_angular_shift,
    exact_beta_estimates,
    fdq_f7_field_model,
    nuclear_freqs_2nd,
    nuclear_freqs_full,
    residuals_vs_exact,
)
from nvground.transitions import transition_set

P14 = params_at("N14")
P15 = params_at("N15")


def ctx14(bz, bx=0.0):
    return PerturbationContext(params=P14, bz=bz, bx=bx)


def ctx15(bz, bx=0.0):
    return PerturbationContext(params=P15, bz=bz, bx=bx)


def test_context_and_margin():
    c = ctx14(470.0)
    assert c.f_plus == pytest.approx(P14.d + P14.gamma_e * 470.0)
    assert c.f_minus == pytest.approx(P14.d - P14.gamma_e * 470.0)
    with pytest.raises(ValidityMarginError):
        ctx14(1020.0).require_margin()


def test_second_order_f2_matches_table():
    ts = nuclear_freqs_2nd(ctx14(470.0), N14)
    q, fp = abs(P14.q), P14.d + P14.gamma_e * 470.0
    closed = q - P14.gamma_n * 470.0 - P14.a_perp**2 / fp
    assert ts["f2"] == pytest.approx(closed, rel=1e-14)
    assert ts["f2"] == pytest.approx(TABLE3["f2"].freq_khz, abs=0.05)


def test_second_order_requires_on_axis():
    with pytest.raises(ValueError):
        nuclear_freqs_2nd(ctx14(470.0, bx=0.5), N14)


def test_aperp_zero_reduces_to_exact():
    p0 = CouplingParams(d=P14.d, q=P14.q, a_par=P14.a_par, a_perp=0.0, gamma_n=P14.gamma_n)
    ctx = PerturbationContext(params=p0, bz=470.0)
    pert = nuclear_freqs_2nd(ctx, N14)
    exact = transition_set(p0, FieldConfig(bz=470.0), N14)
    for label in ("f1", "f2", "f3", "f4", "f5", "f6"):
        assert pert[label] == pytest.approx(exact[label], abs=1e-9)


@pytest.mark.parametrize("bz", [100.0, 300.0, 470.0])
def test_second_order_gap_to_exact_n14(bz):
    # The lowest-order formulas omit A_perp^2 (Q, A_par)/F^2 cross terms;
    # the worst line sits ~10 Hz off at 100 G growing to ~23 Hz at 470 G.
    worst = residuals_vs_exact(P14, N14, [bz], [0.0], order="2nd")
    bound_khz = {100.0: 0.011, 300.0: 0.016, 470.0: 0.025}[bz]
    assert max(worst.values()) < bound_khz


def test_second_order_gap_to_exact_n15():
    worst = residuals_vs_exact(P15, N15, [300.0, 470.0, 600.0], [0.0], order="2nd")
    assert max(worst.values()) < 0.01


def test_full_formula_f3_row_structure():
    # at Bx = 0 the full f3 is the lowest-order value minus
    # A_perp^2 (2|Q| - |A_par|)/F-^2
    ctx = ctx14(470.0)
    full = nuclear_freqs_full(ctx, N14)
    second = nuclear_freqs_2nd(ctx, N14)
    q, a = abs(P14.q), abs(P14.a_par)
    fm = P14.d - P14.gamma_e * 470.0
    assert full["f3"] == pytest.approx(second["f3"] - P14.a_perp**2 * (2 * q - a) / fm**2, rel=1e-12)


def test_full_tracks_exact_within_tripwire():
    bz_grid = np.linspace(300.0, 600.0, 7)
    bx_grid = np.linspace(0.0, 1.0, 5)
    assert max(residuals_vs_exact(P14, N14, bz_grid, bx_grid).values()) < 0.020
    assert max(residuals_vs_exact(P15, N15, bz_grid, bx_grid).values()) < 0.020


def test_agreement_hierarchy_at_bx0():
    for iso, p in ((N14, P14), (N15, P15)):
        for bz in np.linspace(100.0, 600.0, 6):
            full = residuals_vs_exact(p, iso, [bz], [0.0], order="full")
            second = residuals_vs_exact(p, iso, [bz], [0.0], order="2nd")
            for label in full:
                assert full[label] <= second[label] + 1e-9


def test_aperp_zero_full_residual_floor():
    # with A_perp = 0 only the expansion of the electron Bx coupling in
    # A_par/F remains; both isotopes sit below 0.2 Hz
    p14_0 = CouplingParams(d=P14.d, q=P14.q, a_par=P14.a_par, a_perp=0.0, gamma_n=P14.gamma_n)
    p15_0 = CouplingParams(d=P15.d, q=0.0, a_par=P15.a_par, a_perp=0.0, gamma_n=P15.gamma_n)
    bz_grid = np.linspace(300.0, 600.0, 4)
    bx_grid = [0.0, 0.5, 1.0]
    assert max(residuals_vs_exact(p14_0, N14, bz_grid, bx_grid).values()) < 2e-4
    assert max(residuals_vs_exact(p15_0, N15, bz_grid, bx_grid).values()) < 2e-4


def test_point_shift_fdq_480():
    shift_hz = 1e3 * float(exact_angular_shift(P14, N14, 480.0, math.radians(0.1), "fdq"))
    assert shift_hz == pytest.approx(-5.0, abs=1.0)


def test_point_shift_f7_480():
    shift_hz = 1e3 * float(exact_angular_shift(P15, N15, 480.0, math.radians(0.1), "f7"))
    assert shift_hz == pytest.approx(130.0, rel=0.15)
    assert shift_hz > 0


def test_beta_values_match_quoted():
    # quoted values hold to half a unit in their last printed digit
    assert beta_coefficient(P14, 480.0, "fdq").beta == pytest.approx(-9.9, abs=0.05)
    assert beta_coefficient(P14, 10.0, "fdq").beta == pytest.approx(-0.003, abs=0.0005)
    assert beta_coefficient(P15, 480.0, "f7").beta == pytest.approx(460.0, abs=5.0)
    assert beta_coefficient(P15, 10.0, "f7").beta == pytest.approx(280.0, abs=5.0)


def test_beta_baselines_and_errors():
    r = beta_coefficient(P14, 480.0, "fdq")
    assert r.baseline_khz == pytest.approx(2 * P14.gamma_n * 480.0)
    r7 = beta_coefficient(P15, 480.0, "f7")
    assert r7.baseline_khz == pytest.approx(abs(P15.gamma_n) * 480.0)
    with pytest.raises(ValueError):
        beta_coefficient(P14, 480.0, "f1")
    with pytest.raises(ValidityMarginError):
        beta_coefficient(P14, 1023.0, "fdq")


@pytest.mark.parametrize(
    "iso,p,bz,transition",
    [
        (N14, P14, 480.0, "fdq"),
        (N14, P14, 10.0, "fdq"),
        (N15, P15, 480.0, "f7"),
        (N15, P15, 10.0, "f7"),
    ],
)
def test_quadratic_angular_law(iso, p, bz, transition):
    beta = beta_coefficient(p, bz, transition).beta
    estimates = exact_beta_estimates(p, iso, bz, transition)
    assert np.all(np.abs(estimates / beta - 1) < 0.05)


def test_field_model_fdq_value():
    m = fdq_f7_field_model(P14, 470.0, "fdq")
    exact = transition_set(P14, FieldConfig(bz=470.0), N14)
    assert m.freq_khz == pytest.approx(exact["fdq"], abs=0.02)
    assert m.freq_khz == pytest.approx(286.299, abs=0.03)
    assert m.fractional_correction < 0


def test_field_model_f7_fractional():
    m = fdq_f7_field_model(P15, 470.0, "f7")
    assert m.fractional_correction == pytest.approx(1.35e-2, rel=0.01)


def test_field_model_zero_field_limit():
    # the fractional correction tends to +-|gamma_e/gamma_n| A_perp^2/D^2
    m1 = fdq_f7_field_model(P15, 1.0, "f7")
    m0_expected = (P15.gamma_e / abs(P15.gamma_n)) * P15.a_perp**2 / P15.d**2
    assert m1.fractional_correction == pytest.approx(m0_expected, rel=1e-5)
    mdq = fdq_f7_field_model(P14, 1.0, "fdq")
    assert mdq.fractional_correction == pytest.approx(
        -(P14.gamma_e / P14.gamma_n) * P14.a_perp**2 / P14.d**2, rel=1e-5
    )


def _model_slope(iso_name, transition, bz, dt=0.5):
    models = thermal_presets(iso_name)
    out = []
    for t in (297.0 - dt, 297.0 + dt):
        p = params_at(iso_name, t)
        out.append(fdq_f7_field_model(p, bz, transition).freq_khz)
    return 1e3 * (out[1] - out[0]) / (2 * dt)


def test_field_model_temperature_slopes():
    # differentiating the closed forms reproduces the tabulated slopes
    assert _model_slope("N14", "fdq", 470.0) == pytest.approx(0.149, abs=0.01)
    assert _model_slope("N15", "f7", 470.0) == pytest.approx(-0.31, abs=0.03)


def test_full_formula_guards():
    degenerate = CouplingParams(d=P14.d, q=-2165.19, a_par=-2165.19, a_perp=-2635.0, gamma_n=P14.gamma_n)
    with pytest.raises(ValueError):
        nuclear_freqs_full(PerturbationContext(params=degenerate, bz=470.0, bx=0.5), N14)
