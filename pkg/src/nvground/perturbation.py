"""Perturbative transition frequencies and misalignment response.

Closed-form expressions for the nuclear lines, organized in two tiers:
the lowest-order formulas in A_perp^2/(D +- gamma_e Bz), and the full
second/fourth-order forms that also carry the transverse-field (Bx^2)
response.  An exact-diagonalization cross-check runs the same transitions
through the Hamiltonian path, in extended precision where the shifts are
in the sub-Hz regime.

The perturbation series expands a Hamiltonian without the transverse
nuclear Zeeman term, so the series-vs-exact validations here diagonalize
that same reduced Hamiltonian (nuclear_transverse=False).  Point-shift
predictions meant to face experiment keep the full Hamiltonian; for f7
the distinction matters, because the dropped term interferes with the
A_perp pathway and scales the misalignment response down by about
gamma_n D / (A_perp gamma_e) ~ 12%.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spin_core import CouplingParams, FieldConfig, IsotopeSpec, StateLabel
from .transitions import RF_PAIRS_N14, RF_PAIRS_N15, TransitionSet, transition_set

# The series in 1/(D - gamma_e Bz) is trusted only this far from the
# ground-state level anti-crossing.
VALIDITY_FACTOR = 50.0


class ValidityMarginError(ValueError):
    """Field too close to the anti-crossing for the perturbative series."""


@dataclass(frozen=True)
class PerturbationContext:
    """Coupling parameters plus field, with F+- = D +- gamma_e Bz cached."""

    params: CouplingParams
    bz: float
    bx: float = 0.0

    @property
    def f_plus(self) -> float:
        return self.params.d + self.params.gamma_e * self.bz

    @property
    def f_minus(self) -> float:
        return self.params.d - self.params.gamma_e * self.bz

    def require_margin(self):
        limit = VALIDITY_FACTOR * abs(self.params.a_perp)
        if min(abs(self.f_minus), abs(self.f_plus)) <= limit:
            raise ValidityMarginError(
                f"|D - gamma_e Bz| = {abs(self.f_minus):.1f} kHz is within "
                f"{VALIDITY_FACTOR} x |A_perp| = {limit:.1f} kHz of the anti-crossing"
            )


@dataclass(frozen=True)
class AngularResponse:
    """Quadratic misalignment law: shift = 0.5 * beta * theta^2 * baseline."""

    beta: float
    baseline_khz: float
    transition: str


@dataclass(frozen=True)
class FieldModel:
    """Nuclear-Zeeman-dominated line: freq = baseline * (1 + fractional)."""

    freq_khz: float
    fractional_correction: float
    baseline_khz: float
    transition: str


def _as_set(freqs: dict[str, float], iso: IsotopeSpec, bz: float, bx: float) -> TransitionSet:
    pairs = dict(RF_PAIRS_N14 if iso.name == "N14" else RF_PAIRS_N15)
    ordered = {}
    for name, (a, b) in pairs.items():
        ordered[name] = (a, b)
    if iso.name == "N14":
        freqs = dict(freqs)
        freqs["fdq"] = freqs["f1"] - freqs["f2"]
        ordered["fdq"] = (StateLabel(0, -1.0), StateLabel(0, 1.0))
    return TransitionSet(frequencies=freqs, pairs=ordered, isotope=iso.name, bz=bz, bx=bx)


def nuclear_freqs_2nd(ctx: PerturbationContext, iso: IsotopeSpec) -> TransitionSet:
    """Lowest-order nuclear frequencies in A_perp^2/F+- at Bx = 0."""
    ctx.require_margin()
    if ctx.bx != 0:
        raise ValueError("lowest-order formulas hold on axis; got Bx != 0")
    p = ctx.params
    fp, fm = ctx.f_plus, ctx.f_minus
    w = p.a_perp * p.a_perp
    if iso.name == "N14":
        q, a = abs(p.q), abs(p.a_par)
        gn = p.gamma_n * ctx.bz
        freqs = {
            "f1": q + gn - w / fm,
            "f2": q - gn - w / fp,
            "f3": q - a + gn,
            "f4": q + a - gn + w / fm,
            "f5": q + a + gn + w / fp,
            "f6": q - a - gn,
        }
    else:
        a = p.a_par
        gn = abs(p.gamma_n) * ctx.bz
        freqs = {
            "f7": gn + (w / 2) * (1 / fm - 1 / fp),
            "f8": a - gn - (w / 2) / fm,
            "f9": a + gn - (w / 2) / fp,
        }
    return _as_set(freqs, iso, ctx.bz, ctx.bx)


def nuclear_freqs_full(ctx: PerturbationContext, iso: IsotopeSpec) -> TransitionSet:
    """Second- plus fourth-order nuclear frequencies, including Bx^2 terms.

    The Bx^2 brackets use magnitudes of Q and A_par in their small
    denominators; they blow up when |Q| approaches |A_par| (14NV) or when
    the nuclear Zeeman splitting vanishes (15NV f7), and these cases raise.
    """
    ctx.require_margin()
    p = ctx.params
    fp, fm = ctx.f_plus, ctx.f_minus
    w = p.a_perp * p.a_perp
    x = (p.gamma_e * ctx.bx) ** 2 / 2
    fp2, fm2 = fp * fp, fm * fm
    sum_inv_sq = (1 / fp + 1 / fm) ** 2
    if iso.name == "N14":
        q, a = abs(p.q), abs(p.a_par)
        gn = p.gamma_n * ctx.bz
        d_lo, d_hi = q - a, q + a
        if x != 0 and (q < 1e-9 or abs(d_lo) < 1e-9 or abs(d_hi) < 1e-9):
            raise ValueError("Q +- A_par too small for the transverse-field terms")
        freqs = {
            "f1": q + gn - w / fm
            - w * (d_lo / fm2 + (2 * q - a) / fp2)
            + x * (w * (3 / q) * sum_inv_sq - a * (1 / fm2 - 1 / fp2)),
            "f2": q - gn - w / fp
            - w * ((2 * q - a) / fm2 + d_lo / fp2)
            + x * (w * (3 / q) * sum_inv_sq + a * (1 / fm2 - 1 / fp2)),
            "f3": q - a + gn
            - w * (2 * q - a) / fm2
            + x * (w * (2 / d_lo + 1 / d_hi) / fm2 + a / fm2),
            "f4": q + a - gn + w / fm
            - w * q / fm2
            + x * (w * (1 / d_lo + 2 / d_hi) / fm2 - a / fm2),
            "f5": q + a + gn + w / fp
            - w * q / fp2
            + x * (w * (1 / d_lo + 2 / d_hi) / fp2 - a / fp2),
            "f6": q - a - gn
            - w * (2 * q - a) / fp2
            + x * (w * (2 / d_lo + 1 / d_hi) / fp2 + a / fp2),
        }
    else:
        a = p.a_par
        gn = abs(p.gamma_n) * ctx.bz
        if x != 0 and (abs(a) < 1e-9 or abs(gn) < 1e-9):
            raise ValueError("A_par or gamma_n Bz too small for the transverse-field terms")
        freqs = {
            "f7": gn
            + (w / 2) * (1 / fm - 1 / fp)
            + (w / 4) * (a / fm2 - a / fp2)
            + (x * ((w / gn) * sum_inv_sq - a * (1 / fm2 - 1 / fp2)) if x != 0 else 0.0),
            "f8": a - gn
            - (w / 2) / fm
            - (w / 4) * (a / fm2)
            + (x * (w / a - a) / fm2 if x != 0 else 0.0),
            "f9": a + gn
            - (w / 2) / fp
            - (w / 4) * (a / fp2)
            + (x * (w / a - a) / fp2 if x != 0 else 0.0),
        }
    return _as_set(freqs, iso, ctx.bz, ctx.bx)


def beta_coefficient(p: CouplingParams, bz: float, transition: str) -> AngularResponse:
    """Quadratic misalignment coefficient for fdq (14NV) or f7 (15NV).

    fdq responds through a second-order cross term of A_par with the
    transverse electron Zeeman coupling; f7 through a fourth-order term in
    A_perp that is resonantly enhanced by the small nuclear splitting.
    """
    ctx = PerturbationContext(params=p, bz=bz)
    ctx.require_margin()
    denom = (p.d * p.d - (p.gamma_e * bz) ** 2) ** 2
    if transition == "fdq":
        beta = -(p.gamma_e / abs(p.gamma_n)) * (
            4 * abs(p.a_par) * p.d * (p.gamma_e * bz) ** 2 / denom
        )
        baseline = 2 * abs(p.gamma_n) * bz
    elif transition == "f7":
        beta = (p.gamma_e / p.gamma_n) ** 2 * (4 * p.a_perp**2 * p.d**2 / denom)
        baseline = abs(p.gamma_n) * bz
    else:
        raise ValueError(f"transition must be 'fdq' or 'f7', got {transition!r}")
    return AngularResponse(beta=beta, baseline_khz=baseline, transition=transition)


def fdq_f7_field_model(p: CouplingParams, bz: float, transition: str) -> FieldModel:
    """Field model of the ms = 0 manifold lines (nuclear Zeeman + A_perp^2)."""
    ctx = PerturbationContext(params=p, bz=bz)
    ctx.require_margin()
    frac = (p.gamma_e / abs(p.gamma_n)) * p.a_perp**2 / (p.d**2 - (p.gamma_e * bz) ** 2)
    if transition == "fdq":
        baseline = 2 * abs(p.gamma_n) * bz
        frac = -frac
    elif transition == "f7":
        baseline = abs(p.gamma_n) * bz
    else:
        raise ValueError(f"transition must be 'fdq' or 'f7', got {transition!r}")
    return FieldModel(
        freq_khz=baseline * (1 + frac),
        fractional_correction=frac,
        baseline_khz=baseline,
        transition=transition,
    )


def exact_transition(
    p: CouplingParams,
    iso: IsotopeSpec,
    bz: float,
    bx: float,
    label: str,
    dtype=np.float64,
    nuclear_transverse: bool = True,
):
    """One named frequency from exact diagonalization (dtype selectable)."""
    ts = transition_set(
        p, FieldConfig(bz=bz, bx=bx), iso, dtype=dtype, nuclear_transverse=nuclear_transverse
    )
    return ts[label]


def exact_angular_shift(
    p: CouplingParams,
    iso: IsotopeSpec,
    bz: float,
    theta_rad: float,
    transition: str,
    dtype=np.longdouble,
    nuclear_transverse: bool = True,
):
    """f(theta) - f(0) at fixed Bz, with Bx = Bz tan(theta).

    Uses extended precision by default: at low field the fdq shift sits
    around 1e-8 kHz, beneath double-precision eigenvalue noise.
    """
    bx = bz * math.tan(theta_rad)
    f_tilted = exact_transition(
        p, iso, bz, bx, transition, dtype=dtype, nuclear_transverse=nuclear_transverse
    )
    f_axial = exact_transition(
        p, iso, bz, 0.0, transition, dtype=dtype, nuclear_transverse=nuclear_transverse
    )
    return f_tilted - f_axial


def exact_beta_estimates(
    p: CouplingParams,
    iso: IsotopeSpec,
    bz: float,
    transition: str,
    thetas_deg=(0.02, 0.05, 0.1),
) -> np.ndarray:
    """Quadratic-law coefficients 2*shift/(theta^2 * baseline) per angle.

    The exact side drops the transverse nuclear Zeeman term, matching the
    Hamiltonian the beta formulas expand.
    """
    baseline = beta_coefficient(p, bz, transition).baseline_khz
    out = []
    for theta_deg in thetas_deg:
        theta = math.radians(theta_deg)
        shift = exact_angular_shift(p, iso, bz, theta, transition, nuclear_transverse=False)
        out.append(float(2 * shift / (theta * theta * baseline)))
    return np.array(out)


def residuals_vs_exact(
    p: CouplingParams,
    iso: IsotopeSpec,
    bz_values,
    bx_values,
    order: str = "full",
) -> dict[str, float]:
    """Max |perturbative - exact| per nuclear line over a field grid (kHz).

    Exact diagonalization runs without the transverse nuclear Zeeman term
    so that the comparison isolates genuine series-truncation error.
    """
    formula = nuclear_freqs_full if order == "full" else nuclear_freqs_2nd
    worst: dict[str, float] = {}
    for bz in bz_values:
        for bx in bx_values:
            ctx = PerturbationContext(params=p, bz=float(bz), bx=float(bx))
            pert = formula(ctx, iso)
            exact = transition_set(
                p, FieldConfig(bz=float(bz), bx=float(bx)), iso, nuclear_transverse=False
            )
            for name in (RF_PAIRS_N14 if iso.name == "N14" else RF_PAIRS_N15):
                resid = abs(pert[name] - exact[name])
                if resid > worst.get(name, 0.0):
                    worst[name] = float(resid)
    return worst
