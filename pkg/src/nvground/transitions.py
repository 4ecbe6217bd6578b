"""Eigenstate labeling and named transition frequencies.

Eigenstates are tagged with the (ms, mI) basis label of their dominant
component, which realizes the standard transition naming: f1..f6 for the
14NV nuclear lines, f7..f9 for 15NV, fplus_*/fminus_* for the electron
(MW) lines, and fdq = f1 - f2 for the 14NV double-quantum transition.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .eigensolve import EigenSystem, eigh
from .spin_core import (
    CouplingParams,
    FieldConfig,
    HamiltonianMatrix,
    IsotopeSpec,
    StateLabel,
    build_hamiltonian,
)

# Below this squared-overlap threshold (or on label collisions) the
# dominant-component assignment is rejected as ambiguous.
OVERLAP_THRESHOLD = 0.6


class AmbiguousLabelingError(RuntimeError):
    """Eigenvector-to-basis-label assignment is not clean at this field."""


def format_mi(mi: float) -> str:
    """Render a nuclear projection as +1, 0, -1, +1/2 or -1/2."""
    twice = round(2 * mi)
    if twice % 2 == 0:
        n = twice // 2
        return f"+{n}" if n > 0 else str(n)
    return f"+{twice}/2" if twice > 0 else f"{twice}/2"


def mw_label(sign: int, mi: float) -> str:
    return ("fplus_" if sign > 0 else "fminus_") + format_mi(mi)


# Level-pair assignments behind each named line (validated against the
# f1..f9 operating-field values of the source data).
RF_PAIRS_N14 = {
    "f1": (StateLabel(0, 0.0), StateLabel(0, 1.0)),
    "f2": (StateLabel(0, 0.0), StateLabel(0, -1.0)),
    "f3": (StateLabel(-1, 0.0), StateLabel(-1, 1.0)),
    "f4": (StateLabel(-1, 0.0), StateLabel(-1, -1.0)),
    "f5": (StateLabel(1, 0.0), StateLabel(1, 1.0)),
    "f6": (StateLabel(1, 0.0), StateLabel(1, -1.0)),
}
RF_PAIRS_N15 = {
    "f7": (StateLabel(0, -0.5), StateLabel(0, 0.5)),
    "f8": (StateLabel(-1, 0.5), StateLabel(-1, -0.5)),
    "f9": (StateLabel(1, 0.5), StateLabel(1, -0.5)),
}

RF_LABELS = {"N14": tuple(RF_PAIRS_N14), "N15": tuple(RF_PAIRS_N15)}


def rf_pairs(iso: IsotopeSpec) -> dict[str, tuple[StateLabel, StateLabel]]:
    return dict(RF_PAIRS_N14 if iso.name == "N14" else RF_PAIRS_N15)


def mw_pairs(iso: IsotopeSpec) -> dict[str, tuple[StateLabel, StateLabel]]:
    i = iso.nuclear_spin
    mis = [i - k for k in range(round(2 * i + 1))]
    out: dict[str, tuple[StateLabel, StateLabel]] = {}
    for mi in mis:
        out[mw_label(+1, mi)] = (StateLabel(1, mi), StateLabel(0, mi))
        out[mw_label(-1, mi)] = (StateLabel(-1, mi), StateLabel(0, mi))
    return out


def known_labels(iso: IsotopeSpec) -> tuple[str, ...]:
    labels = list(RF_LABELS[iso.name]) + list(mw_pairs(iso))
    if iso.name == "N14":
        labels.append("fdq")
    return tuple(labels)


@dataclass(frozen=True)
class LabeledLevel:
    """One eigenlevel with its dominant basis label and squared overlap."""

    label: StateLabel
    energy: float
    overlap: float


@dataclass(frozen=True)
class TransitionSet:
    """Named transition frequencies (kHz) at one field point.

    ``pairs`` records the (upper, lower) state labels behind each entry,
    upper meaning the higher-energy level.
    """

    frequencies: Mapping[str, float]
    pairs: Mapping[str, tuple[StateLabel, StateLabel]]
    isotope: str
    bz: float
    bx: float

    def __getitem__(self, label: str) -> float:
        return self.frequencies[label]

    def __contains__(self, label: str) -> bool:
        return label in self.frequencies


def label_states(
    es: EigenSystem,
    labels: tuple[StateLabel, ...],
    threshold: float = OVERLAP_THRESHOLD,
) -> tuple[LabeledLevel, ...]:
    """Assign each eigenvector the basis label of its largest squared component.

    Raises AmbiguousLabelingError when any overlap falls below ``threshold``
    or two eigenvectors claim the same label, which happens near level
    anti-crossings (gamma_e * Bz approaching D).
    """
    weights = es.vectors * es.vectors
    out = []
    claimed: dict[StateLabel, int] = {}
    for j in range(weights.shape[1]):
        k = int(np.argmax(weights[:, j]))
        overlap = float(weights[k, j])
        label = labels[k]
        if overlap < threshold:
            raise AmbiguousLabelingError(
                f"eigenstate {j} has max squared overlap {overlap:.3f} < "
                f"{threshold} (closest label {label})"
            )
        if label in claimed:
            raise AmbiguousLabelingError(
                f"eigenstates {claimed[label]} and {j} both map to label {label}"
            )
        claimed[label] = j
        out.append(LabeledLevel(label=label, energy=es.values[j], overlap=overlap))
    return tuple(out)


def level_energies(h: HamiltonianMatrix) -> dict[StateLabel, float]:
    """Diagonalize and map each basis label to its eigenenergy (kHz)."""
    es = eigh(h.matrix)
    levels = label_states(es, h.basis_labels)
    return {lv.label: lv.energy for lv in levels}


def transition_set(
    p: CouplingParams,
    f: FieldConfig,
    iso: IsotopeSpec,
    dtype=np.float64,
    nuclear_transverse: bool = True,
) -> TransitionSet:
    """All named transitions from exact diagonalization at one field point."""
    h = build_hamiltonian(p, f, iso, dtype=dtype, nuclear_transverse=nuclear_transverse)
    try:
        energy = level_energies(h)
    except AmbiguousLabelingError as err:
        raise AmbiguousLabelingError(
            f"at Bz = {f.bz} G, Bx = {f.bx} G ({iso.name}): {err}"
        ) from err
    pair_map = rf_pairs(iso)
    pair_map.update(mw_pairs(iso))
    freqs: dict[str, float] = {}
    pairs: dict[str, tuple[StateLabel, StateLabel]] = {}
    for name, (a, b) in pair_map.items():
        ea, eb = energy[a], energy[b]
        if ea >= eb:
            freqs[name], pairs[name] = ea - eb, (a, b)
        else:
            freqs[name], pairs[name] = eb - ea, (b, a)
    if iso.name == "N14":
        freqs["fdq"] = freqs["f1"] - freqs["f2"]
        # fdq connects the two outer mI levels of the ms = 0 manifold
        lo = StateLabel(0, 1.0) if energy[StateLabel(0, 1.0)] < energy[StateLabel(0, -1.0)] else StateLabel(0, -1.0)
        hi = StateLabel(0, -1.0) if lo == StateLabel(0, 1.0) else StateLabel(0, 1.0)
        pairs["fdq"] = (hi, lo)
    return TransitionSet(frequencies=freqs, pairs=pairs, isotope=iso.name, bz=f.bz, bx=f.bx)


def isotopic_d_shift(fplus14: float, fminus14: float, fplus15: float, fminus15: float) -> float:
    """Zero-field-splitting difference from same-mI MW line centers (kHz)."""
    values = (fplus14, fminus14, fplus15, fminus15)
    if not all(np.isfinite(v) for v in values):
        raise ValueError("line centers must be finite")
    return (fplus15 + fminus15) / 2 - (fplus14 + fminus14) / 2


def ratio_estimators(ts: TransitionSet, mw: Mapping[str, float] | None = None) -> dict[str, float]:
    """Closed-form parameter estimates from linear combinations of 14NV lines.

    Returns gamma_ratio = (fplus(+1) - fminus(+1) + f5 - f3)/(f3 - f6),
    gamma_n_bz = (f3 - f6)/2, q_abs = mean of f1..f6, and
    a_par_abs = (f1 + f2 - 2 f3 + f4 + f5 - 2 f6)/6.  ``mw`` may override
    the electron-line values (e.g. with measured ones).
    """
    if ts.isotope != "N14":
        raise ValueError("ratio estimators are defined for the N14 line set")
    f = dict(ts.frequencies)
    if mw:
        f.update(mw)
    f1, f2, f3, f4, f5, f6 = (f[k] for k in ("f1", "f2", "f3", "f4", "f5", "f6"))
    denom = f3 - f6
    if denom == 0:
        raise ZeroDivisionError("f3 - f6 vanishes; gamma_n Bz not resolvable")
    return {
        "gamma_ratio": (f["fplus_+1"] - f["fminus_+1"] + f5 - f3) / denom,
        "gamma_n_bz": denom / 2,
        "q_abs": (f1 + f2 + f3 + f4 + f5 + f6) / 6,
        "a_par_abs": (f1 + f2 - 2 * f3 + f4 + f5 - 2 * f6) / 6,
    }
