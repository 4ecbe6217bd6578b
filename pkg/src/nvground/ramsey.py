"""Ramsey fringe synthesis and detuning extraction.

A two-pulse free-precession signal oscillates at the detuning of the
drive from the true transition, delta = f_rf - f, damped on the T2*
scale.  Fitting the fringes therefore measures |delta|; the caller
resolves the sign, e.g. by stepping f_rf and watching the fitted delta
move.  Detunings are kHz, times are seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .optimize import FitConvergenceError, OptimOptions, nelder_mead

# Signal model: offset + amp * exp(-tau/T2*) * cos(2 pi delta tau + phase)


class NonIdentifiableTraceError(RuntimeError):
    """The trace carries no resolvable oscillation."""


class UndersampledTraceError(ValueError):
    """Sampling too sparse (or span too short) for the expected detuning."""


@dataclass(frozen=True)
class RamseyTrace:
    times: np.ndarray  # seconds, strictly increasing
    signal: np.ndarray  # fluorescence contrast, dimensionless
    noise_sigma: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.signal, dtype=float)
        if t.ndim != 1 or t.shape != s.shape:
            raise ValueError("times and signal must be 1-d arrays of equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "signal", s)


@dataclass(frozen=True)
class RamseyFit:
    delta_khz: float
    t2_star_s: float
    amplitude: float
    phase: float
    offset: float
    rms_residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        if self.t2_star_s <= 0:
            raise ValueError("T2* must be positive")


def _model(times: np.ndarray, delta_khz, t2_star, amp, phase, offset) -> np.ndarray:
    decay = np.exp(-times / t2_star) if np.isfinite(t2_star) else 1.0
    return offset + amp * decay * np.cos(2 * math.pi * (delta_khz * 1e3) * times + phase)


def synthesize(
    delta_khz: float,
    t2_star_s: float,
    amp: float,
    phase: float,
    offset: float,
    times,
    noise_sigma: float = 0.0,
    rng_seed: int = 0,
) -> RamseyTrace:
    """Seeded synthetic fringe trace; identical seeds give identical traces."""
    if t2_star_s <= 0:
        raise ValueError("T2* must be positive")
    times = np.asarray(times, dtype=float)
    signal = _model(times, delta_khz, t2_star_s, amp, phase, offset)
    if noise_sigma:
        rng = np.random.default_rng(rng_seed)
        signal = signal + rng.normal(scale=noise_sigma, size=times.shape)
    return RamseyTrace(times=times, signal=signal, noise_sigma=noise_sigma)


def initial_guess(trace: RamseyTrace) -> RamseyFit:
    """Coarse FFT-peak starting point for the fringe fit."""
    t, s = trace.times, trace.signal
    offset = float(np.mean(s))
    detrended = s - offset
    dt = float(np.median(np.diff(t)))
    spectrum = np.fft.rfft(detrended)
    freqs_hz = np.fft.rfftfreq(len(t), d=dt)
    mags = np.abs(spectrum)
    mags[0] = 0.0
    peak = int(np.argmax(mags))
    others = np.delete(mags, peak)
    floor = float(np.median(others))
    if peak == 0 or mags[peak] <= max(3.0 * floor, 1e-12 * (1 + abs(offset))):
        raise NonIdentifiableTraceError(
            "no dominant oscillation peak in the trace spectrum"
        )
    delta_khz = freqs_hz[peak] / 1e3
    phase = float(np.angle(spectrum[peak]))
    amp = float(2 * mags[peak] / len(t))
    span = float(t[-1] - t[0])
    return RamseyFit(
        delta_khz=float(delta_khz),
        t2_star_s=span / 2,
        amplitude=amp,
        phase=phase,
        offset=offset,
    )


def _canonicalize(delta, t2, amp, phase, offset):
    # cos is even in (delta, phase) jointly; amp sign folds into phase.
    if amp < 0:
        amp, phase = -amp, phase + math.pi
    if delta < 0:
        delta, phase = -delta, -phase
    phase = math.remainder(phase, 2 * math.pi)
    return delta, t2, amp, phase, offset


def fit_fringes(
    trace: RamseyTrace,
    guess: RamseyFit | None = None,
    options: OptimOptions | None = None,
) -> RamseyFit:
    """Least-squares fringe fit for (delta, T2*, amp, phase, offset).

    Requires at least 3 oscillation periods in the trace span and 4
    samples per period at the guessed detuning.
    """
    if guess is None:
        guess = initial_guess(trace)
    t, s = trace.times, trace.signal
    span = float(t[-1] - t[0])
    f_hz = guess.delta_khz * 1e3
    if f_hz <= 0:
        raise NonIdentifiableTraceError("guess detuning must be positive")
    if span * f_hz < 3.0:
        raise UndersampledTraceError(
            f"trace spans {span * f_hz:.2f} periods at {guess.delta_khz} kHz; need >= 3"
        )
    if float(np.median(np.diff(t))) > 1.0 / (4.0 * f_hz):
        raise UndersampledTraceError(
            f"fewer than 4 samples per period at {guess.delta_khz} kHz"
        )

    big = 1e300

    def objective(x):
        delta, t2, amp, phase, offset = x
        if t2 <= 0 or delta <= 0:
            return big
        r = _model(t, delta, t2, amp, phase, offset) - s
        return float(r @ r)

    x0 = np.array(
        [guess.delta_khz, guess.t2_star_s, guess.amplitude, guess.phase, guess.offset]
    )
    result = nelder_mead(objective, x0, options)
    if not result.converged:
        raise FitConvergenceError(
            f"fringe fit did not converge in {result.iterations} iterations"
        )
    delta, t2, amp, phase, offset = _canonicalize(*result.x_min)
    rms = math.sqrt(objective((delta, t2, amp, phase, offset)) / len(t))
    return RamseyFit(
        delta_khz=float(delta),
        t2_star_s=float(t2),
        amplitude=float(amp),
        phase=float(phase),
        offset=float(offset),
        rms_residual=rms,
        iterations=result.iterations,
    )


def frequency_from_detuning(f_rf_khz: float, delta_khz: float, sign: int = 1) -> float:
    """Resolve the transition frequency: f = f_rf - sign * delta.

    ``sign`` settles the magnitude ambiguity of the fitted detuning; a
    two-point f_rf step determines it experimentally.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return f_rf_khz - sign * delta_khz
