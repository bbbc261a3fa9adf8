"""Spectral profile of the emitter at finite time (the sinc^2 window).

The profile has unit area for every time, peaks at the transition frequency
with height t/(2*pi), and its zeros (spaced by 2*pi/t around the transition)
are the natural panel boundaries for oscillation-aware quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ZeroBudgetError

# Below this argument sin(x)/x is evaluated by its Taylor series; the x**4
# term keeps the truncation error under 1e-24 at the switch point.
_SINC_SWITCH = 1e-4


@dataclass(frozen=True)
class ProfilePoint:
    """One profile sample: time-valued density at a detuning from the line.

    The value is bounded by the peak height time/(2*pi).
    """

    detuning: float
    time: float
    value: float

    def __post_init__(self):
        if not self.time > 0.0:
            raise ValueError(f"time must be > 0, got {self.time}")
        peak = self.time / (2.0 * math.pi)
        if not 0.0 <= self.value <= peak * (1.0 + 1e-12):
            raise ValueError(f"value {self.value} outside [0, {peak}]")

    @classmethod
    def sample(cls, detuning, time):
        return cls(detuning=float(detuning), time=float(time),
                   value=spectral_profile(detuning, time))


def _sinc(x):
    """sin(x)/x with sinc(0) = 1, stable for arbitrarily small arguments."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SINC_SWITCH
    xs = np.where(small, 0.0, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(xs) / xs
    x2 = x * x
    series = 1.0 - x2 / 6.0 + (x2 * x2) / 120.0
    return np.where(small, series, direct)


def spectral_profile(detuning, t):
    """Evaluate the time-t spectral profile at the given detuning.

    Parameters
    ----------
    detuning : float or array_like
        Frequency offset from the transition frequency (may be negative).
    t : float
        Elapsed time, > 0.

    Returns
    -------
    float or ndarray
        (t / 2*pi) * sinc(detuning * t / 2)**2, carrying units of time.
    """
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    delta = np.asarray(detuning, dtype=float)
    s = _sinc(0.5 * delta * t)
    out = (t / (2.0 * math.pi)) * s * s
    if np.ndim(detuning) == 0:
        return float(out)
    return out


def kernel_zeros(t, omega0, omega_max, max_zeros=None):
    """Frequencies in [0, omega_max] where the profile vanishes, plus omega0.

    The zeros sit at omega0 +/- 2*pi*k/t for integer k >= 1. omega0 itself
    is included as a panel boundary because the other factor of the decay
    integrand can vary fastest there. A zero landing exactly at 0 or at
    omega_max is kept.

    Returns a strictly increasing float array. Raises ZeroBudgetError if
    the listing would exceed ``max_zeros`` entries.
    """
    if not t > 0.0:
        raise ValueError(f"t must be > 0, got {t}")
    if not omega_max > 0.0:
        raise ValueError(f"omega_max must be > 0, got {omega_max}")
    spacing = 2.0 * math.pi / t
    n_left = int(math.floor(omega0 / spacing + 1e-12)) if omega0 > 0 else 0
    n_right = max(0, int(math.floor((omega_max - omega0) / spacing + 1e-12)))
    total = n_left + n_right + 1
    if max_zeros is not None and total > max_zeros:
        raise ZeroBudgetError(
            f"{total} panel boundaries requested, cap is {max_zeros}"
        )
    left = omega0 - spacing * np.arange(n_left, 0, -1, dtype=float)
    right = omega0 + spacing * np.arange(1, n_right + 1, dtype=float)
    out = np.concatenate([left, [float(omega0)], right])
    # guard against representation noise at the domain edges
    np.clip(out, 0.0, omega_max, out=out)
    return out
