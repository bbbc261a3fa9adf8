"""Reservoir coupling spectrum (RSC) models and derived scalar quantities.

Two model families are supported: a power-law broadband spectrum with a
high-frequency cutoff, and a Breit-Wigner (Lorentzian) narrowband spectrum.
All frequencies are angular frequencies in one consistent user-chosen unit;
rates are angular-frequency valued (no hbar anywhere).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

__all__ = [
    "ExponentialCutoff",
    "PowerLorentzCutoff",
    "CutoffKind",
    "BroadbandReservoir",
    "NarrowbandReservoir",
    "EmitterSpec",
    "evaluate_rsc",
    "golden_rule_rate",
    "golden_rule_rate_approx",
    "zeno_slope",
    "cutoff_constant",
]


@dataclass(frozen=True)
class ExponentialCutoff:
    """exp(-omega/omega_x) high-frequency roll-off."""

    def profile(self, x):
        """Roll-off factor at x = omega/omega_x."""
        return np.exp(-np.asarray(x, dtype=float))


@dataclass(frozen=True)
class PowerLorentzCutoff:
    """[1 + (omega/omega_x)**2]**(-mu) high-frequency roll-off.

    mu > 1/2 keeps the profile integrable. Values below 4 fall outside the
    range typical of atomic transitions and only trigger a warning.
    """

    mu: float

    def __post_init__(self):
        if not self.mu > 0.5:
            raise ValueError(f"mu must be > 1/2, got {self.mu}")
        if self.mu < 4.0:
            warnings.warn(
                f"PowerLorentzCutoff with mu={self.mu} < 4 is outside the "
                "usual physical range",
                stacklevel=3,
            )

    def profile(self, x):
        x = np.asarray(x, dtype=float)
        return (1.0 + x * x) ** (-self.mu)


CutoffKind = ExponentialCutoff | PowerLorentzCutoff


@dataclass(frozen=True)
class BroadbandReservoir:
    """Power-law RSC: coupling * omega * (omega/omega_x)**(eta-1) * F(omega).

    Attributes
    ----------
    coupling : float
        Dimensionless coupling strength (> 0, weak-coupling regime expected).
    eta : float
        Spectral exponent, >= 0. Values > 1 produce an off-resonant tail
        contribution to the decay rate.
    omega_x : float
        Cutoff angular frequency, > 0.
    cutoff : ExponentialCutoff or PowerLorentzCutoff
        High-frequency roll-off shape.
    """

    coupling: float
    eta: float
    omega_x: float
    cutoff: CutoffKind = field(default_factory=ExponentialCutoff)

    def __post_init__(self):
        if not self.coupling > 0.0:
            raise ValueError(f"coupling must be > 0, got {self.coupling}")
        if not self.eta >= 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta}")
        if not self.omega_x > 0.0:
            raise ValueError(f"omega_x must be > 0, got {self.omega_x}")


@dataclass(frozen=True)
class NarrowbandReservoir:
    """Breit-Wigner RSC: (kappa/pi) * g**2 / ((omega-omega_c)**2 + kappa**2).

    Attributes
    ----------
    g : float
        Coupling strength (angular frequency), > 0.
    kappa : float
        Half-width of the resonance (angular frequency), > 0.
    omega_c : float
        Center frequency of the resonance, > 0.
    """

    g: float
    kappa: float
    omega_c: float

    def __post_init__(self):
        if not self.g > 0.0:
            raise ValueError(f"g must be > 0, got {self.g}")
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be > 0, got {self.kappa}")
        if not self.omega_c > 0.0:
            raise ValueError(f"omega_c must be > 0, got {self.omega_c}")

    @property
    def quality_factor(self):
        return self.omega_c / (2.0 * self.kappa)


@dataclass(frozen=True)
class EmitterSpec:
    """Two-level emitter with transition frequency omega0 > 0."""

    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0.0:
            raise ValueError(f"omega0 must be > 0, got {self.omega0}")


def evaluate_rsc(reservoir, omega):
    """Reservoir coupling spectrum at omega (scalar or array), omega >= 0.

    Returns a value (or array) in frequency units, nonnegative and
    continuous in omega.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0.0):
        raise ValueError("omega must be >= 0")
    if isinstance(reservoir, BroadbandReservoir):
        x = w / reservoir.omega_x
        # coupling * omega * (omega/omega_x)**(eta-1) rewritten with a single
        # power so that eta < 1 stays finite at omega = 0
        out = reservoir.coupling * reservoir.omega_x * x**reservoir.eta
        out = out * reservoir.cutoff.profile(x)
    elif isinstance(reservoir, NarrowbandReservoir):
        d = w - reservoir.omega_c
        out = (reservoir.kappa / math.pi) * reservoir.g**2 / (d * d + reservoir.kappa**2)
    else:
        raise TypeError(f"unsupported reservoir type: {type(reservoir).__name__}")
    if np.ndim(omega) == 0:
        return float(out)
    return out


def golden_rule_rate(reservoir, emitter):
    """Long-time decay rate 2*pi*R(omega0), exact for the given model."""
    return 2.0 * math.pi * evaluate_rsc(reservoir, emitter.omega0)


def golden_rule_rate_approx(reservoir, emitter):
    """Broadband golden-rule rate with the cutoff factor dropped.

    2*pi * coupling * omega0 * (omega0/omega_x)**(eta-1); this is the rate
    the closed-form regime expressions are written in terms of. Its ratio
    to golden_rule_rate is exactly 1/F(omega0).
    """
    if not isinstance(reservoir, BroadbandReservoir):
        raise TypeError("golden_rule_rate_approx is defined for broadband reservoirs only")
    w0 = emitter.omega0
    return (
        2.0
        * math.pi
        * reservoir.coupling
        * w0
        * (w0 / reservoir.omega_x) ** (reservoir.eta - 1.0)
    )


def zeno_slope(reservoir, rel_tol=1e-10):
    """Short-time rate slope A = integral of R over [0, inf).

    Closed forms are used where available (exponential-cutoff broadband and
    narrowband); the power-Lorentz broadband case falls back to numeric
    quadrature and raises ConvergenceError if the requested relative
    tolerance cannot be certified.
    """
    if isinstance(reservoir, NarrowbandReservoir):
        k, wc = reservoir.kappa, reservoir.omega_c
        return reservoir.g**2 * (0.5 + math.atan(wc / k) / math.pi)
    if not isinstance(reservoir, BroadbandReservoir):
        raise TypeError(f"unsupported reservoir type: {type(reservoir).__name__}")
    lam, eta, wx = reservoir.coupling, reservoir.eta, reservoir.omega_x
    if isinstance(reservoir.cutoff, ExponentialCutoff):
        return lam * math.gamma(eta + 1.0) * wx**2
    mu = reservoir.cutoff.mu
    if not mu > 0.5 * (eta + 1.0):
        raise ValueError(
            f"R is not integrable: power-Lorentz cutoff needs mu > (eta+1)/2, "
            f"got mu={mu}, eta={eta}"
        )
    scale = lam * wx**2
    val, err = integrate.quad(
        lambda x: x**eta * (1.0 + x * x) ** (-mu),
        0.0,
        np.inf,
        epsabs=0.0,
        epsrel=rel_tol * 0.1,
        limit=200,
    )
    if not math.isfinite(val) or err > rel_tol * abs(val):
        from .errors import ConvergenceError

        raise ConvergenceError(
            f"zeno_slope quadrature did not reach rel_tol={rel_tol} "
            f"(value={val}, error={err})"
        )
    return scale * val


def cutoff_constant(cutoff):
    """Dimensionless profile mass C = (1/omega_x) * integral of F over [0, inf).

    Exponential: exactly 1. Power-Lorentz: the exact Beta-function value
    (sqrt(pi)/2) * Gamma(mu - 1/2) / Gamma(mu).
    """
    if isinstance(cutoff, ExponentialCutoff):
        return 1.0
    if isinstance(cutoff, PowerLorentzCutoff):
        mu = cutoff.mu
        return 0.5 * math.sqrt(math.pi) * math.gamma(mu - 0.5) / math.gamma(mu)
    raise TypeError(f"unsupported cutoff type: {type(cutoff).__name__}")
