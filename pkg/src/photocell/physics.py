"""Model parameters, the coupled-donor eigensystem and bath occupations.

Conventions
-----------
- Energies and rates are in eV with hbar = 1, so one time unit is
  hbar/eV (about 0.6582 fs).
- The ground state ``b`` is the energy reference; only gaps enter the
  kinetics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Optional

#: Boltzmann constant in eV/K.
K_B = 8.617333e-5


class InvalidParameterError(ValueError):
    """A model parameter violates its physical constraint."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ModelParams:
    """Level energies, rates and temperature of the photocell.

    Defaults are the reference parameter set at its operating point
    (total transfer rate 12 meV, bright-dark relaxation 25 meV).

    ``n_h_override`` fixes all photon occupations (concentrated sunlight).
    Set it to ``None`` to draw the photon occupations from the Planck
    distribution at ``T_a`` instead, which puts every bath at one
    temperature.
    """

    E1: float = 1.8
    E2: float = 1.8
    E_alpha: float = 1.6
    E_beta: float = 0.2
    E_b: float = 0.0
    J12: float = 0.015
    gamma_1h: float = 0.62e-6
    gamma_2h: float = 0.62e-6
    gamma_1c: float = 6e-3
    gamma_2c: float = 6e-3
    gamma_x: float = 0.025
    Gamma: float = 0.124
    Gamma_c: float = 0.0248
    T_a: float = 300.0
    n_h_override: Optional[float] = 60000.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if not math.isfinite(value):
                raise InvalidParameterError(f.name, f"must be finite, got {value!r}")
        for name in RATE_FIELDS + ("J12",):
            if getattr(self, name) < 0:
                raise InvalidParameterError(name, f"must be >= 0, got {getattr(self, name)!r}")
        if self.T_a <= 0:
            raise InvalidParameterError("T_a", f"must be > 0, got {self.T_a!r}")
        if self.n_h_override is not None and self.n_h_override < 0:
            raise InvalidParameterError("n_h_override", "photon occupation must be >= 0")
        for donor in ("E1", "E2"):
            e = getattr(self, donor)
            if not e - self.E_alpha > 0:
                raise InvalidParameterError(donor, f"{donor} - E_alpha must be > 0")
            if not e - self.E_b > e - self.E_alpha:
                raise InvalidParameterError("E_alpha", f"E_alpha must lie above E_b (checked against {donor})")
        if not self.E_beta - self.E_b > 0:
            raise InvalidParameterError("E_beta", "E_beta - E_b must be > 0")

    @property
    def gamma_h(self) -> float:
        """Bright-state optical rate."""
        return interference_rates(self.gamma_1h, self.gamma_2h, 0.0, 0.0)[0]

    @property
    def gamma_c(self) -> float:
        """Dark-state charge-transfer rate."""
        return interference_rates(0.0, 0.0, self.gamma_1c, self.gamma_2c)[1]

    def with_rates(self, gamma_c: Optional[float] = None, gamma_h: Optional[float] = None, **changes) -> ModelParams:
        """Copy with total rates split evenly over the two identical donors."""
        if gamma_c is not None:
            changes.update(gamma_1c=gamma_c / 2, gamma_2c=gamma_c / 2)
        if gamma_h is not None:
            changes.update(gamma_1h=gamma_h / 2, gamma_2h=gamma_h / 2)
        return replace(self, **changes)

    def scaled(self, factor: float) -> ModelParams:
        """Copy with every rate multiplied by ``factor`` (a change of time unit)."""
        return replace(self, **{name: getattr(self, name) * factor for name in RATE_FIELDS})


RATE_FIELDS = ("gamma_1h", "gamma_2h", "gamma_1c", "gamma_2c", "gamma_x", "Gamma", "Gamma_c")


@dataclass(frozen=True)
class DimerEigensystem:
    E_x1: float
    E_x2: float
    theta: float

    @property
    def splitting(self) -> float:
        return self.E_x1 - self.E_x2


@dataclass(frozen=True)
class OccupationSet:
    """Mean photon and phonon numbers for every transition of the cycle."""

    n_h: float
    n_1h: float
    n_2h: float
    n_1c: float
    n_2c: float
    n_x: float
    N_c: float


def dimer_eigensystem(E1: float, E2: float, J12: float) -> DimerEigensystem:
    """Diagonalise the single-excitation block of two dipole-coupled donors.

    Returns the bright (upper) and dark (lower) energies and the mixing
    angle, with ``theta = pi/4`` at exact degeneracy.
    """
    if J12 < 0:
        raise ValueError("J12 must be >= 0")
    mean = 0.5 * (E1 + E2)
    half_gap = math.hypot(0.5 * (E1 - E2), J12)
    if E1 == E2:
        theta = math.pi / 4
    else:
        theta = 0.5 * math.atan2(2.0 * J12, E1 - E2)
    return DimerEigensystem(E_x1=mean + half_gap, E_x2=mean - half_gap, theta=theta)


def interference_rates(gamma_1h: float, gamma_2h: float, gamma_1c: float, gamma_2c: float) -> tuple[float, float]:
    """Bright-state optical rate and dark-state transfer rate.

    Constructive interference of the two donors' transition dipoles (and
    of their transfer matrix elements into the dark state) gives the sum
    of the per-donor rates.
    """
    for name, value in (("gamma_1h", gamma_1h), ("gamma_2h", gamma_2h), ("gamma_1c", gamma_1c), ("gamma_2c", gamma_2c)):
        if value < 0:
            raise ValueError(f"{name} must be >= 0, got {value!r}")
    return gamma_1h + gamma_2h, gamma_1c + gamma_2c


def planck_occupation(delta_E: float, T: float) -> float:
    """Bose-Einstein mean occupation of a mode of energy ``delta_E`` at ``T``."""
    if not delta_E > 0:
        raise ValueError(f"occupation undefined for non-positive gap {delta_E!r} eV")
    if not T > 0:
        raise ValueError(f"temperature must be > 0, got {T!r}")
    x = delta_E / (K_B * T)
    if x > 700:
        return 0.0
    return 1.0 / math.expm1(x)


def effective_photon_temperature(n_h: float, delta_E: float) -> float:
    """Temperature at which a mode of energy ``delta_E`` holds ``n_h`` photons."""
    if not n_h > 0:
        raise ValueError("n_h must be > 0")
    if not delta_E > 0:
        raise ValueError("delta_E must be > 0")
    return delta_E / (K_B * math.log1p(1.0 / n_h))


def build_occupations(params: ModelParams, coupled: bool) -> OccupationSet:
    T = params.T_a
    if coupled:
        eig = dimer_eigensystem(params.E1, params.E2, params.J12)
        upper, lower = eig.E_x1, eig.E_x2
    else:
        upper, lower = params.E1, params.E2
    if params.n_h_override is not None:
        n_h = n_1h = n_2h = float(params.n_h_override)
    else:
        bright = dimer_eigensystem(params.E1, params.E2, params.J12).E_x1
        n_h = planck_occupation(bright - params.E_b, T)
        n_1h = planck_occupation(params.E1 - params.E_b, T)
        n_2h = planck_occupation(params.E2 - params.E_b, T)
    eig = dimer_eigensystem(params.E1, params.E2, params.J12)
    # zero splitting means no bright-dark transition, so no phonon mode
    n_x = planck_occupation(eig.splitting, T) if eig.splitting > 0 else 0.0
    return OccupationSet(
        n_h=n_h,
        n_1h=n_1h,
        n_2h=n_2h,
        n_1c=planck_occupation(upper - params.E_alpha, T),
        n_2c=planck_occupation(lower - params.E_alpha, T),
        n_x=n_x,
        N_c=planck_occupation(params.E_beta - params.E_b, T),
    )
