"""Photovoltaic quantities derived from steady-state populations.

Currents are given as ``j/e`` in rate units (eV with hbar = 1) and
voltages in volts, numerically equal to eV per unit charge. Powers are the
product of the two and are only meaningful as ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .physics import K_B, ModelParams, OccupationSet


class UndefinedVoltageError(ValueError):
    """Load voltage requested with an empty acceptor or cycling level."""


@dataclass(frozen=True)
class PhotovoltaicPoint:
    current_over_e: float
    voltage: float
    Gamma_load: float

    @property
    def power(self) -> float:
        return self.current_over_e * self.voltage


@dataclass(frozen=True)
class EnhancementRecord:
    j_coupled: float
    j_uncoupled: float

    @property
    def relative_enhancement(self) -> float:
        return enhancement(self.j_coupled, self.j_uncoupled)


def current(rho_alpha: float, Gamma: float) -> float:
    if not 0.0 <= rho_alpha <= 1.0:
        # tolerate solver round-off just below zero
        if -1e-12 <= rho_alpha < 0.0:
            rho_alpha = 0.0
        else:
            raise ValueError(f"rho_alpha must lie in [0, 1], got {rho_alpha!r}")
    return Gamma * rho_alpha


def voltage(params: ModelParams, rho_alpha: float, rho_beta: float) -> float:
    """Load voltage from the alpha/beta population ratio."""
    if not (rho_alpha > 0 and rho_beta > 0):
        raise UndefinedVoltageError(
            f"voltage undefined for rho_alpha={rho_alpha!r}, rho_beta={rho_beta!r}"
        )
    return params.E_alpha - params.E_beta + K_B * params.T_a * math.log(rho_alpha / rho_beta)


def _nonzero(denominator: float) -> float:
    if denominator == 0 or not math.isfinite(denominator):
        raise ZeroDivisionError("analytic current has a vanishing denominator")
    return denominator


def analytic_current_uncoupled(params: ModelParams, occ: OccupationSet) -> float:
    """Closed-form ``j/e`` of the uncoupled cycle, valid for empty phonon baths.

    Assumes identical donors; ambient occupations in ``occ`` other than the
    photon number are ignored.
    """
    g_c, g_h = params.gamma_c, params.gamma_h
    G, Gc = params.Gamma, params.Gamma_c
    n_h = occ.n_1h
    num = g_c * Gc * g_h * n_h
    den = g_c * Gc + (g_c + 3 * Gc) * g_h * n_h + Gc * g_h + n_h * g_c * g_h * Gc / _nonzero(G)
    return num / _nonzero(den)


def analytic_current_coupled(params: ModelParams, occ: OccupationSet) -> float:
    """Closed-form ``j/e`` of the exciton cycle with empty transfer/closing baths.

    The bright-dark phonon occupation ``occ.n_x`` is kept.
    """
    g_c, g_h, g_x = params.gamma_c, params.gamma_h, params.gamma_x
    G, Gc = params.Gamma, params.Gamma_c
    n_h, n_x = occ.n_h, occ.n_x
    num = n_h * (1 + n_x) * g_c * Gc * g_h * g_x
    den = (n_h * (1 + 3 * n_x) + n_x) * Gc * g_h * g_x + g_c * (
        (1 + 2 * n_h) * Gc * g_h + (1 + n_x) * (Gc + n_h * g_h) * g_x
    ) + num / _nonzero(G)
    return num / _nonzero(den)


def enhancement(j: float, j_tilde: float) -> float:
    """Fractional gain of current ``j`` over reference ``j_tilde``."""
    if not j_tilde > 0:
        raise ValueError(f"reference current must be > 0, got {j_tilde!r}")
    return (j - j_tilde) / j_tilde


def relative_efficiency(P_max: float, P_tilde_max: float) -> float:
    if not P_tilde_max > 0:
        raise ValueError(f"reference peak power must be > 0, got {P_tilde_max!r}")
    return (P_max - P_tilde_max) / P_tilde_max


def sun_power(j: float, gap: float) -> float:
    """Power drawn from the sun: current times the absorbing transition energy."""
    if not gap > 0:
        raise ValueError("gap must be > 0")
    return j * gap
