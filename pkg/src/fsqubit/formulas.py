"""Analytic reductions of the driven Lambda system.

Effective two-level parameters for far-detuned Raman driving, the
Landau-Zener transfer probability, off-resonant scattering rates, and the
damped-oscillation signal model used by the analysis pipeline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .units import TWO_PI


class RegimeWarning(UserWarning):
    """A closed-form expression was evaluated outside its validity regime."""


def _check_regime(detuning: float, *scales: float, factor: float = 10.0) -> None:
    if abs(detuning) <= factor * max(scales):
        warnings.warn(
            f"|detuning|={abs(detuning):.3g} rad/s is not large against the drive "
            f"scales (max {max(scales):.3g}); the adiabatic-elimination formulas "
            "are inaccurate here",
            RegimeWarning,
            stacklevel=3,
        )


def raman_rabi(rabi_up: float, rabi_down: float, detuning: float) -> float:
    """Two-photon Rabi frequency magnitude Omega_up Omega_down / (2 |Delta|)."""
    if detuning == 0.0:
        raise ZeroDivisionError("one-photon detuning must be nonzero")
    _check_regime(detuning, rabi_up, rabi_down)
    return rabi_up * rabi_down / (2.0 * abs(detuning))


def differential_stark(rabi_up: float, rabi_down: float, detuning: float) -> float:
    """Differential light shift (Omega_up^2 - Omega_down^2) / (4 Delta), signed."""
    if detuning == 0.0:
        raise ZeroDivisionError("one-photon detuning must be nonzero")
    _check_regime(detuning, rabi_up, rabi_down)
    return (rabi_up**2 - rabi_down**2) / (4.0 * detuning)


def scattering_rate(rabi: float, detuning: float, gamma: float) -> float:
    """Off-resonant one-photon scattering rate Gamma Omega^2 / (4 Delta^2), 1/s."""
    if detuning == 0.0:
        raise ZeroDivisionError("detuning must be nonzero")
    _check_regime(detuning, rabi, gamma)
    return gamma * rabi**2 / (4.0 * detuning**2)


def max_decay_time(rabi: float, detuning: float, gamma: float) -> float:
    """Scattering-limited envelope decay time 1 / Gamma_sc, s."""
    rate = scattering_rate(rabi, detuning, gamma)
    return np.inf if rate == 0.0 else 1.0 / rate


def lz_probability(rabi: float, ramp: float) -> float:
    """Adiabatic transfer probability 1 - exp(-pi Omega^2 / (2 ramp)).

    `ramp` is the detuning sweep rate in rad/s per second; the symmetric-sweep
    convention is assumed.
    """
    if ramp <= 0.0:
        raise ValueError("ramp rate must be positive")
    if rabi < 0.0:
        raise ValueError("Rabi frequency must be >= 0")
    return 1.0 - np.exp(-np.pi * rabi**2 / (2.0 * ramp))


def lz_rabi_for_fidelity(fidelity: float, ramp: float) -> float:
    """Invert lz_probability: the Rabi frequency that yields `fidelity`."""
    if not 0.0 <= fidelity < 1.0:
        raise ValueError("fidelity must be in [0, 1)")
    return np.sqrt(-2.0 * ramp * np.log(1.0 - fidelity) / np.pi)


def damped_model(t, omega: float, phase: float, tau: float, loss_amp: float, tau_loss: float):
    """Damped-oscillation population model.

    0.5 cos(omega t + phase) exp(-t/tau) - loss_amp (1 - exp(-t/tau_loss)) + 0.5

    with phase 0 for the initial state and pi for its partner.  The second
    term tracks slow loss out of the Lambda system by one-photon scattering.
    """
    if tau <= 0.0 or tau_loss <= 0.0:
        raise ValueError("decay times must be positive")
    t = np.asarray(t, dtype=float)
    return (
        0.5 * np.cos(omega * t + phase) * np.exp(-t / tau)
        - loss_amp * (1.0 - np.exp(-t / tau_loss))
        + 0.5
    )


def cycles(omega: float, tau: float) -> float:
    """Number of coherent oscillation cycles omega tau / (2 pi)."""
    if omega <= 0.0 or tau <= 0.0:
        raise ValueError("omega and tau must be positive")
    return omega * tau / TWO_PI


@dataclass(frozen=True)
class EffectiveTwoLevel:
    """Adiabatically eliminated qubit parameters for one Raman configuration.

    Frequencies are rad/s, scattering rates 1/s.  `stark_up/down` are the
    one-photon light shifts entering the effective Hamiltonian diagonal;
    `loss_amp` and `tau_loss` parameterize the slow population loss of
    `damped_model` and are fitted from data, not predicted.
    """

    rabi: float
    stark_up: float
    stark_down: float
    scatter_up: float
    scatter_down: float
    loss_amp: float = 0.0
    tau_loss: float = np.inf

    def __post_init__(self):
        if self.rabi < 0 or self.scatter_up < 0 or self.scatter_down < 0:
            raise ValueError("rates must be >= 0")
        if not 0.0 <= self.loss_amp <= 0.5:
            raise ValueError("loss amplitude must lie in [0, 0.5]")

    @property
    def differential_shift(self) -> float:
        return self.stark_up - self.stark_down


def effective_two_level(
    rabi_up: float, rabi_down: float, detuning: float, gamma: float
) -> EffectiveTwoLevel:
    """Effective qubit parameters from one-photon drive amplitudes."""
    return EffectiveTwoLevel(
        rabi=raman_rabi(rabi_up, rabi_down, detuning),
        stark_up=rabi_up**2 / (4.0 * detuning),
        stark_down=rabi_down**2 / (4.0 * detuning),
        scatter_up=scattering_rate(rabi_up, detuning, gamma),
        scatter_down=scattering_rate(rabi_down, detuning, gamma),
    )


def generalized_rabi(rabi: float, detuning_eff: float) -> float:
    """Oscillation frequency sqrt(rabi^2 + detuning_eff^2) of a detuned drive."""
    return float(np.hypot(rabi, detuning_eff))
