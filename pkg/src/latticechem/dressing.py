"""Feasibility calculators for Rydberg-dressed interactions.

Pure scalar relations: dressing amplitude, soft-core saturation energy, the
hopping-over-decay figure of merit, scaling gains from higher principal
quantum numbers and stroboscopic operation, and the postselection survival
probability over the dressed portion of a protocol.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import Schedule


@dataclass(frozen=True)
class DressingParams:
    rabi: float
    detuning: float
    hopping: float = 1.0
    tau_eff: float | None = None
    n_principal: int | None = None
    duty_cycle: float | None = None

    def __post_init__(self):
        if self.detuning == 0:
            raise ValueError("detuning must be nonzero")
        if abs(dressing_amplitude(self.rabi, self.detuning)) > 0.3:
            warnings.warn(
                "dressing amplitude beta > 0.3: perturbative dressing is unreliable",
                stacklevel=2,
            )


def dressing_amplitude(rabi: float, detuning: float) -> float:
    """beta = Omega / (2 Delta)."""
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    return rabi / (2.0 * detuning)


def softcore_cap(rabi: float, detuning: float) -> float:
    """Short-distance saturation energy Omega^4 / (2|Delta|)^3."""
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    return rabi**4 / (2.0 * abs(detuning)) ** 3


def figure_of_merit(J: float, tau_eff: float) -> float:
    """M = J / Gamma = J * tau_eff: sites explored before a Rydberg decay."""
    if tau_eff <= 0:
        raise ValueError(f"tau_eff must be > 0, got {tau_eff}")
    return J * tau_eff


def n_scaling_gain(n_from: int, n_to: int) -> float:
    """Figure-of-merit multiplier (n_to/n_from)^5 from the decay scaling n^-5."""
    if n_from < 1 or n_to < 1:
        raise ValueError("principal quantum numbers must be >= 1")
    return (n_to / n_from) ** 5


def stroboscopic_scaling(eta: float) -> tuple[float, float, float]:
    """(beta, Gamma, M) multipliers for duty cycle eta at equal interaction.

    Pulsed dressing at duty eta needs beta -> beta * eta^(-1/4); decay then
    scales by eta^(1/2), and so does M.
    """
    if not 0 < eta <= 1:
        raise ValueError(f"duty cycle must be in (0, 1], got {eta}")
    return (eta ** -0.25, math.sqrt(eta), math.sqrt(eta))


def survival_probability(gamma_eff: float, dressed_time: float) -> float:
    """exp(-Gamma_eff * dressed_time): expected postselection yield."""
    if gamma_eff < 0 or dressed_time < 0:
        raise ValueError("rate and time must be >= 0")
    return math.exp(-gamma_eff * dressed_time)


def dressed_exposure_time(
    interaction_schedule: Schedule, threshold: float = 1e-6, n_grid: int = 4001
) -> float:
    """Decay-weighted time under a (possibly ramped) interaction schedule.

    The decay rate follows beta^2 while the interaction follows beta^4, so
    exposure accrues as sqrt(V(t)/V_peak); intervals below threshold * peak
    do not count.
    """
    t0, t1 = interaction_schedule.span
    ts = np.linspace(t0, t1, n_grid)
    vals = np.abs(interaction_schedule.values(ts))
    peak = vals.max()
    if peak <= 0:
        return 0.0
    w = np.sqrt(vals / peak)
    w[vals <= threshold * peak] = 0.0
    return float(np.trapezoid(w, ts))


def dressing_report(params: DressingParams, dressed_time: float = 0.0) -> dict:
    """Summary block embedded into run outputs when dressing is configured."""
    beta = dressing_amplitude(params.rabi, params.detuning)
    report = {
        "beta": beta,
        "softcore_cap": softcore_cap(params.rabi, params.detuning),
        "dressed_time": dressed_time,
    }
    m = None
    if params.tau_eff is not None:
        m = figure_of_merit(params.hopping, params.tau_eff)
        report["figure_of_merit"] = m
        # dressed_time is in units of 1/J, so Gamma_eff * t = t / M
        report["survival"] = survival_probability(1.0 / m, dressed_time)
    if params.duty_cycle is not None:
        b_mult, g_mult, m_mult = stroboscopic_scaling(params.duty_cycle)
        report["stroboscopic"] = {
            "beta_multiplier": b_mult,
            "gamma_multiplier": g_mult,
            "m_multiplier": m_mult,
        }
        if m is not None:
            report["figure_of_merit_stroboscopic"] = m * m_mult
    return report
