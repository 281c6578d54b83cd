"""Non-cyclic ergotropy, its decomposition, gain, bounds, and the
three-level activation counterexample.

The non-cyclic extraction allows the final Hamiltonian h_f to differ from the
initial h_i; energies are always reported in the units of the Hamiltonians
passed in (hbar = 1).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import states
from .errors import (EnergyOutOfRange, EntropyOutOfRange, NegativeBeta, NoConvergence,
                     ParamOutOfRange, SupportViolation)
from .states import DensityMatrix, HamiltonianOp


class Decomposition(NamedTuple):
    e_inc: float  # incoherent part: population disorder in the h_i basis
    e_pas: float  # passive-transport part: h_i -> h_f spectrum change
    e_coh: float  # coherent part: basis mismatch of rho_i with h_i


@dataclass(frozen=True)
class ErgotropyReport:
    """Everything the CLI emits for one (rho_i, h_i, h_f) instance."""

    e_nc: float
    e_inc: float
    e_pas: float
    e_coh: float
    delta_e_nc: Optional[float]
    gain_g: float
    upper_bound: Optional[float]
    majorization_holds: bool
    beta_same_energy: Optional[float]
    negative_temperature_flag: bool

    def to_json(self) -> dict:
        return {k: (None if v is None else (bool(v) if isinstance(v, (bool, np.bool_)) else float(v)))
                for k, v in asdict(self).items()}


class DeltaResult(NamedTuple):
    value: float
    beta: float
    negative_temperature: bool


class UpperBoundResult(NamedTuple):
    value: float            # Tr[passive(rho_th) h_f] - Tr[thermal_f(beta_i) h_f]
    entropic_value: float   # (dS + S(P || T)) / beta_i, equal by identity
    beta_i: float           # entropy-matched inverse temperature on h_f
    delta_s: float          # S(rho_th) - S(rho_i) >= 0


def noncyclic_ergotropy(rho_i: DensityMatrix, h_i: HamiltonianOp,
                        h_f: HamiltonianOp) -> float:
    """Maximal work extracted evolving rho_i from h_i into the passive state of h_f."""
    return h_i.energy(rho_i) - states.passive_energy(rho_i, h_f)


def decompose(rho_i: DensityMatrix, h_i: HamiltonianOp,
              h_f: HamiltonianOp) -> Decomposition:
    """Split e_nc into incoherent, passive-transport, and coherent parts.

    The three terms telescope: their sum is noncyclic_ergotropy exactly, and
    each term is individually nonnegative (permutation minimality for e_inc,
    Schur-Horn majorization for e_coh).
    """
    rho_d = states.dephase(rho_i, h_i)
    e_i = h_i.energy(rho_i)
    e_inc = e_i - states.passive_energy(rho_d, h_i)
    e_pas = states.passive_energy(rho_d, h_i) - states.passive_energy(rho_d, h_f)
    e_coh = states.passive_energy(rho_d, h_f) - states.passive_energy(rho_i, h_f)
    return Decomposition(e_inc, e_pas, e_coh)


def coherent_entropy_identity_residual(rho_i: DensityMatrix, h_i: HamiltonianOp,
                                       h_f: HamiltonianOp, beta: float) -> float:
    """Residual of the entropic identity for the coherent part at beta > 0.

    e_coh = (C(rho_i) + S(passive(rho_D)_f || tau_f) - S(passive(rho_i)_f || tau_f)) / beta
    with tau_f the Gibbs state of h_f at beta. Exact for any beta > 0; the
    returned residual is numerical error only.
    """
    if beta <= 0:
        raise NegativeBeta("identity requires beta > 0")
    e_coh = decompose(rho_i, h_i, h_f).e_coh
    tau_f = states.thermal_state(h_f, beta)
    rho_d = states.dephase(rho_i, h_i)
    c = states.coherence_rel_entropy(rho_i, h_i)
    s_d = states.relative_entropy(states.passive_state(rho_d, h_f), tau_f)
    s_r = states.relative_entropy(states.passive_state(rho_i, h_f), tau_f)
    if not (np.isfinite(s_d) and np.isfinite(s_r) and np.isfinite(c)):
        raise SupportViolation("relative entropy diverged inside the identity")
    return abs(e_coh - (c + s_d - s_r) / beta)


def delta_noncyclic(rho_i: DensityMatrix, h_i: HamiltonianOp,
                    h_f: HamiltonianOp) -> DeltaResult:
    """Ergotropy difference between rho_i and the same-energy thermal state.

    The matching inverse temperature may come out negative (mean energy above
    the flat-state value); the result is still computed and flagged.
    """
    solve = states.solve_beta_for_energy(h_i, h_i.energy(rho_i), rho_i.tols)
    delta = (states.passive_energy(solve.state, h_f)
             - states.passive_energy(rho_i, h_f))
    return DeltaResult(delta, solve.beta, solve.beta < 0)


def gain_g(rho_i: DensityMatrix, h_i: HamiltonianOp, h_f: HamiltonianOp) -> float:
    """Cyclic ergotropy of the population-transported state at h_f.

    Populations of rho_i (ascending h_i energy order) ride across to the
    ascending h_f levels; G is the work a cyclic process then extracts, so
    G >= 0 and G is insensitive to the coherences' phases.
    """
    p = states.energy_populations(rho_i, h_i)
    r = rho_i.populations_desc()
    return float((p - r) @ h_f.energies)


def upper_bound_delta(rho_i: DensityMatrix, h_i: HamiltonianOp,
                      h_f: HamiltonianOp) -> UpperBoundResult:
    """Upper bound on delta_noncyclic from the same-energy thermal state.

    value = Tr[passive(rho_th)_f h_f] - Tr[tau_f(beta_i) h_f], with rho_th the
    same-energy Gibbs state of h_i and beta_i >= 0 matching S(rho_i) on h_f.
    The equivalent entropic form beta_i^{-1}[dS + S(passive(rho_th)_f || tau_f)]
    is evaluated as a cross-check; the two must agree to identity tolerance.
    """
    tols = rho_i.tols
    scale = max(h_f.spectral_width, 1e-300)
    s_i = states.von_neumann_entropy(rho_i)
    # at the entropy ceiling beta_i -> 0 and 1/beta_i amplifies roundoff past
    # any cross-check, so the flat corner is rejected outright
    if s_i >= np.log(rho_i.dim) - 1e-12:
        raise NegativeBeta("entropy-matched beta_i must be positive; "
                           "the input is maximally mixed")
    solve_e = states.solve_beta_for_energy(h_i, h_i.energy(rho_i), tols)
    rho_th = solve_e.state
    solve_s = states.solve_beta_for_entropy(h_f, s_i, tols)
    beta_i = solve_s.beta
    if beta_i <= 0:
        raise NegativeBeta("entropy-matched beta_i must be positive")
    tau_f = solve_s.state
    p_f = states.passive_state(rho_th, h_f)
    value = h_f.energy(p_f) - h_f.energy(tau_f)
    delta_s = states.von_neumann_entropy(rho_th) - states.von_neumann_entropy(rho_i)
    entropic = (delta_s + states.relative_entropy(p_f, tau_f)) / beta_i
    if abs(value - entropic) > tols.identity_residual * scale + abs(value) * 1e-9:
        raise NoConvergence(f"bound forms disagree: {value} vs {entropic}")
    return UpperBoundResult(value, entropic, beta_i, delta_s)


def full_report(rho_i: DensityMatrix, h_i: HamiltonianOp,
                h_f: HamiltonianOp) -> ErgotropyReport:
    """Assemble the complete ergotropy report for one instance."""
    e_nc = noncyclic_ergotropy(rho_i, h_i, h_f)
    dec = decompose(rho_i, h_i, h_f)
    g = gain_g(rho_i, h_i, h_f)
    delta = beta = None
    neg_flag = False
    majorization_holds = False
    try:
        d = delta_noncyclic(rho_i, h_i, h_f)
        delta, beta, neg_flag = d.value, d.beta, d.negative_temperature
        p_th = states.thermal_populations(h_i.energies, beta)
        majorization_holds = states.majorizes(rho_i.populations_desc(), p_th)
    except EnergyOutOfRange:
        pass
    bound = None
    if delta is not None:
        try:
            bound = upper_bound_delta(rho_i, h_i, h_f).value
        except (NegativeBeta, EntropyOutOfRange):
            pass
    return ErgotropyReport(
        e_nc=float(e_nc), e_inc=float(dec.e_inc), e_pas=float(dec.e_pas),
        e_coh=float(dec.e_coh),
        delta_e_nc=None if delta is None else float(delta),
        gain_g=float(g),
        upper_bound=None if bound is None else float(bound),
        majorization_holds=bool(majorization_holds),
        beta_same_energy=None if beta is None else float(beta),
        negative_temperature_flag=bool(neg_flag),
    )


class Counterexample(NamedTuple):
    p_th: np.ndarray        # thermal populations, ascending-energy order
    q: np.ndarray           # perturbed populations, same order, same energy
    energies_i: np.ndarray  # (0, e2i, 1)
    energies_f: np.ndarray  # (0, e2f, 1)
    delta_e_nc: float       # ergotropy difference of diag(q) vs thermal


def counterexample_populations(beta: float, e2i: float, e2f: float) -> Counterexample:
    """Three-level populations with thermal mean energy but smaller ergotropy.

    Spectrum (0, e2i, 1); the perturbation moves alpha = exp(-beta) beta
    (e2i - e2i^2)/3 of weight so the mean energy is untouched while the
    sorted populations cross the thermal ones, so the ergotropy difference
    can go negative: energy matching alone does not order extractable work.
    """
    if beta <= 0:
        raise ParamOutOfRange("beta must be positive")
    if not (0.0 < e2i < 1.0) or not (0.0 <= e2f <= 1.0):
        raise ParamOutOfRange("middle levels must satisfy 0 < e2i < 1, 0 <= e2f <= 1")
    en_i = np.array([0.0, e2i, 1.0])
    p_th = states.thermal_populations(en_i, beta)
    alpha = np.exp(-beta) * beta * (e2i - e2i**2) / 3.0
    q = p_th + np.array([alpha / e2i - alpha, -alpha / e2i, alpha])
    if q.min() < 0:
        raise ParamOutOfRange(f"perturbed populations not a distribution: {q}")
    if abs(q @ en_i - p_th @ en_i) > 1e-12:
        raise NoConvergence("energy matching broken in counterexample construction")
    en_f = np.array([0.0, e2f, 1.0])
    delta = float(np.sort(p_th)[::-1] @ np.sort(en_f)
                  - np.sort(q)[::-1] @ np.sort(en_f))
    return Counterexample(p_th, q, en_i, en_f, delta)
