"""Density matrices, Hamiltonians, passive states, entropies, thermal solvers.

Conventions: hbar = 1, entropies in nats, inverse temperature beta may be
negative where an energy constraint demands it (population inversion); the
entropy-matched solver is restricted to beta >= 0 where the map is monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import (DimMismatch, EnergyOutOfRange, EntropyOutOfRange, LengthMismatch,
                     NoConvergence, NotAState)
from .linalg import HermEig, dagger, hermitian_eig
from .tolerances import DEFAULT_TOLS, Tolerances

BETA_MAX_SCALE = 1e4  # solver bracket: |beta| <= BETA_MAX_SCALE / spectral width


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix.

    Hermitian to tolerance, unit trace, eigenvalues >= -eig_floor (small
    negatives are clamped to zero wherever eigenvalues are consumed).
    """

    mat: np.ndarray
    tols: Tolerances = field(default=DEFAULT_TOLS, repr=False, compare=False)

    def __post_init__(self):
        m = linalg.as_square(self.mat, "density matrix")
        if linalg.hermiticity_defect(m) > self.tols.hermiticity:
            raise NotAState("density matrix is not Hermitian within tolerance")
        m = 0.5 * (m + dagger(m))
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > self.tols.trace:
            raise NotAState(f"trace {tr} is not 1 within {self.tols.trace}")
        if float(np.linalg.eigvalsh(m).min()) < -self.tols.eig_floor:
            raise NotAState("density matrix has a negative eigenvalue beyond tolerance")
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eig(self) -> HermEig:
        """Ascending eigenvalues (clamped to >= 0) and canonical eigenvectors."""
        values, vectors = hermitian_eig(self.mat, self.tols)
        return HermEig(np.clip(values, 0.0, None), vectors)

    def populations_desc(self) -> np.ndarray:
        """Eigenvalues sorted descending with a stable tie-break."""
        vals = self.eig().values
        order = np.argsort(-vals, kind="stable")
        return vals[order]

    def purity(self) -> float:
        return float(np.trace(self.mat @ self.mat).real)


@dataclass(frozen=True)
class HamiltonianOp:
    """Hermitian Hamiltonian with its cached ascending spectrum."""

    mat: np.ndarray
    tols: Tolerances = field(default=DEFAULT_TOLS, repr=False, compare=False)

    def __post_init__(self):
        m = linalg.as_square(self.mat, "hamiltonian")
        spectrum = hermitian_eig(m, self.tols)
        object.__setattr__(self, "mat", 0.5 * (m + dagger(m)))
        object.__setattr__(self, "_spectrum", spectrum)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self._spectrum.values

    @property
    def basis(self) -> np.ndarray:
        """Canonical eigenbasis, columns ordered by ascending energy."""
        return self._spectrum.vectors

    @property
    def spectral_width(self) -> float:
        e = self.energies
        return float(e[-1] - e[0])

    def energy(self, rho: DensityMatrix) -> float:
        _check_dims(rho, self)
        return float(np.trace(rho.mat @ self.mat).real)


class ThermalSolveResult(NamedTuple):
    beta: float            # may be negative (energy matching above the midpoint)
    state: DensityMatrix
    residual: float        # |target - achieved| in the solved quantity


def _check_dims(rho: DensityMatrix, h: HamiltonianOp):
    if rho.dim != h.dim:
        raise DimMismatch(f"state dim {rho.dim} != hamiltonian dim {h.dim}")


def check_prob_vector(p, atol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector (nonnegative, sums to 1)."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise DimMismatch("probability vector must be 1-d")
    if p.min() < -atol or abs(p.sum() - 1.0) > max(atol * len(p), atol):
        raise NotAState(f"not a probability vector: min {p.min()}, sum {p.sum()}")
    return np.clip(p, 0.0, None)


# ---------------------------------------------------------------- operations

def dephase(rho: DensityMatrix, h: HamiltonianOp) -> DensityMatrix:
    """Remove coherences in the energy eigenbasis of h."""
    _check_dims(rho, h)
    v = h.basis
    pops = np.einsum("in,ij,jn->n", v.conj(), rho.mat, v).real
    return DensityMatrix((v * pops) @ dagger(v), rho.tols)


def energy_populations(rho: DensityMatrix, h: HamiltonianOp) -> np.ndarray:
    """Diagonal of rho in the energy eigenbasis, ascending-energy order."""
    _check_dims(rho, h)
    v = h.basis
    return np.einsum("in,ij,jn->n", v.conj(), rho.mat, v).real


def passive_state(rho: DensityMatrix, h: HamiltonianOp) -> DensityMatrix:
    """Passive rearrangement: descending populations on ascending energies."""
    _check_dims(rho, h)
    r = rho.populations_desc()
    v = h.basis
    return DensityMatrix((v * r) @ dagger(v), rho.tols)


def passive_energy(rho: DensityMatrix, h: HamiltonianOp) -> float:
    """Energy of the passive rearrangement of rho with respect to h."""
    _check_dims(rho, h)
    return float(rho.populations_desc() @ h.energies)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """S(rho) = -Tr rho ln rho in nats, with 0 ln 0 = 0."""
    vals = rho.eig().values
    vals = vals[vals > 0.0]
    return float(-(vals * np.log(vals)).sum())


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix,
                     support_atol: float = 1e-12) -> float:
    """S(rho || sigma) in nats; +inf when rho has weight outside supp(sigma)."""
    if rho.dim != sigma.dim:
        raise DimMismatch("relative entropy needs equal dimensions")
    svals, svecs = sigma.eig()
    weights = np.einsum("in,ij,jn->n", svecs.conj(), rho.mat, svecs).real
    null = svals <= support_atol
    if weights[null].sum() > support_atol * rho.dim:
        return float("inf")
    rvals = rho.eig().values
    rvals = rvals[rvals > 0.0]
    tr_rho_ln_rho = float((rvals * np.log(rvals)).sum())
    keep = ~null
    tr_rho_ln_sigma = float((weights[keep] * np.log(svals[keep])).sum())
    return tr_rho_ln_rho - tr_rho_ln_sigma


def coherence_rel_entropy(rho: DensityMatrix, h: HamiltonianOp) -> float:
    """Relative entropy of coherence C(rho) = S(rho || dephase(rho)).

    Numerically identical to S(rho_D) - S(rho); the relative-entropy route is
    used here and the entropy-difference identity is kept as a test oracle.
    """
    return relative_entropy(rho, dephase(rho, h))


def thermal_populations(energies: np.ndarray, beta: float) -> np.ndarray:
    """Gibbs weights exp(-beta e_n)/Z, overflow-guarded by an energy shift."""
    x = -beta * np.asarray(energies, dtype=float)
    x = x - x.max()
    p = np.exp(x)
    return p / p.sum()


def thermal_state(h: HamiltonianOp, beta: float) -> DensityMatrix:
    """Gibbs state of h at inverse temperature beta (beta < 0 allowed)."""
    p = thermal_populations(h.energies, beta)
    v = h.basis
    return DensityMatrix((v * p) @ dagger(v), h.tols)


def _mean_energy(energies: np.ndarray, beta: float) -> float:
    return float(thermal_populations(energies, beta) @ energies)


def _entropy_of_beta(energies: np.ndarray, beta: float) -> float:
    p = thermal_populations(energies, beta)
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _bisect(f, lo: float, hi: float, n_iter: int = 200) -> float:
    """Root of a monotone decreasing f on [lo, hi] with f(lo) >= 0 >= f(hi)."""
    flo, fhi = f(lo), f(hi)
    if flo < 0 or fhi > 0:
        raise NoConvergence("root not bracketed")
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def solve_beta_for_energy(h: HamiltonianOp, energy: float,
                          tols: Tolerances = DEFAULT_TOLS) -> ThermalSolveResult:
    """Inverse temperature whose Gibbs state on h has the given mean energy.

    Mean energy is strictly decreasing in beta, so bisection on
    [-beta_max, beta_max] finds the unique solution; beta < 0 corresponds to
    energies above the flat-state mean (population inversion).
    """
    en = h.energies
    width = h.spectral_width
    if width <= 0 or not (en[0] < energy < en[-1]):
        raise EnergyOutOfRange(f"energy {energy} not strictly inside "
                               f"({en[0]}, {en[-1]})")
    beta_max = BETA_MAX_SCALE / width
    beta = _bisect(lambda b: _mean_energy(en, b) - energy, -beta_max, beta_max)
    residual = abs(_mean_energy(en, beta) - energy)
    if residual > tols.beta_residual * width:
        raise NoConvergence(f"energy residual {residual:.3e} exceeds "
                            f"{tols.beta_residual * width:.3e}")
    return ThermalSolveResult(beta, thermal_state(h, beta), residual)


def solve_beta_for_entropy(h: HamiltonianOp, entropy: float,
                           tols: Tolerances = DEFAULT_TOLS) -> ThermalSolveResult:
    """Inverse temperature beta >= 0 whose Gibbs state has the given entropy.

    Restricted to the beta >= 0 branch where S(beta) is monotone (ln d at
    beta = 0 down to the ground-degeneracy entropy). Targets below the
    beta_max floor return beta_max with the residual reported rather than
    raising: the caller sees how far the saturated solver landed.
    """
    en = h.energies
    width = h.spectral_width
    d = len(en)
    if width <= 0:
        raise EntropyOutOfRange("degenerate spectrum: entropy is constant in beta")
    if not (-1e-12 <= entropy <= np.log(d) + 1e-12):
        raise EntropyOutOfRange(f"entropy {entropy} outside [0, ln {d}]")
    beta_max = BETA_MAX_SCALE / width
    s_floor = _entropy_of_beta(en, beta_max)
    if entropy <= s_floor:
        return ThermalSolveResult(beta_max, thermal_state(h, beta_max),
                                  abs(s_floor - entropy))
    beta = _bisect(lambda b: _entropy_of_beta(en, b) - entropy, 0.0, beta_max)
    residual = abs(_entropy_of_beta(en, beta) - entropy)
    if residual > tols.beta_residual:
        raise NoConvergence(f"entropy residual {residual:.3e}")
    return ThermalSolveResult(beta, thermal_state(h, beta), residual)


def majorizes(p, q, slack: float = DEFAULT_TOLS.majorization_slack) -> bool:
    """True when p majorizes q: descending partial sums of p dominate q's."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise LengthMismatch(f"shapes {p.shape} and {q.shape} differ")
    cp = np.cumsum(np.sort(p)[::-1])
    cq = np.cumsum(np.sort(q)[::-1])
    return bool(np.all(cp >= cq - slack))


# ------------------------------------------------------------- serialization

def matrix_to_json(m: np.ndarray) -> dict:
    """Complex matrix as {"dim": n, "re": [...], "im": [...]}, row-major."""
    m = linalg.as_square(m)
    return {"dim": m.shape[0],
            "re": m.real.ravel().tolist(),
            "im": m.imag.ravel().tolist()}


def matrix_from_json(obj: dict) -> np.ndarray:
    """Inverse of matrix_to_json, with shape validation."""
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros(dim * dim)), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DimMismatch(f"bad matrix object: {exc}") from exc
    if re.size != dim * dim or im.size != dim * dim:
        raise DimMismatch(f"matrix payload length {re.size}/{im.size} != dim^2 = {dim * dim}")
    return (re + 1j * im).reshape(dim, dim)
