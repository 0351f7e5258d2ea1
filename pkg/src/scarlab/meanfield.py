"""Equilibrium large-N mean field: self-consistent gap equations, free energy,
and the b-boson density that signals ETH violation.

The four fixed-point equations couple two pairing amplitudes (delta_a, delta_b)
and two squared-field expectations (v_a, v_b).  Quasiparticle energies

    E_ka = sqrt(xi_k * (xi_k - 2*delta_a))
    E_kb = sqrt((xi_k + J*v_a*v_b) * (xi_k + J*v_a*v_b - 2*delta_b))

must stay real and positive along the iteration; infeasible trial steps are
damped rather than rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .lattice import LatticeModel


class QuasiparticleDomainError(ValueError):
    """A trial solution produced a non-positive radicand in E_ka or E_kb."""


class NonConvergenceError(RuntimeError):
    """Solver failed to reach the requested residual within max_iter."""

    def __init__(self, message, last=None, residual=None):
        super().__init__(message)
        self.last = last
        self.residual = residual


@dataclass(frozen=True)
class MeanFieldParams:
    lattice: LatticeModel
    coupling: float
    temperature: float

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class MeanFieldSolution:
    delta_a: float
    delta_b: float
    v_a: float
    v_b: float
    residual_norm: float = math.inf

    def as_vector(self) -> np.ndarray:
        return np.array([self.delta_a, self.delta_b, self.v_a, self.v_b])

    @staticmethod
    def from_vector(x, residual_norm=math.inf) -> "MeanFieldSolution":
        return MeanFieldSolution(float(x[0]), float(x[1]), float(x[2]), float(x[3]),
                                 residual_norm)


@dataclass(frozen=True)
class ThermoReport:
    free_energy_density: float
    energy_density: float
    rho_b_occupation: float
    rho_b_relation: float  # nan when J*v_b ~ 0 (the J=0 limit)


def coth_half(energy, temperature):
    """coth(E / 2T) evaluated as 1 + 2/(exp(E/T) - 1); exactly 1 for E/T > 50."""
    x = np.asarray(energy, dtype=float) / temperature
    out = np.ones_like(x)
    small = x <= 50.0
    out[small] = 1.0 + 2.0 / np.expm1(x[small])
    return out


def quasiparticle_energies(sol: MeanFieldSolution, params: MeanFieldParams, k=None):
    """(E_ka, E_kb) at momentum k, or on the whole grid when k is None.

    Raises QuasiparticleDomainError if either radicand is <= 0, which signals
    an unphysical trial solution (the solver reacts by damping its step).
    """
    xi = params.lattice.dispersion_table() if k is None \
        else -2.0 * params.lattice.hopping * np.cos(k) + params.lattice.chem_potential
    shift = params.coupling * sol.v_a * sol.v_b
    ra = xi * (xi - 2.0 * sol.delta_a)
    rb = (xi + shift) * (xi + shift - 2.0 * sol.delta_b)
    if np.any(ra <= 0) or np.any(rb <= 0):
        raise QuasiparticleDomainError(
            "non-positive radicand in quasiparticle energy "
            f"(min_a={np.min(ra):.3e}, min_b={np.min(rb):.3e})"
        )
    return np.sqrt(ra), np.sqrt(rb)


def _rhs(sol: MeanFieldSolution, params: MeanFieldParams) -> np.ndarray:
    """Right-hand side of the four fixed-point equations."""
    lat, J, T = params.lattice, params.coupling, params.temperature
    xi = lat.dispersion_table()
    e_a, e_b = quasiparticle_energies(sol, params)
    shift = J * sol.v_a * sol.v_b
    cb = coth_half(e_b, T)
    ca = coth_half(e_a, T)
    sum_b = np.mean((xi + shift - sol.delta_b) / e_b * cb)
    return np.array([
        -J * sol.v_b * sum_b,
        -J * sol.v_a * sum_b,
        np.mean(xi / e_a * ca),
        np.mean((xi + shift) / e_b * cb),
    ])


def mf_residual(sol: MeanFieldSolution, params: MeanFieldParams) -> np.ndarray:
    """lhs - rhs for each of the four equations (zero at a solution)."""
    return sol.as_vector() - _rhs(sol, params)


def free_solution(params: MeanFieldParams) -> MeanFieldSolution:
    """Closed form at J = 0: deltas vanish, v_a = v_b = mean coth(xi/2T)."""
    xi = params.lattice.dispersion_table()
    v = float(np.mean(coth_half(xi, params.temperature)))
    return MeanFieldSolution(0.0, 0.0, v, v, residual_norm=0.0)


def solve_mf(params: MeanFieldParams, init: MeanFieldSolution | None = None,
             tol: float = 1e-11, max_iter: int = 10_000,
             damping: float = 0.3) -> MeanFieldSolution:
    """Damped fixed-point iteration with a Newton fallback.

    new = (1-gamma)*old + gamma*rhs; an infeasible step halves gamma for that
    step rather than aborting.  If the fixed point stalls (residual decrease
    below 0.1% over 50 sweeps) a 4-dimensional Newton step with a forward
    difference Jacobian takes over.  Deterministic for a given (params, init).
    """
    sol = free_solution(params) if init is None else init
    res = mf_residual(sol, params)
    norm = float(np.max(np.abs(res)))
    stall = 0
    for _ in range(max_iter):
        if norm < tol:
            return replace(sol, residual_norm=norm)
        x = sol.as_vector()
        gamma = damping
        new = None
        if stall >= 50:
            new = _newton_step(sol, params, res)
            stall = 0
        while new is None and gamma > 1e-6:
            cand = MeanFieldSolution.from_vector((1 - gamma) * x + gamma * _rhs(sol, params))
            try:
                quasiparticle_energies(cand, params)
                new = cand
            except QuasiparticleDomainError:
                gamma *= 0.5
        if new is None:
            raise NonConvergenceError(
                "fixed point trapped at an infeasible boundary", sol, norm)
        new_res = mf_residual(new, params)
        new_norm = float(np.max(np.abs(new_res)))
        stall = stall + 1 if new_norm > 0.999 * norm else 0
        sol, res, norm = new, new_res, new_norm
    raise NonConvergenceError(
        f"no convergence after {max_iter} iterations (residual {norm:.3e})",
        sol, norm)


def _newton_step(sol, params, res):
    x = sol.as_vector()
    jac = np.empty((4, 4))
    h = 1e-7
    for j in range(4):
        dx = np.zeros(4)
        dx[j] = h * max(1.0, abs(x[j]))
        try:
            rp = mf_residual(MeanFieldSolution.from_vector(x + dx), params)
        except QuasiparticleDomainError:
            return None
        jac[:, j] = (rp - res) / dx[j]
    try:
        step = np.linalg.solve(jac, -res)
    except np.linalg.LinAlgError:
        return None
    for scale in (1.0, 0.5, 0.25, 0.125):
        cand = MeanFieldSolution.from_vector(x + scale * step)
        try:
            quasiparticle_energies(cand, params)
            return cand
        except QuasiparticleDomainError:
            continue
    return None


def thermo_report(sol: MeanFieldSolution, params: MeanFieldParams) -> ThermoReport:
    """Free energy and energy densities plus the b-boson density, two ways.

    rho_b_occupation comes from the Bogoliubov-rotated quadratic action;
    rho_b_relation is the closed form -delta_a/(2*J*v_b) - 1/2, reported as
    nan when J*v_b is too small to divide by (then the occupation formula is
    the usable one).  The -1/2 removes the zero-point piece: the gap-equation
    ratio is the symmetrized density, the occupation the normal-ordered one.
    """
    lat, J, T = params.lattice, params.coupling, params.temperature
    xi = lat.dispersion_table()
    e_a, e_b = quasiparticle_energies(sol, params)
    shift = J * sol.v_a * sol.v_b
    ca, cb = coth_half(e_a, T), coth_half(e_b, T)

    # log(e^{E/2T} - e^{-E/2T}) = E/2T + log(1 - e^{-E/T}), overflow-safe
    def log_sinh_term(e):
        return e / (2.0 * T) + np.log1p(-np.exp(-e / T))

    free = T * np.mean(log_sinh_term(e_a) + log_sinh_term(e_b)) \
        + 0.5 * (sol.delta_a * sol.v_a + sol.delta_b * sol.v_b)
    energy = np.mean(xi * (xi - sol.delta_a) / (2.0 * e_a) * ca) \
        + np.mean((xi + shift) * (xi + shift - sol.delta_b) / (2.0 * e_b) * cb - xi) \
        - shift / 2.0
    occ = float(np.mean((xi + shift - sol.delta_b) / (2.0 * e_b) * cb - 0.5))
    denom = 2.0 * J * sol.v_b
    rel = -sol.delta_a / denom - 0.5 if abs(denom) > 1e-12 else math.nan
    return ThermoReport(float(free), float(energy), occ, rel)


@dataclass(frozen=True)
class SSBResult:
    a_sq: float  # (1/N) sum_mu a_mu^2
    b_sq: float  # (1/N) sum_mu b_mu^2
    degenerate: bool = False


def ssb_solution(gapE: float, J: float) -> SSBResult:
    """Zero-temperature condensates of the saddle-point equations.

    Positive gap: the only solution is the trivial one.  Negative gap: the
    symmetry-broken closed form ((1/8) sqrt(-E/J), (1/4) sqrt(-E/J)).
    """
    if J <= 0:
        raise ValueError(f"J must be > 0, got {J}")
    if gapE > 0:
        return SSBResult(0.0, 0.0)
    if gapE == 0:
        return SSBResult(0.0, 0.0, degenerate=True)
    root = math.sqrt(-gapE / J)
    return SSBResult(root / 8.0, root / 4.0)
