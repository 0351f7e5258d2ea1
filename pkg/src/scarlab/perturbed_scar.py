"""Fate of the scar orbit under the pairing perturbation of strength epsilon.

Below the band gap the quadratic problem stays stable and the first-order
(Hartree-type) corrections drive a slow, subexponential OTOC growth: the
2x2 retarded propagator obeys a Volterra-Dyson equation

    G(k; t, 0) = G0(k; t, 0) + int_0^t dtau G0(k; t, tau) S(tau) G(k; tau, 0),
    S(tau) = Sigma(tau)*1 + Sigma'(tau)*sigma1,

solved by damped global fixed-point sweeps (a sequential forward-substitution
oracle cross-checks it).  Above the gap the bare propagator itself is
dynamically unstable with rate sqrt(eps^2 - xi_k^2) and no Dyson solve is
needed at leading order.

OTOC component convention: C_k = |G11|^2 + |G12|^2, so the unperturbed limit
gives C_k = 1 and both commutator channels generated by the pairing term
contribute.  c_tilde sums C_k over the grid without a 1/L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import LatticeModel
from .parallel import parallel_map

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]])

OTOC_COMPONENT_NOTE = "C_k = |G^R_11|^2 + |G^R_12|^2 (both pairing-generated commutators)"


class PairingDomainError(ValueError):
    """epsilon reached the band minimum: the Bogoliubov angle diverges."""


class DysonDivergenceError(RuntimeError):
    """Fixed-point sweeps are blowing up; reduce dt or the damping."""


@dataclass(frozen=True)
class PerturbedParams:
    lattice: LatticeModel
    epsilon: float
    drive_strength: float          # g = 8*J*alpha^2, the only combination entering
    dt: float = 0.01
    t_max: float = 40.0
    fp_tol: float = 1e-10
    fp_damping: float = 0.5
    max_iter: int = 400

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.drive_strength <= 0:
            raise ValueError(f"drive_strength must be > 0, got {self.drive_strength}")
        if self.dt <= 0 or self.t_max <= 0:
            raise ValueError("dt and t_max must be > 0")
        if not 0 < self.fp_damping <= 1:
            raise ValueError(f"fp_damping must be in (0, 1], got {self.fp_damping}")

    @property
    def gapE(self) -> float:
        return self.lattice.gap()

    def time_grid(self) -> np.ndarray:
        n = int(math.ceil(self.t_max / self.dt))
        return np.arange(n + 1) * self.dt


@dataclass(frozen=True)
class BogoliubovTable:
    theta: np.ndarray   # theta_q >= 0, finite below the gap
    omega: np.ndarray   # omega_q = sqrt(xi_q^2 - eps^2) > 0


@dataclass(frozen=True)
class RetardedGFGrid:
    times: np.ndarray
    values: np.ndarray        # (n_t, 2, 2) complex, G^R(k; t_i, 0)
    iterations_used: int


@dataclass(frozen=True)
class OtocSeries:
    times: np.ndarray
    c_tilde: np.ndarray                 # sum_k C_k(t)
    c_k0: np.ndarray                    # C_{k=0}(t)
    per_k: np.ndarray | None = None
    iterations_max: int = 0
    iterations_mean: float = 0.0


@dataclass(frozen=True)
class SubexpReport:
    window: float
    slopes: np.ndarray
    non_increasing: bool
    exponential_regime: bool = False


def bogoliubov_table(params: PerturbedParams) -> BogoliubovTable:
    """theta_q = arctanh((xi_q - omega_q)/eps), omega_q = sqrt(xi_q^2 - eps^2).

    Requires eps strictly below every xi_q; at the band minimum the arctanh
    argument reaches 1 and the operation rejects rather than returning inf.
    theta = 0 identically at eps = 0 (continuity limit).
    """
    xi = params.lattice.dispersion_table()
    eps = params.epsilon
    if eps == 0.0:
        return BogoliubovTable(np.zeros_like(xi), xi.copy())
    if eps >= np.min(xi):
        raise PairingDomainError(
            f"epsilon = {eps} reaches the band minimum {np.min(xi):.6g}; "
            "the Bogoliubov angle diverges")
    omega = np.sqrt(xi * xi - eps * eps)
    theta = np.arctanh((xi - omega) / eps)
    return BogoliubovTable(theta, omega)


def bare_gf_stable(k: int, t: float, params: PerturbedParams) -> np.ndarray:
    """G0^R(k; t, 0) for xi_k^2 > eps^2; zero for t < 0, -i*sigma3 at t = 0+.

    Time-translation invariant for both arguments positive, so callers use
    G0(k; t, tau) = bare_gf_stable(k, t - tau).
    """
    xi = params.lattice.dispersion_table()[k]
    eps = params.epsilon
    if xi * xi <= eps * eps:
        raise PairingDomainError(f"mode k={k} is not stable: xi={xi:.6g}, eps={eps}")
    if t < 0:
        return np.zeros((2, 2), dtype=complex)
    w = math.sqrt(xi * xi - eps * eps)
    igr = np.empty((2, 2), dtype=complex)
    c, s = math.cos(w * t), math.sin(w * t)
    igr[0, 0] = c - 1j * (xi / w) * s
    igr[1, 1] = -c - 1j * (xi / w) * s
    igr[0, 1] = igr[1, 0] = -1j * (eps / w) * s
    return -1j * igr


def bare_gf_unstable(k: int, t: float, params: PerturbedParams) -> np.ndarray:
    """Leading-order G0^R for xi_k^2 < eps^2: hyperbolic growth exp(kappa*t)."""
    xi = params.lattice.dispersion_table()[k]
    eps = params.epsilon
    if xi * xi >= eps * eps:
        raise PairingDomainError(f"mode k={k} is not unstable: xi={xi:.6g}, eps={eps}")
    if t < 0:
        return np.zeros((2, 2), dtype=complex)
    kappa = math.sqrt(eps * eps - xi * xi)
    igr = np.empty((2, 2), dtype=complex)
    ch, sh = math.cosh(kappa * t), math.sinh(kappa * t)
    igr[0, 0] = ch - 1j * (xi / kappa) * sh
    igr[1, 1] = -ch - 1j * (xi / kappa) * sh
    igr[0, 1] = igr[1, 0] = -1j * (eps / kappa) * sh
    return -1j * igr


def unstable_rates(params: PerturbedParams) -> dict[int, float]:
    """k -> sqrt(eps^2 - xi_k^2) for every unstable grid mode; may be empty."""
    xi = params.lattice.dispersion_table()
    eps = params.epsilon
    return {int(k): float(np.sqrt(eps * eps - xi[k] ** 2))
            for k in np.flatnonzero(xi < eps)}


def self_energies(tau, params: PerturbedParams, table: BogoliubovTable):
    """(Sigma(tau), Sigma'(tau)); both vanish at tau = 0 and identically at eps = 0.

    Sigma  = (g/L) sum_q sinh(2 th)(2 sinh(2 th) + cosh(2 th)) cos^2(E tau) sin^2(w_q tau)
    Sigma' = same with sinh^2(2 th); Sigma >= Sigma' >= 0 pointwise.
    """
    tau = np.asarray(tau, dtype=float)
    s2 = np.sinh(2.0 * table.theta)
    c2 = np.cosh(2.0 * table.theta)
    coef = params.drive_strength / params.lattice.L
    env = np.cos(params.gapE * tau[..., None]) ** 2 \
        * np.sin(table.omega * tau[..., None]) ** 2
    sig = coef * (env * (s2 * (2.0 * s2 + c2))).sum(axis=-1)
    sigp = coef * (env * (s2 * s2)).sum(axis=-1)
    return sig, sigp


def _bare_grid(k: int, times: np.ndarray, params: PerturbedParams) -> np.ndarray:
    """G0^R(k; t_i, 0) stacked, shape (n_t, 2, 2)."""
    xi = params.lattice.dispersion_table()[k]
    eps = params.epsilon
    w = math.sqrt(xi * xi - eps * eps)
    c, s = np.cos(w * times), np.sin(w * times)
    igr = np.empty((times.size, 2, 2), dtype=complex)
    igr[:, 0, 0] = c - 1j * (xi / w) * s
    igr[:, 1, 1] = -c - 1j * (xi / w) * s
    igr[:, 0, 1] = igr[:, 1, 0] = -1j * (eps / w) * s
    return -1j * igr


def _self_energy_matrices(times: np.ndarray, params: PerturbedParams,
                          table: BogoliubovTable) -> np.ndarray:
    sig, sigp = self_energies(times, params, table)
    s = np.zeros((times.size, 2, 2))
    s[:, 0, 0] = s[:, 1, 1] = sig
    s[:, 0, 1] = s[:, 1, 0] = sigp
    return s


def _causal_convolution(g0: np.ndarray, h: np.ndarray) -> np.ndarray:
    """conv[i] = sum_{j<=i} g0[i-j] @ h[j] for (n,2,2) stacks, via FFT."""
    n = g0.shape[0]
    size = 1
    while size < 2 * n:
        size *= 2
    G = np.fft.fft(g0, n=size, axis=0)
    H = np.fft.fft(h, n=size, axis=0)
    conv = np.fft.ifft(np.einsum("tab,tbc->tac", G, H), axis=0)[:n]
    return conv


def dyson_solve(k: int, params: PerturbedParams, table: BogoliubovTable | None = None,
                s_matrices: np.ndarray | None = None) -> RetardedGFGrid:
    """Damped global fixed-point solve of the Volterra-Dyson equation for mode k.

    Trapezoidal memory integral; sweeps stop when the sup-norm update over all
    times and entries drops below fp_tol.  The update norm legitimately grows
    like (K*t_max)^m/m! for the first sweeps before factorial suppression wins,
    so only a non-finite or astronomically grown update aborts the iteration
    (diagnostic: smaller dt or damping).  Deterministic for fixed inputs.
    """
    if params.epsilon >= params.gapE:
        raise PairingDomainError(
            f"Dyson solve needs epsilon < gap ({params.gapE:.6g}), got {params.epsilon}")
    times = params.time_grid()
    g0 = _bare_grid(k, times, params)
    if params.epsilon == 0.0 or params.drive_strength == 0.0:
        return RetardedGFGrid(times, g0, 1)
    if s_matrices is None:
        if table is None:
            table = bogoliubov_table(params)
        s_matrices = _self_energy_matrices(times, params, table)
    dt = params.dt
    g = g0.copy()
    delta = math.inf
    for sweep in range(1, params.max_iter + 1):
        h = np.einsum("tab,tbc->tac", s_matrices, g)
        conv = _causal_convolution(g0, h)
        # trapezoid endpoint weights (the j=0 term vanishes: S(0) = 0, kept for clarity)
        conv -= 0.5 * np.einsum("ab,tbc->tac", g0[0], h)
        conv -= 0.5 * np.einsum("tab,bc->tac", g0, h[0])
        new = g0 + dt * conv
        new[0] = g0[0]
        delta = float(np.max(np.abs(new - g)))
        g = (1.0 - params.fp_damping) * g + params.fp_damping * new
        if delta < params.fp_tol:
            return RetardedGFGrid(times, g, sweep)
        if not math.isfinite(delta) or delta > 1e100:
            raise DysonDivergenceError(
                f"mode k={k}: update norm blew up to {delta:.3e} at sweep {sweep}; "
                "reduce dt or fp_damping")
    raise DysonDivergenceError(
        f"mode k={k}: no convergence after {params.max_iter} sweeps "
        f"(last update {delta:.3e})")


def volterra_solve(k: int, params: PerturbedParams, table: BogoliubovTable | None = None,
                   s_matrices: np.ndarray | None = None) -> RetardedGFGrid:
    """Sequential forward-substitution oracle for the same Volterra equation.

    Marches the trapezoidal discretization in time, solving a 2x2 linear
    system per step; used to cross-check the fixed point (agreement within
    10*fp_tol is the acceptance gate).
    """
    if params.epsilon >= params.gapE:
        raise PairingDomainError(
            f"Volterra solve needs epsilon < gap ({params.gapE:.6g}), got {params.epsilon}")
    times = params.time_grid()
    g0 = _bare_grid(k, times, params)
    if params.epsilon == 0.0 or params.drive_strength == 0.0:
        return RetardedGFGrid(times, g0, 1)
    if s_matrices is None:
        if table is None:
            table = bogoliubov_table(params)
        s_matrices = _self_energy_matrices(times, params, table)
    dt = params.dt
    n = times.size
    g = np.empty_like(g0)
    g[0] = g0[0]
    eye = np.eye(2)
    for i in range(1, n):
        acc = 0.5 * g0[i] @ (s_matrices[0] @ g[0])
        if i > 1:
            # sum_{j=1}^{i-1} g0[i-j] @ S[j] @ g[j]
            body = np.einsum("tab,tbc->ac", g0[i - 1:0:-1], np.einsum(
                "tab,tbc->tac", s_matrices[1:i], g[1:i]))
            acc += body
        lhs = eye - 0.5 * dt * (g0[0] @ s_matrices[i])
        g[i] = np.linalg.solve(lhs, g0[i] + dt * acc)
    return RetardedGFGrid(times, g, n)


def otoc_components(grid_values: np.ndarray) -> np.ndarray:
    """C(t) = |G11|^2 + |G12|^2 along a (n_t, 2, 2) grid."""
    return np.abs(grid_values[:, 0, 0]) ** 2 + np.abs(grid_values[:, 0, 1]) ** 2


def otoc_perturbed(params: PerturbedParams, workers: int = 1,
                   keep_per_k: bool = False) -> OtocSeries:
    """Dyson-resummed OTOC below the gap: c_tilde(t) = sum_k C_k(t).

    Self-energies are k-independent and precomputed once on the time grid.
    """
    times = params.time_grid()
    L = params.lattice.L
    if params.epsilon == 0.0:
        flat = np.ones(times.size)
        per_k = np.tile(flat, (L, 1)) if keep_per_k else None
        return OtocSeries(times, L * flat, flat.copy(), per_k, 1, 1.0)
    table = bogoliubov_table(params)
    s_matrices = _self_energy_matrices(times, params, table)

    def solve(k: int):
        grid = dyson_solve(k, params, table=table, s_matrices=s_matrices)
        return otoc_components(grid.values), grid.iterations_used

    results = parallel_map(solve, range(L), workers)
    c = np.vstack([r[0] for r in results])
    iters = np.array([r[1] for r in results])
    return OtocSeries(times, c.sum(axis=0), c[0].copy(),
                      c if keep_per_k else None,
                      int(iters.max()), float(iters.mean()))


def otoc_bare_series(params: PerturbedParams, keep_per_k: bool = False) -> OtocSeries:
    """Leading-order OTOC from the closed-form bare propagators, any epsilon.

    For eps above the gap the unstable modes dominate with rates
    sqrt(eps^2 - xi_k^2); this synthesizes the strong-perturbation contrast
    without a Dyson solve (and must not be called with eps equal to some xi_k).
    """
    times = params.time_grid()
    xi = params.lattice.dispersion_table()
    eps = params.epsilon
    if np.any(xi == eps):
        raise PairingDomainError("epsilon coincides with a grid dispersion value")
    L = params.lattice.L
    c = np.empty((L, times.size))
    for k in range(L):
        x = xi[k]
        if x > eps:
            w = math.sqrt(x * x - eps * eps)
            c11 = np.cos(w * times) ** 2 + (x / w) ** 2 * np.sin(w * times) ** 2
            c12 = (eps / w) ** 2 * np.sin(w * times) ** 2
        else:
            kap = math.sqrt(eps * eps - x * x)
            c11 = np.cosh(kap * times) ** 2 + (x / kap) ** 2 * np.sinh(kap * times) ** 2
            c12 = (eps / kap) ** 2 * np.sinh(kap * times) ** 2
        c[k] = c11 + c12
    return OtocSeries(times, c.sum(axis=0), c[0].copy(),
                      c if keep_per_k else None, 0, 0.0)


def subexp_diagnostic(series: OtocSeries, window: float,
                      max_rate: float | None = None,
                      noise_floor: float = 1e-3) -> SubexpReport:
    """Least-squares slopes of log(c_tilde) over consecutive windows.

    non_increasing is true when each window slope is at most its predecessor
    plus the noise floor (exact exponentials count as non-increasing).  When
    max_rate is supplied, a final-window slope above 0.9 * 2 * max_rate flags
    the exponential regime.
    """
    t, c = series.times, series.c_tilde
    if t[-1] < 2.0 * window:
        raise ValueError(f"series spans {t[-1]:.6g} but needs >= 2 windows of {window}")
    n_win = int(t[-1] / window + 1e-9)
    slopes = []
    logc = np.log(c)
    for i in range(n_win):
        sel = (t >= i * window) & (t <= (i + 1) * window)
        tw, yw = t[sel], logc[sel]
        if tw.size < 2 or np.ptp(yw) == 0.0:
            slopes.append(0.0)
            continue
        tbar = tw - tw.mean()
        slopes.append(float((tbar @ (yw - yw.mean())) / (tbar @ tbar)))
    slopes = np.array(slopes)
    non_inc = bool(np.all(np.diff(slopes) <= noise_floor))
    expo = bool(max_rate is not None and slopes[-1] > 0.9 * 2.0 * max_rate)
    return SubexpReport(window, slopes, non_inc, expo)
