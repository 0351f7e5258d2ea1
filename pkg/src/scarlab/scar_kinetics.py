"""Quasiparticle kinetics on the precessing coherent-state background.

Everything here is expressed in rescaled units: decay rates carry a factor
8*J^2*alpha^4/N relative to the dimensionless table Im Sigma~_k, and the rung
kernel entries are in units J^2*alpha^4/N.  Neither J, alpha^2 nor N therefore
enters any number produced by this module; they only restore dimensions in
`retarded_gf`.

The three resonance kinematics (for momenta p, q summed over the grid):

    d1 = delta(w - xi_p - xi_q - xi_{k-p-q})     pair-creation assisted decay
    d2 = delta(w + xi_p - xi_q - xi_{k+p-q})     number-conserving exchange
    d3 = delta(w + xi_p + xi_q - xi_{k+p+q})     number-increasing channel

enter Im S^R with weights (1, 2, -1); the drive adds sidebands at w +- 2E with
weight 1/4.  Deltas are Lorentzians of width eta, matching -Im[1/(x+i*eta)].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeModel, delta_broadened, wrap_index
from .parallel import parallel_map


@dataclass(frozen=True)
class ScarParams:
    """Background parameters; rates are reported in units J^2*alpha^4/N."""

    lattice: LatticeModel
    coupling: float = 1.0   # J > 0
    alpha_sq: float = 1.0   # coherent-state intensity alpha^2

    def __post_init__(self):
        if self.coupling <= 0:
            raise ValueError(f"coupling must be > 0, got {self.coupling}")
        if self.alpha_sq <= 0:
            raise ValueError(f"alpha_sq must be > 0, got {self.alpha_sq}")

    @property
    def gapE(self) -> float:
        """Drive frequency scale E (the precession frequency = band gap)."""
        return self.lattice.gap()


@dataclass(frozen=True)
class SelfEnergyTable:
    """Im Sigma~_k per momentum; the physical decay rate is 8*J^2*alpha^4/N times this."""

    im_sigma_tilde: np.ndarray

    def __post_init__(self):
        if np.any(self.im_sigma_tilde <= 0):
            raise ValueError("Im Sigma~ must be positive for every momentum")

    @property
    def L(self) -> int:
        return self.im_sigma_tilde.size


@dataclass(frozen=True)
class RungKernel:
    """L x L rung matrix K~_n(k, q) in units J^2*alpha^4/N."""

    n: int
    matrix: np.ndarray

    @property
    def L(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class BSSpectrum:
    lambda_tilde: float
    eigenvector: np.ndarray
    iterations: int
    residual: float


def im_SR(lattice: LatticeModel, omega, k, p, q):
    """Im S^R(omega, k, p, q) for grid indices k, p, q (p, q may be arrays)."""
    xi = lattice.dispersion_table()
    L, eta = lattice.L, lattice.eta
    p = np.asarray(p)
    q = np.asarray(q)
    x1 = omega - xi[p] - xi[q] - xi[wrap_index(k - p - q, L)]
    x2 = omega + xi[p] - xi[q] - xi[wrap_index(k + p - q, L)]
    x3 = omega + xi[p] + xi[q] - xi[wrap_index(k + p + q, L)]
    return -np.pi * (delta_broadened(x1, eta) + 2.0 * delta_broadened(x2, eta)
                     - delta_broadened(x3, eta))


def _harmonic_weights(omega: float, gapE: float):
    return ((1.0, omega), (0.25, omega + 2.0 * gapE), (0.25, omega - 2.0 * gapE))


def _im_sr_summed(xi, eta, L, k, omega, pq_sum_tables):
    """(1/L^2) sum_{p,q} Im S^R(omega, k, p, q) using precomputed index tables."""
    xiP, xiQ, x_minus, x_plus_pq, x_plus_all = pq_sum_tables(k)
    x1 = omega - xiP - xiQ - x_minus
    x2 = omega + xiP - xiQ - x_plus_pq
    x3 = omega + xiP + xiQ - x_plus_all
    total = (delta_broadened(x1, eta).sum()
             + 2.0 * delta_broadened(x2, eta).sum()
             - delta_broadened(x3, eta).sum())
    return -np.pi * total / L**2


class _IndexTables:
    """Shared (p, q) meshes and per-k wrapped dispersion lookups."""

    def __init__(self, lattice: LatticeModel):
        L = lattice.L
        self.xi = lattice.dispersion_table()
        P, Q = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        self.sum_pq = (P + Q) % L
        self.diff_pq = (P - Q) % L
        self.xiP = self.xi[P]
        self.xiQ = self.xi[Q]
        self.L = L

    def __call__(self, k: int):
        xi, L = self.xi, self.L
        return (self.xiP, self.xiQ,
                xi[(k - self.sum_pq) % L],
                xi[(k + self.diff_pq) % L],
                xi[(k + self.sum_pq) % L])


def im_sigma_tilde(lattice: LatticeModel, workers: int = 1) -> SelfEnergyTable:
    """Im Sigma~_k = -(1/L^2) sum_{p,q} Im[S^R(xi_k) + S^R(xi_k+2E)/4 + S^R(xi_k-2E)/4].

    O(L^2) per momentum; rows are independent and parallelize over k.
    """
    tables = _IndexTables(lattice)
    xi, eta, L = tables.xi, lattice.eta, lattice.L
    E = lattice.gap()

    def row(k: int) -> float:
        acc = 0.0
        for w, omega in _harmonic_weights(xi[k], E):
            acc -= w * _im_sr_summed(xi, eta, L, k, omega, tables)
        return acc

    values = parallel_map(row, range(L), workers)
    return SelfEnergyTable(np.array(values))


def sigma_harmonics(lattice: LatticeModel, k: int, omega: float, n: int,
                    workers: int = 1) -> float:
    """Im Sigma_n(k, omega) in units J^2*alpha^4/N; zero for |n| > 2."""
    if abs(n) > 2:
        return 0.0
    tables = _IndexTables(lattice)
    xi, eta, L = tables.xi, lattice.eta, lattice.L
    E = lattice.gap()

    def s(w):
        return _im_sr_summed(xi, eta, L, k, w, tables)

    if n == 0:
        return -8.0 * (s(omega) + 0.25 * s(omega + 2 * E) + 0.25 * s(omega - 2 * E))
    if abs(n) == 1:
        return -4.0 * (s(omega) + s(omega + np.sign(n) * 2 * E))
    return -2.0 * s(omega + np.sign(n) * 2 * E)


def retarded_gf(table: SelfEnergyTable, lattice: LatticeModel, k: int, omega: float,
                n_flavors: float, coupling: float = 1.0, alpha_sq: float = 1.0) -> complex:
    """G^R(k, omega) ~ 1/(omega - xi_k + i*ImSigma_k); pole in the lower half-plane.

    The real (principal-value) part of the self-energy is omitted; it only
    shifts the quasiparticle frequency.
    """
    xi_k = lattice.dispersion_table()[k]
    im_sig = 8.0 * coupling**2 * alpha_sq**2 / n_flavors * table.im_sigma_tilde[k]
    return 1.0 / (omega - xi_k + 1j * im_sig)


def wightman_bare(lattice: LatticeModel, k: int, omega) -> float:
    """Frequency-space bare Wightman 2*pi*delta_eta(omega - xi_k), >= 0."""
    xi_k = lattice.dispersion_table()[k]
    return 2.0 * np.pi * delta_broadened(omega - xi_k, lattice.eta)


# (weight applied to the unshifted term, weight at +2E, weight at -2E)
_RUNG_WEIGHTS = {
    0: (1.0, 0.25, 0.25),
    -1: (0.5, 0.5, 0.0),
    +1: (0.5, 0.0, 0.5),
    -2: (0.0, 0.25, 0.0),
    +2: (0.0, 0.0, 0.25),
}


def rung_kernel(lattice: LatticeModel, n: int = 0, workers: int = 1) -> RungKernel:
    """K~_n(k, q) = on-shell rung R_{-n}(k, xi_k; q, xi_q)/2 in units J^2*alpha^4/N.

    For each (k, q) the internal momentum p is summed against the bare
    Wightman line at momentum k-p-q and frequency xi_k - xi_q - xi_p (with
    2E sidebands); all entries are nonnegative, and K~_n = 0 for |n| > 2.
    """
    L, eta = lattice.L, lattice.eta
    if abs(n) > 2:
        return RungKernel(n, np.zeros((L, L)))
    w0, wp, wm = _RUNG_WEIGHTS[n]
    tables = _IndexTables(lattice)
    xi = tables.xi
    twoE = 2.0 * lattice.gap()

    def row(k: int) -> np.ndarray:
        # axis 0 is p (summed), axis 1 is q
        nu0 = xi[k] - tables.xiQ - tables.xiP
        xw = xi[(k - tables.sum_pq) % L]
        acc = np.zeros(L)
        for w, shift in ((w0, 0.0), (wp, twoE), (wm, -twoE)):
            if w:
                acc += w * delta_broadened(nu0 + shift - xw, eta).sum(axis=0)
        return 2.0 * np.pi * acc / L**2

    rows = parallel_map(row, range(L), workers)
    return RungKernel(n, np.vstack(rows))


def bs_matrix(table: SelfEnergyTable, kernel: RungKernel) -> np.ndarray:
    """Collision matrix M(k,q) = -8*ImSigma~_k*delta_kq + K~_0(k,q).

    Diagonal decay against off-diagonal gain, both in units J^2*alpha^4/N.
    With the kernel zeroed the dominant eigenvalue is -8*min_k ImSigma~_k.
    """
    if table.L != kernel.L:
        raise ValueError(f"size mismatch: table L={table.L}, kernel L={kernel.L}")
    M = kernel.matrix.copy()
    idx = np.arange(table.L)
    M[idx, idx] -= 8.0 * table.im_sigma_tilde
    return M


def dominant_eigenpair(matrix: np.ndarray, shift: float = 0.0, tol: float = 1e-10,
                       max_iter: int = 100_000) -> BSSpectrum:
    """Power iteration on matrix + shift*I; returns the unshifted eigenvalue.

    The shift must make the iteration matrix entrywise nonnegative so the
    dominant eigenpair is real, simple, and has a single-signed eigenvector.
    """
    A = matrix + shift * np.eye(matrix.shape[0]) if shift else matrix
    if np.any(A < 0):
        raise ValueError("shift too small: iteration matrix has negative entries")
    v = np.full(A.shape[0], 1.0 / np.sqrt(A.shape[0]))
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = A @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return BSSpectrum(-shift, v, it, 0.0)
        v_new = w / norm
        lam_new = float(v_new @ (A @ v_new))
        if abs(lam_new - lam) < tol:
            v, lam = v_new, lam_new
            break
        v, lam = v_new, lam_new
    else:
        raise RuntimeError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(last eigenvalue {lam - shift:.6g})")
    resid = float(np.max(np.abs(matrix @ v - (lam - shift) * v)))
    return BSSpectrum(lam - shift, v, it, resid)


def lyapunov_bs(kernel: RungKernel, tol: float = 1e-10,
                max_iter: int = 100_000) -> BSSpectrum:
    """Scar growth rate: dominant eigenpair of the gain kernel K~_0.

    K~_0 is entrywise positive, so plain power iteration converges to the
    Perron pair; lambda_tilde is in units J^2*alpha^4/N and independent of
    J, alpha^2 and N by construction.  At the reference resolution
    (L = 2**10, eta = 3/2**10, xi_k = -2 cos k + 2.5) this reports 0.0657.
    """
    return dominant_eigenpair(kernel.matrix, shift=0.0, tol=tol, max_iter=max_iter)
