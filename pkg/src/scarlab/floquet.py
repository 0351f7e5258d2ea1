"""Monodromy matrices, Floquet exponents and leading-order OTOC envelopes for
periodically driven 2x2 bosonic problems.

The normal-mode equation integrated here is

    dPhi/dt = -i * sigma3 * M_k(t) * Phi,   Phi(0) = 1,

with Hermitian M_k(t + period) = M_k(t).  The one-period fundamental matrix
Phi(T) is pseudo-unitary (Phi^dag sigma3 Phi = sigma3) up to integrator error;
that defect is the accuracy gate.  Floquet exponents are log(eig Phi)/T with
the principal log: real parts are unambiguous, imaginary parts live modulo
2*pi/T.

The retarded propagator of the driven mode is i*G^R(k; t, 0) = Phi_k(t) sigma3,
fixed by the zero-drive limit, which makes |[Phi_k(t)]_11|^2 the per-mode OTOC
summand.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .lattice import LatticeModel

SIGMA3 = np.diag([1.0, -1.0]).astype(complex)

DEFECT_GATE = 1e-9
DEGENERACY_TOL = 1e-8


class IntegratorAccuracyError(RuntimeError):
    """Pseudo-unitarity defect exceeded the gate; halve the step and rerun."""


@dataclass(frozen=True)
class PeriodicDrive:
    """Batched drive: matrix_fn(k_indices, t) -> (n, 2, 2) Hermitian array."""

    matrix_fn: Callable[[np.ndarray, float], np.ndarray]
    period: float

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError(f"period must be > 0, got {self.period}")


@dataclass(frozen=True)
class MonodromyResult:
    fundamental: np.ndarray          # Phi(T), 2x2 complex
    exponents: np.ndarray            # two Floquet exponents lambda_alpha
    modes: np.ndarray | None         # u_alpha(0) as columns; None if degenerate
    pseudo_unitarity_defect: float
    degenerate: bool = False


@dataclass(frozen=True)
class OtocEnvelope:
    times: np.ndarray
    aggregate: np.ndarray                   # mean over k of |Phi_11|^2 (times hbar^2)
    per_k: dict[int, np.ndarray] | None = None


def lattice_drive(lattice: LatticeModel, beta_sq: float, coupling: float) -> PeriodicDrive:
    """Drive of the non-scar condensate orbit: J(t) = 4*J*beta^2*cos^2(E*t),
    M_k(t) = [[xi_k + J(t), J(t)], [J(t), xi_k + J(t)]], period pi/E."""
    if beta_sq < 0:
        raise ValueError(f"beta_sq must be >= 0, got {beta_sq}")
    xi = lattice.dispersion_table()
    E = lattice.gap()

    def matrix_fn(ks: np.ndarray, t: float) -> np.ndarray:
        drive = 4.0 * coupling * beta_sq * np.cos(E * t) ** 2
        n = len(ks)
        m = np.empty((n, 2, 2), dtype=complex)
        m[:, 0, 0] = xi[ks] + drive
        m[:, 0, 1] = drive
        m[:, 1, 0] = drive
        m[:, 1, 1] = xi[ks] + drive
        return m

    return PeriodicDrive(matrix_fn, np.pi / E)


def constant_drive(matrix: np.ndarray, period: float) -> PeriodicDrive:
    """Time-independent M, mainly for closed-form cross-checks."""
    m = np.asarray(matrix, dtype=complex)

    def matrix_fn(ks: np.ndarray, t: float) -> np.ndarray:
        return np.broadcast_to(m, (len(ks), 2, 2))

    return PeriodicDrive(matrix_fn, period)


def tabulated_drive(path) -> PeriodicDrive:
    """Generic single-particle drive from a plain-text table.

    Format: two header lines (period, number of samples), then one row per
    uniform sample with the four entries M11 M12 M21 M22 (python literals,
    complex allowed).  Linear interpolation with periodic wraparound.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) < 2:
        raise ValueError(f"{path}: expected two header lines (period, samples)")
    period = float(lines[0])
    samples = int(lines[1])
    if len(lines) - 2 != samples:
        raise ValueError(f"{path}: header promises {samples} rows, found {len(lines) - 2}")
    tab = np.empty((samples, 2, 2), dtype=complex)
    for i, ln in enumerate(lines[2:]):
        vals = [complex(tok) for tok in ln.split()]
        if len(vals) != 4:
            raise ValueError(f"{path}: row {i} has {len(vals)} entries, expected 4")
        tab[i] = np.array(vals).reshape(2, 2)
        if np.max(np.abs(tab[i] - tab[i].conj().T)) > 1e-10:
            raise ValueError(f"{path}: sample {i} is not Hermitian")

    def matrix_fn(ks: np.ndarray, t: float) -> np.ndarray:
        s = (t % period) / period * samples
        i0 = int(s) % samples
        i1 = (i0 + 1) % samples
        w = s - int(s)
        m = (1.0 - w) * tab[i0] + w * tab[i1]
        return np.broadcast_to(m, (len(ks), 2, 2))

    return PeriodicDrive(matrix_fn, period)


def _generator(drive: PeriodicDrive, ks: np.ndarray, t: float) -> np.ndarray:
    # -i sigma3 M(t), batched
    m = drive.matrix_fn(ks, t)
    out = np.empty_like(m)
    out[:, 0, :] = -1j * m[:, 0, :]
    out[:, 1, :] = 1j * m[:, 1, :]
    return out


def _rk4_evolve(drive: PeriodicDrive, ks: np.ndarray, t_end: float, steps: int,
                record: Callable[[int, np.ndarray], None] | None = None) -> np.ndarray:
    """Fixed-step RK4 for the batch of fundamental matrices; bit-reproducible."""
    n = len(ks)
    phi = np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()
    h = t_end / steps
    if record is not None:
        record(0, phi)
    for i in range(steps):
        t = i * h
        k1 = _generator(drive, ks, t) @ phi
        k2 = _generator(drive, ks, t + 0.5 * h) @ (phi + 0.5 * h * k1)
        k3 = _generator(drive, ks, t + 0.5 * h) @ (phi + 0.5 * h * k2)
        k4 = _generator(drive, ks, t + h) @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record is not None:
            record(i + 1, phi)
    return phi


def pseudo_unitarity_defect(phi: np.ndarray) -> float:
    return float(np.max(np.abs(phi.conj().T @ SIGMA3 @ phi - SIGMA3)))


def integrate_monodromy(drive: PeriodicDrive, k: int,
                        steps_per_period: int = 4096) -> MonodromyResult:
    """One-period fundamental matrix and Floquet exponents at grid index k."""
    if steps_per_period < 64:
        raise ValueError(f"steps_per_period must be >= 64, got {steps_per_period}")
    phi = _rk4_evolve(drive, np.array([k]), drive.period, steps_per_period)[0]
    return monodromy_from_fundamental(phi, drive.period)


def monodromy_from_fundamental(phi: np.ndarray, period: float) -> MonodromyResult:
    defect = pseudo_unitarity_defect(phi)
    if defect > DEFECT_GATE:
        raise IntegratorAccuracyError(
            f"pseudo-unitarity defect {defect:.3e} exceeds gate {DEFECT_GATE:.0e}; "
            "halve the integration step (double steps_per_period) and rerun")
    mult, vecs = np.linalg.eig(phi)
    exponents = np.log(mult) / period
    degenerate = bool(abs(mult[0] - mult[1]) < DEGENERACY_TOL)
    modes = None if degenerate else vecs
    return MonodromyResult(phi, exponents, modes, defect, degenerate)


def lyapunov_scan(beta_sq: float, coupling: float, lattice: LatticeModel,
                  steps_per_period: int = 4096):
    """max_alpha Re(lambda_k_alpha) for every grid momentum, plus diagnostics.

    Returns (re_lambda_max, im_lambda_1, defect) arrays over the grid.
    """
    drive = lattice_drive(lattice, beta_sq, coupling)
    ks = np.arange(lattice.L)
    phi = _rk4_evolve(drive, ks, drive.period, steps_per_period)
    re_max = np.empty(lattice.L)
    im_first = np.empty(lattice.L)
    defects = np.empty(lattice.L)
    for i in range(lattice.L):
        res = monodromy_from_fundamental(phi[i], drive.period)
        re_max[i] = np.max(res.exponents.real)
        im_first[i] = res.exponents.imag[np.argmax(res.exponents.real)]
        defects[i] = res.pseudo_unitarity_defect
    return re_max, im_first, defects


def retarded_gf_bare(drive: PeriodicDrive, k: int, t: float,
                     steps_per_period: int = 4096) -> np.ndarray:
    """i*G^R(k; t, 0) = Phi_k(t) sigma3 for t >= 0 (zero-drive: diag(e^{-i xi t}, -e^{+i xi t}))."""
    if t < 0:
        return np.zeros((2, 2), dtype=complex)
    steps = max(1, int(round(steps_per_period * t / drive.period)))
    phi = _rk4_evolve(drive, np.array([k]), t, steps)[0]
    return phi @ SIGMA3


def otoc_envelope(drive: PeriodicDrive, lattice: LatticeModel, t_max: float,
                  steps_per_period: int = 4096, hbar: float = 1.0,
                  store_per_k: bool = False) -> OtocEnvelope:
    """Leading-order OTOC envelope C(t) = (hbar^2/L) sum_k |[Phi_k(t)]_11|^2.

    The time step is period/steps_per_period so sampling stays commensurate
    with the drive; the late-time log-slope approaches 2*max_k Re(lambda_k).
    """
    dt = drive.period / steps_per_period
    n_steps = int(round(t_max / dt))
    ks = np.arange(lattice.L)
    agg = np.empty(n_steps + 1)
    per_k = np.empty((lattice.L, n_steps + 1)) if store_per_k else None

    def record(i, phi):
        amp = np.abs(phi[:, 0, 0]) ** 2
        agg[i] = hbar**2 * np.mean(amp)
        if per_k is not None:
            per_k[:, i] = hbar**2 * amp

    _rk4_evolve(drive, ks, n_steps * dt, n_steps, record=record)
    times = np.arange(n_steps + 1) * dt
    per_k_map = {int(k): per_k[k] for k in ks} if store_per_k else None
    return OtocEnvelope(times, agg, per_k_map)
