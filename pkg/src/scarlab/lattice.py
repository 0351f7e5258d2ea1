"""Momentum-space bookkeeping shared by every solver in the package.

One-dimensional Brillouin zone with L evenly spaced momenta k_j = -pi + 2*pi*j/L
(j = 0 .. L-1), a gapped cosine band xi_k = -2*t*cos(k) + mu, and a Lorentzian
stand-in for on-shell delta functions.  All momentum conservation elsewhere is
done with integer index arithmetic modulo L, which is exact because xi has
period 2*pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LatticeModel:
    """Gapped 1D band with L grid momenta and a broadening eta.

    eta defaults to 3/L, the value used for the reference L = 2**10 runs.
    """

    L: int
    hopping: float = 1.0
    chem_potential: float = 2.5
    eta: float | None = None

    def __post_init__(self):
        if self.L < 4:
            raise ValueError(f"L must be >= 4, got {self.L}")
        if self.hopping <= 0:
            raise ValueError(f"hopping must be > 0, got {self.hopping}")
        if self.eta is None:
            object.__setattr__(self, "eta", 3.0 / self.L)
        if self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.gap() <= 0:
            raise ValueError(
                f"dispersion must be positive: mu - 2t = {self.gap()} <= 0"
            )

    def gap(self) -> float:
        """Band minimum E = mu - 2t (the dispersion at k = 0)."""
        return self.chem_potential - 2.0 * self.hopping

    @property
    def grid(self) -> "MomentumGrid":
        return MomentumGrid(self.L)

    def dispersion_table(self) -> np.ndarray:
        """xi_k on the full grid, shape (L,)."""
        return dispersion(self, self.grid.momenta)


@dataclass(frozen=True)
class MomentumGrid:
    """Momenta k_j = -pi + 2*pi*j/L covering [-pi, pi) exactly once."""

    L: int
    momenta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = -np.pi + 2.0 * np.pi * np.arange(self.L) / self.L
        k.setflags(write=False)
        object.__setattr__(self, "momenta", k)

    def __len__(self) -> int:
        return self.L


def dispersion(model: LatticeModel, k):
    """xi_k = -2*t*cos(k) + mu; even in k, periodic with period 2*pi."""
    return -2.0 * model.hopping * np.cos(k) + model.chem_potential


def gap(model: LatticeModel) -> float:
    """E = mu - 2t, the minimum of the band for positive hopping."""
    return model.gap()


def delta_broadened(x, eta: float):
    """Lorentzian delta (1/pi) * eta / (x^2 + eta^2).

    This is exactly -Im[1/(x + i*eta)] / pi, the imaginary part of the
    retarded pole, so resonance sums built from it match the complex-pole
    evaluation identically.
    """
    if eta <= 0:
        raise ValueError(f"eta must be > 0, got {eta}")
    x = np.asarray(x, dtype=float)
    return (eta / np.pi) / (x * x + eta * eta)


def wrap_index(i, L: int):
    """Fold a signed index (or array of them) back onto 0..L-1.

    Combined indices like a+b-c wrap onto the grid with the dispersion
    unchanged, since the leftover momentum offset is a multiple of 2*pi.
    """
    return np.mod(i, L)
