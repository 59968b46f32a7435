"""Container for time slices of a wavefunction on a fixed grid."""

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec

NORM_TOL = 1e-8


@dataclass(frozen=True)
class WaveField:
    """psi[i, j] = wavefunction at times[i], grid point j.

    Every stored slice must carry unit probability: sum |psi|^2 dx = 1 within
    NORM_TOL.  times need not be spaced by grid.dt_pde (slices may be stored
    with a stride) but must be strictly increasing.
    """

    grid: GridSpec
    times: np.ndarray
    psi: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        psi = np.asarray(self.psi, dtype=np.complex128)
        if times.ndim != 1 or times.size < 1:
            raise ValueError("times must be a non-empty 1-D array")
        if psi.shape != (times.size, self.grid.n_points):
            raise ValueError(
                f"psi shape {psi.shape} does not match "
                f"({times.size}, {self.grid.n_points})"
            )
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("times must be strictly increasing")
        norms = np.sum(np.abs(psi) ** 2, axis=1) * self.grid.dx
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst > NORM_TOL:
            raise ValueError(f"slice norm deviates from 1 by {worst:.3e} > {NORM_TOL:.1e}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "psi", psi)

    @property
    def n_times(self) -> int:
        return self.times.size

    def nearest_time_index(self, t: float) -> int:
        """Index of the stored slice closest to t."""
        return int(np.argmin(np.abs(self.times - t)))

    def density(self) -> np.ndarray:
        """|psi|^2 for all slices, shape (n_times, n_points)."""
        return np.abs(self.psi) ** 2
