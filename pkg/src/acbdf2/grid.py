"""Cell-centered finite differences on a square with homogeneous Neumann boundary.

Fields are plain ``(m, m)`` float arrays indexed ``u[j, i]``: row ``j`` is the
y index, column ``i`` the x index, so ``u.ravel()`` runs along x first. Cell
``(i, j)`` sits at ``((i + 1/2) h, (j + 1/2) h)`` with zero-based indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class Grid:
    m: int
    side_length: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ValueError(f"grid needs m >= 2 cells per axis, got {self.m}")
        if not self.side_length > 0:
            raise ValueError(f"side_length must be positive, got {self.side_length}")

    @property
    def spacing(self) -> float:
        return self.side_length / self.m

    @property
    def shape(self) -> tuple[int, int]:
        return (self.m, self.m)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.spacing

    def check(self, u: np.ndarray) -> np.ndarray:
        """Return ``u`` as a float array, raising if it does not live on this grid."""
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            raise ValueError(f"field of shape {u.shape} does not match grid {self.shape}")
        return u

    def sample(self, f: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Restrict ``f(x, y)`` pointwise to the cell centers."""
        x, y = np.meshgrid(self.centers, self.centers, indexing="xy")
        return np.broadcast_to(np.asarray(f(x, y), dtype=float), self.shape).copy()

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """Five-point Laplacian; boundary faces carry zero flux."""
        u = self.check(u)
        out = np.zeros_like(u)
        fx = u[:, 1:] - u[:, :-1]
        out[:, :-1] += fx
        out[:, 1:] -= fx
        fy = u[1:, :] - u[:-1, :]
        out[:-1, :] += fy
        out[1:, :] -= fy
        out /= self.spacing**2
        return out

    def neighbor_count(self) -> np.ndarray:
        """Number of interior faces of each cell (2 at corners, 3 on edges, 4 inside)."""
        c = np.full(self.shape, 4.0)
        c[0, :] -= 1
        c[-1, :] -= 1
        c[:, 0] -= 1
        c[:, -1] -= 1
        return c

    def gradient(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Face differences on interior x-faces ``(m, m-1)`` and y-faces ``(m-1, m)``."""
        u = self.check(u)
        h = self.spacing
        return (u[:, 1:] - u[:, :-1]) / h, (u[1:, :] - u[:-1, :]) / h

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        u = self.check(u)
        v = self.check(v)
        return float(self.spacing**2 * np.sum(u * v))

    def grad_inner(self, u: np.ndarray, v: np.ndarray) -> float:
        # face-averaged product: each interior face is shared by two cells at weight 1/2
        gux, guy = self.gradient(u)
        gvx, gvy = self.gradient(v)
        return float(self.spacing**2 * (np.sum(gux * gvx) + np.sum(guy * gvy)))

    def grad_norm_sq(self, u: np.ndarray) -> float:
        return self.grad_inner(u, u)

    def l2_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.inner(u, u)))

    def h1_norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(self.inner(u, u) + self.grad_norm_sq(u)))


def sup_norm(u: np.ndarray) -> float:
    """Pointwise maximum of ``|u|``."""
    return float(np.max(np.abs(u)))


def write_field(path, u: np.ndarray, grid: Grid, t: float = 0.0) -> None:
    """Write a snapshot as ``# m=.. L=.. t=..`` followed by ``m`` CSV rows (row = y index)."""
    u = grid.check(u)
    lines = [f"# m={grid.m} L={grid.side_length!r} t={float(t)!r}"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in u]
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> tuple[np.ndarray, Grid, float]:
    text = Path(path).read_text().splitlines()
    header = dict(tok.split("=", 1) for tok in text[0].lstrip("#").split())
    grid = Grid(int(header["m"]), float(header["L"]))
    u = np.array([[float(v) for v in line.split(",")] for line in text[1 : 1 + grid.m]])
    return grid.check(u), grid, float(header["t"])
