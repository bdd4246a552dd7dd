"""Run measurements: bound monitoring, energy series, error orders, bubble radius."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid, sup_norm


@dataclass
class RunSeries:
    t: list = field(default_factory=list)
    sup_norm: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    modified_energy: list = field(default_factory=list)
    tau: list = field(default_factory=list)

    COLUMNS = ("t", "sup_norm", "energy", "modified_energy", "tau")

    def append(self, t, sup, energy, modified, tau) -> None:
        if self.t and not t > self.t[-1]:
            raise ValueError(f"series times must increase: {t} after {self.t[-1]}")
        self.t.append(float(t))
        self.sup_norm.append(float(sup))
        self.energy.append(float(energy))
        self.modified_energy.append(float(modified))
        self.tau.append(float(tau))

    def __len__(self) -> int:
        return len(self.t)

    def array(self, name: str) -> np.ndarray:
        return np.asarray(getattr(self, name))

    def to_csv(self, path) -> None:
        lines = [",".join(self.COLUMNS)]
        for row in zip(*(getattr(self, c) for c in self.COLUMNS)):
            lines.append(",".join(f"{v:.17g}" for v in row))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunSeries":
        out = cls()
        for line in Path(path).read_text().splitlines()[1:]:
            out.append(*(float(v) for v in line.split(",")))
        return out


@dataclass
class ConvergenceRow:
    N: int
    tau_max: float
    gamma_max_observed: float
    err_inf: float
    order_inf: float = math.nan
    err_h1: float = math.nan
    order_h1: float = math.nan


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)

    COLUMNS = ("N", "tau_max", "gamma_max_observed", "err_inf", "order_inf", "err_h1", "order_h1")

    def add(self, N, tau_max, gamma_max_observed, err_inf, err_h1) -> ConvergenceRow:
        row = ConvergenceRow(N, tau_max, gamma_max_observed, err_inf, err_h1=err_h1)
        if self.rows:
            prev = self.rows[-1]
            ratio = prev.tau_max / tau_max
            row.order_inf = observed_order(prev.err_inf, err_inf, ratio)
            row.order_h1 = observed_order(prev.err_h1, err_h1, ratio)
        self.rows.append(row)
        return row

    def to_csv(self, path) -> None:
        lines = [",".join(self.COLUMNS)]
        for r in self.rows:
            vals = [getattr(r, c) for c in self.COLUMNS]
            lines.append(",".join(str(v) if isinstance(v, int) else ("" if math.isnan(v) else f"{v:.17g}") for v in vals))
        Path(path).write_text("\n".join(lines) + "\n")

    def format(self) -> str:
        head = f"{'N':>6} {'tau':>10} {'max gam':>8} {'e_inf':>10} {'order':>6} {'e_H1':>10} {'order':>6}"
        out = [head]
        for r in self.rows:
            o1 = "--" if math.isnan(r.order_inf) else f"{r.order_inf:.2f}"
            o2 = "--" if math.isnan(r.order_h1) else f"{r.order_h1:.2f}"
            out.append(
                f"{r.N:>6} {r.tau_max:>10.3e} {r.gamma_max_observed:>8.3f} {r.err_inf:>10.3e} {o1:>6} {r.err_h1:>10.3e} {o2:>6}"
            )
        return "\n".join(out)


def richardson_errors(coarse: np.ndarray, fine: np.ndarray, grid: Grid) -> tuple[float, float]:
    """Max-norm and discrete H1 norm of ``coarse - fine``."""
    diff = grid.check(coarse) - grid.check(fine)
    return sup_norm(diff), grid.h1_norm(diff)


def observed_order(err_coarse: float, err_fine: float, ratio: float = 2.0) -> float:
    """``log(err_coarse / err_fine) / log(ratio)``; NaN when either error is not positive."""
    if not (err_coarse > 0 and err_fine > 0) or ratio <= 0 or ratio == 1:
        return math.nan
    return math.log(err_coarse / err_fine) / math.log(ratio)


def bubble_radius(phi: np.ndarray, grid: Grid) -> float:
    """Equivalent-disk radius ``sqrt(A / pi)`` of the region ``phi > 0``."""
    area = grid.spacing**2 * np.count_nonzero(grid.check(phi) > 0)
    return math.sqrt(area / math.pi)


def mbp_check(series: RunSeries, slack: float = 0.0) -> bool:
    if slack < 0:
        raise ValueError(f"slack must be nonnegative, got {slack}")
    return bool(np.all(series.array("sup_norm") <= 1.0 + slack))


def max_increase(values) -> float:
    """Largest one-step increase in a series (0 if it never increases)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(max(np.max(np.diff(v)), 0.0))
