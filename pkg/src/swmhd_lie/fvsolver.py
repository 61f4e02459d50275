"""First-order finite-volume solver for 1D rotating shallow-water MHD.

State per cell: q = (h, hu, hv, ha, hb).  The h, hu, hv and hb equations are
advanced with Rusanov fluxes; the (ha) equation carries the nonconservative
products u (ha)_x (upwinded on the sign of u) and v (ha)_x (central, it enters
the hb equation).  Coriolis sources sit inside each stage of SSP-RK2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np


class PositivityError(FloatingPointError):
    pass


class CFLError(FloatingPointError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    cfl: float = 0.4
    safety: float = 1.1  # multiplies the wave-speed estimate
    min_dt: float = 1e-14

    def __post_init__(self):
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must lie in (0, 1)")
        if self.safety < 1:
            raise ValueError("safety factor must be >= 1")


@dataclass
class GridState:
    n_cells: int
    dx: float
    time: float
    q: np.ndarray  # shape (5, n_cells)
    boundary: str = "periodic"
    x0: float = 0.0  # left edge of the domain

    def __post_init__(self):
        if self.boundary not in ("periodic", "outflow"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        self.q = np.asarray(self.q, dtype=float)
        if self.q.shape != (5, self.n_cells):
            raise ValueError(f"q must have shape (5, {self.n_cells})")

    @property
    def centers(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def length(self) -> float:
        return self.n_cells * self.dx

    def primitives(self) -> dict:
        h = self.q[0]
        return {"h": h, "u": self.q[1] / h, "v": self.q[2] / h, "a": self.q[3] / h, "b": self.q[4] / h}

    def mass(self) -> float:
        return float(math.fsum(self.q[0]) * self.dx)

    def copy(self) -> "GridState":
        return replace(self, q=self.q.copy())

    def shifted(self, k: int) -> "GridState":
        return replace(self, q=np.roll(self.q, k, axis=1))

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "h", "u", "v", "a", "b"])
        p = self.primitives()
        for i, x in enumerate(self.centers):
            w.writerow([f"{x:.17g}", *(f"{p[k][i]:.17g}" for k in ("h", "u", "v", "a", "b"))])
        return buf.getvalue()


def from_primitives(fields: Mapping[str, np.ndarray], n_cells: int, length: float, *,
                    x0: float = 0.0, time: float = 0.0, boundary: str = "periodic") -> GridState:
    h = np.asarray(fields["h"], dtype=float) * np.ones(n_cells)
    q = np.vstack([h] + [h * np.asarray(fields[k], dtype=float) for k in ("u", "v", "a", "b")])
    return GridState(n_cells, length / n_cells, time, q, boundary, x0)


def sample_solution(solution, n_cells: int, length: float, t: float, *, x0: float = 0.0,
                    boundary: str = "periodic") -> GridState:
    """Cell-centre samples of an exact solution (anything with fields(t, x))."""
    dx = length / n_cells
    xs = x0 + (np.arange(n_cells) + 0.5) * dx
    cols = {k: np.empty(n_cells) for k in ("h", "u", "v", "a", "b")}
    for i, x in enumerate(xs):
        f = solution.fields(t, float(x))
        for k in cols:
            cols[k][i] = f[k]
    return from_primitives(cols, n_cells, length, x0=x0, time=t, boundary=boundary)


# ---------------------------------------------------------------------------
# spatial operator

def _pad(q: np.ndarray, boundary: str) -> np.ndarray:
    if boundary == "periodic":
        return np.concatenate([q[:, -1:], q, q[:, :1]], axis=1)
    return np.concatenate([q[:, :1], q, q[:, -1:]], axis=1)


def _flux(q: np.ndarray, g: float) -> np.ndarray:
    h = q[0]
    u, v, a, b = q[1] / h, q[2] / h, q[3] / h, q[4] / h
    return np.vstack([
        h * u,
        h * u * u + 0.5 * g * h * h - h * a * a,
        h * u * v - h * a * b,
        np.zeros_like(h),  # (ha) is handled by the nonconservative terms
        h * (u * b - v * a),
    ])


def wave_speed(q: np.ndarray, g: float) -> np.ndarray:
    h = q[0]
    u, a = q[1] / h, q[3] / h
    return np.abs(u) + np.sqrt(np.maximum(g * h, 0.0) + a * a)


def rhs(q: np.ndarray, dx: float, g: float, f0: float, boundary: str, safety: float = 1.1) -> np.ndarray:
    """Semi-discrete dq/dt."""
    if np.any(q[0] <= 0):
        bad = int(np.argmin(q[0]))
        raise PositivityError(f"h = {q[0][bad]:.3e} <= 0 in cell {bad}")
    qp = _pad(q, boundary)
    F = _flux(qp, g)
    s = safety * wave_speed(qp, g)
    smax = np.maximum(s[:-1], s[1:])
    # interface i+1/2 between padded cells i and i+1
    Fi = 0.5 * (F[:, :-1] + F[:, 1:]) - 0.5 * smax * (qp[:, 1:] - qp[:, :-1])
    out = -(Fi[:, 1:] - Fi[:, :-1]) / dx

    h = qp[0]
    u, v = qp[1] / h, qp[2] / h
    ha = qp[3]
    uc, vc = u[1:-1], v[1:-1]
    back = (ha[1:-1] - ha[:-2]) / dx
    fwd = (ha[2:] - ha[1:-1]) / dx
    out[3] = -uc * np.where(uc >= 0, back, fwd)
    out[4] -= vc * (ha[2:] - ha[:-2]) / (2 * dx)
    out[1] -= f0 * q[2]
    out[2] += f0 * q[1]
    return out


# ---------------------------------------------------------------------------
# time stepping

def stable_dt(state: GridState, g: float, cfg: SchemeConfig) -> float:
    smax = float(np.max(cfg.safety * wave_speed(state.q, g)))
    if smax == 0.0:
        return math.inf
    return cfg.cfl * state.dx / smax


def step(state: GridState, g: float, f0: float, cfg: SchemeConfig = SchemeConfig(),
         dt: float | None = None) -> GridState:
    """One SSP-RK2 (Heun) step."""
    if dt is None:
        dt = stable_dt(state, g, cfg)
    if dt < cfg.min_dt:
        raise CFLError(f"time step {dt:.3e} below {cfg.min_dt:.1e} at t = {state.time:.6g}")
    q0 = state.q
    L = lambda q: rhs(q, state.dx, g, f0, state.boundary, cfg.safety)
    q1 = q0 + dt * L(q0)
    q2 = 0.5 * q0 + 0.5 * (q1 + dt * L(q1))
    if np.any(q2[0] <= 0) or not np.all(np.isfinite(q2)):
        bad = int(np.argmin(q2[0]))
        raise PositivityError(f"positivity lost at t = {state.time + dt:.6g}, cell {bad}, h = {q2[0][bad]:.3e}")
    return replace(state, q=q2, time=state.time + dt)


@dataclass
class RunResult:
    state: GridState
    steps: int
    probe_times: list = field(default_factory=list)
    probes: dict = field(default_factory=dict)  # cell index -> list of (h, u, v, a, b)


def run_until(state: GridState, T: float, g: float, f0: float, cfg: SchemeConfig = SchemeConfig(),
              probe_cells=(), max_steps: int = 10_000_000, fixed_dt: float | None = None) -> RunResult:
    """Advance to time T, shortening the last step so the run lands on T exactly."""
    if T < state.time:
        raise ValueError("cannot run backwards")
    cur = state.copy()
    res = RunResult(cur, 0, [], {int(c): [] for c in probe_cells})
    _record(res, cur)
    while cur.time < T:
        if res.steps >= max_steps:
            raise CFLError(f"exceeded {max_steps} steps before reaching T = {T}")
        dt = fixed_dt if fixed_dt is not None else stable_dt(cur, g, cfg)
        last = cur.time + dt >= T
        if last:
            dt = T - cur.time
        cur = step(cur, g, f0, cfg, dt)
        if last:
            cur.time = T
        res.steps += 1
        res.state = cur
        _record(res, cur)
    return res


def _record(res: RunResult, state: GridState):
    if not res.probes:
        return
    res.probe_times.append(state.time)
    p = state.primitives()
    for c in res.probes:
        res.probes[c].append(tuple(float(p[k][c]) for k in ("h", "u", "v", "a", "b")))


# ---------------------------------------------------------------------------
# diagnostics

def compare_to_closed_form(state: GridState, solution, mask=None) -> dict:
    """L1 (dx-weighted) and Linf error of each primitive field against an exact solution."""
    exact = sample_solution(solution, state.n_cells, state.length, state.time,
                            x0=state.x0, boundary=state.boundary).primitives()
    return field_errors(state.primitives(), exact, state.dx, mask)


def field_errors(p: Mapping, ref: Mapping, dx: float, mask=None) -> dict:
    out = {}
    for k in ("h", "u", "v", "a", "b"):
        d = np.abs(np.asarray(p[k]) - np.asarray(ref[k]))
        if mask is not None:
            d = d[mask]
        out[k] = {"L1": float(np.sum(d) * dx), "Linf": float(np.max(d)) if d.size else 0.0}
    return out


def total_l1(errors: Mapping) -> float:
    return sum(e["L1"] for e in errors.values())


def restrict(state: GridState, factor: int) -> dict:
    """Average primitive fields onto a grid coarser by ``factor``."""
    p = state.primitives()
    return {k: v.reshape(-1, factor).mean(axis=1) for k, v in p.items()}


@dataclass
class ConvergenceRow:
    n_cells: int
    l1_error: float
    order: float | None  # observed order against the previous row


def convergence_study(solution, ns=(100, 200, 400, 800), length: float = 1.0, t0: float = 0.0,
                      T: float = 1.0, g: float = 1.0, f0: float = 1.0,
                      cfg: SchemeConfig = SchemeConfig(), boundary: str = "periodic") -> list[ConvergenceRow]:
    rows = []
    for n in ns:
        s0 = sample_solution(solution, n, length, t0, boundary=boundary)
        out = run_until(s0, t0 + T, g, f0, cfg).state
        err = total_l1(compare_to_closed_form(out, solution))
        order = None
        if rows and rows[-1].l1_error > 0 and err > 0:
            order = math.log(rows[-1].l1_error / err, n / rows[-1].n_cells)
        rows.append(ConvergenceRow(n, err, order))
    return rows


def convergence_csv(rows, header_lines=()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_cells", "l1_error", "observed_order"])
    for r in rows:
        w.writerow([r.n_cells, f"{r.l1_error:.17g}", "" if r.order is None else f"{r.order:.17g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# discrete Galilean test

def smooth_periodic_data(n_cells: int, length: float) -> GridState:
    x = (np.arange(n_cells) + 0.5) * length / n_cells
    k = 2 * math.pi / length
    fields = {"h": 1.0 + 0.2 * np.sin(k * x), "u": 0.1 * np.cos(k * x), "v": 0.1 * np.sin(2 * k * x),
              "a": 0.5 + 0.1 * np.cos(k * x), "b": 0.2 * np.sin(k * x)}
    return from_primitives(fields, n_cells, length)


@dataclass
class GalileanReport:
    f0: float
    n_cells: int
    eps: float
    T: float
    discrepancy: float  # L1 gap between evolve and boost-evolve-unboost
    discretization_error: float  # L1 gap between the n and 2n plain runs
    band: float

    @property
    def within_band(self) -> bool:
        return self.discrepancy <= self.band


def galilean_test(f0: float, n_cells: int = 200, eps: float = 0.3, T: float = 0.5, g: float = 1.0,
                  length: float = 1.5, cfg: SchemeConfig = SchemeConfig(), factor: float = 3.0) -> GalileanReport:
    """Boost by x -> x + eps t, u -> u + eps; evolve; undo the boost and compare.

    The shift eps*T must be a whole number of cells so undoing it needs no
    interpolation.
    """
    shift = eps * T * n_cells / length
    if abs(shift - round(shift)) > 1e-9:
        raise ValueError("eps*T must be a multiple of the cell width")
    base = smooth_periodic_data(n_cells, length)
    plain = run_until(base, T, g, f0, cfg).state
    boosted = base.copy()
    boosted.q[1] = boosted.q[1] + eps * boosted.q[0]
    moved = run_until(boosted, T, g, f0, cfg).state
    # boosted solution at x + eps T is the original at x
    back = moved.shifted(-int(round(shift)))
    back.q[1] = back.q[1] - eps * back.q[0]
    gap = total_l1(field_errors(back.primitives(), plain.primitives(), base.dx))

    fine = run_until(smooth_periodic_data(2 * n_cells, length), T, g, f0, cfg).state
    disc = total_l1(field_errors(plain.primitives(), restrict(fine, 2), base.dx))
    return GalileanReport(f0, n_cells, eps, T, gap, disc, factor * disc)


def interior_mask(state: GridState, max_speed: float, elapsed: float, margin: float = 1.2) -> np.ndarray:
    """Cells that boundary information cannot reach within ``elapsed``."""
    reach = margin * max_speed * elapsed
    x = state.centers
    return (x - state.x0 > reach) & (state.x0 + state.length - x > reach)


def cross_validate(solution, t0: float, T: float, g: float, f0: float, ns=(100, 200, 400),
                   length: float = 8.0, x0: float = -4.0, cfg: SchemeConfig = SchemeConfig()) -> list[dict]:
    """Outflow runs from exact data at t0, compared with the exact solution at t0 + T
    on the part of the grid outside the boundaries' domain of influence."""
    rows = []
    for n in ns:
        s0 = sample_solution(solution, n, length, t0, x0=x0, boundary="outflow")
        smax = float(np.max(cfg.safety * wave_speed(s0.q, g)))
        out = run_until(s0, t0 + T, g, f0, cfg).state
        mask = interior_mask(out, smax, T)
        err = compare_to_closed_form(out, solution, mask)
        rows.append({"n_cells": n, "dx": out.dx, "l1_error": total_l1(err),
                     "linf_error": max(e["Linf"] for e in err.values()), "interior_cells": int(mask.sum())})
    return rows
