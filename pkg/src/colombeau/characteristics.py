"""Backward characteristics ``d xi/d tau = Lambda_i(xi, tau)``, ``xi(t) = x``.

A path is traced from its anchor towards ``tau = 0`` and stops at the first
(largest) time at which it reaches ``x = -L`` or ``x = L``.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import genfunc as gf
from .mollifier import Mollifier, scale

CROSSING_TOL = 1e-10
CORNER_TOL = 1e-12
MIN_STEP = 1e-14
FLOOR_EXPONENT = 12


class CharacteristicError(RuntimeError):
    pass


class ExitKind(enum.Enum):
    FromInitialData = "initial"
    FromLeftBoundary = "left"
    FromRightBoundary = "right"


@dataclass
class CharacteristicPath:
    component_i: int
    anchor: tuple
    exit_time: float
    exit_point: float
    samples: np.ndarray  # (m, 2) rows of (tau, xi), increasing tau

    @property
    def tau(self):
        return self.samples[:, 0]

    @property
    def xi(self):
        return self.samples[:, 1]

    def to_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["tau", "xi"])
            for a, b in self.samples:
                wr.writerow([f"{a:.17g}", f"{b:.17g}"])


def speed_floor(eps):
    """Smallest admissible ``|Lambda|`` at ``eps``: ``gamma(min(eps, 1e-3))^12``."""
    return float(gf.gamma(min(eps, 1e-3))) ** FLOOR_EXPONENT


def rk4_step(speed, xi, tau, h):
    """One classical RK4 step of size ``h`` (negative going backward)."""
    k1 = speed(xi, tau)
    k2 = speed(xi + 0.5 * h * k1, tau + 0.5 * h)
    k3 = speed(xi + 0.5 * h * k2, tau + 0.5 * h)
    k4 = speed(xi + h * k3, tau + h)
    return xi + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _scalar_speed(speed):
    return lambda x, t: float(np.asarray(speed(np.asarray(x, dtype=float), np.asarray(t, dtype=float))))


def _find_crossing(speed, xi, tau, h, wall):
    """Step size ``s`` in ``(0, |h|]`` at which the RK4 step from ``(xi, tau)`` reaches ``wall``."""
    direction = math.copysign(1.0, h)
    lo, hi = 0.0, abs(h)
    side = math.copysign(1.0, wall)
    while hi - lo > CROSSING_TOL:
        mid = 0.5 * (lo + hi)
        if (rk4_step(speed, xi, tau, direction * mid) - wall) * side >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def trace_speed(speed, anchor, L, tol=1e-10, component_i=0, floor=None, h0=None) -> CharacteristicPath:
    """Adaptive RK4 (step doubling) backward from ``anchor`` with exit detection.

    ``speed(x, t)`` is the characteristic speed; ``floor`` aborts when
    ``|speed|`` drops below it.
    """
    x, t = float(anchor[0]), float(anchor[1])
    if not (-L - 1e-12 <= x <= L + 1e-12) or t < 0:
        raise ValueError(f"anchor {anchor} outside the strip [-{L}, {L}] x [0, inf)")
    f = _scalar_speed(speed)
    xi, tau = x, t
    samples = [(tau, xi)]
    h = h0 if h0 is not None else max(min(t, 2 * L) / 64, 1e-6)
    exit_time, exit_point = 0.0, None

    def guard(xv, tv):
        if floor is not None and abs(f(xv, tv)) < floor:
            raise CharacteristicError(f"|Lambda_{component_i}| < {floor:.3g} at tau={tv:.6g}, xi={xv:.6g}")

    # an anchor on the wall it would exit through has exit time t
    v0 = f(xi, tau)
    if t > 0 and ((x <= -L and v0 > 0) or (x >= L and v0 < 0)):
        return CharacteristicPath(component_i, (x, t), t, -L if x <= -L else L, np.array(samples))
    while tau > 0:
        guard(xi, tau)
        step = min(h, tau)
        full = rk4_step(f, xi, tau, -step)
        half = rk4_step(f, xi, tau, -0.5 * step)
        two = rk4_step(f, half, tau - 0.5 * step, -0.5 * step)
        err = abs(two - full) / 15.0
        if err > tol and step > MIN_STEP:
            h = max(step * max(0.2, 0.9 * (tol / err) ** 0.2), MIN_STEP)
            continue
        if step <= MIN_STEP and err > tol:
            raise CharacteristicError(f"step size underflow at tau={tau:.6g}, xi={xi:.6g}")
        if abs(two) > L:
            wall = L if two > 0 else -L
            s = _find_crossing(f, xi, tau, -step, wall)
            tau = max(tau - s, 0.0)
            xi = wall
            samples.append((tau, xi))
            exit_time, exit_point = (tau if tau > CORNER_TOL else 0.0), wall
            break
        xi, tau = two, tau - step
        samples.append((tau, xi))
        if err > 0:
            h = step * min(2.0, 0.9 * (tol / err) ** 0.2)
        else:
            h = 2 * step
    if exit_point is None:
        exit_point = xi
        tau = 0.0
    arr = np.array(samples[::-1])
    arr[0, 0] = max(arr[0, 0], 0.0)
    return CharacteristicPath(component_i, (x, t), exit_time, float(exit_point), arr)


def component_speed(p, i, m: Mollifier, eps):
    lam = p.reps["Lambda"][i]
    sm = scale(m, eps)
    return lambda x, t: lam(sm, x, t)


def trace(p, i, anchor, m: Mollifier, eps, tol=1e-10) -> CharacteristicPath:
    """Characteristic of component ``i`` (0-based) of the regularized problem."""
    return trace_speed(component_speed(p, i, m, eps), anchor, p.L, tol, i, floor=speed_floor(eps))


def exit_classification(path: CharacteristicPath, L) -> ExitKind:
    if path.exit_time <= CORNER_TOL:
        return ExitKind.FromInitialData
    if abs(abs(path.exit_point) - L) > 1e-9:
        raise CharacteristicError(f"exit point {path.exit_point} is not on the boundary x = +-{L}")
    return ExitKind.FromLeftBoundary if path.exit_point < 0 else ExitKind.FromRightBoundary


# --------------------------------------------------------------------------
# batched fixed-step tracing used by the solver


@dataclass
class BatchTrace:
    """Backward RK4 march of many paths on a uniform time grid.

    ``xi[l, p]`` is the position of path ``p`` at time level ``start[p] - l``;
    ``last[p]`` is the number of whole steps taken, ``exit_tau[p]`` the exit
    time and ``wall[p]`` is -1/+1 for a boundary exit and 0 otherwise.
    """

    xi: np.ndarray
    last: np.ndarray
    exit_tau: np.ndarray
    exit_xi: np.ndarray
    wall: np.ndarray


def march(speed, x0, start_level, stop_level, dt, L, substeps=1, floor=None, record=True):
    """Trace every path back from level ``start_level[p]`` to ``stop_level`` or a wall.

    With ``record=False`` only exit data are kept (``xi`` is ``None``).
    """
    x0 = np.asarray(x0, dtype=float)
    start = np.asarray(start_level, dtype=np.int64)
    P = x0.size
    depth = int(np.max(start - stop_level)) if P else 0
    xi = None
    if record:
        xi = np.full((depth + 1, P), np.nan)
        xi[0] = x0
    last = np.zeros(P, dtype=np.int64)
    wall = np.zeros(P, dtype=np.int8)
    exit_tau = np.full(P, np.nan)
    exit_xi = np.full(P, np.nan)
    active = start > stop_level
    done = ~active
    exit_tau[done] = start[done] * dt
    exit_xi[done] = x0[done]
    h = dt / substeps
    cur = x0.copy()
    # a path anchored on its inflow wall exits immediately
    v = speed(cur, start * dt)
    on_wall = active & (((cur <= -L) & (v > 0)) | ((cur >= L) & (v < 0)))
    wall[on_wall] = np.where(cur[on_wall] < 0, -1, 1)
    exit_tau[on_wall] = start[on_wall] * dt
    exit_xi[on_wall] = cur[on_wall]
    active &= ~on_wall
    for l in range(1, depth + 1):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        x = cur[idx]
        tau = (start[idx] - (l - 1)) * dt
        crossed = np.zeros(idx.size, dtype=bool)
        sub_x = x.copy()
        for s in range(substeps):
            if floor is not None:
                vs = np.abs(speed(sub_x, tau - s * h))
                if np.any(vs < floor):
                    b = int(np.argmin(vs))
                    raise CharacteristicError(
                        f"|Lambda| = {vs[b]:.3g} below floor {floor:.3g} at tau={tau[b] - s * h:.6g}, xi={sub_x[b]:.6g}")
            nxt = rk4_step(speed, sub_x, tau - s * h, -h)
            out = (np.abs(nxt) > L) & ~crossed
            if np.any(out):
                j = np.nonzero(out)[0]
                w = np.where(nxt[j] > 0, L, -L)
                sstep = _batch_crossing(speed, sub_x[j], tau[j] - s * h, h, w)
                crossed[j] = True
                exit_tau[idx[j]] = tau[j] - s * h - sstep
                exit_xi[idx[j]] = w
                wall[idx[j]] = np.sign(w).astype(np.int8)
            sub_x = np.where(crossed, sub_x, nxt)
        keep = idx[~crossed]
        cur[keep] = sub_x[~crossed]
        if record:
            xi[l, keep] = sub_x[~crossed]
        last[keep] = l
        active[idx[crossed]] = False
        reached = keep[start[keep] - l <= stop_level]
        exit_tau[reached] = stop_level * dt
        exit_xi[reached] = cur[reached]
        active[reached] = False
    return BatchTrace(xi, last, exit_tau, exit_xi, wall)


def _batch_crossing(speed, x, tau, h, wall):
    lo = np.zeros_like(x)
    hi = np.full_like(x, h)
    side = np.sign(wall)
    while np.max(hi - lo) > CROSSING_TOL:
        mid = 0.5 * (lo + hi)
        past = (rk4_step(speed, x, tau, -mid) - wall) * side >= 0
        hi = np.where(past, mid, hi)
        lo = np.where(past, lo, mid)
    return hi


# --------------------------------------------------------------------------
# domain of dependence


def domain_of_dependence(p, i, anchor, m: Mollifier, eps_grid, tol=1e-10):
    """Exit data of one anchor across an eps grid and the enclosing interval.

    The enclosing interval is ``x -+ t * S`` clipped to ``[-L, L]`` with ``S``
    the largest sampled ``sup |Lambda_i|`` over the grid; gamma growth keeps
    ``S`` finite as eps decreases.
    """
    x, t = anchor
    K = ((-p.L, p.L), (0.0, p.T))
    lam = p.reps["Lambda"][i]
    sups, exits, times = [], [], []
    for e in eps_grid:
        _, vals = gf.sample_values(lam, scale(m, e), K)
        sups.append(float(np.max(np.abs(vals))))
        path = trace(p, i, anchor, m, e, tol)
        exits.append(path.exit_point)
        times.append(path.exit_time)
    S = max(sups)
    lo, hi = max(-p.L, x - t * S), min(p.L, x + t * S)
    exits = np.array(exits)
    return {
        "component": i, "anchor": [float(x), float(t)], "eps": [float(e) for e in eps_grid],
        "exit_points": exits.tolist(), "exit_times": times, "sup_speed": sups,
        "interval": [lo, hi], "spread": float(np.ptp(exits)),
        "contained": bool(np.all((exits >= lo - 1e-9) & (exits <= hi + 1e-9))),
    }
