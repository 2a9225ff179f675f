"""Slab-wise Picard iteration for the integral form of the mixed problem.

For component ``i`` and grid node ``(x, t)`` the map is

    (Phi U)_i(x, t) = start_i + int_{t_i}^{t} [U . int_0^1 grad f_i(sigma U) dsigma + f_i(., ., 0)] dtau

along the backward characteristic, where ``start_i`` is the initial (or
slab-start) value at the foot, or the boundary value ``M`` at the exit time
``t_i`` when the characteristic leaves through a wall.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from . import genfunc as gf
from .characteristics import CharacteristicError, march, speed_floor
from .mollifier import Mollifier, scale
from .problem import ProblemSpec, build_R

SIGMA_NODES = 8
DET_FLOOR_EXPONENT = 12
ESTIMATE_SAMPLES = 2048
RESOLUTION_FACTOR = 8


class SolverError(RuntimeError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    L: float
    T: float
    nx: int
    nt: int

    def __post_init__(self):
        if self.nx < 3 or self.nt < 3:
            raise ValueError("grid needs at least 3 points in x and in t")

    @property
    def x(self):
        return np.linspace(-self.L, self.L, self.nx)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.nt)

    @property
    def h(self):
        return 2 * self.L / (self.nx - 1)

    @property
    def dt(self):
        return self.T / (self.nt - 1)


@dataclass
class ContractionEstimate:
    E_Lambda_max: float
    E_Lambda_min: float
    E_F: float
    E_R: float
    E_B: float
    E_C: float
    E_D: float
    rho: float
    beta: float
    q0: float
    t0: float

    def to_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


@dataclass
class SolutionField:
    grid: Grid
    eps: float
    mollifier: dict
    values: np.ndarray  # (n, nt, nx)
    iterations_per_slab: list
    residual_history: list
    slab_boundaries: list
    estimates: list = field(default_factory=list)
    tol: float = 0.0

    @property
    def sup_norm(self):
        return float(np.max(np.abs(self.values)))

    def manifest(self):
        return gf._jsonable({
            "eps": self.eps, "mollifier": self.mollifier,
            "grid": {"L": self.grid.L, "T": self.grid.T, "nx": self.grid.nx, "nt": self.grid.nt},
            "tol": self.tol, "slabs": self.slab_boundaries, "slab_count": len(self.slab_boundaries) - 1,
            "iterations": self.iterations_per_slab, "residuals": self.residual_history,
            "contraction": [e.to_dict() for e in self.estimates], "sup_norm": self.sup_norm,
        })

    def to_csv(self, path):
        x, t = self.grid.x, self.grid.t
        with open(Path(path), "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["component", "x", "t", "value"])
            for i in range(self.values.shape[0]):
                for l in range(len(t)):
                    for j in range(len(x)):
                        wr.writerow([i + 1, f"{x[j]:.17g}", f"{t[l]:.17g}", f"{self.values[i, l, j]:.17g}"])

    def to_json(self, path):
        Path(path).write_text(json.dumps(self.manifest(), indent=2, sort_keys=True))


# --------------------------------------------------------------------------
# contraction estimate


def _dense_t(reps, sm, t_lo, t_hi):
    t = np.linspace(t_lo, t_hi, ESTIMATE_SAMPLES + 1)
    feats = [r.feature_points(sm)[0] for r in reps]
    f = np.concatenate(feats) if feats else np.empty(0)
    f = f[(f >= t_lo) & (f <= t_hi)]
    return np.unique(np.concatenate([t, f]))


def contraction_estimate(p: ProblemSpec, m: Mollifier, eps, slab=(0.0, None)) -> ContractionEstimate:
    """Sups of the regularized data over ``[-L, L] x [t_s, T]`` and the slab length."""
    sm = scale(m, eps)
    ts = float(slab[0])
    te = float(slab[1]) if slab[1] is not None else p.T
    te = max(te, ts + 1e-12)
    K2 = ((-p.L, p.L), (ts, te))
    n, k = p.n, p.k
    reps = p.reps
    lam_max, lam_min = 0.0, math.inf
    for lam in reps["Lambda"]:
        _, v = gf.sample_values(lam, sm, K2)
        a = np.abs(v)
        lam_max = max(lam_max, float(a.max()))
        lam_min = min(lam_min, float(a.min()))
    floor = speed_floor(eps)
    if lam_min < floor:
        raise SolverError(f"inf |Lambda| = {lam_min:.3g} below the floor {floor:.3g} at eps={eps:g}")
    E_D = 0.0
    if not p.D_is_zero:
        for row in reps["D"]:
            for d in row:
                _, v = gf.sample_values(d, sm, K2)
                E_D = max(E_D, float(np.max(np.abs(v))))
    R = build_R(p, m)
    entry_reps = [e for row in R.entries for e in row]
    t = _dense_t(entry_reps, sm, ts, te)
    Rv, det, adj = R.evaluate(sm, t)
    det_floor = eps ** DET_FLOOR_EXPONENT
    if np.min(np.abs(det)) < det_floor:
        b = int(np.argmin(np.abs(det)))
        raise SolverError(f"|det R| = {abs(det[b]):.3g} below floor {det_floor:.3g} at eps={eps:g}, t={t[b]:.6g}")
    rho = float(np.max(np.abs(adj / det)))
    E_R = float(np.max(1.0 / np.abs(det)))
    Bv = np.stack([np.stack([np.broadcast_to(b(sm, t), t.shape) for b in row]) for row in reps["B"]])
    Cv = np.stack([np.stack([np.broadcast_to(c(sm, t), t.shape) for c in row]) for row in reps["C"]])
    E_B = float(np.max(np.abs(Bv)))
    E_C = float(np.max(np.abs(Cv)))
    beta = max(float(np.max(np.abs(Bv[:, :k]))), float(np.max(np.abs(Cv[:, k:]))) if k < n else 0.0)
    E_F = p.f.grad_bound
    q0 = n**2 * rho * (n * E_F * (beta + 2 * p.L * E_D) + E_D * lam_max) + n * E_F
    t0 = p.L / lam_max
    if q0 > 0:
        t0 = min(t0, 1.0 / (2 * q0))
    return ContractionEstimate(lam_max, lam_min, E_F, E_R, E_B, E_C, E_D, rho, beta, q0, t0)


# --------------------------------------------------------------------------
# boundary operator


def boundary_operator(p: ProblemSpec, R, sm, t, U_left, U_right, integral=None):
    """``M(t) = R(t)^-1 [H - sum_{s<k} B_s U_s(-L) - sum_{s>=k} C_s U_s(L) - int D U dx]``.

    ``R^-1`` is applied as ``adj R / det R``.  ``U_left``/``U_right`` hold all
    ``n`` boundary values (only the outgoing ones are used); ``integral`` is
    ``int D U dx`` (length ``n``) or ``None`` for zero.
    """
    n, k = p.n, p.k
    t = np.atleast_1d(np.asarray(t, dtype=float))
    Rv, det, adj = R.evaluate(sm, t)
    floor = sm.epsilon ** DET_FLOOR_EXPONENT
    if np.any(np.abs(det) < floor):
        b = int(np.argmin(np.abs(det)))
        raise SolverError(f"|det R| below floor at eps={sm.epsilon:g}, t={t[b]:.6g}")
    reps = p.reps
    rhs = np.stack([np.broadcast_to(h(sm, t), t.shape) for h in reps["H"]]).astype(float)
    UL = np.asarray(U_left, dtype=float).reshape(n, -1)
    UR = np.asarray(U_right, dtype=float).reshape(n, -1)
    for s in range(k):
        rhs = rhs - np.stack([np.broadcast_to(reps["B"][j][s](sm, t), t.shape) for j in range(n)]) * UL[s]
    for s in range(k, n):
        rhs = rhs - np.stack([np.broadcast_to(reps["C"][j][s](sm, t), t.shape) for j in range(n)]) * UR[s]
    if integral is not None:
        rhs = rhs - np.asarray(integral, dtype=float).reshape(n, -1)
    return np.einsum("ijt,jt->it", adj, rhs) / det


def nonlocal_integral(D_grid, U_slice, h):
    """``int D(x, t) U(x, t) dx`` per row by composite Simpson on the grid slice."""
    prod = np.einsum("rsj,sj->rj", D_grid, U_slice)
    return simpson(prod, dx=h, axis=-1)


# --------------------------------------------------------------------------
# slab operator


def _x_interp(xi, L, h, nx):
    z = (xi + L) / h
    j = np.clip(np.floor(z).astype(np.int64), 0, nx - 2)
    return j, z - j


def _t_interp(tau, dt, lo_level, hi_level):
    z = tau / dt
    l = np.clip(np.floor(z + 1e-9).astype(np.int64), lo_level, max(hi_level - 1, lo_level))
    w = np.clip(z - l, 0.0, 1.0)
    return l, w


class SlabOperator:
    """Picard map on levels ``ls+1..le``; ``U`` is the full ``(n, nt, nx)`` array."""

    def __init__(self, p: ProblemSpec, m: Mollifier, eps, grid: Grid, ls, le, substeps=1):
        self.p, self.grid, self.ls, self.le = p, grid, ls, le
        self.sm = sm = scale(m, eps)
        n, k, L = p.n, p.k, p.L
        nx, dt, h = grid.nx, grid.dt, grid.h
        x, tl = grid.x, grid.t
        levels = np.arange(ls + 1, le + 1)
        self.levels = levels
        R = build_R(p, m)
        self.has_D = not p.D_is_zero
        if self.has_D:
            xs, ts = np.meshgrid(x, tl[ls:le + 1], indexing="xy")
            self.D_grid = np.stack([np.stack([np.broadcast_to(d(sm, xs, ts), xs.shape) for d in row])
                                    for row in p.reps["D"]])  # (n, n, levels, nx)
        self.has_f = not p.f.is_zero
        floor = speed_floor(eps)
        self.comp = []
        for i in range(n):
            lam = p.reps["Lambda"][i]
            speed = lambda xv, tv, lam=lam: np.broadcast_to(lam(sm, xv, tv), np.shape(xv))
            x0 = np.tile(x, len(levels))
            start = np.repeat(levels, nx)
            bt = march(speed, x0, start, ls, dt, L, substeps, floor, record=self.has_f)
            c = {"bt": bt}
            init = bt.wall == 0
            c["init_idx"] = np.nonzero(init)[0]
            xi_foot = bt.exit_xi[init]
            if ls == 0:
                c["init_exact"] = np.broadcast_to(p.reps["A"][i](sm, xi_foot), xi_foot.shape).copy()
            else:
                c["init_j"], c["init_w"] = _x_interp(xi_foot, L, h, nx)
            bidx = np.nonzero(~init)[0]
            c["bnd_idx"] = bidx
            if bidx.size:
                tstar = bt.exit_tau[bidx]
                pos = p.incoming_position(i)
                _, det, adj = R.evaluate(sm, tstar)
                fl = eps ** DET_FLOOR_EXPONENT
                if np.any(np.abs(det) < fl):
                    b = int(np.argmin(np.abs(det)))
                    raise SolverError(f"|det R| below floor at eps={eps:g}, t={tstar[b]:.6g}")
                a = adj[pos] / det  # (n, P)
                H = np.stack([np.broadcast_to(hh(sm, tstar), tstar.shape) for hh in p.reps["H"]])
                coef = np.zeros((n, bidx.size))
                for s in range(k):
                    Bs = np.stack([np.broadcast_to(p.reps["B"][j][s](sm, tstar), tstar.shape) for j in range(n)])
                    coef[s] = -np.sum(a * Bs, axis=0)
                for s in range(k, n):
                    Cs = np.stack([np.broadcast_to(p.reps["C"][j][s](sm, tstar), tstar.shape) for j in range(n)])
                    coef[s] = -np.sum(a * Cs, axis=0)
                c["c0"] = np.sum(a * H, axis=0)
                c["coef"] = coef
                c["gamma"] = -a
                c["bl"], c["bw"] = _t_interp(tstar, dt, ls, le)
            if self.has_f:
                c["samples"] = self._samples(bt, start, i)
            self.comp.append(c)

    def _samples(self, bt, start, i):
        """Trapezoid samples along every path (bilinear interpolation data)."""
        g = self.grid
        L, h, dt, nx = g.L, g.h, g.dt, g.nx
        P = start.size
        pid, tau, xs, tw = [], [], [], []
        for l in range(0, bt.xi.shape[0]):
            sel = np.nonzero(bt.last >= l)[0]
            if sel.size == 0:
                break
            tt = (start[sel] - l) * dt
            # weight of this node: half of the segments on either side
            left = np.where(bt.last[sel] > l, dt, tt - bt.exit_tau[sel])
            right = np.where(l > 0, dt, 0.0)
            pid.append(sel)
            tau.append(tt)
            xs.append(bt.xi[l, sel])
            tw.append(0.5 * (left + right))
        # exit endpoints close off the last partial segment
        ids = np.arange(P)
        lastt = (start - bt.last) * dt
        pid.append(ids)
        tau.append(bt.exit_tau)
        xs.append(bt.exit_xi)
        tw.append(0.5 * (lastt - bt.exit_tau))
        pid, tau, xs, tw = (np.concatenate(a) for a in (pid, tau, xs, tw))
        keep = tw != 0
        pid, tau, xs, tw = pid[keep], tau[keep], xs[keep], tw[keep]
        j, wx = _x_interp(xs, L, h, nx)
        lt, wt = _t_interp(tau, dt, self.ls, self.le)
        return {"pid": pid, "tau": tau, "x": xs, "tw": tw, "j": j, "wx": wx, "lt": lt, "wt": wt, "P": P}

    def _integral_levels(self, U):
        ls, le = self.ls, self.le
        out = np.empty((self.p.n, le - ls + 1))
        for q, l in enumerate(range(ls, le + 1)):
            out[:, q] = nonlocal_integral(self.D_grid[:, :, q], U[:, l], self.grid.h)
        return out

    def apply(self, U):
        """Return the new values on levels ``ls+1..le`` as ``(n, nlev, nx)``."""
        p, g = self.p, self.grid
        n, nx = p.n, g.nx
        ls = self.ls
        out = np.empty((n, len(self.levels), nx))
        I = self._integral_levels(U) if self.has_D else None
        sig, sw = np.polynomial.legendre.leggauss(SIGMA_NODES)
        sig, sw = 0.5 * (sig + 1.0), 0.5 * sw
        for i, c in enumerate(self.comp):
            vals = np.zeros(len(self.levels) * nx)
            ii = c["init_idx"]
            if ls == 0:
                vals[ii] = c["init_exact"]
            else:
                j, w = c["init_j"], c["init_w"]
                vals[ii] = (1 - w) * U[i, ls, j] + w * U[i, ls, j + 1]
            bi = c["bnd_idx"]
            if bi.size:
                bl, bw = c["bl"], c["bw"]
                UL = (1 - bw) * U[:, bl, 0] + bw * U[:, bl + 1, 0]
                UR = (1 - bw) * U[:, bl, -1] + bw * U[:, bl + 1, -1]
                out_vals = np.where(np.arange(n)[:, None] < p.k, UL, UR)
                v = c["c0"] + np.sum(c["coef"] * out_vals, axis=0)
                if I is not None:
                    Il = (1 - bw) * I[:, bl - ls] + bw * I[:, bl + 1 - ls]
                    v = v + np.sum(c["gamma"] * Il, axis=0)
                vals[bi] = v
            if self.has_f:
                s = c["samples"]
                j, wx, lt, wt = s["j"], s["wx"], s["lt"], s["wt"]
                Us = ((1 - wt) * ((1 - wx) * U[:, lt, j] + wx * U[:, lt, j + 1])
                      + wt * ((1 - wx) * U[:, lt + 1, j] + wx * U[:, lt + 1, j + 1]))
                lin = np.zeros(Us.shape[1])
                for q in range(SIGMA_NODES):
                    G = p.f.grad(s["x"], s["tau"], sig[q] * Us)
                    lin += sw[q] * np.sum(G[i] * Us, axis=0)
                f0 = p.f.value(s["x"], s["tau"], np.zeros_like(Us))[i]
                vals += np.bincount(s["pid"], weights=s["tw"] * (lin + f0), minlength=s["P"])
            out[i] = vals.reshape(len(self.levels), nx)
        return out


# --------------------------------------------------------------------------
# driver


def required_nx(p: ProblemSpec, m: Mollifier, eps):
    """Smallest ``nx`` with ``h <= eps * r / 8`` (``r`` the kernel support radius)."""
    hmax = eps * m.support_radius / RESOLUTION_FACTOR
    return int(math.ceil(2 * p.L / hmax - 1e-9)) + 1


def check_resolution(p: ProblemSpec, m: Mollifier, eps, nx):
    if p.is_singular and nx < required_nx(p, m, eps):
        h = 2 * p.L / (nx - 1)
        raise ResolutionError(
            f"grid too coarse for eps={eps:g}: h={h:.4g} but the rule h <= eps*r/{RESOLUTION_FACTOR} "
            f"= {eps * m.support_radius / RESOLUTION_FACTOR:.4g} needs nx >= {required_nx(p, m, eps)}")


def plan_slabs(p: ProblemSpec, m: Mollifier, eps, grid: Grid):
    """Slab level boundaries ``[(ls, le, estimate), ...]`` with lengths snapped to whole steps."""
    out = []
    ls = 0
    dt = grid.dt
    last = grid.nt - 1
    while ls < last:
        est = contraction_estimate(p, m, eps, (ls * dt, p.T))
        steps = int(math.floor(est.t0 / dt + 1e-9))
        if steps < 1:
            raise SolverError(f"slab length t0={est.t0:.4g} is shorter than the time step {dt:.4g} at eps={eps:g}")
        le = min(ls + steps, last)
        out.append((ls, le, est))
        ls = le
    return out


def _substeps(p, m, eps, grid):
    """RK4 substeps per time level so that ``dt * sup |d_x Lambda| <= 0.25``."""
    sm = scale(m, eps)
    K2 = ((-p.L, p.L), (0.0, p.T))
    worst = 0.0
    for lam in p.reps["Lambda"]:
        _, v = gf.sample_values(lam, sm, K2, (1, 0))
        worst = max(worst, float(np.max(np.abs(v))))
    return max(1, int(math.ceil(grid.dt * worst / 0.25)))


def picard_solve(p: ProblemSpec, m: Mollifier, eps, nx=201, nt=201, tol=1e-12, max_iter=100) -> SolutionField:
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not eps > 0:
        raise ValueError("eps must be positive")
    grid = Grid(p.L, p.T, int(nx), int(nt))
    check_resolution(p, m, eps, grid.nx)
    sm = scale(m, eps)
    U = np.zeros((p.n, grid.nt, grid.nx))
    for i, a in enumerate(p.reps["A"]):
        U[i, 0] = a(sm, grid.x)
    substeps = _substeps(p, m, eps, grid)
    slabs = plan_slabs(p, m, eps, grid)
    iters, hist = [], []
    for ls, le, est in slabs:
        try:
            op = SlabOperator(p, m, eps, grid, ls, le, substeps)
        except CharacteristicError as exc:
            raise SolverError(f"eps={eps:g}, slab [{ls * grid.dt:g}, {le * grid.dt:g}]: {exc}") from exc
        U[:, ls + 1:le + 1] = U[:, ls:ls + 1]
        changes = []
        for it in range(1, max_iter + 1):
            new = op.apply(U)
            change = float(np.max(np.abs(new - U[:, ls + 1:le + 1])))
            U[:, ls + 1:le + 1] = new
            changes.append(change)
            if not math.isfinite(change):
                raise SolverError(f"non-finite iterate at eps={eps:g}, slab starting t={ls * grid.dt:g}")
            if change <= tol:
                break
        else:
            raise SolverError(f"Picard iteration did not reach tol={tol:g} in {max_iter} iterations "
                              f"(last change {changes[-1]:.3g}) at eps={eps:g}, slab starting t={ls * grid.dt:g}")
        iters.append(len(changes))
        hist.append(changes)
    bounds = [float(ls * grid.dt) for ls, _, _ in slabs] + [float(p.T)]
    return SolutionField(grid, float(eps), m.ident, U, iters, hist, bounds, [e for *_, e in slabs], float(tol))


def fixed_point_residual(sol: SolutionField, p: ProblemSpec, m: Mollifier):
    """``max |Phi(U) - U|`` over all nodes, slab by slab on the solved field."""
    grid = sol.grid
    dt = grid.dt
    worst = 0.0
    substeps = _substeps(p, m, sol.eps, grid)
    for a, b in zip(sol.slab_boundaries[:-1], sol.slab_boundaries[1:]):
        ls, le = int(round(a / dt)), int(round(b / dt))
        op = SlabOperator(p, m, sol.eps, grid, ls, le, substeps)
        worst = max(worst, float(np.max(np.abs(op.apply(sol.values) - sol.values[:, ls + 1:le + 1]))))
    return worst


def pde_residual(sol: SolutionField, p: ProblemSpec, m: Mollifier, values=None):
    """Interior sup of ``d_t U + Lambda d_x U - f`` by central differences."""
    U = sol.values if values is None else values
    g = sol.grid
    sm = scale(m, sol.eps)
    x, t = g.x[1:-1], g.t[1:-1]
    X, Tt = np.meshgrid(x, t, indexing="xy")
    Ut = (U[:, 2:, 1:-1] - U[:, :-2, 1:-1]) / (2 * g.dt)
    Ux = (U[:, 1:-1, 2:] - U[:, 1:-1, :-2]) / (2 * g.h)
    lam = np.stack([np.broadcast_to(l(sm, X, Tt), X.shape) for l in p.reps["Lambda"]])
    res = Ut + lam * Ux - p.f.value(X, Tt, U[:, 1:-1, 1:-1])
    return float(np.max(np.abs(res)))
