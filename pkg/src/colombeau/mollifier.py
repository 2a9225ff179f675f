"""Mollifiers in the spaces A_q(R) and their epsilon-scalings.

A kernel of order ``q`` is ``phi(y) = p(y/r) b(y/r) / r`` where ``b`` is the
C-infinity bump ``exp(-s / (1 - z**2))`` on ``|z| < 1`` and ``p`` is an even
polynomial chosen so that the moments ``int y**k phi(y) dy`` equal ``delta_{k0}``
for ``0 <= k <= q``.  Odd moments vanish by symmetry, so only the even-power
block of the ``(q+1) x (q+1)`` Hankel system has to be solved.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

# Composite Gauss-Legendre used for every kernel integral.  64 panels of 16
# nodes gives moment residuals below 1e-16 on the unit bump.
QUAD_PANELS = 64
QUAD_NODES = 16
# Condition number above which the moment system is considered singular.
MAX_CONDITION = 1e13
_CDF_TABLE = 1024
_CRIT_SAMPLES = 4097


class MollifierError(ValueError):
    """Raised when a mollifier cannot be constructed to tolerance."""


def composite_gauss_legendre(a, b, panels=QUAD_PANELS, nodes=QUAD_NODES):
    """Nodes and weights of composite Gauss-Legendre on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    X = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    W = (half[:, None] * w[None, :]).ravel()
    return X, W


@lru_cache(maxsize=256)
def _derivative_numerators(coeffs: tuple, sharpness: float, order: int):
    """Polynomials S_n with d^n/dz^n [p b] = b S_n / (1 - z^2)^(2n)."""
    z = Polynomial([0.0, 1.0])
    w = 1.0 - z**2
    S = Polynomial(coeffs)
    out = [S]
    for n in range(order):
        S = S.deriv() * w**2 + (4.0 * n * z * w - 2.0 * sharpness * z) * S
        out.append(S)
    return tuple(out)


def bump_derivative(z, order=0, coeffs=(1.0,), sharpness=1.0):
    """Evaluate ``d^order/dz^order [p(z) exp(-s/(1-z^2))]``, zero for ``|z| >= 1``.

    Evaluated in log form so that the essential singularity at the support
    edge never produces ``0 * inf``.
    """
    z = np.asarray(z, dtype=float)
    S = _derivative_numerators(tuple(float(c) for c in coeffs), float(sharpness), int(order))[order]
    out = np.zeros(z.shape)
    inside = np.abs(z) < 1.0
    if not np.any(inside):
        return out
    zi = z[inside]
    w = 1.0 - zi * zi
    s_val = S(zi)
    with np.errstate(divide="ignore", under="ignore"):
        log_mag = -sharpness / w - 2.0 * order * np.log(w) + np.log(np.abs(s_val))
        out[inside] = np.sign(s_val) * np.exp(log_mag)
    return out


@dataclass(frozen=True)
class Mollifier:
    """A kernel in A_q(R): unit mass, vanishing moments of orders 1..q.

    ``support_radius`` is l(phi) = sup{|y| : phi(y) != 0}.  The kernel and all
    of its derivatives are evaluated analytically.
    """

    order_q: int
    support_radius: float
    coeffs: tuple
    sharpness: float = 1.0
    _cdf_cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def ident(self) -> dict:
        return {"q": self.order_q, "support_radius": self.support_radius, "sharpness": self.sharpness}

    def __call__(self, y, deriv=0):
        return self.kernel(y, deriv)

    def kernel(self, y, deriv=0):
        r = self.support_radius
        z = np.asarray(y, dtype=float) / r
        return bump_derivative(z, deriv, self.coeffs, self.sharpness) / r ** (deriv + 1)

    def derivative_evaluator(self, order):
        """Callable ``y -> phi^(order)(y)``."""
        return lambda y: self.kernel(y, order)

    def quadrature(self):
        return composite_gauss_legendre(-self.support_radius, self.support_radius)

    def cdf(self, y):
        """``int_{-inf}^{y} phi``; exactly 0 left of and 1 right of the support."""
        y = np.asarray(y, dtype=float)
        r = self.support_radius
        if "table" not in self._cdf_cache:
            edges = np.linspace(-r, r, _CDF_TABLE + 1)
            x, w = np.polynomial.legendre.leggauss(QUAD_NODES)
            half = 0.5 * np.diff(edges)
            mid = 0.5 * (edges[:-1] + edges[1:])
            pts = mid[:, None] + half[:, None] * x[None, :]
            pieces = (self.kernel(pts) * w[None, :]).sum(axis=1) * half
            self._cdf_cache["table"] = (edges, np.concatenate([[0.0], np.cumsum(pieces)]))
        edges, cum = self._cdf_cache["table"]
        out = np.where(y >= r, 1.0, 0.0)
        inside = (y > -r) & (y < r)
        if np.any(inside):
            yi = y[inside]
            k = np.clip(np.searchsorted(edges, yi, side="right") - 1, 0, _CDF_TABLE - 1)
            a = edges[k]
            x, w = np.polynomial.legendre.leggauss(QUAD_NODES)
            half = 0.5 * (yi - a)
            pts = (a + half)[:, None] + half[:, None] * x[None, :]
            out[inside] = cum[k] + (self.kernel(pts) * w[None, :]).sum(axis=1) * half
        return out

    def critical_points(self, order=0):
        """Zeros of ``phi^(order+1)`` inside the support (``order=-1``: zeros of phi).

        These are the extremal points of ``phi^(order)``, used to make sampled
        sup/inf estimates hit the kernel's peaks at every scale.
        """
        key = ("crit", order)
        if key not in self._cdf_cache:
            r = self.support_radius
            g = self.derivative_evaluator(order + 1)
            ys = np.linspace(-r, r, _CRIT_SAMPLES)[1:-1]
            vals = g(ys)
            exact = np.nonzero((vals[1:-1] == 0.0) & (vals[:-2] * vals[2:] < 0))[0] + 1
            roots = list(ys[exact])
            sign_change = np.nonzero(vals[:-1] * vals[1:] < 0)[0]
            for i in sign_change:
                roots.append(brentq(lambda s: float(g(np.array([s]))[0]), ys[i], ys[i + 1], xtol=1e-15))
            self._cdf_cache[key] = np.unique(np.asarray(roots, dtype=float))
        return self._cdf_cache[key]

    def to_csv(self, path, samples=801):
        y = np.linspace(-self.support_radius, self.support_radius, samples)
        v = self.kernel(y)
        with open(Path(path), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["y", "value"])
            for a, b in zip(y, v):
                wr.writerow([f"{a:.17g}", f"{b:.17g}"])


@dataclass(frozen=True)
class ScaledMollifier:
    """``phi_eps(x) = phi(x/eps) / eps``."""

    base: Mollifier
    epsilon: float

    @property
    def support_radius(self) -> float:
        return self.epsilon * self.base.support_radius

    def __call__(self, x, deriv=0):
        eps = self.epsilon
        return self.base.kernel(np.asarray(x, dtype=float) / eps, deriv) / eps ** (deriv + 1)

    def cdf(self, x):
        return self.base.cdf(np.asarray(x, dtype=float) / self.epsilon)

    def tensor(self, *coords):
        """Tensor-product kernel phi_eps(x_1) ... phi_eps(x_n) on R^n."""
        out = 1.0
        for c in coords:
            out = out * self(c)
        return out

    def quadrature(self):
        return composite_gauss_legendre(-self.support_radius, self.support_radius)


def _bump_moments(max_power, sharpness):
    X, W = composite_gauss_legendre(-1.0, 1.0)
    b = bump_derivative(X, 0, (1.0,), sharpness)
    return np.array([np.sum(W * X**j * b) for j in range(max_power + 1)])


def build_mollifier(q: int, support_radius: float = 1.0, sharpness: float = 1.0) -> Mollifier:
    """Construct the even bump-times-polynomial kernel in A_q(R).

    ``sharpness`` changes the exponent of the bump and therefore gives a
    different kernel of the same order (used for mollifier-robustness runs).
    """
    if q < 0 or int(q) != q:
        raise ValueError(f"q must be a nonnegative integer, got {q!r}")
    if not support_radius > 0:
        raise ValueError(f"support_radius must be positive, got {support_radius!r}")
    q = int(q)
    powers = np.arange(0, q + 1, 2)
    mu = _bump_moments(2 * powers[-1], sharpness)
    H = mu[powers[:, None] + powers[None, :]]
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise MollifierError(f"moment system for q={q} is numerically singular (cond={cond:.3g})")
    rhs = np.zeros(len(powers))
    rhs[0] = 1.0
    even = np.linalg.solve(H, rhs)
    coeffs = np.zeros(powers[-1] + 1)
    coeffs[powers] = even
    m = Mollifier(q, float(support_radius), tuple(float(c) for c in coeffs), float(sharpness))
    for k in range(q + 1):
        target = 1.0 if k == 0 else 0.0
        resid = moment(m, k) - target
        if abs(resid) > 1e-10 * max(1.0, support_radius**k):
            raise MollifierError(f"moment {k} residual {resid:.3g} exceeds tolerance for q={q}")
    return m


def build_nonnegative_profile(support_radius: float = 1.0, sharpness: float = 1.0) -> Mollifier:
    """Nonnegative unit-mass profile (order 0), as needed by the delta-inversion example."""
    return build_mollifier(0, support_radius, sharpness)


def scale(m: Mollifier, epsilon: float) -> ScaledMollifier:
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    return ScaledMollifier(m, float(epsilon))


def moment(m, k: int) -> float:
    """``int y**k m(y) dy`` by composite Gauss-Legendre over the support."""
    if k < 0:
        raise ValueError("moment order must be nonnegative")
    X, W = m.quadrature()
    return float(np.sum(W * X**k * m(X)))
