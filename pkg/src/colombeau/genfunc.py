"""Generalized functions at the level of representatives.

A :class:`Representative` is the family ``phi_eps -> u(phi_eps, .)``: it is
evaluated with a :class:`~colombeau.mollifier.ScaledMollifier` and a point.
Singular data (Heaviside, derivatives of delta) are embedded by convolution
with the kernel; smooth data are embedded as themselves by default.

The estimators sample the representative on a compact set for a decreasing
grid of epsilons and fit log-log slopes.  Verdicts always require the raw
inequality at every grid point, never only the fit.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from itertools import product
from math import comb
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .expressions import SmoothExpr
from .mollifier import Mollifier, ScaledMollifier, bump_derivative, composite_gauss_legendre, scale

# Dense sampling of compact sets: uniform subintervals per axis (plus the
# kernel's mapped critical points).
SAMPLES_1D = 2048
SAMPLES_2D = 256
MAX_CLASS_EXPONENT = 12
_REL_SLACK = 1e-9


class EstimateError(ValueError):
    pass


class QuadratureError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# symbolic singular data


@dataclass(frozen=True)
class Smooth:
    expr: str

    def to_dict(self):
        return {"type": "smooth", "expr": self.expr}


@dataclass(frozen=True)
class Heaviside:
    location: float = 0.0
    axis: str | None = None

    def to_dict(self):
        d = {"type": "heaviside", "location": self.location}
        if self.axis:
            d["axis"] = self.axis
        return d


@dataclass(frozen=True)
class DeltaDerivative:
    order: int = 0
    location: float = 0.0
    axis: str | None = None

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("delta derivative order must be nonnegative")

    def to_dict(self):
        d = {"type": "delta", "order": self.order, "location": self.location}
        if self.axis:
            d["axis"] = self.axis
        return d


@dataclass(frozen=True)
class LinearCombination:
    terms: tuple  # of (coefficient, spec)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a linear combination needs at least one term")

    def to_dict(self):
        if len(self.terms) == 1:
            c, s = self.terms[0]
            d = s.to_dict()
            d["coeff"] = c
            return d
        return {"type": "sum", "terms": [dict(s.to_dict(), coeff=c) for c, s in self.terms]}


DistributionSpec = Smooth | Heaviside | DeltaDerivative | LinearCombination


def spec_from_dict(d) -> DistributionSpec:
    """Parse the JSON form ``{type, order, location, coeff, expr, axis}``.

    Bare numbers and strings are shorthand for smooth expressions.
    """
    if isinstance(d, bool):
        raise ValueError(f"invalid distribution spec {d!r}")
    if isinstance(d, (int, float)):
        return Smooth(repr(float(d)) if isinstance(d, float) else str(d))
    if isinstance(d, str):
        return Smooth(d)
    if not isinstance(d, dict) or "type" not in d:
        raise ValueError(f"distribution spec must be a number, string or object with 'type', got {d!r}")
    kind = d["type"]
    if kind == "smooth":
        base = Smooth(str(d.get("expr", "0")))
    elif kind == "heaviside":
        base = Heaviside(float(d.get("location", 0.0)), d.get("axis"))
    elif kind == "delta":
        order = d.get("order", 0)
        if not isinstance(order, int) or order < 0:
            raise ValueError(f"delta order must be a nonnegative integer, got {order!r}")
        base = DeltaDerivative(order, float(d.get("location", 0.0)), d.get("axis"))
    elif kind == "sum":
        terms = d.get("terms") or []
        if not terms:
            raise ValueError("'sum' spec needs a non-empty 'terms' list")
        parsed = []
        for t in terms:
            s = spec_from_dict(t)
            if isinstance(s, LinearCombination):
                parsed.extend(s.terms)
            else:
                parsed.append((1.0, s))
        base = LinearCombination(tuple(parsed))
    else:
        raise ValueError(f"unknown distribution type {kind!r}")
    coeff = d.get("coeff", 1.0)
    if coeff != 1.0:
        if isinstance(base, LinearCombination):
            return LinearCombination(tuple((coeff * c, s) for c, s in base.terms))
        return LinearCombination(((float(coeff), base),))
    return base


def spec_is_zero(spec) -> bool:
    if isinstance(spec, Smooth):
        return SmoothExpr(spec.expr, ("x", "t")).is_zero
    if isinstance(spec, LinearCombination):
        return all(c == 0 or spec_is_zero(s) for c, s in spec.terms)
    return False


def spec_is_singular(spec) -> bool:
    if isinstance(spec, (Heaviside, DeltaDerivative)):
        return True
    if isinstance(spec, LinearCombination):
        return any(c != 0 and spec_is_singular(s) for c, s in spec.terms)
    return False


# --------------------------------------------------------------------------
# representatives


def _norm_alpha(alpha, ndim):
    if isinstance(alpha, int):
        alpha = (alpha,) + (0,) * (ndim - 1)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != ndim or any(a < 0 for a in alpha):
        raise ValueError(f"invalid multi-index {alpha} for {ndim} variables")
    return alpha


def _no_features(sm, alpha, ndim):
    return tuple(np.empty(0) for _ in range(ndim))


class Representative:
    """A family ``eps -> u(phi_eps, .)`` of smooth functions.

    ``fn(sm, alpha, *coords)`` returns the ``alpha`` derivative at the given
    coordinates.  ``features(sm, alpha)`` lists, per axis, points where the
    function has eps-scale structure (peaks, support edges).
    """

    def __init__(self, fn, variables=("x",), source="composite", features=None, singular_axes=()):
        self._fn = fn
        self.variables = tuple(variables)
        self.source = source
        self._features = features
        self.singular_axes = frozenset(singular_axes)

    @property
    def ndim(self):
        return len(self.variables)

    def __repr__(self):
        return f"Representative({self.source!r}, variables={self.variables})"

    def __call__(self, sm, *coords):
        return self.derivative(sm, (0,) * self.ndim, *coords)

    def eval(self, sm, *coords):
        return self(sm, *coords)

    def derivative(self, sm, alpha, *coords):
        alpha = _norm_alpha(alpha, self.ndim)
        if len(coords) != self.ndim:
            raise ValueError(f"expected {self.ndim} coordinates, got {len(coords)}")
        coords = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*(c.shape for c in coords))
        out = self._fn(sm, alpha, *coords)
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def feature_points(self, sm, alpha=None):
        alpha = _norm_alpha(alpha if alpha is not None else 0, self.ndim)
        if self._features is None:
            return _no_features(sm, alpha, self.ndim)
        return self._features(sm, alpha)

    # -- algebra ----------------------------------------------------------

    def _combine_features(self, other):
        def feats(sm, alpha):
            a = self.feature_points(sm, alpha)
            b = other.feature_points(sm, alpha)
            # products need the structure of lower derivatives of both factors
            if any(alpha):
                a0 = self.feature_points(sm, (0,) * self.ndim)
                b0 = other.feature_points(sm, (0,) * self.ndim)
                return tuple(np.unique(np.concatenate(z)) for z in zip(a, b, a0, b0))
            return tuple(np.unique(np.concatenate([p, q])) for p, q in zip(a, b))

        return feats

    def _check_compat(self, other):
        if self.variables != other.variables:
            raise ValueError(f"variables differ: {self.variables} vs {other.variables}")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = constant(other, self.variables)
        self._check_compat(other)
        fn = lambda sm, a, *c: self.derivative(sm, a, *c) + other.derivative(sm, a, *c)
        return Representative(fn, self.variables, "composite", self._combine_features(other),
                              self.singular_axes | other.singular_axes)

    __radd__ = __add__

    def __neg__(self):
        fn = lambda sm, a, *c: -self.derivative(sm, a, *c)
        return Representative(fn, self.variables, self.source, self._features, self.singular_axes)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            k = float(other)
            fn = lambda sm, a, *c: k * self.derivative(sm, a, *c)
            return Representative(fn, self.variables, self.source, self._features, self.singular_axes)
        self._check_compat(other)

        def fn(sm, alpha, *coords):
            total = 0.0
            for beta in product(*(range(a + 1) for a in alpha)):
                weight = math.prod(comb(a, b) for a, b in zip(alpha, beta))
                rest = tuple(a - b for a, b in zip(alpha, beta))
                total = total + weight * self.derivative(sm, beta, *coords) * other.derivative(sm, rest, *coords)
            return total

        return Representative(fn, self.variables, "composite", self._combine_features(other),
                              self.singular_axes | other.singular_axes)

    __rmul__ = __mul__

    def reciprocal(self):
        """Pointwise ``1/u`` with derivatives from the Leibniz rule on ``u v = 1``."""

        def fn(sm, alpha, *coords):
            u0 = self.derivative(sm, (0,) * self.ndim, *coords)
            with np.errstate(divide="ignore", invalid="ignore"):
                vals = {(0,) * self.ndim: 1.0 / u0}
                lower = sorted(product(*(range(a + 1) for a in alpha)), key=sum)
                for gamma in lower[1:]:
                    acc = 0.0
                    for beta in product(*(range(g + 1) for g in gamma)):
                        if not any(beta):
                            continue
                        w = math.prod(comb(g, b) for g, b in zip(gamma, beta))
                        rest = tuple(g - b for g, b in zip(gamma, beta))
                        acc = acc + w * self.derivative(sm, beta, *coords) * vals[rest]
                    vals[gamma] = -acc / u0
            return vals[alpha]

        return Representative(fn, self.variables, "composite", self._features, self.singular_axes)

    def differentiate(self, alpha):
        shift = _norm_alpha(alpha, self.ndim)
        fn = lambda sm, a, *c: self.derivative(sm, tuple(x + y for x, y in zip(a, shift)), *c)
        feats = lambda sm, a: self.feature_points(sm, tuple(x + y for x, y in zip(a, shift)))
        return Representative(fn, self.variables, "composite", feats, self.singular_axes)


def add(r1, r2):
    return r1 + r2


def mul(r1, r2):
    return r1 * r2


def negate(r):
    return -r


def differentiate(r, alpha):
    return r.differentiate(alpha)


def reciprocal(r):
    return r.reciprocal()


def constant(value, variables=("x",)):
    v = float(value)

    def fn(sm, alpha, *coords):
        return v if not any(alpha) else 0.0

    return Representative(fn, variables, Smooth(repr(v)))


def _axis_index(spec_axis, variables):
    if spec_axis is None:
        return 0
    if spec_axis not in variables:
        raise ValueError(f"axis {spec_axis!r} is not one of {variables}")
    return variables.index(spec_axis)


def _kernel_features(sm: ScaledMollifier, order, location):
    crit = sm.base.critical_points(order) if order >= -1 else np.empty(0)
    r = sm.support_radius
    return np.concatenate([location + sm.epsilon * crit, [location - r, location, location + r]])


def regularize(d: DistributionSpec, variables=("x",), embedding="identity") -> Representative:
    """Embed symbolic data as a representative.

    ``delta^(m)`` at ``x0`` becomes ``eps^-(m+1) phi^(m)((x - x0)/eps)``, the
    Heaviside step becomes the kernel's cumulative integral, and smooth
    functions are taken as they are (``embedding="convolution"`` convolves them
    with ``phi_eps`` instead).  Singular data depend on one axis only, which is
    the tensor-product kernel restricted to that axis.
    """
    variables = tuple(variables)
    nd = len(variables)
    if isinstance(d, LinearCombination):
        parts = [(c, regularize(s, variables, embedding)) for c, s in d.terms]
        out = parts[0][1] * parts[0][0]
        for c, r in parts[1:]:
            out = out + r * c
        out.source = d
        return out
    if isinstance(d, Smooth):
        g = SmoothExpr(d.expr, variables)
        if embedding == "identity":
            fn = lambda sm, alpha, *coords: g.derivative(alpha, *coords)
        elif embedding == "convolution":
            def fn(sm, alpha, *coords):
                y, w = composite_gauss_legendre(-sm.support_radius, sm.support_radius, 4, 16)
                k = sm(y) * w
                total = 0.0
                for idx in product(range(len(y)), repeat=nd):
                    weight = math.prod(k[i] for i in idx)
                    if weight == 0.0:
                        continue
                    shifted = [c - y[i] for c, i in zip(coords, idx)]
                    total = total + weight * g.derivative(alpha, *shifted)
                return total
        else:
            raise ValueError(f"unknown embedding {embedding!r}")
        return Representative(fn, variables, d)
    if isinstance(d, DeltaDerivative):
        ax = _axis_index(d.axis, variables)
        m0, x0 = d.order, d.location

        def fn(sm, alpha, *coords):
            if any(a for i, a in enumerate(alpha) if i != ax):
                return 0.0
            k = alpha[ax]
            eps = sm.epsilon
            return sm.base.kernel((coords[ax] - x0) / eps, m0 + k) / eps ** (m0 + k + 1)

        def feats(sm, alpha):
            out = [np.empty(0) for _ in range(nd)]
            out[ax] = _kernel_features(sm, m0 + alpha[ax], x0)
            return tuple(out)

        return Representative(fn, variables, d, feats, {ax})
    if isinstance(d, Heaviside):
        ax = _axis_index(d.axis, variables)
        x0 = d.location

        def fn(sm, alpha, *coords):
            if any(a for i, a in enumerate(alpha) if i != ax):
                return 0.0
            k = alpha[ax]
            eps = sm.epsilon
            z = (coords[ax] - x0) / eps
            if k == 0:
                return sm.base.cdf(z)
            return sm.base.kernel(z, k - 1) / eps**k

        def feats(sm, alpha):
            out = [np.empty(0) for _ in range(nd)]
            out[ax] = _kernel_features(sm, alpha[ax] - 1, x0)
            return tuple(out)

        return Representative(fn, variables, d, feats, {ax})
    raise TypeError(f"not a distribution spec: {d!r}")


def example1_representative(m0: int, phi_profile: Mollifier) -> Representative:
    """``l + l^-(m0+1) Phi^(m0)(x / l)`` with ``l = l(phi_eps) = eps l(phi)``.

    ``phi_profile`` is the fixed nonnegative unit-mass profile Phi; ``l`` is
    read from whichever scaled mollifier the representative is evaluated with.
    """
    probe = np.linspace(-phi_profile.support_radius, phi_profile.support_radius, 4001)
    if np.any(phi_profile(probe) < 0):
        raise ValueError("the profile must be nonnegative")
    if m0 < 0:
        raise ValueError("m0 must be nonnegative")

    def fn(sm, alpha, x):
        k = alpha[0]
        ell = sm.support_radius
        spike = phi_profile.kernel(x / ell, m0 + k) / ell ** (m0 + 1 + k)
        return spike + (ell if k == 0 else 0.0)

    def feats(sm, alpha):
        ell = sm.support_radius
        crit = phi_profile.critical_points(m0 + alpha[0])
        R = phi_profile.support_radius * ell
        return (np.concatenate([ell * crit, [-R, 0.0, R]]),)

    return Representative(fn, ("x",), f"example1(m={m0})", feats, {0})


# --------------------------------------------------------------------------
# test functions


@dataclass(frozen=True)
class TestFunction:
    """Compactly supported ``p(z) exp(-1/(1-z^2))``, ``z = (x - center)/halfwidth``."""

    __test__ = False  # not a pytest class

    center: float = 0.0
    halfwidth: float = 1.0
    coeffs: tuple = (1.0,)
    label: str = ""

    @property
    def support(self):
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def __call__(self, x, deriv=0):
        z = (np.asarray(x, dtype=float) - self.center) / self.halfwidth
        return bump_derivative(z, deriv, self.coeffs) / self.halfwidth**deriv

    def name(self):
        return self.label or f"psi(c={self.center:g},w={self.halfwidth:g},p={list(self.coeffs)})"


def _breakpoint_quadrature(fn, a, b, breaks, panels):
    pts = np.unique(np.concatenate([[a, b], np.asarray(breaks, dtype=float)]))
    pts = pts[(pts >= a) & (pts <= b)]
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0:
            continue
        X, W = composite_gauss_legendre(lo, hi, panels, 16)
        total += float(np.sum(W * fn(X)))
    return total


def pair(r: Representative, sm: ScaledMollifier, psi: TestFunction, tol=1e-10):
    """``int r(phi_eps, x) psi(x) dx`` with breakpoints at the kernel's structure."""
    a, b = psi.support
    breaks = r.feature_points(sm, 0)[0]
    f = lambda x: r(sm, x) * psi(x)
    coarse = _breakpoint_quadrature(f, a, b, breaks, 8)
    fine = _breakpoint_quadrature(f, a, b, breaks, 16)
    # cancellation in derivative-of-delta pairings: measure against int |f|
    mass = _breakpoint_quadrature(lambda x: np.abs(f(x)), a, b, breaks, 8)
    scale_ = max(1.0, abs(fine), mass)
    if not abs(fine - coarse) <= tol * scale_:
        raise QuadratureError(f"quadrature did not reach tolerance at eps={sm.epsilon:g}: "
                              f"|I16 - I8| = {abs(fine - coarse):.3g}")
    return fine


def target_pairing(target: DistributionSpec, psi: TestFunction) -> float:
    """``<f, psi>`` computed per variant of the target distribution."""
    a, b = psi.support
    if isinstance(target, Smooth):
        g = SmoothExpr(target.expr, ("x",))
        return _breakpoint_quadrature(lambda x: g(x) * psi(x), a, b, [], 32)
    if isinstance(target, Heaviside):
        x0 = target.location
        return _breakpoint_quadrature(lambda x: psi(x), max(a, x0), max(b, x0), [], 32)
    if isinstance(target, DeltaDerivative):
        m = target.order
        return float((-1) ** m * psi(np.array([target.location]), m)[0])
    if isinstance(target, LinearCombination):
        return sum(c * target_pairing(s, psi) for c, s in target.terms)
    raise TypeError(f"not a distribution spec: {target!r}")


# --------------------------------------------------------------------------
# growth reports


@dataclass
class GrowthReport:
    kind: str  # "moderate" or "invertible"
    fitted_exponent: float
    per_epsilon_norms: list
    regression_r2: float
    compact_set: tuple
    alpha: tuple = (0,)
    verdict: str = ""
    passed: bool = False
    bounds: list = field(default_factory=list)
    sign_changes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def epsilons(self):
        return np.array([e for e, _ in self.per_epsilon_norms])

    @property
    def norms(self):
        return np.array([n for _, n in self.per_epsilon_norms])

    def to_dict(self):
        d = asdict(self)
        d["per_epsilon_norms"] = [[float(e), float(n)] for e, n in self.per_epsilon_norms]
        return d

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True)

    def to_csv(self, path):
        with open(Path(path), "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["epsilon", "norm", "bound"])
            for (e, n), b in zip(self.per_epsilon_norms, self.bounds or [float("nan")] * len(self.per_epsilon_norms)):
                wr.writerow([f"{e:.17g}", f"{n:.17g}", f"{b:.17g}"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def geometric_grid(start, stop, count):
    """Decreasing geometric grid from ``start`` to ``stop`` inclusive."""
    return [float(v) for v in np.geomspace(start, stop, int(count))]


def _check_grid(eps_grid, upper=0.1):
    eps = np.asarray(eps_grid, dtype=float)
    if eps.ndim != 1 or len(eps) < 6:
        raise EstimateError("epsilon grid needs at least 6 points")
    if np.any(np.diff(eps) >= 0):
        raise EstimateError("epsilon grid must be strictly decreasing")
    if np.any(eps <= 0) or np.any(eps > upper):
        raise EstimateError(f"epsilon grid must lie in (0, {upper:g}]")
    return eps


def _axis_samples(lo, hi, feats, n):
    base = np.linspace(lo, hi, n + 1)
    f = np.asarray(feats, dtype=float)
    f = f[(f >= lo) & (f <= hi)]
    return np.unique(np.concatenate([base, f]))


def _normalize_K(K, ndim):
    K = tuple(K)
    if ndim == 1 and len(K) == 2 and not isinstance(K[0], (tuple, list)):
        return ((float(K[0]), float(K[1])),)
    if len(K) != ndim:
        raise ValueError(f"compact set {K} does not match {ndim} variables")
    return tuple((float(a), float(b)) for a, b in K)


def sample_values(r: Representative, sm: ScaledMollifier, K, alpha=None):
    """Values of ``d^alpha r`` on the dense sample of ``K`` (1-D: 2048 cells, 2-D: 256^2)."""
    alpha = _norm_alpha(alpha if alpha is not None else 0, r.ndim)
    Kn = _normalize_K(K, r.ndim)
    feats = r.feature_points(sm, alpha)
    n = SAMPLES_1D if r.ndim == 1 else SAMPLES_2D
    axes = [_axis_samples(lo, hi, f, n) for (lo, hi), f in zip(Kn, feats)]
    grids = np.meshgrid(*axes, indexing="ij")
    return axes, r.derivative(sm, alpha, *grids)


def _loglog_fit(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    ok = ys > 0
    if ok.sum() < 2:
        return 0.0, float("nan")
    lx, ly = np.log(xs[ok]), np.log(ys[ok])
    if np.ptp(ly) == 0.0:
        return 0.0, 1.0
    res = stats.linregress(lx, ly)
    return float(res.slope), float(res.rvalue**2)


def _sign_changes(vals):
    v = np.sign(np.asarray(vals).ravel())
    v = v[v != 0]
    return int(np.count_nonzero(v[1:] != v[:-1]))


def check_moderateness(r: Representative, K, alpha, eps_grid, m: Mollifier) -> GrowthReport:
    """Fit ``sup_K |d^alpha u(phi_eps, .)| ~ C eps^-N`` over the grid."""
    eps = _check_grid(eps_grid)
    alpha = _norm_alpha(alpha, r.ndim)
    norms = []
    for e in eps:
        _, vals = sample_values(r, scale(m, e), K, alpha)
        s = float(np.max(np.abs(vals)))
        if not math.isfinite(s):
            raise EstimateError(f"non-finite sup norm at eps={e:g}")
        norms.append(s)
    norms = np.array(norms)
    slope, r2 = _loglog_fit(1.0 / eps, norms)
    N = max(0, math.ceil(slope - 1e-6))
    C = norms[0] * eps[0] ** N
    bounds = C * eps ** (-float(N))
    passed = bool(np.all(norms <= bounds * (1 + _REL_SLACK) + 1e-300))
    return GrowthReport(
        kind="moderate", fitted_exponent=slope, per_epsilon_norms=list(zip(eps.tolist(), norms.tolist())),
        regression_r2=r2, compact_set=_normalize_K(K, r.ndim), alpha=alpha,
        verdict="moderate-empirically" if passed else "not-moderate-empirically", passed=passed,
        bounds=bounds.tolist(), details={"N": N, "C": float(C), "mollifier": m.ident},
    )


def check_invertibility(r: Representative, K, eps_grid, m: Mollifier, exponent=None) -> GrowthReport:
    """Fit ``inf_K |u(phi_eps, .)| ~ eps^p`` and test the lower bound at every eps.

    With ``exponent`` given the bound is ``eps^exponent``; otherwise it is
    ``eps^(p_hat + 0.5)`` with ``p_hat`` the fitted slope (clamped at 0).
    ``sign_changes`` counts sign alternations between adjacent samples; it is
    diagnostic only, the verdict follows the sampled infimum.
    """
    eps = _check_grid(eps_grid)
    infs, signs = [], []
    for e in eps:
        _, vals = sample_values(r, scale(m, e), K, 0)
        a = np.abs(vals)
        if not np.all(np.isfinite(a)):
            raise EstimateError(f"non-finite values at eps={e:g}")
        infs.append(float(np.min(a)))
        signs.append(_sign_changes(vals))
    infs = np.array(infs)
    pairs = list(zip(eps.tolist(), infs.tolist()))
    common = dict(kind="invertible", per_epsilon_norms=pairs, compact_set=_normalize_K(K, r.ndim),
                  alpha=(0,) * r.ndim, sign_changes=signs)
    if np.any(infs == 0.0):
        zero_at = [float(e) for e, v in pairs if v == 0.0]
        return GrowthReport(fitted_exponent=float("nan"), regression_r2=float("nan"),
                            verdict="not-invertible-at-sampled-eps", passed=False,
                            bounds=[float("nan")] * len(eps), details={"zero_at_eps": zero_at, "mollifier": m.ident},
                            **common)
    p_hat, r2 = _loglog_fit(eps, infs)
    p_used = float(exponent) if exponent is not None else max(p_hat, 0.0) + 0.5
    bounds = eps**p_used
    passed = bool(np.all(infs >= bounds * (1 - _REL_SLACK)))
    return GrowthReport(fitted_exponent=p_hat, regression_r2=r2,
                        verdict="invertible-empirically" if passed else "not-invertible",
                        passed=passed, bounds=bounds.tolist(),
                        details={"bound_exponent": p_used, "mollifier": m.ident}, **common)


# --------------------------------------------------------------------------
# association


@dataclass
class AssociationRow:
    test_function: str
    epsilons: list
    pairings: list
    target: float
    errors: list
    rate: float
    monotone: bool
    converged: bool


def check_association(r: Representative, target: DistributionSpec, test_functions: Sequence[TestFunction],
                      eps_grid, m: Mollifier, tol=1e-10):
    """Weak convergence of ``r`` towards ``target`` against each test function."""
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise EstimateError("epsilon grid must be positive and strictly decreasing")
    rows = []
    for psi in test_functions:
        ref = target_pairing(target, psi)
        vals = [pair(r, scale(m, e), psi, tol) for e in eps]
        errs = np.abs(np.array(vals) - ref)
        if np.all(errs <= 1e3 * tol * max(1.0, abs(ref))):
            rate = float("inf")
        else:
            rate, _ = _loglog_fit(eps, errs)
        monotone = bool(np.all(np.diff(errs) <= 1e3 * tol * max(1.0, abs(ref))))
        converged = bool(errs[-1] <= errs[0] + 1e3 * tol) and (errs[-1] < max(errs[0], 1e-8) or rate == float("inf"))
        rows.append(AssociationRow(psi.name(), eps.tolist(), [float(v) for v in vals], float(ref),
                                   errs.tolist(), rate, monotone, converged))
    return rows


# --------------------------------------------------------------------------
# gamma classes


def gamma(p):
    """``sqrt(0.5 ln ln ln (1/p))``; defined for ``p < exp(-e)``."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(0.5 * np.log(np.log(np.log(1.0 / p))))


def gamma1(p):
    """``sqrt(ln ln (1/p))``; defined for ``p < 1/e``."""
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.log(np.log(1.0 / p)))


@dataclass(frozen=True)
class GammaClass:
    variant: str  # "power", "gamma", "gamma1"

    @property
    def max_eps(self):
        return {"power": 1e-2, "gamma": 1e-3, "gamma1": 1e-2}[self.variant]

    def evaluator(self, eps):
        if self.variant == "power":
            return 1.0 / np.asarray(eps, dtype=float)
        if self.variant == "gamma":
            return gamma(eps)
        if self.variant == "gamma1":
            return gamma1(eps)
        raise ValueError(f"unknown gamma class {self.variant!r}")


POWER = GammaClass("power")
GAMMA = GammaClass("gamma")
GAMMA1 = GammaClass("gamma1")


@dataclass
class GammaCheck:
    passed: bool
    exponent: int | None
    cls: str
    kind: str
    bounds: list
    constant: float | None

    def to_dict(self):
        return asdict(self)


def check_gamma_class(report: GrowthReport, cls: GammaClass, kind: str = "growth") -> GammaCheck:
    """Smallest exponent ``N <= 12`` for which the class bound holds at every grid eps.

    growth:        ``norm(eps) <= C g(eps)^N``, ``C`` fixed at the largest eps.
    invertibility: ``inf(eps) >= c g(eps)^-p``, ``c`` fixed at the largest eps.
    The constant in the invertibility bound is harmless asymptotically
    (``c g^-p >= g^-(p+1)`` once ``g >= 1/c``) and is needed at computable eps,
    where ``gamma(eps) < 1``.
    """
    eps = report.epsilons
    if np.any(eps > cls.max_eps) or np.any(eps <= 0):
        raise EstimateError(f"epsilon grid outside the admissible range (0, {cls.max_eps:g}] for {cls.variant}")
    norms = report.norms
    g = cls.evaluator(eps)
    i0 = int(np.argmax(eps))
    for N in range(MAX_CLASS_EXPONENT + 1):
        if kind == "growth":
            C = norms[i0] / g[i0] ** N
            bounds = C * g**N
            ok = np.all(norms <= bounds * (1 + _REL_SLACK) + 1e-300)
        elif kind == "invertibility":
            C = norms[i0] * g[i0] ** N
            bounds = C * g ** (-float(N))
            ok = norms[i0] > 0 and np.all(norms >= bounds * (1 - _REL_SLACK))
        else:
            raise ValueError(f"kind must be 'growth' or 'invertibility', got {kind!r}")
        if ok:
            return GammaCheck(True, N, cls.variant, kind, bounds.tolist(), float(C))
    return GammaCheck(False, None, cls.variant, kind, [], None)
