"""Mixed problem ``(d_t + Lambda d_x) U = f(x,t,U)`` on ``(-L, L) x (0, T)``.

Initial data ``U(x, 0) = A(x)`` and the nonlocal boundary condition
``B(t) U(-L,t) + C(t) U(L,t) + int D(x,t) U(x,t) dx = H(t)``.  Components
``1..k`` travel left (``Lambda_i < 0``), components ``k+1..n`` travel right.
All indices in code are 0-based.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import genfunc as gf
from .expressions import ExpressionError, SmoothExpr
from .mollifier import Mollifier, scale

# Validation defaults.
U_BOX = 1e3
FD_STEP = 1e-6
FD_RTOL = 1e-4
SUPPORT_MARGIN = 0.02
DEFAULT_VALIDATION_GRID = gf.geometric_grid(1e-3, 1e-6, 6)


class ProblemSpecError(ValueError):
    """Structurally invalid problem description; ``field`` names the culprit."""

    def __init__(self, field_name, message):
        super().__init__(f"field {field_name!r}: {message}")
        self.field = field_name


# --------------------------------------------------------------------------
# nonlinearities


class Nonlinearity:
    """Right-hand side ``f(x, t, U)`` with its U-gradient and declared bounds.

    ``value`` takes ``U`` of shape ``(n, ...)`` and returns ``(n, ...)``;
    ``grad`` returns ``(n, n, ...)`` with ``grad[i, s] = d f_i / d U_s``.
    """

    name = "abstract"
    polynomially_bounded = True

    def __init__(self, n, params=None):
        self.n = n
        self.params = params or {}

    @property
    def is_zero(self):
        return False

    @property
    def grad_bound(self) -> float:
        raise NotImplementedError

    def to_dict(self):
        return {"name": self.name, "params": copy.deepcopy(self.params)}


class ZeroNonlinearity(Nonlinearity):
    name = "zero"

    @property
    def is_zero(self):
        return True

    @property
    def grad_bound(self):
        return 0.0

    def value(self, x, t, U):
        return np.zeros_like(np.asarray(U, dtype=float))

    def grad(self, x, t, U):
        U = np.asarray(U, dtype=float)
        return np.zeros((self.n,) + U.shape)


def _source_terms(n, params):
    g = params.get("g")
    if g is None:
        return None
    if len(g) != n:
        raise ProblemSpecError("f.params.g", f"expected {n} expressions")
    exprs = [SmoothExpr(str(e), ("x", "t")) for e in g]
    return None if all(e.is_zero for e in exprs) else exprs


def _eval_source(exprs, x, t, shape):
    if exprs is None:
        return 0.0
    return np.stack([np.broadcast_to(e(x, t), shape) for e in exprs])


class LinearNonlinearity(Nonlinearity):
    """``f = a U + g(x, t)`` with ``a`` a list (diagonal) or an ``n x n`` matrix."""

    name = "linear"

    def __init__(self, n, params=None):
        super().__init__(n, params)
        a = np.asarray(self.params.get("a", 0.0), dtype=float)
        if a.ndim == 0:
            a = np.full(n, float(a))
        if a.ndim == 1:
            if len(a) != n:
                raise ProblemSpecError("f.params.a", f"expected {n} entries")
            a = np.diag(a)
        if a.shape != (n, n):
            raise ProblemSpecError("f.params.a", f"expected a list of {n} or an {n}x{n} matrix")
        self.a = a
        self.g = _source_terms(n, self.params)

    @property
    def is_zero(self):
        return not np.any(self.a) and self.g is None

    @property
    def grad_bound(self):
        return float(np.max(np.abs(self.a)))

    def value(self, x, t, U):
        U = np.asarray(U, dtype=float)
        out = np.tensordot(self.a, U, axes=(1, 0))
        return out + _eval_source(self.g, x, t, U.shape[1:])

    def grad(self, x, t, U):
        U = np.asarray(U, dtype=float)
        return np.broadcast_to(self.a.reshape(self.a.shape + (1,) * (U.ndim - 1)), (self.n,) + U.shape).copy()


class SaturatedNonlinearity(Nonlinearity):
    """``f_i = a_i tanh(U_i) + g_i(x, t)``; gradient bounded by ``max |a_i|``."""

    name = "saturated"

    def __init__(self, n, params=None):
        super().__init__(n, params)
        a = np.asarray(self.params.get("a", 1.0), dtype=float)
        if a.ndim == 0:
            a = np.full(n, float(a))
        if a.shape != (n,):
            raise ProblemSpecError("f.params.a", f"expected a scalar or {n} entries")
        self.a = a
        self.g = _source_terms(n, self.params)

    @property
    def is_zero(self):
        return not np.any(self.a) and self.g is None

    @property
    def grad_bound(self):
        return float(np.max(np.abs(self.a)))

    def value(self, x, t, U):
        U = np.asarray(U, dtype=float)
        a = self.a.reshape((self.n,) + (1,) * (U.ndim - 1))
        return a * np.tanh(U) + _eval_source(self.g, x, t, U.shape[1:])

    def grad(self, x, t, U):
        U = np.asarray(U, dtype=float)
        out = np.zeros((self.n,) + U.shape)
        for i in range(self.n):
            out[i, i] = self.a[i] * (1.0 - np.tanh(U[i]) ** 2)
        return out


NONLINEARITIES = {
    "zero": ZeroNonlinearity,
    "linear": LinearNonlinearity,
    "saturated": SaturatedNonlinearity,
}


def make_nonlinearity(n, spec) -> Nonlinearity:
    if spec is None:
        spec = {"name": "zero"}
    if isinstance(spec, str):
        spec = {"name": spec}
    name = spec.get("name")
    if name not in NONLINEARITIES:
        raise ProblemSpecError("f.name", f"unknown nonlinearity {name!r}; built-ins: {sorted(NONLINEARITIES)}")
    return NONLINEARITIES[name](n, dict(spec.get("params") or {}))


# --------------------------------------------------------------------------
# problem description


@dataclass
class ProblemSpec:
    n: int
    k: int
    L: float
    T: float
    Lambda: list
    f: Nonlinearity
    A: list
    B: list
    C: list
    D: list
    H: list
    name: str = "problem"

    def __post_init__(self):
        n = self.n
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ProblemSpecError("n", "must be a positive integer")
        if not isinstance(self.k, int) or isinstance(self.k, bool) or not 1 <= self.k <= n:
            raise ProblemSpecError("k", f"must satisfy 1 <= k <= n = {n}, got {self.k!r}")
        if not self.L > 0:
            raise ProblemSpecError("L", "must be positive")
        if not self.T > 0:
            raise ProblemSpecError("T", "must be positive")
        for name in ("Lambda", "A", "H"):
            if len(getattr(self, name)) != n:
                raise ProblemSpecError(name.lower() if name == "Lambda" else name, f"expected {n} entries")
        for name in ("B", "C", "D"):
            M = getattr(self, name)
            if len(M) != n or any(len(row) != n for row in M):
                raise ProblemSpecError(name, f"expected an {n}x{n} matrix")

    # -- (de)serialization ----------------------------------------------

    @classmethod
    def from_dict(cls, doc) -> "ProblemSpec":
        if not isinstance(doc, dict):
            raise ProblemSpecError("<root>", "problem must be a JSON object")
        for key in ("n", "k", "L", "T", "lambda", "A", "B", "C", "H"):
            if key not in doc:
                raise ProblemSpecError(key, "missing")
        n, k = doc["n"], doc["k"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise ProblemSpecError("n", "must be a positive integer")
        if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= n:
            raise ProblemSpecError("k", f"must satisfy 1 <= k <= n = {n}, got {k!r}")

        def vec(key):
            raw = doc[key]
            if not isinstance(raw, list) or len(raw) != n:
                raise ProblemSpecError(key, f"expected a list of {n} distribution specs")
            out = []
            for i, entry in enumerate(raw):
                out.append(_parse_spec(entry, f"{key}[{i}]"))
            return out

        def mat(key):
            raw = doc.get(key, [[0] * n for _ in range(n)])
            if raw == "identity":
                raw = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
            if raw == "zero":
                raw = [[0] * n for _ in range(n)]
            if not isinstance(raw, list) or len(raw) != n or any(not isinstance(r, list) or len(r) != n for r in raw):
                raise ProblemSpecError(key, f"expected an {n}x{n} matrix of distribution specs")
            return [[_parse_spec(e, f"{key}[{i}][{j}]") for j, e in enumerate(row)] for i, row in enumerate(raw)]

        try:
            L, T = float(doc["L"]), float(doc["T"])
        except (TypeError, ValueError):
            raise ProblemSpecError("L/T", "must be numbers") from None
        p = cls(n=n, k=k, L=L, T=T, Lambda=vec("lambda"), f=make_nonlinearity(n, doc.get("f")),
                A=vec("A"), B=mat("B"), C=mat("C"), D=mat("D"), H=vec("H"), name=str(doc.get("name", "problem")))
        # compile every expression now so that grammar errors carry field names
        p._compile_all()
        return p

    def to_dict(self):
        sd = lambda s: s.to_dict()
        return {
            "name": self.name, "n": self.n, "k": self.k, "L": self.L, "T": self.T,
            "lambda": [sd(s) for s in self.Lambda], "f": self.f.to_dict(),
            "A": [sd(s) for s in self.A], "B": [[sd(s) for s in r] for r in self.B],
            "C": [[sd(s) for s in r] for r in self.C], "D": [[sd(s) for s in r] for r in self.D],
            "H": [sd(s) for s in self.H],
        }

    def replace(self, **changes) -> "ProblemSpec":
        doc = self.to_dict()
        doc.update(changes)
        return ProblemSpec.from_dict(doc)

    def _compile_all(self):
        fields = [("lambda", self.Lambda, ("x", "t")), ("A", self.A, ("x",)), ("H", self.H, ("t",))]
        for key, specs, var in fields:
            for i, s in enumerate(specs):
                _compile(s, var, f"{key}[{i}]")
        for key, M, var in (("B", self.B, ("t",)), ("C", self.C, ("t",)), ("D", self.D, ("x", "t"))):
            for i, row in enumerate(M):
                for j, s in enumerate(row):
                    _compile(s, var, f"{key}[{i}][{j}]")

    # -- representatives --------------------------------------------------

    @cached_property
    def reps(self):
        xt, x, t = ("x", "t"), ("x",), ("t",)
        reg = gf.regularize
        return {
            "Lambda": [reg(s, xt) for s in self.Lambda],
            "A": [reg(s, x) for s in self.A],
            "B": [[reg(s, t) for s in r] for r in self.B],
            "C": [[reg(s, t) for s in r] for r in self.C],
            "D": [[reg(s, xt) for s in r] for r in self.D],
            "H": [reg(s, t) for s in self.H],
        }

    @property
    def D_is_zero(self):
        return all(gf.spec_is_zero(s) for row in self.D for s in row)

    @property
    def H_is_zero(self):
        return all(gf.spec_is_zero(s) for s in self.H)

    @property
    def is_singular(self):
        specs = list(self.Lambda) + list(self.A) + list(self.H)
        specs += [s for M in (self.B, self.C, self.D) for row in M for s in row]
        return any(gf.spec_is_singular(s) for s in specs)

    def incoming_position(self, c):
        """Position of component ``c`` in the vector solved from the boundary condition."""
        return c - self.k if c >= self.k else self.n - self.k + c


def _parse_spec(entry, where):
    try:
        return gf.spec_from_dict(entry)
    except (ValueError, TypeError) as exc:
        raise ProblemSpecError(where, str(exc)) from None


def _compile(spec, variables, where):
    if isinstance(spec, gf.Smooth):
        try:
            SmoothExpr(spec.expr, variables)
        except ExpressionError as exc:
            raise ProblemSpecError(where, str(exc)) from None
    elif isinstance(spec, gf.LinearCombination):
        for _, s in spec.terms:
            _compile(s, variables, where)
    else:
        axis = spec.axis
        if axis is not None and axis not in variables:
            raise ProblemSpecError(where, f"axis {axis!r} is not one of {variables}")


def load_problem(path) -> ProblemSpec:
    with open(path) as fh:
        return ProblemSpec.from_dict(json.load(fh))


# --------------------------------------------------------------------------
# boundary matrix R(t)


def det_cofactor(M):
    """Determinant of ``M`` with shape ``(n, n, ...)``: Laplace expansion for n <= 4, LU above."""
    n = M.shape[0]
    if n == 1:
        return M[0, 0]
    if n == 2:
        return M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if n <= 4:
        total = 0.0
        for j in range(n):
            minor = np.delete(np.delete(M, 0, axis=0), j, axis=1)
            total = total + (-1) ** j * M[0, j] * det_cofactor(minor)
        return total
    moved = np.moveaxis(M, (0, 1), (-2, -1))
    return np.linalg.det(moved)


def adjugate(M):
    """Adjugate (transposed cofactor matrix) of ``M`` with shape ``(n, n, ...)``."""
    n = M.shape[0]
    out = np.empty_like(M, dtype=float)
    if n == 1:
        out[0, 0] = 1.0
        return out
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(M, j, axis=0), i, axis=1)
            out[i, j] = (-1) ** (i + j) * det_cofactor(minor)
    return out


def _laplace_det(M):
    """Determinant of a matrix of representatives (used for n <= 4)."""
    n = len(M)
    if n == 0:
        return gf.constant(1.0, ("t",))
    if n == 1:
        return M[0][0]
    total = None
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _laplace_det(minor)
        term = term if j % 2 == 0 else -term
        total = term if total is None else total + term
    return total


@dataclass
class RMatrix:
    """``R(t)``: columns ``B[:, k..n-1]`` followed by ``C[:, 0..k-1]``."""

    entries: list
    det: gf.Representative
    adjugate: list
    n: int

    def evaluate(self, sm, t):
        """Numeric ``(R, det R, adj R)`` at times ``t``; shapes ``(n, n, *t.shape)``."""
        t = np.asarray(t, dtype=float)
        R = np.stack([np.stack([np.broadcast_to(e(sm, t), t.shape) for e in row]) for row in self.entries])
        return R, det_cofactor(R), adjugate(R)


def build_R(p: ProblemSpec, m: Mollifier | None = None) -> RMatrix:
    n, k = p.n, p.k
    B, C = p.reps["B"], p.reps["C"]
    cols = [[B[i][j] for i in range(n)] for j in range(k, n)] + [[C[i][j] for i in range(n)] for j in range(k)]
    entries = [[cols[j][i] for j in range(n)] for i in range(n)]
    if n <= 4:
        det = _laplace_det(entries)
        adj = []
        for i in range(n):
            row = []
            for j in range(n):
                minor = [r[:i] + r[i + 1:] for idx, r in enumerate(entries) if idx != j]
                c = _laplace_det(minor)
                row.append(c if (i + j) % 2 == 0 else -c)
            adj.append(row)
    else:
        def numeric(which, i=None, j=None):
            def fn(sm, alpha, t):
                if any(alpha):
                    raise NotImplementedError("derivatives of det R are only available for n <= 4")
                R = np.stack([np.stack([np.broadcast_to(e(sm, t), np.shape(t)) for e in row]) for row in entries])
                return det_cofactor(R) if which == "det" else adjugate(R)[i, j]
            return gf.Representative(fn, ("t",), f"{which} R")

        det = numeric("det")
        adj = [[numeric("adj", i, j) for j in range(n)] for i in range(n)]
    return RMatrix(entries, det, adj, n)


# --------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    problem: str
    assumptions: dict
    advisory: dict
    eps_grid: list
    mollifier: dict

    @property
    def passed(self):
        return all(a["passed"] for a in self.assumptions.values())

    def failed(self):
        return [k for k, a in self.assumptions.items() if not a["passed"]]

    def to_dict(self):
        return gf._jsonable({
            "problem": self.problem, "passed": self.passed, "failed": self.failed(),
            "assumptions": self.assumptions, "advisory": self.advisory,
            "eps_grid": self.eps_grid, "mollifier": self.mollifier,
        })

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _strip(p):
    return ((-p.L, p.L), (0.0, p.T))


def _check_f(p: ProblemSpec, seed):
    rng = np.random.default_rng(seed)
    n, f = p.n, p.f
    pts = 256
    x = rng.uniform(-p.L, p.L, pts)
    t = rng.uniform(0, p.T, pts)
    U = rng.uniform(-U_BOX, U_BOX, (n, pts))
    vals = f.value(x, t, U)
    grads = f.grad(x, t, U)
    a1 = {"passed": bool(f.polynomially_bounded and np.all(np.isfinite(vals))),
          "declared_polynomially_bounded": f.polynomially_bounded,
          "sampled_max_abs_f": float(np.max(np.abs(vals)))}
    sampled = float(np.max(np.abs(grads)))
    # finite-difference cross-check of the supplied gradient on a moderate box
    Us = rng.uniform(-3, 3, (n, 32))
    xs, ts = x[:32], t[:32]
    G = f.grad(xs, ts, Us)
    worst = 0.0
    for s in range(n):
        e = np.zeros((n, 1))
        e[s] = FD_STEP
        fd = (f.value(xs, ts, Us + e) - f.value(xs, ts, Us - e)) / (2 * FD_STEP)
        err = np.abs(fd - G[:, s]) / np.maximum(1.0, np.abs(G[:, s]))
        worst = max(worst, float(np.max(err)))
    ok = sampled <= f.grad_bound * (1 + 1e-12) + 1e-300 and worst <= FD_RTOL
    a2 = {"passed": bool(ok), "declared_grad_bound": f.grad_bound, "sampled_max_abs_grad": sampled,
          "fd_max_rel_error": worst, "u_box": U_BOX}
    return a1, a2


def _gamma_growth_entry(rep, K, eps_grid, m, cls, alpha=0):
    report = gf.check_moderateness(rep, K, alpha, eps_grid, m)
    res = gf.check_gamma_class(report, cls, "growth")
    return res.passed, {"class": cls.variant, "N": res.exponent, "fitted_power_exponent": report.fitted_exponent,
                        "norms": report.norms.tolist()}


def _support_inside(spec, lo, hi, variables, axis_var, sample_fn):
    """Is supp(spec) inside the open interval (lo, hi) in ``axis_var``?"""
    if isinstance(spec, gf.LinearCombination):
        return all(c == 0 or _support_inside(s, lo, hi, variables, axis_var, sample_fn) for c, s in spec.terms)
    if isinstance(spec, gf.Smooth):
        if gf.spec_is_zero(spec):
            return True
        return bool(sample_fn(spec))
    axis = spec.axis or variables[0]
    if axis != axis_var:
        return False
    if isinstance(spec, gf.DeltaDerivative):
        return lo < spec.location < hi
    return lo < spec.location and math.isinf(hi)


def _advisory_supports(p: ProblemSpec):
    L, T = p.L, p.T
    mx, mt = SUPPORT_MARGIN * L, SUPPORT_MARGIN * T

    def a_margin(spec):
        g = SmoothExpr(spec.expr, ("x",))
        xs = np.concatenate([np.linspace(-L, -L + mx, 64), np.linspace(L - mx, L, 64)])
        return np.max(np.abs(g(xs))) <= 1e-14

    def t_margin(spec, variables=("t",)):
        g = SmoothExpr(spec.expr, variables)
        ts = np.linspace(0, mt, 64)
        if variables == ("t",):
            return np.max(np.abs(g(ts))) <= 1e-14
        xs = np.linspace(-L, L, 65)
        return np.max(np.abs(g(xs[:, None], ts[None, :]))) <= 1e-14

    out = {}
    out["A"] = all(_support_inside(s, -L, L, ("x",), "x", a_margin) for s in p.A)
    bc = [p.B[i][j] for i in range(p.n) for j in range(p.k)]
    bc += [p.C[i][s] for i in range(p.n) for s in range(p.k, p.n)]
    out["B_C_outgoing_columns"] = all(_support_inside(s, 0.0, math.inf, ("t",), "t", t_margin) for s in bc)
    out["D"] = all(_support_inside(s, 0.0, math.inf, ("x", "t"), "t", lambda sp: t_margin(sp, ("x", "t")))
                   for row in p.D for s in row)
    return {"assumption_9": {"passed": all(out.values()), "checks": out,
                             "note": "compatibility condition at the corners; not required for solvability"}}


def validate(p: ProblemSpec, m: Mollifier, eps_grid=None, seed=0) -> ValidationReport:
    """Run checks 1-8 on the regularized data; the support check 9 is advisory."""
    eps_grid = list(eps_grid or DEFAULT_VALIDATION_GRID)
    if max(eps_grid) > gf.GAMMA.max_eps:
        raise gf.EstimateError(f"validation grid must lie in (0, {gf.GAMMA.max_eps:g}] for the gamma classes")
    reps = p.reps
    K2 = _strip(p)
    Kt = ((0.0, p.T),)
    res = {}

    res["1"], res["2"] = _check_f(p, seed)

    sign = {}
    for i, lam in enumerate(reps["Lambda"]):
        want = -1 if i < p.k else 1
        bad = []
        for e in eps_grid:
            _, vals = gf.sample_values(lam, scale(m, e), K2)
            if not np.all(np.sign(vals) == want):
                bad.append(e)
        sign[f"Lambda[{i}]"] = {"expected_sign": want, "violating_eps": bad}
    res["3"] = {"passed": all(not v["violating_eps"] for v in sign.values()), "components": sign}

    a4 = {}
    for i, lam in enumerate(reps["Lambda"]):
        a4[f"Lambda[{i}]"] = _gamma_growth_entry(lam, K2, eps_grid, m, gf.GAMMA)
    for i, row in enumerate(reps["D"]):
        for j, d in enumerate(row):
            a4[f"D[{i}][{j}]"] = _gamma_growth_entry(d, K2, eps_grid, m, gf.GAMMA)
    res["4"] = {"passed": all(ok for ok, _ in a4.values()), "entries": {k: v for k, (_, v) in a4.items()}}

    a5 = {}
    for name in ("B", "C"):
        for i, row in enumerate(reps[name]):
            for j, r in enumerate(row):
                a5[f"{name}[{i}][{j}]"] = _gamma_growth_entry(r, Kt, eps_grid, m, gf.GAMMA)
    res["5"] = {"passed": all(ok for ok, _ in a5.values()), "entries": {k: v for k, (_, v) in a5.items()}}

    a6 = {}
    for i, lam in enumerate(reps["Lambda"]):
        a6[f"d_x Lambda[{i}]"] = _gamma_growth_entry(lam, K2, eps_grid, m, gf.GAMMA1, alpha=(1, 0))
    res["6"] = {"passed": all(ok for ok, _ in a6.values()), "entries": {k: v for k, (_, v) in a6.items()}}

    a7 = {}
    for i, lam in enumerate(reps["Lambda"]):
        rep = gf.check_invertibility(lam, K2, eps_grid, m)
        if rep.verdict == "not-invertible-at-sampled-eps":
            a7[f"Lambda[{i}]"] = (False, {"verdict": rep.verdict})
            continue
        g = gf.check_gamma_class(rep, gf.GAMMA, "invertibility")
        a7[f"Lambda[{i}]"] = (g.passed, {"p": g.exponent, "infs": rep.norms.tolist()})
    res["7"] = {"passed": all(ok for ok, _ in a7.values()), "entries": {k: v for k, (_, v) in a7.items()}}

    R = build_R(p, m)
    det_report = gf.check_invertibility(R.det, Kt, eps_grid, m)
    det_vals = R.det(scale(m, eps_grid[0]), np.linspace(0, p.T, 5))
    res["8"] = {"passed": det_report.passed, "verdict": det_report.verdict,
                "fitted_exponent": det_report.fitted_exponent, "infs": det_report.norms.tolist(),
                "det_samples": det_vals.tolist()}

    return ValidationReport(p.name, res, _advisory_supports(p), eps_grid, m.ident)


# --------------------------------------------------------------------------
# built-in problems


def _identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def _zeros(n):
    return [[0] * n for _ in range(n)]


BUILTIN_PROBLEMS = {
    "transport2": {
        "name": "transport2", "n": 2, "k": 1, "L": 1.0, "T": 2.0,
        "lambda": [-1, 1], "f": {"name": "zero"},
        "A": ["bump(x, 0.1, 0.5)", "0.5*bump(x, -0.2, 0.4)"],
        "B": _identity(2), "C": _identity(2), "D": _zeros(2), "H": [0, 0],
    },
    "transport2_flipped": {
        "name": "transport2_flipped", "n": 2, "k": 1, "L": 1.0, "T": 2.0,
        "lambda": [1, 1], "f": {"name": "zero"},
        "A": ["bump(x, 0.1, 0.5)", "0.5*bump(x, -0.2, 0.4)"],
        "B": _identity(2), "C": _identity(2), "D": _zeros(2), "H": [0, 0],
    },
    "delta_transport": {
        "name": "delta_transport", "n": 2, "k": 1, "L": 1.0, "T": 0.5,
        "lambda": [-1, 1], "f": {"name": "zero"},
        "A": [{"type": "delta", "order": 0, "location": 0.0}, 0],
        "B": _identity(2), "C": _identity(2), "D": _zeros(2), "H": [0, 0],
    },
    "delta_prime_transport": {
        "name": "delta_prime_transport", "n": 2, "k": 1, "L": 1.0, "T": 0.5,
        "lambda": [-1, 1], "f": {"name": "zero"},
        "A": [{"type": "delta", "order": 1, "location": 0.0}, 0],
        "B": _identity(2), "C": _identity(2), "D": _zeros(2), "H": [0, 0],
    },
    "saturated2": {
        "name": "saturated2", "n": 2, "k": 1, "L": 1.0, "T": 0.6,
        "lambda": [-1, 1], "f": {"name": "saturated", "params": {"a": 0.5}},
        "A": ["1.5*bump(x, 0.1, 0.6)", "-bump(x, -0.2, 0.5)"],
        "B": _identity(2), "C": _identity(2), "D": _zeros(2), "H": [0, 0],
    },
}


def builtin_problem(name) -> ProblemSpec:
    if name not in BUILTIN_PROBLEMS:
        raise KeyError(f"unknown built-in problem {name!r}; available: {sorted(BUILTIN_PROBLEMS)}")
    return ProblemSpec.from_dict(copy.deepcopy(BUILTIN_PROBLEMS[name]))
