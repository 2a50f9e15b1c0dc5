"""Potentials q(x) on the fixed interval [0, pi].

A :class:`Potential` is immutable. Five kinds are supported: ``zero``,
``constant``, ``polynomial`` (ascending coefficients), ``sampled`` (grid
values with spline interpolation of a given order) and ``expression``
(a small arithmetic language over ``x`` and ``pi``).

Reflection ``q*(x) = q(pi - x)`` is stored as a flag, so reflecting twice
gives back an object that evaluates bit-for-bit like the original.
"""

import ast
import logging
import math
from functools import cached_property

import numpy as np
from scipy import integrate, interpolate

from .errors import AccuracyError, DomainError

log = logging.getLogger(__name__)

PI = math.pi
KINDS = ("zero", "constant", "polynomial", "sampled", "expression")

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.UAdd, ast.USub)


def _validate_tree(node, names):
    if isinstance(node, ast.Expression):
        return _validate_tree(node.body, names)
    if isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _validate_tree(node.left, names)
        _validate_tree(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARYOPS):
        _validate_tree(node.operand, names)
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS):
            raise DomainError(f"unsupported function call in expression: {ast.dump(node.func)}")
        if len(node.args) != 1 or node.keywords:
            raise DomainError(f"{node.func.id}() takes exactly one argument")
        _validate_tree(node.args[0], names)
    elif isinstance(node, ast.Name):
        if node.id not in names:
            raise DomainError(f"unknown name {node.id!r} in expression")
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise DomainError(f"unsupported literal {node.value!r} in expression")
    else:
        raise DomainError(f"unsupported syntax in expression: {type(node).__name__}")


def compile_expression(body, variables=("x",)):
    """Parse ``body`` and return a vectorised callable of ``variables``.

    Only ``+ - * / **``, unary signs, ``sin``, ``cos``, ``exp``, numeric
    literals, ``pi`` and the named variables are accepted.
    """
    try:
        tree = ast.parse(body.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise DomainError(f"cannot parse expression {body!r}: {exc.msg}") from None
    _validate_tree(tree, set(variables) | {"pi"})
    code = compile(tree, "<expression>", "eval")
    namespace = {"__builtins__": {}, "pi": np.pi, **_FUNCTIONS}

    def fn(*args):
        return eval(code, namespace, dict(zip(variables, args)))

    return fn


def parse_constant(value):
    """Turn a number or a constant expression such as ``"pi/3"`` into a float."""
    if isinstance(value, bool):
        raise DomainError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        return float(compile_expression(value, variables=())())
    raise DomainError(f"expected a number or constant expression, got {value!r}")


class Potential:
    """Real potential on [0, pi].

    Use the constructors :meth:`zero`, :meth:`constant`, :meth:`polynomial`,
    :meth:`sampled`, :meth:`expression` or :meth:`from_config`.
    """

    def __init__(self, kind, params, base, breaks, reflected=False):
        if kind not in KINDS:
            raise DomainError(f"unknown potential kind {kind!r}")
        self._kind = kind
        self._params = params
        self._base = base
        self._breaks = breaks
        self._reflected = reflected

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls):
        return cls("zero", {}, lambda x: np.zeros_like(x), ())

    @classmethod
    def constant(cls, c):
        c = float(c)
        if not math.isfinite(c):
            raise DomainError("constant potential must be finite")
        return cls("constant", {"value": c}, lambda x: np.full_like(x, c), ())

    @classmethod
    def polynomial(cls, coeffs):
        """Polynomial with ascending coefficients ``c0 + c1 x + ...``."""
        coeffs = tuple(float(c) for c in coeffs)
        if not coeffs or not all(math.isfinite(c) for c in coeffs):
            raise DomainError("polynomial needs at least one finite coefficient")
        poly = np.polynomial.Polynomial(coeffs)
        return cls("polynomial", {"coeffs": list(coeffs)}, poly, ())

    @classmethod
    def sampled(cls, xs, ys, order=1):
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
            raise DomainError("sampled potential needs matching 1-D xs and ys, at least 2 points")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise DomainError("sampled potential values must be finite")
        if np.any(np.diff(xs) <= 0):
            raise DomainError("sampled grid must be strictly increasing")
        if xs[0] > 1e-12 or xs[-1] < PI - 1e-12:
            raise DomainError("sampled grid must cover [0, pi]")
        order = int(order)
        if order < 1 or order >= xs.size:
            raise DomainError(f"interpolation order {order} invalid for {xs.size} points")
        if order == 1:
            def base(x):
                return np.interp(x, xs, ys)
            breaks = tuple(xs)
        else:
            base = interpolate.make_interp_spline(xs, ys, k=order)
            breaks = tuple(np.unique(base.t))
        params = {"xs": xs.tolist(), "ys": ys.tolist(), "order": order}
        return cls("sampled", params, base, breaks)

    @classmethod
    def expression(cls, body):
        fn = compile_expression(body)

        def base(x):
            return np.broadcast_to(np.asarray(fn(x), dtype=float), np.shape(x)).copy()

        pot = cls("expression", {"body": body}, base, ())
        probe = pot.fn(np.linspace(0.0, PI, 33))
        if not np.all(np.isfinite(probe)):
            raise DomainError(f"expression {body!r} is not finite on [0, pi]")
        return pot

    @classmethod
    def from_config(cls, cfg):
        """Build from a tagged object such as ``{"kind": "expression", "body": "x"}``."""
        if not isinstance(cfg, dict) or "kind" not in cfg:
            raise DomainError("potential config must be an object with a 'kind' field")
        kind = cfg["kind"]
        if kind == "zero":
            pot = cls.zero()
        elif kind == "constant":
            pot = cls.constant(parse_constant(cfg.get("value", 0.0)))
        elif kind == "polynomial":
            pot = cls.polynomial(cfg["coeffs"])
        elif kind == "sampled":
            pot = cls.sampled(cfg["xs"], cfg["ys"], cfg.get("order", 1))
        elif kind == "expression":
            pot = cls.expression(str(cfg["body"]))
        else:
            raise DomainError(f"unknown potential kind {kind!r}")
        return pot.reflect() if cfg.get("reflected", False) else pot

    def to_config(self):
        cfg = {"kind": self._kind, **self._params}
        if self._reflected:
            cfg["reflected"] = True
        return cfg

    # -- properties -----------------------------------------------------

    @property
    def kind(self):
        return self._kind

    @property
    def reflected(self):
        return self._reflected

    def __repr__(self):
        flag = ", reflected" if self._reflected else ""
        return f"Potential({self._kind}, {self._params}{flag})"

    # -- evaluation -----------------------------------------------------

    def fn(self, x):
        """Unchecked vectorised evaluation (used by quadrature and integrators)."""
        x = np.asarray(x, dtype=float)
        return self._base(PI - x if self._reflected else x)

    def evaluate(self, x):
        """q(x) for x in [0, pi]; scalar in, float out."""
        arr = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > PI):
            raise DomainError(f"x={x!r} lies outside [0, pi]")
        val = self.fn(arr)
        return float(val) if val.ndim == 0 else val

    __call__ = evaluate

    def reflect(self):
        """The reflected potential x -> q(pi - x)."""
        return Potential(self._kind, self._params, self._base, self._breaks, not self._reflected)

    def breakpoints(self):
        """Sorted interior points where q may lose smoothness."""
        pts = np.asarray(self._breaks, dtype=float)
        if self._reflected:
            pts = PI - pts[::-1]
        return pts[(pts > 0.0) & (pts < PI)]

    def integral_to(self, x, atol=1e-12):
        """Integral of q over [0, x] by adaptive Gauss-Kronrod quadrature."""
        if not (0.0 <= x <= PI):
            raise DomainError(f"x={x!r} lies outside [0, pi]")
        if x == 0.0:
            return 0.0
        if self._kind == "zero":
            return 0.0
        if self._kind == "constant":
            return self._params["value"] * x
        pts = self.breakpoints()
        pts = pts[pts < x]
        val, err, info = integrate.quad(
            lambda s: float(self.fn(s)),
            0.0,
            x,
            epsabs=atol,
            epsrel=0.0,
            limit=max(200, 4 * pts.size),
            points=pts if pts.size else None,
            full_output=1,
        )[:3]
        if err > max(atol, 1e-15 * abs(val)) * 10:
            raise AccuracyError(f"quadrature of q on [0, {x}] reached only {err:.3e}", estimate=err)
        return val

    @cached_property
    def sup_abs(self):
        """Coarse estimate of max |q| on [0, pi] (grid plus breakpoints)."""
        xs = np.union1d(np.linspace(0.0, PI, 4097), self.breakpoints())
        return float(np.max(np.abs(self.fn(xs))))

    @cached_property
    def table(self):
        """Piecewise Chebyshev representation ``(breaks, coeffs)`` for the compiled integrator."""
        return chebyshev_table(self.fn, self.breakpoints(), scale=max(1.0, self.sup_abs))


_CHEB_DEGREE = 16


def chebyshev_table(fn, interior_breaks=(), degree=_CHEB_DEGREE, scale=1.0, rel_tol=1e-14, max_depth=30):
    """Adaptive piecewise Chebyshev interpolant of ``fn`` on [0, pi].

    Panels are bisected until the interpolant matches ``fn`` to
    ``rel_tol * scale`` on a test grid. Returns ``(breaks, coeffs)`` with
    ``coeffs[i]`` the Chebyshev series of panel ``[breaks[i], breaks[i+1]]``.
    """
    k = np.arange(degree + 1)
    nodes = np.cos(np.pi * (k + 0.5) / (degree + 1))
    u_test = np.linspace(-1.0, 1.0, 2 * degree + 5)
    tol = rel_tol * scale
    edges = np.unique(np.concatenate(([0.0], np.asarray(interior_breaks, dtype=float), [PI])))

    panels = []
    coeffs = []
    unresolved = 0

    def fit(a, b, depth):
        nonlocal unresolved
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        c = np.polynomial.chebyshev.chebfit(nodes, fn(mid + half * nodes), degree)
        err = np.max(np.abs(np.polynomial.chebyshev.chebval(u_test, c) - fn(mid + half * u_test)))
        if err <= tol or depth >= max_depth:
            if err > tol:
                unresolved += 1
            panels.append(a)
            coeffs.append(c)
            return
        fit(a, mid, depth + 1)
        fit(mid, b, depth + 1)

    for a, b in zip(edges[:-1], edges[1:]):
        fit(a, b, 0)
    if unresolved:
        log.warning("potential table: %d panel(s) not resolved to %.1e", unresolved, tol)
    breaks = np.array(panels + [PI])
    return breaks, np.array(coeffs)
