"""Space curves in Monge form, planar curves, Taylor extension and dual curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _fp

GRID_POINTS = 10_000
BOUND_INFLATION = 1.01


class DomainError(ValueError):
    pass


# --------------------------------------------------------------------------
# exact polynomials
# --------------------------------------------------------------------------


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, str):
        return Fraction(v.strip())
    return Fraction(v)


@dataclass(frozen=True)
class RationalPoly:
    """Polynomial with rational coefficients, ascending degree order."""

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        cs = [_as_fraction(c) for c in self.coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        object.__setattr__(self, "coeffs", tuple(cs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def float_coeffs(self) -> tuple[float, ...]:
        return tuple(float(c) for c in self.coeffs)

    @property
    def common_denominator(self) -> int:
        return math.lcm(*(c.denominator for c in self.coeffs))

    def derivative(self, k: int = 1) -> "RationalPoly":
        cs = list(self.coeffs)
        for _ in range(k):
            cs = [i * cs[i] for i in range(1, len(cs))] or [Fraction(0)]
        return RationalPoly(tuple(cs))

    def exact(self, x, order: int = 0) -> Fraction:
        p = self.derivative(order) if order else self
        x = _as_fraction(x)
        acc = Fraction(0)
        for c in reversed(p.coeffs):
            acc = acc * x + c
        return acc

    def __call__(self, x, order: int = 0):
        p = self.derivative(order) if order else self
        cs = p.float_coeffs
        x = np.asarray(x, dtype=float)
        acc = np.full_like(x, cs[-1])
        for c in reversed(cs[:-1]):
            acc = acc * x + c
        return acc if acc.ndim else float(acc)

    def comp_eval(self, x):
        return _fp.comp_horner(self.float_coeffs, x)


# --------------------------------------------------------------------------
# space curves
# --------------------------------------------------------------------------

Component = Callable[..., float]


@dataclass(frozen=True)
class MongeCurve3:
    """The curve x -> (x, f1(x), f2(x)) on a subinterval of [0, 1].

    ``f1``/``f2`` are called as ``f(x, order)`` for order 0..3.  Built-in and
    file-defined curves are polynomial and also carry ``coeff_form`` for exact
    rational evaluation.
    """

    id: str
    f1: Component
    f2: Component
    c3: float
    c4: float
    domain: tuple[float, float] = (0.0, 1.0)
    coeff_form: tuple[RationalPoly, RationalPoly] | None = None
    torsion_flag: bool = True

    def component(self, i: int) -> Component:
        if i == 1:
            return self.f1
        if i == 2:
            return self.f2
        raise ValueError(f"component must be 1 or 2, got {i}")

    def in_domain(self, x) -> bool:
        lo, hi = self.domain
        return lo <= x <= hi


def eval_derivatives(curve: MongeCurve3, x, component: int, order: int):
    """Value of ``f_component^(order)(x)``; exact (a Fraction) for rational x on polynomial curves."""
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    if not curve.in_domain(x):
        raise DomainError(f"x={x} outside domain {curve.domain}")
    if curve.coeff_form is not None and isinstance(x, (int, Fraction)):
        return curve.coeff_form[component - 1].exact(x, order)
    return curve.component(component)(x, order)


def torsion(curve: MongeCurve3, x):
    """The determinant f1'' f2''' - f2'' f1''' at x."""
    d = lambda i, k: eval_derivatives(curve, x, i, k)  # noqa: E731
    return d(1, 2) * d(2, 3) - d(2, 2) * d(1, 3)


def torsion_on_grid(curve: MongeCurve3, n: int = GRID_POINTS) -> np.ndarray:
    xs = np.linspace(*curve.domain, n)
    return curve.f1(xs, 2) * curve.f2(xs, 3) - curve.f2(xs, 2) * curve.f1(xs, 3)


def torsion_certified(curve: MongeCurve3, n: int = GRID_POINTS) -> bool:
    """Grid check that the torsion determinant has constant nonzero sign."""
    t = torsion_on_grid(curve, n)
    return bool(np.all(t > 0) or np.all(t < 0))


def grid_bounds(f1: Component, f2: Component, domain=(0.0, 1.0), n: int = GRID_POINTS):
    """(c3, c4) measured on a grid; c4 inflated, c3 deflated by ``BOUND_INFLATION``."""
    xs = np.linspace(*domain, n)
    c4 = max(1.0, max(float(np.max(np.abs(f(xs, k)))) for f in (f1, f2) for k in range(4)))
    c3 = float(np.min(np.abs(f1(xs, 2))))
    return c3 / BOUND_INFLATION, c4 * BOUND_INFLATION


def curve_from_coeffs(
    id: str,
    f1_coeffs: Sequence,
    f2_coeffs: Sequence,
    domain=(0.0, 1.0),
    c3: float | None = None,
    c4: float | None = None,
) -> MongeCurve3:
    p1 = RationalPoly(tuple(_as_fraction(c) for c in f1_coeffs))
    p2 = RationalPoly(tuple(_as_fraction(c) for c in f2_coeffs))
    lo, hi = float(domain[0]), float(domain[1])
    if not 0.0 <= lo < hi <= 1.0:
        raise DomainError(f"domain must be a subinterval of [0,1], got {domain}")
    g3, g4 = grid_bounds(p1, p2, (lo, hi))
    curve = MongeCurve3(
        id=id,
        f1=p1,
        f2=p2,
        c3=g3 if c3 is None else float(c3),
        c4=g4 if c4 is None else float(c4),
        domain=(lo, hi),
        coeff_form=(p1, p2),
    )
    return replace(curve, torsion_flag=torsion_certified(curve))


def _builtin(id, f1, f2, c3, c4) -> MongeCurve3:
    p1, p2 = RationalPoly(tuple(map(Fraction, f1))), RationalPoly(tuple(map(Fraction, f2)))
    curve = MongeCurve3(id=id, f1=p1, f2=p2, c3=c3, c4=c4, coeff_form=(p1, p2))
    return replace(curve, torsion_flag=torsion_certified(curve))


def veronese() -> MongeCurve3:
    # f1'' = 2; largest derivative is f2'' = f2''' = 6
    return _builtin("veronese", (0, 0, 1), (0, 0, 0, 1), 2.0, 6.0)


def embedded_parabola() -> MongeCurve3:
    return _builtin("parabola", (0, 0, 1), (0,), 2.0, 2.0)


def generic_cubic() -> MongeCurve3:
    # f1 = x^2/2 + x^3/6, f2 = x^3/6 + x^4/24; f1'' = 1 + x >= 1, max derivative 2
    f1 = (0, 0, Fraction(1, 2), Fraction(1, 6))
    f2 = (0, 0, 0, Fraction(1, 6), Fraction(1, 24))
    return _builtin("cubic", f1, f2, 1.0, 2.0)


BUILTIN_CURVES: dict[str, Callable[[], MongeCurve3]] = {
    "veronese": veronese,
    "parabola": embedded_parabola,
    "cubic": generic_cubic,
}


def read_keyvalue(path) -> dict[str, str]:
    """Parse ``key = value`` (or ``key: value``) lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":"
        if sep not in line:
            raise ValueError(f"{path}: cannot parse line {raw!r}")
        key, value = line.split(sep, 1)
        out[key.strip()] = value.strip()
    return out


def _split_list(value: str) -> list[str]:
    return [v for v in (s.strip() for s in value.strip("[]").split(",")) if v]


def load_curve(path) -> MongeCurve3:
    kv = read_keyvalue(path)
    missing = {"id", "f1_coeffs", "f2_coeffs"} - kv.keys()
    if missing:
        raise ValueError(f"{path}: missing keys {sorted(missing)}")
    domain = tuple(float(v) for v in _split_list(kv["domain"])) if "domain" in kv else (0.0, 1.0)
    return curve_from_coeffs(
        kv["id"],
        _split_list(kv["f1_coeffs"]),
        _split_list(kv["f2_coeffs"]),
        domain=domain,
        c3=float(kv["c3"]) if "c3" in kv else None,
        c4=float(kv["c4"]) if "c4" in kv else None,
    )


def get_curve(spec: str | MongeCurve3) -> MongeCurve3:
    if isinstance(spec, MongeCurve3):
        return spec
    if spec in BUILTIN_CURVES:
        return BUILTIN_CURVES[spec]()
    if Path(spec).is_file():
        return load_curve(spec)
    raise KeyError(f"unknown curve {spec!r}; built-ins: {sorted(BUILTIN_CURVES)}")


def swap_components(curve: MongeCurve3) -> MongeCurve3:
    cf = None if curve.coeff_form is None else curve.coeff_form[::-1]
    return replace(curve, id=curve.id + "~swap", f1=curve.f2, f2=curve.f1, coeff_form=cf)


def wlog_pieces(curve: MongeCurve3, pieces: int = 8, n: int = GRID_POINTS):
    """Split the domain into pieces where |f1''| (or, after swapping, |f2''|) is bounded below.

    Returns a list of ``(subcurve, swapped)`` where each subcurve has ``c3`` set to the
    grid minimum of its leading |f''| (deflated).  Pieces are refined by bisection
    until one of the two second derivatives stays away from zero; a piece where
    neither does raises ``DomainError`` (the torsion condition forbids this).
    """
    out = []
    stack = list(np.linspace(*curve.domain, pieces + 1))
    todo = list(zip(stack[:-1], stack[1:]))
    while todo:
        lo, hi = todo.pop(0)
        xs = np.linspace(lo, hi, max(n // pieces, 64))
        m1 = float(np.min(np.abs(curve.f1(xs, 2))))
        m2 = float(np.min(np.abs(curve.f2(xs, 2))))
        if max(m1, m2) > 0:
            swapped = m2 > m1
            sub = swap_components(curve) if swapped else curve
            out.append((replace(sub, domain=(lo, hi), c3=max(m1, m2) / BOUND_INFLATION), swapped))
        elif hi - lo < 1e-6:
            raise DomainError(f"f1'' and f2'' both vanish near {lo}")
        else:
            mid = 0.5 * (lo + hi)
            todo[:0] = [(lo, mid), (mid, hi)]
    return out


# --------------------------------------------------------------------------
# planar curves
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanarCurve:
    """A C^2 function f on I = [xi, eta] with c1 <= |f''| <= c2 there."""

    f: Callable
    df: Callable
    d2f: Callable
    interval: tuple[float, float]
    c1: float
    c2: float
    M: float
    name: str = "f"
    poly: RationalPoly | None = None
    extended: bool = False

    @property
    def xi(self) -> float:
        return self.interval[0]

    @property
    def eta(self) -> float:
        return self.interval[1]

    @property
    def convex(self) -> bool:
        return float(self.d2f(0.5 * (self.xi + self.eta))) > 0

    @property
    def C(self) -> float:
        """max over I of |x| + |f(x)| + 1 (grid)."""
        xs = np.linspace(self.xi, self.eta, GRID_POINTS)
        return float(np.max(np.abs(xs) + np.abs(self.f(xs)) + 1.0)) * BOUND_INFLATION


def planar_from_poly(coeffs, interval=(0.0, 1.0), name="f", c1=None, c2=None, M=None) -> PlanarCurve:
    p = RationalPoly(tuple(_as_fraction(c) for c in coeffs))
    d1, d2 = p.derivative(1), p.derivative(2)
    xs = np.linspace(*interval, GRID_POINTS)
    f2 = np.abs(d2(xs))
    if c1 is None:
        c1 = float(f2.min()) / BOUND_INFLATION
    if c2 is None:
        c2 = float(f2.max()) * BOUND_INFLATION
    if M is None:
        M = 1.0 + float(np.max(np.abs(d1(xs)))) * BOUND_INFLATION
    if not 0 < c1 <= c2:
        raise ValueError(f"{name}: need 0 < c1 <= c2, got c1={c1}, c2={c2}")
    return PlanarCurve(
        f=p, df=d1, d2f=d2, interval=(float(interval[0]), float(interval[1])),
        c1=float(c1), c2=float(c2), M=float(M), name=name, poly=p,
    )


BUILTIN_PLANAR: dict[str, Callable[[], PlanarCurve]] = {
    "x2": lambda: planar_from_poly((0, 0, 1), name="x2", c1=2.0, c2=2.0, M=3.0),
    "half_x2": lambda: planar_from_poly((0, 0, Fraction(1, 2)), name="half_x2", c1=1.0, c2=1.0, M=2.0),
    # f = x^2/2 + x^3/10: f'' = 1 + 3x/5 in [1, 8/5], f' <= 13/10
    "x2_x3": lambda: planar_from_poly(
        (0, 0, Fraction(1, 2), Fraction(1, 10)), name="x2_x3", c1=1.0, c2=1.6, M=2.3
    ),
}


def get_planar(spec: str | PlanarCurve) -> PlanarCurve:
    if isinstance(spec, PlanarCurve):
        return spec
    try:
        return BUILTIN_PLANAR[spec]()
    except KeyError:
        raise KeyError(f"unknown planar curve {spec!r}; built-ins: {sorted(BUILTIN_PLANAR)}") from None


def extend(planar: PlanarCurve) -> PlanarCurve:
    """Extend f to all of R by its second-order Taylor polynomials at both endpoints."""
    if planar.extended:
        return planar
    xi, eta = planar.interval
    f, df, d2f = planar.f, planar.df, planar.d2f
    fx, dfx, d2fx = float(f(xi)), float(df(xi)), float(d2f(xi))
    fe, dfe, d2fe = float(f(eta)), float(df(eta)), float(d2f(eta))

    def pieces(x, inner, left, right):
        x = np.asarray(x, dtype=float)
        xc = np.clip(x, xi, eta)
        out = np.where(x < xi, left(x - xi), np.where(x > eta, right(x - eta), inner(xc)))
        return out if out.ndim else float(out)

    ext_f = lambda x: pieces(  # noqa: E731
        x, f, lambda h: fx + dfx * h + 0.5 * d2fx * h * h, lambda h: fe + dfe * h + 0.5 * d2fe * h * h
    )
    ext_df = lambda x: pieces(x, df, lambda h: dfx + d2fx * h, lambda h: dfe + d2fe * h)  # noqa: E731
    ext_d2f = lambda x: pieces(x, d2f, lambda h: d2fx + 0 * h, lambda h: d2fe + 0 * h)  # noqa: E731
    poly = planar.poly if planar.poly is not None and planar.poly.degree <= 2 else None
    return replace(planar, f=ext_f, df=ext_df, d2f=ext_d2f, poly=poly, extended=True)


@dataclass(frozen=True)
class DualCurve:
    """g inverts -f' on the extended curve; f*(y) = y g(y) + f(g(y))."""

    base: PlanarCurve
    K: tuple[float, float]
    Iprime: tuple[float, float] = field(default=(0.0, 0.0))

    def g(self, y):
        """Solve f'(x) = -y by bisection on the (strictly monotone) extended f'."""
        b = self.base
        y = np.asarray(y, dtype=float)
        target = -y
        span = np.abs(target - float(b.df(b.xi))) / b.c1 + 1.0
        lo = b.xi - span
        hi = b.xi + span
        sign = 1.0 if b.convex else -1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.all((mid == lo) | (mid == hi) | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(mid)))):
                break
            go_right = sign * (b.df(mid) - target) < 0
            lo = np.where(go_right, mid, lo)
            hi = np.where(go_right, hi, mid)
        else:
            raise ArithmeticError("dual-curve bisection did not converge")
        out = 0.5 * (lo + hi)
        return out if out.ndim else float(out)

    def fstar(self, y):
        x = self.g(y)
        y = np.asarray(y, dtype=float)
        out = y * x + self.base.f(x)
        return out if np.ndim(out) else float(out)


def dual_curve(planar: PlanarCurve) -> DualCurve:
    ext = extend(planar)
    K = (-2.0 * ext.M, 2.0 * ext.M)
    d = DualCurve(base=ext, K=K)
    a, b = d.g(K[0]), d.g(K[1])
    return replace(d, Iprime=(min(a, b), max(a, b)))
