"""World-function geometry kernel.

A geometry here is defined entirely by its world function sigma(P, Q), half
the squared distance between two points.  Every other notion -- scalar
product, length, angle, metric tensor -- is derived from sigma alone, so
deforming sigma deforms all of them consistently.  Points are tuples of
chart coordinates on the background manifold (R^n Euclidean, or R^4 with
signature +,-,-,- for the Minkowski-based geometries); downstream code is
expected to consume points only through sigma.

Supported world functions::

    euclidean   sigma_E = |p - q|^2 / 2                  on R^n
    minkowski   sigma_M = ((dt)^2 - |dx|^2) / 2          on R^4
    discrete    sigma_d = sigma_M + lambda0_sq * sgn(sigma_M)
    grainy      sigma_g = sigma_M + lambda0_sq * ramp(sigma_M; sigma0)
    deformed    sigma   = F(sigma_M),  F(0) = 0

with sgn(0) = 0, so sigma(P, P) = 0 holds exactly for every variant.  The
discrete geometry admits no point pairs with squared distance in
(0, 2*lambda0_sq): distances below sqrt(2)*lambda0 do not occur.

All sigma implementations are symmetric by construction and broadcast over
leading axes of the coordinate arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateBasisError,
    DimensionMismatchError,
    InvalidInputError,
    UndefinedAngleError,
    WorldFunctionError,
)

SIGNATURE_DIM = 4  # Minkowski-based charts are four-dimensional

_SUBSTRATE_KINDS = ("minkowski", "discrete", "grainy", "deformed")


# ---------------------------------------------------------------------------
# points and vectors
# ---------------------------------------------------------------------------

def as_point(p, dim: int | None = None) -> np.ndarray:
    """Coerce to a 1-D float coordinate array, checking finiteness and dim."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"point must be a flat coordinate tuple, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("point coordinates must be finite")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(f"point has dimension {arr.shape[0]}, expected {dim}")
    return arr


@dataclass(frozen=True, eq=False)
class GeomVector:
    """A vector is an ordered pair of points (origin, end)."""

    origin: np.ndarray
    end: np.ndarray

    def __post_init__(self):
        o = as_point(self.origin)
        e = as_point(self.end, dim=o.shape[0])
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "end", e)

    @property
    def dim(self) -> int:
        return self.origin.shape[0]

    @property
    def displacement(self) -> np.ndarray:
        """Chart coordinate difference end - origin (a scaffold quantity,
        meaningful only in the background chart)."""
        return self.end - self.origin

    def __repr__(self):
        return f"GeomVector({self.origin.tolist()} -> {self.end.tolist()})"


# ---------------------------------------------------------------------------
# unit constants and deformation functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnitConstants:
    """Action, speed and mass-per-length constants tying geometry to dynamics.

    The elementary area hbar / (2 b c) is the discrete-geometry deformation
    strength derived from them.
    """

    hbar: float = 1.0
    c: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "c", "b"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidInputError(f"unit constant {name} must be positive, got {v}")

    @property
    def elementary_area(self) -> float:
        """lambda0^2 = hbar / (2 b c)."""
        return self.hbar / (2.0 * self.b * self.c)

    def to_dict(self) -> dict:
        return {"hbar": self.hbar, "c": self.c, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "UnitConstants":
        return cls(hbar=float(d.get("hbar", 1.0)), c=float(d.get("c", 1.0)), b=float(d.get("b", 1.0)))


class DeformationFunction:
    """Scalar function F applied to the Minkowski world function, F(0) = 0.

    Built-ins: ``identity``, ``discrete-shift`` (needs lambda0_sq) and
    ``grainy-ramp`` (needs lambda0_sq, sigma0).  User functions are piecewise
    linear tables of (sigma_M, sigma) breakpoints; outside the table range
    the end segments are extended linearly.
    """

    def __init__(self, kind: str, *, lambda0_sq: float = 0.0, sigma0: float = 0.0,
                 table: np.ndarray | None = None):
        self.kind = kind
        self.lambda0_sq = float(lambda0_sq)
        self.sigma0 = float(sigma0)
        self.table = None
        if kind == "table":
            tab = np.asarray(table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or tab.shape[0] < 2:
                raise InvalidInputError("table must be a list of at least two (sigma_M, sigma) pairs")
            if not np.all(np.isfinite(tab)):
                raise InvalidInputError("table breakpoints must be finite")
            if not np.all(np.diff(tab[:, 0]) > 0):
                raise InvalidInputError("table breakpoints must be strictly increasing in sigma_M")
            self.table = tab
        elif kind not in ("identity", "discrete-shift", "grainy-ramp"):
            raise InvalidInputError(f"unknown deformation function {kind!r}")
        if float(self(0.0)) != 0.0:
            raise InvalidInputError(
                "deformation must satisfy F(0) = 0 exactly; add a (0, 0) breakpoint")

    @classmethod
    def identity(cls) -> "DeformationFunction":
        return cls("identity")

    @classmethod
    def discrete_shift(cls, lambda0_sq: float) -> "DeformationFunction":
        return cls("discrete-shift", lambda0_sq=lambda0_sq)

    @classmethod
    def grainy_ramp(cls, lambda0_sq: float, sigma0: float) -> "DeformationFunction":
        return cls("grainy-ramp", lambda0_sq=lambda0_sq, sigma0=sigma0)

    @classmethod
    def from_table(cls, pairs) -> "DeformationFunction":
        return cls("table", table=pairs)

    def __call__(self, sigma_m):
        x = np.asarray(sigma_m, dtype=float)
        if self.kind == "identity":
            out = x
        elif self.kind == "discrete-shift":
            out = x + self.lambda0_sq * np.sign(x)
        elif self.kind == "grainy-ramp":
            out = _grainy_sigma(x, self.lambda0_sq, self.sigma0)
        else:
            out = _piecewise_linear(x, self.table[:, 0], self.table[:, 1])
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self) -> dict:
        if self.kind == "table":
            return {"F_table": self.table.tolist()}
        d = {"F_builtin": self.kind}
        if self.kind == "discrete-shift":
            d["lambda0_sq"] = self.lambda0_sq
        elif self.kind == "grainy-ramp":
            d["lambda0_sq"] = self.lambda0_sq
            d["sigma0"] = self.sigma0
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DeformationFunction":
        if "F_table" in d and d["F_table"] is not None:
            return cls.from_table(d["F_table"])
        kind = d.get("F_builtin", "identity")
        return cls(kind, lambda0_sq=float(d.get("lambda0_sq", 0.0)),
                   sigma0=float(d.get("sigma0", 0.0)))


def _piecewise_linear(x, xs, ys):
    v = np.interp(x, xs, ys)
    lo = x < xs[0]
    hi = x > xs[-1]
    if np.any(lo):
        s = (ys[1] - ys[0]) / (xs[1] - xs[0])
        v = np.where(lo, ys[0] + (x - xs[0]) * s, v)
    if np.any(hi):
        s = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        v = np.where(hi, ys[-1] + (x - xs[-1]) * s, v)
    return v


def _grainy_sigma(sm, lambda0_sq, sigma0):
    # sigma0 = 0 must reproduce the discrete shift exactly (same branch,
    # including sgn(0) = 0), not a 0/0 ramp
    if sigma0 == 0.0:
        return sm + lambda0_sq * np.sign(sm)
    ramp = np.where(np.abs(sm) > sigma0, np.sign(sm), sm / sigma0)
    return sm + lambda0_sq * ramp


# ---------------------------------------------------------------------------
# geometry specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Geometry:
    """A world-function description plus unit constants.

    Use the classmethod constructors; ``kind`` selects the sigma variant.
    """

    kind: str
    dim: int = SIGNATURE_DIM
    lambda0_sq: float = 0.0
    sigma0: float = 0.0
    deformation: DeformationFunction | None = None
    units: UnitConstants = field(default_factory=UnitConstants)

    @classmethod
    def euclidean(cls, dim: int, units: UnitConstants | None = None) -> "Geometry":
        if dim < 1:
            raise InvalidInputError("euclidean dimension must be >= 1")
        return cls("euclidean", dim=int(dim), units=units or UnitConstants())

    @classmethod
    def minkowski(cls, units: UnitConstants | None = None) -> "Geometry":
        return cls("minkowski", units=units or UnitConstants())

    @classmethod
    def discrete(cls, lambda0_sq: float, units: UnitConstants | None = None) -> "Geometry":
        if not lambda0_sq > 0:
            raise InvalidInputError("discrete geometry requires lambda0_sq > 0")
        return cls("discrete", lambda0_sq=float(lambda0_sq), units=units or UnitConstants())

    @classmethod
    def discrete_from_units(cls, units: UnitConstants) -> "Geometry":
        """Discrete geometry with lambda0^2 = hbar / (2 b c)."""
        return cls.discrete(units.elementary_area, units=units)

    @classmethod
    def grainy(cls, lambda0_sq: float, sigma0: float,
               units: UnitConstants | None = None) -> "Geometry":
        if lambda0_sq < 0 or sigma0 < 0:
            raise InvalidInputError("grainy geometry requires lambda0_sq >= 0 and sigma0 >= 0")
        return cls("grainy", lambda0_sq=float(lambda0_sq), sigma0=float(sigma0),
                   units=units or UnitConstants())

    @classmethod
    def deformed(cls, deformation: DeformationFunction,
                 units: UnitConstants | None = None) -> "Geometry":
        return cls("deformed", deformation=deformation, units=units or UnitConstants())

    @property
    def has_minkowski_substrate(self) -> bool:
        return self.kind in _SUBSTRATE_KINDS

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "dim": self.dim, "lambda0_sq": self.lambda0_sq,
             "sigma0": self.sigma0, "units": self.units.to_dict()}
        if self.deformation is not None:
            d.update(self.deformation.to_dict())
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Geometry":
        kind = d.get("kind")
        units = UnitConstants.from_dict(d.get("units", {}))
        if kind == "euclidean":
            return cls.euclidean(int(d.get("dim", 3)), units=units)
        if kind == "minkowski":
            return cls.minkowski(units=units)
        if kind == "discrete":
            return cls.discrete(float(d["lambda0_sq"]), units=units)
        if kind == "grainy":
            return cls.grainy(float(d.get("lambda0_sq", 0.0)),
                              float(d.get("sigma0", 0.0)), units=units)
        if kind == "deformed":
            return cls.deformed(DeformationFunction.from_dict(d), units=units)
        raise InvalidInputError(f"unknown geometry kind {kind!r}")


# ---------------------------------------------------------------------------
# the world function and its derived primitives
# ---------------------------------------------------------------------------

def _coords(g: Geometry, p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (g.dim,):
        raise DimensionMismatchError(
            f"coordinates of dimension {arr.shape[-1] if arr.ndim else 0} "
            f"passed to a {g.kind} geometry of dimension {g.dim}")
    return arr


def _finish(value):
    return float(value) if np.ndim(value) == 0 else value


def sigma(g: Geometry, p, q):
    """World function sigma(p, q); symmetric, sigma(p, p) = 0 exactly.

    Broadcasts over leading axes, so point clouds evaluate in one call.
    """
    p = _coords(g, p)
    q = _coords(g, q)
    d = p - q
    if g.kind == "euclidean":
        return _finish(0.5 * np.sum(d * d, axis=-1))
    sm = 0.5 * (d[..., 0] ** 2 - np.sum(d[..., 1:] ** 2, axis=-1))
    if g.kind == "minkowski":
        return _finish(sm)
    if g.kind == "discrete":
        return _finish(sm + g.lambda0_sq * np.sign(sm))
    if g.kind == "grainy":
        return _finish(_grainy_sigma(sm, g.lambda0_sq, g.sigma0))
    return _finish(g.deformation(sm))


def deformation_value(g: Geometry, sigma_m):
    """Deformation d(sigma_M) = sigma(sigma_M) - sigma_M of a substrate geometry."""
    if not g.has_minkowski_substrate:
        raise WorldFunctionError(f"{g.kind} geometry has no Minkowski substrate")
    sm = np.asarray(sigma_m, dtype=float)
    if g.kind == "minkowski":
        out = np.zeros_like(sm)
    elif g.kind == "discrete":
        out = g.lambda0_sq * np.sign(sm)
    elif g.kind == "grainy":
        out = _grainy_sigma(sm, g.lambda0_sq, g.sigma0) - sm
    else:
        out = g.deformation(sm) - sm
    return _finish(out)


def scalar_product(g: Geometry, a: GeomVector, b: GeomVector) -> float:
    """sigma-scalar product of two vectors a = P0P1 and b = Q0Q1:

        (a.b) = sigma(P0,Q1) + sigma(P1,Q0) - sigma(P0,Q0) - sigma(P1,Q1)

    In the Euclidean and Minkowski geometries this reproduces the coordinate
    dot product; in a deformed geometry it is the only scalar product there is.
    """
    return _scalar_product_arrays(g, a.origin, a.end, b.origin, b.end)


def _scalar_product_arrays(g, p0, p1, q0, q1):
    return _finish(np.asarray(sigma(g, p0, q1)) + np.asarray(sigma(g, p1, q0))
                   - np.asarray(sigma(g, p0, q0)) - np.asarray(sigma(g, p1, q1)))


def squared_length(g: Geometry, a: GeomVector) -> float:
    """(a.a) = 2 sigma(origin, end); negative for spacelike vectors."""
    return _finish(2.0 * np.asarray(sigma(g, a.origin, a.end)))


def relative_density(lambda0_sq: float, sigma0: float, sigma_g) -> float:
    """Relative density of points of the grainy geometry against Minkowski:

        rho = 1                           if |sigma_g| > sigma0 + lambda0_sq
        rho = sigma0 / (sigma0 + lambda0_sq)   otherwise

    For sigma0 -> 0 the inner density goes to 0: the discrete limit.  With
    lambda0_sq = sigma0 = 0 the geometry is undeformed and rho = 1 everywhere.
    """
    if lambda0_sq < 0 or sigma0 < 0:
        raise InvalidInputError("lambda0_sq and sigma0 must be non-negative")
    edge = sigma0 + lambda0_sq
    if edge == 0.0:
        return _finish(np.ones_like(np.asarray(sigma_g, dtype=float)))
    inner = sigma0 / edge
    out = np.where(np.abs(np.asarray(sigma_g, dtype=float)) > edge, 1.0, inner)
    return _finish(out)


@dataclass(frozen=True)
class TriangleReport:
    holds: bool
    slack: float
    skipped: bool


def check_triangle_axiom(g: Geometry, triples, tol: float = 1e-9) -> list[TriangleReport]:
    """Evaluate the triangle defect sqrt(2 s(p0,r)) + sqrt(2 s(r,p1)) - sqrt(2 s(p0,p1)).

    Each triple is (p0, p1, r).  Triples where any of the three sigma values
    is negative are skipped (the axiom concerns real distances only);
    otherwise the axiom holds iff slack >= -tol.
    """
    arr = np.asarray(triples, dtype=float)
    if arr.ndim == 2:
        arr = arr[None, ...]
    if arr.ndim != 3 or arr.shape[1] != 3:
        raise InvalidInputError("triples must have shape (m, 3, dim)")
    p0, p1, r = arr[:, 0], arr[:, 1], arr[:, 2]
    s_ar = np.atleast_1d(sigma(g, p0, r))
    s_rb = np.atleast_1d(sigma(g, r, p1))
    s_ab = np.atleast_1d(sigma(g, p0, p1))
    skipped = (s_ar < 0) | (s_rb < 0) | (s_ab < 0)
    slack = np.full(arr.shape[0], np.nan)
    ok = ~skipped
    slack[ok] = (np.sqrt(2.0 * s_ar[ok]) + np.sqrt(2.0 * s_rb[ok])
                 - np.sqrt(2.0 * s_ab[ok]))
    holds = skipped | (slack >= -tol)
    return [TriangleReport(bool(h), float(s), bool(k))
            for h, s, k in zip(holds, slack, skipped)]


def metric_tensor(g: Geometry, origin, basis) -> tuple[np.ndarray, np.ndarray]:
    """Metric tensor g_kl = (OS_k . OS_l) of a reference-point basis, plus its inverse.

    ``basis`` is a list of g.dim points S_k; the matrix must be numerically
    invertible (max |g^kj g_jl - delta| < 1e-10), else DegenerateBasisError.
    """
    o = as_point(origin, dim=g.dim)
    pts = [as_point(s, dim=g.dim) for s in basis]
    if len(pts) != g.dim:
        raise DimensionMismatchError(f"basis needs {g.dim} points, got {len(pts)}")
    n = g.dim
    gkl = np.empty((n, n))
    for k in range(n):
        for l in range(k, n):
            gkl[k, l] = gkl[l, k] = _scalar_product_arrays(g, o, pts[k], o, pts[l])
    try:
        ginv = np.linalg.inv(gkl)
    except np.linalg.LinAlgError as exc:
        raise DegenerateBasisError(f"singular metric tensor: {exc}") from exc
    defect = np.abs(ginv @ gkl - np.eye(n)).max()
    if not np.isfinite(defect) or defect >= 1e-10:
        raise DegenerateBasisError(f"metric tensor numerically singular (inverse defect {defect:.3e})")
    return gkl, ginv


def sigma_coordinates(g: Geometry, v: GeomVector, origin, basis) -> np.ndarray:
    """Contravariant coordinates of v relative to a reference-point basis:

        x_k = (v . OS_k),   x^k = g^kl x_l

    With the standard basis in Euclidean or Minkowski geometry this returns
    the chart coordinate differences end - origin.
    """
    _, ginv = metric_tensor(g, origin, basis)
    o = as_point(origin, dim=g.dim)
    cov = np.array([_scalar_product_arrays(g, v.origin, v.end, o, as_point(s, dim=g.dim))
                    for s in basis])
    return ginv @ cov


def euclidean_angle(g: Geometry, a: GeomVector, b: GeomVector, tol: float = 1e-9) -> float:
    """Angle theta with |a| |b| cos(theta) = (a.b), for vectors of real positive length.

    A ratio beyond [-1 - tol, 1 + tol] means the geometry is outside the
    Euclidean regime at these vectors; that raises rather than clamping.
    """
    two_a = squared_length(g, a)
    two_b = squared_length(g, b)
    if two_a <= 0 or two_b <= 0:
        raise UndefinedAngleError(
            f"angle needs positive squared lengths, got {two_a} and {two_b}")
    ratio = scalar_product(g, a, b) / math.sqrt(two_a * two_b)
    if abs(ratio) > 1.0 + tol:
        raise UndefinedAngleError(
            f"scalar-product ratio {ratio} outside [-1, 1]: non-Euclidean regime")
    return math.acos(min(1.0, max(-1.0, ratio)))
