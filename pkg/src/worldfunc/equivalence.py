"""Vector equivalence in a world-function geometry.

Two vectors are equivalent when they are parallel and of equal length, both
conditions expressed through sigma alone:

    (a.b) = |a| |b|      and      |a|^2 = |b|^2

Since |a| |b| is imaginary for spacelike vectors, the parallelism condition
is evaluated in the algebraically equivalent form (a.b) = (|a|^2 + |b|^2)/2,
which coincides with (a.b) = |a|^2 exactly where the joint test applies and
keeps the report symmetric in (a, b).

Outside the Euclidean geometry the relation is generally intransitive:
solving the two equations for the end point Q1 of a vector at Q0 equivalent
to a given one may yield no solution, exactly one, or a whole manifold.
``solve_equivalent`` explores that structure with a multistart damped Newton
iteration and reports representatives plus a tangent-space dimension
estimate; ``find_intransitivity_witness`` searches for triples breaking
transitivity; the segment/tube operations expose the thickness that straight
lines acquire under deformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    FamilyUndefinedError,
    InvalidDirectionError,
    InvalidInputError,
    SolverFailureError,
)
from .geometry import (
    Geometry,
    GeomVector,
    as_point,
    scalar_product,
    sigma,
    squared_length,
)

_FD_STEP = 1e-6
_RANK_CUTOFF = 1e-8


# ---------------------------------------------------------------------------
# pairwise equivalence test
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    equivalent: bool
    residual_parallel: float
    residual_length: float
    scale: float
    tol: float


def is_equivalent(g: Geometry, a: GeomVector, b: GeomVector, tol: float = 1e-9) -> EquivalenceReport:
    """Joint parallelism + equal-length test; reflexive and symmetric by construction."""
    two_a = squared_length(g, a)
    two_b = squared_length(g, b)
    ab = scalar_product(g, a, b)
    r_len = two_a - two_b
    r_par = ab - 0.5 * (two_a + two_b)
    scale = max(1.0, abs(two_a), abs(two_b))
    eq = abs(r_par) <= tol * scale and abs(r_len) <= tol * scale
    return EquivalenceReport(eq, r_par, r_len, scale, tol)


# ---------------------------------------------------------------------------
# multistart solver for the equivalence equations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolverConfig:
    starts: int = 256
    max_iter: int = 100
    tol: float = 1e-9
    dedupe_radius: float = 1e-4
    box_half_width: float = 5.0
    seed: int = 0

    def to_dict(self) -> dict:
        return {"starts": self.starts, "max_iter": self.max_iter, "tol": self.tol,
                "dedupe_radius": self.dedupe_radius,
                "box_half_width": self.box_half_width, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        return cls(starts=int(d.get("starts", 256)), max_iter=int(d.get("max_iter", 100)),
                   tol=float(d.get("tol", 1e-9)),
                   dedupe_radius=float(d.get("dedupe_radius", 1e-4)),
                   box_half_width=float(d.get("box_half_width", 5.0)),
                   seed=int(d.get("seed", 0)))


@dataclass(frozen=True)
class SolverDiagnostics:
    starts_attempted: int
    converged_count: int
    dedupe_radius: float
    jacobian_rank: int


@dataclass(frozen=True)
class SolutionSet:
    """Representative solutions of the equivalence equations at one point."""

    representatives: list
    variance: str  # "zero" | "single" | "multi"
    manifold_dim_estimate: int
    residuals: list
    diagnostics: SolverDiagnostics

    def to_dict(self) -> dict:
        return {
            "variance": self.variance,
            "manifold_dim_estimate": self.manifold_dim_estimate,
            "representatives": [r.tolist() for r in self.representatives],
            "residuals": [list(r) for r in self.residuals],
            "diagnostics": {
                "starts_attempted": self.diagnostics.starts_attempted,
                "converged_count": self.diagnostics.converged_count,
                "dedupe_radius": self.diagnostics.dedupe_radius,
                "jacobian_rank": self.diagnostics.jacobian_rank,
            },
        }


class _ResidualMap:
    """Residuals of the two equivalence equations as a function of the end point.

    The sigma terms involving only p0, p1, q0 are precomputed; each batch
    evaluation then needs a single vectorized sigma call over the stacked
    reference points, which keeps the multistart iteration cheap.
    """

    def __init__(self, g, p0, p1, q0):
        self.g = g
        self.n = p0.shape[0]
        self.refs = np.stack([p0, p1, q0])  # (3, n)
        self.two_a = 2.0 * sigma(g, p0, p1)
        self.const = sigma(g, p1, q0) - sigma(g, p0, q0)

    def __call__(self, X):
        """X of shape (m, n) -> residual rows (m, 2)."""
        s = sigma(self.g, self.refs[:, None, :], X[None, :, :])  # (3, m)
        ab = s[0] + self.const - s[1]
        two_b = 2.0 * s[2]
        r_par = ab - 0.5 * (self.two_a + two_b)
        r_len = two_b - self.two_a
        return np.stack([r_par, r_len], axis=-1)

    def jacobian(self, X):
        """Central-difference Jacobian rows (m, 2, n), one fused batch call."""
        m, n = X.shape
        h = _FD_STEP * np.maximum(1.0, np.abs(X).max(axis=1))
        shifts = (np.array([1.0, -1.0])[:, None, None, None]
                  * h[None, None, :, None] * np.eye(n)[None, :, None, :])
        pert = X[None, None, :, :] + shifts  # (2, n, m, n)
        R = self(pert.reshape(2 * n * m, n)).reshape(2, n, m, 2)
        J = (R[0] - R[1]) / (2.0 * h)[None, :, None]  # (n, m, 2)
        return np.moveaxis(J, 0, 2)


def _newton(rmap: _ResidualMap, X0, tol_abs, max_iter):
    """Damped pseudo-inverse Newton on the 2-equation residual map.

    Runs all rows of X0 simultaneously.  Returns (points, residual_rows,
    converged_mask); rows whose line search cannot improve stall out and are
    left unconverged rather than raising.
    """
    X = np.array(X0, dtype=float)
    res = rmap(X)
    rnorm = np.abs(res).max(axis=1)
    converged = rnorm <= tol_abs
    active = ~converged
    for _ in range(max_iter):
        if not active.any():
            break
        ia = np.flatnonzero(active)
        Xa = X[ia]
        J = rmap.jacobian(Xa)
        bad = ~np.all(np.isfinite(J), axis=(1, 2))
        if bad.any():
            active[ia[bad]] = False
            keep = ~bad
            ia, Xa, J = ia[keep], Xa[keep], J[keep]
            if ia.size == 0:
                continue
        step = -np.einsum("mij,mj->mi", np.linalg.pinv(J), res[ia])
        # backtracking: halve the step until the residual norm drops
        lam = np.ones(ia.size)
        accepted = np.zeros(ia.size, dtype=bool)
        best = rnorm[ia].copy()
        Xnew = Xa.copy()
        for _ in range(9):
            rem = np.flatnonzero(~accepted)
            if rem.size == 0:
                break
            trial = Xa[rem] + lam[rem, None] * step[rem]
            tnorm = np.abs(rmap(trial)).max(axis=1)
            ok = tnorm < best[rem]
            Xnew[rem[ok]] = trial[ok]
            lam[rem[~ok]] *= 0.5
            accepted[rem[ok]] = True
        X[ia[accepted]] = Xnew[accepted]
        # rows that could not improve stall out for good
        active[ia[~accepted]] = False
        moved = ia[accepted]
        res[moved] = rmap(X[moved])
        rnorm[moved] = np.abs(res[moved]).max(axis=1)
        newly = moved[rnorm[moved] <= tol_abs]
        converged[newly] = True
        active[newly] = False
    return X, res, converged


def _sorted_dedupe(points, radius, quality=None):
    """Greedy chart-distance dedupe with a deterministic order.

    Lower-quality values claim their cluster first, so the best-converged
    point represents it; the output is sorted lexicographically so the merge
    order never shows in the result.
    """
    if quality is None:
        quality = np.zeros(len(points))
    order = np.lexsort(tuple(points.T[::-1]) + (np.asarray(quality),))
    accepted: list[np.ndarray] = []
    for idx in order:
        p = points[idx]
        if all(np.linalg.norm(p - a) > radius for a in accepted):
            accepted.append(p)
    accepted.sort(key=lambda p: tuple(p))
    return accepted


def _tangent_dimension(rmap: _ResidualMap, rep, tol_abs, probe, max_iter=30):
    """Validated tangent-space dimension at a converged representative.

    The kernel of the residual Jacobian bounds the solution-manifold
    dimension from above, but it over-counts at tangential intersections
    (the unique Euclidean solution has a rank-1 Jacobian).  Each kernel
    direction is therefore probed: step away, re-converge, and count the
    direction only if a distinct solution exists out there.
    """
    J = rmap.jacobian(rep[None, :])[0]
    _, sv, Vt = np.linalg.svd(J)
    if sv.size == 0 or sv[0] == 0.0:
        rank = 0
    else:
        rank = int((sv > _RANK_CUTOFF * sv[0]).sum())
    kernel = Vt[rank:]
    if kernel.size == 0:
        return 0, rank
    starts = rep[None, :] + probe * kernel
    Xc, _, conv = _newton(rmap, starts, tol_abs, max_iter)
    moved = np.linalg.norm(Xc - rep[None, :], axis=1) >= 0.5 * probe
    return int((conv & moved).sum()), rank


def solve_equivalent(g: Geometry, p0, p1, q0, cfg: SolverConfig | None = None) -> SolutionSet:
    """Find end points Q1 such that the vector Q0Q1 is equivalent to P0P1.

    Starts from the chart-translation guess plus seeded random points in a
    box around Q0; converged solutions are deduplicated (sorted, by chart
    distance) and classified:

    * ``zero``   -- no solution found (an empty set is a valid outcome),
    * ``single`` -- one representative and a zero-dimensional tangent space,
    * ``multi``  -- several representatives or a positive-dimensional manifold.
    """
    cfg = cfg or SolverConfig()
    p0 = as_point(p0, dim=g.dim)
    p1 = as_point(p1, dim=g.dim)
    q0 = as_point(q0, dim=g.dim)
    if np.array_equal(p0, p1):
        raise InvalidInputError("p0 and p1 must differ")

    u = p1 - p0
    chart_scale = max(1.0, float(np.linalg.norm(u)))
    rmap = _ResidualMap(g, p0, p1, q0)
    tol_abs = cfg.tol * max(1.0, abs(rmap.two_a))
    radius = cfg.dedupe_radius * chart_scale

    rng = np.random.default_rng(cfg.seed)
    starts = np.empty((max(1, cfg.starts), g.dim))
    starts[0] = q0 + u  # translation guess: exact in Euclidean and Minkowski
    if cfg.starts > 1:
        starts[1:] = q0 + rng.uniform(-cfg.box_half_width, cfg.box_half_width,
                                      size=(cfg.starts - 1, g.dim))

    X, res, conv = _newton(rmap, starts, tol_abs, cfg.max_iter)
    reps = []
    if conv.any():
        rnorm = np.abs(res[conv]).max(axis=1)
        reps = _sorted_dedupe(X[conv], radius, rnorm)
    if reps:
        # polish: at tangential solutions a residual of tol only pins the
        # position to O(sqrt(tol)); iterate the cluster representatives on
        # to the numerical floor, keep those that still pass the pairwise
        # test, and merge whatever collapsed together
        polished, pres, _ = _newton(rmap, np.array(reps), 0.0, 12)
        pnorm = np.abs(pres).max(axis=1)
        keep = [i for i, x in enumerate(polished)
                if is_equivalent(g, GeomVector(p0, p1), GeomVector(q0, x), cfg.tol).equivalent]
        reps = (_sorted_dedupe(polished[keep], radius, pnorm[keep]) if keep else [])

    if not reps:
        if g.kind in ("euclidean", "minkowski"):
            raise SolverFailureError(
                "no start converged although this geometry has an analytic solution")
        diags = SolverDiagnostics(cfg.starts, 0, radius, 0)
        return SolutionSet([], "zero", 0, [], diags)

    probe = max(10.0 * radius, 1e-3 * chart_scale)
    dim_est, rank = 0, 0
    probe_idx = sorted({0, len(reps) // 2, len(reps) - 1})
    for i in probe_idx:
        d_i, r_i = _tangent_dimension(rmap, reps[i], tol_abs, probe)
        if d_i >= dim_est:
            dim_est, rank = d_i, r_i

    residuals = []
    for x in reps:
        rep = is_equivalent(g, GeomVector(p0, p1), GeomVector(q0, x), cfg.tol)
        residuals.append((rep.residual_parallel, rep.residual_length))

    if len(reps) == 1 and dim_est == 0:
        variance = "single"
    else:
        variance = "multi"
    diags = SolverDiagnostics(cfg.starts, int(conv.sum()), radius, rank)
    return SolutionSet(reps, variance, dim_est, residuals, diags)


# ---------------------------------------------------------------------------
# the spacelike solution family of the Minkowski geometry
# ---------------------------------------------------------------------------

_MINKOWSKI = Geometry.minkowski()


def minkowski_spacelike_family(y: GeomVector, alpha: float, n_hat,
                               tol: float = 1e-9) -> GeomVector:
    """Member of the solution family equivalent to a spacelike vector y.

    The family shifts the end point by a null displacement (alpha, alpha*n)
    with n a unit 3-direction satisfying y_vec . n = y^0 (the cone-angle
    constraint); every member passes ``is_equivalent`` against y in the
    Minkowski geometry to within 1e-12.  In exact arithmetic the same holds
    under any deformation F with F(0) = 0, and numerically under every
    continuous F; a jump of F at 0 (the discrete shift) can amplify the
    last-ulp rounding of |n|^2 into a finite parallel residual.
    """
    if y.dim != 4:
        raise InvalidInputError("the spacelike family lives in the 4-d Minkowski chart")
    if squared_length(_MINKOWSKI, y) >= 0:
        raise FamilyUndefinedError("family exists only for spacelike vectors")
    n = np.asarray(n_hat, dtype=float)
    if n.shape != (3,):
        raise InvalidDirectionError("n_hat must be a 3-direction")
    if abs(np.linalg.norm(n) - 1.0) > tol:
        raise InvalidDirectionError("n_hat must be a unit vector")
    disp = y.displacement
    y0, yv = disp[0], disp[1:]
    if abs(float(yv @ n) - y0) > tol * max(1.0, float(np.linalg.norm(yv))):
        raise InvalidDirectionError(
            "n_hat violates the cone-angle constraint y_vec . n = y0")
    end = y.origin + np.concatenate([[y0 + alpha], yv + alpha * n])
    return GeomVector(y.origin, end)


# ---------------------------------------------------------------------------
# intransitivity search
# ---------------------------------------------------------------------------

def find_intransitivity_witness(g: Geometry, seed: int = 0, budget: int = 10000,
                                tol: float = 1e-9):
    """Search for vectors (a, b, c) with a eqv b, b eqv c but not a eqv c.

    For geometries on the Minkowski substrate the search draws spacelike base
    vectors and equips them with two null shifts, which are exactly
    equivalent to the base in any deformation; distinct shifts are generally
    not equivalent to each other.  In the Euclidean geometry the search draws
    translated copies (the only equivalents) and honestly exhausts the
    budget: no witness exists.  Deterministic for a given seed; returns None
    when the budget is spent.
    """
    rng = np.random.default_rng(seed)
    if not g.has_minkowski_substrate:
        for _ in range(budget):
            o = rng.uniform(-1, 1, g.dim)
            e = o + rng.uniform(-1, 1, g.dim)
            b = GeomVector(o, e)
            t1 = rng.uniform(-2, 2, g.dim)
            t2 = rng.uniform(-2, 2, g.dim)
            a = GeomVector(b.origin + t1, b.end + t1)
            c = GeomVector(b.origin + t2, b.end + t2)
            r_ab = is_equivalent(g, a, b, tol)
            r_bc = is_equivalent(g, b, c, tol)
            r_ac = is_equivalent(g, a, c, tol)
            if r_ab.equivalent and r_bc.equivalent and not r_ac.equivalent:
                return a, b, c
        return None

    for _ in range(budget):
        origin = rng.uniform(-1, 1, 4)
        y0 = rng.uniform(-0.5, 0.5)
        yv = rng.uniform(-1, 1, 3)
        nv = float(np.linalg.norm(yv))
        if nv < 0.8 or y0 * y0 >= nv * nv - 0.1:  # want clearly spacelike
            continue
        b = GeomVector(origin, origin + np.concatenate([[y0], yv]))
        members = []
        for _k in range(2):
            alpha = rng.uniform(0.2, 2.0) * rng.choice([-1.0, 1.0])
            azimuth = rng.uniform(0.0, 2.0 * math.pi)
            members.append(_null_shift_member(b, alpha, azimuth))
        a, c = members
        r_ab = is_equivalent(g, a, b, tol)
        r_bc = is_equivalent(g, b, c, tol)
        r_ac = is_equivalent(g, a, c, tol)
        if r_ab.equivalent and r_bc.equivalent and not r_ac.equivalent:
            return a, b, c
    return None


def _null_shift_member(y: GeomVector, alpha: float, azimuth: float) -> GeomVector:
    """Family member of a spacelike y with the cone direction set by an azimuth."""
    disp = y.displacement
    y0, yv = disp[0], disp[1:]
    nv = float(np.linalg.norm(yv))
    yhat = yv / nv
    cos_phi = y0 / nv
    sin_phi = math.sqrt(max(0.0, 1.0 - cos_phi * cos_phi))
    # orthonormal pair spanning the plane orthogonal to yhat
    pick = np.zeros(3)
    pick[int(np.argmin(np.abs(yhat)))] = 1.0
    e1 = np.cross(yhat, pick)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(yhat, e1)
    n_hat = cos_phi * yhat + sin_phi * (math.cos(azimuth) * e1 + math.sin(azimuth) * e2)
    return minkowski_spacelike_family(y, alpha, n_hat)


# ---------------------------------------------------------------------------
# collinearity, straights, segments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CollinearityReport:
    collinear: bool
    residual: float
    scale: float


def is_collinear(g: Geometry, a: GeomVector, b: GeomVector, tol: float = 1e-9) -> CollinearityReport:
    """Gram-determinant collinearity: |a|^2 |b|^2 - (a.b)^2 = 0."""
    two_a = squared_length(g, a)
    two_b = squared_length(g, b)
    ab = scalar_product(g, a, b)
    residual = two_a * two_b - ab * ab
    scale = max(1.0, abs(two_a), abs(two_b), abs(ab))
    return CollinearityReport(abs(residual) <= tol * scale * scale, residual, scale)


def line_membership(g: Geometry, q0, direction: GeomVector, r, tol: float = 1e-9) -> bool:
    """Membership of r in the straight through q0 collinear to the given vector.

    In deformed geometries this set is generally not one-dimensional.  r = q0
    counts as a member (the zero vector is collinear to everything).
    """
    if np.array_equal(direction.origin, direction.end):
        raise InvalidInputError("direction vector must have distinct points")
    q0 = as_point(q0, dim=g.dim)
    r = as_point(r, dim=g.dim)
    return is_collinear(g, GeomVector(q0, r), direction, tol).collinear


@dataclass(frozen=True)
class SegmentReport:
    member: bool
    defect: float
    in_domain: bool


def segment_membership(g: Geometry, p0, p1, r, tol: float = 1e-9) -> SegmentReport:
    """Membership of r in the segment between p0 and p1 via the triangle defect

        defect = sqrt(2 s(p0,r)) + sqrt(2 s(r,p1)) - sqrt(2 s(p0,p1))

    Points where any sigma is negative are out of the real-distance domain
    and reported as non-members with in_domain = False.
    """
    p0 = as_point(p0, dim=g.dim)
    p1 = as_point(p1, dim=g.dim)
    r = as_point(r, dim=g.dim)
    s_ab = sigma(g, p0, p1)
    if s_ab <= 0:
        return SegmentReport(False, float("nan"), False)
    s_ar = sigma(g, p0, r)
    s_rb = sigma(g, r, p1)
    if s_ar < 0 or s_rb < 0:
        return SegmentReport(False, float("nan"), False)
    defect = math.sqrt(2.0 * s_ar) + math.sqrt(2.0 * s_rb) - math.sqrt(2.0 * s_ab)
    return SegmentReport(abs(defect) <= tol * math.sqrt(2.0 * s_ab), defect, True)


# ---------------------------------------------------------------------------
# tube sampling of segments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TubeSamplerConfig:
    stations: int = 64
    directions: int = 16
    tol: float = 1e-9
    seed: int = 0
    max_radius: float | None = None  # default: chart length of the segment
    scan_points: int = 64

    def to_dict(self) -> dict:
        return {"stations": self.stations, "directions": self.directions,
                "tol": self.tol, "seed": self.seed,
                "max_radius": self.max_radius, "scan_points": self.scan_points}

    @classmethod
    def from_dict(cls, d: dict) -> "TubeSamplerConfig":
        return cls(stations=int(d.get("stations", 64)),
                   directions=int(d.get("directions", 16)),
                   tol=float(d.get("tol", 1e-9)), seed=int(d.get("seed", 0)),
                   max_radius=d.get("max_radius"),
                   scan_points=int(d.get("scan_points", 64)))


@dataclass(frozen=True, eq=False)
class TubeSample:
    """Sampled tube of a segment: per-station transverse radii and a point cloud.

    ``radii[s, d]`` is the radius at which the triangle defect crosses zero
    along direction d at station s (NaN where no crossing was bracketed);
    ``profile[s]`` averages the directions that found one.  ``points`` holds
    rows (t, r, coords...) of sampled members, t being the chart arc length
    of the station from p0.
    """

    fractions: np.ndarray
    arc_positions: np.ndarray
    base_points: np.ndarray
    radii: np.ndarray
    profile: np.ndarray
    points: np.ndarray


def sample_segment_tube(g: Geometry, p0, p1, cfg: TubeSamplerConfig | None = None) -> TubeSample:
    """Sample the segment between p0 and p1 as a tube.

    For each longitudinal station the triangle defect is scanned along
    transverse chart directions (drawn once from the seeded generator in the
    orthogonal complement of the segment direction) and its zero crossing is
    refined by 1-D root finding.  In the Euclidean geometry, and for
    timelike Minkowski segments, the radius profile vanishes; deformed
    geometries yield genuinely thick tubes.  Stations where no direction
    brackets a crossing are marked empty, never fatal.
    """
    cfg = cfg or TubeSamplerConfig()
    p0 = as_point(p0, dim=g.dim)
    p1 = as_point(p1, dim=g.dim)
    s_ab = sigma(g, p0, p1)
    if s_ab <= 0:
        raise InvalidInputError("tube sampling requires sigma(p0, p1) > 0")
    defect_tol = cfg.tol * math.sqrt(2.0 * s_ab)

    u = p1 - p0
    length = float(np.linalg.norm(u))
    r_max = cfg.max_radius if cfg.max_radius is not None else length
    # orthonormal complement of the segment direction in the chart
    _, _, vt = np.linalg.svd((u / length)[None, :])
    complement = vt[1:]
    rng = np.random.default_rng(cfg.seed)
    raw = rng.normal(size=(cfg.directions, g.dim - 1))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    dirs = raw @ complement

    fractions = np.linspace(0.0, 1.0, cfg.stations)
    bases = p0[None, :] + fractions[:, None] * u[None, :]
    r_grid = np.linspace(0.0, r_max, cfg.scan_points)

    # vectorized defect over (stations, directions, grid)
    probe = (bases[:, None, None, :] + r_grid[None, None, :, None] * dirs[None, :, None, :])
    with np.errstate(invalid="ignore"):
        s_ar = np.asarray(sigma(g, p0, probe))
        s_rb = np.asarray(sigma(g, probe, p1))
        defect = np.where(
            (s_ar < 0) | (s_rb < 0), np.nan,
            np.sqrt(np.maximum(2.0 * s_ar, 0.0)) + np.sqrt(np.maximum(2.0 * s_rb, 0.0))
            - math.sqrt(2.0 * s_ab))

    radii = np.full((cfg.stations, cfg.directions), np.nan)
    for si in range(cfg.stations):
        base = bases[si]
        for di in range(cfg.directions):
            vals = defect[si, di]
            if np.isfinite(vals[0]) and abs(vals[0]) <= defect_tol:
                radii[si, di] = 0.0
                continue
            bracket = None
            for k in range(1, cfg.scan_points):
                a, b = vals[k - 1], vals[k]
                if np.isfinite(a) and np.isfinite(b) and a * b <= 0.0:
                    bracket = (r_grid[k - 1], r_grid[k])
                    break
            if bracket is None:
                continue

            def f(r, base=base, d=dirs[di]):
                rep = segment_membership(g, p0, p1, base + r * d, cfg.tol)
                return rep.defect if rep.in_domain else np.nan

            try:
                radii[si, di] = brentq(f, bracket[0], bracket[1], xtol=1e-13, rtol=1e-15)
            except ValueError:
                continue

    found = np.isfinite(radii)
    counts = found.sum(axis=1)
    sums = np.where(found, radii, 0.0).sum(axis=1)
    profile = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    rows = []
    for si in range(cfg.stations):
        for di in range(cfg.directions):
            r = radii[si, di]
            if np.isfinite(r):
                coords = bases[si] + r * dirs[di]
                rows.append([fractions[si] * length, r, *coords])
    points = np.array(rows) if rows else np.empty((0, 2 + g.dim))
    return TubeSample(fractions, fractions * length, bases, radii, profile, points)
