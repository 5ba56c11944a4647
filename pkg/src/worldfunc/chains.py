"""World-chain dynamics of free pointlike particles.

A free particle is a chain of connected two-point skeletons (links).  In a
deformed Minkowski geometry adjacent links must be equivalent in the
deformed sense; described in Minkowski terms this forces every link to keep
its Minkowski length and to tilt by a fixed hyperbolic angle

    delta_phi = 2 asinh( sqrt( d / (2 sigma_M) ) )

where d is the deformation strength at the link.  The tilt axis is left
open by the dynamics, so the chain wobbles: here the tilt direction is
drawn by a uniform azimuth on a deterministic spatial dyad in the previous
link's rest frame, isolated behind the rng stream so alternative cone
distributions can be injected.

Ensembles use counter-based per-chain rng streams derived from
(seed, chain index), so results are reproducible bit for bit under any
execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidStateError, WorldFunctionError
from .geometry import Geometry, GeomVector, UnitConstants, as_point, deformation_value
from .equivalence import is_equivalent
from .objects import Skeleton


# ---------------------------------------------------------------------------
# chain containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WorldChain:
    """Ordered connected links; link s ends where link s+1 begins."""

    links: tuple

    def __post_init__(self):
        links = tuple(self.links)
        if not links:
            raise InvalidInputError("a world chain needs at least one link")
        size = len(links[0])
        for s, link in enumerate(links):
            if not isinstance(link, Skeleton):
                raise InvalidInputError("chain links must be skeletons")
            if len(link) != size:
                raise InvalidInputError("all links must have the same skeleton size")
            if s > 0 and not np.array_equal(links[s - 1][1], link[0]):
                raise InvalidInputError(f"chain broken between links {s - 1} and {s}")
        object.__setattr__(self, "links", links)

    def __len__(self):
        return len(self.links)

    def __getitem__(self, s):
        return self.links[s]


@dataclass(frozen=True)
class ChainParams:
    """Ensemble description: geometry, Minkowski sigma per link, sizes, seed."""

    geometry: Geometry
    link_sigma_m: float
    steps: int
    ensemble: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.geometry.has_minkowski_substrate:
            raise InvalidInputError("chain dynamics needs a Minkowski-substrate geometry")
        if not self.link_sigma_m > 0:
            raise InvalidInputError("link_sigma_m must be positive (timelike links)")
        if self.steps < 1 or self.ensemble < 1:
            raise InvalidInputError("steps and ensemble must be at least 1")

    @property
    def deformation_strength(self) -> float:
        return float(deformation_value(self.geometry, self.link_sigma_m))

    @property
    def deflection(self) -> float:
        return deflection_angle(self.deformation_strength, self.link_sigma_m)

    def to_dict(self) -> dict:
        return {"geometry": self.geometry.to_dict(), "link_sigma_m": self.link_sigma_m,
                "steps": self.steps, "ensemble": self.ensemble, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ChainParams":
        return cls(geometry=Geometry.from_dict(d["geometry"]),
                   link_sigma_m=float(d["link_sigma_m"]), steps=int(d["steps"]),
                   ensemble=int(d.get("ensemble", 1)), seed=int(d.get("seed", 0)))


@dataclass(frozen=True, eq=False)
class ChainStats:
    """Per-step ensemble statistics; row s describes the s-th generated link.

    mean_t[s]          mean longitudinal (time) advance of link s
    var_transverse[s]  ensemble variance of the transverse displacement
                       increment of link s, summed over the 3 spatial axes
    mean_angle[s]      mean measured hyperbolic angle between links s-1 and s
    link_length_drift  per chain, max relative drift of the squared Minkowski
                       link length along the chain
    """

    step: np.ndarray
    mean_t: np.ndarray
    var_transverse: np.ndarray
    mean_angle: np.ndarray
    link_length_drift: np.ndarray


# ---------------------------------------------------------------------------
# scalar laws
# ---------------------------------------------------------------------------

def deflection_angle(d: float, sigma_m_link: float) -> float:
    """Hyperbolic tilt per link: 2 asinh(sqrt(d / (2 sigma_M))), d >= 0."""
    if not sigma_m_link > 0:
        raise InvalidInputError("sigma_m_link must be positive")
    if d < 0:
        raise InvalidInputError("deformation strength must be non-negative")
    return 2.0 * math.asinh(math.sqrt(d / (2.0 * sigma_m_link)))


def particle_mass(units: UnitConstants, two_sigma_link: float) -> float:
    """Geometric mass m = b * mu with mu = sqrt(2 sigma) the invariant link length."""
    if not two_sigma_link > 0:
        raise InvalidInputError("two_sigma_link must be positive")
    return units.b * math.sqrt(two_sigma_link)


def particle_mass_inverse_convention(units: UnitConstants, two_sigma_m_link: float) -> float:
    """Mass in the inverse-b convention from the Minkowski part of the link:

        m = (1/b) sqrt(2 sigma_M + hbar / (b c))

    The two mass formulas use opposite roles for b; both are exposed and no
    attempt is made to reconcile the conventions.
    """
    arg = two_sigma_m_link + units.hbar / (units.b * units.c)
    if not arg > 0:
        raise InvalidInputError("mass argument must be positive")
    return math.sqrt(arg) / units.b


def w_correction(dfun, pk_s, pl_s, pk_s1, pl_s1) -> float:
    """Cross-pair deformation correction of the link-equivalence equations:

        w = d(Pk_s, Pl_s1) + d(Pl_s, Pk_s1) - d(Pk_s, Pk_s1) - d(Pl_s, Pl_s1)

    with d(P, Q) = dfun(sigma_M(P, Q)).  Cancels pairwise when all four
    arguments see the same deformation value.
    """
    pts = [as_point(p, dim=4) for p in (pk_s, pl_s, pk_s1, pl_s1)]
    pk_s, pl_s, pk_s1, pl_s1 = pts

    def d(p, q):
        diff = p - q
        sm = 0.5 * (diff[0] ** 2 - float(diff[1:] @ diff[1:]))
        return float(dfun(sm))

    return d(pk_s, pl_s1) + d(pl_s, pk_s1) - d(pk_s, pk_s1) - d(pl_s, pl_s1)


# ---------------------------------------------------------------------------
# stepping
# ---------------------------------------------------------------------------

def _mdot(x, y):
    return x[..., 0] * y[..., 0] - np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def _rest_frame_dyad(u):
    """Two Minkowski-orthonormal spacelike directions orthogonal to timelike u.

    Gram-Schmidt of the lab x and y axes against u; never degenerate for unit
    timelike u because its time component dominates.  Deterministic, so the
    only stochastic input of a step is the azimuth.
    """
    m = u.shape[0]
    e1 = np.zeros((m, 4))
    e1[:, 1] = 1.0
    e2 = np.zeros((m, 4))
    e2[:, 2] = 1.0
    w1 = e1 - _mdot(e1, u)[:, None] * u
    w1 = w1 / np.sqrt(-_mdot(w1, w1))[:, None]
    w2 = e2 - _mdot(e2, u)[:, None] * u
    w2 = w2 + _mdot(w2, w1)[:, None] * w1  # w1 . w1 = -1
    w2 = w2 / np.sqrt(-_mdot(w2, w2))[:, None]
    return w1, w2


def _tilt(u, cosh_dphi, sinh_dphi, azimuth):
    w1, w2 = _rest_frame_dyad(u)
    e = np.cos(azimuth)[:, None] * w1 + np.sin(azimuth)[:, None] * w2
    nxt = cosh_dphi * u + sinh_dphi * e
    # renormalize every step: rounding in the norm would otherwise compound
    # by cosh^2(dphi) per link and ruin length conservation on long chains
    return nxt / np.sqrt(_mdot(nxt, nxt))[:, None]


def step_chain(state, params: ChainParams, rng) -> tuple[np.ndarray, np.ndarray]:
    """Advance one link: the next link starts at the previous end, keeps the
    Minkowski length, and tilts by the deflection angle about a uniformly
    drawn azimuth."""
    p0 = as_point(state[0], dim=4)
    p1 = as_point(state[1], dim=4)
    disp = p1 - p0
    two_sm = float(_mdot(disp, disp))
    if not two_sm > 0:
        raise InvalidStateError("chain state must have a timelike leading vector")
    length = math.sqrt(two_sm)
    u = (disp / length)[None, :]
    sigma_m = 0.5 * two_sm
    d = float(deformation_value(params.geometry, sigma_m))
    dphi = deflection_angle(d, sigma_m)
    azimuth = np.array([rng.uniform(0.0, 2.0 * math.pi)])
    u_next = _tilt(u, math.cosh(dphi), math.sinh(dphi), azimuth)[0]
    return p1, p1 + length * u_next


def chain_rng(seed: int, chain_index: int) -> np.random.Generator:
    """Counter-based per-chain stream derived from (seed, chain index)."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(chain_index,))))


def generate_chain(params: ChainParams, chain_index: int = 0) -> WorldChain:
    """Reference single-chain generator built on ``step_chain``.

    Starts from the common initial link along the time axis at the origin.
    """
    length = math.sqrt(2.0 * params.link_sigma_m)
    p0 = np.zeros(4)
    p1 = np.array([length, 0.0, 0.0, 0.0])
    rng = chain_rng(params.seed, chain_index)
    links = [Skeleton((p0, p1))]
    state = (p0, p1)
    for _ in range(params.steps):
        state = step_chain(state, params, rng)
        links.append(Skeleton(state))
    return WorldChain(tuple(links))


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinkStepReport:
    step: int
    pair_reports: dict
    max_abs_residual: float
    ok: bool


def verify_link_equivalence(g: Geometry, chain: WorldChain, tol: float = 1e-9) -> list[LinkStepReport]:
    """Check adjacent-link equivalence of a chain in the full deformed geometry.

    For every adjacent link pair and every skeleton pair (k, l) the parallel
    and length residuals of the equivalence relation are evaluated with
    sigma = sigma_M + d.  Accepts arbitrary skeleton sizes, so externally
    produced composite-particle chains can be validated too.
    """
    if not g.has_minkowski_substrate:
        raise WorldFunctionError("link verification needs a Minkowski-substrate geometry")
    out = []
    size = len(chain[0])
    for s in range(len(chain) - 1):
        cur, nxt = chain[s], chain[s + 1]
        reports = {}
        worst = 0.0
        ok = True
        for k in range(size):
            for l in range(k + 1, size):
                rep = is_equivalent(g, GeomVector(cur[k], cur[l]),
                                    GeomVector(nxt[k], nxt[l]), tol)
                reports[(k, l)] = rep
                worst = max(worst, abs(rep.residual_parallel), abs(rep.residual_length))
                ok = ok and rep.equivalent
        out.append(LinkStepReport(s, reports, worst, ok))
    return out


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def simulate_ensemble(params: ChainParams, keep_chains: bool = False):
    """Run the ensemble and aggregate per-step statistics.

    All chains start from the same initial link along the time axis.  The
    walk is vectorized across the ensemble but consumes exactly the same
    per-chain azimuth streams as repeated ``step_chain`` calls, and the
    reductions run in fixed chain order, so the statistics are bit-identical
    for a given (params, seed) under any schedule.

    Returns ChainStats, or (ChainStats, points) with chain points of shape
    (ensemble, steps + 2, 4) when keep_chains is set: points[i, k] is the
    k-th point of chain i, starting at the origin.
    """
    E, S = params.ensemble, params.steps
    length = math.sqrt(2.0 * params.link_sigma_m)
    d = params.deformation_strength
    dphi = deflection_angle(d, params.link_sigma_m)
    cosh_dphi, sinh_dphi = math.cosh(dphi), math.sinh(dphi)

    azimuths = np.empty((E, S))
    for i in range(E):
        azimuths[i] = chain_rng(params.seed, i).uniform(0.0, 2.0 * math.pi, S)

    u = np.zeros((E, 4))
    u[:, 0] = 1.0  # initial link along the time axis, shared by all chains
    mean_t = np.empty(S)
    var_transverse = np.empty(S)
    mean_angle = np.empty(S)
    drift = np.zeros(E)
    points = None
    if keep_chains:
        points = np.zeros((E, S + 2, 4))
        points[:, 1, 0] = length

    for s in range(S):
        u_next = _tilt(u, cosh_dphi, sinh_dphi, azimuths[:, s])
        mean_angle[s] = np.arccosh(np.maximum(1.0, _mdot(u, u_next))).mean()
        u = u_next
        mean_t[s] = length * u[:, 0].mean()
        var_transverse[s] = length * length * u[:, 1:].var(axis=0, ddof=0).sum()
        drift = np.maximum(drift, np.abs(_mdot(u, u) - 1.0))
        if keep_chains:
            points[:, s + 2] = points[:, s + 1] + length * u

    stats = ChainStats(np.arange(1, S + 1), mean_t, var_transverse, mean_angle, drift)
    return (stats, points) if keep_chains else stats
