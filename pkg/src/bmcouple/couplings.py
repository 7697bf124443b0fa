"""Coupling strategies: advance a pair of Brownian particles one step at a time.

Every strategy exposes the same surface: ``initial_state`` validates the
starting configuration and ``step`` consumes one block of fresh noise.  States
are ensembles; the point arrays carry a leading path axis so Monte Carlo runs
stay inside numpy.  All strategies keep both coordinate processes exact
Brownian motions (weak order one in the step size); what differs is how the
second particle's noise is manufactured from the first's.

The rotation strategy realizes the frame-bundle construction at the level of
its projected one-step action: transport an adapted tangent frame along the
connecting geodesic and rotate the perpendicular noise components by a
distance-dependent angle.  With canonical frames the two alignment matrices
are the identity, so the noise map reduces to the transposed block rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .drivers import StepNoise, geodesic_walk_step, kendall_compose, stroock_step
from .errors import (
    CutLocusError,
    DegenerateInputError,
    DomainError,
    InfeasibleRateError,
)
from .spaces import ModelSpace, gen_cos, gen_sin

COUPLED = 0
INDEPENDENT = 1

MEET_TOL = 1e-12


@dataclass
class CouplingState:
    """Ensemble state of a coupled pair: time, both point arrays (n, ambient),
    per-path regime flags and strategy-owned cache (rebuilt or carried as the
    strategy requires)."""

    t: float
    x: np.ndarray
    y: np.ndarray
    regime: np.ndarray
    cache: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.x.shape[0]


def _ensemble(point, n_paths: int) -> np.ndarray:
    arr = np.asarray(point, float)
    if arr.ndim == 1:
        arr = np.broadcast_to(arr, (n_paths,) + arr.shape).copy()
    if arr.shape[0] != n_paths:
        raise DomainError(f"expected {n_paths} start points, got {arr.shape[0]}")
    return arr


class CouplingStrategy:
    """Common surface of all strategies."""

    strategy_id: str = ""
    expanding: bool = False  # drives the diagonal patching variant
    patchable: bool = True  # strategies with per-path carried caches opt out

    def __init__(self, space: ModelSpace):
        self.space = space

    # dimensions of the per-step standard-normal draws
    @property
    def primary_dim(self) -> int:
        raise NotImplementedError

    @property
    def aux_dim(self) -> int:
        return 0

    # dimension of the draw one particle needs to move on its own
    @property
    def indep_dim(self) -> int:
        return self.space.dim

    def initial_state(self, x0, y0, n_paths: int = 1) -> CouplingState:
        x = _ensemble(x0, n_paths)
        y = _ensemble(y0, n_paths)
        self.space.check_point(x)
        self.space.check_point(y)
        self.validate_start(x, y)
        regime = np.zeros(n_paths, dtype=np.int8)
        return CouplingState(t=0.0, x=x, y=y, regime=regime, cache=self.init_cache(x, y))

    def validate_start(self, x, y) -> None:
        pass

    def init_cache(self, x, y) -> dict:
        return {}

    def step(self, state: CouplingState, noise: StepNoise, h: float) -> CouplingState:
        gp = np.atleast_2d(noise.primary)
        ga = None if noise.auxiliary is None else np.atleast_2d(noise.auxiliary)
        x, y, cache = self.move(state.x, state.y, gp, ga, h, state.cache)
        return CouplingState(t=state.t + h, x=x, y=y, regime=state.regime.copy(), cache=cache)

    def move(self, x, y, gp, ga, h, cache):
        raise NotImplementedError

    def independent_move(self, x, g, h) -> np.ndarray:
        """Advance one particle alone (used by the patching regime machine)."""
        frame = self.space.reference_frame(x)
        return geodesic_walk_step(self.space, x, g[..., : self.space.dim], h, frame)


def _require_sphere2(space: ModelSpace, strategy_id: str) -> None:
    if space.curvature != 1 or space.dim != 2:
        raise DomainError(f"strategy {strategy_id!r} is defined on the 2-sphere only")


# -- Euclidean translation ------------------------------------------------------


class TranslationCoupling(CouplingStrategy):
    """Both particles receive the identical increment; the offset never changes.

    The offset is carried explicitly so the distance is preserved exactly in
    floating point, not just up to roundoff accumulation.
    """

    strategy_id = "translation"
    patchable = False

    def __init__(self, space: ModelSpace):
        if space.curvature != 0:
            raise DomainError("the translation coupling lives on Euclidean space")
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return self.space.dim

    def init_cache(self, x, y) -> dict:
        return {"offset": x - y}

    def move(self, x, y, gp, ga, h, cache):
        x_new = x + np.sqrt(h) * gp
        return x_new, x_new - cache["offset"], cache


# -- trivially independent pair -------------------------------------------------


class IndependentCoupling(CouplingStrategy):
    """Two independent geodesic random walks (the trivial coupling)."""

    strategy_id = "independent"

    @property
    def primary_dim(self) -> int:
        return self.space.dim

    @property
    def aux_dim(self) -> int:
        return self.space.dim

    def move(self, x, y, gp, ga, h, cache):
        x_new = self.independent_move(x, gp, h)
        y_new = self.independent_move(y, ga, h)
        return x_new, y_new, cache


# -- mirror coupling on the 2-sphere ---------------------------------------------


class MirrorS2(CouplingStrategy):
    """Reflect the driving noise across the perpendicular bisector plane.

    Meeting happens when the first particle hits the mirror plane (in the
    reflection picture the second particle is its mirror image, so the plane
    hitting time is the meeting time); the pair is glued at the step where the
    plane is crossed and moves together afterwards.  Gluing on a distance
    threshold instead would teleport the second particle by a noticeable
    amount and visibly distort its marginal law.
    """

    strategy_id = "mirror-s2"
    patchable = False

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return 3

    @property
    def indep_dim(self) -> int:
        return 3

    def init_cache(self, x, y) -> dict:
        return {"glued": np.zeros(x.shape[0], dtype=bool)}

    def independent_move(self, x, g, h) -> np.ndarray:
        return stroock_step(x, g, h)

    def move(self, x, y, gp, ga, h, cache):
        glued = cache["glued"]
        x_new = stroock_step(x, gp, h)
        normal = x - y  # bisector plane through the origin with this normal
        norms = np.linalg.norm(normal, axis=-1, keepdims=True)
        unit = normal / np.maximum(norms, 1e-300)
        reflected = gp - 2.0 * np.sum(unit * gp, axis=-1, keepdims=True) * unit
        y_new = stroock_step(y, reflected, h)
        # before the move x . normal = 1 - x.y > 0; a sign change means the
        # mirror plane was crossed during this step
        crossed = np.sum(x_new * normal, axis=-1) < 0.0
        glued_new = glued | crossed
        y_new = np.where(glued_new[:, None], x_new, y_new)
        return x_new, y_new, {"glued": glued_new}


# -- extrinsic rotating couplings on the 2-sphere ---------------------------------


def _batched_rodrigues(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Rotation matrices taking x rows to y rows (unnormalized-axis form), with
    the +/-I limits at (anti)parallel pairs."""
    c = np.sum(x * y, axis=-1)
    eye = np.eye(3)
    cross = y[:, :, None] * x[:, None, :] - x[:, :, None] * y[:, None, :]
    u = np.cross(x, y)
    denom = np.where(np.abs(1.0 + c) < 1e-15, 1.0, 1.0 + c)
    general = (
        c[:, None, None] * eye + cross + u[:, :, None] * u[:, None, :] / denom[:, None, None]
    )
    out = np.where((c >= 1.0 - 1e-12)[:, None, None], eye, general)
    out = np.where((c <= -1.0 + 1e-12)[:, None, None], -eye, out)
    return out


class ExtrinsicContractS2(CouplingStrategy):
    """Feed the second particle the rotated increment of the first; the chordal
    distance then contracts like exp(-t/2) deterministically."""

    strategy_id = "extrinsic-contract-s2"

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return 3

    @property
    def indep_dim(self) -> int:
        return 3

    def independent_move(self, x, g, h) -> np.ndarray:
        return stroock_step(x, g, h)

    def move(self, x, y, gp, ga, h, cache):
        x_new = stroock_step(x, gp, h)
        rot = _batched_rodrigues(x, y)
        moved = y + np.einsum("nij,nj->ni", rot, x_new - x)
        y_new = moved / np.linalg.norm(moved, axis=-1, keepdims=True)
        return x_new, y_new, cache


class ExtrinsicExpandS2(CouplingStrategy):
    """Mirror image of the contracting construction: subtract the increment
    rotated by the map aligning x with the antipode of y; the chordal distance
    then grows to the diameter."""

    strategy_id = "extrinsic-expand-s2"
    expanding = True

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return 3

    @property
    def indep_dim(self) -> int:
        return 3

    def independent_move(self, x, g, h) -> np.ndarray:
        return stroock_step(x, g, h)

    def move(self, x, y, gp, ga, h, cache):
        x_new = stroock_step(x, gp, h)
        rot = _batched_rodrigues(x, -y)
        moved = y - np.einsum("nij,nj->ni", rot, x_new - x)
        y_new = moved / np.linalg.norm(moved, axis=-1, keepdims=True)
        return x_new, y_new, cache


# -- fixed-distance coupling on the 2-sphere --------------------------------------


def _batched_fixed_distance(x: np.ndarray, y: np.ndarray):
    """Per-path (J, K) driver matrices keeping |X - Y| constant."""
    c = np.sum(x * y, axis=-1)
    if np.any(np.abs(c) >= 1.0 - 1e-10):
        raise DegenerateInputError("fixed-distance driver undefined at (anti)parallel points")
    s = np.sqrt(1.0 - c * c)
    n = x.shape[0]
    o = np.empty((n, 3, 3))
    o[:, :, 0] = x
    o[:, :, 1] = (y - c[:, None] * x) / s[:, None]
    o[:, :, 2] = np.cross(x, y) / s[:, None]
    jt = np.zeros((n, 3, 3))
    kt = np.zeros((n, 3, 3))
    jt[:, 0, 1] = -s
    jt[:, 1, 1] = c
    jt[:, 2, 2] = c
    kt[:, 0, 1] = c
    kt[:, 1, 1] = s
    kt[:, 2, 2] = s
    j = np.einsum("nij,njk,nlk->nil", o, jt, o)
    k = np.einsum("nij,njk,nlk->nil", o, kt, o)
    return j, k


class FixedDistanceS2(CouplingStrategy):
    """Drive the second particle with J dB + K dC so the distance freezes."""

    strategy_id = "fixed-s2"

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return 3

    @property
    def aux_dim(self) -> int:
        return 3

    @property
    def indep_dim(self) -> int:
        return 3

    def independent_move(self, x, g, h) -> np.ndarray:
        return stroock_step(x, g, h)

    def validate_start(self, x, y) -> None:
        c = np.sum(x * y, axis=-1)
        if np.any(np.abs(c) >= 1.0 - 1e-10):
            raise DegenerateInputError("start points must satisfy x != +/-y")

    def move(self, x, y, gp, ga, h, cache):
        j, k = _batched_fixed_distance(x, y)
        w = kendall_compose(j, k, gp, ga)
        return stroock_step(x, gp, h), stroock_step(y, w, h), cache


# -- shared rotation-flow coupling -------------------------------------------------


def _batched_so3_exp(omega: np.ndarray) -> np.ndarray:
    theta = np.linalg.norm(omega, axis=-1)
    safe = np.maximum(theta, 1e-300)
    axis = omega / safe[:, None]
    n = omega.shape[0]
    hat = np.zeros((n, 3, 3))
    hat[:, 0, 1] = -axis[:, 2]
    hat[:, 0, 2] = axis[:, 1]
    hat[:, 1, 0] = axis[:, 2]
    hat[:, 1, 2] = -axis[:, 0]
    hat[:, 2, 0] = -axis[:, 1]
    hat[:, 2, 1] = axis[:, 0]
    eye = np.eye(3)
    out = (
        eye
        + np.sin(theta)[:, None, None] * hat
        + (1.0 - np.cos(theta))[:, None, None] * np.einsum("nij,njk->nik", hat, hat)
    )
    return np.where((theta > 0.0)[:, None, None], out, eye)


def _batched_reorthonormalize(z: np.ndarray) -> np.ndarray:
    r0 = z[:, 0] / np.linalg.norm(z[:, 0], axis=-1, keepdims=True)
    r1 = z[:, 1] - np.sum(r0 * z[:, 1], axis=-1, keepdims=True) * r0
    r1 = r1 / np.linalg.norm(r1, axis=-1, keepdims=True)
    r2 = np.cross(r0, r1)
    return np.stack([r0, r1, r2], axis=1)


class So3FlowCoupling(CouplingStrategy):
    """Move both particles with one shared rotation-group random walk; the
    distance is exactly invariant because every step is an isometry."""

    strategy_id = "so3-flow"
    patchable = False

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)

    @property
    def primary_dim(self) -> int:
        return 3

    def init_cache(self, x, y) -> dict:
        n = x.shape[0]
        return {
            "z": np.broadcast_to(np.eye(3), (n, 3, 3)).copy(),
            "x0": x.copy(),
            "y0": y.copy(),
        }

    def move(self, x, y, gp, ga, h, cache):
        rot = _batched_so3_exp(np.sqrt(h) * gp)
        z = _batched_reorthonormalize(np.einsum("nij,njk->nik", rot, cache["z"]))
        x_new = np.einsum("nij,nj->ni", z, cache["x0"])
        y_new = np.einsum("nij,nj->ni", z, cache["y0"])
        return x_new, y_new, {"z": z, "x0": cache["x0"], "y0": cache["y0"]}


# -- intrinsic rotation coupling ----------------------------------------------------


def rotation_angle_cos(space: ModelSpace, k: float, rho) -> np.ndarray:
    """Cosine of the perpendicular rotation angle hitting distance drift -k rho / 2."""
    rho = np.asarray(rho, float)
    gs = gen_sin(space.curvature, rho)
    gc = gen_cos(space.curvature, rho)
    return gc + k * rho * gs / (2.0 * (space.dim - 1))


def feasible_rate_interval(space: ModelSpace, rho: float) -> tuple[float, float]:
    """Closed interval of rates k admitting a rotation coupling at distance rho."""
    if rho <= 0.0 or (space.curvature == 1 and rho >= np.pi):
        raise DomainError(f"distance {rho} outside the feasible range")
    gs = float(gen_sin(space.curvature, rho))
    gc = float(gen_cos(space.curvature, rho))
    scale = 2.0 * (space.dim - 1) / (rho * gs)
    return (-(1.0 + gc) * scale, (1.0 - gc) * scale)


def distance_drift(space: ModelSpace, alpha, rho) -> np.ndarray:
    """Deterministic distance drift (d-1)(gc(rho) - cos(alpha)) / gs(rho)."""
    rho = np.asarray(rho, float)
    gs = gen_sin(space.curvature, rho)
    gc = gen_cos(space.curvature, rho)
    return (space.dim - 1) * (gc - np.cos(alpha)) / gs


def _rotate_pairs_transposed(g: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Apply the transposed block rotation to the noise: the first component is
    fixed, consecutive pairs of the rest rotate by alpha."""
    out = np.empty_like(g)
    out[:, 0] = g[:, 0]
    ca = np.cos(alpha)
    sa = np.sin(alpha)
    n_cols = g.shape[1]
    for i in range(1, n_cols - 1, 2):
        out[:, i] = ca * g[:, i] - sa * g[:, i + 1]
        out[:, i + 1] = sa * g[:, i] + ca * g[:, i + 1]
    return out


class RotationCoupling(CouplingStrategy):
    """Transport-and-rotate coupling on any model space.

    The first particle walks with a tangent frame adapted to the connecting
    geodesic; the second receives the same noise after parallel transport and
    a rotation by alpha(rho) in the perpendicular 2-planes.  Even dimensions
    gain one fictitious driving dimension (frames of size d+1) so the
    perpendicular directions pair up.

    With a rate parameter k the angle solves
    cos(alpha) = gc(rho) + k rho gs(rho) / (2(d-1)), which makes the distance
    exactly exp(-k t / 2) times its start; alpha_override forces a fixed angle
    instead (0 = synchronous, pi = perverse).
    """

    strategy_id = "rotation"

    def __init__(
        self,
        space: ModelSpace,
        k: Optional[float] = None,
        alpha_override: Optional[float] = None,
    ):
        super().__init__(space)
        if (k is None) == (alpha_override is None):
            raise DomainError("exactly one of k and alpha_override must be given")
        self.k = k
        self.alpha_override = alpha_override
        self.drive_dim = space.dim if space.dim % 2 == 1 else space.dim + 1

    @property
    def expanding(self) -> bool:  # type: ignore[override]
        # Any non-synchronous angle repels near the diagonal; a fixed rate
        # expands exactly when it is negative.
        if self.alpha_override is not None:
            return float(np.cos(self.alpha_override)) < 1.0 - 1e-12
        return self.k is not None and self.k < 0.0

    @property
    def primary_dim(self) -> int:
        return self.drive_dim

    def validate_start(self, x, y) -> None:
        rho = self.space.distance(x, y)
        if np.any(rho < MEET_TOL):
            raise DegenerateInputError("rotation coupling needs distinct start points")
        if self.space.curvature == 1 and np.any(rho >= np.pi - 1e-9):
            raise CutLocusError("start points must not be antipodal")
        if self.k is not None:
            self._alpha(rho)

    def _alpha(self, rho: np.ndarray) -> np.ndarray:
        if self.alpha_override is not None:
            return np.full_like(np.asarray(rho, float), float(self.alpha_override))
        cos_alpha = rotation_angle_cos(self.space, self.k, rho)
        if np.any(np.abs(cos_alpha) > 1.0 + 1e-12):
            worst = float(np.max(np.abs(cos_alpha)))
            raise InfeasibleRateError(
                f"rate k={self.k} infeasible at distance "
                f"{float(np.asarray(rho).flat[int(np.argmax(np.abs(cos_alpha)))]):.6g}"
                f" (|cos alpha| = {worst:.6g} > 1)"
            )
        return np.arccos(np.clip(cos_alpha, -1.0, 1.0))

    def noise_tangents(self, x, y, gp):
        """Tangent noise pair (xi at x, eta at y) induced by the driving draws.

        The adapted frame at x is transported to y; the perpendicular
        components of the noise rotate by alpha(rho) on the way.
        """
        space = self.space
        d = space.dim
        rho = space.distance(x, y)
        if np.any(rho < MEET_TOL):
            raise DegenerateInputError("rotation coupling undefined at coincident points")
        gdir = space.log_map(x, y) / rho[:, None]
        frame_x = space.frame_with_first(x, gdir)
        frame_y = space.parallel_transport(x[:, None, :], y[:, None, :], frame_x)
        alpha = self._alpha(rho)
        rotated = _rotate_pairs_transposed(gp, alpha)
        xi = np.einsum("nj,nja->na", gp[:, :d], frame_x)
        eta = np.einsum("nj,nja->na", rotated[:, :d], frame_y)
        return xi, eta

    def move(self, x, y, gp, ga, h, cache):
        xi, eta = self.noise_tangents(x, y, gp)
        sq = np.sqrt(h)
        return (
            self.space.exp_tangent(x, sq * xi),
            self.space.exp_tangent(y, sq * eta),
            cache,
        )


# -- broken coupling (negative control) ---------------------------------------------


class BrokenMarginalS2(CouplingStrategy):
    """Deliberately wrong coupling: the second particle reuses the first's noise
    through a non-orthogonal matrix, so its coordinate process is not a
    Brownian motion.  Exists only as a negative control for the marginal test."""

    strategy_id = "broken-marginal"

    def __init__(self, space: ModelSpace):
        _require_sphere2(space, self.strategy_id)
        super().__init__(space)
        self._skew = np.eye(3)
        self._skew[0, 1] = 1.5

    @property
    def primary_dim(self) -> int:
        return 3

    def move(self, x, y, gp, ga, h, cache):
        return stroock_step(x, gp, h), stroock_step(y, gp @ self._skew.T, h), cache


# -- patching regime machine ----------------------------------------------------------


class PatchedCoupling(CouplingStrategy):
    """Run the inner coupling away from the degenerate sets, independent motion
    inside them.

    On the sphere the pair turns independent within eps of the cut locus
    (distance above pi - eps) and re-couples below pi - 2 eps.  For expanding
    (shy) inner couplings the diagonal is patched the same way: independent
    inside distance eps/4, re-coupled beyond eps/2.  Transitions are evaluated
    after each move.
    """

    def __init__(self, inner: CouplingStrategy, eps: float):
        super().__init__(inner.space)
        if inner.space.curvature != 1:
            raise DomainError("patching applies to the sphere (the only space with a cut locus)")
        if not inner.patchable:
            raise DomainError(f"strategy {inner.strategy_id!r} does not support patching")
        if not 0.0 < eps < np.pi / 4.0:
            raise DomainError(f"eps must lie in (0, pi/4), got {eps}")
        self.inner = inner
        self.eps = float(eps)
        self.diagonal = bool(inner.expanding)
        self.strategy_id = inner.strategy_id

    @property
    def primary_dim(self) -> int:
        return self.inner.primary_dim

    @property
    def aux_dim(self) -> int:
        return max(self.inner.aux_dim, self.inner.indep_dim)

    @property
    def indep_dim(self) -> int:
        return self.inner.indep_dim

    def _independent_zone(self, rho: np.ndarray) -> np.ndarray:
        zone = rho > np.pi - self.eps
        if self.diagonal:
            zone = zone | (rho < self.eps / 4.0)
        return zone

    def _coupled_zone(self, rho: np.ndarray) -> np.ndarray:
        zone = rho < np.pi - 2.0 * self.eps
        if self.diagonal:
            zone = zone & (rho > self.eps / 2.0)
        return zone

    def initial_state(self, x0, y0, n_paths: int = 1) -> CouplingState:
        x = _ensemble(x0, n_paths)
        y = _ensemble(y0, n_paths)
        self.space.check_point(x)
        self.space.check_point(y)
        rho = self.space.distance(x, y)
        regime = np.where(self._independent_zone(rho), INDEPENDENT, COUPLED).astype(np.int8)
        if np.any(regime == COUPLED):
            sel = regime == COUPLED
            self.inner.validate_start(x[sel], y[sel])
        cache = self.inner.init_cache(x, y)
        return CouplingState(t=0.0, x=x, y=y, regime=regime, cache=cache)

    def step(self, state: CouplingState, noise: StepNoise, h: float) -> CouplingState:
        gp = np.atleast_2d(noise.primary)
        ga = None if noise.auxiliary is None else np.atleast_2d(noise.auxiliary)
        x_new = state.x.copy()
        y_new = state.y.copy()
        coupled = state.regime == COUPLED
        cache = state.cache
        if np.any(coupled):
            sub_ga = None if ga is None else ga[coupled]
            xc, yc, cache = self.inner.move(
                state.x[coupled], state.y[coupled], gp[coupled], sub_ga, h, cache
            )
            x_new[coupled] = xc
            y_new[coupled] = yc
        free = ~coupled
        if np.any(free):
            nd = self.inner.indep_dim
            x_new[free] = self.inner.independent_move(state.x[free], gp[free, :nd], h)
            y_new[free] = self.inner.independent_move(state.y[free], ga[free, :nd], h)
        rho = self.space.distance(x_new, y_new)
        regime = state.regime.copy()
        regime[coupled & self._independent_zone(rho)] = INDEPENDENT
        regime[free & self._coupled_zone(rho)] = COUPLED
        return CouplingState(t=state.t + h, x=x_new, y=y_new, regime=regime, cache=cache)


# -- registry -------------------------------------------------------------------------

STRATEGY_IDS = (
    "translation",
    "mirror-s2",
    "extrinsic-contract-s2",
    "extrinsic-expand-s2",
    "fixed-s2",
    "rotation",
    "so3-flow",
    "independent",
    "broken-marginal",
)


def make_strategy(
    strategy_id: str,
    space: ModelSpace,
    k: Optional[float] = None,
    alpha_override: Optional[float] = None,
    eps: Optional[float] = None,
) -> CouplingStrategy:
    """Build a strategy from its stable id; eps switches on cut-locus patching."""
    if strategy_id not in STRATEGY_IDS:
        raise DomainError(f"unknown strategy {strategy_id!r}; known: {', '.join(STRATEGY_IDS)}")
    if strategy_id == "rotation":
        inner: CouplingStrategy = RotationCoupling(space, k=k, alpha_override=alpha_override)
    else:
        if k is not None or alpha_override is not None:
            raise DomainError(f"strategy {strategy_id!r} takes no k / alpha-override parameters")
        table = {
            "translation": TranslationCoupling,
            "mirror-s2": MirrorS2,
            "extrinsic-contract-s2": ExtrinsicContractS2,
            "extrinsic-expand-s2": ExtrinsicExpandS2,
            "fixed-s2": FixedDistanceS2,
            "so3-flow": So3FlowCoupling,
            "independent": IndependentCoupling,
            "broken-marginal": BrokenMarginalS2,
        }
        inner = table[strategy_id](space)
    if eps is None:
        return inner
    return PatchedCoupling(inner, eps)
