"""Moving-mesh discontinuous Galerkin discretization of single-speed slab
transport with isotropic scattering.

State layout: coefficients u[l, k, j] for discrete direction l, cell k, and
Legendre moment j, flattened in C order for the time integrator.  For each
direction the semidiscrete system on a moving cell reads

    du/dt = G u + mu L u - u - surf + (c / 2) sum_l' w_l' u_l' + s,

where G and L are the motion and gradient matrices of the cell basis, surf is
the upwinded surface term, and s holds the per-direction projected source
(half the volumetric source in standard mode, (c / 2) phi_u in uncollided
mode).
"""

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analytic
from .analytic import SourceSpec
from .basis import legendre_table
from .integrate import IntegratorConfig, IntegrationStats, integrate
from .mesh import (
    Mesh,
    MeshState,
    edges_at,
    hybrid_square_mesh,
    initial_width_for_gaussian,
    radial_half_mesh,
    radial_mesh,
    static_square_mesh,
    static_uniform_mesh,
)
from .quadrature import gauss_legendre, gauss_lobatto

SOURCE_MODES = ("standard", "uncollided")
MESH_MODES = ("static", "moving")

# Effective initial half-width used when the moving mesh collapses onto a
# plane pulse, and the deferred start for meshes that degenerate at t = 0.
PLANE_EPS_X0 = 1e-10
T_START_EPS = 1e-10
# Plane uncollided runs defer further: cell widths grow like t, so explicit
# stepping pays a fixed step count per decade of mesh growth.  The collided
# production dropped by starting at t0 is ~c*t0 in mass, which at 1e-5 sits
# an order under the plane trust-gate abort limit and three decades under
# the smallest study error the saturation mask keeps.
PLANE_T_START = 1e-5

_SQUARE_KINDS = ("square-pulse", "square-source")
_GAUSSIAN_KINDS = ("gaussian-pulse", "gaussian-source")


@dataclass(frozen=True)
class RunConfig:
    """Full description of one discrete solve."""

    spec: SourceSpec
    n_angles: int
    order: int
    n_cells: int
    mesh_mode: str
    source_mode: str
    t_final: float = 1.0
    rtol: float = 5e-13
    atol: float = 1e-12
    # Solve the reflection-symmetric right half [0, R(t)] with a mirror
    # boundary at the origin; n_cells then counts half-domain cells, so the
    # resolution matches a 2*n_cells full solve at half the cost.
    half_domain: bool = False

    def __post_init__(self):
        if self.mesh_mode not in MESH_MODES:
            raise ValueError(f"mesh_mode must be one of {MESH_MODES}")
        if self.source_mode not in SOURCE_MODES:
            raise ValueError(f"source_mode must be one of {SOURCE_MODES}")
        if self.n_angles < 2 or self.n_angles % 2:
            raise ValueError("n_angles must be an even count >= 2")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        kind = self.spec.kind
        if kind == "mms":
            if self.source_mode != "standard":
                raise ValueError(
                    "the manufactured problem drives the full flux directly; "
                    "run it with source_mode='standard'"
                )
            if self.mesh_mode != "moving":
                raise ValueError(
                    "the manufactured problem imposes its wavefront boundary "
                    "condition on a moving mesh; mesh_mode='static' cannot "
                    "track it"
                )
        if (
            kind == "plane-pulse"
            and self.mesh_mode == "moving"
            and self.source_mode == "standard"
        ):
            raise ValueError(
                "plane-pulse with a moving mesh requires the uncollided "
                "source treatment: projecting the near-singular initial "
                "condition on collapsed cells does not converge"
            )
        if kind in _SQUARE_KINDS and self.mesh_mode == "moving":
            if self.n_cells < 4 or self.n_cells % 4:
                raise ValueError(
                    "the hybrid square mesh needs n_cells divisible by 4"
                )
        if self.half_domain and not (
            kind == "plane-pulse"
            and self.mesh_mode == "moving"
            and self.source_mode == "uncollided"
        ):
            raise ValueError(
                "half_domain is wired only for the plane-pulse uncollided "
                "moving mesh, the one case whose cost warrants it"
            )

    @property
    def variant(self) -> str:
        return f"{self.source_mode}+{self.mesh_mode}"


def build_mesh(config: RunConfig) -> Mesh:
    """Mesh law implied by the problem kind and mesh mode."""
    spec, K = config.spec, config.n_cells
    kind = spec.kind
    if kind == "mms":
        return radial_mesh(K, spec.x0)
    if config.mesh_mode == "moving":
        if kind == "plane-pulse":
            if config.half_domain:
                return radial_half_mesh(K, PLANE_EPS_X0)
            return radial_mesh(K, PLANE_EPS_X0)
        if kind in _SQUARE_KINDS:
            return hybrid_square_mesh(K, spec.x0)
        return radial_mesh(K, initial_width_for_gaussian(spec.sigma))
    if kind == "plane-pulse":
        return static_uniform_mesh(K, config.t_final)
    if kind in _SQUARE_KINDS:
        return static_square_mesh(K, spec.x0, config.t_final + spec.x0)
    return static_uniform_mesh(
        K, config.t_final + initial_width_for_gaussian(spec.sigma)
    )


def start_time(config: RunConfig) -> float:
    """Most problems start at t = 0; runs whose mesh or source is singular
    there are deferred to a small positive epsilon."""
    kind = config.spec.kind
    if kind == "plane-pulse" and (
        config.mesh_mode == "moving" or config.source_mode == "uncollided"
    ):
        return PLANE_T_START
    if config.mesh_mode == "moving" and kind in _SQUARE_KINDS:
        return T_START_EPS
    return 0.0


@dataclass
class SolutionState:
    """DG coefficients at one time."""

    coeffs: np.ndarray  # (n_angles, n_cells, order + 1)
    t: float

    def copy(self):
        return SolutionState(self.coeffs.copy(), self.t)


@dataclass
class SolveResult:
    config: RunConfig
    state: SolutionState
    stats: IntegrationStats
    wall_seconds: float
    checkpoints: dict


class TransportSystem:
    """Assembles and advances the semidiscrete transport system."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.spec = config.spec
        self.mesh = build_mesh(config)
        self.t_start = start_time(config)
        rule = gauss_lobatto(config.n_angles)
        self.mu = rule.nodes
        self.weights = rule.weights
        j = np.arange(config.order + 1)
        self._sq = np.sqrt(2.0 * j + 1.0)
        self._alt = np.where(j % 2 == 0, self._sq, -self._sq)
        self._proj_rule = gauss_legendre(config.order + 7)
        self._uncollided = config.source_mode == "uncollided"
        self._boundary_override = None
        self._reflect_left = config.half_domain
        # The per-cell gradient and motion matrices are fixed index patterns
        # scaled by cell width and edge speeds, so the volume terms reduce to
        # two shared (J, J) products plus per-cell scalings (see rhs_coeffs).
        coupled = np.sqrt(np.outer(2.0 * j + 1.0, 2.0 * j + 1.0))
        lower = j[:, None] > j[None, :]
        parity = (j[:, None] + j[None, :]) % 2
        self._odd_pattern = np.where(lower & (parity == 1), coupled, 0.0).T.copy()
        self._even_pattern = np.where(
            (j[:, None] >= j[None, :] + 2) & (parity == 0), coupled, 0.0
        ).T.copy()
        self._diag_weights = 2.0 * j + 1.0

    # -- mesh and boundary -------------------------------------------------

    def mesh_at(self, t: float) -> MeshState:
        return edges_at(self.mesh, t)

    def boundary_values(self, t: float):
        """Inflow angular-flux traces just outside the outer edges."""
        if self._boundary_override is not None:
            return self._boundary_override(t)
        n = self.config.n_angles
        if self.spec.kind == "mms":
            edge = self.mesh.initial_edges[-1] + self.mesh.velocities[-1] * t
            val = float(analytic.mms_solution(edge, t, self.spec.x0))
            return np.full(n, val), np.full(n, val)
        zero = np.zeros(n)
        return zero, zero

    # -- projections -------------------------------------------------------

    def _projection_points(self, ms: MeshState, kinks):
        """Panel nodes for per-cell projections, split at interior kinks.

        Returns flat arrays (x, weight, cell index, reference coordinate z).
        """
        edges = ms.edges
        breaks = edges
        if kinks:
            lo, hi = edges[0], edges[-1]
            extra = [r for s in kinks for r in (-s, s) if lo < r < hi]
            if extra:
                breaks = np.unique(np.concatenate([edges, np.array(extra)]))
        mid = 0.5 * (breaks[:-1] + breaks[1:])
        half = 0.5 * (breaks[1:] - breaks[:-1])
        cell = np.clip(np.searchsorted(edges, mid, side="right") - 1, 0, ms.n_cells - 1)
        nodes = mid[:, None] + half[:, None] * self._proj_rule.nodes[None, :]
        wts = half[:, None] * self._proj_rule.weights[None, :]
        cell_idx = np.repeat(cell, self._proj_rule.n)
        x = nodes.ravel()
        xl = edges[cell_idx]
        xr = edges[cell_idx + 1]
        z = np.clip((2.0 * x - xl - xr) / (xr - xl), -1.0, 1.0)
        return x, wts.ravel(), cell_idx, z

    def _project_profile(self, ms: MeshState, values, wts, cell_idx, z):
        """Per-cell basis moments of point values sampled at projection nodes."""
        order = self.config.order
        k_cells = ms.n_cells
        sqrt_h = np.sqrt(ms.widths)
        table = legendre_table(z, order)
        out = np.empty((k_cells, order + 1))
        base = wts * values
        for j in range(order + 1):
            out[:, j] = np.bincount(cell_idx, weights=base * table[j], minlength=k_cells)
        return out * (self._sq[None, :] / sqrt_h[:, None])

    def project_function(self, ms: MeshState, f, kinks=()):
        x, wts, cell_idx, z = self._projection_points(ms, kinks)
        return self._project_profile(ms, f(x), wts, cell_idx, z)

    def source_moments(self, t: float, ms: MeshState):
        """Projected per-direction source; (K, J) if isotropic, else (N, K, J)."""
        spec = self.spec
        if self._uncollided:
            if spec.kind == "plane-pulse" and self.config.mesh_mode == "moving":
                # The expanding mesh stays inside the pulse's light cone where
                # the uncollided flux is spatially constant: only the mean
                # moment survives and it has a closed form.
                out = np.zeros((ms.n_cells, self.config.order + 1))
                plateau = spec.amplitude * np.exp(-t) / (2.0 * t)
                out[:, 0] = 0.5 * spec.c * plateau * np.sqrt(ms.widths)
                return out
            kinks = analytic.kink_radii(spec, t, uncollided=True)
            phi_u = lambda x: analytic.uncollided_scalar_flux(spec, x, t)
            return 0.5 * spec.c * self.project_function(ms, phi_u, kinks)
        if spec.kind == "mms":
            x0 = spec.x0
            even = self.project_function(
                ms, lambda x: analytic.mms_source(x, 0.0, t, x0)
            )
            slope = self.project_function(
                ms,
                lambda x: analytic.mms_source(x, 1.0, t, x0)
                - analytic.mms_source(x, 0.0, t, x0),
            )
            return 0.5 * (even[None] + self.mu[:, None, None] * slope[None])
        if spec.kind in ("square-source", "gaussian-source"):
            kinks = analytic.kink_radii(spec, t, uncollided=False)
            src = lambda x: analytic.volumetric_source(spec, x, t)
            return 0.5 * self.project_function(ms, src, kinks)
        return np.zeros((ms.n_cells, self.config.order + 1))

    def project_initial_condition(self) -> SolutionState:
        """State at the start time: projected initial flux, or zero in
        uncollided mode (the analytic part carries the initial particles)."""
        cfg = self.config
        shape = (cfg.n_angles, cfg.n_cells, cfg.order + 1)
        if self._uncollided:
            return SolutionState(np.zeros(shape), self.t_start)
        ms = self.mesh_at(self.t_start if self.t_start > 0 else 0.0)
        kinks = ()
        plane_w = None
        if self.spec.kind == "square-pulse":
            kinks = (self.spec.x0,)
        elif self.spec.kind == "plane-pulse":
            # The delta initial condition is approximated at mesh resolution:
            # a box as wide as the cells meeting at the origin is exactly
            # representable, and halving the cells halves the smearing, so the
            # standard treatment converges toward the point pulse rather than
            # toward a fixed smeared problem.
            i = int(np.argmin(np.abs(ms.edges)))
            i = min(max(i, 1), ms.n_cells - 1)
            plane_w = float(ms.edges[i + 1] - ms.edges[i])
            kinks = (plane_w,)
        coeffs = self.project_function(
            ms, lambda x: analytic.initial_psi(self.spec, x, plane_w), kinks
        )
        return SolutionState(np.broadcast_to(coeffs, shape).copy(), self.t_start)

    # -- semidiscrete right-hand side ---------------------------------------

    def rhs_coeffs(self, t: float, u: np.ndarray) -> np.ndarray:
        ms = self.mesh_at(t)
        vel = ms.velocities
        h = ms.widths
        inv_sqrt_h = 1.0 / np.sqrt(h)
        n, k_cells, j_funcs = u.shape
        hdot = vel[1:] - vel[:-1]
        vsum = vel[:-1] + vel[1:]
        # volume terms: (G + mu L) u assembled from the shared patterns,
        # with the collision loss -u folded into the diagonal factor
        flat = u.reshape(n * k_cells, j_funcs)
        odd_u = (flat @ self._odd_pattern).reshape(u.shape)
        even_u = (flat @ self._even_pattern).reshape(u.shape)
        diag = (-0.5 * hdot / h)[:, None] * self._diag_weights[None, :] - 1.0
        du = diag[None, :, :] * u
        odd_u *= ((2.0 * self.mu[:, None] - vsum[None, :]) / h[None, :])[:, :, None]
        du += odd_u
        if hdot.any():
            even_u *= (hdot / h)[None, :, None]
            du -= even_u

        trace_right = (u @ self._sq) * inv_sqrt_h[None, :]
        trace_left = (u @ self._alt) * inv_sqrt_h[None, :]
        bc_left, bc_right = self.boundary_values(t)
        if self._reflect_left:
            # mirror boundary at the origin: inflow at +mu is the outgoing
            # trace of -mu (directions are symmetric, so reversed order)
            bc_left = trace_left[::-1, 0]
        from_left = np.concatenate([bc_left[:, None], trace_right], axis=1)
        from_right = np.concatenate([trace_left, bc_right[:, None]], axis=1)
        rel = self.mu[:, None] - vel[None, :]
        upwind = np.where(rel > 0.0, from_left, from_right)
        flux = rel * upwind
        # per-cell scaled traces fold the 1/sqrt(h) into (K, J) factors
        du -= flux[:, 1:, None] * (self._sq[None, :] * inv_sqrt_h[:, None])[None, :, :]
        du += flux[:, :-1, None] * (self._alt[None, :] * inv_sqrt_h[:, None])[None, :, :]

        # isotropic scattering gain plus external source, added in one pass
        gain = np.tensordot(self.weights, u, axes=(0, 0))
        gain *= 0.5 * self.spec.c
        src = self.source_moments(t, ms)
        if src.ndim == 2:
            gain += src
            du += gain[None, :, :]
        else:
            du += gain[None, :, :]
            du += src
        return du

    def rhs_flat(self, t: float, y: np.ndarray) -> np.ndarray:
        cfg = self.config
        u = y.reshape(cfg.n_angles, cfg.n_cells, cfg.order + 1)
        return self.rhs_coeffs(t, u).ravel()

    def surface_flux(self, l: int, k: int, state: SolutionState) -> np.ndarray:
        """Per-moment upwinded surface term for one direction and cell."""
        cfg = self.config
        if not 0 <= l < cfg.n_angles:
            raise ValueError(f"direction index {l} out of range")
        if not 0 <= k < cfg.n_cells:
            raise ValueError(f"cell index {k} out of range")
        ms = self.mesh_at(state.t)
        u = state.coeffs
        sqrt_h = np.sqrt(ms.widths)
        trace_right = (u @ self._sq) / sqrt_h[None, :]
        trace_left = (u @ self._alt) / sqrt_h[None, :]
        bc_left, bc_right = self.boundary_values(state.t)
        from_left = np.concatenate([bc_left[:, None], trace_right], axis=1)
        from_right = np.concatenate([trace_left, bc_right[:, None]], axis=1)
        rel = self.mu[:, None] - ms.velocities[None, :]
        flux = rel * np.where(rel > 0.0, from_left, from_right)
        return (flux[l, k + 1] * self._sq - flux[l, k] * self._alt) / sqrt_h[k]

    # -- time advancement ----------------------------------------------------

    def _integrator_config(self, at_start: bool) -> IntegratorConfig:
        first = T_START_EPS if (at_start and self.t_start > 0.0) else None
        return IntegratorConfig(
            rtol=self.config.rtol, atol=self.config.atol, first_step=first
        )

    def advance(self, state: SolutionState, t_target: float):
        """Integrate the state to t_target; returns (state, stats)."""
        cfg = self._integrator_config(at_start=state.t <= self.t_start)
        y, stats = integrate(self.rhs_flat, state.coeffs.ravel(), state.t, t_target, cfg)
        return SolutionState(y.reshape(state.coeffs.shape), t_target), stats

    def solve(self, checkpoints=()) -> SolveResult:
        """Project the initial state and advance to t_final, stopping at any
        requested checkpoint times (and at a source cutoff inside the span)."""
        t_end = self.config.t_final
        stops = {float(t) for t in checkpoints if self.t_start < t < t_end}
        if self.spec.kind in ("square-source", "gaussian-source"):
            if self.t_start < self.spec.t0 < t_end:
                stops.add(float(self.spec.t0))
        wall0 = time.perf_counter()
        state = self.project_initial_condition()
        stats = IntegrationStats()
        saved = {}
        for t_stop in sorted(stops) + [t_end]:
            state, seg = self.advance(state, t_stop)
            stats = stats.merge(seg)
            if t_stop in checkpoints or t_stop == t_end:
                saved[t_stop] = state.copy()
        wall = time.perf_counter() - wall0
        return SolveResult(self.config, state, stats, wall, saved)

    # -- observables ---------------------------------------------------------

    def phi_moments(self, state: SolutionState) -> np.ndarray:
        """Quadrature-summed scalar-flux moments, shape (K, J)."""
        return np.tensordot(self.weights, state.coeffs, axes=(0, 0))

    def scalar_flux(self, state: SolutionState, points, include_uncollided=None):
        """Scalar flux at the given points (edge hits read the left cell)."""
        ms = self.mesh_at(state.t)
        pts = np.asarray(points, dtype=float)
        slack = 1e-12 * max(1.0, ms.edges[-1] - ms.edges[0])
        if np.any(pts < ms.edges[0] - slack) or np.any(pts > ms.edges[-1] + slack):
            raise ValueError("evaluation point outside the mesh")
        cell = np.clip(
            np.searchsorted(ms.edges, pts, side="left") - 1, 0, ms.n_cells - 1
        )
        xl = ms.edges[cell]
        xr = ms.edges[cell + 1]
        z = np.clip((2.0 * pts - xl - xr) / (xr - xl), -1.0, 1.0)
        table = legendre_table(z, self.config.order)
        mom = self.phi_moments(state)
        scaled = mom * self._sq[None, :] / np.sqrt(ms.widths)[:, None]
        phi = np.einsum("pj,jp->p", scaled[cell], table)
        if include_uncollided is None:
            include_uncollided = self._uncollided
        if include_uncollided:
            phi = phi + analytic.uncollided_scalar_flux(self.spec, pts, state.t)
        return phi

    def collided_scalar_flux(self, state: SolutionState, points):
        return self.scalar_flux(state, points, include_uncollided=False)

    def phi_integral(self, state: SolutionState) -> float:
        """integral(phi) dx over the slab, exact per cell via mean moments."""
        ms = self.mesh_at(state.t)
        mom0 = self.phi_moments(state)[:, 0]
        total = float(np.sum(mom0 * np.sqrt(ms.widths)))
        if self._uncollided:
            total += float(analytic.uncollided_integral(self.spec, state.t))
        return total
