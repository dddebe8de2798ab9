"""Finite-difference integrators for the unified evolution equation.

The equation is  tau * u_tt - Lap(u) + a(x) * u_t = lambda * |u|^p  with
homogeneous Dirichlet walls on a truncated domain.  tau=0 runs a
Crank-Nicolson step for  u_t = a^{-1} (Lap u + lambda |u|^p)  with the source
evaluated explicitly at a predicted half step (heat for a=1, free or forced
Schrodinger for a=+-i, Ginzburg-Landau phases in between).  tau=1 runs a
velocity-Verlet step with the damping term folded in implicitly (time
centered), which keeps the damping unconditionally stable under the wave CFL
limit dt <= 0.9 h.

Geometries: the full line, the half line, radially symmetric N-dimensional
space (optionally with the origin excluded for Dirichlet cones or the
singular damping a = V0/|x|), and a planar sector in polar coordinates.

Blowup runs record threshold crossing times T_M for M = 1e3..1e6 and
extrapolate the lifespan through T_M = T_inf - c * M^{-(p-1)}, which is exact
for the comparison equation u' = u^p and removes the dominant threshold bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import csr_matrix, identity
from scipy.sparse.linalg import splu

from blowlab.cone_geometry import ConeDomain, CrossSectionSpec, make_domain
from blowlab.cutoffs import CutoffFamily, psi_of_s, psi_star_of_s
from blowlab.lifespan_bounds import FunctionalTrace

GEOMETRIES = ("line", "half-line", "radial", "polar-sector")


@dataclass(frozen=True)
class CoefficientSpec:
    """Coefficients of the evolution equation.

    Exactly one damping form is active and must match tau: the complex phase
    a = exp(i*zeta) for tau=0; the profile a0 * <x>^(-alpha) or the singular
    v0 / |x| for tau=1.
    """

    tau: int
    p: float
    lam: complex = 1.0 + 0.0j
    a_phase: float | None = None
    a0: float | None = None
    alpha: float = 0.0
    v0: float | None = None

    def __post_init__(self):
        if self.tau not in (0, 1):
            raise ValueError("tau must be 0 or 1")
        if self.p <= 1.0:
            raise ValueError("exponent p must exceed 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0,1]")
        if self.tau == 0:
            if self.a_phase is None:
                raise ValueError("tau=0 needs the phase form a = exp(i*zeta)")
            if not -math.pi / 2 <= self.a_phase <= math.pi / 2:
                raise ValueError("phase must lie in [-pi/2, pi/2]")
            if self.a0 is not None or self.v0 is not None:
                raise ValueError("tau=0 admits only the phase form of the damping")
        else:
            forms = (self.a0 is not None) + (self.v0 is not None)
            if forms != 1:
                raise ValueError("tau=1 needs exactly one of the profile or singular forms")
            if self.a_phase is not None:
                raise ValueError("tau=1 does not take a phase coefficient")
            if self.a0 is not None and self.a0 < 0:
                raise ValueError("a0 must be nonnegative")
            if self.v0 is not None and self.v0 < 0:
                raise ValueError("v0 must be nonnegative")

    @property
    def zeta(self) -> float:
        return self.a_phase if self.a_phase is not None else 0.0

    def is_real(self) -> bool:
        if complex(self.lam).imag != 0.0:
            return False
        return self.tau == 1 or self.a_phase == 0.0

    def damping(self, radius: np.ndarray) -> np.ndarray:
        """Damping coefficient per node (tau=1 forms)."""
        if self.a0 is not None:
            return self.a0 * (1.0 + radius**2) ** (-self.alpha / 2.0)
        return self.v0 / radius


@dataclass(frozen=True)
class GridSpec:
    """Truncated computational domain.

    ``extent`` is the full length for the line and the outer radius
    otherwise; ``num_points`` counts nodes along the line/radius including
    Dirichlet boundaries.  Radial grids drop the origin node when
    ``include_origin`` is false (Dirichlet cones, singular damping).
    """

    geometry: str
    extent: float
    num_points: int
    dim: int = 1
    omega: float | None = None
    num_angles: int = 0
    include_origin: bool = True

    def __post_init__(self):
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        if self.num_points < 8:
            raise ValueError("need at least 8 nodes")
        if self.geometry in ("line", "half-line") and self.dim != 1:
            raise ValueError(f"{self.geometry} is one-dimensional")
        if self.geometry == "radial" and self.dim < 1:
            raise ValueError("radial geometry needs dim >= 1")
        if self.geometry == "polar-sector":
            if self.omega is None or not 0.0 < self.omega <= 2.0 * math.pi:
                raise ValueError("polar sector needs an opening angle in (0, 2*pi]")
            if self.num_angles < 6:
                raise ValueError("polar sector needs at least 6 angular nodes")


class _GridData:
    """Precomputed mesh arrays and operators for one grid spec."""

    def __init__(self, spec: GridSpec):
        self.spec = spec
        g = spec.geometry
        if g == "line":
            self.h = spec.extent / (spec.num_points - 1)
            self.coords = np.linspace(-spec.extent / 2, spec.extent / 2, spec.num_points)
            self.radius = np.abs(self.coords)
            self.vol = np.full(spec.num_points, self.h)
            self.shape = (spec.num_points,)
            self.evolved = slice(1, -1)
            self.adjacent = np.array([1, spec.num_points - 2])
        elif g == "half-line":
            self.h = spec.extent / (spec.num_points - 1)
            self.coords = np.linspace(0.0, spec.extent, spec.num_points)
            self.radius = self.coords.copy()
            self.vol = np.full(spec.num_points, self.h)
            self.shape = (spec.num_points,)
            self.evolved = slice(1, -1)
            self.adjacent = np.array([1, spec.num_points - 2])
        elif g == "radial":
            n = spec.num_points
            if spec.include_origin:
                self.h = spec.extent / (n - 1)
                self.coords = np.linspace(0.0, spec.extent, n)
                self.evolved = slice(0, -1)
                self.adjacent = np.array([n - 2])
            else:
                self.h = spec.extent / n
                self.coords = self.h * np.arange(1, n + 1)
                self.evolved = slice(0, -1)
                self.adjacent = np.array([0, n - 2])
            self.radius = self.coords.copy()
            area = 2.0 * math.pi ** (spec.dim / 2.0) / math.gamma(spec.dim / 2.0)
            self.vol = area * self.radius ** (spec.dim - 1) * self.h
            self.shape = (n,)
        else:  # polar-sector
            nr, na = spec.num_points, spec.num_angles
            self.h = spec.extent / nr
            self.h_theta = spec.omega / (na - 1)
            self.r_nodes = self.h * np.arange(1, nr + 1)
            self.theta_nodes = self.h_theta * np.arange(na)
            rr, th = np.meshgrid(self.r_nodes, self.theta_nodes, indexing="ij")
            self.coords = np.stack([rr * np.cos(th), rr * np.sin(th)], axis=-1)
            self.radius = rr
            self.vol = rr * self.h * self.h_theta
            self.shape = (nr, na)
            self.evolved = None
            self.adjacent = None
        self._banded = None
        self._sparse = None
        self._lu_cache: dict = {}

    # -- Laplacian -----------------------------------------------------

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """Second-order Laplacian with Dirichlet walls; boundary rows are 0."""
        spec = self.spec
        g = spec.geometry
        out = np.zeros_like(u)
        h2 = self.h * self.h
        if g in ("line", "half-line"):
            out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2
            return out
        if g == "radial":
            r = self.radius
            n = u.shape[0]
            if spec.include_origin:
                out[0] = 2.0 * spec.dim * (u[1] - u[0]) / h2
                out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2 + (
                    (spec.dim - 1) / r[1:-1]
                ) * (u[2:] - u[:-2]) / (2.0 * self.h)
            else:
                out[0] = (-2.0 * u[0] + u[1]) / h2 + ((spec.dim - 1) / r[0]) * u[1] / (
                    2.0 * self.h
                )
                out[1:-1] = (u[:-2] - 2.0 * u[1:-1] + u[2:]) / h2 + (
                    (spec.dim - 1) / r[1:-1]
                ) * (u[2:] - u[:-2]) / (2.0 * self.h)
            out[n - 1] = 0.0
            return out
        # polar sector: u_rr + u_r/r + u_tt/r^2, Dirichlet rays/arc, origin ghost 0
        r = self.r_nodes[:, None]
        ht2 = self.h_theta * self.h_theta
        up = np.zeros_like(u)
        up[:-1, :] = u[1:, :]
        down = np.zeros_like(u)
        down[1:, :] = u[:-1, :]  # row below; r=0 ghost stays 0
        inner = (down - 2.0 * u + up) / h2 + (up - down) / (2.0 * self.h * r)
        ang = np.zeros_like(u)
        ang[:, 1:-1] = (u[:, :-2] - 2.0 * u[:, 1:-1] + u[:, 2:]) / ht2
        out = inner + ang / (r * r)
        out[-1, :] = 0.0
        out[:, 0] = 0.0
        out[:, -1] = 0.0
        return out

    # -- implicit machinery for the parabolic step ----------------------

    def _banded_diagonals(self):
        """(lower, diag, upper) of the Laplacian on evolved nodes (1-d)."""
        if self._banded is not None:
            return self._banded
        spec = self.spec
        h2 = self.h * self.h
        if spec.geometry in ("line", "half-line"):
            m = spec.num_points - 2
            diag = np.full(m, -2.0 / h2)
            lower = np.full(m, 1.0 / h2)
            upper = np.full(m, 1.0 / h2)
        else:  # radial
            r = self.radius
            m = spec.num_points - 1
            diag = np.full(m, -2.0 / h2)
            lower = np.zeros(m)
            upper = np.zeros(m)
            fac = (spec.dim - 1) / (2.0 * self.h)
            if spec.include_origin:
                diag[0] = -2.0 * spec.dim / h2
                upper[0] = 2.0 * spec.dim / h2
                lower[1:] = 1.0 / h2 - fac / r[1:m]
                upper[1:] = 1.0 / h2 + fac / r[1:m]
            else:
                upper[0] = 1.0 / h2 + fac / r[0]
                lower[1:] = 1.0 / h2 - fac / r[1:m]
                upper[1:] = 1.0 / h2 + fac / r[1:m]
        self._banded = (lower, diag, upper)
        return self._banded

    def _sparse_laplacian(self):
        """CSR Laplacian over evolved polar nodes."""
        if self._sparse is not None:
            return self._sparse
        spec = self.spec
        nr, na = spec.num_points, spec.num_angles
        h2 = self.h * self.h
        ht2 = self.h_theta * self.h_theta
        idx = -np.ones((nr, na), dtype=int)
        evolved = [(i, j) for i in range(nr - 1) for j in range(1, na - 1)]
        for k, (i, j) in enumerate(evolved):
            idx[i, j] = k
        rows, cols, vals = [], [], []
        for k, (i, j) in enumerate(evolved):
            r = self.r_nodes[i]
            rows.append(k)
            cols.append(k)
            vals.append(-2.0 / h2 - 2.0 / (ht2 * r * r))
            for di, w in ((-1, 1.0 / h2 - 1.0 / (2.0 * self.h * r)), (1, 1.0 / h2 + 1.0 / (2.0 * self.h * r))):
                ii = i + di
                if 0 <= ii < nr - 1:
                    if idx[ii, j] >= 0:
                        rows.append(k)
                        cols.append(idx[ii, j])
                        vals.append(w)
            for dj in (-1, 1):
                jj = j + dj
                if idx[i, jj] >= 0:
                    rows.append(k)
                    cols.append(idx[i, jj])
                    vals.append(1.0 / (ht2 * r * r))
        m = len(evolved)
        self._sparse = (csr_matrix((vals, (rows, cols)), shape=(m, m)), evolved)
        return self._sparse

    def solve_implicit(self, factor: complex, dt: float, rhs: np.ndarray) -> np.ndarray:
        """Solve (I - (dt/2) * factor * Lap) x = rhs on evolved nodes.

        ``rhs`` and the result live on the full grid; boundary entries are
        pinned to zero.
        """
        spec = self.spec
        coef = 0.5 * dt * factor
        if spec.geometry != "polar-sector":
            lower, diag, upper = self._banded_diagonals()
            m = diag.size
            dtype = complex if (np.iscomplexobj(rhs) or isinstance(factor, complex)) else float
            ab = np.zeros((3, m), dtype=dtype)
            ab[0, 1:] = -coef * upper[:-1]
            ab[1, :] = 1.0 - coef * diag
            ab[2, :-1] = -coef * lower[1:]
            out = np.zeros_like(rhs)
            out[self.evolved] = solve_banded((1, 1), ab, rhs[self.evolved])
            return out
        lap, evolved = self._sparse_laplacian()
        key = (dt, complex(factor))
        lu = self._lu_cache.get(key)
        if lu is None:
            mat = identity(lap.shape[0], dtype=complex, format="csr") - coef * lap
            lu = splu(mat.tocsc())
            if len(self._lu_cache) > 8:
                self._lu_cache.clear()
            self._lu_cache[key] = lu
        flat_idx = np.array([i * spec.num_angles + j for (i, j) in evolved])
        sol = lu.solve(rhs.reshape(-1)[flat_idx].astype(complex))
        out = np.zeros(rhs.size, dtype=complex)
        out[flat_idx] = sol
        return out.reshape(rhs.shape)


@lru_cache(maxsize=64)
def _grid_data(spec: GridSpec) -> _GridData:
    return _GridData(spec)


def grid_coordinates(spec: GridSpec) -> np.ndarray:
    return _grid_data(spec).coords


def domain_for_grid(spec: GridSpec) -> ConeDomain:
    """The cone-like domain a grid geometry discretizes."""
    if spec.geometry == "line":
        return make_domain(CrossSectionSpec("full-line", 1))
    if spec.geometry == "half-line":
        return make_domain(CrossSectionSpec("half-line", 1))
    if spec.geometry == "radial":
        if spec.dim == 1:
            return make_domain(CrossSectionSpec("half-line" if not spec.include_origin else "full-line", 1))
        return make_domain(CrossSectionSpec("full-sphere", spec.dim))
    return make_domain(CrossSectionSpec("planar-sector", 2, omega=spec.omega))


def weight_values(spec: GridSpec) -> np.ndarray:
    """Harmonic weight sampled on the grid nodes."""
    dom = domain_for_grid(spec)
    g = spec.geometry
    data = _grid_data(spec)
    if g == "line":
        return np.ones(data.shape)
    if g == "half-line":
        return data.coords.copy()
    if g == "radial":
        if dom.gamma == 0.0:
            return np.ones(data.shape)
        return data.radius**dom.gamma
    rr = data.radius
    th = np.arctan2(data.coords[..., 1], data.coords[..., 0]) % (2 * math.pi)
    vals = rr**dom.gamma * np.sin(math.pi * th / spec.omega)
    vals[:, 0] = 0.0
    vals[:, -1] = 0.0
    return vals


@dataclass(frozen=True)
class InitialDataSpec:
    """Smooth compactly supported bump data u(0) = eps * f, u_t(0) = eps * g.

    ``amplitude`` (and ``g_amplitude`` for tau=1) set the complex direction
    of the bump; f(x) = amplitude * B((x-center)/width) with
    B(s) = exp(1 - 1/(1-s^2)).
    """

    center: float
    width: float
    epsilon: float
    amplitude: complex = 1.0 + 0.0j
    g_amplitude: complex = 0.0 + 0.0j

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def support_radius(self) -> float:
        return abs(self.center) + self.width


def bump_profile(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    with np.errstate(divide="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def abs_power(u: np.ndarray, p: float) -> np.ndarray:
    """|u|^p without a float power in the common p=2, 3, 4 cases."""
    if np.iscomplexobj(u):
        a2 = u.real * u.real + u.imag * u.imag
    else:
        a2 = u * u
    if p == 2.0:
        return a2
    if p == 3.0:
        return a2 * np.sqrt(a2)
    if p == 4.0:
        return a2 * a2
    return a2 ** (0.5 * p)


def max_abs(u: np.ndarray) -> float:
    if np.iscomplexobj(u):
        return math.sqrt(float(np.max(u.real * u.real + u.imag * u.imag)))
    return float(np.max(np.abs(u)))


@dataclass(frozen=True)
class EvolutionProblem:
    coeff: CoefficientSpec
    grid: GridSpec
    init: InitialDataSpec

    def __post_init__(self):
        g = self.grid.geometry
        half_extent = self.grid.extent / 2 if g == "line" else self.grid.extent
        if self.init.support_radius() >= half_extent:
            raise ValueError("initial data support must lie strictly inside the domain")
        origin_wall = g == "half-line" or (g == "radial" and not self.grid.include_origin)
        if g == "polar-sector" or origin_wall:
            if self.init.center - self.init.width <= 0.0:
                raise ValueError("initial data support must stay off the origin wall")
        if self.coeff.v0 is not None and (g != "radial" or self.grid.include_origin):
            raise ValueError("singular damping needs a radial grid with the origin excluded")


@dataclass
class FieldState:
    grid: GridSpec
    u: np.ndarray
    v: np.ndarray | None
    t: float
    dt: float


def initial_state(problem: EvolutionProblem, dt: float) -> FieldState:
    grid, init, coeff = problem.grid, problem.init, problem.coeff
    data = _grid_data(grid)
    if grid.geometry == "polar-sector":
        rr = data.radius
        prof = bump_profile((rr - init.center) / init.width)
        prof[:, 0] = 0.0
        prof[:, -1] = 0.0
        th = np.arctan2(data.coords[..., 1], data.coords[..., 0])
        prof = prof * np.sin(math.pi * th / grid.omega) ** 2
    else:
        prof = bump_profile((data.coords - init.center) / init.width)
    real = coeff.is_real() and init.amplitude.imag == 0 and init.g_amplitude.imag == 0
    dtype = float if real else complex
    amp = init.amplitude.real if real else init.amplitude
    u = (init.epsilon * amp * prof).astype(dtype)
    v = None
    if coeff.tau == 1:
        g_amp = init.g_amplitude.real if real else init.g_amplitude
        v = (init.epsilon * g_amp * prof).astype(dtype)
    return FieldState(grid=grid, u=u, v=v, t=0.0, dt=dt)


def discrete_laplacian(state: FieldState) -> np.ndarray:
    return _grid_data(state.grid).laplacian(state.u)


def step_parabolic(state: FieldState, coeff: CoefficientSpec, dt: float) -> FieldState:
    """One Crank-Nicolson step of u_t = a^{-1}(Lap u + lambda |u|^p).

    Diffusion carries weight 1/2 on both time levels; the source is frozen
    at an explicit half-step predictor.
    """
    if coeff.tau != 0:
        raise ValueError("parabolic step requires tau=0")
    data = _grid_data(state.grid)
    ainv = complex(np.exp(-1j * coeff.zeta))
    lam = complex(coeff.lam)
    if coeff.zeta == 0.0 and lam.imag == 0.0 and not np.iscomplexobj(state.u):
        ainv_eff: complex | float = ainv.real
        lam_eff: complex | float = lam.real
    else:
        ainv_eff = ainv
        lam_eff = lam
    u = state.u
    lap_u = data.laplacian(u)
    source = lam_eff * abs_power(u, coeff.p)
    half = u + 0.5 * dt * ainv_eff * (lap_u + source)
    rhs = u + 0.5 * dt * ainv_eff * lap_u + dt * ainv_eff * lam_eff * abs_power(half, coeff.p)
    u_new = data.solve_implicit(ainv_eff, dt, rhs)
    return FieldState(grid=state.grid, u=u_new, v=None, t=state.t + dt, dt=dt)


def step_hyperbolic(state: FieldState, coeff: CoefficientSpec, dt: float) -> FieldState:
    """One velocity-Verlet step of u_tt = Lap u + lambda |u|^p - a(x) u_t.

    The damping enters through the time-centered average, solved pointwise;
    the wave part requires dt <= 0.9 h.
    """
    if coeff.tau != 1:
        raise ValueError("hyperbolic step requires tau=1")
    data = _grid_data(state.grid)
    if dt > 0.9 * data.h:
        raise ValueError(f"CFL violation: dt={dt} exceeds 0.9*h={0.9 * data.h}")
    a_vals = coeff.damping(data.radius)
    lam = coeff.lam if np.iscomplexobj(state.u) else coeff.lam.real
    u, v = state.u, state.v
    damp = 1.0 + 0.5 * dt * a_vals

    acc = data.laplacian(u) + lam * abs_power(u, coeff.p)
    _zero_boundary(data, acc)
    v_half = (v + 0.5 * dt * acc) / damp
    u_new = u + dt * v_half
    _zero_boundary(data, u_new)
    acc_new = data.laplacian(u_new) + lam * abs_power(u_new, coeff.p)
    _zero_boundary(data, acc_new)
    v_new = (v_half + 0.5 * dt * acc_new) / damp
    _zero_boundary(data, v_new)
    return FieldState(grid=state.grid, u=u_new, v=v_new, t=state.t + dt, dt=dt)


def _zero_boundary(data: _GridData, arr: np.ndarray) -> None:
    spec = data.spec
    if spec.geometry == "polar-sector":
        arr[-1, :] = 0.0
        arr[:, 0] = 0.0
        arr[:, -1] = 0.0
    elif spec.geometry == "radial":
        arr[-1] = 0.0
    else:
        arr[0] = 0.0
        arr[-1] = 0.0


def wave_energy(state: FieldState) -> float:
    """Standard discrete energy 1/2 ||v||^2 + 1/2 ||grad u||^2 (line grids)."""
    data = _grid_data(state.grid)
    du = np.diff(state.u) / data.h
    kin = 0.5 * float(np.sum(np.abs(state.v) ** 2)) * data.h
    pot = 0.5 * float(np.sum(np.abs(du) ** 2)) * data.h
    return kin + pot


@dataclass(frozen=True)
class RunControls:
    """Blowup-run policy: thresholds, horizons and the step-halving rule."""

    threshold: float = 1e6
    thresholds: tuple = (1e3, 1e4, 1e5, 1e6)
    t_max: float = 1e3
    dt_init: float | None = None
    dt_min: float | None = None  # default: 1e-3 * threshold^(1-p), the step the
    # growth rule needs right at the blowup threshold
    snapshot_dt: float = 0.0
    growth_limit: float = 0.2
    max_steps: int = 50_000_000

    def __post_init__(self):
        if self.threshold < 1e3:
            raise ValueError("blowup threshold must be at least 1e3")
        if self.t_max <= 0:
            raise ValueError("t_max must be positive")

    def dt_floor(self, p: float) -> float:
        if self.dt_min is not None:
            return self.dt_min
        return 1e-3 * self.threshold ** (1.0 - p)


@dataclass
class BlowupRecord:
    epsilon: float
    p: float
    tau: int
    alpha: float
    zeta: float
    status: str  # blowup | survived | stalled
    thresholds: tuple
    t_at_thresholds: tuple
    t_extrapolated: float
    dt_final: float
    h: float
    steps: int
    t_final: float
    boundary_max: float


@dataclass
class RunResult:
    problem: EvolutionProblem
    record: BlowupRecord
    snapshot_times: list
    snapshots: list


def _default_dt(problem: EvolutionProblem) -> float:
    h = _grid_data(problem.grid).h
    if problem.coeff.tau == 1:
        return 0.5 * h
    return h * h


def extrapolate_lifespan(thresholds, crossings, p: float) -> float:
    """Least-squares fit of T_M = T_inf - c * M^{-(p-1)} over recorded
    crossings; exact for the comparison equation u' = u^p."""
    pts = [(m, t) for m, t in zip(thresholds, crossings) if math.isfinite(t)]
    if not pts:
        return math.nan
    if len(pts) == 1:
        return pts[0][1]
    x = np.array([m ** (-(p - 1.0)) for m, _ in pts])
    t = np.array([t for _, t in pts])
    design = np.stack([np.ones_like(x), -x], axis=1)
    sol, *_ = np.linalg.lstsq(design, t, rcond=None)
    return float(sol[0])


def run_until_blowup(problem: EvolutionProblem, controls: RunControls) -> RunResult:
    """Integrate until max|u| crosses the blowup threshold, the horizon is
    reached, or the adaptive step collapses.

    The step is halved whenever one step would grow max|u| by more than the
    growth limit (20% by default) or produce non-finite values; crossing
    times of the intermediate thresholds are recorded by log-linear
    interpolation and extrapolated to the lifespan estimate.
    """
    coeff = problem.coeff
    dt0 = controls.dt_init if controls.dt_init is not None else _default_dt(problem)
    data = _grid_data(problem.grid)
    if coeff.tau == 1:
        dt0 = min(dt0, 0.9 * data.h)
    state = initial_state(problem, dt0)
    stepper = step_hyperbolic if coeff.tau == 1 else step_parabolic

    thresholds = tuple(sorted(set(controls.thresholds) | {controls.threshold}))
    crossings = [math.nan] * len(thresholds)
    snap_times = [0.0]
    snaps = [state.u.copy()]
    next_snap = controls.snapshot_dt if controls.snapshot_dt > 0 else math.inf

    dt_floor = controls.dt_floor(coeff.p)
    m_prev = max_abs(state.u)
    steps = 0
    attempts = 0
    status = None
    while True:
        if state.t >= controls.t_max:
            status = "survived"
            break
        attempts += 1
        if attempts > controls.max_steps:
            raise RuntimeError("step budget exhausted before a verdict was reached")
        trial = stepper(state, coeff, min(state.dt, controls.t_max - state.t + 1e-15))
        m_new = max_abs(trial.u)
        if not math.isfinite(m_new) or (
            m_prev > 0 and m_new > (1.0 + controls.growth_limit) * m_prev
        ):
            if state.dt / 2.0 < dt_floor:
                status = "stalled"
                break
            state.dt /= 2.0
            continue
        steps += 1
        for i, mth in enumerate(thresholds):
            if math.isnan(crossings[i]) and m_new >= mth:
                if m_prev > 0 and m_new > m_prev:
                    frac = (math.log(mth) - math.log(m_prev)) / (
                        math.log(m_new) - math.log(m_prev)
                    )
                    frac = min(max(frac, 0.0), 1.0)
                else:
                    frac = 1.0
                crossings[i] = state.t + frac * (trial.t - state.t)
        state = trial
        m_prev = m_new
        if state.t >= next_snap:
            snap_times.append(state.t)
            snaps.append(state.u.copy())
            next_snap += controls.snapshot_dt
        if m_new >= controls.threshold:
            status = "blowup"
            break

    if snap_times[-1] != state.t:
        snap_times.append(state.t)
        snaps.append(state.u.copy())

    if state.u.ndim == 1:
        boundary = float(np.max(np.abs(state.u[data.adjacent])))
    else:
        boundary = float(np.max(np.abs(state.u[-2, :])))  # row next to the truncated arc
    t_ext = math.nan
    if status == "blowup":
        t_ext = extrapolate_lifespan(thresholds, crossings, coeff.p)
    record = BlowupRecord(
        epsilon=problem.init.epsilon,
        p=coeff.p,
        tau=coeff.tau,
        alpha=coeff.alpha,
        zeta=coeff.zeta,
        status=status,
        thresholds=thresholds,
        t_at_thresholds=tuple(crossings),
        t_extrapolated=t_ext,
        dt_final=state.dt,
        h=data.h,
        steps=steps,
        t_final=state.t,
        boundary_max=boundary,
    )
    return RunResult(problem=problem, record=record, snapshot_times=snap_times, snapshots=snaps)


def weighted_initial_mass(problem: EvolutionProblem) -> float:
    """The positive initial-mass lower bound delta fed to the criterion.

    tau=0: eps * |lambda^{-1} integral(f Phi)| (the rotated projection the
    weak formulation extracts).  tau=1: eps * integral((g + a f) Phi).
    """
    grid, init, coeff = problem.grid, problem.init, problem.coeff
    data = _grid_data(grid)
    phi = weight_values(grid)
    prof = bump_profile((data.coords - init.center) / init.width) if grid.geometry != "polar-sector" else None
    if prof is None:
        raise ValueError("initial mass helper supports one-dimensional geometries")
    f_int = complex(np.sum(init.amplitude * prof * phi * data.vol))
    if coeff.tau == 0:
        return init.epsilon * abs(f_int / coeff.lam)
    a_vals = coeff.damping(data.radius)
    g_int = complex(np.sum(init.g_amplitude * prof * phi * data.vol))
    af_int = complex(np.sum(init.amplitude * prof * a_vals * phi * data.vol))
    return init.epsilon * float((g_int + af_int).real)


def first_admissible_radius(init: InitialDataSpec, alpha: float) -> float:
    """Smallest R with psi_R = 1 on the data support at t=0."""
    return 2.0 * (1.0 + init.support_radius() ** 2) ** ((2.0 - alpha) / 2.0)


def functional_trace(
    result: RunResult,
    fam: CutoffFamily,
    radii,
    refine_tol: float = 0.02,
) -> FunctionalTrace:
    """Space-time cutoff masses of w = |u|^p * Phi along the run snapshots.

    Trapezoid in time over the stored snapshots, grid quadrature in space.
    A half-density recomputation must agree to ``refine_tol`` relative on the
    final masses, otherwise the snapshots undersample the run.
    """
    radii = np.asarray(radii, dtype=float)
    times = np.asarray(result.snapshot_times)
    if len(times) < 4:
        raise ValueError("need at least 4 snapshots for the time quadrature")
    if times[0] > max(radii.min() - 1.0, 0.0):
        raise ValueError("cutoff support lies entirely before the first snapshot")
    grid = result.problem.grid
    data = _grid_data(grid)
    phi = weight_values(grid)
    p = result.problem.coeff.p
    bp = (1.0 + data.radius**2) ** ((2.0 - fam.alpha) / 2.0)
    wvol = phi * data.vol

    def masses(stride: int):
        idxs = list(range(0, len(times), stride))
        if idxs[-1] != len(times) - 1:
            idxs.append(len(times) - 1)
        ts_used = times[idxs]
        dens = [abs_power(result.snapshots[i], p) * wvol for i in idxs]
        y_rows = np.empty((len(radii), len(idxs)))
        m_rows = np.empty_like(y_rows)
        for i, radius in enumerate(radii):
            for k, (t, w) in enumerate(zip(ts_used, dens)):
                s = (bp + t) / radius
                y_rows[i, k] = float(np.sum(w * psi_star_of_s(fam, s)))
                m_rows[i, k] = float(np.sum(w * psi_of_s(fam, s)))
        y = np.trapezoid(y_rows, ts_used, axis=1)
        m = np.trapezoid(m_rows, ts_used, axis=1)
        return y, m

    y_full, m_full = masses(1)
    y_half, m_half = masses(2)
    scale = max(float(np.max(m_full)), 1e-300)
    if np.max(np.abs(m_full - m_half)) > refine_tol * scale or np.max(
        np.abs(y_full - y_half)
    ) > refine_tol * scale:
        raise ValueError("snapshot density insufficient for the trace quadrature")
    return FunctionalTrace(radii=radii, shell_mass=y_full, mass=m_full)
