import math

import numpy as np
import pytest

from blowlab.cutoffs import CutoffFamily
from blowlab.lifespan_bounds import integrate_shell_masses
from blowlab.solvers import (
    CoefficientSpec,
    EvolutionProblem,
    FieldState,
    GridSpec,
    InitialDataSpec,
    RunControls,
    abs_power,
    bump_profile,
    discrete_laplacian,
    domain_for_grid,
    extrapolate_lifespan,
    first_admissible_radius,
    functional_trace,
    grid_coordinates,
    initial_state,
    run_until_blowup,
    step_hyperbolic,
    step_parabolic,
    wave_energy,
    weight_values,
    weighted_initial_mass,
)
from blowlab.solvers import _grid_data


HEAT = CoefficientSpec(tau=0, p=2.0, lam=1.0, a_phase=0.0)
FREE_HEAT = CoefficientSpec(tau=0, p=2.0, lam=0.0, a_phase=0.0)
FREE_SCHROD = CoefficientSpec(tau=0, p=2.0, lam=0.0, a_phase=math.pi / 2)
WAVE = CoefficientSpec(tau=1, p=2.0, lam=0.0, a0=0.0)
DAMPED = CoefficientSpec(tau=1, p=2.0, lam=1.0, a0=1.0, alpha=0.0)


def test_coefficient_spec_validation():
    with pytest.raises(ValueError):
        CoefficientSpec(tau=2, p=2.0)
    with pytest.raises(ValueError):
        CoefficientSpec(tau=0, p=1.0, a_phase=0.0)
    with pytest.raises(ValueError):
        CoefficientSpec(tau=0, p=2.0)  # missing phase
    with pytest.raises(ValueError):
        CoefficientSpec(tau=0, p=2.0, a_phase=2.0)  # phase out of range
    with pytest.raises(ValueError):
        CoefficientSpec(tau=0, p=2.0, a_phase=0.0, a0=1.0)
    with pytest.raises(ValueError):
        CoefficientSpec(tau=1, p=2.0)  # no damping form
    with pytest.raises(ValueError):
        CoefficientSpec(tau=1, p=2.0, a0=1.0, v0=1.0)  # two forms
    with pytest.raises(ValueError):
        CoefficientSpec(tau=1, p=2.0, a0=1.0, alpha=1.5)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec("circle", 10.0, 100)
    with pytest.raises(ValueError):
        GridSpec("line", -1.0, 100)
    with pytest.raises(ValueError):
        GridSpec("polar-sector", 10.0, 100)  # missing omega
    with pytest.raises(ValueError):
        EvolutionProblem(
            HEAT,
            GridSpec("line", 10.0, 101),
            InitialDataSpec(center=0.0, width=6.0, epsilon=1.0),
        )  # support sticks out


def test_laplacian_line_eigenfunction():
    grid = GridSpec("line", extent=10.0, num_points=401)
    x = grid_coordinates(grid)
    u = np.sin(math.pi * (x + 5.0) / 10.0)
    state = FieldState(grid=grid, u=u, v=None, t=0.0, dt=0.01)
    lap = discrete_laplacian(state)
    expected = -((math.pi / 10.0) ** 2) * u
    err = np.max(np.abs(lap[1:-1] - expected[1:-1]))
    assert err < 1e-3
    zero = FieldState(grid=grid, u=np.zeros_like(u), v=None, t=0.0, dt=0.01)
    assert np.all(discrete_laplacian(zero) == 0.0)


def test_laplacian_radial_convergence_order():
    # u = sin(pi r / L)/r is a Laplacian eigenfunction in 3-d
    errs = []
    for n in (201, 401):
        grid = GridSpec("radial", extent=10.0, num_points=n, dim=3)
        r = grid_coordinates(grid)
        u = np.ones_like(r)
        u[1:] = np.sin(math.pi * r[1:] / 10.0) / r[1:] * (10.0 / math.pi)
        state = FieldState(grid=grid, u=u, v=None, t=0.0, dt=0.01)
        lap = discrete_laplacian(state)
        expected = -((math.pi / 10.0) ** 2) * u
        errs.append(np.max(np.abs(lap[1:-1] - expected[1:-1])))
    assert errs[0] / errs[1] >= 2.0**1.8


def test_laplacian_polar_sector_weight_harmonic():
    omega = 3 * math.pi / 4
    grid = GridSpec("polar-sector", extent=4.0, num_points=160, omega=omega, num_angles=96)
    w = weight_values(grid)
    state = FieldState(grid=grid, u=w, v=None, t=0.0, dt=0.01)
    lap = discrete_laplacian(state)
    # harmonic weight: interior residual small relative to the weight scale,
    # away from the corner where the grid resolution limits accuracy
    interior = np.abs(lap[40:-8, 8:-8])
    assert np.max(interior) < 2e-2


def test_heat_max_norm_non_increasing():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    state = initial_state(EvolutionProblem(FREE_HEAT, grid, init), dt=0.05**2)
    prev = np.max(np.abs(state.u))
    for _ in range(150):
        state = step_parabolic(state, FREE_HEAT, state.dt)
        cur = np.max(np.abs(state.u))
        assert cur <= prev + 1e-14
        prev = cur


def test_heat_positivity():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    state = initial_state(EvolutionProblem(HEAT, grid, init), dt=2e-3)
    for _ in range(300):
        state = step_parabolic(state, HEAT, state.dt)
        assert float(np.min(state.u.real)) >= -1e-12


def test_schrodinger_norm_conserved():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    state = initial_state(EvolutionProblem(FREE_SCHROD, grid, init), dt=0.01)
    h = _grid_data(grid).h
    norm0 = float(np.sum(np.abs(state.u) ** 2)) * h
    prev = norm0
    for _ in range(200):
        state = step_parabolic(state, FREE_SCHROD, state.dt)
        cur = float(np.sum(np.abs(state.u) ** 2)) * h
        assert abs(cur - prev) <= 1e-12 * norm0
        prev = cur


def test_parabolic_heat_ode_regime_blowup_time():
    # wide bump, eps*amp = 2: comparison equation u' = u^2 gives T = 0.5
    grid = GridSpec("line", extent=60.0, num_points=1201)
    init = InitialDataSpec(center=0.0, width=8.0, epsilon=2.0)
    controls = RunControls(threshold=1e6, t_max=5.0, dt_init=1e-3)
    res = run_until_blowup(EvolutionProblem(HEAT, grid, init), controls)
    rec = res.record
    assert rec.status == "blowup"
    crossings = [t for t in rec.t_at_thresholds if math.isfinite(t)]
    assert all(b >= a for a, b in zip(crossings, crossings[1:]))
    assert crossings[-1] - crossings[0] < 0.01  # Cauchy tail near the blowup
    assert rec.t_extrapolated == pytest.approx(0.5, rel=0.10)


def test_wave_staggered_energy_invariant():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0, g_amplitude=0.5)
    dt = 0.4 * _grid_data(grid).h
    state = initial_state(EvolutionProblem(WAVE, grid, init), dt=dt)
    data = _grid_data(grid)
    h = data.h

    def staggered(u, v):
        vh = v + 0.5 * dt * data.laplacian(u)
        u1 = u + dt * vh
        return 0.5 * np.sum(vh * vh) * h - 0.5 * np.sum(u * data.laplacian(u1)) * h

    e0 = staggered(state.u, state.v)
    worst = 0.0
    for _ in range(10_000):
        state = step_hyperbolic(state, WAVE, state.dt)
        worst = max(worst, abs(staggered(state.u, state.v) - e0))
    assert worst <= 1e-10 * e0


def test_damped_wave_energy_dissipates():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0, g_amplitude=0.5)
    damped_free = CoefficientSpec(tau=1, p=2.0, lam=0.0, a0=1.0, alpha=0.0)
    state = initial_state(EvolutionProblem(damped_free, grid, init), dt=0.4 * 0.05)
    prev = wave_energy(state)
    for _ in range(2000):
        state = step_hyperbolic(state, damped_free, state.dt)
        cur = wave_energy(state)
        assert cur <= prev * (1.0 + 1e-12)
        prev = cur


def test_hyperbolic_cfl_rejected():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    state = initial_state(EvolutionProblem(WAVE, grid, init), dt=0.01)
    with pytest.raises(ValueError):
        step_hyperbolic(state, WAVE, 0.06)  # 0.9*h = 0.045


def test_damped_wave_blowup_monotone_in_epsilon():
    grid = GridSpec("line", extent=60.0, num_points=1501)
    controls = RunControls(threshold=1e6, t_max=50.0, dt_init=0.9 * 0.04)
    times = []
    for eps in (3.0, 4.0, 5.0):
        init = InitialDataSpec(center=0.0, width=0.8, epsilon=eps, g_amplitude=1.0)
        res = run_until_blowup(EvolutionProblem(DAMPED, grid, init), controls)
        assert res.record.status == "blowup"
        times.append(res.record.t_extrapolated)
    assert times[0] > times[1] > times[2]


def test_singular_damping_radial_run():
    coeff = CoefficientSpec(tau=1, p=2.0, lam=1.0, v0=1.0)
    grid = GridSpec("radial", extent=30.0, num_points=1501, dim=3, include_origin=False)
    init = InitialDataSpec(center=3.0, width=1.0, epsilon=8.0, g_amplitude=1.0)
    controls = RunControls(threshold=1e6, t_max=30.0, dt_init=0.9 * 0.02)
    res = run_until_blowup(EvolutionProblem(coeff, grid, init), controls)
    assert res.record.status == "blowup"
    with pytest.raises(ValueError):
        EvolutionProblem(coeff, GridSpec("radial", 30.0, 1501, dim=3), init)


def test_linear_heat_survives():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    controls = RunControls(threshold=1e6, t_max=0.5, dt_init=1e-3)
    res = run_until_blowup(EvolutionProblem(FREE_HEAT, grid, init), controls)
    assert res.record.status == "survived"
    assert math.isnan(res.record.t_extrapolated)


def test_supercritical_small_data_survives():
    coeff = CoefficientSpec(tau=0, p=4.0, lam=1.0, a_phase=0.0)
    grid = GridSpec("line", extent=60.0, num_points=1201)
    init = InitialDataSpec(center=0.0, width=1.0, epsilon=0.05)
    controls = RunControls(threshold=1e6, t_max=15.0, dt_init=2.5e-3)
    res = run_until_blowup(EvolutionProblem(coeff, grid, init), controls)
    assert res.record.status == "survived"
    assert res.record.boundary_max < 1e-8


def test_symmetry_preserved_on_line():
    grid = GridSpec("line", extent=30.0, num_points=601)
    init = InitialDataSpec(center=0.0, width=1.5, epsilon=0.8)
    state = initial_state(EvolutionProblem(HEAT, grid, init), dt=1e-3)
    for _ in range(500):
        state = step_parabolic(state, HEAT, state.dt)
    asym = np.max(np.abs(state.u - state.u[::-1]))
    assert asym <= 1e-12 * np.max(np.abs(state.u))


def test_refinement_shifts_lifespan_under_3_percent():
    # the subcritical-heat acceptance configuration at its fastest epsilon,
    # h = 0.02 against h = 0.01
    controls = RunControls(threshold=1e6, t_max=30.0, dt_init=2e-3)
    estimates = []
    for n in (9001, 18001):
        grid = GridSpec("line", extent=180.0, num_points=n)
        init = InitialDataSpec(center=0.0, width=1.0, epsilon=0.7)
        res = run_until_blowup(EvolutionProblem(HEAT, grid, init), controls)
        assert res.record.status == "blowup"
        estimates.append(res.record.t_extrapolated)
    assert abs(estimates[0] - estimates[1]) <= 0.03 * estimates[1]


def test_extrapolation_exact_for_comparison_ode():
    # T_M = T_inf - M^{-(p-1)}/(p-1) exactly for u' = u^p
    p = 2.0
    t_inf = 2.0
    thresholds = (1e3, 1e4, 1e5, 1e6)
    crossings = tuple(t_inf - m ** (-(p - 1.0)) / (p - 1.0) for m in thresholds)
    assert extrapolate_lifespan(thresholds, crossings, p) == pytest.approx(t_inf, abs=1e-12)


def test_weighted_initial_mass_line_and_halfline():
    grid = GridSpec("line", extent=40.0, num_points=2001)
    init = InitialDataSpec(center=0.0, width=1.0, epsilon=0.5)
    mass = weighted_initial_mass(EvolutionProblem(HEAT, grid, init))
    data = _grid_data(grid)
    direct = 0.5 * float(np.sum(bump_profile(data.coords) * data.h))
    assert mass == pytest.approx(direct, rel=1e-12)
    # half line: weight is x
    gridh = GridSpec("half-line", extent=40.0, num_points=2001)
    inith = InitialDataSpec(center=5.0, width=1.0, epsilon=0.5)
    massh = weighted_initial_mass(EvolutionProblem(HEAT, gridh, inith))
    datah = _grid_data(gridh)
    directh = 0.5 * float(
        np.sum(bump_profile((datah.coords - 5.0)) * datah.coords * datah.h)
    )
    assert massh == pytest.approx(directh, rel=1e-12)


def test_first_admissible_radius():
    init = InitialDataSpec(center=0.0, width=1.0, epsilon=1.0)
    assert first_admissible_radius(init, 0.0) == pytest.approx(4.0)
    assert first_admissible_radius(init, 1.0) == pytest.approx(2.0 * math.sqrt(2.0))


@pytest.fixture(scope="module")
def heat_blowup_run():
    grid = GridSpec("line", extent=80.0, num_points=2001)
    init = InitialDataSpec(center=0.0, width=1.0, epsilon=0.5)
    controls = RunControls(threshold=1e6, t_max=60.0, dt_init=2e-3, snapshot_dt=0.05)
    return run_until_blowup(EvolutionProblem(HEAT, grid, init), controls)


def test_functional_trace_zero_field():
    grid = GridSpec("line", extent=20.0, num_points=401)
    init = InitialDataSpec(center=0.0, width=2.0, epsilon=1.0)
    controls = RunControls(threshold=1e6, t_max=1.0, dt_init=2e-3, snapshot_dt=0.02)
    res = run_until_blowup(EvolutionProblem(FREE_HEAT, grid, init), controls)
    res.snapshots = [np.zeros_like(s) for s in res.snapshots]
    fam = CutoffFamily(R=4.0, p=2.0, alpha=0.0)
    tr = functional_trace(res, fam, [4.0, 8.0, 16.0])
    assert np.all(tr.shell_mass == 0.0) and np.all(tr.mass == 0.0)


def test_functional_trace_masses_and_transform(heat_blowup_run):
    res = heat_blowup_run
    fam = CutoffFamily(R=4.0, p=2.0, alpha=0.0)
    radii = np.geomspace(4.0, 0.9 * res.record.t_extrapolated, 8)
    tr = functional_trace(res, fam, radii)
    assert np.all(np.diff(tr.mass) >= -1e-12)
    assert np.all(np.diff(tr.shell_mass) >= -1e-12)
    transform = integrate_shell_masses(tr)
    assert np.all(transform <= math.log(2.0) * tr.mass + 1e-9)


def test_functional_trace_flags_support_before_first_snapshot(heat_blowup_run):
    res = heat_blowup_run
    clipped_times = [t for t in res.snapshot_times if t > 8.0]
    k = len(res.snapshot_times) - len(clipped_times)
    import copy

    res2 = copy.copy(res)
    res2.snapshot_times = clipped_times
    res2.snapshots = res.snapshots[k:]
    fam = CutoffFamily(R=4.0, p=2.0, alpha=0.0)
    with pytest.raises(ValueError):
        functional_trace(res2, fam, [4.0])


def test_functional_trace_flags_sparse_snapshots(heat_blowup_run):
    res = heat_blowup_run
    import copy

    res2 = copy.copy(res)
    res2.snapshot_times = res.snapshot_times[::40]
    res2.snapshots = res.snapshots[::40]
    fam = CutoffFamily(R=4.0, p=2.0, alpha=0.0)
    with pytest.raises(ValueError):
        functional_trace(res2, fam, np.geomspace(4.0, 12.0, 5))


def test_boundary_hygiene_on_blowup_run(heat_blowup_run):
    assert heat_blowup_run.record.status == "blowup"
    assert heat_blowup_run.record.boundary_max < 1e-8


def test_abs_power_matches_generic():
    rng = np.random.default_rng(0)
    z = rng.normal(size=50) + 1j * rng.normal(size=50)
    for p in (2.0, 3.0, 4.0, 2.7):
        assert np.allclose(abs_power(z, p), np.abs(z) ** p, rtol=1e-13)


def test_domain_for_grid():
    assert domain_for_grid(GridSpec("line", 10.0, 101)).spec.kind == "full-line"
    assert domain_for_grid(GridSpec("half-line", 10.0, 101)).spec.kind == "half-line"
    assert domain_for_grid(GridSpec("radial", 10.0, 101, dim=3)).spec.kind == "full-sphere"
    dom = domain_for_grid(GridSpec("polar-sector", 10.0, 101, omega=1.0, num_angles=21))
    assert dom.spec.kind == "planar-sector"


def test_polar_sector_smoke_steps():
    grid = GridSpec("polar-sector", extent=6.0, num_points=60, omega=2.0, num_angles=40)
    coeff = CoefficientSpec(tau=0, p=2.0, lam=1.0, a_phase=0.0)
    init = InitialDataSpec(center=2.0, width=1.0, epsilon=0.5)
    state = initial_state(EvolutionProblem(coeff, grid, init), dt=2e-3)
    for _ in range(20):
        state = step_parabolic(state, coeff, state.dt)
    assert np.all(np.isfinite(state.u))
    assert np.all(state.u[-1, :] == 0.0)
    assert np.all(state.u[:, 0] == 0.0)
    assert np.all(state.u[:, -1] == 0.0)
    # hyperbolic smoke
    coeffw = CoefficientSpec(tau=1, p=2.0, lam=1.0, a0=1.0, alpha=0.5)
    statew = initial_state(EvolutionProblem(coeffw, grid, init), dt=0.04)
    for _ in range(20):
        statew = step_hyperbolic(statew, coeffw, statew.dt)
    assert np.all(np.isfinite(statew.u))
