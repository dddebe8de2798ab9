import math

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal
from scipy.special import jn_zeros

from blowlab.cone_geometry import (
    BumpField,
    ConeDomain,
    CrossSectionSpec,
    WeightPhi,
    cap_eigenvalue,
    fujita_threshold,
    gamma_root,
    hardy_constant,
    hardy_ratio,
    harmonic_residual,
    make_domain,
    phi_eval,
    sector_eigenvalue,
)


def test_gamma_root_values():
    assert gamma_root(1, 0.0) == pytest.approx(1.0, abs=1e-15)  # half-line
    assert gamma_root(3, 2.0) == pytest.approx(1.0, abs=1e-14)
    assert gamma_root(5, 0.0) == 0.0


@pytest.mark.parametrize("dim,lam", [(1, 0.0), (2, 4.0), (3, 2.0), (4, 7.3), (7, 0.2)])
def test_gamma_root_solves_quadratic(dim, lam):
    g = gamma_root(dim, lam)
    residual = g * g + (dim - 2) * g - lam
    assert abs(residual) <= 1e-12 * max(1.0, lam)


def test_make_domain_closed_forms():
    d = make_domain(CrossSectionSpec("full-sphere", 3))
    assert d.lambda_sigma == 0.0 and d.gamma == 0.0

    d = make_domain(CrossSectionSpec("half-space-product", 2, k=2))
    assert d.lambda_sigma == pytest.approx(4.0) and d.gamma == pytest.approx(2.0)

    d = make_domain(CrossSectionSpec("planar-sector", 2, omega=math.pi / 2))
    assert d.lambda_sigma == pytest.approx(4.0) and d.gamma == pytest.approx(2.0)


def test_eigenvalue_positive_iff_proper_cross_section():
    zero_kinds = [
        CrossSectionSpec("full-sphere", 2),
        CrossSectionSpec("full-sphere", 4),
        CrossSectionSpec("full-line", 1),
        CrossSectionSpec("half-space-product", 3, k=0),
    ]
    for spec in zero_kinds:
        assert make_domain(spec).lambda_sigma == 0.0
    positive_kinds = [
        CrossSectionSpec("planar-sector", 2, omega=2.0),
        CrossSectionSpec("spherical-cap", 3, theta0=2.5),
        CrossSectionSpec("half-space-product", 3, k=1),
    ]
    for spec in positive_kinds:
        assert make_domain(spec).lambda_sigma > 0.0


def test_make_domain_rejects_bad_specs():
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("half-line", 2))
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("planar-sector", 3, omega=1.0))
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("planar-sector", 2, omega=-1.0))
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("spherical-cap", 3, theta0=0.0))
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("half-space-product", 2, k=5))
    with pytest.raises(ValueError):
        make_domain(CrossSectionSpec("no-such-kind", 2))


def test_sector_eigenvalue_values_and_scaling():
    assert sector_eigenvalue(math.pi) == pytest.approx(1.0)
    assert sector_eigenvalue(math.pi / 2) == pytest.approx(4.0)
    for omega in (0.3, 1.0, 2.2, 2 * math.pi):
        assert sector_eigenvalue(omega) * omega**2 == pytest.approx(math.pi**2)
    with pytest.raises(ValueError):
        sector_eigenvalue(0.0)
    with pytest.raises(ValueError):
        sector_eigenvalue(7.0)


def _cap_eigenvalue_fd(theta0: float, n: int = 6000) -> float:
    """Finite-volume discretization of (sin(t) u')' + lam sin(t) u = 0 with
    u'(0)=0, u(theta0)=0; independent oracle for the shooting solver."""
    h = theta0 / n
    centers = (np.arange(n) + 0.5) * h
    faces = np.arange(n + 1) * h
    sf = np.sin(faces)
    main = (sf[:-1] + sf[1:]) / h**2
    main[-1] = (sf[-2] + 2.0 * sf[-1]) / h**2  # Dirichlet face is h/2 from the last center
    off = -sf[1:-1] / h**2
    m = np.sin(centers)
    # symmetrize: B = M^(-1/2) A M^(-1/2), tridiagonal
    d = main / m
    e = off / np.sqrt(m[:-1] * m[1:])
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0]
    return float(vals[0])


def test_cap_eigenvalue_hemisphere():
    assert cap_eigenvalue(math.pi / 2) == pytest.approx(2.0, abs=1e-8)


def test_cap_eigenvalue_small_angle():
    lam = cap_eigenvalue(0.1)
    bessel = (jn_zeros(0, 1)[0] / 0.1) ** 2
    assert lam == pytest.approx(bessel, rel=0.05)
    assert lam == pytest.approx(_cap_eigenvalue_fd(0.1), rel=1e-5)


@pytest.mark.parametrize("theta0", [0.7, 1.9, 2.8])
def test_cap_eigenvalue_against_fd_oracle(theta0):
    assert cap_eigenvalue(theta0) == pytest.approx(_cap_eigenvalue_fd(theta0), rel=1e-5)


def test_cap_eigenvalue_vanishes_monotonically_toward_full_sphere():
    lams = [cap_eigenvalue(t) for t in (2.5, 2.9, 3.1)]
    assert lams[0] > lams[1] > lams[2] > 0.0
    assert lams[2] < 0.2


def test_phi_eval_quarter_plane_product():
    w = WeightPhi(make_domain(CrossSectionSpec("half-space-product", 2, k=2)))
    assert phi_eval(w, [1.0, 1.0]) == pytest.approx(1.0)
    assert phi_eval(w, [2.0, 3.0]) == pytest.approx(6.0)
    with pytest.raises(ValueError):
        phi_eval(w, [-1.0, 1.0])


def test_phi_eval_line_cases():
    half = WeightPhi(make_domain(CrossSectionSpec("half-line", 1)))
    assert phi_eval(half, [3.0]) == pytest.approx(3.0)
    assert phi_eval(half, [0.0]) == 0.0
    with pytest.raises(ValueError):
        phi_eval(half, [-0.5])

    full = WeightPhi(make_domain(CrossSectionSpec("full-line", 1)))
    assert phi_eval(full, [-2.0]) == 1.0
    assert phi_eval(full, [0.0]) == 1.0


def test_phi_eval_full_sphere_constant():
    w = WeightPhi(make_domain(CrossSectionSpec("full-sphere", 2)))
    for x in ([0.3, -0.4], [5.0, 1.0], [0.0, 0.0]):
        assert phi_eval(w, x) == pytest.approx(1.0)


def test_phi_boundary_zero():
    sector = WeightPhi(make_domain(CrossSectionSpec("planar-sector", 2, omega=2.0)))
    assert phi_eval(sector, [1.5, 0.0]) == pytest.approx(0.0, abs=1e-14)
    cap = WeightPhi(make_domain(CrossSectionSpec("spherical-cap", 3, theta0=1.0)))
    edge = [math.sin(1.0), 0.0, math.cos(1.0)]
    assert phi_eval(cap, edge) == pytest.approx(0.0, abs=1e-9)


def test_harmonic_residual_exact_for_bilinear():
    w = WeightPhi(make_domain(CrossSectionSpec("half-space-product", 2, k=2)))
    for h in (0.1, 0.01):
        lap, euler = harmonic_residual(w, [1.0, 2.0], h)
        assert lap < 1e-10
        assert euler < 1e-10


def test_harmonic_residual_half_line_euler_exact():
    w = WeightPhi(make_domain(CrossSectionSpec("half-line", 1)))
    lap, euler = harmonic_residual(w, [2.0], 0.25)
    assert lap == pytest.approx(0.0, abs=1e-13)
    assert euler == pytest.approx(0.0, abs=1e-13)


@pytest.mark.parametrize(
    "spec,point,h0",
    [
        (CrossSectionSpec("planar-sector", 2, omega=3 * math.pi / 4), (1.0, 0.3), 1e-2),
        (CrossSectionSpec("planar-sector", 2, omega=2.0), (1.3, 0.55), 1e-2),
        (CrossSectionSpec("spherical-cap", 3, theta0=1.0), (0.25, 0.1, 0.9), 2e-2),
    ],
)
def test_harmonic_residual_second_order(spec, point, h0):
    # generic interior points: symmetry axes can null the leading error term
    dom = make_domain(spec)
    w = WeightPhi(dom)
    if spec.kind == "planar-sector":
        r, theta = point
        x = np.array([r * math.cos(theta * spec.omega), r * math.sin(theta * spec.omega)])
    else:
        x = np.asarray(point, dtype=float)
    lap_c, euler_c = harmonic_residual(w, x, h0)
    lap_f, euler_f = harmonic_residual(w, x, h0 / 2)
    assert lap_c / lap_f >= 2.0**1.8
    assert euler_c / euler_f >= 2.0**1.8


def test_harmonic_residual_rejects_stencil_outside():
    w = WeightPhi(make_domain(CrossSectionSpec("half-space-product", 2, k=2)))
    with pytest.raises(ValueError):
        harmonic_residual(w, [0.05, 1.0], 0.1)


def _random_bump(dom: ConeDomain, rng: np.random.Generator) -> BumpField:
    kind = dom.spec.kind
    if kind == "full-sphere":
        direction = rng.normal(size=dom.dim)
        direction /= np.linalg.norm(direction)
        dist = rng.uniform(0.5, 2.0)
        center = direction * dist
        radius = dist * rng.uniform(0.25, 0.6)
    elif kind == "half-space-product":
        center = rng.uniform(0.8, 3.0, size=dom.dim)
        radius = float(np.min(center[: dom.spec.k])) * rng.uniform(0.3, 0.7)
    elif kind == "half-line":
        c = rng.uniform(1.0, 4.0)
        center = np.array([c])
        radius = c * rng.uniform(0.3, 0.7)
    else:
        raise ValueError(kind)
    return BumpField(center=center, radius=radius, amplitude=rng.uniform(0.5, 2.0))


def test_hardy_ratio_radial_bump_full_sphere():
    dom = make_domain(CrossSectionSpec("full-sphere", 3))
    bump = BumpField(center=np.array([1.0, 0.0, 0.0]), radius=0.55)
    assert hardy_ratio(dom, bump, n=40) >= 0.25 - 1e-6


def test_hardy_ratio_randomized_quarter_plane():
    dom = make_domain(CrossSectionSpec("half-space-product", 2, k=2))
    rng = np.random.default_rng(42)
    bound = hardy_constant(dom)
    for _ in range(120):
        assert hardy_ratio(dom, _random_bump(dom, rng), n=32) >= bound - 1e-6


def test_hardy_ratio_rejects_zero_field():
    dom = make_domain(CrossSectionSpec("full-sphere", 3))
    zero = BumpField(center=np.zeros(3), radius=0.5, amplitude=0.0)
    with pytest.raises(ValueError):
        hardy_ratio(dom, zero)


class _NearOptimizer:
    """phi(angle) * cos^2 log-radial bump on the quarter-plane; its quotient
    approaches the sharp constant as the log-width grows."""

    def __init__(self, log_width: float):
        self.log_width = log_width

    def support_box(self):
        hi = math.exp(self.log_width)
        return np.zeros(2), np.array([hi, hi])

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        inside = (r > math.exp(-self.log_width)) & (r < math.exp(self.log_width))
        safe_r2 = np.where(r > 0, r * r, 1.0)
        angular = np.where(r > 0, pts[..., 0] * pts[..., 1] / safe_r2, 0.0)
        chi = np.cos(np.pi * np.log(np.where(inside, r, 1.0)) / (2 * self.log_width)) ** 2
        return np.where(inside, angular * chi, 0.0)


def test_hardy_ratio_near_optimizer():
    dom = make_domain(CrossSectionSpec("half-space-product", 2, k=2))
    ratio = hardy_ratio(dom, _NearOptimizer(2.0), n=600)
    const = hardy_constant(dom)
    assert const - 1e-6 <= ratio <= 1.25 * const


def test_fujita_threshold_values():
    assert fujita_threshold(1, 0.0, 0.0) == pytest.approx(3.0)
    assert fujita_threshold(3, 0.0, 1.0) == pytest.approx(2.0)  # = (N+1)/(N-1)
    assert fujita_threshold(2, 2.0, 0.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        fujita_threshold(1, 0.0, 1.5)


def test_fujita_threshold_monotonicity():
    base = fujita_threshold(2, 1.0, 0.5)
    assert fujita_threshold(3, 1.0, 0.5) < base
    assert fujita_threshold(2, 2.0, 0.5) < base
    assert fujita_threshold(2, 1.0, 1.0) > base
