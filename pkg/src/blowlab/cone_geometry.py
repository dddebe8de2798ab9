"""Cone-like domains: cross-section eigenvalues, homogeneity exponent, harmonic weight.

A cone-like domain is the set of rays through a cross-section of the unit
sphere.  Its first Dirichlet eigenvalue ``lambda_sigma`` on the cross-section
fixes the homogeneity exponent ``gamma`` (positive root of
``g^2 + (N-2)g - lambda_sigma = 0``) and the harmonic weight
``Phi(x) = |x|^gamma * phi(x/|x|)``, which vanishes on the cone boundary and
satisfies the Euler identity ``x . grad(Phi) = gamma * Phi``.

Supported cross-sections: full sphere, half/full line (N=1), planar sector,
spherical cap (N=3), and products of half-spaces with a full factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

VALID_KINDS = (
    "full-sphere",
    "half-line",
    "full-line",
    "planar-sector",
    "spherical-cap",
    "half-space-product",
)


@dataclass(frozen=True)
class CrossSectionSpec:
    """Which cross-section of the unit sphere the cone is built on.

    ``dim`` is the ambient spatial dimension N.  ``omega`` is the opening
    angle of a planar sector (radians, 0 < omega <= 2*pi), ``theta0`` the
    polar angle of a spherical cap (0 < theta0 <= pi), ``k`` the number of
    half-space factors (0 <= k <= N).
    """

    kind: str
    dim: int
    omega: float | None = None
    theta0: float | None = None
    k: int | None = None

    def validate(self) -> None:
        if self.kind not in VALID_KINDS:
            raise ValueError(f"unknown cross-section kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind in ("half-line", "full-line") and self.dim != 1:
            raise ValueError(f"{self.kind} requires N=1")
        if self.kind == "full-sphere" and self.dim < 2:
            raise ValueError("full-sphere requires N>=2 (use full-line for N=1)")
        if self.kind == "planar-sector":
            if self.dim != 2:
                raise ValueError("planar-sector requires N=2")
            if self.omega is None or not 0.0 < self.omega <= 2.0 * math.pi:
                raise ValueError("planar-sector needs opening angle in (0, 2*pi]")
        if self.kind == "spherical-cap":
            if self.dim != 3:
                raise ValueError("spherical-cap requires N=3")
            if self.theta0 is None or not 0.0 < self.theta0 <= math.pi:
                raise ValueError("spherical-cap needs polar angle in (0, pi]")
        if self.kind == "half-space-product":
            if self.k is None or not 0 <= self.k <= self.dim:
                raise ValueError("half-space-product needs integer k with 0 <= k <= N")


# Angular eigenfunction profiles.  Plain classes (not closures) so that
# domains survive pickling into worker processes.


@dataclass(frozen=True)
class ConstantProfile:
    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return np.ones(w.shape[:-1] if w.ndim > 1 else ())


@dataclass(frozen=True)
class SectorProfile:
    """sin(pi*theta/omega) on the arc 0 <= theta <= omega, sup-normalized."""

    omega: float

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        theta = np.arctan2(w[..., 1], w[..., 0]) % (2.0 * math.pi)
        return np.sin(math.pi * theta / self.omega)


@dataclass(frozen=True)
class CapProfile:
    """First Dirichlet mode of the cap, as a function of the polar angle.

    Normalized to 1 at the pole; evaluated through a spline fitted to the
    shooting solution, zero beyond the cap angle.
    """

    theta0: float
    _interp: Callable = field(compare=False)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        ct = np.clip(w[..., 2], -1.0, 1.0)
        theta = np.arccos(ct)
        vals = self._interp(np.minimum(theta, self.theta0))
        return np.where(theta >= self.theta0, 0.0, vals)


@dataclass(frozen=True)
class ProductProfile:
    """w_1 * ... * w_k on the spherical slice with those components positive."""

    k: int

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if self.k == 0:
            return np.ones(w.shape[:-1] if w.ndim > 1 else ())
        return np.prod(w[..., : self.k], axis=-1)


@dataclass(frozen=True)
class LineProfile:
    """N=1 profile: value at the two directions +-1 of the 0-sphere."""

    half: bool  # True for the half-line (only +1 admissible)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        s = w[..., 0] if w.ndim > 0 and w.shape[-1:] == (1,) else w
        if self.half:
            return np.where(np.asarray(s) > 0, 1.0, 0.0)
        return np.ones(np.shape(s))


@dataclass(frozen=True)
class ConeDomain:
    """A cone-like domain together with its spectral data.

    ``eigenfunction`` maps a unit vector (shape (..., N)) to the angular
    profile value; it is positive inside the cross-section and vanishes on
    its boundary.
    """

    spec: CrossSectionSpec
    lambda_sigma: float
    gamma: float
    eigenfunction: Callable

    @property
    def dim(self) -> int:
        return self.spec.dim

    def contains(self, x: np.ndarray) -> bool:
        """Whether ``x`` lies in the closed cone."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        kind = self.spec.kind
        if kind in ("full-sphere", "full-line"):
            return True
        if kind == "half-line":
            return bool(x[0] >= 0.0)
        if kind == "planar-sector":
            r = float(np.hypot(x[0], x[1]))
            if r == 0.0:
                return True
            theta = math.atan2(x[1], x[0]) % (2.0 * math.pi)
            return theta <= self.spec.omega + 1e-15
        if kind == "spherical-cap":
            r = float(np.linalg.norm(x))
            if r == 0.0:
                return True
            return math.acos(min(1.0, max(-1.0, x[2] / r))) <= self.spec.theta0 + 1e-15
        if kind == "half-space-product":
            return bool(np.all(x[: self.spec.k] >= 0.0))
        raise ValueError(kind)


@dataclass(frozen=True)
class WeightPhi:
    """The harmonic weight Phi(x) = |x|^gamma * phi(x/|x|).

    For N=1 the rule degenerates to Phi(x)=x on the half-line and Phi=1 on
    the full line (constant positive harmonic; the zero weight would
    annihilate every weighted functional).
    """

    domain: ConeDomain

    def __call__(self, x: np.ndarray) -> float:
        return phi_eval(self, x)


def gamma_root(dim: int, lambda_sigma: float) -> float:
    """Positive root of ``g^2 + (N-2)g - lambda_sigma = 0``.

    Gives 0 when ``lambda_sigma`` is 0 and N >= 2, and 1 for the half-line
    (N=1, lambda_sigma=0), where 0 and 1 are both roots and the positive one
    is taken.
    """
    if lambda_sigma < 0:
        raise ValueError("lambda_sigma must be nonnegative")
    b = dim - 2.0
    return 0.5 * (-b + math.sqrt(b * b + 4.0 * lambda_sigma))


def sector_eigenvalue(omega: float) -> float:
    """First Dirichlet eigenvalue of -d^2/dtheta^2 on the arc (0, omega)."""
    if not 0.0 < omega <= 2.0 * math.pi:
        raise ValueError("opening angle must lie in (0, 2*pi]")
    return (math.pi / omega) ** 2


def _cap_shoot(nu: float, theta0: float, dense: bool = False):
    """Integrate u'' + cot(theta) u' + nu(nu+1) u = 0 from a series start.

    The regular singular point at theta=0 is handled by the expansion
    u = 1 - lam*theta^2/4 + O(theta^4) started at theta=1e-4.
    """
    lam = nu * (nu + 1.0)
    t0 = 1e-4
    u0 = 1.0 - lam * t0 * t0 / 4.0
    du0 = -lam * t0 / 2.0

    def rhs(theta, y):
        return [y[1], -y[1] / math.tan(theta) - lam * y[0]]

    sol = solve_ivp(
        rhs,
        (t0, theta0),
        [u0, du0],
        rtol=1e-12,
        atol=1e-14,
        dense_output=dense,
        method="RK45",
    )
    if not sol.success:
        raise RuntimeError(f"cap shooting integration failed: {sol.message}")
    return sol


def cap_eigenvalue(theta0: float, tol: float = 1e-10) -> float:
    """First Dirichlet eigenvalue nu(nu+1) on the spherical cap of angle theta0.

    Found by shooting in the degree nu and bisecting on the endpoint value;
    bisection failure would be an internal fault, not a data error.
    """
    if not 0.0 < theta0 <= math.pi:
        raise ValueError("cap angle must lie in (0, pi]")

    def endpoint(nu: float) -> float:
        return float(_cap_shoot(nu, theta0).y[0, -1])

    lo, f_lo = 1e-9, endpoint(1e-9)
    hi = 1.0
    f_hi = endpoint(hi)
    doublings = 0
    while f_lo * f_hi > 0.0:
        lo, f_lo = hi, f_hi
        hi *= 2.0
        f_hi = endpoint(hi)
        doublings += 1
        if doublings > 60:
            raise RuntimeError("cap eigenvalue bracketing did not converge")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (hi - lo) <= tol * mid:
            break
        f_mid = endpoint(mid)
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
    else:
        raise RuntimeError("cap eigenvalue bisection did not converge")
    nu = 0.5 * (lo + hi)
    return nu * (nu + 1.0)


def _cap_profile(theta0: float) -> CapProfile:
    lam = cap_eigenvalue(theta0)
    nu = 0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * lam))
    sol = _cap_shoot(nu, theta0, dense=True)
    head = np.linspace(0.0, sol.t[0], 8, endpoint=False)
    head_vals = 1.0 - lam * head**2 / 4.0
    body = np.linspace(sol.t[0], theta0, 8001)
    body_vals = sol.sol(body)[0]
    body_vals[-1] = 0.0
    spline = CubicSpline(np.concatenate([head, body]), np.concatenate([head_vals, body_vals]))
    return CapProfile(theta0=theta0, _interp=spline)


def make_domain(spec: CrossSectionSpec) -> ConeDomain:
    """Build the domain with its eigenvalue, exponent and angular profile.

    Closed forms are used where they exist (sphere, sector, half-space
    product); the spherical cap falls back to the shooting solver.
    """
    spec.validate()
    kind, dim = spec.kind, spec.dim
    if kind == "full-line":
        return ConeDomain(spec, 0.0, 0.0, LineProfile(half=False))
    if kind == "half-line":
        return ConeDomain(spec, 0.0, 1.0, LineProfile(half=True))
    if kind == "full-sphere":
        return ConeDomain(spec, 0.0, 0.0, ConstantProfile())
    if kind == "planar-sector":
        lam = sector_eigenvalue(spec.omega)
        return ConeDomain(spec, lam, gamma_root(dim, lam), SectorProfile(spec.omega))
    if kind == "spherical-cap":
        lam = cap_eigenvalue(spec.theta0)
        return ConeDomain(spec, lam, gamma_root(dim, lam), _cap_profile(spec.theta0))
    if kind == "half-space-product":
        k = spec.k
        if dim == 1:
            # degenerate to the N=1 cases
            return make_domain(CrossSectionSpec("half-line" if k == 1 else "full-line", 1))
        lam = float(k * (dim - 2 + k))
        dom = ConeDomain(spec, lam, float(k), ProductProfile(k))
        return dom
    raise ValueError(kind)


def phi_eval(w: WeightPhi, x) -> float:
    """Evaluate the harmonic weight at a point of the closed cone.

    The half-space product uses the exact polynomial x_1*...*x_k (its angular
    part w_1*...*w_k is kept unnormalized so that the weight is the familiar
    coordinate product); the other kinds carry sup-normalized profiles.
    """
    dom = w.domain
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dom.dim,):
        raise ValueError(f"point has shape {x.shape}, expected ({dom.dim},)")
    if not dom.contains(x):
        raise ValueError("point lies outside the cone")
    r = float(np.linalg.norm(x))
    if r == 0.0:
        return 0.0 if dom.gamma > 0 else 1.0
    ang = float(dom.eigenfunction(x / r))
    return r**dom.gamma * ang


def weight_on_points(w: WeightPhi, pts: np.ndarray) -> np.ndarray:
    """Vectorized weight evaluation on an (..., N) array of cone points."""
    dom = w.domain
    pts = np.asarray(pts, dtype=float)
    r = np.linalg.norm(pts, axis=-1)
    safe = np.where(r > 0, r, 1.0)
    ang = dom.eigenfunction(pts / safe[..., None])
    vals = safe**dom.gamma * ang
    return np.where(r > 0, vals, 0.0 if dom.gamma > 0 else 1.0)


def harmonic_residual(w: WeightPhi, x, h: float) -> tuple[float, float]:
    """Centered-difference residuals of harmonicity and the Euler identity.

    Returns ``(|Lap_h Phi(x)|, |x . grad_h Phi(x) - gamma*Phi(x)|)``; both
    are O(h^2) for smooth profiles.  The full stencil must stay inside the
    cone.
    """
    dom = w.domain
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if h <= 0:
        raise ValueError("stencil size must be positive")
    n = dom.dim
    for i in range(n):
        for s in (-1.0, 1.0):
            xs = x.copy()
            xs[i] += s * h
            if not dom.contains(xs):
                raise ValueError("stencil leaves the cone; move the point inward")
    center = phi_eval(w, x)
    lap = 0.0
    euler = 0.0
    for i in range(n):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        fp, fm = phi_eval(w, xp), phi_eval(w, xm)
        lap += (fp - 2.0 * center + fm) / (h * h)
        euler += x[i] * (fp - fm) / (2.0 * h)
    return abs(lap), abs(euler - dom.gamma * center)


@dataclass(frozen=True)
class BumpField:
    """Smooth compactly supported test field: amp * exp(1 - 1/(1-s^2)).

    ``s`` is the distance from ``center`` scaled by ``radius``; the support
    is the closed ball of that radius.
    """

    center: np.ndarray
    radius: float
    amplitude: float = 1.0

    def support_box(self) -> tuple[np.ndarray, np.ndarray]:
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        return c - self.radius, c + self.radius

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        c = np.atleast_1d(np.asarray(self.center, dtype=float))
        s2 = np.sum((pts - c) ** 2, axis=-1) / self.radius**2
        out = np.zeros(s2.shape)
        inside = s2 < 1.0
        with np.errstate(divide="ignore"):
            out[inside] = self.amplitude * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        return out


def hardy_ratio(dom: ConeDomain, u, n: int = 48) -> float:
    """Quadrature estimate of  integral(|grad u|^2) / integral(|u|^2/|x|^2).

    ``u`` must provide ``support_box()`` and vectorized evaluation on
    (..., N) points, vanish on and outside the cone boundary, and not be
    identically zero.  Midpoint rule on the support box with an ``n``-point
    grid per axis; gradients by central differences.
    """
    lo, hi = u.support_box()
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    dims = lo.size
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(n) + 0.5) / n for i in range(dims)]
    steps = [(hi[i] - lo[i]) / n for i in range(dims)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack(mesh, axis=-1)
    vals = u(pts)
    grads = np.gradient(vals, *steps) if dims > 1 else [np.gradient(vals, steps[0])]
    grad_sq = sum(g * g for g in grads)
    r2 = np.sum(pts * pts, axis=-1)
    vol = float(np.prod(steps))
    num = float(np.sum(grad_sq)) * vol
    with np.errstate(divide="ignore", invalid="ignore"):
        weighted = np.where(vals != 0.0, vals * vals / r2, 0.0)
    den = float(np.sum(weighted)) * vol
    if den <= 0.0:
        raise ValueError("test field is degenerate (identically zero)")
    return num / den


def hardy_constant(dom: ConeDomain) -> float:
    """((N-2)/2 + gamma)^2, the sharp constant for the cone."""
    return ((dom.dim - 2) / 2.0 + dom.gamma) ** 2


def fujita_threshold(dim: int, gamma: float, alpha: float) -> float:
    """Critical exponent 1 + 2/(N + gamma - alpha) separating the regimes."""
    if dim < 1 or gamma < 0 or not 0.0 <= alpha <= 1.0:
        raise ValueError("need N>=1, gamma>=0, alpha in [0,1]")
    denom = dim + gamma - alpha
    if denom <= 0:
        raise ValueError("N + gamma - alpha must be positive")
    return 1.0 + 2.0 / denom
