"""Star-shaped hypersurfaces as radial graphs and their pointwise geometry.

A surface is stored through its log-radius ``v = log r`` sampled on a
uniform grid of directions.  Two layouts are supported:

* ``n = 1``: closed curves, ``N`` nodes on ``[0, 2*pi)`` with periodic wrap.
* ``n = 2``: axisymmetric surfaces, ``N`` nodes on ``[0, pi]`` in polar
  angle (both poles included), with even reflection across the poles.

Derivatives are second-order central differences in the angle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PRESETS = ("round", "flower", "ellipse")

# Smallest admissible cosine between the radial direction and the normal.
# Any positive radial graph is star-shaped in the exact sense, so this margin
# is what rejects samples whose rays run nearly tangent to the surface.
MIN_SUPPORT_RATIO = 0.2

# fine grid on which make_shape checks the support ratio
CHECK_GRID = 8192

POLE_REGULARITY_CONSTANT = 100.0


class DegenerateShapeError(ValueError):
    """Raised when a shape or its metric contains non-finite or invalid values."""


@dataclass(frozen=True)
class StarShape:
    """Radial graph ``X(z) = exp(v(z)) z`` over S^1 or an axisymmetric S^2."""

    n: int
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"unsupported dimension n={self.n}")
        v = np.array(self.v, dtype=float)
        if v.ndim != 1 or v.size < 3:
            raise ValueError("v must be a 1-d array with at least 3 nodes")
        if not np.all(np.isfinite(v)):
            raise DegenerateShapeError("log-radius contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def N(self) -> int:
        return self.v.size

    @property
    def h(self) -> float:
        """Angular grid spacing."""
        if self.n == 1:
            return 2.0 * np.pi / self.N
        return np.pi / (self.N - 1)

    @property
    def angles(self) -> np.ndarray:
        return angle_grid(self.n, self.N)

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.v)

    def with_v(self, v) -> "StarShape":
        return StarShape(self.n, v)

    def scaled(self, lam: float) -> "StarShape":
        """Dilate the surface about the origin by ``lam``."""
        return StarShape(self.n, self.v + np.log(lam))

    def pole_regularity_defect(self) -> float:
        """Largest ``|v(theta_1) - v(theta_0)| / h**2`` over both poles (n = 2)."""
        if self.n != 2:
            return 0.0
        v = self.v
        return max(abs(v[1] - v[0]), abs(v[-2] - v[-1])) / self.h**2

    def points(self) -> np.ndarray:
        """Embedded node positions; for n = 2 the meridian in the (x, z) plane."""
        r, a = self.r, self.angles
        if self.n == 1:
            return np.column_stack([r * np.cos(a), r * np.sin(a)])
        return np.column_stack([r * np.sin(a), r * np.cos(a)])


def angle_grid(n: int, N: int) -> np.ndarray:
    if n == 1:
        return 2.0 * np.pi * np.arange(N) / N
    return np.linspace(0.0, np.pi, N)


def _radius_function(preset: str, params: dict, n: int):
    params = dict(params)
    if preset == "round":
        R0 = float(params.pop("R0", 1.0))
        fn = lambda a: np.full_like(a, R0)
    elif preset == "flower":
        eps = float(params.pop("eps"))
        k = int(params.pop("k"))
        if n == 2 and k % 2:
            raise ValueError("flower with n=2 needs an even k for pole regularity")
        fn = lambda a: 1.0 + eps * np.cos(k * a)
    elif preset == "ellipse":
        a_, b_ = float(params.pop("a")), float(params.pop("b"))
        if a_ <= 0 or b_ <= 0:
            raise ValueError("ellipse semi-axes must be positive")
        # a lies along phi = 0 (n = 1) or along the symmetry axis (n = 2)
        fn = lambda a: a_ * b_ / np.hypot(b_ * np.cos(a), a_ * np.sin(a))
    else:
        raise ValueError(f"unknown shape preset {preset!r}; expected one of {PRESETS}")
    if params:
        raise ValueError(f"unexpected parameters for {preset}: {sorted(params)}")
    return fn


def radius_profile(preset: str, params: dict, n: int, angles) -> np.ndarray:
    """Evaluate the exact radius of a preset at arbitrary angles."""
    return _radius_function(preset, params, n)(np.asarray(angles, dtype=float))


def make_shape(preset: str, params: dict | None = None, n: int = 1, N: int = 256) -> StarShape:
    """Sample a preset shape on the grid.

    Raises ``ValueError`` for unknown presets, non-positive radii, or samples
    whose support ratio ``<X, nu> / |X|`` drops below ``MIN_SUPPORT_RATIO``.
    """
    if N < 16:
        raise ValueError("grid size N must be at least 16")
    if n not in (1, 2):
        raise ValueError(f"unsupported dimension n={n}")
    r = radius_profile(preset, params or {}, n, angle_grid(n, N))
    if not np.all(np.isfinite(r)) or np.any(r <= 0):
        raise ValueError(f"{preset} parameters give a non-positive radius")
    shape = StarShape(n, np.log(r))
    fine_N = max(N, CHECK_GRID)
    fine_r = radius_profile(preset, params or {}, n, angle_grid(n, fine_N))
    if np.any(fine_r <= 0):
        raise ValueError(f"{preset} parameters give a non-positive radius")
    ratio = support_ratio(StarShape(n, np.log(fine_r)))
    if ratio.min() < MIN_SUPPORT_RATIO:
        raise ValueError(
            f"shape not star-shaped: support ratio {ratio.min():.3g} "
            f"below {MIN_SUPPORT_RATIO}"
        )
    return shape


def diff1(shape: StarShape, u) -> np.ndarray:
    """Central first difference in angle (periodic or pole-reflected)."""
    u = np.asarray(u, dtype=float)
    up = _pad(shape.n, u)
    return (up[2:] - up[:-2]) / (2.0 * shape.h)


def diff2(shape: StarShape, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    up = _pad(shape.n, u)
    return (up[2:] - 2.0 * u + up[:-2]) / shape.h**2


def _pad(n, u):
    if n == 1:
        return np.concatenate([u[-1:], u, u[:1]])
    # even reflection across both poles
    return np.concatenate([u[1:2], u, u[-2:-1]])


def support_ratio(shape: StarShape) -> np.ndarray:
    """Cosine between the radial direction and the normal, ``1/sqrt(1+|grad v|^2)``."""
    dv = diff1(shape, shape.v)
    return 1.0 / np.sqrt(1.0 + dv * dv)


@dataclass(frozen=True)
class GeometryFields:
    r: np.ndarray
    dv: np.ndarray
    d2v: np.ndarray
    grad_norm_sq: np.ndarray
    f: np.ndarray
    H: np.ndarray
    A_norm_sq: np.ndarray
    area_element: np.ndarray
    # n = 1 only: squared arclength derivative of curvature
    dA_norm_sq: np.ndarray | None = None
    kappa: tuple = ()

    @property
    def total_area(self) -> float:
        return float(self.area_element.sum())


def curvatures(shape: StarShape, dv=None, d2v=None):
    """Principal curvatures from the log-radius: one for n = 1, two for n = 2."""
    if dv is None:
        dv = diff1(shape, shape.v)
    if d2v is None:
        d2v = diff2(shape, shape.v)
    e = np.exp(-shape.v)
    w2 = 1.0 + dv * dv
    # (r^2 + 2r'^2 - r r'') / (r^2 + r'^2)^{3/2} rewritten with r = e^v
    k_first = e * (w2 - d2v) / w2**1.5
    if shape.n == 1:
        return (k_first,)
    theta = shape.angles
    cot_term = np.empty_like(dv)
    inner = slice(1, -1)
    cot_term[inner] = dv[inner] / np.tan(theta[inner])
    # limit of v_theta cot(theta) at either pole
    cot_term[0] = d2v[0]
    cot_term[-1] = d2v[-1]
    k_par = e * (1.0 - cot_term) / np.sqrt(w2)
    return (k_first, k_par)


def compute_fields(shape: StarShape) -> GeometryFields:
    dv = diff1(shape, shape.v)
    d2v = diff2(shape, shape.v)
    r = shape.r
    w2 = 1.0 + dv * dv
    w = np.sqrt(w2)
    f = w / r
    ks = curvatures(shape, dv, d2v)
    H = ks[0] if shape.n == 1 else ks[0] + ks[1]
    A2 = ks[0] ** 2 if shape.n == 1 else ks[0] ** 2 + ks[1] ** 2
    if shape.n == 1:
        area = r * w * shape.h
        # |grad A|^2 = (d kappa / ds)^2, ds = r w dphi
        ks_ds = diff1(shape, H) / (r * w)
        dA2 = ks_ds * ks_ds
    else:
        area = r * np.sin(shape.angles) * r * w * 2.0 * np.pi * shape.h
        area[[0, -1]] = 0.0
        dA2 = None
    out = GeometryFields(
        r=r, dv=dv, d2v=d2v, grad_norm_sq=dv * dv, f=f, H=H, A_norm_sq=A2,
        area_element=area, dA_norm_sq=dA2, kappa=ks,
    )
    for name in ("f", "H", "A_norm_sq", "area_element"):
        if not np.all(np.isfinite(getattr(out, name))):
            raise DegenerateShapeError(f"non-finite {name} on shape")
    return out


def inverse_metric(shape: StarShape, dv=None) -> np.ndarray:
    """``g^{11}`` of the induced metric in the angular coordinate."""
    if dv is None:
        dv = diff1(shape, shape.v)
    return np.exp(-2.0 * shape.v) / (1.0 + dv * dv)


def surface_grad_sq(shape: StarShape, u, dv=None) -> np.ndarray:
    """``|grad u|^2`` on the surface for a (rotationally symmetric) field u."""
    du = diff1(shape, u)
    return inverse_metric(shape, dv) * du * du


def laplace_beltrami(shape: StarShape, u) -> np.ndarray:
    """Divergence-form Laplace-Beltrami operator of the induced metric.

    Fluxes ``sqrt(det g) g^{11} du`` are formed at half nodes and differenced;
    for n = 2 the pole nodes use the exact measure of their polar cap.
    """
    u = np.asarray(u, dtype=float)
    if u.shape != shape.v.shape or not np.all(np.isfinite(u)):
        raise ValueError("field must have one finite value per node")
    h = shape.h
    v = shape.v
    dv = diff1(shape, v)
    if shape.n == 1:
        vp = np.append(v, v[0])
        up = np.append(u, u[0])
    else:
        vp, up = v, u
    # metric factors at half nodes, v' by the compact half-node difference
    v_half = 0.5 * (vp[1:] + vp[:-1])
    dv_half = (vp[1:] - vp[:-1]) / h
    du_half = (up[1:] - up[:-1]) / h
    w_half = np.sqrt(1.0 + dv_half**2)
    if shape.n == 1:
        sqrt_g = np.exp(v) * np.sqrt(1.0 + dv * dv)
        if np.any(sqrt_g <= 0):
            raise DegenerateShapeError("degenerate metric")
        flux = du_half / (np.exp(v_half) * w_half)
        return (flux - np.roll(flux, 1)) / (h * sqrt_g)
    theta_half = (np.arange(shape.N - 1) + 0.5) * h
    flux = np.sin(theta_half) * du_half / w_half
    sqrt_g = np.exp(2.0 * v) * np.sqrt(1.0 + dv * dv)
    if np.any(sqrt_g <= 0):
        raise DegenerateShapeError("degenerate metric")
    out = np.empty_like(u)
    out[1:-1] = (flux[1:] - flux[:-1]) / (h * sqrt_g[1:-1] * np.sin(shape.angles[1:-1]))
    cap = 1.0 - np.cos(0.5 * h)
    out[0] = flux[0] / (sqrt_g[0] * cap)
    out[-1] = -flux[-1] / (sqrt_g[-1] * cap)
    return out


def diameter(shape: StarShape, n_azimuth: int = 64) -> float:
    """Largest distance between two surface nodes (azimuth sampled for n = 2)."""
    P = shape.points()
    if shape.n == 1:
        from scipy.spatial.distance import pdist

        return float(pdist(P).max())
    rho, z = P[:, 0], P[:, 1]
    dz2 = (z[:, None] - z[None, :]) ** 2
    rr = rho[:, None] * rho[None, :]
    r2 = rho[:, None] ** 2 + rho[None, :] ** 2
    best = 0.0
    for psi in 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth:
        best = max(best, float((r2 - 2.0 * rr * np.cos(psi) + dz2).max()))
    return float(np.sqrt(best))
