"""
Differential geometry of regular planar parametric curves.

A curve is described by its parametrization ``m: [a, b] -> R^2`` together
with its first and second parameter derivatives. Fields living on the
curve are sampled on a uniform parameter grid; parameter derivatives of
sampled quantities use second-order central differences (one-sided
second-order stencils at the ends of open curves, wrap-around on closed
curves).
"""

from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np

from .errors import DegenerateJacobianError, GridTooSmallError, NonTangentError

JACOBIAN_TOL = 1e-12

ArrayFunc = Callable[[np.ndarray], np.ndarray]


def _rot90(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


@dataclass(frozen=True)
class ParametricCurve:
    """Regular parametrization of a planar curve.

    Parameters
    ----------
    domain : (float, float)
        Parameter interval ``[a, b]``.
    eval, deriv1, deriv2 : callable
        Vectorized maps ``t -> m(t)``, ``m'(t)``, ``m''(t)``. For an input of
        shape ``(N,)`` they return shape ``(N, 2)``.
    orientation : {+1, -1}
        The unit normal is the unit tangent rotated by +90 degrees and
        multiplied by this sign.
    closed : bool
        If True, ``m(a) == m(b)`` and sampled quantities are periodic.
    name : str
        Label used in reports and serialized files.
    """

    domain: Tuple[float, float]
    eval: ArrayFunc
    deriv1: ArrayFunc
    deriv2: ArrayFunc
    orientation: int = 1
    closed: bool = False
    name: str = "curve"
    check_samples: int = field(default=1025, repr=False, compare=False)

    def __post_init__(self):
        a, b = self.domain
        if not b > a:
            raise ValueError(f"empty parameter domain {self.domain}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.check_samples:
            t = np.linspace(a, b, self.check_samples)
            speed = np.linalg.norm(self.deriv1(t), axis=-1)
            if np.min(speed) < JACOBIAN_TOL:
                k = int(np.argmin(speed))
                raise DegenerateJacobianError(
                    f"{self.name}: |m'(t)| = {speed[k]:.3e} at t = {t[k]:.6g}"
                )

    def __call__(self, t):
        return self.eval(np.asarray(t, dtype=float))

    @property
    def a(self) -> float:
        return float(self.domain[0])

    @property
    def b(self) -> float:
        return float(self.domain[1])

    def speed(self, t) -> np.ndarray:
        """|m'(t)|, the arclength density."""
        return np.linalg.norm(self.deriv1(np.asarray(t, dtype=float)), axis=-1)

    def length(self, n_elements: int = 512) -> float:
        """Arclength by composite 3-point Gauss-Legendre quadrature."""
        x, w = np.polynomial.legendre.leggauss(3)
        edges = np.linspace(self.a, self.b, n_elements + 1)
        h = edges[1] - edges[0]
        tq = (edges[:-1, None] + (x[None, :] + 1.0) * h / 2).ravel()
        wq = np.tile(w * h / 2, n_elements)
        return float(wq @ self.speed(tq))

    def with_orientation(self, orientation: int) -> "ParametricCurve":
        return ParametricCurve(
            self.domain, self.eval, self.deriv1, self.deriv2,
            orientation=orientation, closed=self.closed, name=self.name,
        )


@dataclass(frozen=True)
class Frame:
    """Moving frame of a curve at one or more parameter values.

    Array fields carry the leading shape of the parameter input; ``metric``
    is the 1x1 metric tensor ``|m'|^2``, ``jacobian`` is the column ``m'``
    and ``pinv`` its Moore-Penrose inverse (a row, stored as a 2-vector).
    """

    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    metric: np.ndarray
    jacobian: np.ndarray
    pinv: np.ndarray


@dataclass(frozen=True)
class ProjectionPair:
    """Tangential and normal projection matrices, shape ``(..., 2, 2)``."""

    p_tau: np.ndarray
    p_n: np.ndarray


def frame_at(curve: ParametricCurve, t) -> Frame:
    """Unit tangent, unit normal, metric and Jacobian pseudoinverse at ``t``.

    Raises
    ------
    DegenerateJacobianError
        If ``|m'(t)| < 1e-12`` at any requested parameter.
    """
    t = np.asarray(t, dtype=float)
    dm = curve.deriv1(t)
    speed = np.linalg.norm(dm, axis=-1)
    if np.any(speed < JACOBIAN_TOL):
        raise DegenerateJacobianError(f"{curve.name}: vanishing |m'| on requested parameters")
    g = speed**2
    tau = dm / speed[..., None]
    n = curve.orientation * _rot90(tau)
    return Frame(
        point=curve.eval(t),
        tangent=tau,
        normal=n,
        metric=g,
        jacobian=dm,
        pinv=dm / g[..., None],
    )


def projection_matrices(normal: np.ndarray) -> ProjectionPair:
    """Build ``P_n = n n^T`` and ``P_tau = I - P_n`` from unit normals."""
    normal = np.asarray(normal, dtype=float)
    p_n = normal[..., :, None] * normal[..., None, :]
    return ProjectionPair(p_tau=np.eye(2) - p_n, p_n=p_n)


def projections_at(curve: ParametricCurve, t) -> ProjectionPair:
    return projection_matrices(frame_at(curve, t).normal)


def parameter_grid(curve: ParametricCurve, n_elements: int) -> np.ndarray:
    """Uniform parameter nodes with ``n_elements`` elements.

    Open curves get ``n_elements + 1`` nodes including both ends; closed
    curves get ``n_elements`` nodes, the right end being identified with
    the left one.
    """
    if n_elements < 2:
        raise GridTooSmallError("need at least two elements")
    nodes = np.linspace(curve.a, curve.b, n_elements + 1)
    return nodes[:-1] if curve.closed else nodes


def grid_step(t: np.ndarray) -> float:
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise GridTooSmallError("a grid needs at least two nodes")
    steps = np.diff(t)
    h = steps.mean()
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-12 * max(1.0, abs(t).max()):
        raise ValueError("parameter grid must be strictly increasing and uniform")
    return float(h)


def param_derivative(values: np.ndarray, t: np.ndarray, closed: bool = False) -> np.ndarray:
    """Second-order finite-difference derivative along axis 0.

    ``values`` holds samples at the uniform nodes ``t``.
    """
    values = np.asarray(values, dtype=float)
    if values.shape[0] < 3:
        raise GridTooSmallError("finite differences need at least 3 nodes")
    h = grid_step(t)
    if closed:
        return (np.roll(values, -1, axis=0) - np.roll(values, 1, axis=0)) / (2 * h)
    return np.gradient(values, h, axis=0, edge_order=2)


def surface_gradient(curve: ParametricCurve, t, samples) -> np.ndarray:
    """Surface gradient of a scalar function sampled as ``v(m(t_i))``.

    Returns an array of shape ``(N, 2)`` whose rows are
    ``d(v o m)/dt * pinv(m')``; every row lies in the tangent line.
    """
    t = np.asarray(t, dtype=float)
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] != t.shape[0]:
        raise ValueError("samples and grid differ in length")
    dv = param_derivative(samples, t, curve.closed)
    pinv = frame_at(curve, t).pinv
    return dv[:, None] * pinv


def surface_gradient_vector(curve: ParametricCurve, t, values) -> np.ndarray:
    """Surface gradient of a vector field, shape ``(N, 2, 2)``.

    Row ``c`` of each matrix is the surface gradient of component ``c``.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    du = param_derivative(values, t, curve.closed)
    pinv = frame_at(curve, t).pinv
    return du[:, :, None] * pinv[:, None, :]


def covariant_derivative(curve: ParametricCurve, t, values, tol: float = 1e-8) -> np.ndarray:
    """Tangential projection of the parameter derivative of a tangent field.

    Raises
    ------
    NonTangentError
        If the field has a normal component larger than ``tol``.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    fr = frame_at(curve, t)
    normal_part = np.einsum("ij,ij->i", values, fr.normal)
    if np.max(np.abs(normal_part), initial=0.0) >= tol:
        raise NonTangentError(
            f"field has normal component up to {np.max(np.abs(normal_part)):.3e}"
        )
    du = param_derivative(values, t, curve.closed)
    p = projection_matrices(fr.normal).p_tau
    return np.einsum("nij,nj->ni", p, du)


def curvature_bound(curve: ParametricCurve, n_samples: int = 1024) -> float:
    """Sampled supremum of the Frobenius norm of the shape operator."""
    if n_samples < 64:
        raise GridTooSmallError("curvature_bound needs at least 64 samples")
    t = parameter_grid(curve, n_samples)
    n = frame_at(curve, t).normal
    shape_op = surface_gradient_vector(curve, t, n)
    return float(np.max(np.linalg.norm(shape_op, axis=(1, 2))))


# --- concrete curves ---------------------------------------------------------


def circle(radius: float = 1.0, center=(0.0, 0.0), domain=(0.0, 2 * np.pi),
           outward: bool = True) -> ParametricCurve:
    """Counter-clockwise circle ``c + r (cos t, sin t)``."""
    cx, cy = center
    r = float(radius)
    full = np.isclose(domain[1] - domain[0], 2 * np.pi)
    return ParametricCurve(
        domain=tuple(map(float, domain)),
        eval=lambda t: np.stack([cx + r * np.cos(t), cy + r * np.sin(t)], axis=-1),
        deriv1=lambda t: np.stack([-r * np.sin(t), r * np.cos(t)], axis=-1),
        deriv2=lambda t: np.stack([-r * np.cos(t), -r * np.sin(t)], axis=-1),
        # rot90 of the ccw tangent points inward
        orientation=-1 if outward else 1,
        closed=bool(full),
        name=f"circle(r={r:g})",
    )


def ellipse(semi_x: float = 3.0, semi_y: float = 2.0) -> ParametricCurve:
    """Closed ellipse ``(semi_x cos t, semi_y sin t)``, outward normal."""
    ax, by = float(semi_x), float(semi_y)
    return ParametricCurve(
        domain=(0.0, 2 * np.pi),
        eval=lambda t: np.stack([ax * np.cos(t), by * np.sin(t)], axis=-1),
        deriv1=lambda t: np.stack([-ax * np.sin(t), by * np.cos(t)], axis=-1),
        deriv2=lambda t: np.stack([-ax * np.cos(t), -by * np.sin(t)], axis=-1),
        orientation=-1,
        closed=True,
        name=f"ellipse({ax:g},{by:g})",
    )


def sine_graph(domain=(0.0, 2 * np.pi), orientation: int = 1) -> ParametricCurve:
    """Graph ``(t, sin t)``; with orientation +1 the normal points up."""
    return ParametricCurve(
        domain=tuple(map(float, domain)),
        eval=lambda t: np.stack([t, np.sin(t)], axis=-1),
        deriv1=lambda t: np.stack([np.ones_like(t), np.cos(t)], axis=-1),
        deriv2=lambda t: np.stack([np.zeros_like(t), -np.sin(t)], axis=-1),
        orientation=orientation,
        name="sine_graph",
    )


def semicircle_graph(t_range=(-0.9, 0.9)) -> ParametricCurve:
    """Upper unit half circle as the graph ``(t, sqrt(1 - t^2))``.

    The normal points away from the origin.
    """
    lo, hi = map(float, t_range)
    if lo <= -1 or hi >= 1:
        raise DegenerateJacobianError("graph parametrization is singular at |t| = 1")

    def ev(t):
        return np.stack([t, np.sqrt(1 - t**2)], axis=-1)

    def d1(t):
        return np.stack([np.ones_like(t), -t / np.sqrt(1 - t**2)], axis=-1)

    def d2(t):
        return np.stack([np.zeros_like(t), -(1 - t**2) ** -1.5], axis=-1)

    return ParametricCurve((lo, hi), ev, d1, d2, orientation=1, name="upper_semicircle")


def line_segment(p0=(0.0, 0.0), p1=(1.0, 0.0), domain=(0.0, 1.0)) -> ParametricCurve:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    a, b = map(float, domain)
    vel = (p1 - p0) / (b - a)
    return ParametricCurve(
        domain=(a, b),
        eval=lambda t: p0 + (np.asarray(t)[..., None] - a) * vel,
        deriv1=lambda t: np.broadcast_to(vel, np.shape(t) + (2,)).copy(),
        deriv2=lambda t: np.zeros(np.shape(t) + (2,)),
        name="segment",
    )


def reparametrize(curve: ParametricCurve, phi: ArrayFunc, dphi: ArrayFunc,
                  d2phi: ArrayFunc, domain) -> ParametricCurve:
    """The curve ``s -> m(phi(s))`` for a monotone increasing ``phi``."""

    def d1(s):
        return curve.deriv1(phi(s)) * dphi(s)[..., None]

    def d2(s):
        return (curve.deriv2(phi(s)) * dphi(s)[..., None] ** 2
                + curve.deriv1(phi(s)) * d2phi(s)[..., None])

    return ParametricCurve(
        tuple(map(float, domain)), lambda s: curve.eval(phi(s)), d1, d2,
        orientation=curve.orientation, closed=curve.closed,
        name=f"{curve.name}∘phi",
    )


def polyline(vertices, domain=(0.0, 1.0), closed: bool = False,
             orientation: int = 1, name: str = "polyline") -> ParametricCurve:
    """Piecewise-linear curve through ``vertices`` at uniform parameters.

    For a closed polyline the last vertex connects back to the first. The
    derivative is piecewise constant; evaluate it strictly inside segments.
    """
    V = np.asarray(vertices, dtype=float)
    if closed:
        V = np.vstack([V, V[:1]])
    nseg = len(V) - 1
    if nseg < 1:
        raise GridTooSmallError("polyline needs at least two vertices")
    a, b = map(float, domain)
    h = (b - a) / nseg
    seg_vel = np.diff(V, axis=0) / h

    def _locate(t):
        s = (np.asarray(t, dtype=float) - a) / h
        k = np.clip(np.floor(s).astype(int), 0, nseg - 1)
        return k, s - k

    def ev(t):
        k, r = _locate(t)
        return V[k] + r[..., None] * (V[k + 1] - V[k])

    def d1(t):
        k, _ = _locate(t)
        return seg_vel[k]

    def d2(t):
        return np.zeros(np.shape(t) + (2,))

    return ParametricCurve((a, b), ev, d1, d2, orientation=orientation,
                           closed=closed, name=name, check_samples=0)


def polygon_approximation(curve: ParametricCurve, n_segments: int) -> ParametricCurve:
    """Inscribed polygon of ``curve`` with vertices at uniform parameters."""
    nodes = np.linspace(curve.a, curve.b, n_segments + 1)
    if curve.closed:
        nodes = nodes[:-1]
    poly = polyline(curve.eval(nodes), domain=curve.domain, closed=curve.closed,
                    orientation=curve.orientation, name=f"polygon[{n_segments}]({curve.name})")
    speed = poly.speed(np.linspace(curve.a, curve.b, 4 * n_segments + 1)[1:-1:2])
    if np.min(speed) < JACOBIAN_TOL:
        raise DegenerateJacobianError("polygon has a zero-length segment")
    return poly


def min_distance(c1: ParametricCurve, c2: ParametricCurve, n_samples: int = 2048) -> float:
    p = c1.eval(np.linspace(c1.a, c1.b, n_samples))
    q = c2.eval(np.linspace(c2.a, c2.b, n_samples))
    d2 = np.min(((p[:, None, :] - q[None, :, :]) ** 2).sum(-1))
    return float(np.sqrt(d2))


