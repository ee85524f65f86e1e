"""
Piecewise-linear vector fields on curves and their Sobolev-type norms.

A field stores ambient-coordinate values ``u(m(t_i)) in R^2`` at uniform
parameter nodes and is linear in ``t`` between nodes. Integrals over the
curve use 3-point Gauss-Legendre quadrature per element with the
arclength weight ``|m'(t)| dt``.

Two H^1-type seminorms are available:

* the ambient seminorm ``|u|_{H^1}``, the L^2 norm of the surface gradient
  of each Cartesian component;
* the split seminorm ``|u|_{h^1}``, built from the arclength derivatives of
  the frame components ``<u, tau>`` and ``<u, n>``. Its kernel consists of
  fields with constant tangential and normal amplitudes.

Frame components are taken at the nodes and interpolated linearly, so both
seminorms reduce to a weighted 1-D stiffness matrix applied to nodal
vectors. Discrete vectors are ordered node-major: ``[u1_0, u2_0, u1_1, ...]``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import GridMismatchError, GridTooSmallError
from .geometry import ParametricCurve, frame_at, grid_step, projection_matrices

GAUSS_X, GAUSS_W = np.polynomial.legendre.leggauss(3)
_S = (GAUSS_X + 1.0) / 2.0
BASIS = np.stack([1.0 - _S, _S], axis=1)  # (3 quad points, 2 local nodes)


@dataclass(frozen=True, eq=False)
class DiscreteVectorField:
    """Nodal values of a vector field on ``carrier`` at parameters ``t``."""

    carrier: ParametricCurve
    t: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 2)
        if values.shape != (t.size, 2):
            raise ValueError(f"values must have shape ({t.size}, 2), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        grid_step(t)
        lo, hi = self.carrier.domain
        tol = 1e-12 * max(1.0, abs(lo), abs(hi))
        if t[0] < lo - tol or t[-1] > hi + tol:
            raise ValueError("grid leaves the carrier's parameter domain")
        t.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, carrier, t, fn):
        """Sample ``fn(points, frame) -> (N, 2)`` at the nodes."""
        fr = frame_at(carrier, t)
        return cls(carrier, t, fn(fr.point, fr))

    @classmethod
    def from_frame_components(cls, carrier, t, tangential, normal):
        """Field ``a tau + b n`` from nodal amplitudes ``a`` and ``b``."""
        fr = frame_at(carrier, t)
        a = np.broadcast_to(np.asarray(tangential, dtype=float), np.shape(t))
        b = np.broadcast_to(np.asarray(normal, dtype=float), np.shape(t))
        return cls(carrier, t, a[:, None] * fr.tangent + b[:, None] * fr.normal)

    @classmethod
    def from_flat(cls, carrier, t, flat):
        return cls(carrier, t, np.asarray(flat, dtype=float).reshape(-1, 2))

    @property
    def n_nodes(self) -> int:
        return self.t.size

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_carrier(self, carrier) -> "DiscreteVectorField":
        return DiscreteVectorField(carrier, self.t, self.values)

    def with_values(self, values) -> "DiscreteVectorField":
        return DiscreteVectorField(self.carrier, self.t, values)

    def frame_components(self):
        """Nodal ``(<u, tau>, <u, n>)``."""
        fr = frame_at(self.carrier, self.t)
        return (np.einsum("ij,ij->i", self.values, fr.tangent),
                np.einsum("ij,ij->i", self.values, fr.normal))

    def same_grid(self, other) -> bool:
        return (self.carrier is other.carrier and self.t.shape == other.t.shape
                and np.array_equal(self.t, other.t))

    def _check(self, other):
        if not self.same_grid(other):
            raise GridMismatchError("fields live on different carriers or grids")

    def __add__(self, other):
        self._check(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar):
        return self.with_values(float(scalar) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


# --- finite element machinery ------------------------------------------------


def connectivity(n_nodes: int, closed: bool) -> np.ndarray:
    """Element-to-node table, shape ``(E, 2)``."""
    left = np.arange(n_nodes if closed else n_nodes - 1)
    return np.stack([left, (left + 1) % n_nodes], axis=1)


def element_quadrature(curve: ParametricCurve, t):
    """Quadrature nodes ``(E, 3)``, parameter weights ``(E, 3)`` and speeds."""
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        raise GridTooSmallError("need at least two nodes")
    h = grid_step(t)
    conn = connectivity(t.size, curve.closed)
    tq = t[conn[:, 0]][:, None] + _S[None, :] * h
    wq = np.broadcast_to(GAUSS_W * h / 2, tq.shape)
    return conn, tq, wq, curve.speed(tq)


def _assemble(conn, local, n):
    rows = np.repeat(conn, 2, axis=1).ravel()
    cols = np.tile(conn, (1, 2)).ravel()
    return sp.csr_matrix((local.ravel(), (rows, cols)), shape=(n, n))


def mass_matrix(curve: ParametricCurve, t) -> sp.csr_matrix:
    """Scalar P1 mass matrix with arclength weight."""
    conn, tq, wq, speed = element_quadrature(curve, t)
    local = np.einsum("qa,qb,eq->eab", BASIS, BASIS, wq * speed)
    return _assemble(conn, local, len(t))


def stiffness_matrix(curve: ParametricCurve, t) -> sp.csr_matrix:
    """Scalar P1 stiffness for arclength derivatives, ``int phi_i' phi_j' / |m'| dt``."""
    h = grid_step(t)
    conn, tq, wq, speed = element_quadrature(curve, t)
    grad = np.array([-1.0, 1.0]) / h
    local = np.einsum("a,b,e->eab", grad, grad, np.sum(wq / speed, axis=1))
    return _assemble(conn, local, len(t))


def stiffness_factor(curve: ParametricCurve, t) -> sp.csr_matrix:
    """``G`` with ``stiffness_matrix(curve, t) == G.T @ G``, one row per element.

    ``|G a|^2`` forms nodal differences before squaring, so it keeps full
    relative accuracy for nearly constant ``a`` where ``a @ K @ a`` cancels.
    """
    h = grid_step(t)
    conn, tq, wq, speed = element_quadrature(curve, t)
    s = np.sqrt(np.sum(wq / speed, axis=1)) / h
    rows = np.repeat(np.arange(conn.shape[0]), 2)
    vals = np.stack([-s, s], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, conn.ravel())), shape=(conn.shape[0], len(t)))


def block_diagonal(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block-diagonal matrix from an ``(N, 2, 2)`` stack."""
    n = blocks.shape[0]
    base = 2 * np.arange(n)
    rows = (base[:, None, None] + np.arange(2)[None, :, None]).repeat(2, axis=2)
    cols = (base[:, None, None] + np.arange(2)[None, None, :]).repeat(2, axis=1)
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * n, 2 * n))


def vector_mass(curve, t) -> sp.csr_matrix:
    return sp.kron(mass_matrix(curve, t), sp.identity(2), format="csr")


def frame_rotation(curve, t) -> sp.csr_matrix:
    """Block-diagonal map from nodal ``u`` to nodal ``(<u, tau>, <u, n>)``."""
    fr = frame_at(curve, t)
    blocks = np.stack([fr.tangent, fr.normal], axis=1)  # (N, 2, 2)
    return block_diagonal(blocks)


def split_stiffness(curve, t) -> sp.csr_matrix:
    """Gram matrix of the split seminorm on node-major vectors."""
    R = frame_rotation(curve, t)
    K2 = sp.kron(stiffness_matrix(curve, t), sp.identity(2), format="csr")
    return (R.T @ K2 @ R).tocsr()


def ambient_stiffness(curve, t) -> sp.csr_matrix:
    """Gram matrix of the ambient seminorm on node-major vectors."""
    return sp.kron(stiffness_matrix(curve, t), sp.identity(2), format="csr")


def normal_projector(curve, t) -> sp.csr_matrix:
    """Block-diagonal nodal ``n n^T``."""
    p_n = projection_matrices(frame_at(curve, t).normal).p_n
    return block_diagonal(p_n)


# --- inner products and norms ------------------------------------------------


def l2_inner(u: DiscreteVectorField, v: DiscreteVectorField) -> float:
    """``int_M u . v ds``."""
    u._check(v)
    M = mass_matrix(u.carrier, u.t)
    return float(sum(u.values[:, c] @ (M @ v.values[:, c]) for c in range(2)))


def l2_norm(u: DiscreteVectorField) -> float:
    return float(np.sqrt(max(l2_inner(u, u), 0.0)))


def decompose(u: DiscreteVectorField):
    """Split ``u`` into nodal tangential and normal parts."""
    pp = projection_matrices(frame_at(u.carrier, u.t).normal)
    normal = np.einsum("nij,nj->ni", pp.p_n, u.values)
    return u.with_values(u.values - normal), u.with_values(normal)


def _check_size(u):
    if u.n_nodes < 3:
        raise GridTooSmallError("seminorms need at least 3 nodes")


def h1_split_seminorm(u: DiscreteVectorField) -> float:
    """``sqrt(int (d_s <u,tau>)^2 + (d_s <u,n>)^2 ds)``."""
    _check_size(u)
    G = stiffness_factor(u.carrier, u.t)
    a, b = u.frame_components()
    return float(np.hypot(np.linalg.norm(G @ a), np.linalg.norm(G @ b)))


def h1_ambient_seminorm(u: DiscreteVectorField) -> float:
    """``sqrt(int |grad_M u|_F^2 ds)``."""
    _check_size(u)
    G = stiffness_factor(u.carrier, u.t)
    return float(np.linalg.norm(G @ u.values))


def h1_split_norm(u: DiscreteVectorField) -> float:
    return float(np.hypot(l2_norm(u), h1_split_seminorm(u)))


def h1_ambient_norm(u: DiscreteVectorField) -> float:
    return float(np.hypot(l2_norm(u), h1_ambient_seminorm(u)))


@dataclass(frozen=True)
class NormReport:
    l2: float
    h1_ambient_semi: float
    h1_split_semi: float
    h1_split_full: float
    tangential_l2: float
    normal_l2: float


def norm_report(u: DiscreteVectorField) -> NormReport:
    tan, nor = decompose(u)
    l2 = l2_norm(u)
    semi = h1_split_seminorm(u)
    return NormReport(
        l2=l2,
        h1_ambient_semi=h1_ambient_seminorm(u),
        h1_split_semi=semi,
        h1_split_full=float(np.hypot(l2, semi)),
        tangential_l2=l2_norm(tan),
        normal_l2=l2_norm(nor),
    )


# --- text format ---------------------------------------------------------------


def save_field(u: DiscreteVectorField, path, carrier_id: str = None) -> None:
    """Header ``carrier_id N``, then ``t u1 u2`` per node (17 significant digits)."""
    cid = (carrier_id or u.carrier.name).replace(" ", "_")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{cid} {u.n_nodes}\n")
        for ti, (x, y) in zip(u.t, u.values):
            fh.write(f"{ti:.17g} {x:.17g} {y:.17g}\n")


def load_field(path, carrier: ParametricCurve) -> DiscreteVectorField:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed field header")
        n = int(header[1])
        data = np.loadtxt(fh, ndmin=2)
    if data.shape != (n, 3):
        raise ValueError(f"{path}: expected {n} rows of 't u1 u2'")
    return DiscreteVectorField(carrier, data[:, 0], data[:, 1:])


def read_field_header(path):
    with open(path, encoding="utf-8") as fh:
        cid, n = fh.readline().split()
    return cid, int(n)
