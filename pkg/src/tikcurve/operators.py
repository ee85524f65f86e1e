"""
Discrete forward operators between fields on curves.

Every operator maps node-major vector-field coefficients on a source grid
to coefficients on a target grid. The spaces carry the discrete L^2 inner
products given by the P1 mass matrices, so the adjoint of a coefficient
matrix ``A`` is ``M_src^{-1} A^T M_tgt``. This makes
``<F u, y> = <u, F* y>`` hold to rounding error.

The magnetization operator is the planar potential-field kernel

    (F u)(y) = int_{S1} u(x) . (y - x) / |y - x|^2 ds(x),

i.e. ``grad_y log|y - x|`` without the ``1 / (2 pi)`` factor. It is
collocated at the nodes of the target curve; the source integral uses
3-point Gauss quadrature per element of the source grid.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CurvesTooCloseError, GridMismatchError
from .fields import (
    BASIS,
    DiscreteVectorField,
    element_quadrature,
    mass_matrix,
    normal_projector,
    split_stiffness,
    vector_mass,
)
from .geometry import ParametricCurve, min_distance

MIN_DISTANCE = 1e-3


@dataclass(frozen=True, eq=False)
class LinearOperatorDiscrete:
    """A linear map from fields on ``source_carrier`` to data on ``target_carrier``.

    ``matrix`` maps node-major source coefficients to target coefficients;
    it is dense (``ndarray``) or sparse. ``target_components`` is 1 for
    scalar data and 2 for vector-field data.
    """

    kind: str
    matrix: object
    source_carrier: ParametricCurve
    source_t: np.ndarray
    target_carrier: ParametricCurve
    target_t: np.ndarray
    target_components: int = 2
    info: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_dense(self) -> bool:
        return isinstance(self.matrix, np.ndarray)

    @cached_property
    def source_mass(self) -> sp.csr_matrix:
        return vector_mass(self.source_carrier, self.source_t)

    @cached_property
    def target_mass(self) -> sp.csr_matrix:
        M = mass_matrix(self.target_carrier, self.target_t)
        if self.target_components == 1:
            return M
        return sp.kron(M, sp.identity(self.target_components), format="csr")

    @cached_property
    def _source_mass_lu(self):
        return spla.splu(self.source_mass.tocsc())

    def source_gram(self, norm: str = "l2"):
        if norm == "l2":
            return self.source_mass
        if norm == "h1":
            return (self.source_mass + split_stiffness(self.source_carrier, self.source_t)).tocsr()
        raise ValueError(f"unknown source norm {norm!r}")

    def target_gram(self):
        return self.target_mass

    def solve_source_gram(self, rhs, norm: str = "l2"):
        if norm == "l2":
            return self._source_mass_lu.solve(np.asarray(rhs, dtype=float))
        return spla.spsolve(self.source_gram(norm).tocsc(), rhs)

    def apply(self, u) -> np.ndarray:
        u = u.flat if isinstance(u, DiscreteVectorField) else np.asarray(u, dtype=float)
        if u.shape[0] != self.shape[1]:
            raise GridMismatchError(f"operator expects {self.shape[1]} dof, got {u.shape[0]}")
        return np.asarray(self.matrix @ u)

    def transpose_apply(self, y) -> np.ndarray:
        return np.asarray(self.matrix.T @ np.asarray(y, dtype=float))

    def adjoint_apply(self, y) -> np.ndarray:
        """``M_src^{-1} A^T M_tgt y`` on coefficient vectors."""
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.shape[0]:
            raise GridMismatchError(f"adjoint expects {self.shape[0]} dof, got {y.shape[0]}")
        return self._source_mass_lu.solve(self.transpose_apply(self.target_mass @ y))

    def source_field(self, flat) -> DiscreteVectorField:
        return DiscreteVectorField.from_flat(self.source_carrier, self.source_t, flat)

    def target_inner(self, y1, y2) -> float:
        return float(np.asarray(y1) @ (self.target_mass @ np.asarray(y2)))

    def source_inner(self, u1, u2) -> float:
        return float(np.asarray(u1) @ (self.source_mass @ np.asarray(u2)))

    def dense(self) -> np.ndarray:
        return self.matrix if self.is_dense else self.matrix.toarray()


def magnetization_kernel(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``(y - x) / |y - x|^2`` for all pairs; shape ``(len(y), len(x), 2)``."""
    d = y[:, None, :] - x[None, :, :]
    return d / np.sum(d * d, axis=-1)[..., None]


def build_magnetization_operator(source: ParametricCurve, source_t,
                                 target: ParametricCurve, target_t) -> LinearOperatorDiscrete:
    """Dense collocation matrix of the magnetization operator.

    Raises
    ------
    CurvesTooCloseError
        If the sampled distance between the curves is below 1e-3.
    """
    dist = min_distance(source, target)
    if dist < MIN_DISTANCE:
        raise CurvesTooCloseError(f"curves are {dist:.2e} apart; need >= {MIN_DISTANCE}")
    source_t = np.asarray(source_t, dtype=float)
    target_t = np.asarray(target_t, dtype=float)
    conn, tq, wq, speed = element_quadrature(source, source_t)
    xq = source.eval(tq.ravel())
    weights = (wq * speed).ravel()
    yj = target.eval(target_t)
    kern = magnetization_kernel(yj, xq) * weights[None, :, None]  # (Ny, Q, 2)
    # scatter quadrature contributions onto source nodes
    nq = BASIS.shape[0]
    rows = np.repeat(np.arange(conn.shape[0] * nq), 2)
    cols = np.repeat(conn, nq, axis=0).ravel()
    vals = np.tile(BASIS, (conn.shape[0], 1)).ravel()
    P = sp.csr_matrix((vals, (rows, cols)), shape=(conn.shape[0] * nq, source_t.size))
    A = np.empty((target_t.size, 2 * source_t.size))
    for c in range(2):
        A[:, c::2] = (P.T @ kern[:, :, c].T).T
    c_hat = float(1.0 / np.min(np.linalg.norm(yj[:, None, :] - xq[None, :, :], axis=-1)))
    return LinearOperatorDiscrete(
        kind="magnetization", matrix=A,
        source_carrier=source, source_t=source_t,
        target_carrier=target, target_t=target_t,
        target_components=1,
        info={"c_hat": c_hat, "min_distance": dist},
    )


def apply_adjoint_magnetization(op: LinearOperatorDiscrete, y) -> DiscreteVectorField:
    """``F* y`` as a vector field on the source grid."""
    if op.kind != "magnetization":
        raise ValueError("operator is not a magnetization operator")
    return op.source_field(op.adjoint_apply(y))


def magnetization_norm_bound(op: LinearOperatorDiscrete) -> float:
    """``sqrt(|S2| |S1|) * C_hat`` with ``C_hat = sup 1/|y - x|`` over sampled pairs."""
    src = op.source_carrier
    tgt = op.target_carrier
    return float(np.sqrt(src.length() * tgt.length()) * op.info["c_hat"])


def magnetization_data(source: ParametricCurve, field_fn: Callable, target: ParametricCurve,
                       target_t, n_elements: int = 2000) -> np.ndarray:
    """Potential data of an analytic field, with fine quadrature on ``source``.

    ``field_fn(points) -> (Q, 2)`` is evaluated at the quadrature points, so
    the data does not inherit the P1 representation used for inversion.
    """
    t = np.linspace(source.a, source.b, n_elements + 1)
    _, tq, wq, speed = element_quadrature(source, t)
    xq = source.eval(tq.ravel())
    weights = (wq * speed).ravel()
    yj = target.eval(np.asarray(target_t, dtype=float))
    u = field_fn(xq)
    return np.einsum("jqc,qc,q->j", magnetization_kernel(yj, xq), u, weights)


def build_embedding_operator(carrier: ParametricCurve, t) -> LinearOperatorDiscrete:
    """Identity on nodal values; its adjoint is the identity as well."""
    t = np.asarray(t, dtype=float)
    n = 2 * t.size
    return LinearOperatorDiscrete(
        kind="embedding", matrix=sp.identity(n, format="csr"),
        source_carrier=carrier, source_t=t, target_carrier=carrier, target_t=t,
    )


def build_normal_constraint_operator(carrier: ParametricCurve, t) -> LinearOperatorDiscrete:
    """Nodal ``u -> n (n^T u)``."""
    t = np.asarray(t, dtype=float)
    return LinearOperatorDiscrete(
        kind="normal-constraint", matrix=normal_projector(carrier, t),
        source_carrier=carrier, source_t=t, target_carrier=carrier, target_t=t,
    )


def estimate_operator_norm(apply: Callable, adjoint: Callable, source_gram, target_gram,
                           start: Optional[np.ndarray] = None, iterations: int = 200,
                           tol: float = 1e-10, seed: int = 0) -> float:
    """Power iteration on ``F* F`` in weighted inner products.

    Returns ``max ||F v||_T / ||v||_S`` reached by the iterates.
    """
    n = source_gram.shape[0]
    v = np.random.default_rng(seed).standard_normal(n) if start is None else np.array(start, float)

    def snorm(w):
        return np.sqrt(max(float(w @ (source_gram @ w)), 0.0))

    nv = snorm(v)
    if nv == 0:
        return 0.0
    v = v / nv
    best = 0.0
    prev = -1.0
    for _ in range(iterations):
        fv = apply(v)
        val = np.sqrt(max(float(fv @ (target_gram @ fv)), 0.0))
        best = max(best, val)
        if abs(val - prev) <= tol * max(val, 1e-300):
            break
        prev = val
        w = adjoint(fv)
        nw = snorm(w)
        if nw == 0:
            break
        v = w / nw
    return float(best)


def operator_norm(op: LinearOperatorDiscrete, iterations: int = 500, seed: int = 0) -> float:
    """Power-iteration estimate of ``||F||`` from L^2(source) to L^2(target)."""
    return estimate_operator_norm(op.apply, op.adjoint_apply, op.source_mass, op.target_mass,
                                  iterations=iterations, seed=seed)


def weighted_singular_values(op: LinearOperatorDiscrete) -> np.ndarray:
    """Singular values of ``F`` between the discrete L^2 spaces."""
    Ls = sla.cholesky(op.source_mass.toarray(), lower=True)
    Lt = sla.cholesky(op.target_mass.toarray(), lower=True)
    W = Lt.T @ op.dense() @ sla.solve_triangular(Ls, np.eye(Ls.shape[0]), lower=True).T
    return sla.svdvals(W)


def export_operator_text(op: LinearOperatorDiscrete, path) -> None:
    """Row-major text dump: a ``# kind rows cols`` header, then one row per line."""
    A = op.dense()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {op.kind} {A.shape[0]} {A.shape[1]}\n")
        np.savetxt(fh, A, fmt="%.17g")


def load_operator_text(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        _, kind, rows, cols = fh.readline().split()
        A = np.loadtxt(fh, ndmin=2)
    if A.shape != (int(rows), int(cols)):
        raise ValueError(f"{path}: shape mismatch")
    return A

