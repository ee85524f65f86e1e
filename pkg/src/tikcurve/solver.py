"""
Tikhonov regularization for linear problems with vector-field unknowns.

The discrete functional is

    T(u) = ||F u - y||^2 + c ||P_n u||^2 + alpha R(u),

with ``c = 1`` when the tangential constraint is active and ``c = 0``
otherwise, and ``R`` one of

``"split_seminorm"``    the squared split seminorm |u|_{h^1}^2,
``"ambient_seminorm"``  the squared ambient seminorm |u|_{H^1}^2,
``"full_norm"``         the squared split norm ||u||_{h^1}^2.

On node-major coefficient vectors ``T(u) = u^T A u - 2 b^T u + c0``; the
minimizer solves ``A u = b``. The second arclength derivatives of the strong
optimality condition enter only through the stiffness matrices (natural
boundary conditions on open curves, periodic ones on closed curves).
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GridMismatchError, GridTooSmallError, SolverError
from .fields import (
    DiscreteVectorField,
    ambient_stiffness,
    decompose,
    frame_rotation,
    h1_ambient_seminorm,
    h1_split_norm,
    h1_split_seminorm,
    l2_norm,
    mass_matrix,
    normal_projector,
    split_stiffness,
    stiffness_factor,
    vector_mass,
)
from .geometry import param_derivative
from .operators import LinearOperatorDiscrete

REGULARIZERS = ("split_seminorm", "ambient_seminorm", "full_norm")


@dataclass(frozen=True, eq=False)
class TikhonovProblem:
    """Forward operator, data, regularization parameter and penalty choice.

    ``data`` holds target coefficients (a flat array, or a
    :class:`DiscreteVectorField` for vector-valued data).
    """

    forward: LinearOperatorDiscrete
    data: np.ndarray
    alpha: float
    regularizer: str = "split_seminorm"
    tangential_constraint: bool = False

    def __post_init__(self):
        data = self.data.flat if isinstance(self.data, DiscreteVectorField) else self.data
        data = np.array(data, dtype=float)
        if data.shape != (self.forward.shape[0],):
            raise GridMismatchError(
                f"data has {data.size} dof, operator range has {self.forward.shape[0]}")
        if self.regularizer not in REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.regularizer!r}")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")
        object.__setattr__(self, "data", data)

    @property
    def carrier(self):
        return self.forward.source_carrier

    @property
    def grid(self):
        return self.forward.source_t

    def with_alpha(self, alpha: float) -> "TikhonovProblem":
        return TikhonovProblem(self.forward, self.data, alpha, self.regularizer,
                               self.tangential_constraint)

    def with_regularizer(self, regularizer: str) -> "TikhonovProblem":
        return TikhonovProblem(self.forward, self.data, self.alpha, regularizer,
                               self.tangential_constraint)


@dataclass(frozen=True, eq=False)
class NormalEquations:
    """``T(u) = u^T matrix u - 2 rhs^T u + constant``."""

    matrix: object
    rhs: np.ndarray
    constant: float
    fidelity: object = None
    alpha: float = 0.0
    reg_factor: object = None
    reg_mass: object = None

    @property
    def is_dense(self) -> bool:
        return isinstance(self.matrix, np.ndarray)

    def quadratic_form(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ (self.matrix @ u) - 2 * self.rhs @ u + self.constant)

    def objective(self, u) -> float:
        """Same value as :meth:`quadratic_form`, with the regularizer taken
        from its factor so that near-kernel solutions do not cancel."""
        if self.fidelity is None or self.reg_factor is None:
            return self.quadratic_form(u)
        u = np.asarray(u, dtype=float)
        fid = float(u @ (self.fidelity @ u) - 2 * self.rhs @ u + self.constant)
        reg = float(np.sum((self.reg_factor @ u) ** 2))
        if self.reg_mass is not None:
            reg += float(u @ (self.reg_mass @ u))
        return fid + self.alpha * reg


@dataclass
class SolveResult:
    solution: DiscreteVectorField
    residual_norm: float
    constraint_value: float
    regularizer_value: float
    objective_value: float
    alpha: float
    method: str
    iterations: int = 0
    condition_estimate: float = float("nan")
    info: dict = field(default_factory=dict)

    def report_lines(self):
        lines = [
            f"alpha = {self.alpha!r}",
            f"residual_norm = {self.residual_norm!r}",
            f"constraint_value = {self.constraint_value!r}",
            f"regularizer_value = {self.regularizer_value!r}",
            f"objective_value = {self.objective_value!r}",
            f"method = {self.method}",
            f"iterations = {self.iterations}",
            f"condition_estimate = {self.condition_estimate!r}",
        ]
        lines += [f"{k} = {v!r}" for k, v in sorted(self.info.items())]
        return lines

    def save_report(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.report_lines()) + "\n")


def regularizer_matrix(carrier, t, regularizer: str):
    if regularizer == "split_seminorm":
        return split_stiffness(carrier, t)
    if regularizer == "ambient_seminorm":
        return ambient_stiffness(carrier, t)
    if regularizer == "full_norm":
        return (vector_mass(carrier, t) + split_stiffness(carrier, t)).tocsr()
    raise ValueError(f"unknown regularizer {regularizer!r}")


def regularizer_factor(carrier, t, regularizer: str):
    """``(G, M)`` with ``regularizer_matrix == G.T @ G + M``; ``M`` may be None."""
    G = sp.kron(stiffness_factor(carrier, t), sp.identity(2), format="csr")
    if regularizer == "ambient_seminorm":
        return G, None
    G = (G @ frame_rotation(carrier, t)).tocsr()
    if regularizer == "split_seminorm":
        return G, None
    if regularizer == "full_norm":
        return G, vector_mass(carrier, t)
    raise ValueError(f"unknown regularizer {regularizer!r}")


def regularizer_value(u: DiscreteVectorField, regularizer: str) -> float:
    """``R(u)`` evaluated through the field norms."""
    if regularizer == "split_seminorm":
        return h1_split_seminorm(u) ** 2
    if regularizer == "ambient_seminorm":
        return h1_ambient_seminorm(u) ** 2
    if regularizer == "full_norm":
        return h1_split_norm(u) ** 2
    raise ValueError(f"unknown regularizer {regularizer!r}")


def _fidelity_parts(problem: TikhonovProblem):
    F = problem.forward
    A = F.matrix
    M2 = F.target_mass
    if F.is_dense:
        H = A.T @ (M2 @ A)
    else:
        H = (A.T @ M2 @ A).tocsr()
    if problem.tangential_constraint:
        P = normal_projector(problem.carrier, problem.grid)
        C = (P.T @ vector_mass(problem.carrier, problem.grid) @ P).tocsr()
        H = H + C.toarray() if F.is_dense else (H + C).tocsr()
    rhs = np.asarray(A.T @ (M2 @ problem.data))
    c0 = float(problem.data @ (M2 @ problem.data))
    return H, rhs, c0


def assemble_normal_equations(problem: TikhonovProblem) -> NormalEquations:
    """Weak-form optimality system of the Tikhonov functional.

    Raises
    ------
    ValueError
        If ``alpha <= 0`` or the system has non-finite entries.
    """
    if not problem.alpha > 0:
        raise ValueError("Tikhonov assembly needs alpha > 0")
    H, rhs, c0 = _fidelity_parts(problem)
    K = regularizer_matrix(problem.carrier, problem.grid, problem.regularizer)
    if isinstance(H, np.ndarray):
        A = H + problem.alpha * K.toarray()
        A = 0.5 * (A + A.T)
        finite = np.all(np.isfinite(A))
    else:
        A = (H + problem.alpha * K).tocsr()
        A = (0.5 * (A + A.T)).tocsr()
        finite = np.all(np.isfinite(A.data))
    if not finite or not np.all(np.isfinite(rhs)):
        raise ValueError("normal equations contain non-finite entries")
    G, Mr = regularizer_factor(problem.carrier, problem.grid, problem.regularizer)
    return NormalEquations(A, rhs, c0, fidelity=H, alpha=problem.alpha, reg_factor=G, reg_mass=Mr)


def evaluate_objective(problem: TikhonovProblem, u: DiscreteVectorField) -> dict:
    """Each term of ``T(u)``, computed from field norms rather than the assembled system."""
    F = problem.forward
    r = F.apply(u.flat) - problem.data
    residual_sq = float(r @ (F.target_mass @ r))
    constraint = 0.0
    if problem.tangential_constraint:
        constraint = l2_norm(decompose(u)[1]) ** 2
    reg = regularizer_value(u, problem.regularizer)
    return {
        "residual_norm": float(np.sqrt(max(residual_sq, 0.0))),
        "constraint_value": constraint,
        "regularizer_value": reg,
        "objective_value": residual_sq + constraint + problem.alpha * reg,
    }


def _cg(A, b, rtol=1e-10):
    n = b.size
    diag = A.diagonal() if sp.issparse(A) else np.diag(A)
    if np.any(diag <= 0):
        raise SolverError("non-positive diagonal; CG needs an SPD system", {"min_diag": float(diag.min())})
    precond = spla.LinearOperator((n, n), matvec=lambda x: x / diag)
    count = [0]

    def cb(_):
        count[0] += 1

    x, info = spla.cg(A, b, rtol=rtol, maxiter=10 * n, M=precond, callback=cb)
    if info != 0:
        raise SolverError("CG did not converge", {"iterations": count[0], "info": info})
    return x, count[0]


def _direct(A, b):
    if isinstance(A, np.ndarray):
        c, low = sla.cho_factor(A, lower=True, check_finite=False)
        d = np.abs(np.diag(c))
        return sla.cho_solve((c, low), b), float((d.max() / d.min()) ** 2)
    lu = spla.splu(A.tocsc())
    d = np.abs(lu.U.diagonal())
    return lu.solve(b), float(d.max() / d.min())


def solve(problem: TikhonovProblem, method: str = "direct") -> SolveResult:
    """Minimize the discrete Tikhonov functional.

    ``method="direct"`` uses a Cholesky factorization (dense operators) or a
    sparse LU, falling back to Jacobi-preconditioned CG if the factorization
    fails. ``method="cg"`` goes to CG directly.

    Raises
    ------
    SolverError
        If no method produces a solution.
    """
    ne = assemble_normal_equations(problem)
    A, b = ne.matrix, ne.rhs
    iterations = 0
    cond = float("nan")
    used = method
    if method == "direct":
        try:
            x, cond = _direct(A, b)
        except (np.linalg.LinAlgError, RuntimeError):
            x, iterations = _cg(A, b)
            used = "cg-fallback"
    elif method == "cg":
        x, iterations = _cg(A, b)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SolverError("solution is not finite", {"method": used})
    u = problem.forward.source_field(x)
    terms = evaluate_objective(problem, u)
    # report the assembled form; evaluate_objective stays an independent check
    terms["objective_value"] = ne.objective(x)
    return SolveResult(
        solution=u, alpha=problem.alpha, method=used, iterations=iterations,
        condition_estimate=cond,
        info={"regularizer": problem.regularizer,
              "tangential_constraint": problem.tangential_constraint},
        **terms,
    )


@dataclass(frozen=True)
class OptimalityCheck:
    passed: bool
    min_change: float
    tolerance: float
    objective: float


def check_optimality(problem: TikhonovProblem, result: SolveResult, n_directions: int = 20,
                     eps: float = 1e-6, seed: int = 0) -> OptimalityCheck:
    """Perturb the solution by ``eps * d`` along random directions.

    ``d`` has the coefficient norm of the solution (or 1 for a zero solution).
    The objective may not drop by more than a rounding floor of
    ``1e-12 |T(u)|``.
    """
    rng = np.random.default_rng(seed)
    u = result.solution
    base = evaluate_objective(problem, u)["objective_value"]
    scale = max(float(np.linalg.norm(u.flat)), 1.0)
    changes = []
    for _ in range(n_directions):
        d = rng.standard_normal(u.flat.size)
        d *= scale / np.linalg.norm(d)
        for sign in (1.0, -1.0):
            trial = u.with_values((u.flat + sign * eps * d).reshape(-1, 2))
            changes.append(evaluate_objective(problem, trial)["objective_value"] - base)
    tol = 1e-12 * abs(base)
    worst = float(min(changes))
    return OptimalityCheck(passed=worst >= -tol, min_change=worst, tolerance=tol, objective=base)


def solve_unregularized(problem: TikhonovProblem, cutoff: float = 1e-12) -> SolveResult:
    """Minimum-norm least-squares solution without a regularizer.

    Solved by SVD of the operator between the discrete L^2 spaces, with
    singular values below ``cutoff * sigma_max`` discarded. The normal
    constraint term is kept if the problem activates it.
    """
    F = problem.forward
    Ls = sla.cholesky(F.source_mass.toarray(), lower=True)
    Lt = sla.cholesky(F.target_mass.toarray(), lower=True)
    B = [Lt.T @ F.dense()]
    c = [Lt.T @ problem.data]
    if problem.tangential_constraint:
        P = normal_projector(problem.carrier, problem.grid).toarray()
        B.append(Ls.T @ P)
        c.append(np.zeros(P.shape[0]))
    B = np.vstack(B)
    c = np.concatenate(c)
    # u = Ls^{-T} w turns the source mass norm into the Euclidean one
    G = sla.solve_triangular(Ls, B.T, lower=True).T
    U, s, Vt = sla.svd(G, full_matrices=False)
    keep = s > cutoff * s[0]
    w = Vt[keep].T @ ((U[:, keep].T @ c) / s[keep])
    x = sla.solve_triangular(Ls.T, w, lower=False)
    u = F.source_field(x)
    r = F.apply(x) - problem.data
    residual = float(np.sqrt(max(r @ (F.target_mass @ r), 0.0)))
    constraint = l2_norm(decompose(u)[1]) ** 2 if problem.tangential_constraint else 0.0
    s_min = s[-1] if s[-1] > 0 else 0.0
    return SolveResult(
        solution=u, residual_norm=residual, constraint_value=constraint,
        regularizer_value=regularizer_value(u, problem.regularizer),
        objective_value=residual**2 + constraint, alpha=0.0,
        method="svd-pseudoinverse", condition_estimate=float(s[0] / s_min) if s_min else float("inf"),
        info={"effective_rank": int(keep.sum()), "full_rank": int(s.size),
              "sigma_max": float(s[0]), "sigma_min": float(s[-1])},
    )


def bregman_error(u: DiscreteVectorField, u_dagger: DiscreteVectorField,
                  regularizer: str = "split_seminorm") -> float:
    """Bregman distance of a quadratic penalty: ``R(u - u_dagger)``.

    Raises
    ------
    GridMismatchError
        If the two fields live on different carriers or grids.
    """
    return regularizer_value(u - u_dagger, regularizer)


def second_arclength_derivative(carrier, t, values) -> np.ndarray:
    speed = carrier.speed(t)
    first = param_derivative(values, t, carrier.closed) / speed
    return param_derivative(first, t, carrier.closed) / speed


def check_source_condition_denoising(u_dagger: DiscreteVectorField) -> float:
    """L^2 norm of ``tau d_s^2 <u,tau> + n d_s^2 <u,n>``.

    A value that stays bounded under grid refinement certifies the source
    condition of the denoising problem numerically.
    """
    if u_dagger.n_nodes < 5:
        raise GridTooSmallError("source-condition check needs at least 5 nodes")
    a, b = u_dagger.frame_components()
    carrier, t = u_dagger.carrier, u_dagger.t
    a2 = second_arclength_derivative(carrier, t, a)
    b2 = second_arclength_derivative(carrier, t, b)
    M = mass_matrix(carrier, t)
    return float(np.sqrt(max(a2 @ (M @ a2) + b2 @ (M @ b2), 0.0)))


def alpha_sweep(problem: TikhonovProblem, alphas) -> list:
    return [solve(problem.with_alpha(a)) for a in alphas]


def embedding_problem(carrier, t, data, alpha: float,
                      regularizer: str = "split_seminorm") -> TikhonovProblem:
    """Denoising: the forward operator is the embedding on ``carrier``."""
    from .operators import build_embedding_operator

    values = data.values if isinstance(data, DiscreteVectorField) else np.asarray(data)
    return TikhonovProblem(build_embedding_operator(carrier, t), np.ravel(values), alpha,
                           regularizer)


def relative_l2_error(u: DiscreteVectorField, u_ref: DiscreteVectorField) -> float:
    return l2_norm(u - u_ref) / l2_norm(u_ref)


__all__ = [
    "REGULARIZERS", "TikhonovProblem", "NormalEquations", "SolveResult",
    "assemble_normal_equations", "evaluate_objective", "solve", "check_optimality",
    "OptimalityCheck", "solve_unregularized", "bregman_error",
    "check_source_condition_denoising", "regularizer_value", "regularizer_matrix",
    "alpha_sweep", "embedding_problem", "relative_l2_error",
    "second_arclength_derivative",
]
