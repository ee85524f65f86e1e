"""
Uniform cubic B-spline approximation of curve parametrizations.

The approximant interpolates the exact curve at the knots ``a + k h``.
The two remaining degrees of freedom are fixed by an end condition:

``"second-difference"`` (default)
    ``s''`` at each end equals the one-sided second difference of the
    samples. The W^{2,inf} distance then decays linearly in ``h``.
``"not-a-knot"``
    Third derivative continuous across the first and last interior knot.
``"natural"``
    ``s'' = 0`` at both ends.

Pullbacks between an exact curve and its approximant act on the shared
parameter domain, so a discrete field keeps its nodal coefficients and only
changes its carrier.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import BSpline

from .errors import (
    DegenerateJacobianError,
    DomainMismatchError,
    GridMismatchError,
    RegularityLostError,
    TooFewKnotsError,
)
from .geometry import ParametricCurve

END_CONDITIONS = ("second-difference", "not-a-knot", "natural")


@dataclass(frozen=True, eq=False)
class SplineCurve(ParametricCurve):
    """A uniform cubic B-spline curve; a :class:`ParametricCurve` itself.

    ``control_points`` has ``n + 3`` rows for ``n`` knot intervals.
    """

    knot_step: float = 0.0
    control_points: Optional[np.ndarray] = None
    end_condition: str = "second-difference"

    @property
    def n_intervals(self) -> int:
        return len(self.control_points) - 3


def _bspline_curve(domain, h, ctrl, orientation, closed, name, end_condition):
    a, b = domain
    n = len(ctrl) - 3
    knots = a + h * np.arange(-3, n + 4)
    knots[3] = a
    knots[n + 3] = b
    bs = BSpline(knots, ctrl, 3, extrapolate=True)
    d1 = bs.derivative(1)
    d2 = bs.derivative(2)
    try:
        return SplineCurve(
            domain=(float(a), float(b)),
            eval=lambda t: bs(np.asarray(t, dtype=float)),
            deriv1=lambda t: d1(np.asarray(t, dtype=float)),
            deriv2=lambda t: d2(np.asarray(t, dtype=float)),
            orientation=orientation,
            closed=closed,
            name=name,
            check_samples=max(1025, 8 * n + 1),
            knot_step=float(h),
            control_points=np.array(ctrl, dtype=float),
            end_condition=end_condition,
        )
    except DegenerateJacobianError as exc:
        raise RegularityLostError(str(exc)) from exc


def _control_system(n: int, end_condition: str):
    """Rows mapping control points P_{-1..n+1} to constraints."""
    A = np.zeros((n + 3, n + 3))
    for k in range(n + 1):
        A[k + 1, k:k + 3] = (1 / 6, 4 / 6, 1 / 6)
    if end_condition in ("second-difference", "natural"):
        A[0, 0:3] = (1.0, -2.0, 1.0)
        A[n + 2, n:n + 3] = (1.0, -2.0, 1.0)
    elif end_condition == "not-a-knot":
        A[0, 0:5] = (-1.0, 4.0, -6.0, 4.0, -1.0)
        A[n + 2, n - 2:n + 3] = (-1.0, 4.0, -6.0, 4.0, -1.0)
    else:
        raise ValueError(f"unknown end condition {end_condition!r}; use one of {END_CONDITIONS}")
    return A


def fit_spline(curve: ParametricCurve, h: float,
               end_condition: str = "second-difference") -> SplineCurve:
    """Interpolating uniform cubic spline of ``curve`` with knot step ``h``.

    The step is adjusted to ``(b - a) / round((b - a) / h)`` so the knots
    cover the domain exactly.

    Raises
    ------
    TooFewKnotsError
        If fewer than four knot intervals fit into the domain.
    RegularityLostError
        If ``|s'|`` drops below 1e-12 somewhere.
    """
    a, b = curve.domain
    n = int(round((b - a) / h))
    if n < 4 or h > (b - a) / 4 * (1 + 1e-12):
        raise TooFewKnotsError(f"h = {h:g} leaves {n} knot intervals on [{a:g}, {b:g}]; need >= 4")
    h = (b - a) / n
    knots = a + h * np.arange(n + 1)
    knots[-1] = b
    samples = curve.eval(knots)

    rhs = np.zeros((n + 3, 2))
    rhs[1:n + 2] = samples
    if end_condition == "second-difference":
        rhs[0] = samples[0] - 2 * samples[1] + samples[2]
        rhs[n + 2] = samples[n] - 2 * samples[n - 1] + samples[n - 2]
    ctrl = np.linalg.solve(_control_system(n, end_condition), rhs)
    return _bspline_curve(
        (a, b), h, ctrl, curve.orientation, curve.closed,
        f"spline[h={h:.6g}]({curve.name})", end_condition,
    )


def gamma(exact: ParametricCurve, approx: ParametricCurve, sample_count: int = 4096) -> float:
    """Sampled W^{2,inf} distance between two parametrizations.

    Maximum over the samples of the Euclidean distance of positions, first
    and second derivatives.
    """
    if sample_count < 256:
        raise ValueError("sample_count must be at least 256")
    if not np.allclose(exact.domain, approx.domain, rtol=0, atol=1e-12):
        raise DomainMismatchError(f"domains differ: {exact.domain} vs {approx.domain}")
    t = np.linspace(exact.a, exact.b, sample_count)
    dist = 0.0
    for f, g in ((exact.eval, approx.eval), (exact.deriv1, approx.deriv1),
                 (exact.deriv2, approx.deriv2)):
        dist = max(dist, float(np.max(np.linalg.norm(f(t) - g(t), axis=-1))))
    return dist


@dataclass(frozen=True, eq=False)
class PullbackOperator:
    """Re-carries fields from ``source`` onto ``target`` through the shared
    parameter domain."""

    source: ParametricCurve
    target: ParametricCurve

    def __post_init__(self):
        if not np.allclose(self.source.domain, self.target.domain, rtol=0, atol=1e-12):
            raise DomainMismatchError("pullback needs curves over the same parameter domain")

    def inverse(self) -> "PullbackOperator":
        return PullbackOperator(self.target, self.source)

    def __call__(self, field):
        return pullback(self, field)


def pullback(op: PullbackOperator, field):
    """Same nodal values, carried by ``op.target``.

    Raises
    ------
    GridMismatchError
        If ``field`` is not carried by ``op.source``.
    """
    if field.carrier is not op.source:
        raise GridMismatchError(
            f"field lives on {field.carrier.name!r}, pullback expects {op.source.name!r}"
        )
    return field.with_carrier(op.target)


def operator_perturbation_rho(F_exact, F_approx, pull_source: Optional[PullbackOperator] = None,
                              pull_target: Optional[PullbackOperator] = None,
                              trial_count: int = 20, iterations: int = 100,
                              seed: int = 0, source_norm: str = "l2") -> float:
    """Estimate ``|| T2^{-1} F_approx T1 - F_exact ||`` from below.

    Both operators are :class:`~tikcurve.operators.LinearOperatorDiscrete`
    on matching grids; ``F_approx`` is carried by the approximating curves.
    The composite maps fields on the exact source curve to data on the
    exact target curve. The estimate is the best of ``trial_count`` random
    unit trial fields followed by power iteration on the composite.

    ``source_norm`` selects the norm on the source: ``"l2"`` or ``"h1"``
    (full split norm).
    """
    from .operators import estimate_operator_norm  # local: operators imports fields

    if trial_count < 20:
        raise ValueError("trial_count must be at least 20")
    if pull_source is not None and pull_source.target is not F_approx.source_carrier:
        raise GridMismatchError("source pullback does not end on the approximate source carrier")
    if pull_target is not None and pull_target.source is not F_approx.target_carrier:
        raise GridMismatchError("target pullback does not start on the approximate target carrier")
    if F_exact.shape != F_approx.shape:
        raise GridMismatchError("operators act between different grids")

    # coefficient reinterpretation: the composite's action on nodal vectors
    def diff_apply(u):
        return F_approx.apply(u) - F_exact.apply(u)

    src_gram = F_exact.source_gram(source_norm)
    tgt_gram = F_exact.target_gram()

    def diff_adjoint(y):
        return F_exact.solve_source_gram(
            F_approx.transpose_apply(tgt_gram @ y) - F_exact.transpose_apply(tgt_gram @ y),
            source_norm,
        )

    rng = np.random.default_rng(seed)
    best = 0.0
    best_u = None
    for _ in range(trial_count):
        u = rng.standard_normal(F_exact.shape[1])
        nu = np.sqrt(u @ (src_gram @ u))
        r = diff_apply(u)
        val = np.sqrt(max(r @ (tgt_gram @ r), 0.0)) / nu
        if val >= best:
            best, best_u = val, u
    power = estimate_operator_norm(
        diff_apply, diff_adjoint, src_gram, tgt_gram, start=best_u,
        iterations=iterations,
    )
    return float(max(best, power))


def save_spline(spline: SplineCurve, path) -> None:
    """Write ``a b h count`` then one control point per line."""
    a, b = spline.domain
    ctrl = spline.control_points
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{a!r} {b!r} {spline.knot_step!r} {len(ctrl)}\n")
        for x, y in ctrl:
            fh.write(f"{x:.17g} {y:.17g}\n")


def load_spline(path, orientation: int = 1, closed: bool = False,
                name: str = "spline") -> SplineCurve:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: malformed spline header")
        a, b, h = map(float, header[:3])
        count = int(header[3])
        ctrl = np.loadtxt(fh, ndmin=2)
    if ctrl.shape != (count, 2):
        raise ValueError(f"{path}: expected {count} control points, found {ctrl.shape[0]}")
    return _bspline_curve((a, b), h, ctrl, orientation, closed, name, "loaded")

