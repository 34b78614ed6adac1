"""Reduction of the integral term to node values and the dense solve.

The integral term ``g(x) = mu(x) int_s^e k(x,t) v(t) dt`` is rewritten as an
affine map ``G = C0 v_0 + Cm v_m + CM v_M + Crest V`` of the node values.
Two routes exist:

* continuous kernels: ``k`` is replaced by its 2-D sine interpolant and the
  products of sine modes are integrated in closed form;
* kernels with an integrable diagonal singularity ``|x-t|^gamma``
  (``gamma > -1``): integrating by parts twice moves the integral onto the
  smooth second antiderivative ``k2`` (``d k2/dt = k1``, ``d k1/dt = k``,
  both vanishing on the diagonal), leaving boundary terms at ``t = s`` and
  ``t = e``.  The derivative values appearing there are routed through rows
  m and m+n of the derivative matrix so the map stays a pure function of
  the node values.

Both maps are validated against quadrature; the validated map, the boundary
conditions and the interior collocation rows are then assembled into one
``(M+1)``-dimensional dense system.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .cutoff import CutoffSpec, cutoff_eval
from .exceptions import (
    RepresentationValidationError,
    SingularSystemError,
    SolveStageError,
    TrigfideError,
)
from .interp2d import SineSeries2D, eval_2d, interpolate_2d
from .ode import (
    SolutionSeries,
    b_from_v,
    build_grid,
    build_operators,
    eval_solution,
    eval_solution_derivative,
    eval_solution_second_derivative,
)
from .quadrature import gauss_panels, integrate_with_diagonal_power

_CONDITION_LIMIT = 1e14
_CONDITION_WARN = 1e12
_RANK_TOL = 1e-10
_FRAME_TOL = 1e-12
_CONTINUOUS_ORACLE_TOL = 1e-8
_SINGULAR_ORACLE_TOL = 1e-6
_VALIDATION_EXPONENT = 4   # reduced grid (M = 16) for build-time validation
_ANTIDERIVATIVE_SPOT_TOL = 1e-6


@dataclass(frozen=True)
class BoundarySpec:
    """Two combined conditions ``D @ (v(s), v'(s), v(e), v'(e)) = (alpha, beta)``."""

    d: np.ndarray = field(repr=False)
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.shape != (2, 4):
            raise ValueError(f"boundary matrix must be 2x4, got {d.shape}")
        sv = np.linalg.svd(d, compute_uv=False)
        if sv[1] <= _RANK_TOL * sv[0]:
            raise ValueError(
                f"boundary matrix is rank deficient (singular values {sv})"
            )
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class ContinuousKernel:
    """Kernel smooth enough to interpolate directly."""

    fun: Callable                      # k(x, t), broadcasts over arrays
    diag_power: Optional[float] = None  # derivative kink |x-t|^p, for quadrature


@dataclass(frozen=True)
class SingularKernel:
    """Kernel ``|x-t|^gamma * kappa(x,t)`` with its two antiderivatives in t.

    ``kappa`` is the smooth cofactor; keeping it separate lets quadrature
    evaluate ``|x-t|`` from an exact offset instead of a cancelling
    subtraction.  ``k1`` and ``k2`` must satisfy ``d k1/dt = k``,
    ``d k2/dt = k1`` and vanish at ``t = x``.
    """

    gamma: float
    kappa: Callable
    k1: Callable
    k2: Callable

    def __post_init__(self):
        if self.gamma <= -1.0:
            raise ValueError(f"gamma must be > -1, got {self.gamma}")

    def fun(self, x, t):
        return np.abs(x - t) ** self.gamma * self.kappa(x, t)


def spot_check_antiderivatives(kernel, s, e, rtol=_ANTIDERIVATIVE_SPOT_TOL):
    """Finite-difference check of the antiderivative chain, off-diagonal.

    Verifies ``d k1/dt = k`` and ``d k2/dt = k1`` at a few well-separated
    points plus ``k1(x,x) = k2(x,x) = 0``; raises ``ValueError`` on failure.
    """
    xs = np.array([s + 0.21 * (e - s), s + 0.57 * (e - s)])
    ts = np.array([s + 0.83 * (e - s), s + 0.11 * (e - s)])
    h = 1e-5 * (e - s)
    for x in xs:
        if abs(kernel.k1(x, x)) > rtol or abs(kernel.k2(x, x)) > rtol:
            raise ValueError("antiderivatives do not vanish on the diagonal")
        for t in ts:
            dk1 = (kernel.k1(x, t + h) - kernel.k1(x, t - h)) / (2 * h)
            k_val = kernel.fun(x, t)
            if abs(dk1 - k_val) > rtol * max(1.0, abs(k_val)):
                raise ValueError(
                    f"d k1/dt != k at (x, t) = ({x}, {t}): {dk1} vs {k_val}"
                )
            dk2 = (kernel.k2(x, t + h) - kernel.k2(x, t - h)) / (2 * h)
            k1_val = kernel.k1(x, t)
            if abs(dk2 - k1_val) > rtol * max(1.0, abs(k1_val)):
                raise ValueError(
                    f"d k2/dt != k1 at (x, t) = ({x}, {t}): {dk2} vs {k1_val}"
                )


@dataclass(frozen=True)
class FideProblem:
    """Second-order problem ``y'' = p y' + q y + r + mu * integral`` on [s, e]."""

    p: Callable
    q: Callable
    r: Callable
    mu: Callable
    kernel: object               # ContinuousKernel | SingularKernel
    bc: BoundarySpec
    s: float
    e: float
    delta: float


@dataclass(frozen=True)
class GMap:
    """Affine map from node values to integral-term samples at inner nodes."""

    c0: np.ndarray = field(repr=False)
    cM: np.ndarray = field(repr=False)
    crest: np.ndarray = field(repr=False)
    cm: Optional[np.ndarray] = field(default=None, repr=False)
    m_index: int = 0

    def apply(self, v_ext):
        v_ext = np.asarray(v_ext, dtype=float)
        out = self.c0 * v_ext[0] + self.cM * v_ext[-1] + self.crest @ v_ext[1:-1]
        if self.cm is not None:
            out = out + self.cm * v_ext[self.m_index]
        return out


class NodeSamples(NamedTuple):
    """Window-weighted coefficient samples at the interior nodes."""

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    nu: np.ndarray   # mu * window


def node_samples(problem, grid):
    window_spec = CutoffSpec(grid.start, grid.end, problem.delta)
    x_local = grid.nodes[1:-1]
    h = cutoff_eval(window_spec, x_local)
    x = grid.offset + x_local
    return NodeSamples(
        p=np.asarray(problem.p(x), dtype=float) * h,
        q=np.asarray(problem.q(x), dtype=float) * h,
        r=np.asarray(problem.r(x), dtype=float) * h,
        nu=np.asarray(problem.mu(x), dtype=float) * h,
    )


def _check_kernel_frames(grid, coeffs2d):
    m = grid.m_half
    ok = (
        coeffs2d.coeffs.shape == (m - 1, m - 1)
        and abs(coeffs2d.b1 - grid.b) < _FRAME_TOL * grid.b
        and abs(coeffs2d.b2 - grid.b) < _FRAME_TOL * grid.b
        and abs(coeffs2d.offset1 - grid.offset) < _FRAME_TOL * grid.b
        and abs(coeffs2d.offset2 - grid.offset) < _FRAME_TOL * grid.b
    )
    if not ok:
        raise ValueError(
            "kernel interpolant frames do not match the collocation grid"
        )


def _sine_product_integrals(grid):
    # (2*pi/b) * int_s^e sin(j*pi*t/b) sin(l*pi*t/b) dt in closed form
    m_half, n_full = grid.m_half, 2 * grid.m_half
    m, n = grid.m, grid.n
    k = np.arange(1, m_half)
    diff = k[:, None] - k[None, :]
    tot = k[:, None] + k[None, :]

    def swing(r):
        return np.sin(2 * np.pi * r * (m + n) / n_full) - np.sin(
            2 * np.pi * r * m / n_full
        )

    with np.errstate(divide="ignore", invalid="ignore"):
        head = np.where(diff != 0, swing(diff) / np.where(diff == 0, 1, diff), 0.0)
    head += np.where(diff == 0, 2 * np.pi * n / n_full, 0.0)
    return head - swing(tot) / tot


def g_map_continuous(grid, ops, kernel_coeffs, mu_samples):
    """Integral-term map for an interpolated kernel.

    The map reproduces ``nu_k * int_s^e khat(x_k, t) vtilde(t) dt`` exactly
    (up to roundoff) for every in-basis function, since the mode products
    are integrated in closed form.
    """
    _check_kernel_frames(grid, kernel_coeffs)
    m_half, b = grid.m_half, grid.b
    n_full = 2 * m_half
    k = np.arange(1, m_half)
    nu = np.asarray(mu_samples, dtype=float)
    c = kernel_coeffs.coeffs
    eta = ops.s_mat @ c
    eta_hat = eta / k[None, :]
    cos_s = np.cos(2 * np.pi * k * grid.m / n_full)
    cos_e = np.cos(2 * np.pi * k * (grid.m + grid.n) / n_full)
    sin_s = np.sin(2 * np.pi * k * grid.m / n_full)
    sin_e = np.sin(2 * np.pi * k * (grid.m + grid.n) / n_full)
    w_m1 = cos_s - cos_e
    w_0 = grid.start * cos_s - grid.end * cos_e + (b / (np.pi * k)) * (sin_e - sin_s)
    # The printed W carries 1/l^2 which cancels against diag(K^2) inside H.
    h_mat = eta @ _sine_product_integrals(grid) @ ops.s_mat
    c_cap = (b / np.pi) * nu * (eta_hat @ w_0 / b - (h_mat @ k) / m_half ** 2)
    c_zero = (
        (b / np.pi) * nu * (eta_hat @ w_m1 - h_mat.sum(axis=1) / m_half) - c_cap
    )
    c_rest = (b / (np.pi * m_half)) * nu[:, None] * h_mat
    return GMap(c0=c_zero, cM=c_cap, crest=c_rest, cm=None, m_index=grid.m)


def g_map_singular(grid, ops, kernel, k2_coeffs, mu_samples):
    """Integral-term map via the twice-integrated-by-parts identity.

    int_s^e k v dt = -k1(x,s)v(s) + k2(x,s)v'(s) + k1(x,e)v(e)
                     - k2(x,e)v'(e) + int_s^e k2(x,t) v''(t) dt

    with ``k2`` interpolated; derivative values are expressed through rows
    m and m+n of the derivative matrix, the ``v(e)`` term lands in the
    ``m+n`` column of ``Crest`` and ``v(s)`` keeps its own block ``Cm``.
    """
    _check_kernel_frames(grid, k2_coeffs)
    m_half, b = grid.m_half, grid.b
    k = np.arange(1, m_half)
    nu = np.asarray(mu_samples, dtype=float)
    eta = ops.s_mat @ k2_coeffs.coeffs
    h_mat = eta @ _sine_product_integrals(grid) @ (k[:, None] ** 2 * ops.s_mat)
    # h_mat here is eta @ Wtilde @ diag(K^2) @ S with Wtilde carrying no 1/l^2
    x = grid.offset + grid.nodes[1:-1]
    s_orig = grid.offset + grid.start
    e_orig = grid.offset + grid.end
    k1_s = nu * np.asarray(kernel.k1(x, s_orig), dtype=float)
    k2_s = nu * np.asarray(kernel.k2(x, s_orig), dtype=float)
    k1_e = nu * np.asarray(kernel.k1(x, e_orig), dtype=float)
    k2_e = nu * np.asarray(kernel.k2(x, e_orig), dtype=float)
    a_mat = ops.deriv
    row_s = a_mat[grid.m]
    row_e = a_mat[grid.m + grid.n]
    c_zero = (
        (np.pi / b) * nu * (h_mat.sum(axis=1) / m_half - (h_mat @ k) / m_half ** 2)
        + row_s[0] * k2_s
        - row_e[0] * k2_e
    )
    c_cap = (
        (np.pi / (b * m_half ** 2)) * nu * (h_mat @ k)
        + row_s[-1] * k2_s
        - row_e[-1] * k2_e
    )
    c_m = -k1_s
    c_rest = (
        -(np.pi / (b * m_half)) * nu[:, None] * h_mat
        + np.outer(k2_s, row_s[1:-1])
        - np.outer(k2_e, row_e[1:-1])
    )
    c_rest[:, grid.m + grid.n - 1] += k1_e
    return GMap(c0=c_zero, cM=c_cap, crest=c_rest, cm=c_m, m_index=grid.m)


def quadrature_gmap_continuous(grid, kernel_coeffs, mu_samples, sol):
    """Reference values ``nu_k * int_s^e khat(x_k, t) vtilde(t) dt``."""
    s_orig = grid.offset + grid.start
    e_orig = grid.offset + grid.end
    x = grid.offset + grid.nodes[1:-1]
    out = np.empty(x.size)
    for i, xi in enumerate(x):
        def f(t):
            return eval_2d(kernel_coeffs, xi, t)[0] * eval_solution(sol, t)

        out[i] = gauss_panels(f, s_orig, e_orig, panels=12)
    return np.asarray(mu_samples, dtype=float) * out


def quadrature_gmap_singular(grid, kernel, mu_samples, sol, k2_coeffs=None):
    """Reference integral-term samples for a singular kernel.

    With ``k2_coeffs`` given, quadratures the same object the map encodes
    (boundary terms plus the interpolated ``k2`` against ``vtilde''``),
    isolating algebra errors.  Without it, integrates the true kernel with
    graded quadrature, which additionally sees the ``k2`` interpolation
    error.
    """
    s_orig = grid.offset + grid.start
    e_orig = grid.offset + grid.end
    x = grid.offset + grid.nodes[1:-1]
    out = np.empty(x.size)
    if k2_coeffs is None:
        for i, xi in enumerate(x):
            def f(t, u):
                return (
                    np.abs(u) ** kernel.gamma
                    * kernel.kappa(xi, t)
                    * eval_solution(sol, t)
                )

            out[i] = integrate_with_diagonal_power(
                f, xi, s_orig, e_orig, kernel.gamma
            )
    else:
        v_s = eval_solution(sol, s_orig)
        v_e = eval_solution(sol, e_orig)
        u_s = eval_solution_derivative(sol, s_orig)
        u_e = eval_solution_derivative(sol, e_orig)
        for i, xi in enumerate(x):
            def f(t):
                return eval_2d(k2_coeffs, xi, t)[0] * \
                    eval_solution_second_derivative(sol, t)

            out[i] = (
                -kernel.k1(xi, s_orig) * v_s
                + kernel.k2(xi, s_orig) * u_s
                + kernel.k1(xi, e_orig) * v_e
                - kernel.k2(xi, e_orig) * u_e
                + gauss_panels(f, s_orig, e_orig, panels=12)
            )
    return np.asarray(mu_samples, dtype=float) * out


def assemble_system(problem, grid, ops, gmap):
    """Dense collocation system ``Phi V_e = Psi``.

    Row 0 and row M encode the two boundary conditions through the
    derivative matrix; interior rows encode the collocation identity with
    the integral term eliminated through ``gmap``.
    """
    m_half, b = grid.m_half, grid.b
    k = np.arange(1, m_half)
    samples = node_samples(problem, grid)
    a_mat, theta = ops.deriv, ops.theta
    d = problem.bc.d
    phi = np.empty((m_half + 1, m_half + 1))
    for row, out_row in ((0, 0), (1, m_half)):
        phi[out_row] = d[row, 1] * a_mat[grid.m] + d[row, 3] * a_mat[grid.m + grid.n]
        phi[out_row, grid.m] += d[row, 0]
        phi[out_row, grid.m + grid.n] += d[row, 2]
    theta_p = theta * samples.p[None, :]
    interior = theta_p @ a_mat[1:-1, :]
    interior[:, 0] += -(m_half - k) * np.pi ** 2 / (m_half * b ** 2)
    interior[:, -1] += -k * np.pi ** 2 / (m_half * b ** 2)
    interior[:, 1:-1] += (np.pi ** 2 / b ** 2) * np.eye(m_half - 1)
    interior[:, 1:-1] += theta * samples.q[None, :]
    interior[:, 0] += theta @ gmap.c0
    interior[:, -1] += theta @ gmap.cM
    interior[:, 1:-1] += theta @ gmap.crest
    if gmap.cm is not None:
        interior[:, gmap.m_index] += theta @ gmap.cm
    phi[1:-1] = interior
    psi = np.empty(m_half + 1)
    psi[0] = problem.bc.alpha
    psi[-1] = problem.bc.beta
    psi[1:-1] = -(theta @ samples.r)
    condition = np.linalg.cond(phi)
    if condition > _CONDITION_LIMIT:
        raise SingularSystemError(
            f"collocation matrix is numerically rank deficient "
            f"(condition estimate {condition:.2e})"
        )
    return phi, psi


class DenseSolution(NamedTuple):
    values: np.ndarray
    condition: float
    ill_conditioned: bool


def solve_dense(phi, psi):
    """LU solve with a condition estimate; flags badly conditioned systems."""
    phi = np.asarray(phi, dtype=float)
    psi = np.asarray(psi, dtype=float)
    if not (np.isfinite(phi).all() and np.isfinite(psi).all()):
        raise ValueError("system contains non-finite entries")
    condition = np.linalg.cond(phi)
    try:
        values = np.linalg.solve(phi, psi)
    except np.linalg.LinAlgError as err:
        raise SingularSystemError(f"dense solve failed: {err}") from err
    return DenseSolution(
        values=values,
        condition=float(condition),
        ill_conditioned=bool(condition > _CONDITION_WARN),
    )


def _random_in_basis(grid, rng, decay=2.0):
    m_half = grid.m_half
    j = np.arange(1, m_half)
    coeffs = rng.standard_normal(m_half - 1) / j ** decay
    return SolutionSeries(
        a_minus1=rng.standard_normal(),
        a0=rng.standard_normal(),
        coeffs=coeffs,
        b=grid.b,
        offset=grid.offset,
    )


def _validate_gmap(grid, ops, gmap, reference, rng, trials, tolerance):
    # Compare the map against quadrature on random in-basis functions,
    # restricted to nodes inside [s, e] where the reduction is meant to be
    # exact (outside, the window reshapes the extension on purpose).
    inner = slice(grid.m, grid.m + grid.n + 1)
    worst = 0.0
    worst_node = 0
    for _ in range(trials):
        sol = _random_in_basis(grid, rng)
        v_ext = eval_solution(sol, grid.offset + grid.nodes)
        got = gmap.apply(v_ext)
        want = reference(sol)
        scale = max(np.max(np.abs(want)), 1e-30)
        dev = np.abs(got - want)[grid.m - 1:grid.m + grid.n]
        node = int(np.argmax(dev)) + grid.m
        if dev.max() / scale > worst:
            worst = dev.max() / scale
            worst_node = node
    if worst > tolerance:
        raise RepresentationValidationError(worst, worst_node, tolerance)
    return worst


def validate_gmap_continuous(grid, ops, kernel_coeffs, mu_samples,
                             rng=None, trials=3, tolerance=_CONTINUOUS_ORACLE_TOL):
    rng = np.random.default_rng(0) if rng is None else rng
    gmap = g_map_continuous(grid, ops, kernel_coeffs, mu_samples)

    def reference(sol):
        return quadrature_gmap_continuous(grid, kernel_coeffs, mu_samples, sol)

    return _validate_gmap(grid, ops, gmap, reference, rng, trials, tolerance)


def validate_gmap_singular(grid, ops, kernel, k2_coeffs, mu_samples,
                           rng=None, trials=3, tolerance=_SINGULAR_ORACLE_TOL):
    rng = np.random.default_rng(0) if rng is None else rng
    gmap = g_map_singular(grid, ops, kernel, k2_coeffs, mu_samples)

    def reference(sol):
        return quadrature_gmap_singular(
            grid, kernel, mu_samples, sol, k2_coeffs=k2_coeffs
        )

    return _validate_gmap(grid, ops, gmap, reference, rng, trials, tolerance)


def _stage(name):
    class _Stage:
        def __enter__(self):
            return None

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, TrigfideError):
                raise SolveStageError(name, exc) from exc
            return False

    return _Stage()


def solve_fide(problem, q, seed=0, validate=True):
    """Solve the problem at resolution ``M = 2^q``; returns the series.

    ``validate=True`` additionally rebuilds the integral-term map on a
    reduced grid and checks it against quadrature before trusting the full
    one (the derivative matrix cross-check always runs).  ``seed`` fixes
    the random in-basis functions used by that check.
    """
    rng = np.random.default_rng(seed)
    with _stage("grid"):
        grid = build_grid(problem.s, problem.e, problem.delta, q)
    with _stage("operators"):
        ops = build_operators(grid)
    samples = node_samples(problem, grid)
    window = CutoffSpec(problem.s, problem.e, problem.delta)
    singular = isinstance(problem.kernel, SingularKernel)
    with _stage("kernel-interpolation"):
        target = problem.kernel.k2 if singular else problem.kernel.fun
        coeffs = interpolate_2d(target, window, window, q, q)
    with _stage("integral-term"):
        if singular:
            gmap = g_map_singular(grid, ops, problem.kernel, coeffs, samples.nu)
        else:
            gmap = g_map_continuous(grid, ops, coeffs, samples.nu)
    if validate:
        with _stage("validation"):
            _reduced_validation(problem, window, singular, rng)
    with _stage("assembly"):
        phi, psi = assemble_system(problem, grid, ops, gmap)
    with _stage("solve"):
        solution = solve_dense(phi, psi)
    with _stage("reconstruction"):
        return b_from_v(grid, solution.values)


def _reduced_validation(problem, window, singular, rng):
    try:
        grid = build_grid(problem.s, problem.e, problem.delta, _VALIDATION_EXPONENT)
    except TrigfideError:
        return  # interval not commensurate at the reduced size; nothing to check
    ops = build_operators(grid)
    samples = node_samples(problem, grid)
    if singular:
        spot_check_antiderivatives(problem.kernel, problem.s, problem.e)
        coeffs = interpolate_2d(
            problem.kernel.k2, window, window,
            _VALIDATION_EXPONENT, _VALIDATION_EXPONENT,
        )
        validate_gmap_singular(grid, ops, problem.kernel, coeffs, samples.nu, rng=rng)
    else:
        coeffs = interpolate_2d(
            problem.kernel.fun, window, window,
            _VALIDATION_EXPONENT, _VALIDATION_EXPONENT,
        )
        validate_gmap_continuous(grid, ops, coeffs, samples.nu, rng=rng)
