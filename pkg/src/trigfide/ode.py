"""Collocation grid and spectral operators for the second-order solver.

After shifting the problem frame so the padded interval starts at 0, the
unknown is represented through its second derivative's sine coefficients:

    v(x) = a_{-1} + a_0 x - (b/pi)^2 sum_j (b_j / j^2) sin(j*pi*x/b)

Everything here is linear algebra on the node values ``V_e = (v_0..v_M)``:
recovering ``(a_{-1}, a_0, B)`` from ``V_e``, the smoothing operator that
maps right-hand-side samples onto the discrete equation, and the dense
derivative matrix ``A`` with ``U_e = A V_e``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import CommensurabilityError, ConstructionInconsistencyError
from .fft import is_power_of_two
from .sine_series import sine_matrix

_COMMENSURABILITY_TOL = 1e-9
_A_CROSS_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class CollocationGrid:
    """Nodes ``x_k = k*b/M`` on ``[0, b]`` with s, e pinned to nodes m, m+n."""

    m_half: int          # M; node count is M+1, sine modes 1..M-1
    b: float
    m: int               # s = x_m
    n: int               # e = x_{m+n}
    offset: float = 0.0  # shift back to the caller's coordinates

    @property
    def spacing(self):
        return self.b / self.m_half

    @property
    def nodes(self):
        return self.spacing * np.arange(self.m_half + 1)

    @property
    def start(self):
        return self.m * self.spacing

    @property
    def end(self):
        return (self.m + self.n) * self.spacing


def build_grid(s, e, delta, q):
    """Collocation grid for the padded interval of ``[s, e]`` at ``M = 2^q``.

    The frame is shifted by ``o = s - delta`` so the padded interval becomes
    ``[0, b]`` with ``b = e + delta - o``.  Both ``s`` and ``e`` must land on
    grid nodes; otherwise a :class:`CommensurabilityError` reports the
    fractional node index.
    """
    if q < 2:
        raise ValueError(f"resolution exponent q must be >= 2, got {q}")
    if not s < e:
        raise ValueError(f"need s < e, got [{s}, {e}]")
    if delta <= 0:
        raise ValueError(f"margin must be positive, got {delta}")
    offset = s - delta
    b = e + delta - offset
    m_half = 2 ** q
    lam = b / m_half
    m_exact = (s - offset) / lam
    m = round(m_exact)
    if abs(m_exact - m) > _COMMENSURABILITY_TOL * m_half:
        raise CommensurabilityError("M*(s-o)/b", m_exact)
    n_exact = (e - s) / lam
    n = round(n_exact)
    if abs(n_exact - n) > _COMMENSURABILITY_TOL * m_half:
        raise CommensurabilityError("M*(e-s)/b", n_exact)
    if not 0 < m < m + n < m_half:
        raise ValueError(
            f"interval nodes m={m}, m+n={m + n} must lie strictly inside "
            f"(0, {m_half})"
        )
    return CollocationGrid(m_half=m_half, b=b, m=m, n=n, offset=offset)


@dataclass(frozen=True)
class SolutionSeries:
    """Solved representation ``(a_{-1}, a_0, B)`` on the frame ``(offset, b)``."""

    a_minus1: float
    a0: float
    coeffs: np.ndarray = field(repr=False)   # b_j, j = 1..M-1
    b: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))


def eval_solution(sol, x):
    """Value of the reconstructed function at ``x`` (caller coordinates)."""
    xs = np.asarray(x, dtype=float) - sol.offset
    j = np.arange(1, sol.coeffs.size + 1)
    phase = np.multiply.outer(xs, j * np.pi / sol.b)
    series = np.sin(phase) @ (sol.coeffs / j ** 2)
    out = sol.a_minus1 + sol.a0 * xs - (sol.b / np.pi) ** 2 * series
    return float(out) if np.ndim(x) == 0 else out


def eval_solution_derivative(sol, x):
    """First derivative of the reconstructed function at ``x``."""
    xs = np.asarray(x, dtype=float) - sol.offset
    j = np.arange(1, sol.coeffs.size + 1)
    phase = np.multiply.outer(xs, j * np.pi / sol.b)
    series = np.cos(phase) @ (sol.coeffs / j)
    out = sol.a0 - (sol.b / np.pi) * series
    return float(out) if np.ndim(x) == 0 else out


def eval_solution_second_derivative(sol, x):
    """Second derivative: the plain sine series with coefficients ``b_j``."""
    xs = np.asarray(x, dtype=float) - sol.offset
    j = np.arange(1, sol.coeffs.size + 1)
    phase = np.multiply.outer(xs, j * np.pi / sol.b)
    out = np.sin(phase) @ sol.coeffs
    return float(out) if np.ndim(x) == 0 else out


def sample_solution_nodes(sol, grid):
    """Node values ``V_e`` of the series on its own grid."""
    return eval_solution(sol, grid.offset + grid.nodes)


def b_from_v(grid, v_ext):
    """Recover the series ``(a_{-1}, a_0, B)`` from node values ``V_e``."""
    v_ext = np.asarray(v_ext, dtype=float)
    m_half, b = grid.m_half, grid.b
    if v_ext.shape != (m_half + 1,):
        raise ValueError(f"expected {m_half + 1} node values, got {v_ext.shape}")
    a_minus1 = v_ext[0]
    a0 = (v_ext[-1] - v_ext[0]) / b
    k = np.arange(1, m_half)
    s_mat = sine_matrix(m_half)
    inner = (
        (2.0 * a_minus1 * np.pi ** 2 / (m_half * b ** 2)) * np.ones(m_half - 1)
        + (2.0 * a0 * np.pi ** 2 / (b * m_half ** 2)) * k
        - (2.0 * np.pi ** 2 / (m_half * b ** 2)) * v_ext[1:-1]
    )
    coeffs = k ** 2 * (s_mat @ inner)
    return SolutionSeries(
        a_minus1=a_minus1, a0=a0, coeffs=coeffs, b=b, offset=grid.offset
    )


def build_theta(m_half):
    """Smoothing operator ``Theta = (2/M) S diag(1/K^2) S``.

    This is the unique matrix for which the interior collocation identity

        pi^2/b^2 * [v_0 (M-K)/M + v_M K/M - V] = Theta @ Z

    holds exactly whenever ``Z`` samples the second derivative of an
    in-basis function; equivalently the inverse of ``S diag(K^2) S * 2/M``
    scaled into the second-derivative relation.
    """
    if m_half < 4:
        raise ValueError(f"M must be >= 4, got {m_half}")
    k = np.arange(1, m_half)
    s_mat = sine_matrix(m_half)
    return (2.0 / m_half) * (s_mat / k ** 2) @ s_mat


def _cot_zero_at_multiples(r, n):
    """cot(pi*r/n) with the value 0 wherever r is a multiple of n."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    mask = np.mod(r, n) != 0
    out[mask] = 1.0 / np.tan(np.pi * r[mask] / n)
    return out


def _derivative_matrix_composed(grid):
    # U_e = A V_e assembled by chaining V_e -> (a_{-1}, a_0, B) -> U_e.
    m_half, b = grid.m_half, grid.b
    k = np.arange(1, m_half)
    s_mat = sine_matrix(m_half)
    e0 = np.zeros(m_half + 1)
    e0[0] = 1.0
    e_m = np.zeros(m_half + 1)
    e_m[-1] = 1.0
    selector = np.zeros((m_half - 1, m_half + 1))
    selector[:, 1:m_half] = np.eye(m_half - 1)
    c = 2.0 * np.pi ** 2 / (m_half * b ** 2)
    inner = (
        c * np.outer(np.ones(m_half - 1), e0)
        + (2.0 * np.pi ** 2 / (b ** 2 * m_half ** 2)) * np.outer(k, e_m - e0)
        - c * selector
    )
    b_map = k[:, None] ** 2 * (s_mat @ inner)
    nodes = np.arange(m_half + 1)
    cos_mat = np.cos(np.pi * np.outer(nodes, k) / m_half)
    return (
        np.outer(np.ones(m_half + 1), (e_m - e0) / b)
        - (b / np.pi) * (cos_mat / k) @ b_map
    )


def _derivative_matrix_closed_form(grid):
    # Same matrix from the explicit cot/tan entry formulas.
    m_half, b = grid.m_half, grid.b
    n_full = 2 * m_half
    k = np.arange(1, m_half)
    cot_k = 1.0 / np.tan(np.pi * k / n_full)
    tan_k = np.tan(np.pi * k / n_full)
    alt = (-1.0) ** k
    a = np.empty((m_half + 1, m_half + 1))

    a[0, 0] = (
        (np.pi / b) * np.sum(alt * cot_k)
        - (np.pi / (b * m_half)) * np.sum(alt * k * cot_k)
        - 1.0 / b
    )
    a[0, 1:m_half] = -(np.pi / b) * alt * cot_k
    a[0, m_half] = (np.pi / (b * m_half)) * np.sum(alt * k * cot_k) + 1.0 / b

    i = np.arange(1, m_half)
    # cot_pair[i-1, l-1] = Cot((i+l)pi/N) + Cot((l-i)pi/N), Cot(0) := 0
    cot_pair = _cot_zero_at_multiples(i[:, None] + k[None, :], n_full) + \
        _cot_zero_at_multiples(k[None, :] - i[:, None], n_full)
    sign_i = (-1.0) ** i
    row_weight = cot_pair * alt[None, :]
    a[1:m_half, 0] = (
        (np.pi / (2 * b)) * sign_i * row_weight.sum(axis=1)
        - (np.pi / (2 * b * m_half)) * sign_i * (row_weight * k[None, :]).sum(axis=1)
        - 1.0 / b
    )
    a[1:m_half, 1:m_half] = (np.pi / (2 * b)) * (-sign_i)[:, None] * row_weight
    a[1:m_half, m_half] = (
        (np.pi / (2 * b * m_half)) * sign_i * (row_weight * k[None, :]).sum(axis=1)
        + 1.0 / b
    )

    a[m_half, 0] = (
        -(np.pi / b) * np.sum(alt * tan_k)
        - (np.pi / (b * m_half)) * np.sum(k * cot_k)
        - 1.0 / b
    )
    a[m_half, 1:m_half] = (np.pi / b) * alt * tan_k
    a[m_half, m_half] = (np.pi / (b * m_half)) * np.sum(k * cot_k) + 1.0 / b
    return a


def build_derivative_matrix(grid):
    """Dense ``(M+1)^2`` matrix with ``U_e = A V_e`` for in-basis functions.

    Assembled twice, by composition and from the closed-form entries; the
    two must agree or the build aborts, since a silent mismatch would
    corrupt every boundary row downstream.  The composed matrix is returned.
    """
    composed = _derivative_matrix_composed(grid)
    closed = _derivative_matrix_closed_form(grid)
    scale = np.max(np.abs(composed))
    deviation = np.abs(composed - closed)
    worst = np.unravel_index(np.argmax(deviation), deviation.shape)
    rel = deviation[worst] / scale
    if rel > _A_CROSS_CHECK_TOL:
        raise ConstructionInconsistencyError(rel, tuple(int(w) for w in worst))
    return composed


@dataclass(frozen=True)
class SpectralOperators:
    """Grid-level operators shared by every kernel path."""

    grid: CollocationGrid
    s_mat: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    deriv: np.ndarray = field(repr=False)

    @property
    def mode_index(self):
        return np.arange(1, self.grid.m_half)


def build_operators(grid):
    return SpectralOperators(
        grid=grid,
        s_mat=sine_matrix(grid.m_half),
        theta=build_theta(grid.m_half),
        deriv=build_derivative_matrix(grid),
    )
