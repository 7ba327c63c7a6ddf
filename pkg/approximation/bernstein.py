"""
Bernstein basis polynomials, the multivariate Bernstein operator on the regular
lattice of [0,1]^m, and the Bernstein <-> monomial conversion matrix.

Conventions used throughout the package:

* flat lattice index j (0-based) and multi-index (k_1, ..., k_m) are related by
  j = sum_l k_l * prod_{p>l} (n_p + 1), i.e. C order / last axis fastest, which is
  the ordering of the Kronecker products B^(1) (x) ... (x) B^(m);
* a point set is an array of shape (P, m); functions also accept a single point.
"""
import math
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Callable, Optional

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import binom

from .conf import koopman_setting
from .exceptions import CapabilityError, DomainError, ShapeError


@dataclass(frozen=True)
class DegreeVector:
    """Multi-degree n = (n_1, ..., n_m) of the Bernstein approximation space."""
    degrees: tuple

    def __post_init__(self):
        raw = self.degrees if isinstance(self.degrees, (tuple, list)) else (self.degrees,)
        degrees = []
        for value in raw:
            if isinstance(value, bool) or int(value) != value:
                raise DomainError(f"Degrees must be integers, got {value!r}")
            degrees.append(int(value))
        if not degrees:
            raise ShapeError("A degree vector needs at least one axis")
        if any(n < 1 for n in degrees):
            raise DomainError(f"Every degree must be >= 1, got {tuple(degrees)}")
        size = math.prod(n + 1 for n in degrees)
        if size > np.iinfo(np.intp).max:
            raise DomainError(f"Basis size {size} exceeds the platform index range")
        object.__setattr__(self, 'degrees', tuple(degrees))

    @classmethod
    def parse(cls, text, dimension=None):
        """Parse '10' or '10,20'; a single value is repeated over `dimension` axes."""
        try:
            values = [int(part) for part in str(text).split(',') if part.strip()]
        except ValueError as exc:
            raise DomainError(f"Cannot parse degree '{text}'") from exc
        if dimension and len(values) == 1:
            values = values * dimension
        if dimension and len(values) != dimension:
            raise ShapeError(f"Degree '{text}' does not have {dimension} entries")
        return cls(tuple(values))

    @classmethod
    def uniform(cls, n, dimension):
        return cls((n,) * dimension)

    @property
    def m(self):
        return len(self.degrees)

    @property
    def shape(self):
        return tuple(n + 1 for n in self.degrees)

    @property
    def size(self):
        return math.prod(self.shape)

    @property
    def reciprocal_sum(self):
        return sum(1.0 / n for n in self.degrees)

    def __iter__(self):
        return iter(self.degrees)

    def __len__(self):
        return len(self.degrees)

    def __getitem__(self, axis):
        return self.degrees[axis]

    def __str__(self):
        return ','.join(str(n) for n in self.degrees)


@dataclass(frozen=True, eq=False)
class LatticeGrid:
    """The regular lattice {(k_1/n_1, ..., k_m/n_m)} in lexicographic order."""
    degree: DegreeVector
    points: np.ndarray
    multi_indices: np.ndarray

    @classmethod
    def for_degree(cls, degree):
        multi = np.stack(np.unravel_index(np.arange(degree.size), degree.shape), axis=1)
        points = multi / np.asarray(degree.degrees, dtype=float)
        multi.setflags(write=False)
        points.setflags(write=False)
        return cls(degree=degree, points=points, multi_indices=multi)

    @property
    def size(self):
        return self.degree.size

    def flat_index(self, multi_index):
        multi = np.asarray(multi_index, dtype=int)
        return np.ravel_multi_index(tuple(multi.T), self.degree.shape)

    def multi_index(self, flat_index):
        return np.stack(np.unravel_index(flat_index, self.degree.shape), axis=-1)

    def tensor(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.shape[0] != self.size:
            raise ShapeError(f"Expected {self.size} samples, got {samples.shape[0]}")
        return samples.reshape(self.degree.shape + samples.shape[1:])


@lru_cache(maxsize=64)
def lattice_grid(degree):
    return LatticeGrid.for_degree(degree)


def as_points(x, dimension):
    """
    Normalize `x` to an array of shape (P, m).

    Returns (points, single). For m = 1 a scalar is a single point and a 1-D array
    is a batch; for m > 1 a 1-D array of length m is a single point.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        if dimension != 1:
            raise ShapeError(f"A scalar is not a point of dimension {dimension}")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dimension == 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != dimension:
            raise ShapeError(f"Point has {arr.shape[0]} coordinates, expected {dimension}")
        return arr.reshape(1, dimension), True
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise ShapeError(f"Expected points of shape (P, {dimension}), got {arr.shape}")
    return arr, False


def check_unit_box(points, tolerance=0.0):
    points = np.asarray(points, dtype=float)
    outside = np.any((points < -tolerance) | (points > 1.0 + tolerance), axis=-1)
    if np.any(outside):
        first = int(np.flatnonzero(np.atleast_1d(outside))[0])
        raise DomainError(f"Point {first} lies outside the unit box: {np.atleast_2d(points)[first]}")


@dataclass(frozen=True)
class Observable:
    """
    Scalar function on the unit box. `func` maps an array (P, m) to (P,);
    `gradient`, when given, maps (P, m) to (P, m).
    """
    func: Callable
    dimension: int
    gradient: Optional[Callable] = None
    label: str = ''

    @classmethod
    def constant(cls, value, dimension):
        return cls(
            func=lambda points: np.full(len(points), float(value)),
            dimension=dimension,
            gradient=lambda points: np.zeros((len(points), dimension)),
            label=f'{value}',
        )

    @classmethod
    def coordinate(cls, axis, dimension):
        def gradient(points):
            grad = np.zeros((len(points), dimension))
            grad[:, axis] = 1.0
            return grad

        return cls(
            func=lambda points: np.array(points[:, axis], dtype=float),
            dimension=dimension,
            gradient=gradient,
            label=f'x{axis + 1}',
        )

    @property
    def has_gradient(self):
        return self.gradient is not None

    def __call__(self, x):
        points, single = as_points(x, self.dimension)
        values = np.broadcast_to(np.asarray(self.func(points), dtype=float), (len(points),))
        return float(values[0]) if single else np.array(values)

    def grad(self, x):
        if self.gradient is None:
            raise CapabilityError(f"Observable '{self.label}' has no gradient")
        points, single = as_points(x, self.dimension)
        values = np.broadcast_to(
            np.asarray(self.gradient(points), dtype=float), (len(points), self.dimension)
        )
        return np.array(values[0]) if single else np.array(values)

    def gradient_mismatch(self, samples=20, seed=0, step=1e-6):
        """Largest gap between the gradient and central differences at random interior points."""
        rng = np.random.default_rng(seed)
        points = rng.uniform(0.05, 0.95, size=(samples, self.dimension))
        numeric = np.empty_like(points)
        for axis in range(self.dimension):
            shift = np.zeros(self.dimension)
            shift[axis] = step
            numeric[:, axis] = (self(points + shift) - self(points - shift)) / (2 * step)
        return float(np.max(np.abs(numeric - self.grad(points))))

    def validate(self, resolution=16):
        """Check totality on a grid of the unit box and, if present, the gradient."""
        from .domain import Box

        values = self(Box.unit(self.dimension).grid(resolution))
        if not np.all(np.isfinite(values)):
            raise DomainError(f"Observable '{self.label}' is not finite on the unit box")
        if self.has_gradient:
            mismatch = self.gradient_mismatch()
            tolerance = koopman_setting('GRADIENT_TOLERANCE')
            if mismatch > tolerance:
                raise DomainError(
                    f"Gradient of '{self.label}' differs from finite differences by {mismatch:.3g}"
                )
        return self


def bernstein_basis(n, k, x):
    """b_{n,k}(x) = binom(n,k) x^k (1-x)^(n-k), evaluated through the binomial pmf."""
    if int(n) != n or n < 0:
        raise DomainError(f"Degree must be a non-negative integer, got {n}")
    if int(k) != k or not 0 <= k <= n:
        raise DomainError(f"Index k={k} outside [0, {n}]")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    if n == 0:
        return 1.0
    return float(binom.pmf(int(k), int(n), float(x)))


def basis_matrix(n, x):
    """Values b_{n,k}(x_p) for all k, shape (P, n+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if n == 0:
        return np.ones((len(x), 1))
    return binom.pmf(np.arange(n + 1)[None, :], n, x[:, None])


def _contract(tensor, degrees, points):
    """Sum_k tensor[k] prod_l b_{n_l,k_l}(x_l) for each row of points, axis by axis."""
    result = np.tensordot(basis_matrix(degrees[0], points[:, 0]), tensor, axes=([1], [0]))
    for axis in range(1, len(degrees)):
        basis = basis_matrix(degrees[axis], points[:, axis])
        result = np.einsum('pk,pk...->p...', basis, result)
    return result


def eval_bernstein_operator(samples, grid, x):
    """
    B_n applied to lattice samples: sum_j samples_j prod_l b_{n_l, alpha_l(j)}(x_l).
    `samples_j = f(x_hat_j)` gives B_n(f; x).
    """
    tensor = grid.tensor(samples)
    points, single = as_points(x, grid.degree.m)
    check_unit_box(points)
    values = _contract(tensor, grid.degree.degrees, points)
    return float(values[0]) if single else values


def partial_bernstein_operator(samples, grid, axis, x_axis):
    """
    Apply the univariate operator B^(axis) at coordinate x_axis only.

    Returns (reduced_samples, reduced_grid) over the remaining axes, or a float
    when the grid is univariate.
    """
    if not 0 <= axis < grid.degree.m:
        raise DomainError(f"Axis {axis} outside [0, {grid.degree.m - 1}]")
    check_unit_box(np.atleast_1d(x_axis))
    tensor = grid.tensor(samples)
    basis = basis_matrix(grid.degree[axis], [x_axis])[0]
    reduced = np.tensordot(basis, tensor, axes=([0], [axis]))
    if grid.degree.m == 1:
        return float(reduced)
    remaining = DegreeVector(tuple(n for l, n in enumerate(grid.degree) if l != axis))
    return reduced.ravel(), lattice_grid(remaining)


@lru_cache(maxsize=256)
def univariate_conversion_matrix(n):
    """C^(l): entry (k, j) = (-1)^(j-k) binom(n, j) binom(j, k), upper triangular."""
    matrix = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        for j in range(k, n + 1):
            matrix[k, j] = (-1) ** (j - k) * math.comb(n, j) * math.comb(j, k)
    matrix.setflags(write=False)
    return matrix


@lru_cache(maxsize=32)
def conversion_matrix(degree):
    """C = C^(1) (x) ... (x) C^(m), so that B(x) = C X(x)."""
    matrix = reduce(np.kron, [univariate_conversion_matrix(n) for n in degree])
    matrix.setflags(write=False)
    return matrix


def _row_kron(factors):
    result = factors[0]
    for factor in factors[1:]:
        result = (result[:, :, None] * factor[:, None, :]).reshape(len(result), -1)
    return result


def monomial_matrix(degree, points):
    """Rows X(x_p) = X^(1)(x_p1) (x) ... (x) X^(m)(x_pm), shape (P, N). No box check."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    factors = [points[:, l][:, None] ** np.arange(n + 1)[None, :] for l, n in enumerate(degree)]
    return _row_kron(factors)


def monomial_vector(degree, x):
    points, _ = as_points(x, degree.m)
    return monomial_matrix(degree, points)[0]


def bernstein_matrix(degree, points):
    """Rows B(x_p), shape (P, N)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return _row_kron([basis_matrix(n, points[:, l]) for l, n in enumerate(degree)])


def bernstein_vector(degree, x):
    points, _ = as_points(x, degree.m)
    check_unit_box(points)
    return bernstein_matrix(degree, points)[0]


def solve_conversion(degree, rhs, transpose=False):
    """
    Solve C y = rhs (or C^T y = rhs) by per-axis triangular solves; rhs is (N,) or (N, K).
    """
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape[0] != degree.size:
        raise ShapeError(f"Right-hand side has {rhs.shape[0]} rows, expected {degree.size}")
    trailing = rhs.shape[1:]
    tensor = rhs.reshape(degree.shape + (-1,))
    for axis, n in enumerate(degree):
        factor = univariate_conversion_matrix(n)
        moved = np.moveaxis(tensor, axis, 0)
        front_shape = moved.shape
        solved = solve_triangular(
            factor, moved.reshape(n + 1, -1), lower=False, trans='T' if transpose else 'N'
        )
        tensor = np.moveaxis(solved.reshape(front_shape), 0, axis)
    return tensor.reshape((degree.size,) + trailing)


def monomial_to_bernstein_coefficients(degree, monomial_coefficients):
    """Coefficients c with c.B(x) = a.X(x): c = C^{-T} a."""
    return solve_conversion(degree, monomial_coefficients, transpose=True)


def bernstein_gradient(coefficients, grid, x):
    """Exact gradient of c.B(x), shape (P, m) (or (m,) for a single point)."""
    tensor = grid.tensor(coefficients)
    points, single = as_points(x, grid.degree.m)
    check_unit_box(points)
    degrees = grid.degree.degrees
    gradient = np.empty((len(points), len(degrees)))
    for axis, n in enumerate(degrees):
        differences = n * np.diff(tensor, axis=axis)
        reduced = degrees[:axis] + (n - 1,) + degrees[axis + 1:]
        gradient[:, axis] = _contract(differences, reduced, points)
    return gradient[0] if single else gradient
