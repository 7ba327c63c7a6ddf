import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Optional

import numpy as np

from .bernstein import (
    as_points,
    check_unit_box,
    conversion_matrix,
    eval_bernstein_operator,
    lattice_grid,
    monomial_matrix,
    monomial_vector,
    solve_conversion,
)
from .conf import koopman_setting
from .exceptions import DomainError, EscapeError, OutOfBoxError, ShapeError
from .parallel import chunked_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MapOnBox:
    """
    A map phi of the unit box, vectorized as func: (P, m) -> (P, m).

    Unconfined maps may send lattice points outside [0,1]^m; their images are kept
    (monomials are defined everywhere) but certified bounds refuse them.
    """
    func: Callable
    dimension: int
    label: str = ''
    lipschitz: Optional[Any] = None
    confined: bool = True

    @classmethod
    def identity(cls, dimension):
        return cls(func=lambda points: np.array(points, dtype=float), dimension=dimension,
                   label='identity')

    def __call__(self, x):
        points, single = as_points(x, self.dimension)
        values = self.images(points)
        return values[0] if single else values

    def images(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = chunked_map(self.func, points)
        return np.asarray(values, dtype=float).reshape(len(points), self.dimension)

    def with_lipschitz(self, lipschitz):
        return replace(self, lipschitz=lipschitz)

    def checked_images(self, points):
        """Images of `points`, enforcing the unit box for confined maps."""
        values = self.images(points)
        tolerance = koopman_setting('BOX_TOLERANCE')
        outside = np.any((values < -tolerance) | (values > 1.0 + tolerance), axis=1)
        if np.any(outside):
            if self.confined:
                first = int(np.flatnonzero(outside)[0])
                raise OutOfBoxError(first, values[first])
            logger.warning(
                "%d of %d images of '%s' lie outside the unit box",
                int(outside.sum()), len(values), self.label,
            )
            return values
        return np.clip(values, 0.0, 1.0)


def gamma_index(degree, axis):
    """Position of the coordinate monomial x_axis inside X(x) (0-based)."""
    if not 0 <= axis < degree.m:
        raise DomainError(f"Axis {axis} outside [0, {degree.m - 1}]")
    return int(np.prod([n + 1 for n in degree.degrees[axis + 1:]], dtype=np.int64))


def gamma_indices(degree):
    return tuple(gamma_index(degree, axis) for axis in range(degree.m))


@dataclass(frozen=True, eq=False)
class KoopmanMatrices:
    """
    Conversion matrix C, sample matrix U (column j = X(phi(x_hat_j))) and the Koopman
    matrices K_B = C U (Bernstein basis) and K^X = U C (monomial basis).

    `coordinates`, when set, is a LatticeMap whose lattice coordinates the matrices act
    in; predictions are lifted through its inverse and unlifted through it.
    """
    degree: Any
    conversion: np.ndarray
    samples: np.ndarray
    bernstein: np.ndarray
    monomial: np.ndarray
    gamma: tuple
    coordinates: Optional[Any] = None
    label: str = ''

    @classmethod
    def from_images(cls, degree, images, coordinates=None, label=''):
        images = np.asarray(images, dtype=float).reshape(-1, degree.m)
        if len(images) != degree.size:
            raise ShapeError(f"Expected {degree.size} lattice images, got {len(images)}")
        conversion = conversion_matrix(degree)
        samples = monomial_matrix(degree, images).T
        logger.info("Built Koopman matrices for '%s': degree %s, N=%d", label, degree, degree.size)
        return cls(
            degree=degree,
            conversion=conversion,
            samples=samples,
            bernstein=conversion @ samples,
            monomial=samples @ conversion,
            gamma=gamma_indices(degree),
            coordinates=coordinates,
            label=label,
        )

    @property
    def size(self):
        return self.degree.size

    @property
    def grid(self):
        return lattice_grid(self.degree)

    @property
    def images(self):
        """Lattice images phi(x_hat_j), read back from the rows gamma of U, shape (N, m)."""
        return self.samples[list(self.gamma), :].T


def build_sample_matrix(map_on_box, grid):
    if map_on_box.dimension != grid.degree.m:
        raise ShapeError(f"Map dimension {map_on_box.dimension} does not match degree {grid.degree}")
    images = map_on_box.checked_images(grid.points)
    return monomial_matrix(grid.degree, images).T


def build_koopman_matrices(map_on_box, degree):
    grid = lattice_grid(degree)
    if map_on_box.dimension != degree.m:
        raise ShapeError(f"Map dimension {map_on_box.dimension} does not match degree {degree}")
    images = map_on_box.checked_images(grid.points)
    return KoopmanMatrices.from_images(degree, images, label=map_on_box.label)


def _lift_initial_state(matrices, x0):
    x0 = np.asarray(x0, dtype=float).reshape(matrices.degree.m)
    if matrices.coordinates is not None:
        return matrices.coordinates.inverse(x0[None, :], extrapolate=True)[0]
    check_unit_box(x0[None, :])
    return x0


def _unlift(matrices, states):
    if matrices.coordinates is None:
        return states
    return matrices.coordinates.forward(states, extrapolate=True)


def predict_trajectory(matrices, x0, steps):
    """
    Linear predictor: state k has components [(K^X)^k X(x0)]_gamma. X is lifted once
    at x0 and then propagated by k matrix-vector products. Returns shape (steps, m).
    """
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    lifted = monomial_vector(matrices.degree, _lift_initial_state(matrices, x0))
    gamma = list(matrices.gamma)
    states = np.empty((steps, matrices.degree.m))
    left_box = None
    for step in range(steps):
        lifted = matrices.monomial @ lifted
        states[step] = lifted[gamma]
        if left_box is None and np.any((states[step] < 0.0) | (states[step] > 1.0)):
            left_box = step + 1
    if left_box is not None:
        logger.warning("Linear prediction left the unit box at step %d", left_box)
    return _unlift(matrices, states)


def predict_trajectory_relift(matrices, x0, steps):
    """Nonlinear predictor: state_{k+1} = [K^X X(state_k)]_gamma, relifting every step."""
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    state = _lift_initial_state(matrices, x0)
    gamma = list(matrices.gamma)
    tolerance = koopman_setting('BOX_TOLERANCE')
    states = np.empty((steps, matrices.degree.m))
    for step in range(steps):
        state = (matrices.monomial @ monomial_vector(matrices.degree, state))[gamma]
        states[step] = state
        if step + 1 < steps:
            if np.any((state < -tolerance) | (state > 1.0 + tolerance)):
                raise EscapeError(f"Relifted state left the unit box at step {step + 1}: {state}",
                                  step=step + 1)
            state = np.clip(state, 0.0, 1.0)
    return _unlift(matrices, states)


def bernstein_coefficients(observable, degree):
    """Bernstein coefficients of B_n f, i.e. the lattice samples f(x_hat_j)."""
    return observable(lattice_grid(degree).points)


def koopman_coefficients(observable, matrices):
    """Bernstein coefficients of B_n K f, i.e. f(phi(x_hat_j))."""
    return observable(matrices.images)


def apply_to_coefficients(matrices, coefficients, times=1):
    """Propagate Bernstein coefficients through B_n K: c -> K_B^T c, `times` times."""
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape[0] != matrices.size:
        raise ShapeError(f"Expected {matrices.size} coefficients, got {coefficients.shape[0]}")
    for _ in range(times):
        coefficients = matrices.bernstein.T @ coefficients
    return coefficients


def monomial_from_bernstein(matrices):
    """C^{-1} K_B C by triangular solves; equals K^X up to rounding."""
    return solve_conversion(matrices.degree, matrices.bernstein @ matrices.conversion)


@dataclass(frozen=True)
class ErrorSample:
    points: np.ndarray
    exact: np.ndarray
    approximate: np.ndarray

    @property
    def errors(self):
        return np.abs(self.approximate - self.exact)

    @property
    def sup(self):
        return float(np.max(self.errors)) if len(self.errors) else 0.0


def approximation_error(observable, map_on_box, degree, points, matrices=None, steps=1):
    """
    Measured |(B_n K)^k f - K^k f| at `points`. For k > 1 the map must keep `points`
    inside the unit box so that K^k f is defined through phi alone.
    """
    matrices = matrices or build_koopman_matrices(map_on_box, degree)
    coefficients = apply_to_coefficients(matrices, koopman_coefficients(observable, matrices),
                                         times=steps - 1)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    approximate = chunked_map(
        lambda chunk: eval_bernstein_operator(coefficients, matrices.grid, chunk), points
    )
    state = points
    for _ in range(steps):
        state = map_on_box.images(state)
    return ErrorSample(points=points, exact=observable(state), approximate=approximate)
