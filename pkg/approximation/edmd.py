import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .bernstein import monomial_matrix, monomial_vector
from .conf import koopman_setting
from .domain import Box
from .exceptions import DomainError, RankError
from .koopman import gamma_indices

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EdmdMatrices:
    """Least-squares Koopman matrix K = U_Y U_X^+ over the monomial dictionary X."""
    degree: object
    inputs: np.ndarray
    outputs: np.ndarray
    koopman: np.ndarray
    rank: int
    tolerance: float
    gamma: tuple
    domain: Box

    def residual(self, matrix=None):
        matrix = self.koopman if matrix is None else matrix
        return float(np.linalg.norm(matrix @ self.inputs - self.outputs))


def pseudoinverse(matrix, tolerance):
    """Truncated-SVD pseudoinverse dropping singular values below tolerance * s_max."""
    left, singular, right = linalg.svd(matrix, full_matrices=False)
    if singular.size == 0 or singular[0] == 0.0:
        raise RankError("All singular values vanish")
    keep = singular >= tolerance * singular[0]
    rank = int(keep.sum())
    inverse = (right[:rank].T / singular[:rank]) @ left[:, :rank].T
    return inverse, rank


def build_edmd(data, degree, tolerance=None):
    """
    U_X columns X(x_j), U_Y columns X(y_j), in the coordinates of the data domain
    rescaled to the unit box.
    """
    data.check_degree(degree)
    tolerance = tolerance if tolerance is not None else koopman_setting('PINV_TOLERANCE')
    domain = data.domain
    inputs = monomial_matrix(degree, domain.to_unit(data.inputs)).T
    outputs = monomial_matrix(degree, domain.to_unit(data.outputs)).T
    inverse, rank = pseudoinverse(inputs, tolerance)
    logger.info("EDMD pseudoinverse kept rank %d of %d (tolerance %.1e)", rank, degree.size, tolerance)
    return EdmdMatrices(
        degree=degree,
        inputs=inputs,
        outputs=outputs,
        koopman=outputs @ inverse,
        rank=rank,
        tolerance=tolerance,
        gamma=gamma_indices(degree),
        domain=domain,
    )


def predict_edmd(matrices, x0, steps):
    """Lift X(x0) once, multiply by K `steps` times and read the coordinates at gamma."""
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    x0 = matrices.domain.to_unit(np.asarray(x0, dtype=float).reshape(matrices.degree.m))
    lifted = monomial_vector(matrices.degree, x0)
    gamma = list(matrices.gamma)
    states = np.empty((steps, matrices.degree.m))
    for step in range(steps):
        lifted = matrices.koopman @ lifted
        states[step] = lifted[gamma]
    return matrices.domain.from_unit(states)
