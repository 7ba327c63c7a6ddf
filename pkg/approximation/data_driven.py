"""
Scattered-data extension: a piecewise-linear map S carrying the regular lattice of
[0,1]^m onto the data points, and Koopman matrices built in the pulled-back
coordinates x~ = S^{-1}(x).

Each lattice cell is split into m! simplices by the Kuhn (sorted-coordinates)
triangulation: in cell c with local coordinates t = n*x - c, the simplex of the
axis order sigma is {1 >= t_sigma1 >= ... >= t_sigmam >= 0}, with vertices
v_0 = c and v_i = v_{i-1} + e_{sigma_i}.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bernstein import DegreeVector, as_points, check_unit_box, eval_bernstein_operator, lattice_grid
from .bounds import LipschitzData, bound_multivariate_full, bound_multivariate_partial
from .conf import koopman_setting
from .domain import Box
from .exceptions import (
    AssignmentError,
    DegenerateSimplexError,
    DomainError,
    OutOfHullError,
    ShapeError,
)
from .koopman import ErrorSample, KoopmanMatrices

logger = logging.getLogger(__name__)

INVERSE_CHUNK = 128
INSIDE_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class DataSet:
    """Snapshot pairs (x_j, y_j = phi(x_j)) in a box D."""
    inputs: np.ndarray
    outputs: np.ndarray
    domain: Box = None

    def __post_init__(self):
        inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        outputs = np.atleast_2d(np.asarray(self.outputs, dtype=float))
        if inputs.shape != outputs.shape:
            raise ShapeError(f"Inputs {inputs.shape} and outputs {outputs.shape} differ in shape")
        if len(np.unique(inputs, axis=0)) != len(inputs):
            raise DomainError("Data inputs must be pairwise distinct")
        object.__setattr__(self, 'inputs', inputs)
        object.__setattr__(self, 'outputs', outputs)
        if self.domain is None:
            object.__setattr__(self, 'domain', Box.bounding(inputs))

    @property
    def m(self):
        return self.inputs.shape[1]

    @property
    def size(self):
        return len(self.inputs)

    def check_degree(self, degree):
        if degree.m != self.m:
            raise ShapeError(f"Degree {degree} does not match data dimension {self.m}")
        if degree.size != self.size:
            raise ShapeError(
                f"Degree {degree} needs {degree.size} data points, the data set has {self.size}"
            )

    def with_outputs(self, outputs):
        return DataSet(self.inputs, outputs, self.domain)


def _validate_permutation(assignment, size):
    assignment = np.asarray(assignment, dtype=int).ravel()
    if len(assignment) != size:
        raise ShapeError(f"Assignment has {len(assignment)} entries, expected {size}")
    if not np.array_equal(np.sort(assignment), np.arange(size)):
        raise DomainError("Assignment is not a permutation of the data indices")
    return assignment


def lattice_edges(degree):
    """Pairs of flat indices of lattice vertices joined by a lattice edge, shape (E, 2)."""
    index = np.arange(degree.size).reshape(degree.shape)
    edges = []
    for axis in range(degree.m):
        head = tuple(slice(0, -1) if l == axis else slice(None) for l in range(degree.m))
        tail = tuple(slice(1, None) if l == axis else slice(None) for l in range(degree.m))
        edges.append(np.stack([index[head].ravel(), index[tail].ravel()], axis=1))
    return np.concatenate(edges, axis=0)


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _first_crossing(points, edges):
    starts, ends = points[edges[:, 0]], points[edges[:, 1]]
    for begin in range(0, len(edges), 256):
        block = slice(begin, begin + 256)
        p1, p2 = starts[block, None, :], ends[block, None, :]
        q1, q2 = starts[None, :, :], ends[None, :, :]
        d1, d2 = _cross(p2 - p1, q1 - p1), _cross(p2 - p1, q2 - p1)
        d3, d4 = _cross(q2 - q1, p1 - q1), _cross(q2 - q1, p2 - q1)
        proper = (d1 * d2 < 0) & (d3 * d4 < 0)
        shared = (edges[block, None, :, None] == edges[None, :, None, :]).any(axis=(2, 3))
        hits = np.argwhere(proper & ~shared)
        if len(hits):
            return begin + int(hits[0, 0]), int(hits[0, 1])
    return None


def verify_assignment(data, degree, assignment):
    """
    Check that the lattice edges carried to the data by `assignment` do not cross
    (m = 2) or keep their order (m = 1). Returns the validated permutation.
    """
    data.check_degree(degree)
    assignment = _validate_permutation(assignment, data.size)
    vertices = data.inputs[assignment]
    if degree.m == 1:
        steps = np.diff(vertices[:, 0])
        if not (np.all(steps > 0) or np.all(steps < 0)):
            raise AssignmentError("Assigned 1-D points are not monotone along the lattice")
    elif degree.m == 2:
        crossing = _first_crossing(vertices, lattice_edges(degree))
        if crossing is not None:
            edges = lattice_edges(degree)
            raise AssignmentError(
                f"Lattice edges {tuple(edges[crossing[0]])} and {tuple(edges[crossing[1]])} "
                f"cross after assignment; supply a permutation file"
            )
    logger.info("Assignment verified for %d points (degree %s)", data.size, degree)
    return assignment


def build_assignment(data, degree):
    """
    0-based permutation: lattice vertex j is paired with data point assignment[j].
    m = 1 sorts the points; m = 2 sorts by the second coordinate into n_2 + 1 bands
    of n_1 + 1 points and each band by the first coordinate.
    """
    data.check_degree(degree)
    if degree.m == 1:
        assignment = np.argsort(data.inputs[:, 0], kind='stable')
    elif degree.m == 2:
        n1, n2 = degree.degrees
        by_second = np.argsort(data.inputs[:, 1], kind='stable')
        bands = by_second.reshape(n2 + 1, n1 + 1)
        bands = np.take_along_axis(bands, np.argsort(data.inputs[bands, 0], axis=1, kind='stable'),
                                   axis=1)
        # lattice index k1 * (n2 + 1) + k2 sits at band k2, position k1
        assignment = bands.T.ravel()
    else:
        raise AssignmentError(
            f"No built-in assignment heuristic for m = {degree.m}; supply a permutation file"
        )
    return verify_assignment(data, degree, assignment)


@dataclass(frozen=True, eq=False)
class LatticeMap:
    """
    Piecewise-linear S with S(x) = offsets[s] + matrices[s] (x - origins[s]) on simplex s.
    `vertices[j]` is S at lattice vertex j; `simplices[s]` lists the flat lattice
    indices of v_0..v_m and `orders[s]` the axis order sigma.
    """
    degree: DegreeVector
    assignment: np.ndarray
    vertices: np.ndarray
    simplices: np.ndarray
    orders: np.ndarray
    origins: np.ndarray
    offsets: np.ndarray
    matrices: np.ndarray
    inverses: np.ndarray

    @property
    def m(self):
        return self.degree.m

    def _vertex_tensor(self):
        return self.vertices.reshape(self.degree.shape + (self.m,))

    def simplex_index(self, points):
        """Index of the Kuhn simplex containing each unit-box point (boundary pieces outside)."""
        cells, _, order = self._locate(points)
        cell_flat = np.ravel_multi_index(tuple(cells.T), self.degree.degrees)
        codes = (order * (self.m ** np.arange(self.m))).sum(axis=1)
        return cell_flat * math.factorial(self.m) + _order_lookup(self.m)[codes]

    def _locate(self, points):
        n = np.asarray(self.degree.degrees)
        scaled = points * n
        cells = np.clip(np.floor(scaled), 0, n - 1).astype(int)
        local = scaled - cells
        order = np.argsort(-local, axis=1, kind='stable')
        return cells, local, order

    def forward(self, points, extrapolate=False):
        """S(x); with `extrapolate` the boundary pieces are extended affinely outside the box."""
        points, single = as_points(points, self.m)
        if not extrapolate:
            check_unit_box(points, tolerance=koopman_setting('BOX_TOLERANCE'))
        cells, local, order = self._locate(points)
        tensor = self._vertex_tensor()
        rows = np.arange(len(points))
        current = cells.copy()
        result = tensor[tuple(current.T)].copy()
        for i in range(self.m):
            axis = order[:, i]
            previous = tensor[tuple(current.T)]
            current[rows, axis] += 1
            result += local[rows, axis][:, None] * (tensor[tuple(current.T)] - previous)
        return result[0] if single else result

    def apply_piece(self, simplex, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.offsets[simplex] + (points - self.origins[simplex]) @ self.matrices[simplex].T

    def barycentric(self, simplex, points):
        """Barycentric coordinates (beta_0..beta_m) of image points in image simplex `simplex`."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        local = (points - self.offsets[simplex]) @ self.inverses[simplex].T
        ordered = (local * np.asarray(self.degree.degrees))[:, self.orders[simplex]]
        return _barycentric_from_ordered(ordered)

    def inverse(self, points, extrapolate=False):
        """
        S^{-1}(y) by a brute-force scan over the image simplices. A point outside the
        image hull is accepted when S of its pre-image clipped to [0,1]^m lies within
        HULL_TOLERANCE of it, and the clipped pre-image is returned. Clipping local
        coordinates is not the nearest-facet projection, only close to it inside that band.
        Farther points raise OutOfHullError unless `extrapolate` is set, which extends
        the best-matching affine piece instead.
        """
        points, single = as_points(points, self.m)
        n = np.asarray(self.degree.degrees)
        tolerance = koopman_setting('HULL_TOLERANCE')
        orders = self.orders[None, :, :]
        result = np.empty_like(points)
        for begin in range(0, len(points), INVERSE_CHUNK):
            block = points[begin:begin + INVERSE_CHUNK]
            local = np.einsum('sij,qsj->qsi', self.inverses, block[:, None, :] - self.offsets[None])
            ordered = np.take_along_axis(local * n, np.broadcast_to(orders, local.shape), axis=2)
            score = _barycentric_from_ordered(ordered).min(axis=-1)
            best = score.argmax(axis=1)
            rows = np.arange(len(block))
            found = self.origins[best] + local[rows, best]
            for q in np.flatnonzero(score[rows, best] < -INSIDE_TOLERANCE):
                if extrapolate:
                    continue
                clipped = np.clip(found[q], 0.0, 1.0)
                distance = float(np.linalg.norm(self.forward(clipped[None, :])[0] - block[q]))
                if distance > tolerance:
                    raise OutOfHullError(begin + int(q), block[q], distance)
                found[q] = clipped
            result[begin:begin + len(block)] = found
        return result[0] if single else result


def _barycentric_from_ordered(ordered):
    return np.concatenate(
        [1.0 - ordered[..., :1], ordered[..., :-1] - ordered[..., 1:], ordered[..., -1:]], axis=-1
    )


_ORDER_LOOKUPS = {}


def _order_lookup(m):
    """Map base-m codes of axis orders to their position in itertools.permutations order."""
    if m not in _ORDER_LOOKUPS:
        table = np.full(m ** m, -1, dtype=int)
        for position, order in enumerate(itertools.permutations(range(m))):
            table[sum(axis * m ** i for i, axis in enumerate(order))] = position
        _ORDER_LOOKUPS[m] = table
    return _ORDER_LOOKUPS[m]


def build_lattice_map(data, degree, assignment):
    data.check_degree(degree)
    assignment = _validate_permutation(assignment, data.size)
    return lattice_map_from_vertices(degree, data.inputs[assignment], assignment)


def lattice_map_from_vertices(degree, vertices, assignment):
    m = degree.m
    n = np.asarray(degree.degrees)
    cell_count = int(np.prod(n))
    cells = np.stack(np.unravel_index(np.arange(cell_count), tuple(n)), axis=1)
    permutations = list(itertools.permutations(range(m)))

    simplices, orders, origins = [], [], []
    for cell in cells:
        for order in permutations:
            current = cell.copy()
            corner = [np.ravel_multi_index(tuple(current), degree.shape)]
            for axis in order:
                current[axis] += 1
                corner.append(np.ravel_multi_index(tuple(current), degree.shape))
            simplices.append(corner)
            orders.append(order)
            origins.append(cell / n)
    simplices = np.asarray(simplices, dtype=int)
    orders = np.asarray(orders, dtype=int)
    origins = np.asarray(origins, dtype=float)

    corners = vertices[simplices]
    matrices = np.zeros((len(simplices), m, m))
    for i in range(m):
        axes = orders[:, i]
        matrices[np.arange(len(simplices)), :, axes] = (corners[:, i + 1] - corners[:, i]) * n[axes][:, None]

    determinants = np.linalg.det(matrices)
    scales = np.abs(matrices).max(axis=(1, 2)) ** m
    orientation = np.sign(np.median(determinants))
    for s in range(len(simplices)):
        cell = tuple(int(v) for v in cells[s // len(permutations)])
        order = tuple(int(v) for v in orders[s])
        if abs(determinants[s]) <= 1e-12 * scales[s]:
            raise DegenerateSimplexError(cell, order, 'degenerate (zero volume)')
        if np.sign(determinants[s]) != orientation:
            raise DegenerateSimplexError(cell, order, 'inverted relative to its neighbours')

    return LatticeMap(
        degree=degree,
        assignment=np.asarray(assignment, dtype=int),
        vertices=np.asarray(vertices, dtype=float),
        simplices=simplices,
        orders=orders,
        origins=origins,
        offsets=corners[:, 0],
        matrices=matrices,
        inverses=np.linalg.inv(matrices),
    )


def eval_S(lattice_map, x, extrapolate=False):
    return lattice_map.forward(x, extrapolate=extrapolate)


def eval_S_inverse(lattice_map, y, extrapolate=False):
    return lattice_map.inverse(y, extrapolate=extrapolate)


def lipschitz_of_S(lattice_map):
    """L_S: largest spectral norm of the affine pieces; L_S^(l): largest norm of column l."""
    full = float(np.max(np.linalg.norm(lattice_map.matrices, ord=2, axis=(1, 2))))
    partial = tuple(float(v) for v in np.linalg.norm(lattice_map.matrices, axis=1).max(axis=0))
    return LipschitzData(full=full, partial=partial)


def affine_box_map(box):
    """S(x)_l = a_l + (b_l - a_l) x_l as a lattice map of degree (1, ..., 1)."""
    degree = DegreeVector((1,) * box.dimension)
    vertices = box.from_unit(lattice_grid(degree).points)
    return lattice_map_from_vertices(degree, vertices, np.arange(degree.size))


def build_data_koopman(data, degree, lattice_map, label='data'):
    """U~ column j = X(S^{-1}(y_assignment[j])); matrices act in lattice coordinates."""
    data.check_degree(degree)
    targets = data.outputs[lattice_map.assignment]
    try:
        images = lattice_map.inverse(targets)
    except OutOfHullError as exc:
        pair = int(lattice_map.assignment[exc.index])
        raise OutOfHullError(pair, exc.point, exc.distance) from exc
    return KoopmanMatrices.from_images(degree, images, coordinates=lattice_map, label=label)


def data_driven_error(observable, map_on_box, lattice_map, data, points):
    """Measured |B~_n K f - K f| at points of D, with B~_n K f(x) = sum_j f(y_pi(j)) B_j(S^{-1}(x))."""
    samples = observable(data.outputs[lattice_map.assignment])
    points = np.atleast_2d(np.asarray(points, dtype=float))
    approximate = eval_bernstein_operator(samples, lattice_grid(lattice_map.degree),
                                          np.clip(lattice_map.inverse(points), 0.0, 1.0))
    return ErrorSample(points=points, exact=observable(map_on_box.images(points)),
                       approximate=approximate)


def data_driven_bounds(modulus, lipschitz_phi, lipschitz_s, degree):
    """(DataFull, DataPartial): the full and partial bounds for phi o S."""
    full = bound_multivariate_full(modulus, lipschitz_phi * lipschitz_s.full, degree,
                                   tag='DataFull')
    partial = bound_multivariate_partial(
        modulus, [lipschitz_phi * value for value in lipschitz_s.partial], degree, tag='DataPartial'
    )
    return full, partial


def lattice_dataset(map_on_box, degree, jitter=0.0, warp=None, seed=0, shuffle=True):
    """
    Data on the regular lattice, optionally warped per axis by a monotone `warp` of
    [0,1] and jittered by up to `jitter` lattice cells. Boundary coordinates stay on
    the box faces so that the hull of the data is the whole unit box.
    """
    if not 0.0 <= jitter < 0.5:
        raise DomainError(f"jitter must lie in [0, 0.5), got {jitter}")
    rng = np.random.default_rng(seed)
    grid = lattice_grid(degree)
    n = np.asarray(degree.degrees, dtype=float)
    interior = (grid.multi_indices > 0) & (grid.multi_indices < n)
    offsets = rng.uniform(-jitter, jitter, size=grid.points.shape) / n
    inputs = grid.points + np.where(interior, offsets, 0.0)
    if warp is not None:
        inputs = warp(inputs)
    if shuffle:
        inputs = inputs[rng.permutation(len(inputs))]
    return DataSet(inputs, map_on_box.images(inputs), Box.unit(degree.m))


def jittered_lattice_dataset(map_on_box, degree, jitter=0.1, seed=0):
    return lattice_dataset(map_on_box, degree, jitter=jitter, seed=seed)


def uniform_dataset(map_on_box, count, seed=0):
    """`count` uniform points of the unit box with phi applied; the box corners are included."""
    m = map_on_box.dimension
    corners = Box.unit(m).grid(1)
    if count < len(corners):
        raise DomainError(f"Need at least {len(corners)} points, got {count}")
    rng = np.random.default_rng(seed)
    inputs = np.concatenate([corners, rng.uniform(size=(count - len(corners), m))], axis=0)
    return DataSet(inputs, map_on_box.images(inputs), Box.unit(m))
