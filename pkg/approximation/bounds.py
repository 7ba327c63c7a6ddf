"""
Moduli of continuity, Lipschitz constants and the certified uniform error bounds
for the Bernstein approximation of the Koopman operator.

Moduli are estimated by exhaustive pair scans on regular grids (or on sampled image
points), which gives lower bounds of the true moduli; `ModulusEstimate.inflated`
adds one resolution cell for soundness checks.
"""
import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .bernstein import bernstein_gradient, eval_bernstein_operator, lattice_grid
from .conf import koopman_setting, modulus_resolution
from .domain import Box
from .exceptions import CapabilityError, DomainError, ShapeError
from .koopman import apply_to_coefficients, koopman_coefficients
from .parallel import chunked_map

logger = logging.getLogger(__name__)

BOUND_TAGS = (
    'T1', 'T2', 'T3', 'T4', 'T5', 'T6a', 'T6b', 'T6c',
    'AppA', 'MeasNoise', 'DataFull', 'DataPartial',
)
IMAGE_DISTANCE_BINS = 4096
PAIR_CHUNK = 512


@dataclass(frozen=True, eq=False)
class ModulusEstimate:
    """
    Piecewise-constant estimate of a modulus of continuity: `variations[i]` is the
    largest sampled variation over pairs at distance <= `distances[i]`.
    """
    kind: str
    distances: np.ndarray
    variations: np.ndarray
    diameter: float
    cell: float
    axis: Optional[int] = None
    domain: Optional[Box] = None
    inflation: int = 0

    def _lookup(self, argument):
        index = np.searchsorted(self.distances, argument * (1 + 1e-12), side='right') - 1
        return float(self.variations[index]) if index >= 0 else 0.0

    def clamps(self, delta):
        return float(delta) > self.diameter

    def evaluate(self, delta):
        delta = float(delta)
        if delta < 0:
            raise DomainError(f"Modulus argument must be non-negative, got {delta}")
        argument = min(delta, self.diameter)
        if not self.inflation:
            return self._lookup(argument)
        pad = self.inflation * self.cell
        return self._lookup(min(argument + pad, self.diameter)) + self._lookup(pad)

    __call__ = evaluate

    def inflated(self, cells=1):
        return replace(self, inflation=cells)


@dataclass(frozen=True)
class AnalyticModulus:
    """Closed-form modulus, e.g. AnalyticModulus(lambda d: d) for f(x) = x."""
    func: Callable
    diameter: float = math.inf
    kind: str = 'full'
    axis: Optional[int] = None
    cell: float = 0.0

    def clamps(self, delta):
        return float(delta) > self.diameter

    def evaluate(self, delta):
        delta = float(delta)
        if delta < 0:
            raise DomainError(f"Modulus argument must be non-negative, got {delta}")
        return float(self.func(min(delta, self.diameter)))

    __call__ = evaluate

    def inflated(self, cells=1):
        return self


def _as_values(values, count):
    values = np.asarray(values, dtype=float)
    return values.reshape(count, -1)


def _offset_slices(offset, shape):
    first, second = [], []
    for step, size in zip(offset, shape):
        if step >= 0:
            first.append(slice(0, size - step))
            second.append(slice(step, size))
        else:
            first.append(slice(-step, size))
            second.append(slice(0, size + step))
    return tuple(first), tuple(second)


def _variation(tensor, offset, m):
    first, second = _offset_slices(offset, tensor.shape[:m])
    difference = tensor[second] - tensor[first]
    if difference.size == 0:
        return 0.0
    if difference.ndim > m:
        difference = np.linalg.norm(difference, axis=tuple(range(m, difference.ndim)))
    return float(np.max(np.abs(difference)))


def _knots(distances, variations):
    distances = np.concatenate([[0.0], np.asarray(distances, dtype=float)])
    variations = np.concatenate([[0.0], np.asarray(variations, dtype=float)])
    order = np.argsort(distances, kind='stable')
    distances, variations = distances[order], np.maximum.accumulate(variations[order])
    keep = np.append(distances[1:] > distances[:-1], True)
    return distances[keep], variations[keep]


def estimate_modulus(f, domain, kind='full', axis=None, resolution=None):
    """
    Full or partial modulus of `f` over a regular grid of `domain`. `f` maps (P, m)
    points to (P,) values, or to (P, k) vectors whose differences are measured in the
    Euclidean norm.
    """
    m = domain.dimension
    resolution = resolution or modulus_resolution(m)
    if resolution < 16:
        raise DomainError(f"Modulus resolution must be >= 16 per axis, got {resolution}")
    if kind not in ('full', 'partial'):
        raise DomainError(f"Unknown modulus kind '{kind}'")
    if kind == 'partial' and (axis is None or not 0 <= axis < m):
        raise DomainError(f"Partial modulus needs an axis in [0, {m - 1}], got {axis}")

    points = domain.grid(resolution)
    values = _as_values(chunked_map(f, points), len(points))
    shape = (resolution + 1,) * m
    if values.shape[1] == 1:
        tensor = values.reshape(shape)
    else:
        tensor = values.reshape(shape + (values.shape[1],))
    spacing = domain.widths / resolution

    distances, variations = [], []
    if kind == 'partial':
        for step in range(1, resolution + 1):
            offset = [0] * m
            offset[axis] = step
            distances.append(step * spacing[axis])
            variations.append(_variation(tensor, offset, m))
        diameter, cell = float(domain.widths[axis]), float(spacing[axis])
    else:
        for offset in itertools.product(range(-resolution, resolution + 1), repeat=m):
            leading = next((step for step in offset if step != 0), 0)
            if leading <= 0:
                continue
            distances.append(float(np.linalg.norm(np.asarray(offset) * spacing)))
            variations.append(_variation(tensor, offset, m))
        diameter, cell = domain.diameter, float(np.linalg.norm(spacing))

    distances, variations = _knots(distances, variations)
    return ModulusEstimate(kind=kind, distances=distances, variations=variations,
                           diameter=diameter, cell=cell, axis=axis, domain=domain)


def image_samples(map_on_box, resolution=None):
    m = map_on_box.dimension
    resolution = resolution or (
        modulus_resolution(1) if m == 1 else koopman_setting('IMAGE_RESOLUTION_2D')
    )
    return map_on_box.images(Box.unit(m).grid(resolution))


def image_interval(map_on_box, resolution=None):
    """
    [min(phi(0), phi(1)), max(phi(0), phi(1))], widened to the sampled image hull when
    phi is not monotone on the grid.
    """
    if map_on_box.dimension != 1:
        raise ShapeError("image_interval is defined for univariate maps only")
    endpoints = map_on_box.images(np.array([[0.0], [1.0]]))[:, 0]
    low, high = float(endpoints.min()), float(endpoints.max())
    sampled = image_samples(map_on_box, resolution)[:, 0]
    if sampled.min() < low or sampled.max() > high:
        logger.info("Map '%s' is not monotone; widening the image interval", map_on_box.label)
        low, high = min(low, float(sampled.min())), max(high, float(sampled.max()))
    return Box.bounding([[low], [high]])


def image_box(map_on_box, resolution=None):
    return Box.bounding(image_samples(map_on_box, resolution))


def estimate_image_modulus(f, map_on_box, resolution=None):
    """
    Full modulus of `f` restricted to phi([0,1]^m). In one dimension this is the modulus
    on the image interval; otherwise pairs of sampled image points are scanned and the
    largest nearest-neighbour gap of the samples is recorded as the resolution cell.
    """
    if map_on_box.dimension == 1:
        return estimate_modulus(f, image_interval(map_on_box, resolution))

    samples = image_samples(map_on_box, resolution)
    values = _as_values(f(samples), len(samples))
    gaps, _ = cKDTree(samples).query(samples, k=2)
    cell = float(np.max(gaps[:, 1]))
    diameter = Box.bounding(samples).diameter
    edges = np.linspace(0.0, diameter, IMAGE_DISTANCE_BINS + 1)
    binned = np.zeros(IMAGE_DISTANCE_BINS)
    for start in range(0, len(samples), PAIR_CHUNK):
        block = slice(start, start + PAIR_CHUNK)
        distances = np.linalg.norm(samples[block, None, :] - samples[None, :, :], axis=-1)
        variation = np.linalg.norm(values[block, None, :] - values[None, :, :], axis=-1)
        index = np.minimum((distances / diameter * IMAGE_DISTANCE_BINS).astype(int),
                           IMAGE_DISTANCE_BINS - 1)
        np.maximum.at(binned, index.ravel(), variation.ravel())
    distances, variations = _knots(edges[1:], binned)
    return ModulusEstimate(kind='full', distances=distances, variations=variations,
                           diameter=diameter, cell=cell, domain=None)


def sup_over_image(func, map_on_box, resolution=None):
    """max ||func(y)|| over sampled image points y = phi(x)."""
    samples = image_samples(map_on_box, resolution)
    values = _as_values(func(samples), len(samples))
    return float(np.max(np.linalg.norm(values, axis=1)))


@dataclass(frozen=True)
class LipschitzData:
    """Full constant L, partial constants L^(l) and optional derivative constants L^(l)_{d_l g}."""
    full: float
    partial: tuple
    derivative: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, 'partial', tuple(float(v) for v in self.partial))
        if self.derivative is not None:
            object.__setattr__(self, 'derivative', tuple(float(v) for v in self.derivative))
        if self.full < 0 or any(v < 0 for v in self.partial):
            raise DomainError("Lipschitz constants must be non-negative")

    @classmethod
    def scalar(cls, value, derivative=None):
        return cls(full=value, partial=(value,),
                   derivative=None if derivative is None else (derivative,))

    @property
    def m(self):
        return len(self.partial)

    def is_consistent(self, tolerance=1e-9):
        upper = math.sqrt(sum(v * v for v in self.partial))
        return max(self.partial) <= self.full + tolerance and self.full <= upper + tolerance

    def scaled(self, factor, partial_factors=None):
        partial_factors = partial_factors or (factor,) * self.m
        return LipschitzData(self.full * factor,
                             tuple(v * s for v, s in zip(self.partial, partial_factors)))


def estimate_lipschitz(g, domain, resolution=None, derivative=None):
    """
    Lipschitz data of a vector-valued g: (P, m) -> (P, k) from forward-difference
    Jacobians on a regular grid. L is the largest spectral norm, L^(l) the largest
    column norm and the derivative constants the largest second differences along
    each axis, unless closed-form `derivative` constants are supplied.
    """
    m = domain.dimension
    resolution = resolution or koopman_setting('LIPSCHITZ_RESOLUTION')
    if resolution < 16:
        raise DomainError(f"Lipschitz resolution must be >= 16 per axis, got {resolution}")
    points = domain.grid(resolution)
    values = _as_values(chunked_map(g, points), len(points))
    shape = (resolution + 1,) * m
    tensor = values.reshape(shape + (values.shape[1],))
    spacing = domain.widths / resolution
    common = tuple(slice(0, resolution) for _ in range(m))

    columns, partial, second = [], [], []
    for axis in range(m):
        difference = np.diff(tensor, axis=axis) / spacing[axis]
        partial.append(float(np.max(np.linalg.norm(difference, axis=-1))))
        columns.append(difference[common])
        curvature = np.diff(tensor, n=2, axis=axis) / spacing[axis] ** 2
        second.append(float(np.max(np.linalg.norm(curvature, axis=-1))))
    jacobians = np.stack(columns, axis=-1).reshape(-1, values.shape[1], m)
    full = float(np.max(np.linalg.norm(jacobians, ord=2, axis=(1, 2))))
    return LipschitzData(full=full, partial=tuple(partial),
                         derivative=tuple(derivative) if derivative is not None else tuple(second))


def _degree_tuple(degree):
    return tuple(degree) if not isinstance(degree, int) else (degree,)


@dataclass(frozen=True)
class BoundReport:
    tag: str
    value: float
    constants: dict = field(default_factory=dict)
    clamped: bool = False
    degrees: tuple = ()
    steps: int = 1

    def __post_init__(self):
        if self.tag not in BOUND_TAGS:
            raise DomainError(f"Unknown bound tag '{self.tag}'")
        if not self.value >= 0:
            raise DomainError(f"Bound value must be non-negative, got {self.value}")

    @property
    def valid(self):
        return not self.clamped

    @property
    def m(self):
        return len(self.degrees)

    def as_row(self):
        return [
            self.tag, self.m, ';'.join(str(n) for n in self.degrees), self.steps,
            repr(float(self.value)), json.dumps(self.constants, sort_keys=True), int(self.clamped),
        ]


BOUND_CSV_HEADER = ['theorem_tag', 'm', 'degrees', 'k', 'value', 'constants', 'clamped']


def _single_degree(n):
    degrees = _degree_tuple(n)
    if len(degrees) != 1 or degrees[0] < 1:
        raise DomainError(f"Univariate bounds need a single degree >= 1, got {n}")
    return degrees[0]


def bound_univariate_continuous(modulus, lipschitz, n):
    """(3/2) w_f(L_phi / sqrt(n)), w_f taken over the image interval."""
    n = _single_degree(n)
    argument = lipschitz / math.sqrt(n)
    value = 1.5 * modulus(argument)
    return BoundReport('T1', value, {'L_phi': lipschitz, 'delta': argument, 'omega': value / 1.5},
                       clamped=modulus.clamps(argument), degrees=(n,))


def bound_univariate_c1(derivative_modulus, lipschitz, derivative_lipschitz, derivative_sup, n):
    """(1/sqrt n) (L_phi w_f'(L_phi/(2 sqrt n)) + sup|f'(phi)| L_phi'/(2 sqrt n))."""
    if derivative_modulus is None or derivative_lipschitz is None or derivative_sup is None:
        raise CapabilityError("The C1 bound needs the derivative of f and of phi")
    n = _single_degree(n)
    root = math.sqrt(n)
    argument = lipschitz / (2 * root)
    omega = derivative_modulus(argument)
    value = (lipschitz * omega + derivative_sup * derivative_lipschitz / (2 * root)) / root
    return BoundReport(
        'T2', value,
        {'L_phi': lipschitz, 'L_dphi': derivative_lipschitz, 'sup_df': derivative_sup,
         'omega_df': omega},
        clamped=derivative_modulus.clamps(argument), degrees=(n,),
    )


def bound_multivariate_full(modulus, lipschitz, degree, tag='T3'):
    """(3/2) W_f(L_phi sqrt(sum_l 1/n_l)) over the image of the box."""
    degrees = _degree_tuple(degree)
    argument = lipschitz * math.sqrt(sum(1.0 / n for n in degrees))
    omega = modulus(argument)
    return BoundReport(tag, 1.5 * omega, {'L_phi': lipschitz, 'delta': argument, 'omega': omega},
                       clamped=modulus.clamps(argument), degrees=degrees)


def bound_multivariate_partial(modulus, partial_lipschitz, degree, tag='T4'):
    """(3/2) sum_l W_f(L_phi^(l) / sqrt(n_l))."""
    degrees = _degree_tuple(degree)
    partial_lipschitz = tuple(partial_lipschitz)
    if len(partial_lipschitz) != len(degrees):
        raise ShapeError(f"Need {len(degrees)} partial Lipschitz constants")
    arguments = [lip / math.sqrt(n) for lip, n in zip(partial_lipschitz, degrees)]
    omegas = [modulus(argument) for argument in arguments]
    return BoundReport(
        tag, 1.5 * sum(omegas), {'L_phi_partial': list(partial_lipschitz), 'omega': omegas},
        clamped=any(modulus.clamps(argument) for argument in arguments), degrees=degrees,
    )


def bound_multivariate_c1(gradient_modulus, partial_lipschitz, derivative_lipschitz,
                          gradient_sup, degree):
    """sum_l (1/sqrt n_l)(L^(l) W_grad(L^(l)/(2 sqrt n_l)) + sup||grad f|| L^(l)_{d_l phi}/(2 sqrt n_l))."""
    if gradient_modulus is None or derivative_lipschitz is None or gradient_sup is None:
        raise CapabilityError("The C1 bound needs the gradient of f and derivative constants of phi")
    degrees = _degree_tuple(degree)
    if len(partial_lipschitz) != len(degrees) or len(derivative_lipschitz) != len(degrees):
        raise ShapeError(f"Need {len(degrees)} partial constants for the C1 bound")
    value, clamped, omegas = 0.0, False, []
    for lip, dlip, n in zip(partial_lipschitz, derivative_lipschitz, degrees):
        root = math.sqrt(n)
        argument = lip / (2 * root)
        omega = gradient_modulus(argument)
        omegas.append(omega)
        clamped = clamped or gradient_modulus.clamps(argument)
        value += (lip * omega + gradient_sup * dlip / (2 * root)) / root
    return BoundReport(
        'T5', value,
        {'L_phi_partial': list(partial_lipschitz), 'L_dphi_partial': list(derivative_lipschitz),
         'sup_grad': gradient_sup, 'omega_grad': omegas},
        clamped=clamped, degrees=degrees,
    )


ITERATED_TAGS = {'full': 'T6a', 'partial': 'T6b', 'c1': 'T6c'}


def bound_iterated(matrices, observable, lipschitz, steps, variant, initial_modulus,
                   initial_gradient_sup=None, resolution=None, inflation=1):
    """
    Sum over j < k of the single-step bound applied to (B_n K)^j f. The term j = 0 uses
    `initial_modulus` (the modulus of f, or of its gradient for the c1 variant); later
    iterates are the explicit polynomials with Bernstein coefficients
    c_1 = f(phi(x_hat)), c_{j+1} = K_B^T c_j, whose moduli are estimated on the unit box.
    """
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    if variant not in ITERATED_TAGS:
        raise DomainError(f"Unknown iterated variant '{variant}'")
    if variant == 'c1' and (lipschitz.derivative is None or initial_gradient_sup is None):
        raise CapabilityError("The c1 iterated bound needs derivative constants and sup||grad f||")

    degree = matrices.degree
    grid = lattice_grid(degree)
    unit = Box.unit(degree.m)
    coefficients = koopman_coefficients(observable, matrices)
    terms, clamped = [], False
    for j in range(steps):
        if j == 0:
            modulus, gradient_sup = initial_modulus, initial_gradient_sup
        else:
            if j > 1:
                coefficients = apply_to_coefficients(matrices, coefficients)
            current = coefficients
            if variant == 'c1':
                gradient = lambda points, c=current: bernstein_gradient(c, grid, points)
                modulus = estimate_modulus(gradient, unit, resolution=resolution).inflated(inflation)
                gradient_sup = float(np.max(np.linalg.norm(
                    gradient(unit.grid(resolution or modulus_resolution(degree.m))), axis=1)))
            else:
                polynomial = lambda points, c=current: eval_bernstein_operator(c, grid, points)
                modulus = estimate_modulus(polynomial, unit, resolution=resolution).inflated(inflation)

        if variant == 'full':
            report = bound_multivariate_full(modulus, lipschitz.full, degree)
        elif variant == 'partial':
            report = bound_multivariate_partial(modulus, lipschitz.partial, degree)
        else:
            report = bound_multivariate_c1(modulus, lipschitz.partial, lipschitz.derivative,
                                           gradient_sup, degree)
        terms.append(report.value)
        clamped = clamped or report.clamped

    return BoundReport(ITERATED_TAGS[variant], sum(terms), {'terms': terms},
                       clamped=clamped, degrees=tuple(degree), steps=steps)


def bound_iterated_alternative(modulus, lipschitz, degree, steps):
    """(3/2) sum_{l=1}^{k} 4^(k-l) W_f(L_phi^l delta) with delta = sqrt(sum 1/n_l)."""
    if steps < 1:
        raise DomainError(f"steps must be positive, got {steps}")
    degrees = _degree_tuple(degree)
    delta = math.sqrt(sum(1.0 / n for n in degrees))
    terms, clamped = [], False
    for l in range(1, steps + 1):
        argument = lipschitz ** l * delta
        clamped = clamped or modulus.clamps(argument)
        terms.append(4 ** (steps - l) * modulus(argument))
    return BoundReport('AppA', 1.5 * sum(terms), {'L_phi': lipschitz, 'delta': delta, 'terms': terms},
                       clamped=clamped, degrees=degrees, steps=steps)


def bound_measurement_noise(modulus, noise_sup, degree=()):
    """W_f(||Delta||_inf): the effect of perturbed lattice images on B_n K f."""
    if noise_sup < 0:
        raise DomainError(f"noise_sup must be non-negative, got {noise_sup}")
    return BoundReport('MeasNoise', modulus(noise_sup), {'noise_sup': noise_sup},
                       clamped=modulus.clamps(noise_sup), degrees=_degree_tuple(degree))
