"""
Built-in dynamical systems, time-t flow maps rescaled to the unit box, and
measurement noise.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .conf import koopman_setting
from .data_driven import affine_box_map
from .domain import Box
from .exceptions import ConfigurationError, DomainError, EscapeError, UnknownSystemError
from .koopman import MapOnBox
from .parallel import chunked_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FlowSpec:
    """
    A continuous-time system x' = F(x) (kind 'integrated') or its closed-form flow
    (kind 'closed_form'), observed at time `horizon` on `native_box`.
    """
    name: str
    dimension: int
    horizon: float
    native_box: Box
    vector_field: Optional[Callable] = None
    closed_flow: Optional[Callable] = None
    rk4_steps: Optional[int] = None
    guard_box: Optional[Box] = None
    image_box: Optional[Box] = None
    confined: bool = True

    def __post_init__(self):
        if (self.vector_field is None) == (self.closed_flow is None):
            raise ConfigurationError(
                f"System '{self.name}' needs exactly one of a vector field or a closed-form flow"
            )
        if not self.horizon > 0:
            raise DomainError(f"Horizon must be positive, got {self.horizon}")
        if self.native_box.dimension != self.dimension:
            raise ConfigurationError(f"Native box of '{self.name}' has the wrong dimension")

    @property
    def kind(self):
        return 'integrated' if self.vector_field is not None else 'closed_form'

    def step_count(self, horizon=None):
        per_unit = self.rk4_steps or koopman_setting('RK4_STEPS_PER_UNIT_TIME')
        return max(1, math.ceil(per_unit * (horizon or self.horizon)))

    def evolve(self, points, horizon=None, steps=None):
        """Time-t images of native-coordinate points, shape (P, m)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        horizon = self.horizon if horizon is None else horizon
        if self.closed_flow is not None:
            return np.asarray(self.closed_flow(points, horizon), dtype=float).reshape(points.shape)
        return rk4(self.vector_field, points, horizon, steps or self.step_count(horizon),
                   guard=self.guard_box or self.native_box)


def rk4(vector_field, points, horizon, steps, guard=None):
    """Fixed-step classical Runge-Kutta, vectorized over the rows of `points`."""
    state = np.array(points, dtype=float)
    h = horizon / steps
    slack = None if guard is None else 1e-9 * guard.widths
    for step in range(1, steps + 1):
        k1 = vector_field(state)
        k2 = vector_field(state + 0.5 * h * k1)
        k3 = vector_field(state + 0.5 * h * k2)
        k4 = vector_field(state + h * k3)
        state = state + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if guard is not None:
            outside = ~np.all(
                (state >= np.asarray(guard.lower) - slack) & (state <= np.asarray(guard.upper) + slack),
                axis=1,
            )
            if np.any(outside) or not np.all(np.isfinite(state)):
                index = int(np.flatnonzero(outside | ~np.isfinite(state).all(axis=1))[0])
                raise EscapeError(
                    f"Trajectory from point {index} left {guard.as_pairs()} at integration step {step}",
                    step=step,
                )
    return state


def flow_map(spec, rescale_image=False):
    """
    The time-t map in unit coordinates: x -> T^{-1}(phi_t(A(x))) with A = affine_box_map
    of the native box and T = affine_box_map of the native box, or of the image box when
    `rescale_image` is set. Images outside T's box are extended affinely.
    """
    target = spec.native_box
    confined = spec.confined
    if rescale_image:
        if spec.image_box is None:
            raise ConfigurationError(f"System '{spec.name}' does not declare an image box")
        target, confined = spec.image_box, True
    native_map = affine_box_map(spec.native_box)
    target_map = native_map if target is spec.native_box else affine_box_map(target)

    def func(points):
        native = native_map.forward(points, extrapolate=True)
        return target_map.inverse(spec.evolve(native), extrapolate=True)

    label = f"{spec.name} (t={spec.horizon:g}{', image rescaled' if rescale_image else ''})"
    return MapOnBox(func=func, dimension=spec.dimension, label=label, confined=confined)


def step_convergence_gap(spec, points):
    """Largest change of integrated images when the step size is halved."""
    if spec.kind != 'integrated':
        return 0.0
    points = np.atleast_2d(np.asarray(points, dtype=float))
    steps = spec.step_count()
    coarse = chunked_map(lambda chunk: spec.evolve(chunk, steps=steps), points)
    fine = chunked_map(lambda chunk: spec.evolve(chunk, steps=2 * steps), points)
    return float(np.max(np.abs(coarse - fine)))


def add_noise(values, sigma, seed, clamp=True):
    """
    Add N(0, sigma^2) noise to every component, deterministic under `seed`. With
    `clamp` the result is clipped to the unit box. Returns (perturbed, ||Delta||_inf)
    where Delta is the realized difference, clipping included, and ||Delta||_inf is the
    largest Euclidean displacement of a row.
    """
    if sigma < 0:
        raise DomainError(f"sigma must be non-negative, got {sigma}")
    values = np.asarray(values, dtype=float)
    rng = np.random.default_rng(seed)
    perturbed = values + rng.normal(0.0, sigma, size=values.shape) if sigma > 0 else values.copy()
    if clamp:
        perturbed = np.clip(perturbed, 0.0, 1.0)
    difference = np.atleast_1d(perturbed - values)
    rows = difference.reshape(difference.shape[0], -1)
    realized = float(np.max(np.linalg.norm(rows, axis=1))) if values.size else 0.0
    logger.debug("Noise sigma=%g seed=%s realized sup %.3g", sigma, seed, realized)
    return perturbed, realized


def _van_der_pol_field(points):
    x1, x2 = points[:, 0], points[:, 1]
    return np.stack([x2, 0.5 * (1 - x1 ** 2) * x2 - x1], axis=1)


def _logistic_field(points):
    return -points * (1 + points)


def _logistic_flow(points, t):
    growth = math.exp(t)
    return points / (growth + points * (growth - 1))


def _product_decay_field(points):
    x1, x2 = points[:, 0], points[:, 1]
    return np.stack([x1 * (1 + x2), -x2 ** 2], axis=1)


def _product_decay_flow(points, t):
    x1, x2 = points[:, 0], points[:, 1]
    return np.stack([math.exp(t) * x1 * (t * x2 + 1), x2 / (1 + t * x2)], axis=1)


def _lotka_volterra_field(points):
    x1, x2 = points[:, 0], points[:, 1]
    return np.stack([1.5 * x1 * (1 - x1) - x1 * x2, 1.5 * x2 * (1 - x2) - x1 * x2], axis=1)


def _identity_flow(points, t):
    return np.array(points, dtype=float)


BUILTIN_SYSTEMS = {
    'van_der_pol': dict(
        dimension=2, horizon=0.3, native_box=Box((-3.0, -3.0), (3.0, 3.0)),
        vector_field=_van_der_pol_field, guard_box=Box((-9.0, -9.0), (9.0, 9.0)), confined=False,
    ),
    'scalar_logistic': dict(
        dimension=1, horizon=1.0, native_box=Box.unit(1),
        closed_flow=_logistic_flow, field=_logistic_field,
    ),
    'product_decay_2d': dict(
        dimension=2, horizon=1.0, native_box=Box.unit(2),
        closed_flow=_product_decay_flow, field=_product_decay_field,
        image_box=Box((0.0, 0.0), (2 * math.e, 1.0)), confined=False,
    ),
    'lotka_volterra': dict(
        dimension=2, horizon=1.0, native_box=Box.unit(2), vector_field=_lotka_volterra_field,
    ),
    'identity': dict(
        dimension=2, horizon=1.0, native_box=Box.unit(2), closed_flow=_identity_flow,
    ),
}


def builtin(name, integrated=False):
    """
    FlowSpec of a built-in system. `integrated=True` swaps a closed-form flow for RK4
    integration of its vector field.
    """
    try:
        options = dict(BUILTIN_SYSTEMS[name])
    except KeyError:
        raise UnknownSystemError(
            f"Unknown system '{name}'. Choose from: {', '.join(sorted(BUILTIN_SYSTEMS))}"
        ) from None
    field = options.pop('field', None)
    spec = FlowSpec(name=name, **options)
    if integrated and spec.kind == 'closed_form':
        if field is None:
            raise ConfigurationError(f"System '{name}' has no vector field to integrate")
        spec = replace(spec, closed_flow=None, vector_field=field)
    return spec


def system_from_config(config):
    """
    FlowSpec from a validated config mapping: name, dimension, vector_field (list of
    expressions over x1..xm), horizon, native_box ([[a, b], ...]) and optionally
    rk4_steps, guard_box and confined.
    """
    from .expressions import parse_vector_field

    dimension = int(config['dimension'])
    guard = config.get('guard_box')
    return FlowSpec(
        name=config.get('name', 'custom'),
        dimension=dimension,
        horizon=float(config['horizon']),
        native_box=Box.from_pairs(config['native_box']),
        vector_field=parse_vector_field(config['vector_field'], dimension),
        rk4_steps=config.get('rk4_steps'),
        guard_box=Box.from_pairs(guard) if guard else None,
        confined=bool(config.get('confined', True)),
    )
