from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, ShapeError


@dataclass(frozen=True)
class Box:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_m, upper_m]."""
    lower: tuple
    upper: tuple

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper) or not lower:
            raise ShapeError("Box bounds must be non-empty sequences of equal length")
        for axis, (a, b) in enumerate(zip(lower, upper)):
            if not np.isfinite(a) or not np.isfinite(b) or not a < b:
                raise DomainError(f"Degenerate box axis {axis}: [{a}, {b}]")
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def unit(cls, dimension):
        return cls((0.0,) * dimension, (1.0,) * dimension)

    @classmethod
    def from_pairs(cls, pairs):
        pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
        return cls(tuple(pairs[:, 0]), tuple(pairs[:, 1]))

    @classmethod
    def bounding(cls, points, padding=0.0):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        lower = points.min(axis=0) - padding
        upper = points.max(axis=0) + padding
        # flat directions still need a non-degenerate box
        upper = np.where(upper > lower, upper, lower + 1e-12)
        return cls(tuple(lower), tuple(upper))

    @property
    def dimension(self):
        return len(self.lower)

    @property
    def widths(self):
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.widths))

    @property
    def is_unit(self):
        return all(a == 0.0 for a in self.lower) and all(b == 1.0 for b in self.upper)

    def contains(self, points, tolerance=0.0):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all(
            (points >= np.asarray(self.lower) - tolerance)
            & (points <= np.asarray(self.upper) + tolerance),
            axis=1,
        )

    def grid_axes(self, intervals):
        """Per-axis coordinates of a regular grid with `intervals` cells per axis."""
        intervals = np.broadcast_to(np.asarray(intervals, dtype=int), (self.dimension,))
        return [np.linspace(a, b, int(k) + 1) for a, b, k in zip(self.lower, self.upper, intervals)]

    def grid(self, intervals):
        """Grid points in lexicographic order (last axis fastest), shape (P, m)."""
        axes = self.grid_axes(intervals)
        mesh = np.meshgrid(*axes, indexing='ij')
        return np.stack([axis.ravel() for axis in mesh], axis=1)

    def to_unit(self, points):
        return (np.asarray(points, dtype=float) - np.asarray(self.lower)) / self.widths

    def from_unit(self, points):
        return np.asarray(self.lower) + np.asarray(points, dtype=float) * self.widths

    def as_pairs(self):
        return [[a, b] for a, b in zip(self.lower, self.upper)]
