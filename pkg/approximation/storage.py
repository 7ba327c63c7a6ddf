"""
File formats: Koopman matrices (.npz), snapshot data sets and permutation files
(CSV), and tabular experiment output with a config comment line.
"""
import csv
import json
from pathlib import Path

import numpy as np

from .bernstein import DegreeVector
from .data_driven import DataSet, lattice_map_from_vertices
from .exceptions import ConfigurationError, ShapeError
from .koopman import KoopmanMatrices

MATRIX_FORMAT = 'bernstein-koopman/1'


def save_matrices(matrices, path):
    """Row-major arrays C, U, K_B, K^X with m, degrees and the basis tags."""
    payload = dict(
        format=np.array(MATRIX_FORMAT),
        m=np.array(matrices.degree.m),
        degrees=np.array(matrices.degree.degrees),
        gamma=np.array(matrices.gamma),
        label=np.array(matrices.label),
        conversion=matrices.conversion,
        samples=matrices.samples,
        bernstein=matrices.bernstein,
        monomial=matrices.monomial,
    )
    if matrices.coordinates is not None:
        payload['coordinate_vertices'] = matrices.coordinates.vertices
        payload['coordinate_assignment'] = matrices.coordinates.assignment
    with open(path, 'wb') as handle:
        np.savez(handle, **payload)


def load_matrices(path):
    with np.load(path, allow_pickle=False) as archive:
        if str(archive['format']) != MATRIX_FORMAT:
            raise ConfigurationError(f"{path} is not a Koopman matrix archive")
        degree = DegreeVector(tuple(int(n) for n in archive['degrees']))
        coordinates = None
        if 'coordinate_vertices' in archive:
            coordinates = lattice_map_from_vertices(
                degree, archive['coordinate_vertices'], archive['coordinate_assignment']
            )
        return KoopmanMatrices(
            degree=degree,
            conversion=archive['conversion'],
            samples=archive['samples'],
            bernstein=archive['bernstein'],
            monomial=archive['monomial'],
            gamma=tuple(int(g) for g in archive['gamma']),
            coordinates=coordinates,
            label=str(archive['label']),
        )


def _read_rows(path):
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"File not found: {path}")
    with open(path, newline='') as handle:
        rows = [row for row in csv.reader(handle) if row and not row[0].lstrip().startswith('#')]
    return rows


def read_dataset(path, dimension=None):
    """CSV with a header row and 2m columns x_1..x_m, y_1..y_m."""
    rows = _read_rows(path)
    if len(rows) < 2:
        raise ShapeError(f"{path} needs a header row and at least one data row")
    header, body = rows[0], rows[1:]
    if len(header) % 2:
        raise ShapeError(f"{path} has {len(header)} columns; expected 2m")
    m = len(header) // 2
    if dimension is not None and m != dimension:
        raise ShapeError(f"{path} holds {m}-dimensional data, expected {dimension}")
    try:
        values = np.array([[float(cell) for cell in row] for row in body])
    except ValueError as exc:
        raise ShapeError(f"{path} contains a non-numeric entry: {exc}") from exc
    if values.shape[1] != 2 * m:
        raise ShapeError(f"{path} has rows of inconsistent length")
    return DataSet(values[:, :m], values[:, m:])


def write_dataset(data, path):
    header = [f'x{axis + 1}' for axis in range(data.m)] + [f'y{axis + 1}' for axis in range(data.m)]
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for x, y in zip(data.inputs, data.outputs):
            writer.writerow([repr(float(v)) for v in np.concatenate([x, y])])


def read_permutation(path, size):
    """Single-column 1-based permutation of 1..N, returned 0-based."""
    rows = _read_rows(path)
    try:
        values = [int(row[0]) for row in rows]
    except ValueError:
        values = [int(row[0]) for row in rows[1:]]
    assignment = np.asarray(values, dtype=int) - 1
    if len(assignment) != size or not np.array_equal(np.sort(assignment), np.arange(size)):
        raise ShapeError(f"{path} is not a permutation of 1..{size}")
    return assignment


def write_permutation(assignment, path):
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle)
        for value in np.asarray(assignment, dtype=int):
            writer.writerow([int(value) + 1])


def read_system_config(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"Cannot read system config {path}: {exc}") from exc


def format_cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value, sort_keys=True)
    return value


def write_table(path, columns, rows, config):
    """CSV with a '# config: {...}' comment line, a header row and one line per row."""
    with open(path, 'w', newline='') as handle:
        handle.write('# config: ' + json.dumps(config, sort_keys=True, default=str) + '\n')
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])


def read_table(path):
    """(config, columns, rows) of a file written by write_table; cells stay strings."""
    with open(path, newline='') as handle:
        first = handle.readline()
        if not first.startswith('# config: '):
            raise ShapeError(f"{path} does not start with a config comment")
        config = json.loads(first[len('# config: '):])
        reader = csv.reader(handle)
        columns = next(reader)
        return config, columns, [row for row in reader]
