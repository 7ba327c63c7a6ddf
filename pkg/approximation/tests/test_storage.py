import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from approximation.bernstein import DegreeVector
from approximation.data_driven import build_assignment, build_data_koopman, build_lattice_map, lattice_dataset
from approximation.exceptions import ConfigurationError, ShapeError
from approximation.koopman import MapOnBox, build_koopman_matrices
from approximation.storage import (
    load_matrices,
    read_dataset,
    read_permutation,
    read_system_config,
    read_table,
    save_matrices,
    write_dataset,
    write_permutation,
    write_table,
)


class StorageTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class MatrixArchiveTests(StorageTestCase):
    def test_save_and_load(self):
        matrices = build_koopman_matrices(
            MapOnBox(func=lambda points: points ** 2, dimension=2, label='square'), DegreeVector((3, 2))
        )
        save_matrices(matrices, self.tmp / 'k.npz')
        loaded = load_matrices(self.tmp / 'k.npz')
        self.assertEqual(loaded.degree.degrees, (3, 2))
        self.assertEqual(loaded.gamma, matrices.gamma)
        self.assertEqual(loaded.label, 'square')
        self.assertIsNone(loaded.coordinates)
        np.testing.assert_array_equal(loaded.bernstein, matrices.bernstein)

    def test_lattice_coordinates_survive(self):
        degree = DegreeVector((2, 2))
        square = MapOnBox(func=lambda points: points ** 2, dimension=2)
        data = lattice_dataset(square, degree, jitter=0.1, seed=1)
        lattice_map = build_lattice_map(data, degree, build_assignment(data, degree))
        save_matrices(build_data_koopman(data, degree, lattice_map), self.tmp / 'data.npz')
        loaded = load_matrices(self.tmp / 'data.npz')
        np.testing.assert_array_equal(loaded.coordinates.vertices, lattice_map.vertices)
        np.testing.assert_array_equal(loaded.coordinates.assignment, lattice_map.assignment)

    def test_foreign_archive(self):
        np.savez(self.tmp / 'other.npz', format=np.array('something-else'))
        with self.assertRaises(ConfigurationError):
            load_matrices(self.tmp / 'other.npz')


class DatasetFileTests(StorageTestCase):
    def test_write_then_read(self):
        square = MapOnBox(func=lambda points: points ** 2, dimension=2)
        data = lattice_dataset(square, DegreeVector((2, 2)), jitter=0.2, seed=4)
        write_dataset(data, self.tmp / 'data.csv')
        loaded = read_dataset(self.tmp / 'data.csv', dimension=2)
        np.testing.assert_array_equal(loaded.inputs, data.inputs)
        np.testing.assert_array_equal(loaded.outputs, data.outputs)

    def test_comments_are_skipped(self):
        path = self.tmp / 'data.csv'
        path.write_text('# measured\nx1,y1\n0.0,0.0\n1.0,0.5\n')
        data = read_dataset(path)
        np.testing.assert_array_equal(data.outputs, [[0.0], [0.5]])

    def test_odd_column_count(self):
        path = self.tmp / 'data.csv'
        path.write_text('x1,x2,y1\n0,0,0\n')
        with self.assertRaises(ShapeError):
            read_dataset(path)

    def test_wrong_dimension(self):
        path = self.tmp / 'data.csv'
        path.write_text('x1,y1\n0,0\n1,1\n')
        with self.assertRaises(ShapeError):
            read_dataset(path, dimension=2)

    def test_non_numeric_entry(self):
        path = self.tmp / 'data.csv'
        path.write_text('x1,y1\n0,zero\n')
        with self.assertRaises(ShapeError):
            read_dataset(path)

    def test_missing_file(self):
        with self.assertRaises(ConfigurationError):
            read_dataset(self.tmp / 'absent.csv')


class PermutationFileTests(StorageTestCase):
    def test_one_based_on_disk(self):
        write_permutation([2, 0, 1], self.tmp / 'perm.csv')
        self.assertEqual((self.tmp / 'perm.csv').read_text().split(), ['3', '1', '2'])
        np.testing.assert_array_equal(read_permutation(self.tmp / 'perm.csv', 3), [2, 0, 1])

    def test_header_row_is_allowed(self):
        path = self.tmp / 'perm.csv'
        path.write_text('index\n2\n1\n')
        np.testing.assert_array_equal(read_permutation(path, 2), [1, 0])

    def test_not_a_permutation(self):
        path = self.tmp / 'perm.csv'
        path.write_text('1\n1\n3\n')
        with self.assertRaises(ShapeError):
            read_permutation(path, 3)


class TableFileTests(StorageTestCase):
    def test_config_line_and_cells(self):
        path = self.tmp / 'out.csv'
        write_table(path, ['degree', 'error', 'degrees'], [[10, np.float64(0.25), [10, 10]]],
                    {'system': 'van_der_pol', 'seed': 0})
        self.assertTrue(path.read_text().startswith('# config: {"seed": 0, "system": "van_der_pol"}'))
        config, columns, rows = read_table(path)
        self.assertEqual(config['system'], 'van_der_pol')
        self.assertEqual(columns, ['degree', 'error', 'degrees'])
        self.assertEqual(rows, [['10', '0.25', '[10, 10]']])

    def test_table_without_config_line(self):
        path = self.tmp / 'plain.csv'
        path.write_text('a,b\n1,2\n')
        with self.assertRaises(ShapeError):
            read_table(path)


class SystemConfigFileTests(StorageTestCase):
    def test_invalid_json(self):
        path = self.tmp / 'system.json'
        path.write_text('{"dimension": ')
        with self.assertRaises(ConfigurationError):
            read_system_config(path)

    def test_valid_json(self):
        path = self.tmp / 'system.json'
        path.write_text('{"dimension": 1, "horizon": 0.5}')
        self.assertEqual(read_system_config(path), {'dimension': 1, 'horizon': 0.5})
