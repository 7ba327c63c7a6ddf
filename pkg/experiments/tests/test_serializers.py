import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from experiments.serializers import ExperimentConfigSerializer, SystemConfigSerializer


class ExperimentConfigSerializerTests(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.out = str(self.tmp / 'out.csv')

    def tearDown(self):
        self._tmp.cleanup()

    def validate(self, needs_degree=True, **data):
        serializer = ExperimentConfigSerializer(data={'out': self.out, **data},
                                                context={'needs_degree': needs_degree})
        return serializer.is_valid(), serializer

    def test_defaults(self):
        valid, serializer = self.validate(system='van_der_pol', degree='10')
        self.assertTrue(valid, serializer.errors)
        config = serializer.validated_data
        self.assertEqual(config['observable'], 'x1')
        self.assertEqual(config['steps'], 1)
        self.assertEqual(config['seeds'], 50)
        self.assertEqual(config['jitter'], 0.1)
        self.assertNotIn('inflation', config)
        self.assertFalse(config['record'])

    def test_comma_separated_values(self):
        valid, serializer = self.validate(system='identity', sweep='5, 10', x0='0.2,0.4',
                                          bounds='T3,T6a')
        self.assertTrue(valid, serializer.errors)
        self.assertEqual(serializer.validated_data['sweep'], [5, 10])
        self.assertEqual(serializer.validated_data['x0'], [0.2, 0.4])
        self.assertEqual(serializer.validated_data['bounds'], ['T3', 'T6a'])

    def test_unknown_system(self):
        valid, serializer = self.validate(system='lorenz', degree='4')
        self.assertFalse(valid)
        self.assertIn('system', serializer.errors)

    def test_system_config_file_is_accepted(self):
        path = self.tmp / 'system.json'
        path.write_text('{}')
        valid, _ = self.validate(system=str(path), degree='4')
        self.assertTrue(valid)

    def test_degree_is_required_unless_the_command_has_a_default(self):
        valid, serializer = self.validate(system='identity')
        self.assertFalse(valid)
        self.assertIn('non_field_errors', serializer.errors)
        valid, _ = self.validate(needs_degree=False, system='identity')
        self.assertTrue(valid)

    def test_invalid_degree_and_observable(self):
        valid, serializer = self.validate(system='identity', degree='0', observable='sin(x1)')
        self.assertFalse(valid)
        self.assertIn('degree', serializer.errors)
        self.assertIn('observable', serializer.errors)

    def test_unknown_bound_tag(self):
        valid, serializer = self.validate(system='identity', degree='3', bounds='T9')
        self.assertFalse(valid)
        self.assertIn('bounds', serializer.errors)

    def test_missing_files(self):
        valid, serializer = self.validate(system='identity', degree='3',
                                          data=str(self.tmp / 'absent.csv'))
        self.assertFalse(valid)
        self.assertIn('data', serializer.errors)
        valid, serializer = self.validate(system='identity', degree='3',
                                          out=str(self.tmp / 'missing' / 'out.csv'))
        self.assertFalse(valid)
        self.assertIn('out', serializer.errors)

    def test_permutation_needs_data(self):
        perm = self.tmp / 'perm.csv'
        perm.write_text('1\n')
        valid, serializer = self.validate(system='identity', degree='3', perm=str(perm))
        self.assertFalse(valid)
        self.assertIn('non_field_errors', serializer.errors)

    def test_jitter_range(self):
        valid, serializer = self.validate(system='identity', degree='3', jitter=0.5)
        self.assertFalse(valid)
        self.assertIn('jitter', serializer.errors)


class SystemConfigSerializerTests(SimpleTestCase):
    def config(self, **overrides):
        config = {
            'name': 'damped',
            'dimension': 2,
            'vector_field': ['x2', '-x1 - x2/2'],
            'horizon': 0.5,
            'native_box': [[-1, 1], [-1, 1]],
        }
        config.update(overrides)
        return json.loads(json.dumps(config))

    def test_valid(self):
        serializer = SystemConfigSerializer(data=self.config())
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertTrue(serializer.validated_data['confined'])

    def test_box_dimension(self):
        serializer = SystemConfigSerializer(data=self.config(native_box=[[-1, 1]]))
        self.assertFalse(serializer.is_valid())

    def test_empty_axis(self):
        serializer = SystemConfigSerializer(data=self.config(guard_box=[[-2, 2], [2, 2]]))
        self.assertFalse(serializer.is_valid())

    def test_bad_vector_field(self):
        serializer = SystemConfigSerializer(data=self.config(vector_field=['x2', 'y']))
        self.assertFalse(serializer.is_valid())
        self.assertIn('vector_field', serializer.errors)

    def test_horizon(self):
        serializer = SystemConfigSerializer(data=self.config(horizon=0))
        self.assertFalse(serializer.is_valid())
        self.assertIn('horizon', serializer.errors)
