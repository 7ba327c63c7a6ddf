from django.test import TestCase

from experiments.models import BoundRecord, ExperimentRun
from experiments.serializers import ExperimentRunSerializer


class ExperimentRunTests(TestCase):
    def setUp(self):
        self.run = ExperimentRun.objects.create(
            command='bounds', system='scalar_logistic', degrees=[[100]],
            config={'observable': 'x1^2/2'}, output_path='/tmp/bounds.csv',
        )

    def test_str(self):
        self.assertEqual(str(self.run), 'bounds on scalar_logistic (completed)')

    def test_bound_holds(self):
        holding = BoundRecord.objects.create(run=self.run, theorem_tag='T1', degrees=[100],
                                             value=0.0114, measured_error=0.00005)
        violated = BoundRecord.objects.create(run=self.run, theorem_tag='T2', degrees=[100],
                                              value=0.001, measured_error=0.002)
        unmeasured = BoundRecord.objects.create(run=self.run, theorem_tag='MeasNoise', degrees=[100],
                                                value=0.01)
        self.assertTrue(holding.holds)
        self.assertFalse(violated.holds)
        self.assertTrue(unmeasured.holds)
        self.assertEqual(str(holding), 'T1 n=[100] k=1: 0.0114')

    def test_nested_representation(self):
        BoundRecord.objects.create(run=self.run, theorem_tag='T1', degrees=[100], value=0.0114,
                                   measured_error=0.00005)
        data = ExperimentRunSerializer(self.run).data
        self.assertEqual(data['command'], 'bounds')
        self.assertEqual(len(data['bounds']), 1)
        self.assertTrue(data['bounds'][0]['holds'])

    def test_bounds_are_deleted_with_the_run(self):
        BoundRecord.objects.create(run=self.run, theorem_tag='T1', degrees=[100], value=0.0114)
        self.run.delete()
        self.assertEqual(BoundRecord.objects.count(), 0)
