from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Predict a trajectory with the Koopman matrices and compare it with the true flow'
    service_method = 'predict'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--relift',
            action='store_true',
            help='Re-lift the predicted state at every step instead of iterating K^X',
        )
        parser.add_argument(
            '--save-matrices',
            help='Write C, U, K_B and K^X to this .npz file (one file per degree when sweeping)',
        )
