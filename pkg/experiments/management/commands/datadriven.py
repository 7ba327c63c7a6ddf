from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Build Bernstein and EDMD Koopman matrices from snapshot data and compare trajectories'
    service_method = 'datadriven'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--jitter',
            type=float,
            help='Without --data: jitter of the generated lattice data in cells (default 0.1)',
        )
        parser.add_argument(
            '--tolerance',
            type=float,
            help='Relative singular-value cutoff of the EDMD pseudoinverse',
        )
