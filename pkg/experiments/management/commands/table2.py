from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'One-step prediction error under noisy lattice images, averaged over seeds'
    service_method = 'table2'
    default_system = 'van_der_pol'
    needs_degree = False

    def add_command_arguments(self, parser):
        parser.add_argument('--sigmas', help='Comma-separated noise levels (default 0,0.001,0.01,0.1)')
        parser.add_argument('--seeds', type=int, help='Number of seeds per noise level (default 50)')
