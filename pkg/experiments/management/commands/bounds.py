from experiments.management.base import ExperimentCommand


class Command(ExperimentCommand):
    help = 'Compute certified error bounds across degrees next to the measured sup error'
    service_method = 'bounds'

    def add_command_arguments(self, parser):
        parser.add_argument(
            '--inflation',
            type=int,
            help='Inflate estimated moduli by this many resolution cells (default 1, env KOOPMAN_MODULUS_INFLATION)',
        )

    def report(self, result):
        super().report(result)
        violations = result.summary.get('violations', 0)
        if violations:
            self.stdout.write(
                self.style.WARNING(f"{violations} bound(s) fall below the measured error; "
                                   f"raise the modulus resolution or --inflation")
            )
