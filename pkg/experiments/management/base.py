import argparse
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError, DjangoHelpFormatter
from django.db import transaction
from rest_framework.exceptions import ValidationError

from approximation.exceptions import ConfigurationError, NumericalFailure
from approximation.storage import write_table
from experiments.experiment_service import ExperimentResult, ExperimentService
from experiments.serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

EXIT_CODES = """exit codes:
  0  success
  2  configuration error (bad flag, missing file, unknown system, invalid expression)
  3  numerical failure (trajectory escape, point outside the data hull,
     crossing assignment, degenerate simplex, rank loss)
"""


class ExperimentHelpFormatter(DjangoHelpFormatter, argparse.RawDescriptionHelpFormatter):
    pass


class ExperimentCommand(BaseCommand):
    """
    Shared flags, validation and CSV output of the experiment commands. Subclasses set
    `service_method` and may add flags in `add_command_arguments`.
    """
    service_method = None
    default_system = None
    needs_degree = True

    def create_parser(self, prog_name, subcommand, **kwargs):
        kwargs.setdefault('epilog', EXIT_CODES)
        kwargs.setdefault('formatter_class', ExperimentHelpFormatter)
        return super().create_parser(prog_name, subcommand, **kwargs)

    def add_arguments(self, parser):
        parser.add_argument('--system', default=self.default_system,
                            help='Built-in system name or path to a JSON system config')
        parser.add_argument('--degree', help='Degree per axis, e.g. 20 or 15,15')
        parser.add_argument('--sweep', help='Comma-separated uniform degrees to sweep over')
        parser.add_argument('--observable', help='Observable expression over x1..xm (default x1)')
        parser.add_argument('--steps', type=int, help='Number of steps k (default 1)')
        parser.add_argument('--sigma', type=float, help='Measurement noise standard deviation')
        parser.add_argument('--seed', type=int, help='Random seed (default 0)')
        parser.add_argument('--data', help='CSV of snapshot pairs x1..xm,y1..ym')
        parser.add_argument('--perm', help='Single-column 1-based lattice assignment')
        parser.add_argument('--bounds', help='Comma-separated bound tags, e.g. T3,T4,T5')
        parser.add_argument('--out', help='Output CSV path')
        parser.add_argument('--x0', help='Initial state v1[,v2,...]')
        parser.add_argument('--x0-frame', choices=['native', 'unit'],
                            help='Coordinates of --x0 (default unit: the rescaled box [0,1]^m)')
        parser.add_argument('--rescale-image', action='store_true',
                            help='Rescale the declared image box of the system onto the unit box')
        parser.add_argument('--integrated', action='store_true',
                            help='Integrate the vector field with RK4 instead of the closed-form flow')
        parser.add_argument('--record', action='store_true',
                            help='Store the run in the database')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def validated_config(self, options):
        serializer = ExperimentConfigSerializer(
            data={
                name: options[name]
                for name in ExperimentConfigSerializer().fields
                if options.get(name) is not None
            },
            context={'needs_degree': self.needs_degree},
        )
        serializer.is_valid(raise_exception=True)
        return dict(serializer.validated_data)

    def handle(self, *args, **options):
        service = None
        try:
            config = self.validated_config(options)
            service = ExperimentService(config, self.service_method)
            result = getattr(service, self.service_method)()
        except ValidationError as exc:
            raise CommandError(f"Invalid configuration: {exc.detail}", returncode=2)
        except ConfigurationError as exc:
            raise CommandError(str(exc), returncode=2)
        except NumericalFailure as exc:
            if service is not None and service.config.get('record'):
                service.record(ExperimentResult([], [], {'error': str(exc)}), service.config['out'],
                               status='failed')
            raise CommandError(f"{type(exc).__name__}: {exc}", returncode=3)

        output = Path(config['out'])
        write_table(output, result.columns, result.rows, config)
        for suffix, (columns, rows) in result.tables.items():
            write_table(output.with_name(f'{output.stem}_{suffix}{output.suffix}'), columns, rows, config)

        if config.get('record'):
            with transaction.atomic():
                run = service.record(result, output)
            self.stdout.write(f"Recorded run {run.id}")

        self.report(result)
        self.stdout.write(
            self.style.SUCCESS(f"Wrote {len(result.rows)} rows to {output}")
        )

    def report(self, result):
        for key, value in result.summary.items():
            self.stdout.write(f"  {key}: {value}")
