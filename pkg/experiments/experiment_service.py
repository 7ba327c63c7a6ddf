import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from approximation.bernstein import DegreeVector, bernstein_vector, eval_bernstein_operator
from approximation.bounds import (
    BOUND_CSV_HEADER,
    bound_iterated,
    bound_iterated_alternative,
    bound_measurement_noise,
    bound_multivariate_c1,
    bound_multivariate_full,
    bound_multivariate_partial,
    bound_univariate_c1,
    bound_univariate_continuous,
    estimate_image_modulus,
    estimate_lipschitz,
    estimate_modulus,
    sup_over_image,
)
from approximation.conf import evaluation_points_per_axis, koopman_setting
from approximation.data_driven import (
    DataSet,
    build_assignment,
    build_data_koopman,
    build_lattice_map,
    data_driven_bounds,
    data_driven_error,
    jittered_lattice_dataset,
    lipschitz_of_S,
    verify_assignment,
)
from approximation.domain import Box
from approximation.edmd import build_edmd, predict_edmd
from approximation.exceptions import ConfigurationError
from approximation.expressions import parse_observable
from approximation.koopman import (
    approximation_error,
    build_koopman_matrices,
    koopman_coefficients,
    predict_trajectory,
    predict_trajectory_relift,
)
from approximation.storage import read_dataset, read_permutation, read_system_config, save_matrices
from approximation.systems import BUILTIN_SYSTEMS, add_noise, builtin, flow_map, system_from_config
from .serializers import ExperimentRunSerializer, BoundRecordSerializer, SystemConfigSerializer

logger = logging.getLogger(__name__)

DEFAULT_X0 = {
    'van_der_pol': (0.4, 0.0),
    'lotka_volterra': (0.4, 0.3),
    'scalar_logistic': (0.5,),
    'product_decay_2d': (0.2, 0.5),
    'identity': (0.3, 0.7),
}
TABLE2_DEGREES = (10, 20, 25)
TABLE2_SIGMAS = (0.0, 0.001, 0.01, 0.1)
SINGLE_STEP_TAGS = ('T1', 'T2', 'T3', 'T4', 'T5')
ITERATED_VARIANTS = {'T6a': 'full', 'T6b': 'partial', 'T6c': 'c1'}
DATA_TAGS = ('DataFull', 'DataPartial')


@dataclass
class ExperimentResult:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)
    reports: list = field(default_factory=list)
    # extra CSV files written next to the main output, keyed by file-name suffix
    tables: dict = field(default_factory=dict)


class ExperimentService:
    """Runs one experiment command from a validated ExperimentConfig"""

    def __init__(self, config, command):
        self.config = config
        self.command = command
        self.used_degrees = []
        self.spec = self.resolve_system()

    # -- configuration helpers ---------------------------------------------------

    def resolve_system(self):
        name = self.config['system']
        if name in BUILTIN_SYSTEMS:
            return builtin(name, integrated=self.config.get('integrated', False))
        serializer = SystemConfigSerializer(data=read_system_config(name))
        if not serializer.is_valid():
            raise ConfigurationError(f"Invalid system config {name}: {serializer.errors}")
        return system_from_config(serializer.validated_data)

    @property
    def dimension(self):
        return self.spec.dimension

    def map(self):
        return flow_map(self.spec, rescale_image=self.config.get('rescale_image', False))

    def degrees(self, default_sweep=None):
        """--sweep wins over --degree; table2 falls back to its own sweep."""
        if self.config.get('sweep'):
            degrees = [DegreeVector.uniform(n, self.dimension) for n in self.config['sweep']]
        elif self.config.get('degree'):
            degrees = [DegreeVector.parse(self.config['degree'], self.dimension)]
        elif default_sweep:
            degrees = [DegreeVector.uniform(n, self.dimension) for n in default_sweep]
        else:
            raise ConfigurationError("Provide --degree or --sweep")
        self.used_degrees = [list(degree) for degree in degrees]
        return degrees

    def observable(self):
        return parse_observable(self.config['observable'], self.dimension)

    def inflation(self):
        """Resolution cells added to estimated moduli; --inflation or KOOPMAN['MODULUS_INFLATION']."""
        inflation = self.config.get('inflation')
        return koopman_setting('MODULUS_INFLATION') if inflation is None else inflation

    def initial_state(self):
        """
        x0 in unit-box coordinates. --x0 and the built-in defaults are read in the rescaled
        unit frame; --x0-frame native takes --x0 as a point of the native box.
        """
        given = self.config.get('x0')
        x0 = given or DEFAULT_X0.get(self.spec.name)
        if x0 is None:
            return np.full(self.dimension, 0.5)
        x0 = np.asarray(x0, dtype=float)
        if len(x0) != self.dimension:
            raise ConfigurationError(f"x0 needs {self.dimension} coordinates, got {len(x0)}")
        if given and self.config.get('x0_frame') == 'native':
            x0 = self.spec.native_box.to_unit(x0)
        if np.any((x0 < 0.0) | (x0 > 1.0)):
            raise ConfigurationError(f"x0 lies outside the box of '{self.spec.name}'")
        return x0

    def evaluation_points(self):
        m = self.dimension
        return Box.unit(m).grid(evaluation_points_per_axis(m) - 1)

    def _true_trajectory(self, map_on_box, x0, steps):
        states, state = np.empty((steps, self.dimension)), np.asarray(x0, dtype=float)
        for step in range(steps):
            state = map_on_box.images(state[None, :])[0]
            states[step] = state
        return states

    def _axis_names(self, prefix=''):
        return [f'{prefix}x{axis + 1}' for axis in range(self.dimension)]

    # -- commands ---------------------------------------------------------------

    def approximate(self):
        map_on_box, observable = self.map(), self.observable()
        steps = self.config['steps']
        rows, summary = [], {}
        for degree in self.degrees():
            matrices = build_koopman_matrices(map_on_box, degree)
            sample = approximation_error(observable, map_on_box, degree, self.evaluation_points(),
                                         matrices=matrices, steps=steps)
            for point, exact, approximate, error in zip(sample.points, sample.exact,
                                                        sample.approximate, sample.errors):
                rows.append([str(degree), *point, exact, approximate, error])
            summary[str(degree)] = {'sup_error': sample.sup, 'N': degree.size}
            logger.info("Degree %s: sup error %.4g over %d points", degree, sample.sup, len(sample.points))
        columns = ['degree', *self._axis_names(), 'Kf', 'BnKf', 'error']
        return ExperimentResult(columns=columns, rows=rows, summary=summary)

    def predict(self):
        steps = self.config['steps']
        if self.config.get('rescale_image') and steps > 1:
            raise ConfigurationError("--rescale-image changes the output frame; iterate with --steps 1")
        map_on_box = self.map()
        x0 = self.initial_state()
        truth = self._true_trajectory(map_on_box, x0, steps)
        predictor = predict_trajectory_relift if self.config.get('relift') else predict_trajectory
        degrees = self.degrees()

        rows, summary = [], {}
        for degree in degrees:
            matrices = build_koopman_matrices(map_on_box, degree)
            predicted = predictor(matrices, x0, steps)
            errors = np.linalg.norm(predicted - truth, axis=1)
            for step in range(steps):
                rows.append([str(degree), step + 1, *predicted[step], *truth[step], errors[step]])
            summary[str(degree)] = {'errors': errors.tolist(), 'max_error': float(errors.max())}
            if self.config.get('save_matrices'):
                save_matrices(matrices, self._matrix_path(degree, len(degrees) > 1))
        columns = ['degree', 'step', *self._axis_names('pred_'), *self._axis_names('true_'), 'error']
        return ExperimentResult(columns=columns, rows=rows, summary=summary)

    def _matrix_path(self, degree, per_degree):
        path = Path(self.config['save_matrices'])
        if not per_degree:
            return path
        return path.with_name(f"{path.stem}_n{'x'.join(str(n) for n in degree)}{path.suffix or '.npz'}")

    def _default_tags(self):
        return ['T1', 'T2'] if self.dimension == 1 else ['T3', 'T4', 'T5']

    def bounds(self):
        map_on_box, observable = self.map(), self.observable()
        if not map_on_box.confined:
            raise ConfigurationError(
                f"Certified bounds need a map of the unit box into itself; '{map_on_box.label}' "
                f"is not confined (try --rescale-image)"
            )
        tags = self.config.get('bounds') or self._default_tags()
        if self.dimension > 1 and {'T1', 'T2'} & set(tags):
            raise ConfigurationError("T1 and T2 are univariate bounds")
        if set(DATA_TAGS) & set(tags):
            raise ConfigurationError("DataFull and DataPartial are reported by the datadriven command")
        steps = self.config['steps']
        inflation = self.inflation()
        unit = Box.unit(self.dimension)

        lipschitz = map_on_box.lipschitz or estimate_lipschitz(map_on_box.images, unit)
        modulus = estimate_image_modulus(observable, map_on_box).inflated(inflation)
        needs_gradient = {'T2', 'T5', 'T6c'} & set(tags)
        gradient_modulus = gradient_sup = None
        if needs_gradient:
            gradient_modulus = estimate_image_modulus(observable.grad, map_on_box).inflated(inflation)
            gradient_sup = sup_over_image(observable.grad, map_on_box)
        box_modulus = None
        if {'AppA', 'MeasNoise'} & set(tags):
            box_modulus = estimate_modulus(observable, unit).inflated(inflation)
        logger.info("Lipschitz data of '%s': L=%.4g partial=%s", map_on_box.label,
                    lipschitz.full, lipschitz.partial)

        points = self.evaluation_points()
        rows, reports = [], []
        for degree in self.degrees():
            matrices = build_koopman_matrices(map_on_box, degree)
            measured = {}

            def measured_error(k):
                if k not in measured:
                    measured[k] = approximation_error(observable, map_on_box, degree, points,
                                                      matrices=matrices, steps=k).sup
                return measured[k]

            for tag in tags:
                if tag == 'T1':
                    report = bound_univariate_continuous(modulus, lipschitz.full, degree)
                elif tag == 'T2':
                    report = bound_univariate_c1(gradient_modulus, lipschitz.full,
                                                 lipschitz.derivative[0], gradient_sup, degree)
                elif tag == 'T3':
                    report = bound_multivariate_full(modulus, lipschitz.full, degree)
                elif tag == 'T4':
                    report = bound_multivariate_partial(modulus, lipschitz.partial, degree)
                elif tag == 'T5':
                    report = bound_multivariate_c1(gradient_modulus, lipschitz.partial,
                                                   lipschitz.derivative, gradient_sup, degree)
                elif tag in ITERATED_VARIANTS:
                    variant = ITERATED_VARIANTS[tag]
                    report = bound_iterated(
                        matrices, observable, lipschitz, steps, variant,
                        initial_modulus=gradient_modulus if variant == 'c1' else modulus,
                        initial_gradient_sup=gradient_sup, inflation=inflation,
                    )
                elif tag == 'AppA':
                    report = bound_iterated_alternative(box_modulus, lipschitz.full, degree, steps)
                else:
                    report, error = self._noise_bound(box_modulus, map_on_box, observable,
                                                      matrices, points)
                    rows.append(report.as_row() + [error])
                    reports.append((report, error))
                    continue
                error = measured_error(report.steps)
                rows.append(report.as_row() + [error])
                reports.append((report, error))
                if report.clamped:
                    logger.warning("%s at degree %s used a clamped modulus argument", tag, degree)

        summary = {
            'lipschitz': lipschitz.full,
            'lipschitz_partial': list(lipschitz.partial),
            'violations': sum(1 for report, error in reports if error > report.value),
        }
        return ExperimentResult(columns=BOUND_CSV_HEADER + ['measured_error'], rows=rows,
                                summary=summary, reports=reports)

    def _noise_bound(self, modulus, map_on_box, observable, matrices, points):
        """MeasNoise report and the measured gap between noisy and clean B_n K f."""
        clean = matrices.images
        noisy, realized = add_noise(clean, self.config['sigma'], self.config['seed'],
                                    clamp=map_on_box.confined)
        gap = (
            eval_bernstein_operator(observable(noisy), matrices.grid, points)
            - eval_bernstein_operator(koopman_coefficients(observable, matrices), matrices.grid, points)
        )
        report = bound_measurement_noise(modulus, realized, matrices.degree)
        return report, float(np.max(np.abs(gap)))

    def _load_data(self, map_on_box, degree):
        """(data in native coordinates, generated?)"""
        if self.config.get('data'):
            return read_dataset(self.config['data'], self.dimension), False
        generated = jittered_lattice_dataset(map_on_box, degree, jitter=self.config['jitter'],
                                             seed=self.config['seed'])
        box = self.spec.native_box
        return DataSet(box.from_unit(generated.inputs), box.from_unit(generated.outputs), box), True

    def _assignment(self, data, degree):
        if self.config.get('perm'):
            return verify_assignment(data, degree, read_permutation(self.config['perm'], data.size))
        return build_assignment(data, degree)

    def datadriven(self):
        if self.config.get('rescale_image'):
            raise ConfigurationError("The datadriven command works in the native frame of the system")
        map_on_box = self.map()
        degree = self.degrees()[0]
        steps = self.config['steps']
        box = self.spec.native_box
        data, generated = self._load_data(map_on_box, degree)
        data.check_degree(degree)
        assignment = self._assignment(data, degree)
        x0 = box.from_unit(self.initial_state())
        truth = box.from_unit(self._true_trajectory(map_on_box, box.to_unit(x0), steps))

        variants = [('clean', data)]
        sigma = self.config['sigma']
        if sigma > 0:
            noisy, realized = add_noise(box.to_unit(data.outputs), sigma, self.config['seed'],
                                        clamp=map_on_box.confined)
            logger.info("Noisy outputs: sigma=%g, realized sup %.3g", sigma, realized)
            variants.append(('noisy', data.with_outputs(box.from_unit(noisy))))

        rows, summary = [], {}
        for variant, variant_data in variants:
            lattice_map = build_lattice_map(variant_data, degree, assignment)
            matrices = build_data_koopman(variant_data, degree, lattice_map, label=f'data ({variant})')
            edmd = build_edmd(variant_data, degree, self.config.get('tolerance'))
            trajectories = {
                'bernstein': predict_trajectory(matrices, x0, steps),
                'edmd': predict_edmd(edmd, x0, steps),
            }
            for method, predicted in trajectories.items():
                errors = np.linalg.norm(box.to_unit(predicted) - box.to_unit(truth), axis=1)
                for step in range(steps):
                    rows.append([variant, method, step + 1, *predicted[step], *truth[step], errors[step]])
                summary[f'{variant}_{method}_max_error'] = float(errors.max())
            summary[f'{variant}_edmd_rank'] = edmd.rank

        result = ExperimentResult(
            columns=['variant', 'method', 'step', *self._axis_names('pred_'),
                     *self._axis_names('true_'), 'error'],
            rows=rows, summary=summary,
        )
        tags = [tag for tag in self.config.get('bounds') or [] if tag in DATA_TAGS]
        if tags:
            self._data_bounds(result, map_on_box, data, degree, assignment, generated, tags)
        return result

    def _data_bounds(self, result, map_on_box, data, degree, assignment, generated, tags):
        if not self.spec.native_box.is_unit:
            raise ConfigurationError("Data-driven bounds need a system whose native box is the unit box")
        observable = self.observable()
        unit = Box.unit(self.dimension)
        lattice_map = build_lattice_map(data, degree, assignment)
        inflation = self.inflation()
        modulus = estimate_image_modulus(observable, map_on_box).inflated(inflation)
        lipschitz_phi = estimate_lipschitz(map_on_box.images, unit).full
        reports = data_driven_bounds(modulus, lipschitz_phi, lipschitz_of_S(lattice_map), degree)
        points = self.evaluation_points() if generated else data.inputs
        error = data_driven_error(observable, map_on_box, lattice_map, data, points).sup
        rows = []
        for report in reports:
            if report.tag in tags:
                rows.append(report.as_row() + [error])
                result.reports.append((report, error))
        result.tables['bounds'] = (BOUND_CSV_HEADER + ['measured_error'], rows)

    def table2(self):
        map_on_box = self.map()
        x0 = self.initial_state()
        truth = map_on_box.images(x0[None, :])[0]
        sigmas = self.config.get('sigmas') or list(TABLE2_SIGMAS)
        seeds = self.config['seeds']
        base_seed = self.config['seed']

        rows, summary = [], {}
        for degree in self.degrees(default_sweep=TABLE2_DEGREES):
            matrices = build_koopman_matrices(map_on_box, degree)
            images = matrices.images
            # [K^X X(x0)]_gamma equals sum_j phi(x_hat_j) B_j(x0)
            basis = bernstein_vector(degree, x0)
            for sigma in sigmas:
                errors = []
                for offset in range(seeds):
                    noisy, _ = add_noise(images, sigma, base_seed + offset, clamp=map_on_box.confined)
                    errors.append(float(np.linalg.norm(basis @ noisy - truth)))
                mean, std = float(np.mean(errors)), float(np.std(errors))
                rows.append([str(degree), sigma, mean, std, seeds])
                summary[f'{degree}@{sigma:g}'] = mean
        return ExperimentResult(columns=['degree', 'sigma', 'mean_error', 'std_error', 'seeds'],
                                rows=rows, summary=summary)

    # -- persistence ------------------------------------------------------------

    def record(self, result, output_path, status='completed'):
        """Store the run and its bound reports; returns the ExperimentRun."""
        serializer = ExperimentRunSerializer(data={
            'command': self.command,
            'system': self.config['system'],
            'degrees': self.used_degrees,
            'config': self.config,
            'status': status,
            'summary': result.summary,
            'output_path': str(output_path),
        })
        serializer.is_valid(raise_exception=True)
        run = serializer.save()
        bounds = BoundRecordSerializer(data=[
            {
                'theorem_tag': report.tag,
                'degrees': list(report.degrees),
                'steps': report.steps,
                'value': report.value,
                'constants': report.constants,
                'clamped': report.clamped,
                'measured_error': error,
            }
            for report, error in result.reports
        ], many=True)
        bounds.is_valid(raise_exception=True)
        bounds.save(run=run)
        logger.info("Recorded run %s with %d bound records", run.id, len(result.reports))
        return run
