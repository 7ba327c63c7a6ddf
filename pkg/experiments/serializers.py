from pathlib import Path

from rest_framework import serializers

from approximation.bernstein import DegreeVector
from approximation.bounds import BOUND_TAGS
from approximation.exceptions import ConfigurationError
from approximation.expressions import parse_expression, parse_vector_field
from approximation.systems import BUILTIN_SYSTEMS
from .models import ExperimentRun, BoundRecord


class CommaSeparatedField(serializers.Field):
    """Accepts '0.4,0.3' from the command line or a list from JSON"""

    def __init__(self, cast=float, **kwargs):
        self.cast = cast
        super().__init__(**kwargs)

    def to_internal_value(self, data):
        parts = data if isinstance(data, (list, tuple)) else str(data).split(',')
        try:
            values = [self.cast(str(part).strip()) for part in parts if str(part).strip()]
        except ValueError:
            raise serializers.ValidationError(
                f"'{data}' is not a comma-separated list of {self.cast.__name__} values"
            )
        if not values:
            raise serializers.ValidationError('Provide at least one value')
        return values

    def to_representation(self, value):
        return ','.join(str(v) for v in value)


class ExperimentConfigSerializer(serializers.Serializer):
    system = serializers.CharField()
    degree = serializers.CharField(required=False)
    sweep = CommaSeparatedField(cast=int, required=False)
    observable = serializers.CharField(default='x1')
    steps = serializers.IntegerField(default=1, min_value=1)
    sigma = serializers.FloatField(default=0.0, min_value=0.0)
    sigmas = CommaSeparatedField(cast=float, required=False)
    seed = serializers.IntegerField(default=0)
    seeds = serializers.IntegerField(default=50, min_value=1)
    data = serializers.CharField(required=False)
    perm = serializers.CharField(required=False)
    bounds = CommaSeparatedField(cast=str, required=False)
    out = serializers.CharField()
    x0 = CommaSeparatedField(cast=float, required=False)
    x0_frame = serializers.ChoiceField(choices=['native', 'unit'], required=False)
    relift = serializers.BooleanField(default=False)
    save_matrices = serializers.CharField(required=False)
    rescale_image = serializers.BooleanField(default=False)
    integrated = serializers.BooleanField(default=False)
    inflation = serializers.IntegerField(required=False, min_value=0)
    jitter = serializers.FloatField(default=0.1, min_value=0.0, max_value=0.49)
    tolerance = serializers.FloatField(required=False, min_value=0.0)
    record = serializers.BooleanField(default=False)

    def validate_system(self, value):
        if value in BUILTIN_SYSTEMS:
            return value
        if not Path(value).is_file():
            raise serializers.ValidationError(
                f"'{value}' is neither a built-in system ({', '.join(sorted(BUILTIN_SYSTEMS))}) "
                f"nor an existing config file"
            )
        return value

    def validate_degree(self, value):
        try:
            DegreeVector.parse(value)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))
        return value

    def validate_sweep(self, value):
        if any(n < 1 for n in value):
            raise serializers.ValidationError('Sweep degrees must be >= 1')
        return value

    def validate_sigmas(self, value):
        if any(sigma < 0 for sigma in value):
            raise serializers.ValidationError('Noise levels must be non-negative')
        return value

    def validate_observable(self, value):
        # dimension is checked later against the system; x1..x9 is enough here
        try:
            parse_expression(value, 9)
        except ConfigurationError as exc:
            raise serializers.ValidationError(str(exc))
        return value

    def validate_bounds(self, value):
        unknown = [tag for tag in value if tag not in BOUND_TAGS]
        if unknown:
            raise serializers.ValidationError(
                f"Unknown bound tags {unknown}; choose from {', '.join(BOUND_TAGS)}"
            )
        return value

    def validate_data(self, value):
        if not Path(value).is_file():
            raise serializers.ValidationError(f'Data file {value} does not exist')
        return value

    def validate_perm(self, value):
        if not Path(value).is_file():
            raise serializers.ValidationError(f'Permutation file {value} does not exist')
        return value

    def validate_out(self, value):
        parent = Path(value).resolve().parent
        if not parent.is_dir():
            raise serializers.ValidationError(f'Output directory {parent} does not exist')
        return value

    def validate(self, attrs):
        needs_degree = self.context.get('needs_degree', True)
        if needs_degree and 'degree' not in attrs and 'sweep' not in attrs:
            raise serializers.ValidationError('Provide --degree or --sweep')
        if 'perm' in attrs and 'data' not in attrs:
            raise serializers.ValidationError('--perm is only meaningful together with --data')
        return attrs


class SystemConfigSerializer(serializers.Serializer):
    """User-defined system file: x' = F(x) observed at time `horizon` on `native_box`"""
    name = serializers.CharField(default='custom')
    dimension = serializers.IntegerField(min_value=1)
    vector_field = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    horizon = serializers.FloatField()
    native_box = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2)
    )
    rk4_steps = serializers.IntegerField(required=False, min_value=1)
    guard_box = serializers.ListField(
        child=serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2),
        required=False,
    )
    confined = serializers.BooleanField(default=True)

    def validate_horizon(self, value):
        if not value > 0:
            raise serializers.ValidationError('Horizon must be positive')
        return value

    def _check_box(self, pairs, dimension, label):
        if len(pairs) != dimension:
            raise serializers.ValidationError(f'{label} needs {dimension} [lower, upper] pairs')
        for axis, (lower, upper) in enumerate(pairs):
            if not lower < upper:
                raise serializers.ValidationError(f'{label} axis {axis} is empty: [{lower}, {upper}]')

    def validate(self, attrs):
        dimension = attrs['dimension']
        self._check_box(attrs['native_box'], dimension, 'native_box')
        if 'guard_box' in attrs:
            self._check_box(attrs['guard_box'], dimension, 'guard_box')
        try:
            parse_vector_field(attrs['vector_field'], dimension)
        except ConfigurationError as exc:
            raise serializers.ValidationError({'vector_field': str(exc)})
        return attrs


class BoundRecordSerializer(serializers.ModelSerializer):
    holds = serializers.SerializerMethodField()

    class Meta:
        model = BoundRecord
        fields = [
            'id', 'theorem_tag', 'degrees', 'steps', 'value', 'constants',
            'clamped', 'measured_error', 'holds', 'created_at'
        ]
        read_only_fields = ['created_at']

    def get_holds(self, obj):
        return obj.holds


class ExperimentRunSerializer(serializers.ModelSerializer):
    bounds = BoundRecordSerializer(many=True, read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'command', 'system', 'degrees', 'config', 'status',
            'summary', 'output_path', 'bounds', 'created_at'
        ]
        read_only_fields = ['id', 'created_at']
