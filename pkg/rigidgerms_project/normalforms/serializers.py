"""
Django REST Framework serializers.
Validates germ files and turns pipeline results into report documents.
"""
from fractions import Fraction

from rest_framework import serializers
from sympy.polys.domains import QQ_I

from .germlang import RESERVED_NAMES
from .multiseries import EXACT_FIELD, FLOAT_FIELD


# ==========================================
# Germ file schema
# ==========================================

class DeclaredResonancesSerializer(serializers.Serializer):
    """
    Resonances listed by hand instead of detected.
    primary: [[k, n...], ...] with k from 1; secondary: [[n...], ...]
    """
    primary = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=2),
        required=False, allow_null=True)
    secondary = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1),
        required=False, allow_null=True)

    def validate_primary(self, value):
        if value is None:
            return value
        for row in value:
            if row[0] < 1:
                raise serializers.ValidationError(
                    f"coordinate index must start at 1, got {row[0]}")
            if sum(row[1:]) < 1:
                raise serializers.ValidationError("resonant monomials have degree at least 1")
        return value

    def validate_secondary(self, value):
        if value is None:
            return value
        for row in value:
            if sum(row) < 1:
                raise serializers.ValidationError("resonant monomials have degree at least 1")
        return value

    def validate(self, attrs):
        """Row shapes against the germ's blocks, when the serializer is given them."""
        blocks = self.context.get('blocks')
        if blocks is None:
            return attrs
        errors = {}
        primary = []
        for row in attrs.get('primary') or []:
            if len(row) != 1 + blocks.s:
                primary.append(f"row {row} needs k and {blocks.s} exponents "
                               f"(r={blocks.r}, e={blocks.e})")
            elif not 1 <= row[0] <= blocks.e:
                primary.append(f"row {row}: k must lie in 1..{blocks.e}" if blocks.e
                               else f"row {row}: the germ has no v-coordinates")
        secondary = [f"row {row} needs {blocks.s} exponents (r={blocks.r}, e={blocks.e})"
                     for row in attrs.get('secondary') or [] if len(row) != blocks.s]
        if primary:
            errors['primary'] = primary
        if secondary:
            errors['secondary'] = secondary
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


class TolerancesSerializer(serializers.Serializer):
    coeff = serializers.FloatField(min_value=0.0, required=False)
    res = serializers.FloatField(min_value=0.0, required=False)
    eig = serializers.FloatField(min_value=0.0, required=False)
    residual = serializers.FloatField(min_value=0.0, required=False)
    series = serializers.FloatField(min_value=0.0, required=False)


class GermFileSerializer(serializers.Serializer):
    """
    Serializer for germ description files.
    Component expressions are parsed afterwards by germlang.
    """
    dim = serializers.IntegerField(min_value=1)
    trunc = serializers.IntegerField(min_value=1, required=False)
    mode = serializers.ChoiceField(choices=['exact', 'float'], required=False)
    critical_count = serializers.IntegerField(min_value=0, required=False, default=0)
    variables = serializers.ListField(child=serializers.CharField(), required=False)
    components = serializers.ListField(child=serializers.CharField(), allow_empty=False)
    declared_resonances = DeclaredResonancesSerializer(required=False)
    tolerances = TolerancesSerializer(required=False)

    def validate_variables(self, value):
        """Variable names must be unique identifiers other than I."""
        problems = []
        seen = set()
        for name in value:
            if not name.isidentifier():
                problems.append(f"{name!r} is not a valid name")
            elif name in RESERVED_NAMES:
                problems.append(f"{name!r} is reserved for the imaginary unit")
            if name in seen:
                problems.append(f"duplicate variable name {name!r}")
            seen.add(name)
        if problems:
            raise serializers.ValidationError(problems)
        return value

    def validate(self, attrs):
        errors = {}
        dim = attrs['dim']
        if len(attrs['components']) != dim:
            errors['components'] = [f"expected {dim} components, got {len(attrs['components'])}"]
        variables = attrs.get('variables')
        if variables is not None and len(variables) != dim:
            errors['variables'] = [f"expected {dim} names, got {len(variables)}"]
        if attrs.get('critical_count', 0) > dim:
            errors['critical_count'] = [f"must not exceed dim={dim}"]
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


# ==========================================
# Report rendering
# ==========================================

def render_number(value, field=None):
    """Full-precision text: "p/q" for exact values, 17 digits for floats."""
    if isinstance(value, Fraction):
        return str(value.numerator) if value.denominator == 1 else str(value)
    if isinstance(value, (int, bool)):
        return str(value)
    if isinstance(value, float):
        return format(value, '.17g')
    if isinstance(value, complex):
        return FLOAT_FIELD.render(value)
    if field is not None:
        return field.render(field.convert(value))
    if isinstance(value, QQ_I.dtype):
        return EXACT_FIELD.render(value)
    return FLOAT_FIELD.render(complex(value))


class _RenderingSerializer(serializers.Serializer):
    """Read-only serializer whose numbers go through the run's coefficient field."""

    def number(self, value):
        return render_number(value, self.context.get('field'))

    def numbers(self, values):
        return [self.number(v) for v in values]

    def series(self, s, names):
        return {
            'expression': s.to_expression(names),
            'terms': [{'exponents': list(n), 'coefficient': self.number(c)}
                      for n, c in s.items()],
        }


class RigiditySerializer(_RenderingSerializer):
    jacobian_monomial = serializers.ListField(child=serializers.IntegerField())
    jacobian_unit_constant = serializers.SerializerMethodField()
    pullback_exponents = serializers.ListField(
        child=serializers.ListField(child=serializers.IntegerField()))
    unit_constants = serializers.SerializerMethodField()
    verified_to_degree = serializers.IntegerField()
    unreachable = serializers.ListField(child=serializers.IntegerField())

    def get_jacobian_unit_constant(self, obj):
        return self.number(obj.jacobian_unit_constant)

    def get_unit_constants(self, obj):
        return self.numbers(obj.unit_constants)


class ContractionSerializer(_RenderingSerializer):
    contracting = serializers.BooleanField()
    radius = serializers.SerializerMethodField()
    eigenvalues = serializers.SerializerMethodField()

    def get_radius(self, obj):
        return render_number(float(obj.radius))

    def get_eigenvalues(self, obj):
        return [render_number(complex(v)) for v in obj.eigenvalues]


class BlockStructureSerializer(_RenderingSerializer):
    d = serializers.IntegerField()
    q = serializers.IntegerField()
    r = serializers.IntegerField()
    p = serializers.IntegerField()
    s = serializers.IntegerField()
    e = serializers.IntegerField()
    eta = serializers.IntegerField()
    B = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    C = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    D = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    order = serializers.ListField(child=serializers.IntegerField())
    cycles = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))
    alpha = serializers.SerializerMethodField()
    beta = serializers.SerializerMethodField()
    mu = serializers.SerializerMethodField()
    jordan = serializers.BooleanField()

    def get_alpha(self, obj):
        return self.numbers(obj.alpha)

    def get_beta(self, obj):
        return self.numbers(obj.beta)

    def get_mu(self, obj):
        return self.numbers(obj.mu)


class ResonanceReportSerializer(_RenderingSerializer):
    primaries = serializers.SerializerMethodField()
    secondaries = serializers.SerializerMethodField()
    degree_bound = serializers.IntegerField()
    eta = serializers.IntegerField()
    equality_mode = serializers.CharField()
    tol_res = serializers.SerializerMethodField()
    declared = serializers.BooleanField()
    near_misses = serializers.SerializerMethodField()

    def get_primaries(self, obj):
        return [{'k': res.coordinate_k, 'n_u': list(res.n_u), 'n_v': list(res.n_v)}
                for res in obj.primaries]

    def get_secondaries(self, obj):
        return [{'n_x': list(res.n_x)} for res in obj.secondaries]

    def get_tol_res(self, obj):
        return render_number(float(obj.tol_res))

    def get_near_misses(self, obj):
        return [{'key': [str(part) for part in miss['key']],
                 'gap': render_number(float(miss['gap']))} for miss in obj.near_misses]


class CertificateSerializer(_RenderingSerializer):
    passes_applied = serializers.ListField(child=serializers.CharField())
    residual = serializers.SerializerMethodField()
    stage_residuals = serializers.SerializerMethodField()
    normalized = serializers.SerializerMethodField()
    phi = serializers.SerializerMethodField()
    violations = serializers.ListField(child=serializers.CharField())
    weight_trace = serializers.SerializerMethodField()
    kept_slots = serializers.SerializerMethodField()
    blocks = serializers.SerializerMethodField()
    resonances = serializers.SerializerMethodField()

    def get_residual(self, obj):
        return render_number(float(obj.residual))

    def get_stage_residuals(self, obj):
        return {k: render_number(float(v)) for k, v in obj.stage_residuals.items()}

    def get_normalized(self, obj):
        names = obj.normalized.names
        return [self.series(s, names) for s in obj.normalized.components]

    def get_phi(self, obj):
        names = obj.normalized.names
        return [self.series(s, names) for s in obj.phi]

    def get_weight_trace(self, obj):
        seen = []
        for w in obj.weight_trace:
            text = render_number(Fraction(w))
            if not seen or seen[-1] != text:
                seen.append(text)
        return seen

    def get_kept_slots(self, obj):
        return [{'k': k + 1, 'n': list(n)} for k, n in obj.kept_slots]

    def get_blocks(self, obj):
        if obj.blocks is None:
            return None
        return BlockStructureSerializer(obj.blocks, context=self.context).data

    def get_resonances(self, obj):
        if obj.resonances is None:
            return None
        return ResonanceReportSerializer(obj.resonances, context=self.context).data


class ClassRowSerializer(serializers.Serializer):
    q = serializers.IntegerField()
    r = serializers.IntegerField()
    s = serializers.IntegerField()
    eta = serializers.IntegerField()
    crit_shape = serializers.CharField(allow_blank=True)
    form_id = serializers.CharField()
    form = serializers.CharField()
    parameters = serializers.DictField()


class ErrorSerializer(serializers.Serializer):
    """The failure record of a report."""
    code = serializers.CharField()
    subcode = serializers.CharField(required=False)
    stage = serializers.CharField(allow_null=True)
    message = serializers.CharField()
    details = serializers.DictField()
    exit_status = serializers.IntegerField()

    def to_representation(self, instance):
        data = {
            'code': instance.code,
            'stage': instance.stage,
            'message': instance.message,
            'details': _plain(instance.details),
            'exit_status': instance.exit_status,
        }
        subcode = getattr(instance, 'subcode', None)
        if subcode:
            data['subcode'] = subcode
        return data


def _plain(value):
    """JSON-safe copy of error details."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if value is None or isinstance(value, (str, int, float, bool)):
        return value
    return render_number(value)


class ReportSerializer(serializers.Serializer):
    command = serializers.CharField()
    input_digest = serializers.CharField()
    options = serializers.DictField()
    outcome = serializers.DictField()
    timings = serializers.DictField(required=False)

    def to_representation(self, instance):
        data = super().to_representation(instance)
        if instance.get('timings') is None:
            data.pop('timings', None)
        return data
