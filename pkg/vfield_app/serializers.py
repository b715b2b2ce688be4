import math
import os
import re

from rest_framework import serializers

from . import models
from .event_kinds import EVENT_KIND_CLASSES, EventKind


def _finite(value: float):
    return float(value) if math.isfinite(value) else None


class ComplexField(serializers.Field):
    """Complex numbers travel as [re, im]; input also accepts "re,im", "re" or a plain number."""

    default_error_messages = {
        "invalid": "Expected a complex number as [re, im], 're,im' or a real number.",
    }

    def to_representation(self, value):
        z = complex(value)
        return [z.real, z.imag]

    def to_internal_value(self, data):
        try:
            if isinstance(data, str):
                parts = [p.strip() for p in data.split(",")]
                if len(parts) > 2:
                    self.fail("invalid")
                return complex(float(parts[0]), float(parts[1]) if len(parts) == 2 else 0.0)
            if isinstance(data, (list, tuple)):
                if len(data) != 2:
                    self.fail("invalid")
                return complex(float(data[0]), float(data[1]))
            if isinstance(data, bool):
                self.fail("invalid")
            return complex(float(data), 0.0)
        except (TypeError, ValueError):
            self.fail("invalid")


# --------------------------------------------
# Core values
# --------------------------------------------


class SingularPointSerializer(serializers.Serializer):
    def to_representation(self, instance):
        complex_field = ComplexField()
        return {
            "index": instance.index,
            "location": complex_field.to_representation(instance.location),
            "multiplicity": instance.multiplicity,
            "codim": instance.codim,
            "eigenvalue": (
                complex_field.to_representation(instance.eigenvalue)
                if instance.eigenvalue is not None
                else None
            ),
            "period": (
                complex_field.to_representation(instance.period)
                if instance.period is not None
                else None
            ),
        }


class SphereCoordsSerializer(serializers.Serializer):
    s = serializers.FloatField(min_value=0.0, max_value=1.0)
    theta = serializers.FloatField()
    alpha = serializers.FloatField()


class FieldSpecSerializer(serializers.Serializer):
    k = serializers.IntegerField(min_value=2)
    eps1 = ComplexField()
    eps0 = ComplexField()


# --------------------------------------------
# Periodgon
# --------------------------------------------


class PeriodicDomainSerializer(serializers.Serializer):
    def to_representation(self, instance):
        return {
            "center_index": instance.center_index,
            "center": ComplexField().to_representation(instance.center),
            "delta": instance.delta,
            "loop_count": instance.loop_count,
            "escape_sector_pairs": [list(p) for p in instance.escape_sector_pairs],
            "access_angle": instance.access_angle,
            "boundary_radii": [_finite(r) for r in instance.boundary_radii],
        }


class ChordSerializer(serializers.Serializer):
    def to_representation(self, instance):
        chord = getattr(instance, "chord", instance)
        data = {
            "vertex_pair": list(chord.vertex_pair),
            "center_pair": list(chord.center_pair),
            "vector": ComplexField().to_representation(chord.vector),
        }
        if hasattr(instance, "alphas"):
            data["alphas"] = list(instance.alphas)
        return data


class PeriodgonSerializer(serializers.Serializer):
    def to_representation(self, instance):
        complex_field = ComplexField()
        return {
            "edges": [
                {
                    "center_index": e.center_index,
                    "vector": complex_field.to_representation(e.vector),
                }
                for e in instance.edges
            ],
            "vertices": [complex_field.to_representation(v) for v in instance.vertices],
            "closed": instance.closed,
            "planar": instance.planar,
            "ambiguous_order": instance.ambiguous_order,
            "closure_gap": abs(instance.closure_gap),
            "domains": PeriodicDomainSerializer(instance.domains, many=True).data,
        }


class SepalReportSerializer(serializers.Serializer):
    def to_representation(self, instance):
        return {
            "parabolic_location": ComplexField().to_representation(instance.parabolic_location),
            "codim": instance.codim,
            "zone_count": instance.zone_count,
            "sector_indices": list(instance.sector_indices),
            "gap_counts": list(instance.gap_counts) if instance.gap_counts else None,
            "delta": instance.delta,
        }


# --------------------------------------------
# Events and reports
# --------------------------------------------


def validate_event_data(kind: str, data: dict) -> None:
    schema = EVENT_KIND_CLASSES[kind].schema()["required_data"]
    missing = [
        name for name, spec in schema.items() if spec.get("required", True) and name not in data
    ]
    if missing:
        raise serializers.ValidationError({"data": f"Missing required fields: {missing}"})


class EventSerializer(serializers.Serializer):
    """Flat record {kind, k, s, theta, alpha, data} of a bifscan event."""

    kind = serializers.ChoiceField(choices=EventKind.choices)
    k = serializers.IntegerField(min_value=2)
    s = serializers.FloatField(min_value=0.0, max_value=1.0)
    theta = serializers.FloatField()
    alpha = serializers.FloatField()
    data = serializers.DictField()

    def validate(self, attrs):
        validate_event_data(attrs["kind"], attrs["data"])
        return attrs

    def to_representation(self, instance):
        return instance.record()


class StoredEventSerializer(serializers.ModelSerializer):
    class Meta:
        model = models.BifurcationEvent
        fields = ["kind", "k", "s", "theta", "alpha", "data"]

    def validate(self, attrs):
        validate_event_data(attrs["kind"], attrs.get("data") or {})
        return attrs


class ReportItemSerializer(serializers.Serializer):
    def to_representation(self, instance):
        return {
            "name": instance.name,
            "category": instance.category,
            "passed": instance.passed,
            "details": instance.details,
        }


class VerificationReportSerializer(serializers.Serializer):
    def to_representation(self, instance):
        return {
            "k": instance.k,
            "passed": instance.passed,
            "failures": instance.failures,
            "items": ReportItemSerializer(instance.items, many=True).data,
        }


class KnotDiagnosticsSerializer(serializers.Serializer):
    winding_eps1 = serializers.IntegerField()
    winding_eps0 = serializers.IntegerField()
    closes = serializers.BooleanField()


# --------------------------------------------
# Command-line configuration
# --------------------------------------------

GRID_PATTERN = re.compile(r"^\s*(\d+)\s*[xX]\s*(\d+)\s*$")
POINT_COMMANDS = ("roots", "periodgon", "phase")


class RunConfigSerializer(serializers.Serializer):
    subcommand = serializers.ChoiceField(
        choices=["roots", "periodgon", "phase", "scan", "verify", "knot"]
    )
    k = serializers.IntegerField(min_value=2)

    eps1 = ComplexField(required=False, allow_null=True)
    eps0 = ComplexField(required=False, allow_null=True)
    s = serializers.FloatField(required=False, allow_null=True, min_value=0.0, max_value=1.0)
    theta = serializers.FloatField(required=False, allow_null=True)
    alpha = serializers.FloatField(required=False, allow_null=True)

    delta = serializers.FloatField(default=0.0)
    grid = serializers.CharField(default="64x64")
    rays = serializers.IntegerField(required=False, allow_null=True, min_value=1)
    tol = serializers.FloatField(required=False, allow_null=True)
    jobs = serializers.IntegerField(required=False, allow_null=True, min_value=1)
    samples = serializers.IntegerField(required=False, allow_null=True, min_value=1)

    out = serializers.CharField(required=False, allow_null=True, allow_blank=False)
    svg = serializers.CharField(required=False, allow_null=True, allow_blank=False)
    format = serializers.ChoiceField(choices=["json", "csv", "svg"], default="json")
    store = serializers.BooleanField(default=False)
    chords = serializers.BooleanField(default=False)
    numerics = serializers.DictField(default=dict)

    def validate_tol(self, value):
        if value is not None and value <= 0:
            raise serializers.ValidationError("Tolerance must be positive.")
        return value

    def validate_grid(self, value):
        match = GRID_PATTERN.match(value)
        if not match:
            raise serializers.ValidationError("Grid must look like NxM.")
        n_s, n_theta = int(match.group(1)), int(match.group(2))
        if n_s < 2 or n_theta < 2:
            raise serializers.ValidationError("Grid resolutions must be at least 2.")
        return n_s, n_theta

    def _writable(self, path):
        folder = os.path.dirname(os.path.abspath(path))
        if not os.path.isdir(folder) or not os.access(folder, os.W_OK):
            raise serializers.ValidationError(f"Cannot write to {path}.")
        return path

    def validate_out(self, value):
        return self._writable(value) if value else value

    def validate_svg(self, value):
        return self._writable(value) if value else value

    def validate(self, attrs):
        has_eps = attrs.get("eps1") is not None or attrs.get("eps0") is not None
        has_sphere = attrs.get("s") is not None or attrs.get("theta") is not None
        if has_eps and has_sphere:
            raise serializers.ValidationError("Give either the eps pair or sphere coordinates.")
        if has_eps and (attrs.get("eps1") is None or attrs.get("eps0") is None):
            raise serializers.ValidationError("Both --eps1 and --eps0 are required.")
        if has_sphere and (attrs.get("s") is None or attrs.get("theta") is None):
            raise serializers.ValidationError("Both --s and --theta are required.")
        if attrs["subcommand"] in POINT_COMMANDS and not (has_eps or has_sphere):
            raise serializers.ValidationError(
                f"{attrs['subcommand']} needs the eps pair or sphere coordinates."
            )
        if attrs.get("alpha") is not None and not has_sphere:
            raise serializers.ValidationError("--alpha only applies with sphere coordinates.")
        return attrs
