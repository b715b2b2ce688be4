from ...core import discriminant, singular_points, to_sphere
from ...exceptions import ZeroParameter
from ...serializers import (
    ComplexField,
    FieldSpecSerializer,
    SingularPointSerializer,
    SphereCoordsSerializer,
)
from ._base import VFieldCommand


class Command(VFieldCommand):
    help = "Singular points, eigenvalues and periods of z(z^k + eps1 z + eps0) as JSON"
    subcommand = "roots"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_field_arguments(parser)

    def handle(self, *args, **options):
        config = self.load_config(options)
        f = self.field_spec(config)
        points = singular_points(f, config["numerics_value"])
        try:
            coords, radius = to_sphere(f)
            sphere = {**SphereCoordsSerializer(coords).data, "scale": radius}
        except ZeroParameter:
            sphere = None
        self.write_json(
            {
                "field": FieldSpecSerializer(f).data,
                "sphere": sphere,
                "discriminant": ComplexField().to_representation(discriminant(f)),
                "points": SingularPointSerializer(points, many=True).data,
            },
            config.get("out"),
        )
