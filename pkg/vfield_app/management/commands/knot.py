from django.core.management.base import CommandError

from ...bifscan import knot_diagnostics
from ...exceptions import InvalidParameter
from ...serializers import KnotDiagnosticsSerializer
from ._base import VFieldCommand


class Command(VFieldCommand):
    help = "Winding numbers of arg eps1 and arg eps0 along the discriminant torus knot"
    subcommand = "knot"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--samples", type=int, help="Samples along the curve (at least 8k)")

    def handle(self, *args, **options):
        config = self.load_config(options)
        k = config["k"]
        try:
            result = knot_diagnostics(k, config.get("samples") or 32 * k)
        except InvalidParameter as exc:
            raise CommandError(str(exc), returncode=2)
        self.write_json(KnotDiagnosticsSerializer(result).data, config.get("out"))
