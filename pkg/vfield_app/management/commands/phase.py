from django.core.management.base import CommandError

from ...exceptions import FieldError
from ...render import RenderOptions, phase_portrait
from ._base import VFieldCommand


class Command(VFieldCommand):
    help = "SVG phase portrait of exp(i delta) z(z^k + eps1 z + eps0)"
    subcommand = "phase"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_field_arguments(parser)
        parser.add_argument("--delta", type=float, help="Rotation delta of the field")
        parser.add_argument("--grid", help="Orbit grid as NxN (default 5x5)")
        parser.add_argument("--svg", help="Same as --out")

    def handle(self, *args, **options):
        grid_given = options.get("grid") is not None
        config = self.load_config(options)
        f = self.field_spec(config)
        opts = RenderOptions(orbit_grid=config["grid"][0] if grid_given else 5)
        try:
            svg = phase_portrait(f, config["delta"], opts, config["numerics_value"])
        except FieldError as exc:
            raise CommandError(f"{type(exc).__name__}: {exc}")
        self.write_text(svg, config.get("out") or config.get("svg"))
