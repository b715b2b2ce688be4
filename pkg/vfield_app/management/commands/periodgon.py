import logging

from ...core import singular_points
from ...exceptions import FieldError, NearParabolic, Parabolic
from ...periodgon import (
    build_periodgon,
    chord_alphas,
    edge_alphas,
    homoclinic_alphas,
    horizontal_chords,
    sepal_zones,
)
from ...render import RenderOptions, periodgon_figure
from ...serializers import ChordSerializer, PeriodgonSerializer, SepalReportSerializer
from ._base import VFieldCommand

logger = logging.getLogger(__name__)


class Command(VFieldCommand):
    help = "Build the periodgon, check planarity and list its chords as JSON"
    subcommand = "periodgon"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        self.add_field_arguments(parser)
        parser.add_argument("--rays", type=int, help="Rays per periodic domain")
        parser.add_argument("--svg", help="Also write the periodgon figure here")
        parser.add_argument(
            "--format", choices=["json", "svg"], help="svg writes the figure instead of the JSON"
        )
        parser.add_argument("--chords", action="store_true", help="Overlay horizontal chords")
        parser.add_argument(
            "--fiber",
            action="store_true",
            help="Also detect homoclinic connections directly along the alpha fiber",
        )
        parser.add_argument("--samples", type=int, help="Fiber samples for --fiber")

    def handle(self, *args, **options):
        config = self.load_config(options)
        values = config["numerics_value"]
        f = self.field_spec(config)
        try:
            chain = build_periodgon(f, values)
        except FieldError as exc:
            self.write_json(self.diagnostic(f, exc, values), config.get("out"))
            return

        opts = RenderOptions(show_chords=config["chords"])
        if config["format"] == "svg":
            self.write_text(periodgon_figure(chain, opts, values), config.get("out"))
            return

        payload = {"periodgon": PeriodgonSerializer(chain).data}
        if chain.planar:
            chords = chord_alphas(chain, f.k, numerics=values)
            payload["chords"] = ChordSerializer(chords, many=True).data
            payload["horizontal_chords"] = ChordSerializer(
                horizontal_chords(chain, values), many=True
            ).data
        payload["edge_alphas"] = [
            {"center_index": j, "alphas": list(alphas)} for j, alphas in edge_alphas(chain, f.k)
        ]
        if options["fiber"]:
            scan = homoclinic_alphas(f, samples=config.get("samples") or 400, numerics=values)
            payload["fiber"] = {
                "chord_alphas": list(scan.chord_alphas),
                "edge_alphas": list(scan.edge_alphas),
            }
        self.write_json(payload, config.get("out"))
        if config.get("svg"):
            self.write_text(periodgon_figure(chain, opts, values), config["svg"])

    def diagnostic(self, f, exc, values) -> dict:
        logger.warning("periodgon not built: %s", exc)
        payload = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NearParabolic):
            payload.update(quantity=exc.quantity, value=exc.value, threshold=exc.threshold)
        if isinstance(exc, Parabolic):
            reports = []
            points = singular_points(f, values)
            for p in points:
                if p.is_simple:
                    continue
                try:
                    reports.append(sepal_zones(f, p, values, points=points))
                except FieldError as inner:
                    logger.warning("sepal zones of z_%d failed: %s", p.index, inner)
            payload["sepal_zones"] = SepalReportSerializer(reports, many=True).data
        return payload
