import os
import tempfile
from collections import Counter
from dataclasses import asdict, replace

from django.core.management.base import CommandError
from django.db import transaction

from ...bifscan import ScanConfig, scan_disk
from ...exceptions import InvalidParameter
from ...models import BifurcationEvent, ScanRun
from ...render import bifurcation_disk
from ._base import VFieldCommand


class Command(VFieldCommand):
    help = "Sweep the (s, theta) disk for bifurcation events (JSONL or CSV, optional disk SVG)"
    subcommand = "scan"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--grid", help="Grid as NxM over (s, theta), default 64x64")
        parser.add_argument("--jobs", type=int, help="Worker processes (default: logical cores)")
        parser.add_argument(
            "--format",
            choices=["json", "csv", "svg"],
            help="json writes JSON lines; svg writes only the bifurcation disk",
        )
        parser.add_argument("--svg", help="Also write the bifurcation disk here")
        parser.add_argument("--store", action="store_true", help="Save the run in the database")
        parser.add_argument("--no-refine", action="store_true", help="Skip multi-loop refinement")

    def handle(self, *args, **options):
        config = self.load_config(options)
        n_s, n_theta = config["grid"]
        out = config.get("out")
        as_csv = config["format"] == "csv"
        as_svg = config["format"] == "svg"
        events_path = out if out and not as_svg else None
        try:
            cfg = ScanConfig(
                k=config["k"],
                n_s=n_s,
                n_theta=n_theta,
                jobs=config.get("jobs") or os.cpu_count() or 1,
                refine=not options["no_refine"],
                numerics=config["numerics_value"],
                jsonl_path=events_path if not as_csv else None,
                csv_path=events_path if as_csv else None,
            )
        except InvalidParameter as exc:
            raise CommandError(str(exc), returncode=2)

        if events_path or as_svg:
            events = scan_disk(cfg)
        else:
            events = self.scan_to_stdout(cfg, as_csv)

        if as_svg:
            self.write_text(bifurcation_disk(events, cfg.k), out)
        if config.get("svg"):
            self.write_text(bifurcation_disk(events, cfg.k), config["svg"])
        if config["store"]:
            run = self.store(cfg, events)
            self.stderr.write(f"stored scan run {run.pk} with {len(events)} events")
        if events_path:
            counts = Counter(str(e.kind) for e in events)
            self.write_json({"events": len(events), "by_kind": dict(sorted(counts.items()))})

    def scan_to_stdout(self, cfg: ScanConfig, as_csv: bool):
        handle, path = tempfile.mkstemp(suffix=".csv" if as_csv else ".jsonl")
        os.close(handle)
        try:
            cfg = replace(cfg, csv_path=path) if as_csv else replace(cfg, jsonl_path=path)
            events = scan_disk(cfg)
            with open(path, encoding="utf-8") as stream:
                self.stdout.write(stream.read(), ending="")
        finally:
            os.unlink(path)
        return events

    @transaction.atomic
    def store(self, cfg: ScanConfig, events) -> ScanRun:
        run = ScanRun.objects.create(
            k=cfg.k,
            n_s=cfg.n_s,
            n_theta=cfg.n_theta,
            config={
                "s_range": list(cfg.s_range),
                "alpha_window": list(cfg.alpha_window),
                "refine": cfg.refine,
                "numerics": asdict(cfg.numerics),
            },
        )
        for sequence, event in enumerate(events):
            BifurcationEvent.objects.create(
                run=run,
                sequence=sequence,
                kind=str(event.kind),
                k=event.k,
                s=event.s,
                theta=event.theta,
                alpha=event.alpha,
                data=event.data,
            )
        return run
