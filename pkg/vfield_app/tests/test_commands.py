import io
import json
import os
import tempfile
from contextlib import redirect_stderr, redirect_stdout

from django.core.management import call_command
from django.test import SimpleTestCase, TestCase, tag

from vfield_app import cli
from vfield_app.bifscan import read_jsonl
from vfield_app.models import BifurcationEvent, ScanRun


def run_cli(*argv) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.run(list(argv))
    return code, out.getvalue(), err.getvalue()


class RootsCommandTests(SimpleTestCase):
    def test_roots_json(self):
        code, out, _ = run_cli("roots", "--k", "3", "--eps1", "0", "--eps0", "2")
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual(payload["field"]["k"], 3)
        self.assertEqual(len(payload["points"]), 4)
        self.assertEqual(payload["points"][0]["location"], [0.0, 0.0])
        self.assertAlmostEqual(payload["sphere"]["s"], 1.0)

    def test_sphere_coordinates(self):
        code, out, _ = run_cli("roots", "--k", "4", "--s", "0.3", "--theta", "0.2")
        self.assertEqual(code, 0)
        self.assertEqual(len(json.loads(out)["points"]), 5)

    def test_zero_field(self):
        code, out, _ = run_cli("roots", "--k", "2", "--eps1", "0", "--eps0", "0")
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertIsNone(payload["sphere"])
        self.assertEqual(payload["points"][0]["multiplicity"], 3)

    def test_config_file_under_flags(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.json")
            with open(path, "w") as handle:
                json.dump({"k": 5, "eps1": "0", "eps0": "2"}, handle)
            code, out, _ = run_cli("roots", "--config", path, "--k", "3")
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)["field"]["k"], 3)

    def test_key_value_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "run.cfg")
            with open(path, "w") as handle:
                handle.write("# cubic\nk = 3\neps1 = 0\neps0 = -1\nnumeric = aberth_tol=1e-12\n")
            code, out, _ = run_cli("roots", "--config", path)
        self.assertEqual(code, 0)
        locations = [complex(*p["location"]) for p in json.loads(out)["points"]]
        self.assertEqual(len(locations), 4)
        self.assertTrue(any(abs(z - 1) < 1e-12 for z in locations))


class UsageErrorTests(SimpleTestCase):
    def test_unknown_subcommand(self):
        self.assertEqual(run_cli("migrate")[0], 2)
        self.assertEqual(run_cli()[0], 2)

    def test_missing_field(self):
        self.assertEqual(run_cli("roots", "--k", "3")[0], 2)

    def test_both_inputs(self):
        code, _, err = run_cli("roots", "--k", "3", "--eps1", "0", "--eps0", "1", "--s", "0.5")
        self.assertEqual(code, 2)
        self.assertIn("either", err)

    def test_bad_values(self):
        cases = [
            ("roots", "--k", "1", "--eps1", "0", "--eps0", "1"),
            ("roots", "--k", "3", "--s", "1.5", "--theta", "0"),
            ("roots", "--k", "3", "--eps1", "a,b", "--eps0", "1"),
            ("roots", "--k", "3", "--eps1", "0", "--eps0", "1", "--numeric", "no_such=1"),
            ("roots", "--k", "3", "--eps1", "0", "--eps0", "1", "--tol", "-1"),
            ("scan", "--k", "3", "--grid", "1x4"),
            ("verify", "--k", "2"),
            ("knot", "--k", "3", "--samples", "10"),
        ]
        for argv in cases:
            with self.subTest(argv=" ".join(argv)):
                self.assertEqual(run_cli(*argv)[0], 2)


class PeriodgonCommandTests(SimpleTestCase):
    def test_periodgon_with_figure(self):
        with tempfile.TemporaryDirectory() as tmp:
            svg = os.path.join(tmp, "p.svg")
            code, out, _ = run_cli(
                "periodgon", "--k", "3", "--eps1", "0", "--eps0", "2", "--svg", svg, "--chords"
            )
            self.assertEqual(code, 0)
            with open(svg) as handle:
                self.assertIn('id="edge-0"', handle.read())
        payload = json.loads(out)
        self.assertEqual(len(payload["periodgon"]["edges"]), 4)
        self.assertTrue(payload["periodgon"]["closed"])
        self.assertIn("chords", payload)
        self.assertEqual(len(payload["edge_alphas"]), 4)

    def test_svg_format(self):
        code, out, _ = run_cli(
            "periodgon", "--k", "3", "--eps1", "0", "--eps0", "2", "--format", "svg"
        )
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("<?xml"))

    def test_near_parabolic_is_reported(self):
        code, out, _ = run_cli("periodgon", "--k", "4", "--s", "0.5", "--theta", "0")
        self.assertEqual(code, 0)
        payload = json.loads(out)
        self.assertEqual(payload["error"], "NearParabolic")
        self.assertIn("threshold", payload)
        self.assertIn("sepal_zones", payload)


class PhaseCommandTests(SimpleTestCase):
    def test_svg_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "phase.svg")
            code, _, _ = run_cli(
                "phase", "--k", "3", "--eps1", "0", "--eps0", "2", "--grid", "2x2", "--out", path
            )
            self.assertEqual(code, 0)
            with open(path) as handle:
                svg = handle.read()
        self.assertTrue(svg.startswith("<?xml"))
        self.assertEqual(svg.count('id="separatrix-'), 6)


class KnotCommandTests(SimpleTestCase):
    def test_knot(self):
        code, out, _ = run_cli("knot", "--k", "3")
        self.assertEqual(code, 0)
        self.assertEqual(
            json.loads(out), {"winding_eps1": -2, "winding_eps0": -3, "closes": True}
        )


class VerifyCommandTests(SimpleTestCase):
    @tag("slow")
    def test_verify_k5(self):
        code, out, _ = run_cli("verify", "--k", "5", "--samples", "16")
        self.assertEqual(code, 0)
        report = json.loads(out)
        self.assertTrue(report["passed"])
        self.assertEqual(report["failures"], [])


class ScanCommandTests(TestCase):
    @tag("slow")
    def test_scan_and_store(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "events.jsonl")
            out, err = io.StringIO(), io.StringIO()
            call_command(
                "scan",
                k=3,
                grid="2x2",
                no_refine=True,
                store=True,
                out=path,
                stdout=out,
                stderr=err,
            )
            events = read_jsonl(path)
        summary = json.loads(out.getvalue())
        self.assertEqual(summary["events"], len(events))
        self.assertIn("parabolic_delta", summary["by_kind"])

        run = ScanRun.objects.get()
        self.assertEqual((run.k, run.n_s, run.n_theta), (3, 2, 2))
        self.assertFalse(run.config["refine"])
        stored = list(BifurcationEvent.objects.filter(run=run))
        self.assertEqual(len(stored), len(events))
        for row, event in zip(stored, events):
            self.assertEqual(row.kind, event.kind)
            self.assertEqual((row.s, row.theta, row.alpha), (event.s, event.theta, event.alpha))
        self.assertIn(f"stored scan run {run.pk}", err.getvalue())

    @tag("slow")
    def test_csv_to_stdout(self):
        out = io.StringIO()
        call_command("scan", k=3, grid="2x2", no_refine=True, format="csv", stdout=out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], "kind,k,s,theta,alpha,data")
        self.assertTrue(lines[1].startswith("parabolic_eps0,3,"))

    @tag("slow")
    def test_disk_only(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "disk.svg")
            call_command(
                "scan", k=3, grid="2x2", no_refine=True, jobs=1, format="svg", out=path
            )
            with open(path) as handle:
                svg = handle.read()
        self.assertIn('id="event-parabolic_delta-0"', svg)
        self.assertEqual(svg.count('id="guide-'), 4)
