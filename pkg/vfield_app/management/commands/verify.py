from django.core.management.base import CommandError

from ...bifscan import VerifySamples, verify_theorems
from ...exceptions import InvalidParameter
from ...serializers import VerificationReportSerializer
from ._base import VFieldCommand


class Command(VFieldCommand):
    help = "Check the multi-loop loci and the root and eigenvalue lemmas; exit 1 on any failure"
    subcommand = "verify"

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument("--samples", type=int, help="Random samples for the analytic lemmas")

    def handle(self, *args, **options):
        config = self.load_config(options)
        samples = VerifySamples()
        if config.get("samples"):
            samples = VerifySamples(random_count=config["samples"])
        try:
            report = verify_theorems(config["k"], samples, config["numerics_value"])
        except InvalidParameter as exc:
            raise CommandError(str(exc), returncode=2)
        self.write_json(VerificationReportSerializer(report).data, config.get("out"))
        if not report.passed:
            raise CommandError(f"verification failed: {', '.join(report.failures)}", returncode=1)
