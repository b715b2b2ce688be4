import json

from django.core.management.base import BaseCommand, CommandError

from ...conf import numerics
from ...core import FieldSpec, SphereCoords, from_sphere
from ...exceptions import InvalidParameter
from ...serializers import RunConfigSerializer


def _numeric_pair(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise CommandError(f"Expected key=value, got {text!r}", returncode=2)
    try:
        number = float(value)
    except ValueError:
        raise CommandError(f"{key}: {value!r} is not a number", returncode=2)
    return key.strip(), int(number) if number.is_integer() and "." not in value else number


def _read_config(text: str) -> dict:
    """JSON object, or key=value lines (blank lines and # comments ignored)."""
    if text.lstrip().startswith("{"):
        return json.loads(text)
    values = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {number}: expected key=value")
        key = key.strip().lstrip("-").replace("-", "_")
        if key == "numeric":
            name, amount = _numeric_pair(value.strip())
            values.setdefault("numerics", {})[name] = amount
        else:
            values[key] = value.strip()
    return values


class VFieldCommand(BaseCommand):
    """
    Shared plumbing: a config file (--config, JSON or key=value lines) is merged under the
    command-line flags; the result is validated by RunConfigSerializer and turned into a FieldSpec
    and a Numerics value.
    """

    requires_system_checks = []
    subcommand = None

    # ---------- Arguments ----------
    def add_arguments(self, parser):
        parser.add_argument("--k", type=int, help="Degree k of z(z^k + eps1 z + eps0)")
        parser.add_argument("--config", help="JSON file with default values for these flags")
        parser.add_argument(
            "--numeric",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Override one numerics setting (repeatable)",
        )
        parser.add_argument("--tol", type=float, help="Integrator relative tolerance")
        parser.add_argument("--out", help="Output file (stdout when omitted)")

    def add_field_arguments(self, parser):
        parser.add_argument("--eps1", help="eps1 as 're,im' or 're'")
        parser.add_argument("--eps0", help="eps0 as 're,im' or 're'")
        parser.add_argument("--s", type=float, help="Sphere coordinate s in [0, 1]")
        parser.add_argument("--theta", type=float, help="Sphere coordinate theta")
        parser.add_argument("--alpha", type=float, help="Sphere coordinate alpha (default 0)")

    # ---------- Configuration ----------
    def load_config(self, options) -> dict:
        merged = {}
        if options.get("config"):
            try:
                with open(options["config"], encoding="utf-8") as handle:
                    merged.update(_read_config(handle.read()))
            except (OSError, ValueError) as exc:
                raise CommandError(f"Cannot read config: {exc}", returncode=2)
        overrides = dict(merged.get("numerics") or {})
        overrides.update(_numeric_pair(item) for item in options.get("numeric") or [])
        for key in RunConfigSerializer().fields:
            if options.get(key) not in (None, False):
                merged[key] = options[key]
        merged["numerics"] = overrides
        merged["subcommand"] = self.subcommand

        serializer = RunConfigSerializer(data=merged)
        if not serializer.is_valid():
            raise CommandError(json.dumps(serializer.errors, sort_keys=True), returncode=2)
        config = serializer.validated_data
        overrides = dict(config["numerics"])
        if config.get("rays"):
            overrides["ray_count"] = config["rays"]
        try:
            values = numerics(**overrides)
            if config.get("tol"):
                values = values.with_tol(config["tol"])
        except (InvalidParameter, TypeError) as exc:
            raise CommandError(str(exc), returncode=2)
        config["numerics_value"] = values
        return config

    def field_spec(self, config) -> FieldSpec:
        try:
            if config.get("eps1") is not None:
                return FieldSpec(k=config["k"], eps1=config["eps1"], eps0=config["eps0"])
            coords = SphereCoords(config["s"], config["theta"], config.get("alpha") or 0.0)
            return from_sphere(coords, config["k"])
        except InvalidParameter as exc:
            raise CommandError(str(exc), returncode=2)

    # ---------- Output ----------
    def write_text(self, text: str, path: str | None = None):
        if path:
            with open(path, "w", encoding="utf-8") as handle:
                handle.write(text)
        else:
            self.stdout.write(text)

    def write_json(self, payload, path: str | None = None):
        self.write_text(json.dumps(payload, indent=2, sort_keys=True), path)
