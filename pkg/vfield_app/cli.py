"""Library entry point: vfield_app.cli.run(["roots", "--k", "3", ...]) returns the exit code."""

import os
import sys

SUBCOMMANDS = ("roots", "periodgon", "phase", "scan", "verify", "knot")


def run(argv=None) -> int:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "vfield.settings")
    import django
    from django.core.management import ManagementUtility

    django.setup()
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in SUBCOMMANDS:
        sys.stderr.write(f"usage: vfield {{{','.join(SUBCOMMANDS)}}} [options]\n")
        return 2
    try:
        ManagementUtility(["vfield", *argv]).execute()
    except SystemExit as exc:
        if exc.code is None:
            return 0
        return exc.code if isinstance(exc.code, int) else 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
