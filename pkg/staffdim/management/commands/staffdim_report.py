from __future__ import annotations

from django.core.management.base import BaseCommand

from staffdim.report import render_csv, render_json
from staffdim.services import build_reports, load_run

from ._common import reported_errors

TABLES = ("workload", "variance", "coverage", "performance")


class Command(BaseCommand):
    help = "Evaluation tables of a stored run."

    def add_arguments(self, parser):
        parser.add_argument("--run", required=True, help="Run directory (or its solution file).")
        parser.add_argument("--format", choices=("csv", "json"), default="csv")
        parser.add_argument("--table", choices=TABLES, action="append", help="Restrict to these tables.")

    def handle(self, *args, **options):
        with reported_errors():
            reports = build_reports(load_run(options["run"]))
        wanted = options["table"] or list(TABLES)

        if options["format"] == "json":
            payload = {"meta": reports["meta"], **{name: reports[name] for name in wanted}}
            self.stdout.write(render_json(payload), ending="")
            return

        blocks = []
        for name in wanted:
            table = reports[name]
            if table is None:
                self.stderr.write(
                    f"{name}: no retained assignments; re-solve with --keep-assignments."
                )
                continue
            blocks.append(f"# {name}\n" + render_csv(table["header"], table["rows"]))
        self.stdout.write("\n".join(blocks), ending="")
