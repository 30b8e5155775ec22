from __future__ import annotations

from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from staffdim.domain import load_instance, load_scenarios
from staffdim.master import compute_requirements, pareto_front
from staffdim.report import render_csv
from staffdim.services import normalize_time_limit

from ._common import add_instance_arguments, add_solver_arguments, reported_errors


class Command(BaseCommand):
    help = "Cost/coverage Pareto front of the staffing over a scenario bundle (CSV)."

    def add_arguments(self, parser):
        add_instance_arguments(parser)
        add_solver_arguments(parser, settings.STAFFDIM_TIME_LIMIT, settings.STAFFDIM_THREADS)
        parser.add_argument("--out", default=None, help="CSV file; stdout when omitted.")

    def handle(self, *args, **options):
        with reported_errors():
            instance = load_instance(options["instance"])
            scenarios = load_scenarios(options["scenarios"], instance)
            matrix = compute_requirements(
                instance,
                scenarios,
                1.0,
                normalize_time_limit(options["time_limit"]),
                threads=options["threads"],
                progress=options["progress"],
            )
            front = pareto_front(matrix, instance.costs)

        header = ("coverage", "cost", *(f"n_{p}" for p in matrix.professions))
        rows = [[round(point.coverage, 4), point.cost, *point.n] for point in front]
        text = render_csv(header, rows)
        approximate = sum(point.approximate for point in front)
        if approximate:
            self.stderr.write(f"{approximate} point(s) rest on timed-out requirements and are approximate.")
        if options["out"]:
            Path(options["out"]).write_text(text, encoding="utf-8")
            self.stdout.write(self.style.SUCCESS(f"{len(front)} nondominated points written to {options['out']}."))
        else:
            self.stdout.write(text, ending="")
