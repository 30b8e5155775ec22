from __future__ import annotations

from django.conf import settings
from django.core.management.base import BaseCommand

from staffdim.domain import load_instance, load_scenarios
from staffdim.services import record_run, run_staffing, write_run

from ._common import add_instance_arguments, add_solver_arguments, reported_errors


class Command(BaseCommand):
    help = "Compute the minimal-cost staffing reaching the target coverage of the scenarios."

    def add_arguments(self, parser):
        add_instance_arguments(parser)
        parser.add_argument("--alpha-star", type=float, default=settings.STAFFDIM_ALPHA_STAR)
        parser.add_argument("--alpha", type=float, default=None, help="Use this coverage ratio as is.")
        add_solver_arguments(parser, settings.STAFFDIM_TIME_LIMIT, settings.STAFFDIM_THREADS)
        parser.add_argument("--out", required=True, help="Solution JSON file; run files go next to it.")
        parser.add_argument("--dump-matrix", action="store_true")
        parser.add_argument("--keep-assignments", action="store_true")
        parser.add_argument("--label", default="")
        parser.add_argument("--no-record", action="store_true", help="Do not store the run in the database.")

    def handle(self, *args, **options):
        with reported_errors():
            instance = load_instance(options["instance"])
            scenarios = load_scenarios(options["scenarios"], instance)
            outcome = run_staffing(
                instance,
                scenarios,
                alpha_star=options["alpha_star"],
                alpha=options["alpha"],
                time_limit=options["time_limit"],
                threads=options["threads"],
                keep_assignments=options["keep_assignments"],
                progress=options["progress"],
            )
            run_dir = write_run(
                outcome,
                options["out"],
                instance_path=options["instance"],
                scenarios_path=options["scenarios"],
                dump_matrix=options["dump_matrix"],
            )

        if settings.STAFFDIM_RECORD_RUNS and not options["no_record"]:
            run = record_run(outcome, options["label"], run_dir)
            if run is not None:
                self.stdout.write(f"Recorded run #{run.pk}.")

        solution = outcome.solution
        staffing = ", ".join(f"{p}={n}" for p, n in solution.staffing.items())
        self.stdout.write(f"Staffing: {staffing}")
        self.stdout.write(
            f"Cost {solution.cost} (lower bound {outcome.master_lower_bound}, gap {outcome.master_gap:.2%}); "
            f"coverage {solution.coverage:.2%} at alpha={outcome.alpha:.2f}, confidence bound {solution.confidence_lb:.4f}"
        )
        self.stdout.write(self.style.SUCCESS(f"Solution written to {options['out']}."))
