from __future__ import annotations

import json

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from staffdim.domain import load_instance, load_scenarios
from staffdim.routing import enumerate_routes
from staffdim.services import normalize_time_limit
from staffdim.slave import build_task, solve_slave

from ._common import add_instance_arguments, reported_errors


class Command(BaseCommand):
    help = "Solve the day problem of one profession on one scenario and print the result as JSON."

    def add_arguments(self, parser):
        add_instance_arguments(parser)
        parser.add_argument("--scenario", type=int, default=0, help="Index in the scenario bundle.")
        parser.add_argument("--profession", required=True)
        parser.add_argument("--time-limit", type=float, default=settings.STAFFDIM_TIME_LIMIT)
        parser.add_argument("--assignment", action="store_true", help="Include the per-resource assignment.")

    def handle(self, *args, **options):
        with reported_errors():
            instance = load_instance(options["instance"])
            scenarios = load_scenarios(options["scenarios"], instance)
            index = options["scenario"]
            if not 0 <= index < len(scenarios):
                raise CommandError(f"scenario index {index} out of range (bundle holds {len(scenarios)})")
            routes = enumerate_routes(instance, options["profession"])
            task = build_task(
                instance,
                scenarios[index],
                options["profession"],
                routes,
                time_limit=normalize_time_limit(options["time_limit"]),
            )
            result = solve_slave(task)
        self.stdout.write(json.dumps(result.as_dict(with_assignment=options["assignment"])))
