from __future__ import annotations

from django.core.management.base import BaseCommand

from staffdim.domain import load_instance
from staffdim.report import render_csv
from staffdim.routing import enumerate_routes, route_histogram

from ._common import add_instance_arguments, reported_errors


class Command(BaseCommand):
    help = "Count the admissible routes of a profession, by number of visited sectors (CSV)."

    def add_arguments(self, parser):
        add_instance_arguments(parser, scenarios=False)
        parser.add_argument("--profession", required=True)

    def handle(self, *args, **options):
        with reported_errors():
            instance = load_instance(options["instance"])
            route_set = enumerate_routes(instance, options["profession"])
        rows = [[size, count] for size, count in route_histogram(route_set).items()]
        rows.append(["all", len(route_set)])
        self.stdout.write(render_csv(("size", "count"), rows), ending="")
