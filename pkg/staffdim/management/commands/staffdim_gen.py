from __future__ import annotations

from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand

from staffdim.domain import save_instance, save_scenarios
from staffdim.scengen import (
    SERIES_NAMES,
    Sparsity,
    TerritorySpec,
    generate_series,
    generate_territory,
    sample_scenarios,
)

from ._common import reported_errors


class Command(BaseCommand):
    help = "Generate one benchmark instance and its scenario bundle."

    def add_arguments(self, parser):
        parser.add_argument("--series", required=True, choices=SERIES_NAMES)
        parser.add_argument("--sparsity", required=True, choices=[s.value for s in Sparsity])
        parser.add_argument("--divisions", type=int, default=10)
        parser.add_argument("--seed", type=int, default=0, help="Seed of the scenario stream.")
        parser.add_argument("--territory-seed", type=int, default=None, help="Defaults to --seed.")
        parser.add_argument("--scenarios", type=int, default=settings.STAFFDIM_SCENARIOS)
        parser.add_argument("--daily-limit", type=int, default=settings.STAFFDIM_DAILY_LIMIT)
        parser.add_argument("--out", required=True, help="Output directory.")

    def handle(self, *args, **options):
        seed = options["seed"]
        territory_seed = seed if options["territory_seed"] is None else options["territory_seed"]
        with reported_errors():
            spec = TerritorySpec(
                sparsity=Sparsity(options["sparsity"]),
                divisions=options["divisions"],
                seed=territory_seed,
            )
            instance = generate_series(
                options["series"],
                generate_territory(spec),
                seed,
                daily_limit=options["daily_limit"],
                territory_label=spec.label,
            )
            scenarios = sample_scenarios(instance, options["scenarios"], seed)

        out = Path(options["out"])
        stem = f"{options['series']}_{spec.label}_seed{seed}"
        instance_path = save_instance(instance, out / f"{stem}.json")
        scenarios_path = save_scenarios(scenarios, out / f"{stem}.scen.json")
        self.stdout.write(f"Instance: {instance_path}")
        self.stdout.write(f"Scenarios: {scenarios_path} ({len(scenarios)})")
        self.stdout.write(self.style.SUCCESS("Generation complete."))
