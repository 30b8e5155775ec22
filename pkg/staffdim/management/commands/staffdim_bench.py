from __future__ import annotations

import json
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand
from tqdm import tqdm

from staffdim.domain import save_instance, save_scenarios
from staffdim.scengen import benchmark_plan, generate_series, generate_territory, sample_scenarios

from ._common import reported_errors


class Command(BaseCommand):
    help = "Generate the full benchmark: 12 territories and 96 instances with their scenarios."

    def add_arguments(self, parser):
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--scenarios", type=int, default=settings.STAFFDIM_SCENARIOS)
        parser.add_argument("--daily-limit", type=int, default=settings.STAFFDIM_DAILY_LIMIT)
        parser.add_argument("--out", required=True, help="Output directory.")
        parser.add_argument("--progress", action="store_true")

    def handle(self, *args, **options):
        out = Path(options["out"])
        manifest = []
        territories = {}
        with reported_errors():
            plan = benchmark_plan(options["seed"])
            for entry in tqdm(plan, disable=not options["progress"], desc="instances"):
                key = (entry.territory.sparsity, entry.territory.divisions, entry.territory.seed)
                if key not in territories:
                    territories[key] = generate_territory(entry.territory)
                instance = generate_series(
                    entry.series,
                    territories[key],
                    entry.seed,
                    daily_limit=options["daily_limit"],
                    territory_label=entry.territory.label,
                )
                scenarios = sample_scenarios(instance, options["scenarios"], entry.seed)
                instance_path = save_instance(instance, out / f"{entry.name}.json")
                scenarios_path = save_scenarios(scenarios, out / f"{entry.name}.scen.json")
                manifest.append(
                    {
                        "name": entry.name,
                        "series": entry.series,
                        "territory": entry.territory.label,
                        "territory_seed": entry.territory.seed,
                        "seed": entry.seed,
                        "instance": instance_path.name,
                        "scenarios": scenarios_path.name,
                    }
                )
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
        self.stdout.write(self.style.SUCCESS(f"Wrote {len(manifest)} instances over {len(territories)} territories to {out}."))
