import json
import tempfile
from pathlib import Path
from unittest import mock

from django.db import DatabaseError
from django.test import SimpleTestCase, TestCase, override_settings

from staffdim.exceptions import CalibrationError, InstanceFormatError
from staffdim.models import SolveRun
from staffdim.report import render_csv, render_json
from staffdim.services import (
    build_reports,
    load_run,
    normalize_time_limit,
    record_run,
    run_staffing,
    write_run,
)

from .factories import make_instance, make_territory, scenario


def two_sector_instance():
    return make_instance(
        make_territory([[0, 20, 25], [20, 0, 15], [25, 15, 0]], [0, 4, 6]),
        [("dressing", {"nurse": 45, "aid": 30}), ("wash", {"nurse": 30, "aid": 50})],
        professions=(("nurse", 1200), ("aid", 800)),
        total=6,
    )


def demand(seed):
    # deterministic spread of six to nine visits over two sectors and two cares
    return scenario([[seed % 3 + 1, 2], [1, seed % 4 + 1]])


class TimeLimitTests(SimpleTestCase):
    def test_non_positive_limits_mean_unlimited(self):
        self.assertIsNone(normalize_time_limit(None))
        self.assertIsNone(normalize_time_limit(0))
        self.assertIsNone(normalize_time_limit(-5))
        self.assertEqual(normalize_time_limit(12), 12.0)


class RunStaffingTests(SimpleTestCase):
    def setUp(self):
        self.instance = two_sector_instance()
        self.scenarios = [demand(seed) for seed in range(30)]

    def test_explicit_ratio_skips_calibration(self):
        outcome = run_staffing(self.instance, self.scenarios[:6], alpha=1.0, time_limit=0)

        self.assertIsNone(outcome.alpha_star)
        self.assertEqual(outcome.alpha, 1.0)
        self.assertIsNone(outcome.time_limit)
        self.assertEqual(len(outcome.solution.covered), 6)
        self.assertLessEqual(outcome.master_lower_bound, outcome.solution.cost)

    @override_settings(STAFFDIM_ALPHA_STAR=0.8)
    def test_calibrates_from_settings(self):
        outcome = run_staffing(self.instance, self.scenarios, time_limit=None)

        self.assertEqual(outcome.alpha_star, 0.8)
        self.assertGreaterEqual(outcome.alpha, 0.8)
        self.assertGreaterEqual(outcome.solution.confidence_lb, 0.8 - 1e-9)

    def test_calibration_needs_enough_scenarios(self):
        with self.assertRaises(CalibrationError):
            run_staffing(self.instance, self.scenarios[:10], alpha_star=0.8)

    def test_solution_payload(self):
        outcome = run_staffing(self.instance, self.scenarios[:4], alpha=0.5, time_limit=None)

        payload = outcome.solution_payload(dump_matrix=True)

        self.assertEqual(set(payload["n"]), {"nurse", "aid"})
        self.assertIn("matrix", payload)
        self.assertEqual(payload["master_gap"], outcome.master_gap)


class RunDirectoryTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.instance = two_sector_instance()
        self.scenarios = [demand(seed) for seed in range(5)]

    def test_write_then_load(self):
        outcome = run_staffing(self.instance, self.scenarios, alpha=0.8, time_limit=None, keep_assignments=True)

        run_dir = write_run(outcome, self.root / "run" / "solution.json", "in.json", "in.scen.json")
        artifacts = load_run(run_dir / "solution.json")

        self.assertEqual(artifacts.run_dir, run_dir)
        self.assertEqual(artifacts.instance, self.instance)
        self.assertEqual(artifacts.scenarios, outcome.scenarios)
        self.assertEqual(artifacts.matrix.n_req, outcome.matrix.n_req)
        self.assertEqual(artifacts.solution.n, outcome.solution.n)
        self.assertEqual(artifacts.meta["instance_source"], "in.json")
        self.assertTrue(artifacts.matrix.has_assignments)

    def test_reports_for_a_stored_run(self):
        outcome = run_staffing(self.instance, self.scenarios, alpha=0.8, time_limit=None, keep_assignments=True)
        run_dir = write_run(outcome, self.root / "solution.json")

        reports = build_reports(load_run(run_dir))

        self.assertEqual(set(reports), {"meta", "workload", "variance", "coverage", "performance"})
        self.assertEqual(reports["workload"]["header"][0], "% day off")
        self.assertEqual(len(reports["variance"]["rows"]), 1)
        self.assertEqual(reports["performance"]["stats"]["cells"], 10)
        json.dumps(reports)

    def test_reports_are_byte_identical_across_reruns(self):
        outcome = run_staffing(self.instance, self.scenarios, alpha=0.8, time_limit=None, keep_assignments=True)
        run_dir = write_run(outcome, self.root / "solution.json")

        first = build_reports(load_run(run_dir))
        second = build_reports(load_run(run_dir))

        self.assertEqual(render_json(first), render_json(second))
        for name in ("workload", "variance", "coverage", "performance"):
            self.assertEqual(
                render_csv(first[name]["header"], first[name]["rows"]),
                render_csv(second[name]["header"], second[name]["rows"]),
                name,
            )

    def test_workload_is_skipped_without_assignments(self):
        outcome = run_staffing(self.instance, self.scenarios, alpha=0.8, time_limit=None)
        run_dir = write_run(outcome, self.root / "solution.json")

        with self.assertLogs("staffdim.services", level="WARNING"):
            reports = build_reports(load_run(run_dir))

        self.assertIsNone(reports["workload"])
        self.assertIsNotNone(reports["coverage"])

    def test_incomplete_run_directory(self):
        with self.assertRaises(InstanceFormatError):
            load_run(self.root)


class RecordRunTests(TestCase):
    def setUp(self):
        self.outcome = run_staffing(two_sector_instance(), [demand(seed) for seed in range(3)], alpha=1.0)

    def test_records_a_row(self):
        run = record_run(self.outcome, label="nightly", run_dir="/tmp/run")

        self.assertEqual(SolveRun.objects.count(), 1)
        self.assertEqual(run.label, "nightly")
        self.assertEqual(run.staffing, self.outcome.solution.staffing)
        self.assertEqual(run.omega_count, 3)
        self.assertIn("pct_call_slave", run.performance)

    def test_label_defaults_to_instance_label(self):
        self.assertEqual(record_run(self.outcome).label, "test")

    def test_database_failure_is_logged_not_raised(self):
        with mock.patch.object(SolveRun.objects, "create", side_effect=DatabaseError("locked")):
            with self.assertLogs("staffdim.services", level="WARNING") as logs:
                self.assertIsNone(record_run(self.outcome))

        self.assertIn("could not record run", logs.output[0])
        self.assertEqual(SolveRun.objects.count(), 0)
