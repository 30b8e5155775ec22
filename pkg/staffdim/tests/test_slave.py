import numpy as np
from django.test import SimpleTestCase

from staffdim.exceptions import InfeasibleDemandError
from staffdim.slave import (
    MEMO_BYTES,
    ResourceAssignment,
    SlaveStatus,
    _PackingSearch,
    default_memo_capacity,
    heuristic_upper_bound,
    solve_slave,
    solve_slave_bruteforce,
    verify_assignment,
    workload_bound,
)

from .factories import make_instance, make_territory, one_sector_instance, random_territory, task_for


def random_case(rng, seed):
    sectors = int(rng.integers(1, 4))
    territory = random_territory(seed=seed, sectors=sectors)
    cares = [(f"c{i}", {"nurse": int(rng.integers(20, 91))}) for i in range(int(rng.integers(1, 3)))]
    remote = {}
    if rng.random() < 0.25:
        remote = {cares[0][0]: {"nurse": True}}
    instance = make_instance(territory, cares, daily_limit=int(rng.integers(240, 481)), remote=remote)
    units = int(rng.integers(0, 11))
    counts = np.zeros((sectors, len(cares)), dtype=int)
    for _ in range(units):
        counts[rng.integers(sectors), rng.integers(len(cares))] += 1
    return instance, counts.tolist()


class SmallSlaveTests(SimpleTestCase):
    def test_six_visits_fit_one_day(self):
        task = task_for(one_sector_instance(), [[6]], time_limit=None)

        result = solve_slave(task)

        self.assertEqual(result.n, 1)
        self.assertIs(result.status, SlaveStatus.OPTIMAL)
        self.assertEqual(solve_slave_bruteforce(task), 1)

    def test_eight_visits_need_two_days(self):
        task = task_for(one_sector_instance(), [[8]], time_limit=None)

        result = solve_slave(task)

        self.assertEqual(result.n, 2)
        self.assertEqual(result.lower_bound, 2)
        self.assertEqual(solve_slave_bruteforce(task), 2)
        self.assertEqual(verify_assignment(task, result.assignment), [])

    def test_empty_scenario_needs_nobody(self):
        task = task_for(one_sector_instance(), [[0]])

        self.assertEqual(heuristic_upper_bound(task).n, 0)
        self.assertEqual(solve_slave(task).n, 0)

    def test_single_demand_needs_one_resource(self):
        instance = make_instance(random_territory(seed=1, sectors=3), [("a", {"nurse": 45})])

        for sector in range(3):
            rows = [[0], [0], [0]]
            rows[sector] = [1]
            upper = heuristic_upper_bound(task_for(instance, rows))
            self.assertEqual(upper.n, 1)
            self.assertEqual(upper.assignment[0].route, 1 << sector)

    def test_workload_bound(self):
        task = task_for(one_sector_instance(minutes=50), [[10]])

        self.assertEqual(workload_bound(task), 2)
        self.assertEqual(task.total_minutes, 500)

    def test_remote_demand_is_rehomed_to_the_depot(self):
        instance = make_instance(
            make_territory([[0, 30, 30], [30, 0, 30], [30, 30, 0]], [0, 6, 4]),
            [("phone", {"nurse": 20}), ("dressing", {"nurse": 40})],
            remote={"phone": {"nurse": True}},
        )

        task = task_for(instance, [[2, 1], [3, 0]])

        self.assertEqual(task.cells[0].sector, 0)
        self.assertEqual(task.cells[0].count, 5)
        self.assertEqual(task.cells[0].minutes, 20)
        self.assertEqual([(c.sector, c.care, c.count, c.minutes) for c in task.cells[1:]], [(1, 1, 1, 46)])
        self.assertEqual(task.units, 6)

    def test_remote_only_day_rides_the_depot_route(self):
        instance = make_instance(
            make_territory([[0, 30], [30, 0]]),
            [("phone", {"nurse": 60})],
            remote={"phone": {"nurse": True}},
        )

        result = solve_slave(task_for(instance, [[9]], time_limit=None))

        self.assertEqual(result.n, 2)
        self.assertTrue(all(resource.route == 0 for resource in result.assignment))

    def test_cares_without_the_profession_are_dropped(self):
        instance = make_instance(
            make_territory([[0, 10], [10, 0]]),
            [("visit", {"nurse": 30, "aid": 0}), ("wash", {"aid": 40})],
            professions=(("nurse", 1200), ("aid", 800)),
        )

        task = task_for(instance, [[3, 4]], profession="nurse")

        self.assertEqual([(c.care, c.count) for c in task.cells], [(0, 3)])

    def test_unit_longer_than_a_day(self):
        instance = one_sector_instance(minutes=60).model_copy(update={"daily_limit": 70})

        with self.assertRaises(InfeasibleDemandError):
            heuristic_upper_bound(task_for(instance, [[1]]))


class BoundTests(SimpleTestCase):
    def setUp(self):
        # both sectors fit alone but not together
        territory = make_territory([[0, 100, 100], [100, 0, 150], [100, 150, 0]])
        self.instance = make_instance(territory, [("visit", {"nurse": 60})], daily_limit=300)

    def test_external_bound_at_or_above_upper_bound(self):
        task = task_for(self.instance, [[1], [1]], lb=3)

        result = solve_slave(task)

        self.assertEqual(result.n, 3)
        self.assertEqual(result.lower_bound, 3)
        # the true optimum is 2; only the workload bound is the solver's own
        self.assertEqual(result.proven_bound, 1)
        self.assertEqual(result.as_dict()["proven_bound"], 1)

    def test_external_bound_raises_the_optimum(self):
        instance = one_sector_instance()
        task = task_for(instance, [[3]], lb=2, time_limit=None)

        result = solve_slave(task)

        self.assertEqual(result.n, 2)
        self.assertEqual(result.proven_bound, 1)
        self.assertEqual(solve_slave_bruteforce(task), 2)

    def test_timeout_reports_bounds(self):
        task = task_for(self.instance, [[1], [1]], time_limit=1e-9)

        result = solve_slave(task)

        self.assertIs(result.status, SlaveStatus.FEASIBLE_TIMEOUT)
        self.assertEqual(result.n, 2)
        self.assertEqual(result.lower_bound, 1)
        self.assertLessEqual(result.lower_bound, result.n)
        self.assertEqual(result.proven_bound, 1)

    def test_unlimited_time_proves_the_optimum(self):
        result = solve_slave(task_for(self.instance, [[1], [1]], time_limit=None))

        self.assertIs(result.status, SlaveStatus.OPTIMAL)
        self.assertEqual(result.n, 2)
        self.assertEqual(result.proven_bound, 2)

    def test_heuristic_status(self):
        upper = heuristic_upper_bound(task_for(self.instance, [[1], [1]]))

        self.assertEqual(upper.n, 2)
        self.assertIs(upper.status, SlaveStatus.FEASIBLE)
        self.assertEqual(upper.lower_bound, 1)


class FailureMemoTests(SimpleTestCase):
    # seven units of about two hours in one sector; a day holds at most three
    ITEMS = [(1, minutes, 0) for minutes in (131, 129, 127, 125, 123, 121, 119)]

    def search(self, **kwargs):
        return _PackingSearch(self.ITEMS, [0, 20], [True, True], 480, 2, None, **kwargs)

    def test_memo_never_exceeds_its_capacity(self):
        search = self.search(memo_capacity=4)

        self.assertFalse(search.run())
        self.assertLessEqual(len(search.failed), 4)

    def test_default_capacity_gives_the_same_answer(self):
        search = self.search()

        self.assertFalse(search.run())
        self.assertEqual(search.memo_capacity, default_memo_capacity(2))
        self.assertLessEqual(len(search.failed), search.memo_capacity)

    def test_default_capacity_follows_the_byte_budget(self):
        self.assertLessEqual(default_memo_capacity(6), MEMO_BYTES // 200)
        self.assertGreater(default_memo_capacity(6), default_memo_capacity(60))
        self.assertGreaterEqual(default_memo_capacity(10**6), 1024)


class OracleTests(SimpleTestCase):
    def test_exact_solver_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(20240601)
        for case in range(200):
            instance, rows = random_case(rng, seed=case)
            task = task_for(instance, rows, time_limit=None)

            upper = heuristic_upper_bound(task)
            result = solve_slave(task, upper)
            expected = solve_slave_bruteforce(task)

            self.assertEqual(result.n, expected, f"case {case}: {rows}")
            self.assertIs(result.status, SlaveStatus.OPTIMAL)
            self.assertGreaterEqual(upper.n, result.n)
            self.assertLessEqual(workload_bound(task), result.n)
            self.assertEqual(verify_assignment(task, result.assignment), [])
            self.assertEqual(verify_assignment(task, upper.assignment), [])

    def test_one_more_unit_never_needs_fewer_resources(self):
        rng = np.random.default_rng(77)
        for case in range(40):
            instance, rows = random_case(rng, seed=1000 + case)
            before = solve_slave(task_for(instance, rows, time_limit=None)).n
            sector = int(rng.integers(len(rows)))
            care = int(rng.integers(len(rows[0])))
            rows[sector][care] += 1
            after = solve_slave(task_for(instance, rows, time_limit=None)).n
            self.assertGreaterEqual(after, before)

    def test_optimal_results_are_stable_under_unlimited_time(self):
        rng = np.random.default_rng(5)
        for case in range(20):
            instance, rows = random_case(rng, seed=2000 + case)
            limited = solve_slave(task_for(instance, rows, time_limit=60.0))
            if limited.status is SlaveStatus.OPTIMAL:
                self.assertEqual(solve_slave(task_for(instance, rows, time_limit=None)).n, limited.n)


class VerifyAssignmentTests(SimpleTestCase):
    def setUp(self):
        instance = make_instance(make_territory([[0, 10, 10], [10, 0, 10], [10, 10, 0]]), [("visit", {"nurse": 100})])
        self.task = task_for(instance, [[2], [1]])

    def test_clean_assignment(self):
        assignment = (ResourceAssignment(0b11, 30, ((1, 0, 2), (2, 0, 1))),)

        self.assertEqual(verify_assignment(self.task, assignment), [])

    def test_detects_violations(self):
        off_route = (ResourceAssignment(0b01, 20, ((1, 0, 2), (2, 0, 1))),)
        overloaded = (ResourceAssignment(0b11, 30, ((1, 0, 4), (2, 0, 1))),)
        short = (ResourceAssignment(0b11, 30, ((1, 0, 1), (2, 0, 1))),)

        self.assertTrue(any("off its route" in p for p in verify_assignment(self.task, off_route)))
        self.assertTrue(any("exceed" in p for p in verify_assignment(self.task, overloaded)))
        self.assertTrue(any("served 1 of 2" in p for p in verify_assignment(self.task, short)))

    def test_assignment_serialisation(self):
        resource = ResourceAssignment(0b11, 30, ((1, 0, 2), (2, 0, 1)))

        self.assertEqual(ResourceAssignment.from_dict(resource.as_dict()), resource)
