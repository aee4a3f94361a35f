import math
from dataclasses import replace

from django.test import SimpleTestCase

from memories.exceptions import ConfigMismatchError, DomainError
from memories.mcsim import (
    AgreementPoint, SimConfig, agreement, agreement_grid, analytic_rate_per_cycle, merge,
    replica_cycles, simulate, simulate_replica,
)
from memories.syncrate import RPolicy, loss_prob_b


class SimConfigTest(SimpleTestCase):
    """Pruebas de la configuración de simulación."""

    def test_from_fractional_delay(self):
        cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 1000)
        self.assertEqual(cfg.b, loss_prob_b(20.0))
        self.assertAlmostEqual(cfg.fractional_delay, 20.0, places=9)

    def test_fractional_delay_limits(self):
        self.assertEqual(SimConfig(2, 0.1, 0.0, 0.5, 10).fractional_delay, math.inf)
        self.assertEqual(SimConfig(2, 0.1, 1.0, 0.5, 10).fractional_delay, 0.0)

    def test_invalid_configs(self):
        with self.assertRaises(DomainError):
            SimConfig(0, 0.1, 0.1, 0.5, 10)
        with self.assertRaises(DomainError):
            SimConfig(2, 1.5, 0.1, 0.5, 10)
        with self.assertRaises(DomainError):
            SimConfig(2, 0.1, 0.1, 0.5, 0)
        with self.assertRaises(DomainError):
            SimConfig(2, 0.1, 0.1, 0.5, 10, replicas=0)
        with self.assertRaises(DomainError):
            SimConfig(2, 0.1, 0.1, 0.5, 10, seed=-1)

    def test_replica_partition(self):
        self.assertEqual(sum(replica_cycles(1001, 4, k) for k in range(4)), 1001)
        self.assertEqual([replica_cycles(10, 4, k) for k in range(4)], [3, 3, 2, 2])


class SimulateTest(SimpleTestCase):
    """Pruebas del protocolo de repetición hasta el éxito."""

    def test_deterministic_protocol(self):
        result = simulate(SimConfig(3, q=1.0, b=0.0, eta0=1.0, n_cycles=1000))
        self.assertEqual(result.n_successes, 1000)
        self.assertEqual(result.n_readout_attempts, 1000)
        self.assertEqual(result.rate_per_cycle, 1.0)
        self.assertEqual(result.unit_availability, 1.0)

    def test_no_emission_no_success(self):
        result = simulate(SimConfig(2, q=0.0, b=0.1, eta0=1.0, n_cycles=5000))
        self.assertEqual(result.n_successes, 0)
        self.assertEqual(result.n_readout_attempts, 0)
        self.assertEqual(result.ci95, 0.0)
        self.assertEqual(result.unit_availability, 0.0)

    def test_memoryless_baseline(self):
        """Con b = 1 y eta0 = 1 la tasa por ciclo es q^N."""
        result = simulate(SimConfig(2, q=0.2, b=1.0, eta0=1.0, n_cycles=10**7, seed=5))
        self.assertEqual(result.cycles_elapsed, 10**7)
        self.assertLess(abs(result.rate_per_cycle - 0.04), 3 * result.ci95)

    def test_counts_are_consistent(self):
        result = simulate(SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 50_000, seed=1))
        self.assertLessEqual(result.n_successes, result.n_readout_attempts)
        self.assertEqual(result.rate_per_cycle, result.n_successes / result.cycles_elapsed)
        self.assertGreaterEqual(result.ci95, 0.0)
        self.assertTrue(0.0 <= result.unit_availability <= 1.0)

    def test_same_seed_same_result(self):
        cfg = SimConfig.from_fractional_delay(3, 0.05, 20.0, 0.5, 40_000, seed=9, replicas=3)
        self.assertEqual(simulate(cfg), simulate(cfg))

    def test_result_independent_of_block_size(self):
        cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 30_000, seed=4)
        self.assertEqual(simulate_replica(cfg, 0, block=7), simulate_replica(cfg, 0, block=512))

    def test_replica_independent_of_replica_count(self):
        """La réplica k usa su propio flujo: con el mismo número de ciclos da lo mismo."""
        two = SimConfig(2, 0.05, 0.05, 0.5, n_cycles=20_000, seed=3, replicas=2)
        four = replace(two, n_cycles=40_000, replicas=4)
        self.assertEqual(simulate_replica(two, 1).n_successes, simulate_replica(four, 1).n_successes)

    def test_parallel_workers_match_serial(self):
        cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 40_000, seed=2, replicas=2)
        self.assertEqual(simulate(cfg, workers=2), simulate(cfg, workers=1))

    def test_monotone_in_eta0_with_common_random_numbers(self):
        base = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.3, 200_000, seed=11)
        low = simulate(base)
        high = simulate(replace(base, eta0=0.6))
        self.assertEqual(low.n_readout_attempts, high.n_readout_attempts)
        self.assertLess(low.n_successes, high.n_successes)

    def test_monotone_in_loss(self):
        base = SimConfig(2, 0.05, 0.01, 0.5, 200_000, seed=11)
        self.assertGreater(simulate(base).rate_per_cycle, simulate(replace(base, b=0.5)).rate_per_cycle)

    def test_keep_unretrieved_attempts_more_often(self):
        base = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 200_000, seed=6)
        kept = simulate(replace(base, keep_unretrieved=True))
        self.assertGreater(kept.n_readout_attempts, simulate(base).n_readout_attempts)


class MergeTest(SimpleTestCase):
    """Pruebas de la combinación de réplicas."""

    def setUp(self):
        self.cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 100_000)
        self.results = [simulate_replica(replace(self.cfg, seed=seed), 0) for seed in range(4)]

    def test_single_result_is_identity(self):
        self.assertEqual(merge(self.results[:1]), self.results[0])

    def test_order_does_not_matter(self):
        self.assertEqual(merge(self.results), merge(list(reversed(self.results))))
        self.assertEqual(merge([merge(self.results[:2]), merge(self.results[2:])]), merge(self.results))

    def test_counts_are_summed(self):
        merged = merge(self.results)
        self.assertEqual(merged.n_successes, sum(r.n_successes for r in self.results))
        self.assertEqual(merged.cycles_elapsed, 400_000)
        self.assertEqual(len(merged.streams), 4)

    def test_interval_shrinks_with_replicas(self):
        merged = merge(self.results)
        single = sum(r.ci95 for r in self.results) / len(self.results)
        self.assertAlmostEqual(merged.ci95 / single, 0.5, delta=0.1)

    def test_mismatched_configs(self):
        other = simulate_replica(replace(self.cfg, eta0=0.4), 0)
        with self.assertRaises(ConfigMismatchError):
            merge([self.results[0], other])
        with self.assertRaises(DomainError):
            merge([])


class AgreementTest(SimpleTestCase):
    """Pruebas del cociente simulado/analítico."""

    def test_analytic_rate_per_cycle(self):
        cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 1000)
        policy = RPolicy.table_consistent()
        self.assertGreater(analytic_rate_per_cycle(cfg, policy), 0.05 ** 2)
        with self.assertRaises(DomainError):
            analytic_rate_per_cycle(replace(cfg, b=1.0))

    def test_agreement_constant_is_stable_across_seeds(self):
        cfg = SimConfig.from_fractional_delay(2, 0.05, 20.0, 0.5, 4_000_000)
        first = agreement(replace(cfg, seed=1))
        second = agreement(replace(cfg, seed=2))
        self.assertIsInstance(first, AgreementPoint)
        self.assertEqual(first.analytic, second.analytic)
        self.assertLess(abs(first.ratio - second.ratio) / first.ratio, 0.05)
        self.assertAlmostEqual(first.ratio_ci95, first.simulated_ci95 / first.analytic)

    def test_grid_constants_are_reproducible_across_seeds(self):
        """En cada punto de la grilla el cociente con otra semilla cae dentro del IC combinado."""
        first = agreement_grid(500_000, seed=11)
        second = agreement_grid(500_000, seed=12)
        self.assertEqual(len(first), 16)
        for a, b in zip(first, second):
            with self.subTest(n=a.n_sources, q=a.q, f=round(a.f), eta0=a.eta0):
                self.assertEqual((a.n_sources, a.q, a.f, a.eta0, a.analytic),
                                 (b.n_sources, b.q, b.f, b.eta0, b.analytic))
                self.assertTrue(math.isfinite(a.ratio))
                spread = 3.0 * math.hypot(a.ratio_ci95, b.ratio_ci95)
                self.assertLessEqual(abs(a.ratio - b.ratio), spread)

    def test_grid_passes_lanes_and_reset_policy(self):
        points = agreement_grid(20_000, seed=4, n_values=(2,), q_values=(0.05,), f_values=(100.0,),
                                eta0_values=(1.0,), lanes=8, keep_unretrieved=True)
        cfg = SimConfig.from_fractional_delay(2, 0.05, 100.0, 1.0, 20_000, seed=4, lanes=8, keep_unretrieved=True)
        self.assertEqual(points[0].simulated, simulate(cfg).rate_per_cycle)

    def test_grid_order(self):
        points = agreement_grid(20_000, seed=3, n_values=(2, 3), q_values=(0.05,), f_values=(20.0,),
                                eta0_values=(0.25, 0.5))
        self.assertEqual([(p.n_sources, p.eta0) for p in points], [(2, 0.25), (2, 0.5), (3, 0.25), (3, 0.5)])
        self.assertTrue(all(p.analytic > 0 for p in points))
