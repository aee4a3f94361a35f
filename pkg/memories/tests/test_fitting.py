import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from memories.decay import DecayModelParams, efficiency_at
from memories.exceptions import DatasetError, DomainError, FitError
from memories.fitting import (
    PARAMETER_NAMES, REFERENCE_FITS, DecaySample, dump_samples, fit_decay, fit_seeds,
    generate_synthetic, initial_guess, load_samples, residuals,
)

TIMES = np.linspace(0.0, 300e-9, 200)


def scaled(params, factor):
    """Los seis parámetros libres multiplicados por `factor`."""
    return replace(params, **{name: getattr(params, name) * factor for name in PARAMETER_NAMES})


class SyntheticDataTest(SimpleTestCase):
    """Pruebas de generación de curvas sintéticas y residuos."""

    def test_noiseless_samples_lie_on_model(self):
        params = REFERENCE_FITS['off_resonance']
        samples = generate_synthetic(params, TIMES, 0.0, seed=3)
        self.assertEqual(len(samples), len(TIMES))
        for sample in samples[::20]:
            self.assertAlmostEqual(sample.eta, efficiency_at(params, sample.t), places=15)
            self.assertIsNone(sample.sigma)

    def test_same_seed_same_samples(self):
        params = REFERENCE_FITS['on_resonance']
        first = generate_synthetic(params, TIMES, 0.005, seed=11)
        second = generate_synthetic(params, TIMES, 0.005, seed=11)
        other = generate_synthetic(params, TIMES, 0.005, seed=12)
        self.assertEqual(first, second)
        self.assertNotEqual(first, other)

    def test_samples_are_clamped_at_zero(self):
        samples = generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES, 0.5, seed=1)
        self.assertTrue(all(sample.eta >= 0 for sample in samples))

    def test_attach_sigma(self):
        samples = generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES, 0.005, seed=1, attach_sigma=True)
        self.assertTrue(all(sample.sigma == 0.005 for sample in samples))

    def test_negative_noise_rejected(self):
        with self.assertRaises(DomainError):
            generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES, -0.1, seed=1)

    def test_residuals_zero_on_model_curve(self):
        params = REFERENCE_FITS['off_resonance']
        samples = generate_synthetic(params, TIMES, 0.0, seed=0)
        np.testing.assert_array_equal(residuals(params, samples), np.zeros(len(samples)))

    def test_residual_sign_is_model_minus_data(self):
        params = REFERENCE_FITS['off_resonance']
        t = 40e-9
        sample = DecaySample(t, efficiency_at(params, t) + 0.01)
        self.assertAlmostEqual(residuals(params, [sample])[0], -0.01, places=12)

    def test_wrong_params_give_larger_residuals(self):
        samples = generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES, 0.0, seed=0)
        self_norm = np.linalg.norm(residuals(REFERENCE_FITS['on_resonance'], samples))
        other_norm = np.linalg.norm(residuals(REFERENCE_FITS['off_resonance'], samples))
        self.assertGreater(other_norm, self_norm)

    def test_invalid_sample(self):
        with self.assertRaises(DomainError):
            DecaySample(1e-9, -0.1)
        with self.assertRaises(DomainError):
            DecaySample(1e-9, 0.1, sigma=0.0)


class InitialGuessTest(SimpleTestCase):
    """Pruebas de la estimación inicial determinista."""

    def test_guess_from_reference_curve(self):
        params = REFERENCE_FITS['off_resonance']
        guess = initial_guess(generate_synthetic(params, TIMES, 0.0, seed=0))
        self.assertAlmostEqual(guess.eta0, max(efficiency_at(params, TIMES)))
        self.assertEqual(guess.tau_bar, 2 * guess.tau_s)
        self.assertEqual((guess.A, guess.B), (0.1, 0.01))
        self.assertGreater(guess.tau_s, 0)

    def test_guess_is_deterministic(self):
        samples = generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES, 0.005, seed=4)
        self.assertEqual(initial_guess(samples), initial_guess(list(reversed(samples))))


class FitDecayTest(SimpleTestCase):
    """Pruebas del ajuste por mínimos cuadrados."""

    def assertParamsClose(self, fitted, truth, rel):
        for name in PARAMETER_NAMES:
            expected = getattr(truth, name)
            value = getattr(fitted, name)
            self.assertTrue(
                math.isclose(value, expected, rel_tol=rel),
                f"{name}: {value} != {expected} (rel {rel})",
            )

    def test_round_trip_from_true_guess(self):
        for key, truth in REFERENCE_FITS.items():
            with self.subTest(key=key):
                result = fit_decay(generate_synthetic(truth, TIMES, 0.0, seed=0), init=truth)
                self.assertTrue(result.converged)
                self.assertParamsClose(result.params, truth, 1e-4)
                self.assertTrue(math.isfinite(result.residual_norm))

    def test_round_trip_from_perturbed_guess(self):
        for key, truth in REFERENCE_FITS.items():
            samples = generate_synthetic(truth, TIMES, 0.0, seed=0)
            for factor in (0.8, 1.2):
                with self.subTest(key=key, factor=factor):
                    result = fit_decay(samples, init=scaled(truth, factor))
                    self.assertParamsClose(result.params, truth, 1e-2)

    def test_noisy_fit_recovers_lifetime_within_three_sigma(self):
        truth = REFERENCE_FITS['off_resonance']
        times = np.linspace(0.0, 200e-9, 40)
        result = fit_decay(generate_synthetic(truth, times, 0.005, seed=21), init=truth)
        self.assertLess(abs(result.params.tau_s - truth.tau_s), 3 * result.stderr['tau_s'])
        self.assertTrue(all(err >= 0 for err in result.stderr.values()))

    def test_weighted_fit(self):
        truth = REFERENCE_FITS['on_resonance']
        samples = generate_synthetic(truth, TIMES, 0.005, seed=5, attach_sigma=True)
        result = fit_decay(samples, init=truth)
        self.assertTrue(result.weighted)
        self.assertLess(abs(result.params.tau_s - truth.tau_s), 5 * result.stderr['tau_s'])

    def test_no_beats_gives_amplitudes_consistent_with_zero(self):
        """Sin batidos en los datos, A y B quedan dentro de 2 sigma de cero en la mayoría de las semillas."""
        truth = replace(REFERENCE_FITS['off_resonance'], A=0.0, B=0.0)
        results = fit_seeds(truth, TIMES, 0.005, seeds=range(20), init=truth)
        consistent = [
            r.params.A <= 2 * r.stderr['A'] + 1e-12 and r.params.B <= 2 * r.stderr['B'] + 1e-12
            for r in results
        ]
        self.assertGreaterEqual(sum(consistent) / len(consistent), 0.75)

    def test_estimator_is_consistent_over_seeds(self):
        """Con 200 semillas el sesgo medio de tau_s es menor que el error estándar medio."""
        truth = REFERENCE_FITS['off_resonance']
        results = fit_seeds(truth, TIMES, 0.005, seeds=range(200), init=truth)
        bias = abs(np.mean([r.params.tau_s for r in results]) - truth.tau_s)
        mean_stderr = np.mean([r.stderr['tau_s'] for r in results])
        self.assertLess(bias, mean_stderr)

    def test_fit_seeds_keeps_seed_order(self):
        truth = REFERENCE_FITS['off_resonance']
        results = fit_seeds(truth, TIMES, 0.005, seeds=[3, 1], init=truth)
        single = fit_decay(generate_synthetic(truth, TIMES, 0.005, seed=1), init=truth)
        self.assertEqual(results[1].params, single.params)

    def test_time_shift_moves_only_t0(self):
        truth = REFERENCE_FITS['off_resonance']
        samples = generate_synthetic(truth, TIMES, 0.005, seed=8)
        shift = 50e-9
        shifted = [DecaySample(s.t + shift, s.eta) for s in samples]
        base = fit_decay(samples, init=truth)
        moved = fit_decay(shifted, init=replace(truth, t0=truth.t0 + shift))
        for name in ('eta0', 'tau_s', 'tau_bar', 'A', 'B'):
            self.assertTrue(
                math.isclose(getattr(moved.params, name), getattr(base.params, name), rel_tol=1e-5, abs_tol=1e-12),
                name,
            )
        self.assertAlmostEqual((moved.params.t0 - shift) * 1e9, base.params.t0 * 1e9, delta=1e-3)

    def test_objective_never_increases_with_more_iterations(self):
        truth = REFERENCE_FITS['off_resonance']
        samples = generate_synthetic(truth, TIMES, 0.005, seed=2)
        start = scaled(truth, 1.2)
        norms = [fit_decay(samples, init=start, max_iterations=cap).residual_norm for cap in (5, 10, 20, 40, 500)]
        for earlier, later in zip(norms, norms[1:]):
            self.assertLessEqual(later, earlier * (1 + 1e-12))

    def test_iteration_cap_is_reported(self):
        truth = REFERENCE_FITS['off_resonance']
        samples = generate_synthetic(truth, TIMES, 0.005, seed=2)
        with self.assertLogs('memories.fitting', level='WARNING'):
            result = fit_decay(samples, init=scaled(truth, 1.2), max_iterations=3)
        self.assertFalse(result.converged)
        self.assertIn('max_iterations', result.warnings)

    def test_degenerate_inputs(self):
        with self.assertRaises(FitError):
            fit_decay([DecaySample(t, 0.1) for t in TIMES[:6]])
        with self.assertRaises(FitError):
            fit_decay([DecaySample(10e-9, 0.1) for _ in range(10)])

    def test_beat_frequencies_stay_fixed(self):
        truth = REFERENCE_FITS['off_resonance']
        result = fit_decay(generate_synthetic(truth, TIMES, 0.0, seed=0), init=truth)
        self.assertEqual(result.params.beat43_hz, truth.beat43_hz)
        self.assertEqual(result.params.beat42_hz, truth.beat42_hz)
        self.assertIsInstance(result.params, DecayModelParams)


class SampleFileTest(SimpleTestCase):
    """Pruebas de lectura y escritura de curvas en CSV."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_dump_then_load(self):
        samples = generate_synthetic(REFERENCE_FITS['on_resonance'], TIMES[:20], 0.005, seed=1, attach_sigma=True)
        path = dump_samples(samples, self.dir / 'curve.csv')
        self.assertEqual(load_samples(path), samples)

    def test_sigma_column_is_optional(self):
        path = self.dir / 'curve.csv'
        path.write_text("t_s,eta\n0,0.25\n1e-8,0.2\n", encoding='utf-8')
        samples = load_samples(path)
        self.assertEqual(samples, [DecaySample(0.0, 0.25), DecaySample(1e-8, 0.2)])

    def test_bad_number_reports_location(self):
        path = self.dir / 'curve.csv'
        path.write_text("t_s,eta,sigma\n0,0.25,\n1e-8,abc,\n", encoding='utf-8')
        with self.assertRaises(DatasetError) as ctx:
            load_samples(path)
        self.assertEqual(ctx.exception.row, 2)
        self.assertEqual(ctx.exception.column, 'eta')

    def test_missing_column(self):
        path = self.dir / 'curve.csv'
        path.write_text("time,eta\n0,0.25\n", encoding='utf-8')
        with self.assertRaises(DatasetError) as ctx:
            load_samples(path)
        self.assertEqual(ctx.exception.column, 't_s')

    def test_missing_file(self):
        with self.assertRaises(DatasetError):
            load_samples(self.dir / 'missing.csv')
