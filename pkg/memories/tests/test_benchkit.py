import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from memories.benchkit import (
    MemoryRecord, best_noise_free, clock_cycle, derive, derive_all, dump_dataset, emit_plot_data,
    format_table, load_dataset, plot_payload, rank,
)
from memories.conf import BUNDLED_DATASET
from memories.exceptions import DatasetError, DomainError

FIXTURE = Path(__file__).resolve().parent / 'fixtures' / 'published_tables.json'
HEADER = (
    'label,tau_p_s,tau_s_s,eta_int,t_setup,nu,prov_tau_p,prov_tau_s,prov_eta,prov_t,prov_nu,footnote'
)


def half_unit(text):
    """Media unidad del último dígito impreso: '4167' -> 0.5, '2.3e-4' -> 5e-6."""
    mantissa, _, exponent = text.lower().partition('e')
    decimals = len(mantissa.partition('.')[2])
    return 0.5 * 10.0 ** (int(exponent or 0) - decimals)


class PublishedTablesTest(SimpleTestCase):
    """Las métricas derivadas del dataset incluido reproducen las tablas publicadas."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        golden = json.loads(FIXTURE.read_text(encoding='utf-8'))
        cls.rows = {row['label']: row for row in golden['rows']}
        cls.deviations = golden['known_deviations']
        cls.records = load_dataset(BUNDLED_DATASET)
        cls.derived = {met.label: met for met in derive_all(cls.records)}

    def assertPrinted(self, value, printed):
        tolerance = max(0.02 * abs(float(printed)), half_unit(printed))
        self.assertLessEqual(abs(value - float(printed)), tolerance, f"{value} vs {printed}")

    def test_every_row_is_present(self):
        self.assertEqual(len(self.records), 16)
        self.assertEqual(set(self.derived), set(self.rows))

    def test_clock_efficiency_and_delays(self):
        for label, row in self.rows.items():
            met = self.derived[label]
            for name in ('tau_c', 'eta0', 'f_prime', 'f_prime_e'):
                with self.subTest(label=label, column=name):
                    self.assertPrinted(getattr(met, name), row[name])

    def test_noise_to_signal(self):
        """Sólo se comparan los mu1 calculados; los tomados de otra fuente se excluyen."""
        for label, row in self.rows.items():
            if row['mu1_tag'] != 'C' or 'mu1' in self.deviations.get(label, []):
                continue
            with self.subTest(label=label):
                self.assertPrinted(self.derived[label].mu1, row['mu1'])

    def test_six_photon_rate(self):
        for label, row in self.rows.items():
            with self.subTest(label=label):
                ratio = self.derived[label].r6_per_min / float(row['r6_per_min'])
                self.assertAlmostEqual(ratio, 1.0, delta=0.10)
        self.assertAlmostEqual(self.derived['This work (off-res)'].r6_per_min / 0.102, 1.0, delta=0.02)
        self.assertAlmostEqual(self.derived['NTHU 13'].r6_per_min / 0.38, 1.0, delta=0.03)

    def test_ng_rows_are_flagged(self):
        flagged = sorted(label for label, met in self.derived.items() if met.ng_transmission)
        self.assertEqual(flagged, ['Geneva 10', 'ICFO 17', 'NRC 15'])

    def test_ranking(self):
        self.assertEqual(rank(self.records, list(self.derived.values()), 'r6')[0][0].label, 'NTHU 13')
        self.assertEqual(rank(self.records, list(self.derived.values()), 'mu1')[0][0].label, 'Urbana 17')
        self.assertEqual(rank(self.records, list(self.derived.values()), 'fe')[0][0].label, 'Oxford 15')
        with self.assertRaises(DomainError):
            rank(self.records, list(self.derived.values()), 'speed')

    def test_best_noise_free_room_temperature_memory(self):
        rec, met = best_noise_free(self.records, list(self.derived.values()))
        self.assertEqual(rec.label, 'This work (off-res)')
        self.assertAlmostEqual(met.f_prime_e, 12.6, delta=0.15)
        self.assertTrue(met.noise_free)
        self.assertFalse(self.derived['This work (on-res)'].noise_free)
        self.assertIsNone(best_noise_free([], []))


class DeriveTest(SimpleTestCase):
    """Pruebas de las figuras de mérito de un registro."""

    def record(self, **kwargs):
        values = dict(label='x', tau_p=1.7e-9, tau_s=86e-9, eta_int=0.322, t_setup=0.78, nu=5.8e-5)
        values.update(kwargs)
        return MemoryRecord(**values)

    def test_clock_cycle_floor(self):
        self.assertEqual(clock_cycle(2.6e-13), 20e-12)
        self.assertEqual(clock_cycle(1.7e-9), 1.7e-9)
        self.assertEqual(clock_cycle(1e-12, floor=0.0), 1e-12)
        with self.assertRaises(DomainError):
            clock_cycle(0.0)

    def test_published_values_take_precedence(self):
        met = derive(self.record(tau_c=1e-8, eta0=0.024))
        self.assertEqual(met.tau_c, 1e-8)
        self.assertEqual(met.eta0, 0.024)

    def test_published_clock_never_below_pulse(self):
        self.assertEqual(derive(self.record(tau_c=1e-12)).tau_c, 1.7e-9)

    def test_noise_free_flag(self):
        self.assertTrue(derive(self.record()).noise_free)
        self.assertFalse(derive(self.record(nu=1e-3)).noise_free)
        self.assertTrue(derive(self.record(nu=1e-3), noise_free_mu1=1.0).noise_free)

    def test_zero_efficiency_leaves_mu1_undefined(self):
        """Con eta0 = 0 mu1 queda indefinido y el resto del dataset se calcula igual."""
        records = [self.record(label='a'), self.record(label='dark', eta_int=0.0), self.record(label='b', nu=1e-3)]
        derived = derive_all(records)
        dark = derived[1]
        self.assertEqual(dark.eta0, 0.0)
        self.assertIsNone(dark.mu1)
        self.assertFalse(dark.noise_free)
        self.assertEqual(dark.f_prime_e, 0.0)
        self.assertGreater(dark.r6_per_min, 0.0)
        ranked = [met.label for _, met in rank(records, derived, 'mu1')]
        self.assertEqual(ranked, ['a', 'b', 'dark'])
        self.assertEqual(format_table(derived).splitlines()[2].split()[:2], ['dark', '-'])
        self.assertIsNone(plot_payload(records, derived)['points'][1]['mu1'])

    def test_invalid_record(self):
        with self.assertRaises(DomainError):
            self.record(tau_s=0.0)
        with self.assertRaises(DomainError):
            self.record(eta_int=1.2)
        with self.assertRaises(DomainError):
            self.record(label='')


class DatasetFileTest(SimpleTestCase):
    """Pruebas de lectura y validación del CSV del dataset."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def write(self, text):
        path = self.dir / 'dataset.csv'
        path.write_text(text, encoding='utf-8')
        return path

    def test_missing_file(self):
        with self.assertRaises(DatasetError):
            load_dataset(self.dir / 'missing.csv')

    def test_empty_file_warns(self):
        with self.assertLogs('memories.benchkit', level='WARNING'):
            self.assertEqual(load_dataset(self.write('')), [])

    def test_header_only_warns(self):
        with self.assertLogs('memories.benchkit', level='WARNING'):
            self.assertEqual(load_dataset(self.write(HEADER + '\n')), [])

    def test_missing_column(self):
        header = HEADER.replace(',nu,', ',')
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(header + '\n'))
        self.assertEqual(ctx.exception.column, 'nu')

    def test_unknown_column(self):
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(HEADER + ',colour\n'))
        self.assertEqual(ctx.exception.column, 'colour')

    def test_bad_value_reports_row_and_column(self):
        text = HEADER + '\n' + 'A,1e-9,1e-7,0.3,0.8,1e-4,MT,MT,MT,MT,MT,\n' + 'B,1e-9,abc,0.3,0.8,1e-4,MT,MT,MT,MT,MT,\n'
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(text))
        self.assertEqual(ctx.exception.row, 2)
        self.assertEqual(ctx.exception.column, 'tau_s_s')

    def test_out_of_range_efficiency(self):
        text = HEADER + '\n' + 'A,1e-9,1e-7,1.3,0.8,1e-4,MT,MT,MT,MT,MT,\n'
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(text))
        self.assertEqual((ctx.exception.row, ctx.exception.column), (1, 'eta_int'))

    def test_invalid_provenance(self):
        text = HEADER + '\n' + 'A,1e-9,1e-7,0.3,0.8,1e-4,XX,MT,MT,MT,MT,\n'
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(text))
        self.assertEqual(ctx.exception.column, 'prov_tau_p')

    def test_duplicate_label(self):
        row = 'A,1e-9,1e-7,0.3,0.8,1e-4,MT,MT,MT,MT,MT,\n'
        with self.assertRaises(DatasetError) as ctx:
            load_dataset(self.write(HEADER + '\n' + row + row))
        self.assertEqual((ctx.exception.row, ctx.exception.column), (2, 'label'))

    def test_units_and_not_given_transmission(self):
        text = HEADER + '\n' + 'A,1.7ns,86 ns,0.3,NG,1e-4,MT,MT,MT,,MT,\n'
        record = load_dataset(self.write(text))[0]
        self.assertAlmostEqual(record.tau_p, 1.7e-9)
        self.assertAlmostEqual(record.tau_s, 8.6e-8)
        self.assertEqual(record.t_setup, 1.0)
        self.assertTrue(record.ng_transmission)

    def test_dump_keeps_records(self):
        records = load_dataset(BUNDLED_DATASET)
        path = dump_dataset(records, self.dir / 'copy.csv')
        self.assertEqual(load_dataset(path), records)


class PlotDataTest(SimpleTestCase):
    """Pruebas de la tabla de texto y los datos del gráfico ruido/tasa."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.records = load_dataset(BUNDLED_DATASET)
        cls.derived = derive_all(cls.records)

    def test_payload_axes(self):
        payload = plot_payload(self.records, self.derived)
        self.assertEqual(payload['x']['quantity'], 'mu1')
        self.assertEqual(payload['y']['quantity'], 'r6_per_min')
        self.assertEqual((payload['x']['scale'], payload['y']['scale']), ('log', 'log'))
        self.assertEqual(payload['reference_lines'][0]['value'], 1e-3)
        self.assertEqual(len(payload['points']), 16)

    def test_table_marks_not_given_transmission(self):
        table = format_table(self.derived)
        lines = table.splitlines()
        self.assertEqual(len(lines), 17)
        self.assertTrue(lines[0].startswith('label'))
        self.assertIn('NRC 15*', table)
        self.assertNotIn('NTHU 13*', table)

    def test_emit_plot_data(self):
        with tempfile.TemporaryDirectory() as tmp:
            table_path, json_path = emit_plot_data(self.records, self.derived, Path(tmp) / 'plot.txt')
            self.assertEqual(json_path.name, 'plot.json')
            self.assertEqual(table_path.read_text(encoding='utf-8'), format_table(self.derived))
            self.assertEqual(len(json.loads(json_path.read_text(encoding='utf-8'))['points']), 16)
