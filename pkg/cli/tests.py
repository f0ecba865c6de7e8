import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from rest_framework.exceptions import ValidationError

from evaluation.detections import detections_from_labels, write_detection_file
from kitti_io.dataset import LABEL_DIR
from kitti_io.fixtures import MINI_DATASET_DIR, build_mini_dataset
from kitti_io.labels import parse_label_file
from llm_filter.exemplars import build_exemplars

from .base import format_validation_error


def run_command(name, *args):
    out = StringIO()
    call_command(name, *args, '--log-level', 'WARNING', stdout=out)
    return out.getvalue()


class FormatValidationErrorTest(SimpleTestCase):
    """Tests para el aplanado de errores de validación"""

    def test_nested_paths(self):
        """Test: Los errores anidados se nombran con la ruta del campo"""
        exc = ValidationError({'removal': {'k': ['k no puede superar a m.']}, 'non_field_errors': ['general']})

        message = format_validation_error(exc)

        self.assertIn('removal.k: k no puede superar a m.', message)
        self.assertIn('general', message)


class StatsCommandTest(SimpleTestCase):
    """Tests para el comando stats"""

    def test_table(self):
        """Test: La tabla del mini-dataset muestra conteos y total"""
        output = run_command('stats', '--labels', str(MINI_DATASET_DIR))

        lines = output.splitlines()
        self.assertTrue(lines[0].startswith('Class'))
        self.assertIn('Car', lines[1])
        self.assertTrue(lines[1].split()[1] == '6')
        self.assertEqual(lines[-1].split(), ['Total', '11'])

    def test_json(self):
        """Test: --json emite conteos por clase"""
        output = run_command('stats', '--labels', str(MINI_DATASET_DIR / LABEL_DIR), '--json')

        data = json.loads(output)
        self.assertEqual(data['counts'], {'Car': 6, 'Pedestrian': 3, 'Cyclist': 2})

    def test_table_and_json_file(self):
        """Test: --json-out escribe el JSON y la tabla se sigue mostrando"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'stats.json'
            output = run_command('stats', '--labels', str(MINI_DATASET_DIR), '--json-out', str(path))

            data = json.loads(path.read_text())
        self.assertTrue(output.startswith('Class'))
        self.assertEqual(output.splitlines()[-1].split(), ['Total', '11'])
        self.assertEqual(data['counts'], {'Car': 6, 'Pedestrian': 3, 'Cyclist': 2})
        self.assertEqual(data['total'], 11)

    def test_missing_directory(self):
        """Test: Un directorio inexistente termina con CommandError"""
        with self.assertRaises(CommandError):
            run_command('stats', '--labels', '/no/existe')


class ProjectCommandTest(SimpleTestCase):
    """Tests para el comando project"""

    def test_projection(self):
        """Test: La caja proyectada coincide con el cálculo a mano"""
        output = run_command(
            'project', '--calib', str(MINI_DATASET_DIR / 'calib' / '000001.txt'),
            '--dims', '1.7', '0.6', '1.8', '--location', '-4', '1.6', '15', '--rotation-y', '0',
        )

        data = json.loads(output)
        self.assertEqual(data['bbox2d'], [366.67, 175.24, 458.17, 256.19])
        self.assertTrue(data['fully_inside'])
        self.assertAlmostEqual(data['alpha'], 0.2606)
        self.assertEqual(len(data['corners2d']), 8)

    def test_behind_camera(self):
        """Test: Una caja detrás de la cámara no se puede proyectar"""
        with self.assertRaises(CommandError):
            run_command(
                'project', '--calib', str(MINI_DATASET_DIR / 'calib' / '000001.txt'),
                '--dims', '1.7', '0.6', '1.8', '--location', '0', '1.6', '-5',
            )


class SampleDimsCommandTest(SimpleTestCase):
    """Tests para el comando sample_dims"""

    def test_samples_within_bounds(self):
        """Test: Las muestras quedan dentro de [a, b] de cada dimensión"""
        output = run_command('sample_dims', '--labels', str(MINI_DATASET_DIR), '--class', 'Pedestrian',
                             '--count', '20', '--seed', '3')

        data = json.loads(output)
        self.assertEqual(len(data['samples']), 20)
        for sample in data['samples']:
            for value, name in zip(sample, ('h', 'w', 'l')):
                self.assertGreaterEqual(value, data['stats'][name]['a'] - 1e-4)
                self.assertLessEqual(value, data['stats'][name]['b'] + 1e-4)

    def test_same_seed_same_samples(self):
        """Test: La misma semilla repite las muestras"""
        args = ('sample_dims', '--labels', str(MINI_DATASET_DIR), '--seed', '7')

        self.assertEqual(run_command(*args), run_command(*args))


class EvalCommandTest(SimpleTestCase):
    """Tests para el comando eval"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.dataset = build_mini_dataset(self.tmp / 'kitti')
        self.det_dir = self.tmp / 'det'
        for path in sorted((self.dataset / LABEL_DIR).glob('*.txt')):
            write_detection_file(detections_from_labels(parse_label_file(path)), self.det_dir / path.name)

    def test_table(self):
        """Test: La tabla tiene encabezado R40 y una fila por clase"""
        output = run_command('eval', '--gt', str(self.dataset), '--det', str(self.det_dir))

        lines = output.splitlines()
        self.assertIn('AP_2D (R40)', lines[0])
        self.assertTrue(lines[3].startswith('Car'))
        self.assertEqual(len(lines), 6)

    def test_json_r11(self):
        """Test: --json --r11 reporta la interpolación y 100 para el GT como detección"""
        output = run_command('eval', '--gt', str(self.dataset), '--det', str(self.det_dir), '--r11', '--json')

        data = json.loads(output)
        self.assertEqual(data['interpolation'], 'R11')
        self.assertEqual(data['results']['Car']['2d']['easy'], 100.0)

    def test_missing_detections(self):
        """Test: Falta de archivos de detección termina con CommandError"""
        (self.det_dir / '000003.txt').unlink()

        with self.assertRaises(CommandError):
            run_command('eval', '--gt', str(self.dataset), '--det', str(self.det_dir))


class AugmentCommandTest(TestCase):
    """Tests para el comando augment"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.dataset = build_mini_dataset(self.tmp / 'kitti')
        build_exemplars(self.tmp / 'exemplars', ['Cyclist'])

    def write_config(self, **overrides):
        data = {
            'exemplar_dir': str(self.tmp / 'exemplars'),
            'class_mix': {'Cyclist': 1.0},
            'targets': {'Cyclist': 2},
            'removal': {'m': 3},
            'insertion': {'m': 4},
        }
        data.update(overrides)
        path = self.tmp / 'run.json'
        path.write_text(json.dumps(data))
        return path

    def augment(self, *args, output='out', config=None):
        return run_command(
            'augment', '--config', str(config or self.write_config()),
            '--dataset', str(self.dataset), '--output', str(self.tmp / output), *args,
        )

    def test_dry_run_writes_nothing(self):
        """Test: --dry-run emite los planes sin escribir imágenes"""
        output = self.augment('--dry-run')

        plans = json.loads(output)
        self.assertEqual([plan['scene_id'] for plan in plans], ['000001', '000003'])
        self.assertEqual(plans[0]['insertion']['tail_class'], 'Cyclist')
        self.assertFalse((self.tmp / 'out').exists())

    def test_report_written(self):
        """Test: La corrida escribe las variantes y el reporte JSON"""
        output = self.augment()

        report = json.loads((self.tmp / 'out' / 'augment_report.json').read_text())
        self.assertEqual(report['inserted'], {'Cyclist': 2})
        self.assertEqual(report['variants'], ['000001_aug0', '000003_aug0'])
        self.assertIn('Después:', output)
        self.assertTrue((self.tmp / 'out' / 'image_2' / '000001_aug0.png').exists())

    def test_same_seed_same_labels(self):
        """Test: Dos corridas con la misma semilla escriben las mismas etiquetas"""
        self.augment('--run-name', 'a', output='a')
        self.augment('--run-name', 'b', output='b')

        self.assertEqual(
            (self.tmp / 'a' / LABEL_DIR / '000003_aug0.txt').read_text(),
            (self.tmp / 'b' / LABEL_DIR / '000003_aug0.txt').read_text(),
        )

    @override_settings(LTDA_LLM_URL='')
    def test_remote_judge_without_url(self):
        """Test: El juez remoto sin LTDA_LLM_URL es un error de configuración"""
        with self.assertRaisesMessage(CommandError, 'LTDA_LLM_URL'):
            self.augment(config=self.write_config(judge_backend='remote'))

    def test_missing_exemplars_points_to_builder(self):
        """Test: Sin paneles de ejemplo el error indica cómo generarlos"""
        config = self.write_config(exemplar_dir=str(self.tmp / 'vacio'))

        with self.assertRaisesMessage(CommandError, 'python manage.py build_exemplars'):
            self.augment(config=config)

    def test_unknown_key(self):
        """Test: Una clave desconocida en el archivo termina con CommandError"""
        with self.assertRaisesMessage(CommandError, 'Configuración inválida'):
            self.augment(config=self.write_config(temperature=0.5))

    def test_skip_fraction_exceeded(self):
        """Test: Si ninguna escena supera los filtros y el máximo es 0, el comando falla"""
        config = self.write_config(score_floor=10, noise_std=100.0, max_skip_fraction=0.0)

        with self.assertRaisesMessage(CommandError, 'supera el máximo'):
            self.augment(config=config)

        report = json.loads((self.tmp / 'out' / 'augment_report.json').read_text())
        self.assertEqual(report['scenes']['augmented'], 0)

    def test_changed_config_requires_reset(self):
        """Test: Cambiar la configuración de una corrida existente pide --reset"""
        self.augment()

        with self.assertRaisesMessage(CommandError, '--reset'):
            self.augment('--seed', '9')
        self.augment('--seed', '9', '--reset')


class FilterTestCommandTest(SimpleTestCase):
    """Tests para el comando filter_test"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.dataset = build_mini_dataset(self.tmp / 'kitti')
        build_exemplars(self.tmp / 'exemplars', ['Cyclist'])

    def filter_test(self, *args):
        return json.loads(run_command(
            'filter_test', '--dataset', str(self.dataset), '--scene', '000001',
            '--exemplars', str(self.tmp / 'exemplars'), '--m', '3', *args,
        ))

    def test_verdicts_per_candidate(self):
        """Test: Cada candidato trae los veredictos de la cadena"""
        data = self.filter_test()

        self.assertEqual(data['plan']['object_index'], 0)
        self.assertEqual(len(data['removal']['candidates']), 3)
        self.assertIn('removal_quality', data['removal']['candidates'][0]['verdicts'])
        self.assertFalse(data['removal']['flagged'])
        insertion = data['insertion']
        self.assertEqual(len(insertion['candidates']), 3)
        self.assertIn('geometric_plausibility', insertion['candidates'][0]['verdicts'])
        self.assertEqual(insertion['tallies']['geometric_plausibility']['judged'], 3)

    def test_object_out_of_range(self):
        """Test: Un índice de objeto inexistente termina con CommandError"""
        with self.assertRaises(CommandError):
            self.filter_test('--object', '9')


class FixtureCommandsTest(SimpleTestCase):
    """Tests para make_fixture y build_exemplars"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)

    def test_make_fixture(self):
        """Test: El mini-dataset tiene etiquetas, calibraciones e imágenes de las 5 escenas"""
        run_command('make_fixture', str(self.tmp / 'mini'))

        for sub, ext in (('label_2', '.txt'), ('calib', '.txt'), ('image_2', '.png')):
            self.assertEqual(len(list((self.tmp / 'mini' / sub).glob(f'*{ext}'))), 5)

    def test_build_exemplars(self):
        """Test: Se escriben los paneles positivo y negativo por clase"""
        output = run_command('build_exemplars', '--dest', str(self.tmp / 'ex'), '--classes', 'Cyclist')

        self.assertIn('2 paneles', output)
        self.assertEqual(len(list((self.tmp / 'ex').rglob('*.png'))), 2)
