import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .calibration import CameraCalibration, parse_calib
from .dataset import (
    DatasetStats, check_scene, dataset_stats, load_scene, read_split,
)
from .exceptions import (
    CalibrationError, DatasetError, LabelParseError, LabelValidationError,
)
from .fixtures import MINI_DATASET_DIR, build_mini_dataset
from .labels import (
    ObjectClass, ObjectLabel, format_label_line, parse_label_file,
    parse_label_line, validate_label, write_label_file,
)
from .serializers import DatasetStatsSerializer

CLASSES = [ObjectClass.CAR, ObjectClass.PEDESTRIAN, ObjectClass.CYCLIST]


def random_label(rng):
    """Etiqueta aleatoria válida con valores ya redondeados a 2 decimales."""
    left = round(float(rng.uniform(0, 1000)), 2)
    top = round(float(rng.uniform(0, 300)), 2)
    return ObjectLabel(
        class_name=str(rng.choice(CLASSES)),
        truncation=round(float(rng.uniform(0, 1)), 2),
        occlusion=int(rng.integers(0, 4)),
        alpha=round(float(rng.uniform(-3.14, 3.14)), 2),
        bbox2d=(left, top, round(left + float(rng.uniform(1, 200)), 2),
                round(top + float(rng.uniform(1, 70)), 2)),
        dims=tuple(round(float(v), 2) for v in rng.uniform(0.5, 5.0, size=3)),
        location=(round(float(rng.uniform(-20, 20)), 2), round(float(rng.uniform(0, 3)), 2),
                  round(float(rng.uniform(2, 80)), 2)),
        rotation_y=round(float(rng.uniform(-3.14, 3.14)), 2),
    )


class ParseLabelLineTest(SimpleTestCase):
    """Tests para parse_label_line"""

    def test_positional_mapping(self):
        """Test: Los campos se asignan por posición"""
        label = parse_label_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")

        self.assertEqual(label.class_name, ObjectClass.CAR)
        self.assertEqual(label.alpha, -1.57)
        self.assertEqual(label.dims, (1.5, 1.6, 3.9))
        self.assertEqual(label.bbox2d, (100.0, 150.0, 300.0, 350.0))
        self.assertEqual(label.location, (2.0, 1.5, 20.0))
        self.assertEqual(label.rotation_y, -1.5)

    def test_dontcare_skips_invariants(self):
        """Test: DontCare conserva los centinelas y no se valida"""
        label = parse_label_line("DontCare -1 -1 -10 559 175 592 195 -1 -1 -1 -1000 -1000 -1000 -10")

        self.assertTrue(label.is_dontcare)
        self.assertIs(validate_label(label), label)

    def test_non_numeric_field(self):
        """Test: Un campo no numérico produce error"""
        with self.assertRaises(LabelParseError) as ctx:
            parse_label_line("Car 0.0 0 abc 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")
        self.assertIn('alpha', str(ctx.exception))

    def test_too_few_fields(self):
        """Test: Menos de 15 campos produce error"""
        with self.assertRaises(LabelParseError):
            parse_label_line("Car 0.00 0 -1.57 100 150 300")

    def test_extra_score_field_ignored(self):
        """Test: El campo 16 (score) se ignora al leer"""
        label = parse_label_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50 0.87")
        self.assertEqual(label.rotation_y, -1.5)

    def test_unknown_class_becomes_misc(self):
        """Test: Una clase desconocida se guarda como Misc con advertencia"""
        with self.assertLogs('kitti_io.labels', level='WARNING'):
            label = parse_label_line("Bus 0.00 0 0.10 100 150 300 350 3.0 2.5 11.0 2.0 1.5 20.0 0.10")

        self.assertEqual(label.class_name, ObjectClass.MISC)
        self.assertEqual(label.unknown_class, 'Bus')

    def test_fractional_occlusion_rejected(self):
        """Test: La oclusión debe ser entera"""
        with self.assertRaises(LabelParseError):
            parse_label_line("Car 0.00 1.5 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")


class LabelFileTest(SimpleTestCase):
    """Tests para lectura y escritura de archivos de etiquetas"""

    def setUp(self):
        """Configuración inicial"""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_write_parse_write_is_byte_identical(self):
        """Test: write → parse → write reproduce el archivo byte a byte"""
        source = MINI_DATASET_DIR / 'label_2' / '000004.txt'
        first = self.dir / 'first.txt'
        second = self.dir / 'second.txt'

        write_label_file(parse_label_file(source), first)
        write_label_file(parse_label_file(first), second)

        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertEqual(first.read_bytes(), source.read_bytes())

    def test_round_trip_randomized_labels(self):
        """Test: parse∘write es la identidad para etiquetas aleatorias válidas"""
        rng = np.random.default_rng(7)
        labels = [random_label(rng) for _ in range(200)]
        path = self.dir / 'random.txt'

        write_label_file(labels, path)

        self.assertEqual(parse_label_file(path), labels)

    def test_emitted_lines_have_15_fields(self):
        """Test: Las líneas escritas tienen exactamente 15 campos"""
        path = self.dir / 'labels.txt'
        write_label_file(parse_label_file(MINI_DATASET_DIR / 'label_2' / '000001.txt'), path)

        for line in path.read_text().splitlines():
            self.assertEqual(len(line.split()), 15)

    def test_empty_file(self):
        """Test: Un archivo vacío produce una lista vacía"""
        path = self.dir / 'empty.txt'
        path.write_text('')
        self.assertEqual(parse_label_file(path), [])

    def test_malformed_line_reports_line_number(self):
        """Test: El error indica el número de la línea mal formada"""
        path = self.dir / 'bad.txt'
        path.write_text(
            "Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50\n"
            "Car 0.00 0 oops 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50\n"
        )
        with self.assertRaises(LabelParseError) as ctx:
            parse_label_file(path)

        self.assertEqual(ctx.exception.line_no, 2)
        self.assertIn(':2:', str(ctx.exception))

    def test_write_rejects_invalid_label(self):
        """Test: No se escribe una etiqueta que viola los invariantes"""
        bad = parse_label_line("Car 0.00 0 -1.57 300 150 100 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")
        path = self.dir / 'out.txt'

        with self.assertRaises(LabelValidationError):
            write_label_file([bad], path)
        self.assertFalse(path.exists())

    def test_format_with_score(self):
        """Test: El score se agrega como campo 16 con 4 decimales"""
        label = parse_label_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")
        line = format_label_line(label, score=0.5)

        self.assertEqual(len(line.split()), 16)
        self.assertTrue(line.endswith(' 0.5000'))


class ValidateLabelTest(SimpleTestCase):
    """Tests para los invariantes de ObjectLabel"""

    def setUp(self):
        """Configuración inicial"""
        self.label = parse_label_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")

    def test_valid_label(self):
        """Test: Una etiqueta correcta pasa la validación"""
        self.assertIs(validate_label(self.label), self.label)

    def test_zero_dims_rejected(self):
        """Test: Dimensiones no positivas son inválidas"""
        with self.assertRaises(LabelValidationError):
            validate_label(self.label.with_changes(dims=(0.0, 1.6, 3.9)))

    def test_angle_out_of_range_rejected(self):
        """Test: Ángulos fuera de [-π, π] son inválidos"""
        with self.assertRaises(LabelValidationError):
            validate_label(self.label.with_changes(rotation_y=math.pi + 0.1))

    def test_occlusion_out_of_range_rejected(self):
        """Test: Oclusión fuera de {0,1,2,3} es inválida"""
        with self.assertRaises(LabelValidationError):
            validate_label(self.label.with_changes(occlusion=4))


class ParseCalibTest(SimpleTestCase):
    """Tests para parse_calib"""

    def setUp(self):
        """Configuración inicial"""
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_focal_and_principal_point(self):
        """Test: P2 con f=700 y punto principal (600, 180)"""
        path = self.dir / 'calib.txt'
        path.write_text("P2: 700 0 600 0 0 700 180 0 0 0 1 0\n")

        calib = parse_calib(path)

        self.assertEqual(calib.focal, 700.0)
        self.assertEqual(calib.principal_point, (600.0, 180.0))
        self.assertEqual(calib.p2.shape, (3, 4))

    def test_fixture_calib(self):
        """Test: La calibración del mini-dataset usa la línea P2"""
        calib = parse_calib(MINI_DATASET_DIR / 'calib' / '000001.txt')
        self.assertEqual(calib.focal, 700.0)

    def test_missing_p2(self):
        """Test: Un archivo sin P2 produce error"""
        path = self.dir / 'calib.txt'
        path.write_text("P0: 700 0 600 0 0 700 180 0 0 0 1 0\n")
        with self.assertRaises(CalibrationError):
            parse_calib(path)

    def test_wrong_count(self):
        """Test: P2 con 11 números produce error"""
        path = self.dir / 'calib.txt'
        path.write_text("P2: 700 0 600 0 0 700 180 0 0 0 1\n")
        with self.assertRaises(CalibrationError):
            parse_calib(path)

    def test_zero_perspective_row(self):
        """Test: P2[2][2] = 0 es inválido"""
        with self.assertRaises(CalibrationError):
            CameraCalibration.from_values([700, 0, 600, 0, 0, 700, 180, 0, 0, 0, 0, 0])


class DatasetStatsTest(SimpleTestCase):
    """Tests para dataset_stats sobre el mini-dataset"""

    def setUp(self):
        """Configuración inicial"""
        self.label_dir = MINI_DATASET_DIR / 'label_2'

    def test_hand_counted_fixture(self):
        """Test: Conteos contados a mano en el mini-dataset"""
        stats = dataset_stats(self.label_dir, CLASSES)

        self.assertEqual(stats.counts, {'Car': 6, 'Pedestrian': 3, 'Cyclist': 2})
        self.assertEqual(stats.total, 11)
        self.assertAlmostEqual(stats.shares['Car'], 100 * 6 / 11, delta=0.005)
        self.assertAlmostEqual(sum(stats.shares.values()), 100.0, delta=0.01)

    def test_counts_equal_sum_of_files(self):
        """Test: El total es la suma de los conteos por archivo"""
        stats = dataset_stats(self.label_dir, CLASSES, workers=3)
        per_file = DatasetStats(counts={})
        for path in sorted(self.label_dir.glob('*.txt')):
            per_file = per_file.merge(DatasetStats.from_labels(parse_label_file(path), CLASSES))

        self.assertEqual(stats.counts, per_file.counts)

    def test_merge_is_order_independent(self):
        """Test: La agregación es asociativa y conmutativa"""
        a = DatasetStats(counts={'Car': 2, 'Cyclist': 1})
        b = DatasetStats(counts={'Car': 5})
        c = DatasetStats(counts={'Pedestrian': 4})

        self.assertEqual(a.merge(b).merge(c).counts, c.merge(a.merge(b)).counts)
        self.assertEqual(a.merge(b).counts, b.merge(a).counts)

    def test_split_restricts_files(self):
        """Test: Un split limita los archivos leídos"""
        ids = read_split(MINI_DATASET_DIR / 'split.txt')
        self.assertEqual(len(ids), 5)

        stats = dataset_stats(self.label_dir, CLASSES, ids=['000001', '000002'])
        self.assertEqual(stats.counts, {'Car': 3, 'Pedestrian': 1, 'Cyclist': 1})

    def test_empty_directory(self):
        """Test: Un directorio vacío produce error"""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(DatasetError):
                dataset_stats(tmp, CLASSES)

    def test_serializer_rounds_shares(self):
        """Test: El serializer reporta participaciones con 2 decimales"""
        data = DatasetStatsSerializer(dataset_stats(self.label_dir, CLASSES)).data

        self.assertEqual(data['total'], 11)
        self.assertEqual(data['shares']['Car'], 54.55)
        self.assertEqual(data['shares']['Cyclist'], 18.18)


class SceneTest(SimpleTestCase):
    """Tests para load_scene y el mini-dataset generado"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = build_mini_dataset(cls.tmp.name)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def test_load_scene(self):
        """Test: Se arma la escena con tamaño leído del PNG"""
        scene = load_scene(self.root, '000001')

        self.assertEqual(scene.image_size, (1242, 375))
        self.assertEqual(len(scene.labels), 3)
        self.assertEqual(len(scene.objects), 2)
        self.assertIs(check_scene(scene), scene)

    def test_all_fixture_scenes_pass_check(self):
        """Test: Todas las escenas del mini-dataset respetan los límites de imagen"""
        for image_id in read_split(self.root / 'split.txt'):
            check_scene(load_scene(self.root, image_id))

    def test_missing_scene(self):
        """Test: Una escena inexistente produce error"""
        with self.assertRaises(DatasetError):
            load_scene(self.root, '999999')

    def test_box_outside_image(self):
        """Test: Una caja fuera de la imagen viola el invariante de Scene"""
        scene = load_scene(self.root, '000001')
        car = scene.labels[0]
        scene.labels[0] = car.with_changes(bbox2d=(1200.0, 100.0, 1300.0, 200.0))

        with self.assertRaises(LabelValidationError):
            check_scene(scene)
