import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from geom3d.iou import iou_2d
from kitti_io.fixtures import build_mini_dataset
from kitti_io.labels import ObjectLabel, parse_label_file

from .detections import (
    Detection, detections_from_labels, parse_detection_file, parse_detection_line, write_detection_file,
)
from .difficulty import DIFFICULTY_SPECS, Difficulty, DifficultySpec, difficulty_filter
from .evaluator import EvalConfig, evaluate, evaluate_cases, format_table
from .exceptions import DetectionParseError, EvaluationError
from .matching import (
    R11_POSITIONS, R40_POSITIONS, Metric, average_orientation_similarity, average_precision,
    interpolated_average, match_and_pr, overlap_fn,
)
from .serializers import EvalResultSerializer

EASY = DIFFICULTY_SPECS[Difficulty.EASY]


def gt(left, top, width=80.0, height=60.0, class_name='Car', x=0.0, z=20.0, rotation_y=0.0,
       alpha=0.0, occlusion=0, truncation=0.0):
    return ObjectLabel(
        class_name=class_name, truncation=truncation, occlusion=occlusion, alpha=alpha,
        bbox2d=(left, top, left + width, top + height), dims=(1.5, 1.6, 3.9),
        location=(x, 1.6, z), rotation_y=rotation_y,
    )


def det(label, score, **changes):
    return Detection(label=label.with_changes(**changes) if changes else label, score=score)


def ap(cases, metric=Metric.BBOX_2D, positions=R40_POSITIONS, class_name='Car', threshold=None):
    curve = match_and_pr(cases, class_name, EASY, metric, threshold)
    if metric == Metric.AOS:
        return average_orientation_similarity(curve, positions)
    return average_precision(curve, positions)


def random_instance(rng):
    """
    Hasta 5 GT en celdas disjuntas y hasta 5 detecciones: copias
    perturbadas de algún GT o cajas falsas en celdas propias.
    """
    gts = []
    for cell in range(int(rng.integers(1, 6))):
        gts.append(gt(
            200.0 * cell + rng.uniform(0, 20), rng.uniform(100, 150),
            width=rng.uniform(60, 100), height=rng.uniform(50, 90),
            x=8.0 * cell - 16.0, z=20.0 + rng.uniform(0, 3), rotation_y=rng.uniform(-math.pi, math.pi),
            alpha=rng.uniform(-math.pi, math.pi),
        ))

    dets = []
    for index in range(int(rng.integers(0, 6))):
        score = float(rng.choice([0.3, 0.5, 0.7, 0.9])) if rng.random() < 0.5 else float(rng.uniform(0, 1))
        if rng.random() < 0.75:
            source = gts[int(rng.integers(len(gts)))]
            left, top, right, bottom = source.bbox2d
            dx, dy = rng.normal(0, 10, size=2)
            x, y, z = source.location
            dets.append(det(
                source, score,
                bbox2d=(left + dx, top + dy, right + dx, bottom + dy),
                location=(x + rng.normal(0, 0.3), y + rng.normal(0, 0.2), z + rng.normal(0, 0.3)),
                alpha=source.alpha + rng.normal(0, 0.5),
            ))
        else:
            cell = 6 + index
            fake = gt(200.0 * cell, 120.0, x=8.0 * cell - 16.0)
            dets.append(det(fake, score))
    return gts, dets


def brute_force_ap(gts, dets, metric, threshold, positions=R40_POSITIONS):
    """
    AP recalculando cada punto de operación por separado con la asignación
    de máxima cantidad de TP (búsqueda exhaustiva).
    """
    iou_fn = overlap_fn(metric)
    overlaps = [[iou_fn(g, d) for g in gts] for d in dets]

    def best(index, kept, used):
        if index == len(kept):
            return 0
        result = best(index + 1, kept, used)
        for g in range(len(gts)):
            if g not in used and overlaps[kept[index]][g] >= threshold:
                result = max(result, 1 + best(index + 1, kept, used | {g}))
        return result

    recall, precision = [], []
    for t in sorted({d.score for d in dets}, reverse=True):
        kept = [i for i, d in enumerate(dets) if d.score >= t]
        tp = best(0, kept, frozenset())
        recall.append(tp / len(gts))
        precision.append(tp / len(kept))
    return interpolated_average(recall, precision, positions)


class ParseDetectionTest(SimpleTestCase):
    """Tests para parse_detection_line y parse_detection_file"""

    def test_sixteenth_field_is_score(self):
        """Test: El campo 16 es la confianza"""
        detection = parse_detection_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50 0.87")

        self.assertEqual(detection.class_name, 'Car')
        self.assertEqual(detection.score, 0.87)
        self.assertEqual(detection.bbox2d, (100.0, 150.0, 300.0, 350.0))

    def test_missing_score(self):
        """Test: Una línea de 15 campos no es una detección"""
        with self.assertRaises(DetectionParseError):
            parse_detection_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50")

    def test_non_numeric_score(self):
        """Test: Una confianza no numérica es un error"""
        with self.assertRaises(DetectionParseError):
            parse_detection_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50 alta")

    def test_non_finite_score(self):
        """Test: Una confianza infinita se rechaza"""
        with self.assertRaises(DetectionParseError):
            parse_detection_line("Car 0.00 0 -1.57 100 150 300 350 1.5 1.6 3.9 2.0 1.5 20.0 -1.50 inf")

    def test_file_written_and_read(self):
        """Test: Un archivo escrito se vuelve a leer con las mismas confianzas"""
        detections = [det(gt(100, 100), 0.9), det(gt(400, 100), 0.25)]
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / '000001.txt'
            write_detection_file(detections, path)

            read = parse_detection_file(path)

        self.assertEqual([d.score for d in read], [0.9, 0.25])
        self.assertEqual([d.bbox2d for d in read], [d.bbox2d for d in detections])


class DifficultyFilterTest(SimpleTestCase):
    """Tests para difficulty_filter"""

    def test_easy_ignores_short_box(self):
        """Test: Una caja de 35 px no es evaluable en fácil"""
        label = gt(100, 100, height=35)

        self.assertEqual(difficulty_filter([label], EASY), ([], [label]))

    def test_hard_admits_short_box(self):
        """Test: La misma caja es evaluable en difícil"""
        label = gt(100, 100, height=35)

        self.assertEqual(difficulty_filter([label], DIFFICULTY_SPECS[Difficulty.HARD]), ([label], []))

    def test_dontcare_always_ignored(self):
        """Test: DontCare nunca es evaluable"""
        label = gt(100, 100, height=80, class_name='DontCare')

        for spec in DIFFICULTY_SPECS.values():
            self.assertEqual(difficulty_filter([label], spec), ([], [label]))

    def test_occlusion_and_truncation(self):
        """Test: Oclusión y truncamiento por encima del máximo se ignoran"""
        occluded = gt(100, 100, height=80, occlusion=1)
        truncated = gt(300, 100, height=80, truncation=0.2)

        evaluable, ignored = difficulty_filter([occluded, truncated], DIFFICULTY_SPECS[Difficulty.MODERATE])

        self.assertEqual(evaluable, [occluded, truncated])
        self.assertEqual(difficulty_filter([occluded, truncated], EASY)[0], [])

    def test_neighbor_class_ignored(self):
        """Test: Van se ignora al evaluar Car y Truck se descarta"""
        car = gt(0, 100, height=80)
        van = gt(200, 100, height=80, class_name='Van')
        truck = gt(400, 100, height=80, class_name='Truck')

        evaluable, ignored = difficulty_filter([car, van, truck], EASY, class_name='Car')

        self.assertEqual(evaluable, [car])
        self.assertEqual(ignored, [van])

    def test_levels_are_nested(self):
        """Test: Lo que admite fácil lo admite moderado, y lo de moderado, difícil"""
        rng = np.random.default_rng(3)
        for _ in range(200):
            label = gt(100, 100, height=rng.uniform(10, 80), occlusion=int(rng.integers(0, 4)),
                       truncation=rng.uniform(0, 1))
            easy, moderate, hard = (DIFFICULTY_SPECS[level].admits(label) for level in Difficulty)
            self.assertLessEqual(easy, moderate)
            self.assertLessEqual(moderate, hard)

    def test_custom_spec(self):
        """Test: Un DifficultySpec arbitrario aplica sus propios umbrales"""
        spec = DifficultySpec(min_bbox_height_px=10, max_occlusion=3, max_truncation=1.0)

        self.assertTrue(spec.admits(gt(0, 0, height=11, occlusion=3, truncation=0.9)))


class AveragePrecisionTest(SimpleTestCase):
    """Tests para match_and_pr y average_precision"""

    def test_single_match(self):
        """Test: 1 GT y 1 detección con IoU 0.8 >= 0.7 da AP 100"""
        label = gt(100, 100, width=100, height=100)
        detection = det(label, 0.9, bbox2d=(100.0, 100.0, 200.0, 180.0))
        self.assertAlmostEqual(iou_2d(label.bbox2d, detection.bbox2d), 0.8)

        self.assertEqual(ap([([label], [detection])]), 100.0)

    def test_below_threshold(self):
        """Test: IoU por debajo del umbral no es acierto"""
        label = gt(100, 100, width=100, height=100)
        detection = det(label, 0.9, bbox2d=(100.0, 100.0, 200.0, 160.0))

        self.assertEqual(ap([([label], [detection])]), 0.0)

    def test_half_recall(self):
        """Test: 2 GT y una detección perfecta dan 50 en R40"""
        first, second = gt(100, 100), gt(400, 100)

        self.assertAlmostEqual(ap([([first, second], [det(first, 1.0)])]), 50.0)
        self.assertAlmostEqual(ap([([first, second], [det(first, 1.0)])], positions=R11_POSITIONS), 600 / 11)

    def test_hand_computed_pr_table(self):
        """Test: 3 GT con TP, FP, TP por confianza descendente"""
        gts = [gt(0, 100), gt(200, 100), gt(400, 100)]
        dets = [det(gts[0], 0.9), det(gt(800, 100), 0.8), det(gts[1], 0.7)]

        curve = match_and_pr([(gts, dets)], 'Car', EASY, Metric.BBOX_2D)

        self.assertEqual(curve.scores, [0.9, 0.8, 0.7])
        self.assertEqual(curve.precision, [1.0, 0.5, 2 / 3])
        self.assertEqual(curve.recall, [1 / 3, 1 / 3, 2 / 3])
        # Recall <= 13/40 con precisión 1 y hasta 26/40 con 2/3
        self.assertAlmostEqual(average_precision(curve), 100 * (13 + 13 * 2 / 3) / 40)

    def test_duplicate_is_false_positive(self):
        """Test: Una segunda detección sobre el mismo GT es falso positivo"""
        label = gt(100, 100)

        curve = match_and_pr([([label], [det(label, 0.9), det(label, 0.8)])], 'Car', EASY, Metric.BBOX_2D)

        self.assertEqual(curve.precision, [1.0, 0.5])

    def test_neighbor_class_not_false_positive(self):
        """Test: Detectar un Van como Car no penaliza"""
        car, van = gt(0, 100), gt(300, 100, class_name='Van')
        dets = [det(van, 0.95, class_name='Car'), det(car, 0.9)]

        self.assertEqual(ap([([car, van], dets)]), 100.0)
        self.assertEqual(ap([([car, van.with_changes(class_name='Truck')], dets)]), 50.0)

    def test_dontcare_region_ignored_in_2d(self):
        """Test: Una detección sin GT dentro de DontCare no cuenta en 2D"""
        car = gt(0, 100)
        dontcare = gt(500, 90, width=120, height=90, class_name='DontCare')
        dets = [det(gt(510, 100, x=10.0), 0.95), det(car, 0.9)]

        self.assertEqual(ap([([car, dontcare], dets)]), 100.0)
        self.assertEqual(ap([([car, dontcare], dets)], metric=Metric.BEV), 50.0)

    def test_short_detection_discarded(self):
        """Test: Detecciones más bajas que el mínimo de la dificultad no participan"""
        car = gt(0, 100)
        dets = [det(gt(500, 100, height=30), 0.95), det(car, 0.9)]

        self.assertEqual(ap([([car], dets)]), 100.0)

    def test_empty_detections(self):
        """Test: Sin detecciones el AP es 0"""
        self.assertEqual(ap([([gt(0, 100)], [])]), 0.0)

    def test_no_ground_truth(self):
        """Test: Sin GT evaluable el AP no está definido"""
        self.assertIsNone(ap([([], [det(gt(0, 100), 0.9)])]))

    def test_overlapping_ground_truth_greedy(self):
        """Test: Con GT solapados cada detección toma el GT de mayor IoU en orden de confianza"""
        first, second = gt(0, 100), gt(10, 100)
        wide = det(first, 0.9, bbox2d=(5.0, 100.0, 85.0, 160.0))
        shifted = det(first, 0.8, bbox2d=(20.0, 100.0, 100.0, 160.0))
        # wide: 75/90 con el primero y 75/85 con el segundo; shifted: 60/100 y 70/90
        self.assertAlmostEqual(iou_2d(first.bbox2d, wide.bbox2d), 75 / 90)
        self.assertAlmostEqual(iou_2d(second.bbox2d, wide.bbox2d), 75 / 85)
        self.assertLess(iou_2d(first.bbox2d, shifted.bbox2d), 0.7)

        curve = match_and_pr([([first, second], [wide, shifted])], 'Car', EASY, Metric.BBOX_2D)

        self.assertEqual(curve.precision, [1.0, 0.5])
        self.assertEqual(curve.recall, [0.5, 0.5])
        self.assertAlmostEqual(average_precision(curve), 50.0)
        self.assertAlmostEqual(brute_force_ap([first, second], [wide, shifted], Metric.BBOX_2D, 0.7), 100.0)

    def test_overlapping_ground_truth_order(self):
        """Test: Si la detección desplazada tiene más confianza, ambos GT se emparejan"""
        first, second = gt(0, 100), gt(10, 100)
        wide = det(first, 0.8, bbox2d=(5.0, 100.0, 85.0, 160.0))
        shifted = det(first, 0.9, bbox2d=(20.0, 100.0, 100.0, 160.0))

        self.assertAlmostEqual(ap([([first, second], [wide, shifted])]), 100.0)

    def test_matches_brute_force(self):
        """Test: En 200 casos aleatorios el AP coincide con el emparejamiento exhaustivo"""
        rng = np.random.default_rng(11)
        for _ in range(200):
            gts, dets = random_instance(rng)
            for metric in (Metric.BBOX_2D, Metric.BEV, Metric.BOX_3D):
                threshold = 0.7 if metric == Metric.BBOX_2D else 0.5
                expected = brute_force_ap(gts, dets, metric, threshold)
                self.assertAlmostEqual(ap([(gts, dets)], metric=metric, threshold=threshold), expected, places=9)

    def test_metric_orderings(self):
        """Test: AOS <= AP_2D y AP_3D <= AP_BEV en casos aleatorios"""
        rng = np.random.default_rng(12)
        for _ in range(200):
            cases = [random_instance(rng)]
            self.assertLessEqual(ap(cases, metric=Metric.AOS), ap(cases) + 1e-9)
            self.assertLessEqual(ap(cases, metric=Metric.BOX_3D), ap(cases, metric=Metric.BEV) + 1e-9)

    def test_lower_threshold_never_lowers_ap(self):
        """Test: Bajar el umbral de IoU no baja el AP"""
        rng = np.random.default_rng(13)
        for _ in range(100):
            cases = [random_instance(rng)]
            self.assertLessEqual(ap(cases, threshold=0.7), ap(cases, threshold=0.5) + 1e-9)

    def test_permutation_invariant(self):
        """Test: El orden de las detecciones no cambia el resultado"""
        rng = np.random.default_rng(14)
        for _ in range(50):
            gts, dets = random_instance(rng)
            shuffled = [dets[i] for i in rng.permutation(len(dets))]
            self.assertAlmostEqual(ap([(gts, dets)]), ap([(gts, shuffled)]), places=9)


class OrientationSimilarityTest(SimpleTestCase):
    """Tests para average_orientation_similarity"""

    def setUp(self):
        """Configuración inicial"""
        self.label = gt(100, 100, alpha=0.3)

    def aos(self, delta):
        detection = det(self.label, 0.9, alpha=self.label.alpha + delta)
        return ap([([self.label], [detection])], metric=Metric.AOS)

    def test_same_alpha(self):
        """Test: Con Δalpha = 0 el AOS es igual al AP"""
        self.assertAlmostEqual(self.aos(0.0), 100.0)

    def test_opposite_alpha(self):
        """Test: Con Δalpha = π el aporte es 0"""
        self.assertAlmostEqual(self.aos(math.pi), 0.0)

    def test_quarter_turn(self):
        """Test: Con Δalpha = π/2 el TP pesa 0.5"""
        self.assertAlmostEqual(self.aos(math.pi / 2), 50.0)


class EvaluateTest(SimpleTestCase):
    """Tests para evaluate sobre el mini-dataset"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.dataset = build_mini_dataset(self.tmp / 'kitti')
        self.labels = {
            path.stem: parse_label_file(path) for path in sorted((self.dataset / 'label_2').glob('*.txt'))
        }

    def write_detections(self, name, builder):
        det_dir = self.tmp / name
        for image_id, labels in self.labels.items():
            write_detection_file(builder(labels), det_dir / f'{image_id}.txt')
        return det_dir

    def test_self_evaluation(self):
        """Test: El GT usado como detección da 100 en toda celda definida"""
        det_dir = self.write_detections('self', detections_from_labels)

        result = evaluate(self.dataset, det_dir)

        for key, value in result.values.items():
            if value is not None:
                self.assertAlmostEqual(value, 100.0, msg=str(key))
        self.assertEqual(result.value('Car', 'easy', '2d'), 100.0)

    def test_empty_detections(self):
        """Test: Archivos vacíos dan 0 en toda celda definida"""
        det_dir = self.write_detections('empty', lambda labels: [])

        result = evaluate(self.dataset / 'label_2', det_dir, EvalConfig(interpolation='R11'))

        defined = [value for value in result.values.values() if value is not None]
        self.assertTrue(defined)
        self.assertTrue(all(value == 0.0 for value in defined))

    def test_missing_detection_file(self):
        """Test: Falta el archivo de una imagen"""
        det_dir = self.write_detections('partial', detections_from_labels)
        (det_dir / '000003.txt').unlink()

        with self.assertRaises(EvaluationError):
            evaluate(self.dataset, det_dir)

    def test_absent_class_is_na(self):
        """Test: Una clase sin GT se reporta como n/a"""
        cases = [([gt(0, 100)], [det(gt(0, 100), 0.9)])]

        result = evaluate_cases(cases, EvalConfig(workers=2))

        self.assertIsNone(result.value('Cyclist', 'easy', '3d'))
        self.assertIn('n/a', format_table(result))

    def test_table_and_json(self):
        """Test: La tabla y el JSON muestran los mismos valores"""
        det_dir = self.write_detections('self', detections_from_labels)
        result = evaluate(self.dataset, det_dir)

        table = format_table(result)
        data = EvalResultSerializer(result).data

        self.assertIn('AP_BEV (R40)', table)
        self.assertEqual(len(table.splitlines()), 3 + 3)
        self.assertEqual(data['results']['Car']['2d']['easy'], 100.0)
        self.assertEqual(data['interpolation'], 'R40')

    def test_unknown_interpolation(self):
        """Test: Solo se admiten R40 y R11"""
        with self.assertRaises(EvaluationError):
            EvalConfig(interpolation='R20')
