import json
import math
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, TestCase, override_settings
from PIL import Image
from rest_framework.exceptions import ValidationError

from dim_sampler.stats import ClassDimStats, DimStats
from gen_backend.backends import InpaintBackend
from gen_backend.exceptions import BackendUnavailableError
from gen_backend.synthetic import SyntheticBackend
from geom3d.orientation import alpha_from_pose, orientation_sector, wrap_angle
from kitti_io.dataset import LABEL_DIR, Scene, check_scene, load_scene
from kitti_io.fixtures import MINI_DATASET_DIR, MINI_IMAGE_SIZE, build_mini_dataset, paint_scene_image
from kitti_io.labels import ObjectLabel, parse_label_file
from llm_filter.exceptions import ExemplarMissingError
from llm_filter.exemplars import build_exemplars, render_exemplar_panel
from llm_filter.judges import MockJudge
from llm_filter.types import Protocol

from .config import load_run_config
from .exceptions import ConfigError, PlanningError, StageError
from .models import AugmentRun, SceneRecord
from .planning import generation_seed, plan_insertion, plan_scene
from .runner import AugmentRunner, augment_dataset, open_run
from .selection import SelectionCriteria, select_removable
from .stages import GenerationOptions, run_insertion_stage, run_removal_stage

CYCLIST_DIMS = (1.7, 0.6, 1.8)


def fixed_stats(class_name='Cyclist', dims=CYCLIST_DIMS):
    """Estadísticas con sigma 0: el muestreo devuelve siempre la media."""
    h, w, l = (DimStats(mu=value, sigma=0.0, a=value, b=value) for value in dims)
    return ClassDimStats(class_name=class_name, h=h, w=w, l=l, sample_count=1)


def mini_scene(image_id):
    return load_scene(MINI_DATASET_DIR, image_id, image_size=MINI_IMAGE_SIZE)


def car(left, top, right, bottom, location=(0.0, 1.6, 20.0)):
    return ObjectLabel(
        class_name='Car', truncation=0.0, occlusion=0, alpha=0.0,
        bbox2d=(left, top, right, bottom), dims=(1.5, 1.6, 3.9),
        location=location, rotation_y=0.0,
    )


class SelectRemovableTest(SimpleTestCase):
    """Tests para select_removable"""

    def setUp(self):
        """Configuración inicial"""
        self.criteria = SelectionCriteria()

    def test_isolated_car_selected(self):
        """Test: Un auto aislado y alto es reemplazable"""
        scene = mini_scene('000001')

        removable = select_removable(scene, self.criteria)

        self.assertEqual(len(removable), 1)
        self.assertIs(removable[0], scene.labels[0])

    def test_overlapping_cars_excluded(self):
        """Test: Autos que se solapan entre sí no se eligen"""
        self.assertEqual(select_removable(mini_scene('000002'), self.criteria), [])

    def test_short_car_excluded(self):
        """Test: Un auto de menos de 40 px de alto no se elige"""
        scene = mini_scene('000003')

        removable = select_removable(scene, self.criteria)

        self.assertEqual(removable, [scene.labels[0]])

    def test_scene_without_head_class(self):
        """Test: Una escena sin autos no tiene candidatos"""
        self.assertEqual(select_removable(mini_scene('000005'), self.criteria), [])

    def test_dontcare_does_not_block(self):
        """Test: Solaparse con una región DontCare no descarta el objeto"""
        labels = [
            car(100, 100, 200, 200),
            parse_label_file(MINI_DATASET_DIR / LABEL_DIR / '000001.txt')[2].with_changes(
                bbox2d=(150.0, 150.0, 250.0, 250.0),
            ),
        ]
        scene = Scene(image_id='x', image_size=MINI_IMAGE_SIZE, labels=labels, calib=None)

        self.assertEqual(select_removable(scene, self.criteria), [labels[0]])

    def test_largest_first_and_truncated(self):
        """Test: Se conservan los de mayor área hasta el máximo por imagen"""
        labels = [
            car(0, 100, 50, 150),
            car(100, 100, 300, 200),
            car(400, 100, 500, 200),
        ]
        scene = Scene(image_id='x', image_size=MINI_IMAGE_SIZE, labels=labels, calib=None)
        criteria = SelectionCriteria(max_replacements_per_image=2)

        self.assertEqual(select_removable(scene, criteria), [labels[1], labels[2]])

    def test_max_replacements_out_of_range(self):
        """Test: Más de 4 reemplazos por imagen es un error de configuración"""
        with self.assertRaises(ConfigError):
            SelectionCriteria(max_replacements_per_image=5)
        with self.assertRaises(ConfigError):
            SelectionCriteria(max_replacements_per_image=0)


class PlanInsertionTest(SimpleTestCase):
    """Tests para plan_insertion y plan_scene"""

    def setUp(self):
        """Configuración inicial"""
        self.scene = mini_scene('000001')
        self.removed = self.scene.labels[0]
        self.stats = fixed_stats()

    def plan(self, removed=None, others=(), retries=5):
        return plan_insertion(
            removed or self.removed, 'Cyclist', self.stats, self.scene.calib, self.scene.image_size,
            np.random.default_rng(0), others=others, retries=retries,
        )

    def test_inherits_location_and_yaw(self):
        """Test: El objeto insertado conserva x, y, z y el yaw del eliminado"""
        plan = self.plan()

        self.assertEqual(plan.location, self.removed.location)
        self.assertEqual(plan.rotation_y, self.removed.rotation_y)
        self.assertEqual(plan.dims, CYCLIST_DIMS)
        self.assertEqual(plan.attempts, 1)

    def test_alpha_and_orientation_follow_pose(self):
        """Test: alpha y el sector se derivan de la pose heredada"""
        plan = self.plan()

        self.assertAlmostEqual(plan.alpha, alpha_from_pose(self.removed.location, self.removed.rotation_y))
        self.assertEqual(plan.orientation, orientation_sector(plan.alpha).value)
        self.assertIn(plan.orientation, plan.prompt)

    def test_projection_matches_hand_computation(self):
        """Test: La caja 2D coincide con la proyección calculada a mano"""
        removed = self.removed.with_changes(rotation_y=0.0)

        plan = self.plan(removed=removed)

        # P2 = [[700, 0, 600, 0], [0, 700, 180, 0], [0, 0, 1, 0]]
        left = 600 + 700 * (-4.9) / 14.7
        right = 600 + 700 * (-3.1) / 15.3
        top = 180 + 700 * (-0.1) / 14.7
        bottom = 180 + 700 * 1.6 / 14.7
        for value, expected in zip(plan.bbox2d, (left, top, right, bottom)):
            self.assertAlmostEqual(value, expected, places=2)

    def test_mask_inside_crop(self):
        """Test: La máscara de inserción cubre la caja proyectada dentro del recorte"""
        plan = self.plan()
        left, top, right, bottom = plan.mask.region
        local = plan.crop.to_local(plan.bbox2d)

        self.assertEqual(plan.mask.size, plan.crop.side)
        self.assertLessEqual(left, local[0])
        self.assertLessEqual(top, local[1])
        self.assertGreaterEqual(right, local[2])
        self.assertGreaterEqual(bottom, local[3])

    def test_out_of_image_raises_after_retries(self):
        """Test: Una ubicación que proyecta fuera de la imagen agota los reintentos"""
        removed = self.removed.with_changes(location=(-20.0, 1.6, 5.0))

        with self.assertRaises(PlanningError):
            self.plan(removed=removed, retries=3)

    def test_overlap_with_other_labels_rejected(self):
        """Test: Una caja que se solapa con otra etiqueta se rechaza"""
        blocking = self.plan().to_label()

        with self.assertRaises(PlanningError):
            self.plan(others=[blocking])

    def test_plan_scene_counts_failures(self):
        """Test: plan_scene descarta los objetos sin plan y los cuenta"""
        unplaceable = self.removed.with_changes(location=(-20.0, 1.6, 5.0))
        scene = replace(self.scene, labels=[unplaceable] + self.scene.labels[1:])

        plans, failures = plan_scene(scene, [unplaceable], 'Cyclist', self.stats, np.random.default_rng(0))

        self.assertEqual(plans, [])
        self.assertEqual(failures, 1)

    def test_plan_scene_indexes_removed_object(self):
        """Test: El plan apunta a la posición del objeto en la escena"""
        plans, failures = plan_scene(
            self.scene, [self.removed], 'Cyclist', self.stats, np.random.default_rng(0),
        )

        self.assertEqual(failures, 0)
        self.assertEqual(plans[0].object_index, 0)
        self.assertEqual(plans[0].head_class, 'Car')
        self.assertEqual(plans[0].insertion.tail_class, 'Cyclist')

    def test_generation_seed_depends_on_stage(self):
        """Test: La semilla es estable y distinta por etapa"""
        removal = generation_seed(0, '000001', 0, 'removal')

        self.assertEqual(removal, generation_seed(0, '000001', 0, 'removal'))
        self.assertNotEqual(removal, generation_seed(0, '000001', 0, 'insertion'))
        self.assertNotEqual(removal, generation_seed(1, '000001', 0, 'removal'))


class FailingBackend(InpaintBackend):
    name = 'failing'

    def render(self, request):
        raise BackendUnavailableError("sin servicio")


class StageTestMixin:
    def setUp(self):
        """Configuración inicial"""
        self.scene = mini_scene('000001')
        self.image = paint_scene_image(self.scene.labels)
        removable = select_removable(self.scene, SelectionCriteria())
        plans, _ = plan_scene(self.scene, removable, 'Cyclist', fixed_stats(), np.random.default_rng(0))
        self.plan = plans[0]
        self.backend = SyntheticBackend()
        self.judge = MockJudge()
        self.exemplars = (render_exemplar_panel('Cyclist', 'positive'), render_exemplar_panel('Cyclist', 'negative'))

    def remove(self, judge=None, backend=None):
        return run_removal_stage(
            self.image, self.scene.labels, self.plan, backend or self.backend, judge or self.judge, m=3, k=1,
        )

    def insert(self, image, labels, plan=None, options=GenerationOptions()):
        plan = plan or self.plan
        return run_insertion_stage(
            image, labels, plan, self.backend, self.judge, m=4, k=1,
            exemplars=self.exemplars,
            reference_crop=self.image[plan.crop.rect[1]:plan.crop.rect[3], plan.crop.rect[0]:plan.crop.rect[2]],
            options=options,
        )


class RemovalStageTest(StageTestMixin, SimpleTestCase):
    """Tests para run_removal_stage"""

    def test_pixels_outside_crop_unchanged(self):
        """Test: Fuera de la ventana de eliminación la imagen es idéntica"""
        result = self.remove()
        left, top, right, bottom = self.plan.crop.rect

        outside = np.ones(self.image.shape[:2], dtype=bool)
        outside[top:bottom, left:right] = False
        self.assertEqual(len(result.images), 1)
        np.testing.assert_array_equal(result.images[0][outside], self.image[outside])

    def test_object_region_repainted(self):
        """Test: La región del auto eliminado cambia"""
        result = self.remove()
        left, top, right, bottom = (int(v) for v in self.plan.removed_label.bbox2d)

        self.assertFalse(np.array_equal(
            result.images[0][top + 5:bottom - 5, left + 5:right - 5],
            self.image[top + 5:bottom - 5, left + 5:right - 5],
        ))

    def test_removed_label_dropped(self):
        """Test: La etiqueta del objeto eliminado desaparece"""
        result = self.remove()

        self.assertEqual(len(result.labels), len(self.scene.labels) - 1)
        self.assertNotIn(self.plan.removed_label, result.labels)
        self.assertEqual(result.tallies(), {'removal_quality': {'judged': 3, 'accepted': 3}})

    def test_no_survivors_returns_nothing(self):
        """Test: Si el juez rechaza todo la etapa no devuelve imágenes"""
        result = self.remove(judge=MockJudge(score_floor=11))

        self.assertTrue(result.flagged)
        self.assertEqual(result.images, [])

    def test_backend_error_becomes_stage_error(self):
        """Test: Un backend caído se reporta como StageError"""
        with self.assertRaises(StageError):
            self.remove(backend=FailingBackend())


class InsertionStageTest(StageTestMixin, SimpleTestCase):
    """Tests para run_insertion_stage"""

    def setUp(self):
        """Configuración inicial"""
        super().setUp()
        removal = self.remove()
        self.removed_image = removal.images[0]
        self.removed_labels = removal.labels

    def test_new_label_invariants(self):
        """Test: La etiqueta insertada es entera, visible y coherente con su pose"""
        result = self.insert(self.removed_image, self.removed_labels)
        label = result.labels[-1]

        self.assertEqual(len(result.images), 1)
        self.assertEqual(label.class_name, 'Cyclist')
        self.assertEqual(label.truncation, 0.0)
        self.assertEqual(label.occlusion, 0)
        self.assertEqual(label.location, self.plan.removed_label.location)
        self.assertAlmostEqual(label.alpha, alpha_from_pose(label.location, label.rotation_y))
        check_scene(Scene(image_id='aug', image_size=self.scene.image_size, labels=result.labels,
                          calib=self.scene.calib))

    def test_pixels_outside_insertion_crop_unchanged(self):
        """Test: La inserción solo toca su ventana"""
        result = self.insert(self.removed_image, self.removed_labels)
        left, top, right, bottom = self.plan.insertion.crop.rect

        outside = np.ones(self.image.shape[:2], dtype=bool)
        outside[top:bottom, left:right] = False
        np.testing.assert_array_equal(result.images[0][outside], self.removed_image[outside])

    def flipped_plan(self):
        removed = self.plan.removed_label
        return replace(self.plan, removed_label=removed.with_changes(
            rotation_y=wrap_angle(removed.rotation_y + math.pi),
        ))

    def test_viewpoint_mismatch_rejected(self):
        """Test: Un objeto eliminado mirando hacia el otro lado hace fallar el juez de punto de vista"""
        result = self.insert(self.removed_image, self.removed_labels, plan=self.flipped_plan())

        self.assertTrue(result.flagged)
        self.assertEqual(result.images, [])
        self.assertEqual(result.tallies()['viewpoint_consistency']['accepted'], 0)

    def test_head_sector_from_pose(self):
        """Test: El sector del objeto eliminado sale de su pose, no de la alpha guardada"""
        removed = self.plan.removed_label
        stale = replace(self.plan, removed_label=removed.with_changes(alpha=wrap_angle(removed.alpha + math.pi)))

        result = self.insert(self.removed_image, self.removed_labels, plan=stale)

        self.assertEqual(len(result.images), 1)
        self.assertEqual(result.tallies()['viewpoint_consistency']['accepted'],
                         result.tallies()['viewpoint_consistency']['judged'])

    def test_disabled_viewpoint_judge(self):
        """Test: Con el juez de punto de vista apagado el mismo caso pasa"""
        options = GenerationOptions(disabled=frozenset({Protocol.VIEWPOINT_CONSISTENCY}))

        result = self.insert(self.removed_image, self.removed_labels, plan=self.flipped_plan(), options=options)

        self.assertEqual(len(result.images), 1)
        self.assertNotIn('viewpoint_consistency', result.tallies())

    def test_aligned_candidate_selected(self):
        """Test: Se conserva el candidato sin desplazamiento, alineado con la caja proyectada"""
        result = self.insert(self.removed_image, self.removed_labels)
        geometric = result.candidate_set.verdicts[Protocol.GEOMETRIC_PLAUSIBILITY]

        self.assertTrue(geometric[0].accepted)
        self.assertEqual(result.selected, [0])


class RunConfigTest(SimpleTestCase):
    """Tests para load_run_config"""

    def setUp(self):
        """Configuración inicial"""
        self.base = {'dataset_dir': '/data/kitti', 'output_dir': '/data/out'}

    def test_defaults(self):
        """Test: Los valores por defecto producen una configuración válida"""
        config = load_run_config(overrides=self.base)

        self.assertEqual(config.head_class, 'Car')
        self.assertEqual(config.tail_classes, ['Cyclist', 'Pedestrian'])
        self.assertEqual(config.removal.m, 10)
        self.assertEqual(config.insertion.m, 30)
        self.assertEqual(config.variants, 1)

    def test_unknown_key_rejected(self):
        """Test: Una clave desconocida es un error de validación"""
        with self.assertRaises(ValidationError):
            load_run_config(overrides={**self.base, 'temperature': 0.5})

    def test_unknown_nested_key_rejected(self):
        """Test: Las claves desconocidas también se rechazan en los anidados"""
        with self.assertRaises(ValidationError):
            load_run_config(overrides={**self.base, 'removal': {'m': 5, 'top_k': 1}})

    def test_k_greater_than_m_rejected(self):
        """Test: k > m es un error"""
        with self.assertRaises(ValidationError):
            load_run_config(overrides={**self.base, 'insertion': {'m': 2, 'k': 3}})

    def test_head_class_cannot_be_tail(self):
        """Test: La clase cabeza no puede aparecer en la mezcla"""
        with self.assertRaises(ValidationError):
            load_run_config(overrides={**self.base, 'class_mix': {'Car': 1.0}})

    @override_settings(LTDA_LLM_URL='')
    def test_remote_judge_requires_url(self):
        """Test: El juez remoto sin LTDA_LLM_URL falla al validar"""
        with self.assertRaisesMessage(ValidationError, 'LTDA_LLM_URL'):
            load_run_config(overrides={**self.base, 'judge_backend': 'remote'})

    def test_mock_judge_with_wire_backend_rejected(self):
        """Test: El juez mock no se combina con el backend remoto"""
        with self.assertRaises(ValidationError):
            load_run_config(overrides={**self.base, 'inpaint_backend': 'wire'})

    def test_file_and_overrides(self):
        """Test: Las opciones de línea de comandos pisan el archivo; los None se ignoran"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'run.json'
            path.write_text(json.dumps({**self.base, 'seed': 3, 'workers': 2}))

            config = load_run_config(path, overrides={'seed': 5, 'workers': None})

        self.assertEqual(config.seed, 5)
        self.assertEqual(config.workers, 2)

    def test_missing_file(self):
        """Test: Un archivo inexistente es un ConfigError"""
        with self.assertRaises(ConfigError):
            load_run_config('/no/existe.json')

    def test_ablation_filters(self):
        """Test: Los filtros apagados quedan fuera de la cadena"""
        config = load_run_config(overrides={**self.base, 'filters': {'geometric_plausibility': False}})
        options = config.generation_options()

        self.assertEqual(options.disabled, frozenset({Protocol.GEOMETRIC_PLAUSIBILITY}))


class AugmentDatasetTest(TestCase):
    """Tests para augment_dataset sobre el mini-dataset"""

    def setUp(self):
        """Configuración inicial"""
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.tmp = Path(tmp.name)
        self.dataset = build_mini_dataset(self.tmp / 'kitti')
        build_exemplars(self.tmp / 'exemplars', ['Cyclist', 'Pedestrian'])

    def config(self, output='out', **overrides):
        data = {
            'dataset_dir': str(self.dataset),
            'output_dir': str(self.tmp / output),
            'exemplar_dir': str(self.tmp / 'exemplars'),
            'class_mix': {'Cyclist': 1.0},
            'targets': {'Cyclist': 2},
            'removal': {'m': 3},
            'insertion': {'m': 4},
            'workers': 2,
        }
        data.update(overrides)
        return load_run_config(overrides=data)

    def read_image(self, path):
        with Image.open(path) as image:
            return np.asarray(image.convert('RGB'))

    def test_targets_reached(self):
        """Test: Se insertan exactamente los ciclistas pedidos"""
        run, report = augment_dataset(self.config())

        self.assertEqual(run.status, AugmentRun.Status.COMPLETED)
        self.assertEqual(report.inserted, {'Cyclist': 2})
        self.assertEqual(report.removed, {'Car': 2})
        self.assertEqual(report.variants, ['000001_aug0', '000003_aug0'])
        self.assertEqual(report.scenes['eligible'], 3)
        self.assertEqual(report.scenes['augmented'], 2)
        self.assertEqual(
            report.after.counts['Cyclist'] - report.before.counts['Cyclist'],
            sum(report.inserted.values()),
        )

    def test_class_shares_shift(self):
        """Test: Baja la participación de autos y sube la de ciclistas"""
        _, report = augment_dataset(self.config())

        self.assertEqual(report.before.counts, {'Car': 6, 'Pedestrian': 3, 'Cyclist': 2})
        self.assertEqual(report.after.counts, {'Car': 7, 'Pedestrian': 4, 'Cyclist': 4})
        self.assertLess(report.after.shares['Car'], report.before.shares['Car'])
        self.assertGreater(report.after.shares['Cyclist'], report.before.shares['Cyclist'])

    def test_copied_objects_reported(self):
        """Test: La diferencia después - antes es insertados más los objetos copiados a las variantes"""
        _, report = augment_dataset(self.config())

        self.assertEqual(report.copied, {'Car': 1, 'Pedestrian': 1, 'Cyclist': 0})
        for name, count in report.after.counts.items():
            self.assertEqual(
                count - report.before.counts[name],
                report.inserted.get(name, 0) + report.copied[name],
            )

    def test_copied_tail_instances(self):
        """Test: Un peatón que ya estaba en la escena cuenta como copiado, no como insertado"""
        _, report = augment_dataset(self.config(class_mix={'Pedestrian': 1.0}, targets={'Pedestrian': 1}))

        self.assertEqual(report.variants, ['000001_aug0'])
        self.assertEqual(report.inserted, {'Pedestrian': 1})
        self.assertEqual(report.copied['Pedestrian'], 1)
        self.assertEqual(report.after.counts['Pedestrian'] - report.before.counts['Pedestrian'], 2)

    def test_outputs_written(self):
        """Test: Las variantes pasan las validaciones de escena y los originales se copian intactos"""
        augment_dataset(self.config())
        output = self.tmp / 'out'

        scene = load_scene(output, '000001_aug0')
        check_scene(scene)
        self.assertEqual(scene.labels[-1].class_name, 'Cyclist')
        self.assertNotIn('Car', [label.class_name for label in scene.labels])
        self.assertTrue((output / 'label_2' / '000002.txt').exists())
        self.assertEqual(
            (self.dataset / 'label_2' / '000001.txt').read_text(),
            (MINI_DATASET_DIR / 'label_2' / '000001.txt').read_text(),
        )

    def test_same_seed_same_output(self):
        """Test: Dos corridas con la misma semilla producen los mismos archivos"""
        augment_dataset(self.config(output='a', run_name='run-a'))
        augment_dataset(self.config(output='b', run_name='run-b'))

        for variant in ('000001_aug0', '000003_aug0'):
            np.testing.assert_array_equal(
                self.read_image(self.tmp / 'a' / 'image_2' / f'{variant}.png'),
                self.read_image(self.tmp / 'b' / 'image_2' / f'{variant}.png'),
            )
            self.assertEqual(
                (self.tmp / 'a' / 'label_2' / f'{variant}.txt').read_text(),
                (self.tmp / 'b' / 'label_2' / f'{variant}.txt').read_text(),
            )

    def test_resume_matches_uninterrupted(self):
        """Test: Interrumpir y retomar da el mismo resultado que una corrida completa"""
        run, partial = augment_dataset(self.config(output='a', run_name='run-a'), limit=1)
        self.assertEqual(run.status, AugmentRun.Status.RUNNING)
        self.assertEqual(partial.scenes['pending'], 1)

        run, resumed = augment_dataset(self.config(output='a', run_name='run-a'))
        _, full = augment_dataset(self.config(output='b', run_name='run-b'))

        self.assertEqual(run.status, AugmentRun.Status.COMPLETED)
        self.assertEqual(resumed.scenes['resumed'], 1)
        self.assertEqual(resumed.variants, full.variants)
        self.assertEqual(resumed.after, full.after)
        self.assertEqual(resumed.inserted, full.inserted)
        self.assertEqual(SceneRecord.objects.filter(run=run).count(), 2)
        np.testing.assert_array_equal(
            self.read_image(self.tmp / 'a' / 'image_2' / '000003_aug0.png'),
            self.read_image(self.tmp / 'b' / 'image_2' / '000003_aug0.png'),
        )

    def test_changed_config_requires_reset(self):
        """Test: Retomar con otra configuración exige reset"""
        augment_dataset(self.config(), limit=1)

        with self.assertRaises(ConfigError):
            open_run(self.config(seed=7))

        run = open_run(self.config(seed=7), reset=True)
        self.assertEqual(run.scenes.count(), 0)
        self.assertFalse((self.tmp / 'out' / 'label_2' / '000001_aug0.txt').exists())

    def test_worker_count_does_not_block_resume(self):
        """Test: Cambiar la cantidad de workers no invalida la corrida"""
        augment_dataset(self.config(), limit=1)

        run, report = augment_dataset(self.config(workers=1))

        self.assertEqual(run.status, AugmentRun.Status.COMPLETED)
        self.assertEqual(report.scenes['augmented'], 2)

    def test_rejecting_judge_skips_scenes(self):
        """Test: Sin sobrevivientes las escenas se omiten y no se escriben variantes"""
        _, report = augment_dataset(self.config(), judge=MockJudge(score_floor=11))

        self.assertEqual(report.scenes['augmented'], 0)
        self.assertEqual(report.scenes['skipped'], 2)
        self.assertEqual(report.skip_fraction, 1.0)
        self.assertEqual(report.variants, [])
        self.assertEqual(report.after, report.before)
        self.assertFalse((self.tmp / 'out' / 'image_2' / '000001_aug0.png').exists())

    def test_dry_run_plans_only(self):
        """Test: El plan en seco no escribe archivos"""
        plans = AugmentRunner(self.config()).plan()

        self.assertEqual([plan.scene_id for plan in plans], ['000001', '000003'])
        self.assertTrue(all(plan.insertion.tail_class == 'Cyclist' for plan in plans))
        self.assertFalse((self.tmp / 'out').exists())

    def test_missing_exemplars(self):
        """Test: Sin paneles de ejemplo la corrida falla antes de procesar escenas"""
        config = self.config(exemplar_dir=str(self.tmp / 'vacio'))

        with self.assertRaises(ExemplarMissingError):
            augment_dataset(config)

        run = AugmentRun.objects.get(name=config.run_name)
        self.assertEqual(run.status, AugmentRun.Status.FAILED)
        self.assertEqual(run.scenes.count(), 0)

    def test_report_serializes(self):
        """Test: El reporte queda guardado como JSON en la corrida"""
        run, report = augment_dataset(self.config())
        run.refresh_from_db()

        self.assertEqual(run.report['after']['counts']['Cyclist'], 4)
        self.assertEqual(run.report['judges']['removal_quality']['accepted'], 6)
        self.assertEqual(json.loads(json.dumps(report.to_dict())), run.report)
