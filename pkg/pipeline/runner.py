"""
Corrida de aumento sobre un dataset KITTI.

Las escenas se procesan en paralelo (una tarea por escena, con su propio
generador aleatorio); los resultados vuelven al hilo principal, que es el
único que escribe el manifiesto (SceneRecord) y arma el reporte.
"""

import logging
import shutil
from collections import Counter
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from dim_sampler.cache import load_or_build_stats
from dim_sampler.stats import scene_rng
from gen_backend.synthetic import SyntheticBackend
from gen_backend.wire import WireInpaintBackend
from geom3d.crops import extract_crop
from kitti_io.dataset import (
    CALIB_DIR, IMAGE_DIR, IMAGE_EXT, LABEL_DIR, DatasetStats, Scene, check_scene,
    dataset_stats, list_scene_ids, load_scene, read_split,
)
from kitti_io.labels import write_label_file
from llm_filter.exemplars import load_exemplars
from llm_filter.judges import MockJudge
from llm_filter.remote import RemoteJudge
from llm_filter.types import Protocol

from .exceptions import ConfigError, StageError
from .models import AugmentRun, SceneRecord
from .planning import generation_seed, plan_scene
from .selection import select_removable
from .serializers import AugmentReportSerializer
from .stages import run_insertion_stage, run_removal_stage

logger = logging.getLogger(__name__)

# Opciones que pueden cambiar al retomar una corrida sin alterar sus resultados
RESUME_IGNORED_KEYS = {'workers', 'max_skip_fraction', 'max_in_flight', 'llm_rpm', 'stats_cache'}


def build_backend(config):
    if config.inpaint_backend == 'wire':
        return WireInpaintBackend.from_settings(
            max_in_flight=config.max_in_flight,
            max_candidates_per_request=config.max_candidates_per_request,
        )
    return SyntheticBackend(jitter_px=config.jitter_px, noise_std=config.noise_std)


def build_judge(config):
    if config.judge_backend == 'remote':
        return RemoteJudge.from_settings(rpm=config.llm_rpm)
    return MockJudge(
        score_floor=config.score_floor,
        iou_threshold=config.iou_threshold,
        viewpoint_tolerance=config.viewpoint_tolerance,
    )


@dataclass
class SceneTask:
    scene: Scene
    removable: list
    tail_class: str
    rng: object  # np.random.Generator de la escena

    @property
    def scene_id(self):
        return self.scene.image_id


@dataclass
class SceneOutcome:
    scene_id: str
    tail_class: str
    status: str = SceneRecord.Status.SKIPPED
    variant_ids: list = field(default_factory=list)
    removed_counts: Counter = field(default_factory=Counter)
    inserted_counts: Counter = field(default_factory=Counter)
    class_counts: Counter = field(default_factory=Counter)
    judge_tallies: dict = field(default_factory=dict)
    plan_failures: int = 0
    stage_failures: int = 0
    detail: str = ''

    def add_tallies(self, tallies):
        for protocol, counts in tallies.items():
            current = self.judge_tallies.setdefault(protocol, {'judged': 0, 'accepted': 0})
            current['judged'] += counts['judged']
            current['accepted'] += counts['accepted']


@dataclass
class AugmentReport:
    run_name: str
    before: DatasetStats
    after: DatasetStats
    removed: dict
    inserted: dict
    copied: dict
    scenes: dict
    plan_failures: int
    stage_failures: int
    judges: dict
    variants: list
    skip_fraction: float

    def to_dict(self):
        return AugmentReportSerializer(self).data


def assign_tail_classes(eligible, class_mix, targets, seed):
    """
    Clase cola de cada escena elegible, en orden de ID.

    La clase se sortea con el generador de la escena, ponderada por
    ``class_mix`` entre las clases cuya cuota (``targets``) no está llena.
    Las cuotas cuentan escenas intentadas.

    Args:
        eligible (list): pares (Scene, objetos reemplazables)

    Returns:
        list[SceneTask]
    """
    filled = Counter()
    tasks = []
    for scene, removable in sorted(eligible, key=lambda item: item[0].image_id):
        available = [
            name for name, weight in class_mix.items()
            if weight > 0 and (name not in targets or filled[name] < targets[name])
        ]
        if not available:
            break

        rng = scene_rng(seed, scene.image_id)
        weights = np.array([class_mix[name] for name in available], dtype=float)
        tail_class = available[int(rng.choice(len(available), p=weights / weights.sum()))]
        filled[tail_class] += 1
        tasks.append(SceneTask(scene=scene, removable=removable, tail_class=tail_class, rng=rng))
    return tasks


class AugmentRunner:
    """
    Ejecuta (o solo planea) el aumento descrito por un RunConfig.

    Args:
        config (RunConfig): configuración validada
        backend (InpaintBackend): por defecto, el que indique la configuración
        judge (Judge): por defecto, el que indique la configuración
    """

    def __init__(self, config, backend=None, judge=None):
        self.config = config
        self.backend = backend or build_backend(config)
        self.judge = judge or build_judge(config)
        self.options = config.generation_options()
        self.source = Path(config.dataset_dir)
        self.output = Path(config.output_dir)

    def scene_ids(self):
        if self.config.split:
            return read_split(self.config.split)
        return list_scene_ids(self.source)

    def load_tasks(self, ids):
        """Escenas elegibles (al menos un objeto reemplazable) y sus tareas."""
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            scenes = list(pool.map(lambda image_id: load_scene(self.source, image_id), ids))

        eligible = []
        for scene in scenes:
            removable = select_removable(scene, self.config.criteria)
            if removable:
                eligible.append((scene, removable))
        tasks = assign_tail_classes(eligible, self.config.class_mix, self.config.targets, self.config.seed)
        return eligible, tasks

    def dim_stats(self, ids):
        return load_or_build_stats(
            self.source / LABEL_DIR, self.config.tail_classes, cache_path=self.config.stats_cache, ids=ids,
        )

    def exemplars(self):
        """
        Paneles por clase cola; solo se cargan si el juez geométrico está activo.

        Raises:
            ExemplarMissingError: si faltan paneles
        """
        if Protocol.GEOMETRIC_PLAUSIBILITY in self.options.disabled:
            return {}
        return {name: load_exemplars(self.config.exemplar_dir, name) for name in self.config.tail_classes}

    def plan(self):
        """Planes de todas las escenas asignadas, sin llamar a ningún backend."""
        ids = self.scene_ids()
        stats = self.dim_stats(ids)
        _, tasks = self.load_tasks(ids)
        plans = []
        for task in tasks:
            scene_plans, _ = self._plan_task(task, stats)
            plans.extend(scene_plans)
        return plans

    def run(self, run_record, limit=None):
        """
        Procesa las escenas pendientes de ``run_record`` y arma el reporte.

        Las escenas ya completadas u omitidas se saltan; las fallidas se
        reintentan.

        Args:
            limit (int): procesa a lo sumo esta cantidad de escenas pendientes

        Returns:
            AugmentReport
        """
        ids = self.scene_ids()
        exemplars = self.exemplars()
        before = dataset_stats(self.source / LABEL_DIR, self.config.classes, ids=ids, workers=self.config.workers)
        stats = self.dim_stats(ids)
        eligible, tasks = self.load_tasks(ids)

        run_record.scenes.filter(status=SceneRecord.Status.FAILED).delete()
        done = set(run_record.scenes.values_list('scene_id', flat=True))
        pending = [task for task in tasks if task.scene_id not in done]
        resumed = len(tasks) - len(pending)
        if resumed:
            logger.info("Se retoma la corrida %s: %d escenas ya procesadas", run_record.name, resumed,
                        extra={'resumed': resumed})
        if limit is not None:
            pending = pending[:limit]

        self._prepare_output(ids)
        with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
            futures = [pool.submit(self.process_scene, task, stats, exemplars) for task in pending]
            for future in as_completed(futures):
                self._record(run_record, future.result())

        return self.build_report(run_record, before, eligible=len(eligible), total=len(tasks), resumed=resumed)

    def _prepare_output(self, ids):
        for name in (LABEL_DIR, CALIB_DIR, IMAGE_DIR):
            (self.output / name).mkdir(parents=True, exist_ok=True)
        if not self.config.copy_originals:
            return
        for image_id in ids:
            for name, ext in ((LABEL_DIR, '.txt'), (CALIB_DIR, '.txt'), (IMAGE_DIR, IMAGE_EXT)):
                target = self.output / name / f'{image_id}{ext}'
                if not target.exists():
                    shutil.copyfile(self.source / name / f'{image_id}{ext}', target)

    def _plan_task(self, task, stats):
        return plan_scene(
            task.scene, task.removable, task.tail_class, stats[task.tail_class], task.rng,
            crop_scale=self.config.crop_scale,
            retries=self.config.plan_retries,
            overlap_iou_max=self.config.overlap_iou_max,
        )

    def process_scene(self, task, stats, exemplars):
        """Procesa una escena; nunca lanza, los errores quedan en el SceneOutcome."""
        logger.debug("Escena %s: clase cola %s", task.scene_id, task.tail_class,
                     extra={'scene_id': task.scene_id, 'stage': 'start'})
        try:
            return self._process(task, stats, exemplars)
        except Exception as exc:
            logger.exception("Escena %s fallida", task.scene_id, extra={'scene_id': task.scene_id})
            return SceneOutcome(
                scene_id=task.scene_id, tail_class=task.tail_class,
                status=SceneRecord.Status.FAILED, detail=str(exc),
            )

    def _process(self, task, stats, exemplars):
        config = self.config
        scene = task.scene
        outcome = SceneOutcome(scene_id=task.scene_id, tail_class=task.tail_class)

        plans, outcome.plan_failures = self._plan_task(task, stats)
        if not plans:
            outcome.detail = "Ningún objeto con plan de inserción"
            return outcome

        with Image.open(self.source / IMAGE_DIR / f'{scene.image_id}{IMAGE_EXT}') as handle:
            image = np.array(handle.convert('RGB'))

        for variant in range(config.variants):
            current, labels = image, list(scene.labels)
            removed, inserted = [], []

            for plan in plans:
                try:
                    removal = run_removal_stage(
                        current, labels, plan, self.backend, self.judge,
                        config.removal.m, config.removal.k,
                        seed=generation_seed(config.seed, scene.image_id, plan.object_index, 'removal'),
                        options=self.options,
                    )
                    if variant == 0:
                        outcome.add_tallies(removal.tallies())
                    if variant >= len(removal.images):
                        continue

                    insertion = run_insertion_stage(
                        removal.images[variant], removal.labels, plan, self.backend, self.judge,
                        config.insertion.m, config.insertion.k,
                        exemplars=exemplars.get(task.tail_class),
                        reference_crop=extract_crop(image, plan.crop),
                        seed=generation_seed(config.seed, scene.image_id, plan.object_index, 'insertion'),
                        options=self.options,
                    )
                    if variant == 0:
                        outcome.add_tallies(insertion.tallies())
                except StageError as exc:
                    outcome.stage_failures += 1
                    logger.warning("%s", exc, extra={'scene_id': scene.image_id, 'stage': 'stage'})
                    continue

                # Sin sobrevivientes el objeto queda intacto en esta variante
                if variant >= len(insertion.images):
                    continue
                current, labels = insertion.images[variant], insertion.labels
                removed.append(plan.head_class)
                inserted.append(task.tail_class)

            if inserted:
                variant_id = f'{scene.image_id}_aug{variant}'
                self._write_variant(scene, variant_id, current, labels)
                outcome.variant_ids.append(variant_id)
                outcome.removed_counts.update(removed)
                outcome.inserted_counts.update(inserted)
                outcome.class_counts.update(label.class_name for label in labels if not label.is_dontcare)

        if outcome.variant_ids:
            outcome.status = SceneRecord.Status.COMPLETED
        else:
            outcome.detail = "Ningún objeto superó los filtros"
        return outcome

    def _write_variant(self, scene, variant_id, image, labels):
        check_scene(Scene(image_id=variant_id, image_size=scene.image_size, labels=labels, calib=scene.calib))
        write_label_file(labels, self.output / LABEL_DIR / f'{variant_id}.txt')
        shutil.copyfile(self.source / CALIB_DIR / f'{scene.image_id}.txt', self.output / CALIB_DIR / f'{variant_id}.txt')
        Image.fromarray(image).save(self.output / IMAGE_DIR / f'{variant_id}{IMAGE_EXT}')

    def _record(self, run_record, outcome):
        SceneRecord.objects.update_or_create(
            run=run_record,
            scene_id=outcome.scene_id,
            defaults={
                'status': outcome.status,
                'tail_class': outcome.tail_class,
                'variant_ids': outcome.variant_ids,
                'removed_counts': dict(outcome.removed_counts),
                'inserted_counts': dict(outcome.inserted_counts),
                'class_counts': dict(outcome.class_counts),
                'judge_tallies': outcome.judge_tallies,
                'plan_failures': outcome.plan_failures,
                'stage_failures': outcome.stage_failures,
                'detail': outcome.detail,
            },
        )
        level = logging.INFO if outcome.status == SceneRecord.Status.COMPLETED else logging.WARNING
        logger.log(
            level, "Escena %s: %s %s", outcome.scene_id, outcome.status, outcome.detail,
            extra={
                'scene_id': outcome.scene_id, 'status': str(outcome.status),
                'variants': len(outcome.variant_ids), 'tail_class': outcome.tail_class,
            },
        )

    def build_report(self, run_record, before, eligible, total, resumed):
        records = list(run_record.scenes.all())
        classes = list(self.config.classes)

        augmented, removed, inserted = Counter(), Counter(), Counter()
        judges = {}
        for record in records:
            augmented.update(record.class_counts)
            removed.update(record.removed_counts)
            inserted.update(record.inserted_counts)
            for protocol, counts in record.judge_tallies.items():
                current = judges.setdefault(protocol, {'judged': 0, 'accepted': 0})
                current['judged'] += counts['judged']
                current['accepted'] += counts['accepted']
        for counts in judges.values():
            counts['acceptance_rate'] = round(counts['accepted'] / counts['judged'], 4) if counts['judged'] else None

        statuses = Counter(record.status for record in records)
        attempted = len(records)
        not_augmented = statuses[SceneRecord.Status.SKIPPED] + statuses[SceneRecord.Status.FAILED]
        after = before.merge(DatasetStats(counts={name: augmented.get(name, 0) for name in classes}))
        # Objetos originales que viajan a las variantes: after - before = inserted + copied
        copied = {name: augmented.get(name, 0) - inserted.get(name, 0) for name in classes}

        return AugmentReport(
            run_name=run_record.name,
            before=before,
            after=after,
            removed=dict(removed),
            inserted=dict(inserted),
            copied=copied,
            scenes={
                'eligible': eligible,
                'attempted': attempted,
                'augmented': statuses[SceneRecord.Status.COMPLETED],
                'skipped': statuses[SceneRecord.Status.SKIPPED],
                'failed': statuses[SceneRecord.Status.FAILED],
                'resumed': resumed,
                'pending': total - attempted,
            },
            plan_failures=sum(record.plan_failures for record in records),
            stage_failures=sum(record.stage_failures for record in records),
            judges=judges,
            variants=sorted(variant for record in records for variant in record.variant_ids),
            skip_fraction=not_augmented / attempted if attempted else 0.0,
        )


def _fingerprint(config):
    return {key: value for key, value in config.as_json().items() if key not in RESUME_IGNORED_KEYS}


def open_run(config, reset=False):
    """
    Devuelve el AugmentRun de ``config.run_name``, creándolo si no existe.

    Con ``reset`` borra el manifiesto previo y las variantes que escribió.

    Raises:
        ConfigError: si la corrida existe con otra configuración y no se pidió reset
    """
    fingerprint = _fingerprint(config)
    run_record, created = AugmentRun.objects.get_or_create(
        name=config.run_name, defaults={'seed': config.seed, 'config': fingerprint},
    )
    if created:
        return run_record

    if reset:
        output = Path(config.output_dir)
        for record in run_record.scenes.all():
            for variant_id in record.variant_ids:
                for name, ext in ((LABEL_DIR, '.txt'), (CALIB_DIR, '.txt'), (IMAGE_DIR, IMAGE_EXT)):
                    (output / name / f'{variant_id}{ext}').unlink(missing_ok=True)
        deleted, _ = run_record.scenes.all().delete()
        logger.info("Manifiesto de %s borrado (%d registros)", run_record.name, deleted)
        run_record.seed = config.seed
        run_record.config = fingerprint
        run_record.status = AugmentRun.Status.RUNNING
        run_record.report = None
        run_record.save()
        return run_record

    if run_record.config != fingerprint:
        raise ConfigError(
            f"La corrida {run_record.name} ya existe con otra configuración; use --reset o otro --run-name"
        )
    return run_record


def augment_dataset(config, backend=None, judge=None, reset=False, limit=None):
    """
    Corre el aumento completo y guarda el reporte en el AugmentRun.

    Returns:
        tuple[AugmentRun, AugmentReport]
    """
    runner = AugmentRunner(config, backend=backend, judge=judge)
    run_record = open_run(config, reset=reset)
    try:
        report = runner.run(run_record, limit=limit)
    except Exception:
        run_record.status = AugmentRun.Status.FAILED
        run_record.save(update_fields=['status', 'updated_at'])
        raise

    run_record.report = report.to_dict()
    pending = report.scenes['pending']
    run_record.status = AugmentRun.Status.RUNNING if pending else AugmentRun.Status.COMPLETED
    run_record.save()
    logger.info(
        "Corrida %s: %d escenas aumentadas, %d omitidas, %d pendientes", run_record.name,
        report.scenes['augmented'], report.scenes['skipped'], pending,
        extra={'run': run_record.name, **report.scenes},
    )
    return run_record, report
