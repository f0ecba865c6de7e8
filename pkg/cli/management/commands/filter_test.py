"""
Corre el plan y las dos etapas sobre un solo objeto e imprime el veredicto de
cada candidato. Sirve para calibrar umbrales y prompts sin procesar un
dataset completo.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from dim_sampler.cache import load_or_build_stats
from dim_sampler.stats import scene_rng
from geom3d.crops import extract_crop
from kitti_io.dataset import IMAGE_DIR, IMAGE_EXT, LABEL_DIR, load_scene
from llm_filter.exemplars import load_exemplars
from llm_filter.types import Protocol
from pipeline.config import load_run_config
from pipeline.exceptions import PipelineError, PlanningError
from pipeline.planning import generation_seed, plan_scene
from pipeline.runner import build_backend, build_judge
from pipeline.selection import select_removable
from pipeline.serializers import EditPlanSerializer
from pipeline.stages import run_insertion_stage, run_removal_stage

from cli.base import LtdaCommand


def describe_stage(result):
    """Veredictos por candidato, selección y tallies de una etapa."""
    candidate_set = result.candidate_set
    candidates = []
    for index in candidate_set.indices:
        verdicts = {}
        for protocol in result.chain:
            verdict = candidate_set.verdict(protocol, index)
            if verdict is None:
                continue
            verdicts[protocol.value] = {
                'accepted': verdict.accepted,
                'score': verdict.score,
                'explanation': verdict.explanation,
                'evaluated': verdict.evaluated,
            }
        candidates.append({'index': index, 'verdicts': verdicts})
    return {
        'candidates': candidates,
        'selected': list(candidate_set.selected),
        'flagged': candidate_set.flagged,
        'tallies': result.tallies(),
    }


class Command(LtdaCommand):
    help = "Prueba los filtros sobre un objeto de una escena e imprime los veredictos"

    def add_command_arguments(self, parser):
        parser.add_argument('--config', help="Archivo JSON de configuración")
        parser.add_argument('--dataset', required=True, help="Raíz del dataset KITTI")
        parser.add_argument('--scene', required=True, help="Id de la escena, p. ej. 000001")
        parser.add_argument('--object', type=int, dest='object_index',
                            help="Índice del objeto en la etiqueta (por defecto el primero reemplazable)")
        parser.add_argument('--class', dest='tail_class', default='Cyclist', help="Clase a insertar")
        parser.add_argument('--m', type=int, help="Candidatos por etapa")
        parser.add_argument('--judge', choices=['mock', 'remote'])
        parser.add_argument('--exemplars', help="Directorio de paneles de ejemplo")

    def run(self, **options):
        overrides = {
            'seed': options['seed'],
            'dataset_dir': options['dataset'],
            'output_dir': options['dataset'],
            'judge_backend': options['judge'],
            'exemplar_dir': options['exemplars'],
            'class_mix': {options['tail_class']: 1.0},
        }
        if options['m'] is not None:
            overrides['removal'] = {'m': options['m'], 'k': 1}
            overrides['insertion'] = {'m': options['m'], 'k': 1}
        config = load_run_config(options['config'], overrides=overrides)
        tail_class = options['tail_class']

        scene = load_scene(config.dataset_dir, options['scene'])
        if options['object_index'] is None:
            removable = select_removable(scene, config.criteria)
            if not removable:
                raise PipelineError(f"La escena {scene.image_id} no tiene objetos {config.head_class} reemplazables")
            target = removable[0]
        else:
            if not 0 <= options['object_index'] < len(scene.labels):
                raise PipelineError(
                    f"La escena {scene.image_id} tiene {len(scene.labels)} objetos, "
                    f"no existe el índice {options['object_index']}"
                )
            target = scene.labels[options['object_index']]

        stats = load_or_build_stats(
            Path(config.dataset_dir) / LABEL_DIR, [tail_class], cache_path=config.stats_cache,
        )[tail_class]
        plans, _ = plan_scene(
            scene, [target], tail_class, stats, scene_rng(config.seed, scene.image_id),
            crop_scale=config.crop_scale, retries=config.plan_retries, overlap_iou_max=config.overlap_iou_max,
        )
        if not plans:
            raise PlanningError(f"No se pudo planear la inserción de {tail_class} en {scene.image_id}")
        plan = plans[0]

        generation = config.generation_options()
        exemplars = None
        if Protocol.GEOMETRIC_PLAUSIBILITY not in generation.disabled:
            exemplars = load_exemplars(config.exemplar_dir, tail_class)
        backend, judge = build_backend(config), build_judge(config)

        with Image.open(Path(config.dataset_dir) / IMAGE_DIR / f'{scene.image_id}{IMAGE_EXT}') as handle:
            image = np.array(handle.convert('RGB'))

        removal = run_removal_stage(
            image, scene.labels, plan, backend, judge, config.removal.m, 1,
            seed=generation_seed(config.seed, scene.image_id, plan.object_index, 'removal'),
            options=generation,
        )
        report = {
            'plan': EditPlanSerializer(plan).data,
            'removal': describe_stage(removal),
            'insertion': None,
        }
        if removal.images:
            insertion = run_insertion_stage(
                removal.images[0], removal.labels, plan, backend, judge, config.insertion.m, 1,
                exemplars=exemplars,
                reference_crop=extract_crop(image, plan.crop),
                seed=generation_seed(config.seed, scene.image_id, plan.object_index, 'insertion'),
                options=generation,
            )
            report['insertion'] = describe_stage(insertion)
        self.write_json(report)
