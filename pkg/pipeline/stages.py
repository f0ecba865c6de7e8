"""
Etapas por objeto: eliminación (recorte → m candidatos → juez → top-k →
mezcla) e inserción (recorte de la caja proyectada → m candidatos → jueces
geométrico y de punto de vista → top-k → mezcla + etiqueta nueva).
"""

import logging
from dataclasses import dataclass, field

from gen_backend.backends import generate
from gen_backend.exceptions import BackendError
from gen_backend.guidance import DEFAULT_GUIDANCE_SCALE, DEFAULT_STEPS
from gen_backend.types import InpaintRequest
from geom3d.crops import DEFAULT_FEATHER_PX, blend_crop, extract_crop
from geom3d.orientation import alpha_from_pose, orientation_sector
from kitti_io.exceptions import LabelValidationError
from kitti_io.labels import validate_label
from llm_filter.exceptions import JudgeError
from llm_filter.judges import DEFAULT_SCORE_FLOOR
from llm_filter.queries import build_geometric_query, build_removal_query, build_viewpoint_query
from llm_filter.selection import evaluate_chain, filter_top_k
from llm_filter.types import CandidateSet, Protocol

from .exceptions import StageError

logger = logging.getLogger(__name__)

REMOVAL_CHAIN = (Protocol.REMOVAL_QUALITY,)
INSERTION_CHAIN = (Protocol.GEOMETRIC_PLAUSIBILITY, Protocol.VIEWPOINT_CONSISTENCY)


@dataclass(frozen=True)
class GenerationOptions:
    steps: int = DEFAULT_STEPS
    guidance_scale: float = DEFAULT_GUIDANCE_SCALE
    negative_prompt: str = ''
    feather_px: int = DEFAULT_FEATHER_PX
    score_floor: int = DEFAULT_SCORE_FLOOR
    # Protocolos apagados (ablación)
    disabled: frozenset = frozenset()

    def chain(self, protocols):
        return [protocol for protocol in protocols if protocol not in self.disabled]


@dataclass
class StageResult:
    """
    ``images`` tiene una imagen mezclada por candidato seleccionado, en orden
    de ranking. ``labels`` son las etiquetas de la escena después de la etapa.
    """

    candidate_set: CandidateSet
    chain: list
    images: list = field(default_factory=list)
    labels: list = field(default_factory=list)

    @property
    def selected(self):
        return self.candidate_set.selected

    @property
    def flagged(self):
        return self.candidate_set.flagged

    def tallies(self):
        """{protocolo: {'judged': n, 'accepted': n}} contando solo veredictos evaluados."""
        result = {}
        for protocol in self.chain:
            verdicts = self.candidate_set.verdicts.get(protocol, {}).values()
            evaluated = [verdict for verdict in verdicts if verdict.evaluated]
            result[protocol.value] = {
                'judged': len(evaluated),
                'accepted': sum(1 for verdict in evaluated if verdict.accepted),
            }
        return result


def _generate(image, crop, mask, prompt, m, seed, backend, options):
    request = InpaintRequest(
        crop_image=extract_crop(image, crop),
        mask=mask,
        prompt=prompt,
        negative_prompt=options.negative_prompt,
        steps=options.steps,
        guidance_scale=options.guidance_scale,
        num_candidates=m,
        seed=seed,
    )
    return request.crop_image, generate(request, backend)


def _select(candidate_set, chain, judge, build_item, k, options):
    evaluate_chain(candidate_set, chain, judge, build_item, options.score_floor)
    return filter_top_k(candidate_set, chain, k, options.score_floor)


def run_removal_stage(image, labels, plan, backend, judge, m, k, seed=0, options=GenerationOptions()):
    """
    Elimina ``plan.removed_label`` de la imagen.

    Returns:
        StageResult: imágenes I_rem (vacía si ningún candidato sobrevive) y
        etiquetas sin el objeto eliminado

    Raises:
        StageError: si el backend o el juez fallan tras sus reintentos
    """
    chain = options.chain(REMOVAL_CHAIN)
    try:
        crop_image, response = _generate(
            image, plan.crop, plan.mask, plan.removal_prompt, m, seed, backend, options,
        )
        candidate_set = _select(
            CandidateSet(candidates=response.candidates), chain, judge,
            lambda protocol, candidate: (
                build_removal_query(crop_image, candidate, plan.head_class),
                {**candidate.metadata, 'mask': plan.mask},
            ),
            k, options,
        )
    except (BackendError, JudgeError) as exc:
        raise StageError(f"{plan.scene_id}: falló la eliminación del objeto {plan.object_index}: {exc}") from exc

    result = StageResult(candidate_set=candidate_set, chain=chain)
    if candidate_set.flagged:
        logger.info(
            "%s: ningún candidato de eliminación sobrevivió", plan.scene_id,
            extra={'scene_id': plan.scene_id, 'stage': 'removal'},
        )
        return result

    result.images = [
        blend_crop(image, plan.crop, candidate_set.candidate(index).image, plan.mask, options.feather_px)
        for index in candidate_set.selected
    ]
    result.labels = [label for label in labels if label is not plan.removed_label]
    return result


def run_insertion_stage(image, labels, plan, backend, judge, m, k, exemplars, reference_crop,
                        seed=0, options=GenerationOptions()):
    """
    Inserta el objeto cola del plan sobre I_rem.

    Args:
        exemplars (tuple): paneles (positivo, negativo) de la clase cola
        reference_crop (np.ndarray): recorte original del objeto eliminado

    Returns:
        StageResult: imágenes I_aug y etiquetas con el objeto nuevo al final

    Raises:
        StageError: si el backend o el juez fallan, o la etiqueta nueva es inválida
    """
    insertion = plan.insertion
    chain = options.chain(INSERTION_CHAIN)
    projected_local = insertion.crop.to_local(insertion.bbox2d)
    corners_local = insertion.corners_local()
    base_metadata = {
        'projected_rect': projected_local,
        'object_name': insertion.tail_class,
        'head_class': plan.head_class,
        # Sector desde la pose, igual que el del objeto insertado
        'head_sector': orientation_sector(
            alpha_from_pose(plan.removed_label.location, plan.removed_label.rotation_y)
        ).value,
    }

    def build_item(protocol, candidate):
        metadata = {**candidate.metadata, **base_metadata}
        if protocol == Protocol.GEOMETRIC_PLAUSIBILITY:
            query = build_geometric_query(exemplars, candidate, corners_local, insertion.tail_class)
        else:
            query = build_viewpoint_query(reference_crop, candidate, plan.head_class, insertion.tail_class)
        return query, metadata

    try:
        new_label = validate_label(insertion.to_label())
        _, response = _generate(
            image, insertion.crop, insertion.mask, insertion.prompt, m, seed, backend, options,
        )
        candidate_set = _select(CandidateSet(candidates=response.candidates), chain, judge, build_item, k, options)
    except (BackendError, JudgeError, LabelValidationError) as exc:
        raise StageError(f"{plan.scene_id}: falló la inserción del objeto {plan.object_index}: {exc}") from exc

    result = StageResult(candidate_set=candidate_set, chain=chain)
    if candidate_set.flagged:
        logger.info(
            "%s: ningún candidato de inserción sobrevivió", plan.scene_id,
            extra={'scene_id': plan.scene_id, 'stage': 'insertion'},
        )
        return result

    result.images = [
        blend_crop(image, insertion.crop, candidate_set.candidate(index).image, insertion.mask, options.feather_px)
        for index in candidate_set.selected
    ]
    result.labels = list(labels) + [new_label]
    return result
