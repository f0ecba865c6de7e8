"""
Cadena de jueces y selección top-k.

Un candidato sobrevive si pasa todas las compuertas de la cadena: veredicto
"yes" y, en calidad de eliminación, puntaje >= ``score_floor``. Los
sobrevivientes se ordenan por puntaje descendente (en los protocolos con
puntaje) y luego por índice original ascendente.
"""

import logging
from dataclasses import replace

from .judges import DEFAULT_SCORE_FLOOR
from .types import SCORED_PROTOCOLS, Protocol, Verdict

logger = logging.getLogger(__name__)


def passes_gate(protocol, verdict, score_floor=DEFAULT_SCORE_FLOOR):
    if verdict is None or not verdict.evaluated or not verdict.accepted:
        return False
    if Protocol(protocol) in SCORED_PROTOCOLS:
        return verdict.score is not None and verdict.score >= score_floor
    return True


def evaluate_chain(candidate_set, protocol_chain, judge, build_item, score_floor=DEFAULT_SCORE_FLOOR):
    """
    Evalúa la cadena en orden; un candidato rechazado no se envía a los
    jueces siguientes y recibe un veredicto "not evaluated".

    ``build_item(protocol, candidate)`` devuelve (JudgeQuery, metadatos).
    """
    survivors = sorted(candidate_set.indices)
    for protocol in protocol_chain:
        protocol = Protocol(protocol)
        pending = [candidate_set.candidate(index) for index in survivors]
        verdicts = judge.judge_many([build_item(protocol, candidate) for candidate in pending])

        for candidate, verdict in zip(pending, verdicts):
            candidate_set.set_verdict(protocol, candidate.index, verdict)
        for index in candidate_set.indices:
            if index not in survivors:
                candidate_set.set_verdict(protocol, index, Verdict.not_evaluated())

        survivors = [
            index for index in survivors
            if passes_gate(protocol, candidate_set.verdict(protocol, index), score_floor)
        ]
        logger.debug(
            "%s: %d/%d candidatos aceptados", protocol.value, len(survivors), len(pending),
            extra={'protocol': protocol.value, 'accepted': len(survivors), 'judged': len(pending)},
        )
    return candidate_set


def filter_top_k(candidate_set, protocol_chain, k, score_floor=DEFAULT_SCORE_FLOOR):
    """
    Returns:
        CandidateSet: copia con ``selected`` (a lo sumo k índices) y
        ``flagged`` = True si ningún candidato sobrevivió

    Raises:
        ValueError: si k < 1 o falta algún veredicto de la cadena
    """
    if k < 1:
        raise ValueError(f"k debe ser >= 1, se recibió {k}")
    chain = [Protocol(protocol) for protocol in protocol_chain]

    for protocol in chain:
        for index in candidate_set.indices:
            if candidate_set.verdict(protocol, index) is None:
                raise ValueError(f"Falta el veredicto {protocol.value} del candidato {index}")

    survivors = [
        index for index in candidate_set.indices
        if all(passes_gate(protocol, candidate_set.verdict(protocol, index), score_floor) for protocol in chain)
    ]

    def rank(index):
        scores = tuple(
            -candidate_set.verdict(protocol, index).score
            for protocol in chain if protocol in SCORED_PROTOCOLS
        )
        return scores + (index,)

    selected = sorted(survivors, key=rank)[:k]
    return replace(candidate_set, selected=selected, flagged=not selected)
