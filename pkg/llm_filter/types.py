from dataclasses import dataclass, field

from django.db import models
from django.utils.translation import gettext_lazy as _


class Protocol(models.TextChoices):
    REMOVAL_QUALITY = 'removal_quality', _('Calidad de eliminación')
    GEOMETRIC_PLAUSIBILITY = 'geometric_plausibility', _('Plausibilidad geométrica')
    VIEWPOINT_CONSISTENCY = 'viewpoint_consistency', _('Consistencia de punto de vista')


# Imágenes por consulta: (original, candidato) o (positivos, negativos, candidato)
PROTOCOL_ARITY = {
    Protocol.REMOVAL_QUALITY: 2,
    Protocol.GEOMETRIC_PLAUSIBILITY: 3,
    Protocol.VIEWPOINT_CONSISTENCY: 2,
}

SCORED_PROTOCOLS = {Protocol.REMOVAL_QUALITY}

NOT_EVALUATED = 'not evaluated'


@dataclass(frozen=True)
class JudgeQuery:
    """Consulta a un juez: imágenes en orden, prompt ya renderizado."""

    protocol: str
    images: tuple
    prompt_text: str
    candidate_index: int = 0
    score_range: tuple = (0, 10)

    def __post_init__(self):
        protocol = Protocol(self.protocol)
        object.__setattr__(self, 'protocol', protocol)
        object.__setattr__(self, 'images', tuple(self.images))
        expected = PROTOCOL_ARITY[protocol]
        if len(self.images) != expected:
            raise ValueError(
                f"{protocol.value} necesita {expected} imágenes, se recibieron {len(self.images)}"
            )


@dataclass(frozen=True)
class Verdict:
    """
    Decisión de un juez sobre un candidato.

    Los veredictos de calidad de eliminación llevan puntaje; los demás,
    explicación. ``evaluated`` es False cuando el candidato no llegó al juez
    (rechazado antes en la cadena) o su respuesta no se pudo interpretar.
    """

    accepted: bool
    score: int | None = None
    explanation: str | None = None
    raw: str = ''
    evaluated: bool = True

    @classmethod
    def not_evaluated(cls, reason=NOT_EVALUATED):
        return cls(accepted=False, explanation=reason, evaluated=False)


@dataclass
class CandidateSet:
    """
    Los m candidatos de una edición, sus veredictos por protocolo y la
    selección final.

    ``verdicts`` es {protocolo: {índice de candidato: Verdict}}.
    """

    candidates: list
    verdicts: dict = field(default_factory=dict)
    selected: list = field(default_factory=list)
    flagged: bool = False

    @property
    def indices(self):
        return [candidate.index for candidate in self.candidates]

    def set_verdict(self, protocol, index, verdict):
        self.verdicts.setdefault(Protocol(protocol), {})[index] = verdict

    def verdict(self, protocol, index):
        return self.verdicts.get(Protocol(protocol), {}).get(index)

    def candidate(self, index):
        for candidate in self.candidates:
            if candidate.index == index:
                return candidate
        raise KeyError(index)

    def accepted_count(self, protocol):
        return sum(1 for verdict in self.verdicts.get(Protocol(protocol), {}).values() if verdict.accepted)
