"""
Gramáticas estrictas de las respuestas de los jueces.

    puntaje:     yes, 9   |   no, 2
    explicación: yes, <texto>   |   no. <texto>

Antes de comparar se quitan la puntuación inicial y los signos de markdown
(``*``, ``_``, `` ` ``, ``#``, ``>``); estos se reemplazan por espacios para
no unir palabras.
"""

import re
import string

from .exceptions import VerdictParseError
from .types import Verdict

_MARKDOWN = str.maketrans({char: ' ' for char in '*_`#>'})
_LEADING = string.punctuation + string.whitespace

# El puntaje es entero: "9." vale, "9.5" no
_SCORED_RE = re.compile(r'^\s*(yes|no)\s*,\s*(\d+)(?!\d|\.\d)', re.IGNORECASE | re.ASCII)
_DECIMAL_RE = re.compile(r'^\s*(yes|no)\s*,\s*\d+\.\d', re.IGNORECASE | re.ASCII)
_EXPLAINED_RE = re.compile(r'^\s*(yes|no)\b', re.IGNORECASE | re.ASCII)


def _normalize(raw):
    return raw.translate(_MARKDOWN).lstrip(_LEADING)


def parse_scored_verdict(raw, lower, upper):
    """
    Interpreta "yes, [score]" / "no, [score]".

    Raises:
        VerdictParseError: sin yes/no inicial, sin puntaje o puntaje fuera de rango
    """
    text = _normalize(raw)
    match = _SCORED_RE.match(text)
    if match is None:
        if _EXPLAINED_RE.match(text) is None:
            raise VerdictParseError(raw, "La respuesta no empieza con yes/no")
        if _DECIMAL_RE.match(text) is not None:
            raise VerdictParseError(raw, "El puntaje debe ser entero")
        raise VerdictParseError(raw, "Falta el puntaje")

    score = int(match[2])
    if not lower <= score <= upper:
        raise VerdictParseError(raw, f"Puntaje {score} fuera de [{lower}, {upper}]")
    return Verdict(accepted=match[1].lower() == 'yes', score=score, raw=raw)


def parse_explained_verdict(raw):
    """
    Interpreta "yes/no" seguido de una explicación breve.

    Raises:
        VerdictParseError: si la primera palabra no es yes/no
    """
    text = _normalize(raw)
    match = _EXPLAINED_RE.match(text)
    if match is None:
        raise VerdictParseError(raw, "La respuesta no empieza con yes/no")

    explanation = text[match.end():].lstrip(' \t\r\n,.:;!-').strip()
    return Verdict(accepted=match[1].lower() == 'yes', explanation=explanation, raw=raw)
