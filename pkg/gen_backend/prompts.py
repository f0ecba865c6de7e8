"""
Prompts de generación y la mini-gramática que entiende el backend sintético.

    removal:   "An empty, unobstructed road"
    insertion: "A {objeto}, visible from {orientación}, centered in an empty background, photorealistic"
"""

import re
from dataclasses import dataclass

from geom3d.orientation import Sector

from .exceptions import PromptGrammarError

REMOVAL_PROMPT = 'An empty, unobstructed road'
INSERTION_TEMPLATE = (
    'A {tail_class_object}, visible from {orientation}, '
    'centered in an empty background, photorealistic'
)

_INSERTION_RE = re.compile(
    r'^A (?P<object>[a-z][a-z ]*), visible from (?P<orientation>[a-z-]+), '
    r'centered in an empty background, photorealistic$'
)


def class_object(class_name):
    """Nombre de clase como aparece en un prompt: 'Person_sitting' → 'person sitting'."""
    return str(class_name).replace('_', ' ').lower()


def removal_prompt():
    return REMOVAL_PROMPT


def insertion_prompt(tail_class, orientation):
    return INSERTION_TEMPLATE.format(
        tail_class_object=class_object(tail_class),
        orientation=Sector(orientation).value,
    )


@dataclass(frozen=True)
class ParsedPrompt:
    kind: str  # 'removal' | 'insertion'
    object_name: str = ''
    orientation: str = ''


def parse_prompt(text):
    """
    Raises:
        PromptGrammarError: si el texto no es un prompt de eliminación ni de inserción
    """
    text = text.strip()
    if text == REMOVAL_PROMPT:
        return ParsedPrompt(kind='removal')

    match = _INSERTION_RE.match(text)
    if match is None:
        raise PromptGrammarError(f"Prompt no reconocido: {text!r}")
    orientation = match['orientation']
    if orientation not in Sector.values:
        raise PromptGrammarError(f"Orientación desconocida en el prompt: {orientation!r}")
    return ParsedPrompt(kind='insertion', object_name=match['object'], orientation=orientation)
