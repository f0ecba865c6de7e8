"""
Prompts de los tres jueces, renderizados desde
``llm_filter/templates/llm_filter/*.txt``.

El texto debe coincidir byte a byte con los archivos de
``llm_filter/testdata/golden``.
"""

from django.template.loader import render_to_string

from gen_backend.prompts import class_object

DEFAULT_LOWER_SCORE = 0
DEFAULT_UPPER_SCORE = 10


def _render(name, context):
    return render_to_string(f'llm_filter/{name}.txt', context).strip()


def render_removal_prompt(head_class, lower=DEFAULT_LOWER_SCORE, upper=DEFAULT_UPPER_SCORE):
    """
    Raises:
        ValueError: si ``lower`` >= ``upper``
    """
    if lower >= upper:
        raise ValueError(f"Rango de puntaje inválido: {lower}..{upper}")
    return _render('removal_quality', {
        'head_class_object': class_object(head_class),
        'lower_score': int(lower),
        'upper_score': int(upper),
    })


def render_geometric_prompt(tail_class):
    return _render('geometric_plausibility', {'rare_class_object': class_object(tail_class)})


def render_viewpoint_prompt(head_class, tail_class):
    return _render('viewpoint_consistency', {
        'head_class_object': class_object(head_class),
        'tail_class_object': class_object(tail_class),
    })
