from rest_framework import serializers

from .difficulty import Difficulty
from .matching import Metric


class EvalConfigSerializer(serializers.Serializer):
    classes = serializers.ListField(child=serializers.CharField(), min_length=1, required=False)
    difficulties = serializers.ListField(child=serializers.ChoiceField(choices=Difficulty.choices), required=False)
    metrics = serializers.ListField(child=serializers.ChoiceField(choices=Metric.choices), required=False)
    interpolation = serializers.ChoiceField(choices=['R40', 'R11'], default='R40')
    split = serializers.CharField(allow_null=True, default=None)
    workers = serializers.IntegerField(min_value=1, default=1)


def _rounded(value):
    return None if value is None else round(value, 2)


class EvalResultSerializer(serializers.Serializer):
    """
    Resultado como JSON anidado ``{clase: {métrica: {dificultad: valor}}}``.

    Los valores se redondean a 2 decimales; n/a se emite como null.
    """

    interpolation = serializers.CharField()
    num_images = serializers.IntegerField()
    results = serializers.SerializerMethodField()

    def get_results(self, obj):
        return {
            class_name: {
                metric: {level: _rounded(obj.value(class_name, level, metric)) for level in obj.difficulties}
                for metric in obj.metrics
            }
            for class_name in obj.classes
        }
