from rest_framework import serializers

from .stats import ClassDimStats, DimStats


class DimStatsSerializer(serializers.Serializer):
    mu = serializers.FloatField()
    sigma = serializers.FloatField(min_value=0)
    a = serializers.FloatField()
    b = serializers.FloatField()

    def validate(self, attrs):
        if not attrs['a'] <= attrs['mu'] <= attrs['b']:
            raise serializers.ValidationError("Se requiere a <= mu <= b")
        return attrs


class ClassDimStatsSerializer(serializers.Serializer):
    """
    Estadísticas de una clase tal como se guardan en el archivo de caché JSON.
    """

    class_name = serializers.CharField()
    h = DimStatsSerializer()
    w = DimStatsSerializer()
    l = DimStatsSerializer()
    sample_count = serializers.IntegerField(min_value=1)

    def create(self, validated_data):
        dims = {name: DimStats(**validated_data[name]) for name in ('h', 'w', 'l')}
        return ClassDimStats(
            class_name=validated_data['class_name'],
            sample_count=validated_data['sample_count'],
            **dims,
        )
