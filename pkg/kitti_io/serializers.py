from rest_framework import serializers

from .labels import ObjectClass


class ObjectLabelSerializer(serializers.Serializer):
    """
    Serializer de solo lectura para ObjectLabel (planes y reportes en JSON).
    """

    class_name = serializers.ChoiceField(choices=ObjectClass.choices)
    truncation = serializers.FloatField()
    occlusion = serializers.IntegerField()
    alpha = serializers.FloatField()
    bbox2d = serializers.ListField(child=serializers.FloatField(), min_length=4, max_length=4)
    dims = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    location = serializers.ListField(child=serializers.FloatField(), min_length=3, max_length=3)
    rotation_y = serializers.FloatField()


class DatasetStatsSerializer(serializers.Serializer):
    """
    Conteos por clase, participación (%) con 2 decimales y total.

    No está ligado a un modelo (Serializer, no ModelSerializer).
    """

    counts = serializers.DictField(child=serializers.IntegerField())
    shares = serializers.SerializerMethodField()
    total = serializers.IntegerField()

    def get_shares(self, obj):
        return {name: round(share, 2) for name, share in obj.shares.items()}
