class DimStatsError(ValueError):
    """Estadísticas de dimensiones inválidas o sin muestras."""
