from pathlib import Path

import numpy as np

from dim_sampler.cache import load_or_build_stats
from dim_sampler.serializers import ClassDimStatsSerializer
from dim_sampler.stats import sample_dims
from kitti_io.dataset import LABEL_DIR

from cli.base import LtdaCommand


class Command(LtdaCommand):
    help = "Estima las estadísticas de dimensiones de una clase y muestrea cajas (h, w, l)"

    def add_command_arguments(self, parser):
        parser.add_argument('--labels', required=True, help="Raíz del dataset o directorio label_2")
        parser.add_argument('--class', dest='class_name', default='Cyclist')
        parser.add_argument('--count', type=int, default=5)
        parser.add_argument('--cache', help="Archivo JSON de caché de estadísticas")

    def run(self, **options):
        label_dir = Path(options['labels'])
        if (label_dir / LABEL_DIR).is_dir():
            label_dir = label_dir / LABEL_DIR
        class_name = options['class_name']

        stats = load_or_build_stats(label_dir, [class_name], cache_path=options['cache'])[class_name]
        rng = np.random.default_rng(self.seed(options))
        samples = [sample_dims(stats, rng) for _ in range(options['count'])]

        self.write_json({
            'stats': ClassDimStatsSerializer(stats).data,
            'samples': [[round(value, 4) for value in dims] for dims in samples],
        })
