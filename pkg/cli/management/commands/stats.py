import json
from pathlib import Path

from kitti_io.dataset import LABEL_DIR, dataset_stats, read_split
from kitti_io.serializers import DatasetStatsSerializer

from cli.base import LtdaCommand


def format_stats_table(stats):
    width = max(len(name) for name in list(stats.counts) + ['Total'])
    lines = [f"{'Class'.ljust(width)}  {'Count':>8}  {'Share':>7}"]
    shares = stats.shares
    for name, count in stats.counts.items():
        lines.append(f"{name.ljust(width)}  {count:>8,}  {shares[name]:>6.2f}%")
    lines.append(f"{'Total'.ljust(width)}  {stats.total:>8,}")
    return '\n'.join(lines)


class Command(LtdaCommand):
    help = "Cuenta instancias por clase y su participación en un directorio de etiquetas KITTI"

    def add_command_arguments(self, parser):
        parser.add_argument('--labels', required=True, help="Raíz del dataset o directorio label_2")
        parser.add_argument('--classes', nargs='+', default=['Car', 'Pedestrian', 'Cyclist'])
        parser.add_argument('--split', help="Archivo con un ID por línea")
        parser.add_argument('--workers', type=int, default=None)
        parser.add_argument('--json', action='store_true', help="Emite solo el JSON por stdout, sin la tabla")
        parser.add_argument('--json-out', help="Además de la tabla, escribe el JSON en este archivo")

    def run(self, **options):
        label_dir = Path(options['labels'])
        if (label_dir / LABEL_DIR).is_dir():
            label_dir = label_dir / LABEL_DIR
        ids = read_split(options['split']) if options['split'] else None

        stats = dataset_stats(label_dir, options['classes'], ids=ids, workers=options['workers'])
        data = DatasetStatsSerializer(stats).data

        if options['json']:
            self.write_json(data)
            return
        self.stdout.write(format_stats_table(stats))
        if options['json_out']:
            path = Path(options['json_out'])
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(json.dumps(data, indent=2, ensure_ascii=False))
