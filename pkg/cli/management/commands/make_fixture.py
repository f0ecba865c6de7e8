from kitti_io.fixtures import build_mini_dataset

from cli.base import LtdaCommand


class Command(LtdaCommand):
    help = "Escribe el mini-dataset de 5 escenas (etiquetas, calibraciones e imágenes)"

    def add_command_arguments(self, parser):
        parser.add_argument('dest', help="Directorio destino")

    def run(self, **options):
        root = build_mini_dataset(options['dest'])
        self.stdout.write(self.style.SUCCESS(f"Mini-dataset escrito en {root}"))
