from django.conf import settings

from llm_filter.exemplars import build_exemplars

from cli.base import LtdaCommand


class Command(LtdaCommand):
    help = "Dibuja los paneles de ejemplo del juez geométrico"

    def add_command_arguments(self, parser):
        parser.add_argument('--dest', default=None, help="Por defecto LTDA_EXEMPLAR_DIR")
        parser.add_argument('--classes', nargs='+', default=['Cyclist', 'Pedestrian'])

    def run(self, **options):
        dest = options['dest'] or settings.LTDA_EXEMPLAR_DIR
        written = build_exemplars(dest, options['classes'])
        for path in written:
            self.stdout.write(str(path))
        self.stdout.write(self.style.SUCCESS(f"{len(written)} paneles escritos en {dest}"))
