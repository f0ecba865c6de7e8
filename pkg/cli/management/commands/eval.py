from evaluation.evaluator import EvalConfig, evaluate, format_table
from evaluation.serializers import EvalConfigSerializer, EvalResultSerializer

from cli.base import LtdaCommand


class Command(LtdaCommand):
    help = "Evalúa detecciones KITTI: AP 2D, BEV, 3D y AOS por clase y dificultad"

    def add_command_arguments(self, parser):
        parser.add_argument('--gt', required=True, help="Raíz del dataset o directorio label_2 del GT")
        parser.add_argument('--det', required=True, help="Directorio con un archivo de detecciones por imagen")
        parser.add_argument('--r11', action='store_true', help="Interpolación de 11 puntos en lugar de 40")
        parser.add_argument('--split', help="Archivo con los IDs a evaluar")
        parser.add_argument('--workers', type=int, default=1)
        parser.add_argument('--json', action='store_true', help="Emite JSON en lugar de la tabla")

    def run(self, **options):
        serializer = EvalConfigSerializer(data={
            'interpolation': 'R11' if options['r11'] else 'R40',
            'split': options['split'],
            'workers': options['workers'],
        })
        serializer.is_valid(raise_exception=True)
        result = evaluate(options['gt'], options['det'], EvalConfig(**serializer.validated_data))

        if options['json']:
            self.write_json(EvalResultSerializer(result).data)
        else:
            self.stdout.write(format_table(result))
