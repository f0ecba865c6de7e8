import json
from pathlib import Path

from django.core.management.base import CommandError

from pipeline.config import load_run_config
from pipeline.runner import AugmentRunner, augment_dataset
from pipeline.serializers import EditPlanSerializer

from cli.base import LtdaCommand
from .stats import format_stats_table

REPORT_NAME = 'augment_report.json'


class Command(LtdaCommand):
    help = "Aumenta un dataset KITTI reemplazando objetos de la clase cabeza por clases cola"

    def add_command_arguments(self, parser):
        parser.add_argument('--config', help="Archivo JSON de configuración")
        parser.add_argument('--dataset', help="Raíz del dataset KITTI (dataset_dir)")
        parser.add_argument('--output', help="Directorio de salida (output_dir)")
        parser.add_argument('--run-name', help="Nombre de la corrida en el manifiesto")
        parser.add_argument('--workers', type=int)
        parser.add_argument('--limit', type=int, help="Procesa a lo sumo N escenas pendientes")
        parser.add_argument('--dry-run', action='store_true', help="Solo emite los planes de edición en JSON")
        parser.add_argument('--reset', action='store_true', help="Borra el manifiesto de la corrida y empieza de nuevo")

    def run(self, **options):
        config = load_run_config(options['config'], overrides={
            'seed': options['seed'],
            'dataset_dir': options['dataset'],
            'output_dir': options['output'],
            'run_name': options['run_name'],
            'workers': options['workers'],
        })

        if options['dry_run']:
            plans = AugmentRunner(config).plan()
            self.write_json(EditPlanSerializer(plans, many=True).data)
            return

        _, report = augment_dataset(config, reset=options['reset'], limit=options['limit'])
        data = report.to_dict()
        Path(config.output_dir, REPORT_NAME).write_text(json.dumps(data, indent=2, ensure_ascii=False))

        self.stdout.write("Antes:\n" + format_stats_table(report.before))
        self.stdout.write("Después:\n" + format_stats_table(report.after))
        scenes = report.scenes
        self.stdout.write(
            f"Escenas: {scenes['augmented']} aumentadas, {scenes['skipped']} omitidas, "
            f"{scenes['failed']} fallidas, {scenes['pending']} pendientes"
        )

        if report.skip_fraction > config.max_skip_fraction:
            raise CommandError(
                f"Fracción de escenas sin aumentar {report.skip_fraction:.2f} "
                f"supera el máximo {config.max_skip_fraction:.2f}"
            )
        self.stdout.write(self.style.SUCCESS(f"Reporte escrito en {Path(config.output_dir) / REPORT_NAME}"))
