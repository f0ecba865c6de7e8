from geom3d.boxes import Box3D, box3d_corners, project_box_to_bbox2d, project_points
from geom3d.orientation import alpha_from_pose, orientation_sector
from kitti_io.calibration import parse_calib

from cli.base import LtdaCommand


class Command(LtdaCommand):
    help = "Proyecta una caja 3D con la calibración de una escena"

    def add_command_arguments(self, parser):
        parser.add_argument('--calib', required=True, help="Archivo calib/<id>.txt")
        parser.add_argument('--dims', nargs=3, type=float, required=True, metavar=('H', 'W', 'L'))
        parser.add_argument('--location', nargs=3, type=float, required=True, metavar=('X', 'Y', 'Z'))
        parser.add_argument('--rotation-y', type=float, default=0.0)
        parser.add_argument('--image-size', nargs=2, type=int, default=[1242, 375], metavar=('W', 'H'))

    def run(self, **options):
        calib = parse_calib(options['calib'])
        box = Box3D(dims=options['dims'], location=options['location'], rotation_y=options['rotation_y'])

        projected = project_box_to_bbox2d(box, calib, tuple(options['image_size']))
        alpha = alpha_from_pose(box.location, box.rotation_y)
        corners = project_points(box3d_corners(box), calib)

        self.write_json({
            'bbox2d': [round(value, 2) for value in projected.rect],
            'fully_inside': projected.fully_inside,
            'alpha': round(alpha, 4),
            'orientation': orientation_sector(alpha).value,
            'corners2d': [[round(float(u), 2), round(float(v), 2)] for u, v in corners],
        })
