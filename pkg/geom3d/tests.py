import hashlib
import math

import numpy as np
from django.test import SimpleTestCase

from kitti_io.calibration import CameraCalibration, parse_calib
from kitti_io.fixtures import MINI_DATASET_DIR
from kitti_io.labels import parse_label_file

from .boxes import Box3D, box3d_corners, project_box_to_bbox2d, project_points
from .crops import (
    BinaryMask, blend_crop, build_mask, extract_crop, feather_weights,
    mask_to_png, png_to_mask, square_crop,
)
from .exceptions import EmptyRegionError, GeometryError, ProjectionError, SizeMismatchError
from .iou import iou_2d, iou_3d, iou_bev
from .orientation import (
    Sector, alpha_from_pose, orientation_sector, sector_distance, wrap_angle,
)

CALIB = CameraCalibration.from_values([700, 0, 600, 0, 0, 700, 180, 0, 0, 0, 1, 0])
IMAGE_SIZE = (1242, 375)


def corner_set(box):
    return sorted(tuple(np.round(corner, 9)) for corner in box3d_corners(box))


def inside_box(points, box):
    """Contención de puntos en el cuboide (oráculo Monte-Carlo)."""
    h, w, l = box.dims
    x, y, z = box.location
    c, s = math.cos(box.rotation_y), math.sin(box.rotation_y)
    dx, dz = points[:, 0] - x, points[:, 2] - z
    local_x = c * dx - s * dz
    local_z = s * dx + c * dz
    return (
        (np.abs(local_x) <= l / 2) & (np.abs(local_z) <= w / 2)
        & (points[:, 1] <= y) & (points[:, 1] >= y - h)
    )


def monte_carlo_iou_3d(a, b, rng, samples=1_000_000):
    corners = np.vstack([box3d_corners(a), box3d_corners(b)])
    low, high = corners.min(axis=0), corners.max(axis=0)
    points = rng.uniform(low, high, size=(samples, 3))
    fraction = np.mean(inside_box(points, a) & inside_box(points, b))
    inter = fraction * float(np.prod(high - low))
    return inter / (a.volume + b.volume - inter)


class Box3DCornersTest(SimpleTestCase):
    """Tests para box3d_corners"""

    def test_axis_aligned_cube(self):
        """Test: Cubo 2×2×2 en (0,1,10) sin rotación"""
        corners = box3d_corners(Box3D(dims=(2, 2, 2), location=(0, 1, 10), rotation_y=0))

        self.assertEqual(set(np.round(corners[:, 0], 9)), {-1.0, 1.0})
        self.assertEqual(set(np.round(corners[:, 1], 9)), {-1.0, 1.0})
        self.assertEqual(set(np.round(corners[:, 2], 9)), {9.0, 11.0})

    def test_bottom_face_at_location_y(self):
        """Test: La cara inferior está en y y la superior en y - h"""
        corners = box3d_corners(Box3D(dims=(1.5, 1.6, 3.9), location=(2, 1.6, 15), rotation_y=0.7))

        np.testing.assert_allclose(corners[:4, 1], 1.6)
        np.testing.assert_allclose(corners[4:, 1], 0.1)

    def test_yaw_pi_same_corner_set(self):
        """Test: Girar π da el mismo conjunto de esquinas"""
        box = Box3D(dims=(1.5, 1.6, 3.9), location=(2, 1.6, 15), rotation_y=0.0)
        flipped = Box3D(dims=box.dims, location=box.location, rotation_y=math.pi)

        self.assertEqual(corner_set(box), corner_set(flipped))

    def test_yaw_half_pi_swaps_extent(self):
        """Test: Girar π/2 intercambia w y l en la huella"""
        corners = box3d_corners(Box3D(dims=(1.0, 1.0, 4.0), location=(0, 1, 10), rotation_y=math.pi / 2))

        self.assertAlmostEqual(np.ptp(corners[:, 0]), 1.0)
        self.assertAlmostEqual(np.ptp(corners[:, 2]), 4.0)

    def test_non_positive_dims(self):
        """Test: Dimensiones no positivas son inválidas"""
        with self.assertRaises(GeometryError):
            Box3D(dims=(0, 1, 1), location=(0, 1, 10), rotation_y=0)


class ProjectionTest(SimpleTestCase):
    """Tests para la proyección pinhole"""

    def test_optical_axis_hits_principal_point(self):
        """Test: (0,0,10) se proyecta en el punto principal"""
        np.testing.assert_allclose(project_points([[0, 0, 10]], CALIB), [[600, 180]])

    def test_lateral_offset(self):
        """Test: (1,0,10) → u = 600 + 700/10"""
        np.testing.assert_allclose(project_points([[1, 0, 10]], CALIB), [[670, 180]])

    def test_point_on_camera_plane(self):
        """Test: z = 0 no se puede proyectar"""
        with self.assertRaises(ProjectionError):
            project_points([[0, 0, 0]], CALIB)

    def test_cube_hull_closed_form(self):
        """Test: La envolvente del cubo coincide con la fórmula cerrada"""
        projected = project_box_to_bbox2d(
            Box3D(dims=(2, 2, 2), location=(0, 1, 10), rotation_y=0), CALIB, IMAGE_SIZE,
        )

        expected = (600 - 700 / 9, 180 - 700 / 9, 600 + 700 / 9, 180 + 700 / 9)
        np.testing.assert_allclose(projected.rect, expected, atol=1e-6)
        self.assertTrue(projected.fully_inside)

    def test_centered_box_is_symmetric_in_u(self):
        """Test: Una caja en el eje óptico es simétrica respecto a u = 600"""
        projected = project_box_to_bbox2d(
            Box3D(dims=(1.5, 1.6, 3.9), location=(0, 1.6, 20), rotation_y=0), CALIB, IMAGE_SIZE,
        )
        left, _, right, _ = projected.rect

        self.assertAlmostEqual(600 - left, right - 600, places=9)

    def test_huge_near_box_not_inside(self):
        """Test: Una caja enorme y cercana sale de la imagen"""
        projected = project_box_to_bbox2d(
            Box3D(dims=(4, 4, 10), location=(0, 2, 3), rotation_y=0), CALIB, IMAGE_SIZE,
        )
        self.assertFalse(projected.fully_inside)

    def test_fixture_labels_match_projection(self):
        """Test: Las cajas 2D del mini-dataset son la proyección de sus cajas 3D"""
        for scene_id in ('000001', '000003', '000004'):
            calib = parse_calib(MINI_DATASET_DIR / 'calib' / f'{scene_id}.txt')
            for label in parse_label_file(MINI_DATASET_DIR / 'label_2' / f'{scene_id}.txt'):
                if label.is_dontcare:
                    continue
                projected = project_box_to_bbox2d(label.box3d, calib, IMAGE_SIZE)
                np.testing.assert_allclose(projected.rect, label.bbox2d, atol=0.0051)

    def test_hull_shrinks_with_depth(self):
        """Test: El área proyectada decrece al alejar la caja"""
        areas = []
        for z in (8, 12, 20, 40, 80):
            rect = project_box_to_bbox2d(
                Box3D(dims=(1.5, 1.6, 3.9), location=(1, 1.6, z), rotation_y=0.4), CALIB, IMAGE_SIZE,
            ).rect
            areas.append((rect[2] - rect[0]) * (rect[3] - rect[1]))

        self.assertEqual(areas, sorted(areas, reverse=True))


class IoUTest(SimpleTestCase):
    """Tests para iou_2d, iou_bev e iou_3d"""

    def setUp(self):
        """Configuración inicial"""
        self.rng = np.random.default_rng(2024)

    def random_box(self, around=None):
        if around is None:
            location = (self.rng.uniform(-5, 5), self.rng.uniform(1, 2), self.rng.uniform(10, 30))
        else:
            location = np.asarray(around.location) + self.rng.uniform([-1, -0.5, -1], [1, 0.5, 1])
        return Box3D(
            dims=(self.rng.uniform(1, 2), self.rng.uniform(1, 2), self.rng.uniform(2, 5)),
            location=tuple(location),
            rotation_y=self.rng.uniform(-math.pi, math.pi),
        )

    def test_iou_2d_examples(self):
        """Test: Casos básicos de IoU 2D"""
        self.assertEqual(iou_2d((0, 0, 10, 10), (0, 0, 10, 10)), 1.0)
        self.assertAlmostEqual(iou_2d((0, 0, 10, 10), (5, 0, 15, 10)), 1 / 3)
        self.assertEqual(iou_2d((0, 0, 10, 10), (20, 20, 30, 30)), 0.0)

    def test_iou_bev_examples(self):
        """Test: Casos básicos de IoU BEV"""
        box = Box3D(dims=(1, 1, 1), location=(0, 1, 10), rotation_y=0)
        shifted = Box3D(dims=(1, 1, 1), location=(0.5, 1, 10), rotation_y=0)
        rotated = Box3D(dims=(1, 1, 1), location=(0, 1, 10), rotation_y=math.pi / 2)

        self.assertAlmostEqual(iou_bev(box, box), 1.0)
        self.assertAlmostEqual(iou_bev(box, shifted), 1 / 3)
        self.assertAlmostEqual(iou_bev(box, rotated), 1.0)

    def test_iou_bev_matches_2d_when_axis_aligned(self):
        """Test: Con yaw 0 el IoU BEV es el IoU 2D de las huellas"""
        for _ in range(50):
            a, b = self.random_box(), self.random_box()
            a = Box3D(dims=a.dims, location=a.location, rotation_y=0)
            b = Box3D(dims=b.dims, location=(a.location[0] + 1, 1.5, a.location[2] + 0.5), rotation_y=0)
            footprint = lambda box: (
                box.location[0] - box.dims[2] / 2, box.location[2] - box.dims[1] / 2,
                box.location[0] + box.dims[2] / 2, box.location[2] + box.dims[1] / 2,
            )
            self.assertAlmostEqual(iou_bev(a, b), iou_2d(footprint(a), footprint(b)), places=9)

    def test_iou_3d_examples(self):
        """Test: Casos básicos de IoU 3D"""
        box = Box3D(dims=(1.5, 1.6, 3.9), location=(2, 1.6, 15), rotation_y=0.3)
        stacked = Box3D(dims=box.dims, location=(2, 1.6 - 1.5, 15), rotation_y=0.3)

        self.assertAlmostEqual(iou_3d(box, box), 1.0)
        self.assertEqual(iou_3d(box, stacked), 0.0)

    def test_symmetry_and_range(self):
        """Test: Los IoU son simétricos y están en [0, 1]"""
        for _ in range(100):
            a = self.random_box()
            b = self.random_box(around=a)
            for fn in (iou_bev, iou_3d):
                value = fn(a, b)
                self.assertAlmostEqual(value, fn(b, a), places=9)
                self.assertGreaterEqual(value, 0.0)
                self.assertLessEqual(value, 1.0)
            self.assertLessEqual(iou_3d(a, b), iou_bev(a, b) + 1e-12)

    def test_iou_3d_matches_monte_carlo(self):
        """Test: IoU 3D dentro de 0.02 del oráculo Monte-Carlo en 100 pares"""
        for _ in range(100):
            a = self.random_box()
            b = self.random_box(around=a)
            self.assertAlmostEqual(iou_3d(a, b), monte_carlo_iou_3d(a, b, self.rng), delta=0.02)


class OrientationTest(SimpleTestCase):
    """Tests para alpha y sectores de orientación"""

    def test_alpha_on_optical_axis(self):
        """Test: Con x = 0, alpha = rotation_y"""
        self.assertAlmostEqual(alpha_from_pose((0, 1.6, 12), 0.8), 0.8)

    def test_alpha_diagonal(self):
        """Test: rotation_y = 0 y x = z → alpha = -π/4"""
        self.assertAlmostEqual(alpha_from_pose((10, 1.6, 10), 0.0), -math.pi / 4)

    def test_alpha_wraps(self):
        """Test: π - (-π/4) se envuelve a -3π/4"""
        self.assertAlmostEqual(alpha_from_pose((-10, 1.6, 10), math.pi), -3 * math.pi / 4)

    def test_alpha_invariant_under_full_turn(self):
        """Test: Sumar 2π a rotation_y no cambia alpha"""
        rng = np.random.default_rng(3)
        for _ in range(200):
            location = (rng.uniform(-20, 20), 1.6, rng.uniform(1, 60))
            yaw = rng.uniform(-math.pi, math.pi)
            diff = alpha_from_pose(location, yaw + 2 * math.pi) - alpha_from_pose(location, yaw)
            self.assertAlmostEqual(wrap_angle(diff), 0.0, places=9)

    def test_sector_table(self):
        """Test: Centros de la tabla de sectores"""
        cases = {
            0.0: Sector.BACK,
            math.pi / 4: Sector.BACK_LEFT,
            math.pi / 2: Sector.LEFT,
            3 * math.pi / 4: Sector.FRONT_LEFT,
            math.pi: Sector.FRONT,
            -math.pi: Sector.FRONT,
            -3 * math.pi / 4: Sector.FRONT_RIGHT,
            -math.pi / 2: Sector.RIGHT,
            -math.pi / 4: Sector.BACK_RIGHT,
        }
        for alpha, sector in cases.items():
            self.assertEqual(orientation_sector(alpha), sector, msg=f"alpha={alpha}")

    def test_boundary_goes_to_earlier_sector(self):
        """Test: En un borde gana el sector que aparece primero"""
        self.assertEqual(orientation_sector(math.pi / 8), Sector.BACK_LEFT)
        self.assertEqual(orientation_sector(-math.pi / 8), Sector.BACK)
        self.assertEqual(orientation_sector(7 * math.pi / 8), Sector.FRONT)

    def test_sector_distance(self):
        """Test: Distancia circular entre sectores"""
        self.assertEqual(sector_distance(Sector.BACK, Sector.BACK), 0)
        self.assertEqual(sector_distance(Sector.BACK, Sector.BACK_RIGHT), 1)
        self.assertEqual(sector_distance(Sector.FRONT, Sector.BACK), 4)
        self.assertEqual(sector_distance('front-right', 'front-left'), 2)


class SquareCropTest(SimpleTestCase):
    """Tests para square_crop"""

    def test_centered_crop(self):
        """Test: Caja de 100 px con s = 1.5 → lado 150"""
        crop = square_crop((100, 100, 200, 200), 1.5, IMAGE_SIZE)

        self.assertEqual(crop.side, 150)
        self.assertEqual(crop.center, (150, 150))
        self.assertEqual(crop.rect, (75, 75, 225, 225))

    def test_translated_near_left_edge(self):
        """Test: Cerca del borde izquierdo la ventana se traslada"""
        crop = square_crop((0, 100, 40, 140), 1.5, IMAGE_SIZE)

        self.assertEqual(crop.side, 60)
        self.assertEqual(crop.rect, (0, 90, 60, 150))

    def test_clamped_to_image_height(self):
        """Test: El lado se limita a la altura de la imagen"""
        crop = square_crop((500, 0, 600, 375), 1.5, IMAGE_SIZE)

        self.assertEqual(crop.side, 375)
        self.assertEqual(crop.rect[1], 0)
        self.assertEqual(crop.rect[3], 375)

    def test_invariants_randomized(self):
        """Test: Siempre cuadrada, dentro de la imagen y con lado ≥ s·extensión"""
        rng = np.random.default_rng(11)
        for _ in range(500):
            left, top = rng.uniform(0, 1200), rng.uniform(0, 360)
            bbox = (left, top, min(left + rng.uniform(1, 300), 1242), min(top + rng.uniform(1, 200), 375))
            scale = rng.uniform(1.01, 3)
            crop = square_crop(bbox, scale, IMAGE_SIZE)
            c_left, c_top, c_right, c_bottom = crop.rect

            self.assertEqual(c_right - c_left, c_bottom - c_top)
            self.assertTrue(0 <= c_left and c_right <= 1242 and 0 <= c_top and c_bottom <= 375)
            if crop.side < 375:
                self.assertGreaterEqual(crop.side, scale * max(bbox[2] - bbox[0], bbox[3] - bbox[1]))

    def test_degenerate_box(self):
        """Test: Una caja sin área produce error"""
        with self.assertRaises(EmptyRegionError):
            square_crop((100, 100, 100, 200), 1.5, IMAGE_SIZE)

    def test_scale_must_exceed_one(self):
        """Test: s ≤ 1 es inválido"""
        with self.assertRaises(GeometryError):
            square_crop((100, 100, 200, 200), 1.0, IMAGE_SIZE)


class MaskAndBlendTest(SimpleTestCase):
    """Tests para build_mask y blend_crop"""

    def setUp(self):
        """Configuración inicial"""
        self.crop = square_crop((100, 100, 200, 200), 1.5, IMAGE_SIZE)
        rng = np.random.default_rng(5)
        self.image = rng.integers(0, 256, size=(375, 1242, 3), dtype=np.uint8)
        self.patch = rng.integers(0, 256, size=(150, 150, 3), dtype=np.uint8)

    def test_full_mask(self):
        """Test: Caja igual a la ventana → máscara de unos"""
        mask = build_mask(self.crop, self.crop.rect)
        self.assertTrue(mask.to_array().all())

    def test_center_quarter(self):
        """Test: La caja central ocupa el cuarto central de la máscara"""
        mask = build_mask(self.crop, (112.5, 112.5, 187.5, 187.5))

        self.assertEqual(mask.region, (37, 37, 113, 113))
        self.assertEqual(set(np.unique(mask.to_array())), {0, 1})

    def test_disjoint_box(self):
        """Test: Una caja fuera de la ventana produce error"""
        with self.assertRaises(EmptyRegionError):
            build_mask(self.crop, (800, 100, 900, 200))

    def test_feather_zero_full_mask_pastes_patch(self):
        """Test: Sin suavizado y máscara completa se pega el parche tal cual"""
        mask = build_mask(self.crop, self.crop.rect)
        result = blend_crop(self.image, self.crop, self.patch, mask, feather_px=0)

        np.testing.assert_array_equal(extract_crop(result, self.crop), self.patch)

    def test_empty_mask_is_identity(self):
        """Test: Máscara vacía no cambia la imagen"""
        result = blend_crop(self.image, self.crop, self.patch, BinaryMask.empty(150))
        np.testing.assert_array_equal(result, self.image)

    def test_unmasked_pixels_bit_exact(self):
        """Test: El hash de los píxeles fuera de la máscara no cambia"""
        rng = np.random.default_rng(9)
        for _ in range(20):
            left, top = rng.integers(0, 140, size=2)
            right, bottom = left + rng.integers(1, 150 - left), top + rng.integers(1, 150 - top)
            mask = BinaryMask(size=150, region=(left, top, right, bottom))
            result = blend_crop(self.image, self.crop, self.patch, mask)

            outside = np.ones((375, 1242), dtype=bool)
            c_left, c_top, _, _ = self.crop.rect
            outside[c_top + top:c_top + bottom, c_left + left:c_left + right] = False
            before = hashlib.sha256(self.image[outside].tobytes()).hexdigest()
            after = hashlib.sha256(result[outside].tobytes()).hexdigest()
            self.assertEqual(before, after)

    def test_feather_ramp(self):
        """Test: El peso sube linealmente desde el borde de la máscara"""
        weights = feather_weights(BinaryMask(size=20, region=(2, 2, 18, 18)), feather_px=3)

        np.testing.assert_allclose(weights[10, 2:7], [0.25, 0.5, 0.75, 1.0, 1.0])
        self.assertEqual(weights[10, 1], 0.0)

    def test_size_mismatch(self):
        """Test: Un parche de otro tamaño produce error"""
        mask = build_mask(self.crop, self.crop.rect)
        with self.assertRaises(SizeMismatchError):
            blend_crop(self.image, self.crop, self.patch[:100, :100], mask)

    def test_mask_png_codec(self):
        """Test: La máscara se exporta como PNG 0/255 y se recupera"""
        mask = BinaryMask(size=64, region=(10, 12, 40, 50))
        self.assertEqual(png_to_mask(mask_to_png(mask)), mask)
