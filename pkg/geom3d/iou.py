"""
IoU 2D, en vista de pájaro (BEV) y 3D.

La huella BEV de una caja es un rectángulo rotado en el plano x–z; la
intersección de dos huellas se calcula recortando polígonos convexos
(Sutherland–Hodgman) y midiendo el área con la fórmula del cordón.
"""

import numpy as np

from .boxes import box3d_corners


def iou_2d(a, b):
    """IoU de dos rectángulos (left, top, right, bottom); 0 si son disjuntos."""
    inter_w = min(a[2], b[2]) - max(a[0], b[0])
    inter_h = min(a[3], b[3]) - max(a[1], b[1])
    if inter_w <= 0 or inter_h <= 0:
        return 0.0
    inter = inter_w * inter_h
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return float(inter / union) if union > 0 else 0.0


def intersection_over_area(a, region):
    """Fracción del área de ``a`` cubierta por ``region`` (IoA)."""
    inter_w = min(a[2], region[2]) - max(a[0], region[0])
    inter_h = min(a[3], region[3]) - max(a[1], region[1])
    area = (a[2] - a[0]) * (a[3] - a[1])
    if inter_w <= 0 or inter_h <= 0 or area <= 0:
        return 0.0
    return float(inter_w * inter_h / area)


def polygon_area(polygon):
    """Área con signo (positiva en sentido antihorario)."""
    if len(polygon) < 3:
        return 0.0
    x, y = polygon[:, 0], polygon[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _counter_clockwise(polygon):
    return polygon if polygon_area(polygon) >= 0 else polygon[::-1]


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _line_intersection(p1, p2, q1, q2):
    d1 = p2 - p1
    d2 = q2 - q1
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    t = ((q1[0] - p1[0]) * d2[1] - (q1[1] - p1[1]) * d2[0]) / denom
    return p1 + t * d1


def clip_polygon(subject, clip):
    """
    Sutherland–Hodgman: recorta ``subject`` con el polígono convexo ``clip``.

    Ambos se reordenan en sentido antihorario antes de recortar.

    Returns:
        np.ndarray: vértices de la intersección (puede quedar vacío)
    """
    output = list(_counter_clockwise(np.asarray(subject, dtype=float)))
    clip = _counter_clockwise(np.asarray(clip, dtype=float))

    for i in range(len(clip)):
        edge_start, edge_end = clip[i], clip[(i + 1) % len(clip)]
        candidates, output = output, []
        if not candidates:
            break
        prev = candidates[-1]
        for point in candidates:
            point_inside = _cross(edge_start, edge_end, point) >= 0
            prev_inside = _cross(edge_start, edge_end, prev) >= 0
            if point_inside:
                if not prev_inside:
                    output.append(_line_intersection(prev, point, edge_start, edge_end))
                output.append(point)
            elif prev_inside:
                output.append(_line_intersection(prev, point, edge_start, edge_end))
            prev = point

    return np.array(output).reshape(-1, 2)


def bev_footprint(box):
    """Esquinas (x, z) de la cara inferior, arreglo (4, 2)."""
    return box3d_corners(box)[:4, [0, 2]]


def bev_intersection_area(a, b):
    overlap = clip_polygon(bev_footprint(a), bev_footprint(b))
    return abs(polygon_area(overlap))


def iou_bev(a, b):
    """IoU de las huellas rotadas en el plano x–z."""
    inter = bev_intersection_area(a, b)
    area_a = a.dims[1] * a.dims[2]
    area_b = b.dims[1] * b.dims[2]
    union = area_a + area_b - inter
    return float(min(max(inter / union, 0.0), 1.0)) if union > 0 else 0.0


def iou_3d(a, b):
    """IoU volumétrico: intersección BEV × solape vertical sobre [y - h, y]."""
    a_low, a_high = a.y_range
    b_low, b_high = b.y_range
    y_overlap = min(a_high, b_high) - max(a_low, b_low)
    if y_overlap <= 0:
        return 0.0

    inter = bev_intersection_area(a, b) * y_overlap
    union = a.volume + b.volume - inter
    return float(min(max(inter / union, 0.0), 1.0)) if union > 0 else 0.0
