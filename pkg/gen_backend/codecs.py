"""Codificación PNG/base64 de imágenes para los protocolos HTTP."""

import base64
import binascii
import io

import numpy as np
from PIL import Image, UnidentifiedImageError


def encode_png(array):
    buffer = io.BytesIO()
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(buffer, format='PNG')
    return buffer.getvalue()


def encode_png_b64(array):
    return base64.b64encode(encode_png(array)).decode('ascii')


def png_b64_from_bytes(data):
    return base64.b64encode(data).decode('ascii')


def decode_png_b64(text, mode='RGB'):
    """
    Decodifica un PNG en base64 a un arreglo uint8.

    Raises:
        ValueError: si el texto no es base64 válido o no contiene una imagen
    """
    try:
        data = base64.b64decode(text, validate=True)
        with Image.open(io.BytesIO(data)) as image:
            return np.asarray(image.convert(mode)).copy()
    except (binascii.Error, UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"Imagen PNG/base64 inválida: {exc}") from exc
