import asyncio
import base64
from unittest import mock

import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from geom3d.crops import BinaryMask, png_to_mask
from geom3d.orientation import Sector

from .backends import InpaintBackend, generate
from .codecs import decode_png_b64, encode_png_b64
from .exceptions import (
    BackendProtocolError, BackendTimeoutError, GuidanceShapeError,
    InvalidRequestError, PromptGrammarError,
)
from .guidance import cfg_combine
from .prompts import insertion_prompt, parse_prompt, removal_prompt
from .synthetic import SyntheticBackend, background_fill
from .types import Candidate, InpaintRequest, InpaintResponse
from .wire import WireInpaintBackend


def uniform_crop(side=32, color=(90, 90, 95)):
    return np.tile(np.array(color, dtype=np.uint8), (side, side, 1))


def random_crop(side=32, seed=0):
    return np.random.default_rng(seed).integers(0, 256, size=(side, side, 3), dtype=np.uint8)


class CfgCombineTest(SimpleTestCase):
    """Tests para cfg_combine"""

    def test_scalar_example(self):
        """Test: (0.5, 0.3, w=8) → 2.1"""
        self.assertAlmostEqual(float(cfg_combine(0.5, 0.3, 8)), 2.1, places=12)

    def test_zero_guidance_is_identity(self):
        """Test: w = 0 devuelve ε_cond"""
        cond = np.random.default_rng(0).normal(size=(4, 8, 8))
        np.testing.assert_array_equal(cfg_combine(cond, np.zeros_like(cond), 0.0), cond)

    def test_fixed_point(self):
        """Test: ε_cond == ε_uncond es punto fijo para cualquier w"""
        eps = np.random.default_rng(1).normal(size=(16,))
        for w in (0.0, 1.0, 7.5, 8.0, 20.0):
            np.testing.assert_allclose(cfg_combine(eps, eps, w), eps, atol=1e-12)

    def test_linearity(self):
        """Test: Lineal en ambos argumentos"""
        rng = np.random.default_rng(2)
        for _ in range(100):
            c1, c2, u1, u2 = rng.normal(size=(4, 3, 5))
            a, b, w = rng.normal(), rng.normal(), rng.uniform(0, 10)
            combined = cfg_combine(a * c1 + b * c2, a * u1 + b * u2, w)
            separate = a * cfg_combine(c1, u1, w) + b * cfg_combine(c2, u2, w)
            np.testing.assert_allclose(combined, separate, atol=1e-12)

    def test_shape_mismatch(self):
        """Test: Formas distintas producen error"""
        with self.assertRaises(GuidanceShapeError):
            cfg_combine(np.zeros(3), np.zeros(4), 8)


class PromptTest(SimpleTestCase):
    """Tests para los prompts de generación"""

    def test_insertion_prompt(self):
        """Test: Prompt de inserción con el token de orientación"""
        self.assertEqual(
            insertion_prompt('Cyclist', Sector.BACK_LEFT),
            'A cyclist, visible from back-left, centered in an empty background, photorealistic',
        )

    def test_parse_insertion(self):
        """Test: La gramática recupera objeto y orientación"""
        parsed = parse_prompt(insertion_prompt('Pedestrian', 'front'))

        self.assertEqual(parsed.kind, 'insertion')
        self.assertEqual(parsed.object_name, 'pedestrian')
        self.assertEqual(parsed.orientation, 'front')

    def test_parse_removal(self):
        """Test: El prompt de eliminación se reconoce"""
        self.assertEqual(parse_prompt(removal_prompt()).kind, 'removal')

    def test_unknown_prompt(self):
        """Test: Un prompt fuera de la gramática produce error"""
        for text in ('A red balloon', 'A cyclist, visible from above, centered in an empty background, photorealistic'):
            with self.assertRaises(PromptGrammarError):
                parse_prompt(text)


class SyntheticBackendTest(SimpleTestCase):
    """Tests para el backend sintético"""

    def setUp(self):
        """Configuración inicial"""
        self.backend = SyntheticBackend(jitter_px=2)
        self.mask = BinaryMask(size=32, region=(8, 6, 24, 28))

    def request(self, prompt, crop=None, mask=None, m=1, seed=0):
        return InpaintRequest(
            crop_image=uniform_crop() if crop is None else crop,
            mask=self.mask if mask is None else mask,
            prompt=prompt,
            num_candidates=m,
            seed=seed,
        )

    def test_insertion_offsets(self):
        """Test: m=3 y jitter 2 px → glifos desplazados 0, 2 y 4 px"""
        response = generate(self.request(insertion_prompt('Cyclist', 'left'), m=3), self.backend)
        lefts = [candidate.metadata['glyph_rect'][0] - 8 for candidate in response.candidates]

        self.assertEqual(lefts, [0, 2, 4])
        self.assertEqual([c.metadata['seed'] for c in response.candidates], [0, 1, 2])
        self.assertEqual(response.candidates[0].metadata['orientation'], 'left')

    def test_removal_on_uniform_crop(self):
        """Test: Eliminar sobre un recorte uniforme deja la región del mismo color"""
        crop = uniform_crop()
        response = generate(self.request(removal_prompt(), crop=crop, m=2), self.backend)

        for candidate in response.candidates:
            np.testing.assert_array_equal(candidate.image, crop)

    def test_removal_interpolates_rows(self):
        """Test: El relleno interpola entre la fila de arriba y la de abajo"""
        crop = np.zeros((10, 10, 3), dtype=np.uint8)
        crop[7:] = 120
        filled = background_fill(crop, BinaryMask(size=10, region=(2, 3, 8, 7)))

        # Fila 2 = 0 y fila 7 = 120; cuatro filas intermedias
        np.testing.assert_array_equal(filled[3:7, 5, 0], [24, 48, 72, 96])
        np.testing.assert_array_equal(filled[:, :2], crop[:, :2])

    def test_removal_edge_copies_other_side(self):
        """Test: Si la máscara toca el borde superior se copia la fila de abajo"""
        crop = np.zeros((10, 10, 3), dtype=np.uint8)
        crop[6] = 77
        filled = background_fill(crop, BinaryMask(size=10, region=(0, 0, 10, 6)))

        self.assertTrue(np.all(filled[:6] == 77))

    def test_same_seed_byte_identical(self):
        """Test: La misma solicitud produce bytes idénticos"""
        backend = SyntheticBackend(jitter_px=2, noise_std=4.0)
        for prompt in (removal_prompt(), insertion_prompt('Pedestrian', 'right')):
            first = generate(self.request(prompt, crop=random_crop(), m=3, seed=11), backend)
            second = generate(self.request(prompt, crop=random_crop(), m=3, seed=11), backend)
            for a, b in zip(first.candidates, second.candidates):
                self.assertEqual(a.image.tobytes(), b.image.tobytes())

    def test_left_and_right_are_mirrored(self):
        """Test: Los glifos de izquierda y derecha son espejos"""
        left = generate(self.request(insertion_prompt('Cyclist', 'left')), self.backend).candidates[0]
        right = generate(self.request(insertion_prompt('Cyclist', 'right')), self.backend).candidates[0]

        region_left = left.image[6:28, 8:24]
        region_right = right.image[6:28, 8:24]
        np.testing.assert_array_equal(region_left, region_right[:, ::-1])
        self.assertFalse(np.array_equal(region_left, region_right))

    def test_unknown_prompt(self):
        """Test: Un prompt fuera de la gramática produce error"""
        with self.assertRaises(PromptGrammarError):
            generate(self.request('Paint a dragon'), self.backend)


class GenerateContractTest(SimpleTestCase):
    """Tests para el contrato de generate"""

    class FullFrameBackend(InpaintBackend):
        name = 'full-frame'

        def __init__(self, count_delta=0):
            self.count_delta = count_delta

        def render(self, request):
            return InpaintResponse(candidates=[
                Candidate(index=i, image=np.full_like(request.crop_image, 255), metadata={'seed': i})
                for i in range(request.num_candidates + self.count_delta)
            ])

    def setUp(self):
        """Configuración inicial"""
        self.crop = random_crop(seed=3)
        self.mask = BinaryMask(size=32, region=(4, 4, 12, 20))

    def test_mask_reimposed(self):
        """Test: Los píxeles fuera de la máscara se restauran del recorte"""
        request = InpaintRequest(crop_image=self.crop, mask=self.mask, prompt='x', num_candidates=2)
        response = generate(request, self.FullFrameBackend())
        inside = self.mask.to_array().astype(bool)

        for candidate in response.candidates:
            np.testing.assert_array_equal(candidate.image[~inside], self.crop[~inside])
            self.assertTrue(np.all(candidate.image[inside] == 255))

    def test_zero_area_mask(self):
        """Test: Con máscara vacía los candidatos son iguales a la entrada"""
        request = InpaintRequest(crop_image=self.crop, mask=BinaryMask.empty(32), prompt='x', num_candidates=3)
        for candidate in generate(request, self.FullFrameBackend()).candidates:
            np.testing.assert_array_equal(candidate.image, self.crop)

    def test_wrong_count(self):
        """Test: m−1 candidatos es un error de protocolo"""
        request = InpaintRequest(crop_image=self.crop, mask=self.mask, prompt='x', num_candidates=3)
        with self.assertRaises(BackendProtocolError):
            generate(request, self.FullFrameBackend(count_delta=-1))

    def test_invalid_request(self):
        """Test: steps = 0 es una solicitud inválida"""
        request = InpaintRequest(crop_image=self.crop, mask=self.mask, prompt='x', steps=0)
        with self.assertRaises(InvalidRequestError):
            generate(request, self.FullFrameBackend())


class WireInpaintBackendTest(SimpleTestCase):
    """Tests para el cliente HTTP de inpainting"""

    def setUp(self):
        """Configuración inicial"""
        self.crop = random_crop(seed=4)
        self.mask = BinaryMask(size=32, region=(8, 8, 24, 24))
        self.request = InpaintRequest(
            crop_image=self.crop, mask=self.mask, prompt=removal_prompt(), num_candidates=4, seed=100,
        )

    def reply(self, payload, value=200):
        count = payload['num_candidates']
        patch = np.full_like(self.crop, value)
        return {'candidates': [
            {'image_png_b64': encode_png_b64(patch), 'seed': payload['seed'] + i} for i in range(count)
        ]}

    def test_batches_ordered_by_index(self):
        """Test: Los lotes que terminan en desorden se ordenan por índice"""
        backend = WireInpaintBackend(url='http://inpaint.local', max_candidates_per_request=1, backoff_s=0)
        payloads = []

        async def fake_post(session, payload):
            payloads.append(payload)
            # El primer lote termina último
            await asyncio.sleep(0.02 if payload['seed'] == 100 else 0)
            return self.reply(payload, value=payload['seed'] - 100)

        with mock.patch.object(backend, '_post_json', side_effect=fake_post):
            response = generate(self.request, backend)

        self.assertEqual(len(payloads), 4)
        self.assertEqual([c.index for c in response.candidates], [0, 1, 2, 3])
        self.assertEqual([c.seed for c in response.candidates], [100, 101, 102, 103])
        inside = self.mask.to_array().astype(bool)
        for candidate in response.candidates:
            self.assertTrue(np.all(candidate.image[inside] == candidate.index))
            np.testing.assert_array_equal(candidate.image[~inside], self.crop[~inside])

    def test_wire_payload(self):
        """Test: El cuerpo incluye imagen, máscara PNG 0/255 y parámetros"""
        backend = WireInpaintBackend(url='http://inpaint.local', backoff_s=0)
        captured = {}

        async def fake_post(session, payload):
            captured.update(payload)
            return self.reply(payload)

        with mock.patch.object(backend, '_post_json', side_effect=fake_post):
            generate(self.request, backend)

        self.assertEqual(captured['num_candidates'], 4)
        self.assertEqual(captured['steps'], 30)
        self.assertEqual(captured['guidance_scale'], 8.0)
        np.testing.assert_array_equal(decode_png_b64(captured['image_png_b64']), self.crop)
        self.assertEqual(png_to_mask(base64.b64decode(captured['mask_png_b64'])), self.mask)

    def test_missing_candidate(self):
        """Test: Una respuesta con m−1 parches es error de protocolo"""
        backend = WireInpaintBackend(url='http://inpaint.local', backoff_s=0)

        async def fake_post(session, payload):
            body = self.reply(payload)
            body['candidates'].pop()
            return body

        with mock.patch.object(backend, '_post_json', side_effect=fake_post):
            with self.assertRaises(BackendProtocolError):
                generate(self.request, backend)

    def test_retry_then_success(self):
        """Test: Un timeout se reintenta y el segundo intento funciona"""
        backend = WireInpaintBackend(url='http://inpaint.local', backoff_s=0)
        calls = []

        async def fake_post(session, payload):
            calls.append(1)
            if len(calls) == 1:
                raise asyncio.TimeoutError()
            return self.reply(payload)

        with mock.patch.object(backend, '_post_json', side_effect=fake_post):
            response = generate(self.request, backend)

        self.assertEqual(len(calls), 2)
        self.assertEqual(len(response.candidates), 4)

    def test_timeout_after_three_attempts(self):
        """Test: Tres timeouts seguidos agotan los intentos"""
        backend = WireInpaintBackend(url='http://inpaint.local', backoff_s=0)
        post = mock.AsyncMock(side_effect=asyncio.TimeoutError())

        with mock.patch.object(backend, '_post_json', post):
            with self.assertRaises(BackendTimeoutError):
                generate(self.request, backend)
        self.assertEqual(post.await_count, 3)

    @override_settings(LTDA_INPAINT_URL='')
    def test_missing_endpoint(self):
        """Test: Sin LTDA_INPAINT_URL el backend no se puede construir"""
        with self.assertRaisesMessage(ImproperlyConfigured, 'LTDA_INPAINT_URL'):
            WireInpaintBackend.from_settings()
