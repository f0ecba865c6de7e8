import re
import tempfile
from pathlib import Path
from unittest import mock

import aiohttp
import numpy as np
from django.core.exceptions import ImproperlyConfigured
from django.test import SimpleTestCase, override_settings

from gen_backend.codecs import decode_png_b64
from gen_backend.synthetic import background_fill
from gen_backend.types import Candidate
from geom3d.crops import BinaryMask

from .exceptions import ExemplarMissingError, JudgeError, VerdictParseError
from .exemplars import build_exemplars, exemplar_path, load_exemplars
from .judges import Judge, MockJudge
from .parsers import parse_explained_verdict, parse_scored_verdict
from .prompts import render_geometric_prompt, render_removal_prompt, render_viewpoint_prompt
from .queries import WIREFRAME_COLOR, build_geometric_query, build_removal_query, build_viewpoint_query
from .remote import STRICT_FORMAT_SUFFIX, RateLimiter, RemoteJudge
from .selection import evaluate_chain, filter_top_k
from .types import CandidateSet, JudgeQuery, Protocol, Verdict

GOLDEN_DIR = Path(__file__).resolve().parent / 'testdata' / 'golden'


def golden(name):
    return (GOLDEN_DIR / name).read_text(encoding='utf-8')


def make_candidates(count, side=16):
    return [Candidate(index=i, image=np.zeros((side, side, 3), dtype=np.uint8)) for i in range(count)]


def scored_set(answers):
    """CandidateSet con veredictos de eliminación [(accepted, score), ...]."""
    candidate_set = CandidateSet(candidates=make_candidates(len(answers)))
    for index, (accepted, score) in enumerate(answers):
        candidate_set.set_verdict(
            Protocol.REMOVAL_QUALITY, index, Verdict(accepted=accepted, score=score),
        )
    return candidate_set


class PromptGoldenTest(SimpleTestCase):
    """Tests para los prompts de los jueces contra los archivos golden"""

    def test_removal_prompt(self):
        """Test: (car, 0, 10) y (van, 1, 5)"""
        self.assertEqual(render_removal_prompt('Car', 0, 10), golden('removal_quality_car_0_10.txt'))
        self.assertEqual(render_removal_prompt('Van', 1, 5), golden('removal_quality_van_1_5.txt'))

    def test_removal_prompt_starts_like_the_protocol(self):
        """Test: El prompt de eliminación pide una sola palabra y un puntaje"""
        text = render_removal_prompt('Car')
        self.assertTrue(text.startswith('Compare the two images. Was the car removed'))
        self.assertIn('Respond with a single word', text)

    def test_geometric_prompt(self):
        """Test: cyclist y pedestrian"""
        self.assertEqual(render_geometric_prompt('Cyclist'), golden('geometric_plausibility_cyclist.txt'))
        self.assertEqual(render_geometric_prompt('Pedestrian'), golden('geometric_plausibility_pedestrian.txt'))

    def test_viewpoint_prompt(self):
        """Test: (car, cyclist) y (car, pedestrian)"""
        self.assertEqual(
            render_viewpoint_prompt('Car', 'Cyclist'), golden('viewpoint_consistency_car_cyclist.txt'),
        )
        self.assertEqual(
            render_viewpoint_prompt('Car', 'Pedestrian'), golden('viewpoint_consistency_car_pedestrian.txt'),
        )

    def test_quotes_not_escaped(self):
        """Test: El prompt geométrico usa comillas tipográficas y el de punto de vista rectas sin escapar"""
        self.assertIn('‘yes’ or ‘no,’', render_geometric_prompt('Cyclist'))
        self.assertNotIn("'yes'", render_geometric_prompt('Cyclist'))
        self.assertIn("'yes' or 'no,'", render_viewpoint_prompt('Car', 'Cyclist'))
        self.assertNotIn('&#x27;', render_viewpoint_prompt('Car', 'Cyclist'))

    def test_invalid_score_range(self):
        """Test: lower >= upper es error"""
        with self.assertRaises(ValueError):
            render_removal_prompt('Car', 5, 5)


class ParseScoredVerdictTest(SimpleTestCase):
    """Tests para parse_scored_verdict"""

    def test_yes_nine(self):
        """Test: "Yes, 9." → aceptado con 9"""
        verdict = parse_scored_verdict('Yes, 9.', 0, 10)
        self.assertTrue(verdict.accepted)
        self.assertEqual(verdict.score, 9)
        self.assertEqual(verdict.raw, 'Yes, 9.')

    def test_no_two(self):
        """Test: "no, 2" → rechazado con 2"""
        verdict = parse_scored_verdict('no, 2', 0, 10)
        self.assertFalse(verdict.accepted)
        self.assertEqual(verdict.score, 2)

    def test_markdown_and_spacing(self):
        """Test: Se toleran markdown y espacios alrededor de la coma"""
        self.assertEqual(parse_scored_verdict('**Yes** , 8', 0, 10).score, 8)
        self.assertEqual(parse_scored_verdict('  "NO,3"', 0, 10).score, 3)

    def test_no_leading_token(self):
        """Test: "The removal looks fine" no se acepta"""
        with self.assertRaises(VerdictParseError) as ctx:
            parse_scored_verdict('The removal looks fine', 0, 10)
        self.assertEqual(ctx.exception.raw, 'The removal looks fine')

    def test_missing_score(self):
        """Test: yes sin puntaje es error"""
        with self.assertRaises(VerdictParseError) as ctx:
            parse_scored_verdict('yes', 0, 10)
        self.assertIn('puntaje', ctx.exception.reason)

    def test_decimal_score_rejected(self):
        """Test: "yes, 9.5" no se trunca a 9; "yes, 9." sigue valiendo"""
        for raw in ('yes, 9.5', 'no, 10.25 points', 'Yes, 7.0'):
            with self.assertRaises(VerdictParseError) as ctx:
                parse_scored_verdict(raw, 0, 10)
            self.assertIn('entero', ctx.exception.reason)
        self.assertEqual(parse_scored_verdict('yes, 9. Clean road.', 0, 10).score, 9)

    def test_out_of_range(self):
        """Test: Puntaje fuera del rango es error"""
        with self.assertRaises(VerdictParseError):
            parse_scored_verdict('yes, 11', 0, 10)
        with self.assertRaises(VerdictParseError):
            parse_scored_verdict('yes, 0', 1, 5)

    def test_words_that_start_with_yes(self):
        """Test: "yesterday, 5" y "nope, 5" no se aceptan"""
        for raw in ('yesterday, 5', 'nope, 5', 'y*es, 5'):
            with self.assertRaises(VerdictParseError):
                parse_scored_verdict(raw, 0, 10)


class ParseExplainedVerdictTest(SimpleTestCase):
    """Tests para parse_explained_verdict"""

    def test_geometric_response(self):
        """Test: Respuesta afirmativa con explicación"""
        raw = (
            'Yes, the cyclist fits well within the 3D bounding box. The box is tightly aligned with '
            'the cyclist, with minimal extra space and no significant parts left outside.'
        )
        verdict = parse_explained_verdict(raw)
        self.assertTrue(verdict.accepted)
        self.assertTrue(verdict.explanation.startswith('the cyclist fits well'))
        self.assertIsNone(verdict.score)

    def test_no_with_period(self):
        """Test: "No. The box is loose." conserva la explicación"""
        verdict = parse_explained_verdict('No. The box is loose.')
        self.assertFalse(verdict.accepted)
        self.assertEqual(verdict.explanation, 'The box is loose.')

    def test_maybe(self):
        """Test: "Maybe" es error"""
        with self.assertRaises(VerdictParseError):
            parse_explained_verdict('Maybe')


class FuzzedResponsesTest(SimpleTestCase):
    """Tests para los parsers con respuestas aleatorias"""

    PREFIXES = ['', 'yes', 'no', 'Yes', 'NO', 'yesterday', 'nope', 'maybe', '**', '"', 'y', 'n', '_', '9 ']
    ALPHABET = list('yesnoYESNOabxz0123456789 ,.*_#`-!:')

    def test_first_alphabetic_token_must_be_yes_or_no(self):
        """Test: 1000 respuestas: nunca se acepta una cuyo primer token no sea yes/no"""
        rng = np.random.default_rng(2024)
        accepted = 0
        for _ in range(1000):
            prefix = self.PREFIXES[rng.integers(len(self.PREFIXES))]
            body = ''.join(rng.choice(self.ALPHABET, size=rng.integers(0, 12)))
            raw = prefix + body
            token = re.search(r'[A-Za-z]+', raw)

            for parse in (lambda text: parse_scored_verdict(text, 0, 10), parse_explained_verdict):
                try:
                    verdict = parse(raw)
                except VerdictParseError:
                    continue
                accepted += 1
                self.assertIsNotNone(token, raw)
                self.assertIn(token.group().lower(), ('yes', 'no'), raw)
                self.assertEqual(verdict.accepted, token.group().lower() == 'yes', raw)

        self.assertGreater(accepted, 0)


class FilterTopKTest(SimpleTestCase):
    """Tests para filter_top_k"""

    chain = [Protocol.REMOVAL_QUALITY]

    def test_gate_then_rank(self):
        """Test: (yes,9),(yes,7),(no,10) con k=1 → el candidato 0"""
        result = filter_top_k(scored_set([(True, 9), (True, 7), (False, 10)]), self.chain, k=1)
        self.assertEqual(result.selected, [0])
        self.assertFalse(result.flagged)

    def test_k_larger_than_survivors(self):
        """Test: Con k=3 solo se devuelven los que pasan las compuertas"""
        result = filter_top_k(scored_set([(True, 7), (True, 9), (False, 10)]), self.chain, k=3)
        self.assertEqual(result.selected, [1, 0])

    def test_all_rejected(self):
        """Test: Todos "no" → selección vacía y marcada"""
        result = filter_top_k(scored_set([(False, 9), (False, 8)]), self.chain, k=1)
        self.assertEqual(result.selected, [])
        self.assertTrue(result.flagged)

    def test_tie_lower_index_wins(self):
        """Test: Empate (yes,8),(yes,8) → gana el índice menor"""
        result = filter_top_k(scored_set([(True, 8), (True, 8)]), self.chain, k=1)
        self.assertEqual(result.selected, [0])

    def test_score_floor(self):
        """Test: yes con puntaje bajo el piso no pasa"""
        result = filter_top_k(scored_set([(True, 6), (True, 7)]), self.chain, k=2)
        self.assertEqual(result.selected, [1])
        self.assertEqual(filter_top_k(scored_set([(True, 6)]), self.chain, k=1, score_floor=5).selected, [0])

    def test_permutation_invariant(self):
        """Test: El orden de la lista de candidatos no cambia la selección"""
        rng = np.random.default_rng(5)
        answers = [(bool(rng.integers(2)), int(rng.integers(0, 11))) for _ in range(12)]
        expected = filter_top_k(scored_set(answers), self.chain, k=4).selected

        for _ in range(10):
            candidate_set = scored_set(answers)
            order = rng.permutation(len(answers))
            candidate_set.candidates = [candidate_set.candidates[i] for i in order]
            self.assertEqual(filter_top_k(candidate_set, self.chain, k=4).selected, expected)

    def test_selected_pass_every_gate(self):
        """Test: Con cadena de dos jueces solo sobreviven los aceptados por ambos"""
        candidate_set = scored_set([(True, 9), (True, 8), (True, 10)])
        for index, accepted in enumerate([False, True, True]):
            candidate_set.set_verdict(
                Protocol.GEOMETRIC_PLAUSIBILITY, index, Verdict(accepted=accepted, explanation=''),
            )
        chain = [Protocol.REMOVAL_QUALITY, Protocol.GEOMETRIC_PLAUSIBILITY]
        self.assertEqual(filter_top_k(candidate_set, chain, k=2).selected, [2, 1])

    def test_unscored_chain_ranks_by_index(self):
        """Test: Sin protocolos con puntaje se ordena por índice"""
        candidate_set = CandidateSet(candidates=make_candidates(3))
        for index in (2, 0, 1):
            candidate_set.set_verdict(
                Protocol.VIEWPOINT_CONSISTENCY, index, Verdict(accepted=True, explanation=''),
            )
        result = filter_top_k(candidate_set, [Protocol.VIEWPOINT_CONSISTENCY], k=2)
        self.assertEqual(result.selected, [0, 1])

    def test_empty_chain_keeps_first_k(self):
        """Test: Con todos los filtros apagados quedan los primeros k"""
        result = filter_top_k(CandidateSet(candidates=make_candidates(4)), [], k=2)
        self.assertEqual(result.selected, [0, 1])

    def test_missing_verdict(self):
        """Test: Falta un veredicto de la cadena"""
        candidate_set = scored_set([(True, 9)])
        with self.assertRaises(ValueError):
            filter_top_k(candidate_set, [Protocol.GEOMETRIC_PLAUSIBILITY], k=1)


class EvaluateChainTest(SimpleTestCase):
    """Tests para evaluate_chain"""

    class ScriptedJudge(Judge):
        name = 'scripted'

        def __init__(self, answers):
            self.answers = answers
            self.calls = []

        def judge(self, query, metadata=None):
            self.calls.append((query.protocol, query.candidate_index))
            return self.answers[query.protocol][query.candidate_index]

    def build_item(self, protocol, candidate):
        crop = candidate.image
        if protocol == Protocol.REMOVAL_QUALITY:
            return build_removal_query(crop, candidate, 'Car'), {}
        return build_viewpoint_query(crop, candidate, 'Car', 'Cyclist'), {}

    def test_rejected_candidates_skip_later_judges(self):
        """Test: Un candidato rechazado no llega al siguiente juez"""
        judge = self.ScriptedJudge({
            Protocol.REMOVAL_QUALITY: {
                0: Verdict(accepted=True, score=9), 1: Verdict(accepted=False, score=2),
                2: Verdict(accepted=True, score=8),
            },
            Protocol.VIEWPOINT_CONSISTENCY: {
                0: Verdict(accepted=False, explanation='x'), 2: Verdict(accepted=True, explanation='y'),
            },
        })
        chain = [Protocol.REMOVAL_QUALITY, Protocol.VIEWPOINT_CONSISTENCY]
        candidate_set = evaluate_chain(CandidateSet(candidates=make_candidates(3)), chain, judge, self.build_item)

        self.assertNotIn((Protocol.VIEWPOINT_CONSISTENCY, 1), judge.calls)
        skipped = candidate_set.verdict(Protocol.VIEWPOINT_CONSISTENCY, 1)
        self.assertFalse(skipped.evaluated)
        self.assertEqual(filter_top_k(candidate_set, chain, k=3).selected, [2])


class MockJudgeTest(SimpleTestCase):
    """Tests para el juez determinista"""

    def setUp(self):
        """Configuración inicial"""
        self.judge = MockJudge()
        self.mask = BinaryMask(size=32, region=(8, 8, 24, 24))
        self.original = np.zeros((32, 32, 3), dtype=np.uint8)
        self.original[8:24, 8:24] = 255

    def removal(self, image):
        query = build_removal_query(self.original, Candidate(index=0, image=image), 'Car')
        return self.judge.judge(query, {'mask': self.mask})

    def geometric(self, glyph_rect, projected_rect):
        candidate = Candidate(index=0, image=self.original.copy())
        corners = np.zeros((8, 2))
        query = build_geometric_query((self.original, self.original), candidate, corners, 'Cyclist')
        metadata = {'glyph_rect': glyph_rect, 'projected_rect': projected_rect, 'object_name': 'Cyclist'}
        return self.judge.judge(query, metadata)

    def viewpoint(self, head_sector, orientation):
        query = build_viewpoint_query(self.original, Candidate(index=0, image=self.original), 'Car', 'Cyclist')
        metadata = {
            'head_sector': head_sector, 'orientation': orientation,
            'head_class': 'Car', 'object_name': 'Cyclist',
        }
        return self.judge.judge(query, metadata)

    def test_clean_removal(self):
        """Test: El relleno de fondo exacto recibe 10"""
        verdict = self.removal(background_fill(self.original, self.mask))
        self.assertTrue(verdict.accepted)
        self.assertEqual(verdict.score, 10)
        self.assertEqual(verdict.raw, 'Yes, 10.')

    def test_object_left_in_place(self):
        """Test: Si el objeto sigue ahí el puntaje es 0"""
        verdict = self.removal(self.original)
        self.assertFalse(verdict.accepted)
        self.assertEqual(verdict.score, 0)

    def test_glyph_fills_projected_box(self):
        """Test: Glifo igual a la caja proyectada → aceptado"""
        self.assertTrue(self.geometric((4, 4, 20, 28), (4, 4, 20, 28)).accepted)

    def test_glyph_offset(self):
        """Test: Glifo corrido (IoU ≈ 0.33) → rechazado"""
        self.assertFalse(self.geometric((0, 0, 10, 10), (5, 0, 15, 10)).accepted)

    def test_no_visible_glyph(self):
        """Test: Sin glifo visible → rechazado"""
        self.assertFalse(self.geometric(None, (5, 0, 15, 10)).accepted)

    def test_matching_sectors(self):
        """Test: Sectores iguales → aceptado"""
        verdict = self.viewpoint('front-left', 'front-left')
        self.assertTrue(verdict.accepted)
        self.assertIn('front-left of the car', verdict.explanation)

    def test_adjacent_sectors_tolerance(self):
        """Test: Sectores vecinos solo pasan con tolerancia 1"""
        self.assertFalse(self.viewpoint('front-left', 'left').accepted)
        self.judge = MockJudge(viewpoint_tolerance=1)
        self.assertTrue(self.viewpoint('front-left', 'left').accepted)

    def test_missing_metadata(self):
        """Test: Sin metadatos el juez falla"""
        query = build_removal_query(self.original, Candidate(index=0, image=self.original), 'Car')
        with self.assertRaises(JudgeError):
            self.judge.judge(query, {})


class JudgeQueryTest(SimpleTestCase):
    """Tests para el armado de consultas"""

    def test_arity(self):
        """Test: La cantidad de imágenes debe coincidir con el protocolo"""
        image = np.zeros((8, 8, 3), dtype=np.uint8)
        with self.assertRaises(ValueError):
            JudgeQuery(protocol=Protocol.REMOVAL_QUALITY, images=[image] * 3, prompt_text='x')
        with self.assertRaises(ValueError):
            JudgeQuery(protocol=Protocol.GEOMETRIC_PLAUSIBILITY, images=[image] * 2, prompt_text='x')

    def test_geometric_query_draws_box(self):
        """Test: El tercer panel lleva la caja dibujada y el candidato queda intacto"""
        image = np.zeros((64, 64, 3), dtype=np.uint8)
        candidate = Candidate(index=3, image=image)
        corners = np.array([
            [10, 50], [40, 50], [50, 44], [20, 44],
            [10, 20], [40, 20], [50, 14], [20, 14],
        ], dtype=float)
        query = build_geometric_query((image, image), candidate, corners, 'Pedestrian')

        drawn = query.images[2]
        self.assertGreater(int(np.all(drawn == WIREFRAME_COLOR, axis=-1).sum()), 0)
        self.assertEqual(int(image.sum()), 0)
        self.assertEqual(query.candidate_index, 3)
        self.assertIn('does the pedestrian fit well', query.prompt_text)


class ExemplarTest(SimpleTestCase):
    """Tests para los paneles de ejemplo"""

    def test_missing_assets(self):
        """Test: Directorio vacío → ExemplarMissingError con el comando para generarlos"""
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaisesMessage(ExemplarMissingError, f'build_exemplars --dest {tmp}'):
                load_exemplars(tmp, 'Cyclist')

    def test_build_and_load(self):
        """Test: Se escriben y leen positivo y negativo por clase"""
        with tempfile.TemporaryDirectory() as tmp:
            written = build_exemplars(tmp, ['Cyclist', 'Pedestrian'])
            self.assertEqual(len(written), 4)
            self.assertTrue(exemplar_path(tmp, 'Cyclist', 'positive').is_file())

            positive, negative = load_exemplars(tmp, 'Cyclist')
            self.assertEqual(positive.shape, (256, 256, 3))
            self.assertEqual(negative.shape, (256, 256, 3))
            self.assertFalse(np.array_equal(positive, negative))

    def test_deterministic(self):
        """Test: Dos construcciones producen los mismos bytes"""
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            build_exemplars(first, ['Cyclist'])
            build_exemplars(second, ['Cyclist'])
            for kind in ('positive', 'negative'):
                self.assertEqual(
                    exemplar_path(first, 'Cyclist', kind).read_bytes(),
                    exemplar_path(second, 'Cyclist', kind).read_bytes(),
                )


class RemoteJudgeTest(SimpleTestCase):
    """Tests para el juez LLM remoto"""

    def setUp(self):
        """Configuración inicial"""
        self.judge = RemoteJudge(url='http://llm.local', model='judge-model', rpm=0, backoff_s=0)
        crop = np.zeros((16, 16, 3), dtype=np.uint8)
        self.query = build_removal_query(crop, Candidate(index=2, image=crop), 'Car')

    def scripted(self, replies):
        payloads = []

        async def fake_post(session, payload):
            payloads.append(payload)
            reply = replies[len(payloads) - 1]
            if isinstance(reply, Exception):
                raise reply
            return {'text': reply}

        return payloads, fake_post

    def test_payload_and_verdict(self):
        """Test: Temperatura 0, prompt y dos imágenes; "Yes, 9." → 9"""
        payloads, fake_post = self.scripted(['Yes, 9.'])
        with mock.patch.object(self.judge, '_post_json', side_effect=fake_post):
            verdict = self.judge.judge(self.query)

        self.assertEqual(verdict.score, 9)
        self.assertEqual(len(payloads), 1)
        self.assertEqual(payloads[0]['temperature'], 0)
        self.assertEqual(payloads[0]['model'], 'judge-model')
        message = payloads[0]['messages'][0]
        self.assertEqual(message['text'], self.query.prompt_text)
        self.assertEqual(len(message['images']), 2)

    def test_retry_on_parse_failure(self):
        """Test: Una respuesta fuera de formato se repite una vez con la instrucción"""
        payloads, fake_post = self.scripted(['The removal looks fine', 'yes, 8'])
        with mock.patch.object(self.judge, '_post_json', side_effect=fake_post):
            verdict = self.judge.judge(self.query)

        self.assertEqual(verdict.score, 8)
        self.assertEqual(len(payloads), 2)
        self.assertTrue(payloads[1]['messages'][0]['text'].endswith(STRICT_FORMAT_SUFFIX))

    def test_second_parse_failure_rejects(self):
        """Test: Dos respuestas ilegibles → rechazo sin evaluar"""
        payloads, fake_post = self.scripted(['Maybe', 'Still not sure'])
        with mock.patch.object(self.judge, '_post_json', side_effect=fake_post):
            verdict = self.judge.judge(self.query)

        self.assertFalse(verdict.accepted)
        self.assertFalse(verdict.evaluated)
        self.assertEqual(verdict.raw, 'Still not sure')

    def test_service_down(self):
        """Test: Tres fallas de red → JudgeError"""
        failures = [aiohttp.ClientError('down')] * 3
        payloads, fake_post = self.scripted(failures)
        with mock.patch.object(self.judge, '_post_json', side_effect=fake_post):
            with self.assertRaises(JudgeError):
                self.judge.judge(self.query)
        self.assertEqual(len(payloads), 3)

    def test_judge_many_keeps_order(self):
        """Test: Los veredictos vuelven en el orden de las consultas"""
        crop = np.zeros((16, 16, 3), dtype=np.uint8)
        queries = [
            build_removal_query(crop, Candidate(index=i, image=crop + i), 'Car') for i in range(3)
        ]

        async def fake_post(session, payload):
            # El valor del píxel identifica al candidato; se responde con ese puntaje
            value = int(decode_png_b64(payload['messages'][0]['images'][1])[0, 0, 0])
            return {'text': f'yes, {value + 5}'}

        with mock.patch.object(self.judge, '_post_json', side_effect=fake_post):
            verdicts = self.judge.judge_many([(query, None) for query in queries])
        self.assertEqual([verdict.score for verdict in verdicts], [5, 6, 7])

    @override_settings(LTDA_LLM_URL='')
    def test_missing_endpoint(self):
        """Test: Sin LTDA_LLM_URL no se puede construir"""
        with self.assertRaises(ImproperlyConfigured):
            RemoteJudge.from_settings()


class RateLimiterTest(SimpleTestCase):
    """Tests para el presupuesto de solicitudes por minuto"""

    def test_spacing(self):
        """Test: 60 rpm con el reloj detenido → esperas de 0, 1 y 2 s"""
        sleeps = []
        limiter = RateLimiter(60, clock=lambda: 100.0, sleep=sleeps.append)
        waits = [limiter.acquire() for _ in range(3)]
        self.assertEqual(waits, [0.0, 1.0, 2.0])
        self.assertEqual(sleeps, [1.0, 2.0])

    def test_unlimited(self):
        """Test: rpm=0 no espera"""
        limiter = RateLimiter(0, clock=lambda: 0.0, sleep=self.fail)
        self.assertEqual(limiter.acquire(), 0.0)
        self.assertEqual(limiter.acquire(), 0.0)
