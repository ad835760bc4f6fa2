# -*- coding: utf-8 -*-
import base64
import io
import os
from unittest import mock

import requests
from PIL import Image

from effect_lab.exceptions import (
    ConfigError, ExternalServiceError, UnparseableReply, VlmAuthError, VlmTimeout,
)
from effect_lab.metrics import EvalOptions, eval_set
from effect_lab.mock_vlm import MockVlmServer
from effect_lab.qscore import REDACTED, VlmClient, VlmConfig, parse_score, qscore, qscore_batch
from effect_lab.video import write_video_dir

from .base import EffectLabTestCase, TempDirMixin, random_video

TOKEN = 'tok-abcdef-secret'


def vlm_config(server, **kwargs):
    values = dict(endpoint=server.url, max_retries=2, backoff_factor=0.0,
                  timeout=5.0, frames_per_request=3, max_in_flight=2)
    values.update(kwargs)
    return VlmConfig(**values)


class ParseScoreTestCase(EffectLabTestCase):

    def test_numbers(self):
        self.assertEqual(parse_score('7'), 7.0)
        self.assertEqual(parse_score('Score: 8.5 out of 10'), 8.5)
        self.assertEqual(parse_score('10'), 10.0)
        self.assertEqual(parse_score('0'), 0.0)

    def test_rejects(self):
        self.assertIsNone(parse_score('no idea'))
        self.assertIsNone(parse_score(''))
        self.assertIsNone(parse_score(None))
        self.assertIsNone(parse_score('11'))
        self.assertIsNone(parse_score('-2'))

    def test_config_checks(self):
        with self.assertRaises(ConfigError):
            VlmConfig(max_retries=-1)
        with self.assertRaises(ConfigError):
            VlmConfig(timeout=0)


class VlmClientTestCase(TempDirMixin, EffectLabTestCase):

    def setUp(self):
        super(VlmClientTestCase, self).setUp()
        self.video_dir = os.path.join(self.tmp_dir, 'video')
        write_video_dir(random_video(frames=5, height=8, width=8), self.video_dir)

    def test_scores_a_video(self):
        with MockVlmServer(replies=[(200, '7.5')]) as server:
            score = qscore(self.video_dir, vlm_config(server))
        self.assertEqual(score, 7.5)
        self.assertEqual(len(server.requests), 1)
        request = server.requests[0]
        self.assertEqual(request['path'], '/v1/score')
        payload = request['payload']
        self.assertEqual(payload['model'], 'qwen-vl')
        self.assertIn('3 frames', payload['prompt'])
        self.assertIn('0 to 10', payload['prompt'])
        self.assertEqual(len(payload['images']), 3)
        with Image.open(io.BytesIO(base64.b64decode(payload['images'][0]))) as image:
            self.assertEqual(image.size, (8, 8))
            self.assertEqual(image.mode, 'RGB')

    def test_retries_server_errors(self):
        with MockVlmServer(replies=[(503, 'busy'), (502, 'busy'), (200, '6')]) as server:
            score = qscore(self.video_dir, vlm_config(server))
        self.assertEqual(score, 6.0)
        self.assertEqual(len(server.requests), 3)

    def test_gives_up_after_retries(self):
        with MockVlmServer(default=(500, 'down')) as server:
            with self.assertRaises(ExternalServiceError):
                qscore(self.video_dir, vlm_config(server, max_retries=1))
        self.assertEqual(len(server.requests), 2)

    def test_unparseable_replies(self):
        with MockVlmServer(default=(200, 'looks fine to me')) as server:
            with self.assertRaises(UnparseableReply):
                qscore(self.video_dir, vlm_config(server))
        self.assertEqual(len(server.requests), 3)

    def test_unparseable_then_numeric(self):
        with MockVlmServer(replies=[(200, 'hmm'), (200, '4')]) as server:
            self.assertEqual(qscore(self.video_dir, vlm_config(server)), 4.0)

    def test_bearer_token(self):
        with mock.patch.dict(os.environ, {'EFFECT_LAB_VLM_TOKEN': TOKEN}):
            with MockVlmServer(token=TOKEN) as server:
                self.assertEqual(qscore(self.video_dir, vlm_config(server)), 9.0)
        self.assertEqual(server.requests[0]['authorization'], 'Bearer ' + TOKEN)

    def test_rejected_token(self):
        with mock.patch.dict(os.environ, {'EFFECT_LAB_VLM_TOKEN': 'tok-wrong'}):
            with MockVlmServer(token=TOKEN) as server:
                with self.assertRaises(VlmAuthError):
                    qscore(self.video_dir, vlm_config(server))
        self.assertEqual(len(server.requests), 1)

    def test_token_never_reaches_the_log(self):
        with mock.patch.dict(os.environ, {'EFFECT_LAB_VLM_TOKEN': TOKEN}):
            with MockVlmServer(replies=[(200, 'my key is ' + TOKEN), (200, '5')],
                               token=TOKEN) as server:
                with self.assertLogs('effect_lab.qscore', level='DEBUG') as logs:
                    self.assertEqual(qscore(self.video_dir, vlm_config(server)), 5.0)
        output = '\n'.join(logs.output)
        self.assertNotIn(TOKEN, output)
        self.assertIn(REDACTED, output)

    def test_slow_endpoint_times_out(self):
        for retries in (0, 1):
            with MockVlmServer(delay=1.0) as server:
                with self.assertRaises(VlmTimeout):
                    qscore(self.video_dir, vlm_config(server, timeout=0.2, max_retries=retries))
            self.assertEqual(len(server.requests), retries + 1)

    def test_refused_connection(self):
        with MockVlmServer() as server:
            url = server.url
        with self.assertRaises(ExternalServiceError) as context:
            qscore(self.video_dir, VlmConfig(endpoint=url, max_retries=0, timeout=1.0))
        self.assertNotIsInstance(context.exception, VlmTimeout)

    def test_timeout(self):
        session = mock.Mock(spec=requests.Session)
        session.headers = {}
        session.post.side_effect = requests.Timeout('slow')
        with VlmClient(VlmConfig(timeout=0.5), session=session) as client:
            with self.assertRaises(VlmTimeout):
                client.score_frames([random_video()[0]])

    def test_connection_error(self):
        session = mock.Mock(spec=requests.Session)
        session.headers = {}
        session.post.side_effect = requests.ConnectionError('refused')
        with VlmClient(VlmConfig(), session=session) as client:
            with self.assertRaises(ExternalServiceError):
                client.score_frames([random_video()[0]])


class QScoreBatchTestCase(TempDirMixin, EffectLabTestCase):

    def setUp(self):
        super(QScoreBatchTestCase, self).setUp()
        self.root = os.path.join(self.tmp_dir, 'videos')
        for index, sample_id in enumerate(('b', 'a', 'c')):
            write_video_dir(random_video(seed=index), os.path.join(self.root, sample_id))

    def test_batch_is_ordered_and_averaged(self):
        paths = {name: os.path.join(self.root, name) for name in ('b', 'a', 'c')}
        with MockVlmServer(default=(200, '8')) as server:
            scores, mean = qscore_batch(paths, vlm_config(server))
        self.assertEqual(list(scores), ['a', 'b', 'c'])
        self.assertEqual(mean, 8.0)
        self.assertEqual(len(server.requests), 3)

    def test_eval_without_ground_truth(self):
        with MockVlmServer(replies=[(200, '6')], default=(200, '9')) as server:
            report = eval_set(self.root, None, EvalOptions(
                fidelity=False, qscore=True, vlm=vlm_config(server, max_in_flight=1)))
        self.assertEqual([row['sample_id'] for row in report.rows], ['a', 'b', 'c'])
        self.assertEqual([row['qscore'] for row in report.rows], [6.0, 9.0, 9.0])
        self.assertIsNone(report.rows[0]['psnr'])
        self.assertEqual(report.aggregate['qscore'], 8.0)
