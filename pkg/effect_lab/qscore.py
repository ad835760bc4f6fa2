# -*- coding: utf-8 -*-
"""
QScore: a vision-language model rates removal completeness and visual
artifacts on 0 to 10.

Wire contract: ``POST {model, prompt, images: [base64 png, ...]}`` with a
bearer token; the reply is JSON carrying the model's text under ``text``,
``reply`` or an OpenAI-style ``choices`` list.
"""
import base64
import io
import logging
import os
import re
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import requests
from django.template.loader import render_to_string
from PIL import Image
from requests.adapters import HTTPAdapter
from urllib3.exceptions import ConnectTimeoutError, ReadTimeoutError
from urllib3.util.retry import Retry

from .exceptions import (
    ConfigError, ExternalServiceError, UnparseableReply, VlmAuthError, VlmTimeout,
)
from .utils import evenly_spaced
from .video import read_video_dir

logger = logging.getLogger(__name__)

SCORE_PATTERN = re.compile(r'[-+]?\d+(?:\.\d+)?')
RETRY_STATUSES = (500, 502, 503, 504)
REDACTED = '[redacted]'


@dataclass(frozen=True)
class VlmConfig:
    endpoint: str = 'http://127.0.0.1:8765/v1/score'
    model: str = 'qwen-vl'
    token_env: str = 'EFFECT_LAB_VLM_TOKEN'
    timeout: float = 30.0
    max_retries: int = 3
    backoff_factor: float = 0.5
    frames_per_request: int = 4
    max_in_flight: int = 2
    prompt_template: str = 'effect_lab/prompts/qscore_v1.txt'

    def __post_init__(self):
        if self.max_retries < 0:
            raise ConfigError('max_retries must not be negative')
        if self.timeout <= 0:
            raise ConfigError('timeout must be positive')
        if self.frames_per_request < 1 or self.max_in_flight < 1:
            raise ConfigError('frames_per_request and max_in_flight must be positive')


class SecretRedactingFilter(logging.Filter):
    """Rewrites any record that would print ``secret``."""

    def __init__(self, secret):
        super().__init__()
        self.secret = secret

    def filter(self, record):
        if self.secret:
            message = record.getMessage()
            if self.secret in message:
                record.msg = message.replace(self.secret, REDACTED)
                record.args = ()
        return True


REDACTED_LOGGERS = (__name__, 'urllib3', 'urllib3.connectionpool', 'requests')


def parse_score(text):
    """First number in ``text`` when it lies in ``[0, 10]``, else ``None``."""
    match = SCORE_PATTERN.search(text or '')
    if not match:
        return None
    value = float(match.group(0))
    if not 0.0 <= value <= 10.0:
        return None
    return value


def _reply_text(response):
    try:
        payload = response.json()
    except ValueError:
        return response.text
    if isinstance(payload, dict):
        for key in ('text', 'reply', 'output'):
            if isinstance(payload.get(key), str):
                return payload[key]
        choices = payload.get('choices')
        if choices:
            message = choices[0].get('message', {})
            return message.get('content') or choices[0].get('text', '')
    if isinstance(payload, (int, float)):
        return str(payload)
    return response.text


def encode_frame(frame):
    array = np.rint(frame.detach().cpu().double().clamp(0.0, 1.0).numpy() * 255.0)
    buffer = io.BytesIO()
    Image.fromarray(array.astype(np.uint8), mode='RGB').save(buffer, format='PNG')
    return base64.b64encode(buffer.getvalue()).decode('ascii')


class VlmClient(object):

    def __init__(self, config, session=None):
        self.config = config
        self.token = os.environ.get(config.token_env) or None
        self.session = session or requests.Session()
        retry = Retry(
            total=config.max_retries,
            backoff_factor=config.backoff_factor,
            status_forcelist=RETRY_STATUSES,
            allowed_methods=frozenset(['POST']),
            raise_on_status=False,
        )
        adapter = HTTPAdapter(max_retries=retry, pool_maxsize=config.max_in_flight)
        self.session.mount('http://', adapter)
        self.session.mount('https://', adapter)
        if self.token:
            self.session.headers['Authorization'] = 'Bearer {0}'.format(self.token)
            self._redaction = SecretRedactingFilter(self.token)
            for name in REDACTED_LOGGERS:
                logging.getLogger(name).addFilter(self._redaction)

    def close(self):
        if self.token:
            for name in REDACTED_LOGGERS:
                logging.getLogger(name).removeFilter(self._redaction)
        self.session.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def prompt(self, frame_count):
        return render_to_string(
            template_name=self.config.prompt_template,
            context={'frame_count': frame_count},
        ).strip()

    def _post(self, payload):
        try:
            response = self.session.post(
                self.config.endpoint, json=payload, timeout=self.config.timeout)
        except requests.Timeout as exc:
            raise VlmTimeout('no reply from {0} within {1}s'.format(
                self.config.endpoint, self.config.timeout)) from exc
        except requests.ConnectionError as exc:
            # with a Retry adapter, exhausted read timeouts arrive wrapped in MaxRetryError
            reason = getattr(exc.args[0] if exc.args else None, 'reason', None)
            if isinstance(reason, (ReadTimeoutError, ConnectTimeoutError)):
                raise VlmTimeout('no reply from {0} within {1}s'.format(
                    self.config.endpoint, self.config.timeout)) from exc
            raise ExternalServiceError('request to {0} failed: {1}'.format(
                self.config.endpoint, type(exc).__name__)) from exc
        except requests.RequestException as exc:
            raise ExternalServiceError('request to {0} failed: {1}'.format(
                self.config.endpoint, type(exc).__name__)) from exc
        if response.status_code in (401, 403):
            raise VlmAuthError('endpoint rejected the credentials ({0})'.format(
                response.status_code))
        if response.status_code >= 400:
            raise ExternalServiceError('endpoint answered {0}'.format(response.status_code))
        return response

    def score_frames(self, frames):
        payload = {
            'model': self.config.model,
            'prompt': self.prompt(len(frames)),
            'images': [encode_frame(frame) for frame in frames],
        }
        for attempt in range(self.config.max_retries + 1):
            text = _reply_text(self._post(payload))
            score = parse_score(text)
            if score is not None:
                return score
            logger.warning('unparseable reply on attempt %d: %r', attempt + 1, text[:80])
        raise UnparseableReply('no numeric score after {0} attempts'.format(
            self.config.max_retries + 1))


def qscore(video_path, config, client=None):
    """Scores the evenly spaced frame subset of one video directory."""
    video = read_video_dir(video_path)
    indices = evenly_spaced(config.frames_per_request, video.shape[0])
    if client is not None:
        return client.score_frames([video[i] for i in indices])
    with VlmClient(config) as own_client:
        return own_client.score_frames([video[i] for i in indices])


def qscore_batch(video_paths, config):
    """
    Scores ``{sample_id: path}`` with at most ``max_in_flight`` concurrent
    requests. Returns the scores ordered by sample id and their mean.
    """
    ids = sorted(video_paths)
    with VlmClient(config) as client:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            results = list(pool.map(
                lambda sample_id: qscore(video_paths[sample_id], config, client), ids))
    scores = OrderedDict(zip(ids, results))
    mean = float(np.mean(results)) if results else None
    logger.info('qscore over %d videos: %s', len(ids), mean)
    return scores, mean
