# -*- coding: utf-8 -*-
import hashlib
import json
import logging
import os

import numpy as np
import torch
from django.utils import timezone
from django.utils.termcolors import colorize

from .conf import settings


def derive_seed(master_seed, *indices):
    """
    Derives an independent 32 bit seed for a unit of work.

    ``sample_seed = SeedSequence([master_seed, *indices]).generate_state(1)``
    which keeps workers independent of scheduling order.
    """
    sequence = np.random.SeedSequence([int(master_seed)] + [int(i) for i in indices])
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def numpy_rng(seed):
    return np.random.default_rng(int(seed))


def torch_generator(seed):
    generator = torch.Generator()
    generator.manual_seed(int(seed))
    return generator


def dump_json(data, path):
    """Writes JSON with sorted keys so identical data gives identical bytes."""
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write('\n')


def load_json(path):
    with open(path, 'r', encoding='utf-8') as handle:
        return json.load(handle)


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.ndarray,)):
        return value.tolist()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError('Object of type {0} is not JSON serializable'.format(
        type(value).__name__))


def config_hash(data):
    payload = json.dumps(data, sort_keys=True, default=_json_default)
    return hashlib.sha256(payload.encode('utf-8')).hexdigest()[:16]


def make_run_dir(output_root, command, now=None):
    """
    Creates ``<output_root>/<timestamp>-<command>/{logs,artifacts}`` and
    returns its path.
    """
    now = now or timezone.now()
    stamp = now.strftime('%Y%m%dT%H%M%S')
    base = os.path.join(output_root, '{0}-{1}'.format(stamp, command))
    run_dir = base
    suffix = 1
    # two commands in the same second must not share a directory
    while os.path.exists(run_dir):
        suffix += 1
        run_dir = '{0}-{1}'.format(base, suffix)
    for sub in ('logs', 'artifacts'):
        os.makedirs(os.path.join(run_dir, sub))
    return run_dir


def evenly_spaced(count, total):
    """Indices of ``count`` evenly spaced items out of ``total``."""
    if total <= 0:
        return []
    count = min(count, total)
    if count == 1:
        return [0]
    return sorted({int(round(i * (total - 1) / (count - 1))) for i in range(count)})


class ConsoleFormatter(logging.Formatter):
    """Colours the level name unless ``NO_COLOR`` is set."""
    LEVEL_STYLES = {
        'DEBUG': {'fg': 'cyan'},
        'INFO': {'fg': 'green'},
        'WARNING': {'fg': 'yellow', 'opts': ('bold',)},
        'ERROR': {'fg': 'red', 'opts': ('bold',)},
        'CRITICAL': {'fg': 'red', 'opts': ('bold', 'reverse')},
    }

    def format(self, record):
        if settings.EFFECT_LAB_NO_COLOR:
            return super(ConsoleFormatter, self).format(record)
        original = record.levelname
        record.levelname = colorize(original, **self.LEVEL_STYLES.get(original, {}))
        try:
            return super(ConsoleFormatter, self).format(record)
        finally:
            record.levelname = original
