# -*- coding: utf-8 -*-
"""
Checkpoint directories hold ``weights.pt`` (a ``torch.save`` state dict)
and ``meta.json`` with the model config, its hash, the format version,
step, seed and loss history. Checkpoints written during training also
hold ``trainer.pt`` with the optimizer state and step counter.
"""
import logging
import os
import pickle

import torch

from .conf import settings
from .exceptions import CheckpointError, ConfigError
from .model import ModelConfig, build_model
from .utils import config_hash, dump_json, load_json

logger = logging.getLogger(__name__)

WEIGHTS_NAME = 'weights.pt'
META_NAME = 'meta.json'
TRAINER_NAME = 'trainer.pt'


def _major(version):
    return str(version).split('.')[0]


def save_checkpoint(path, model, step, seed, loss_history=(), extra=None, trainer_state=None):
    os.makedirs(path, exist_ok=True)
    model_config = model.config.to_dict()
    meta = {
        'format_version': settings.EFFECT_LAB_CHECKPOINT_VERSION,
        'model': model_config,
        'config_hash': config_hash(model_config),
        'lora': model.lora_spec.to_dict() if getattr(model, 'lora_spec', None) else None,
        'step': int(step),
        'seed': int(seed),
        'loss_history': list(loss_history),
    }
    if extra:
        meta.update(extra)
    torch.save(model.state_dict(), os.path.join(path, WEIGHTS_NAME))
    if trainer_state is not None:
        torch.save(trainer_state, os.path.join(path, TRAINER_NAME))
    dump_json(meta, os.path.join(path, META_NAME))
    logger.info('saved checkpoint %s at step %d', path, step)
    return meta


def read_checkpoint_meta(path):
    meta_path = os.path.join(path, META_NAME)
    if not os.path.isfile(meta_path) or not os.path.isfile(os.path.join(path, WEIGHTS_NAME)):
        raise CheckpointError('{0} is not a checkpoint directory'.format(path))
    meta = load_json(meta_path)
    current = settings.EFFECT_LAB_CHECKPOINT_VERSION
    if _major(meta.get('format_version')) != _major(current):
        raise CheckpointError('checkpoint format {0} is incompatible with {1}'.format(
            meta.get('format_version'), current))
    if config_hash(meta.get('model', {})) != meta.get('config_hash'):
        raise CheckpointError('config hash does not match the stored model config')
    return meta


def load_checkpoint(path, dtype=None):
    """Rebuilds the model described by ``meta.json`` and loads its weights."""
    meta = read_checkpoint_meta(path)
    try:
        config = ModelConfig(**meta['model'])
    except (TypeError, ConfigError) as exc:
        raise CheckpointError('invalid model config in checkpoint: {0}'.format(exc))
    model = build_model(config, lora=meta.get('lora') is not None)
    state = torch.load(os.path.join(path, WEIGHTS_NAME), map_location='cpu')
    try:
        model.load_state_dict(state)
    except RuntimeError as exc:
        raise CheckpointError('weights do not match the model config: {0}'.format(exc))
    if dtype is not None:
        model.to(dtype)
    model.eval()
    return model, meta


def load_trainer_state(path):
    """Returns the saved trainer state, or ``None`` for weights-only checkpoints."""
    state_path = os.path.join(path, TRAINER_NAME)
    if not os.path.isfile(state_path):
        return None
    try:
        state = torch.load(state_path, map_location='cpu')
    except (RuntimeError, EOFError, pickle.UnpicklingError) as exc:
        raise CheckpointError('unreadable trainer state in {0}: {1}'.format(path, exc))
    if not isinstance(state, dict) or not {'step', 'optimizer', 'generator'} <= set(state):
        raise CheckpointError('trainer state in {0} is incomplete'.format(path))
    return state
