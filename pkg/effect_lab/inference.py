# -*- coding: utf-8 -*-
"""
Euler integration of the learned velocity field and the removal and
insertion pipelines built on it.
"""
import logging
from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .checkpoint import load_checkpoint
from .choices import TASKS
from .exceptions import ConfigError, NumericalError, ShapeMismatch
from .model import build_condition, decode_latent
from .utils import torch_generator
from .video import TripletSample, binarize, check_aligned, check_video

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleConfig:
    steps: int = 50
    seed: int = 0
    task: str = TASKS.REMOVAL

    def __post_init__(self):
        if self.steps < 1:
            raise ConfigError('steps must be at least 1')
        if not TASKS.has_value(self.task):
            raise ConfigError('unknown task {0!r}'.format(self.task))


def euler_sample(model, condition, prompt, config, generator=None):
    """
    Integrates ``dx/dt = v(x, t)`` from seeded noise at ``t = 0`` to
    ``t = 1`` with ``config.steps`` uniform steps.
    """
    generator = generator or torch_generator(config.seed)
    batch, channels = condition.shape[:2]
    shape = (batch, channels // 2) + tuple(condition.shape[2:])
    x = torch.randn(shape, generator=generator, dtype=condition.dtype)
    dt = 1.0 / config.steps
    with torch.no_grad():
        for k in range(config.steps):
            t = torch.full((batch,), k / config.steps, dtype=condition.dtype)
            velocity, _ = model(x, condition, prompt, t)
            x = x + dt * velocity
            if not torch.isfinite(x).all():
                raise NumericalError('non-finite sampler state at step {0}'.format(k))
    return x


def _resolve_model(checkpoint):
    if isinstance(checkpoint, str):
        model, _ = load_checkpoint(checkpoint)
        return model
    return checkpoint


def _pad_to(tensor, multiple):
    """Edge-replicates the bottom and right borders up to ``multiple``."""
    height, width = tensor.shape[1:3]
    pad_h = -height % multiple
    pad_w = -width % multiple
    if not pad_h and not pad_w:
        return tensor
    mask_like = tensor.dim() == 3
    planar = tensor.unsqueeze(1) if mask_like else tensor.permute(0, 3, 1, 2)
    padded = F.pad(planar, (0, pad_w, 0, pad_h), mode='replicate')
    return padded.squeeze(1) if mask_like else padded.permute(0, 2, 3, 1)


def _run(model, task, sample, config, out_h, out_w):
    patch = model.config.patch_size
    model.eval()
    condition = build_condition(task, sample, patch)
    with torch.no_grad():
        prompt = model.prompt_for(task, sample.object_video, sample.mask)
    latent = euler_sample(model, condition, prompt, config)
    return decode_latent(latent, patch)[0, :, :out_h, :out_w]


def _prepared(model, object_video, background_video, mask):
    dtype = next(model.parameters()).dtype
    multiple = 2 * model.config.patch_size
    return TripletSample(
        object_video=_pad_to(object_video.to(dtype), multiple),
        background_video=_pad_to(background_video.to(dtype), multiple),
        mask=_pad_to(binarize(mask.to(dtype)), multiple),
    )


def remove_objects(video, mask, checkpoint, config):
    """Returns ``video`` with the masked objects and their effects removed."""
    check_video(video)
    check_aligned(video, mask)
    model = _resolve_model(checkpoint)
    sample = _prepared(model, video, video, mask)
    result = _run(model, TASKS.REMOVAL, sample, config, video.shape[1], video.shape[2])
    logger.info('removed objects from a %d frame video in %d steps', video.shape[0], config.steps)
    return result


def insert_objects(background, object_video, mask, checkpoint, config):
    """Composites the masked object of ``object_video`` into ``background``."""
    check_video(background)
    check_video(object_video)
    if background.shape != object_video.shape:
        raise ShapeMismatch('background {0} and object video {1} disagree'.format(
            tuple(background.shape), tuple(object_video.shape)))
    check_aligned(background, mask)
    model = _resolve_model(checkpoint)
    sample = _prepared(model, object_video, background, mask)
    result = _run(model, TASKS.INSERTION, sample, config, background.shape[1], background.shape[2])
    logger.info('inserted objects into a %d frame video in %d steps',
                background.shape[0], config.steps)
    return result
