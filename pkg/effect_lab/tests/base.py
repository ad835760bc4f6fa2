# -*- coding: utf-8 -*-
import shutil
import tempfile

import torch
from django.test import SimpleTestCase

from effect_lab.choices import EFFECT_KINDS, SHAPES, TRAJECTORIES
from effect_lab.model import ModelConfig
from effect_lab.synthesis import EffectSpec, ObjectSpec, SceneSpec, SynthConfig, render_triplet
from effect_lab.training import TrainConfig

BACKGROUND = {
    'angle': 0.6,
    'color_low': [0.2, 0.3, 0.4],
    'color_high': [0.6, 0.5, 0.7],
    'texture': 0.05,
    'tint': [1.0, 0.8, 0.6],
    'freq_x': 2.0,
    'freq_y': 1.5,
    'phase': 0.3,
    'drift': 0.2,
}


def tiny_synth_config(**kwargs):
    values = dict(
        scenes=1, objects_per_scene=2, camera_configs=1, frames=8,
        height=16, width=24, fps=8, ken_burns_variants=1,
        object_size_min=2, object_size_max=3,
    )
    values.update(kwargs)
    return SynthConfig(**values)


def tiny_model_config(**kwargs):
    values = dict(
        patch_size=2, model_dim=16, n_blocks=2, n_heads=2, token_dim=8,
        foreground_dim=8, foreground_patch=8, mlp_ratio=2.0,
        mapper_hidden=4, lora_rank=2, lora_alpha=2.0, lambda_ec=0.1, seed=0,
    )
    values.update(kwargs)
    return ModelConfig(**values)


def tiny_train_config(**kwargs):
    values = dict(max_steps=4, checkpoint_interval=2, log_interval=1, seed=0)
    values.update(kwargs)
    return TrainConfig(**values)


def disc(x, y, size=3.0, color=(0.9, 0.1, 0.1), velocity=(0.5, 0.0), effects=()):
    occlusion = (EffectSpec(EFFECT_KINDS.OCCLUSION_OPAQUE),)
    if any(EFFECT_KINDS.OCCLUSIONS.has_value(e.kind) for e in effects):
        occlusion = ()
    return ObjectSpec(
        shape=SHAPES.DISC, size=size, color=tuple(color),
        trajectory=TRAJECTORIES.LINEAR,
        motion={'start': [x, y], 'velocity': list(velocity)},
        effects=occlusion + tuple(effects),
    )


def shadow(darkening=0.5, offset=(1.0, 3.0), softness=0.8):
    return EffectSpec(EFFECT_KINDS.SHADOW, {
        'offset': list(offset), 'darkening': darkening, 'softness': softness})


def scene(*objects, frames=4, height=16, width=24, background=None):
    return SceneSpec(background=dict(background or BACKGROUND), objects=tuple(objects),
                     frames=frames, height=height, width=width, seed=1)


def shadow_triplet(frames=4, height=16, width=24, dtype=torch.float64):
    """One moving disc with a shadow, removed."""
    spec = scene(disc(8.0, 6.0, effects=(shadow(),)),
                 frames=frames, height=height, width=width)
    return render_triplet(spec, [0]).to(dtype)


def random_video(frames=4, height=8, width=8, seed=0, dtype=torch.float64):
    generator = torch.Generator().manual_seed(seed)
    return torch.rand(frames, height, width, 3, generator=generator, dtype=dtype)


class TempDirMixin(object):

    def setUp(self):
        super(TempDirMixin, self).setUp()
        self.tmp_dir = tempfile.mkdtemp(prefix='effect-lab-')
        self.addCleanup(shutil.rmtree, self.tmp_dir, ignore_errors=True)


class EffectLabTestCase(SimpleTestCase):

    def assertTensorEqual(self, first, second, msg=None):
        self.assertEqual(tuple(first.shape), tuple(second.shape), msg)
        self.assertTrue(torch.equal(first, second), msg or 'tensors differ')

    def assertTensorClose(self, first, second, atol=1e-6, msg=None):
        self.assertEqual(tuple(first.shape), tuple(second.shape), msg)
        difference = float((first - second).abs().max()) if first.numel() else 0.0
        self.assertLessEqual(difference, atol, msg or 'max difference {0}'.format(difference))
