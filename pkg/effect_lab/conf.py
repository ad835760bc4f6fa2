# -*- coding: utf-8 -*-
import os

from django.conf import settings  # noqa: F401

from appconf import AppConf

SYNTH_DEFAULTS = {
    'scenes': 4,
    'objects_per_scene': 2,
    'camera_configs': 1,
    'frames': 8,
    'height': 32,
    'width': 48,
    'fps': 8,
    'ken_burns_variants': 5,
    'object_size_min': 4,
    'object_size_max': 7,
    'effect_probability': 0.6,
    'dynamic_background': True,
    'zoom_min': 1.15,
    'zoom_max': 1.5,
    'intensity_min': 0.4,
    'intensity_max': 1.0,
    'bob_frequency_min': 0.08,
    'bob_frequency_max': 0.2,
    'workers': 1,
}

MODEL_DEFAULTS = {
    'patch_size': 2,
    'model_dim': 64,
    'n_blocks': 2,
    'n_heads': 4,
    'token_dim': 32,
    'foreground_dim': 32,
    'foreground_patch': 32,
    'mlp_ratio': 2.0,
    'mapper_hidden': 16,
    'lora_rank': 8,
    'lora_alpha': 8.0,
    'lambda_ec': 0.1,
    # False swaps the task-aware prompt for the bare object token
    'targ': True,
    'seed': 0,
}

TRAIN_DEFAULTS = {
    'learning_rate': 1e-4,
    'weight_decay': 0.01,
    'batch_size': 1,
    'max_steps': 500,
    # None falls back to the model's lambda_ec
    'lambda_ec': None,
    'timestep_loc': 0.0,
    'timestep_scale': 1.0,
    'seed': 0,
    'checkpoint_interval': 100,
    'epsilon_prior': 1e-4,
    'log_interval': 10,
    'workers': 0,
    'double_precision': False,
}

SAMPLE_DEFAULTS = {
    'steps': 50,
    'seed': 0,
    'task': 'removal',
}

VLM_DEFAULTS = {
    'endpoint': 'http://127.0.0.1:8765/v1/score',
    'model': 'qwen-vl',
    'token_env': 'EFFECT_LAB_VLM_TOKEN',
    'timeout': 30.0,
    'max_retries': 3,
    'backoff_factor': 0.5,
    'frames_per_request': 4,
    'max_in_flight': 2,
    'prompt_template': 'effect_lab/prompts/qscore_v1.txt',
}


class EffectLabAppConf(AppConf):

    SEED = 0
    OUTPUT_ROOT = 'runs'
    FRAME_NAMING = 'frame_%06d.png'
    COLOR_SPACE = 'srgb-8bit'
    MASK_THRESHOLD = 0.5
    # floor applied to the predicted distribution inside the KL terms
    KL_FLOOR = 1e-8
    COVARIANCE_EPS = 1e-6
    NO_COLOR = False
    # bumping the major part invalidates older checkpoints
    CHECKPOINT_VERSION = '1.0'

    SYNTH = SYNTH_DEFAULTS
    MODEL = MODEL_DEFAULTS
    TRAIN = TRAIN_DEFAULTS
    SAMPLE = SAMPLE_DEFAULTS
    VLM = VLM_DEFAULTS

    class Meta:
        prefix = 'effect_lab'

    def configure_no_color(self, value):
        return bool(value or os.environ.get('NO_COLOR'))

    # partial section dicts in the host settings keep the remaining defaults
    def configure_synth(self, value):
        return dict(SYNTH_DEFAULTS, **value)

    def configure_model(self, value):
        return dict(MODEL_DEFAULTS, **value)

    def configure_train(self, value):
        return dict(TRAIN_DEFAULTS, **value)

    def configure_sample(self, value):
        return dict(SAMPLE_DEFAULTS, **value)

    def configure_vlm(self, value):
        return dict(VLM_DEFAULTS, **value)
