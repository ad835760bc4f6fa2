# -*- coding: utf-8 -*-
"""
Run configuration: one form per config section, plus the loader that
merges AppConf defaults, a JSON config file and command-line overrides
into a ``RunConfig``.
"""
import os
from dataclasses import asdict, dataclass

from django import forms
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from .camera import MAX_BOB_FREQUENCY
from .choices import TASKS
from .conf import settings
from .exceptions import ConfigError
from .inference import SampleConfig
from .model import ModelConfig
from .qscore import VlmConfig
from .synthesis import SynthConfig
from .training import TrainConfig
from .utils import load_json

SECTIONS = ('synth', 'model', 'train', 'sample', 'vlm')
TOP_LEVEL_KEYS = ('seed', 'output_root') + SECTIONS
SEEDED_SECTIONS = ('model', 'train', 'sample')


class ConfigSectionForm(forms.Form):
    """
    Validates one section dict. Keys the form does not declare are
    rejected; missing keys fall back to ``defaults``.
    """
    config_class = None
    section = None

    def __init__(self, data=None, defaults=None):
        data = dict(data or {})
        self.unknown_keys = sorted(set(data) - set(self.base_fields))
        merged = dict(defaults or {})
        merged.update(data)
        super(ConfigSectionForm, self).__init__(data=merged)

    def clean(self):
        data = super(ConfigSectionForm, self).clean()
        if self.unknown_keys:
            raise ValidationError(
                _('unknown keys in %(section)s: %(keys)s'),
                code='unknown',
                params={'section': self.section, 'keys': ', '.join(self.unknown_keys)},
            )
        return data

    def check_order(self, data, low, high):
        if low in data and high in data and data[low] > data[high]:
            raise ValidationError(
                _('%(low)s must not exceed %(high)s'),
                code='invalid', params={'low': low, 'high': high})

    def build(self):
        if not self.is_valid():
            raise ValidationError(_format_errors(self.section, self.errors), code='invalid')
        try:
            return self.config_class(**self.cleaned_data)
        except ConfigError as exc:
            raise ValidationError('{0}: {1}'.format(self.section, exc), code='invalid')


def _format_errors(section, errors):
    parts = []
    for name, messages in errors.items():
        label = section if name == '__all__' else '{0}.{1}'.format(section, name)
        parts.append('{0}: {1}'.format(label, ' '.join(messages)))
    return '; '.join(parts)


class SynthConfigForm(ConfigSectionForm):
    config_class = SynthConfig
    section = 'synth'

    scenes = forms.IntegerField(min_value=1)
    objects_per_scene = forms.IntegerField(min_value=1, max_value=5)
    camera_configs = forms.IntegerField(min_value=1)
    frames = forms.IntegerField(min_value=2)
    height = forms.IntegerField(min_value=8)
    width = forms.IntegerField(min_value=8)
    fps = forms.IntegerField(min_value=1)
    ken_burns_variants = forms.IntegerField(min_value=0, max_value=14)
    object_size_min = forms.IntegerField(min_value=1)
    object_size_max = forms.IntegerField(min_value=1)
    effect_probability = forms.FloatField(min_value=0.0, max_value=1.0)
    dynamic_background = forms.BooleanField(required=False)
    zoom_min = forms.FloatField(min_value=1.0)
    zoom_max = forms.FloatField(min_value=1.0)
    intensity_min = forms.FloatField(min_value=0.0, max_value=1.0)
    intensity_max = forms.FloatField(min_value=0.0, max_value=1.0)
    bob_frequency_min = forms.FloatField(min_value=0.0)
    bob_frequency_max = forms.FloatField(min_value=0.0, max_value=MAX_BOB_FREQUENCY)
    workers = forms.IntegerField(min_value=1)

    def clean(self):
        data = super(SynthConfigForm, self).clean()
        self.check_order(data, 'object_size_min', 'object_size_max')
        self.check_order(data, 'zoom_min', 'zoom_max')
        self.check_order(data, 'intensity_min', 'intensity_max')
        self.check_order(data, 'bob_frequency_min', 'bob_frequency_max')
        if data.get('object_size_max', 0) * 2 >= min(data.get('height', 8), data.get('width', 8)):
            raise ValidationError(
                _('objects must be smaller than half the frame'), code='invalid')
        return data


class ModelConfigForm(ConfigSectionForm):
    config_class = ModelConfig
    section = 'model'

    patch_size = forms.IntegerField(min_value=1)
    model_dim = forms.IntegerField(min_value=4)
    n_blocks = forms.IntegerField(min_value=1)
    n_heads = forms.IntegerField(min_value=1)
    token_dim = forms.IntegerField(min_value=2)
    foreground_dim = forms.IntegerField(min_value=2)
    foreground_patch = forms.IntegerField(min_value=4)
    mlp_ratio = forms.FloatField(min_value=0.5)
    mapper_hidden = forms.IntegerField(min_value=1)
    lora_rank = forms.IntegerField(min_value=1)
    lora_alpha = forms.FloatField(min_value=0.0)
    lambda_ec = forms.FloatField(min_value=0.0)
    targ = forms.BooleanField(required=False)
    seed = forms.IntegerField(min_value=0)

    def clean(self):
        data = super(ModelConfigForm, self).clean()
        dim, heads = data.get('model_dim'), data.get('n_heads')
        if dim and heads and dim % heads:
            raise ValidationError(
                _('model_dim must be divisible by n_heads'), code='invalid')
        return data


class TrainConfigForm(ConfigSectionForm):
    config_class = TrainConfig
    section = 'train'

    learning_rate = forms.FloatField()
    weight_decay = forms.FloatField(min_value=0.0)
    batch_size = forms.IntegerField(min_value=1)
    max_steps = forms.IntegerField(min_value=0)
    lambda_ec = forms.FloatField(required=False, min_value=0.0)
    timestep_loc = forms.FloatField()
    timestep_scale = forms.FloatField(min_value=0.0)
    seed = forms.IntegerField(min_value=0)
    checkpoint_interval = forms.IntegerField(min_value=1)
    epsilon_prior = forms.FloatField()
    log_interval = forms.IntegerField(min_value=1)
    workers = forms.IntegerField(min_value=0)
    double_precision = forms.BooleanField(required=False)

    def clean(self):
        data = super(TrainConfigForm, self).clean()
        for name in ('learning_rate', 'epsilon_prior'):
            if name in data and data[name] <= 0:
                raise ValidationError(
                    _('%(name)s must be positive'), code='invalid', params={'name': name})
        return data


class SampleConfigForm(ConfigSectionForm):
    config_class = SampleConfig
    section = 'sample'

    steps = forms.IntegerField(min_value=1)
    seed = forms.IntegerField(min_value=0)
    task = forms.ChoiceField(choices=TASKS.choices)


class VlmConfigForm(ConfigSectionForm):
    config_class = VlmConfig
    section = 'vlm'

    endpoint = forms.URLField()
    model = forms.CharField()
    token_env = forms.CharField()
    timeout = forms.FloatField(min_value=0.001)
    max_retries = forms.IntegerField(min_value=0)
    backoff_factor = forms.FloatField(min_value=0.0)
    frames_per_request = forms.IntegerField(min_value=1)
    max_in_flight = forms.IntegerField(min_value=1)
    prompt_template = forms.CharField()


SECTION_FORMS = {
    'synth': SynthConfigForm,
    'model': ModelConfigForm,
    'train': TrainConfigForm,
    'sample': SampleConfigForm,
    'vlm': VlmConfigForm,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    output_root: str
    synth: SynthConfig
    model: ModelConfig
    train: TrainConfig
    sample: SampleConfig
    vlm: VlmConfig

    def to_dict(self):
        return asdict(self)


def section_defaults():
    return {
        'synth': settings.EFFECT_LAB_SYNTH,
        'model': settings.EFFECT_LAB_MODEL,
        'train': settings.EFFECT_LAB_TRAIN,
        'sample': settings.EFFECT_LAB_SAMPLE,
        'vlm': settings.EFFECT_LAB_VLM,
    }


def read_config_file(path):
    if not os.path.isfile(path):
        raise ValidationError(_('config file %(path)s does not exist'),
                              code='missing', params={'path': path})
    try:
        tree = load_json(path)
    except ValueError as exc:
        raise ValidationError(_('config file is not valid JSON: %(error)s'),
                              code='invalid', params={'error': exc})
    if not isinstance(tree, dict):
        raise ValidationError(_('config file must hold a JSON object'), code='invalid')
    return tree


def _merge(base, extra):
    merged = {key: dict(value) if isinstance(value, dict) else value
              for key, value in base.items()}
    for key, value in (extra or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(value)
        else:
            merged[key] = value
    return merged


def load_run_config(path=None, overrides=None):
    """
    Resolves defaults, then the config file at ``path``, then
    ``overrides``. Section seeds not given explicitly follow the top-level
    seed. Raises ``ValidationError`` on unknown keys or invalid values.
    """
    tree = read_config_file(path) if path else {}
    tree = _merge(tree, overrides)
    unknown = sorted(set(tree) - set(TOP_LEVEL_KEYS))
    if unknown:
        raise ValidationError(_('unknown top-level keys: %(keys)s'),
                              code='unknown', params={'keys': ', '.join(unknown)})
    for section in SECTIONS:
        if tree.get(section) is not None and not isinstance(tree[section], dict):
            raise ValidationError(_('%(section)s must be an object'),
                                  code='invalid', params={'section': section})

    seed = tree.get('seed', settings.EFFECT_LAB_SEED)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ValidationError(_('seed must be a non-negative integer'), code='invalid')
    defaults = section_defaults()
    built = {}
    for section in SECTIONS:
        data = dict(tree.get(section) or {})
        if section in SEEDED_SECTIONS and 'seed' not in data:
            data['seed'] = seed
        built[section] = SECTION_FORMS[section](data, defaults[section]).build()
    return RunConfig(
        seed=seed,
        output_root=tree.get('output_root', settings.EFFECT_LAB_OUTPUT_ROOT),
        **built
    )
