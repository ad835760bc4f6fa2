# -*- coding: utf-8 -*-
import json
import os

from django.core.exceptions import ValidationError

from effect_lab.conf import MODEL_DEFAULTS, SYNTH_DEFAULTS, TRAIN_DEFAULTS
from effect_lab.forms import (
    ModelConfigForm, SampleConfigForm, SynthConfigForm, TrainConfigForm, VlmConfigForm,
    load_run_config,
)
from effect_lab.inference import SampleConfig
from effect_lab.model import ModelConfig
from effect_lab.synthesis import SynthConfig

from .base import EffectLabTestCase, TempDirMixin


class SectionFormTestCase(EffectLabTestCase):

    def test_defaults_build_the_dataclass(self):
        config = SynthConfigForm({}, SYNTH_DEFAULTS).build()
        self.assertEqual(config, SynthConfig())

    def test_partial_section_keeps_defaults(self):
        config = ModelConfigForm({'model_dim': 32}, MODEL_DEFAULTS).build()
        self.assertEqual(config.model_dim, 32)
        self.assertEqual(config.n_heads, 4)

    def test_unknown_key(self):
        form = SynthConfigForm({'scenez': 3}, SYNTH_DEFAULTS)
        self.assertFalse(form.is_valid())
        self.assertIn('scenez', str(form.errors))

    def test_value_range(self):
        form = SynthConfigForm({'objects_per_scene': 0}, SYNTH_DEFAULTS)
        self.assertFalse(form.is_valid())
        self.assertIn('objects_per_scene', form.errors)

    def test_ordered_pairs(self):
        form = SynthConfigForm({'zoom_min': 1.6, 'zoom_max': 1.2}, SYNTH_DEFAULTS)
        self.assertFalse(form.is_valid())
        with self.assertRaises(ValidationError):
            form.build()

    def test_objects_must_fit(self):
        form = SynthConfigForm({'height': 12, 'object_size_max': 7}, SYNTH_DEFAULTS)
        self.assertFalse(form.is_valid())

    def test_heads_must_divide_width(self):
        form = ModelConfigForm({'model_dim': 30, 'n_heads': 4}, MODEL_DEFAULTS)
        self.assertFalse(form.is_valid())
        self.assertIn('divisible', str(form.errors))

    def test_learning_rate_must_be_positive(self):
        self.assertFalse(TrainConfigForm({'learning_rate': 0.0}, TRAIN_DEFAULTS).is_valid())

    def test_lambda_ec_may_be_left_to_the_model(self):
        config = TrainConfigForm({}, TRAIN_DEFAULTS).build()
        self.assertIsNone(config.lambda_ec)
        config = TrainConfigForm({'lambda_ec': 0.3}, TRAIN_DEFAULTS).build()
        self.assertEqual(config.lambda_ec, 0.3)

    def test_ablation_switches(self):
        self.assertTrue(ModelConfigForm({}, MODEL_DEFAULTS).build().targ)
        self.assertFalse(ModelConfigForm({'targ': False}, MODEL_DEFAULTS).build().targ)
        self.assertEqual(TrainConfigForm({'lambda_ec': 0}, TRAIN_DEFAULTS).build().lambda_ec, 0.0)
        self.assertEqual(ModelConfigForm({'lambda_ec': 0}, MODEL_DEFAULTS).build().lambda_ec, 0.0)

    def test_task_choices(self):
        defaults = {'steps': 50, 'seed': 0, 'task': 'removal'}
        self.assertEqual(SampleConfigForm({'task': 'insertion'}, defaults).build(),
                         SampleConfig(task='insertion'))
        self.assertFalse(SampleConfigForm({'task': 'recolour'}, defaults).is_valid())

    def test_endpoint_must_be_a_url(self):
        form = VlmConfigForm({'endpoint': 'not a url'}, {
            'endpoint': 'http://127.0.0.1:8765/v1/score', 'model': 'm',
            'token_env': 'TOKEN', 'timeout': 1.0, 'max_retries': 0,
            'backoff_factor': 0.0, 'frames_per_request': 1, 'max_in_flight': 1,
            'prompt_template': 'effect_lab/prompts/qscore_v1.txt'})
        self.assertFalse(form.is_valid())
        self.assertIn('endpoint', form.errors)


class LoadRunConfigTestCase(TempDirMixin, EffectLabTestCase):

    def write_config(self, tree):
        path = os.path.join(self.tmp_dir, 'config.json')
        with open(path, 'w') as handle:
            json.dump(tree, handle)
        return path

    def test_defaults(self):
        run = load_run_config()
        self.assertEqual(run.seed, 0)
        self.assertEqual(run.model, ModelConfig())
        self.assertEqual(run.sample.steps, 50)
        self.assertEqual(run.vlm.max_retries, 3)

    def test_seed_reaches_seeded_sections(self):
        run = load_run_config(overrides={'seed': 7})
        self.assertEqual((run.model.seed, run.train.seed, run.sample.seed), (7, 7, 7))
        run = load_run_config(overrides={'seed': 7, 'train': {'seed': 2}})
        self.assertEqual((run.model.seed, run.train.seed), (7, 2))

    def test_file_then_overrides(self):
        path = self.write_config({
            'seed': 3,
            'synth': {'scenes': 2, 'frames': 12},
            'train': {'max_steps': 10},
        })
        run = load_run_config(path, overrides={'synth': {'scenes': 5}})
        self.assertEqual(run.seed, 3)
        self.assertEqual(run.synth.scenes, 5)
        self.assertEqual(run.synth.frames, 12)
        self.assertEqual(run.train.max_steps, 10)

    def test_snapshot_reproduces_the_run(self):
        run = load_run_config(overrides={'seed': 4, 'model': {'n_blocks': 3}})
        path = self.write_config(run.to_dict())
        self.assertEqual(load_run_config(path), run)

    def test_unknown_top_level_key(self):
        path = self.write_config({'optimiser': {}})
        with self.assertRaises(ValidationError) as context:
            load_run_config(path)
        self.assertIn('optimiser', str(context.exception))

    def test_unknown_section_key(self):
        with self.assertRaises(ValidationError):
            load_run_config(overrides={'train': {'momentum': 0.9}})

    def test_section_must_be_an_object(self):
        with self.assertRaises(ValidationError):
            load_run_config(overrides={'model': 5})

    def test_invalid_seed(self):
        with self.assertRaises(ValidationError):
            load_run_config(overrides={'seed': -1})

    def test_missing_file(self):
        with self.assertRaises(ValidationError):
            load_run_config(os.path.join(self.tmp_dir, 'absent.json'))

    def test_not_json(self):
        path = os.path.join(self.tmp_dir, 'broken.json')
        with open(path, 'w') as handle:
            handle.write('{seed: 1')
        with self.assertRaises(ValidationError):
            load_run_config(path)
