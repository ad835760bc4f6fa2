# -*- coding: utf-8 -*-
import os
from dataclasses import replace

from ...checkpoint import load_checkpoint
from ...choices import TASKS
from ...inference import remove_objects
from ...video import read_manifest, read_video_dir, write_video_dir
from ..base import RunCommand


class SamplingCommand(RunCommand):
    task = None
    config_flags = {
        'steps': ('sample', 'steps'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--mask', required=True, help='mask video directory')
        parser.add_argument('--ckpt', required=True, help='checkpoint directory')
        parser.add_argument('--steps', type=int, default=None,
                            help='Euler steps (default: from config)')
        parser.add_argument('--out', default=None,
                            help='output video directory (default: artifacts/output)')

    def read(self, options, key, what):
        return read_video_dir(self.require_path(options[key], what))

    def finish(self, result, source_dir, run_dir, options):
        out = options['out'] or os.path.join(run_dir, 'artifacts', 'output')
        manifest = read_manifest(source_dir)
        write_video_dir(result, out, fps=manifest.fps)
        return {'output': out, 'frames': result.shape[0],
                'height': result.shape[1], 'width': result.shape[2]}

    def sample_config(self, run):
        return replace(run.sample, task=self.task)

    def load_model(self, options):
        model, _ = load_checkpoint(self.require_path(options['ckpt'], 'checkpoint'))
        return model


class Command(SamplingCommand):
    help = 'Removes the masked objects and their effects from a video.'
    task = TASKS.REMOVAL

    def add_command_arguments(self, parser):
        parser.add_argument('--video', required=True, help='input video directory')
        super(Command, self).add_command_arguments(parser)

    def run(self, run, run_dir, options):
        video = self.read(options, 'video', 'video')
        mask = self.read(options, 'mask', 'mask')
        result = remove_objects(video, mask, self.load_model(options), self.sample_config(run))
        return self.finish(result, options['video'], run_dir, options)
