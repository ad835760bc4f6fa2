# -*- coding: utf-8 -*-
from ...synthesis import synth_dataset
from ..base import RunCommand


class Command(RunCommand):
    help = 'Renders a synthetic dataset of paired triplets.'
    config_flags = {
        'scenes': ('synth', 'scenes'),
        'objects': ('synth', 'objects_per_scene'),
        'workers': ('synth', 'workers'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--out', required=True, help='dataset directory, empty or absent')
        parser.add_argument('--scenes', type=int, default=None,
                            help='number of scenes (default: from config)')
        parser.add_argument('--objects', type=int, default=None,
                            help='objects per scene (default: from config)')
        parser.add_argument('--workers', type=int, default=None,
                            help='worker processes (default: from config)')

    def run(self, run, run_dir, options):
        index = synth_dataset(run.synth, options['out'], run.seed)
        return {'dataset': options['out'], 'triplets': len(index)}
