# -*- coding: utf-8 -*-
import os

from ...checkpoint import load_checkpoint
from ...model import build_model
from ...training import train_loop
from ..base import RunCommand


class Command(RunCommand):
    help = 'Trains the removal/insertion model on a synthesized dataset.'
    config_flags = {
        'max_steps': ('train', 'max_steps'),
        'learning_rate': ('train', 'learning_rate'),
        'lambda_ec': ('train', 'lambda_ec'),
        'batch_size': ('train', 'batch_size'),
        'targ': ('model', 'targ'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='dataset directory written by synth')
        parser.add_argument('--max-steps', dest='max_steps', type=int, default=None,
                            help='optimizer steps (default: from config)')
        parser.add_argument('--learning-rate', dest='learning_rate', type=float, default=None,
                            help='AdamW learning rate (default: from config)')
        parser.add_argument('--lambda-ec', dest='lambda_ec', type=float, default=None,
                            help='effect consistency weight (default: from config)')
        parser.add_argument('--no-targ', dest='targ', action='store_const', const=False,
                            default=None,
                            help='train with the bare object token instead of task-aware '
                                 'prompts; ignored with --resume')
        parser.add_argument('--batch-size', dest='batch_size', type=int, default=None,
                            help='triplets per optimizer step (default: from config)')
        parser.add_argument('--resume', default=None,
                            help='checkpoint directory to continue from (default: %(default)s)')

    def run(self, run, run_dir, options):
        data = self.require_path(options['data'], 'dataset')
        resume = options.get('resume')
        if resume:
            model, _ = load_checkpoint(self.require_path(resume, 'checkpoint'))
        else:
            model = build_model(run.model)
        trainer = train_loop(data, model, run.train, run_dir, resume_from=resume)
        last = trainer.step_breakdown.total if trainer.step_breakdown else None
        return {
            'steps': trainer.step,
            'loss': last,
            'checkpoint': os.path.join(run_dir, 'artifacts', 'step_{0}'.format(trainer.step)),
        }
