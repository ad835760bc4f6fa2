# -*- coding: utf-8 -*-
import os

from ...metrics import EvalOptions, eval_set
from ..base import RunCommand


class Command(RunCommand):
    help = 'Rates removal results with a vision-language model (QScore).'
    config_flags = {
        'endpoint': ('vlm', 'endpoint'),
        'max_retries': ('vlm', 'max_retries'),
    }

    def add_command_arguments(self, parser):
        parser.add_argument('--videos', required=True,
                            help='directory of video or triplet directories')
        parser.add_argument('--part', default='background',
                            help='video inside triplet directories (default: %(default)s)')
        parser.add_argument('--endpoint', default=None,
                            help='VLM endpoint URL (default: from config)')
        parser.add_argument('--max-retries', dest='max_retries', type=int, default=None,
                            help='retries per request (default: from config)')
        parser.add_argument('--out', default=None,
                            help='report directory (default: artifacts/)')

    def run(self, run, run_dir, options):
        videos = self.require_path(options['videos'], 'video directory')
        report = eval_set(videos, None, EvalOptions(
            part=options['part'], fidelity=False, qscore=True, vlm=run.vlm))
        out = options['out'] or os.path.join(run_dir, 'artifacts')
        report.write(out, name='qscore')
        return {'report': os.path.join(out, 'qscore.json'), 'count': report.count,
                'qscore': report.aggregate['qscore']}
