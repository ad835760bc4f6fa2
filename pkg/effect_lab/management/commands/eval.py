# -*- coding: utf-8 -*-
import os

from ...metrics import EvalOptions, eval_set
from ..base import RunCommand


class Command(RunCommand):
    help = 'Scores predicted videos against ground truth and writes a report.'

    def add_command_arguments(self, parser):
        parser.add_argument('--pred', required=True, help='directory of predicted samples')
        parser.add_argument('--gt', default=None,
                            help='directory of ground-truth samples (default: %(default)s)')
        parser.add_argument('--part', default='background',
                            help='video inside triplet directories (default: %(default)s)')
        parser.add_argument('--qscore', action='store_true',
                            help='also query the VLM for QScore (default: off)')
        parser.add_argument('--out', default=None,
                            help='report directory (default: artifacts/)')

    def run(self, run, run_dir, options):
        pred = self.require_path(options['pred'], 'prediction directory')
        gt = self.require_path(options['gt'], 'ground truth directory') if options['gt'] else None
        report = eval_set(pred, gt, EvalOptions(
            part=options['part'], fidelity=gt is not None,
            qscore=options['qscore'], vlm=run.vlm))
        out = options['out'] or os.path.join(run_dir, 'artifacts')
        report.write(out)
        aggregate = report.aggregate
        return {'report': os.path.join(out, 'report.json'), 'count': report.count,
                'psnr': aggregate['psnr'], 'ssim': aggregate['ssim']}
