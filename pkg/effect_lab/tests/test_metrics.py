# -*- coding: utf-8 -*-
import math
import os

import numpy as np
import tablib
import torch

from effect_lab.exceptions import DataValidationError, ShapeMismatch
from effect_lab.metrics import (
    SSIM_C1, EvalOptions, MetricReport, ProjectionExtractor, eval_set,
    frechet_distance, locate_video, perceptual_distance, psnr, ssim,
)
from effect_lab.utils import load_json
from effect_lab.video import write_triplet, write_video_dir

from .base import EffectLabTestCase, TempDirMixin, random_video, shadow_triplet


def constant_video(value, frames=2, height=8, width=8):
    return torch.full((frames, height, width, 3), value, dtype=torch.float64)


class FidelityTestCase(EffectLabTestCase):

    def test_psnr_of_constant_difference(self):
        self.assertAlmostEqual(psnr(constant_video(0.5), constant_video(0.6)), 20.0, delta=1e-6)

    def test_psnr_of_identical_videos(self):
        video = random_video()
        self.assertEqual(psnr(video, video.clone()), math.inf)

    def test_psnr_falls_with_noise(self):
        clean = constant_video(0.5, height=16, width=16)
        noise = torch.rand(clean.shape, generator=torch.Generator().manual_seed(0),
                           dtype=torch.float64) * 2.0 - 1.0
        scores = [psnr(clean, clean + amplitude * noise)
                  for amplitude in (0.01, 0.02, 0.05, 0.1, 0.2)]
        self.assertEqual(scores, sorted(scores, reverse=True))
        self.assertEqual(len(set(scores)), len(scores))

    def test_ssim_of_constants(self):
        expected = (2 * 0.2 * 0.4 + SSIM_C1) / (0.04 + 0.16 + SSIM_C1)
        score = ssim(constant_video(0.2), constant_video(0.4))
        self.assertAlmostEqual(score, expected, delta=1e-4)
        self.assertAlmostEqual(score, 0.8001, delta=1e-4)

    def test_ssim_bounds_and_symmetry(self):
        a = random_video(height=12, width=12, seed=1)
        b = random_video(height=12, width=12, seed=2)
        self.assertEqual(ssim(a, a), 1.0)
        self.assertAlmostEqual(ssim(a, b), ssim(b, a), places=12)
        self.assertLessEqual(ssim(a, b), 1.0)
        self.assertGreaterEqual(ssim(a, b), -1.0)

    def test_ssim_needs_full_window(self):
        with self.assertRaises(ShapeMismatch):
            ssim(random_video(height=6), random_video(height=6))

    def test_shapes_must_agree(self):
        with self.assertRaises(ShapeMismatch):
            psnr(random_video(frames=2), random_video(frames=3))


class FrechetTestCase(EffectLabTestCase):

    def test_gaussians(self):
        rng = np.random.default_rng(0)
        mu_a = np.zeros(8)
        mu_b = np.full(8, 1.0)
        a = rng.standard_normal((10000, 8)) + mu_a
        b = rng.standard_normal((10000, 8)) + mu_b
        expected = float(np.sum((mu_a - mu_b) ** 2))
        self.assertAlmostEqual(frechet_distance(a, b), expected, delta=0.05 * expected)

    def test_identical_sets(self):
        features = np.random.default_rng(1).standard_normal((500, 8))
        self.assertLess(frechet_distance(features, features), 1e-6)

    def test_scaled_covariance(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((20000, 4))
        b = 2.0 * rng.standard_normal((20000, 4))
        # Tr(I + 4I - 2 * 2I) = 4
        self.assertAlmostEqual(frechet_distance(a, b), 4.0, delta=0.2)

    def test_dimension_mismatch(self):
        with self.assertRaises(ShapeMismatch):
            frechet_distance(np.zeros((3, 2)), np.zeros((3, 4)))

    def test_needs_two_samples(self):
        with self.assertRaises(DataValidationError):
            frechet_distance(np.zeros((1, 2)), np.zeros((3, 2)))


class PerceptualTestCase(EffectLabTestCase):

    def test_zero_for_identical_videos(self):
        video = random_video()
        self.assertEqual(perceptual_distance(video, video), 0.0)

    def test_scale_is_linear(self):
        a, b = random_video(seed=1), random_video(seed=2)
        unit = perceptual_distance(a, b, ProjectionExtractor(scale=1.0))
        double = perceptual_distance(a, b, ProjectionExtractor(scale=2.0))
        self.assertGreater(unit, 0.0)
        self.assertAlmostEqual(double, 2.0 * unit, places=9)

    def test_features(self):
        extractor = ProjectionExtractor(grid=4, dim=16)
        video = random_video(frames=3)
        self.assertEqual(tuple(extractor.frame_features(video).shape), (3, 16))
        self.assertEqual(tuple(extractor.video_features(video).shape), (16,))


class MetricReportTestCase(TempDirMixin, EffectLabTestCase):

    def test_aggregate_and_exports(self):
        report = MetricReport(rows=[
            {'sample_id': 'a', 'psnr': 20.0, 'ssim': 0.5, 'perceptual': 1.0, 'qscore': None},
            {'sample_id': 'b', 'psnr': 30.0, 'ssim': 0.7, 'perceptual': 3.0, 'qscore': None},
        ], frechet=1.5)
        aggregate = report.aggregate
        self.assertEqual(aggregate['count'], 2)
        self.assertAlmostEqual(aggregate['psnr'], 25.0)
        self.assertAlmostEqual(aggregate['ssim'], 0.6)
        self.assertIsNone(aggregate['qscore'])
        self.assertEqual(aggregate['frechet'], 1.5)

        report.write(self.tmp_dir)
        data = load_json(os.path.join(self.tmp_dir, 'report.json'))
        self.assertEqual(data['aggregate']['psnr'], 25.0)
        with open(os.path.join(self.tmp_dir, 'report.csv')) as handle:
            csv = tablib.Dataset().load(handle.read(), format='csv')
        self.assertEqual(csv.headers, ['sample_id', 'psnr', 'ssim', 'perceptual', 'qscore'])
        self.assertEqual(csv['sample_id'], ['a', 'b'])


class EvalSetTestCase(TempDirMixin, EffectLabTestCase):

    def setUp(self):
        super(EvalSetTestCase, self).setUp()
        self.pred = os.path.join(self.tmp_dir, 'pred')
        self.gt = os.path.join(self.tmp_dir, 'gt')
        for index, sample_id in enumerate(('s1', 's2')):
            sample = shadow_triplet(frames=2 + index)
            write_triplet(sample, os.path.join(self.gt, sample_id))
            write_video_dir(sample.background_video, os.path.join(self.pred, sample_id))

    def test_perfect_predictions(self):
        report = eval_set(self.pred, self.gt)
        self.assertEqual(report.count, 2)
        self.assertEqual(report.aggregate['psnr'], math.inf)
        self.assertEqual(report.aggregate['ssim'], 1.0)
        self.assertEqual(report.aggregate['perceptual'], 0.0)
        self.assertLess(report.frechet, 1e-4)

    def test_other_part(self):
        report = eval_set(self.pred, self.gt, EvalOptions(part='object'))
        self.assertLess(report.aggregate['psnr'], math.inf)

    def test_ids_must_match(self):
        write_video_dir(random_video(), os.path.join(self.pred, 's3'))
        with self.assertRaises(DataValidationError):
            eval_set(self.pred, self.gt)

    def test_locate_video(self):
        self.assertEqual(locate_video(os.path.join(self.pred, 's1'), 'background'),
                         os.path.join(self.pred, 's1'))
        self.assertEqual(locate_video(os.path.join(self.gt, 's1'), 'mask'),
                         os.path.join(self.gt, 's1', 'mask'))
        with self.assertRaises(DataValidationError):
            locate_video(self.tmp_dir, 'background')
