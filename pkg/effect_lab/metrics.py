# -*- coding: utf-8 -*-
"""
Fidelity metrics, Fréchet-distance machinery, a pluggable perceptual
distance and set-level evaluation with report exports.
"""
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import tablib
import torch
import torch.nn.functional as F
from scipy import linalg

from .conf import settings
from .exceptions import DataValidationError, ShapeMismatch
from .qscore import VlmConfig, qscore_batch
from .utils import dump_json, numpy_rng
from .video import MANIFEST_NAME, read_video_dir, resize_bilinear

logger = logging.getLogger(__name__)

SSIM_WINDOW = 8
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

REPORT_FIELDS = ('sample_id', 'psnr', 'ssim', 'perceptual', 'qscore')


def _check_pair(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch('{0} and {1} disagree'.format(tuple(a.shape), tuple(b.shape)))


def psnr(a, b):
    """Peak 1; identical inputs give ``math.inf``."""
    _check_pair(a, b)
    mse = float(((a.double() - b.double()) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def ssim(a, b):
    """Mean SSIM over 8x8 uniform windows, channels and frames."""
    _check_pair(a, b)
    if a.shape[1] < SSIM_WINDOW or a.shape[2] < SSIM_WINDOW:
        raise ShapeMismatch('frames smaller than the {0}x{0} window'.format(SSIM_WINDOW))
    x = a.double().permute(0, 3, 1, 2)
    y = b.double().permute(0, 3, 1, 2)

    def window_mean(v):
        return F.avg_pool2d(v, SSIM_WINDOW, stride=1)

    mu_x, mu_y = window_mean(x), window_mean(y)
    var_x = window_mean(x * x) - mu_x * mu_x
    var_y = window_mean(y * y) - mu_y * mu_y
    cov = window_mean(x * y) - mu_x * mu_y
    numerator = (2 * mu_x * mu_y + SSIM_C1) * (2 * cov + SSIM_C2)
    denominator = (mu_x * mu_x + mu_y * mu_y + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float((numerator / denominator).mean())


def _psd_sqrt(matrix):
    values, vectors = linalg.eigh(matrix)
    return (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.T


def frechet_distance(features_a, features_b, eps=None):
    """
    ``|mu_a - mu_b|^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))`` between Gaussian
    fits of two ``samples x dims`` feature sets.
    """
    eps = settings.EFFECT_LAB_COVARIANCE_EPS if eps is None else eps
    a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatch('feature dimensions {0} and {1} disagree'.format(
            a.shape[1], b.shape[1]))
    if len(a) < 2 or len(b) < 2:
        raise DataValidationError('need at least two feature vectors per set')
    identity = np.eye(a.shape[1])
    sigma_a = np.atleast_2d(np.cov(a, rowvar=False)) + eps * identity
    sigma_b = np.atleast_2d(np.cov(b, rowvar=False)) + eps * identity
    root_a = _psd_sqrt(sigma_a)
    product = root_a @ sigma_b @ root_a
    product = (product + product.T) / 2.0
    eigenvalues = np.clip(linalg.eigvalsh(product), 0.0, None)
    diff = a.mean(axis=0) - b.mean(axis=0)
    distance = diff @ diff + np.trace(sigma_a) + np.trace(sigma_b) \
        - 2.0 * np.sqrt(eigenvalues).sum()
    if not np.isfinite(distance):
        raise DataValidationError('degenerate covariance in Fréchet distance')
    return float(max(distance, 0.0))


class FeatureExtractor(object):
    """Maps videos to per-frame features and a per-video feature vector."""
    dim = None

    def frame_features(self, video):
        raise NotImplementedError

    def video_features(self, video):
        return self.frame_features(video).mean(dim=0)


class ProjectionExtractor(FeatureExtractor):
    """
    Downsamples every frame to ``grid x grid``, flattens it and applies a
    fixed seeded random projection. Linear, so ``scale`` scales distances.
    """

    def __init__(self, grid=8, dim=64, seed=0, scale=1.0):
        self.grid = grid
        self.dim = dim
        self.scale = scale
        rng = numpy_rng(seed)
        projection = rng.standard_normal((grid * grid * 3, dim)) / math.sqrt(grid * grid * 3)
        self.projection = torch.from_numpy(projection)

    def frame_features(self, video):
        small = resize_bilinear(video.double(), self.grid, self.grid)
        return self.scale * (small.reshape(small.shape[0], -1) @ self.projection)


def perceptual_distance(a, b, extractor=None):
    """Mean Euclidean distance between per-frame features."""
    _check_pair(a, b)
    extractor = extractor or ProjectionExtractor()
    difference = extractor.frame_features(a) - extractor.frame_features(b)
    return float(difference.norm(dim=-1).mean())


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)
    frechet: float = None

    @property
    def count(self):
        return len(self.rows)

    @property
    def aggregate(self):
        values = {'count': self.count, 'frechet': self.frechet}
        for name in REPORT_FIELDS[1:]:
            column = [row[name] for row in self.rows if row.get(name) is not None]
            values[name] = float(np.mean(column)) if column else None
        return values

    def dataset(self):
        data = tablib.Dataset(headers=REPORT_FIELDS)
        for row in self.rows:
            data.append([row.get(name) for name in REPORT_FIELDS])
        return data

    def to_dict(self):
        return {'rows': self.rows, 'aggregate': self.aggregate}

    def write(self, out_dir, name='report'):
        os.makedirs(out_dir, exist_ok=True)
        dump_json(self.to_dict(), os.path.join(out_dir, name + '.json'))
        csv_path = os.path.join(out_dir, name + '.csv')
        with open(csv_path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(self.dataset().export('csv'))


@dataclass(frozen=True)
class EvalOptions:
    part: str = 'background'
    fidelity: bool = True
    qscore: bool = False
    vlm: object = None
    extractor: object = None


def locate_video(path, part):
    """A video directory, or the ``part`` sub-directory of a triplet."""
    if os.path.isfile(os.path.join(path, MANIFEST_NAME)):
        return path
    candidate = os.path.join(path, part)
    if os.path.isfile(os.path.join(candidate, MANIFEST_NAME)):
        return candidate
    raise DataValidationError('no video found in {0}'.format(path))


def _sample_ids(root):
    if not os.path.isdir(root):
        raise DataValidationError('{0} is not a directory'.format(root))
    return sorted(name for name in os.listdir(root)
                  if os.path.isdir(os.path.join(root, name)))


def eval_set(pred_dir, gt_dir=None, options=None):
    """
    Pairs prediction and ground-truth sample directories by id and scores
    them. Without ``gt_dir`` only the QScore column is filled.
    """
    options = options or EvalOptions()
    pred_ids = _sample_ids(pred_dir)
    if gt_dir is not None and options.fidelity:
        gt_ids = _sample_ids(gt_dir)
        if pred_ids != gt_ids:
            missing = sorted(set(pred_ids) ^ set(gt_ids))
            raise DataValidationError('sample ids differ: {0}'.format(', '.join(missing)))
    if not pred_ids:
        raise DataValidationError('{0} holds no samples'.format(pred_dir))

    extractor = options.extractor or ProjectionExtractor()
    report = MetricReport()
    pred_features, gt_features = [], []
    pred_paths = {}
    for sample_id in pred_ids:
        pred_path = locate_video(os.path.join(pred_dir, sample_id), options.part)
        pred_paths[sample_id] = pred_path
        row = {'sample_id': sample_id, 'psnr': None, 'ssim': None,
               'perceptual': None, 'qscore': None}
        if gt_dir is not None and options.fidelity:
            pred = read_video_dir(pred_path)
            gt = read_video_dir(locate_video(os.path.join(gt_dir, sample_id), options.part))
            row.update(psnr=psnr(pred, gt), ssim=ssim(pred, gt),
                       perceptual=perceptual_distance(pred, gt, extractor))
            pred_features.append(extractor.video_features(pred).numpy())
            gt_features.append(extractor.video_features(gt).numpy())
        report.rows.append(row)

    if len(pred_features) >= 2:
        report.frechet = frechet_distance(pred_features, gt_features)
    if options.qscore:
        scores, _ = qscore_batch(pred_paths, options.vlm or VlmConfig())
        for row in report.rows:
            row['qscore'] = scores[row['sample_id']]
    logger.info('evaluated %d samples: %s', report.count, report.aggregate)
    return report
