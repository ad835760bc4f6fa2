# -*- coding: utf-8 -*-
"""
In-memory video and mask representations, the on-disk frame directory
format and the bilinear resampling shared by synthesis, training and
metrics.

Videos are ``torch`` tensors laid out ``frames x height x width x 3`` with
values in ``[0, 1]``; masks drop the channel axis. Resampling uses the
align-corners-off, half-pixel-centre convention everywhere.
"""
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image, UnidentifiedImageError

from . import MANIFEST_KEYS, TRIPLET_PARTS
from .conf import settings
from .exceptions import (
    DimensionMismatch, FrameCountMismatch, FrameDecodeError, ManifestError, ShapeMismatch,
)
from .utils import dump_json, load_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.txt'
MASK_COLOR_SPACE = 'gray-8bit'
MIN_SIZE = 8

OUTSIDE_FOOTPRINT_MISMATCH = 'outside-footprint mismatch'
FRAME_COUNT_MISMATCH = 'frame count mismatch'
DIMENSION_MISMATCH = 'dimension mismatch'
VALUE_RANGE = 'values outside [0, 1]'
NON_FINITE = 'non-finite values'
MASK_NOT_BINARY = 'mask not binary'
TOO_SMALL = 'video smaller than 8x8 or empty'


@dataclass(frozen=True)
class VideoManifest:
    fps: Fraction
    width: int
    height: int
    frame_count: int
    frame_naming: str
    color_space: str

    def frame_name(self, index):
        return self.frame_naming % index

    def to_text(self):
        values = {
            'fps': '{0}/{1}'.format(self.fps.numerator, self.fps.denominator),
            'width': self.width,
            'height': self.height,
            'frame_count': self.frame_count,
            'frame_naming': self.frame_naming,
            'color_space': self.color_space,
        }
        return ''.join(
            '{0}={1}\n'.format(key, values[key]) for key in MANIFEST_KEYS)

    @classmethod
    def from_text(cls, text):
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            key, sep, value = line.partition('=')
            if not sep:
                raise ManifestError('malformed manifest line: {0!r}'.format(line))
            values[key.strip()] = value.strip()
        missing = [key for key in MANIFEST_KEYS if key not in values]
        if missing:
            raise ManifestError('manifest misses keys: {0}'.format(', '.join(missing)))
        try:
            return cls(
                fps=Fraction(values['fps']),
                width=int(values['width']),
                height=int(values['height']),
                frame_count=int(values['frame_count']),
                frame_naming=values['frame_naming'],
                color_space=values['color_space'],
            )
        except ValueError as exc:
            raise ManifestError('invalid manifest value: {0}'.format(exc))


@dataclass
class TripletSample:
    """Object video, background video, object mask and effect footprint."""
    object_video: torch.Tensor
    background_video: torch.Tensor
    mask: torch.Tensor
    effect_footprint: torch.Tensor = None
    meta: dict = field(default_factory=dict)

    @property
    def frames(self):
        return self.object_video.shape[0]

    @property
    def height(self):
        return self.object_video.shape[1]

    @property
    def width(self):
        return self.object_video.shape[2]

    def to(self, dtype):
        return TripletSample(
            object_video=self.object_video.to(dtype),
            background_video=self.background_video.to(dtype),
            mask=self.mask.to(dtype),
            effect_footprint=(None if self.effect_footprint is None
                              else self.effect_footprint.to(dtype)),
            meta=dict(self.meta),
        )


def check_video(video):
    if video.dim() != 4 or video.shape[-1] != 3:
        raise ShapeMismatch(
            'expected frames x height x width x 3, got {0}'.format(
                tuple(video.shape)))
    frames, height, width, _ = video.shape
    if frames < 1 or height < MIN_SIZE or width < MIN_SIZE:
        raise ShapeMismatch(TOO_SMALL)
    return video


def check_aligned(video, mask):
    if tuple(mask.shape) != tuple(video.shape[:3]):
        raise ShapeMismatch('mask {0} does not match video {1}'.format(
            tuple(mask.shape), tuple(video.shape)))


def binarize(mask, threshold=None):
    if threshold is None:
        threshold = settings.EFFECT_LAB_MASK_THRESHOLD
    return (mask >= threshold).to(mask.dtype)


def _to_bytes(frame):
    array = frame.detach().cpu().double().clamp(0.0, 1.0).numpy()
    return np.rint(array * 255.0).astype(np.uint8)


def write_video_dir(video, path, fps=None, is_mask=False):
    """
    Stores ``video`` as lossless 8-bit PNG frames plus a manifest and
    returns the manifest. Masks are written as single channel images.
    """
    if is_mask:
        if video.dim() != 3:
            raise ShapeMismatch('mask must be frames x height x width')
        frames, height, width = video.shape
        color_space = MASK_COLOR_SPACE
    else:
        check_video(video)
        frames, height, width, _ = video.shape
        color_space = settings.EFFECT_LAB_COLOR_SPACE
    manifest = VideoManifest(
        fps=Fraction(fps if fps is not None else settings.EFFECT_LAB_SYNTH['fps']),
        width=int(width),
        height=int(height),
        frame_count=int(frames),
        frame_naming=settings.EFFECT_LAB_FRAME_NAMING,
        color_space=color_space,
    )
    os.makedirs(path, exist_ok=True)
    for index in range(frames):
        image = Image.fromarray(_to_bytes(video[index]))
        image.save(os.path.join(path, manifest.frame_name(index)), format='PNG')
    with open(os.path.join(path, MANIFEST_NAME), 'w', encoding='utf-8') as handle:
        handle.write(manifest.to_text())
    return manifest


def read_manifest(path):
    manifest_path = os.path.join(path, MANIFEST_NAME)
    if not os.path.isfile(manifest_path):
        raise ManifestError('missing manifest in {0}'.format(path))
    with open(manifest_path, 'r', encoding='utf-8') as handle:
        return VideoManifest.from_text(handle.read())


def read_video_dir(path, dtype=torch.float64):
    """
    Loads a frame directory. Pixels map to ``[0, 1]`` by ``v / 255``; mask
    directories come back without a channel axis.
    """
    manifest = read_manifest(path)
    is_mask = manifest.color_space == MASK_COLOR_SPACE
    expected = [manifest.frame_name(i) for i in range(manifest.frame_count)]
    present = [name for name in expected
               if os.path.isfile(os.path.join(path, name))]
    if len(present) != manifest.frame_count:
        raise FrameCountMismatch(
            'manifest lists {0} frames, found {1} in {2}'.format(
                manifest.frame_count, len(present), path))
    frames = []
    for name in expected:
        try:
            with Image.open(os.path.join(path, name)) as image:
                image = image.convert('L' if is_mask else 'RGB')
                array = np.asarray(image, dtype=np.uint8)
        except (UnidentifiedImageError, OSError) as exc:
            raise FrameDecodeError('cannot decode {0}: {1}'.format(
                os.path.join(path, name), exc)) from exc
        if array.shape[:2] != (manifest.height, manifest.width):
            raise DimensionMismatch(
                '{0} is {1}x{2}, manifest says {3}x{4}'.format(
                    name, array.shape[1], array.shape[0],
                    manifest.width, manifest.height))
        frames.append(array)
    data = torch.from_numpy(np.stack(frames)).to(dtype) / 255.0
    return data


def resize_bilinear(video, out_h, out_w, clamp=True):
    """
    Per-frame bilinear resampling with half-pixel centres, clamped to
    ``[0, 1]`` unless ``clamp`` is off. Accepts videos (T x H x W x C) and
    masks (T x H x W).
    """
    if out_h < 1 or out_w < 1:
        raise ShapeMismatch('target size must be positive')
    squeeze = video.dim() == 3
    frames = video.unsqueeze(-1) if squeeze else video
    if tuple(frames.shape[1:3]) == (out_h, out_w):
        return video.clone()
    planar = frames.permute(0, 3, 1, 2)
    resized = F.interpolate(
        planar, size=(out_h, out_w), mode='bilinear', align_corners=False)
    if clamp:
        resized = resized.clamp(0.0, 1.0)
    resized = resized.permute(0, 2, 3, 1).contiguous()
    return resized.squeeze(-1) if squeeze else resized


def validate_triplet(sample):
    """Returns the violated triplet invariants; an empty list means valid."""
    violations = []
    videos = [sample.object_video, sample.background_video]
    masks = [sample.mask]
    if sample.effect_footprint is not None:
        masks.append(sample.effect_footprint)

    for video in videos:
        if video.dim() != 4 or video.shape[-1] != 3 or video.shape[0] < 1 \
                or video.shape[1] < MIN_SIZE or video.shape[2] < MIN_SIZE:
            violations.append(TOO_SMALL)
            return violations

    reference = tuple(sample.object_video.shape[:3])
    for tensor in videos[1:] + masks:
        shape = tuple(tensor.shape[:3])
        if shape[0] != reference[0]:
            violations.append(FRAME_COUNT_MISMATCH)
        elif shape[1:] != reference[1:]:
            violations.append(DIMENSION_MISMATCH)
    if violations:
        return sorted(set(violations))

    for tensor in videos + masks:
        if not torch.isfinite(tensor).all():
            violations.append(NON_FINITE)
            break
    for tensor in videos + masks:
        if tensor.min() < 0 or tensor.max() > 1:
            violations.append(VALUE_RANGE)
            break
    for tensor in masks:
        if not torch.equal(binarize(tensor), tensor):
            violations.append(MASK_NOT_BINARY)
            break

    if sample.effect_footprint is not None:
        changed = binarize(sample.mask).bool() | binarize(sample.effect_footprint).bool()
        differs = (sample.object_video != sample.background_video).any(dim=-1)
        if (differs & ~changed).any():
            violations.append(OUTSIDE_FOOTPRINT_MISMATCH)
    return violations


def write_triplet(sample, path, fps=None):
    os.makedirs(path, exist_ok=True)
    write_video_dir(sample.object_video, os.path.join(path, 'object'), fps=fps)
    write_video_dir(sample.background_video, os.path.join(path, 'background'), fps=fps)
    write_video_dir(sample.mask, os.path.join(path, 'mask'), fps=fps, is_mask=True)
    if sample.effect_footprint is not None:
        write_video_dir(sample.effect_footprint, os.path.join(path, 'footprint'),
                        fps=fps, is_mask=True)
    dump_json(sample.meta, os.path.join(path, 'meta.json'))


def read_triplet(path, dtype=torch.float64):
    parts = {}
    for part in TRIPLET_PARTS:
        part_dir = os.path.join(path, part)
        if os.path.isdir(part_dir):
            parts[part] = read_video_dir(part_dir, dtype=dtype)
    for part in ('object', 'background', 'mask'):
        if part not in parts:
            raise ManifestError('triplet {0} misses {1}/'.format(path, part))
    meta_path = os.path.join(path, 'meta.json')
    meta = load_json(meta_path) if os.path.isfile(meta_path) else {}
    return TripletSample(
        object_video=parts['object'],
        background_video=parts['background'],
        mask=parts['mask'],
        effect_footprint=parts.get('footprint'),
        meta=meta,
    )
