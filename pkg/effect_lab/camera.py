# -*- coding: utf-8 -*-
"""
Ken Burns camera motion: the fourteen motion rules, per-frame virtual
camera paths and the crop-and-resample that applies them to a video.

A path stores, for every frame, the crop-window centre in source pixels
(the frame spans ``[0, W] x [0, H]``) and a zoom factor ``>= 1``; the
window has size ``(H / zoom, W / zoom)`` and must stay inside the frame.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from .choices import MOTION_RULES
from .conf import settings
from .exceptions import DataValidationError, ShapeMismatch
from .video import binarize

logger = logging.getLogger(__name__)

MOTION_PATTERNS_PER_CLIP = 5
CONTAINMENT_TOLERANCE = 1e-9
# keeps float rounding from pushing a window past the frame edge
MAX_INTENSITY = 0.999
# stays below half a cycle per frame so every half period holds a sample
MAX_BOB_FREQUENCY = 0.49
# walk_bob needs 1.5 periods under that cap, random_combo two segments
RULE_MIN_FRAMES = {
    MOTION_RULES.WALK_BOB: 5,
    MOTION_RULES.RANDOM_COMBO: 3,
}
KEN_BURNS_MIN_FRAMES = max(RULE_MIN_FRAMES.values())


@dataclass(frozen=True)
class MotionBounds:
    zoom_min: float = 1.15
    zoom_max: float = 1.5
    intensity_min: float = 0.4
    intensity_max: float = 1.0
    bob_frequency_min: float = 0.08
    bob_frequency_max: float = 0.2

    @classmethod
    def from_settings(cls, synth=None):
        synth = synth or settings.EFFECT_LAB_SYNTH
        return cls(**{
            name: getattr(synth, name) if hasattr(synth, name) else synth[name]
            for name in cls.__dataclass_fields__
        })


@dataclass
class CameraPath:
    rule: int
    center_x: np.ndarray
    center_y: np.ndarray
    zoom: np.ndarray
    segments: list = field(default_factory=list)
    params: dict = field(default_factory=dict)

    @property
    def frames(self):
        return len(self.zoom)

    @property
    def name(self):
        return MOTION_RULES.for_value(self.rule).display

    def windows(self, src_h, src_w):
        """Per-frame ``(x0, y0, x1, y1)`` crop windows in source pixels."""
        half_w = src_w / self.zoom / 2.0
        half_h = src_h / self.zoom / 2.0
        return np.stack([
            self.center_x - half_w, self.center_y - half_h,
            self.center_x + half_w, self.center_y + half_h,
        ], axis=1)

    def contained(self, src_h, src_w):
        if np.any(self.zoom < 1.0 - CONTAINMENT_TOLERANCE):
            return False
        windows = self.windows(src_h, src_w)
        return bool(
            np.all(windows[:, 0] >= -CONTAINMENT_TOLERANCE) and
            np.all(windows[:, 1] >= -CONTAINMENT_TOLERANCE) and
            np.all(windows[:, 2] <= src_w + CONTAINMENT_TOLERANCE) and
            np.all(windows[:, 3] <= src_h + CONTAINMENT_TOLERANCE)
        )

    def to_dict(self):
        return {
            'rule': int(self.rule),
            'name': self.name,
            'segments': [int(s) for s in self.segments],
            'params': self.params,
        }


def identity_path(frames, src_h, src_w):
    return CameraPath(
        rule=0,
        center_x=np.full(frames, src_w / 2.0),
        center_y=np.full(frames, src_h / 2.0),
        zoom=np.ones(frames),
    )


def sample_motion_rules(rng, count=MOTION_PATTERNS_PER_CLIP):
    """Draws ``count`` distinct rule ids uniformly without replacement."""
    rule_ids = sorted(MOTION_RULES.values.keys())
    return [int(r) for r in rng.choice(rule_ids, size=count, replace=False)]


def _slack(zoom, size):
    return (size - size / zoom) / 2.0


def _progress(frames, rng):
    """Strictly increasing easing curve from 0 to 1 with a random exponent."""
    gamma = rng.uniform(0.7, 1.4)
    return np.linspace(0.0, 1.0, frames) ** gamma


def _intensity(rng, bounds):
    low = min(bounds.intensity_min, MAX_INTENSITY)
    high = min(max(bounds.intensity_max, low), MAX_INTENSITY)
    return rng.uniform(low, high)


def _zoom_level(rng, bounds):
    low = max(bounds.zoom_min, 1.0 + 1e-3)
    high = max(bounds.zoom_max, low)
    return rng.uniform(low, high)


def _pan(rng, bounds, frames, src_h, src_w, axis, sign):
    zoom = np.full(frames, _zoom_level(rng, bounds))
    k = _intensity(rng, bounds)
    u = _progress(frames, rng)
    size = src_w if axis == 'x' else src_h
    # sign -1 walks the centre towards smaller coordinates
    offset = -sign * k * _slack(zoom, size) * (1.0 - 2.0 * u)
    center_x = np.full(frames, src_w / 2.0)
    center_y = np.full(frames, src_h / 2.0)
    if axis == 'x':
        center_x = center_x + offset
    else:
        center_y = center_y + offset
    return center_x, center_y, zoom, {'zoom': float(zoom[0]), 'intensity': k}


def _zoom(rng, bounds, frames, src_h, src_w, direction, axis=None, sign=0):
    u = _progress(frames, rng)
    peak = _zoom_level(rng, bounds)
    k = _intensity(rng, bounds)
    center_x = np.full(frames, src_w / 2.0)
    center_y = np.full(frames, src_h / 2.0)
    params = {'peak_zoom': peak, 'intensity': k}
    if direction > 0:
        zoom = 1.0 + (peak - 1.0) * u
        if axis is not None:
            size = src_w if axis == 'x' else src_h
            # slack grows with the zoom so the offset grows monotonically too
            offset = sign * k * _slack(zoom, size)
            if axis == 'x':
                center_x = center_x + offset
            else:
                center_y = center_y + offset
    else:
        end = 1.0
        if axis is not None:
            end = 1.0 + (peak - 1.0) * rng.uniform(0.3, 0.6)
        zoom = peak - (peak - end) * u
        params['end_zoom'] = end
        if axis is not None:
            size = src_w if axis == 'x' else src_h
            # bounded by the smallest slack, reached at the last frame
            reach = k * _slack(end, size)
            offset = -sign * reach * (1.0 - 2.0 * u)
            if axis == 'x':
                center_x = center_x + offset
            else:
                center_y = center_y + offset
    return center_x, center_y, zoom, params


def _walk_bob(rng, bounds, frames, src_h, src_w):
    zoom = np.full(frames, _zoom_level(rng, bounds))
    amplitude = _intensity(rng, bounds) * _slack(zoom[0], src_h)
    # 1.5 periods over the clip give two sign changes between samples
    floor = 1.5 / (frames - 1)
    low = min(max(bounds.bob_frequency_min, floor), MAX_BOB_FREQUENCY)
    high = min(max(bounds.bob_frequency_max, low), MAX_BOB_FREQUENCY)
    frequency = rng.uniform(low, high)
    t = np.arange(frames, dtype=np.float64)
    center_x = np.full(frames, src_w / 2.0)
    center_y = src_h / 2.0 + amplitude * np.sin(2.0 * math.pi * frequency * t)
    return center_x, center_y, zoom, {
        'zoom': float(zoom[0]), 'amplitude': amplitude, 'frequency': frequency}


def _random_combo(rng, bounds, frames, src_h, src_w):
    steps = frames - 1
    count = 3 if steps >= 3 and rng.random() < 0.5 else 2
    cuts = sorted(rng.choice(np.arange(1, steps), size=count - 1, replace=False))
    bounds_idx = [0] + [int(c) for c in cuts] + [steps]
    segment_rules = [int(r) for r in rng.choice(
        sorted(MOTION_RULES.SEGMENTS.values.keys()), size=count, replace=True)]

    zoom = np.empty(frames)
    offset_x = np.empty(frames)
    offset_y = np.empty(frames)
    zoom[0] = _zoom_level(rng, bounds)
    offset_x[0] = offset_y[0] = 0.0
    for rule, start, stop in zip(segment_rules, bounds_idx[:-1], bounds_idx[1:]):
        length = stop - start
        u = np.arange(1, length + 1) / float(length)
        z0, ox0, oy0 = zoom[start], offset_x[start], offset_y[start]
        span = slice(start + 1, stop + 1)
        if rule in (MOTION_RULES.ZOOM_IN, MOTION_RULES.ZOOM_OUT):
            top = max(bounds.zoom_max, 1.0 + 1e-3)
            if rule == MOTION_RULES.ZOOM_IN:
                target = z0 + (top - z0) * rng.uniform(0.3, 1.0)
            else:
                target = 1.0 + (z0 - 1.0) * rng.uniform(0.0, 0.7)
            zoom[span] = z0 + (target - z0) * u
            # offsets shrink and grow with the slack so containment holds
            ratio_x = _ratio(zoom[span], z0, src_w)
            ratio_y = _ratio(zoom[span], z0, src_h)
            offset_x[span] = ox0 * ratio_x
            offset_y[span] = oy0 * ratio_y
        else:
            zoom[span] = z0
            horizontal = rule in (MOTION_RULES.PAN_LEFT, MOTION_RULES.PAN_RIGHT)
            sign = -1.0 if rule in (MOTION_RULES.PAN_LEFT, MOTION_RULES.TILT_UP) else 1.0
            size = src_w if horizontal else src_h
            target = sign * _intensity(rng, bounds) * _slack(z0, size)
            if horizontal:
                offset_x[span] = ox0 + (target - ox0) * u
                offset_y[span] = oy0
            else:
                offset_y[span] = oy0 + (target - oy0) * u
                offset_x[span] = ox0
    center_x = src_w / 2.0 + offset_x
    center_y = src_h / 2.0 + offset_y
    return center_x, center_y, zoom, {'cuts': bounds_idx}, segment_rules


def _ratio(zoom, start_zoom, size):
    start = _slack(start_zoom, size)
    if start <= 0:
        return np.zeros_like(zoom)
    return np.minimum(_slack(zoom, size) / start, 1.0)


def min_frames(rule):
    return RULE_MIN_FRAMES.get(int(rule), 2)


def camera_path(rule, frames, src_h, src_w, rng, bounds=None):
    """
    Builds the per-frame camera state for ``rule``. Requested translations
    beyond the available slack are rescaled, never rejected; clips shorter
    than ``min_frames(rule)`` are.
    """
    rule = int(rule)
    if frames < min_frames(rule):
        raise ShapeMismatch('rule {0} needs at least {1} frames, got {2}'.format(
            rule, min_frames(rule), frames))
    bounds = bounds or MotionBounds.from_settings()
    segments = []
    R = MOTION_RULES
    if rule == R.ZOOM_IN:
        result = _zoom(rng, bounds, frames, src_h, src_w, +1)
    elif rule == R.ZOOM_OUT:
        result = _zoom(rng, bounds, frames, src_h, src_w, -1)
    elif rule in (R.PAN_LEFT, R.PAN_RIGHT):
        sign = -1 if rule == R.PAN_LEFT else 1
        result = _pan(rng, bounds, frames, src_h, src_w, 'x', sign)
    elif rule in (R.TILT_UP, R.TILT_DOWN):
        sign = -1 if rule == R.TILT_UP else 1
        result = _pan(rng, bounds, frames, src_h, src_w, 'y', sign)
    elif rule in (R.ZOOM_IN_PAN_LEFT, R.ZOOM_IN_PAN_RIGHT):
        sign = -1 if rule == R.ZOOM_IN_PAN_LEFT else 1
        result = _zoom(rng, bounds, frames, src_h, src_w, +1, 'x', sign)
    elif rule in (R.ZOOM_OUT_PAN_LEFT, R.ZOOM_OUT_PAN_RIGHT):
        sign = -1 if rule == R.ZOOM_OUT_PAN_LEFT else 1
        result = _zoom(rng, bounds, frames, src_h, src_w, -1, 'x', sign)
    elif rule in (R.ZOOM_IN_TILT, R.ZOOM_OUT_TILT):
        sign = -1 if rng.random() < 0.5 else 1
        direction = +1 if rule == R.ZOOM_IN_TILT else -1
        result = _zoom(rng, bounds, frames, src_h, src_w, direction, 'y', sign)
        result[3]['tilt'] = 'up' if sign < 0 else 'down'
    elif rule == R.WALK_BOB:
        result = _walk_bob(rng, bounds, frames, src_h, src_w)
    elif rule == R.RANDOM_COMBO:
        center_x, center_y, zoom, params, segments = _random_combo(
            rng, bounds, frames, src_h, src_w)
        result = (center_x, center_y, zoom, params)
    else:
        raise DataValidationError('unknown motion rule {0}'.format(rule))
    center_x, center_y, zoom, params = result
    return CameraPath(
        rule=rule, center_x=center_x, center_y=center_y, zoom=zoom,
        segments=segments, params=params)


def _sampling_grid(path, src_h, src_w, out_h, out_w, dtype):
    windows = torch.as_tensor(path.windows(src_h, src_w), dtype=dtype)
    x0, y0, x1, y1 = windows.unbind(dim=1)
    cols = (torch.arange(out_w, dtype=dtype) + 0.5) / out_w
    rows = (torch.arange(out_h, dtype=dtype) + 0.5) / out_h
    # normalised coordinates for align_corners=False sampling
    gx = (x0[:, None] + cols[None, :] * (x1 - x0)[:, None]) * 2.0 / src_w - 1.0
    gy = (y0[:, None] + rows[None, :] * (y1 - y0)[:, None]) * 2.0 / src_h - 1.0
    frames = len(path.zoom)
    grid = torch.stack([
        gx[:, None, :].expand(frames, out_h, out_w),
        gy[:, :, None].expand(frames, out_h, out_w),
    ], dim=-1)
    return grid


def apply_ken_burns(video, path, out_h, out_w):
    """
    Crops the path window out of every frame and resamples it bilinearly
    to ``(out_h, out_w)``. Masks (no channel axis) are resampled as soft
    values; binarize them afterwards.
    """
    squeeze = video.dim() == 3
    frames_in = video.unsqueeze(-1) if squeeze else video
    frames, src_h, src_w = frames_in.shape[:3]
    if path.frames != frames:
        raise ShapeMismatch('camera path has {0} frames, video {1}'.format(
            path.frames, frames))
    if not path.contained(src_h, src_w):
        raise DataValidationError('camera window leaves the source frame')
    grid = _sampling_grid(path, src_h, src_w, out_h, out_w, frames_in.dtype)
    planar = frames_in.permute(0, 3, 1, 2)
    sampled = F.grid_sample(
        planar, grid, mode='bilinear', padding_mode='border', align_corners=False)
    sampled = sampled.clamp(0.0, 1.0).permute(0, 2, 3, 1).contiguous()
    return sampled.squeeze(-1) if squeeze else sampled


def apply_ken_burns_masks(mask, footprint, path, out_h, out_w):
    """
    Resamples an object mask and its effect footprint. Any output pixel
    that draws on a changed source pixel joins the footprint, so both
    videos still agree outside ``mask | footprint``.
    """
    soft_mask = apply_ken_burns(mask, path, out_h, out_w)
    changed = torch.clamp(mask + footprint, max=1.0)
    soft_changed = apply_ken_burns(changed, path, out_h, out_w)
    new_mask = binarize(soft_mask)
    new_footprint = ((soft_changed > 0) & ~new_mask.bool()).to(mask.dtype)
    return new_mask, new_footprint
