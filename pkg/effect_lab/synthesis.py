# -*- coding: utf-8 -*-
"""
Procedural paired-video synthesis.

Scenes are a procedural background plus moving sprites. Every sprite has
one occlusion type and any number of side effects (shadow, lighting,
reflection, deformation) whose footprints are closed-form functions of the
sprite position. All effects act pointwise on the running composite, which
is what keeps the object and background videos bit-identical outside the
removed objects' silhouettes and footprints.
"""
import itertools
import logging
import math
import os
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import tablib
import torch

from .camera import (
    KEN_BURNS_MIN_FRAMES, MotionBounds, apply_ken_burns, apply_ken_burns_masks, camera_path,
    sample_motion_rules,
)
from .choices import EFFECT_KINDS, SHAPES, SIDE_EFFECT_ORDER, TRAJECTORIES
from .exceptions import ConfigError, DataValidationError
from .utils import derive_seed, numpy_rng
from .video import TripletSample, validate_triplet, write_triplet

logger = logging.getLogger(__name__)

ABSENT, KEPT, REMOVED = 0, 1, 2

INDEX_HEADERS = (
    'sample_id', 'scene_seed', 'camera_id', 'variant', 'rule_id',
    'effect_kinds', 'removal_set', 'present_set', 'frames', 'height', 'width',
)

PairConfig = namedtuple('PairConfig', ('present', 'removal', 'camera_id'))


@dataclass(frozen=True)
class SynthConfig:
    scenes: int = 4
    objects_per_scene: int = 2
    camera_configs: int = 1
    frames: int = 8
    height: int = 32
    width: int = 48
    fps: int = 8
    ken_burns_variants: int = 5
    object_size_min: int = 4
    object_size_max: int = 7
    effect_probability: float = 0.6
    dynamic_background: bool = True
    zoom_min: float = 1.15
    zoom_max: float = 1.5
    intensity_min: float = 0.4
    intensity_max: float = 1.0
    bob_frequency_min: float = 0.08
    bob_frequency_max: float = 0.2
    workers: int = 1

    def __post_init__(self):
        if self.ken_burns_variants and self.frames < KEN_BURNS_MIN_FRAMES:
            raise ConfigError('camera motion needs clips of at least {0} frames'.format(
                KEN_BURNS_MIN_FRAMES))


@dataclass(frozen=True)
class EffectSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def validate(self):
        p = self.params
        kind = self.kind
        checks = {
            EFFECT_KINDS.OCCLUSION_OPAQUE: lambda: True,
            EFFECT_KINDS.OCCLUSION_SEMITRANSPARENT:
                lambda: 0.0 < p['alpha'] <= 1.0,
            EFFECT_KINDS.OCCLUSION_TRANSPARENT:
                lambda: all(0.5 <= g <= 1.5 for g in p['gain']),
            EFFECT_KINDS.SHADOW:
                lambda: 0.4 <= p['darkening'] <= 0.8 and p['softness'] > 0,
            EFFECT_KINDS.LIGHTING:
                lambda: 0.0 < p['gain'] <= 0.3 and p['radius'] > 0,
            EFFECT_KINDS.REFLECTION:
                lambda: 0.2 <= p['alpha'] <= 0.5,
            EFFECT_KINDS.DEFORMATION:
                lambda: 0.0 < p['displacement'] <= 3.0 and p['radius'] > 0,
        }
        if kind not in checks:
            raise DataValidationError('unknown effect kind {0!r}'.format(kind))
        try:
            valid = checks[kind]()
        except KeyError as exc:
            raise DataValidationError('{0} misses parameter {1}'.format(kind, exc))
        if not valid:
            raise DataValidationError(
                '{0} parameters out of range: {1}'.format(kind, p))
        return self


@dataclass(frozen=True)
class ObjectSpec:
    shape: str
    size: float
    color: tuple
    trajectory: str
    motion: dict
    effects: tuple = ()

    def center(self, t):
        t = np.asarray(t, dtype=np.float64)
        m = self.motion
        if self.trajectory == TRAJECTORIES.LINEAR:
            return m['start'][0] + m['velocity'][0] * t, m['start'][1] + m['velocity'][1] * t
        angle = m['phase'] + m['angular_speed'] * t
        return (m['center'][0] + m['radius'] * np.cos(angle),
                m['center'][1] + m['radius'] * np.sin(angle))

    @property
    def occlusion(self):
        for effect in self.effects:
            if EFFECT_KINDS.OCCLUSIONS.has_value(effect.kind):
                return effect
        return EffectSpec(EFFECT_KINDS.OCCLUSION_OPAQUE)

    @property
    def side_effects(self):
        return [e for e in self.effects
                if EFFECT_KINDS.SIDE_EFFECTS.has_value(e.kind)]

    def effect_kinds(self):
        return [e.kind for e in self.effects]

    def within_bounds(self, frames, height, width):
        xs, ys = self.center(np.arange(frames))
        return bool(np.all((xs >= 0) & (xs <= width) & (ys >= 0) & (ys <= height)))


@dataclass(frozen=True)
class SceneSpec:
    background: dict
    objects: tuple
    frames: int
    height: int
    width: int
    seed: int = 0

    def subset(self, indices):
        return replace(self, objects=tuple(self.objects[i] for i in indices))


@dataclass(frozen=True)
class CameraConfig:
    """A static viewpoint variant; id 0 is the untouched view."""
    view_id: int = 0
    flip: bool = False
    exposure: float = 1.0

    @classmethod
    def for_view(cls, view_id, scene_seed):
        if view_id == 0:
            return cls()
        rng = numpy_rng(derive_seed(scene_seed, 7919, view_id))
        return cls(view_id=view_id, flip=bool(view_id % 2),
                   exposure=float(rng.uniform(0.8, 1.0)))

    def apply(self, video):
        if self.exposure != 1.0 and video.dim() == 4:
            video = (video * self.exposure).clamp(0.0, 1.0)
        if self.flip:
            video = torch.flip(video, dims=(2,))
        return video


def _pixel_grid(height, width):
    xs = np.arange(width, dtype=np.float64) + 0.5
    ys = np.arange(height, dtype=np.float64) + 0.5
    return np.meshgrid(xs, ys)


def background_field(params, t, X, Y, height, width):
    """Smooth gradient plus sinusoidal texture, evaluable at any coordinate."""
    angle = params['angle']
    u = (X * math.cos(angle) + Y * math.sin(angle)) / math.hypot(width, height)
    u = np.clip(0.5 + u, 0.0, 1.0)[..., None]
    low = np.asarray(params['color_low'])
    high = np.asarray(params['color_high'])
    base = low * (1.0 - u) + high * u
    phase = params['phase'] + params['drift'] * t
    wave = np.sin(2.0 * math.pi * (params['freq_x'] * X / width +
                                   params['freq_y'] * Y / height) + phase)
    texture = params['texture'] * wave[..., None] * np.asarray(params['tint'])
    return np.clip(base + texture, 0.0, 1.0)


def silhouette(obj, t, X, Y):
    cx, cy = obj.center(t)
    if obj.shape == SHAPES.DISC:
        return (X - cx) ** 2 + (Y - cy) ** 2 <= obj.size ** 2
    return (np.abs(X - cx) <= obj.size) & (np.abs(Y - cy) <= 0.7 * obj.size)


def _mirrored(obj, surface_row):
    motion = dict(obj.motion)
    if obj.trajectory == TRAJECTORIES.LINEAR:
        motion['start'] = (motion['start'][0], 2.0 * surface_row - motion['start'][1])
        motion['velocity'] = (motion['velocity'][0], -motion['velocity'][1])
    else:
        motion['center'] = (motion['center'][0], 2.0 * surface_row - motion['center'][1])
        motion['phase'] = -motion['phase']
        motion['angular_speed'] = -motion['angular_speed']
    return replace(obj, motion=motion)


def effect_region(obj, effect, t, X, Y):
    """Closed-form footprint of one side effect at frame ``t``."""
    p = effect.params
    cx, cy = obj.center(t)
    if effect.kind == EFFECT_KINDS.SHADOW:
        rho = _shadow_rho(obj, p, cx, cy, X, Y)
        reach = 1.0 + 3.0 * p['softness'] / (0.6 * obj.size)
        return rho <= reach
    if effect.kind == EFFECT_KINDS.LIGHTING:
        return np.hypot(X - cx, Y - cy) < p['radius']
    if effect.kind == EFFECT_KINDS.REFLECTION:
        mirrored = _mirrored(obj, p['surface_row'])
        return silhouette(mirrored, t, X, Y) & (Y > p['surface_row'])
    if effect.kind == EFFECT_KINDS.DEFORMATION:
        return np.hypot(X - cx, Y - cy) < p['radius']
    raise DataValidationError('{0} has no side-effect footprint'.format(effect.kind))


def _shadow_rho(obj, p, cx, cy, X, Y):
    a = 1.2 * obj.size
    b = 0.6 * obj.size
    ex = cx + p['offset'][0]
    ey = cy + p['offset'][1]
    return np.sqrt(((X - ex) / a) ** 2 + ((Y - ey) / b) ** 2)


def _apply_side_effect(frame, obj, effect, t, X, Y, scene):
    p = effect.params
    region = effect_region(obj, effect, t, X, Y)
    if not region.any():
        return frame
    cx, cy = obj.center(t)
    if effect.kind == EFFECT_KINDS.LIGHTING:
        r = np.hypot(X - cx, Y - cy)
        weight = np.clip(1.0 - r / p['radius'], 0.0, 1.0) ** 2
        lit = frame + p['gain'] * weight[..., None] * np.asarray(p['tint'])
        updated = np.clip(lit, 0.0, 1.0)
    elif effect.kind == EFFECT_KINDS.SHADOW:
        rho = _shadow_rho(obj, p, cx, cy, X, Y)
        # Gaussian edge measured in pixels along the minor axis
        distance = np.maximum(rho - 1.0, 0.0) * 0.6 * obj.size
        weight = np.exp(-0.5 * (distance / p['softness']) ** 2)
        updated = frame * (1.0 - (1.0 - p['darkening']) * weight[..., None])
    elif effect.kind == EFFECT_KINDS.REFLECTION:
        color = np.asarray(obj.color)
        updated = (1.0 - p['alpha']) * frame + p['alpha'] * color
    elif effect.kind == EFFECT_KINDS.DEFORMATION:
        dx, dy = X - cx, Y - cy
        r = np.hypot(dx, dy)
        safe = np.where(r > 0, r, 1.0)
        shift = p['displacement'] * np.sin(math.pi * np.clip(r / p['radius'], 0.0, 1.0))
        # pulls background coordinates towards the centre: a lens bulge
        wx = X - shift * dx / safe
        wy = Y - shift * dy / safe
        warped = background_field(scene.background, t, wx, wy, scene.height, scene.width)
        plain = background_field(scene.background, t, X, Y, scene.height, scene.width)
        updated = np.clip(frame + (warped - plain), 0.0, 1.0)
    else:
        raise DataValidationError('not a side effect: {0}'.format(effect.kind))
    return np.where(region[..., None], updated, frame)


def _apply_occlusion(frame, obj, t, X, Y):
    region = silhouette(obj, t, X, Y)
    if not region.any():
        return frame
    effect = obj.occlusion
    color = np.asarray(obj.color)
    if effect.kind == EFFECT_KINDS.OCCLUSION_SEMITRANSPARENT:
        alpha = effect.params['alpha']
        updated = (1.0 - alpha) * frame + alpha * color
    elif effect.kind == EFFECT_KINDS.OCCLUSION_TRANSPARENT:
        updated = np.clip(frame * np.asarray(effect.params['gain']), 0.0, 1.0)
    else:
        updated = np.broadcast_to(color, frame.shape)
    return np.where(region[..., None], updated, frame)


def render_scene(spec, present=None):
    """
    Renders the background with the ``present`` objects composited in the
    fixed order lighting, shadow, reflection, deformation, occlusion.
    """
    present = range(len(spec.objects)) if present is None else sorted(present)
    for index in present:
        if not 0 <= index < len(spec.objects):
            raise DataValidationError('object index {0} out of range'.format(index))
    X, Y = _pixel_grid(spec.height, spec.width)
    frames = []
    for t in range(spec.frames):
        frame = background_field(spec.background, t, X, Y, spec.height, spec.width)
        for kind in SIDE_EFFECT_ORDER:
            for index in present:
                obj = spec.objects[index]
                for effect in obj.side_effects:
                    if effect.kind == kind:
                        frame = _apply_side_effect(frame, obj, effect, t, X, Y, spec)
        for index in present:
            frame = _apply_occlusion(frame, spec.objects[index], t, X, Y)
        frames.append(frame)
    return torch.from_numpy(np.stack(frames))


def object_masks(spec, indices):
    """Union of silhouettes (the object mask) for ``indices``."""
    X, Y = _pixel_grid(spec.height, spec.width)
    masks = np.zeros((spec.frames, spec.height, spec.width), dtype=np.float64)
    for t in range(spec.frames):
        for index in indices:
            masks[t] = np.maximum(masks[t], silhouette(spec.objects[index], t, X, Y))
    return torch.from_numpy(masks)


def effect_footprints(spec, indices):
    """Union of side-effect footprints for ``indices``."""
    X, Y = _pixel_grid(spec.height, spec.width)
    footprint = np.zeros((spec.frames, spec.height, spec.width), dtype=np.float64)
    for t in range(spec.frames):
        for index in indices:
            obj = spec.objects[index]
            for effect in obj.side_effects:
                footprint[t] = np.maximum(
                    footprint[t], effect_region(obj, effect, t, X, Y))
    return torch.from_numpy(footprint)


def render_triplet(spec, removal_set, camera=None):
    removal_set = sorted(set(removal_set))
    if not removal_set:
        raise DataValidationError('removal set must not be empty')
    everything = range(len(spec.objects))
    kept = [i for i in everything if i not in removal_set]
    camera = camera or CameraConfig()
    sample = TripletSample(
        object_video=camera.apply(render_scene(spec, everything)),
        background_video=camera.apply(render_scene(spec, kept)),
        mask=camera.apply(object_masks(spec, removal_set)),
        effect_footprint=camera.apply(effect_footprints(spec, removal_set)),
        meta={
            'scene_seed': int(spec.seed),
            'removal_set': removal_set,
            'effect_kinds': sorted({
                kind for i in removal_set
                for kind in spec.objects[i].effect_kinds()}),
            'camera_id': camera.view_id,
            'rule_ids': [],
        },
    )
    return sample


def apply_camera_path(sample, path, out_h=None, out_w=None):
    """Applies one camera path identically to all parts of a triplet."""
    out_h = out_h or sample.height
    out_w = out_w or sample.width
    mask, footprint = apply_ken_burns_masks(
        sample.mask, sample.effect_footprint, path, out_h, out_w)
    meta = dict(sample.meta)
    meta['rule_ids'] = [int(path.rule)]
    meta['camera_path'] = path.to_dict()
    return TripletSample(
        object_video=apply_ken_burns(sample.object_video, path, out_h, out_w),
        background_video=apply_ken_burns(sample.background_video, path, out_h, out_w),
        mask=mask,
        effect_footprint=footprint,
        meta=meta,
    )


def enumerate_pairs(n, m):
    """
    Every object is absent, kept or removed; states without a removed
    object are dropped. Yields ``(3**n - 2**n) * m`` configurations.
    """
    if n < 1 or m < 1:
        raise ConfigError('need at least one object and one camera config')
    pairs = []
    for camera_id in range(m):
        for states in itertools.product((ABSENT, KEPT, REMOVED), repeat=n):
            removal = tuple(i for i, s in enumerate(states) if s == REMOVED)
            if not removal:
                continue
            present = tuple(i for i, s in enumerate(states) if s != ABSENT)
            pairs.append(PairConfig(present, removal, camera_id))
    return pairs


def _random_effects(rng, config, size, height):
    occlusion_kind = rng.choice([
        EFFECT_KINDS.OCCLUSION_OPAQUE,
        EFFECT_KINDS.OCCLUSION_SEMITRANSPARENT,
        EFFECT_KINDS.OCCLUSION_TRANSPARENT,
    ], p=[0.6, 0.25, 0.15])
    if occlusion_kind == EFFECT_KINDS.OCCLUSION_SEMITRANSPARENT:
        occlusion = EffectSpec(occlusion_kind, {'alpha': float(rng.uniform(0.4, 0.9))})
    elif occlusion_kind == EFFECT_KINDS.OCCLUSION_TRANSPARENT:
        occlusion = EffectSpec(occlusion_kind, {
            'gain': [float(g) for g in rng.uniform(0.7, 1.3, size=3)]})
    else:
        occlusion = EffectSpec(str(occlusion_kind))
    effects = [EffectSpec(str(occlusion.kind), occlusion.params)]
    if rng.random() < config.effect_probability:
        effects.append(EffectSpec(EFFECT_KINDS.SHADOW, {
            'offset': [float(rng.uniform(-0.8, 0.8) * size),
                       float(rng.uniform(0.6, 1.2) * size)],
            'darkening': float(rng.uniform(0.4, 0.8)),
            'softness': float(rng.uniform(0.5, 1.5)),
        }))
    if rng.random() < config.effect_probability:
        effects.append(EffectSpec(EFFECT_KINDS.LIGHTING, {
            'gain': float(rng.uniform(0.1, 0.3)),
            'radius': float(rng.uniform(1.8, 3.0) * size),
            'tint': [1.0, float(rng.uniform(0.85, 1.0)), float(rng.uniform(0.6, 0.9))],
        }))
    if rng.random() < config.effect_probability * 0.5:
        effects.append(EffectSpec(EFFECT_KINDS.REFLECTION, {
            'surface_row': float(rng.uniform(0.55, 0.75) * height),
            'alpha': float(rng.uniform(0.2, 0.5)),
        }))
    if rng.random() < config.effect_probability * 0.5:
        effects.append(EffectSpec(EFFECT_KINDS.DEFORMATION, {
            'radius': float(size + rng.uniform(2.0, 4.0)),
            'displacement': float(rng.uniform(1.0, 3.0)),
        }))
    for effect in effects:
        effect.validate()
    return tuple(effects)


def _random_motion(rng, frames, height, width, size):
    margin_x = min(size, width / 4.0)
    margin_y = min(size, height / 4.0)
    low = np.array([margin_x, margin_y])
    high = np.array([width - margin_x, height - margin_y])
    if rng.random() < 0.5:
        start = rng.uniform(low, high)
        end = rng.uniform(low, high)
        velocity = (end - start) / max(frames - 1, 1)
        return TRAJECTORIES.LINEAR, {
            'start': [float(v) for v in start],
            'velocity': [float(v) for v in velocity]}
    center = rng.uniform(low + 2.0, high - 2.0) if np.all(high - low > 4.0) \
        else (low + high) / 2.0
    room = float(np.min(np.minimum(center - low, high - center)))
    return TRAJECTORIES.CIRCULAR, {
        'center': [float(v) for v in center],
        'radius': float(rng.uniform(0.3, 1.0) * max(room, 0.0)),
        'angular_speed': float(rng.uniform(0.1, 0.5) * rng.choice([-1.0, 1.0])),
        'phase': float(rng.uniform(0.0, 2.0 * math.pi)),
    }


def random_scene(rng, config, seed=0):
    """Samples a scene with ``config.objects_per_scene`` sprites."""
    height, width, frames = config.height, config.width, config.frames
    background = {
        'angle': float(rng.uniform(0.0, 2.0 * math.pi)),
        'color_low': [float(c) for c in rng.uniform(0.15, 0.5, size=3)],
        'color_high': [float(c) for c in rng.uniform(0.45, 0.85, size=3)],
        'texture': float(rng.uniform(0.03, 0.1)),
        'tint': [float(c) for c in rng.uniform(0.5, 1.0, size=3)],
        'freq_x': float(rng.uniform(1.0, 4.0)),
        'freq_y': float(rng.uniform(1.0, 4.0)),
        'phase': float(rng.uniform(0.0, 2.0 * math.pi)),
        'drift': float(rng.uniform(0.1, 0.4)) if config.dynamic_background else 0.0,
    }
    objects = []
    for _ in range(config.objects_per_scene):
        size = float(rng.uniform(config.object_size_min, config.object_size_max))
        trajectory, motion = _random_motion(rng, frames, height, width, size)
        obj = ObjectSpec(
            shape=str(rng.choice([SHAPES.DISC, SHAPES.RECTANGLE])),
            size=size,
            color=tuple(float(c) for c in rng.uniform(0.05, 0.95, size=3)),
            trajectory=str(trajectory),
            motion=motion,
            effects=_random_effects(rng, config, size, height),
        )
        if not obj.within_bounds(frames, height, width):
            raise DataValidationError('sampled trajectory leaves the frame')
        objects.append(obj)
    return SceneSpec(background=background, objects=tuple(objects),
                     frames=frames, height=height, width=width, seed=int(seed))


def _pair_samples(config, scene_index, master_seed):
    """Renders every triplet variant for one scene; returns index records."""
    scene_seed = derive_seed(master_seed, scene_index)
    scene = random_scene(numpy_rng(scene_seed), config, seed=scene_seed)
    bounds = MotionBounds.from_settings(config)
    pairs = enumerate_pairs(config.objects_per_scene, config.camera_configs)
    for pair_index, pair in enumerate(pairs):
        sub_scene = scene.subset(pair.present)
        removal = [pair.present.index(i) for i in pair.removal]
        camera = CameraConfig.for_view(pair.camera_id, scene_seed)
        base = render_triplet(sub_scene, removal, camera=camera)
        base.meta.update({
            'removal_set': list(pair.removal),
            'present_set': list(pair.present),
        })
        rng = numpy_rng(derive_seed(scene_seed, pair_index))
        variants = [(0, None)]
        if config.ken_burns_variants:
            rules = sample_motion_rules(rng, count=config.ken_burns_variants)
            variants += [(v + 1, rule) for v, rule in enumerate(rules)]
        for variant, rule in variants:
            if rule is None:
                sample = base
            else:
                path = camera_path(rule, config.frames, config.height,
                                   config.width, rng, bounds)
                sample = apply_camera_path(base, path)
            sample_id = 's{0:04d}-p{1:03d}-v{2}'.format(scene_index, pair_index, variant)
            sample.meta.update({'sample_id': sample_id, 'variant': variant})
            violations = validate_triplet(sample)
            if violations:
                raise DataValidationError('{0}: {1}'.format(sample_id, ', '.join(violations)))
            yield sample_id, sample


def _write_scene(args):
    config, scene_index, master_seed, out_dir = args
    records = []
    for sample_id, sample in _pair_samples(config, scene_index, master_seed):
        write_triplet(sample, os.path.join(out_dir, sample_id), fps=config.fps)
        meta = sample.meta
        records.append((
            sample_id, meta['scene_seed'], meta['camera_id'], meta['variant'],
            meta['rule_ids'][0] if meta['rule_ids'] else 0,
            ';'.join(meta['effect_kinds']),
            ';'.join(str(i) for i in meta['removal_set']),
            ';'.join(str(i) for i in meta['present_set']),
            sample.frames, sample.height, sample.width,
        ))
    return records


def synth_dataset(config, out_dir, seed):
    """
    Writes every triplet of ``config.scenes`` scenes plus ``index.csv`` and
    ``index.json`` to ``out_dir`` and returns the index dataset.
    """
    if os.path.exists(out_dir) and not os.path.isdir(out_dir):
        raise ConfigError('output path {0} is not a directory'.format(out_dir))
    if os.path.isdir(out_dir) and os.listdir(out_dir):
        raise ConfigError('output directory {0} is not empty'.format(out_dir))
    os.makedirs(out_dir, exist_ok=True)
    jobs = [(config, index, seed, out_dir) for index in range(config.scenes)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_write_scene, jobs))
    else:
        results = [_write_scene(job) for job in jobs]

    index = tablib.Dataset(headers=INDEX_HEADERS)
    for records in results:
        for record in records:
            index.append(record)
    with open(os.path.join(out_dir, 'index.csv'), 'w', encoding='utf-8', newline='') as handle:
        handle.write(index.export('csv'))
    with open(os.path.join(out_dir, 'index.json'), 'w', encoding='utf-8') as handle:
        handle.write(index.export('json'))
    logger.info('wrote %d triplets from %d scenes to %s', len(index), config.scenes, out_dir)
    return index
