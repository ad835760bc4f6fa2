# -*- coding: utf-8 -*-
import numpy as np
import torch

from effect_lab.camera import (
    KEN_BURNS_MIN_FRAMES, CameraPath, MotionBounds, apply_ken_burns, apply_ken_burns_masks,
    camera_path, identity_path, min_frames, sample_motion_rules,
)
from effect_lab.choices import MOTION_RULES
from effect_lab.exceptions import ConfigError, DataValidationError, ShapeMismatch
from effect_lab.synthesis import SynthConfig
from effect_lab.utils import numpy_rng

from .base import EffectLabTestCase, random_video, shadow_triplet

# (height, width, frames)
FRAME_SIZES = ((32, 48, 8), (16, 24, 12), (72, 128, 16), (16, 16, 5))
SEEDS = range(100)
TOLERANCE = 1e-9


def increasing(values):
    return bool(np.all(np.diff(values) > 0))


def decreasing(values):
    return bool(np.all(np.diff(values) < 0))


def constant(values):
    return bool(np.ptp(values) <= TOLERANCE)


def sign_changes(values):
    signs = np.sign(np.round(values, 9))
    signs = signs[signs != 0]
    return int(np.sum(signs[1:] != signs[:-1]))


def follows_rule(path, height, width):
    R = MOTION_RULES
    rule = path.rule
    zoom, cx, cy = path.zoom, path.center_x, path.center_y
    if rule == R.ZOOM_IN:
        return increasing(zoom)
    if rule == R.ZOOM_OUT:
        return decreasing(zoom) and zoom[0] > 1.0
    if rule in (R.PAN_LEFT, R.PAN_RIGHT):
        moves = decreasing(cx) if rule == R.PAN_LEFT else increasing(cx)
        return moves and constant(zoom) and constant(cy)
    if rule in (R.TILT_UP, R.TILT_DOWN):
        moves = decreasing(cy) if rule == R.TILT_UP else increasing(cy)
        return moves and constant(zoom) and constant(cx)
    if rule in (R.ZOOM_IN_PAN_LEFT, R.ZOOM_IN_PAN_RIGHT):
        moves = decreasing(cx) if rule == R.ZOOM_IN_PAN_LEFT else increasing(cx)
        return moves and increasing(zoom) and constant(cy)
    if rule in (R.ZOOM_OUT_PAN_LEFT, R.ZOOM_OUT_PAN_RIGHT):
        moves = decreasing(cx) if rule == R.ZOOM_OUT_PAN_LEFT else increasing(cx)
        return moves and decreasing(zoom) and constant(cy)
    if rule in (R.ZOOM_IN_TILT, R.ZOOM_OUT_TILT):
        moves = decreasing(cy) if path.params['tilt'] == 'up' else increasing(cy)
        zooms = increasing(zoom) if rule == R.ZOOM_IN_TILT else decreasing(zoom)
        return moves and zooms and constant(cx)
    if rule == R.WALK_BOB:
        return constant(zoom) and constant(cx) and sign_changes(cy - height / 2.0) >= 2
    if rule == R.RANDOM_COMBO:
        return 2 <= len(path.segments) <= 3 and all(
            MOTION_RULES.SEGMENTS.has_value(s) for s in path.segments)
    return False


class MotionRuleTestCase(EffectLabTestCase):

    def test_every_rule_stays_inside_the_frame(self):
        bounds = MotionBounds()
        violations = []
        for height, width, frames in FRAME_SIZES:
            for rule in sorted(MOTION_RULES.values):
                for seed in SEEDS:
                    path = camera_path(rule, frames, height, width, numpy_rng(seed), bounds)
                    if path.frames != frames or not path.contained(height, width):
                        violations.append(('containment', rule, seed, height))
                    elif not follows_rule(path, height, width):
                        violations.append(('motion', rule, seed, height))
        self.assertEqual(violations, [])

    def test_shortest_clips(self):
        for rule in sorted(MOTION_RULES.values):
            frames = min_frames(rule)
            for seed in SEEDS:
                path = camera_path(rule, frames, 16, 24, numpy_rng(seed))
                self.assertTrue(path.contained(16, 24), (rule, seed))
                self.assertTrue(follows_rule(path, 16, 24), (rule, seed))
            with self.assertRaises(ShapeMismatch):
                camera_path(rule, frames - 1, 16, 24, numpy_rng(0))

    def test_walk_bob_on_five_frames(self):
        for seed in SEEDS:
            path = camera_path(MOTION_RULES.WALK_BOB, 5, 32, 48, numpy_rng(seed))
            self.assertGreaterEqual(sign_changes(path.center_y - 16.0), 2)
            self.assertLess(path.params['frequency'], 0.5)

    def test_random_combo_on_three_frames(self):
        for seed in SEEDS:
            path = camera_path(MOTION_RULES.RANDOM_COMBO, 3, 32, 48, numpy_rng(seed))
            self.assertEqual(len(path.segments), 2)
            self.assertEqual(path.params['cuts'], [0, 1, 2])

    def test_synthesis_rejects_clips_too_short_for_camera_motion(self):
        with self.assertRaises(ConfigError):
            SynthConfig(frames=KEN_BURNS_MIN_FRAMES - 1, ken_burns_variants=1)
        self.assertEqual(SynthConfig(frames=2, ken_burns_variants=0).frames, 2)

    def test_rule_frequencies(self):
        rng = numpy_rng(0)
        counts = dict.fromkeys(MOTION_RULES.values, 0)
        draws = 10000
        for _ in range(draws):
            for rule in sample_motion_rules(rng):
                counts[rule] += 1
        for rule, count in counts.items():
            self.assertAlmostEqual(count / draws, 5.0 / 14, delta=0.02, msg=rule)

    def test_rules_are_seeded(self):
        for seed in range(20):
            self.assertEqual(sample_motion_rules(numpy_rng(seed)),
                             sample_motion_rules(numpy_rng(seed)))

    def test_sampled_rules_are_distinct(self):
        for seed in range(20):
            rules = sample_motion_rules(numpy_rng(seed))
            self.assertEqual(len(rules), 5)
            self.assertEqual(len(set(rules)), 5)
            self.assertTrue(all(1 <= rule <= 14 for rule in rules))

    def test_paths_are_reproducible(self):
        first = camera_path(MOTION_RULES.RANDOM_COMBO, 8, 32, 48, numpy_rng(3))
        second = camera_path(MOTION_RULES.RANDOM_COMBO, 8, 32, 48, numpy_rng(3))
        np.testing.assert_array_equal(first.center_x, second.center_x)
        np.testing.assert_array_equal(first.zoom, second.zoom)
        self.assertEqual(first.segments, second.segments)

    def test_path_summary(self):
        path = camera_path(MOTION_RULES.WALK_BOB, 8, 32, 48, numpy_rng(0))
        summary = path.to_dict()
        self.assertEqual(summary['rule'], 13)
        self.assertEqual(summary['name'], 'walk_bob')
        self.assertIn('frequency', summary['params'])

    def test_single_frame(self):
        with self.assertRaises(ShapeMismatch):
            camera_path(MOTION_RULES.ZOOM_IN, 1, 32, 48, numpy_rng(0))

    def test_unknown_rule(self):
        with self.assertRaises(DataValidationError):
            camera_path(99, 8, 32, 48, numpy_rng(0))

    def test_bounds_from_synth_config(self):
        bounds = MotionBounds.from_settings(SynthConfig(zoom_max=1.3))
        self.assertEqual(bounds.zoom_max, 1.3)
        self.assertEqual(MotionBounds.from_settings().zoom_min, 1.15)


class KenBurnsTestCase(EffectLabTestCase):

    def test_identity_path_returns_input(self):
        video = random_video(frames=3, height=12, width=16)
        path = identity_path(3, 12, 16)
        self.assertTensorClose(apply_ken_burns(video, path, 12, 16), video, atol=1e-6)

    def test_centred_zoom_on_a_checkerboard(self):
        rows, cols = np.indices((16, 16))
        board = ((rows // 4 + cols // 4) % 2).astype(np.float64)
        video = torch.from_numpy(np.repeat(board[None, :, :, None], 3, axis=-1)).repeat(2, 1, 1, 1)
        path = CameraPath(rule=MOTION_RULES.ZOOM_IN, center_x=np.full(2, 8.0),
                          center_y=np.full(2, 8.0), zoom=np.full(2, 2.0))
        output = apply_ken_burns(video, path, 16, 16)
        # the central 8x8 quadrant holds four 4px blocks; each becomes 8px wide
        inner = (slice(1, 7), slice(9, 15))
        for block_row, row_span in enumerate(inner):
            for block_col, col_span in enumerate(inner):
                expected = float((block_row + 1 + block_col + 1) % 2)
                patch = output[:, row_span, col_span]
                self.assertTensorClose(patch, torch.full_like(patch, expected), atol=1e-6)

    def test_output_size(self):
        video = random_video(frames=8, height=32, width=48)
        path = camera_path(MOTION_RULES.ZOOM_IN, 8, 32, 48, numpy_rng(1))
        output = apply_ken_burns(video, path, 16, 24)
        self.assertEqual(tuple(output.shape), (8, 16, 24, 3))
        self.assertGreaterEqual(float(output.min()), 0.0)
        self.assertLessEqual(float(output.max()), 1.0)

    def test_frame_count_must_match(self):
        path = identity_path(4, 8, 8)
        with self.assertRaises(ShapeMismatch):
            apply_ken_burns(random_video(frames=3), path, 8, 8)

    def test_window_outside_frame(self):
        path = CameraPath(rule=3, center_x=np.zeros(2), center_y=np.full(2, 4.0),
                          zoom=np.ones(2))
        with self.assertRaises(DataValidationError):
            apply_ken_burns(random_video(frames=2), path, 8, 8)

    def test_masks_stay_binary_and_disjoint(self):
        sample = shadow_triplet(frames=8)
        path = camera_path(MOTION_RULES.ZOOM_IN_PAN_RIGHT, 8, 16, 24, numpy_rng(2))
        mask, footprint = apply_ken_burns_masks(
            sample.mask, sample.effect_footprint, path, 16, 24)
        for tensor in (mask, footprint):
            self.assertTrue(torch.all((tensor == 0) | (tensor == 1)))
        self.assertFalse(torch.any((mask > 0) & (footprint > 0)))
