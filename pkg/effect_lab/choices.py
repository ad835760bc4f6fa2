# -*- coding: utf-8 -*-
from extended_choices import Choices


TASKS = Choices(
    ('REMOVAL', 'removal', 'Removal'),
    ('INSERTION', 'insertion', 'Insertion'),
)

EFFECT_KINDS = Choices(
    ('OCCLUSION_OPAQUE', 'occlusion_opaque', 'Opaque occlusion'),
    ('OCCLUSION_SEMITRANSPARENT', 'occlusion_semitransparent',
     'Semi-transparent occlusion'),
    ('OCCLUSION_TRANSPARENT', 'occlusion_transparent',
     'Transparent occlusion'),
    ('SHADOW', 'shadow', 'Shadow'),
    ('LIGHTING', 'lighting', 'Lighting'),
    ('REFLECTION', 'reflection', 'Reflection'),
    ('DEFORMATION', 'deformation', 'Deformation'),
)
EFFECT_KINDS.add_subset('OCCLUSIONS', (
    'OCCLUSION_OPAQUE', 'OCCLUSION_SEMITRANSPARENT', 'OCCLUSION_TRANSPARENT',
))
EFFECT_KINDS.add_subset('SIDE_EFFECTS', (
    'SHADOW', 'LIGHTING', 'REFLECTION', 'DEFORMATION',
))

# compositing order for the side effects; occluders always go last
SIDE_EFFECT_ORDER = (
    EFFECT_KINDS.LIGHTING,
    EFFECT_KINDS.SHADOW,
    EFFECT_KINDS.REFLECTION,
    EFFECT_KINDS.DEFORMATION,
)

MOTION_RULES = Choices(
    ('ZOOM_IN', 1, 'zoom_in'),
    ('ZOOM_OUT', 2, 'zoom_out'),
    ('PAN_LEFT', 3, 'pan_left'),
    ('PAN_RIGHT', 4, 'pan_right'),
    ('TILT_UP', 5, 'tilt_up'),
    ('TILT_DOWN', 6, 'tilt_down'),
    ('ZOOM_IN_PAN_LEFT', 7, 'zoom_in+pan_left'),
    ('ZOOM_IN_PAN_RIGHT', 8, 'zoom_in+pan_right'),
    ('ZOOM_OUT_PAN_LEFT', 9, 'zoom_out+pan_left'),
    ('ZOOM_OUT_PAN_RIGHT', 10, 'zoom_out+pan_right'),
    ('ZOOM_IN_TILT', 11, 'zoom_in+tilt'),
    ('ZOOM_OUT_TILT', 12, 'zoom_out+tilt'),
    ('WALK_BOB', 13, 'walk_bob'),
    ('RANDOM_COMBO', 14, 'random_combo'),
)
# rules a random combo may chain together
MOTION_RULES.add_subset('SEGMENTS', (
    'ZOOM_IN', 'ZOOM_OUT', 'PAN_LEFT', 'PAN_RIGHT', 'TILT_UP', 'TILT_DOWN',
))

SHAPES = Choices(
    ('DISC', 'disc', 'Disc'),
    ('RECTANGLE', 'rectangle', 'Rectangle'),
)

TRAJECTORIES = Choices(
    ('LINEAR', 'linear', 'Linear'),
    ('CIRCULAR', 'circular', 'Circular'),
)
