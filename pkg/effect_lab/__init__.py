# -*- coding: utf-8 -*-

__version__ = '1.0.0'

TRIPLET_PARTS = ('object', 'background', 'mask', 'footprint')

MANIFEST_KEYS = (
    'fps', 'width', 'height', 'frame_count', 'frame_naming', 'color_space'
)
