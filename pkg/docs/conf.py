# -*- coding: utf-8 -*-
#
# effect-lab documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

# -- General configuration ------------------------------------------------

extensions = []

source_suffix = '.rst'

master_doc = 'index'

project = u'effect-lab'
copyright = u'2026, the effect-lab authors'

import effect_lab  # noqa: E402
version = release = effect_lab.__version__

exclude_patterns = ['build']

pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

on_rtd = os.environ.get('READTHEDOCS', None) == 'True'

if not on_rtd:  # only import and set the theme if we're building docs locally
    import sphinx_rtd_theme
    html_theme = 'sphinx_rtd_theme'
    html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]

htmlhelp_basename = 'EffectLabdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'effect-lab', u'effect-lab Documentation',
     [u'the effect-lab authors'], 1)
]
