# -*- coding: utf-8 -*-
# Configure Django for pytest with the same settings test_settings.py uses.
import django
from django.conf import settings

from test_settings import HELPER_SETTINGS

if not settings.configured:
    settings.configure(**HELPER_SETTINGS)
    django.setup()
