#!/usr/bin/env python
# -*- coding: utf-8 -*-
import os
import sys
import tempfile

HELPER_SETTINGS = {
    'SECRET_KEY': 'effect-lab-tests',
    'TIME_ZONE': 'UTC',
    'USE_TZ': True,
    'INSTALLED_APPS': [
        'effect_lab',
    ],
    'DATABASES': {},
    'TEMPLATES': [
        {
            'BACKEND': 'django.template.backends.django.DjangoTemplates',
            'APP_DIRS': True,
            'OPTIONS': {'autoescape': False},
        },
    ],
    'CACHES': {
        'default': {'BACKEND': 'django.core.cache.backends.locmem.LocMemCache'},
    },
    'LOGGING': {
        'version': 1,
        'disable_existing_loggers': False,
        'handlers': {'null': {'class': 'logging.NullHandler'}},
        'loggers': {'effect_lab': {'handlers': ['null'], 'level': 'DEBUG'}},
    },
    'EFFECT_LAB_OUTPUT_ROOT': os.path.join(tempfile.gettempdir(), 'effect-lab-test-runs'),
    'EFFECT_LAB_NO_COLOR': True,
}


def run():
    import django
    from django.conf import settings
    from django.test.utils import get_runner

    settings.configure(**HELPER_SETTINGS)
    django.setup()
    runner = get_runner(settings)(verbosity=1, exclude_tags=set(
        [] if os.environ.get('EFFECT_LAB_SLOW_TESTS') else ['slow']))
    failures = runner.run_tests(sys.argv[1:] or ['effect_lab'])
    sys.exit(bool(failures))


if __name__ == '__main__':
    run()
