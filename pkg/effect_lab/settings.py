# -*- coding: utf-8 -*-
"""
Settings for running the ``effect-lab`` command line on its own. Host
projects add ``effect_lab`` to their ``INSTALLED_APPS`` instead.
"""
import os

SECRET_KEY = os.environ.get('EFFECT_LAB_SECRET_KEY', 'effect-lab-command-line')
DEBUG = False
USE_TZ = True
TIME_ZONE = 'UTC'

INSTALLED_APPS = [
    'effect_lab',
]

DATABASES = {}

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'APP_DIRS': True,
        'OPTIONS': {'autoescape': False},
    },
]

EFFECT_LAB_OUTPUT_ROOT = os.environ.get('EFFECT_LAB_OUTPUT_ROOT', 'runs')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'console': {
            '()': 'effect_lab.utils.ConsoleFormatter',
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
        'plain': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'console',
        },
    },
    'loggers': {
        'effect_lab': {
            'handlers': ['console'],
            'level': os.environ.get('EFFECT_LAB_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}
