# -*- coding: utf-8 -*-
from django.apps import AppConfig


class EffectLab(AppConfig):
    name = 'effect_lab'
    verbose_name = 'Effect Lab'
