# -*- coding: utf-8 -*-
"""
Low-rank adapters for the backbone's attention projections and
feed-forward layers.
"""
import logging
import math
from dataclasses import dataclass

import torch
from torch import nn

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_TARGETS = ('q', 'k', 'v', 'o', 'ffn.0', 'ffn.2')


@dataclass(frozen=True)
class LoraSpec:
    rank: int = 8
    alpha: float = 8.0
    targets: tuple = DEFAULT_TARGETS

    def __post_init__(self):
        if self.rank < 1:
            raise ConfigError('lora rank must be at least 1')

    @property
    def scaling(self):
        return self.alpha / self.rank

    def to_dict(self):
        return {'rank': self.rank, 'alpha': self.alpha, 'targets': list(self.targets)}


class LoraLinear(nn.Module):
    """
    ``W x + scaling * B A x`` around a frozen linear layer. ``B`` starts at
    zero so a freshly wrapped network computes exactly what the base does.
    """

    def __init__(self, base, rank, alpha):
        super().__init__()
        self.base = base
        self.rank = rank
        self.scaling = alpha / rank
        for parameter in self.base.parameters():
            parameter.requires_grad_(False)
        weight = base.weight
        self.lora_a = nn.Parameter(torch.empty(rank, base.in_features,
                                               dtype=weight.dtype, device=weight.device))
        self.lora_b = nn.Parameter(torch.zeros(base.out_features, rank,
                                               dtype=weight.dtype, device=weight.device))
        nn.init.kaiming_uniform_(self.lora_a, a=math.sqrt(5))

    @property
    def in_features(self):
        return self.base.in_features

    @property
    def out_features(self):
        return self.base.out_features

    def forward(self, x):
        update = (x @ self.lora_a.t()) @ self.lora_b.t()
        return self.base(x) + update * self.scaling

    def extra_repr(self):
        return 'rank={0}, scaling={1}'.format(self.rank, self.scaling)


def _matches(name, targets):
    return any(name == target or name.endswith('.' + target) for target in targets)


def apply_lora(model, spec):
    """
    Wraps every ``nn.Linear`` whose qualified name ends in one of
    ``spec.targets``, freezes all base weights and re-enables the modules
    the model lists in ``trainable_modules``.
    """
    if any(isinstance(m, LoraLinear) for m in model.modules()):
        raise ConfigError('model already carries LoRA adapters')
    for parameter in model.parameters():
        parameter.requires_grad_(False)

    hits = {target: 0 for target in spec.targets}
    wrapped = []
    for name, module in list(model.named_modules()):
        if not isinstance(module, nn.Linear) or not _matches(name, spec.targets):
            continue
        parent_name, _, child = name.rpartition('.')
        parent = model.get_submodule(parent_name) if parent_name else model
        setattr(parent, child, LoraLinear(module, spec.rank, spec.alpha))
        wrapped.append(name)
        for target in spec.targets:
            if _matches(name, (target,)):
                hits[target] += 1

    unknown = [target for target, count in hits.items() if not count]
    if unknown:
        raise ConfigError('no layer named {0}'.format(', '.join(unknown)))

    for module_name in getattr(model, 'trainable_modules', ()):
        for parameter in getattr(model, module_name).parameters():
            parameter.requires_grad_(True)
    model.lora_spec = spec
    logger.debug('wrapped %d layers with rank %d adapters', len(wrapped), spec.rank)
    return model


def trainable_parameters(model):
    return [p for p in model.parameters() if p.requires_grad]
