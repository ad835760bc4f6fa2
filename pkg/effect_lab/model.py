# -*- coding: utf-8 -*-
"""
The velocity network and its conditioning paths.

Latent grids are tensors laid out ``batch x channels x frames x h x w``.
The codec is an exact space-to-channel rearrangement of ``p x p`` patches,
so ``c_lat = 3 p**2`` and decoding is lossless.
"""
import logging
import math
from dataclasses import asdict, dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .choices import TASKS
from .exceptions import ConfigError, DataValidationError, ShapeMismatch
from .lora import LoraSpec, apply_lora
from .video import binarize, resize_bilinear

logger = logging.getLogger(__name__)

# prompt vocabulary; OBJECT is the slot the projected foreground replaces
VOCABULARY = ('REMOVE', 'INSERT', 'THE', 'OBJECT', 'FROM', 'INTO', 'VIDEO')
PROMPT_TEMPLATES = {
    TASKS.REMOVAL: ('REMOVE', 'THE', 'OBJECT', 'FROM', 'VIDEO'),
    TASKS.INSERTION: ('INSERT', 'THE', 'OBJECT', 'INTO', 'VIDEO'),
}
PLACEHOLDER_INDEX = 2
# task-free prompt used when task-aware region guidance is switched off
PLAIN_TEMPLATE = ('THE', 'OBJECT', 'VIDEO')


@dataclass(frozen=True)
class ModelConfig:
    patch_size: int = 2
    model_dim: int = 64
    n_blocks: int = 2
    n_heads: int = 4
    token_dim: int = 32
    foreground_dim: int = 32
    foreground_patch: int = 32
    mlp_ratio: float = 2.0
    mapper_hidden: int = 16
    lora_rank: int = 8
    lora_alpha: float = 8.0
    lambda_ec: float = 0.1
    targ: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.model_dim % self.n_heads:
            raise ConfigError('model_dim must be divisible by n_heads')
        if self.lora_rank < 1:
            raise ConfigError('lora_rank must be at least 1')
        if self.lambda_ec < 0:
            raise ConfigError('lambda_ec must not be negative')
        if self.patch_size < 1 or self.foreground_patch < 4:
            raise ConfigError('patch sizes too small')

    @property
    def c_lat(self):
        return 3 * self.patch_size ** 2

    @property
    def prompt_len(self):
        if not self.targ:
            return len(PLAIN_TEMPLATE)
        return len(PROMPT_TEMPLATES[TASKS.REMOVAL])

    def to_dict(self):
        return asdict(self)


@dataclass
class PromptEmbedding:
    tokens: torch.Tensor
    placeholder_index: int = PLACEHOLDER_INDEX

    def __post_init__(self):
        if not 0 <= self.placeholder_index < self.tokens.shape[-2]:
            raise ShapeMismatch('placeholder index outside the prompt')


def _batched(video, channel_axis=True):
    expected = 5 if channel_axis else 4
    if video.dim() == expected - 1:
        return video.unsqueeze(0)
    if video.dim() != expected:
        raise ShapeMismatch('unexpected video rank {0}'.format(video.dim()))
    return video


def encode_latent(video, patch_size):
    """``(B x) T x H x W x 3`` pixels to a ``B x 3p^2 x T x H/p x W/p`` grid."""
    video = _batched(video)
    batch, frames, height, width, channels = video.shape
    if height % patch_size or width % patch_size:
        raise ShapeMismatch('{0}x{1} is not divisible by patch size {2}'.format(
            height, width, patch_size))
    planar = video.permute(0, 1, 4, 2, 3).reshape(batch * frames, channels, height, width)
    packed = F.pixel_unshuffle(planar, patch_size)
    _, c_lat, h_lat, w_lat = packed.shape
    return packed.reshape(batch, frames, c_lat, h_lat, w_lat).permute(0, 2, 1, 3, 4)


def decode_latent(grid, patch_size):
    """Exact inverse of ``encode_latent``, clamped to ``[0, 1]``."""
    batch, c_lat, frames, h_lat, w_lat = grid.shape
    if c_lat != 3 * patch_size ** 2:
        raise ShapeMismatch('expected {0} latent channels, got {1}'.format(
            3 * patch_size ** 2, c_lat))
    packed = grid.permute(0, 2, 1, 3, 4).reshape(batch * frames, c_lat, h_lat, w_lat)
    planar = F.pixel_shuffle(packed, patch_size)
    video = planar.reshape(batch, frames, 3, h_lat * patch_size, w_lat * patch_size)
    return video.permute(0, 1, 3, 4, 2).clamp(0.0, 1.0)


def encode_mask(mask, patch_size, video=None):
    mask = _batched(mask, channel_axis=False)
    if video is not None and tuple(_batched(video).shape[:4]) != tuple(mask.shape):
        raise ShapeMismatch('mask {0} does not match video {1}'.format(
            tuple(mask.shape), tuple(video.shape)))
    return encode_latent(mask.unsqueeze(-1).expand(*mask.shape, 3), patch_size)


def build_condition(task, sample, patch_size):
    """
    Removal conditions on ``[x_o; x_m]``, insertion on ``[x_b; x_o * x_m]``.
    """
    x_mask = encode_mask(sample.mask, patch_size, video=sample.object_video)
    if task == TASKS.REMOVAL:
        return torch.cat([encode_latent(sample.object_video, patch_size), x_mask], dim=1)
    if task == TASKS.INSERTION:
        x_fore = encode_latent(sample.object_video, patch_size) * x_mask
        return torch.cat([encode_latent(sample.background_video, patch_size), x_fore], dim=1)
    raise ConfigError('unknown task {0!r}'.format(task))


def target_latent(task, sample, patch_size):
    """The clean latent a branch denoises towards."""
    if task == TASKS.REMOVAL:
        return encode_latent(sample.background_video, patch_size)
    return encode_latent(sample.object_video, patch_size)


def pool_attention(attn, placeholder_index, grid_shape):
    """
    ``attn`` is ``B x blocks x heads x tokens x prompt``; keeps the slot
    column, averages heads and takes the maximum over blocks.
    """
    if attn.shape[1] == 0:
        raise ShapeMismatch('empty attention stack')
    column = attn[..., placeholder_index].mean(dim=2)
    pooled = column.max(dim=1).values
    return pooled.reshape(attn.shape[0], *grid_shape)


def spatial_softmax(logits):
    """Softmax over the spatial positions of every frame."""
    batch, frames = logits.shape[:2]
    flat = logits.reshape(batch, frames, -1)
    return torch.softmax(flat, dim=-1).reshape(logits.shape)


def timestep_embedding(t, dim, max_period=10000.0):
    half = dim // 2
    exponent = -math.log(max_period) * torch.arange(half, dtype=t.dtype, device=t.device) / half
    args = (t * 1000.0)[:, None] * torch.exp(exponent)[None]
    embedding = torch.cat([torch.cos(args), torch.sin(args)], dim=-1)
    if dim % 2:
        embedding = F.pad(embedding, (0, 1))
    return embedding


def position_embedding(frames, height, width, dim, dtype, device):
    """Sum of per-axis sinusoids over the ``frames x height x width`` tokens."""
    def axis(length, scale):
        pos = torch.arange(length, dtype=dtype, device=device) * scale
        return timestep_embedding(pos / 1000.0, dim)

    grid = (axis(frames, 1.0)[:, None, None] +
            axis(height, 0.7)[None, :, None] +
            axis(width, 0.5)[None, None, :])
    return grid.reshape(frames * height * width, dim)


class SelfAttention(nn.Module):

    def __init__(self, dim, n_heads, context_dim=None):
        super().__init__()
        context_dim = context_dim or dim
        self.n_heads = n_heads
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(context_dim, dim)
        self.v = nn.Linear(context_dim, dim)
        self.o = nn.Linear(dim, dim)

    def _heads(self, x):
        batch, length, dim = x.shape
        return x.reshape(batch, length, self.n_heads, dim // self.n_heads).transpose(1, 2)

    def forward(self, x):
        q, k, v = self._heads(self.q(x)), self._heads(self.k(x)), self._heads(self.v(x))
        out = F.scaled_dot_product_attention(q, k, v)
        return self.o(out.transpose(1, 2).reshape(x.shape))


class CrossAttention(SelfAttention):
    """Fused tokens query the prompt; the softmax maps are returned too."""

    def forward(self, x, context):
        q = self._heads(self.q(x))
        k, v = self._heads(self.k(context)), self._heads(self.v(context))
        scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
        weights = torch.softmax(scores, dim=-1)
        out = (weights @ v).transpose(1, 2).reshape(x.shape)
        return self.o(out), weights


class DiTBlock(nn.Module):

    def __init__(self, dim, context_dim, n_heads, mlp_ratio):
        super().__init__()
        hidden = int(dim * mlp_ratio)
        self.norm1 = nn.LayerNorm(dim, elementwise_affine=False, eps=1e-6)
        self.self_attn = SelfAttention(dim, n_heads)
        self.norm2 = nn.LayerNorm(dim, eps=1e-6)
        self.cross_attn = CrossAttention(dim, n_heads, context_dim=context_dim)
        self.norm3 = nn.LayerNorm(dim, elementwise_affine=False, eps=1e-6)
        self.ffn = nn.Sequential(nn.Linear(dim, hidden), nn.GELU(), nn.Linear(hidden, dim))
        self.modulation = nn.Sequential(nn.SiLU(), nn.Linear(dim, 6 * dim))

    def forward(self, x, context, time):
        shift1, scale1, gate1, shift2, scale2, gate2 = \
            self.modulation(time)[:, None].chunk(6, dim=-1)
        x = x + gate1 * self.self_attn(self.norm1(x) * (1 + scale1) + shift1)
        attended, weights = self.cross_attn(self.norm2(x), context)
        x = x + attended
        x = x + gate2 * self.ffn(self.norm3(x) * (1 + scale2) + shift2)
        return x, weights


class ForegroundEncoder(nn.Module):
    """Two strided convolutions and a global average pool."""

    def __init__(self, out_dim, width=16):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(3, width, kernel_size=4, stride=2, padding=1),
            nn.GELU(),
            nn.Conv2d(width, out_dim, kernel_size=4, stride=2, padding=1),
        )

    def forward(self, patch):
        return self.layers(patch).mean(dim=(-2, -1))


class Projector(nn.Module):

    def __init__(self, in_dim, out_dim):
        super().__init__()
        self.first = nn.Sequential(
            nn.LayerNorm(in_dim), nn.Linear(in_dim, out_dim),
            nn.GELU(), nn.Linear(out_dim, out_dim))
        self.second = nn.Sequential(
            nn.LayerNorm(out_dim), nn.Linear(out_dim, out_dim),
            nn.GELU(), nn.Linear(out_dim, out_dim))
        self.norm = nn.LayerNorm(out_dim)

    def forward(self, x):
        x = self.first(x)
        x = x + self.second(x)
        return self.norm(x)


class EffectMapper(nn.Module):
    """Per-position MLP from pooled attention to effect logits."""

    def __init__(self, hidden):
        super().__init__()
        self.layers = nn.Sequential(nn.Linear(1, hidden), nn.GELU(), nn.Linear(hidden, 1))

    def forward(self, pooled):
        return self.layers(pooled.unsqueeze(-1)).squeeze(-1)


class EffectDiT(nn.Module):
    """
    Adaptor, diffusion transformer with prompt cross-attention, the
    foreground prompt path and the effect mapper.
    """
    trainable_modules = ('adaptor', 'projector', 'mapper', 'token_table')

    def __init__(self, config):
        super().__init__()
        self.config = config
        c_lat, dim = config.c_lat, config.model_dim
        self.adaptor = nn.Conv3d(3 * c_lat, dim, kernel_size=(1, 2, 2), stride=(1, 2, 2))
        self.time_embed = nn.Sequential(nn.Linear(dim, dim), nn.SiLU(), nn.Linear(dim, dim))
        self.blocks = nn.ModuleList(
            DiTBlock(dim, config.token_dim, config.n_heads, config.mlp_ratio)
            for _ in range(config.n_blocks))
        self.final_norm = nn.LayerNorm(dim, elementwise_affine=False, eps=1e-6)
        self.final_modulation = nn.Sequential(nn.SiLU(), nn.Linear(dim, 2 * dim))
        self.head = nn.Linear(dim, 4 * c_lat)
        self.foreground_encoder = ForegroundEncoder(config.foreground_dim)
        for parameter in self.foreground_encoder.parameters():
            parameter.requires_grad_(False)
        self.projector = Projector(config.foreground_dim, config.token_dim)
        self.token_table = nn.Embedding(len(VOCABULARY), config.token_dim)
        self.mapper = EffectMapper(config.mapper_hidden)
        self.reset_adaptor()

    @torch.no_grad()
    def reset_adaptor(self):
        """
        Output channel ``o < c_lat`` starts as the 2x2 average of input
        channel ``o`` (a pooled copy of the noisy latent); the condition
        channels get Xavier-uniform weights and every bias is zero.
        """
        c_lat = self.config.c_lat
        weight = self.adaptor.weight
        weight.zero_()
        nn.init.xavier_uniform_(weight[:, c_lat:])
        for channel in range(min(c_lat, weight.shape[0])):
            weight[channel, channel] = 0.25
        self.adaptor.bias.zero_()

    def adaptor_fuse(self, x_t, condition):
        if tuple(x_t.shape[2:]) != tuple(condition.shape[2:]):
            raise ShapeMismatch('noisy latent {0} and condition {1} disagree'.format(
                tuple(x_t.shape), tuple(condition.shape)))
        if x_t.shape[-1] % 2 or x_t.shape[-2] % 2:
            raise ShapeMismatch('latent height and width must be even')
        return self.adaptor(torch.cat([x_t, condition], dim=1))

    def foreground_tokens(self, object_video, mask):
        """
        Encodes the tight mask crop of ``V_o * M`` on the frame with the
        largest mask area. Accepts single or batched videos.
        """
        object_video = _batched(object_video)
        mask = _batched(mask, channel_axis=False)
        size = self.config.foreground_patch
        tokens = []
        for video, frames_mask in zip(object_video, binarize(mask)):
            areas = frames_mask.sum(dim=(1, 2))
            if not bool(areas.max() > 0):
                raise DataValidationError('mask is empty in every frame')
            frame = int(torch.argmax(areas))
            rows = torch.nonzero(frames_mask[frame].any(dim=1)).flatten()
            cols = torch.nonzero(frames_mask[frame].any(dim=0)).flatten()
            y0, y1 = int(rows[0]), int(rows[-1]) + 1
            x0, x1 = int(cols[0]), int(cols[-1]) + 1
            foreground = video[frame] * frames_mask[frame].unsqueeze(-1)
            crop = resize_bilinear(foreground[None, y0:y1, x0:x1], size, size)
            patch = crop.permute(0, 3, 1, 2).to(self.head.weight.dtype)
            tokens.append(self.foreground_encoder(patch))
        return torch.cat(tokens, dim=0)

    def project_foreground(self, foreground):
        return self.projector(foreground)

    def build_prompt(self, task, projected):
        """
        Task-aware prompt with the projected foreground in the ``OBJECT``
        slot. With ``targ`` off both tasks get the same task-free prompt.
        """
        if task not in PROMPT_TEMPLATES:
            raise ConfigError('unknown task {0!r}'.format(task))
        template = PROMPT_TEMPLATES[task] if self.config.targ else PLAIN_TEMPLATE
        slot = template.index('OBJECT')
        ids = torch.tensor([VOCABULARY.index(word) for word in template],
                           device=projected.device)
        words = self.token_table(ids).unsqueeze(0).expand(projected.shape[0], -1, -1)
        tokens = torch.cat([
            words[:, :slot],
            projected.unsqueeze(1),
            words[:, slot + 1:],
        ], dim=1)
        return PromptEmbedding(tokens=tokens, placeholder_index=slot)

    def prompt_for(self, task, object_video, mask):
        return self.build_prompt(
            task, self.project_foreground(self.foreground_tokens(object_video, mask)))

    def dit_forward(self, fused, prompt, t):
        """
        Returns the velocity at the noisy-latent shape and the stacked
        cross-attention maps ``B x blocks x heads x tokens x prompt``.
        """
        batch, dim, frames, height, width = fused.shape
        t = torch.as_tensor(t, dtype=fused.dtype, device=fused.device).reshape(-1)
        if t.numel() == 1:
            t = t.expand(batch)
        time = self.time_embed(timestep_embedding(t, dim))
        x = fused.flatten(2).transpose(1, 2)
        x = x + position_embedding(frames, height, width, dim, fused.dtype, fused.device)
        maps = []
        for block in self.blocks:
            x, weights = block(x, prompt.tokens, time)
            maps.append(weights)
        shift, scale = self.final_modulation(time)[:, None].chunk(2, dim=-1)
        out = self.head(self.final_norm(x) * (1 + scale) + shift)

        c_lat = self.config.c_lat
        out = out.reshape(batch, frames, height, width, c_lat, 2, 2)
        out = out.permute(0, 4, 1, 2, 5, 3, 6)
        velocity = out.reshape(batch, c_lat, frames, height * 2, width * 2)
        return velocity, torch.stack(maps, dim=1)

    def map_effect(self, pooled):
        return spatial_softmax(self.mapper(pooled))

    def forward(self, x_t, condition, prompt, t):
        return self.dit_forward(self.adaptor_fuse(x_t, condition), prompt, t)

    def effect_distribution(self, attn, grid_shape, placeholder_index=PLACEHOLDER_INDEX):
        return self.map_effect(pool_attention(attn, placeholder_index, grid_shape))


def build_model(config, lora=True):
    """Seeded construction; identical configs give identical weights."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        model = EffectDiT(config)
        if lora:
            apply_lora(model, LoraSpec(rank=config.lora_rank, alpha=config.lora_alpha))
    return model
