# -*- coding: utf-8 -*-
"""
Joint removal/insertion flow-matching training with the effect
consistency term.
"""
import json
import logging
import os
import time
from dataclasses import asdict, dataclass

import tablib
import torch
import torch.nn.functional as F
from torch.utils.data import DataLoader, Dataset

from .checkpoint import load_trainer_state, read_checkpoint_meta, save_checkpoint
from .choices import TASKS
from .conf import settings
from .exceptions import ConfigError, DataValidationError, NumericalError, ShapeMismatch
from .lora import trainable_parameters
from .model import build_condition, target_latent
from .utils import derive_seed, torch_generator
from .video import read_triplet, resize_bilinear, validate_triplet

logger = logging.getLogger(__name__)

LOSS_LOG_NAME = 'losses.jsonl'
LOSS_LOG_KEYS = ('step', 'lr', 'denoise_removal', 'denoise_insertion', 'ec', 'total', 'wall_ms')


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    batch_size: int = 1
    max_steps: int = 500
    lambda_ec: float = None
    timestep_loc: float = 0.0
    timestep_scale: float = 1.0
    seed: int = 0
    checkpoint_interval: int = 100
    epsilon_prior: float = 1e-4
    log_interval: int = 10
    workers: int = 0
    double_precision: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError('learning_rate must be positive')
        if self.lambda_ec is not None and self.lambda_ec < 0:
            raise ConfigError('lambda_ec must not be negative')
        if self.epsilon_prior <= 0:
            raise ConfigError('epsilon_prior must be positive')
        if self.batch_size < 1 or self.max_steps < 0:
            raise ConfigError('batch_size must be positive and max_steps not negative')
        if self.timestep_scale < 0:
            raise ConfigError('timestep_scale must not be negative')
        if self.checkpoint_interval < 1 or self.log_interval < 1:
            raise ConfigError('intervals must be positive')


@dataclass(frozen=True)
class LossBreakdown:
    denoise_removal: float
    denoise_insertion: float
    ec: float
    total: float

    def to_dict(self):
        return asdict(self)

    @classmethod
    def mean(cls, breakdowns):
        """Field-wise mean of the micro-batch breakdowns behind one step."""
        count = len(breakdowns)
        return cls(**{
            name: sum(getattr(item, name) for item in breakdowns) / count
            for name in ('denoise_removal', 'denoise_insertion', 'ec', 'total')
        })


def sample_timestep(generator, loc=0.0, scale=1.0, size=1, dtype=torch.float32):
    """Logit-normal draw, kept strictly inside ``(0, 1)``."""
    normal = torch.randn(size, generator=generator, dtype=dtype)
    t = torch.sigmoid(loc + scale * normal)
    eps = torch.finfo(dtype).eps
    return t.clamp(eps, 1.0 - eps)


def _broadcast_time(t, like):
    t = torch.as_tensor(t, dtype=like.dtype, device=like.device)
    return t.reshape(-1, *([1] * (like.dim() - 1))) if t.dim() else t


def forward_noise(x, z, t):
    if x.shape != z.shape:
        raise ShapeMismatch('latent {0} and noise {1} disagree'.format(
            tuple(x.shape), tuple(z.shape)))
    t = _broadcast_time(t, x)
    return t * x + (1.0 - t) * z


def velocity_target(x, z):
    if x.shape != z.shape:
        raise ShapeMismatch('latent {0} and noise {1} disagree'.format(
            tuple(x.shape), tuple(z.shape)))
    return x - z


def denoise_loss(pred, velocity):
    if pred.shape != velocity.shape:
        raise ShapeMismatch('prediction {0} and target {1} disagree'.format(
            tuple(pred.shape), tuple(velocity.shape)))
    return F.mse_loss(pred, velocity)


def diff_prior(sample, target_t, target_h, target_w, epsilon):
    """
    Channel-summed ``|V_o - V_b|`` resized to the pooled attention grid,
    shifted by ``epsilon`` and normalised per frame. Returns ``1 x T x h x w``.
    """
    if epsilon <= 0:
        raise ConfigError('epsilon must be positive')
    if sample.frames != target_t:
        raise ShapeMismatch('{0} frames cannot map onto {1}'.format(sample.frames, target_t))
    difference = (sample.object_video - sample.background_video).abs().sum(dim=-1)
    difference = resize_bilinear(difference, target_h, target_w, clamp=False)
    mass = difference.clamp(min=0.0) + epsilon
    mass = mass / mass.sum(dim=(-2, -1), keepdim=True)
    return mass.unsqueeze(0)


def kl_divergence(p, q, floor=None):
    """``sum p log(p / q)`` over space, averaged over batch and frames."""
    if p.shape != q.shape:
        raise ShapeMismatch('distributions {0} and {1} disagree'.format(
            tuple(p.shape), tuple(q.shape)))
    floor = settings.EFFECT_LAB_KL_FLOOR if floor is None else floor
    log_q = torch.log(q.clamp(min=floor))
    pointwise = F.kl_div(log_q, p, reduction='none')
    return pointwise.sum(dim=(-2, -1)).mean()


def ec_loss(f_diff, f_removal, f_insertion, floor=None):
    return kl_divergence(f_diff, f_removal, floor) + kl_divergence(f_diff, f_insertion, floor)


class Trainer(object):
    """
    Owns the optimizer and the seeded noise stream. ``train_step`` runs
    both branches on one triplet and steps AdamW once every
    ``batch_size`` triplets.
    """

    def __init__(self, model, config):
        self.model = model
        self.config = config
        self.lambda_ec = (model.config.lambda_ec if config.lambda_ec is None
                          else config.lambda_ec)
        self.dtype = torch.float64 if config.double_precision else torch.float32
        self.model.to(self.dtype)
        self.optimizer = torch.optim.AdamW(
            trainable_parameters(model), lr=config.learning_rate,
            weight_decay=config.weight_decay)
        self.generator = torch_generator(derive_seed(config.seed, 0))
        self.step = 0
        self.pending = 0
        self.history = []
        self.micro_batches = []
        self.step_breakdown = None

    def compute_losses(self, sample, generator=None):
        """Returns the differentiable total and its breakdown."""
        generator = generator or self.generator
        model = self.model
        patch = model.config.patch_size
        sample = sample.to(self.dtype)
        denoise, effects = {}, {}
        for task in (TASKS.REMOVAL, TASKS.INSERTION):
            x = target_latent(task, sample, patch)
            condition = build_condition(task, sample, patch)
            z = torch.randn(x.shape, generator=generator, dtype=self.dtype)
            t = sample_timestep(generator, self.config.timestep_loc,
                                self.config.timestep_scale, size=x.shape[0], dtype=self.dtype)
            prompt = model.prompt_for(task, sample.object_video, sample.mask)
            pred, attn = model(forward_noise(x, z, t), condition, prompt, t)
            denoise[task] = denoise_loss(pred, velocity_target(x, z))
            grid = (x.shape[2], x.shape[3] // 2, x.shape[4] // 2)
            effects[task] = model.effect_distribution(attn, grid, prompt.placeholder_index)

        f_diff = diff_prior(sample, *grid, self.config.epsilon_prior)
        ec = ec_loss(f_diff, effects[TASKS.REMOVAL], effects[TASKS.INSERTION])
        total = denoise[TASKS.REMOVAL] + denoise[TASKS.INSERTION]
        # lambda_ec == 0 trains without effect consistency; ec is still reported
        if self.lambda_ec:
            total = total + self.lambda_ec * ec
        breakdown = LossBreakdown(
            denoise_removal=float(denoise[TASKS.REMOVAL]),
            denoise_insertion=float(denoise[TASKS.INSERTION]),
            ec=float(ec),
            total=float(total),
        )
        return total, breakdown

    def train_step(self, sample):
        self.model.train()
        total, breakdown = self.compute_losses(sample)
        if not torch.isfinite(total):
            raise NumericalError(
                'non-finite loss at step {0}: {1}'.format(self.step, breakdown.to_dict()))
        (total / self.config.batch_size).backward()
        self.pending += 1
        self.micro_batches.append(breakdown)
        if self.pending == self.config.batch_size:
            self.optimizer.step()
            self.optimizer.zero_grad(set_to_none=True)
            self.pending = 0
            self.step += 1
            self.step_breakdown = LossBreakdown.mean(self.micro_batches)
            self.micro_batches = []
        self.history.append(breakdown)
        return breakdown

    def state_dict(self):
        """Optimizer moments, step counter and noise stream for resuming."""
        return {
            'step': self.step,
            'optimizer': self.optimizer.state_dict(),
            'generator': self.generator.get_state(),
        }

    def load_state_dict(self, state):
        if self.pending:
            raise ConfigError('cannot restore a trainer in the middle of an accumulation')
        self.step = int(state['step'])
        self.optimizer.load_state_dict(state['optimizer'])
        self.generator.set_state(state['generator'])

    @property
    def learning_rate(self):
        return self.optimizer.param_groups[0]['lr']


class TripletDataset(Dataset):
    """Triplet directories listed by a synthesis ``index.json``."""

    def __init__(self, root, dtype=torch.float32):
        self.root = root
        self.dtype = dtype
        index_path = os.path.join(root, 'index.json')
        if os.path.isfile(index_path):
            with open(index_path, 'r', encoding='utf-8') as handle:
                index = tablib.Dataset().load(handle.read(), format='json')
            self.sample_ids = list(index['sample_id'])
        elif os.path.isdir(root):
            self.sample_ids = sorted(
                name for name in os.listdir(root)
                if os.path.isdir(os.path.join(root, name, 'object')))
        else:
            raise DataValidationError('dataset directory {0} does not exist'.format(root))
        if not self.sample_ids:
            raise DataValidationError('dataset {0} holds no triplets'.format(root))

    def __len__(self):
        return len(self.sample_ids)

    def __getitem__(self, index):
        sample_id = self.sample_ids[index]
        sample = read_triplet(os.path.join(self.root, sample_id), dtype=torch.float64)
        violations = validate_triplet(sample)
        if violations:
            raise DataValidationError('{0}: {1}'.format(sample_id, ', '.join(violations)))
        sample.meta.setdefault('sample_id', sample_id)
        return sample.to(self.dtype)


def _log_record(handle, step, trainer, breakdown, started):
    record = dict(breakdown.to_dict(), step=step, lr=trainer.learning_rate,
                  wall_ms=int((time.monotonic() - started) * 1000))
    handle.write(json.dumps({key: record[key] for key in LOSS_LOG_KEYS}) + '\n')
    handle.flush()


def train_loop(dataset_dir, model, config, run_dir, resume_from=None):
    """
    Trains until ``config.max_steps`` optimizer steps over shuffled
    triplets, appending one loss record per step (the mean over its
    micro-batches) to ``logs/losses.jsonl`` and saving
    ``artifacts/step_<N>`` checkpoints. The last step always gets a
    checkpoint, ``step_0`` included. ``resume_from`` continues the step
    counter, optimizer state and loss history of a training checkpoint.
    Returns the trainer.
    """
    trainer = Trainer(model, config)
    losses = []
    if resume_from:
        state = load_trainer_state(resume_from)
        if state is None:
            logger.warning('%s holds no trainer state; starting at step 0', resume_from)
        else:
            trainer.load_state_dict(state)
            losses = list(read_checkpoint_meta(resume_from).get('loss_history', ()))
            logger.info('resuming at step %d from %s', trainer.step, resume_from)
    dataset = TripletDataset(dataset_dir, dtype=trainer.dtype)
    loader = DataLoader(
        dataset, batch_size=None, shuffle=True, num_workers=config.workers,
        generator=torch_generator(derive_seed(config.seed, 1, trainer.step)))
    log_path = os.path.join(run_dir, 'logs', LOSS_LOG_NAME)
    artifacts = os.path.join(run_dir, 'artifacts')
    os.makedirs(os.path.dirname(log_path), exist_ok=True)
    started = time.monotonic()

    def checkpoint():
        save_checkpoint(os.path.join(artifacts, 'step_{0}'.format(trainer.step)),
                        model, trainer.step, config.seed, losses,
                        trainer_state=trainer.state_dict())
        return trainer.step

    saved = None
    with open(log_path, 'a', encoding='utf-8') as handle:
        while trainer.step < config.max_steps:
            for sample in loader:
                before = trainer.step
                trainer.train_step(sample)
                if trainer.step == before:
                    continue
                breakdown = trainer.step_breakdown
                losses.append(breakdown.total)
                _log_record(handle, trainer.step, trainer, breakdown, started)
                if trainer.step % config.log_interval == 0:
                    logger.debug('step %d total %.6f', trainer.step, breakdown.total)
                if trainer.step % config.checkpoint_interval == 0:
                    saved = checkpoint()
                if trainer.step >= config.max_steps:
                    break

    if saved != trainer.step:
        checkpoint()
    logger.info('trained to step %d over %d triplets', trainer.step, len(dataset))
    return trainer
