"""Conditional denoising diffusion over sinograms: schedule, model, training,
sampling, and the observed-bin merge.
"""

from .model import ConditionalDenoiser, ModelParams, predict_noise
from .sampling import DEFAULT_STEPS, sample, timestep_subsequence
from .schedule import DiffusionSchedule, NoisySample, linear_schedule, q_sample
from .training import TrainConfig, train
from .transform import (
    conditioning,
    consistency_fill,
    denormalize,
    merge_prediction,
    normalize,
)

__all__ = [
    "ConditionalDenoiser",
    "ModelParams",
    "predict_noise",
    "DEFAULT_STEPS",
    "sample",
    "timestep_subsequence",
    "DiffusionSchedule",
    "NoisySample",
    "linear_schedule",
    "q_sample",
    "TrainConfig",
    "train",
    "conditioning",
    "consistency_fill",
    "denormalize",
    "merge_prediction",
    "normalize",
]
