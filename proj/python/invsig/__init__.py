"""Invariant curve signatures: curves, axiomatic invariants and the signature network."""

from ._invsig import (
    Error,
    Model,
    contrastive_loss,
    curvature,
    cumulative_arclength,
    forward,
    init_model,
    integral_area_invariant,
    load_model,
    normalize_curve,
    random_euclidean_transform,
    resample_uniform,
    save_model,
    signature_distance,
    smooth_loess,
    synth_shape,
    train,
)

__all__ = [
    "Error",
    "Model",
    "contrastive_loss",
    "curvature",
    "cumulative_arclength",
    "forward",
    "init_model",
    "integral_area_invariant",
    "load_model",
    "normalize_curve",
    "random_euclidean_transform",
    "resample_uniform",
    "save_model",
    "signature_distance",
    "smooth_loess",
    "synth_shape",
    "train",
]
