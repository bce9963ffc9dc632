"""Classification objective."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .. import numcore as nc
from ..exceptions import ShapeError
from ..numcore import Tensor


def cross_entropy(t: Tensor, y: Tensor) -> Tensor:
    """-sum_l t(l) log y(l) for one pair of distributions over the labels.

    y passes through the clamped log, so a saturated softmax cannot
    produce an infinite loss.
    """
    if t.shape != y.shape:
        raise ShapeError(f"cross_entropy: distribution shapes {t.shape} and "
                         f"{y.shape} differ")
    return nc.neg(nc.tsum(nc.mul(t, nc.tlog(y))))


def batch_cross_entropy(targets: np.ndarray, probs: Tensor,
                        class_weights: Optional[Sequence[float]] = None) -> Tensor:
    """Mean cross-entropy of predicted rows against one-hot target rows.

    Optional per-class weights rescale each sample's loss by the weight of
    its true class (class-imbalance handling, off by default).
    """
    if targets.shape != probs.shape:
        raise ShapeError(f"batch_cross_entropy: targets {targets.shape} vs "
                         f"predictions {probs.shape}")
    picked = nc.tsum(nc.mul(Tensor(targets), nc.tlog(probs)), axis=1)
    if class_weights is not None:
        weights = targets @ np.asarray(class_weights, dtype=np.float64)
        picked = nc.mul(picked, Tensor(weights))
    return nc.neg(nc.tmean(picked))


def one_hot(indices: Sequence[int], num_classes: int) -> np.ndarray:
    out = np.zeros((len(indices), num_classes))
    out[np.arange(len(indices)), list(indices)] = 1.0
    return out
