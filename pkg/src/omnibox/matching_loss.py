"""Set-prediction training loss: Hungarian matching plus a four-term loss.

Ground truths are padded with no-pedestrian sentinels so predictions and
targets form equal-size sets; the assignment minimizing the pairwise cost
decides which prediction answers for which target. The loss combines a
focal class term, an L1 box term, a GIoU term and a periodic angle term,
each normalized by the number of real (non-sentinel) targets.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import AxisBox, giou

FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0
FOCAL_EPS = 1e-8

_HALF_PI = math.pi / 2.0


@dataclass(frozen=True)
class LossWeights:
    """Per-term loss weights (class, box L1, GIoU, angle)."""

    lambda_c: float = 2.0
    lambda_b: float = 5.0
    lambda_u: float = 2.0
    lambda_a: float = 0.1

    def __post_init__(self):
        vals = (self.lambda_c, self.lambda_b, self.lambda_u, self.lambda_a)
        if not all(math.isfinite(v) and v >= 0.0 for v in vals):
            raise ValueError(f"loss weights must be non-negative, got {vals}")


@dataclass(frozen=True)
class Prediction:
    """One query's output: class probabilities, box, normalized angle.

    class_probs are post-sigmoid values in [0,1], one per object class;
    a_hat in [0,1] encodes the angle as theta_hat = 2*pi*a_hat - pi.
    """

    class_probs: tuple
    box: AxisBox
    a_hat: float

    def __post_init__(self):
        if len(self.class_probs) < 1:
            raise ValueError("prediction needs at least one class probability")
        if not all(math.isfinite(p) and 0.0 <= p <= 1.0
                   for p in self.class_probs):
            raise ValueError(f"class probabilities outside [0,1]: "
                             f"{self.class_probs}")
        if not (math.isfinite(self.a_hat) and 0.0 <= self.a_hat <= 1.0):
            raise ValueError(f"a_hat outside [0,1]: {self.a_hat}")

    @property
    def theta_hat(self) -> float:
        return 2.0 * math.pi * self.a_hat - math.pi


@dataclass(frozen=True)
class GroundTruthEntry:
    """One target: a real box or a no-pedestrian sentinel (is_phi)."""

    class_onehot: tuple
    box: AxisBox | None
    theta: float | None
    is_phi: bool = False

    def __post_init__(self):
        if self.is_phi:
            return
        if self.box is None or self.theta is None:
            raise ValueError("real ground truth requires box and theta")
        if not (-_HALF_PI <= self.theta < _HALF_PI):
            raise ValueError(f"theta outside [-pi/2, pi/2): {self.theta}")
        if sum(self.class_onehot) != 1 or any(v not in (0, 1)
                                              for v in self.class_onehot):
            raise ValueError(f"class_onehot must be one-hot: {self.class_onehot}")

    @classmethod
    def phi(cls, n_classes: int = 1) -> "GroundTruthEntry":
        return cls(class_onehot=(0,) * n_classes, box=None, theta=None,
                   is_phi=True)


@dataclass(frozen=True)
class LossBreakdown:
    """Weighted total plus unweighted per-term values and the assignment."""

    total: float
    class_loss: float
    box_l1: float
    giou_loss: float
    angle_loss: float
    assignment: tuple  # assignment[i] = prediction index matched to target i

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "class_loss": self.class_loss,
            "box_l1": self.box_l1,
            "giou_loss": self.giou_loss,
            "angle_loss": self.angle_loss,
            "assignment": list(self.assignment),
        }


def focal_loss(target, probs, alpha: float = FOCAL_ALPHA,
               gamma: float = FOCAL_GAMMA) -> float:
    """Alpha-balanced focal loss summed over classes.

    Args:
        target: binary vector (1 = positive class).
        probs: predicted probabilities, clamped to [eps, 1-eps].
        alpha, gamma: balancing and focusing parameters.

    Returns:
        Sum of -alpha*(1-p)^gamma*log(p) over positives and
        -(1-alpha)*p^gamma*log(1-p) over negatives.
    """
    if len(target) != len(probs):
        raise ValueError(f"target/probs length mismatch: "
                         f"{len(target)} vs {len(probs)}")
    total = 0.0
    for t, p in zip(target, probs):
        p = min(max(float(p), FOCAL_EPS), 1.0 - FOCAL_EPS)
        if t:
            total += -alpha * (1.0 - p) ** gamma * math.log(p)
        else:
            total += -(1.0 - alpha) * p ** gamma * math.log(1.0 - p)
    return total


def angle_loss(theta_hat: float, theta: float) -> float:
    """Periodic L1 angle distance: |mod(th - t - pi/2, pi) - pi/2|.

    Floored modulo (result in [0, pi)), so the loss is pi-periodic with
    range [0, pi/2] and zero exactly when the angles agree modulo pi.
    """
    return abs((theta_hat - theta - _HALF_PI) % math.pi - _HALF_PI)


def pair_cost(gt: GroundTruthEntry, pred: Prediction,
              weights: LossWeights = LossWeights()) -> float:
    """Matching cost between a real ground truth and a prediction.

    The class term uses only the positive-class focal component (the
    background terms shared by every row would not change the assignment);
    box, GIoU and angle terms mirror the loss.
    """
    if gt.is_phi:
        raise ValueError("pair_cost is defined for real ground truths; "
                         "sentinel rows use phi_cost")
    k = gt.class_onehot.index(1)
    p = min(max(float(pred.class_probs[k]), FOCAL_EPS), 1.0 - FOCAL_EPS)
    cls = -FOCAL_ALPHA * (1.0 - p) ** FOCAL_GAMMA * math.log(p)
    l1 = (abs(gt.box.cx - pred.box.cx) + abs(gt.box.cy - pred.box.cy)
          + abs(gt.box.w - pred.box.w) + abs(gt.box.h - pred.box.h))
    giou_term = 1.0 - giou(gt.box, pred.box)
    ang = angle_loss(pred.theta_hat, gt.theta)
    return (weights.lambda_c * cls + weights.lambda_b * l1
            + weights.lambda_u * giou_term + weights.lambda_a * ang)


def phi_cost(pred: Prediction, weights: LossWeights = LossWeights()) -> float:
    """Matching cost of assigning a prediction to a no-pedestrian sentinel.

    Background focal term only, mirroring the sentinel rows of the loss.
    """
    target = (0,) * len(pred.class_probs)
    return weights.lambda_c * focal_loss(target, pred.class_probs)


def build_cost_matrix(gts, preds,
                      weights: LossWeights = LossWeights()) -> np.ndarray:
    """(N, N) cost matrix, rows = padded ground truths, cols = predictions."""
    n = len(gts)
    if len(preds) != n:
        raise ValueError(f"need equal-size sets, got {n} targets vs "
                         f"{len(preds)} predictions")
    cost = np.empty((n, n), dtype=np.float64)
    for j, pred in enumerate(preds):
        bg = phi_cost(pred, weights)
        for i, gt in enumerate(gts):
            cost[i, j] = bg if gt.is_phi else pair_cost(gt, pred, weights)
    return cost


def hungarian_match(cost_matrix) -> np.ndarray:
    """Minimum-cost assignment of a square cost matrix.

    Returns:
        Integer array perm with perm[i] = column assigned to row i.

    Raises:
        ValueError: non-square or non-finite input.
    """
    cost = np.asarray(cost_matrix, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"cost matrix must be square, got {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix contains non-finite values")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=np.int64)
    perm[rows] = cols
    return perm


def pad_ground_truth(gts, n_queries: int, n_classes: int = 1):
    """Pad a ground-truth list with sentinels up to the query count."""
    if len(gts) > n_queries:
        raise ValueError(f"{len(gts)} ground truths exceed {n_queries} queries")
    return list(gts) + [GroundTruthEntry.phi(n_classes)
                        for _ in range(n_queries - len(gts))]


def compute_loss(gts, preds,
                 weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Match predictions to targets and evaluate the four-term loss.

    Args:
        gts: GroundTruthEntry list of length N (padded with sentinels).
        preds: Prediction list of the same length.
        weights: term weights.

    Returns:
        LossBreakdown with unweighted per-term means (normalized by the
        real-target count) and total = lambda_c*Lc + lambda_b*Lb +
        lambda_u*Lu + lambda_a*La. Sentinel-matched predictions contribute
        only the background class term.

    Raises:
        ValueError: size mismatch or zero real ground truths.
    """
    n_real = sum(1 for g in gts if not g.is_phi)
    if n_real == 0:
        raise ValueError("loss undefined without real ground truths "
                         "(normalization divides by their count)")
    cost = build_cost_matrix(gts, preds, weights)
    perm = hungarian_match(cost)
    l_c = 0.0
    l_b = 0.0
    l_u = 0.0
    l_a = 0.0
    for i, gt in enumerate(gts):
        pred = preds[perm[i]]
        if gt.is_phi:
            l_c += focal_loss((0,) * len(pred.class_probs), pred.class_probs)
            continue
        l_c += focal_loss(gt.class_onehot, pred.class_probs)
        l_b += (abs(gt.box.cx - pred.box.cx) + abs(gt.box.cy - pred.box.cy)
                + abs(gt.box.w - pred.box.w) + abs(gt.box.h - pred.box.h))
        l_u += 1.0 - giou(gt.box, pred.box)
        l_a += angle_loss(pred.theta_hat, gt.theta)
    l_c /= n_real
    l_b /= n_real
    l_u /= n_real
    l_a /= n_real
    total = (weights.lambda_c * l_c + weights.lambda_b * l_b
             + weights.lambda_u * l_u + weights.lambda_a * l_a)
    return LossBreakdown(total=total, class_loss=l_c, box_l1=l_b,
                         giou_loss=l_u, angle_loss=l_a,
                         assignment=tuple(int(v) for v in perm))
