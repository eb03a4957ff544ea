"""Regularized logistic regression trained by stochastic gradient descent.

The update schedule is pegasos-style: at step t the learning rate is
1/(lambda * t) and the whole weight vector is shrunk by (1 - 1/t) before
the gradient step. Three example-sampling loops are supported:

* ``uniform``  - one example drawn uniformly per step;
* ``balanced`` - alternate one random positive and one random negative;
* ``roc-pair`` - draw a positive/negative pair and descend the pairwise
  logistic ranking loss on their difference.

The bias is an always-on feature appended inside the learner. Its value is
the mean norm of the training vectors (exactly 1.0 for the L2-normalized
vectors produced by featurization), which keeps training exactly
scale-equivariant: scaling all vectors by c and lambda by c**2 leaves every
decision value unchanged. Only decision values are exposed; ranking needs
no probability calibration.
"""

from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .base import BaseEstimator, check_is_fitted
from .errors import TrainingError
from .features import SparseVector, Vocabulary

LOOP_TYPES = ("uniform", "balanced", "roc-pair")

_MODEL_MAGIC = b"CALKITSGD1\n"


@dataclass(frozen=True)
class LearnerConfig:
    """Training knobs; defaults follow the published defaults of the
    reference CAL tooling and are exposed because they are the two
    hyper-parameters worth tuning."""

    lambda_: float = 1e-4
    loop_type: str = "roc-pair"
    iterations: int = 200_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lambda_ <= 0:
            raise ValueError(f"lambda_ must be > 0, got {self.lambda_}")
        if self.loop_type not in LOOP_TYPES:
            raise ValueError(f"loop_type must be one of {LOOP_TYPES}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


def _sigmoid_neg(margin: float) -> float:
    """sigma(-margin), computed without overflow."""
    if margin >= 0:
        e = math.exp(-margin)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(margin))


def logistic_objective(
    weights: np.ndarray,
    X: Sequence[SparseVector],
    y: Sequence[int],
    lambda_: float,
    bias_feature: float = 1.0,
) -> float:
    """Regularized mean logistic loss.

    ``weights`` has one extra trailing coordinate for the bias feature,
    whose value is ``bias_feature`` on every example. Labels are {0, 1}.
    """
    w = np.asarray(weights, dtype=np.float64)
    total = 0.0
    for vector, label in zip(X, y):
        sign = 1.0 if label else -1.0
        margin = sign * (vector.dot_dense(w) + bias_feature * w[-1])
        total += float(np.logaddexp(0.0, -margin))
    return 0.5 * lambda_ * float(np.dot(w, w)) + total / len(X)


def logistic_gradient(
    weights: np.ndarray,
    X: Sequence[SparseVector],
    y: Sequence[int],
    lambda_: float,
    bias_feature: float = 1.0,
) -> np.ndarray:
    """Analytic gradient of :func:`logistic_objective` w.r.t. ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    grad = lambda_ * w
    scale = 1.0 / len(X)
    for vector, label in zip(X, y):
        sign = 1.0 if label else -1.0
        margin = sign * (vector.dot_dense(w) + bias_feature * w[-1])
        coeff = -scale * sign * _sigmoid_neg(margin)
        if vector.nnz:
            grad[vector.indices] += coeff * vector.values
        grad[-1] += coeff * bias_feature
    return grad


class SgdLogisticRanker(BaseEstimator):
    """Pegasos-style SGD logistic regression for relevance ranking.

    Fitted state: ``weights_`` (dense, one per vocabulary term), ``bias_``,
    ``n_features_`` and ``trained_on_`` (positive and negative counts).
    Training is single-threaded and fully determined by (examples, params,
    seed); scoring is pure.
    """

    def __init__(
        self,
        lambda_: float = 1e-4,
        loop_type: str = "roc-pair",
        iterations: int = 200_000,
        seed: int = 0,
    ):
        self.lambda_ = lambda_
        self.loop_type = loop_type
        self.iterations = iterations
        self.seed = seed
        self.weights_: np.ndarray | None = None
        self.bias_: float = 0.0
        self.n_features_: int | None = None
        self.trained_on_: tuple[int, int] | None = None

    @classmethod
    def from_config(cls, config: LearnerConfig) -> "SgdLogisticRanker":
        return cls(**asdict(config))

    def fit(
        self,
        X: Sequence[SparseVector],
        y: Sequence[int],
        n_features: int | None = None,
    ) -> "SgdLogisticRanker":
        """Train on sparse vectors with {0, 1} labels (1 = relevant)."""
        LearnerConfig(self.lambda_, self.loop_type, self.iterations, self.seed)
        if len(X) != len(y):
            raise ValueError("X and y have different lengths")
        labels = np.asarray(y, dtype=np.int64)
        positives = [X[i] for i in np.flatnonzero(labels == 1)]
        negatives = [X[i] for i in np.flatnonzero(labels == 0)]
        if not positives:
            raise TrainingError("training set has no relevant examples")
        if not negatives:
            raise TrainingError("training set has no not-relevant examples")

        if n_features is None:
            n_features = 1 + max(
                (int(v.indices[-1]) for v in X if v.nnz), default=-1
            )
        norms = [v.norm() for v in X]
        rho = float(np.mean(norms)) or 1.0

        lam = float(self.lambda_)
        rng = np.random.default_rng(self.seed)
        T = int(self.iterations)
        bias_index = n_features

        # u holds the weights up to the running scale factor s (w = s * u),
        # so the per-step L2 shrink costs O(1) instead of O(|V|).
        u = np.zeros(n_features + 1, dtype=np.float64)
        s = 1.0

        def full_parts(vector: SparseVector) -> tuple[np.ndarray, np.ndarray]:
            idx = np.append(vector.indices, bias_index)
            val = np.append(vector.values, rho)
            return idx, val

        if self.loop_type == "roc-pair":
            pos_draws = rng.integers(0, len(positives), size=T)
            neg_draws = rng.integers(0, len(negatives), size=T)
            pos_parts = [(v.indices, v.values) for v in positives]
            neg_parts = [(v.indices, v.values) for v in negatives]
            for t in range(1, T + 1):
                eta = 1.0 / (lam * t)
                if t == 1:
                    u[:] = 0.0
                    s = 1.0
                else:
                    s *= 1.0 - 1.0 / t
                pi, pv = pos_parts[pos_draws[t - 1]]
                ni, nv = neg_parts[neg_draws[t - 1]]
                # The bias feature cancels in the pair difference.
                margin = s * (
                    float(np.dot(u[pi], pv)) - float(np.dot(u[ni], nv))
                )
                p = _sigmoid_neg(margin)
                if p != 0.0:
                    step = eta * p / s
                    u[pi] += step * pv
                    u[ni] -= step * nv
        else:
            if self.loop_type == "uniform":
                all_full = [full_parts(v) for v in X]
                signs = np.where(labels == 1, 1.0, -1.0)
                draws = rng.integers(0, len(X), size=T)
            else:  # balanced
                pos_full = [full_parts(v) for v in positives]
                neg_full = [full_parts(v) for v in negatives]
                pos_draws = rng.integers(0, len(positives), size=(T + 1) // 2)
                neg_draws = rng.integers(0, len(negatives), size=T // 2)
            for t in range(1, T + 1):
                eta = 1.0 / (lam * t)
                if t == 1:
                    u[:] = 0.0
                    s = 1.0
                else:
                    s *= 1.0 - 1.0 / t
                if self.loop_type == "uniform":
                    i = draws[t - 1]
                    idx, val = all_full[i]
                    sign = signs[i]
                else:
                    k = t - 1
                    if k % 2 == 0:
                        idx, val = pos_full[pos_draws[k // 2]]
                        sign = 1.0
                    else:
                        idx, val = neg_full[neg_draws[k // 2]]
                        sign = -1.0
                margin = sign * s * float(np.dot(u[idx], val))
                p = _sigmoid_neg(margin)
                if p != 0.0:
                    u[idx] += (eta * p * sign / s) * val

        w_full = s * u
        self.weights_ = w_full[:n_features]
        self.bias_ = float(w_full[bias_index] * rho)
        self.n_features_ = n_features
        self.trained_on_ = (len(positives), len(negatives))
        return self

    def score_vector(self, vector: SparseVector) -> float:
        """Linear decision value w.x + b; monotone in predicted relevance."""
        check_is_fitted(self, "weights_")
        return vector.dot_dense(self.weights_) + self.bias_

    def decision_function(self, X: Sequence[SparseVector]) -> np.ndarray:
        return np.array([self.score_vector(v) for v in X], dtype=np.float64)

    def predict(self, X: Sequence[SparseVector]) -> np.ndarray:
        """Binary labels from the sign of the decision value."""
        return (self.decision_function(X) > 0.0).astype(np.int64)

    def rank(
        self,
        candidates: Sequence[str],
        vectors: Mapping[str, SparseVector],
    ) -> list[tuple[str, float]]:
        """Candidates sorted by descending score, ties by ascending doc_id."""
        check_is_fitted(self, "weights_")
        scored = []
        for doc_id in candidates:
            if doc_id not in vectors:
                raise KeyError(f"no feature vector for doc_id {doc_id!r}")
            scored.append((doc_id, self.score_vector(vectors[doc_id])))
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored

    def top_terms(
        self,
        vector: SparseVector,
        vocabulary: Vocabulary,
        k: int = 5,
    ) -> list[str]:
        """Up to k terms with the largest positive weight*feature products.

        Ties break by ascending term text; terms with non-positive
        contributions are never returned.
        """
        check_is_fitted(self, "weights_")
        if k < 1:
            raise ValueError("k must be >= 1")
        contributions = []
        for term_id, value in zip(vector.indices.tolist(), vector.values.tolist()):
            c = self.weights_[term_id] * value
            if c > 0.0:
                contributions.append((-c, vocabulary.term(term_id)))
        contributions.sort()
        return [term for _, term in contributions[:k]]

    def save(self, path: str | Path) -> None:
        """Persist (vocab size, bias, dense weights) with a magic header."""
        check_is_fitted(self, "weights_")
        with Path(path).open("wb") as fh:
            fh.write(_MODEL_MAGIC)
            fh.write(struct.pack("<Qd", self.n_features_, self.bias_))
            fh.write(self.weights_.astype("<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "SgdLogisticRanker":
        raw = Path(path).read_bytes()
        if not raw.startswith(_MODEL_MAGIC):
            raise ValueError(f"{path} is not a recognized model file")
        offset = len(_MODEL_MAGIC)
        n_features, bias = struct.unpack_from("<Qd", raw, offset)
        offset += struct.calcsize("<Qd")
        weights = np.frombuffer(raw, dtype="<f8", count=n_features, offset=offset)
        if weights.size != n_features:
            raise ValueError(f"{path} is truncated")
        model = cls()
        model.weights_ = weights.astype(np.float64)
        model.bias_ = float(bias)
        model.n_features_ = int(n_features)
        return model
