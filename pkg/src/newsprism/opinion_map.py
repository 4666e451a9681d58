"""2-D opinion maps: a from-scratch t-SNE over pooled comment vectors.

Input-space affinities use Gaussian kernels with per-point bandwidths found
by binary search against the perplexity target; the low-dimensional kernel
is Student-t with one degree of freedom. Optimization is plain gradient
descent with early exaggeration and a momentum switch. The O(n^2) inner
loops live in the compiled kernel module when it is available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._kernels import pairwise_sq_dists, tsne_grad_kl
from .errors import IntegrityError, TrainingDiverged
from .stance import CommentModel, embed_comment

COLOR_BY_ORIGIN = {
    "conservative_community": "red",
    "liberal_community": "blue",
    "user": "yellow",
}


@dataclass
class TsneConfig:
    perplexity: float = 15.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250
    lr: float = 200.0
    momentum_start: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.perplexity <= 0:
            raise ValueError("perplexity must be positive")


@dataclass
class AffinityMatrix:
    P: np.ndarray
    perplexity: float
    sigmas: np.ndarray
    conditional: np.ndarray

    def validate(self, tol_sym=1e-12, tol_sum=1e-9):
        if np.abs(np.diag(self.P)).max() > 0:
            raise IntegrityError("affinity diagonal must be exactly zero")
        if np.abs(self.P - self.P.T).max() > tol_sym:
            raise IntegrityError("affinity matrix must be symmetric")
        if abs(self.P.sum() - 1.0) > tol_sum:
            raise IntegrityError("affinities must sum to 1")


def _jitter_duplicates(X: np.ndarray) -> np.ndarray:
    """Deterministic per-index jitter applied when exact duplicate rows exist."""
    seen = {}
    has_dup = False
    for i, row in enumerate(X):
        key = row.tobytes()
        if key in seen:
            has_dup = True
            break
        seen[key] = i
    if not has_dup:
        return X
    out = X.astype(np.float64).copy()
    for i in range(out.shape[0]):
        direction = np.random.default_rng(i).normal(size=out.shape[1])
        out[i] += 1e-8 * direction / np.linalg.norm(direction)
    return out


def _row_affinity(d_row: np.ndarray, beta: float):
    """Conditional probabilities and natural-log entropy for one row at precision beta."""
    shifted = -beta * d_row
    shifted -= shifted.max()
    p = np.exp(shifted)
    z = p.sum()
    p /= z
    h = -float(np.sum(p * np.log(np.maximum(p, 1e-300))))
    return p, h


def pairwise_affinities(X: np.ndarray, perplexity: float, tol: float = 1e-5) -> AffinityMatrix:
    """Symmetrized affinities with per-row bandwidth calibrated to the perplexity.

    The binary search drives 2^H (row entropy in bits) within `tol` of the
    target; duplicate input rows are jittered first so the search cannot
    degenerate.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    if not (perplexity < n):
        raise ValueError(f"perplexity must be < n ({perplexity} >= {n})")
    X = _jitter_duplicates(X)
    D = pairwise_sq_dists(X)
    cond = np.zeros((n, n))
    betas = np.zeros(n)
    for i in range(n):
        d_row = np.delete(D[i], i)
        beta, lo, hi = 1.0, 0.0, math.inf
        p = None
        for _ in range(200):
            p, h = _row_affinity(d_row, beta)
            achieved = math.exp(h)
            if abs(achieved - perplexity) <= tol:
                break
            if achieved > perplexity:
                lo = beta
                beta = beta * 2.0 if hi is math.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else (beta + lo) / 2.0
        betas[i] = beta
        cond[i, np.arange(n) != i] = p
    P = (cond + cond.T) / (2.0 * n)
    np.fill_diagonal(P, 0.0)
    return AffinityMatrix(
        P=P, perplexity=perplexity, sigmas=np.sqrt(1.0 / (2.0 * betas)), conditional=cond
    )


def kl_objective(P: np.ndarray, Y: np.ndarray) -> float:
    """KL(P || Q) with the Student-t low-dimensional kernel, diagonal excluded."""
    P = np.asarray(P, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if P.shape[0] != Y.shape[0]:
        raise ValueError("P and Y must agree on the number of points")
    _, kl = tsne_grad_kl(P, Y)
    return kl


def tsne_gradient(P: np.ndarray, Y: np.ndarray) -> np.ndarray:
    grad, _ = tsne_grad_kl(np.asarray(P, float), np.asarray(Y, float))
    return grad


def tsne(X: np.ndarray, config: TsneConfig | None = None, return_history: bool = False):
    """Gradient descent on the KL objective; deterministic per seed.

    The returned history tracks the objective against the plain (never
    exaggerated) affinities at every iteration.
    """
    config = config or TsneConfig()
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("need at least 3 points")
    aff = pairwise_affinities(X, config.perplexity)
    P = aff.P
    P_ex = P * config.early_exaggeration
    rng = np.random.default_rng(config.seed)
    Y = rng.standard_normal((n, 2)) * 1e-4
    velocity = np.zeros_like(Y)
    history = []
    for it in range(config.iterations):
        P_eff = P_ex if it < config.exaggeration_iters else P
        grad, kl_eff = tsne_grad_kl(P_eff, Y)
        if P_eff is P:
            history.append(kl_eff)
        else:
            history.append(kl_objective(P, Y))
        momentum = config.momentum_start if it < config.momentum_switch else config.momentum_final
        velocity = momentum * velocity - config.lr * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        if not np.isfinite(Y).all():
            raise TrainingDiverged(f"non-finite layout at iteration {it}", iteration=it)
    return (Y, history) if return_history else Y


# ---------------------------------------------------------------------------
# the map


@dataclass(frozen=True)
class MapPoint:
    comment_id: str
    x: float
    y: float
    color: str
    text: str


@dataclass
class OpinionMap:
    topic_id: str
    points: list[MapPoint] = field(default_factory=list)

    def __post_init__(self):
        for pt in self.points:
            if pt.color not in ("red", "blue", "yellow"):
                raise IntegrityError(f"unknown point color {pt.color!r}")
            if not (math.isfinite(pt.x) and math.isfinite(pt.y)):
                raise IntegrityError(f"non-finite coordinates for {pt.comment_id}")

    def to_json(self) -> dict:
        return {
            "topic": self.topic_id,
            "points": [
                {"id": p.comment_id, "x": p.x, "y": p.y, "color": p.color, "text": p.text}
                for p in self.points
            ],
        }

    @classmethod
    def from_json(cls, obj) -> "OpinionMap":
        return cls(
            topic_id=obj["topic"],
            points=[
                MapPoint(p["id"], float(p["x"]), float(p["y"]), p["color"], p["text"])
                for p in obj["points"]
            ],
        )


def build_map(
    topic_id: str,
    community_comments,
    user_comments,
    comment_model: CommentModel,
    config: Optional[TsneConfig] = None,
) -> OpinionMap:
    """Joint t-SNE over community and user comments, colored by origin.

    A single run with a fixed seed embeds everything together, so user points
    live in the same geometry as the red/blue cloud; hover text is the
    verbatim comment text.
    """
    config = config or TsneConfig()
    comments = [c for c in community_comments if c.topic_id == topic_id]
    comments += [c for c in user_comments if c.topic_id == topic_id]
    if len(comments) < 3:
        raise IntegrityError(f"topic {topic_id}: need at least 3 comments, have {len(comments)}")
    if not comment_model.trained:
        raise IntegrityError("comment model must be trained before building maps")
    X = np.stack([embed_comment(comment_model, c) for c in comments])
    perplexity = min(config.perplexity, len(comments) - 1)
    effective = TsneConfig(
        perplexity=perplexity,
        iterations=config.iterations,
        early_exaggeration=config.early_exaggeration,
        exaggeration_iters=config.exaggeration_iters,
        lr=config.lr,
        momentum_start=config.momentum_start,
        momentum_final=config.momentum_final,
        momentum_switch=config.momentum_switch,
        seed=config.seed,
    )
    Y = tsne(X, effective)
    points = [
        MapPoint(
            comment_id=c.id,
            x=float(Y[i, 0]),
            y=float(Y[i, 1]),
            color=COLOR_BY_ORIGIN[c.origin],
            text=c.text,
        )
        for i, c in enumerate(comments)
    ]
    return OpinionMap(topic_id=topic_id, points=points)
