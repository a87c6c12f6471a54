"""Estimate input-token to output-token association weights from perturbed queries.

The design matrix pairs each disturbed sample's retention mask (which
original tokens survived) with a bag-of-tokens view of the model's top
prediction for that sample. Row 0 is always the undisturbed input. Two
estimators fill the weight matrix:

* logistic: one L2-regularized logistic regression per output token,
  minimizing  mean log(1 + exp(-margin)) + (lambda/2) * ||w||^2
  by full-batch gradient descent with Armijo backtracking (bias
  unregularized).
* pmi: smoothed pointwise mutual information,
  log[(n11 + 0.5)(N + 1) / ((n1. + 0.5)(n.1 + 0.5))].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .adapter import ProgramInput, RepairOutput
from .errors import AlignmentError, NumericalError
from .tokens import Stream


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray  # N x n, bool: sample row 0 is the unperturbed input
    Y: np.ndarray  # N x v, bool: output token presence in the sample's top-1
    input_vocab: tuple[str, ...]
    input_streams: tuple[str, ...]
    output_vocab: tuple[str, ...]


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "logistic"  # or "pmi"
    lam: float = 1e-3
    tol: float = 1e-6
    max_iter: int = 500


@dataclass(frozen=True)
class DependencyMatrix:
    W: np.ndarray  # n x v
    bias: np.ndarray  # v
    method: str
    config: EstimatorConfig
    input_vocab: tuple[str, ...]
    input_streams: tuple[str, ...]
    output_vocab: tuple[str, ...]
    constant_features: tuple[int, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "input_vocab": list(self.input_vocab),
            "input_streams": list(self.input_streams),
            "output_vocab": list(self.output_vocab),
            "W": [[float(v) for v in row] for row in self.W],
            "bias": [float(b) for b in self.bias],
            "method": self.method,
            "config": {
                "lambda": self.config.lam,
                "tol": self.config.tol,
                "max_iter": self.config.max_iter,
            },
            "constant_features": list(self.constant_features),
        }


@dataclass
class FitResult:
    weights: np.ndarray
    bias: float
    iterations: int
    converged: bool
    losses: list[float] = field(default_factory=list)


def build_design_matrix(
    program_input: ProgramInput,
    samples,
    outputs,
    unperturbed: RepairOutput,
) -> DesignMatrix:
    """Assemble X (retention masks) and Y (top-1 token presence), row 0 unperturbed."""
    samples = list(samples)
    outputs = list(outputs)
    if len(samples) != len(outputs):
        raise AlignmentError(f"{len(samples)} samples vs {len(outputs)} outputs")

    code, comment = program_input.code, program_input.comment
    n = len(code) + len(comment)
    input_vocab = tuple(code.texts + comment.texts)
    input_streams = tuple(
        [Stream.CODE.value] * len(code) + [Stream.COMMENT.value] * len(comment)
    )

    top_texts = [unperturbed.top.texts] + [out.top.texts for out in outputs]
    vocab: list[str] = []
    seen = set()
    for texts in top_texts:
        for t in texts:
            if t not in seen:
                seen.add(t)
                vocab.append(t)
    col = {t: j for j, t in enumerate(vocab)}

    N = len(samples) + 1
    X = np.zeros((N, n), dtype=bool)
    X[0, :] = True
    for i, sample in enumerate(samples, start=1):
        if len(sample.retained_mask) != n:
            raise AlignmentError(
                f"sample {sample.index}: mask length {len(sample.retained_mask)} != {n}"
            )
        X[i, :] = sample.retained_mask
    Y = np.zeros((N, len(vocab)), dtype=bool)
    for i, texts in enumerate(top_texts):
        for t in set(texts):
            Y[i, col[t]] = True
    return DesignMatrix(
        X=X, Y=Y, input_vocab=input_vocab, input_streams=input_streams,
        output_vocab=tuple(vocab),
    )


def _loss_grad(X, y, w, b, lam):
    margin = X @ w + b
    # log(1+e^m) - y*m, computed stably
    loss = float(np.mean(np.maximum(margin, 0.0) + np.log1p(np.exp(-np.abs(margin))) - y * margin))
    loss += 0.5 * lam * float(w @ w)
    e = np.exp(-np.abs(margin))
    p = np.where(margin >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    resid = p - y
    gw = X.T @ resid / len(y) + lam * w
    gb = float(np.mean(resid))
    return loss, gw, gb


def logistic_fit(
    X, y, lam: float = 1e-3, tol: float = 1e-6, max_iter: int = 500
) -> FitResult:
    """Full-batch gradient descent with Armijo backtracking line search."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n_features = X.shape[1]
    w = np.zeros(n_features)
    b = 0.0
    loss, gw, gb = _loss_grad(X, y, w, b, lam)
    losses = [loss]
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        gnorm = max(float(np.max(np.abs(gw))) if n_features else 0.0, abs(gb))
        if gnorm <= tol:
            converged = True
            iterations -= 1
            break
        gsq = float(gw @ gw) + gb * gb
        step = 1.0
        for _ in range(60):
            w_try = w - step * gw
            b_try = b - step * gb
            loss_try, gw_try, gb_try = _loss_grad(X, y, w_try, b_try, lam)
            if np.isfinite(loss_try) and loss_try <= loss - 1e-4 * step * gsq:
                break
            step *= 0.5
        else:
            raise NumericalError("line search failed to find a decreasing step")
        w, b, loss, gw, gb = w_try, b_try, loss_try, gw_try, gb_try
        if not (np.all(np.isfinite(w)) and np.isfinite(b) and np.isfinite(loss)):
            raise NumericalError("non-finite iterate in logistic fit")
        losses.append(loss)
    return FitResult(weights=w, bias=b, iterations=iterations, converged=converged, losses=losses)


def pmi_score(X, y) -> np.ndarray:
    """Smoothed PMI between each column of X and y."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    N = len(y)
    n11 = X.T @ y
    n1_ = X.sum(axis=0)
    n_1 = y.sum()
    return np.log((n11 + 0.5) * (N + 1) / ((n1_ + 0.5) * (n_1 + 0.5)))


def _constant_bias(y) -> float:
    ones = float(np.sum(y))
    zeros = len(y) - ones
    return float(np.log((ones + 0.5) / (zeros + 0.5)))


def estimate_dependencies(dm: DesignMatrix, cfg: EstimatorConfig | None = None) -> DependencyMatrix:
    """Fit one weight column per output token; constant features get weight 0."""
    if cfg is None:
        cfg = EstimatorConfig()
    X = dm.X.astype(float)
    N, n = X.shape
    v = dm.Y.shape[1]
    varying = [j for j in range(n) if 0.0 < X[:, j].mean() < 1.0]
    constant = tuple(j for j in range(n) if j not in set(varying))
    Xv = X[:, varying]

    W = np.zeros((n, v))
    bias = np.zeros(v)
    for j in range(v):
        y = dm.Y[:, j].astype(float)
        if y.min() == y.max() or not varying:
            bias[j] = _constant_bias(y)
            continue
        if cfg.method == "logistic":
            try:
                fit = logistic_fit(Xv, y, lam=cfg.lam, tol=cfg.tol, max_iter=cfg.max_iter)
            except NumericalError as exc:
                raise NumericalError(
                    f"output token {dm.output_vocab[j]!r}: {exc}"
                ) from exc
            W[varying, j] = fit.weights
            bias[j] = fit.bias
        elif cfg.method == "pmi":
            W[varying, j] = pmi_score(Xv, y)
            bias[j] = _constant_bias(y)
        else:
            raise ValueError(f"unknown estimator method {cfg.method!r}")
    return DependencyMatrix(
        W=W, bias=bias, method=cfg.method, config=cfg,
        input_vocab=dm.input_vocab, input_streams=dm.input_streams,
        output_vocab=dm.output_vocab, constant_features=constant,
    )
