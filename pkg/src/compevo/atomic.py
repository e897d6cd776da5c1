"""Atomic learners that occupy single pipeline nodes.

Every learner is a pair of pure functions over numpy arrays.  Classifiers
emit class-1 scores in [0, 1] rather than labels, so that any node's output
can be ranked for ROC AUC or stacked as a feature by a parent node.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import expit

from .errors import DegenerateData, ShapeMismatch
from .kinds import ModelKind

NB_VAR_SMOOTHING = 1e-9
OLS_FALLBACK_ALPHA = 1e-6
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class TrainedAtomic:
    kind: ModelKind
    n_features: int
    state: dict[str, Any] = field(repr=False)
    ridge_fallback: bool = False


# --- linear models -------------------------------------------------------


def _ols(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float, bool]:
    A = np.hstack([X, np.ones((X.shape[0], 1))])
    gram = A.T @ A
    rhs = A.T @ y
    try:
        if np.linalg.cond(gram) > _COND_LIMIT:
            raise np.linalg.LinAlgError("ill-conditioned")
        beta = np.linalg.solve(gram, rhs)
        return beta[:-1], float(beta[-1]), False
    except np.linalg.LinAlgError:
        coef, intercept = _ridge(X, y, OLS_FALLBACK_ALPHA)
        return coef, intercept, True


def _ridge(X: np.ndarray, y: np.ndarray, alpha: float) -> tuple[np.ndarray, float]:
    # intercept is not penalised: solve on centred data
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    gram = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    coef = np.linalg.solve(gram, Xc.T @ (y - y_mean))
    return coef, float(y_mean - x_mean @ coef)


def _standardize_stats(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return mean, std


def logistic_gd(X: np.ndarray, y: np.ndarray, epochs: int = 200, step: float = 0.1, track_loss: bool = False):
    """Full-batch gradient descent on mean log-loss; returns (w, b, losses).

    With ``track_loss``, ``losses[i]`` is the loss before epoch ``i`` and the
    last entry is the final loss; otherwise ``losses`` is empty.
    """
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    losses = []
    for _ in range(epochs):
        z = X @ w + b
        if track_loss:
            losses.append(float(np.mean(np.logaddexp(0.0, z) - y * z)))
        err = expit(z) - y
        w = w - step * (X.T @ err) / n
        b = b - step * float(err.mean())
    if track_loss:
        z = X @ w + b
        losses.append(float(np.mean(np.logaddexp(0.0, z) - y * z)))
    return w, b, losses


# --- CART ----------------------------------------------------------------
#
# Trees are grown breadth-first, one whole level per pass, and a bagged
# ensemble grows all of its trees in the same passes.  Split search is the
# exhaustive variance-reduction scan; for 0/1 targets the weighted Gini
# decrease is proportional to the SSE decrease, so one criterion serves both
# task types.


def _dense_ranks(X: np.ndarray) -> np.ndarray:
    order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    steps = np.vstack([np.zeros((1, X.shape[1]), dtype=np.int64), np.cumsum(xs[1:] > xs[:-1], axis=0)])
    ranks = np.empty_like(steps)
    np.put_along_axis(ranks, order, steps, axis=0)
    return ranks


def _grow_forest(X: np.ndarray, y: np.ndarray, samples: list[np.ndarray], max_depth: int, min_leaf: int) -> dict:
    rows = np.concatenate(samples)
    Xr, yr = X[rows], y[rows]
    n_rows, d = Xr.shape
    ranks = _dense_ranks(Xr)
    bounds = np.cumsum([0] + [len(s) for s in samples])
    node_of = np.repeat(np.arange(len(samples)), np.diff(bounds))

    roots = np.arange(len(samples))
    feature = [np.full(len(samples), -1, dtype=np.intp)]
    threshold = [np.zeros(len(samples))]
    left = [np.full(len(samples), -1, dtype=np.intp)]
    right = [np.full(len(samples), -1, dtype=np.intp)]
    value = [np.array([yr[bounds[i]:bounds[i + 1]].mean() for i in range(len(samples))])]
    n_nodes = len(samples)
    active = np.arange(n_rows)

    for _ in range(max_depth):
        if active.size == 0:
            break
        nodes = node_of[active]
        order1 = np.argsort(nodes, kind="stable")
        uniq, starts, counts = np.unique(nodes[order1], return_index=True, return_counts=True)
        ymin = np.minimum.reduceat(yr[active][order1], starts)
        ymax = np.maximum.reduceat(yr[active][order1], starts)
        open_ = (counts >= 2 * min_leaf) & (ymax > ymin)
        if not open_.any():
            break
        keep = np.isin(nodes, uniq[open_])
        active = active[keep]
        nodes = nodes[keep]

        key = nodes[:, None].astype(np.int64) * (n_rows + 1) + ranks[active]
        order = np.argsort(key, axis=0, kind="stable")
        ys = yr[active][order]
        rs = np.take_along_axis(ranks[active], order, axis=0)
        sorted_nodes = np.sort(nodes, kind="stable")
        uniq, starts, counts = np.unique(sorted_nodes, return_index=True, return_counts=True)
        m = len(active)
        group = np.repeat(np.arange(len(uniq)), counts)
        pos = np.arange(m) - starts[group]
        cs = np.cumsum(ys, axis=0)
        before = np.where(starts[:, None] > 0, cs[starts - 1], 0.0)
        left_sum = cs - before[group]
        total = left_sum[starts + counts - 1][group]
        n_left = (pos + 1)[:, None].astype(float)
        n_right = counts[group][:, None] - n_left
        with np.errstate(divide="ignore", invalid="ignore"):
            score = left_sum**2 / n_left + (total - left_sum) ** 2 / n_right
        valid = np.zeros((m, d), dtype=bool)
        last = pos == counts[group] - 1
        valid[:-1] = rs[:-1] < rs[1:]
        valid[last] = False
        valid &= ((pos + 1 >= min_leaf) & (counts[group] - pos - 1 >= min_leaf))[:, None]
        score = np.where(valid, score, -np.inf)

        row_best = score.max(axis=1)
        row_feat = score.argmax(axis=1)
        pick = np.lexsort((np.arange(m), -row_best, group))[starts]
        ok = np.isfinite(row_best[pick])
        if not ok.any():
            break
        pick = pick[ok]
        split_nodes = uniq[ok]
        feats = row_feat[pick]
        src = active[order[pick, feats]]
        nxt = active[order[pick + 1, feats]]
        thr = 0.5 * (Xr[src, feats] + Xr[nxt, feats])

        n_split = len(split_nodes)
        lid = n_nodes + np.arange(n_split)
        rid = n_nodes + n_split + np.arange(n_split)
        n_nodes += 2 * n_split
        lookup = np.full(n_nodes, -1, dtype=np.intp)
        lookup[split_nodes] = np.arange(n_split)

        slot = lookup[node_of[active]]
        moving = slot >= 0
        act = active[moving]
        sl = slot[moving]
        go_left = Xr[act, feats[sl]] <= thr[sl]
        node_of[act] = np.where(go_left, lid[sl], rid[sl])

        sums = np.bincount(node_of[act] - lid[0], weights=yr[act], minlength=2 * n_split)
        cnts = np.bincount(node_of[act] - lid[0], minlength=2 * n_split)
        feature.append(np.full(2 * n_split, -1, dtype=np.intp))
        threshold.append(np.zeros(2 * n_split))
        left.append(np.full(2 * n_split, -1, dtype=np.intp))
        right.append(np.full(2 * n_split, -1, dtype=np.intp))
        value.append(sums / np.maximum(cnts, 1))

        feat_all = np.concatenate(feature)
        thr_all = np.concatenate(threshold)
        left_all = np.concatenate(left)
        right_all = np.concatenate(right)
        feat_all[split_nodes] = feats
        thr_all[split_nodes] = thr
        left_all[split_nodes] = lid
        right_all[split_nodes] = rid
        feature, threshold, left, right = [feat_all], [thr_all], [left_all], [right_all]
        value = [np.concatenate(value)]
        active = act

    return {
        "feature": np.concatenate(feature),
        "threshold": np.concatenate(threshold),
        "left": np.concatenate(left),
        "right": np.concatenate(right),
        "value": np.concatenate(value),
        "roots": roots,
    }


def _forest_predict(forest: Mapping[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    """Per-tree predictions, shape (n_samples, n_trees)."""
    feature, threshold = forest["feature"], forest["threshold"]
    left, right = forest["left"], forest["right"]
    roots = forest["roots"]
    n = X.shape[0]
    node = np.tile(roots, n)
    row = np.repeat(np.arange(n), len(roots))
    idx = np.arange(node.size)
    active = feature[node] >= 0
    while active.any():
        r = idx[active]
        nd = node[r]
        go_left = X[row[r], feature[nd]] <= threshold[nd]
        node[r] = np.where(go_left, left[nd], right[nd])
        active = feature[node] >= 0
    return forest["value"][node].reshape(n, len(roots))


# --- dispatch ------------------------------------------------------------


def fit_atomic(
    kind: ModelKind,
    X: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator | None = None,
    params: Mapping[str, float] | None = None,
) -> TrainedAtomic:
    """Train one atomic model on ``X`` (n x d) and ``y`` (n,)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"X has shape {X.shape} but y has length {y.shape[0]}")
    if X.shape[0] < 2:
        raise DegenerateData("at least two samples are required")
    p = kind.default_params
    if params:
        p.update(params)
    d = X.shape[1]
    fallback = False

    if kind is ModelKind.MEAN_BASELINE:
        state = {"value": float(y.mean())}
    elif kind is ModelKind.MAJORITY_BASELINE:
        rate = float(y.mean())
        state = {"value": rate, "label": int(rate >= 0.5)}
    elif kind is ModelKind.LINEAR_REGRESSION:
        coef, intercept, fallback = _ols(X, y)
        state = {"coef": coef, "intercept": intercept}
    elif kind is ModelKind.RIDGE_REGRESSION:
        coef, intercept = _ridge(X, y, float(p["alpha"]))
        state = {"coef": coef, "intercept": intercept}
    elif kind is ModelKind.LOGISTIC_REGRESSION:
        mean, std = _standardize_stats(X)
        w, b, _ = logistic_gd((X - mean) / std, y, int(p["epochs"]), float(p["step"]))
        state = {"mean": mean, "std": std, "coef": w, "intercept": b}
    elif kind is ModelKind.KNN:
        state = {"X": X.copy(), "y": y.copy(), "k": int(min(p["k"], X.shape[0]))}
    elif kind is ModelKind.DECISION_TREE:
        state = {"forest": _grow_forest(X, y, [np.arange(X.shape[0])], int(p["max_depth"]), int(p["min_leaf"]))}
    elif kind is ModelKind.BAGGED_TREES:
        rng = rng if rng is not None else np.random.default_rng(0)
        n = X.shape[0]
        samples = [rng.integers(0, n, n) if p["bootstrap"] else np.arange(n) for _ in range(int(p["n_trees"]))]
        state = {"forest": _grow_forest(X, y, samples, int(p["max_depth"]), int(p["min_leaf"]))}
    elif kind is ModelKind.GAUSSIAN_NB:
        eps = NB_VAR_SMOOTHING * max(float(X.var(axis=0).max()), 1.0)
        means, variances, log_priors = [], [], []
        for c in (0.0, 1.0):
            Xc = X[y == c]
            if len(Xc) == 0:
                means.append(np.zeros(d))
                variances.append(np.ones(d))
                log_priors.append(-np.inf)
                continue
            means.append(Xc.mean(axis=0))
            variances.append(Xc.var(axis=0) + eps)
            log_priors.append(np.log(len(Xc) / len(y)))
        state = {"means": np.array(means), "vars": np.array(variances), "log_priors": np.array(log_priors)}
    elif kind is ModelKind.STANDARD_SCALER:
        mean, std = _standardize_stats(X)
        state = {"mean": mean, "std": std}
    else:  # pragma: no cover
        raise ValueError(f"unsupported kind {kind}")
    return TrainedAtomic(kind, d, state, fallback)


def predict_atomic(model: TrainedAtomic, X: np.ndarray) -> np.ndarray:
    """Predict with a trained atomic model.

    Predictors return a vector; the scaler returns the transformed matrix.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatch(f"expected {model.n_features} columns, got shape {X.shape}")
    s = model.state
    kind = model.kind
    if kind in (ModelKind.MEAN_BASELINE, ModelKind.MAJORITY_BASELINE):
        return np.full(X.shape[0], s["value"])
    if kind in (ModelKind.LINEAR_REGRESSION, ModelKind.RIDGE_REGRESSION):
        return X @ s["coef"] + s["intercept"]
    if kind is ModelKind.LOGISTIC_REGRESSION:
        return expit(((X - s["mean"]) / s["std"]) @ s["coef"] + s["intercept"])
    if kind is ModelKind.KNN:
        dist = cdist(X, s["X"], "sqeuclidean")
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : s["k"]]
        return s["y"][nearest].mean(axis=1)
    if kind in (ModelKind.DECISION_TREE, ModelKind.BAGGED_TREES):
        return _forest_predict(s["forest"], X).mean(axis=1)
    if kind is ModelKind.GAUSSIAN_NB:
        means, variances = s["means"], s["vars"]
        loglik = -0.5 * (
            np.log(2 * np.pi * variances)[None, :, :] + (X[:, None, :] - means[None]) ** 2 / variances[None]
        ).sum(axis=2)
        joint = loglik + s["log_priors"][None, :]
        return expit(joint[:, 1] - joint[:, 0])
    if kind is ModelKind.STANDARD_SCALER:
        return (X - s["mean"]) / s["std"]
    raise ValueError(f"unsupported kind {kind}")  # pragma: no cover
