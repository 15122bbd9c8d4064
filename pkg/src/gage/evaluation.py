"""Downstream-task harness: node classification, link prediction, λ sweeps.

The classifier is a self-contained one-versus-rest logistic regression with
L2 regularization, trained by deterministic full-batch gradient descent with
backtracking line search, so results are bit-reproducible under a fixed
seed.  Ranking metrics (AUC, average precision) are implemented rank-based
so they stay exact for large test sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .solver import CpdFactors, EmbeddingMatrix, assemble_embeddings
from .sparse import SparseMatrix

_GRAD_TOL = 1e-6
_ARMIJO_C = 1e-4


@dataclass(frozen=True)
class LabeledSplit:
    """Disjoint train/test node indices over the labeled nodes."""

    train_idx: np.ndarray
    test_idx: np.ndarray
    shuffle_seed: tuple


@dataclass(frozen=True)
class LinkSplit:
    """Edge-removed training adjacency plus held-out positive/negative pairs."""

    train_adjacency: SparseMatrix
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: tuple


@dataclass(frozen=True)
class ClassifierWeights:
    W: np.ndarray  # (n_classes, dim)
    b: np.ndarray  # (n_classes,)
    classes: np.ndarray


def _embedding_array(E) -> np.ndarray:
    if isinstance(E, EmbeddingMatrix):
        E = E.E
    E = np.asarray(E, dtype=np.float64)
    if E.ndim != 2:
        raise ValueError("embeddings must be 2-D")
    return E


def stratified_split(labels, train_fraction: float, seed) -> LabeledSplit:
    """Shuffle-split of the labeled nodes, stratified per class.

    Every class keeps at least one training node when its size permits;
    unlabeled nodes (label < 0) are excluded entirely.
    """
    labels = np.asarray(labels)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    train, test = [], []
    labeled = np.flatnonzero(labels >= 0)
    if labeled.size == 0:
        raise ValueError("no labeled nodes")
    for c in np.unique(labels[labeled]):
        idx = labeled[labels[labeled] == c]
        idx = idx[rng.permutation(idx.size)]
        k = int(round(train_fraction * idx.size))
        k = min(max(k, 1), idx.size)
        train.extend(idx[:k])
        test.extend(idx[k:])
    if not test:
        raise ValueError("split left the test set empty")
    seed_tuple = tuple(np.atleast_1d(seed).tolist())
    return LabeledSplit(
        train_idx=np.sort(np.asarray(train, dtype=np.int64)),
        test_idx=np.sort(np.asarray(test, dtype=np.int64)),
        shuffle_seed=seed_tuple,
    )


def make_link_split(adj: SparseMatrix, removal_ratio: float, seed) -> LinkSplit:
    """Remove a fraction of edges for testing and sample matching non-edges.

    For a symmetric adjacency both mirror entries of a removed edge are
    dropped, so the training adjacency stays symmetric.  Negative test
    pairs are uniform non-edges of the *original* graph (self-loops
    excluded, no duplicates); sampling gives up with an error after
    100·|test_pos| rejected draws.
    """
    if not 0.0 < removal_ratio < 1.0:
        raise ValueError("removal_ratio must lie in (0, 1)")
    if adj.n_rows != adj.n_cols:
        raise ValueError("adjacency must be square")
    n = adj.n_rows
    rng = np.random.default_rng(seed)
    sym = adj.is_symmetric

    coo = adj._csr.tocoo()
    r, c = coo.coords
    keep_mask = r != c
    r, c = r[keep_mask], c[keep_mask]
    if sym:
        upper = r < c
        edges = np.stack([r[upper], c[upper]], axis=1)
    else:
        edges = np.stack([r, c], axis=1)
    n_edges = edges.shape[0]
    n_test = int(np.floor(removal_ratio * n_edges))

    perm = rng.permutation(n_edges)
    test_pos = edges[perm[:n_test]]
    kept = edges[perm[n_test:]]

    if sym:
        rows = np.concatenate([kept[:, 0], kept[:, 1]])
        cols = np.concatenate([kept[:, 1], kept[:, 0]])
    else:
        rows, cols = kept[:, 0], kept[:, 1]
    train = SparseMatrix.from_coo(n, n, rows, cols, np.ones(rows.size))

    edge_keys = set((edges[:, 0] * n + edges[:, 1]).tolist())
    neg: list[tuple[int, int]] = []
    neg_keys: set[int] = set()
    attempts = 0
    cap = 100 * max(n_test, 1)
    while len(neg) < n_test:
        batch = max(2 * (n_test - len(neg)), 16)
        i = rng.integers(0, n, size=batch)
        j = rng.integers(0, n, size=batch)
        attempts += batch
        if sym:
            i, j = np.minimum(i, j), np.maximum(i, j)
        for a, b in zip(i.tolist(), j.tolist()):
            if a == b:
                continue
            key = a * n + b
            if key in edge_keys or key in neg_keys:
                continue
            neg_keys.add(key)
            neg.append((a, b))
            if len(neg) == n_test:
                break
        if attempts > cap and len(neg) < n_test:
            raise RuntimeError(
                f"could not sample {n_test} non-edges after {attempts} attempts; "
                "graph too dense"
            )
    test_neg = np.asarray(neg, dtype=np.int64).reshape(n_test, 2)
    seed_tuple = tuple(np.atleast_1d(seed).tolist())
    return LinkSplit(train_adjacency=train, test_pos=test_pos.astype(np.int64),
                     test_neg=test_neg, seed=seed_tuple)


def score_pairs(E, pairs) -> np.ndarray:
    """Inner-product scores e_iᵀ·e_j for an array of (i, j) pairs."""
    E = _embedding_array(E)
    pairs = np.asarray(pairs, dtype=np.int64)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ValueError("pairs must be (m, 2)")
    if pairs.size and (pairs.min() < 0 or pairs.max() >= E.shape[0]):
        raise ValueError("pair index out of range")
    return np.sum(E[pairs[:, 0]] * E[pairs[:, 1]], axis=1)


def _midranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    sorted_x = x[order]
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores_pos, scores_neg) -> float:
    """Mann–Whitney AUC: P(s⁺ > s⁻) with ties counting one half."""
    pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    neg = np.asarray(scores_neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("auc needs nonempty positive and negative scores")
    ranks = _midranks(np.concatenate([pos, neg]))
    u = ranks[: pos.size].sum() - pos.size * (pos.size + 1) / 2.0
    return float(u / (pos.size * neg.size))


def average_precision(scores_pos, scores_neg) -> float:
    """AP = Σ_k precision@k · Δrecall@k over the descending-score ranking.

    Tie groups are averaged: items sharing a score contribute their group's
    mean relevance at every rank inside the group, making the result
    independent of within-tie ordering.
    """
    pos = np.asarray(scores_pos, dtype=np.float64).ravel()
    neg = np.asarray(scores_neg, dtype=np.float64).ravel()
    if pos.size == 0 or neg.size == 0:
        raise ValueError("average_precision needs nonempty scores")
    scores = np.concatenate([pos, neg])
    rel = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    order = np.argsort(-scores, kind="stable")
    scores, rel = scores[order], rel[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and scores[j + 1] == scores[i]:
            j += 1
        if j > i:
            rel[i : j + 1] = rel[i : j + 1].mean()
        i = j + 1
    cum = np.cumsum(rel)
    k = np.arange(1, scores.size + 1, dtype=np.float64)
    return float(np.sum((cum / k) * rel) / pos.size)


def _binary_logreg(X, y, reg: float, max_iter: int, history: list | None = None):
    """L2-regularized logistic fit by monotone descent with Armijo backtracking.

    Objective: mean log-loss + reg/(2n)·‖w‖² (bias unregularized), matching
    the usual inverse-C convention at reg = 1.  The initial trial step uses a
    safeguarded Barzilai–Borwein length; every accepted step decreases the
    objective.  ``history``, when given, collects the accepted objective
    values.
    """
    n, d = X.shape
    w = np.zeros(d + 1)

    def value(wb):
        z = X @ wb[:d] + wb[d]
        return float(
            np.mean(np.logaddexp(0.0, z) - y * z)
            + 0.5 * reg / n * np.dot(wb[:d], wb[:d])
        )

    def gradient(wb):
        z = X @ wb[:d] + wb[d]
        p = expit(z)
        g = np.empty(d + 1)
        g[:d] = X.T @ (p - y) / n + reg / n * wb[:d]
        g[d] = float(np.mean(p - y))
        return g

    f = value(w)
    g = gradient(w)
    if history is not None:
        history.append(f)
    w_prev = None
    g_prev = None
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        if gnorm < _GRAD_TOL:
            converged = True
            break
        if w_prev is None:
            t = 1.0
        else:
            s = w - w_prev
            yv = g - g_prev
            sy = float(s @ yv)
            t = float(s @ s) / sy if sy > 0 else 1.0
            t = min(max(t, 1e-12), 1e12)
        gg = gnorm * gnorm
        for _ in range(60):
            w_new = w - t * g
            f_new = value(w_new)
            if f_new <= f - _ARMIJO_C * t * gg:
                break
            t *= 0.5
        w_prev, g_prev = w, g
        w, f = w_new, f_new
        g = gradient(w)
        if history is not None:
            history.append(f)
    return w[:d], float(w[d]), n_iter, converged


def train_logreg_ovr(
    E_train, labels, reg_strength: float = 1.0, max_iter: int = 500
) -> ClassifierWeights:
    """One-versus-rest logistic regression over the training embeddings."""
    X = _embedding_array(E_train)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least two classes to train")
    W = np.empty((classes.size, X.shape[1]))
    b = np.empty(classes.size)
    for k, c in enumerate(classes):
        y = (labels == c).astype(np.float64)
        W[k], b[k], _, _ = _binary_logreg(X, y, reg_strength, max_iter)
    return ClassifierWeights(W=W, b=b, classes=classes)


def predict(weights: ClassifierWeights, X) -> np.ndarray:
    """Class labels by the maximal one-versus-rest score."""
    X = _embedding_array(X)
    scores = X @ weights.W.T + weights.b[None, :]
    return weights.classes[np.argmax(scores, axis=1)]


def logreg_loss_grad(X, y, wb, reg: float):
    """Objective value and gradient of the binary model at parameters wb.

    Exposed for verification against finite differences; ``wb`` stacks the
    weight vector and trailing bias.
    """
    X = _embedding_array(X)
    y = np.asarray(y, dtype=np.float64)
    wb = np.asarray(wb, dtype=np.float64)
    n, d = X.shape
    z = X @ wb[:d] + wb[d]
    loss = float(
        np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * reg / n * np.dot(wb[:d], wb[:d])
    )
    p = expit(z)
    g = np.empty(d + 1)
    g[:d] = X.T @ (p - y) / n + reg / n * wb[:d]
    g[d] = float(np.mean(p - y))
    return loss, g


def f1_scores(pred, truth, n_classes: int | None = None) -> tuple[float, float]:
    """(micro, macro) F1.

    Micro pools true/false positive and negative counts across classes;
    macro is the unweighted mean of per-class F1 over the full class
    universe (``range(n_classes)`` when given), so classes absent from both
    ``pred`` and ``truth`` contribute zero.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have the same length")
    if n_classes is None:
        classes = np.unique(np.concatenate([pred, truth]))
    else:
        classes = np.arange(n_classes)
    tp_sum = fp_sum = fn_sum = 0
    f1s = []
    for c in classes:
        tp = int(np.sum((pred == c) & (truth == c)))
        fp = int(np.sum((pred == c) & (truth != c)))
        fn = int(np.sum((pred != c) & (truth == c)))
        tp_sum += tp
        fp_sum += fp
        fn_sum += fn
        f1s.append(2 * tp / (2 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0)
    micro = 2 * tp_sum / (2 * tp_sum + fp_sum + fn_sum) if tp_sum + fp_sum + fn_sum else 0.0
    return float(micro), float(np.mean(f1s))


def standardize_columns(train, *others):
    """Zero-mean, unit-variance scaling fit on the training rows."""
    train = np.asarray(train, dtype=np.float64)
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 1e-12, sd, 1.0)
    out = [(train - mu) / sd]
    out.extend((np.asarray(o, dtype=np.float64) - mu) / sd for o in others)
    return out


def run_node_classification(
    E,
    labels,
    splits=(0.9, 0.5, 0.1),
    n_shuffles: int = 10,
    seed: int = 0,
    reg_strength: float = 1.0,
    max_iter: int = 500,
) -> dict:
    """Stratified shuffle evaluation of the embeddings under classification.

    For each training fraction, runs ``n_shuffles`` stratified splits; each
    shuffle standardizes the embedding dimensions on its training rows,
    fits the one-versus-rest classifier, and scores micro/macro F1 plus
    accuracy on the held-out nodes.  Shuffle s of split i draws its own
    generator from (seed, i, s), so runs are reproducible and shuffles
    independent.

    Returns a dict with per-shuffle ``rows`` and per-split ``splits``
    summaries (mean and population std of each metric — six statistics per
    split).
    """
    E = _embedding_array(E)
    labels = np.asarray(labels)
    n_classes = int(labels.max()) + 1 if labels.size else 0
    rows = []
    summaries = []
    for si, frac in enumerate(splits):
        micro, macro, acc = [], [], []
        for sh in range(n_shuffles):
            split = stratified_split(labels, frac, seed=[seed, si, sh])
            X_train, X_test = standardize_columns(
                E[split.train_idx], E[split.test_idx]
            )
            weights = train_logreg_ovr(
                X_train, labels[split.train_idx], reg_strength, max_iter
            )
            pred = predict(weights, X_test)
            truth = labels[split.test_idx]
            mi, ma = f1_scores(pred, truth, n_classes=n_classes)
            ac = float(np.mean(pred == truth))
            micro.append(mi)
            macro.append(ma)
            acc.append(ac)
            rows.append(
                {
                    "train_fraction": frac,
                    "shuffle": sh,
                    "micro_f1": mi,
                    "macro_f1": ma,
                    "accuracy": ac,
                }
            )
        summaries.append(
            {
                "train_fraction": frac,
                "micro_mean": float(np.mean(micro)),
                "micro_std": float(np.std(micro)),
                "macro_mean": float(np.mean(macro)),
                "macro_std": float(np.std(macro)),
                "accuracy_mean": float(np.mean(acc)),
                "accuracy_std": float(np.std(acc)),
            }
        )
    return {
        "rows": rows,
        "splits": summaries,
        "config": {
            "splits": list(splits),
            "n_shuffles": n_shuffles,
            "seed": seed,
            "reg_strength": reg_strength,
            "max_iter": max_iter,
            "standardized": True,
        },
    }


def evaluate_link_prediction(E, split: LinkSplit) -> tuple[float, float]:
    """(AUC, average precision) of inner-product scores on a link split."""
    s_pos = score_pairs(E, split.test_pos)
    s_neg = score_pairs(E, split.test_neg)
    return auc(s_pos, s_neg), average_precision(s_pos, s_neg)


def lambda_sweep(
    factors: CpdFactors,
    grid,
    task: str,
    *,
    labels=None,
    link_split: LinkSplit | None = None,
    split_ratio: float = 0.9,
    n_shuffles: int = 3,
    seed: int = 0,
    reg_strength: float = 1.0,
    max_iter: int = 500,
) -> list[dict]:
    """Re-assemble embeddings per mixing weight and score the chosen task.

    The decomposition is *not* re-solved: only the λ-weighted assembly and
    the downstream evaluation run per grid point.  Task ``"nc"`` reports
    mean micro/macro F1 at ``split_ratio``; task ``"lp"`` reports AUC and
    average precision on ``link_split``.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty lambda grid")
    rows = []
    for lam in grid:
        emb = assemble_embeddings(factors, float(lam))
        if task == "nc":
            if labels is None:
                raise ValueError("task 'nc' requires labels")
            rep = run_node_classification(
                emb.E,
                labels,
                splits=(split_ratio,),
                n_shuffles=n_shuffles,
                seed=seed,
                reg_strength=reg_strength,
                max_iter=max_iter,
            )
            s = rep["splits"][0]
            rows.append(
                {
                    "lam": float(lam),
                    "metric": s["micro_mean"],
                    "micro_f1": s["micro_mean"],
                    "macro_f1": s["macro_mean"],
                }
            )
        elif task == "lp":
            if link_split is None:
                raise ValueError("task 'lp' requires a link_split")
            a, ap = evaluate_link_prediction(emb.E, link_split)
            rows.append(
                {"lam": float(lam), "metric": a, "auc": a, "average_precision": ap}
            )
        else:
            raise ValueError(f"unknown task {task!r}")
    return rows


def write_rows_tsv(rows: list[dict], path) -> None:
    """Write a list of uniform dicts as a TSV with a header line."""
    if not rows:
        raise ValueError("no rows to write")
    keys = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(keys) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(row[k]) for k in keys) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)
