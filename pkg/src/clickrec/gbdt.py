"""Gradient boosted regression trees with squared loss.

Additive model: F_0 is the target mean; every iteration fits a depth-bounded
regression tree to the current residuals (the negative gradient of squared
loss), greedily choosing the split that maximizes the weighted squared
mean-difference gain.  Leaf values are residual means, so the per-tree line
search is absorbed into the leaves and a global shrinkage factor plays the
role of the per-iteration weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0
    gain: float = 0.0  # split improvement, summed into feature importance

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class TrainConfig:
    n_trees: int = 200
    shrinkage: float = 0.1
    max_depth: int | None = 4  # None = unlimited
    min_leaf: int = 10
    early_stop_patience: int | None = None  # validation MSE plateau, off by default

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must be in (0, 1]")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


@dataclass
class Ensemble:
    base: float
    trees: list[tuple[TreeNode, float]] = field(default_factory=list)
    feature_names: list[str] = field(default_factory=list)
    importance: dict[str, float] = field(default_factory=dict)  # max-normalized to 100
    train_mse: list[float] = field(default_factory=list)
    n_trees: int = 0
    shrinkage: float = 0.1


def split_gain(w_l: float, mean_l: float, w_r: float, mean_r: float) -> float:
    """Weighted squared mean-difference improvement of a binary split."""
    return w_l * w_r / (w_l + w_r) * (mean_l - mean_r) ** 2


def _best_split(X: np.ndarray, r: np.ndarray, min_leaf: int):
    """Best (gain, feature, threshold) over midpoint thresholds, or None.

    Tie-break: lowest feature index, then smallest threshold (strict-greater
    comparison while scanning features in order; within one feature the first
    maximal gain has the smallest threshold because values are sorted).
    """
    n = len(r)
    best = None
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        rs = r[order]
        csum = np.cumsum(rs)
        total = csum[-1]
        nl = np.arange(1, n)
        valid = xs[:-1] != xs[1:]
        if min_leaf > 1:
            valid &= (nl >= min_leaf) & (n - nl >= min_leaf)
        if not valid.any():
            continue
        ml = csum[:-1] / nl
        mr = (total - csum[:-1]) / (n - nl)
        gains = nl * (n - nl) / n * (ml - mr) ** 2
        gains = np.where(valid, gains, -np.inf)
        i = int(np.argmax(gains))
        g = float(gains[i])
        if g <= 0.0:
            continue
        lo, hi = float(xs[i]), float(xs[i + 1])
        thr = lo + (hi - lo) / 2.0
        if not (lo <= thr < hi):
            thr = lo  # adjacent floats: route left iff value <= lo
        if best is None or g > best[0]:
            best = (g, f, thr)
    return best


def _build_tree(
    X: np.ndarray, r: np.ndarray, depth: int, cfg: TrainConfig
) -> TreeNode:
    node = TreeNode(value=float(r.mean()))
    if cfg.max_depth is not None and depth >= cfg.max_depth:
        return node
    if len(r) < 2 * cfg.min_leaf or np.all(r == r[0]):
        return node
    found = _best_split(X, r, cfg.min_leaf)
    if found is None:
        return node
    gain, f, thr = found
    mask = X[:, f] <= thr
    node.feature = f
    node.threshold = thr
    node.gain = gain
    node.left = _build_tree(X[mask], r[mask], depth + 1, cfg)
    node.right = _build_tree(X[~mask], r[~mask], depth + 1, cfg)
    return node


def _eval_tree(root: TreeNode, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X))
    stack = [(root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        if node.is_leaf:
            out[idx] = node.value
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


def _collect_gains(root: TreeNode, raw: np.ndarray) -> None:
    if root.is_leaf:
        return
    raw[root.feature] += root.gain
    _collect_gains(root.left, raw)
    _collect_gains(root.right, raw)


def fit(
    X,
    y,
    cfg: TrainConfig | None = None,
    feature_names: list[str] | None = None,
    valid: tuple | None = None,
) -> Ensemble:
    """Train the boosted ensemble; records per-iteration training MSE.

    With early_stop_patience set and a (X_valid, y_valid) pair given,
    boosting stops once validation MSE fails to improve for that many
    consecutive iterations.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise ValueError("X must be a non-empty 2-D matrix")
    if len(X) != len(y):
        raise ValueError("X and y length mismatch")
    if len(y) < 2:
        raise ValueError("need at least 2 samples")
    names = feature_names or [f"f{i}" for i in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise ValueError("feature_names length mismatch")

    model = Ensemble(
        base=float(y.mean()),
        feature_names=list(names),
        n_trees=cfg.n_trees,
        shrinkage=cfg.shrinkage,
    )
    pred = np.full(len(y), model.base)
    if valid is not None:
        Xv = np.asarray(valid[0], dtype=np.float64)
        yv = np.asarray(valid[1], dtype=np.float64)
        pred_v = np.full(len(yv), model.base)
        best_v = float(np.mean((yv - pred_v) ** 2))
        stall = 0
    for _ in range(cfg.n_trees):
        r = y - pred
        if np.all(r == 0.0):
            model.train_mse.append(0.0)
            break
        root = _build_tree(X, r, 0, cfg)
        if root.is_leaf and root.value == 0.0:
            model.train_mse.append(float(np.mean(r**2)))
            break
        model.trees.append((root, cfg.shrinkage))
        pred = pred + cfg.shrinkage * _eval_tree(root, X)
        model.train_mse.append(float(np.mean((y - pred) ** 2)))
        if valid is not None and cfg.early_stop_patience is not None:
            pred_v = pred_v + cfg.shrinkage * _eval_tree(root, Xv)
            mse_v = float(np.mean((yv - pred_v) ** 2))
            if mse_v < best_v - 1e-12:
                best_v = mse_v
                stall = 0
            else:
                stall += 1
                if stall >= cfg.early_stop_patience:
                    break

    raw = np.zeros(X.shape[1])
    for root, _ in model.trees:
        _collect_gains(root, raw)
    peak = raw.max()
    if peak > 0:
        model.importance = {
            names[i]: float(100.0 * raw[i] / peak) for i in range(len(names))
        }
    else:
        model.importance = {n: 0.0 for n in names}
    return model


def predict(model: Ensemble, x) -> float | np.ndarray:
    """Evaluate the additive model on one vector or a matrix of rows."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != len(model.feature_names):
        raise ValueError(
            f"expected {len(model.feature_names)} features, got {arr.shape[1]}"
        )
    out = np.full(len(arr), model.base)
    for root, w in model.trees:
        out += w * _eval_tree(root, arr)
    return float(out[0]) if single else out


def rank(
    model: Ensemble,
    q1: str,
    candidates: list[tuple[str, "object"]],
    clusters: dict[str, int] | None = None,
) -> list[tuple[str, float]]:
    """Score (q2, FeatureVector) candidates and sort best-first.

    Candidates sharing q1's trivial-variant cluster are dropped before
    ranking.  Ties break on q2 to keep the order total and deterministic.
    """
    kept = []
    c1 = clusters.get(q1) if clusters else None
    for q2, fv in candidates:
        if clusters is not None and c1 is not None and clusters.get(q2) == c1:
            continue
        kept.append((q2, fv))
    if not kept:
        return []
    X = np.array([fv.values() for _, fv in kept])
    scores = predict(model, X)
    scored = [(q2, float(s)) for (q2, _), s in zip(kept, scores)]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored


def _walk_preorder(root: TreeNode):
    order = []

    def rec(node):
        order.append(node)
        if not node.is_leaf:
            rec(node.left)
            rec(node.right)

    rec(root)
    return order


def save_model(model: Ensemble, path: str) -> None:
    """Write the plain-text model file; floats use repr for exact round-trip."""
    lines = [
        f"n_trees\t{len(model.trees)}",
        f"shrinkage\t{model.shrinkage!r}",
        f"base\t{model.base!r}",
        "features\t" + "\t".join(model.feature_names),
    ]
    for t, (root, w) in enumerate(model.trees):
        nodes = _walk_preorder(root)
        ids = {id(n): i for i, n in enumerate(nodes)}
        lines.append(f"tree\t{t}\t{w!r}\t{len(nodes)}")
        for i, n in enumerate(nodes):
            if n.is_leaf:
                lines.append(f"{i}\tleaf\t{n.value!r}\t-\t-\t-")
            else:
                lines.append(
                    f"{i}\tsplit\t{n.feature}\t{n.threshold!r}"
                    f"\t{ids[id(n.left)]}\t{ids[id(n.right)]}"
                )
    lines.append("importance")
    for name in model.feature_names:
        lines.append(f"{name}\t{model.importance.get(name, 0.0)!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> Ensemble:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    it = iter(lines)
    n_trees = int(next(it).split("\t")[1])
    shrinkage = float(next(it).split("\t")[1])
    base = float(next(it).split("\t")[1])
    names = next(it).split("\t")[1:]
    model = Ensemble(
        base=base, feature_names=names, n_trees=n_trees, shrinkage=shrinkage
    )
    for _ in range(n_trees):
        _, _t, w_s, count_s = next(it).split("\t")
        raw: list[tuple] = []
        for _ in range(int(count_s)):
            parts = next(it).split("\t")
            raw.append(parts)
        nodes = [TreeNode() for _ in raw]
        for parts, node in zip(raw, nodes):
            if parts[1] == "leaf":
                node.value = float(parts[2])
            else:
                node.feature = int(parts[2])
                node.threshold = float(parts[3])
                node.left = nodes[int(parts[4])]
                node.right = nodes[int(parts[5])]
        model.trees.append((nodes[0], float(w_s)))
    assert next(it) == "importance"
    for line in it:
        name, val = line.split("\t")
        model.importance[name] = float(val)
    return model
