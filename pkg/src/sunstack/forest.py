"""Bagged CART regression forest, grown from scratch.

Trees minimize sum-of-squared-error about the node mean, split at midpoints
between consecutive distinct sorted feature values, and break score ties by
lowest feature index then lowest threshold.  Each tree draws its bootstrap
sample and per-node feature subsets from a private stream keyed by
(random_state, tree index), so a fit is reproducible for a fixed seed no
matter how many worker threads build it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin

from .validation import (
    ConfigurationError,
    ParseError,
    SchemaError,
    as_float_array,
    check_lengths_match,
    open_for_write,
)

# Split-score comparisons use this relative slack: a candidate must beat the
# incumbent by more than SPLIT_TOL * max(1, node SSE) to displace it, which
# pins tie-breaking to (feature index, threshold) order for reproducibility.
SPLIT_TOL = 1e-10

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True, inline="always")
def _splitmix64(state):
    state = state + _U64_GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
    z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
    z = z ^ (z >> np.uint64(31))
    return state, z


@njit(cache=True, nogil=True)
def _scan_feature(X, y, idx, start, end, f, min_leaf, s, gate, best):
    """Scan one feature's candidate thresholds for the segment.

    ``best`` is (decrease, feature, threshold); returns it updated.  The scan
    walks positions in sorted value order and scores the SSE decrease of a
    cut between consecutive distinct values via prefix sums.
    """
    m = end - start
    vals = np.empty(m)
    for k in range(m):
        vals[k] = X[idx[start + k], f]
    order = np.argsort(vals)
    sl = 0.0
    best_dec, best_f, best_thr = best
    for k in range(1, m):
        prev = vals[order[k - 1]]
        sl += y[idx[start + order[k - 1]]]
        cur = vals[order[k]]
        if prev == cur:
            continue
        if k < min_leaf or m - k < min_leaf:
            continue
        sr = s - sl
        dec = sl * sl / k + sr * sr / (m - k) - s * s / m
        if dec > best_dec + gate:
            thr = 0.5 * (prev + cur)
            if thr >= cur:
                # adjacent floats collapse the midpoint; cut right after prev
                thr = prev
            best_dec = dec
            best_f = f
            best_thr = thr
    return best_dec, best_f, best_thr


@njit(cache=True, nogil=True)
def _grow_tree(X, y, boot_idx, max_features, min_leaf, rng_seed, use_subsets):
    n = boot_idx.shape[0]
    p = X.shape[1]

    # Materialize the bootstrap sample column-major and presort each feature
    # once.  pos[f, start:end] always lists a node's rows in ascending
    # cols[f] order; splits re-partition these arrays stably instead of
    # re-sorting per node, so growth costs O(p * n * depth) with no sorts
    # below the root.
    cols = np.empty((p, n))
    yb = np.empty(n)
    for i in range(n):
        bi = boot_idx[i]
        yb[i] = y[bi]
        for f in range(p):
            cols[f, i] = X[bi, f]
    pos = np.empty((p, n), np.int32)
    for f in range(p):
        pos[f] = np.argsort(cols[f]).astype(np.int32)

    max_nodes = 2 * n + 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    decrease = np.zeros(max_nodes)
    n_node = np.zeros(max_nodes, np.int64)
    value = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)

    is_left = np.zeros(n, np.bool_)
    rbuf = np.empty(n, np.int32)
    feat_pool = np.arange(p)
    chosen = np.empty(max_features, np.int64)
    state = rng_seed

    # DFS stack of segments; children get ids in preorder, left first.
    st_start = np.empty(max_nodes, np.int64)
    st_end = np.empty(max_nodes, np.int64)
    st_parent = np.empty(max_nodes, np.int64)
    st_isleft = np.empty(max_nodes, np.int64)
    top = 0
    st_start[top] = 0
    st_end[top] = n
    st_parent[top] = -1
    st_isleft[top] = 0
    top += 1
    count = 0

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        parent = st_parent[top]
        isleft = st_isleft[top]
        node = count
        count += 1
        if parent >= 0:
            if isleft == 1:
                left[parent] = node
            else:
                right[parent] = node

        m = end - start
        s = 0.0
        s2 = 0.0
        for k in range(start, end):
            yv = yb[pos[0, k]]
            s += yv
            s2 += yv * yv
        n_node[node] = m
        value[node] = s / m
        sse = s2 - s * s / m
        gate = SPLIT_TOL * max(1.0, sse)

        best_dec = 0.0
        best_f = -1
        best_thr = 0.0
        if m >= 2 * min_leaf:
            if use_subsets:
                n_scan = max_features
                for k in range(max_features):
                    state, z = _splitmix64(state)
                    r = k + np.int64(z % np.uint64(p - k))
                    tmp = feat_pool[k]
                    feat_pool[k] = feat_pool[r]
                    feat_pool[r] = tmp
                    chosen[k] = feat_pool[k]
                chosen[:max_features].sort()
            else:
                n_scan = p
            base = s * s / m
            for c in range(n_scan):
                f = chosen[c] if use_subsets else c
                sl = 0.0
                jprev = pos[f, start]
                vprev = cols[f, jprev]
                for k in range(start + 1, end):
                    jcur = pos[f, k]
                    sl += yb[jprev]
                    vcur = cols[f, jcur]
                    if vprev != vcur:
                        kk = k - start
                        if kk >= min_leaf and m - kk >= min_leaf:
                            sr = s - sl
                            dec = sl * sl / kk + sr * sr / (m - kk) - base
                            if dec > best_dec + gate:
                                thr = 0.5 * (vprev + vcur)
                                if thr >= vcur:
                                    # adjacent floats collapse the midpoint
                                    thr = vprev
                                best_dec = dec
                                best_f = f
                                best_thr = thr
                    jprev = jcur
                    vprev = vcur

        if best_f < 0:
            continue

        feature[node] = best_f
        threshold[node] = best_thr
        decrease[node] = best_dec
        nl = 0
        for k in range(start, end):
            row = pos[best_f, k]
            if cols[best_f, row] <= best_thr:
                is_left[row] = True
                nl += 1
            else:
                is_left[row] = False
        for f in range(p):
            if f == best_f:
                continue  # already partitioned: sorted by the split value
            li = start
            ri = 0
            for k in range(start, end):
                row = pos[f, k]
                if is_left[row]:
                    pos[f, li] = row
                    li += 1
                else:
                    rbuf[ri] = row
                    ri += 1
            for k in range(ri):
                pos[f, li + k] = rbuf[k]
        mid = start + nl
        # push right first so the left child is processed (numbered) next
        st_start[top] = mid
        st_end[top] = end
        st_parent[top] = node
        st_isleft[top] = 0
        top += 1
        st_start[top] = start
        st_end[top] = mid
        st_parent[top] = node
        st_isleft[top] = 1
        top += 1

    return (
        feature[:count].copy(),
        threshold[:count].copy(),
        decrease[:count].copy(),
        n_node[:count].copy(),
        value[:count].copy(),
        left[:count].copy(),
        right[:count].copy(),
    )


@njit(cache=True, nogil=True)
def _predict_tree(feature, threshold, left, right, value, X, out):
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] += value[node]


@dataclass
class Tree:
    """One grown CART tree, stored as parallel node arrays in preorder."""

    feature: np.ndarray
    threshold: np.ndarray
    decrease: np.ndarray
    n_node: np.ndarray
    value: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        _predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X, out
        )
        return out

    def add_predictions(self, X: np.ndarray, out: np.ndarray) -> None:
        _predict_tree(
            self.feature, self.threshold, self.left, self.right, self.value, X, out
        )


def best_split(X, y, feature_indices=None, min_leaf: int = 1):
    """Best single split of (X, y): ``(feature, threshold, decrease)``.

    Returns None when no cut with positive SSE decrease leaves at least
    ``min_leaf`` rows on each side.  Shares the scan kernel with tree
    growing, so its tie-breaking matches grown trees exactly.
    """
    X = as_float_array(X, "X", ndim=2)
    y = as_float_array(y, "y", ndim=1)
    check_lengths_match(X=X, y=y)
    if feature_indices is None:
        feats = np.arange(X.shape[1], dtype=np.int64)
    else:
        feats = np.asarray(sorted(int(f) for f in feature_indices), dtype=np.int64)
        if len(feats) and (feats[0] < 0 or feats[-1] >= X.shape[1]):
            raise SchemaError(f"feature index out of range for {X.shape[1]} columns")
    n = len(y)
    if n < 2 * min_leaf or n < 2:
        return None
    idx = np.arange(n, dtype=np.int64)
    s = float(y.sum())
    s2 = float(y @ y)
    sse = s2 - s * s / n
    gate = SPLIT_TOL * max(1.0, sse)
    best = (0.0, -1, 0.0)
    for f in feats:
        best = _scan_feature(X, y, idx, 0, n, int(f), int(min_leaf), s, gate, best)
    dec, f, thr = best
    if f < 0:
        return None
    return int(f), float(thr), float(dec)


def grow_tree(
    X,
    y,
    bootstrap_indices,
    max_features: int,
    min_leaf: int,
    tree_rng: np.random.Generator,
) -> Tree:
    """Grow one CART tree on the given bootstrap sample."""
    X = as_float_array(X, "X", ndim=2)
    y = as_float_array(y, "y", ndim=1)
    boot = np.asarray(bootstrap_indices, dtype=np.int64)
    if len(boot) == 0:
        raise SchemaError("empty bootstrap sample")
    if boot.min() < 0 or boot.max() >= len(y):
        raise SchemaError("bootstrap index out of range")
    p = X.shape[1]
    if not 1 <= max_features <= p:
        raise ConfigurationError(f"max_features must be in [1, {p}], got {max_features}")
    if min_leaf < 1:
        raise ConfigurationError(f"min_leaf must be >= 1, got {min_leaf}")
    seed = np.uint64(tree_rng.integers(0, np.iinfo(np.int64).max))
    use_subsets = max_features < p
    arrays = _grow_tree(
        X, y, boot, int(max_features), int(min_leaf), seed, use_subsets
    )
    return Tree(*arrays)


class RandomForestRegressor(BaseEstimator, RegressorMixin):
    """Bagging ensemble of CART regression trees.

    ``max_features=None`` resolves to ceil(n_features / 3) at fit time.  The
    prediction for a query is the plain mean of the per-tree outputs, so it
    can never leave the range of the training targets.
    """

    def __init__(
        self,
        n_trees: int = 300,
        max_features: int | None = None,
        min_samples_leaf: int = 5,
        random_state: int | None = None,
        n_jobs: int = 1,
        compute_oob: bool = True,
    ):
        self.n_trees = n_trees
        self.max_features = max_features
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.compute_oob = compute_oob

    def fit(self, X, y):
        X = as_float_array(X, "X", ndim=2)
        y = as_float_array(y, "y", ndim=1)
        check_lengths_match(X=X, y=y)
        n, p = X.shape
        if n == 0:
            raise SchemaError("cannot fit on an empty training set")
        if self.n_trees < 1:
            raise ConfigurationError(f"n_trees must be >= 1, got {self.n_trees}")
        m = self.max_features
        if m is None:
            m = int(np.ceil(p / 3))
        if not 1 <= m <= p:
            raise ConfigurationError(f"max_features must be in [1, {p}], got {m}")
        if self.min_samples_leaf < 1:
            raise ConfigurationError(
                f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}"
            )
        X = np.ascontiguousarray(X)
        self.n_features_in_ = p
        self.max_features_ = m

        children = np.random.SeedSequence(self.random_state).spawn(self.n_trees)
        inbag = np.zeros((self.n_trees, n), dtype=bool) if self.compute_oob else None

        def build(t: int) -> Tree:
            rng = np.random.default_rng(children[t])
            boot = rng.integers(0, n, size=n)
            if inbag is not None:
                inbag[t, boot] = True
            return grow_tree(X, y, boot, m, self.min_samples_leaf, rng)

        jobs = max(1, int(self.n_jobs))
        if jobs == 1:
            self.trees_ = [build(t) for t in range(self.n_trees)]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                self.trees_ = list(pool.map(build, range(self.n_trees)))

        self.feature_importances_ = self._importances()
        if self.compute_oob:
            self._fill_oob(X, y, inbag)
        else:
            self.oob_rmse_ = float("nan")
        return self

    def _importances(self) -> np.ndarray:
        total = np.zeros(self.n_features_in_)
        for tree in self.trees_:
            split = tree.feature >= 0
            n_total = tree.n_node[0]
            contrib = tree.decrease[split] * (tree.n_node[split] / n_total)
            np.add.at(total, tree.feature[split], contrib)
        total /= len(self.trees_)
        sum_ = total.sum()
        return total / sum_ if sum_ > 0 else total

    def _fill_oob(self, X: np.ndarray, y: np.ndarray, inbag: np.ndarray) -> None:
        n = len(y)
        sums = np.zeros(n)
        counts = np.zeros(n, dtype=np.int64)
        # Reduction runs in tree order after all builds, so the result does
        # not depend on worker scheduling.
        for t, tree in enumerate(self.trees_):
            out_rows = np.flatnonzero(~inbag[t])
            if len(out_rows) == 0:
                continue
            sums[out_rows] += tree.predict(X[out_rows])
            counts[out_rows] += 1
        covered = counts > 0
        self.oob_prediction_ = np.full(n, np.nan)
        self.oob_prediction_[covered] = sums[covered] / counts[covered]
        if covered.any():
            resid = self.oob_prediction_[covered] - y[covered]
            self.oob_rmse_ = float(np.sqrt(np.mean(resid * resid)))
        else:
            self.oob_rmse_ = float("nan")

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(as_float_array(X, "X", ndim=2))
        if not hasattr(self, "trees_"):
            raise RuntimeError("forest is not fitted")
        if X.shape[1] != self.n_features_in_:
            raise SchemaError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        acc = np.zeros(X.shape[0])
        for tree in self.trees_:
            tree.add_predictions(X, acc)
        return acc / len(self.trees_)


def save_forest(est: RandomForestRegressor, path, feature_names=None, extra=None) -> None:
    """Write a fitted forest as line-oriented text, losslessly."""
    if not hasattr(est, "trees_"):
        raise RuntimeError("forest is not fitted")
    lines = [
        f"n_trees={len(est.trees_)}",
        f"max_features={est.max_features_}",
        f"min_samples_leaf={est.min_samples_leaf}",
        f"n_features={est.n_features_in_}",
    ]
    if est.random_state is not None:
        lines.append(f"random_state={est.random_state}")
    if feature_names is not None:
        if len(feature_names) != est.n_features_in_:
            raise SchemaError("feature_names length does not match the forest")
        lines.append("features=" + ",".join(feature_names))
    for key, val in (extra or {}).items():
        if "=" in key or "\n" in str(val):
            raise ValueError(f"unserializable extra entry {key!r}")
        lines.append(f"x:{key}={val}")
    for t, tree in enumerate(est.trees_):
        lines.append(f"tree={t}")
        for i in range(tree.n_nodes):
            if tree.feature[i] >= 0:
                lines.append(
                    f"s,{int(tree.feature[i])},{float(tree.threshold[i])!r},"
                    f"{float(tree.decrease[i])!r},{int(tree.n_node[i])}"
                )
            else:
                lines.append(f"l,{float(tree.value[i])!r},{int(tree.n_node[i])}")
    with open_for_write(path) as fh:
        fh.write("\n".join(lines) + "\n")


def load_forest(path):
    """Read a forest file; returns (estimator, feature_names, extra)."""
    header: dict[str, str] = {}
    extra: dict[str, str] = {}
    tree_rows: list[list[str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("tree="):
                tree_rows.append([])
            elif line.startswith(("s,", "l,")):
                if not tree_rows:
                    raise ParseError("node line before any tree header", lineno)
                tree_rows[-1].append(line)
            elif line.startswith("x:"):
                key, _, val = line[2:].partition("=")
                extra[key] = val
            elif "=" in line:
                key, _, val = line.partition("=")
                header[key] = val
            else:
                raise ParseError(f"unrecognized line {line!r}", lineno)
    try:
        n_trees = int(header["n_trees"])
        max_features = int(header["max_features"])
        min_leaf = int(header["min_samples_leaf"])
        n_features = int(header["n_features"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad or missing forest header: {exc}") from None
    if len(tree_rows) != n_trees:
        raise ParseError(f"expected {n_trees} trees, found {len(tree_rows)}")

    est = RandomForestRegressor(
        n_trees=n_trees,
        max_features=max_features,
        min_samples_leaf=min_leaf,
        random_state=int(header["random_state"]) if "random_state" in header else None,
    )
    est.n_features_in_ = n_features
    est.max_features_ = max_features
    est.trees_ = [_parse_tree(rows) for rows in tree_rows]
    est.feature_importances_ = est._importances()
    est.oob_rmse_ = float("nan")
    names = header.get("features")
    feature_names = names.split(",") if names is not None else None
    return est, feature_names, extra


def _parse_tree(rows: list[str]) -> Tree:
    # Preorder of a full binary tree is uniquely decodable with a stack of
    # internal nodes still missing children.
    feature, threshold, decrease, n_node, value, left, right = [], [], [], [], [], [], []
    open_nodes: list[int] = []
    for row in rows:
        parts = row.split(",")
        me = len(feature)
        if me > 0 and not open_nodes:
            raise ParseError(f"trailing node line after a complete tree: {row!r}")
        if open_nodes:
            top = open_nodes[-1]
            if left[top] == -1:
                left[top] = me
            else:
                right[top] = me
                open_nodes.pop()
        if parts[0] == "s":
            if len(parts) != 5:
                raise ParseError(f"bad split line {row!r}")
            feature.append(int(parts[1]))
            threshold.append(float(parts[2]))
            decrease.append(float(parts[3]))
            n_node.append(int(parts[4]))
            value.append(np.nan)
            left.append(-1)
            right.append(-1)
            open_nodes.append(me)
        else:
            if len(parts) != 3:
                raise ParseError(f"bad leaf line {row!r}")
            feature.append(-1)
            threshold.append(0.0)
            decrease.append(0.0)
            n_node.append(int(parts[2]))
            value.append(float(parts[1]))
            left.append(-1)
            right.append(-1)
    if not feature:
        raise ParseError("tree block with no node lines")
    if open_nodes:
        raise ParseError("truncated tree: ran out of node lines")
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold),
        decrease=np.asarray(decrease),
        n_node=np.asarray(n_node, dtype=np.int64),
        value=np.asarray(value),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
    )
