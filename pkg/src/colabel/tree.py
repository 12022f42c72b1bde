"""Incremental decision tree with split re-evaluation.

A streaming binary classifier over mixed categorical/numeric records.
Leaves split as soon as the best candidate's information gain beats the
runner-up by the Hoeffding bound (or the bound shrinks below a tie
threshold), and installed splits are periodically re-evaluated against
the statistics accumulated since, so an early bad choice can be replaced.

The estimator follows the familiar fit/partial_fit/predict surface and
takes records as attribute->value dicts; categorical attributes are
handled natively (multiway splits), numeric ones by binary threshold
splits with equal-frequency candidate cuts.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import AttributeSchema, CATEGORICAL, NUMERIC, Record


def hoeffding_bound(value_range: float, delta: float, n: int) -> float:
    """Confidence radius sqrt(R^2 ln(1/delta) / 2n) for an n-sample mean."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


def _entropy(neg: int, pos: int) -> float:
    n = neg + pos
    if n == 0 or neg == 0 or pos == 0:
        return 0.0
    pn, pp = neg / n, pos / n
    return -(pn * math.log2(pn) + pp * math.log2(pp))


def _should_split(best_gain: float, second_gain: float, eps: float, tie_epsilon: float) -> bool:
    return (best_gain - second_gain) > eps or eps < tie_epsilon


class _Node:
    """Tree node carrying sufficient statistics for (re-)evaluating splits."""

    __slots__ = (
        "seen", "counts", "cat", "num", "split_attr", "split_kind",
        "threshold", "children", "since_check",
    )

    def __init__(self):
        self.seen = 0
        self.counts = [0, 0]  # [negative, positive]
        self.cat: dict = {}   # attr -> {value: [neg, pos]}
        self.num: dict = {}   # attr -> ([values], [label indices])
        self.split_attr: Optional[str] = None
        self.split_kind: Optional[str] = None
        self.threshold: Optional[float] = None
        self.children = None  # {value: _Node} or [left, right]
        self.since_check = 0

    @property
    def is_leaf(self) -> bool:
        return self.split_attr is None

    def update_stats(self, x: Record, yi: int, schema: list[AttributeSchema]) -> None:
        self.seen += 1
        self.counts[yi] += 1
        for a in schema:
            v = x[a.name]
            if a.kind == CATEGORICAL:
                self.cat.setdefault(a.name, {}).setdefault(v, [0, 0])[yi] += 1
            else:
                vals, labs = self.num.setdefault(a.name, ([], []))
                vals.append(v)
                labs.append(yi)

    def route(self, x: Record, create: bool = False) -> "_Node":
        if self.split_kind == NUMERIC:
            return self.children[0] if x[self.split_attr] <= self.threshold else self.children[1]
        v = x[self.split_attr]
        child = self.children.get(v)
        if child is None:
            if not create:
                return _Node()  # value outside the domain known at split time
            child = _Node()
            self.children[v] = child
        return child

    # -- split-candidate evaluation ------------------------------------

    def categorical_gain(self, attr: str) -> float:
        stats = self.cat.get(attr)
        if not stats:
            return 0.0
        total = _entropy(*self.counts)
        n = self.seen
        cond = 0.0
        for neg, pos in stats.values():
            cond += (neg + pos) / n * _entropy(neg, pos)
        return total - cond

    def numeric_candidates(self, attr: str, max_bins: int) -> list[tuple[float, float]]:
        """(gain, threshold) per equal-frequency cut over values seen here.

        Cuts can only sit where the sorted values change, so each
        equal-frequency position snaps to the nearest value boundary
        (ties in the data would otherwise swallow the cut points).
        """
        if attr not in self.num:
            return []
        vals, labs = self.num[attr]
        n = len(vals)
        if n < 2:
            return []
        order = sorted(range(n), key=lambda i: vals[i])
        sorted_vals = [vals[i] for i in order]
        prefix_pos = [0] * (n + 1)
        for rank, i in enumerate(order):
            prefix_pos[rank + 1] = prefix_pos[rank] + labs[i]
        total_pos = prefix_pos[n]
        total_neg = n - total_pos
        total_h = _entropy(total_neg, total_pos)
        boundaries = [i for i in range(1, n) if sorted_vals[i - 1] < sorted_vals[i]]
        if not boundaries:
            return []
        if len(boundaries) <= max_bins - 1:
            positions = boundaries
        else:
            positions = set()
            for i in range(1, max_bins):
                target = (i * n) // max_bins
                positions.add(min(boundaries, key=lambda b: (abs(b - target), b)))
            positions = sorted(positions)
        out = []
        for p in positions:
            lp = prefix_pos[p]
            ln = p - lp
            rp = total_pos - lp
            rn = total_neg - ln
            gain = total_h - (p / n) * _entropy(ln, lp) - ((n - p) / n) * _entropy(rn, rp)
            thr = (sorted_vals[p - 1] + sorted_vals[p]) / 2.0
            out.append((gain, thr))
        return out

    def best_candidates(self, schema: list[AttributeSchema], max_bins: int):
        """All split candidates ranked by gain; the do-nothing option ranks
        first among ties.  Returns (ranked list, best, second_gain)."""
        cands = [(0.0, -1, None, None)]  # the null candidate
        for idx, a in enumerate(schema):
            if a.kind == CATEGORICAL:
                g = self.categorical_gain(a.name)
                cands.append((g, idx, a.name, None))
            else:
                numeric = self.numeric_candidates(a.name, max_bins)
                if numeric:
                    g, thr = max(numeric, key=lambda c: (c[0], -c[1]))
                    cands.append((g, idx, a.name, thr))
        cands.sort(key=lambda c: (-c[0], c[1]))
        best = cands[0]
        second_gain = cands[1][0] if len(cands) > 1 else 0.0
        return cands, best, second_gain


class EFDTClassifier(BaseEstimator, ClassifierMixin):
    """Streaming decision tree over attribute->value records.

    Parameters
    ----------
    schema : list of AttributeSchema
        Attribute names, kinds and categorical domains.
    labels : (negative, positive) pair
        The two class labels; ties and empty leaves fall back to the
        negative (first) label.
    delta : split-confidence parameter in (0, 1).
    n_min : records between split attempts at a leaf.
    tie_epsilon : Hoeffding-bound threshold below which ties split anyway.
    reeval_period : records between split re-evaluations at internal nodes.
    laplace : additive smoothing for leaf class frequencies.
    max_bins : cap on equal-frequency candidate cuts per numeric attribute.
    """

    def __init__(self, schema=None, labels=("-", "+"), delta=1e-5, n_min=30,
                 tie_epsilon=0.05, reeval_period=100, laplace=1.0, max_bins=16):
        self.schema = schema
        self.labels = labels
        self.delta = delta
        self.n_min = n_min
        self.tie_epsilon = tie_epsilon
        self.reeval_period = reeval_period
        self.laplace = laplace
        self.max_bins = max_bins
        self._validate_params()
        self._reset()

    def _validate_params(self):
        if not (0 < self.delta < 1):
            raise ValueError("delta must be in (0, 1)")
        if self.n_min < 1 or self.reeval_period < 1:
            raise ValueError("n_min and reeval_period must be >= 1")
        if self.tie_epsilon < 0 or self.laplace < 0:
            raise ValueError("tie_epsilon and laplace must be >= 0")
        if len(self.labels) != 2:
            raise ValueError("exactly two class labels required")

    def _reset(self):
        self._root = _Node()
        self._trained = 0

    # -- scikit-learn surface -------------------------------------------

    @property
    def classes_(self):
        return np.asarray(self.labels)

    def fit(self, X, y):
        """Train from scratch on records in the given arrival order."""
        X, y = list(X), list(y)
        if len(X) != len(y):
            raise ValueError(f"X and y length mismatch: {len(X)} vs {len(y)}")
        self._reset()
        return self.partial_fit(X, y)

    def partial_fit(self, X, y):
        for xi, yi in zip(X, y):
            self.learn_one(xi, yi)
        return self

    def predict(self, X):
        return np.asarray([self.predict_one(x)[0] for x in X])

    def predict_proba(self, X):
        return np.asarray([self._leaf_probs(x) for x in X])

    # -- single-record operations ---------------------------------------

    def _label_index(self, y) -> int:
        try:
            return self.labels.index(y)
        except ValueError:
            raise ValueError(f"unknown label {y!r}, expected one of {self.labels}")

    def _leaf_probs(self, x: Record):
        node = self._root
        while not node.is_leaf:
            node = node.route(x)
        neg, pos = node.counts
        denom = neg + pos + 2 * self.laplace
        if denom == 0:
            return (0.5, 0.5)
        return ((neg + self.laplace) / denom, (pos + self.laplace) / denom)

    def predict_one(self, x: Record):
        """Return (label, confidence); ties and empty leaves yield the negative label."""
        p_neg, p_pos = self._leaf_probs(x)
        if p_pos > p_neg:
            return self.labels[1], p_pos
        return self.labels[0], p_neg

    def confidence(self, x: Record, label) -> float:
        """Smoothed leaf frequency of a specific label at x's leaf."""
        probs = self._leaf_probs(x)
        return probs[self._label_index(label)]

    def learn_one(self, x: Record, y) -> "EFDTClassifier":
        """Absorb one labeled record, updating statistics along its path."""
        yi = self._label_index(y)
        self._trained += 1
        node = self._root
        while True:
            node.update_stats(x, yi, self.schema)
            node.since_check += 1
            if node.is_leaf:
                if node.since_check >= self.n_min:
                    node.since_check = 0
                    self._attempt_split(node)
                return self
            if node.since_check >= self.reeval_period:
                node.since_check = 0
                self._reevaluate_split(node)
                if node.is_leaf:
                    return self
            node = node.route(x, create=True)

    # -- structural changes ----------------------------------------------

    def _attempt_split(self, node: _Node) -> None:
        if node.counts[0] == 0 or node.counts[1] == 0:
            return
        _, best, second_gain = node.best_candidates(self.schema, self.max_bins)
        gain, _, attr, thr = best
        if attr is None:
            return
        eps = hoeffding_bound(1.0, self.delta, node.seen)
        if _should_split(gain, second_gain, eps, self.tie_epsilon):
            self._install_split(node, attr, thr)

    def _install_split(self, node: _Node, attr: str, threshold: Optional[float]) -> None:
        kind = next(a.kind for a in self.schema if a.name == attr)
        node.split_attr = attr
        node.split_kind = kind
        node.since_check = 0
        if kind == NUMERIC:
            node.threshold = threshold
            node.children = [_Node(), _Node()]
        else:
            node.threshold = None
            domain = next(a.domain for a in self.schema if a.name == attr)
            values = list(domain) if domain else sorted(node.cat.get(attr, {}))
            node.children = {v: _Node() for v in values}

    def _current_split_gain(self, node: _Node) -> float:
        if node.split_kind == CATEGORICAL:
            return node.categorical_gain(node.split_attr)
        vals, labs = node.num.get(node.split_attr, ([], []))
        n = len(vals)
        if n == 0:
            return 0.0
        pos_left = neg_left = pos_right = neg_right = 0
        for v, li in zip(vals, labs):
            if v <= node.threshold:
                if li:
                    pos_left += 1
                else:
                    neg_left += 1
            elif li:
                pos_right += 1
            else:
                neg_right += 1
        nl, nr = neg_left + pos_left, neg_right + pos_right
        total_h = _entropy(*node.counts)
        return (total_h
                - (nl / n) * _entropy(neg_left, pos_left)
                - (nr / n) * _entropy(neg_right, pos_right))

    def _reevaluate_split(self, node: _Node) -> None:
        """Replace or retract an installed split that the statistics no
        longer justify.  Children restart empty on any change."""
        cands, _, _ = node.best_candidates(self.schema, self.max_bins)
        current_gain = self._current_split_gain(node)
        eps = hoeffding_bound(1.0, self.delta, node.seen)
        for gain, _, attr, thr in cands:
            same = (attr == node.split_attr and
                    (node.split_kind == CATEGORICAL or thr == node.threshold))
            if same:
                continue
            if gain - current_gain > eps:
                if attr is None:
                    node.split_attr = node.split_kind = node.threshold = None
                    node.children = None
                else:
                    self._install_split(node, attr, thr)
                return
            break  # candidates are ranked; the first non-current decides

    # -- inspection --------------------------------------------------------

    @property
    def records_trained(self) -> int:
        return self._trained

    @property
    def is_empty(self) -> bool:
        return self._root.is_leaf and self._root.seen == 0

    def decision_path(self, x: Record) -> tuple[list[tuple[str, str, object]], tuple[int, int]]:
        """Tests applied while routing x, plus the reached leaf's counts.

        Each step is (attribute, operator, value) with operator one of
        "=", "<=", ">".  An empty tree yields an empty path.
        """
        steps = []
        node = self._root
        while not node.is_leaf:
            if node.split_kind == NUMERIC:
                op = "<=" if x[node.split_attr] <= node.threshold else ">"
                steps.append((node.split_attr, op, node.threshold))
            else:
                steps.append((node.split_attr, "=", x[node.split_attr]))
            node = node.route(x)
        return steps, tuple(node.counts)

    def export_structure(self) -> dict:
        """Nested, lossless description of the routing structure."""
        return self._export(self._root)

    def _export(self, node: _Node) -> dict:
        if node.is_leaf:
            return {"kind": "leaf", "counts": {self.labels[0]: node.counts[0],
                                               self.labels[1]: node.counts[1]}}
        out = {"kind": "split", "attribute": node.split_attr,
               "counts": {self.labels[0]: node.counts[0], self.labels[1]: node.counts[1]}}
        if node.split_kind == NUMERIC:
            out["test"] = {"type": "numeric", "threshold": node.threshold}
            out["children"] = {"le": self._export(node.children[0]),
                               "gt": self._export(node.children[1])}
        else:
            out["test"] = {"type": "categorical"}
            out["children"] = {str(v): self._export(node.children[v])
                               for v in sorted(node.children, key=str)}
        return out

    def render_text(self) -> str:
        """One node per line, stable ordering; shared verbatim with clients."""
        lines: list[str] = []
        self._render(self._root, "", lines)
        return "\n".join(lines)

    def _render(self, node: _Node, indent: str, lines: list[str], prefix: str = "") -> None:
        counts = f"[{self.labels[0]}:{node.counts[0]} {self.labels[1]}:{node.counts[1]}]"
        if node.is_leaf:
            label = self.predict_from_counts(node.counts)
            lines.append(f"{indent}{prefix}leaf {counts} -> {label}")
            return
        lines.append(f"{indent}{prefix}split on {node.split_attr} {counts}")
        child_indent = indent + "  "
        if node.split_kind == NUMERIC:
            self._render(node.children[0], child_indent, lines,
                         f"{node.split_attr} <= {node.threshold}: ")
            self._render(node.children[1], child_indent, lines,
                         f"{node.split_attr} > {node.threshold}: ")
        else:
            for v in sorted(node.children, key=str):
                self._render(node.children[v], child_indent, lines,
                             f"{node.split_attr} = {v}: ")

    def predict_from_counts(self, counts) -> str:
        neg, pos = counts
        denom = neg + pos + 2 * self.laplace
        if denom == 0 or (pos + self.laplace) <= (neg + self.laplace):
            return self.labels[0]
        return self.labels[1]

    def leaf_count_sum(self) -> int:
        """Total records held at leaves (structure-change epochs reset children)."""
        total = 0
        stack = [self._root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                total += node.counts[0] + node.counts[1]
            elif node.split_kind == NUMERIC:
                stack.extend(node.children)
            else:
                stack.extend(node.children.values())
        return total

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "params": {
                "delta": self.delta, "n_min": self.n_min,
                "tie_epsilon": self.tie_epsilon, "reeval_period": self.reeval_period,
                "laplace": self.laplace, "max_bins": self.max_bins,
            },
            "schema": [{"name": a.name, "kind": a.kind, "domain": list(a.domain)}
                       for a in self.schema],
            "trained": self._trained,
            "root": _node_to_dict(self._root),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EFDTClassifier":
        schema = [AttributeSchema(a["name"], a["kind"], tuple(a["domain"]))
                  for a in raw["schema"]]
        model = cls(schema=schema, labels=tuple(raw["labels"]), **raw["params"])
        model._trained = raw["trained"]
        model._root = _node_from_dict(raw["root"])
        return model


def _node_to_dict(node: _Node) -> dict:
    out = {
        "seen": node.seen,
        "counts": list(node.counts),
        "cat": {a: {str(v): list(c) for v, c in vals.items()} for a, vals in node.cat.items()},
        "num": {a: [list(vals), list(labs)] for a, (vals, labs) in node.num.items()},
        "since_check": node.since_check,
    }
    if not node.is_leaf:
        out["split"] = {"attribute": node.split_attr, "kind": node.split_kind,
                        "threshold": node.threshold}
        if node.split_kind == NUMERIC:
            out["children"] = [_node_to_dict(c) for c in node.children]
        else:
            out["children"] = {str(v): _node_to_dict(c) for v, c in node.children.items()}
    return out


def _node_from_dict(raw: dict) -> _Node:
    node = _Node()
    node.seen = raw["seen"]
    node.counts = list(raw["counts"])
    node.cat = {a: {v: list(c) for v, c in vals.items()} for a, vals in raw["cat"].items()}
    node.num = {a: (list(pair[0]), list(pair[1])) for a, pair in raw["num"].items()}
    node.since_check = raw["since_check"]
    if "split" in raw:
        node.split_attr = raw["split"]["attribute"]
        node.split_kind = raw["split"]["kind"]
        node.threshold = raw["split"]["threshold"]
        if node.split_kind == NUMERIC:
            node.children = [_node_from_dict(c) for c in raw["children"]]
        else:
            node.children = {v: _node_from_dict(c) for v, c in raw["children"].items()}
    return node


def retrain_from_scratch(model: EFDTClassifier, X, y) -> EFDTClassifier:
    """Fresh tree with the same parameters, trained on (X, y) in order."""
    fresh = EFDTClassifier(
        schema=model.schema, labels=model.labels, delta=model.delta,
        n_min=model.n_min, tie_epsilon=model.tie_epsilon,
        reeval_period=model.reeval_period, laplace=model.laplace,
        max_bins=model.max_bins,
    )
    return fresh.fit(X, y)
