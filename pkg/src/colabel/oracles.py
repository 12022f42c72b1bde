"""Batch classifiers that stand in for human expertise in simulations.

Both work directly on attribute->value records: a mixed Naive Bayes
(Laplace-smoothed frequencies for categoricals, per-class Gaussians for
numerics) and a k-nearest-neighbors voter under Gower distance.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .data import AttributeSchema, CATEGORICAL, NUMERIC, Record

_VAR_FLOOR = 1e-9


class MixedNaiveBayes(BaseEstimator, ClassifierMixin):
    """Gaussian/categorical Naive Bayes over schema-typed records."""

    def __init__(self, schema=None, labels=("-", "+"), alpha=1.0):
        self.schema = schema
        self.labels = labels
        self.alpha = alpha

    @property
    def classes_(self):
        return np.asarray(self.labels)

    def fit(self, X, y):
        X, y = list(X), list(y)
        if not X:
            raise ValueError("empty training set")
        self.priors_ = {}
        self.cat_logprob_ = {}   # (label, attr) -> {value: logprob}
        self.gauss_ = {}         # (label, attr) -> (mean, var)
        n = len(X)
        for label in self.labels:
            rows = [x for x, yy in zip(X, y) if yy == label]
            self.priors_[label] = len(rows) / n
            for a in self.schema:
                if a.kind == CATEGORICAL:
                    counts = {v: 0 for v in a.domain}
                    for x in rows:
                        counts[x[a.name]] = counts.get(x[a.name], 0) + 1
                    total = len(rows) + self.alpha * max(1, len(counts))
                    self.cat_logprob_[(label, a.name)] = {
                        v: math.log((c + self.alpha) / total) for v, c in counts.items()
                    }
                else:
                    vals = [float(x[a.name]) for x in rows]
                    if vals:
                        mean = sum(vals) / len(vals)
                        var = sum((v - mean) ** 2 for v in vals) / len(vals)
                    else:
                        mean, var = 0.0, 1.0
                    self.gauss_[(label, a.name)] = (mean, max(var, _VAR_FLOOR))
        return self

    def _log_joint(self, x: Record, label) -> float:
        prior = self.priors_[label]
        if prior == 0.0:
            return -math.inf
        score = math.log(prior)
        for a in self.schema:
            if a.kind == CATEGORICAL:
                table = self.cat_logprob_[(label, a.name)]
                default = math.log(self.alpha / (self.alpha * max(1, len(table) + 1)))
                score += table.get(x[a.name], default)
            else:
                mean, var = self.gauss_[(label, a.name)]
                v = float(x[a.name])
                score += -0.5 * math.log(2 * math.pi * var) - (v - mean) ** 2 / (2 * var)
        return score

    def predict_one(self, x: Record):
        scores = [self._log_joint(x, label) for label in self.labels]
        # ties go to the first (negative) label
        best = max(range(len(scores)), key=lambda i: (scores[i], -i))
        return self.labels[best]

    def predict(self, X):
        return np.asarray([self.predict_one(x) for x in X])

    def predict_proba(self, X):
        out = []
        for x in X:
            logs = np.array([self._log_joint(x, label) for label in self.labels])
            logs -= logs.max()
            p = np.exp(logs)
            out.append(p / p.sum())
        return np.asarray(out)


class GowerKNN(BaseEstimator, ClassifierMixin):
    """Majority vote over the k Gower-nearest training records.

    Distance ties are broken toward the lower training index, vote ties
    toward the negative (first) label.
    """

    def __init__(self, schema=None, labels=("-", "+"), k=5):
        self.schema = schema
        self.labels = labels
        self.k = k

    @property
    def classes_(self):
        return np.asarray(self.labels)

    def fit(self, X, y):
        X, y = list(X), list(y)
        if not X:
            raise ValueError("empty training set")
        if self.k < 1 or self.k > len(X):
            raise ValueError(f"k={self.k} out of range for {len(X)} training records")
        self._cat_attrs = [a.name for a in self.schema if a.kind == CATEGORICAL]
        self._num_attrs = [a.name for a in self.schema if a.kind == NUMERIC]
        self._num_ranges = np.array(
            [max(a.numeric_range, 0.0) or 1.0 for a in self.schema if a.kind == NUMERIC]
        )
        self._cat_matrix = np.array(
            [[x[a] for a in self._cat_attrs] for x in X], dtype=object
        ) if self._cat_attrs else np.empty((len(X), 0), dtype=object)
        self._num_matrix = np.array(
            [[float(x[a]) for a in self._num_attrs] for x in X], dtype=float
        ) if self._num_attrs else np.empty((len(X), 0), dtype=float)
        self._y = list(y)
        self._m = len(self._cat_attrs) + len(self._num_attrs)
        return self

    def _distances(self, x: Record) -> np.ndarray:
        n = len(self._y)
        total = np.zeros(n)
        if self._cat_attrs:
            query = np.array([x[a] for a in self._cat_attrs], dtype=object)
            total += (self._cat_matrix != query).sum(axis=1)
        if self._num_attrs:
            query = np.array([float(x[a]) for a in self._num_attrs], dtype=float)
            total += (np.abs(self._num_matrix - query) / self._num_ranges).sum(axis=1)
        return total / max(1, self._m)

    def predict_one(self, x: Record):
        d = self._distances(x)
        order = np.lexsort((np.arange(len(d)), d))[: self.k]
        votes = {label: 0 for label in self.labels}
        for i in order:
            votes[self._y[i]] += 1
        neg, pos = self.labels
        return pos if votes[pos] > votes[neg] else neg

    def predict(self, X):
        return np.asarray([self.predict_one(x) for x in X])

    def predict_proba(self, X):
        out = []
        for x in X:
            d = self._distances(x)
            order = np.lexsort((np.arange(len(d)), d))[: self.k]
            pos = sum(1 for i in order if self._y[i] == self.labels[1])
            out.append((1 - pos / self.k, pos / self.k))
        return np.asarray(out)
