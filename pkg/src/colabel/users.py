"""Simulated labelers for driving sessions end to end.

Five kinds of user cover the expertise spectrum: one follows the ground
truth exactly, one follows it 75% of the time, one flips a coin, and two
answer with a fitted model (Naive Bayes or nearest neighbors).  On top of
the labeling behavior, an acceptance policy fixes how the user reacts to
the model's challenges: always accept, always decline, coin-flip, or
judge the shown synthetic instances with their own model (only possible
for the model-backed users, who can label records that have no ground
truth).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .checks import GFCPlan
from .data import Record

KINDS = ("real", "absent_minded", "coin", "bayesian", "similarity")
POLICIES = ("accept", "decline", "random", "xai")

ABSENT_MINDED_ACCURACY = 0.75


@dataclass
class SimulatedUser:
    kind: str
    policy: str
    labels: tuple[str, str]                  # (negative, positive)
    rng: random.Random = field(default_factory=random.Random)
    oracle: Optional[object] = None          # fitted model for bayesian/similarity
    ifc_change_prob: float = 0.80
    gfc_fraction: float = 0.25

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown user kind {self.kind!r}")
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.policy == "xai" and self.kind not in ("bayesian", "similarity"):
            raise ValueError("the xai policy needs a model-backed user "
                             "(synthetic records have no ground truth)")
        if self.kind in ("bayesian", "similarity") and self.oracle is None:
            raise ValueError(f"user kind {self.kind!r} needs a fitted oracle model")

    def label(self, x: Record, ground_truth: Optional[str]) -> str:
        """The label this user proposes for x."""
        if self.kind == "real":
            return ground_truth
        if self.kind == "absent_minded":
            if self.rng.random() < ABSENT_MINDED_ACCURACY:
                return ground_truth
            return self.labels[0] if ground_truth == self.labels[1] else self.labels[1]
        if self.kind == "coin":
            return self.labels[self.rng.randrange(2)]
        return self.oracle.predict_one(x)

    def wants_explanation(self) -> bool:
        return self.policy == "xai"

    def accepts_suggestion(self, explanation: Optional[dict]) -> bool:
        """React to the model's challenge per the acceptance policy."""
        if self.policy == "accept":
            return True
        if self.policy == "decline":
            return False
        if self.policy == "random":
            return self.rng.random() < 0.5
        return self._judge_instances(explanation)

    def _judge_instances(self, explanation: Optional[dict]) -> bool:
        """Label each shown instance with the own model; accept on strict majority."""
        if not explanation or "instances" not in explanation:
            raise ValueError("xai policy needs an instance-based explanation")
        shown = explanation["instances"]["examples"] + explanation["instances"]["counterexamples"]
        agreements = sum(
            1 for inst in shown
            if self.oracle.predict_one(inst["record"]) == inst["label"]
        )
        return agreements * 2 > len(shown)

    def ifc_choice(self) -> str:
        """Conservative conflict handling: usually change the current label."""
        if self.rng.random() < self.ifc_change_prob:
            return "change_current"
        return "relabel_past"

    def gfc_selection(self, plan: GFCPlan) -> tuple[list[int], list[int]]:
        """Relabel the top slice of each candidate list."""
        n_dn = int(len(plan.dn_candidates) * self.gfc_fraction)
        n_pp = int(len(plan.pp_candidates) * self.gfc_fraction)
        return plan.dn_candidates[:n_dn], plan.pp_candidates[:n_pp]
