"""Empirical-accuracy ledger and the challenge-decision score.

Both the user and the model get one accuracy value per label: the
fraction of their proposals of that label that became the round's final
decision.  The score weighs each side's confidence by that track record,
and the model challenges the user when the difference exceeds a
threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field

USER = "user"
MODEL = "model"


@dataclass
class AccuracyLedger:
    """Per-agent, per-label proposed/accepted counters.

    Counters are append-only: later fairness relabelings never touch them
    (outcomes are credited against the round's final decision, recorded
    before any retroactive label change).
    """

    counts: dict = field(default_factory=dict)  # (agent, label) -> [proposed, accepted]

    def ea(self, agent: str, label: str) -> float:
        """Empirical accuracy of an agent toward one label.

        Cold start (no proposals of that label yet): the user is trusted
        fully (1.0) and the model not at all (0.0).
        """
        proposed, accepted = self.counts.get((agent, label), (0, 0))
        if proposed == 0:
            return 1.0 if agent == USER else 0.0
        return accepted / proposed

    def record_outcome(self, user_label: str, model_label: str, final_label: str) -> None:
        """Credit both agents against the round's final decision."""
        self._bump(USER, user_label, user_label == final_label)
        self._bump(MODEL, model_label, model_label == final_label)

    def _bump(self, agent: str, label: str, accepted: bool) -> None:
        entry = self.counts.setdefault((agent, label), [0, 0])
        entry[0] += 1
        if accepted:
            entry[1] += 1

    def to_dict(self) -> dict:
        return {f"{agent}|{label}": list(v) for (agent, label), v in sorted(self.counts.items())}

    @classmethod
    def from_dict(cls, raw: dict) -> "AccuracyLedger":
        counts = {}
        for key, v in raw.items():
            agent, label = key.split("|", 1)
            counts[(agent, label)] = [int(v[0]), int(v[1])]
        return cls(counts=counts)


def skepticism_score(
    c_model: float, ea_model: float, c_user: float, ea_user: float
) -> float:
    """Confidence-weighted accuracy difference between model and user.

    Positive values mean the model has more grounds to trust its own
    label than the user's; the range is [-1, 1].
    """
    return c_model * ea_model - c_user * ea_user


def is_skeptical(score: float, threshold: float) -> bool:
    """The model challenges the user only when the score strictly exceeds the threshold."""
    return score > threshold
