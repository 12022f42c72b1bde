"""Per-record decision loop coordinating the model, the user and the checks.

For every record the user proposes a label and the model predicts one.
The checks then fire in strict priority order: supervisor rules decide
compulsorily; a similar past record either confirms the user or opens a
conflict they must resolve; a disagreeing, sufficiently confident model
challenges the user (who keeps veto power); otherwise the user's label
stands.  Every k records the accumulated labels get a group-fairness
review proposing flips of past labels.

All bookkeeping lives here: the records and evolving final labels, the
append-only histories of user/model/round decisions, per-record
provenance, the accuracy ledger, the similarity index, the event log,
and snapshot/restore/replay.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import checks as C
from .data import AttributeSchema, DataError, Dataset, Record, validate_record
from .explain import logic_explanation, real_instances, synthetic_instances
from .skepticism import AccuracyLedger, is_skeptical, skepticism_score
from .tree import EFDTClassifier, retrain_from_scratch

PROV_IRC = "IRC"
PROV_IFC = "IFC"
PROV_SLC = "SLC"
PROV_USER = "USER"

SNAPSHOT_VERSION = 1


class ProtocolError(RuntimeError):
    """Call out of turn: pending prompt, session complete, or mismatched response."""


@dataclass(frozen=True)
class LabelingTask:
    """What the session labels: schema plus label and fairness roles."""

    schema: tuple
    negative_label: str
    positive_label: str
    sensitive_attribute: str
    discriminated_value: str

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "LabelingTask":
        return cls(
            schema=tuple(ds.schema),
            negative_label=ds.negative_label,
            positive_label=ds.positive_label,
            sensitive_attribute=ds.sensitive_attribute,
            discriminated_value=ds.discriminated_value,
        )

    @property
    def labels(self) -> tuple[str, str]:
        return (self.negative_label, self.positive_label)

    def to_dict(self) -> dict:
        return {
            "schema": [{"name": a.name, "kind": a.kind, "domain": list(a.domain)}
                       for a in self.schema],
            "negative_label": self.negative_label,
            "positive_label": self.positive_label,
            "sensitive_attribute": self.sensitive_attribute,
            "discriminated_value": self.discriminated_value,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LabelingTask":
        return cls(
            schema=tuple(AttributeSchema(a["name"], a["kind"], tuple(a["domain"]))
                         for a in raw["schema"]),
            negative_label=raw["negative_label"],
            positive_label=raw["positive_label"],
            sensitive_attribute=raw["sensitive_attribute"],
            discriminated_value=raw["discriminated_value"],
        )


@dataclass(frozen=True)
class SessionConfig:
    """Runtime knobs: check toggles, challenge threshold, review period."""

    target: int = 2000            # records to label before the session completes
    k: int = 50                   # group-fairness review period
    s: float = 0.05               # skepticism threshold
    irc: bool = True
    ifc: bool = True
    slc: bool = True
    gfc: bool = True
    seed: int = 0
    instance_source: str = "synthetic"   # instance explanations: synthetic | real
    instance_count: int = 5

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.target < 0:
            raise ValueError("target must be >= 0")
        if self.instance_source not in ("synthetic", "real"):
            raise ValueError("instance_source must be 'synthetic' or 'real'")

    def to_dict(self) -> dict:
        return {
            "target": self.target, "k": self.k, "s": self.s,
            "irc": self.irc, "ifc": self.ifc, "slc": self.slc, "gfc": self.gfc,
            "seed": self.seed, "instance_source": self.instance_source,
            "instance_count": self.instance_count,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SessionConfig":
        return cls(**raw)


# -- prompts --------------------------------------------------------------

@dataclass
class IfcConflict:
    kind = "ifc_conflict"
    record: Record
    record_index: int
    user_label: str
    model_label: str
    past_label: str
    affected_indices: list[int]

    def to_payload(self) -> dict:
        return {
            "kind": self.kind, "record": dict(self.record),
            "record_index": self.record_index, "user_label": self.user_label,
            "model_label": self.model_label, "past_label": self.past_label,
            "affected_indices": list(self.affected_indices),
        }


@dataclass
class SlcOfferExplanation:
    kind = "slc_offer_explanation"
    record: Record
    record_index: int
    user_label: str
    model_label: str

    def to_payload(self) -> dict:
        return {
            "kind": self.kind, "record": dict(self.record),
            "record_index": self.record_index, "user_label": self.user_label,
            "model_label": self.model_label,
        }


@dataclass
class SlcSuggestion:
    kind = "slc_suggestion"
    record: Record
    record_index: int
    user_label: str
    model_label: str
    explanation: Optional[dict] = None

    def to_payload(self) -> dict:
        return {
            "kind": self.kind, "record": dict(self.record),
            "record_index": self.record_index, "user_label": self.user_label,
            "model_label": self.model_label, "explanation": self.explanation,
        }


@dataclass
class GfcReview:
    kind = "gfc_review"
    plan: C.GFCPlan

    def to_payload(self) -> dict:
        return {"kind": self.kind, "plan": self.plan.to_dict(),
                "disc_before": self.plan.disc_before}


PROMPT_KINDS = {
    "ifc_conflict": IfcConflict,
    "slc_offer_explanation": SlcOfferExplanation,
    "slc_suggestion": SlcSuggestion,
    "gfc_review": GfcReview,
}


def _prompt_from_payload(payload: dict):
    kind = payload["kind"]
    if kind == "ifc_conflict":
        return IfcConflict(payload["record"], payload["record_index"],
                           payload["user_label"], payload["model_label"],
                           payload["past_label"], list(payload["affected_indices"]))
    if kind == "slc_offer_explanation":
        return SlcOfferExplanation(payload["record"], payload["record_index"],
                                   payload["user_label"], payload["model_label"])
    if kind == "slc_suggestion":
        return SlcSuggestion(payload["record"], payload["record_index"],
                             payload["user_label"], payload["model_label"],
                             payload.get("explanation"))
    if kind == "gfc_review":
        return GfcReview(C.GFCPlan.from_dict(payload["plan"]))
    raise ProtocolError(f"unknown prompt kind {kind!r}")


@dataclass
class Outcome:
    """What one submit/respond call produced."""

    finalized: Optional[dict] = None     # {index, final_label, provenance, ...}
    prompt: object = None                # pending prompt raised by this call, if any
    relabels: list = field(default_factory=list)  # [{index, old, new, source}]
    retrained: bool = False
    notices: list = field(default_factory=list)
    complete: bool = False

    def to_dict(self) -> dict:
        return {
            "finalized": self.finalized,
            "prompt": self.prompt.to_payload() if self.prompt is not None else None,
            "relabels": list(self.relabels),
            "retrained": self.retrained,
            "notices": list(self.notices),
            "complete": self.complete,
        }


class Session:
    """One labeling session: a single-writer event loop over records."""

    def __init__(self, config: SessionConfig, task: LabelingTask,
                 ruleset: Optional[C.RuleSet] = None,
                 model: Optional[EFDTClassifier] = None,
                 reference_records: Optional[list[Record]] = None,
                 clock: Optional[Callable[[], float]] = None,
                 _skip_validation: bool = False):
        self.config = config
        self.task = task
        self.ruleset = ruleset or C.RuleSet()
        if not _skip_validation:
            problems = C.validate_ruleset(self.ruleset, list(task.schema),
                                          task.sensitive_attribute)
            if problems:
                raise C.RuleError("; ".join(problems))
        self.model = model if model is not None else EFDTClassifier(
            schema=list(task.schema), labels=task.labels)
        self.reference_records = list(reference_records or [])
        self.clock = clock or time.time

        self.records: list[Record] = []        # analyzed so far
        self.labels: list[str] = []            # final hybrid decisions (mutable)
        self.user_labels: list[str] = []       # append-only
        self.model_labels: list[str] = []      # append-only
        self.round_finals: list[str] = []      # append-only; basis of the ledger
        self.provenance: list[str] = []
        self.ledger = AccuracyLedger()
        self.sim_index = C.SimilarityIndex()
        self.pending = None
        self.events: list[dict] = []
        self.stats = {
            "agreements": 0, "skeptic_prompts": 0, "disagreements_quiet": 0,
            "suggestions_accepted": 0, "suggestions_declined": 0,
            "explanations_shown": 0, "ifc_conflicts": 0, "gfc_rounds": 0,
            "gfc_flips": 0, "retrains": 0,
        }
        self._log("session_started", config=config.to_dict())

    # -- public protocol -------------------------------------------------

    @property
    def complete(self) -> bool:
        return len(self.records) >= self.config.target and self.pending is None

    @property
    def status(self) -> str:
        if self.pending is not None:
            return "awaiting_response"
        return "complete" if self.complete else "awaiting_label"

    def submit_label(self, x: Record, user_label: str) -> Outcome:
        """Run the per-record checks for the user's proposed label."""
        if self.pending is not None:
            raise ProtocolError("a prompt is pending; respond to it first")
        if self.complete:
            raise ProtocolError("session is complete")
        if user_label not in self.task.labels:
            raise DataError(f"unknown label {user_label!r}")
        x = validate_record(x, list(self.task.schema))
        model_label, _ = self.model.predict_one(x)
        index = len(self.records)
        self._log("label_submitted", index=index, record=x,
                  user_label=user_label, model_label=model_label)

        if self.config.irc:
            rule_label = C.match_rule(self.ruleset, x)
            if rule_label is not None:
                notices = []
                if rule_label != user_label:
                    notices.append("decision not compliant with supervisor rules")
                return self._finalize(x, user_label, model_label, rule_label,
                                      PROV_IRC, notices)

        if self.config.ifc:
            key = C.project(x, list(self.task.schema), self.task.sensitive_attribute)
            hit = self.sim_index.lookup(key)
            if hit is not None:
                past_label, indices = hit
                if past_label != user_label:
                    self.stats["ifc_conflicts"] += 1
                    return self._raise_prompt(IfcConflict(
                        record=x, record_index=index, user_label=user_label,
                        model_label=model_label, past_label=past_label,
                        affected_indices=indices))
                return self._finalize(x, user_label, model_label, user_label, PROV_USER)

        if user_label != model_label:
            if self.config.slc and self._skeptical(x, user_label, model_label):
                self.stats["skeptic_prompts"] += 1
                return self._raise_prompt(SlcOfferExplanation(
                    record=x, record_index=index,
                    user_label=user_label, model_label=model_label))
            self.stats["disagreements_quiet"] += 1
        else:
            self.stats["agreements"] += 1
        return self._finalize(x, user_label, model_label, user_label, PROV_USER)

    def respond(self, response: dict) -> Outcome:
        """Resolve the pending prompt with the user's response."""
        if self.pending is None:
            raise ProtocolError("no prompt is pending")
        kind = response.get("kind")
        if kind != self.pending.kind:
            raise ProtocolError(
                f"response kind {kind!r} does not match pending prompt {self.pending.kind!r}")
        self._log("response", response=response)
        prompt, self.pending = self.pending, None

        if kind == "ifc_conflict":
            return self._resolve_ifc(prompt, response)
        if kind == "slc_offer_explanation":
            return self._resolve_offer(prompt, response)
        if kind == "slc_suggestion":
            return self._resolve_suggestion(prompt, response)
        if kind == "gfc_review":
            return self._resolve_gfc(prompt, response)
        raise ProtocolError(f"unknown prompt kind {kind!r}")

    # -- check resolution --------------------------------------------------

    def _skeptical(self, x: Record, user_label: str, model_label: str) -> bool:
        c_model = self.model.confidence(x, model_label)
        c_user = self.model.confidence(x, user_label)
        score = skepticism_score(
            c_model, self.ledger.ea("model", model_label),
            c_user, self.ledger.ea("user", user_label),
        )
        return is_skeptical(score, self.config.s)

    def _resolve_ifc(self, prompt: IfcConflict, response: dict) -> Outcome:
        choice = response.get("choice")
        key = C.project(prompt.record, list(self.task.schema),
                        self.task.sensitive_attribute)
        if choice == "change_current":
            return self._finalize(prompt.record, prompt.user_label,
                                  prompt.model_label, prompt.past_label, PROV_IFC)
        if choice == "relabel_past":
            affected = self.sim_index.relabel(key, prompt.user_label)
            relabels = []
            for i in affected:
                if self.labels[i] != prompt.user_label:
                    relabels.append({"index": i, "old": self.labels[i],
                                     "new": prompt.user_label, "source": "ifc"})
                    self.labels[i] = prompt.user_label
            self._log("relabeled", source="ifc",
                      changes=[[r["index"], r["old"], r["new"]] for r in relabels])
            self._retrain("ifc_relabel")
            outcome = self._finalize(prompt.record, prompt.user_label,
                                     prompt.model_label, prompt.user_label, PROV_IFC)
            outcome.relabels = relabels + outcome.relabels
            outcome.retrained = True
            return outcome
        raise ProtocolError(f"ifc_conflict choice must be 'change_current' or "
                            f"'relabel_past', got {choice!r}")

    def _resolve_offer(self, prompt: SlcOfferExplanation, response: dict) -> Outcome:
        explanation = None
        if response.get("show"):
            explanation = self._build_explanation(prompt)
            self.stats["explanations_shown"] += 1
        return self._raise_prompt(SlcSuggestion(
            record=prompt.record, record_index=prompt.record_index,
            user_label=prompt.user_label, model_label=prompt.model_label,
            explanation=explanation))

    def _resolve_suggestion(self, prompt: SlcSuggestion, response: dict) -> Outcome:
        if response.get("accept"):
            self.stats["suggestions_accepted"] += 1
            return self._finalize(prompt.record, prompt.user_label,
                                  prompt.model_label, prompt.model_label, PROV_SLC)
        self.stats["suggestions_declined"] += 1
        return self._finalize(prompt.record, prompt.user_label,
                              prompt.model_label, prompt.user_label, PROV_USER)

    def _resolve_gfc(self, prompt: GfcReview, response: dict) -> Outcome:
        accepted_dn = list(response.get("accept_dn", []))
        accepted_pp = list(response.get("accept_pp", []))
        before = dict(zip(accepted_dn + accepted_pp,
                          [self.labels[i] for i in accepted_dn + accepted_pp]))
        changed, needs_retrain = C.apply_gfc(
            self.labels, prompt.plan, accepted_dn, accepted_pp,
            self.task.positive_label, self.task.negative_label)
        relabels = [{"index": i, "old": before[i], "new": self.labels[i],
                     "source": "gfc"} for i in changed]
        if self.config.ifc:
            for i in changed:
                key = C.project(self.records[i], list(self.task.schema),
                                self.task.sensitive_attribute)
                self.sim_index.relabel(key, self.labels[i])
        self.stats["gfc_flips"] += len(changed)
        self._log("relabeled", source="gfc",
                  changes=[[r["index"], r["old"], r["new"]] for r in relabels])
        retrained = False
        if needs_retrain:
            self._retrain("gfc_relabel")
            retrained = True
        return Outcome(relabels=relabels, retrained=retrained, complete=self.complete)

    def _build_explanation(self, prompt) -> dict:
        logic = logic_explanation(self.model, prompt.record, prompt.model_label)
        pool = self.reference_records + self.records
        if self.config.instance_source == "real":
            instances = real_instances(self.model, self.records, prompt.record,
                                       prompt.model_label, prompt.user_label,
                                       self.config.instance_count,
                                       list(self.task.schema))
        else:
            instances = synthetic_instances(
                self.model, list(self.task.schema), pool, prompt.record,
                prompt.model_label, prompt.user_label, self.config.instance_count,
                seed=self.config.seed * 1000003 + prompt.record_index)
        return {"logic": logic.to_dict(), "instances": instances.to_dict()}

    # -- bookkeeping -------------------------------------------------------

    def _raise_prompt(self, prompt) -> Outcome:
        self.pending = prompt
        self._log("prompt", prompt=prompt.to_payload())
        return Outcome(prompt=prompt, complete=False)

    def _finalize(self, x: Record, user_label: str, model_label: str,
                  final_label: str, provenance: str,
                  notices: Optional[list[str]] = None) -> Outcome:
        index = len(self.records)
        self.records.append(x)
        self.labels.append(final_label)
        self.user_labels.append(user_label)
        self.model_labels.append(model_label)
        self.round_finals.append(final_label)
        self.provenance.append(provenance)
        self.ledger.record_outcome(user_label, model_label, final_label)
        if self.config.ifc:
            key = C.project(x, list(self.task.schema), self.task.sensitive_attribute)
            self.sim_index.register(key, final_label, index)
        self.model.learn_one(x, final_label)
        notices = list(notices or [])
        self._log("finalized", index=index, final_label=final_label,
                  provenance=provenance, notices=notices)
        finalized = {"index": index, "final_label": final_label,
                     "provenance": provenance, "user_label": user_label,
                     "model_label": model_label}
        prompt = None
        if self.config.gfc and len(self.records) % self.config.k == 0:
            prompt, gfc_notice = self._open_gfc_review()
            if gfc_notice:
                notices.append(gfc_notice)
        if self.complete:
            self._log("completed")
        return Outcome(finalized=finalized, prompt=prompt, notices=notices,
                       complete=self.complete)

    def _open_gfc_review(self):
        self.stats["gfc_rounds"] += 1
        try:
            plan = C.plan_gfc(
                self.records, self.labels, self._gfc_eligibility(), self.model,
                self.task.sensitive_attribute, self.task.discriminated_value,
                self.task.positive_label)
        except C.InsufficientGroupData:
            self._log("gfc_checked", skipped="insufficient data")
            return None, "group fairness check skipped: insufficient data"
        if plan.is_empty:
            self._log("gfc_checked", skipped="empty plan",
                      disc_before=plan.disc_before)
            return None, "group fairness check: nothing to review"
        self._log("gfc_checked", disc_before=plan.disc_before,
                  dn=len(plan.dn_candidates), pp=len(plan.pp_candidates))
        prompt = GfcReview(plan)
        self.pending = prompt
        self._log("prompt", prompt=prompt.to_payload())
        return prompt, None

    def _gfc_eligibility(self) -> list[bool]:
        """Flips may not touch compulsorily-decided records, nor break up a
        similarity group that must stay uniformly labeled."""
        eligible = []
        for i, prov in enumerate(self.provenance):
            ok = prov not in (PROV_IRC, PROV_IFC)
            if ok and self.config.ifc:
                key = C.project(self.records[i], list(self.task.schema),
                                self.task.sensitive_attribute)
                ok = self.sim_index.group_size(key) <= 1
            eligible.append(ok)
        return eligible

    def _retrain(self, reason: str) -> None:
        self.model = retrain_from_scratch(self.model, self.records, self.labels)
        self.stats["retrains"] += 1
        self._log("retrained", reason=reason)

    def _log(self, event_type: str, **payload) -> None:
        self.events.append({"seq": len(self.events), "ts": self.clock(),
                            "type": event_type, **payload})

    # -- inspection ----------------------------------------------------------

    def current_disc(self) -> Optional[float]:
        if not self.records:
            return None
        try:
            return C.disc(self.records, self.labels, self.task.sensitive_attribute,
                          self.task.discriminated_value, self.task.positive_label)
        except C.InsufficientGroupData:
            return None

    def current_uc(self) -> int:
        return C.uc_count(self.records, self.labels, list(self.task.schema),
                          self.task.sensitive_attribute)

    def summary(self) -> dict:
        provenance_counts: dict = {}
        for p in self.provenance:
            provenance_counts[p] = provenance_counts.get(p, 0) + 1
        return {
            "status": self.status,
            "labeled": len(self.records),
            "target": self.config.target,
            "provenance_counts": provenance_counts,
            "disc": self.current_disc(),
            "unfair_couples": self.current_uc(),
            "stats": dict(self.stats),
            "ledger": self.ledger.to_dict(),
            "pending": self.pending.to_payload() if self.pending else None,
        }

    # -- persistence -----------------------------------------------------------

    def snapshot(self) -> dict:
        """Lossless session image; restore() rebuilds an identical session."""
        return {
            "version": SNAPSHOT_VERSION,
            "config": self.config.to_dict(),
            "task": self.task.to_dict(),
            "ruleset": self.ruleset.to_dict(),
            "records": [dict(r) for r in self.records],
            "labels": list(self.labels),
            "user_labels": list(self.user_labels),
            "model_labels": list(self.model_labels),
            "round_finals": list(self.round_finals),
            "provenance": list(self.provenance),
            "ledger": self.ledger.to_dict(),
            "model": self.model.to_dict(),
            "reference_records": [dict(r) for r in self.reference_records],
            "pending": self.pending.to_payload() if self.pending else None,
            "stats": dict(self.stats),
            "events": [dict(e) for e in self.events],
        }

    def snapshot_bytes(self) -> bytes:
        return canonical_json(self.snapshot())

    @classmethod
    def restore(cls, image: dict, clock: Optional[Callable[[], float]] = None) -> "Session":
        try:
            if image.get("version") != SNAPSHOT_VERSION:
                raise ProtocolError(f"unsupported snapshot version {image.get('version')!r}")
            config = SessionConfig.from_dict(image["config"])
            task = LabelingTask.from_dict(image["task"])
            ruleset = C.RuleSet.from_dict(image["ruleset"])
            model = EFDTClassifier.from_dict(image["model"])
            session = cls(config, task, ruleset, model,
                          reference_records=image["reference_records"],
                          clock=clock, _skip_validation=True)
            session.records = [dict(r) for r in image["records"]]
            session.labels = list(image["labels"])
            session.user_labels = list(image["user_labels"])
            session.model_labels = list(image["model_labels"])
            session.round_finals = list(image["round_finals"])
            session.provenance = list(image["provenance"])
            session.ledger = AccuracyLedger.from_dict(image["ledger"])
            session.stats = dict(image["stats"])
            session.events = [dict(e) for e in image["events"]]
            session.pending = (_prompt_from_payload(image["pending"])
                               if image["pending"] else None)
            if config.ifc:
                session.sim_index = C.SimilarityIndex()
                for i, x in enumerate(session.records):
                    key = C.project(x, list(task.schema), task.sensitive_attribute)
                    session.sim_index.register(key, session.labels[i], i)
            return session
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ProtocolError):
                raise
            raise ProtocolError(f"corrupt session image: {exc}") from exc


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


def replay_events(initial_image: dict, events: list[dict]) -> Session:
    """Re-run a session from its starting image and recorded inputs.

    Only input events (submitted labels and prompt responses) drive the
    replay; everything else is recomputed.  Timestamps are taken from the
    recorded events so a faithful replay reproduces the original snapshot
    byte for byte.
    """
    already = len(initial_image["events"])
    tail = [e for e in events if e["seq"] >= already]
    # one dummy tick for the constructor's own start event, which restore()
    # overwrites with the image's log; after that each replayed log call
    # lines up 1:1 with a recorded event
    timestamps = iter([0.0] + [e["ts"] for e in tail])

    def scripted_clock():
        try:
            return next(timestamps)
        except StopIteration:
            return 0.0

    session = Session.restore(initial_image, clock=scripted_clock)
    for event in tail:
        if event["seq"] < len(session.events):
            continue  # already re-emitted while resolving an earlier input
        if event["type"] == "label_submitted":
            session.submit_label(event["record"], event["user_label"])
        elif event["type"] == "response":
            session.respond(event["response"])
    return session
