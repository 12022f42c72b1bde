"""Experiment harness: drives full sessions with simulated users and
aggregates the evaluation measures over repeated runs.

A single run splits the dataset (a fresh random split per repeat),
pretrains the tree on half the oracle-training records, fits the
model-backed user's oracle on all of them, then feeds the stream through
a session while resolving every prompt with the simulated user's policy.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .checks import RuleSet
from .data import Dataset, SplitSizes, make_splits
from .datagen import generate
from .engine import LabelingTask, Session, SessionConfig
from .metrics import MetricsReport, accuracy, aggregate_reports, safe_disc
from .oracles import GowerKNN, MixedNaiveBayes
from .tree import EFDTClassifier
from .users import SimulatedUser

CHECK_NAMES = ("irc", "ifc", "slc", "gfc")

#: named check combinations used throughout the experiments
CHECK_PRESETS = {
    "none": (),
    "oirc": ("irc",),
    "oifc": ("ifc",),
    "ogfc": ("gfc",),
    "sl": ("slc",),
    "full": ("irc", "ifc", "slc", "gfc"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "adult-like"
    user: str = "real"
    policy: str = "accept"
    checks: tuple = ()
    k: int = 50
    s: float = 0.05
    knn_k: int = 5
    seed: int = 0
    repeats: int = 10
    sizes: SplitSizes = SplitSizes()
    instance_source: str = "synthetic"
    instance_count: int = 5

    def with_checks(self, preset: str) -> "ExperimentConfig":
        return replace(self, checks=CHECK_PRESETS[preset])


@dataclass
class RunArtifacts:
    """Everything a single run produced, for tests and inspection."""

    report: MetricsReport
    session: Session
    truth: list[str]


def _make_oracle(kind: str, task: LabelingTask, train, knn_k: int):
    records, labels = train
    if kind == "bayesian":
        return MixedNaiveBayes(schema=list(task.schema), labels=task.labels).fit(records, labels)
    if kind == "similarity":
        return GowerKNN(schema=list(task.schema), labels=task.labels, k=knn_k).fit(records, labels)
    return None


def _respond_all(session: Session, user: SimulatedUser, outcome):
    """Resolve every prompt raised while handling one record."""
    while outcome.prompt is not None:
        prompt = outcome.prompt
        if prompt.kind == "ifc_conflict":
            response = {"kind": prompt.kind, "choice": user.ifc_choice()}
        elif prompt.kind == "slc_offer_explanation":
            response = {"kind": prompt.kind, "show": user.wants_explanation()}
        elif prompt.kind == "slc_suggestion":
            response = {"kind": prompt.kind,
                        "accept": user.accepts_suggestion(prompt.explanation)}
        elif prompt.kind == "gfc_review":
            dn, pp = user.gfc_selection(prompt.plan)
            response = {"kind": prompt.kind, "accept_dn": dn, "accept_pp": pp}
        else:
            raise RuntimeError(f"unhandled prompt kind {prompt.kind!r}")
        outcome = session.respond(response)
        yield outcome


def run_single(dataset: Dataset, ruleset: Optional[RuleSet],
               config: ExperimentConfig, run_seed: int) -> RunArtifacts:
    """One full session over one split; returns metrics plus the session."""
    splits = make_splits(dataset, seed=run_seed, sizes=config.sizes)
    task = LabelingTask.from_dataset(dataset)
    oracle = _make_oracle(config.user, task, splits.oracle_train, config.knn_k)
    model = EFDTClassifier(schema=list(task.schema), labels=task.labels)
    model.partial_fit(*splits.pretrain)

    stream_records, stream_truth = splits.stream
    session_config = SessionConfig(
        target=len(stream_records), k=config.k, s=config.s,
        irc="irc" in config.checks, ifc="ifc" in config.checks,
        slc="slc" in config.checks, gfc="gfc" in config.checks,
        seed=run_seed, instance_source=config.instance_source,
        instance_count=config.instance_count,
    )
    session = Session(session_config, task, ruleset or RuleSet(), model,
                      reference_records=splits.pretrain[0], clock=lambda: 0.0)
    user = SimulatedUser(
        kind=config.user, policy=config.policy, labels=task.labels,
        rng=random.Random(f"user:{run_seed}"), oracle=oracle,
    )

    # incremental CA / CD bookkeeping (relabels arrive as deltas)
    matches = 0
    pp = pn = dp = dn = 0
    series_ca: list[float] = []
    series_cd: list[Optional[float]] = []

    def group_of(i: int) -> bool:
        return (stream_records[i][task.sensitive_attribute]
                == task.discriminated_value)

    def count_label(i: int, label: str, delta: int):
        nonlocal pp, pn, dp, dn
        positive = label == task.positive_label
        if group_of(i):
            if positive:
                dp += delta
            else:
                dn += delta
        elif positive:
            pp += delta
        else:
            pn += delta

    def absorb(outcome):
        nonlocal matches
        if outcome.finalized is not None:
            i = outcome.finalized["index"]
            label = outcome.finalized["final_label"]
            if label == stream_truth[i]:
                matches += 1
            count_label(i, label, +1)
        for change in outcome.relabels:
            i = change["index"]
            matches += (change["new"] == stream_truth[i]) - (change["old"] == stream_truth[i])
            count_label(i, change["old"], -1)
            count_label(i, change["new"], +1)

    for step, (x, truth) in enumerate(zip(stream_records, stream_truth)):
        outcome = session.submit_label(x, user.label(x, truth))
        absorb(outcome)
        for outcome in _respond_all(session, user, outcome):
            absorb(outcome)
        series_ca.append(matches / (step + 1))
        if (pp + pn) and (dp + dn):
            series_cd.append(pp / (pp + pn) - dp / (dp + dn))
        else:
            series_cd.append(None)

    test_records, test_truth = splits.test
    predictions = list(session.model.predict(test_records))
    ds_view = dataset
    report = MetricsReport(
        ca=accuracy(session.labels, stream_truth),
        ma=accuracy(predictions, test_truth),
        cd=safe_disc(session.records, session.labels, ds_view),
        md=safe_disc(test_records, predictions, ds_view),
        uc=float(session.current_uc()),
        series_ca=series_ca,
        series_cd=series_cd,
        interaction=_interaction_rates(session.stats),
    )
    return RunArtifacts(report=report, session=session, truth=stream_truth)


def _interaction_rates(stats: dict) -> dict:
    staged = stats["agreements"] + stats["skeptic_prompts"] + stats["disagreements_quiet"]
    resolved = stats["suggestions_accepted"] + stats["suggestions_declined"]
    rates = {
        "agreement_pct": 100.0 * stats["agreements"] / staged if staged else None,
        "skepticism_pct": 100.0 * stats["skeptic_prompts"] / staged if staged else None,
        "disagreement_pct": 100.0 * stats["disagreements_quiet"] / staged if staged else None,
        "accepted_pct": 100.0 * stats["suggestions_accepted"] / resolved if resolved else None,
        "declined_pct": 100.0 * stats["suggestions_declined"] / resolved if resolved else None,
    }
    rates.update({k: float(v) for k, v in stats.items()})
    return rates


def load_experiment_dataset(config: ExperimentConfig) -> tuple[Dataset, RuleSet]:
    """Resolve the configured dataset name through the generators."""
    return generate(config.dataset, seed=config.seed)


def run_experiment(config: ExperimentConfig,
                   dataset: Optional[Dataset] = None,
                   ruleset: Optional[RuleSet] = None) -> MetricsReport:
    """Average the metrics over ``config.repeats`` independent runs."""
    if dataset is None:
        dataset, generated_rules = load_experiment_dataset(config)
        if ruleset is None:
            ruleset = generated_rules
    reports = []
    for r in range(config.repeats):
        artifacts = run_single(dataset, ruleset, config, run_seed=config.seed + r)
        reports.append(artifacts.report)
    return aggregate_reports(reports)


# -- experiment grids ------------------------------------------------------

ABLATION_PRESETS = ("none", "oirc", "oifc", "ogfc")
ALL_USERS = ("real", "absent_minded", "coin", "bayesian", "similarity")
SL_POLICIES = ("accept", "decline", "random")


def full_checks_for(dataset_name: str) -> tuple:
    """The everything-on configuration; the recidivism task runs without
    supervisor rules (its natural rule is too broad to be compulsory)."""
    if dataset_name == "compas-like":
        return ("ifc", "slc", "gfc")
    return CHECK_PRESETS["full"]


def ablation_grid(base: ExperimentConfig, users=ALL_USERS,
                  presets=ABLATION_PRESETS) -> dict:
    """Check-ablation table: preset x user -> averaged report."""
    results = {}
    dataset, ruleset = load_experiment_dataset(base)
    for preset in presets:
        for user in users:
            cfg = replace(base, user=user, checks=CHECK_PRESETS[preset])
            results[(preset, user)] = run_experiment(cfg, dataset, ruleset)
    return results


def compare_sl_grid(base: ExperimentConfig, users=ALL_USERS,
                    policies=SL_POLICIES) -> dict:
    """Skepticism-only baseline vs the full system: (system, policy, user)."""
    results = {}
    dataset, ruleset = load_experiment_dataset(base)
    for policy in policies:
        for user in users:
            sl_cfg = replace(base, user=user, policy=policy,
                             checks=CHECK_PRESETS["sl"])
            full_cfg = replace(base, user=user, policy=policy,
                               checks=full_checks_for(base.dataset))
            results[("sl", policy, user)] = run_experiment(sl_cfg, dataset, ruleset)
            results[("full", policy, user)] = run_experiment(full_cfg, dataset, ruleset)
    return results


def xai_grid(base: ExperimentConfig, users=("bayesian", "similarity")) -> dict:
    """Random acceptance vs explanation-driven acceptance for model-backed users."""
    results = {}
    dataset, ruleset = load_experiment_dataset(base)
    for user in users:
        for policy in ("random", "xai"):
            cfg = replace(base, user=user, policy=policy,
                          checks=full_checks_for(base.dataset))
            results[(policy, user)] = run_experiment(cfg, dataset, ruleset)
    return results
