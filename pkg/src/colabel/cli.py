"""Command-line harness: single experiments, the standard grids, dataset
generation, and the labeling service."""

from __future__ import annotations

import csv
import json
from dataclasses import replace
from pathlib import Path

import click

from .checks import RuleSet, validate_ruleset
from .data import Dataset, load_csv, clean
from .datagen import GENERATORS, dataset_spec, generate
from .harness import (
    ABLATION_PRESETS, ALL_USERS, CHECK_PRESETS, SL_POLICIES, ExperimentConfig,
    ablation_grid, compare_sl_grid, full_checks_for, run_experiment, xai_grid,
)
from .metrics import MetricsReport


def _parse_checks(value: str) -> tuple:
    if not value or value.lower() in ("none", "off"):
        return ()
    if value.lower() in CHECK_PRESETS:
        return CHECK_PRESETS[value.lower()]
    parts = tuple(p.strip().lower() for p in value.split(",") if p.strip())
    bad = [p for p in parts if p not in ("irc", "ifc", "slc", "gfc")]
    if bad:
        raise click.BadParameter(f"unknown checks: {bad}")
    return parts


def _load_dataset(dataset: str, schema: str, rules: str, seed: int):
    """Resolve --dataset: a generator name, or a CSV path with --schema."""
    if dataset in GENERATORS:
        ds, generated_rules = generate(dataset, seed=seed)
        ruleset = generated_rules
    else:
        if not schema:
            raise click.BadParameter(
                f"--dataset {dataset!r} is not a built-in generator; pass --schema"
            )
        ds = clean(load_csv(dataset, schema))
        ruleset = RuleSet()
    if rules:
        raw = json.loads(Path(rules).read_text(encoding="utf-8"))
        ruleset = RuleSet.from_dict(raw, ds.positive_label, ds.negative_label)
    problems = validate_ruleset(ruleset, ds.schema, ds.sensitive_attribute)
    if problems:
        raise click.ClickException("inadmissible rule set: " + "; ".join(problems))
    return ds, ruleset


def _report_row(report: MetricsReport) -> dict:
    return {
        "CA": report.ca, "MA": report.ma, "CD": report.cd,
        "MD": report.md, "UC": report.uc,
    }


def _fmt(v) -> str:
    if v is None:
        return "  n/a"
    return f"{v:5.2f}"


def _print_table(title: str, rows: dict) -> None:
    click.echo(f"\n{title}")
    click.echo(f"{'configuration':<40} {'CA':>5} {'MA':>5} {'CD':>5} {'MD':>5} {'UC':>5}")
    for key, report in rows.items():
        name = " / ".join(str(k) for k in (key if isinstance(key, tuple) else (key,)))
        m = _report_row(report)
        click.echo(f"{name:<40} {_fmt(m['CA'])} {_fmt(m['MA'])} {_fmt(m['CD'])} "
                   f"{_fmt(m['MD'])} {_fmt(m['UC'])}")


def _write_outputs(out: str, name: str, rows: dict) -> None:
    if not out:
        return
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {}
    for key, report in rows.items():
        label = "__".join(str(k) for k in (key if isinstance(key, tuple) else (key,)))
        entry = report.to_dict()
        series_ca = entry.pop("series_ca")
        series_cd = entry.pop("series_cd")
        payload[label] = entry
        series_path = out_dir / f"series_{name}_{label}.csv"
        with open(series_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "CA", "CD"])
            for i, (ca, cd) in enumerate(zip(series_ca, series_cd)):
                writer.writerow([i + 1, ca, "" if cd is None else cd])
    (out_dir / f"metrics_{name}.json").write_text(
        json.dumps(payload, indent=2), encoding="utf-8")
    click.echo(f"\nwrote metrics_{name}.json and series CSVs to {out_dir}")


dataset_option = click.option("--dataset", default="adult-like", show_default=True,
                              help="generator name or CSV path")
schema_option = click.option("--schema", default="", help="dataset description JSON (for CSV input)")
rules_option = click.option("--rules", default="", help="rule-set JSON overriding the default")
common = [
    click.option("--k", default=50, show_default=True, help="group-fairness review period"),
    click.option("--s", default=0.05, show_default=True, help="skepticism threshold"),
    click.option("--seed", default=0, show_default=True),
    click.option("--repeats", default=10, show_default=True),
    click.option("--out", default="", help="directory for metrics and series files"),
]


def _with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return rules_option(schema_option(dataset_option(fn)))


@click.group()
def main():
    """Co-evolutionary labeling: experiments, data generation and the service."""


@main.command()
@_with_common
@click.option("--user", default="real", show_default=True,
              type=click.Choice(ALL_USERS))
@click.option("--policy", default="accept", show_default=True,
              type=click.Choice(("accept", "decline", "random", "xai")))
@click.option("--checks", default="full", show_default=True,
              help="comma list of irc,ifc,slc,gfc or a preset (none/oirc/oifc/ogfc/sl/full)")
def run(dataset, schema, rules, user, policy, checks, k, s, seed, repeats, out):
    """Run one configuration and report averaged metrics."""
    ds, ruleset = _load_dataset(dataset, schema, rules, seed)
    cfg = ExperimentConfig(dataset=dataset, user=user, policy=policy,
                           checks=_parse_checks(checks), k=k, s=s,
                           seed=seed, repeats=repeats)
    report = run_experiment(cfg, ds, ruleset)
    rows = {(dataset, user, policy, checks): report}
    _print_table("single run", rows)
    _write_outputs(out, "run", rows)


@main.command()
@_with_common
@click.option("--users", default=",".join(ALL_USERS), show_default=True)
def ablation(dataset, schema, rules, users, k, s, seed, repeats, out):
    """Check-ablation grid: no checks vs each check alone, per user."""
    ds, ruleset = _load_dataset(dataset, schema, rules, seed)
    base = ExperimentConfig(dataset=dataset, k=k, s=s, seed=seed, repeats=repeats)
    user_list = tuple(u.strip() for u in users.split(",") if u.strip())
    rows = {}
    for preset in ABLATION_PRESETS:
        for u in user_list:
            cfg = replace(base, user=u, checks=CHECK_PRESETS[preset])
            rows[(preset, u)] = run_experiment(cfg, ds, ruleset)
    _print_table(f"ablation on {dataset}", rows)
    _write_outputs(out, "ablation", rows)


@main.command(name="compare-sl")
@_with_common
@click.option("--users", default=",".join(ALL_USERS), show_default=True)
@click.option("--policies", default=",".join(SL_POLICIES), show_default=True)
def compare_sl(dataset, schema, rules, users, policies, k, s, seed, repeats, out):
    """Skepticism-only baseline vs all checks, per user and policy."""
    ds, ruleset = _load_dataset(dataset, schema, rules, seed)
    base = ExperimentConfig(dataset=dataset, k=k, s=s, seed=seed, repeats=repeats)
    rows = {}
    for policy in (p.strip() for p in policies.split(",") if p.strip()):
        for u in (u.strip() for u in users.split(",") if u.strip()):
            sl_cfg = replace(base, user=u, policy=policy, checks=CHECK_PRESETS["sl"])
            full_cfg = replace(base, user=u, policy=policy,
                               checks=full_checks_for(dataset))
            rows[("sl", policy, u)] = run_experiment(sl_cfg, ds, ruleset)
            rows[("full", policy, u)] = run_experiment(full_cfg, ds, ruleset)
    _print_table(f"baseline comparison on {dataset}", rows)
    _write_outputs(out, "compare_sl", rows)


@main.command(name="xai-study")
@_with_common
def xai_study(dataset, schema, rules, k, s, seed, repeats, out):
    """Random vs explanation-driven acceptance for model-backed users."""
    ds, ruleset = _load_dataset(dataset, schema, rules, seed)
    base = ExperimentConfig(dataset=dataset, k=k, s=s, seed=seed, repeats=repeats)
    rows = {}
    for u in ("bayesian", "similarity"):
        for policy in ("random", "xai"):
            cfg = replace(base, user=u, policy=policy, checks=full_checks_for(dataset))
            rows[(policy, u)] = run_experiment(cfg, ds, ruleset)
    _print_table(f"explanation study on {dataset}", rows)
    for key, report in rows.items():
        inter = report.interaction
        click.echo(
            f"  {key}: agree={inter.get('agreement_pct')and round(inter['agreement_pct'],2)}% "
            f"skeptic={inter.get('skepticism_pct')and round(inter['skepticism_pct'],2)}% "
            f"accepted={inter.get('accepted_pct') and round(inter['accepted_pct'],2)}%")
    _write_outputs(out, "xai", rows)


@main.command(name="gen-data")
@click.option("--dataset", default="adult-like", show_default=True,
              type=click.Choice(sorted(GENERATORS)))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=".", show_default=True)
def gen_data(dataset, seed, out):
    """Write a generated dataset as CSV plus its description and rule files."""
    ds, ruleset = generate(dataset, seed=seed)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = dataset_spec(ds)
    csv_path = out_dir / f"{dataset}.csv"
    ds.to_csv(csv_path)
    (out_dir / f"{dataset}.schema.json").write_text(
        json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
    (out_dir / f"{dataset}.rules.json").write_text(
        json.dumps(ruleset.to_dict(), indent=2), encoding="utf-8")
    click.echo(f"wrote {csv_path} ({len(ds.records)} rows), schema and rules")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--sessions-dir", default="./sessions", show_default=True)
def serve(host, port, sessions_dir):
    """Start the labeling session service."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(sessions_dir), host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
