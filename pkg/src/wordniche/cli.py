"""Command-line orchestration of the full pipeline.

All numeric tables are CSV with a format-version comment line; manifests
are JSON. Outputs are a pure function of (inputs, flags, seeds): rerunning
a subcommand with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import pipeline, synthgen, trimming
from .casestudy import load_labels
from .corpus import (
    DEFAULT_WINDOW_DAYS,
    TokenizerConfig,
    WindowSlice,
    ingest as ingest_stream,
    parse_timestamp,
    partition_windows,
    tokenize_corpus,
)
from .counting import build_counts
from .dissemination import measure_table
from .dynamics import pair_windows
from .null_models import ShuffleScheme
from .tables import RUN_FORMAT, config_hash, write_csv, write_json


def _apply_config(params: dict, config_path: str | None) -> dict:
    """Values from the JSON config file override command-line flags."""
    if config_path:
        with open(config_path, "r", encoding="utf-8") as handle:
            overrides = json.load(handle)
        for key, value in overrides.items():
            if key in params:
                params[key] = value
            else:
                raise click.ClickException(f"unknown config key: {key}")
    return params


def _tokenizer(params: dict) -> TokenizerConfig:
    strip_quoted = params.get("strip_quoted", True)
    tc_path = params.get("tokenizer_config")
    if tc_path:
        with open(tc_path, "r", encoding="utf-8") as handle:
            fields = json.load(handle)
        strip_quoted = fields.get("strip_quoted", strip_quoted)
    return TokenizerConfig(strip_quoted=strip_quoted)


def _load_slices(params: dict) -> list[WindowSlice]:
    epoch = params.get("epoch")
    epoch_ts = parse_timestamp(epoch) if epoch else None
    try:
        corpus = ingest_stream(params["input"])
        posts = tokenize_corpus(corpus, _tokenizer(params))
        return partition_windows(posts, params.get("window_days", DEFAULT_WINDOW_DAYS), epoch_ts)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc


def _build_all(slices, baseline: str):
    counts = [build_counts(sl) for sl in slices]
    tables = [measure_table(wc, baseline=baseline) for wc in counts]
    return counts, tables


def corpus_options(fn):
    fn = click.option("--input", "input", required=True, type=click.Path(exists=True))(fn)
    fn = click.option("--epoch", default=None, help="window epoch, ISO-8601 (default: snapped to Jan/Jul 1)")(fn)
    fn = click.option("--window-days", default=DEFAULT_WINDOW_DAYS, show_default=True)(fn)
    fn = click.option("--strip-quoted/--no-strip-quoted", default=True, show_default=True)(fn)
    fn = click.option("--tokenizer-config", default=None, type=click.Path(exists=True))(fn)
    fn = click.option("--config", "config_path", default=None, type=click.Path(exists=True),
                      help="JSON config; its values override flags")(fn)
    return fn


@click.group()
def main():
    """Word dissemination statistics for user/thread-structured corpora."""


@main.command()
@click.option("--out", required=True, type=click.Path())
@click.option("--manifest", "manifest_path", default=None, type=click.Path())
@click.option("--n-users", default=200, show_default=True)
@click.option("--n-threads", default=150, show_default=True)
@click.option("--n-windows", default=1, show_default=True)
@click.option("--posts-per-window", default=2000, show_default=True)
@click.option("--vocab-size", default=1500, show_default=True)
@click.option("--zipf-exponent", default=1.05, show_default=True)
@click.option("--theta-user", default=None, type=float)
@click.option("--theta-thread", default=None, type=float)
@click.option("--post-length-mean", default=30.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
def synth(**params):
    """Generate a synthetic corpus with a ground-truth manifest."""
    params = _apply_config(params, params.pop("config_path"))
    gen = synthgen.GenParams(
        n_users=params["n_users"],
        n_threads=params["n_threads"],
        n_windows=params["n_windows"],
        posts_per_window=params["posts_per_window"],
        vocab_size=params["vocab_size"],
        zipf_exponent=params["zipf_exponent"],
        theta_user=params["theta_user"],
        theta_thread=params["theta_thread"],
        post_length=("poisson", params["post_length_mean"]),
        seed=params["seed"],
    )
    records, manifest = synthgen.generate(gen)
    synthgen.write_corpus(params["out"], records)
    if params["manifest_path"]:
        write_json(params["manifest_path"], manifest)
    click.echo(f"wrote {len(records)} posts to {params['out']}")


@main.command()
@click.option("--input", "input", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", default=None, type=click.Path())
def ingest(**params):
    """Validate a corpus file and report accepted/rejected records."""
    try:
        corpus = ingest_stream(params["input"])
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    report = corpus.report.as_dict()
    if params["report_path"]:
        write_json(params["report_path"], report)
    click.echo(json.dumps(report, sort_keys=True))


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
@click.option("--count-tables/--no-count-tables", default=False, show_default=True,
              help="also export per-window word and user count CSVs")
def measures(**params):
    """Per-window dissemination tables (and optional raw count tables)."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    counts, tables = _build_all(slices, params["baseline"])
    outdir = Path(params["outdir"])
    write_csv(outdir / "windows.csv", pipeline.WINDOWS_HEADER, pipeline.windows_rows(slices, counts))
    write_csv(outdir / "measures.csv", pipeline.MEASURES_HEADER, pipeline.measures_rows(tables))
    write_csv(outdir / "running_measures.csv", pipeline.RUNNING_MEASURES_HEADER,
              pipeline.running_measures_rows(tables))
    if params["count_tables"]:
        for wc in counts:
            idx = wc.window.index if wc.window else 0
            write_csv(outdir / f"word_counts_w{idx:04d}.csv", pipeline.WORD_COUNTS_HEADER,
                      pipeline.word_counts_rows(wc))
            write_csv(outdir / f"user_counts_w{idx:04d}.csv", pipeline.USER_COUNTS_HEADER,
                      pipeline.user_counts_rows(wc))
    click.echo(f"measures written to {outdir}")


def _pick_band_windows(counts, choice: str):
    if choice == "all":
        return [wc for wc in counts if wc.n_tokens > 0]
    if choice == "busiest":
        busiest = max(counts, key=lambda wc: wc.n_tokens)
        return [busiest] if busiest.n_tokens else []
    index = int(choice)
    return [wc for wc in counts if wc.window and wc.window.index == index]


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--band-window", default="busiest", show_default=True,
              help="'busiest', 'all', or a window index")
@click.option("--scheme", default="global", type=click.Choice(["global", "within_thread", "within_user"]),
              show_default=True)
@click.option("--replicates", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
def bands(**params):
    """Monte Carlo percentile bands of the null dissemination measure."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    counts = [build_counts(sl) for sl in slices]
    chosen = _pick_band_windows(counts, params["band_window"])
    if not chosen:
        raise click.ClickException("no non-empty window selected")
    scheme = ShuffleScheme(params["scheme"], params["seed"], params["replicates"])
    rows = pipeline.bands_rows(chosen, scheme, baseline=params["baseline"])
    outdir = Path(params["outdir"])
    write_csv(outdir / "bands.csv", pipeline.BANDS_HEADER, rows)
    click.echo(f"bands written to {outdir}")


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
def dhat(**params):
    """Conditional dissemination measures for every window."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    counts, tables = _build_all(slices, "exact")
    outdir = Path(params["outdir"])
    write_csv(outdir / "dhat.csv", pipeline.DHAT_HEADER, pipeline.dhat_rows(counts, tables))
    click.echo(f"conditional measures written to {outdir}")


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--pairs", "pairs_mode", default="nonoverlap", type=click.Choice(["nonoverlap", "all"]),
              show_default=True)
@click.option("--lag-windows", default=4, show_default=True)
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
def dynamics(**params):
    """Word-fate analyses over window pairs."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    _, tables = _build_all(slices, params["baseline"])
    try:
        pairs = pair_windows(tables, params["lag_windows"], params["pairs_mode"])
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    outdir = Path(params["outdir"])
    write_csv(outdir / "fate.csv", pipeline.FATE_HEADER, pipeline.fate_rows(pairs))
    write_csv(outdir / "survival.csv", pipeline.SURVIVAL_HEADER, pipeline.survival_rows(pairs))
    write_csv(outdir / "fate_running.csv", pipeline.FATE_RUNNING_HEADER, pipeline.fate_running_rows(pairs))
    write_csv(outdir / "medians.csv", pipeline.MEDIANS_HEADER, pipeline.medians_rows(pairs))
    write_csv(outdir / "franges.csv", pipeline.FRANGES_HEADER, pipeline.franges_rows(pairs))
    write_csv(outdir / "correlations.csv", pipeline.CORRELATIONS_HEADER, pipeline.correlations_rows(pairs))
    click.echo(f"dynamics written to {outdir}")


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--pairs", "pairs_mode", default="nonoverlap", type=click.Choice(["nonoverlap", "all"]),
              show_default=True)
@click.option("--lag-windows", default=4, show_default=True)
@click.option("--pool/--per-pair", "pool_only", default=False,
              help="--pool emits only the pooled decomposition")
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
def importance(**params):
    """Relative importance decomposition of frequency-change predictors."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    _, tables = _build_all(slices, params["baseline"])
    try:
        pairs = pair_windows(tables, params["lag_windows"], params["pairs_mode"])
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    rows = pipeline.importance_rows(pairs, per_pair=not params["pool_only"])
    if not rows:
        raise click.ClickException("too few surviving words for the regression")
    outdir = Path(params["outdir"])
    write_csv(outdir / "importance.csv", pipeline.IMPORTANCE_HEADER, rows)
    click.echo(f"importance written to {outdir}")


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--post-length", default=0, show_default=True,
              help="0 picks the corpus median post length")
@click.option("--max-per-entity", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
def trim(**params):
    """Standardize windows and compute trimmed correlations and summaries."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    length = params["post_length"] or _median_post_length(slices)
    trim_params = trimming.TrimParams(
        post_length=length,
        max_posts_per_entity=params["max_per_entity"],
        seed=params["seed"],
    )
    _, stage_rows = pipeline.trim_stage(slices, trim_params)
    outdir = Path(params["outdir"])
    write_csv(outdir / "trim_report.csv", pipeline.TRIM_REPORT_HEADER, stage_rows["trim_report"])
    write_csv(outdir / "trim_correlations.csv", pipeline.TRIM_CORR_HEADER, stage_rows["trim_correlations"])
    write_csv(outdir / "trim_correlation_summary.csv", pipeline.TRIM_CORR_SUMMARY_HEADER,
              stage_rows["trim_correlation_summary"])
    write_csv(outdir / "trim_summary.csv", pipeline.TRIM_SUMMARY_HEADER, stage_rows["trim_summary"])
    click.echo(f"trim outputs written to {outdir}")


def _median_post_length(slices) -> int:
    lengths = [len(p.tokens) for sl in slices for p in sl.posts if p.tokens]
    if not lengths:
        raise click.ClickException("no posts")
    return max(1, int(np.median(lengths)))


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True),
              help="CSV of (word,label); defaults to the starter P/S list")
@click.option("--quiet-years", default=2.0, show_default=True)
@click.option("--min-active", default=4, show_default=True)
@click.option("--min-consecutive", default=3, show_default=True)
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
def casestudy(**params):
    """Rising-word detection, trajectories, and cohort statistics."""
    params = _apply_config(params, params.pop("config_path"))
    slices = _load_slices(params)
    _, tables = _build_all(slices, params["baseline"])
    labels = load_labels(params["labels_path"]) if params["labels_path"] else None
    try:
        stage_rows = pipeline.casestudy_stage(
            tables, slices[0].window.start, labels,
            params["quiet_years"], params["min_active"], params["min_consecutive"],
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    outdir = Path(params["outdir"])
    write_csv(outdir / "trajectories.csv", pipeline.TRAJECTORIES_HEADER, stage_rows["trajectories"])
    write_csv(outdir / "normalized.csv", pipeline.NORMALIZED_HEADER, stage_rows["normalized"])
    write_csv(outdir / "cohorts.csv", pipeline.COHORTS_HEADER, stage_rows["cohorts"])
    write_csv(outdir / "risers.csv", pipeline.RISERS_HEADER, stage_rows["risers"])
    click.echo(f"case study written to {outdir}")


@main.command()
@corpus_options
@click.option("--outdir", required=True, type=click.Path())
@click.option("--baseline", default="poisson", type=click.Choice(["poisson", "exact"]), show_default=True)
@click.option("--band-window", default="busiest", show_default=True)
@click.option("--replicates", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--pairs", "pairs_mode", default="nonoverlap", type=click.Choice(["nonoverlap", "all"]),
              show_default=True)
@click.option("--lag-windows", default=4, show_default=True)
@click.option("--post-length", default=0, show_default=True)
@click.option("--max-per-entity", default=10, show_default=True)
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True))
@click.option("--quiet-years", default=2.0, show_default=True)
@click.option("--min-active", default=4, show_default=True)
@click.option("--min-consecutive", default=3, show_default=True)
def report(**params):
    """Run the full pipeline and bundle all CSVs plus a run manifest."""
    params = _apply_config(params, params.pop("config_path"))
    outdir = Path(params["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    # the output location is not part of the analysis configuration
    config = {k: v for k, v in sorted(params.items()) if k != "outdir"}
    stages: list[dict] = []
    outputs: list[str] = []

    def emit(name: str, header, rows):
        write_csv(outdir / f"{name}.csv", header, rows)
        outputs.append(f"{name}.csv")

    def run_stage(name, fn):
        try:
            fn()
            stages.append({"name": name, "status": "ok"})
        except Exception as exc:  # noqa: BLE001 - per-stage status reporting
            stages.append({"name": name, "status": "failed", "error": str(exc)})

    slices = _load_slices(params)
    counts, tables = _build_all(slices, params["baseline"])

    run_stage("measures", lambda: (
        emit("windows", pipeline.WINDOWS_HEADER, pipeline.windows_rows(slices, counts)),
        emit("measures", pipeline.MEASURES_HEADER, pipeline.measures_rows(tables)),
        emit("running_measures", pipeline.RUNNING_MEASURES_HEADER, pipeline.running_measures_rows(tables)),
    ))

    def do_bands():
        chosen = _pick_band_windows(counts, params["band_window"])
        scheme = ShuffleScheme("global", params["seed"], params["replicates"])
        emit("bands", pipeline.BANDS_HEADER, pipeline.bands_rows(chosen, scheme, baseline=params["baseline"]))

    run_stage("bands", do_bands)
    run_stage("dhat", lambda: emit("dhat", pipeline.DHAT_HEADER, pipeline.dhat_rows(counts, tables)))

    def do_dynamics():
        pairs = pair_windows(tables, params["lag_windows"], params["pairs_mode"])
        emit("fate", pipeline.FATE_HEADER, pipeline.fate_rows(pairs))
        emit("survival", pipeline.SURVIVAL_HEADER, pipeline.survival_rows(pairs))
        emit("fate_running", pipeline.FATE_RUNNING_HEADER, pipeline.fate_running_rows(pairs))
        emit("medians", pipeline.MEDIANS_HEADER, pipeline.medians_rows(pairs))
        emit("franges", pipeline.FRANGES_HEADER, pipeline.franges_rows(pairs))
        emit("correlations", pipeline.CORRELATIONS_HEADER, pipeline.correlations_rows(pairs))
        imp = pipeline.importance_rows(pairs)
        emit("importance", pipeline.IMPORTANCE_HEADER, imp)

    run_stage("dynamics", do_dynamics)

    def do_trim():
        length = params["post_length"] or _median_post_length(slices)
        trim_params = trimming.TrimParams(
            post_length=length,
            max_posts_per_entity=params["max_per_entity"],
            seed=params["seed"],
        )
        _, stage_rows = pipeline.trim_stage(slices, trim_params)
        emit("trim_report", pipeline.TRIM_REPORT_HEADER, stage_rows["trim_report"])
        emit("trim_correlations", pipeline.TRIM_CORR_HEADER, stage_rows["trim_correlations"])
        emit("trim_correlation_summary", pipeline.TRIM_CORR_SUMMARY_HEADER,
             stage_rows["trim_correlation_summary"])
        emit("trim_summary", pipeline.TRIM_SUMMARY_HEADER, stage_rows["trim_summary"])

    run_stage("trim", do_trim)

    def do_casestudy():
        labels = load_labels(params["labels_path"]) if params["labels_path"] else None
        stage_rows = pipeline.casestudy_stage(
            tables, slices[0].window.start, labels,
            params["quiet_years"], params["min_active"], params["min_consecutive"],
        )
        emit("trajectories", pipeline.TRAJECTORIES_HEADER, stage_rows["trajectories"])
        emit("normalized", pipeline.NORMALIZED_HEADER, stage_rows["normalized"])
        emit("cohorts", pipeline.COHORTS_HEADER, stage_rows["cohorts"])
        emit("risers", pipeline.RISERS_HEADER, stage_rows["risers"])

    run_stage("casestudy", do_casestudy)

    manifest = {
        "format": RUN_FORMAT,
        "config": config,
        "config_hash": config_hash(config),
        "seeds": {"bands": params["seed"], "trim": params["seed"]},
        "stages": stages,
        "outputs": sorted(outputs),
    }
    write_json(outdir / "manifest.json", manifest)
    failed = [s["name"] for s in stages if s["status"] != "ok"]
    if failed:
        click.echo(f"stages failed: {', '.join(failed)}", err=True)
        sys.exit(1)
    click.echo(f"report written to {outdir}")


if __name__ == "__main__":
    main()
