"""Stage runners shared by the CLI subcommands.

Each stage takes in-memory inputs and returns (header, rows) pairs ready
for :func:`wordniche.tables.write_csv`. Keeping the stages free of file
handling makes the report pipeline and the tests share one code path.
"""

from __future__ import annotations

import logging

import numpy as np

from . import casestudy, dynamics, importance, trimming
from .corpus import WindowSlice, format_timestamp
from .counting import WindowCounts
from .dissemination import MeasureTable
from .dynamics import WindowPair, running_stats
from .null_models import ShuffleScheme, dhat_table, mc_band

logger = logging.getLogger(__name__)

WINDOWS_HEADER = ("window_index", "start", "end", "center", "n_posts", "n_tokens", "n_users", "n_threads")
MEASURES_HEADER = (
    "window_index", "word", "n_w", "f", "u_w", "t_w", "u_expected", "t_expected",
    "d_user", "d_thread", "d_user_max", "d_thread_max", "valid",
)
RUNNING_MEASURES_HEADER = ("scope", "mode", "x_center", "p10", "p50", "p90", "n")
BANDS_HEADER = ("window_index", "mode", "bin_center", "p10", "p90", "n")
DHAT_HEADER = ("window_index", "word", "d_user", "dhat_user", "d_thread", "dhat_thread")
FATE_HEADER = (
    "t1_index", "t2_index", "word", "log10_f_t1", "d_user_t1", "d_thread_t1",
    "survived", "dlog10_f", "dd_user", "dd_thread",
)
SURVIVAL_HEADER = ("t1_index", "t2_index", "source", "bin_center", "fraction", "n")
FATE_RUNNING_HEADER = ("t1_index", "t2_index", "source", "x_center", "p10", "p50", "p90", "n")
MEDIANS_HEADER = ("t1_index", "t2_index", "source", "target", "median", "n")
FRANGES_HEADER = ("t1_index", "t2_index", "log10_f_min", "log10_f_max", "satisfied")
CORRELATIONS_HEADER = ("scope", "direction", "t1_index", "t2_index", "n", "r_user", "r_thread")
IMPORTANCE_HEADER = ("scope", "t1_index", "t2_index", "predictor", "importance", "full_r2", "n")
TRIM_REPORT_HEADER = (
    "window_index", "posts_kept", "posts_removed", "n_users", "n_threads",
    "ks_distance", "iterations", "balanced",
)
TRIM_CORR_HEADER = ("window_index", "pair", "r", "n")
TRIM_CORR_SUMMARY_HEADER = ("pair", "mean", "std", "n_windows")
TRIM_SUMMARY_HEADER = ("measure", "n", "median", "q25", "q75", "o12_5", "o87_5", "below_0_4")
TRAJECTORIES_HEADER = ("word", "label", "window_index", "window_center", "n_w", "f", "d_user", "d_thread", "valid")
NORMALIZED_HEADER = ("word", "window_index", "window_center", "n_w", "normalized")
COHORTS_HEADER = ("cohort", "scope", "metric", "n_words", "median", "q25", "q75")
RISERS_HEADER = ("word", "label", "first_valid_index", "peak_index")
WORD_COUNTS_HEADER = ("word", "n_w", "u_w", "t_w")
USER_COUNTS_HEADER = ("user", "m_i")


def windows_rows(slices: list[WindowSlice], counts: list[WindowCounts]) -> list[tuple]:
    rows = []
    for sl, wc in zip(slices, counts):
        w = sl.window
        rows.append((
            w.index, format_timestamp(w.start), format_timestamp(w.end),
            format_timestamp(w.center), sl.n_posts, wc.n_tokens, wc.n_users, wc.n_threads,
        ))
    return rows


def measures_rows(tables: list[MeasureTable]) -> list[tuple]:
    rows = []
    for t in tables:
        for i, word in enumerate(t.words):
            rows.append((
                t.window_index, word, int(t.n_w[i]), float(t.f[i]),
                int(t.u_w[i]), int(t.t_w[i]),
                float(t.u_expected[i]), float(t.t_expected[i]),
                float(t.d_user[i]), float(t.d_thread[i]),
                float(t.d_user_max[i]), float(t.d_thread_max[i]),
                bool(t.valid[i]),
            ))
    return rows


def word_counts_rows(counts: WindowCounts) -> list[tuple]:
    return [
        (w, int(counts.word_counts[i]), int(counts.word_users[i]), int(counts.word_threads[i]))
        for i, w in enumerate(counts.words)
    ]


def user_counts_rows(counts: WindowCounts) -> list[tuple]:
    return [(u, int(counts.user_tokens[i])) for i, u in enumerate(counts.users)]


def running_measures_rows(
    tables: list[MeasureTable],
    width: float = 0.25,
    step: float = 0.05,
    min_count: int = 20,
) -> list[tuple]:
    """Per-window running percentiles of D against log10 f, plus a combined
    median curve over the pooled per-window medians."""
    rows = []
    pooled: dict[str, list[tuple[float, float]]] = {"users": [], "threads": []}
    for t in tables:
        for mode, d in (("users", t.d_user), ("threads", t.d_thread)):
            mask = t.valid & np.isfinite(d)
            if np.count_nonzero(mask) < min_count:
                continue
            stats = running_stats(np.log10(t.f[mask]), d[mask], width, step, min_count)
            for k, x in enumerate(stats.x_centers):
                rows.append((
                    t.window_index, mode, float(x),
                    float(stats.curves[10.0][k]), float(stats.curves[50.0][k]),
                    float(stats.curves[90.0][k]), int(stats.n[k]),
                ))
                pooled[mode].append((float(x), float(stats.curves[50.0][k])))
    for mode, pts in pooled.items():
        if len(pts) < min_count:
            continue
        xs = np.asarray([p[0] for p in pts])
        ys = np.asarray([p[1] for p in pts])
        stats = running_stats(xs, ys, width, step, min_count=min(min_count, len(xs)))
        for k, x in enumerate(stats.x_centers):
            rows.append((
                "combined", mode, float(x),
                float(stats.curves[10.0][k]), float(stats.curves[50.0][k]),
                float(stats.curves[90.0][k]), int(stats.n[k]),
            ))
    return rows


def bands_rows(
    counts_list: list[WindowCounts],
    scheme: ShuffleScheme,
    bin_width: float = 0.25,
    min_samples: int = 20,
    baseline: str = "poisson",
) -> list[tuple]:
    rows = []
    for wc in counts_list:
        if wc.n_tokens == 0:
            continue
        for mode in ("users", "threads"):
            band = mc_band(wc, mode, scheme, bin_width=bin_width,
                           min_samples=min_samples, baseline=baseline)
            idx = wc.window.index if wc.window else 0
            for k in range(len(band.bin_centers)):
                rows.append((
                    idx, mode, float(band.bin_centers[k]),
                    float(band.lo[k]), float(band.hi[k]), int(band.n[k]),
                ))
    return rows


def dhat_rows(counts_list: list[WindowCounts], tables: list[MeasureTable]) -> list[tuple]:
    rows = []
    for wc, t in zip(counts_list, tables):
        ids = np.nonzero(t.threshold_ok)[0]
        if len(ids) == 0:
            continue
        cond = dhat_table(wc, ids)
        for k, i in enumerate(ids):
            rows.append((
                t.window_index, t.words[i],
                float(t.d_user[i]), float(cond["dhat_user"][k]),
                float(t.d_thread[i]), float(cond["dhat_thread"][k]),
            ))
    return rows


def fate_rows(pairs: list[WindowPair]) -> list[tuple]:
    rows = []
    for pair in pairs:
        for rec in pair.records():
            rows.append((
                pair.t1_index, pair.t2_index, rec.word, rec.log10_f_t1,
                rec.d_user_t1, rec.d_thread_t1, rec.survived,
                rec.dlog10_f, rec.dd_user, rec.dd_thread,
            ))
    return rows


def survival_rows(pairs: list[WindowPair], min_count: int = 20) -> list[tuple]:
    rows = []
    for pair in pairs:
        for source in ("d_user", "d_thread"):
            curve = dynamics.survival_curve(pair, source, min_count=min_count)
            for k in range(len(curve.bin_centers)):
                rows.append((
                    pair.t1_index, pair.t2_index, source,
                    float(curve.bin_centers[k]), float(curve.fraction[k]), int(curve.n[k]),
                ))
    return rows


def fate_running_rows(
    pairs: list[WindowPair],
    d_width: float = 0.2,
    d_step: float = 0.02,
    f_width: float = 0.25,
    f_step: float = 0.05,
    min_count: int = 50,
) -> list[tuple]:
    rows = []
    for pair in pairs:
        surv = pair.survived
        if np.count_nonzero(surv) < min_count:
            continue
        y = pair.dlog10_f[surv]
        for source, x, width, step in (
            ("d_user", pair.d_user_t1[surv], d_width, d_step),
            ("d_thread", pair.d_thread_t1[surv], d_width, d_step),
            ("log10_f", pair.log10_f_t1[surv], f_width, f_step),
        ):
            try:
                stats = running_stats(x, y, width, step, min_count)
            except ValueError:
                continue
            for k, xc in enumerate(stats.x_centers):
                rows.append((
                    pair.t1_index, pair.t2_index, source, float(xc),
                    float(stats.curves[10.0][k]), float(stats.curves[50.0][k]),
                    float(stats.curves[90.0][k]), int(stats.n[k]),
                ))
    return rows


def medians_rows(pairs: list[WindowPair], min_count: int = 20) -> list[tuple]:
    rows = []
    for pair in pairs:
        for source in ("d_user", "d_thread"):
            med = dynamics.summary_medians(pair, source, min_count=min_count)
            for target in sorted(med):
                value, n = med[target]
                rows.append((pair.t1_index, pair.t2_index, source, target, value, n))
    return rows


def franges_rows(pairs: list[WindowPair]) -> list[tuple]:
    rows = []
    for pair in pairs:
        fr = dynamics.freq_range(pair)
        rows.append((pair.t1_index, pair.t2_index, fr.log10_f_min, fr.log10_f_max, fr.satisfied))
    return rows


def correlations_rows(pairs: list[WindowPair], min_words: int = 30) -> list[tuple]:
    rows = []
    for direction in ("forward", "reversed"):
        try:
            pooled = dynamics.delta_correlations(pairs, direction, min_words)
            rows.append(("pooled", direction, None, None, pooled.n, pooled.r_user, pooled.r_thread))
        except ValueError as exc:
            logger.warning("pooled %s correlations unavailable: %s", direction, exc)
        for pair in pairs:
            try:
                one = dynamics.delta_correlations([pair], direction, min_words)
            except ValueError as exc:
                logger.warning(
                    "pair (%d, %d) %s correlations unavailable: %s",
                    pair.t1_index, pair.t2_index, direction, exc,
                )
                continue
            rows.append((
                "pair", direction, pair.t1_index, pair.t2_index, one.n, one.r_user, one.r_thread,
            ))
    return rows


def _importance_design(pairs: list[WindowPair]) -> importance.RegressionDesign | None:
    dlogf, du, dt, lf = [], [], [], []
    for pair in pairs:
        fr = dynamics.freq_range(pair)
        keep = (
            pair.survived
            & (pair.log10_f_t1 >= fr.log10_f_min - 1e-12)
            & (pair.log10_f_t1 <= fr.log10_f_max + 1e-12)
        )
        dlogf.append(pair.dlog10_f[keep])
        du.append(pair.d_user_t1[keep])
        dt.append(pair.d_thread_t1[keep])
        lf.append(pair.log10_f_t1[keep])
    y = np.concatenate(dlogf) if dlogf else np.empty(0)
    if len(y) < 30:
        return None
    return importance.RegressionDesign(
        response=y,
        predictors={
            "d_user": np.concatenate(du),
            "d_thread": np.concatenate(dt),
            "log10_f": np.concatenate(lf),
        },
    )


def importance_rows(pairs: list[WindowPair], per_pair: bool = True) -> list[tuple]:
    rows = []
    scopes: list[tuple[str, list[WindowPair]]] = [("pooled", pairs)]
    if per_pair:
        scopes += [("pair", [p]) for p in pairs]
    for scope, group in scopes:
        design = _importance_design(group)
        if design is None:
            logger.warning("importance: too few rows for scope %s", scope)
            continue
        try:
            fit = importance.ols_fit(design)
            shares = importance.kruskal_importance(design)
        except ValueError as exc:
            logger.warning("importance failed for scope %s: %s", scope, exc)
            continue
        t1 = group[0].t1_index if scope == "pair" else None
        t2 = group[0].t2_index if scope == "pair" else None
        for name in design.predictors:
            rows.append((scope, t1, t2, name, shares[name], fit.r_squared, design.n))
    return rows


def trim_stage(
    slices: list[WindowSlice], params: trimming.TrimParams
) -> tuple[list[WindowSlice], dict[str, list[tuple]]]:
    trimmed = []
    report_rows = []
    for sl in slices:
        if not sl.posts:
            continue
        out, report = trimming.trim_window(sl, params)
        trimmed.append(out)
        report_rows.append((
            sl.window.index, report.posts_kept, report.posts_removed,
            report.n_users, report.n_threads, report.ks_distance,
            report.iterations, report.balanced,
        ))

    summary = trimming.trimmed_correlations(trimmed)
    corr_rows = [
        (w.window_index, f"{a}:{b}", w.r[(a, b)], w.n_words)
        for w in summary.per_window
        for a, b in trimming.CORRELATION_PAIRS
    ]
    corr_summary_rows = [
        (f"{a}:{b}", summary.mean[(a, b)], summary.std[(a, b)], len(summary.per_window))
        for a, b in trimming.CORRELATION_PAIRS
    ]
    summary_rows = [
        (s.name, s.n, s.median, s.q25, s.q75, s.o12_5, s.o87_5, s.below_cutoff)
        for s in trimming.dissemination_summary(trimmed)
    ]
    return trimmed, {
        "trim_report": report_rows,
        "trim_correlations": corr_rows,
        "trim_correlation_summary": corr_summary_rows,
        "trim_summary": summary_rows,
    }


def casestudy_stage(
    tables: list[MeasureTable],
    windows_start: int,
    labels: dict[str, str] | None = None,
    quiet_years: float = 2.0,
    min_active_windows: int = 4,
    min_consecutive: int = 3,
) -> dict[str, list[tuple]]:
    labels = dict(casestudy.STARTER_LABELS if labels is None else labels)
    risers = casestudy.detect_rising(
        tables, windows_start, quiet_years, min_active_windows, min_consecutive
    )
    tracked = sorted(set(risers) | {w for w in labels if any(w in t.word_index for t in tables)})

    series = []
    for word in tracked:
        label = labels.get(word, "unlabeled")
        series.append(casestudy.trajectory(word, tables, label))

    traj_rows, norm_rows, riser_rows = [], [], []
    for s in series:
        for p in s.points:
            traj_rows.append((
                s.word, s.label, p.window_index, format_timestamp(p.window_center),
                p.n_w, p.f, p.d_user, p.d_thread, p.valid,
            ))
        peak = max(p.n_w for p in s.points)
        if peak > 0:
            for p in s.points:
                norm_rows.append((
                    s.word, p.window_index, format_timestamp(p.window_center),
                    p.n_w, p.n_w / peak,
                ))
        if s.word in risers:
            rp = s.rising_period
            riser_rows.append((
                s.word, s.label,
                rp[0] if rp else None, rp[1] if rp else None,
            ))

    cohort_rows = []
    for cohort in ("P", "S", "risers"):
        members = [s for s in series if (s.label == cohort) or (cohort == "risers" and s.word in risers)]
        if len(members) < 2:
            continue
        for scope in ("all_windows", "rising_period"):
            stats = casestudy.cohort_stats(members, scope)
            for box in stats.boxes:
                cohort_rows.append((cohort, scope, box.metric, box.n_words, box.median, box.q25, box.q75))
    return {
        "trajectories": traj_rows,
        "normalized": norm_rows,
        "cohorts": cohort_rows,
        "risers": riser_rows,
    }
