/**
 * Figure builders: each consumes parsed pipeline tables, reports the
 * plotting data it extracted (verbatim column values, no recomputed
 * statistics), and assembles an SVG. Frequency axes are log10-scaled where
 * the tables carry raw frequencies.
 */

import {
  Table,
  column,
  distinct,
  filterRows,
  numColumn,
  records,
  requireColumns,
} from "./csv";
import {
  BoxStats,
  PANEL_HEIGHT,
  PANEL_WIDTH,
  PLOT,
  Panel,
  Scale,
  assemble,
  axes,
  boxGlyph,
  dots,
  extent,
  linearScale,
  polyline,
} from "./svg";

export interface Figure {
  id: string;
  data: Record<string, unknown>;
  svg: string;
}

const log10 = (v: number): number => (v > 0 ? Math.log10(v) : NaN);

function scales(xs: number[], ys: number[]): { x: Scale; y: Scale } {
  return {
    x: linearScale(extent(xs), [PLOT.left, PLOT.right]),
    y: linearScale(extent(ys), [PLOT.bottom, PLOT.top]),
  };
}

// ---------------------------------------------------------------------------
// fig1: measure scatter with running percentiles, null band, and ceiling

export interface Fig1Options {
  window?: string;
  mode?: "users" | "threads";
}

export function buildFig1(
  measures: Table,
  running: Table,
  bands: Table,
  options: Fig1Options = {},
): Figure {
  requireColumns(measures, ["window_index", "word", "f", "d_user", "d_thread", "d_user_max", "valid"], "measures");
  requireColumns(running, ["scope", "mode", "x_center", "p10", "p50", "p90"], "running_measures");
  requireColumns(bands, ["window_index", "mode", "bin_center", "p10", "p90"], "bands");
  if (measures.rows.length === 0) {
    throw new Error("no rows");
  }
  const mode = options.mode ?? "users";
  const dColumn = mode === "users" ? "d_user" : "d_thread";
  const window = options.window ?? column(bands, "window_index")[0] ?? column(measures, "window_index")[0];

  const scatterRows = filterRows(
    measures,
    (r) => r.window_index === window && r.valid === "1" && r[dColumn] !== "",
  );
  const f = numColumn(scatterRows, "f");
  const d = numColumn(scatterRows, dColumn);
  const ceiling = numColumn(scatterRows, mode === "users" ? "d_user_max" : "d_thread_max");

  const curveRows = filterRows(running, (r) => r.scope === window && r.mode === mode);
  const bandRows = filterRows(bands, (r) => r.window_index === window && r.mode === mode);

  const data = {
    window,
    mode,
    scatter: { f, d },
    ceiling,
    curves: {
      x: numColumn(curveRows, "x_center"),
      p10: numColumn(curveRows, "p10"),
      p50: numColumn(curveRows, "p50"),
      p90: numColumn(curveRows, "p90"),
    },
    band: {
      x: numColumn(bandRows, "bin_center"),
      lo: numColumn(bandRows, "p10"),
      hi: numColumn(bandRows, "p90"),
    },
  };

  const logf = f.map(log10);
  const xs = [...logf, ...data.curves.x, ...data.band.x];
  const ys = [...d, ...data.curves.p10, ...data.curves.p90, ...data.band.lo, ...data.band.hi];
  const { x, y } = scales(xs, ys);
  const order = logf.map((_, i) => i).sort((a, b) => logf[a] - logf[b]);
  const body = [
    dots(logf, d, x, y, 'fill="steelblue" fill-opacity="0.45" stroke="none"'),
    polyline(data.curves.x, data.curves.p50, x, y, 'stroke="red" stroke-width="1.5"'),
    polyline(data.curves.x, data.curves.p10, x, y, 'stroke="red" stroke-dasharray="4 2"'),
    polyline(data.curves.x, data.curves.p90, x, y, 'stroke="red" stroke-dasharray="4 2"'),
    polyline(data.band.x, data.band.lo, x, y, 'stroke="blue" stroke-dasharray="2 2"'),
    polyline(data.band.x, data.band.hi, x, y, 'stroke="blue" stroke-dasharray="2 2"'),
    polyline(order.map((i) => logf[i]), order.map((i) => ceiling[i]), x, y, 'stroke="black"'),
    axes(x, y, "log10 f", mode === "users" ? "d_user" : "d_thread", PLOT),
  ].join("");
  return {
    id: "fig1",
    data,
    svg: assemble([{ title: `window ${window}: dissemination vs frequency (${mode})`, body }], PANEL_WIDTH, PANEL_HEIGHT),
  };
}

// ---------------------------------------------------------------------------
// fig2: per-window running medians plus the combined median

export function buildFig2(running: Table, mode: "users" | "threads" = "users"): Figure {
  requireColumns(running, ["scope", "mode", "x_center", "p50"], "running_measures");
  if (running.rows.length === 0) {
    throw new Error("no rows");
  }
  const modeRows = filterRows(running, (r) => r.mode === mode);
  const series = distinct(modeRows, "scope").map((scope) => {
    const rows = filterRows(modeRows, (r) => r.scope === scope);
    return { scope, x: numColumn(rows, "x_center"), p50: numColumn(rows, "p50") };
  });
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.p50);
  const { x, y } = scales(xs, ys);
  const body = series
    .map((s) =>
      polyline(
        s.x,
        s.p50,
        x,
        y,
        s.scope === "combined" ? 'stroke="red" stroke-width="2"' : 'stroke="lightblue"',
      ),
    )
    .concat(axes(x, y, "log10 f", `median d (${mode})`, PLOT))
    .join("");
  return {
    id: "fig2",
    data: { mode, series },
    svg: assemble([{ title: `running medians over all windows (${mode})`, body }], PANEL_WIDTH, PANEL_HEIGHT),
  };
}

// ---------------------------------------------------------------------------
// fig3/fig4/fig5: fate analyses against one predictor

export type FateSource = "d_user" | "d_thread" | "log10_f";

export interface FateTables {
  fate: Table;
  survival: Table;
  fateRunning: Table;
  medians: Table;
  franges?: Table;
}

const FATE_PREDICTOR: Record<FateSource, string> = {
  d_user: "d_user_t1",
  d_thread: "d_thread_t1",
  log10_f: "log10_f_t1",
};

export function buildFateFigure(id: string, source: FateSource, tables: FateTables): Figure {
  requireColumns(tables.fate, ["t1_index", "t2_index", "word", "log10_f_t1", "d_user_t1", "d_thread_t1", "survived", "dlog10_f"], "fate");
  requireColumns(tables.survival, ["t1_index", "source", "bin_center", "fraction"], "survival");
  requireColumns(tables.fateRunning, ["t1_index", "source", "x_center", "p10", "p50", "p90"], "fate_running");
  requireColumns(tables.medians, ["t1_index", "source", "target", "median"], "medians");
  if (tables.fate.rows.length === 0) {
    throw new Error("no rows");
  }
  const pairKey = records(tables.fate)[0].t1_index;

  const panels: Panel[] = [];
  const data: Record<string, unknown> = { source, pair: pairKey };

  const survivalRows = filterRows(tables.survival, (r) => r.source === source);
  if (survivalRows.rows.length > 0) {
    const byPair = distinct(survivalRows, "t1_index").map((t1) => {
      const rows = filterRows(survivalRows, (r) => r.t1_index === t1);
      return { t1, x: numColumn(rows, "bin_center"), fraction: numColumn(rows, "fraction") };
    });
    data.survival = byPair;
    const xs = byPair.flatMap((s) => s.x);
    const { x, y } = { x: linearScale(extent(xs), [PLOT.left, PLOT.right]), y: linearScale([0, 1], [PLOT.bottom, PLOT.top]) };
    const body = byPair
      .map((s, k) => polyline(s.x, s.fraction, x, y, k === 0 ? 'stroke="red" stroke-width="2"' : 'stroke="gray"'))
      .concat(axes(x, y, source, "fraction falling below threshold", PLOT))
      .join("");
    panels.push({ title: "threshold survival", body });
  }

  const scatterRows = filterRows(tables.fate, (r) => r.t1_index === pairKey && r.dlog10_f !== "");
  const px = numColumn(scatterRows, FATE_PREDICTOR[source]);
  const py = numColumn(scatterRows, "dlog10_f");
  const runningRows = filterRows(tables.fateRunning, (r) => r.source === source && r.t1_index === pairKey);
  const curves = {
    x: numColumn(runningRows, "x_center"),
    p10: numColumn(runningRows, "p10"),
    p50: numColumn(runningRows, "p50"),
    p90: numColumn(runningRows, "p90"),
  };
  data.scatter = { x: px, y: py };
  data.curves = curves;
  let cutoffs: number[] = [];
  if (source === "log10_f" && tables.franges && tables.franges.rows.length > 0) {
    requireColumns(tables.franges, ["t1_index", "log10_f_min", "log10_f_max"], "franges");
    const frRows = filterRows(tables.franges, (r) => r.t1_index === pairKey);
    cutoffs = [...numColumn(frRows, "log10_f_min"), ...numColumn(frRows, "log10_f_max")];
    data.cutoffs = cutoffs;
  }
  {
    const { x, y } = scales([...px, ...curves.x, ...cutoffs], [...py, ...curves.p10, ...curves.p90]);
    const body = [
      dots(px, py, x, y, 'fill="steelblue" fill-opacity="0.45" stroke="none"'),
      polyline(curves.x, curves.p50, x, y, 'stroke="red" stroke-width="1.5"'),
      polyline(curves.x, curves.p10, x, y, 'stroke="red" stroke-dasharray="4 2"'),
      polyline(curves.x, curves.p90, x, y, 'stroke="red" stroke-dasharray="4 2"'),
      cutoffs
        .map((c) => polyline([c, c], [y.domain[0], y.domain[1]], x, y, 'stroke="green" stroke-dasharray="5 3"'))
        .join(""),
      axes(x, y, source, "dlog10 f", PLOT),
    ].join("");
    panels.push({ title: `frequency change vs ${source}`, body });
  }

  const medianRows = filterRows(tables.medians, (r) => r.source === source && r.median !== "");
  if (medianRows.rows.length > 0) {
    const targets = distinct(medianRows, "target").map((target) => {
      const rows = filterRows(medianRows, (r) => r.target === target);
      return { target, t1: numColumn(rows, "t1_index"), median: numColumn(rows, "median") };
    });
    data.medians = targets;
    const xs = targets.flatMap((t) => t.t1);
    const ys = targets.flatMap((t) => t.median);
    const { x, y } = scales(xs, ys);
    const body = targets
      .map((t, k) =>
        dots(t.t1, t.median, x, y, k === 0 ? 'fill="darkorange"' : 'fill="purple"', 3) +
        polyline(t.t1, t.median, x, y, k === 0 ? 'stroke="darkorange"' : 'stroke="purple"'),
      )
      .concat(axes(x, y, "t1 window index", "median dlog10 f", PLOT))
      .join("");
    panels.push({ title: "summary medians per pair", body });
  }

  return { id, data, svg: assemble(panels, PANEL_WIDTH, PANEL_HEIGHT) };
}

// ---------------------------------------------------------------------------
// fig6: normalized occurrence series and per-window totals

export function buildFig6(normalized: Table, windows: Table): Figure {
  requireColumns(normalized, ["word", "window_index", "normalized"], "normalized");
  requireColumns(windows, ["window_index", "n_tokens"], "windows");
  if (normalized.rows.length === 0) {
    throw new Error("no rows");
  }
  const words = distinct(normalized, "word").map((word) => {
    const rows = filterRows(normalized, (r) => r.word === word);
    return { word, x: numColumn(rows, "window_index"), y: numColumn(rows, "normalized") };
  });
  const totals = { x: numColumn(windows, "window_index"), y: numColumn(windows, "n_tokens") };
  const panels: Panel[] = [];
  {
    const { x, y } = scales(words.flatMap((w) => w.x), [0, 1]);
    const palette = ["black", "blue", "red", "green", "purple", "orange", "brown", "teal"];
    const body = words
      .map((w, k) => polyline(w.x, w.y, x, y, `stroke="${palette[k % palette.length]}"`))
      .concat(axes(x, y, "window index", "occurrences / peak", PLOT))
      .join("");
    panels.push({ title: "normalized occurrence series", body });
  }
  {
    const { x, y } = scales(totals.x, totals.y);
    const body =
      polyline(totals.x, totals.y, x, y, 'stroke="black" stroke-width="1.5"') +
      axes(x, y, "window index", "total tokens", PLOT);
    panels.push({ title: "window token totals", body });
  }
  return { id: "fig6", data: { words, totals }, svg: assemble(panels, PANEL_WIDTH, PANEL_HEIGHT) };
}

// ---------------------------------------------------------------------------
// fig7: trajectories in frequency-dissemination space with cohort boxes

export function buildFig7(trajectories: Table, running: Table, cohorts: Table): Figure {
  requireColumns(trajectories, ["word", "label", "f", "d_user", "d_thread", "valid"], "trajectories");
  requireColumns(running, ["scope", "mode", "x_center", "p50"], "running_measures");
  requireColumns(cohorts, ["cohort", "scope", "metric", "median", "q25", "q75"], "cohorts");
  if (trajectories.rows.length === 0) {
    throw new Error("no rows");
  }
  const panels: Panel[] = [];
  const data: Record<string, unknown> = {};
  for (const mode of ["users", "threads"] as const) {
    const dColumn = mode === "users" ? "d_user" : "d_thread";
    const labeled = filterRows(trajectories, (r) => r.label !== "unlabeled" && r.valid === "1" && r[dColumn] !== "");
    const words = distinct(labeled, "word").map((word) => {
      const rows = filterRows(labeled, (r) => r.word === word);
      return {
        word,
        label: column(rows, "label")[0],
        f: numColumn(rows, "f"),
        d: numColumn(rows, dColumn),
      };
    });
    const medianRows = filterRows(running, (r) => r.scope === "combined" && r.mode === mode);
    const median = { x: numColumn(medianRows, "x_center"), p50: numColumn(medianRows, "p50") };
    const metric = mode === "users" ? "mean_d_user" : "mean_d_thread";
    const boxes = records(cohorts)
      .filter((r) => r.metric === metric || r.metric === "mean_f")
      .map((r) => ({
        cohort: r.cohort,
        scope: r.scope,
        metric: r.metric,
        median: Number(r.median),
        q25: Number(r.q25),
        q75: Number(r.q75),
      }));
    data[mode] = { words, median, boxes };

    const logf = words.flatMap((w) => w.f.map(log10));
    const ys = [...words.flatMap((w) => w.d), ...median.p50, ...boxes.filter((b) => b.metric === metric).flatMap((b) => [b.q25, b.q75])];
    const { x, y } = scales([...logf, ...median.x], ys);
    const parts: string[] = [polyline(median.x, median.p50, x, y, 'stroke="red" stroke-width="1.5"')];
    for (const w of words) {
      const style = w.label === "P" ? 'stroke="black"' : 'stroke="blue"';
      parts.push(polyline(w.f.map(log10), w.d, x, y, style));
      parts.push(dots(w.f.map(log10), w.d, x, y, w.label === "P" ? 'fill="black"' : 'fill="blue"'));
    }
    const fBoxes = boxes.filter((b) => b.metric === "mean_f");
    for (const box of boxes.filter((b) => b.metric === metric)) {
      const anchor = fBoxes.find((b) => b.cohort === box.cohort && b.scope === box.scope);
      const at = anchor ? log10(anchor.median) : (x.domain[0] + x.domain[1]) / 2;
      const style = box.scope === "rising_period"
        ? `stroke="${box.cohort === "P" ? "black" : "blue"}" stroke-dasharray="3 2"`
        : `stroke="${box.cohort === "P" ? "black" : "blue"}"`;
      parts.push(boxGlyph(at, box as BoxStats, x, y, 12, style));
    }
    parts.push(axes(x, y, "log10 f", dColumn, PLOT));
    panels.push({ title: `trajectories and cohorts (${mode})`, body: parts.join("") });
  }
  return { id: "fig7", data, svg: assemble(panels, PANEL_WIDTH, PANEL_HEIGHT) };
}

// ---------------------------------------------------------------------------
// fig8: box-and-whisker summary of the trimmed measures

export function buildFig8(trimSummary: Table): Figure {
  requireColumns(trimSummary, ["measure", "n", "median", "q25", "q75", "o12_5", "o87_5"], "trim_summary");
  if (trimSummary.rows.length === 0) {
    throw new Error("no rows");
  }
  const rows = records(trimSummary).map((r) => ({
    measure: r.measure,
    n: Number(r.n),
    median: Number(r.median),
    q25: Number(r.q25),
    q75: Number(r.q75),
    lo: Number(r.o12_5),
    hi: Number(r.o87_5),
  }));
  const measures = rows.filter((r) => !r.measure.includes("-"));
  const diffs = rows.filter((r) => r.measure.includes("-"));
  const panels: Panel[] = [];
  for (const [title, group] of [["measures", measures], ["conditional minus global", diffs]] as const) {
    if (group.length === 0) {
      continue;
    }
    const x = linearScale([-0.5, group.length - 0.5], [PLOT.left, PLOT.right]);
    const y = linearScale(extent(group.flatMap((g) => [g.lo, g.hi])), [PLOT.bottom, PLOT.top]);
    const parts = group.map((g, k) => boxGlyph(k, g, x, y, 28, 'stroke="black"'));
    group.forEach((g, k) => {
      parts.push(
        `<text x="${x(k).toFixed(2)}" y="${PLOT.bottom + 14}" font-size="8" text-anchor="middle">${g.measure}</text>`,
      );
    });
    parts.push(
      `<line x1="${PLOT.left}" y1="${PLOT.bottom}" x2="${PLOT.right}" y2="${PLOT.bottom}" stroke="black"/>`,
      `<line x1="${PLOT.left}" y1="${PLOT.top}" x2="${PLOT.left}" y2="${PLOT.bottom}" stroke="black"/>`,
    );
    panels.push({ title: `summary: ${title}`, body: parts.join("") });
  }
  return { id: "fig8", data: { measures, diffs }, svg: assemble(panels, PANEL_WIDTH, PANEL_HEIGHT) };
}
