/**
 * Minimal SVG assembly: linear scales, axes, and the handful of marks the
 * figures need. Pure string building, so identical inputs give identical
 * bytes.
 */

export interface Scale {
  (value: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const fn = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as Scale;
  fn.domain = domain;
  fn.range = range;
  return fn;
}

export function extent(values: number[], pad = 0.05): [number, number] {
  const clean = values.filter((v) => Number.isFinite(v));
  if (clean.length === 0) {
    return [0, 1];
  }
  let lo = Math.min(...clean);
  let hi = Math.max(...clean);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const margin = (hi - lo) * pad;
  return [lo - margin, hi + margin];
}

const fmt = (v: number): string => (Number.isFinite(v) ? v.toFixed(2) : "0");

export function polyline(
  xs: number[],
  ys: number[],
  x: Scale,
  y: Scale,
  style: string,
): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i])) {
      pts.push(`${fmt(x(xs[i]))},${fmt(y(ys[i]))}`);
    }
  }
  if (pts.length === 0) {
    return "";
  }
  return `<polyline fill="none" ${style} points="${pts.join(" ")}"/>`;
}

export function dots(
  xs: number[],
  ys: number[],
  x: Scale,
  y: Scale,
  style: string,
  r = 1.6,
): string {
  const out: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (Number.isFinite(xs[i]) && Number.isFinite(ys[i])) {
      out.push(`<circle cx="${fmt(x(xs[i]))}" cy="${fmt(y(ys[i]))}" r="${r}" ${style}/>`);
    }
  }
  return out.join("");
}

export interface BoxStats {
  median: number;
  q25: number;
  q75: number;
  lo?: number;
  hi?: number;
}

/** Vertical box-and-whisker glyph centered at data coordinate `at`. */
export function boxGlyph(
  at: number,
  stats: BoxStats,
  x: Scale,
  y: Scale,
  width: number,
  style: string,
): string {
  const cx = x(at);
  const half = width / 2;
  const parts = [
    `<rect x="${fmt(cx - half)}" y="${fmt(y(stats.q75))}" width="${fmt(width)}" ` +
      `height="${fmt(Math.abs(y(stats.q25) - y(stats.q75)))}" fill="none" ${style}/>`,
    `<line x1="${fmt(cx - half)}" y1="${fmt(y(stats.median))}" x2="${fmt(cx + half)}" ` +
      `y2="${fmt(y(stats.median))}" ${style} stroke-width="2"/>`,
  ];
  if (stats.lo !== undefined && stats.hi !== undefined) {
    parts.push(
      `<line x1="${fmt(cx)}" y1="${fmt(y(stats.q75))}" x2="${fmt(cx)}" y2="${fmt(y(stats.hi))}" ${style}/>`,
      `<line x1="${fmt(cx)}" y1="${fmt(y(stats.q25))}" x2="${fmt(cx)}" y2="${fmt(y(stats.lo))}" ${style}/>`,
    );
  }
  return parts.join("");
}

export function axes(
  x: Scale,
  y: Scale,
  xLabel: string,
  yLabel: string,
  plot: { left: number; top: number; right: number; bottom: number },
): string {
  const ticks = (scale: Scale, count: number): number[] => {
    const [d0, d1] = scale.domain;
    const out: number[] = [];
    for (let i = 0; i <= count; i++) {
      out.push(d0 + ((d1 - d0) * i) / count);
    }
    return out;
  };
  const parts = [
    `<line x1="${plot.left}" y1="${plot.bottom}" x2="${plot.right}" y2="${plot.bottom}" stroke="black"/>`,
    `<line x1="${plot.left}" y1="${plot.top}" x2="${plot.left}" y2="${plot.bottom}" stroke="black"/>`,
  ];
  for (const t of ticks(x, 5)) {
    const px = fmt(x(t));
    parts.push(
      `<line x1="${px}" y1="${plot.bottom}" x2="${px}" y2="${plot.bottom + 4}" stroke="black"/>`,
      `<text x="${px}" y="${plot.bottom + 14}" font-size="8" text-anchor="middle">${t.toFixed(2)}</text>`,
    );
  }
  for (const t of ticks(y, 5)) {
    const py = fmt(y(t));
    parts.push(
      `<line x1="${plot.left - 4}" y1="${py}" x2="${plot.left}" y2="${py}" stroke="black"/>`,
      `<text x="${plot.left - 6}" y="${py}" font-size="8" text-anchor="end" dominant-baseline="middle">${t.toFixed(2)}</text>`,
    );
  }
  parts.push(
    `<text x="${(plot.left + plot.right) / 2}" y="${plot.bottom + 28}" font-size="10" text-anchor="middle">${xLabel}</text>`,
    `<text x="${plot.left - 34}" y="${(plot.top + plot.bottom) / 2}" font-size="10" text-anchor="middle" ` +
      `transform="rotate(-90 ${plot.left - 34} ${(plot.top + plot.bottom) / 2})">${yLabel}</text>`,
  );
  return parts.join("");
}

export interface Panel {
  title: string;
  body: string;
}

export function assemble(panels: Panel[], width: number, height: number): string {
  const parts = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width * panels.length}" height="${height}" ` +
      `viewBox="0 0 ${width * panels.length} ${height}">`,
    `<rect width="${width * panels.length}" height="${height}" fill="white"/>`,
  ];
  panels.forEach((panel, k) => {
    parts.push(`<g transform="translate(${k * width} 0)">`);
    parts.push(`<text x="${width / 2}" y="14" font-size="11" text-anchor="middle">${panel.title}</text>`);
    parts.push(panel.body);
    parts.push("</g>");
  });
  parts.push("</svg>");
  return parts.join("\n");
}

export const PLOT = { left: 48, top: 24, right: 300, bottom: 220 };
export const PANEL_WIDTH = 330;
export const PANEL_HEIGHT = 260;
