#!/usr/bin/env node
/**
 * Batch figure renderer: `node dist/cli.js <figure-id> --<input> path ...
 * --out figure.svg`. Inputs are the pipeline's CSV files; the figure id
 * decides which are required.
 */

import * as fs from "fs";
import { readCsv } from "./csv";
import {
  FateSource,
  Figure,
  buildFateFigure,
  buildFig1,
  buildFig2,
  buildFig6,
  buildFig7,
  buildFig8,
} from "./figures";

function parseArgs(argv: string[]): { figure: string; options: Record<string, string> } {
  if (argv.length === 0 || argv[0].startsWith("--")) {
    throw new Error("usage: cli <fig1..fig8> [--input path ...] --out figure.svg");
  }
  const figure = argv[0];
  const options: Record<string, string> = {};
  for (let i = 1; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith("--") || value === undefined) {
      throw new Error(`malformed option near '${key}'`);
    }
    options[key.slice(2)] = value;
  }
  return { figure, options };
}

function need(options: Record<string, string>, name: string): string {
  const value = options[name];
  if (!value) {
    throw new Error(`missing required option --${name}`);
  }
  return value;
}

export function buildFigure(figure: string, options: Record<string, string>): Figure {
  switch (figure) {
    case "fig1":
      return buildFig1(
        readCsv(need(options, "measures")),
        readCsv(need(options, "running")),
        readCsv(need(options, "bands")),
        { window: options.window, mode: options.mode as "users" | "threads" | undefined },
      );
    case "fig2":
      return buildFig2(readCsv(need(options, "running")), (options.mode as "users" | "threads") ?? "users");
    case "fig3":
    case "fig4":
    case "fig5": {
      const source: FateSource =
        figure === "fig3" ? "d_user" : figure === "fig4" ? "d_thread" : "log10_f";
      return buildFateFigure(figure, source, {
        fate: readCsv(need(options, "fate")),
        survival: readCsv(need(options, "survival")),
        fateRunning: readCsv(need(options, "fate-running")),
        medians: readCsv(need(options, "medians")),
        franges: options.franges ? readCsv(options.franges) : undefined,
      });
    }
    case "fig6":
      return buildFig6(readCsv(need(options, "normalized")), readCsv(need(options, "windows")));
    case "fig7":
      return buildFig7(
        readCsv(need(options, "trajectories")),
        readCsv(need(options, "running")),
        readCsv(need(options, "cohorts")),
      );
    case "fig8":
      return buildFig8(readCsv(need(options, "trim-summary")));
    default:
      throw new Error(`unknown figure id: ${figure}`);
  }
}

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs(argv);
    const out = need(parsed.options, "out");
    const figure = buildFigure(parsed.figure, parsed.options);
    fs.writeFileSync(out, figure.svg);
    process.stdout.write(`${figure.id} -> ${out}\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
