import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { describe, expect, it } from "vitest";
import { parseCsv, readCsv } from "../src/csv";
import {
  buildFateFigure,
  buildFig1,
  buildFig2,
  buildFig6,
  buildFig7,
  buildFig8,
} from "../src/figures";
import { buildFigure, main } from "../src/cli";

const FIXTURES = path.join(__dirname, "..", "fixtures", "pipeline");

// Hand-written five-row tables: the assertions below check the builders
// report exactly these values, with no recomputation.

const MEASURES_5 = parseCsv(`window_index,word,n_w,f,u_w,t_w,u_expected,t_expected,d_user,d_thread,d_user_max,d_thread_max,valid
0,aa,10,0.001,4,5,5.0,5.5,0.8,0.909,2.0,1.8,1
0,bb,20,0.002,9,9,10.0,10.0,0.9,0.9,2.0,2.0,1
0,cc,30,0.003,20,18,19.0,17.0,1.05,1.06,1.6,1.7,1
0,dd,40,0.004,24,22,24.0,22.0,1.0,1.0,1.5,1.5,1
0,ee,4,0.0004,2,2,,,,,,,0
`);

const RUNNING_5 = parseCsv(`scope,mode,x_center,p10,p50,p90,n
0,users,-3.2,0.5,0.8,1.1,30
0,users,-3.0,0.55,0.82,1.12,40
0,users,-2.8,0.6,0.85,1.15,35
combined,users,-3.1,0.52,0.81,1.11,60
combined,users,-2.9,0.58,0.84,1.13,55
`);

const BANDS_5 = parseCsv(`window_index,mode,bin_center,p10,p90,n
0,users,-3.25,0.88,1.12,200
0,users,-3.0,0.9,1.1,300
0,users,-2.75,0.92,1.08,250
0,threads,-3.0,0.91,1.09,300
0,threads,-2.75,0.93,1.07,250
`);

const FATE_5 = parseCsv(`t1_index,t2_index,word,log10_f_t1,d_user_t1,d_thread_t1,survived,dlog10_f,dd_user,dd_thread
0,4,aa,-3.1,0.4,0.5,1,-0.3,-0.1,-0.05
0,4,bb,-3.2,0.6,0.7,1,-0.1,0.02,0.01
0,4,cc,-3.3,0.9,0.95,1,0.05,0.05,0.02
0,4,dd,-3.4,1.0,1.05,1,0.1,0.0,0.0
0,4,ee,-4.0,0.3,0.35,0,,,
`);

const SURVIVAL_5 = parseCsv(`t1_index,t2_index,source,bin_center,fraction,n
0,4,d_user,0.35,0.8,40
0,4,d_user,0.45,0.6,50
0,4,d_user,0.55,0.35,45
0,4,d_user,0.65,0.2,30
0,4,d_user,0.75,0.1,25
`);

const FATE_RUNNING_5 = parseCsv(`t1_index,t2_index,source,x_center,p10,p50,p90,n
0,4,d_user,0.4,-0.5,-0.2,0.1,50
0,4,d_user,0.6,-0.35,-0.1,0.15,60
0,4,d_user,0.8,-0.25,0.0,0.2,55
0,4,log10_f,-3.8,-0.45,-0.15,0.1,50
0,4,log10_f,-3.2,-0.3,-0.05,0.18,60
`);

const THREAD_SURVIVAL_5 = parseCsv(`t1_index,t2_index,source,bin_center,fraction,n
0,4,d_thread,0.45,0.7,40
0,4,d_thread,0.55,0.5,50
0,4,d_thread,0.65,0.3,45
0,4,d_thread,0.75,0.15,30
0,4,d_thread,0.85,0.05,25
`);

const THREAD_RUNNING_5 = parseCsv(`t1_index,t2_index,source,x_center,p10,p50,p90,n
0,4,d_thread,0.5,-0.45,-0.18,0.12,50
0,4,d_thread,0.6,-0.4,-0.12,0.14,55
0,4,d_thread,0.7,-0.32,-0.08,0.16,60
0,4,d_thread,0.8,-0.28,-0.02,0.18,52
0,4,d_thread,0.9,-0.22,0.01,0.21,48
`);

const MEDIANS_5 = parseCsv(`t1_index,t2_index,source,target,median,n
0,4,d_user,0.4,-0.25,30
0,4,d_user,1.0,0.02,80
4,8,d_user,0.4,-0.2,35
4,8,d_user,1.0,0.01,90
0,4,log10_f,0.4,,5
`);

const FRANGES_5 = parseCsv(`t1_index,t2_index,log10_f_min,log10_f_max,satisfied
0,4,-4.2,-2.52,1
4,8,-4.1,-2.52,1
8,12,-4.3,-2.52,1
12,16,-4.0,-2.52,1
16,20,-4.4,-2.52,1
`);

const NORMALIZED_5 = parseCsv(`word,window_index,window_center,n_w,normalized
gadget,0,2000-04-01T00:00:00Z,0,0.0
gadget,1,2000-09-30T00:00:00Z,20,0.5
gadget,2,2001-04-01T00:00:00Z,40,1.0
slangy,0,2000-04-01T00:00:00Z,10,1.0
slangy,1,2000-09-30T00:00:00Z,5,0.5
`);

const WINDOWS_5 = parseCsv(`window_index,start,end,center,n_posts,n_tokens,n_users,n_threads
0,a,b,c,100,5000,40,30
1,a,b,c,110,5500,42,31
2,a,b,c,120,6000,44,32
3,a,b,c,130,6500,46,33
4,a,b,c,140,7000,48,34
`);

const TRAJECTORIES_5 = parseCsv(`word,label,window_index,window_center,n_w,f,d_user,d_thread,valid
gadget,P,1,c,20,0.001,0.45,0.5,1
gadget,P,2,c,40,0.002,0.6,0.65,1
slangy,S,0,c,10,0.0005,0.8,0.85,1
slangy,S,1,c,5,0.00025,,,0
plain,unlabeled,0,c,30,0.0015,1.0,1.0,1
`);

const COHORTS_5 = parseCsv(`cohort,scope,metric,n_words,median,q25,q75
P,all_windows,mean_f,6,0.0012,0.0008,0.002
P,all_windows,mean_d_user,6,0.5,0.4,0.62
S,all_windows,mean_f,6,0.0006,0.0004,0.001
S,all_windows,mean_d_user,6,0.75,0.66,0.85
P,rising_period,mean_d_user,6,0.45,0.38,0.55
`);

const TRIM_SUMMARY_5 = parseCsv(`measure,n,median,q25,q75,o12_5,o87_5,below_0_4
d_user,500,0.87,0.7,1.0,0.6,1.1,40
d_thread,500,0.89,0.72,1.02,0.62,1.12,20
dhat_user,500,0.92,0.75,1.05,0.65,1.15,15
dhat_user-d_user,500,0.05,0.01,0.09,-0.02,0.13,
dhat_thread-d_thread,500,0.03,0.0,0.07,-0.03,0.11,
`);


describe("fig1", () => {
  it("reports the hand-written values verbatim", () => {
    const fig = buildFig1(MEASURES_5, RUNNING_5, BANDS_5);
    const data = fig.data as any;
    expect(data.window).toBe("0");
    expect(data.scatter.f).toEqual([0.001, 0.002, 0.003, 0.004]); // valid rows only
    expect(data.scatter.d).toEqual([0.8, 0.9, 1.05, 1.0]);
    expect(data.ceiling).toEqual([2.0, 2.0, 1.6, 1.5]);
    expect(data.curves.x).toEqual([-3.2, -3.0, -2.8]);
    expect(data.curves.p50).toEqual([0.8, 0.82, 0.85]);
    expect(data.band.lo).toEqual([0.88, 0.9, 0.92]);
    expect(data.band.hi).toEqual([1.12, 1.1, 1.08]);
    expect(fig.svg).toContain("<svg");
    expect(fig.svg).toContain("polyline");
  });

  it("supports thread mode", () => {
    const fig = buildFig1(MEASURES_5, RUNNING_5, BANDS_5, { mode: "threads" });
    const data = fig.data as any;
    expect(data.scatter.d).toEqual([0.909, 0.9, 1.06, 1.0]);
    expect(data.band.lo).toEqual([0.91, 0.93]);
  });

  it("rejects tables with missing columns", () => {
    const broken = parseCsv("word,f\naa,0.1\n");
    expect(() => buildFig1(broken, RUNNING_5, BANDS_5)).toThrow(/missing columns in measures/);
  });

  it("rejects empty word tables", () => {
    const empty = { header: MEASURES_5.header, rows: [] };
    expect(() => buildFig1(empty, RUNNING_5, BANDS_5)).toThrow("no rows");
  });
});

describe("fig2", () => {
  it("separates per-window curves from the combined curve", () => {
    const fig = buildFig2(RUNNING_5);
    const data = fig.data as any;
    expect(data.series.map((s: any) => s.scope)).toEqual(["0", "combined"]);
    expect(data.series[1].p50).toEqual([0.81, 0.84]);
  });
});

describe("fate figures", () => {
  const tables = {
    fate: FATE_5,
    survival: SURVIVAL_5,
    fateRunning: FATE_RUNNING_5,
    medians: MEDIANS_5,
    franges: FRANGES_5,
  };

  it("fig3 reports survival, scatter, and medians verbatim", () => {
    const fig = buildFateFigure("fig3", "d_user", tables);
    const data = fig.data as any;
    expect(data.survival[0].fraction).toEqual([0.8, 0.6, 0.35, 0.2, 0.1]);
    expect(data.scatter.x).toEqual([0.4, 0.6, 0.9, 1.0]); // survivors only
    expect(data.scatter.y).toEqual([-0.3, -0.1, 0.05, 0.1]);
    expect(data.curves.p50).toEqual([-0.2, -0.1, 0.0]);
    expect(data.medians.map((m: any) => m.target)).toEqual(["0.4", "1.0"]);
    expect(data.medians[0].median).toEqual([-0.25, -0.2]);
  });

  it("fig4 reports the thread-dissemination values verbatim", () => {
    const fig = buildFateFigure("fig4", "d_thread", {
      fate: FATE_5,
      survival: THREAD_SURVIVAL_5,
      fateRunning: THREAD_RUNNING_5,
      medians: MEDIANS_5,
    });
    const data = fig.data as any;
    expect(data.survival[0].x).toEqual([0.45, 0.55, 0.65, 0.75, 0.85]);
    expect(data.survival[0].fraction).toEqual([0.7, 0.5, 0.3, 0.15, 0.05]);
    expect(data.scatter.x).toEqual([0.5, 0.7, 0.95, 1.05]);
    expect(data.curves.p50).toEqual([-0.18, -0.12, -0.08, -0.02, 0.01]);
  });

  it("fig5 uses the frequency predictor and the truncation cutoffs", () => {
    const fig = buildFateFigure("fig5", "log10_f", tables);
    const data = fig.data as any;
    expect(data.scatter.x).toEqual([-3.1, -3.2, -3.3, -3.4]);
    expect(data.cutoffs).toEqual([-4.2, -2.52]);
    expect(fig.svg).toContain("green");
  });

  it("renders deterministically", () => {
    const a = buildFateFigure("fig3", "d_user", tables).svg;
    const b = buildFateFigure("fig3", "d_user", tables).svg;
    expect(a).toBe(b);
  });
});

describe("fig6", () => {
  it("reports one normalized series per word plus window totals", () => {
    const fig = buildFig6(NORMALIZED_5, WINDOWS_5);
    const data = fig.data as any;
    expect(data.words.map((w: any) => w.word)).toEqual(["gadget", "slangy"]);
    expect(data.words[0].y).toEqual([0.0, 0.5, 1.0]);
    expect(data.totals.y).toEqual([5000, 5500, 6000, 6500, 7000]);
  });
});

describe("fig7", () => {
  it("keeps labeled valid points and cohort boxes verbatim", () => {
    const fig = buildFig7(TRAJECTORIES_5, RUNNING_5, COHORTS_5);
    const data = fig.data as any;
    expect(data.users.words.map((w: any) => w.word)).toEqual(["gadget", "slangy"]);
    expect(data.users.words[0].d).toEqual([0.45, 0.6]);
    expect(data.users.words[1].d).toEqual([0.8]); // invalid window dropped
    const boxes = data.users.boxes.filter((b: any) => b.metric === "mean_d_user");
    expect(boxes.map((b: any) => b.median)).toEqual([0.5, 0.75, 0.45]);
    expect(data.users.median.p50).toEqual([0.81, 0.84]);
  });
});

describe("fig8", () => {
  it("splits measures from differences and keeps quantiles verbatim", () => {
    const fig = buildFig8(TRIM_SUMMARY_5);
    const data = fig.data as any;
    expect(data.measures.map((m: any) => m.measure)).toEqual(["d_user", "d_thread", "dhat_user"]);
    expect(data.diffs.map((m: any) => m.measure)).toEqual(["dhat_user-d_user", "dhat_thread-d_thread"]);
    expect(data.measures[0]).toMatchObject({ median: 0.87, q25: 0.7, q75: 1.0, lo: 0.6, hi: 1.1 });
    expect(fig.svg).toContain("rect");
  });

  it("rejects an empty summary", () => {
    expect(() => buildFig8({ header: TRIM_SUMMARY_5.header, rows: [] })).toThrow("no rows");
  });
});

describe("pipeline fixtures", () => {
  const fx = (name: string) => readCsv(path.join(FIXTURES, name));

  it("fig1 renders from the pipeline outputs", () => {
    const fig = buildFig1(fx("measures.csv"), fx("running_measures.csv"), fx("bands.csv"));
    expect(fig.svg.length).toBeGreaterThan(1000);
    expect((fig.data as any).scatter.f.length).toBeGreaterThan(20);
  });

  it("fig3 renders from the pipeline outputs", () => {
    const fig = buildFateFigure("fig3", "d_user", {
      fate: fx("fate.csv"),
      survival: fx("survival.csv"),
      fateRunning: fx("fate_running.csv"),
      medians: fx("medians.csv"),
      franges: fx("franges.csv"),
    });
    expect(fig.svg).toContain("polyline");
  });

  it("fig8 renders from the pipeline outputs", () => {
    const fig = buildFig8(fx("trim_summary.csv"));
    expect((fig.data as any).measures.length).toBe(4);
    expect((fig.data as any).diffs.length).toBe(2);
  });

  it("the remaining figures render from the pipeline outputs", () => {
    expect(buildFig2(fx("running_measures.csv")).svg).toContain("<svg");
    expect(
      buildFateFigure("fig4", "d_thread", {
        fate: fx("fate.csv"),
        survival: fx("survival.csv"),
        fateRunning: fx("fate_running.csv"),
        medians: fx("medians.csv"),
      }).svg,
    ).toContain("<svg");
    expect(
      buildFateFigure("fig5", "log10_f", {
        fate: fx("fate.csv"),
        survival: fx("survival.csv"),
        fateRunning: fx("fate_running.csv"),
        medians: fx("medians.csv"),
        franges: fx("franges.csv"),
      }).svg,
    ).toContain("<svg");
    expect(buildFig6(fx("normalized.csv"), fx("windows.csv")).svg).toContain("<svg");
    expect(buildFig7(fx("trajectories.csv"), fx("running_measures.csv"), fx("cohorts.csv")).svg).toContain("<svg");
  });
});

describe("cli", () => {
  it("writes an svg for a figure id and reports unknown ids", () => {
    const out = path.join(os.tmpdir(), `fig8-${process.pid}.svg`);
    const code = main([
      "fig8",
      "--trim-summary", path.join(FIXTURES, "trim_summary.csv"),
      "--out", out,
    ]);
    expect(code).toBe(0);
    expect(fs.readFileSync(out, "utf-8")).toContain("<svg");
    fs.unlinkSync(out);
    expect(main(["fig99", "--out", out])).toBe(1);
    expect(() => buildFigure("fig99", {})).toThrow("unknown figure id");
  });
});
