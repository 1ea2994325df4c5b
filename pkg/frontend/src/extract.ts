/**
 * Turn raw CSV tables into plottable series, one per figure kind.
 *
 * This is the pure core the tests pin down: for the same input files the
 * extracted (x, y) values are exactly the parsed CSV numbers, before any
 * axis scaling or drawing happens.
 */

import { basename } from "path";

import { num, readTable, SchemaError, Table } from "./csv.js";

export type FigureKind = "ber_vs_snr" | "fer_vs_snr" | "ber_vs_iter" | "se_overlay";

export interface PlotSpec {
  schema?: number;
  kind: FigureKind;
  inputs: string[];
  output: string;
  title?: string;
  /** results-CSV columns that split rows into series (curve kinds only) */
  group_keys?: string[];
}

export interface Series {
  label: string;
  x: number[];
  y: number[];
}

export interface Extracted {
  series: Series[];
  xLabel: string;
  yLabel: string;
  logY: boolean;
}

const RESULTS_COLUMNS = ["snr_db", "detector", "waveform", "coded", "P", "trials",
  "bit_errors", "frame_errors", "ber", "fer", "mean_eps_hat_db", "wall_s"];

function groupRows(
  tables: Table[],
  keys: string[],
  xCol: string,
  yCol: string
): Series[] {
  const groups = new Map<string, Series>();
  for (const table of tables) {
    for (const row of table.rows) {
      const label = keys
        .map((k) => (k === "coded" ? (row[k] === "1" ? "coded" : "uncoded") : row[k]))
        .join(" ");
      let s = groups.get(label);
      if (!s) {
        s = { label, x: [], y: [] };
        groups.set(label, s);
      }
      s.x.push(num(row, xCol));
      s.y.push(num(row, yCol));
    }
  }
  return [...groups.values()];
}

function curveVsSnr(spec: PlotSpec, yCol: "ber" | "fer"): Extracted {
  const keys = spec.group_keys ?? ["detector", "coded"];
  const tables = spec.inputs.map((p) =>
    readTable(p, [...new Set(["snr_db", yCol, ...keys])])
  );
  return {
    series: groupRows(tables, keys, "snr_db", yCol),
    xLabel: "SNR (dB)",
    yLabel: yCol.toUpperCase(),
    logY: true,
  };
}

function berVsIter(spec: PlotSpec): Extracted {
  const series: Series[] = [];
  for (const path of spec.inputs) {
    const table = readTable(path, ["iter"]);
    if (table.rows.length === 0) continue;
    const yCol = table.header.includes("ber_info")
      ? "ber_info"
      : table.header.includes("ser_vs_truth")
        ? "ser_vs_truth"
        : null;
    if (!yCol) {
      throw new SchemaError(`${path}: missing column 'ber_info'`);
    }
    series.push({
      label: `${basename(path)} (${yCol})`,
      x: table.rows.map((r) => num(r, "iter")),
      y: table.rows.map((r) => num(r, yCol)),
    });
  }
  return { series, xLabel: "iteration", yLabel: "BER", logY: true };
}

function seOverlay(spec: PlotSpec): Extracted {
  // predicted trajectories (snr_db,iter,tau,ber_pred,v_x) and simulated
  // traces (iter,ber_info,...) share the iteration axis
  const series: Series[] = [];
  for (const path of spec.inputs) {
    const table = readTable(path, ["iter"]);
    if (table.rows.length === 0) continue;
    if (table.header.includes("ber_pred")) {
      const bySnr = new Map<string, Series>();
      for (const row of table.rows) {
        const label = `predicted ${row["snr_db"]} dB`;
        let s = bySnr.get(label);
        if (!s) {
          s = { label, x: [], y: [] };
          bySnr.set(label, s);
        }
        s.x.push(num(row, "iter"));
        s.y.push(num(row, "ber_pred"));
      }
      series.push(...bySnr.values());
    } else if (table.header.includes("ber_info")) {
      series.push({
        label: `simulated (${basename(path)})`,
        x: table.rows.map((r) => num(r, "iter")),
        y: table.rows.map((r) => num(r, "ber_info")),
      });
    } else {
      throw new SchemaError(`${path}: missing column 'ber_pred'`);
    }
  }
  return { series, xLabel: "iteration", yLabel: "BER", logY: true };
}

export function extract(spec: PlotSpec): Extracted {
  switch (spec.kind) {
    case "ber_vs_snr":
      return curveVsSnr(spec, "ber");
    case "fer_vs_snr":
      return curveVsSnr(spec, "fer");
    case "ber_vs_iter":
      return berVsIter(spec);
    case "se_overlay":
      return seOverlay(spec);
    default:
      throw new SchemaError(`unknown figure kind '${(spec as PlotSpec).kind}'`);
  }
}

export function validateSpec(doc: unknown): PlotSpec {
  if (typeof doc !== "object" || doc === null) {
    throw new SchemaError("plot spec must be a JSON object");
  }
  const spec = doc as Partial<PlotSpec>;
  const kinds: FigureKind[] = ["ber_vs_snr", "fer_vs_snr", "ber_vs_iter", "se_overlay"];
  if (!spec.kind || !kinds.includes(spec.kind)) {
    throw new SchemaError(`plot spec needs a kind out of: ${kinds.join(", ")}`);
  }
  if (!Array.isArray(spec.inputs) || spec.inputs.some((p) => typeof p !== "string")) {
    throw new SchemaError("plot spec needs 'inputs': a list of CSV paths");
  }
  if (typeof spec.output !== "string" || !spec.output) {
    throw new SchemaError("plot spec needs an 'output' image path");
  }
  return spec as PlotSpec;
}

export { RESULTS_COLUMNS };
