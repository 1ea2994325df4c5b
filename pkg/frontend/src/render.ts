/**
 * Figure rendering entry point: spec in, SVG file out.
 *
 * Rendering is pure in the data sense: the same CSVs always produce the
 * same extracted series (the tested contract); only drawing cosmetics
 * live downstream of extraction.
 */

import { writeFileSync } from "fs";

import { extract, Extracted, PlotSpec } from "./extract.js";
import { renderChart } from "./svg.js";

const TITLES: Record<PlotSpec["kind"], string> = {
  ber_vs_snr: "BER vs SNR",
  fer_vs_snr: "FER vs SNR",
  ber_vs_iter: "BER vs iteration",
  se_overlay: "Predicted vs simulated BER per iteration",
};

export interface RenderResult {
  extracted: Extracted;
  svg: string;
  warning?: string;
}

export function render(spec: PlotSpec): RenderResult {
  const extracted = extract(spec);
  const empty = extracted.series.every((s) => s.x.length === 0)
    || extracted.series.length === 0;
  const warning = empty ? "input CSVs contained no data rows" : undefined;
  const svg = renderChart({
    title: spec.title ?? TITLES[spec.kind],
    xLabel: extracted.xLabel,
    yLabel: extracted.yLabel,
    logY: extracted.logY,
    series: extracted.series,
    warning,
  });
  writeFileSync(spec.output, svg);
  return { extracted, svg, warning };
}
