#!/usr/bin/env node
/**
 * plot --spec spec.json
 *
 * The spec is a JSON object:
 *   {
 *     "schema": 1,
 *     "kind": "ber_vs_snr" | "fer_vs_snr" | "ber_vs_iter" | "se_overlay",
 *     "inputs": ["results.csv", ...],
 *     "output": "figure.svg",
 *     "group_keys": ["detector", "coded"],   // curve kinds, optional
 *     "title": "..."                          // optional
 *   }
 *
 * Exit codes: 0 on success (including empty inputs, which produce an
 * empty-axes figure and a warning on stderr); 1 on spec/schema errors,
 * with the offending field or column named.
 */

import { readFileSync } from "fs";

import { SchemaError } from "./csv.js";
import { validateSpec } from "./extract.js";
import { render } from "./render.js";

function main(argv: string[]): number {
  const args = argv.slice(2);
  let specPath: string | undefined;
  for (let i = 0; i < args.length; i++) {
    if (args[i] === "--spec") specPath = args[++i];
    else if (args[i] === "plot") continue; // tolerate being called as a subcommand
    else {
      console.error(`unknown argument '${args[i]}'; usage: plot --spec spec.json`);
      return 1;
    }
  }
  if (!specPath) {
    console.error("usage: plot --spec spec.json");
    return 1;
  }
  let doc: unknown;
  try {
    doc = JSON.parse(readFileSync(specPath, "utf-8"));
  } catch (err) {
    console.error(`cannot read spec ${specPath}: ${(err as Error).message}`);
    return 1;
  }
  try {
    const spec = validateSpec(doc);
    const { warning } = render(spec);
    if (warning) console.error(`warning: ${warning}`);
    console.log(`wrote ${spec.output}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
}

process.exit(main(process.argv));
