import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { createRequire } from "node:module";
import { join } from "node:path";
import yargs from "yargs";

import { CsvError, parseApproxCsv, parseSweepCsv } from "./csv.js";
import { approxDiagnostics, FAMILIES, renderSweepFamily, type Family, type FamilyResult } from "./families.js";

class UsageError extends Error {}

interface Output {
  path: string;
  bytes: Buffer;
}

function renderPng(svg: string): Buffer {
  // loaded lazily so SVG-only runs never touch the native module
  const require = createRequire(import.meta.url);
  const { Resvg } = require("@resvg/resvg-js");
  const r = new Resvg(svg, {
    font: { loadSystemFonts: true, defaultFontFamily: "DejaVu Sans" },
  });
  return r.render().asPng();
}

export async function main(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = await yargs(argv)
      .scriptName("jacspec-figures")
      .command("render", "draw a figure family from jacspec CSV output", (y) =>
        y
          .option("family", {
            type: "string",
            choices: FAMILIES,
            demandOption: true,
            describe: "which figure family to draw",
          })
          .option("csv", {
            type: "string",
            array: true,
            demandOption: true,
            describe: "input CSV file(s), merged before grouping",
          })
          .option("out", {
            type: "string",
            demandOption: true,
            describe: "output directory (created if missing)",
          })
          .option("format", {
            type: "string",
            choices: ["svg", "png"] as const,
            default: "svg" as const,
          }),
      )
      .demandCommand(1, "expected the render command")
      .strict()
      .exitProcess(false)
      .fail((msg, err) => {
        throw err ?? new UsageError(msg);
      })
      .parse();
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }

  const family = parsed.family as Family;
  const csvPaths = parsed.csv as string[];
  const outDir = parsed.out as string;
  const format = parsed.format as "svg" | "png";

  try {
    const texts: string[] = [];
    for (const p of csvPaths) {
      try {
        texts.push(readFileSync(p, "utf8"));
      } catch (err) {
        throw new UsageError(`cannot read ${p}: ${err instanceof Error ? err.message : String(err)}`);
      }
    }

    let result: FamilyResult;
    if (family === "ApproxDiagnostics") {
      result = approxDiagnostics(texts.flatMap((t, i) => parseApproxCsv(t, csvPaths[i]!)));
    } else {
      result = renderSweepFamily(family, texts.flatMap((t, i) => parseSweepCsv(t, csvPaths[i]!)));
    }

    for (const w of result.warnings) console.error(`warning: ${w}`);
    if (result.panels.length === 0) {
      console.error("error: no panels could be drawn from the given CSVs");
      return 1;
    }

    // build every output in memory first so a failure never leaves partial image sets
    const outputs: Output[] = result.panels.map((panel) =>
      format === "svg"
        ? { path: join(outDir, `${panel.name}.svg`), bytes: Buffer.from(panel.svg, "utf8") }
        : { path: join(outDir, `${panel.name}.png`), bytes: renderPng(panel.svg) },
    );

    mkdirSync(outDir, { recursive: true });
    for (const o of outputs) writeFileSync(o.path, o.bytes);
    for (const o of outputs) console.log(o.path);
    return 0;
  } catch (err) {
    if (err instanceof CsvError || err instanceof UsageError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`internal error: ${err instanceof Error ? (err.stack ?? err.message) : String(err)}`);
    return 2;
  }
}
