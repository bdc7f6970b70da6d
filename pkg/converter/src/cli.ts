#!/usr/bin/env node
/**
 * piano-roll-convert <source.pickle> <out.json> [--name NAME]
 *
 * Reads one upstream polyphonic-music archive (a pickled dict of
 * train/valid/test splits of MIDI-pitch sequences), writes the canonical
 * piano-roll JSON, and prints a conversion summary.
 */

import { basename } from "node:path";
import { readFileSync, writeFileSync } from "node:fs";

import { ConvertError, convertArchive, corpusToJson, formatSummary } from "./convert.js";
import { PickleError, loads } from "./pickle.js";

function usage(): never {
  console.error("usage: piano-roll-convert <source.pickle> <out.json> [--name NAME]");
  process.exit(1);
}

export function run(argv: string[]): number {
  const positional: string[] = [];
  let name: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--name") {
      name = argv[++i];
      if (name === undefined) usage();
    } else if (argv[i].startsWith("-")) {
      usage();
    } else {
      positional.push(argv[i]);
    }
  }
  if (positional.length !== 2) usage();
  const [source, out] = positional;

  let raw: unknown;
  try {
    raw = loads(readFileSync(source));
  } catch (err) {
    if (err instanceof PickleError) {
      console.error(`cannot parse ${source}: ${err.message}`);
      return 2;
    }
    console.error(`cannot read ${source}: ${(err as Error).message}`);
    return 2;
  }

  try {
    const { corpus, summary } = convertArchive(raw, name ?? basename(source).replace(/\.[^.]*$/, ""));
    writeFileSync(out, corpusToJson(corpus), "utf8");
    console.log(`wrote ${out}`);
    console.log(formatSummary(summary));
    return 0;
  } catch (err) {
    if (err instanceof ConvertError) {
      console.error(`conversion failed: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const isMain = process.argv[1] !== undefined && import.meta.url.endsWith(basename(process.argv[1]));
if (isMain) {
  process.exit(run(process.argv.slice(2)));
}
