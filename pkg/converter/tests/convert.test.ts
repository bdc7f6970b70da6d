import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { ConvertError, convertArchive, corpusToJson, formatSummary } from "../src/convert.js";
import { loads } from "../src/pickle.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

const load = (name: string) => loads(readFileSync(join(FIXTURES, name)));

describe("convertArchive", () => {
  it("maps pitches to 0-based note indices by subtracting 21", () => {
    const { corpus } = convertArchive({ train: [[[60], [64, 67]]], valid: [], test: [] }, "x");
    expect(corpus.splits.train).toEqual([[[39], [43, 46]]]);
  });

  it("keeps empty timesteps empty", () => {
    const { corpus } = convertArchive({ train: [[[], [60]]], valid: [], test: [] }, "x");
    expect(corpus.splits.train[0][0]).toEqual([]);
  });

  it("sorts and deduplicates note sets", () => {
    const { corpus } = convertArchive({ train: [[[67, 60, 64, 60]]], valid: [], test: [] }, "x");
    expect(corpus.splits.train[0][0]).toEqual([39, 43, 46]);
  });

  it("covers the full key range", () => {
    const { corpus, summary } = convertArchive(load("basic_p2.pkl"), "basic");
    expect(corpus.splits.valid).toEqual([[[0], [87]]]);
    expect(summary.minPitch).toBe(21);
    expect(summary.maxPitch).toBe(108);
  });

  it("rejects out-of-range pitches with their location", () => {
    expect(() => convertArchive(load("bad_pitch_p2.pkl"), "bad")).toThrow(
      /train sequence 0, timestep 0: pitch 109/
    );
    expect(() => convertArchive({ train: [[[20]]], valid: [], test: [] }, "x")).toThrow(ConvertError);
  });

  it("rejects a missing split", () => {
    expect(() => convertArchive(load("missing_split_p2.pkl"), "x")).toThrow(/missing split 'test'/);
  });

  it("normalizes alternate split spellings", () => {
    const { corpus } = convertArchive(load("validation_alias_p2.pkl"), "x");
    expect(corpus.splits.valid).toEqual([[[0], [87]]]);
  });

  it("rejects unknown split names and non-integer pitches", () => {
    expect(() => convertArchive({ train: [], valid: [], test: [], extra: [] }, "x")).toThrow(
      /unrecognized split/
    );
    expect(() => convertArchive({ train: [[[60.5]]], valid: [], test: [] }, "x")).toThrow(
      /not an integer/
    );
  });

  it("summarizes sequence and timestep counts", () => {
    const { summary } = convertArchive(load("basic_p2.pkl"), "basic");
    expect(summary.perSplit).toEqual([
      { split: "train", sequences: 2, timesteps: 4 },
      { split: "valid", sequences: 1, timesteps: 2 },
      { split: "test", sequences: 1, timesteps: 1 },
    ]);
    expect(formatSummary(summary)).toContain("train: 2 sequences, 4 timesteps");
  });
});

describe("corpusToJson", () => {
  it("is byte-stable across reconversions", () => {
    const a = convertArchive(load("chorales_p2.pkl"), "chorales-sample");
    const b = convertArchive(load("chorales_p2.pkl"), "chorales-sample");
    expect(corpusToJson(a.corpus)).toBe(corpusToJson(b.corpus));
  });

  it("emits the canonical key order and trailing newline", () => {
    const { corpus } = convertArchive({ test: [], train: [[[60]]], valid: [] }, "n");
    const text = corpusToJson(corpus);
    expect(text.endsWith("\n")).toBe(true);
    expect(text.indexOf('"train"')).toBeLessThan(text.indexOf('"valid"'));
    expect(text.indexOf('"valid"')).toBeLessThan(text.indexOf('"test"'));
  });
});
