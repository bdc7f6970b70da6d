import { execFileSync, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { convertArchive, corpusToJson } from "../src/convert.js";
import { run } from "../src/cli.js";
import { loads } from "../src/pickle.js";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

function pythonLoaderAvailable(): boolean {
  const probe = spawnSync("python3", ["-c", "import tensorcells.data"], { encoding: "utf8" });
  return probe.status === 0;
}

describe("converter round trip", () => {
  it("cli converts a fixture and reruns byte-identically", () => {
    const dir = mkdtempSync(join(tmpdir(), "prc-"));
    const source = join(FIXTURES, "chorales_p2.pkl");
    const outA = join(dir, "a.json");
    const outB = join(dir, "b.json");
    expect(run([source, outA, "--name", "chorales-sample"])).toBe(0);
    expect(run([source, outB, "--name", "chorales-sample"])).toBe(0);
    expect(readFileSync(outA)).toEqual(readFileSync(outB));
    const parsed = JSON.parse(readFileSync(outA, "utf8"));
    expect(parsed.name).toBe("chorales-sample");
    expect(Object.keys(parsed.splits)).toEqual(["train", "valid", "test"]);
  });

  it("spot-checks the pitch mapping (MIDI 60 -> index 39)", () => {
    const { corpus } = convertArchive({ train: [[[60]]], valid: [], test: [] }, "spot");
    expect(corpus.splits.train[0][0][0]).toBe(60 - 21);
  });

  it.skipIf(!pythonLoaderAvailable())(
    "converted files pass the training pipeline's dataset validation",
    () => {
      const dir = mkdtempSync(join(tmpdir(), "prc-"));
      const out = join(dir, "converted.json");
      const raw = loads(readFileSync(join(FIXTURES, "chorales_p2.pkl")));
      const { corpus } = convertArchive(raw, "chorales-sample");
      writeFileSync(out, corpusToJson(corpus), "utf8");
      const script = [
        "import sys",
        "from tensorcells.data import NUM_NOTES, load_dataset",
        "ds = load_dataset(sys.argv[1])",
        "counts = {name: len(split) for name, split in ds.splits.items()}",
        "violations = sum(1 for split in ds.splits.values() for seq in split",
        "                 for step in seq for n in step if not (0 <= n < NUM_NOTES))",
        "print(counts['train'], counts['valid'], counts['test'], violations)",
      ].join("\n");
      const result = execFileSync("python3", ["-c", script, out], { encoding: "utf8" });
      const [train, valid, test, violations] = result.trim().split(/\s+/).map(Number);
      expect(violations).toBe(0);
      expect(train).toBe(6);
      expect(valid).toBe(2);
      expect(test).toBe(2);
    }
  );
});
