/**
 * Transformation from the upstream archive layout (split name -> list of
 * sequences of MIDI-pitch lists) to the canonical piano-roll JSON format
 * consumed by the training pipeline: pitches shifted down by 21 (the
 * lowest piano key) to 0-based note indices, one sorted deduplicated
 * note list per timestep.
 *
 * Pitches outside the 88-key range [21, 108] are hard errors carrying
 * their exact location; conversion is otherwise lossless on note sets
 * and byte-stable across reruns.
 */

export const PITCH_BASE = 21;
export const PITCH_MAX = 108;

export class ConvertError extends Error {}

export type Split = "train" | "valid" | "test";
export const SPLITS: Split[] = ["train", "valid", "test"];

/** Alternate split spellings seen across the upstream archives. */
const SPLIT_ALIASES: Record<string, Split> = {
  train: "train",
  training: "train",
  valid: "valid",
  validation: "valid",
  test: "test",
  testing: "test",
};

export interface Corpus {
  name: string;
  splits: Record<Split, number[][][]>;
}

export interface SplitSummary {
  split: Split;
  sequences: number;
  timesteps: number;
}

export interface Summary {
  perSplit: SplitSummary[];
  minPitch: number | null;
  maxPitch: number | null;
}

function asArray(value: unknown, where: string): unknown[] {
  if (!Array.isArray(value)) {
    throw new ConvertError(`${where}: expected a list, got ${typeof value}`);
  }
  return value;
}

export function convertArchive(raw: unknown, name: string): { corpus: Corpus; summary: Summary } {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new ConvertError("archive root is not a dict of splits");
  }
  const found = new Map<Split, unknown>();
  for (const [key, value] of Object.entries(raw)) {
    const split = SPLIT_ALIASES[key.toLowerCase()];
    if (split === undefined) {
      throw new ConvertError(`unrecognized split name ${JSON.stringify(key)}`);
    }
    if (found.has(split)) {
      throw new ConvertError(`duplicate split ${split}`);
    }
    found.set(split, value);
  }
  for (const split of SPLITS) {
    if (!found.has(split)) {
      throw new ConvertError(`missing split '${split}'`);
    }
  }

  let minPitch: number | null = null;
  let maxPitch: number | null = null;
  const splits = {} as Record<Split, number[][][]>;
  const perSplit: SplitSummary[] = [];

  for (const split of SPLITS) {
    const sequences = asArray(found.get(split), `split ${split}`);
    const outSeqs: number[][][] = [];
    let timesteps = 0;
    sequences.forEach((seq, si) => {
      const steps = asArray(seq, `${split} sequence ${si}`);
      const outSteps: number[][] = [];
      steps.forEach((step, ti) => {
        const where = `${split} sequence ${si}, timestep ${ti}`;
        const pitches = asArray(step, where);
        const notes = new Set<number>();
        for (const p of pitches) {
          if (typeof p !== "number" || !Number.isInteger(p)) {
            throw new ConvertError(`${where}: pitch ${JSON.stringify(p)} is not an integer`);
          }
          if (p < PITCH_BASE || p > PITCH_MAX) {
            throw new ConvertError(
              `${where}: pitch ${p} outside the 88-key range [${PITCH_BASE}, ${PITCH_MAX}]`
            );
          }
          minPitch = minPitch === null ? p : Math.min(minPitch, p);
          maxPitch = maxPitch === null ? p : Math.max(maxPitch, p);
          notes.add(p - PITCH_BASE);
        }
        outSteps.push([...notes].sort((a, b) => a - b));
        timesteps += 1;
      });
      outSeqs.push(outSteps);
    });
    splits[split] = outSeqs;
    perSplit.push({ split, sequences: outSeqs.length, timesteps });
  }

  return { corpus: { name, splits }, summary: { perSplit, minPitch, maxPitch } };
}

/** Canonical byte representation: fixed key order, one trailing newline. */
export function corpusToJson(corpus: Corpus): string {
  const ordered = {
    name: corpus.name,
    splits: {
      train: corpus.splits.train,
      valid: corpus.splits.valid,
      test: corpus.splits.test,
    },
  };
  return JSON.stringify(ordered) + "\n";
}

export function formatSummary(summary: Summary): string {
  const lines = summary.perSplit.map(
    (s) => `${s.split}: ${s.sequences} sequences, ${s.timesteps} timesteps`
  );
  lines.push(
    summary.minPitch === null
      ? "pitch range: (no notes)"
      : `pitch range: ${summary.minPitch}..${summary.maxPitch} (MIDI)`
  );
  return lines.join("\n");
}
