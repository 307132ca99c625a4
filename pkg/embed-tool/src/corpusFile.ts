/**
 * Writer for the fewgraph embedding corpus format:
 *
 *   #fewgraph-corpus v1 dim=<k1> classes=<c1,c2,...>
 *   <id> TAB <label-name or "?"> TAB <S|T> TAB <k1 space-separated floats>
 *
 * Floats are serialized with Number.prototype.toString, which is the
 * shortest representation that round-trips the exact double.
 */

import { rename, writeFile } from "node:fs/promises";

import type { RawRecord } from "./raw.js";

export interface EmbeddedRecord extends RawRecord {
  embedding: number[];
}

export function formatCorpus(records: EmbeddedRecord[], classes: string[]): string {
  if (records.length === 0) throw new Error("no records to write");
  const dim = records[0].embedding.length;
  const lines = [`#fewgraph-corpus v1 dim=${dim} classes=${classes.join(",")}`];
  for (const r of records) {
    if (r.embedding.length !== dim) {
      throw new Error(
        `record ${r.id}: embedding length ${r.embedding.length} != ${dim}`,
      );
    }
    for (const v of r.embedding) {
      if (!Number.isFinite(v)) {
        throw new Error(`record ${r.id}: non-finite embedding value`);
      }
    }
    const label = r.label === null ? "?" : r.label;
    lines.push(`${r.id}\t${label}\t${r.domain}\t${r.embedding.map(String).join(" ")}`);
  }
  return lines.join("\n") + "\n";
}

/** Write the corpus atomically: temp file in place, then rename. */
export async function writeCorpus(
  path: string,
  records: EmbeddedRecord[],
  classes: string[],
): Promise<void> {
  const tmp = `${path}.tmp-${process.pid}`;
  await writeFile(tmp, formatCorpus(records, classes), "utf-8");
  await rename(tmp, path);
}
