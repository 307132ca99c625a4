/**
 * Raw input corpus: one record per line, tab-separated.
 *
 *   <id> TAB <label-name or "?"> TAB <S|T> TAB <text>
 *
 * This mirrors the embedding corpus format minus the vector; the embed
 * tool fills the vector in.
 */

export interface RawRecord {
  id: string;
  label: string | null;
  domain: "S" | "T";
  text: string;
}

export class RawFormatError extends Error {}

/** Parse and validate a raw corpus; ids must be unique, texts nonempty. */
export function parseRawCorpus(content: string, name = "<input>"): RawRecord[] {
  const records: RawRecord[] = [];
  const seen = new Set<string>();
  const lines = content.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line === "" && i === lines.length - 1) continue; // trailing newline
    const lineno = i + 1;
    const parts = line.split("\t");
    if (parts.length !== 4) {
      throw new RawFormatError(
        `${name}: line ${lineno}: expected 4 tab-separated fields, got ${parts.length}`,
      );
    }
    const [id, labelName, domain, text] = parts;
    if (id === "") {
      throw new RawFormatError(`${name}: line ${lineno}: empty id`);
    }
    if (seen.has(id)) {
      throw new RawFormatError(`${name}: line ${lineno}: duplicate id ${JSON.stringify(id)}`);
    }
    seen.add(id);
    if (domain !== "S" && domain !== "T") {
      throw new RawFormatError(`${name}: line ${lineno}: domain must be S or T`);
    }
    if (text.trim() === "") {
      throw new RawFormatError(`${name}: line ${lineno}: empty text`);
    }
    records.push({
      id,
      label: labelName === "?" ? null : labelName,
      domain,
      text,
    });
  }
  if (records.length === 0) {
    throw new RawFormatError(`${name}: no records`);
  }
  return records;
}

/** Distinct observed label names, sorted; these become the header classes. */
export function observedClasses(records: RawRecord[]): string[] {
  const names = new Set<string>();
  for (const r of records) {
    if (r.label !== null) names.add(r.label);
  }
  const classes = [...names].sort();
  if (classes.length < 2) {
    throw new RawFormatError(
      `need at least 2 distinct labels, found ${classes.length}`,
    );
  }
  for (const c of classes) {
    if (/[\s,]/.test(c)) {
      throw new RawFormatError(`label ${JSON.stringify(c)} contains whitespace or a comma`);
    }
  }
  return classes;
}
