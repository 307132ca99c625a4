#!/usr/bin/env node
/**
 * fewgraph-embed: convert a raw text corpus into a fewgraph embedding
 * corpus file.
 *
 *   fewgraph-embed --in raw.tsv --out corpus.txt --model Xenova/all-MiniLM-L6-v2
 *   fewgraph-embed --in raw.tsv --out corpus.txt --model hash:64
 */

import { readFile } from "node:fs/promises";

import { writeCorpus, type EmbeddedRecord } from "./corpusFile.js";
import { loadEmbedder, ModelLoadError } from "./embedder.js";
import { observedClasses, parseRawCorpus, RawFormatError } from "./raw.js";

const USAGE =
  "usage: fewgraph-embed --in <raw-corpus> --out <corpus-file> --model <name> [--batch-size n]";

interface Args {
  input: string;
  output: string;
  model: string;
  batchSize: number;
}

export function parseArgs(argv: string[]): Args {
  const args: Partial<Args> = { batchSize: 32 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--in":
        args.input = value;
        i++;
        break;
      case "--out":
        args.output = value;
        i++;
        break;
      case "--model":
        args.model = value;
        i++;
        break;
      case "--batch-size":
        args.batchSize = Number(value);
        i++;
        break;
      default:
        throw new RawFormatError(`unknown argument ${JSON.stringify(flag)}\n${USAGE}`);
    }
  }
  if (!args.input || !args.output || !args.model) {
    throw new RawFormatError(`--in, --out and --model are required\n${USAGE}`);
  }
  if (!Number.isInteger(args.batchSize) || args.batchSize! < 1) {
    throw new RawFormatError(`--batch-size must be a positive integer`);
  }
  return args as Args;
}

export async function runEmbed(args: Args): Promise<number> {
  let content: string;
  try {
    content = await readFile(args.input, "utf-8");
  } catch (err) {
    console.error(`error: cannot read ${args.input}: ${err}`);
    return 1;
  }
  const records = parseRawCorpus(content, args.input);
  const classes = observedClasses(records);
  const embedder = await loadEmbedder(args.model);

  const embedded: EmbeddedRecord[] = [];
  for (let start = 0; start < records.length; start += args.batchSize) {
    const batch = records.slice(start, start + args.batchSize);
    const vectors = await embedder.embed(batch.map((r) => r.text));
    batch.forEach((r, i) => embedded.push({ ...r, embedding: vectors[i] }));
  }
  await writeCorpus(args.output, embedded, classes);
  const dim = embedded[0].embedding.length;
  console.log(
    `wrote ${embedded.length} records (dim=${dim}, classes=${classes.join(",")}) to ${args.output}`,
  );
  return 0;
}

async function main(): Promise<number> {
  try {
    return await runEmbed(parseArgs(process.argv.slice(2)));
  } catch (err) {
    if (err instanceof RawFormatError || err instanceof ModelLoadError) {
      console.error(`error: ${err.message}`);
      return err instanceof RawFormatError ? 2 : 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;

if (invokedDirectly) {
  main().then((code) => process.exit(code));
}
