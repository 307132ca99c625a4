import { describe, expect, it } from "vitest";

import { HashEmbedder, loadEmbedder, ModelLoadError } from "../src/embedder.js";

describe("HashEmbedder", () => {
  it("is deterministic: identical texts get identical rows", async () => {
    const e = new HashEmbedder(32);
    const [a, b] = await e.embed(["the same sentence", "the same sentence"]);
    expect(a).toEqual(b);
  });

  it("respects the requested dimension", async () => {
    for (const dim of [8, 64, 384]) {
      const [v] = await new HashEmbedder(dim).embed(["hello world"]);
      expect(v).toHaveLength(dim);
    }
  });

  it("L2-normalizes nonempty texts", async () => {
    const [v] = await new HashEmbedder(64).embed(["a handful of words here"]);
    const norm = Math.sqrt(v.reduce((acc, x) => acc + x * x, 0));
    expect(norm).toBeCloseTo(1.0, 12);
  });

  it("separates different texts", async () => {
    const e = new HashEmbedder(64);
    const [a, b] = await e.embed(["coffee is great", "the stock market fell"]);
    expect(a).not.toEqual(b);
  });

  it("is case-insensitive", async () => {
    const e = new HashEmbedder(32);
    const [a, b] = await e.embed(["Hello World", "hello world"]);
    expect(a).toEqual(b);
  });

  it("rejects bad dimensions", () => {
    expect(() => new HashEmbedder(1)).toThrowError(ModelLoadError);
  });
});

describe("loadEmbedder", () => {
  it("resolves hash:<dim> to the offline backend", async () => {
    const e = await loadEmbedder("hash:16");
    expect(e).toBeInstanceOf(HashEmbedder);
    expect(e.dim).toBe(16);
  });

  it("rejects malformed hash specs", async () => {
    await expect(loadEmbedder("hash:0")).rejects.toThrowError(ModelLoadError);
  });
});
