// Loose typing for the optional transformers.js dependency; only the
// feature-extraction pipeline entry point is used.
declare module "@xenova/transformers" {
  export function pipeline(task: string, model?: string): Promise<unknown>;
}
