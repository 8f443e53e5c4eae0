/**
 * Line protocol, version 1.
 *
 * Both sides exchange a version header line first, then one JSON
 * object per line: requests carry {id, text, image_path, signals};
 * responses carry {id, values: [...]} or {id, error}.  Unknown JSON
 * fields are ignored on both sides.
 */

export const PROTOCOL_VERSION = 1;
export const HEADER = JSON.stringify({ daf_protocol: PROTOCOL_VERSION });

export type SignalKind = "scalar01" | "categorical" | "boolean" | "count" | "spans";

export interface Request {
  id: string;
  text: string | null;
  image_path: string | null;
  signals: string[];
}

export interface WireValue {
  signal: string;
  kind: SignalKind;
  score?: number;
  label?: string;
  flag?: boolean;
  count?: number;
  spans?: [number, number, string][];
}

export type Response =
  | { id: string; values: WireValue[] }
  | { id: string; error: string };

export function isValidHeader(line: string): boolean {
  try {
    const obj = JSON.parse(line);
    return typeof obj === "object" && obj !== null && obj.daf_protocol === PROTOCOL_VERSION;
  } catch {
    return false;
  }
}

/** Parse one request line; returns null when the line is unusable. */
export function parseRequest(line: string): Request | null {
  let obj: unknown;
  try {
    obj = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof obj !== "object" || obj === null) return null;
  const record = obj as Record<string, unknown>;
  if (typeof record.id !== "string" || record.id.length === 0) return null;
  if (!Array.isArray(record.signals) || !record.signals.every((s) => typeof s === "string")) {
    return null;
  }
  return {
    id: record.id,
    text: typeof record.text === "string" ? record.text : null,
    image_path: typeof record.image_path === "string" ? record.image_path : null,
    signals: record.signals as string[],
  };
}

export function encodeResponse(response: Response): string {
  return JSON.stringify(response);
}
