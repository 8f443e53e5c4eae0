/**
 * Request handling and the two transports.
 *
 * Capabilities come from the config file: a toxicity weight lexicon,
 * a topic keyword map, and/or an image signal manifest (at least one
 * must be configured).  Each request line yields exactly one response
 * line; a record the sidecar cannot serve gets an error entry, and a
 * malformed line gets an error response without killing the process.
 */

import * as fs from "node:fs";
import * as http from "node:http";
import * as readline from "node:readline";

import { HEADER, Request, Response, SignalKind, WireValue, encodeResponse, isValidHeader, parseRequest } from "./protocol";
import { KeywordMap, WeightLexicon, loadKeywords, loadWeights, topicLabel, toxicityScore } from "./scorers";

export interface SidecarConfig {
  toxicity_lexicon?: string;
  topic_keywords?: string;
  image_manifest?: string;
  /** explicit wire kinds for manifest signals; inference covers the rest */
  image_signal_kinds?: Record<string, SignalKind>;
}

type ManifestEntry = Record<string, unknown>;

export class Capabilities {
  weights: WeightLexicon | null = null;
  keywords: KeywordMap | null = null;
  manifest: Map<string, ManifestEntry> | null = null;
  manifestKinds: Record<string, SignalKind> = {};

  static fromConfigFile(path: string): Capabilities {
    const raw = JSON.parse(fs.readFileSync(path, "utf-8")) as SidecarConfig;
    const caps = new Capabilities();
    if (raw.toxicity_lexicon) {
      caps.weights = loadWeights(JSON.parse(fs.readFileSync(raw.toxicity_lexicon, "utf-8")));
    }
    if (raw.topic_keywords) {
      caps.keywords = loadKeywords(JSON.parse(fs.readFileSync(raw.topic_keywords, "utf-8")));
    }
    if (raw.image_manifest) {
      const manifest = JSON.parse(fs.readFileSync(raw.image_manifest, "utf-8"));
      const images = manifest?.images;
      if (typeof images !== "object" || images === null) {
        throw new Error("image manifest needs an 'images' object");
      }
      caps.manifest = new Map(Object.entries(images as Record<string, ManifestEntry>));
    }
    caps.manifestKinds = raw.image_signal_kinds ?? {};
    if (!caps.weights && !caps.keywords && !caps.manifest) {
      throw new Error("config enables no capability (toxicity, topics, or manifest)");
    }
    return caps;
  }
}

function manifestValue(
  caps: Capabilities,
  request: Request,
  signal: string,
): WireValue | string {
  if (!caps.manifest) return `signal ${signal} not configured`;
  if (!request.image_path) return `request has no image_path for signal ${signal}`;
  const entry = caps.manifest.get(request.image_path);
  if (entry === undefined) return `unknown image ${request.image_path}`;
  const raw = entry[signal];
  if (raw === undefined || raw === null) return `no ${signal} for ${request.image_path}`;
  const kind = caps.manifestKinds[signal] ?? inferKind(raw);
  switch (kind) {
    case "scalar01":
      if (typeof raw !== "number") return `${signal}: expected a number`;
      return { signal, kind, score: raw };
    case "count":
      if (typeof raw !== "number" || !Number.isInteger(raw)) return `${signal}: expected an integer`;
      return { signal, kind, count: raw };
    case "boolean":
      if (typeof raw !== "boolean") return `${signal}: expected a boolean`;
      return { signal, kind, flag: raw };
    case "categorical":
      if (typeof raw !== "string") return `${signal}: expected a label`;
      return { signal, kind, label: raw };
    case "spans":
      if (!Array.isArray(raw)) return `${signal}: expected a span list`;
      return { signal, kind, spans: raw as [number, number, string][] };
  }
}

function inferKind(raw: unknown): SignalKind {
  if (typeof raw === "boolean") return "boolean";
  if (typeof raw === "number") return Number.isInteger(raw) ? "count" : "scalar01";
  if (typeof raw === "string") return "categorical";
  return "spans";
}

export function respond(caps: Capabilities, request: Request): Response {
  const values: WireValue[] = [];
  for (const signal of request.signals) {
    if (signal === "toxicity" && caps.weights) {
      if (request.text === null) return { id: request.id, error: "no text for toxicity" };
      values.push({ signal, kind: "scalar01", score: toxicityScore(request.text, caps.weights) });
      continue;
    }
    if (signal === "topic" && caps.keywords) {
      if (request.text === null) return { id: request.id, error: "no text for topic" };
      values.push({ signal, kind: "categorical", label: topicLabel(request.text, caps.keywords) });
      continue;
    }
    const value = manifestValue(caps, request, signal);
    if (typeof value === "string") {
      return { id: request.id, error: value };
    }
    values.push(value);
  }
  return { id: request.id, values };
}

export function handleLine(caps: Capabilities, line: string): string {
  const request = parseRequest(line);
  if (request === null) {
    return encodeResponse({ id: "", error: "malformed request line" });
  }
  return encodeResponse(respond(caps, request));
}

export function serveStdio(caps: Capabilities): void {
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  let sawHeader = false;
  rl.on("line", (line: string) => {
    if (!line.trim()) return;
    if (!sawHeader) {
      if (!isValidHeader(line)) {
        process.stderr.write("unsupported protocol header; exiting\n");
        process.exit(2);
      }
      sawHeader = true;
      process.stdout.write(HEADER + "\n");
      return;
    }
    process.stdout.write(handleLine(caps, line) + "\n");
  });
}

export function serveHttp(caps: Capabilities, port: number, host = "127.0.0.1"): http.Server {
  const server = http.createServer((req, res) => {
    if (req.method !== "POST") {
      res.writeHead(200, { "Content-Type": "text/plain" });
      res.end("ok\n");
      return;
    }
    const chunks: Buffer[] = [];
    req.on("data", (chunk) => chunks.push(chunk));
    req.on("end", () => {
      const lines = Buffer.concat(chunks).toString("utf-8").split("\n").filter((l) => l.trim());
      if (lines.length === 0 || !isValidHeader(lines[0])) {
        res.writeHead(400, { "Content-Type": "text/plain" });
        res.end("bad protocol header\n");
        return;
      }
      const body = [HEADER, ...lines.slice(1).map((line) => handleLine(caps, line))].join("\n") + "\n";
      res.writeHead(200, { "Content-Type": "application/x-ndjson" });
      res.end(body);
    });
  });
  server.listen(port, host);
  return server;
}
