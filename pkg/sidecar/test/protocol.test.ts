import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { HEADER, isValidHeader, parseRequest } from "../src/protocol";
import { Capabilities, handleLine, serveHttp } from "../src/server";

function writeTemp(name: string, obj: unknown): string {
  const file = path.join(tmpDir, name);
  fs.writeFileSync(file, JSON.stringify(obj), "utf-8");
  return file;
}

let tmpDir: string;
let caps: Capabilities;

beforeAll(() => {
  tmpDir = fs.mkdtempSync(path.join(os.tmpdir(), "daf-sidecar-"));
  const config = {
    toxicity_lexicon: writeTemp("weights.json", { terms: { vile: 0.9, awful: 0.55 } }),
    topic_keywords: writeTemp("keywords.json", { categories: { sport: ["goal"] } }),
    image_manifest: writeTemp("manifest.json", {
      images: { "img1.jpg": { sexual_image: 0.8, face_count: 2 } },
    }),
    image_signal_kinds: { sexual_image: "scalar01", face_count: "count" },
  };
  caps = Capabilities.fromConfigFile(writeTemp("config.json", config));
});

afterAll(() => {
  fs.rmSync(tmpDir, { recursive: true, force: true });
});

function request(obj: Record<string, unknown>): string {
  return JSON.stringify({ text: null, image_path: null, ...obj });
}

describe("protocol round-trip", () => {
  it("answers a toxicity+topic request with id-matched, kind-correct values", () => {
    const line = request({ id: "r1", text: "a vile goal", signals: ["toxicity", "topic"] });
    const response = JSON.parse(handleLine(caps, line));
    expect(response.id).toBe("r1");
    const bySignal = Object.fromEntries(response.values.map((v: any) => [v.signal, v]));
    expect(bySignal.toxicity).toMatchObject({ kind: "scalar01", score: 0.9 });
    expect(bySignal.topic).toMatchObject({ kind: "categorical", label: "sport" });
  });

  it("serves manifest-backed image signals", () => {
    const line = request({ id: "r2", image_path: "img1.jpg", signals: ["sexual_image", "face_count"] });
    const response = JSON.parse(handleLine(caps, line));
    const bySignal = Object.fromEntries(response.values.map((v: any) => [v.signal, v]));
    expect(bySignal.sexual_image).toMatchObject({ kind: "scalar01", score: 0.8 });
    expect(bySignal.face_count).toMatchObject({ kind: "count", count: 2 });
  });

  it("returns an error entry for unknown images and stays usable", () => {
    const bad = request({ id: "r3", image_path: "missing.jpg", signals: ["sexual_image"] });
    const response = JSON.parse(handleLine(caps, bad));
    expect(response.error).toContain("missing.jpg");
    const good = request({ id: "r4", text: "fine", signals: ["toxicity"] });
    expect(JSON.parse(handleLine(caps, good)).values[0].score).toBe(0);
  });

  it("answers malformed lines with an error response instead of dying", () => {
    const response = JSON.parse(handleLine(caps, "{not json"));
    expect(response.error).toContain("malformed");
  });

  it("errors per record on unconfigured signals", () => {
    const line = request({ id: "r5", text: "x", signals: ["dialect"] });
    const response = JSON.parse(handleLine(caps, line));
    expect(response.error).toContain("dialect");
  });

  it("validates headers", () => {
    expect(isValidHeader(HEADER)).toBe(true);
    expect(isValidHeader('{"daf_protocol": 2}')).toBe(false);
    expect(isValidHeader("junk")).toBe(false);
  });

  it("rejects requests without an id", () => {
    expect(parseRequest(JSON.stringify({ signals: [] }))).toBeNull();
  });
});

describe("http transport", () => {
  it("round-trips a batch over POST", async () => {
    const server = serveHttp(caps, 0);
    await new Promise<void>((resolve) => server.once("listening", resolve));
    const address = server.address();
    if (address === null || typeof address === "string") throw new Error("no port");
    const body =
      [
        HEADER,
        request({ id: "a", text: "vile thing", signals: ["toxicity"] }),
        request({ id: "b", text: "calm thing", signals: ["toxicity"] }),
      ].join("\n") + "\n";
    const reply = await fetch(`http://127.0.0.1:${address.port}/`, {
      method: "POST",
      headers: { "Content-Type": "application/x-ndjson" },
      body,
    });
    const lines = (await reply.text()).trim().split("\n");
    expect(isValidHeader(lines[0])).toBe(true);
    const responses = lines.slice(1).map((l) => JSON.parse(l));
    expect(responses.map((r) => r.id).sort()).toEqual(["a", "b"]);
    expect(responses.find((r) => r.id === "a").values[0].score).toBe(0.9);
    server.close();
  });

  it("rejects bodies without the version header", async () => {
    const server = serveHttp(caps, 0);
    await new Promise<void>((resolve) => server.once("listening", resolve));
    const address = server.address();
    if (address === null || typeof address === "string") throw new Error("no port");
    const reply = await fetch(`http://127.0.0.1:${address.port}/`, {
      method: "POST",
      body: request({ id: "a", text: "x", signals: ["toxicity"] }) + "\n",
    });
    expect(reply.status).toBe(400);
    server.close();
  });
});
