/**
 * Entry point.
 *
 *   node dist/main.js --config sidecar.json                 # stdio lines
 *   node dist/main.js --config sidecar.json --transport http --port 8099
 */

import { Capabilities, serveHttp, serveStdio } from "./server";

function argValue(argv: string[], flag: string): string | undefined {
  const index = argv.indexOf(flag);
  return index >= 0 && index + 1 < argv.length ? argv[index + 1] : undefined;
}

function main(): void {
  const argv = process.argv.slice(2);
  const configPath = argValue(argv, "--config");
  if (!configPath) {
    process.stderr.write("usage: main.js --config PATH [--transport stdio|http] [--port N]\n");
    process.exit(2);
  }
  let caps: Capabilities;
  try {
    caps = Capabilities.fromConfigFile(configPath);
  } catch (err) {
    process.stderr.write(`bad config: ${(err as Error).message}\n`);
    process.exit(2);
  }
  const transport = argValue(argv, "--transport") ?? "stdio";
  if (transport === "stdio") {
    serveStdio(caps);
  } else if (transport === "http") {
    const port = Number(argValue(argv, "--port") ?? "8099");
    serveHttp(caps, port);
    process.stderr.write(`sidecar listening on 127.0.0.1:${port}\n`);
  } else {
    process.stderr.write(`unknown transport ${transport}\n`);
    process.exit(2);
  }
}

main();
