import { spawn, type ChildProcess } from "node:child_process";
import path from "node:path";
import { mkdtempSync } from "node:fs";
import os from "node:os";
import { fileURLToPath } from "node:url";

export interface FixtureServer {
  base: string;
  stop: () => void;
}

export async function startFixtureServer(): Promise<FixtureServer> {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const script = path.join(here, "fixture_server.py");
  const dir = mkdtempSync(path.join(os.tmpdir(), "newsprism-ui-"));
  const proc: ChildProcess = spawn("python3", [script, "--dir", dir], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const base = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    let stderr = "";
    const timer = setTimeout(
      () => reject(new Error(`fixture server did not become ready:\n${stderr}`)),
      120_000,
    );
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      for (const line of buffer.split("\n")) {
        try {
          const obj = JSON.parse(line);
          if (obj.ready) {
            clearTimeout(timer);
            resolve(`http://${obj.addr}:${obj.port}`);
            return;
          }
        } catch {
          /* not the readiness line yet */
        }
      }
    });
    proc.stderr!.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
    });
    proc.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`fixture server exited with ${code}:\n${stderr}`));
    });
  });
  return { base, stop: () => proc.kill("SIGKILL") };
}

export async function until(
  check: () => boolean,
  what = "condition",
  timeoutMs = 20_000,
): Promise<void> {
  const start = Date.now();
  while (Date.now() - start < timeoutMs) {
    if (check()) return;
    await new Promise((r) => setTimeout(r, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}
