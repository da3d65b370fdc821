import { execFileSync, spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env.VIRTDOC_PYTHON ?? "python3";

export interface ServiceHandle {
  baseUrl: string;
  modelPath: string;
  scriptPath: string;
  stop: () => void;
}

function run(args: string[]): string {
  return execFileSync(PYTHON, ["-m", "virtdoc", ...args], { encoding: "utf-8" });
}

/** The same interview the kiosk walkthrough performs, as a CLI script. */
export function canonicalItems(): Array<Record<string, string>> {
  const duration = (200 - 1.748 * 100) / ((343 * 100 * 1e-6) / 2);
  return [
    { utterance: "hello" },
    { utterance: "male" },
    { utterance: "43" },
    { frame: "W:43.1:43.1" },
    { frame: `U:${duration}` },
    { utterance: "yes" },
    { utterance: "no" },
    { utterance: "3" },
    { utterance: "1" },
  ];
}

/** Train a small model and start the session service on a free-ish port. */
export async function startService(): Promise<ServiceHandle> {
  const dir = mkdtempSync(join(tmpdir(), "virtdoc-kiosk-"));
  const cohort = join(dir, "cohort.csv");
  const modelPath = join(dir, "model.json");
  run(["gen-data", "--n", "600", "--seed", "3", "--out", cohort]);
  run(["train", "--data", cohort, "--epochs", "40", "--widths", "6",
       "--seed", "5", "--out", modelPath]);

  const scriptPath = join(dir, "script.json");
  writeFileSync(scriptPath, JSON.stringify(canonicalItems()));

  const port = 8100 + (process.pid % 1000);
  const proc: ChildProcess = spawn(
    PYTHON,
    ["-m", "virtdoc", "serve", "--model", modelPath, "--port", String(port),
     "--data-dir", join(dir, "data")],
    { stdio: "ignore" },
  );
  const baseUrl = `http://127.0.0.1:${port}`;

  const deadline = Date.now() + 30_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/api/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error("service did not come up in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }

  return {
    baseUrl,
    modelPath,
    scriptPath,
    stop: () => proc.kill("SIGKILL"),
  };
}

/** Reference run: the CLI replay of the same inputs. */
export function cliReport(modelPath: string, scriptPath: string): {
  decision: string;
  adjusted_probability: number;
} {
  return JSON.parse(run(["simulate-session", "--model", modelPath, "--script", scriptPath]));
}
