// End-to-end parity against the real server: the rule-editor apply path
// (structured body through the API client) must leave byte-identical
// documents to the CLI evolve path, and the pivot must show roll-up values
// exactly as the API serves them.

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Client } from "../src/api.js";
import { displayNumber, renderPivot } from "../src/pivot.js";
import { draftToBody } from "../src/rules.js";
import { GROUPING_DRAFT } from "./rules.test.js";

const PY = process.env.CUBEHOUSE_PYTHON ?? "python3";
const PORT = 8300 + (process.pid % 500);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let uiDir: string;
let cliDir: string;

function cli(...args: string[]): void {
  const run = spawnSync(PY, ["-m", "cubehouse.cli", ...args],
                        { encoding: "utf-8" });
  if (run.status !== 0) {
    throw new Error(`cli ${args.join(" ")} failed: ${run.stderr}`);
  }
}

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const resp = await fetch(`${BASE}/model`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("server did not come up");
}

beforeAll(async () => {
  uiDir = mkdtempSync(join(tmpdir(), "cubehouse-ui-"));
  cliDir = mkdtempSync(join(tmpdir(), "cubehouse-cli-"));
  cli("fixture", "clapi-small", "--seed", "1", "--out", uiDir);
  cli("fixture", "clapi-small", "--seed", "1", "--out", cliDir);
  server = spawn(PY, ["-m", "cubehouse.cli", "serve", uiDir,
                      "--port", String(PORT)], { stdio: "ignore" });
  await waitForServer();
}, 30000);

afterAll(() => {
  server?.kill();
});

describe("UI/CLI parity", () => {
  it("rule-editor apply and CLI evolve write identical documents", async () => {
    const client = new Client(BASE);
    const result = await client.applyRules(draftToBody(GROUPING_DRAFT));
    expect(result.applied).toBe(true);

    // the same rules through the CLI, in the text grammar
    const rulesText = [
      "if ConditionOn(location-in-transcription, {location}) then " +
        "Generate(location-group, {grp})",
      "(1) if location in {'begin', 'end'} then grp={extreme}",
      "(2) if location not in {'begin', 'end'} then grp={middle}",
      "",
    ].join("\n");
    const rulesPath = join(cliDir, "rules.txt");
    const { writeFileSync } = await import("node:fs");
    writeFileSync(rulesPath, rulesText);
    cli("evolve", cliDir, rulesPath);

    for (const name of ["dw-model.xml", "dim-time.xml"]) {
      const viaUi = readFileSync(join(uiDir, name), "utf-8");
      const viaCli = readFileSync(join(cliDir, name), "utf-8");
      expect(viaUi).toBe(viaCli);
    }
  }, 30000);

  it("pivot shows roll-up values exactly as the API payload carries them",
     async () => {
    const client = new Client(BASE);
    const base = await client.createCube({
      axes: [{ dimension: "time-d", level: "location-in-transcription" }],
      measure: "frequency",
      aggregate: "SUM",
    });
    const rolled = await client.operate(base.id, {
      op: "roll-up",
      dimension: "time-d",
      level: "location-group",
    });
    const html = renderPivot(rolled);
    for (const cell of rolled.cells) {
      expect(html).toContain(`>${displayNumber(cell.value)}</td>`);
    }
    // the served group value is the sum of its children's served values
    const value = (cube: typeof base, member: string) =>
      cube.cells.find((c) => c.coordinate[0] === member)?.value ?? 0;
    expect(value(rolled, "extreme")).toBeCloseTo(
      value(base, "begin") + value(base, "end"), 9);
  }, 30000);

  it("operator errors surface their machine-readable code", async () => {
    const client = new Client(BASE);
    const base = await client.createCube({
      axes: [{ dimension: "time-d", level: "location-in-transcription" }],
      measure: "frequency",
    });
    await expect(
      client.operate(base.id, {
        op: "roll-up",
        dimension: "time-d",
        level: "location-in-transcription",
      }),
    ).rejects.toMatchObject({ code: "target-not-coarser" });
  }, 30000);
});
