/**
 * End-to-end smoke: serve a 10-pair toy dataset with the real backend,
 * label every pair through the UI's flowchart + client machinery with
 * three scripted annotator sessions, then check that /v1/status matches
 * the adoption pipeline run offline over the exported annotation log.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { promisify } from "node:util";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { FlowchartMachine } from "../src/flowchart.js";
import { FLOWCHART_ORDER, type LabelCode } from "../src/labels.js";

const execFileAsync = promisify(execFile);

const PORT = 8470 + (process.pid % 400);
const BASE = `http://127.0.0.1:${PORT}`;
const ANNOTATORS = ["u1", "u2", "u3"] as const;

// per-pair labels for the three annotators; p3 and p7 split three ways
const PLAN: Record<string, [LabelCode, LabelCode, LabelCode]> = {
    p0: ["A", "A", "A"],
    p1: ["A", "A", "D"],
    p2: ["B-1", "B-1", "C-1"],
    p3: ["C-2", "D", "E"],
    p4: ["D", "D", "D"],
    p5: ["E", "E", "A"],
    p6: ["C-4", "C-4", "C-4"],
    p7: ["B-2", "C-3", "D"],
    p8: ["C-1", "C-1", "D"],
    p9: ["D", "E", "D"],
};

const EXPECTED_GOLD: Record<string, string> = {
    p0: "A",
    p1: "A",
    p2: "B-1",
    p4: "D",
    p5: "E",
    p6: "C-4",
    p8: "C-1",
    p9: "D",
};
const EXPECTED_CONTESTED = ["p3", "p7"];

let server: ChildProcess | null = null;
let datasetDir = "";

function writeToyDataset(dir: string): void {
    const items: string[] = [];
    const pairs: string[] = [];
    for (let i = 0; i < 10; i += 1) {
        items.push(
            JSON.stringify({
                id: `x${i}`,
                title: `left item ${i}`,
                url: `https://example.com/x${i}`,
            }),
            JSON.stringify({
                id: `y${i}`,
                title: `right item ${i}`,
                url: `https://example.com/y${i}`,
            }),
        );
        pairs.push(
            JSON.stringify({ pair_id: `p${i}`, x_id: `x${i}`, y_id: `y${i}` }),
        );
    }
    writeFileSync(join(dir, "items.jsonl"), items.join("\n") + "\n");
    writeFileSync(join(dir, "pairs.jsonl"), pairs.join("\n") + "\n");
}

async function waitForServer(): Promise<void> {
    const deadline = Date.now() + 30_000;
    while (Date.now() < deadline) {
        try {
            const response = await fetch(`${BASE}/v1/status`);
            if (response.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((resolve) => setTimeout(resolve, 250));
    }
    throw new Error("backend did not become ready");
}

/** Walk the flowchart exactly as the UI does until the wanted label. */
function traverseTo(label: LabelCode): FlowchartMachine {
    const machine = new FlowchartMachine();
    while (machine.current !== null && machine.current.code !== label) {
        machine.answer(false);
    }
    if (machine.current === null) throw new Error(`never reached ${label}`);
    machine.answer(true);
    if (machine.result !== label) throw new Error("traversal went wrong");
    return machine;
}

beforeAll(async () => {
    datasetDir = mkdtempSync(join(tmpdir(), "fbl-e2e-"));
    writeToyDataset(datasetDir);
    server = spawn(
        "python3",
        [
            "-m",
            "fblkit.cli",
            "serve",
            "--dataset",
            datasetDir,
            "--port",
            String(PORT),
            "--annotators",
            ANNOTATORS.join(","),
            "--seed",
            "3",
        ],
        { stdio: ["ignore", "pipe", "pipe"] },
    );
    await waitForServer();
}, 45_000);

afterAll(() => {
    server?.kill("SIGTERM");
});

describe("annotation campaign end to end", () => {
    it("labels all pairs through three scripted sessions", async () => {
        const client = new ApiClient(BASE);
        for (let who = 0; who < ANNOTATORS.length; who += 1) {
            const annotator = ANNOTATORS[who];
            const assignment = await client.getAssignment(annotator);
            expect(assignment.pair_ids.length).toBe(10);
            for (const pairId of assignment.pair_ids) {
                const pair = await client.getPair(pairId);
                expect(pair.x.url).toContain("example.com");
                const machine = traverseTo(PLAN[pairId][who]);
                const ack = await client.postAnnotation(
                    annotator,
                    pairId,
                    machine.result as string,
                );
                expect(ack.status).toBe("recorded");
            }
        }
    }, 60_000);

    it("reports full progress and the expected adoption split", async () => {
        const client = new ApiClient(BASE);
        const status = await client.getStatus();
        expect(status.progress.overall).toBe(1.0);
        for (const annotator of ANNOTATORS) {
            expect(status.progress.per_annotator[annotator]).toEqual({
                done: 10,
                total: 10,
            });
        }
        expect(status.gold_preview).toEqual(EXPECTED_GOLD);
        expect(status.contested).toEqual(EXPECTED_CONTESTED);
        for (const pairId of EXPECTED_CONTESTED) {
            expect(status.pairs[pairId].state).toBe("contested");
            expect(Object.keys(status.pairs[pairId].votes).length).toBe(3);
        }
    }, 30_000);

    it("matches the adoption pipeline run offline on the exported log", async () => {
        const client = new ApiClient(BASE);
        const exported = await client.exportFile("annotations.jsonl");
        expect(exported.trim().split("\n").length).toBe(30);
        const logPath = join(datasetDir, "exported_annotations.jsonl");
        writeFileSync(logPath, exported);

        const script = [
            "import json, sys",
            "from fblkit.datastore import adopt_labels, annotation_from_dict",
            "records = [annotation_from_dict(json.loads(line))",
            "           for line in open(sys.argv[1], encoding='utf-8') if line.strip()]",
            "result = adopt_labels(records)",
            "print(json.dumps({",
            "    'gold': {k: v.value for k, v in sorted(result.gold.items())},",
            "    'contested': sorted(result.contested),",
            "}))",
        ].join("\n");
        const { stdout } = await execFileAsync("python3", ["-c", script, logPath]);
        const offline = JSON.parse(stdout);

        const status = await client.getStatus();
        expect(status.gold_preview).toEqual(offline.gold);
        expect(status.contested).toEqual(offline.contested);
    }, 30_000);

    it("rejects labels the flowchart cannot reach", () => {
        // the machine refuses to produce a result without a yes answer,
        // so the submit path physically has nothing to send
        const machine = new FlowchartMachine();
        for (const code of FLOWCHART_ORDER) {
            expect(machine.current?.code).toBe(code);
            machine.answer(false);
        }
        expect(machine.canSubmit).toBe(false);
        expect(machine.result).toBeNull();
    });
});
