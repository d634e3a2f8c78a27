/**
 * Annotator view: walk the flowchart for each assigned pair and submit
 * the reached label. Keyboard shortcuts: y = yes, n = no, b = back.
 */

import { ApiClient, ApiError, OfflineQueue, type ItemPayload, type PairPayload } from "./api.js";
import { FlowchartMachine } from "./flowchart.js";
import { renderDashboard } from "./dashboard.js";

const client = new ApiClient("");
const queue = new OfflineQueue(client);
const machine = new FlowchartMachine();

interface Session {
    annotatorId: string;
    pairIds: string[];
    position: number;
    pair: PairPayload | null;
}

let session: Session | null = null;

function el<T extends HTMLElement = HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

function escapeHtml(text: string): string {
    return text
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")
        .replaceAll(">", "&gt;")
        .replaceAll('"', "&quot;");
}

function show(value: string): string {
    return value ? escapeHtml(value) : "<em>unknown</em>";
}

function itemCard(name: string, item: ItemPayload): string {
    const link = item.url
        ? `<a href="${escapeHtml(item.url)}" target="_blank" rel="noopener">open product page</a>`
        : "<em>no link</em>";
    const category = [item.major_category, item.sub_category].filter(Boolean).join(" / ");
    return `
<div class="item-card">
  <h3>Item ${name}</h3>
  <p class="item-title">${show(item.title)}</p>
  <dl>
    <dt>description</dt><dd>${show(item.description)}</dd>
    <dt>category</dt><dd>${show(category)}</dd>
    <dt>maker</dt><dd>${show(item.maker)}</dd>
    <dt>brand</dt><dd>${show(item.brand)}</dd>
  </dl>
  <p>${link}</p>
</div>`;
}

function banner(message: string, kind: "info" | "error" = "info"): void {
    const node = el("banner");
    node.textContent = message;
    node.className = message ? `banner ${kind}` : "banner hidden";
}

function renderQuestion(): void {
    const panel = el("question-panel");
    if (!session || !session.pair) return;
    const question = machine.current;
    if (machine.canSubmit) {
        panel.innerHTML = `
<p class="question">Reached label <strong>${machine.result}</strong>.</p>
<button id="submit-label">submit</button>
<button id="back">back</button>`;
        el("submit-label").addEventListener("click", () => void submitCurrent());
        el("back").addEventListener("click", onBack);
        return;
    }
    if (machine.exhausted || question === null) {
        panel.innerHTML = `
<p class="question">No statement matched. Go back and revisit an answer.</p>
<button id="back">back</button>`;
        el("back").addEventListener("click", onBack);
        return;
    }
    panel.innerHTML = `
<p class="progress">Question ${question.index + 1} of ${question.total} (label ${question.code})</p>
<p class="question">${escapeHtml(question.statement)}</p>
<button id="answer-yes">yes (y)</button>
<button id="answer-no">no (n)</button>
<button id="back">back (b)</button>`;
    el("answer-yes").addEventListener("click", () => onAnswer(true));
    el("answer-no").addEventListener("click", () => onAnswer(false));
    el("back").addEventListener("click", onBack);
}

function renderPair(): void {
    if (!session) return;
    const header = el("pair-header");
    if (!session.pair) {
        header.textContent = "All assigned pairs are labeled. Thank you!";
        el("items").innerHTML = "";
        el("question-panel").innerHTML = "";
        return;
    }
    header.textContent =
        `Pair ${session.position + 1} of ${session.pairIds.length} - ${session.pair.pair_id}`;
    el("items").innerHTML =
        itemCard("x", session.pair.x) + itemCard("y", session.pair.y);
    renderQuestion();
}

function onAnswer(yes: boolean): void {
    if (machine.current === null) return;
    machine.answer(yes);
    renderQuestion();
}

function onBack(): void {
    machine.back();
    renderQuestion();
}

async function submitCurrent(): Promise<void> {
    if (!session || !session.pair || !machine.canSubmit) return;
    const label = machine.result as string;
    try {
        const outcome = await queue.submit(session.annotatorId, session.pair.pair_id, label);
        banner(outcome === "queued" ? "offline: submission queued, will retry" : "");
    } catch (error) {
        if (error instanceof ApiError) {
            banner(`rejected: ${error.message}`, "error");
            if (error.status !== 409) return; // stay on the pair for a real fix
        } else {
            throw error;
        }
    }
    await advance();
}

async function advance(): Promise<void> {
    if (!session) return;
    machine.reset();
    session.position += 1;
    if (session.position >= session.pairIds.length) {
        session.pair = null;
    } else {
        session.pair = await client.getPair(session.pairIds[session.position]);
    }
    renderPair();
}

async function startSession(annotatorId: string): Promise<void> {
    try {
        const assignment = await client.getAssignment(annotatorId);
        const position = assignment.next_pair_id
            ? assignment.pair_ids.indexOf(assignment.next_pair_id)
            : assignment.pair_ids.length;
        session = { annotatorId, pairIds: assignment.pair_ids, position, pair: null };
        if (position < assignment.pair_ids.length) {
            session.pair = await client.getPair(assignment.pair_ids[position]);
        }
        machine.reset();
        banner("");
        renderPair();
    } catch (error) {
        banner(error instanceof ApiError ? error.message : "service unreachable", "error");
    }
}

function onKey(event: KeyboardEvent): void {
    if (!session || !session.pair) return;
    if (event.key === "y") onAnswer(true);
    else if (event.key === "n") onAnswer(false);
    else if (event.key === "b") onBack();
    else if (event.key === "Enter" && machine.canSubmit) void submitCurrent();
}

function switchView(view: "annotate" | "review"): void {
    el("annotate-view").classList.toggle("hidden", view !== "annotate");
    el("review-view").classList.toggle("hidden", view !== "review");
    if (view === "review") {
        void renderDashboard(client, el("review-view"));
    }
}

export function boot(): void {
    el("start").addEventListener("click", () => {
        const annotatorId = el<HTMLInputElement>("annotator-id").value.trim();
        if (annotatorId) void startSession(annotatorId);
    });
    el("tab-annotate").addEventListener("click", () => switchView("annotate"));
    el("tab-review").addEventListener("click", () => switchView("review"));
    document.addEventListener("keydown", onKey);
    window.setInterval(() => {
        void queue.flush().then((left) => {
            if (left > 0) banner(`${left} queued submissions waiting for the network`);
        });
    }, 5000);
}

if (typeof document !== "undefined" && document.getElementById("annotate-view")) {
    boot();
}
