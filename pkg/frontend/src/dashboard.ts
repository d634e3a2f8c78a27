/**
 * Review dashboard: per-annotator progress, live label distribution of
 * the gold preview, and a drill-down into contested pairs showing the
 * three conflicting votes.
 */

import { ApiClient, type StatusPayload } from "./api.js";
import { FLOWCHART_ORDER } from "./labels.js";

let lastStatus: StatusPayload | null = null;

function escapeHtml(text: string): string {
    return text
        .replaceAll("&", "&amp;")
        .replaceAll("<", "&lt;")
        .replaceAll(">", "&gt;")
        .replaceAll('"', "&quot;");
}

function bar(fraction: number): string {
    const percent = Math.round(fraction * 1000) / 10;
    return `<div class="bar"><div class="bar-fill" style="width:${percent}%"></div><span>${percent}%</span></div>`;
}

export function distributionCounts(status: StatusPayload): Record<string, number> {
    const counts: Record<string, number> = {};
    for (const code of FLOWCHART_ORDER) counts[code] = 0;
    for (const label of Object.values(status.gold_preview)) {
        counts[label] = (counts[label] ?? 0) + 1;
    }
    counts["contested"] = status.contested.length;
    return counts;
}

export function renderStatusHtml(status: StatusPayload): string {
    const annotators = Object.entries(status.progress.per_annotator)
        .sort(([a], [b]) => a.localeCompare(b))
        .map(
            ([id, p]) =>
                `<tr><td>${escapeHtml(id)}</td><td>${p.done} / ${p.total}</td><td>${bar(
                    p.total ? p.done / p.total : 0,
                )}</td></tr>`,
        )
        .join("");

    const counts = distributionCounts(status);
    const total = Object.values(counts).reduce((a, b) => a + b, 0);
    const distribution = Object.entries(counts)
        .map(([label, count]) => {
            const share = total ? count / total : 0;
            return `<tr><td>${escapeHtml(label)}</td><td>${count}</td><td>${bar(share)}</td></tr>`;
        })
        .join("");

    const contested = status.contested
        .map((pairId) => {
            const votes = status.pairs[pairId]?.votes ?? {};
            const detail = Object.entries(votes)
                .map(([label, n]) => `${escapeHtml(label)} x${n}`)
                .join(", ");
            return `<tr><td>${escapeHtml(pairId)}</td><td>${detail}</td></tr>`;
        })
        .join("");

    return `
<h2>Overall progress</h2>
${bar(status.progress.overall)}
<h2>Annotators</h2>
<table><thead><tr><th>annotator</th><th>done</th><th></th></tr></thead><tbody>${annotators}</tbody></table>
<h2>Label distribution (adopted preview)</h2>
<table><thead><tr><th>label</th><th>count</th><th>share</th></tr></thead><tbody>${distribution}</tbody></table>
<h2>Contested pairs (${status.contested.length})</h2>
<table><thead><tr><th>pair</th><th>votes</th></tr></thead><tbody>${contested || "<tr><td colspan=2>none</td></tr>"}</tbody></table>`;
}

export async function renderDashboard(client: ApiClient, target: HTMLElement): Promise<void> {
    try {
        lastStatus = await client.getStatus();
        target.innerHTML = renderStatusHtml(lastStatus);
    } catch {
        const stale = lastStatus
            ? renderStatusHtml(lastStatus)
            : "<p>no cached view yet</p>";
        target.innerHTML = `<div class="banner error">service unreachable; showing last known view</div>${stale}`;
    }
}
