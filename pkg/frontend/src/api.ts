/**
 * Typed client for the annotation service's /v1 JSON API, plus an
 * offline submission queue. The UI keeps no other state on the wire:
 * the server is the source of truth and submissions are optimistic.
 */

export interface ItemPayload {
    id: string;
    title: string;
    description: string;
    specification: string;
    major_category: string;
    sub_category: string;
    maker: string;
    brand: string;
    url: string | null;
}

export interface PairPayload {
    pair_id: string;
    source: string;
    invalid: boolean;
    x: ItemPayload;
    y: ItemPayload;
}

export interface AssignmentPayload {
    annotator_id: string;
    pair_ids: string[];
    cursor: number;
    next_pair_id: string | null;
}

export interface PairState {
    votes: Record<string, number>;
    n_annotations: number;
    state: "pending" | "adopted" | "contested";
}

export interface StatusPayload {
    progress: {
        overall: number;
        per_annotator: Record<string, { done: number; total: number }>;
    };
    pairs: Record<string, PairState>;
    gold_preview: Record<string, string>;
    contested: string[];
}

export interface Ack {
    status: "recorded" | "duplicate";
    label: string;
}

/** Server said no: HTTP status plus the body's detail message. */
export class ApiError extends Error {
    constructor(public readonly status: number, detail: string) {
        super(detail);
        this.name = "ApiError";
    }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
    constructor(
        private readonly baseUrl: string = "",
        private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
    ) {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
        if (!response.ok) {
            let detail = response.statusText;
            try {
                const body = await response.json();
                if (body && typeof body.detail === "string") detail = body.detail;
            } catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(response.status, detail);
        }
        return (await response.json()) as T;
    }

    getAssignment(annotatorId: string): Promise<AssignmentPayload> {
        return this.request(`/v1/assignments/${encodeURIComponent(annotatorId)}`);
    }

    getPair(pairId: string): Promise<PairPayload> {
        return this.request(`/v1/pairs/${encodeURIComponent(pairId)}`);
    }

    postAnnotation(annotatorId: string, pairId: string, label: string): Promise<Ack> {
        return this.request(`/v1/annotations`, {
            method: "POST",
            headers: {
                "Content-Type": "application/json",
                "X-Annotator-Id": annotatorId,
            },
            body: JSON.stringify({ pair_id: pairId, label }),
        });
    }

    getStatus(): Promise<StatusPayload> {
        return this.request(`/v1/status`);
    }

    async exportFile(name: string): Promise<string> {
        const response = await this.fetchFn(`${this.baseUrl}/v1/export/${name}`);
        if (!response.ok) throw new ApiError(response.status, response.statusText);
        return await response.text();
    }
}

export interface QueuedSubmission {
    annotatorId: string;
    pairId: string;
    label: string;
}

/**
 * Holds submissions that failed with a network error and retries them.
 * Server rejections (4xx/5xx) are NOT queued: they are surfaced to the
 * caller, because retrying an invalid or conflicting label cannot help.
 */
export class OfflineQueue {
    private queue: QueuedSubmission[] = [];

    constructor(private readonly client: ApiClient) {}

    get pending(): ReadonlyArray<QueuedSubmission> {
        return this.queue;
    }

    async submit(annotatorId: string, pairId: string, label: string): Promise<Ack | "queued"> {
        try {
            return await this.client.postAnnotation(annotatorId, pairId, label);
        } catch (error) {
            if (error instanceof ApiError) throw error;
            this.queue.push({ annotatorId, pairId, label });
            return "queued";
        }
    }

    /** Retry queued submissions in order; stops at the first network failure. */
    async flush(): Promise<number> {
        while (this.queue.length > 0) {
            const head = this.queue[0];
            try {
                await this.client.postAnnotation(head.annotatorId, head.pairId, head.label);
                this.queue.shift();
            } catch (error) {
                if (error instanceof ApiError) {
                    // the server has spoken; drop it rather than loop forever
                    this.queue.shift();
                    if (error.status !== 409) throw error;
                } else {
                    break; // still offline
                }
            }
        }
        return this.queue.length;
    }
}
