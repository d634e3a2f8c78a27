/**
 * Flowchart state machine for one pair under review.
 *
 * Questions are offered strictly in flowchart order (A through E).
 * Answering "yes" terminates with that label; answering "no" moves to
 * the next question; "back" reopens the previous answer. A label can
 * only come out of a completed traversal, so the UI built on top is
 * structurally unable to submit anything the flowchart did not reach.
 */

import { FLOWCHART_ORDER, LABEL_STATEMENTS, type LabelCode } from "./labels.js";

export interface FlowchartQuestion {
    code: LabelCode;
    statement: string;
    index: number;
    total: number;
}

export class FlowchartMachine {
    private answers: boolean[] = [];

    reset(): void {
        this.answers = [];
    }

    /** Answers given so far, oldest first. */
    get trail(): readonly boolean[] {
        return this.answers;
    }

    /** Label reached by a terminating "yes", if any. */
    get result(): LabelCode | null {
        const last = this.answers.length - 1;
        if (last >= 0 && this.answers[last]) {
            return FLOWCHART_ORDER[last];
        }
        return null;
    }

    /** True once every question was answered "no". */
    get exhausted(): boolean {
        return this.answers.length === FLOWCHART_ORDER.length && !this.answers[this.answers.length - 1];
    }

    get canSubmit(): boolean {
        return this.result !== null;
    }

    /** The open question, or null when the traversal has ended. */
    get current(): FlowchartQuestion | null {
        if (this.result !== null || this.exhausted) return null;
        const code = FLOWCHART_ORDER[this.answers.length];
        return {
            code,
            statement: LABEL_STATEMENTS[code],
            index: this.answers.length,
            total: FLOWCHART_ORDER.length,
        };
    }

    answer(yes: boolean): void {
        if (this.current === null) {
            throw new Error("flowchart already finished; go back to edit");
        }
        this.answers.push(yes);
    }

    /** Reopen the previous answer. Returns false at the start. */
    back(): boolean {
        if (this.answers.length === 0) return false;
        this.answers.pop();
        return true;
    }
}
