/**
 * Label taxonomy mirrored from the server's JSON contract.
 * The UI owns its copy: there is no build-time coupling to the backend.
 */

export type LabelCode =
    | "A"
    | "B-1"
    | "B-2"
    | "C-1"
    | "C-2"
    | "C-3"
    | "C-4"
    | "D"
    | "E";

export type CoarseName = "substitute" | "complementary" | "unrelated";

/** Flowchart order: clearer relationships are checked first. */
export const FLOWCHART_ORDER: readonly LabelCode[] = [
    "A",
    "B-1",
    "B-2",
    "C-1",
    "C-2",
    "C-3",
    "C-4",
    "D",
    "E",
];

/** The statement an annotator confirms or rejects for each label. */
export const LABEL_STATEMENTS: Record<LabelCode, string> = {
    "A": "Items x and y have the same function and usage.",
    "B-1": "Item x can be replenished with item y.",
    "B-2": "Item y can be replenished with item x.",
    "C-1": "Items x and y must be combined to be usable.",
    "C-2": "When combined with item y, item x becomes more useful.",
    "C-3": "When combined with item x, item y becomes more useful.",
    "C-4": "Combining x and y makes them more useful.",
    "D": "Items x and y have no relationship.",
    "E": "Items x and y seem to have a relationship, but it is difficult to verbalize.",
};

export function toCoarse(code: LabelCode): CoarseName {
    if (code === "A") return "substitute";
    if (code === "D" || code === "E") return "unrelated";
    return "complementary";
}
