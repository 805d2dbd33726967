// View-model derivation: everything the DOM displays comes verbatim from a
// service payload or a user control, never from console-side computation.

import { SolutionMessage, combinationLabel } from "./protocol.js";

export interface NumericPanel {
    seq: number;
    mode: string;
    objective: number;
    intentTerm: number;
    mimicTerm: number;
    gamma: number | null;
    lambdaMin: number | null;
    lambdaMax: number | null;
}

export function numericPanel(sol: SolutionMessage): NumericPanel {
    const lam = sol.lambda;
    return {
        seq: sol.seq,
        mode: sol.mode,
        objective: sol.objective,
        intentTerm: sol.intent_term,
        mimicTerm: sol.mimic_term,
        gamma: sol.gamma,
        lambdaMin: lam === null || lam.length === 0 ? null : Math.min(...lam),
        lambdaMax: lam === null || lam.length === 0 ? null : Math.max(...lam),
    };
}

export interface IntentBar {
    mask: number;
    label: string;
    value: number;
}

export function intentBars(pH: number[], taskNames: string[]): IntentBar[] {
    return pH.map((value, mask) => ({
        mask,
        label: combinationLabel(taskNames, mask),
        value,
    }));
}
