/** View state and its pure transitions.
 *
 * Rendering is a function of (server snapshot, ViewState); these helpers
 * never talk to the network. A verdict draft only becomes a request when the
 * user explicitly submits it, and a relabel draft is not submittable until a
 * corrected label is chosen.
 */

import type { DamageLabel, VerdictStatus } from "./types.js";
import { DAMAGE_LABELS } from "./types.js";

export type ActiveLayer = "severity" | "damages" | "plan";

export interface VerdictDraft {
  damageId: string;
  status: VerdictStatus;
  correctedLabel: DamageLabel | null;
}

export interface ViewState {
  layer: ActiveLayer;
  selectedDamageId: string | null;
  draft: VerdictDraft | null;
}

export function initialViewState(): ViewState {
  return { layer: "severity", selectedDamageId: null, draft: null };
}

export function setLayer(state: ViewState, layer: ActiveLayer): ViewState {
  return { ...state, layer };
}

export function selectDamage(state: ViewState, damageId: string | null): ViewState {
  return { ...state, selectedDamageId: damageId, draft: null };
}

export function startDraft(state: ViewState, status: VerdictStatus): ViewState {
  if (state.selectedDamageId === null) return state;
  return {
    ...state,
    draft: { damageId: state.selectedDamageId, status, correctedLabel: null },
  };
}

export function setDraftLabel(state: ViewState, label: DamageLabel): ViewState {
  if (!state.draft || state.draft.status !== "relabeled") return state;
  if (!DAMAGE_LABELS.includes(label)) return state;
  return { ...state, draft: { ...state.draft, correctedLabel: label } };
}

export function clearDraft(state: ViewState): ViewState {
  return { ...state, draft: null };
}

export function draftSubmittable(draft: VerdictDraft | null): boolean {
  if (!draft) return false;
  if (draft.status === "relabeled") return draft.correctedLabel !== null;
  return true;
}
