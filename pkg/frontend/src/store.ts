/** Session state for the UI.
 *
 * The server is the single source of truth: every change to a result goes
 * through the API and only server payloads are stored. Validation failures
 * surface as a banner (whole-request problems) or as field errors keyed by
 * the control that caused them; the previous results stay untouched.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  ConfigPatch,
  ResultPayload,
  TableInfo,
} from "./types.js";

export type EditMode = "steps" | "config";

export interface UiState {
  table: TableInfo | null;
  sessionId: string | null;
  utterance: string;
  results: ResultPayload[];
  selectedRank: number | null;
  editMode: EditMode;
  pending: boolean;
  banner: string | null;
  fieldErrors: Record<string, string>;
}

const INITIAL: UiState = {
  table: null,
  sessionId: null,
  utterance: "",
  results: [],
  selectedRank: null,
  editMode: "steps",
  pending: false,
  banner: null,
  fieldErrors: {},
};

export type Listener = (state: UiState) => void;

export class SessionStore {
  private state: UiState = INITIAL;
  private readonly listeners = new Set<Listener>();

  constructor(private readonly api: ApiClient) {}

  getState(): UiState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  selectResult(rank: number): void {
    if (this.state.results.some((r) => r.rank === rank)) {
      this.update({ selectedRank: rank, fieldErrors: {} });
    }
  }

  setEditMode(mode: EditMode): void {
    this.update({ editMode: mode, fieldErrors: {} });
  }

  setUtterance(text: string): void {
    this.update({ utterance: text });
  }

  get selectedResult(): ResultPayload | null {
    const { results, selectedRank } = this.state;
    return results.find((r) => r.rank === selectedRank) ?? null;
  }

  /** Upload a CSV and open a session on it; resets previous results. */
  async loadTable(file: Blob, filename: string): Promise<void> {
    if (this.state.pending) return;
    this.update({ pending: true, banner: null, fieldErrors: {} });
    try {
      const table = await this.api.uploadTable(file, filename);
      const session = await this.api.createSession(table.table_id);
      this.update({
        table,
        sessionId: session.session_id,
        results: [],
        selectedRank: null,
      });
    } catch (error) {
      this.update({ banner: describe(error) });
    } finally {
      this.update({ pending: false });
    }
  }

  async submitUtterance(utterance: string): Promise<void> {
    const { sessionId, pending } = this.state;
    if (pending || !sessionId || !utterance.trim()) return;
    this.update({ pending: true, utterance, banner: null, fieldErrors: {} });
    try {
      const envelope = await this.api.generate(sessionId, utterance);
      this.update({
        results: envelope.results,
        selectedRank: envelope.results[0]?.rank ?? null,
      });
    } catch (error) {
      // The utterance stays in state so the input is preserved.
      this.update({ banner: describe(error) });
    } finally {
      this.update({ pending: false });
    }
  }

  /**
   * Re-run the search with steps 1..fromStep pinned. `answers` holds the
   * edited texts keyed by step number; a 409 lands on the edited step's
   * field and leaves the results alone.
   */
  async regenerateFrom(
    rank: number,
    fromStep: number,
    answers: Record<string, string>,
  ): Promise<void> {
    const { sessionId, pending } = this.state;
    if (pending || !sessionId) return;
    this.update({ pending: true, banner: null, fieldErrors: {} });
    try {
      const envelope = await this.api.regenerate(
        sessionId,
        rank,
        fromStep,
        answers,
      );
      const stillThere = envelope.results.some(
        (r) => r.rank === this.state.selectedRank,
      );
      this.update({
        results: envelope.results,
        selectedRank: stillThere
          ? this.state.selectedRank
          : (envelope.results[0]?.rank ?? null),
      });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.update({
          fieldErrors: { [`step-${fromStep}`]: error.message },
        });
      } else {
        this.update({ banner: describe(error) });
      }
    } finally {
      this.update({ pending: false });
    }
  }

  /**
   * Config-mode edit of one result. Never triggers inference; the server
   * revalidates, recompiles, and returns the updated result.
   */
  async applyConfigPatch(
    rank: number,
    patch: ConfigPatch,
    errorKey = "config",
  ): Promise<void> {
    const { sessionId, pending } = this.state;
    if (pending || !sessionId) return;
    this.update({ pending: true, banner: null, fieldErrors: {} });
    try {
      const updated = await this.api.patchResult(sessionId, rank, patch);
      this.update({
        results: this.state.results.map((r) =>
          r.rank === updated.rank ? updated : r,
        ),
      });
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.update({ fieldErrors: { [errorKey]: error.message } });
      } else {
        this.update({ banner: describe(error) });
      }
    } finally {
      this.update({ pending: false });
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    if (error.code === "no_valid_chart") {
      const where = error.step !== undefined ? ` at step ${error.step}` : "";
      return `No valid chart survived${where}. Try rephrasing the question or naming the columns to use.`;
    }
    return error.message;
  }
  if (error instanceof Error) return error.message;
  return String(error);
}
