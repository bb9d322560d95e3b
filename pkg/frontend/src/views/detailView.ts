/** Detail view for the selected result: per-step answers with
 * regenerate-from-step, or a config form editing the eight spec slots.
 *
 * Edits live in view-local drafts until submitted, so a rejected edit keeps
 * the user's text on screen next to the server's error. Drafts reset when
 * the results change (a successful round trip replaced them).
 */

import type { SessionStore, UiState } from "../store.js";
import type { ConfigPatch, ResultPayload, SpecSlots } from "../types.js";
import type { View } from "./tableView.js";

const MARKS = ["bar", "pie", "line", "scatter", "point", "arc"];
const FUNCTIONS = ["none", "count", "average", "sum", "max", "min"];
const SORTS = ["none", "x asc", "x desc", "y asc", "y desc"];

export function createDetailView(
  container: HTMLElement,
  store: SessionStore,
  track: (work: Promise<unknown>) => void,
): View {
  const doc = container.ownerDocument;
  const stepDrafts = new Map<number, string>();
  const configDrafts = new Map<keyof SpecSlots, string>();
  let draftsFor: unknown = null;

  function option(select: HTMLSelectElement, value: string): void {
    const el = doc.createElement("option");
    el.value = value;
    el.textContent = value;
    select.appendChild(el);
  }

  function fieldError(state: UiState, key: string): HTMLElement {
    const el = doc.createElement("p");
    el.className = "field-error";
    el.dataset.field = key;
    const message = state.fieldErrors[key];
    el.textContent = message ?? "";
    el.hidden = message === undefined;
    return el;
  }

  function renderSteps(
    state: UiState,
    result: ResultPayload,
  ): HTMLElement {
    const list = doc.createElement("ol");
    list.id = "step-list";
    for (const step of result.steps) {
      const row = doc.createElement("li");
      row.className = "step-row";
      row.dataset.step = String(step.step);

      const label = doc.createElement("label");
      label.textContent = `${step.step} ${step.title}`;

      const input = doc.createElement("input");
      input.type = "text";
      input.className = "step-input";
      input.dataset.step = String(step.step);
      input.value = stepDrafts.get(step.step) ?? step.answer;
      input.addEventListener("input", () => {
        stepDrafts.set(step.step, input.value);
      });

      const button = doc.createElement("button");
      button.className = "regen";
      button.dataset.step = String(step.step);
      button.textContent = "Regenerate from here";
      button.disabled = state.pending;
      button.addEventListener("click", () => {
        const answers: Record<string, string> = {};
        let edited = false;
        for (const s of result.steps) {
          if (s.step > step.step) break;
          const text = stepDrafts.get(s.step) ?? s.answer;
          if (text !== s.answer) edited = true;
          answers[String(s.step)] = text;
        }
        // Unedited answers would pin what the server already chose.
        if (!edited) return;
        track(store.regenerateFrom(result.rank, step.step, answers));
      });

      row.append(label, input, button, fieldError(state, `step-${step.step}`));
      list.appendChild(row);
    }
    return list;
  }

  function renderConfig(
    state: UiState,
    result: ResultPayload,
  ): HTMLElement {
    const form = doc.createElement("div");
    form.id = "config-form";
    const slots = result.spec;
    const controls = new Map<keyof SpecSlots, HTMLInputElement | HTMLSelectElement>();

    function add(
      key: keyof SpecSlots,
      label: string,
      choices: string[] | null,
    ): void {
      const row = doc.createElement("div");
      row.className = "config-row";
      const caption = doc.createElement("label");
      caption.textContent = label;
      let control: HTMLInputElement | HTMLSelectElement;
      if (choices) {
        control = doc.createElement("select");
        for (const choice of choices) option(control, choice);
      } else {
        control = doc.createElement("input");
        control.type = "text";
      }
      control.className = "config-input";
      control.dataset.slot = key;
      control.value = configDrafts.get(key) ?? slots[key];
      control.addEventListener("change", () => {
        configDrafts.set(key, control.value);
      });
      controls.set(key, control);
      row.append(caption, control);
      form.appendChild(row);
    }

    add("mark", "Mark", MARKS);
    add("x", "X field", null);
    add("x_aggregation", "X aggregation", FUNCTIONS);
    add("y", "Y field", null);
    add("y_aggregation", "Y aggregation", FUNCTIONS);
    add("color", "Color", null);
    add("filter", "Filter", null);
    add("sort", "Sort", SORTS);

    const apply = doc.createElement("button");
    apply.id = "apply-config";
    apply.textContent = "Apply";
    apply.disabled = state.pending;
    apply.addEventListener("click", () => {
      const patch: ConfigPatch = {};
      const value = (key: keyof SpecSlots) => controls.get(key)!.value.trim();
      if (value("mark") !== slots.mark) patch.mark = value("mark");
      if (value("x") !== slots.x) patch.x = value("x");
      if (value("y") !== slots.y) patch.y = value("y");
      const aggregations: { x?: string; y?: string } = {};
      if (value("x_aggregation") !== slots.x_aggregation) {
        aggregations.x = value("x_aggregation");
      }
      if (value("y_aggregation") !== slots.y_aggregation) {
        aggregations.y = value("y_aggregation");
      }
      if (aggregations.x !== undefined || aggregations.y !== undefined) {
        patch.aggregations = aggregations;
      }
      if (value("color") !== slots.color) patch.color = value("color");
      if (value("filter") !== slots.filter) patch.filter = value("filter");
      if (value("sort") !== slots.sort) patch.sort = value("sort");
      if (Object.keys(patch).length === 0) return;
      track(store.applyConfigPatch(result.rank, patch));
    });

    form.append(apply, fieldError(state, "config"));
    return form;
  }

  function render(state: UiState): void {
    container.replaceChildren();

    const result = state.results.find((r) => r.rank === state.selectedRank);
    if (!result) {
      draftsFor = null;
      stepDrafts.clear();
      configDrafts.clear();
      return;
    }
    // New server payload for this slot: drop stale drafts.
    if (draftsFor !== result) {
      draftsFor = result;
      stepDrafts.clear();
      configDrafts.clear();
    }

    const heading = doc.createElement("h2");
    heading.textContent = `Result #${result.rank}`;
    container.appendChild(heading);

    const toggle = doc.createElement("div");
    toggle.className = "mode-toggle";
    for (const mode of ["steps", "config"] as const) {
      const button = doc.createElement("button");
      button.dataset.mode = mode;
      button.textContent = mode === "steps" ? "Steps" : "Config";
      button.className = state.editMode === mode ? "active" : "";
      button.addEventListener("click", () => store.setEditMode(mode));
      toggle.appendChild(button);
    }
    container.appendChild(toggle);

    container.appendChild(
      state.editMode === "steps"
        ? renderSteps(state, result)
        : renderConfig(state, result),
    );
  }

  return { render };
}
