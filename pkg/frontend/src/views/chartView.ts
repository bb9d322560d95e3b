/** Ranked chart cards. Each card shows the server's document, rendered by
 * the injected runtime, with a caption built from the step answers. */

import { renderChart, type ChartRuntime } from "../render.js";
import type { SessionStore, UiState } from "../store.js";
import type { ResultPayload } from "../types.js";
import type { View } from "./tableView.js";

function caption(result: ResultPayload): string {
  const byTitle = new Map(result.steps.map((s) => [s.title, s.answer]));
  const mark = byTitle.get("Choose Mark") ?? result.spec.mark;
  const encoding = byTitle.get("Determine Encoding") ?? "";
  return encoding ? `${mark} — ${encoding}` : mark;
}

export function createChartView(
  container: HTMLElement,
  store: SessionStore,
  runtime: ChartRuntime | null,
  track: (work: Promise<unknown>) => void,
): View {
  const doc = container.ownerDocument;

  function render(state: UiState): void {
    container.replaceChildren();

    const heading = doc.createElement("h2");
    heading.textContent = "Charts";
    container.appendChild(heading);

    if (state.results.length === 0) {
      const empty = doc.createElement("p");
      empty.className = "empty-note";
      empty.textContent = "No charts yet.";
      container.appendChild(empty);
      return;
    }

    for (const result of state.results) {
      const card = doc.createElement("article");
      card.className =
        result.rank === state.selectedRank
          ? "chart-card selected"
          : "chart-card";
      card.dataset.rank = String(result.rank);
      card.addEventListener("click", () => store.selectResult(result.rank));

      const header = doc.createElement("header");
      header.textContent = `#${result.rank} · score ${result.score.toFixed(2)}`;

      const note = doc.createElement("p");
      note.className = "caption";
      note.textContent = caption(result);

      const mount = doc.createElement("div");
      mount.className = "chart-mount";

      card.append(header, note, mount);
      container.appendChild(card);
      track(Promise.resolve(renderChart(mount, result.vegalite, runtime)));
    }
  }

  return { render };
}
