/** Wires the store and the three views into a root element. */

import { ApiClient } from "./api.js";
import { defaultRuntime, type ChartRuntime } from "./render.js";
import { SessionStore } from "./store.js";
import { createChartView } from "./views/chartView.js";
import { createDetailView } from "./views/detailView.js";
import { createTableView } from "./views/tableView.js";

export interface App {
  store: SessionStore;
  /** Resolves when every tracked action and render has settled. */
  idle(): Promise<void>;
}

export function createApp(
  root: HTMLElement,
  client: ApiClient,
  runtime: ChartRuntime | null = defaultRuntime(),
): App {
  const doc = root.ownerDocument;
  const store = new SessionStore(client);

  let lastWork: Promise<unknown> = Promise.resolve();
  const track = (work: Promise<unknown>) => {
    lastWork = lastWork.then(
      () => work.catch(() => undefined),
      () => work.catch(() => undefined),
    );
  };

  root.replaceChildren();
  const title = doc.createElement("h1");
  title.textContent = "chartpipe";

  const banner = doc.createElement("div");
  banner.id = "banner";
  banner.hidden = true;

  const utteranceBar = doc.createElement("div");
  utteranceBar.id = "utterance-bar";
  const utteranceInput = doc.createElement("input");
  utteranceInput.type = "text";
  utteranceInput.id = "utterance";
  utteranceInput.placeholder = "Ask a question about the table";
  const generateButton = doc.createElement("button");
  generateButton.id = "generate";
  generateButton.textContent = "Generate";
  generateButton.addEventListener("click", () => {
    track(store.submitUtterance(utteranceInput.value));
  });
  utteranceBar.append(utteranceInput, generateButton);

  const tableSection = doc.createElement("section");
  tableSection.id = "table-view";
  const chartSection = doc.createElement("section");
  chartSection.id = "chart-view";
  const detailSection = doc.createElement("section");
  detailSection.id = "detail-view";

  root.append(title, banner, tableSection, utteranceBar, chartSection, detailSection);

  const views = [
    createTableView(tableSection, store, track),
    createChartView(chartSection, store, runtime, track),
    createDetailView(detailSection, store, track),
  ];

  store.subscribe((state) => {
    banner.hidden = state.banner === null;
    banner.textContent = state.banner ?? "";
    // Keep the typed question across re-renders and failures.
    if (state.utterance && utteranceInput.value !== state.utterance) {
      utteranceInput.value = state.utterance;
    }
    generateButton.disabled = state.pending || state.sessionId === null;
    for (const view of views) view.render(state);
  });
  for (const view of views) view.render(store.getState());
  generateButton.disabled = true;

  return {
    store,
    async idle() {
      // Actions queue renders which may queue chart mounts; settle twice.
      await lastWork;
      await lastWork;
      await new Promise((resolve) => setTimeout(resolve, 0));
    },
  };
}
