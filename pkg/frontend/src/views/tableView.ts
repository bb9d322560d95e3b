/** Upload control plus a preview of the active table's typed columns. */

import type { SessionStore, UiState } from "../store.js";

export interface View {
  render(state: UiState): void;
}

export function createTableView(
  container: HTMLElement,
  store: SessionStore,
  track: (work: Promise<unknown>) => void,
): View {
  const doc = container.ownerDocument;

  function render(state: UiState): void {
    container.replaceChildren();

    const heading = doc.createElement("h2");
    heading.textContent = "Table";
    container.appendChild(heading);

    const nameInput = doc.createElement("input");
    nameInput.type = "text";
    nameInput.id = "table-name";
    nameInput.value = state.table?.name ? `${state.table.name}.csv` : "table.csv";

    const csvInput = doc.createElement("textarea");
    csvInput.id = "csv-input";
    csvInput.placeholder = "Paste CSV content";

    const fileInput = doc.createElement("input");
    fileInput.type = "file";
    fileInput.id = "csv-file";
    fileInput.accept = ".csv,text/csv";
    fileInput.addEventListener("change", () => {
      const file = fileInput.files?.[0];
      if (file) track(store.loadTable(file, file.name));
    });

    const loadButton = doc.createElement("button");
    loadButton.id = "load-table";
    loadButton.textContent = "Load table";
    loadButton.disabled = state.pending;
    loadButton.addEventListener("click", () => {
      if (!csvInput.value.trim()) return;
      track(
        store.loadTable(
          new Blob([csvInput.value], { type: "text/csv" }),
          nameInput.value || "table.csv",
        ),
      );
    });

    container.append(nameInput, csvInput, fileInput, loadButton);

    if (!state.table) return;

    const summary = doc.createElement("p");
    summary.id = "table-summary";
    summary.textContent = `${state.table.name}: ${state.table.n_rows} rows`;
    container.appendChild(summary);

    const table = doc.createElement("table");
    table.id = "column-table";
    for (const column of state.table.columns) {
      const row = doc.createElement("tr");
      const name = doc.createElement("td");
      name.textContent = column.name;
      const type = doc.createElement("td");
      type.textContent = column.type;
      type.className = `type-${column.type}`;
      row.append(name, type);
      table.appendChild(row);
    }
    container.appendChild(table);
  }

  return { render };
}
