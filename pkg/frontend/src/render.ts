/** Chart rendering adapter.
 *
 * Documents are handed to a Vega-Lite runtime untouched. The runtime is
 * injectable so tests record what would render; in a browser the host page
 * provides vega-embed as window.vegaEmbed. Without one, charts fall back
 * to the raw JSON so the workflow stays usable.
 */

import type { VegaLiteDoc } from "./types.js";

export type ChartRuntime = (
  element: HTMLElement,
  spec: VegaLiteDoc,
) => Promise<unknown> | unknown;

declare global {
  interface Window {
    vegaEmbed?: ChartRuntime;
  }
}

export function defaultRuntime(): ChartRuntime | null {
  if (typeof window !== "undefined" && typeof window.vegaEmbed === "function") {
    return window.vegaEmbed;
  }
  return null;
}

export async function renderChart(
  element: HTMLElement,
  spec: VegaLiteDoc,
  runtime: ChartRuntime | null = defaultRuntime(),
): Promise<void> {
  element.replaceChildren();
  if (runtime) {
    await runtime(element, spec);
    return;
  }
  const pre = element.ownerDocument.createElement("pre");
  pre.className = "chart-fallback";
  pre.textContent = JSON.stringify(spec, null, 2);
  element.appendChild(pre);
}
