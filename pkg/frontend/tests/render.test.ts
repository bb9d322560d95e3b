import { afterEach, describe, expect, it } from "vitest";

import { defaultRuntime, renderChart, type ChartRuntime } from "../src/render.js";

function mount(): HTMLElement {
  const el = document.createElement("div");
  document.body.appendChild(el);
  return el;
}

afterEach(() => {
  document.body.innerHTML = "";
  delete window.vegaEmbed;
});

describe("renderChart", () => {
  it("hands the element and the untouched document to the runtime", async () => {
    const seen: { element: HTMLElement; spec: unknown }[] = [];
    const runtime: ChartRuntime = (element, spec) => {
      seen.push({ element, spec });
    };
    const el = mount();
    const doc = { mark: "bar", encoding: { x: { field: "a" } } };
    await renderChart(el, doc, runtime);
    expect(seen).toHaveLength(1);
    expect(seen[0]!.element).toBe(el);
    expect(seen[0]!.spec).toBe(doc);
  });

  it("clears previous content before rendering", async () => {
    const el = mount();
    el.innerHTML = "<span>stale</span>";
    await renderChart(el, { mark: "bar" }, (element) => {
      element.appendChild(document.createElement("canvas"));
    });
    expect(el.querySelector("span")).toBeNull();
    expect(el.querySelector("canvas")).not.toBeNull();
  });

  it("falls back to pretty-printed JSON without a runtime", async () => {
    const el = mount();
    const doc = { mark: "arc", encoding: { theta: { field: "n" } } };
    await renderChart(el, doc, null);
    const pre = el.querySelector("pre.chart-fallback");
    expect(pre).not.toBeNull();
    expect(JSON.parse(pre!.textContent ?? "")).toEqual(doc);
  });

  it("waits for an async runtime", async () => {
    let done = false;
    await renderChart(mount(), { mark: "line" }, async () => {
      await Promise.resolve();
      done = true;
    });
    expect(done).toBe(true);
  });
});

describe("defaultRuntime", () => {
  it("uses window.vegaEmbed when the host page provides one", () => {
    const embed: ChartRuntime = () => undefined;
    window.vegaEmbed = embed;
    expect(defaultRuntime()).toBe(embed);
  });

  it("returns null when no runtime is installed", () => {
    expect(defaultRuntime()).toBeNull();
  });
});
