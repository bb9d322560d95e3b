export { ApiClient, ApiError, type FetchLike } from "./api.js";
export { createApp, type App } from "./app.js";
export { defaultRuntime, renderChart, type ChartRuntime } from "./render.js";
export { SessionStore, type EditMode, type UiState } from "./store.js";
export * from "./types.js";
