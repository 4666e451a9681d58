import { beforeEach, describe, expect, it, vi } from "vitest";

import type { MapPayload } from "../src/api";
import { renderComposer } from "../src/opinion";

const EMPTY_MAP: MapPayload = { topic: "minimum-wage", points: [] };

describe("renderComposer", () => {
  let container: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "";
    container = document.createElement("div");
    document.body.append(container);
  });

  it("blocks empty submissions client-side", () => {
    const submit = vi.fn(async () => EMPTY_MAP);
    renderComposer(container, [], { submit, onMap: () => {} });
    const form = container.querySelector("form")!;
    const button = form.querySelector(".opinion-submit") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    expect(submit).not.toHaveBeenCalled();
  });

  it("free text is sent as a text payload", async () => {
    const submit = vi.fn(async () => EMPTY_MAP);
    renderComposer(container, [], { submit, onMap: () => {} });
    const form = container.querySelector("form")!;
    const textarea = form.querySelector("textarea")!;
    textarea.value = "hello";
    textarea.dispatchEvent(new Event("input", { bubbles: true }));
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => expect(submit).toHaveBeenCalledOnce());
    expect(submit.mock.calls[0][0]).toEqual({ text: "hello" });
  });

  it("picking example #3 sends its id", async () => {
    const examples = Array.from({ length: 20 }, (_, i) => ({
      id: `ex-${i}`,
      text: `example ${i}`,
    }));
    const submit = vi.fn(async () => EMPTY_MAP);
    renderComposer(container, examples, { submit, onMap: () => {} });
    const form = container.querySelector("form")!;
    const select = form.querySelector("select")!;
    select.value = "ex-3";
    select.dispatchEvent(new Event("change", { bubbles: true }));
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => expect(submit).toHaveBeenCalledOnce());
    expect(submit.mock.calls[0][0]).toEqual({ exampleId: "ex-3" });
  });

  it("renders the refreshed map returned by the server", async () => {
    const refreshed: MapPayload = {
      topic: "minimum-wage",
      points: [{ id: "u1", x: 0, y: 0, color: "yellow", text: "mine" }],
    };
    const onMap = vi.fn();
    renderComposer(container, [], { submit: async () => refreshed, onMap });
    const form = container.querySelector("form")!;
    const textarea = form.querySelector("textarea")!;
    textarea.value = "mine";
    textarea.dispatchEvent(new Event("input", { bubbles: true }));
    form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
    await vi.waitFor(() => expect(onMap).toHaveBeenCalledWith(refreshed));
  });
});
