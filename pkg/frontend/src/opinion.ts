// Opinion composer: free text or one of the provided example comments.
// Empty submissions never reach the network; the refreshed map from the
// server response is rendered before the UI settles (no optimistic update).

import type { ExampleComment, MapPayload } from "./api.js";

export interface OpinionHandlers {
  submit: (opinion: { text?: string; exampleId?: string }) => Promise<MapPayload>;
  onMap: (map: MapPayload) => void;
}

export function renderComposer(
  container: HTMLElement,
  examples: ExampleComment[],
  handlers: OpinionHandlers,
): void {
  container.replaceChildren();
  const form = document.createElement("form");
  form.className = "opinion-composer";

  const textarea = document.createElement("textarea");
  textarea.className = "opinion-text";
  textarea.placeholder = "Write your own thought on this topic…";

  let select: HTMLSelectElement | null = null;
  if (examples.length > 0) {
    select = document.createElement("select");
    select.className = "opinion-examples";
    const none = document.createElement("option");
    none.value = "";
    none.textContent = "…or pick an example comment";
    select.append(none);
    for (const example of examples) {
      const option = document.createElement("option");
      option.value = example.id;
      option.textContent = example.text;
      select.append(option);
    }
  }

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.className = "opinion-submit";
  submit.textContent = "Share opinion";
  submit.disabled = true;

  const status = document.createElement("p");
  status.className = "opinion-status";

  const refresh = () => {
    const hasText = textarea.value.trim().length > 0;
    const hasExample = !!select && select.value !== "";
    submit.disabled = !(hasText || hasExample);
  };
  textarea.addEventListener("input", refresh);
  select?.addEventListener("change", refresh);

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const exampleId = select?.value || undefined;
    const text = textarea.value.trim();
    if (!exampleId && !text) return; // blocked client-side
    submit.disabled = true;
    status.textContent = "Placing your opinion on the map…";
    handlers
      .submit(exampleId ? { exampleId } : { text })
      .then((map) => {
        status.textContent = "Added to the map.";
        textarea.value = "";
        if (select) select.value = "";
        handlers.onMap(map);
      })
      .catch((err) => {
        status.textContent = `Could not submit: ${err.message ?? err}`;
      })
      .finally(refresh);
  });

  form.append(textarea);
  if (select) form.append(select);
  form.append(submit, status);
  container.append(form);
}
