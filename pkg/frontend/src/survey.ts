// Pre/post survey wizard. All five Likert answers (and, in the pre phase,
// the demographics) must be chosen before submit enables. Wording comes from
// the server so the forms always match the instrument.

import type { SurveyDemographics } from "./api.js";
import { ApiError } from "./api.js";

export interface SurveyHandlers {
  submit: (answers: number[], demographics?: SurveyDemographics) => Promise<unknown>;
  onDone: () => void;
}

const LIKERT_LABELS = ["1", "2", "3", "4", "5"];

const DEMOGRAPHIC_FIELDS: Array<{ key: keyof SurveyDemographics; label: string; options: string[] }> = [
  { key: "gender", label: "Gender", options: ["female", "male", "other"] },
  { key: "age_band", label: "Age", options: ["19-29", "30-39", "40-49"] },
  { key: "political_interest", label: "Political interest (1 not at all … 5 very interested)", options: LIKERT_LABELS },
  { key: "political_stance", label: "Political stance (1 very liberal … 5 very conservative)", options: LIKERT_LABELS },
  { key: "media_usage", label: "Media usage (1 never … 5 very often)", options: LIKERT_LABELS },
];

function likertRow(name: string, onChange: () => void): HTMLElement {
  const row = document.createElement("div");
  row.className = "likert-row";
  for (let v = 1; v <= 5; v++) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = name;
    input.value = String(v);
    input.addEventListener("change", onChange);
    label.append(input, document.createTextNode(String(v)));
    row.append(label);
  }
  return row;
}

export function renderSurvey(
  container: HTMLElement,
  phase: "pre" | "post",
  questions: string[],
  handlers: SurveyHandlers,
): void {
  container.replaceChildren();
  const form = document.createElement("form");
  form.className = `survey survey-${phase}`;

  const heading = document.createElement("h2");
  heading.textContent = phase === "pre" ? "Before you start" : "Before you go";
  form.append(heading);

  if (phase === "pre") {
    const demoBox = document.createElement("fieldset");
    demoBox.className = "survey-demographics";
    const legend = document.createElement("legend");
    legend.textContent = "About you";
    demoBox.append(legend);
    for (const field of DEMOGRAPHIC_FIELDS) {
      const label = document.createElement("label");
      label.className = "demo-field";
      label.append(document.createTextNode(field.label));
      const select = document.createElement("select");
      select.name = `demo-${field.key}`;
      const blank = document.createElement("option");
      blank.value = "";
      blank.textContent = "choose…";
      select.append(blank);
      for (const option of field.options) {
        const el = document.createElement("option");
        el.value = option;
        el.textContent = option;
        select.append(el);
      }
      select.addEventListener("change", () => refresh());
      label.append(select);
      demoBox.append(label);
    }
    form.append(demoBox);
  }

  questions.forEach((question, i) => {
    const block = document.createElement("div");
    block.className = "survey-question";
    const text = document.createElement("p");
    text.className = "question-text";
    text.textContent = question;
    block.append(text, likertRow(`q${i + 1}`, () => refresh()));
    form.append(block);
  });

  const submit = document.createElement("button");
  submit.type = "submit";
  submit.className = "survey-submit";
  submit.textContent = "Submit answers";
  submit.disabled = true;
  const status = document.createElement("p");
  status.className = "survey-status";
  form.append(submit, status);

  const answers = (): number[] =>
    questions.map((_, i) => {
      const checked = form.querySelector<HTMLInputElement>(`input[name="q${i + 1}"]:checked`);
      return checked ? Number(checked.value) : 0;
    });

  const demographics = (): SurveyDemographics | undefined => {
    if (phase !== "pre") return undefined;
    const values: Record<string, string> = {};
    for (const field of DEMOGRAPHIC_FIELDS) {
      const select = form.querySelector<HTMLSelectElement>(`select[name="demo-${field.key}"]`);
      values[field.key] = select?.value ?? "";
    }
    return {
      gender: values.gender,
      age_band: values.age_band,
      political_interest: Number(values.political_interest),
      political_stance: Number(values.political_stance),
      media_usage: Number(values.media_usage),
    };
  };

  const complete = (): boolean => {
    if (answers().some((a) => a === 0)) return false;
    if (phase === "pre") {
      const demo = demographics()!;
      if (!demo.gender || !demo.age_band) return false;
      if (!(demo.political_interest >= 1) || !(demo.political_stance >= 1) || !(demo.media_usage >= 1)) {
        return false;
      }
    }
    return true;
  };

  const refresh = () => {
    submit.disabled = !complete();
  };

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (!complete()) return;
    submit.disabled = true;
    handlers
      .submit(answers(), demographics())
      .then(() => {
        status.textContent = "Thank you, your answers are recorded.";
        form.classList.add("survey-done");
        handlers.onDone();
      })
      .catch((err) => {
        if (err instanceof ApiError && err.status === 409) {
          status.textContent = "Already submitted for this session.";
          form.classList.add("survey-done");
          handlers.onDone();
        } else {
          status.textContent = `Submission failed: ${err.message ?? err}`;
          refresh();
        }
      });
  });

  container.append(form);
}
