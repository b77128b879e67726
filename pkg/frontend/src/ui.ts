/**
 * DOM wiring: builds the explorer skeleton once, then re-renders the
 * dynamic sections from the session view on every store notification.
 * Scores shown anywhere are echoed verbatim from the API payloads.
 */

import { SessionStore, type SessionView } from "./state.js";
import type { Hit } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function fmt(value: number | null): string {
  return value === null ? "-" : value.toString();
}

function hitRow(hit: Hit): HTMLElement {
  const row = el("div", { class: "hit" });
  row.append(
    el("span", { class: "hit-caption" }, hit.caption),
    el("span", { class: "hit-score" }, `cos ${hit.score.toFixed(4)}`),
    el("span", { class: "hit-aes" }, `aes ${fmt(hit.aes)}`),
    el("span", { class: "hit-rel" }, `rel ${fmt(hit.rel)}`),
  );
  if (hit.aes_level !== null) {
    row.append(el("span", { class: "badge badge-aes" }, hit.aes_level));
  }
  if (hit.rel_level !== null) {
    row.append(el("span", { class: "badge badge-rel" }, hit.rel_level));
  }
  return row;
}

export function mount(root: HTMLElement, store: SessionStore): void {
  root.innerHTML = "";

  const banner = el("div", { id: "banner", class: "banner", hidden: "" });
  const bannerText = el("span", { id: "banner-text" });
  const retry = el("button", { id: "retry" }, "retry");
  retry.addEventListener("click", () => void store.loadScheme());
  banner.append(bannerText, retry);

  const prefixInput = el("input", {
    id: "prefix",
    type: "text",
    placeholder: "a dog",
    "aria-label": "query prefix",
  });
  prefixInput.addEventListener("input", () => {
    void store.setPrefix(prefixInput.value);
  });

  const relPicker = el("fieldset", { id: "rel-picker" });
  relPicker.append(el("legend", {}, "relevance"));
  const aesPicker = el("fieldset", { id: "aes-picker" });
  aesPicker.append(el("legend", {}, "aesthetic"));

  const pinButton = el("button", { id: "pin" }, "pin");
  pinButton.addEventListener("click", () => store.pin());
  const sweepButton = el("button", { id: "sweep" }, "sweep grid");
  sweepButton.addEventListener("click", () => void store.sweep());

  const controls = el("div", { class: "controls" });
  controls.append(prefixInput, relPicker, aesPicker, pinButton, sweepButton);

  const status = el("div", { id: "status" });
  const candidates = el("section", { id: "candidates" });
  const results = el("section", { id: "results" });
  const sweepTable = el("section", { id: "sweep-table" });
  const pins = el("aside", { id: "pins" });

  root.append(banner, controls, status, candidates, results, sweepTable, pins);

  const renderPicker = (
    picker: HTMLFieldSetElement,
    axis: "rel" | "aes",
    names: string[] | null,
    active: string | null,
  ): void => {
    for (const old of Array.from(picker.querySelectorAll("label"))) {
      old.remove();
    }
    picker.disabled = names === null;
    for (const name of names ?? []) {
      const label = el("label", { class: "level-option" });
      const radio = el("input", {
        type: "radio",
        name: `${axis}-level`,
        value: name,
      }) as HTMLInputElement;
      radio.checked = name === active;
      radio.addEventListener("change", () => {
        void store.setCondition(axis, name);
      });
      label.append(radio, el("span", {}, name));
      picker.append(label);
    }
  };

  const render = (view: SessionView): void => {
    banner.hidden = view.schemeError === null;
    bannerText.textContent = view.schemeError ?? "";

    renderPicker(relPicker, "rel", view.schemeRel, view.rel);
    renderPicker(aesPicker, "aes", view.schemeAes, view.aes);

    status.textContent = view.loading
      ? "loading..."
      : view.error ?? "";

    candidates.innerHTML = "";
    if (view.usedFallback && view.prefix.trim()) {
      candidates.append(
        el("div", { class: "fallback-note" },
           `no completions; showing results for "${view.prefix}"`),
      );
    }
    view.candidates.forEach((candidate, index) => {
      const button = el("button", {
        class: "candidate" + (index === view.selected ? " selected" : ""),
        "data-index": String(index),
      });
      button.append(el("span", { class: "candidate-text" }, candidate.text));
      button.append(el("span", { class: "candidate-source" }, candidate.source));
      if (!candidate.exact_condition_match) {
        button.append(el("span", { class: "badge badge-nearest" }, "nearest condition"));
      }
      button.addEventListener("click", () => void store.select(index));
      candidates.append(button);
    });

    results.innerHTML = "";
    for (const hit of view.hits) {
      results.append(hitRow(hit));
    }

    sweepTable.innerHTML = "";
    if (view.sweepLoading) {
      sweepTable.append(el("div", { class: "sweep-loading" }, "sweeping..."));
    } else if (view.sweep) {
      for (const cell of view.sweep) {
        if (!cell.condition) {
          continue;
        }
        const row = el("div", { class: "sweep-cell" });
        row.append(
          el("span", {}, `rel ${cell.condition.rel} / aes ${cell.condition.aes}`),
          el("span", {}, `ave aes ${cell.ave_aes.toFixed(3)}`),
          el("span", {}, `ave rel ${cell.ave_rel.toFixed(3)}`),
        );
        sweepTable.append(row);
      }
    }

    pins.innerHTML = "";
    view.pins.forEach((pin, index) => {
      const column = el("div", { class: "pin-column" });
      const unpin = el("button", { class: "unpin" }, "unpin");
      unpin.addEventListener("click", () => store.unpin(index));
      column.append(
        el("h3", {}, `rel ${pin.rel} / aes ${pin.aes}`),
        el("div", { class: "pin-query" }, pin.candidateText),
        unpin,
      );
      for (const hit of pin.hits) {
        column.append(hitRow(hit));
      }
      pins.append(column);
    });
  };

  store.subscribe(render);
  render(store.view);
}
