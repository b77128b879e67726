/**
 * Session store: one plain-object view of the explorer, mutated only by
 * the action methods, each of which notifies subscribers exactly once per
 * settled change.
 *
 * Staleness rule: every completion/retrieval chain captures a sequence
 * number when it starts; after each await the chain re-checks that it is
 * still the newest and otherwise abandons its response without touching
 * the view.  The results panel therefore always corresponds to the
 * currently selected candidate and condition.
 */

import { ApiClient } from "./api.js";
import type { Candidate, GridCell, Hit, Pin } from "./types.js";

export interface SessionView {
  schemeRel: string[] | null;
  schemeAes: string[] | null;
  schemeError: string | null;
  prefix: string;
  rel: string | null;
  aes: string | null;
  loading: boolean;
  candidates: Candidate[];
  selected: number | null;
  hits: Hit[];
  usedFallback: boolean;
  pins: Pin[];
  sweep: GridCell[] | null;
  sweepLoading: boolean;
  error: string | null;
}

export type Listener = (view: SessionView) => void;

const ETA = 5;
const CANDIDATES = 5;

export class SessionStore {
  readonly view: SessionView = {
    schemeRel: null,
    schemeAes: null,
    schemeError: null,
    prefix: "",
    rel: null,
    aes: null,
    loading: false,
    candidates: [],
    selected: null,
    hits: [],
    usedFallback: false,
    pins: [],
    sweep: null,
    sweepLoading: false,
    error: null,
  };

  private listeners: Listener[] = [];
  private seq = 0;
  private sweepSeq = 0;

  constructor(
    private readonly api: ApiClient,
    readonly method: string = "corpus",
  ) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener(this.view);
    }
  }

  /** Fetch the level schemes; a failure leaves the pickers disabled with a retry banner. */
  async loadScheme(): Promise<void> {
    this.view.schemeError = null;
    this.notify();
    try {
      const scheme = await this.api.scheme();
      this.view.schemeRel = scheme.rel?.names ?? null;
      this.view.schemeAes = scheme.aes?.names ?? null;
      if (!this.view.schemeRel || !this.view.schemeAes) {
        this.view.schemeError = "no level schemes loaded on the server";
      } else {
        this.view.rel = this.view.rel ?? this.view.schemeRel[0] ?? null;
        this.view.aes = this.view.aes ?? this.view.schemeAes[0] ?? null;
      }
    } catch (err) {
      this.view.schemeError = String(err);
    }
    this.notify();
  }

  setPrefix(prefix: string): Promise<void> {
    this.view.prefix = prefix;
    return this.refresh();
  }

  setCondition(axis: "rel" | "aes", level: string): Promise<void> {
    this.view[axis] = level;
    return this.refresh();
  }

  /** Re-run completion for the current prefix+condition, then retrieval. */
  async refresh(): Promise<void> {
    const { prefix, rel, aes } = this.view;
    if (!prefix.trim() || rel === null || aes === null) {
      this.view.candidates = [];
      this.view.selected = null;
      this.view.hits = [];
      this.view.usedFallback = false;
      this.notify();
      return;
    }
    const mine = ++this.seq;
    this.view.loading = true;
    this.view.error = null;
    this.notify();
    let candidates: Candidate[];
    try {
      const resp = await this.api.complete({
        prefix, rel, aes, method: this.method, k: CANDIDATES,
      });
      candidates = resp.candidates;
    } catch (err) {
      if (mine !== this.seq) return; // superseded; drop silently
      this.view.loading = false;
      this.view.error = String(err);
      this.view.candidates = [];
      this.view.selected = null;
      this.view.hits = [];
      this.notify();
      return;
    }
    if (mine !== this.seq) return; // stale response: never render
    this.view.candidates = candidates;
    this.view.usedFallback = candidates.length === 0;
    this.view.selected = candidates.length > 0 ? 0 : null;
    this.notify();
    await this.retrieveFor(mine);
  }

  /** Select a candidate by index and retrieve for its text. */
  async select(index: number): Promise<void> {
    if (index < 0 || index >= this.view.candidates.length) {
      return;
    }
    const mine = ++this.seq;
    this.view.selected = index;
    this.view.loading = true;
    this.notify();
    await this.retrieveFor(mine);
  }

  private queryText(): string {
    const { candidates, selected, prefix } = this.view;
    if (selected !== null && candidates[selected]) {
      return candidates[selected].text;
    }
    return prefix; // prefix-only fallback when there are no candidates
  }

  private async retrieveFor(mine: number): Promise<void> {
    let hits: Hit[];
    try {
      const resp = await this.api.retrieve({ query_text: this.queryText(), eta: ETA });
      hits = resp.hits;
    } catch (err) {
      if (mine !== this.seq) return;
      this.view.loading = false;
      this.view.error = String(err);
      this.view.hits = [];
      this.notify();
      return;
    }
    if (mine !== this.seq) return; // stale response: never render
    this.view.hits = hits;
    this.view.loading = false;
    this.notify();
  }

  /** Pin the current condition + results; pinning a condition twice replaces it. */
  pin(): void {
    const { rel, aes, hits } = this.view;
    if (rel === null || aes === null || this.view.loading) {
      return;
    }
    const entry: Pin = { rel, aes, candidateText: this.queryText(), hits: [...hits] };
    const existing = this.view.pins.findIndex((p) => p.rel === rel && p.aes === aes);
    if (existing >= 0) {
      this.view.pins[existing] = entry;
    } else {
      this.view.pins.push(entry);
    }
    this.notify();
  }

  unpin(index: number): void {
    this.view.pins.splice(index, 1);
    this.notify();
  }

  /** Fill a mini ave-score table over the full grid for the current prefix alone. */
  async sweep(): Promise<void> {
    const { prefix } = this.view;
    if (!prefix.trim()) {
      return;
    }
    const mine = ++this.sweepSeq;
    this.view.sweepLoading = true;
    this.notify();
    try {
      const resp = await this.api.evalGrid({
        prefixes: [prefix], method: this.method, eta: 1,
      });
      if (mine !== this.sweepSeq) return;
      this.view.sweep = resp.cells;
    } catch (err) {
      if (mine !== this.sweepSeq) return;
      this.view.error = String(err);
      this.view.sweep = null;
    }
    this.view.sweepLoading = false;
    this.notify();
  }
}
