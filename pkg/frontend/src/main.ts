// Page wiring: connects the pure models (editor, playback, sweeps) to
// the DOM and the service client. All privacy numbers shown on screen
// come from API responses; every mutating call sits behind a button or
// canvas gesture.

import { ApiClient, ServiceError } from "./api.js";
import {
  DEFAULT_PALETTE,
  EditorState,
  drawEditor,
  gridGeometry,
  type CellGeometry,
} from "./editor.js";
import { SERIES_COLORS, drawLineChart, type Series } from "./charts.js";
import { Playback, drawPlayback, NO_HIGHLIGHTS, type PlaybackHighlights } from "./playback.js";
import { DEFAULT_SWEEP, SweepCollection, runSweep, type SweepSpec } from "./tradeoff.js";
import type { GridSpec, PolicyKind, TraceResult } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const status = (text: string, isError = false): void => {
  const bar = $("status");
  bar.textContent = text;
  bar.className = isError ? "status error" : "status";
};

// ── Session state ────────────────────────────────────────────────────

let api = new ApiClient("http://127.0.0.1:8000");
let sessionId: string | null = null;
let grid: GridSpec = { width: 8, height: 8, cell_size: 100 };
let seed = 0;
let editor = new EditorState(grid.width, grid.height);
let playback: Playback | null = null;
let highlights: PlaybackHighlights = NO_HIGHLIGHTS;
let lastTrace: TraceResult | null = null;
const sweeps = new SweepCollection();

function requireSession(): string {
  if (!sessionId) throw new Error("connect first");
  return sessionId;
}

async function withStatus<T>(label: string, work: () => Promise<T>): Promise<T | null> {
  try {
    status(label + "…");
    const result = await work();
    status(label + " ✓");
    return result;
  } catch (err) {
    if (err instanceof ServiceError) {
      status(`${label} failed: ${err.code} — ${err.message}`, true);
    } else {
      status(`${label} failed: ${String(err)}`, true);
    }
    return null;
  }
}

// ── Editor view ──────────────────────────────────────────────────────

let geom: CellGeometry;
let dragFrom: number | null = null;
let dragXY: [number, number] | null = null;

function editorCanvas(): HTMLCanvasElement {
  return $("editor-canvas");
}

function redrawEditor(): void {
  const canvas = editorCanvas();
  const ctx = canvas.getContext("2d")!;
  const drag = dragFrom !== null && dragXY ? { from: dragFrom, toXY: dragXY } : null;
  drawEditor(ctx, editor, geom, drag, DEFAULT_PALETTE);
  $("edge-count").textContent = `${editor.edgeCount()} edges, ${editor.infected.size} cells marked infected`;
}

function canvasPoint(canvas: HTMLCanvasElement, ev: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    ((ev.clientX - rect.left) / rect.width) * canvas.width,
    ((ev.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

function bindEditorCanvas(): void {
  const canvas = editorCanvas();
  canvas.addEventListener("mousedown", (ev) => {
    const [x, y] = canvasPoint(canvas, ev);
    dragFrom = geom.cellAt(x, y);
    dragXY = [x, y];
  });
  canvas.addEventListener("mousemove", (ev) => {
    if (dragFrom === null) return;
    dragXY = canvasPoint(canvas, ev);
    redrawEditor();
  });
  canvas.addEventListener("mouseup", (ev) => {
    const [x, y] = canvasPoint(canvas, ev);
    const target = geom.cellAt(x, y);
    const mode = ($("edit-mode") as unknown as HTMLSelectElement).value;
    if (dragFrom !== null && target !== null) {
      if (dragFrom === target && mode === "infect") {
        editor.toggleInfected(target);
      } else if (dragFrom !== target && mode === "edges") {
        editor.toggleEdge(dragFrom, target);
      }
    }
    dragFrom = null;
    dragXY = null;
    redrawEditor();
  });
}

async function applyPolicy(kind: PolicyKind, params: object = {}): Promise<void> {
  await withStatus(`apply ${kind} policy`, async () => {
    const doc = await api.putPolicy(requireSession(), kind, params);
    editor.setFromDoc(doc);
    $("policy-epoch").textContent = `epoch ${doc.epoch} (${doc.reason})`;
    redrawEditor();
  });
}

function bindEditorControls(): void {
  $("preset-grid").onclick = () => void applyPolicy("grid");
  $("preset-complete").onclick = () => void applyPolicy("complete");
  $("preset-coarse").onclick = () =>
    void applyPolicy("partition", { block: Math.max(2, Math.floor(grid.width / 2)) });
  $("preset-fine").onclick = () => void applyPolicy("partition", { block: 2 });
  $("preset-contact").onclick = () =>
    void applyPolicy("contact", { infected: [...editor.infected].sort((a, b) => a - b) });
  $("preset-isolated").onclick = () => void applyPolicy("isolated");
  $("preset-random").onclick = () => {
    const prob = Number(($("random-prob") as unknown as HTMLInputElement).value);
    void applyPolicy("random", { edge_prob: prob });
  };
  $("apply-drawn").onclick = () => void applyPolicy("custom", editor.toCustomParams());
  $("clear-drawn").onclick = () => {
    editor.clear();
    redrawEditor();
  };
  $("reject-policy").onclick = () =>
    void withStatus("reject policy", async () => {
      await api.rejectPolicy(requireSession());
      editor.clear();
      redrawEditor();
    });
  $("run-audit").onclick = () =>
    void withStatus("audit", async () => {
      const epsilon = Number(($("audit-eps") as unknown as HTMLInputElement).value);
      const check = ($("audit-check") as unknown as HTMLSelectElement).value as
        | "policy"
        | "infinity"
        | "geo";
      const report = await api.audit(requireSession(), epsilon, check);
      $("audit-result").textContent =
        `${report.pass ? "PASS" : "FAIL"} — worst ratio ${report.worst_ratio} ` +
        `vs bound ${report.bound.toPrecision(6)}` +
        (report.worst_pair ? ` at (${report.worst_pair.join(", ")})` : "");
      $("audit-result").className = report.pass ? "audit pass" : "audit fail";
    });
  $("run-perturb").onclick = () =>
    void withStatus("perturb", async () => {
      const cell = Number(($("perturb-cell") as unknown as HTMLInputElement).value);
      const epsilon = Number(($("audit-eps") as unknown as HTMLInputElement).value);
      const out = await api.perturb(requireSession(), cell, epsilon);
      $("perturb-result").textContent = `cell ${cell} → released ${out.released_cell}`;
    });
}

// ── Trade-off view ───────────────────────────────────────────────────

function redrawTradeoff(): void {
  const utility: Series[] = [];
  const adversary: Series[] = [];
  sweeps.saved.forEach((entry, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    utility.push({
      label: entry.spec.label,
      color,
      points: entry.points
        .filter((p) => p.utility !== null)
        .map((p) => ({ x: p.epsilon, y: p.utility as number })),
    });
    adversary.push({
      label: entry.spec.label,
      color,
      points: entry.points
        .filter((p) => p.adversary !== null)
        .map((p) => ({ x: p.epsilon, y: p.adversary as number })),
    });
  });
  drawLineChart(($("utility-chart") as unknown as HTMLCanvasElement).getContext("2d")!, utility, {
    xLabel: "epsilon",
    yLabel: "m",
  });
  drawLineChart(
    ($("adversary-chart") as unknown as HTMLCanvasElement).getContext("2d")!,
    adversary,
    { xLabel: "epsilon", yLabel: "m" },
  );
  $("sweep-list").textContent = sweeps.labels().join(" · ") || "nothing saved yet";
}

function currentSweepSpec(): SweepSpec {
  const kind = ($("sweep-kind") as unknown as HTMLSelectElement).value as PolicyKind;
  const label = (($("sweep-label") as unknown as HTMLInputElement).value || kind).trim();
  if (kind === "custom") return { kind, params: editor.toCustomParams(), label };
  if (kind === "partition") return { kind, params: { block: 2 }, label };
  if (kind === "random") return { kind, params: { edge_prob: 0.3 }, label };
  return { kind, label };
}

function bindTradeoffControls(): void {
  $("run-sweep").onclick = () =>
    void withStatus("epsilon sweep", async () => {
      const spec = currentSweepSpec();
      const ticks = Number(($("sweep-ticks") as unknown as HTMLInputElement).value) || 60;
      const points = await runSweep(api, grid, seed, spec, { ...DEFAULT_SWEEP, ticks });
      sweeps.add(spec, points);
      redrawTradeoff();
    });
  $("clear-sweeps").onclick = () => {
    sweeps.clear();
    redrawTradeoff();
  };
}

// ── Playback view ────────────────────────────────────────────────────

let playTimer: number | null = null;

function redrawPlayback(): void {
  const canvas = $("playback-canvas") as unknown as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const pgeom = gridGeometry(grid.width, grid.height, canvas.width, canvas.height);
  drawPlayback(ctx, grid.width, grid.height, pgeom, playback ? playback.current() : [], highlights);
  $("playback-tick").textContent = playback
    ? `tick ${playback.cursor} / ${playback.end}`
    : "no stream loaded";
  const contactList = lastTrace
    ? `contacts of ${lastTrace.patient}: [${lastTrace.contacts.join(", ")}] — ` +
      `${lastTrace.at_risk.length} at risk, ${lastTrace.infected_cells.length} infected cells`
    : "";
  $("contact-list").textContent = contactList;
}

function playbackLoop(): void {
  if (!playback || !playback.playing) return;
  playback.advance();
  redrawPlayback();
  playTimer = window.setTimeout(playbackLoop, 250);
}

function bindPlaybackControls(): void {
  $("run-sim").onclick = () =>
    void withStatus("simulate", async () => {
      const sid = requireSession();
      const ticks = Number(($("sim-ticks") as unknown as HTMLInputElement).value) || 40;
      const users = Number(($("sim-users") as unknown as HTMLInputElement).value) || 8;
      await api.simulate(sid, ticks, { users });
      const page = await api.stream(sid);
      playback = new Playback(page);
      highlights = NO_HIGHLIGHTS;
      lastTrace = null;
      redrawPlayback();
    });
  $("play").onclick = () => {
    if (!playback) return;
    playback.play();
    playbackLoop();
  };
  $("pause").onclick = () => {
    playback?.pause();
    if (playTimer !== null) window.clearTimeout(playTimer);
  };
  $("step").onclick = () => {
    playback?.advance();
    redrawPlayback();
  };
  $("rewind").onclick = () => {
    playback?.rewind();
    redrawPlayback();
  };
  $("diagnose").onclick = () =>
    void withStatus("trace", async () => {
      const sid = requireSession();
      const patient = Number(($("patient-id") as unknown as HTMLInputElement).value) || 0;
      const result = await api.trace(sid, patient);
      lastTrace = result;
      highlights = {
        infectedCells: new Set(result.infected_cells),
        contacts: new Set(result.contacts),
        patient: result.patient,
      };
      $("trace-log").textContent = result.log.join("\n");
      redrawPlayback();
    });
}

// ── Connection ───────────────────────────────────────────────────────

function bindConnection(): void {
  $("connect").onclick = () =>
    void withStatus("connect", async () => {
      api = new ApiClient(($("base-url") as unknown as HTMLInputElement).value);
      grid = {
        width: Number(($("grid-width") as unknown as HTMLInputElement).value) || 8,
        height: Number(($("grid-height") as unknown as HTMLInputElement).value) || 8,
        cell_size: 100,
      };
      seed = Number(($("seed") as unknown as HTMLInputElement).value) || 0;
      const created = await api.createSession(grid, seed);
      sessionId = created.session_id;
      editor = new EditorState(grid.width, grid.height);
      const canvas = editorCanvas();
      geom = gridGeometry(grid.width, grid.height, canvas.width, canvas.height);
      playback = null;
      lastTrace = null;
      highlights = NO_HIGHLIGHTS;
      $("session-label").textContent = `session ${sessionId.slice(0, 8)}`;
      redrawEditor();
      redrawPlayback();
    });
}

function bindTabs(): void {
  for (const name of ["editor", "tradeoff", "playback"]) {
    $(`tab-${name}`).onclick = () => {
      for (const other of ["editor", "tradeoff", "playback"]) {
        $(`view-${other}`).style.display = other === name ? "block" : "none";
        $(`tab-${other}`).classList.toggle("active", other === name);
      }
    };
  }
}

function init(): void {
  bindConnection();
  bindTabs();
  bindEditorCanvas();
  bindEditorControls();
  bindTradeoffControls();
  bindPlaybackControls();
  const canvas = editorCanvas();
  geom = gridGeometry(grid.width, grid.height, canvas.width, canvas.height);
  redrawEditor();
  redrawTradeoff();
  status("not connected — set the service address and press connect");
}

document.addEventListener("DOMContentLoaded", init);
