// Tick-by-tick playback over an already-fetched stream page. Pure
// state machine: advancing, pausing and resuming never touch the
// network — the page is fetched once by an explicit user gesture.

import type { StreamPage, StreamRecord } from "./types.js";

export class Playback {
  readonly start: number;
  readonly end: number;
  private byTick = new Map<number, StreamRecord[]>();
  private _cursor: number;
  private _playing = false;

  constructor(page: StreamPage) {
    this.start = page.start;
    this.end = page.end;
    this._cursor = page.start;
    for (const rec of page.records) {
      const bucket = this.byTick.get(rec.tick);
      if (bucket) bucket.push(rec);
      else this.byTick.set(rec.tick, [rec]);
    }
  }

  get cursor(): number {
    return this._cursor;
  }

  get playing(): boolean {
    return this._playing;
  }

  get ticks(): number {
    return this.end - this.start + 1;
  }

  current(): StreamRecord[] {
    return this.byTick.get(this._cursor) ?? [];
  }

  /** Move one tick forward; returns false (and pauses) at the end. */
  advance(): boolean {
    if (this._cursor >= this.end) {
      this._playing = false;
      return false;
    }
    this._cursor += 1;
    return true;
  }

  seek(tick: number): void {
    this._cursor = Math.min(this.end, Math.max(this.start, tick));
  }

  play(): void {
    this._playing = true;
  }

  pause(): void {
    this._playing = false;
  }

  rewind(): void {
    this._cursor = this.start;
    this._playing = false;
  }
}

// ── Rendering ────────────────────────────────────────────────────────

import type { CellGeometry } from "./editor.js";

export interface PlaybackHighlights {
  infectedCells: ReadonlySet<number>;
  contacts: ReadonlySet<number>;
  patient: number | null;
}

export const NO_HIGHLIGHTS: PlaybackHighlights = {
  infectedCells: new Set(),
  contacts: new Set(),
  patient: null,
};

export function drawPlayback(
  ctx: CanvasRenderingContext2D,
  width: number,
  height: number,
  geom: CellGeometry,
  records: StreamRecord[],
  highlights: PlaybackHighlights = NO_HIGHLIGHTS,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (let cell = 0; cell < width * height; cell++) {
    const [cx, cy] = geom.center(cell);
    const half = geom.size / 2 - 1;
    ctx.fillStyle = highlights.infectedCells.has(cell) ? "#5c2830" : "#16202c";
    ctx.fillRect(cx - half, cy - half, 2 * half, 2 * half);
    ctx.strokeStyle = "#2c3e50";
    ctx.strokeRect(cx - half, cy - half, 2 * half, 2 * half);
  }
  ctx.font = `${Math.max(9, geom.size / 3)}px system-ui, sans-serif`;
  for (const rec of records) {
    const isPatient = rec.user === highlights.patient;
    const isContact = highlights.contacts.has(rec.user);
    // released position: hollow ring
    if (rec.released_cell !== null) {
      const [rx, ry] = geom.center(rec.released_cell);
      ctx.strokeStyle = isPatient ? "#ef5350" : isContact ? "#e0a030" : "#4db6ac";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(rx, ry, geom.size / 4, 0, 2 * Math.PI);
      ctx.stroke();
    }
    // true position: solid dot + user id
    if (rec.true_cell !== null) {
      const [tx, ty] = geom.center(rec.true_cell);
      ctx.fillStyle = isPatient ? "#ef5350" : isContact ? "#e0a030" : "#90a4ae";
      ctx.beginPath();
      ctx.arc(tx, ty, geom.size / 6, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillText(String(rec.user), tx + geom.size / 5, ty - geom.size / 5);
    }
  }
}
