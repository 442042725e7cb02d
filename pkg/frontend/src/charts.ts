// Small canvas line charts; no dependencies. The scale math is exported
// separately so it can be unit-tested without a canvas.

export interface Point {
  x: number;
  y: number;
}

export interface Series {
  label: string;
  color: string;
  points: Point[];
}

export function scaleLinear(
  d0: number,
  d1: number,
  r0: number,
  r1: number,
): (v: number) => number {
  const span = d1 - d0;
  if (span === 0) return () => (r0 + r1) / 2;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

export function bounds(series: Series[]): { x: [number, number]; y: [number, number] } | null {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const s of series) {
    for (const p of s.points) {
      xMin = Math.min(xMin, p.x);
      xMax = Math.max(xMax, p.x);
      yMin = Math.min(yMin, p.y);
      yMax = Math.max(yMax, p.y);
    }
  }
  if (!Number.isFinite(xMin) || !Number.isFinite(yMin)) return null;
  if (yMin === yMax) {
    yMin -= 1;
    yMax += 1;
  }
  return { x: [xMin, xMax], y: [yMin, yMax] };
}

export function tickValues(min: number, max: number, count = 5): number[] {
  const values: number[] = [];
  for (let i = 0; i < count; i++) values.push(min + ((max - min) * i) / (count - 1));
  return values;
}

const MARGIN = { left: 56, right: 12, top: 12, bottom: 30 };

export function drawLineChart(
  ctx: CanvasRenderingContext2D,
  series: Series[],
  opts: { xLabel: string; yLabel: string },
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  ctx.font = "11px system-ui, sans-serif";
  const box = bounds(series);
  if (!box) {
    ctx.fillStyle = "#8a98a8";
    ctx.fillText("no data yet", width / 2 - 30, height / 2);
    return;
  }
  const sx = scaleLinear(box.x[0], box.x[1], MARGIN.left, width - MARGIN.right);
  const sy = scaleLinear(box.y[0], box.y[1], height - MARGIN.bottom, MARGIN.top);

  ctx.strokeStyle = "#33414f";
  ctx.fillStyle = "#8a98a8";
  ctx.lineWidth = 1;
  for (const v of tickValues(box.y[0], box.y[1])) {
    const y = sy(v);
    ctx.beginPath();
    ctx.moveTo(MARGIN.left, y);
    ctx.lineTo(width - MARGIN.right, y);
    ctx.stroke();
    ctx.fillText(v.toPrecision(3), 4, y + 3);
  }
  for (const v of tickValues(box.x[0], box.x[1])) {
    ctx.fillText(v.toPrecision(2), sx(v) - 8, height - 10);
  }
  ctx.fillText(opts.xLabel, width / 2 - 20, height - 2);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.lineWidth = 2;
    ctx.beginPath();
    const sorted = [...s.points].sort((a, b) => a.x - b.x);
    sorted.forEach((p, i) => {
      if (i === 0) ctx.moveTo(sx(p.x), sy(p.y));
      else ctx.lineTo(sx(p.x), sy(p.y));
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    for (const p of sorted) {
      ctx.beginPath();
      ctx.arc(sx(p.x), sy(p.y), 3, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  // legend
  let ly = MARGIN.top + 4;
  for (const s of series) {
    ctx.fillStyle = s.color;
    ctx.fillRect(MARGIN.left + 8, ly - 6, 10, 3);
    ctx.fillStyle = "#c5d0da";
    ctx.fillText(s.label, MARGIN.left + 24, ly);
    ly += 14;
  }
}

export const SERIES_COLORS = [
  "#4db6ac",
  "#e0a030",
  "#7986cb",
  "#ef9a9a",
  "#aed581",
  "#f06292",
  "#90caf9",
];
