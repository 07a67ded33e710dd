// SVG chart rendering from server view documents. Pure string output so
// the renderer can be exercised without a DOM: every mark carries data-
// attributes naming the tuple it encodes.

import { Cell, ModelDoc, ViewDoc } from './api.js';

const W = 340;
const H = 200;
const PAD = { top: 26, right: 10, bottom: 26, left: 44 };

const PALETTE = [
  '#4c78a8', '#f58518', '#54a24b', '#e45756',
  '#72b7b2', '#eeca3b', '#b279a2', '#9d755d',
];

export function escapeXml(s: string): string {
  return s.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case '&': return '&amp;';
      case '<': return '&lt;';
      case '>': return '&gt;';
      case '"': return '&quot;';
      default: return '&#39;';
    }
  });
}

interface Point {
  x: Cell;
  y: number | null;
}

interface Series {
  name: string;
  points: Point[];
}

interface ChartData {
  categories: Cell[];
  series: Series[];
}

function colIndex(doc: ViewDoc | ModelDoc, name: string | null): number {
  if (name === null) return -1;
  return (doc.columns ?? []).findIndex((c) => c.name === name);
}

function channelAttr(channels: Record<string, string>, wanted: string): string | null {
  for (const [attr, channel] of Object.entries(channels)) {
    if (channel === wanted) return attr;
  }
  return null;
}

function gather(doc: ViewDoc | ModelDoc, xAttr: string | null,
                seriesAttr: string | null, yName: string): ChartData {
  const xi = colIndex(doc, xAttr);
  const si = colIndex(doc, seriesAttr);
  const yi = colIndex(doc, yName);
  const categories: Cell[] = [];
  const byName = new Map<string, Series>();
  for (const row of doc.rows ?? []) {
    const x = xi >= 0 ? row[xi] ?? null : '';
    const name = si >= 0 ? String(row[si]) : '';
    if (!categories.some((c) => c === x)) categories.push(x);
    let series = byName.get(name);
    if (!series) {
      series = { name, points: [] };
      byName.set(name, series);
    }
    const raw = yi >= 0 ? row[yi] ?? null : null;
    series.points.push({ x, y: typeof raw === 'number' ? raw : null });
  }
  return { categories, series: [...byName.values()] };
}

function yDomain(data: ChartData): [number, number] {
  let lo = 0;
  let hi = 0;
  for (const s of data.series) {
    for (const p of s.points) {
      if (p.y === null) continue;
      if (p.y < lo) lo = p.y;
      if (p.y > hi) hi = p.y;
    }
  }
  if (lo === hi) hi = lo + 1;
  return [lo, hi];
}

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : String(Math.round(v * 100) / 100);
}

class Scales {
  private readonly slot: number;

  constructor(private readonly categories: Cell[],
              private readonly lo: number, private readonly hi: number) {
    this.slot = (W - PAD.left - PAD.right) / Math.max(categories.length, 1);
  }

  xBand(x: Cell): { left: number; width: number } {
    const i = Math.max(this.categories.indexOf(x), 0);
    return { left: PAD.left + i * this.slot, width: this.slot };
  }

  xMid(x: Cell): number {
    const band = this.xBand(x);
    return band.left + band.width / 2;
  }

  y(v: number): number {
    const span = this.hi - this.lo;
    return PAD.top + (this.hi - v) / span * (H - PAD.top - PAD.bottom);
  }
}

function frame(doc: ViewDoc | ModelDoc, scales: Scales,
               categories: Cell[], lo: number, hi: number): string[] {
  const parts = [
    `<text class="title" x="${PAD.left}" y="16">${escapeXml(doc.title)}</text>`,
  ];
  const zero = scales.y(Math.max(lo, Math.min(hi, 0)));
  parts.push(`<line class="axis" x1="${PAD.left}" y1="${fmt(zero)}" ` +
             `x2="${W - PAD.right}" y2="${fmt(zero)}" stroke="currentColor"/>`);
  for (const bound of [lo, hi]) {
    parts.push(`<text class="tick" x="${PAD.left - 4}" y="${fmt(scales.y(bound) + 3)}" ` +
               `text-anchor="end">${fmt(bound)}</text>`);
  }
  for (const c of categories) {
    parts.push(`<text class="tick" x="${fmt(scales.xMid(c))}" y="${H - 8}" ` +
               `text-anchor="middle">${escapeXml(String(c))}</text>`);
  }
  return parts;
}

function barMarks(data: ChartData, scales: Scales, dodged: boolean): string[] {
  const parts: string[] = [];
  const n = data.series.length;
  data.series.forEach((series, si) => {
    const fill = PALETTE[si % PALETTE.length];
    const opacity = !dodged && n > 1 ? ' fill-opacity="0.6"' : '';
    for (const p of series.points) {
      if (p.y === null) continue;
      const band = scales.xBand(p.x);
      const inner = band.width * 0.8;
      const width = dodged ? inner / n : inner;
      const left = band.left + band.width * 0.1 + (dodged ? si * width : 0);
      const y0 = scales.y(0);
      const y1 = scales.y(p.y);
      parts.push(
        `<rect data-x="${escapeXml(String(p.x))}" data-series="${escapeXml(series.name)}" ` +
        `data-value="${p.y}" x="${fmt(left)}" y="${fmt(Math.min(y0, y1))}" ` +
        `width="${fmt(width)}" height="${fmt(Math.abs(y0 - y1))}" fill="${fill}"${opacity}/>`);
    }
  });
  return parts;
}

function lineMarks(data: ChartData, scales: Scales, points: boolean): string[] {
  const parts: string[] = [];
  data.series.forEach((series, si) => {
    const stroke = PALETTE[si % PALETTE.length];
    const path = series.points
      .filter((p) => p.y !== null)
      .map((p) => `${fmt(scales.xMid(p.x))},${fmt(scales.y(p.y as number))}`)
      .join(' ');
    if (!points && path) {
      parts.push(`<polyline data-series="${escapeXml(series.name)}" points="${path}" ` +
                 `fill="none" stroke="${stroke}" stroke-width="2"/>`);
    }
    for (const p of series.points) {
      if (p.y === null) continue;
      parts.push(
        `<circle data-x="${escapeXml(String(p.x))}" data-series="${escapeXml(series.name)}" ` +
        `data-value="${p.y}" cx="${fmt(scales.xMid(p.x))}" cy="${fmt(scales.y(p.y))}" ` +
        `r="${points ? 3 : 2}" fill="${stroke}"/>`);
    }
  });
  return parts;
}

function svg(mark: string, layout: string | null, body: string[]): string {
  const layoutAttr = layout ? ` data-layout="${layout}"` : '';
  return `<svg viewBox="0 0 ${W} ${H}" data-mark="${mark}"${layoutAttr} ` +
         `font-family="sans-serif" font-size="10">${body.join('')}</svg>`;
}

export function renderView(doc: ViewDoc): string {
  if (!doc.rows || doc.rows.length === 0) {
    return svg(doc.mark, doc.layout,
               [`<text x="${PAD.left}" y="16">${escapeXml(doc.title)}</text>`,
                `<text x="${W / 2}" y="${H / 2}" text-anchor="middle">no data</text>`]);
  }
  const xAttr = channelAttr(doc.channels, 'x') ?? doc.group_attrs[0] ?? null;
  let seriesAttr = doc.series ?? channelAttr(doc.channels, 'color');
  if (seriesAttr === xAttr) seriesAttr = null;
  const data = gather(doc, xAttr, seriesAttr, doc.measure.name);
  const [lo, hi] = yDomain(data);
  const scales = new Scales(data.categories, lo, hi);
  const body = frame(doc, scales, data.categories, lo, hi);
  if (doc.mark === 'line') {
    body.push(...lineMarks(data, scales, false));
  } else if (doc.mark === 'point') {
    body.push(...lineMarks(data, scales, true));
  } else {
    body.push(...barMarks(data, scales, doc.layout !== 'superpose'));
  }
  return svg(doc.mark, doc.layout, body);
}

export function renderModel(doc: ModelDoc): string {
  if (!doc.rows || doc.rows.length === 0) {
    return svg('line', null,
               [`<text x="${PAD.left}" y="16">${escapeXml(doc.title)}</text>`,
                `<text x="${W / 2}" y="${H / 2}" text-anchor="middle">no data</text>`]);
  }
  const xAttr = doc.features[0] ?? null;
  const seriesAttr = doc.cond_attrs[0] ?? null;
  const yName = doc.columns?.[doc.columns.length - 1]?.name ?? 'y';
  const data = gather(doc, xAttr, seriesAttr, yName);
  const [lo, hi] = yDomain(data);
  const scales = new Scales(data.categories, lo, hi);
  const body = frame(doc, scales, data.categories, lo, hi);
  body.push(...lineMarks(data, scales, false));
  return svg('line', null, body);
}

export function renderCard(doc: ViewDoc | ModelDoc): string {
  return doc.kind === 'model' ? renderModel(doc) : renderView(doc);
}
