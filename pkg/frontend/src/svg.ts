/** Minimal SVG scene builder and axis scales; no rendering dependencies. */

export interface Scale {
  (value: number): number;
  ticks(): number[];
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const f = ((v: number) =>
    outLo + ((Math.log10(v) - llo) / (lhi - llo || 1)) * (outHi - outLo)) as Scale;
  f.ticks = () => {
    const ticks: number[] = [];
    for (let e = Math.ceil(llo - 1e-9); e <= Math.floor(lhi + 1e-9); e++) {
      ticks.push(10 ** e);
    }
    if (ticks.length < 2) {
      ticks.length = 0;
      ticks.push(lo, hi);
    }
    return ticks;
  };
  return f;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const f = ((v: number) => outLo + ((v - lo) / (hi - lo || 1)) * (outHi - outLo)) as Scale;
  f.ticks = () => {
    const span = hi - lo;
    const step = 10 ** Math.floor(Math.log10(span / 4 || 1));
    const mult = span / step > 8 ? 2 : 1;
    const ticks: number[] = [];
    for (let v = Math.ceil(lo / (step * mult)) * step * mult; v <= hi + 1e-12; v += step * mult) {
      ticks.push(v);
    }
    return ticks;
  };
  return f;
}

const esc = (s: string) =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export class Svg {
  private parts: string[] = [];

  constructor(readonly width: number, readonly height: number) {}

  line(x1: number, y1: number, x2: number, y2: number, stroke: string, opts = "") {
    this.parts.push(
      `<line x1="${x1.toFixed(2)}" y1="${y1.toFixed(2)}" x2="${x2.toFixed(2)}" ` +
        `y2="${y2.toFixed(2)}" stroke="${stroke}" ${opts}/>`,
    );
  }

  path(points: Array<[number, number]>, stroke: string, opts = "") {
    if (points.length === 0) return;
    const d = points
      .map(([x, y], i) => `${i === 0 ? "M" : "L"}${x.toFixed(2)} ${y.toFixed(2)}`)
      .join(" ");
    this.parts.push(`<path d="${d}" fill="none" stroke="${stroke}" ${opts}/>`);
  }

  circle(cx: number, cy: number, r: number, fill: string, opts = "") {
    this.parts.push(
      `<circle cx="${cx.toFixed(2)}" cy="${cy.toFixed(2)}" r="${r}" fill="${fill}" ${opts}/>`,
    );
  }

  text(x: number, y: number, content: string, opts = "") {
    this.parts.push(
      `<text x="${x.toFixed(2)}" y="${y.toFixed(2)}" font-family="sans-serif" ${opts}>` +
        `${esc(content)}</text>`,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      `<rect width="100%" height="100%" fill="white"/>\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

export const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
