/**
 * Deterministic SVG line charts with an optional secondary y axis.
 *
 * No timestamps, no randomness, fixed fonts and fixed number formatting:
 * rendering the same data twice yields byte-identical files.
 */

export interface Series {
  label: string;
  color: string;
  /** points in data space; null y values break the polyline (gaps) */
  points: Array<[number, number | null]>;
  axis: "left" | "right";
  width?: number;
  dash?: string;
}

export interface Annotation {
  x: number;
  y: number;
  axis: "left" | "right";
  text: string;
}

export interface Band {
  yLow: number;
  yHigh: number;
  axis: "left" | "right";
  color: string;
  label?: string;
}

export interface ChartSpec {
  title: string;
  xLabel: string;
  xRange: [number, number];
  xTicks: number[];
  left: { label: string; range: [number, number]; ticks: number[] };
  right?: { label: string; range: [number, number]; ticks: number[] };
  series: Series[];
  annotations?: Annotation[];
  bands?: Band[];
}

const W = 720;
const H = 420;
const MARGIN = { top: 40, right: 70, bottom: 52, left: 70 };
const FONT = "font-family=\"Helvetica, Arial, sans-serif\"";

function fmt(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(3).replace(/\.?0+$/, "");
}

export function renderChart(spec: ChartSpec): string {
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + ((x - spec.xRange[0]) / (spec.xRange[1] - spec.xRange[0])) * plotW;
  const syFor = (axis: "left" | "right") => {
    const range = axis === "left" ? spec.left.range : spec.right!.range;
    return (y: number) => MARGIN.top + plotH - ((y - range[0]) / (range[1] - range[0])) * plotH;
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`
  );
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(
    `<text x="${W / 2}" y="22" text-anchor="middle" ${FONT} font-size="15">${spec.title}</text>`
  );

  for (const band of spec.bands ?? []) {
    const sy = syFor(band.axis);
    const y1 = sy(band.yHigh);
    const y2 = sy(band.yLow);
    parts.push(
      `<rect x="${MARGIN.left}" y="${fmt(y1)}" width="${plotW}" height="${fmt(y2 - y1)}" ` +
        `fill="${band.color}" opacity="0.25"/>`
    );
    if (band.label) {
      parts.push(
        `<text x="${MARGIN.left + 6}" y="${fmt(y1 + 14)}" ${FONT} font-size="10" ` +
          `fill="#555555">${band.label}</text>`
      );
    }
  }

  // grid and x ticks
  for (const t of spec.xTicks) {
    const x = fmt(sx(t));
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" ` +
        `stroke="#cccccc" stroke-width="0.5"/>`
    );
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 18}" text-anchor="middle" ${FONT} ` +
        `font-size="11">${fmt(t)}</text>`
    );
  }
  // left ticks
  const syL = syFor("left");
  for (const t of spec.left.ticks) {
    const y = fmt(syL(t));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
        `stroke="#cccccc" stroke-width="0.5"/>`
    );
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
        `${FONT} font-size="11">${fmt(t)}</text>`
    );
  }
  if (spec.right) {
    const syR = syFor("right");
    for (const t of spec.right.ticks) {
      const y = fmt(syR(t));
      parts.push(
        `<text x="${MARGIN.left + plotW + 8}" y="${y}" text-anchor="start" ` +
          `dominant-baseline="middle" ${FONT} font-size="11">${fmt(t)}</text>`
      );
    }
  }

  // frame and axis labels
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
      `fill="none" stroke="black" stroke-width="1"/>`
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${H - 14}" text-anchor="middle" ${FONT} ` +
      `font-size="12">${spec.xLabel}</text>`
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ${FONT} font-size="12" ` +
      `transform="rotate(-90 18 ${MARGIN.top + plotH / 2})">${spec.left.label}</text>`
  );
  if (spec.right) {
    parts.push(
      `<text x="${W - 16}" y="${MARGIN.top + plotH / 2}" text-anchor="middle" ${FONT} ` +
        `font-size="12" transform="rotate(90 ${W - 16} ${MARGIN.top + plotH / 2})">` +
        `${spec.right.label}</text>`
    );
  }

  // series (clipped to the plot area)
  parts.push(`<clipPath id="plot"><rect x="${MARGIN.left}" y="${MARGIN.top}" ` +
    `width="${plotW}" height="${plotH}"/></clipPath>`);
  for (const s of spec.series) {
    const sy = syFor(s.axis);
    const chunks: string[][] = [[]];
    for (const [x, y] of s.points) {
      if (y === null) {
        if (chunks[chunks.length - 1].length > 0) chunks.push([]);
      } else {
        chunks[chunks.length - 1].push(`${fmt(sx(x))},${fmt(sy(y))}`);
      }
    }
    for (const chunk of chunks) {
      if (chunk.length < 2) continue;
      const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
      parts.push(
        `<polyline clip-path="url(#plot)" points="${chunk.join(" ")}" fill="none" ` +
          `stroke="${s.color}" stroke-width="${s.width ?? 1.8}"${dash}/>`
      );
    }
  }

  // legend, top-right inside the frame
  let ly = MARGIN.top + 14;
  for (const s of spec.series) {
    const lx = MARGIN.left + plotW - 150;
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${s.color}" ` +
        `stroke-width="2.5"/>`
    );
    parts.push(`<text x="${lx + 28}" y="${ly}" ${FONT} font-size="11">${s.label}</text>`);
    ly += 16;
  }

  for (const a of spec.annotations ?? []) {
    const sy = syFor(a.axis);
    parts.push(
      `<circle cx="${fmt(sx(a.x))}" cy="${fmt(sy(a.y))}" r="3" fill="black"/>` +
        `<text x="${fmt(sx(a.x) + 6)}" y="${fmt(sy(a.y) - 6)}" ${FONT} font-size="10">` +
        `${a.text}</text>`
    );
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
