/** Severity coloring: a fixed-domain monotone gradient.
 *
 * The domain runs from 0 to the 95th percentile of the current snapshot's
 * severities, so one extreme edge cannot wash out the rest of the map; the
 * scale is a pure function of the snapshot, so identical snapshots render
 * identically. Zero severity gets a distinct neutral color.
 */

export const NEUTRAL_COLOR = "#8d99a6";

const LOW_RGB: [number, number, number] = [247, 213, 77]; // yellow
const HIGH_RGB: [number, number, number] = [178, 24, 43]; // deep red

export function percentile(values: number[], q: number): number {
  if (values.length === 0) return 0;
  const sorted = [...values].sort((a, b) => a - b);
  const pos = q * (sorted.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.ceil(pos);
  const a = sorted[lo]!;
  const b = sorted[hi]!;
  return a + (b - a) * (pos - lo);
}

export function severityDomainMax(severities: number[]): number {
  return percentile(severities, 0.95);
}

function hex(rgb: [number, number, number]): string {
  return "#" + rgb.map((c) => Math.round(c).toString(16).padStart(2, "0")).join("");
}

export function severityColor(severity: number, domainMax: number): string {
  if (severity <= 0) return NEUTRAL_COLOR;
  const t = domainMax > 0 ? Math.min(1, severity / domainMax) : 1;
  const rgb: [number, number, number] = [
    LOW_RGB[0] + (HIGH_RGB[0] - LOW_RGB[0]) * t,
    LOW_RGB[1] + (HIGH_RGB[1] - LOW_RGB[1]) * t,
    LOW_RGB[2] + (HIGH_RGB[2] - LOW_RGB[2]) * t,
  ];
  return hex(rgb);
}

export interface LegendStop {
  value: number;
  color: string;
}

export function legendStops(domainMax: number, count = 5): LegendStop[] {
  const stops: LegendStop[] = [{ value: 0, color: NEUTRAL_COLOR }];
  for (let i = 1; i <= count; i++) {
    const value = (domainMax * i) / count;
    stops.push({ value, color: severityColor(value, domainMax) });
  }
  return stops;
}
