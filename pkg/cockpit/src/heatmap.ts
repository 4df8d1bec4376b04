/** Reachability heat-map CSV (x,y,z,count,percentage) overlay points. */

import { Vec3 } from "./protocol.js";

export interface HeatPoint {
  position: Vec3;
  count: number;
  percentage: number;
}

export function parseHeatmapCsv(text: string): HeatPoint[] {
  const lines = text.split(/\r?\n/).filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    throw new Error("empty heat-map file");
  }
  const header = lines[0].trim();
  if (header !== "x,y,z,count,percentage") {
    throw new Error(`unexpected heat-map header: ${header}`);
  }
  const points: HeatPoint[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(",");
    if (parts.length !== 5) {
      throw new Error(`bad heat-map row: ${line}`);
    }
    const nums = parts.map(Number);
    if (nums.some((n) => !Number.isFinite(n))) {
      throw new Error(`bad heat-map row: ${line}`);
    }
    points.push({
      position: [nums[0], nums[1], nums[2]],
      count: nums[3],
      percentage: nums[4],
    });
  }
  return points;
}

/** Simple dark-to-hot color ramp for percentage in [0, 100]. */
export function heatColor(percentage: number): string {
  const t = Math.max(0, Math.min(1, percentage / 100));
  const r = Math.round(40 + 215 * Math.min(1, t * 2));
  const g = Math.round(20 + 235 * Math.max(0, Math.min(1, (t - 0.3) / 0.7)));
  const b = Math.round(60 * (1 - t));
  return `rgb(${r},${g},${b})`;
}
