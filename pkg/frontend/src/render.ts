/** Canvas rendering of the world map in local meters. */

import { cssColor } from "./heatmap.js";
import type { ViewModel } from "./model.js";
import type { WorldBounds, ZoneDoc } from "./types.js";

const KIND_COLORS: Record<string, string> = {
  PersonTrack: "#2563eb",
  ObjectTrack: "#92400e",
  UAV: "#7c3aed",
  USV: "#0e7490",
  UUV: "#1e3a5f",
  GroundVehicle: "#52525b",
  Officer: "#15803d",
  MobileDevice: "#db2777",
};

export interface RenderOptions {
  heatmap?: Record<string, number>;
  staleAfterMs?: number;
  now?: number;
}

class Projection {
  constructor(
    private readonly wb: WorldBounds,
    private readonly width: number,
    private readonly height: number,
    private readonly pad = 12,
  ) {}

  x(wx: number): number {
    const f = (wx - this.wb.x_min) / (this.wb.x_max - this.wb.x_min);
    return this.pad + f * (this.width - 2 * this.pad);
  }

  y(wy: number): number {
    const f = (wy - this.wb.y_min) / (this.wb.y_max - this.wb.y_min);
    return this.height - this.pad - f * (this.height - 2 * this.pad);
  }

  len(meters: number): number {
    return (meters / (this.wb.x_max - this.wb.x_min)) * (this.width - 2 * this.pad);
  }
}

export function renderWorld(
  canvas: HTMLCanvasElement,
  vm: ViewModel,
  opts: RenderOptions = {},
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null || vm.meta === null) return;
  const world = vm.meta.world;
  const proj = new Projection(world.world_bounds, canvas.width, canvas.height);

  ctx.fillStyle = "#f6f7f9";
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  for (const zone of world.zones) {
    drawZone(ctx, proj, zone, opts.heatmap?.[zone.zone_id]);
  }
  for (const sensor of world.sensors) {
    const [sx, sy] = sensor.position;
    ctx.beginPath();
    ctx.arc(proj.x(sx), proj.y(sy), proj.len(sensor.coverage_radius_m), 0, 2 * Math.PI);
    ctx.strokeStyle = "rgba(30,64,175,0.35)";
    ctx.setLineDash([4, 4]);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = "#1e40af";
    ctx.fillRect(proj.x(sx) - 3, proj.y(sy) - 3, 6, 6);
    ctx.fillStyle = "#374151";
    ctx.font = "10px sans-serif";
    ctx.fillText(sensor.sensor_id, proj.x(sx) + 5, proj.y(sy) - 4);
  }

  const stale = opts.staleAfterMs ?? Infinity;
  const now = opts.now ?? Infinity;
  for (const marker of vm.markers.values()) {
    if (now - marker.lastSeenMs > stale) continue;
    if (marker.trail.length > 1) {
      ctx.beginPath();
      ctx.moveTo(proj.x(marker.trail[0][0]), proj.y(marker.trail[0][1]));
      for (const [tx, ty] of marker.trail.slice(1)) {
        ctx.lineTo(proj.x(tx), proj.y(ty));
      }
      ctx.strokeStyle = "rgba(107,114,128,0.45)";
      ctx.stroke();
    }
    ctx.beginPath();
    ctx.arc(proj.x(marker.x), proj.y(marker.y), marker.alerted ? 5 : 3, 0, 2 * Math.PI);
    ctx.fillStyle = KIND_COLORS[marker.kind] ?? "#6b7280";
    ctx.fill();
    if (marker.alerted) {
      ctx.strokeStyle = "#dc2626";
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}

function drawZone(
  ctx: CanvasRenderingContext2D,
  proj: Projection,
  zone: ZoneDoc,
  vulnerability?: number,
): void {
  ctx.beginPath();
  zone.polygon.forEach(([px, py], i) => {
    if (i === 0) ctx.moveTo(proj.x(px), proj.y(py));
    else ctx.lineTo(proj.x(px), proj.y(py));
  });
  ctx.closePath();
  if (vulnerability !== undefined) {
    ctx.fillStyle = cssColor(vulnerability);
  } else {
    ctx.fillStyle = zone.tags.includes("critical")
      ? "rgba(220,38,38,0.08)"
      : "rgba(59,130,246,0.07)";
  }
  ctx.fill();
  ctx.strokeStyle = zone.tags.includes("critical") ? "#b91c1c" : "#64748b";
  ctx.stroke();
  const [lx, ly] = zone.polygon[0];
  ctx.fillStyle = "#111827";
  ctx.font = "11px sans-serif";
  ctx.fillText(zone.zone_id, proj.x(lx) + 4, proj.y(ly) - 4);
}

/** Prediction score sparkline with alarm ticks. */
export function renderSparkline(
  canvas: HTMLCanvasElement,
  series: { t: number; score: number; alarm: boolean }[],
  threshold = 1.0,
): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const { width, height } = canvas;
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, width, height);
  if (series.length === 0) return;
  const tMin = series[0].t;
  const tMax = series[series.length - 1].t || tMin + 1;
  const sMax = Math.max(threshold * 1.2, ...series.map((p) => p.score));
  const px = (t: number) =>
    4 + ((t - tMin) / Math.max(tMax - tMin, 1)) * (width - 8);
  const py = (s: number) => height - 4 - (s / sMax) * (height - 8);

  ctx.strokeStyle = "#d1d5db";
  ctx.beginPath();
  ctx.moveTo(0, py(threshold));
  ctx.lineTo(width, py(threshold));
  ctx.stroke();

  ctx.strokeStyle = "#7c3aed";
  ctx.beginPath();
  series.forEach((p, i) => {
    if (i === 0) ctx.moveTo(px(p.t), py(p.score));
    else ctx.lineTo(px(p.t), py(p.score));
  });
  ctx.stroke();

  for (const p of series) {
    if (!p.alarm) continue;
    ctx.fillStyle = "#dc2626";
    ctx.beginPath();
    ctx.arc(px(p.t), py(p.score), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
}
