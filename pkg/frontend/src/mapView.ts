// Canvas map: draws an offline grid, the player, and durian markers scaled
// to a fixed meters-per-pixel view centered on the player. No tile fetches,
// so it works fully offline and in tests.

import type { DurianMarker } from "./protocol.js";
import { planarDistanceM, type Position } from "./walkSim.js";

const EARTH_RADIUS_M = 6_371_000;
const METERS_PER_DEG_LAT = (EARTH_RADIUS_M * Math.PI) / 180;

export interface MapStyle {
  metersPerPixel: number;
  gridSpacingM: number;
}

export const DEFAULT_STYLE: MapStyle = { metersPerPixel: 1.5, gridSpacingM: 50 };

/** Project a geographic point to canvas pixels relative to `center`. */
export function project(
  center: Position,
  point: Position,
  width: number,
  height: number,
  style: MapStyle = DEFAULT_STYLE
): { x: number; y: number } {
  const cosLat = Math.cos((center.lat * Math.PI) / 180);
  const dEast = (point.lon - center.lon) * METERS_PER_DEG_LAT * cosLat;
  const dNorth = (point.lat - center.lat) * METERS_PER_DEG_LAT;
  return {
    x: width / 2 + dEast / style.metersPerPixel,
    y: height / 2 - dNorth / style.metersPerPixel,
  };
}

export class MapView {
  style: MapStyle = DEFAULT_STYLE;

  constructor(private canvas: HTMLCanvasElement) {}

  render(player: Position, durians: DurianMarker[], captureRadiusM = 15): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);

    ctx.fillStyle = "#eef3ee";
    ctx.fillRect(0, 0, width, height);
    this.drawGrid(ctx, player, width, height);

    // Capture circle around the player.
    ctx.strokeStyle = "#7aa87a";
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    ctx.arc(
      width / 2,
      height / 2,
      captureRadiusM / this.style.metersPerPixel,
      0,
      Math.PI * 2
    );
    ctx.stroke();
    ctx.setLineDash([]);

    for (const d of durians) {
      const p = project(player, { lat: d.lat, lon: d.lon }, width, height, this.style);
      ctx.fillStyle =
        d.state === "Active" ? "#2f7d32" : d.state === "Captured" ? "#9e9e9e" : "#b71c1c";
      ctx.beginPath();
      ctx.arc(p.x, p.y, 7, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = "#ffffff";
      ctx.font = "10px sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(String(d.id), p.x, p.y);
      if (d.state === "Active") {
        const dist = Math.round(
          planarDistanceM(player, { lat: d.lat, lon: d.lon })
        );
        ctx.fillStyle = "#333333";
        ctx.fillText(`${dist} m`, p.x, p.y + 14);
      }
    }

    // Player marker.
    ctx.fillStyle = "#1565c0";
    ctx.beginPath();
    ctx.arc(width / 2, height / 2, 6, 0, Math.PI * 2);
    ctx.fill();
  }

  private drawGrid(
    ctx: CanvasRenderingContext2D,
    player: Position,
    width: number,
    height: number
  ): void {
    const spacingPx = this.style.gridSpacingM / this.style.metersPerPixel;
    // Anchor the grid to absolute meters so it scrolls as the player walks.
    const cosLat = Math.cos((player.lat * Math.PI) / 180);
    const eastM = player.lon * METERS_PER_DEG_LAT * cosLat;
    const northM = player.lat * METERS_PER_DEG_LAT;
    const offX = (eastM % this.style.gridSpacingM) / this.style.metersPerPixel;
    const offY = (northM % this.style.gridSpacingM) / this.style.metersPerPixel;
    ctx.strokeStyle = "#d6e0d6";
    ctx.lineWidth = 1;
    for (let x = ((width / 2 - offX) % spacingPx) - spacingPx; x < width; x += spacingPx) {
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, height);
      ctx.stroke();
    }
    for (let y = ((height / 2 + offY) % spacingPx) - spacingPx; y < height; y += spacingPx) {
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(width, y);
      ctx.stroke();
    }
  }
}
