// Desk-testing walk simulator: moves a virtual player by meters without a
// real GPS. Distances use a local planar approximation (fine for the few
// hundred meters a round spans).

const EARTH_RADIUS_M = 6_371_000;
const METERS_PER_DEG_LAT = (EARTH_RADIUS_M * Math.PI) / 180;

export interface Position {
  lat: number;
  lon: number;
}

export class WalkSimulator {
  constructor(public position: Position, public speedMps = 1.4) {}

  /** Move `meters` along `bearingDeg` (0 = north, 90 = east). */
  step(bearingDeg: number, meters: number): Position {
    const rad = (bearingDeg * Math.PI) / 180;
    const dNorth = meters * Math.cos(rad);
    const dEast = meters * Math.sin(rad);
    const lat = this.position.lat + dNorth / METERS_PER_DEG_LAT;
    const lon =
      this.position.lon +
      dEast /
        (METERS_PER_DEG_LAT * Math.cos((this.position.lat * Math.PI) / 180));
    this.position = { lat, lon };
    return this.position;
  }

  /** Walk toward a target, capped at `maxMeters`; returns the new position. */
  stepToward(target: Position, maxMeters: number): Position {
    const d = planarDistanceM(this.position, target);
    if (d <= maxMeters) {
      this.position = { ...target };
      return this.position;
    }
    const bearing = bearingDeg(this.position, target);
    return this.step(bearing, maxMeters);
  }
}

export function planarDistanceM(a: Position, b: Position): number {
  const midLat = ((a.lat + b.lat) / 2) * (Math.PI / 180);
  const dNorth = (b.lat - a.lat) * METERS_PER_DEG_LAT;
  const dEast = (b.lon - a.lon) * METERS_PER_DEG_LAT * Math.cos(midLat);
  return Math.hypot(dNorth, dEast);
}

export function bearingDeg(from: Position, to: Position): number {
  const midLat = ((from.lat + to.lat) / 2) * (Math.PI / 180);
  const dNorth = (to.lat - from.lat) * METERS_PER_DEG_LAT;
  const dEast = (to.lon - from.lon) * METERS_PER_DEG_LAT * Math.cos(midLat);
  const deg = (Math.atan2(dEast, dNorth) * 180) / Math.PI;
  return (deg + 360) % 360;
}
