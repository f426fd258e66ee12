/** Pixel-space helpers: fitting lon/lat geometry into the SVG map and
 * scaling detector bounding boxes onto the displayed image. */

export interface Viewport {
  centerLat: number;
  centerLon: number;
  /** meters of ground per CSS pixel */
  metersPerPixel: number;
  widthPx: number;
  heightPx: number;
}

const EARTH_RADIUS_M = 6371008.8;
const DEG = Math.PI / 180;

export function fitViewport(
  coords: [number, number][],
  widthPx: number,
  heightPx: number,
  paddingPx = 24,
): Viewport {
  if (coords.length === 0) {
    return { centerLat: 0, centerLon: 0, metersPerPixel: 1, widthPx, heightPx };
  }
  let minLon = Infinity;
  let maxLon = -Infinity;
  let minLat = Infinity;
  let maxLat = -Infinity;
  for (const [lon, lat] of coords) {
    minLon = Math.min(minLon, lon);
    maxLon = Math.max(maxLon, lon);
    minLat = Math.min(minLat, lat);
    maxLat = Math.max(maxLat, lat);
  }
  const centerLat = (minLat + maxLat) / 2;
  const centerLon = (minLon + maxLon) / 2;
  const widthM = Math.max(1, (maxLon - minLon) * DEG * Math.cos(centerLat * DEG) * EARTH_RADIUS_M);
  const heightM = Math.max(1, (maxLat - minLat) * DEG * EARTH_RADIUS_M);
  const usableW = Math.max(1, widthPx - 2 * paddingPx);
  const usableH = Math.max(1, heightPx - 2 * paddingPx);
  const metersPerPixel = Math.max(widthM / usableW, heightM / usableH);
  return { centerLat, centerLon, metersPerPixel, widthPx, heightPx };
}

export function toPixel(vp: Viewport, lon: number, lat: number): [number, number] {
  const dx = (lon - vp.centerLon) * DEG * Math.cos(vp.centerLat * DEG) * EARTH_RADIUS_M;
  const dy = (lat - vp.centerLat) * DEG * EARTH_RADIUS_M;
  return [vp.widthPx / 2 + dx / vp.metersPerPixel, vp.heightPx / 2 - dy / vp.metersPerPixel];
}

export interface PixelRect {
  left: number;
  top: number;
  width: number;
  height: number;
}

/** Scale a detection bbox (image pixel coordinates) to the displayed size. */
export function scaleBbox(
  bbox: [number, number, number, number],
  naturalWidth: number,
  naturalHeight: number,
  displayWidth: number,
  displayHeight: number,
): PixelRect {
  const sx = displayWidth / naturalWidth;
  const sy = displayHeight / naturalHeight;
  const [x0, y0, x1, y1] = bbox;
  return {
    left: x0 * sx,
    top: y0 * sy,
    width: (x1 - x0) * sx,
    height: (y1 - y0) * sy,
  };
}
