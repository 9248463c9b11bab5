/** Freehand lasso geometry: point-in-polygon tests over data coordinates. */

export type Point = [number, number];

/** Ray-casting containment test; boundary behavior follows edge crossings. */
export function pointInPolygon(pt: Point, polygon: Point[]): boolean {
	if (polygon.length < 3) {
		return false;
	}
	const [x, y] = pt;
	let inside = false;
	for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
		const [xi, yi] = polygon[i];
		const [xj, yj] = polygon[j];
		const crosses = yi > y !== yj > y;
		if (crosses && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
			inside = !inside;
		}
	}
	return inside;
}

/** Indices of coords falling inside the lasso polygon. */
export function selectInPolygon(
	coords: ArrayLike<[number, number]>,
	polygon: Point[],
): number[] {
	const out: number[] = [];
	for (let i = 0; i < coords.length; i++) {
		if (pointInPolygon(coords[i], polygon)) {
			out.push(i);
		}
	}
	return out;
}

/** Decimate a mouse path: keep points at least minDist apart (keeps ends). */
export function simplifyPath(path: Point[], minDist: number): Point[] {
	if (path.length <= 2) {
		return path.slice();
	}
	const out: Point[] = [path[0]];
	for (let i = 1; i < path.length - 1; i++) {
		const [px, py] = out[out.length - 1];
		const [x, y] = path[i];
		if (Math.hypot(x - px, y - py) >= minDist) {
			out.push(path[i]);
		}
	}
	out.push(path[path.length - 1]);
	return out;
}
