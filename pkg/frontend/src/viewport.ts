/** Pan/zoom transform between data space and canvas pixels (pure math). */

export interface Viewport {
	scale: number;
	/** Canvas-pixel offset applied after scaling; y is flipped (data up). */
	tx: number;
	ty: number;
}

export interface Bounds {
	minX: number;
	maxX: number;
	minY: number;
	maxY: number;
}

export function boundsOf(coords: ArrayLike<[number, number]>): Bounds | null {
	if (coords.length === 0) {
		return null;
	}
	let minX = Infinity;
	let maxX = -Infinity;
	let minY = Infinity;
	let maxY = -Infinity;
	for (let i = 0; i < coords.length; i++) {
		const [x, y] = coords[i];
		minX = Math.min(minX, x);
		maxX = Math.max(maxX, x);
		minY = Math.min(minY, y);
		maxY = Math.max(maxY, y);
	}
	return { minX, maxX, minY, maxY };
}

/** Fit bounds into a width x height canvas with a fractional margin. */
export function fitViewport(
	bounds: Bounds,
	width: number,
	height: number,
	margin = 0.08,
): Viewport {
	const spanX = Math.max(bounds.maxX - bounds.minX, 1e-9);
	const spanY = Math.max(bounds.maxY - bounds.minY, 1e-9);
	const scale = Math.min(
		(width * (1 - 2 * margin)) / spanX,
		(height * (1 - 2 * margin)) / spanY,
	);
	const cx = (bounds.minX + bounds.maxX) / 2;
	const cy = (bounds.minY + bounds.maxY) / 2;
	return {
		scale,
		tx: width / 2 - cx * scale,
		ty: height / 2 + cy * scale,
	};
}

export function dataToScreen(v: Viewport, x: number, y: number): [number, number] {
	return [x * v.scale + v.tx, -y * v.scale + v.ty];
}

export function screenToData(v: Viewport, px: number, py: number): [number, number] {
	return [(px - v.tx) / v.scale, (v.ty - py) / v.scale];
}

/** Zoom by a factor keeping the pixel (px, py) fixed on screen. */
export function zoomAt(v: Viewport, px: number, py: number, factor: number): Viewport {
	const [dx, dy] = screenToData(v, px, py);
	const scale = v.scale * factor;
	return {
		scale,
		tx: px - dx * scale,
		ty: py + dy * scale,
	};
}

export function panBy(v: Viewport, dxPixels: number, dyPixels: number): Viewport {
	return { scale: v.scale, tx: v.tx + dxPixels, ty: v.ty + dyPixels };
}
