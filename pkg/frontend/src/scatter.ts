/**
 * Canvas scatterplot: live frames, pan/zoom, lasso capture, cluster colors.
 *
 * Rendering is a full redraw per frame (square markers via fillRect), which
 * comfortably covers the service's point cap at the <= 10 fps frame rate.
 */

import { colorForLabel, NEUTRAL } from "./colors.js";
import { simplifyPath, type Point } from "./lasso.js";
import {
	boundsOf,
	dataToScreen,
	fitViewport,
	panBy,
	screenToData,
	zoomAt,
	type Viewport,
} from "./viewport.js";

export type LassoHandler = (polygonData: Point[]) => void;

export class ScatterView {
	private ctx: CanvasRenderingContext2D;
	private coords: [number, number][] = [];
	private labels: number[] | null = null;
	private highlight: Set<number> = new Set();
	private viewport: Viewport = { scale: 1, tx: 0, ty: 0 };
	private fitted = false;
	private stale = false;
	private lassoMode = false;
	private lassoPath: Point[] = [];
	private dragging = false;
	private lastPointer: Point = [0, 0];
	private onLassoDone: LassoHandler | null = null;

	constructor(private canvas: HTMLCanvasElement) {
		const ctx = canvas.getContext("2d");
		if (ctx === null) {
			throw new Error("canvas 2d context unavailable");
		}
		this.ctx = ctx;
		canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
		canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
		canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
		canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
	}

	setFrame(coords: [number, number][]): void {
		this.coords = coords;
		if (!this.fitted) {
			this.fit();
		}
		this.render();
	}

	setLabels(labels: number[] | null): void {
		this.labels = labels;
		this.render();
	}

	setHighlight(indices: Iterable<number>): void {
		this.highlight = new Set(indices);
		this.render();
	}

	setStale(stale: boolean): void {
		if (this.stale !== stale) {
			this.stale = stale;
			this.render();
		}
	}

	/** Arm one lasso capture; the handler receives data-space vertices. */
	armLasso(handler: LassoHandler): void {
		this.lassoMode = true;
		this.onLassoDone = handler;
		this.canvas.style.cursor = "crosshair";
	}

	disarmLasso(): void {
		this.lassoMode = false;
		this.onLassoDone = null;
		this.lassoPath = [];
		this.canvas.style.cursor = "grab";
		this.render();
	}

	fit(): void {
		const bounds = boundsOf(this.coords);
		if (bounds !== null) {
			this.viewport = fitViewport(bounds, this.canvas.width, this.canvas.height);
			this.fitted = true;
		}
		this.render();
	}

	private canvasPoint(e: PointerEvent | WheelEvent): Point {
		const rect = this.canvas.getBoundingClientRect();
		return [
			((e.clientX - rect.left) / rect.width) * this.canvas.width,
			((e.clientY - rect.top) / rect.height) * this.canvas.height,
		];
	}

	private pointerDown(e: PointerEvent): void {
		this.canvas.setPointerCapture(e.pointerId);
		const pt = this.canvasPoint(e);
		if (this.lassoMode) {
			this.lassoPath = [pt];
		} else {
			this.dragging = true;
			this.lastPointer = pt;
		}
	}

	private pointerMove(e: PointerEvent): void {
		const pt = this.canvasPoint(e);
		if (this.lassoMode && this.lassoPath.length > 0) {
			this.lassoPath.push(pt);
			this.render();
		} else if (this.dragging) {
			this.viewport = panBy(
				this.viewport,
				pt[0] - this.lastPointer[0],
				pt[1] - this.lastPointer[1],
			);
			this.lastPointer = pt;
			this.render();
		}
	}

	private pointerUp(e: PointerEvent): void {
		this.canvas.releasePointerCapture(e.pointerId);
		if (this.lassoMode && this.lassoPath.length >= 3 && this.onLassoDone) {
			const path = simplifyPath(this.lassoPath, 4);
			const polygon = path.map(([px, py]) =>
				screenToData(this.viewport, px, py),
			);
			const handler = this.onLassoDone;
			this.disarmLasso();
			handler(polygon);
		} else if (this.lassoMode) {
			this.lassoPath = [];
			this.render();
		}
		this.dragging = false;
	}

	private wheel(e: WheelEvent): void {
		e.preventDefault();
		const [px, py] = this.canvasPoint(e);
		const factor = Math.exp(-e.deltaY * 0.0015);
		this.viewport = zoomAt(this.viewport, px, py, factor);
		this.render();
	}

	render(): void {
		const { ctx, canvas } = this;
		ctx.fillStyle = "#14181d";
		ctx.fillRect(0, 0, canvas.width, canvas.height);
		const size = this.coords.length > 5000 ? 2 : 4;
		const half = size / 2;
		for (let i = 0; i < this.coords.length; i++) {
			const [x, y] = this.coords[i];
			const [px, py] = dataToScreen(this.viewport, x, y);
			if (px < -size || py < -size || px > canvas.width + size || py > canvas.height + size) {
				continue;
			}
			ctx.fillStyle = this.labels === null ? NEUTRAL : colorForLabel(this.labels[i]);
			ctx.fillRect(px - half, py - half, size, size);
			if (this.highlight.has(i)) {
				ctx.strokeStyle = "#ffffff";
				ctx.strokeRect(px - half - 1.5, py - half - 1.5, size + 3, size + 3);
			}
		}
		if (this.lassoPath.length > 1) {
			ctx.strokeStyle = "#f5d35e";
			ctx.lineWidth = 1.5;
			ctx.setLineDash([6, 4]);
			ctx.beginPath();
			ctx.moveTo(this.lassoPath[0][0], this.lassoPath[0][1]);
			for (const [px, py] of this.lassoPath.slice(1)) {
				ctx.lineTo(px, py);
			}
			ctx.stroke();
			ctx.setLineDash([]);
		}
		if (this.stale) {
			ctx.fillStyle = "rgba(245, 211, 94, 0.92)";
			ctx.fillRect(canvas.width - 74, 10, 64, 24);
			ctx.fillStyle = "#14181d";
			ctx.font = "13px system-ui, sans-serif";
			ctx.fillText("stale", canvas.width - 56, 27);
		}
	}
}
