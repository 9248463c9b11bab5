import assert from "node:assert/strict";
import { test } from "node:test";

import { pointInPolygon, selectInPolygon, simplifyPath, type Point } from "../src/lasso.js";

const square: Point[] = [
	[0, 0],
	[10, 0],
	[10, 10],
	[0, 10],
];

test("square contains its center and excludes the outside", () => {
	assert.equal(pointInPolygon([5, 5], square), true);
	assert.equal(pointInPolygon([15, 5], square), false);
	assert.equal(pointInPolygon([-1, -1], square), false);
});

test("concave polygon handled by ray casting", () => {
	// U shape: the notch between the arms is outside
	const u: Point[] = [
		[0, 0],
		[9, 0],
		[9, 9],
		[6, 9],
		[6, 3],
		[3, 3],
		[3, 9],
		[0, 9],
	];
	assert.equal(pointInPolygon([1.5, 6], u), true); // left arm
	assert.equal(pointInPolygon([7.5, 6], u), true); // right arm
	assert.equal(pointInPolygon([4.5, 6], u), false); // the notch
	assert.equal(pointInPolygon([4.5, 1.5], u), true); // the base
});

test("degenerate polygons select nothing", () => {
	assert.equal(pointInPolygon([0, 0], []), false);
	assert.equal(pointInPolygon([0, 0], [[0, 0], [1, 1]]), false);
});

test("selectInPolygon returns indices in order", () => {
	const coords: [number, number][] = [
		[5, 5],
		[20, 20],
		[1, 1],
		[9.5, 9.5],
		[10.5, 9.5],
	];
	assert.deepEqual(selectInPolygon(coords, square), [0, 2, 3]);
});

test("simplifyPath decimates dense vertices but keeps endpoints", () => {
	const dense: Point[] = [];
	for (let i = 0; i <= 100; i++) {
		dense.push([i * 0.1, 0]);
	}
	const sparse = simplifyPath(dense, 1.0);
	assert.ok(sparse.length < dense.length / 5);
	assert.deepEqual(sparse[0], [0, 0]);
	assert.deepEqual(sparse[sparse.length - 1], [10, 0]);
	for (let i = 1; i < sparse.length - 1; i++) {
		const [ax, ay] = sparse[i - 1];
		const [bx, by] = sparse[i];
		assert.ok(Math.hypot(bx - ax, by - ay) >= 1.0);
	}
});

test("short paths pass through simplification", () => {
	const path: Point[] = [
		[0, 0],
		[5, 5],
	];
	assert.deepEqual(simplifyPath(path, 2), path);
});
