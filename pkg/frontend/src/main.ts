/**
 * App wiring: session lifecycle, frame stream, lasso constraint actions,
 * cluster panel. The service base URL comes from the `?api=` query parameter
 * and defaults to the page origin.
 */

import { IpbcClient } from "./api.js";
import { selectInPolygon, type Point } from "./lasso.js";
import { bipartitePairs, cliquePairs, PAIR_CAP, type PairExpansion } from "./pairs.js";
import { renderClusterPanel, renderStatus, renderVerdicts } from "./panel.js";
import { ScatterView } from "./scatter.js";
import type { ConstraintKind, ConstraintRecord, Frame } from "./types.js";

const STALE_MS = 3000;

function byId<T extends HTMLElement>(id: string): T {
	const node = document.getElementById(id);
	if (node === null) {
		throw new Error(`missing element #${id}`);
	}
	return node as T;
}

const apiBase =
	new URLSearchParams(location.search).get("api") ?? location.origin;
const client = new IpbcClient(apiBase);

const scatter = new ScatterView(byId<HTMLCanvasElement>("scatter"));
const statusEl = byId<HTMLDivElement>("status");
const clusterPanel = byId<HTMLDivElement>("cluster-panel");
const verdictPanel = byId<HTMLDivElement>("verdict-panel");
const lossEl = byId<HTMLDivElement>("loss");

let sessionId: string | null = null;
let pointIds: string[] = [];
let lastFrame: Frame | null = null;
let lastFrameAt = 0;
let streamAbort: AbortController | null = null;
let firstSelection: number[] | null = null;

function setStatus(text: string, kind: "ok" | "busy" | "bad" = "ok"): void {
	renderStatus(statusEl, text, kind);
}

function onFrame(frame: Frame): void {
	lastFrame = frame;
	lastFrameAt = Date.now();
	scatter.setFrame(frame.coords);
	scatter.setStale(false);
	lossEl.textContent =
		`epoch ${frame.epoch} · loss ${frame.loss_total.toFixed(2)} ` +
		`(layout ${frame.loss_umap.toFixed(2)}, ml ${frame.loss_ml.toFixed(2)}, ` +
		`cl ${frame.loss_cl.toFixed(2)})`;
}

setInterval(() => {
	if (sessionId !== null && lastFrame !== null && Date.now() - lastFrameAt > STALE_MS) {
		scatter.setStale(true);
	}
}, 500);

async function subscribe(): Promise<void> {
	if (sessionId === null) {
		return;
	}
	streamAbort?.abort();
	streamAbort = new AbortController();
	try {
		await client.streamFrames(sessionId, onFrame, {
			follow: true,
			signal: streamAbort.signal,
		});
	} catch {
		// aborted or connection dropped; the stale badge takes over
	}
}

async function newSession(): Promise<void> {
	if (sessionId !== null) {
		await client.deleteSession(sessionId).catch(() => undefined);
		sessionId = null;
	}
	setStatus("creating session…", "busy");
	const created = await client.createSession({
		dataset: {
			blobs: {
				n_per_cluster: 100,
				d: 10,
				k: 4,
				centers_separation: 14,
				noise_scale: 2,
				overlap_pair: [1, 2],
				seed: 0,
			},
		},
		params: { epochs: 200, seed: 0 },
	});
	sessionId = created.session_id;
	pointIds = created.point_ids;
	scatter.setLabels(null);
	clusterPanel.replaceChildren();
	verdictPanel.replaceChildren();
	onFrame(created.frame);
	scatter.fit();
	setStatus(`session ${created.session_id} · ${created.n_points} points`, "ok");
	void subscribe();
	void watchStatus();
}

async function watchStatus(): Promise<void> {
	while (sessionId !== null) {
		try {
			const info = await client.getSession(sessionId);
			if (info.status === "optimizing") {
				setStatus(`optimizing · epoch ${info.epoch} · ${info.n_constraints} constraints`, "busy");
			} else if (info.status === "error") {
				setStatus(`optimizer error: ${info.error}`, "bad");
			} else {
				setStatus(`idle · epoch ${info.epoch} · ${info.n_constraints} constraints`, "ok");
			}
		} catch {
			setStatus("session lost", "bad");
			return;
		}
		await new Promise((r) => setTimeout(r, 750));
	}
}

function recordsFrom(expansion: PairExpansion, kind: ConstraintKind): ConstraintRecord[] {
	return expansion.pairs.map(([a, b]) => ({
		kind,
		i: pointIds[a],
		j: pointIds[b],
	}));
}

async function post(expansion: PairExpansion, kind: ConstraintKind): Promise<void> {
	if (sessionId === null || expansion.pairs.length === 0) {
		return;
	}
	const resp = await client.submitConstraints(sessionId, recordsFrom(expansion, kind));
	const capNote = expansion.capped
		? `selection expanded to ${expansion.total} pairs; sampled ${PAIR_CAP}`
		: null;
	renderVerdicts(verdictPanel, resp.verdicts, capNote);
}

function lassoSelect(polygon: Point[]): number[] {
	return lastFrame === null ? [] : selectInPolygon(lastFrame.coords, polygon);
}

byId<HTMLButtonElement>("btn-new").addEventListener("click", () => {
	newSession().catch((err) => setStatus(String(err), "bad"));
});

byId<HTMLButtonElement>("btn-ml").addEventListener("click", () => {
	setStatus("lasso the points that belong together", "busy");
	firstSelection = null;
	scatter.armLasso((polygon) => {
		const ids = lassoSelect(polygon);
		scatter.setHighlight(ids);
		void post(cliquePairs(ids), "must_link");
	});
});

byId<HTMLButtonElement>("btn-cl").addEventListener("click", () => {
	setStatus("lasso the first group", "busy");
	firstSelection = null;
	scatter.armLasso((polygon) => {
		firstSelection = lassoSelect(polygon);
		scatter.setHighlight(firstSelection);
		setStatus("lasso the second group", "busy");
		scatter.armLasso((second) => {
			const right = lassoSelect(second);
			scatter.setHighlight([...(firstSelection ?? []), ...right]);
			void post(bipartitePairs(firstSelection ?? [], right), "cannot_link");
			firstSelection = null;
		});
	});
});

byId<HTMLButtonElement>("btn-cluster").addEventListener("click", () => {
	if (sessionId === null) {
		return;
	}
	void client
		.cluster(sessionId)
		.then((resp) => {
			scatter.setLabels(resp.cluster.labels);
			renderClusterPanel(clusterPanel, resp);
		})
		.catch((err) => setStatus(String(err), "bad"));
});

byId<HTMLButtonElement>("btn-fit").addEventListener("click", () => scatter.fit());

window.addEventListener("beforeunload", () => {
	if (sessionId !== null) {
		navigator.sendBeacon?.(`${apiBase}/sessions/${sessionId}`);
	}
});

setStatus(`ready · service at ${apiBase}`, "ok");
