/** Typed fetch client for the session service; frame streaming via NDJSON. */

import { NdjsonParser } from "./ndjson.js";
import type {
	ClusterResponse,
	ConstraintRecord,
	ConstraintResponse,
	CreateSessionBody,
	CreateSessionResponse,
	Frame,
	SessionInfo,
} from "./types.js";

export interface StreamOptions {
	follow?: boolean;
	signal?: AbortSignal;
}

export class ApiError extends Error {
	constructor(
		readonly status: number,
		readonly detail: string,
	) {
		super(`HTTP ${status}: ${detail}`);
	}
}

async function asJson<T>(resp: Response): Promise<T> {
	if (!resp.ok) {
		let detail = resp.statusText;
		try {
			const body = (await resp.json()) as { detail?: string };
			if (body.detail) {
				detail = body.detail;
			}
		} catch {
			// keep the status text
		}
		throw new ApiError(resp.status, detail);
	}
	return (await resp.json()) as T;
}

export class IpbcClient {
	constructor(readonly baseUrl: string) {}

	private url(path: string): string {
		return this.baseUrl.replace(/\/$/, "") + path;
	}

	createSession(body: CreateSessionBody): Promise<CreateSessionResponse> {
		return fetch(this.url("/sessions"), {
			method: "POST",
			headers: { "Content-Type": "application/json" },
			body: JSON.stringify(body),
		}).then((r) => asJson<CreateSessionResponse>(r));
	}

	getSession(id: string): Promise<SessionInfo> {
		return fetch(this.url(`/sessions/${id}`)).then((r) => asJson<SessionInfo>(r));
	}

	submitConstraints(
		id: string,
		records: ConstraintRecord[],
	): Promise<ConstraintResponse> {
		return fetch(this.url(`/sessions/${id}/constraints`), {
			method: "POST",
			headers: { "Content-Type": "application/json" },
			body: JSON.stringify(records),
		}).then((r) => asJson<ConstraintResponse>(r));
	}

	cluster(id: string, opts: { eps?: number; min_pts?: number } = {}): Promise<ClusterResponse> {
		return fetch(this.url(`/sessions/${id}/cluster`), {
			method: "POST",
			headers: { "Content-Type": "application/json" },
			body: JSON.stringify(opts),
		}).then((r) => asJson<ClusterResponse>(r));
	}

	async deleteSession(id: string): Promise<void> {
		await fetch(this.url(`/sessions/${id}`), { method: "DELETE" });
	}

	/**
	 * Subscribe to the frame stream; resolves when the stream ends.
	 * With follow=true the stream only ends on abort or session deletion.
	 */
	async streamFrames(
		id: string,
		onFrame: (frame: Frame) => void,
		opts: StreamOptions = {},
	): Promise<void> {
		const follow = opts.follow ?? true;
		const resp = await fetch(
			this.url(`/sessions/${id}/frames?follow=${follow}`),
			{ signal: opts.signal },
		);
		if (!resp.ok || resp.body === null) {
			throw new ApiError(resp.status, "frame stream unavailable");
		}
		const reader = resp.body.getReader();
		const decoder = new TextDecoder();
		const parser = new NdjsonParser();
		for (;;) {
			const { done, value } = await reader.read();
			if (done) {
				break;
			}
			for (const record of parser.push(decoder.decode(value, { stream: true }))) {
				onFrame(record as Frame);
			}
		}
		for (const record of parser.flush()) {
			onFrame(record as Frame);
		}
	}
}
