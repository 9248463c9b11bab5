/** Side-panel rendering: cluster summary, explanation rules, verdicts. */

import { colorForLabel } from "./colors.js";
import type { ClusterResponse, Verdict } from "./types.js";

function el(tag: string, className: string, text?: string): HTMLElement {
	const node = document.createElement(tag);
	node.className = className;
	if (text !== undefined) {
		node.textContent = text;
	}
	return node;
}

export function renderClusterPanel(container: HTMLElement, resp: ClusterResponse): void {
	container.replaceChildren();
	if (resp.warning) {
		container.appendChild(el("div", "banner warn", resp.warning));
	}
	const summary = el(
		"div",
		"cluster-summary",
		`${resp.cluster.k_found} cluster(s), ${resp.cluster.n_noise} noise point(s), ` +
			`eps ${resp.cluster.eps.toFixed(3)}, min_pts ${resp.cluster.min_pts}`,
	);
	container.appendChild(summary);
	for (const exp of resp.explanations) {
		const card = el("div", "cluster-card");
		const head = el("div", "cluster-head");
		const swatch = el("span", "swatch");
		swatch.style.background = colorForLabel(exp.cluster_id);
		head.appendChild(swatch);
		head.appendChild(
			el(
				"span",
				"",
				`cluster ${exp.cluster_id} · ${exp.size} pts · acc ${(exp.train_accuracy * 100).toFixed(0)}%`,
			),
		);
		card.appendChild(head);
		for (const feat of exp.top_features) {
			const row = el("div", "rule-row");
			row.appendChild(el("code", "rule", feat.rule));
			row.appendChild(el("span", "imp", `${(feat.importance * 100).toFixed(0)}%`));
			card.appendChild(row);
		}
		container.appendChild(card);
	}
}

export function renderVerdicts(container: HTMLElement, verdicts: Verdict[], capNote: string | null): void {
	container.replaceChildren();
	if (capNote !== null) {
		container.appendChild(el("div", "banner warn", capNote));
	}
	const ok = verdicts.filter((v) => v.accepted).length;
	container.appendChild(
		el("div", "verdict-summary", `${ok}/${verdicts.length} records accepted`),
	);
	for (const v of verdicts) {
		if (v.accepted) {
			continue;
		}
		let reason = v.reason ?? "rejected";
		if (v.reason === "conflict" && v.existing) {
			reason = `conflict: pair already ${v.existing.kind} (${v.existing.i}, ${v.existing.j})`;
		} else if (v.reason === "unknown_point") {
			reason = `unknown point ${v.point_id}`;
		} else if (v.detail) {
			reason = `${reason}: ${v.detail}`;
		}
		container.appendChild(el("div", "verdict-row bad", reason));
	}
}

export function renderStatus(container: HTMLElement, text: string, kind: "ok" | "busy" | "bad"): void {
	container.textContent = text;
	container.className = `status ${kind}`;
}
