/** Wire types for the ipbc session service (JSON bodies, verbatim fields). */

export interface Frame {
	session_id: string;
	epoch: number;
	coords: [number, number][];
	loss_total: number;
	loss_umap: number;
	loss_ml: number;
	loss_cl: number;
}

export type ConstraintKind = "must_link" | "cannot_link";

export interface ConstraintRecord {
	kind: ConstraintKind;
	i: string;
	j: string;
	weight?: number;
}

export interface Verdict {
	accepted: boolean;
	duplicate?: boolean;
	reason?: string;
	point_id?: string;
	detail?: string;
	existing?: { kind: ConstraintKind; i: string; j: string };
}

export interface ConstraintResponse {
	accepted: number;
	rejected: number;
	verdicts: Verdict[];
}

export interface SessionInfo {
	session_id: string;
	status: "idle" | "optimizing" | "error";
	error: string | null;
	epoch: number;
	n_points: number;
	n_constraints: number;
}

export interface CreateSessionResponse {
	session_id: string;
	n_points: number;
	point_ids: string[];
	feature_names: string[];
	status: string;
	frame: Frame;
}

export interface ExplanationFeature {
	feature: string;
	importance: number;
	rule: string;
}

export interface ClusterExplanation {
	cluster_id: number;
	size: number;
	train_accuracy: number;
	top_features: ExplanationFeature[];
}

export interface ClusterInfo {
	labels: number[];
	eps: number;
	min_pts: number;
	k_found: number;
	n_noise: number;
}

export interface ClusterResponse {
	cluster: ClusterInfo;
	explanations: ClusterExplanation[];
	warning?: string;
}

export interface BlobSpec {
	n_per_cluster: number;
	d: number;
	k: number;
	centers_separation: number;
	noise_scale: number;
	overlap_pair?: [number, number];
	seed?: number;
}

export interface CreateSessionBody {
	dataset: { blobs?: BlobSpec; csv_text?: string; label_column?: string };
	params?: Record<string, number | string>;
}
