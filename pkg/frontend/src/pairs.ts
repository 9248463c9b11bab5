/**
 * Lasso-to-pairs expansion.
 *
 * A single must-link lasso becomes the clique over the selected points; two
 * cannot-link lassos become the complete bipartite cross pairs. Expansions
 * are capped at PAIR_CAP records per action, sampling uniformly beyond the
 * cap, and the cap is surfaced to the caller.
 */

export const PAIR_CAP = 50;

export type Pair = [number, number];

export interface PairExpansion {
	pairs: Pair[];
	/** Pair count before capping. */
	total: number;
	capped: boolean;
}

function canonical(a: number, b: number): Pair {
	return a < b ? [a, b] : [b, a];
}

function dedupe(pairs: Pair[]): Pair[] {
	const seen = new Set<string>();
	const out: Pair[] = [];
	for (const [a, b] of pairs) {
		const key = `${a}:${b}`;
		if (!seen.has(key)) {
			seen.add(key);
			out.push([a, b]);
		}
	}
	return out;
}

/** Uniform sample without replacement via a partial Fisher-Yates shuffle. */
function sample<T>(items: T[], count: number, rand: () => number): T[] {
	const pool = items.slice();
	for (let i = 0; i < count; i++) {
		const j = i + Math.floor(rand() * (pool.length - i));
		[pool[i], pool[j]] = [pool[j], pool[i]];
	}
	return pool.slice(0, count);
}

function cap(pairs: Pair[], limit: number, rand: () => number): PairExpansion {
	if (pairs.length <= limit) {
		return { pairs, total: pairs.length, capped: false };
	}
	return { pairs: sample(pairs, limit, rand), total: pairs.length, capped: true };
}

/** All unordered pairs within one selection (must-link semantics). */
export function cliquePairs(
	ids: number[],
	limit: number = PAIR_CAP,
	rand: () => number = Math.random,
): PairExpansion {
	const unique = [...new Set(ids)];
	const pairs: Pair[] = [];
	for (let a = 0; a < unique.length; a++) {
		for (let b = a + 1; b < unique.length; b++) {
			pairs.push(canonical(unique[a], unique[b]));
		}
	}
	return cap(dedupe(pairs), limit, rand);
}

/** All cross pairs between two selections (cannot-link semantics). */
export function bipartitePairs(
	left: number[],
	right: number[],
	limit: number = PAIR_CAP,
	rand: () => number = Math.random,
): PairExpansion {
	const pairs: Pair[] = [];
	for (const a of new Set(left)) {
		for (const b of new Set(right)) {
			if (a !== b) {
				pairs.push(canonical(a, b));
			}
		}
	}
	return cap(dedupe(pairs), limit, rand);
}
