/**
 * Incremental NDJSON decoder for the frame stream.
 *
 * Chunks may split a record anywhere; blank lines are keep-alives and are
 * dropped. Kept free of fetch/DOM so it can be unit-tested directly.
 */
export class NdjsonParser {
	private buffer = "";

	/** Feed one chunk; returns every complete record it closed. */
	push(chunk: string): unknown[] {
		this.buffer += chunk;
		const out: unknown[] = [];
		let newline = this.buffer.indexOf("\n");
		while (newline >= 0) {
			const line = this.buffer.slice(0, newline).trim();
			this.buffer = this.buffer.slice(newline + 1);
			if (line.length > 0) {
				out.push(JSON.parse(line));
			}
			newline = this.buffer.indexOf("\n");
		}
		return out;
	}

	/** Drain a trailing record that arrived without a final newline. */
	flush(): unknown[] {
		const line = this.buffer.trim();
		this.buffer = "";
		return line.length > 0 ? [JSON.parse(line)] : [];
	}
}
