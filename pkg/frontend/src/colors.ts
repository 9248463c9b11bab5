/** Categorical cluster palette; noise (-1) renders as neutral gray. */

export const NEUTRAL = "#8899aa";
export const NOISE_COLOR = "#555e66";

const PALETTE = [
	"#4e9cf5",
	"#f58f4e",
	"#5fc46a",
	"#e45d5d",
	"#a77df2",
	"#e2c13f",
	"#4ec9c9",
	"#ef7fc0",
	"#97b135",
	"#7f8ef0",
	"#d98b5f",
	"#56ad8e",
];

export function colorForLabel(label: number | null): string {
	if (label === null) {
		return NEUTRAL;
	}
	if (label < 0) {
		return NOISE_COLOR;
	}
	return PALETTE[label % PALETTE.length];
}
