/**
 * Compare a converted bundle to the published dataset statistics and the
 * standard split cardinalities. Edge counts are reported, not asserted:
 * community copies of the source files disagree slightly with the
 * published table after the (min, max) deduplication rule.
 */

import * as fs from "node:fs";
import * as path from "node:path";

export interface PublishedStats {
	classes: number;
	nodes: number;
	edges: number;
	features: number;
}

export const PUBLISHED: Record<string, PublishedStats> = {
	cora: { classes: 7, nodes: 2708, edges: 5429, features: 1433 },
	citeseer: { classes: 6, nodes: 3327, edges: 4732, features: 3703 },
	pubmed: { classes: 3, nodes: 19717, edges: 44338, features: 500 },
	chameleon: { classes: 5, nodes: 2277, edges: 36101, features: 2325 },
};

export interface ValidationReport {
	lines: string[];
	failures: number;
	notes: number;
}

export function validateBundle(bundleDir: string): ValidationReport {
	const meta = JSON.parse(
		fs.readFileSync(path.join(bundleDir, "meta.json"), "utf8"));
	const lines: string[] = [];
	let failures = 0;
	let notes = 0;

	const published = PUBLISHED[meta.name];
	if (!published) {
		lines.push(`${meta.name}: no published statistics on record; ` +
			"only internal consistency checked");
	} else {
		const check = (field: string, got: number, want: number): void => {
			if (got === want) {
				lines.push(`${field}: ${got} ok`);
			} else if (field === "edges") {
				lines.push(`${field}: NOTE ${got} != published ${want} ` +
					"(count after self-loop removal and (min,max) dedup)");
				notes++;
			} else {
				lines.push(`${field}: ${got} != ${want} MISMATCH`);
				failures++;
			}
		};
		check("nodes", meta.n, published.nodes);
		check("features", meta.f_in, published.features);
		check("classes", meta.classes, published.classes);
		check("edges", meta.m, published.edges);
	}

	const masks = fs.readFileSync(path.join(bundleDir, "masks.csv"), "utf8")
		.split("\n").filter((s) => s.length);
	const count = (tag: string): number => masks.filter((t) => t === tag).length;
	if (masks.length !== meta.n) {
		lines.push(`masks: ${masks.length} != ${meta.n} MISMATCH`);
		failures++;
	}
	if (published) {
		const wantTrain = 20 * meta.classes;
		for (const [tag, want] of [["train", wantTrain], ["val", 500],
			["test", 1000]] as Array<[string, number]>) {
			const got = count(tag);
			if (got === want) {
				lines.push(`${tag} mask: ${got} ok`);
			} else {
				lines.push(`${tag} mask: ${got} != ${want} MISMATCH`);
				failures++;
			}
		}
	}

	const labels = fs.readFileSync(path.join(bundleDir, "labels.csv"), "utf8")
		.split("\n").filter((s) => s.length);
	if (labels.length !== meta.n) {
		lines.push(`labels: ${labels.length} != ${meta.n} MISMATCH`);
		failures++;
	} else {
		lines.push(`labels: ${labels.length} ok`);
	}

	return { lines, failures, notes };
}
