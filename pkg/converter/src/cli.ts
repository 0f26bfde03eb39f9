#!/usr/bin/env node
/**
 * converter <source_dir> <name> <out_dir> [--validate]
 *
 * Reads ind.<name>.{x,tx,allx,y,ty,ally,graph,test.index} from source_dir
 * and writes the bundle directory layout to out_dir.
 */

import { writeBundle } from "./bundle.js";
import { assemble, loadRaw } from "./planetoid.js";
import { validateBundle } from "./validate.js";

export function main(argv: string[]): number {
	const args = argv.filter((a) => a !== "--validate");
	const doValidate = argv.includes("--validate");
	if (args.length !== 3) {
		console.error("usage: converter <source_dir> <name> <out_dir> [--validate]");
		return 2;
	}
	const [sourceDir, name, outDir] = args;
	try {
		const raw = loadRaw(sourceDir, name);
		const dataset = assemble(name, raw);
		writeBundle(dataset, outDir);
		console.log(`wrote ${outDir}: n=${dataset.n} m=${dataset.edges.length} ` +
			`f_in=${dataset.fIn} classes=${dataset.classes}`);
		if (dataset.droppedSelfLoops) {
			console.log(`removed ${dataset.droppedSelfLoops} self-loop entries`);
		}
		if (dataset.droppedDuplicateEdges) {
			console.log(`deduplicated ${dataset.droppedDuplicateEdges} extra edge entries`);
		}
		if (dataset.paddedTestGaps) {
			console.log(`zero-padded ${dataset.paddedTestGaps} disconnected test ids`);
		}
		if (dataset.isolatedNodes) {
			console.log(`note: ${dataset.isolatedNodes} isolated nodes`);
		}
		if (doValidate) {
			const report = validateBundle(outDir);
			for (const line of report.lines) console.log(line);
			if (report.failures) {
				console.error(`${report.failures} field(s) mismatched`);
				return 1;
			}
		}
		return 0;
	} catch (err) {
		console.error(`error: ${(err as Error).message}`);
		return 1;
	}
}

process.exit(main(process.argv.slice(2)));
