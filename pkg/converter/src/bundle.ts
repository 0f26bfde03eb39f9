/**
 * Write the neutral bundle layout, bit-exactly:
 *
 *   meta.json     name/counts/feature_dtype/has_masks/payload_sha256
 *   edges.csv     "tail,head" per line, 0-based, tail < head, sorted
 *   features.bin  little-endian float32, row-major
 *   labels.csv    one class index per line
 *   masks.csv     train|val|test|none per line
 *
 * payload_sha256 covers the concatenated bytes of edges.csv, features.bin,
 * labels.csv, masks.csv, in that order. Output depends only on the input,
 * so repeat conversions are byte-identical.
 */

import { createHash } from "node:crypto";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { AssembledDataset } from "./planetoid.js";

export function featureBytes(features: Float32Array): Buffer {
	if (os.endianness() === "LE") {
		return Buffer.from(features.buffer, features.byteOffset, features.byteLength);
	}
	const buf = Buffer.alloc(features.length * 4);
	for (let i = 0; i < features.length; i++) buf.writeFloatLE(features[i], i * 4);
	return buf;
}

export function writeBundle(dataset: AssembledDataset, outDir: string): void {
	fs.mkdirSync(outDir, { recursive: true });

	const edgesCsv = Buffer.from(
		dataset.edges.map(([t, h]) => `${t},${h}\n`).join(""), "utf8");
	const featsBin = featureBytes(dataset.features);
	const labelsCsv = Buffer.from(
		Array.from(dataset.labels, (v) => `${v}\n`).join(""), "utf8");
	const masksCsv = Buffer.from(dataset.maskTags.map((t) => `${t}\n`).join(""), "utf8");

	const sha = createHash("sha256");
	for (const part of [edgesCsv, featsBin, labelsCsv, masksCsv]) sha.update(part);

	const meta = {
		name: dataset.name,
		n: dataset.n,
		m: dataset.edges.length,
		f_in: dataset.fIn,
		classes: dataset.classes,
		feature_dtype: "f32",
		has_masks: true,
		payload_sha256: sha.digest("hex"),
	};

	fs.writeFileSync(path.join(outDir, "edges.csv"), edgesCsv);
	fs.writeFileSync(path.join(outDir, "features.bin"), featsBin);
	fs.writeFileSync(path.join(outDir, "labels.csv"), labelsCsv);
	fs.writeFileSync(path.join(outDir, "masks.csv"), masksCsv);
	fs.writeFileSync(path.join(outDir, "meta.json"),
		JSON.stringify(meta, null, 2) + "\n");
}
