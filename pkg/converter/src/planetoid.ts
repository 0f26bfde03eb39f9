/**
 * Load the eight per-dataset source files and assemble node features,
 * labels, edges, and the standard split masks.
 *
 * Source layout: ind.<name>.{x,tx,allx,y,ty,ally,graph,test.index}, where
 * x/tx/allx are sparse feature matrices, y/ty/ally are one-hot label
 * arrays, graph is an adjacency dict, and test.index lists the permuted
 * node ids of the test-feature rows.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { NDArray, PyValue, asCSR, loads } from "./pickle.js";

export interface RawDataset {
	x: number[][];
	tx: number[][];
	allx: number[][];
	y: number[][];
	ty: number[][];
	ally: number[][];
	graph: Map<number, number[]>;
	testIndex: number[];
}

export interface AssembledDataset {
	name: string;
	n: number;
	fIn: number;
	classes: number;
	features: Float32Array; // row-major n x fIn
	labels: Int32Array;
	edges: Array<[number, number]>; // tail < head, sorted, deduplicated
	maskTags: string[]; // train | val | test | none per node
	droppedSelfLoops: number;
	droppedDuplicateEdges: number;
	isolatedNodes: number;
	paddedTestGaps: number;
}

const PIECES = ["x", "y", "tx", "ty", "allx", "ally", "graph", "test.index"] as const;

export function sourceFiles(dir: string, name: string): Map<string, string> {
	const files = new Map<string, string>();
	for (const piece of PIECES) {
		files.set(piece, path.join(dir, `ind.${name}.${piece}`));
	}
	return files;
}

export function loadRaw(dir: string, name: string): RawDataset {
	const files = sourceFiles(dir, name);
	const missing = [...files.values()].filter((f) => !fs.existsSync(f));
	if (missing.length) {
		throw new Error(`missing source files: ${missing.join(", ")}`);
	}
	const unpickle = (piece: string): PyValue =>
		loads(fs.readFileSync(files.get(piece)!));

	const matrix = (piece: string): number[][] => toDense(unpickle(piece), piece);
	const labels = (piece: string): number[][] => toDense(unpickle(piece), piece);

	const graphRaw = unpickle("graph");
	if (!(graphRaw instanceof Map)) {
		throw new Error("graph file did not decode to a dict");
	}
	const graph = new Map<number, number[]>();
	for (const [k, v] of graphRaw) {
		graph.set(Number(k), (v as PyValue[]).map((x) => Number(x)));
	}

	const testIndex = fs
		.readFileSync(files.get("test.index")!, "utf8")
		.split(/\s+/)
		.filter((s) => s.length)
		.map((s) => {
			const v = parseInt(s, 10);
			if (!Number.isFinite(v)) throw new Error(`bad test index ${s}`);
			return v;
		});

	return {
		x: matrix("x"),
		tx: matrix("tx"),
		allx: matrix("allx"),
		y: labels("y"),
		ty: labels("ty"),
		ally: labels("ally"),
		graph,
		testIndex,
	};
}

/** Densify either a CSR matrix or an already-dense ndarray. */
function toDense(value: PyValue, piece: string): number[][] {
	if (value instanceof NDArray) {
		if (value.shape.length !== 2) throw new Error(`${piece}: expected a matrix`);
		const [rows, cols] = value.shape;
		const flat = value.toNumbers();
		const out: number[][] = new Array(rows);
		for (let r = 0; r < rows; r++) out[r] = flat.slice(r * cols, (r + 1) * cols);
		return out;
	}
	const csr = asCSR(value);
	const data = csr.data.toNumbers();
	const indices = csr.indices.toNumbers();
	const indptr = csr.indptr.toNumbers();
	const out: number[][] = new Array(csr.rows);
	for (let r = 0; r < csr.rows; r++) {
		const row = new Array<number>(csr.cols).fill(0);
		for (let k = indptr[r]; k < indptr[r + 1]; k++) row[indices[k]] = data[k];
		out[r] = row;
	}
	return out;
}

export function assemble(name: string, raw: RawDataset): AssembledDataset {
	const fIn = raw.allx[0]?.length ?? 0;
	const classes = raw.ally[0]?.length ?? 0;
	if (!fIn || !classes) throw new Error("empty feature or label matrices");
	if (raw.tx.length !== raw.testIndex.length) {
		throw new Error(
			`test.index lists ${raw.testIndex.length} rows but tx holds ${raw.tx.length}`);
	}

	// The test rows were shuffled when the files were published: tx row i
	// belongs at node id testIndex[i]. Stacked after allx, the test block
	// spans a contiguous id range; datasets with disconnected test nodes
	// (gaps in the range) get zero rows for the missing ids.
	const sorted = [...raw.testIndex].sort((a, b) => a - b);
	const minTest = sorted[0];
	const maxTest = sorted[sorted.length - 1];
	if (minTest !== raw.allx.length) {
		throw new Error(
			`test ids start at ${minTest} but the labeled block has ${raw.allx.length} rows`);
	}
	const fullSpan = maxTest - minTest + 1;
	const paddedTestGaps = fullSpan - sorted.length;
	const n = raw.allx.length + fullSpan;

	const features = new Float32Array(n * fIn);
	const labelRows: number[][] = new Array(n);
	const zeroLabel = new Array<number>(classes).fill(0);
	for (let r = 0; r < raw.allx.length; r++) {
		features.set(raw.allx[r].map(Math.fround), r * fIn);
		labelRows[r] = raw.ally[r];
	}
	for (let r = 0; r < fullSpan; r++) labelRows[raw.allx.length + r] = zeroLabel;
	for (let i = 0; i < raw.testIndex.length; i++) {
		const node = raw.testIndex[i];
		features.set(raw.tx[i].map(Math.fround), node * fIn);
		labelRows[node] = raw.ty[i];
	}

	const labels = new Int32Array(n);
	for (let r = 0; r < n; r++) {
		let best = 0;
		for (let c = 1; c < classes; c++) if (labelRows[r][c] > labelRows[r][best]) best = c;
		labels[r] = best;
	}

	// undirected edge set: orient (min, max), drop self-loops, deduplicate
	let selfLoops = 0;
	const seen = new Set<number>();
	const edges: Array<[number, number]> = [];
	let rawPairs = 0;
	for (const [u, neighbors] of raw.graph) {
		for (const v of neighbors) {
			rawPairs++;
			if (u === v) {
				selfLoops++;
				continue;
			}
			if (u < 0 || v < 0 || u >= n || v >= n) {
				throw new Error(`edge endpoint ${u},${v} out of range`);
			}
			const t = Math.min(u, v);
			const h = Math.max(u, v);
			const key = t * n + h;
			if (!seen.has(key)) {
				seen.add(key);
				edges.push([t, h]);
			}
		}
	}
	edges.sort((a, b) => (a[0] - b[0]) || (a[1] - b[1]));
	// raw adjacency lists carry each edge in both directions; duplicates
	// beyond that pairing are what the count below reports
	const droppedDuplicateEdges = rawPairs - selfLoops - 2 * edges.length >= 0
		? rawPairs - selfLoops - 2 * edges.length
		: 0;

	const degree = new Array<number>(n).fill(0);
	for (const [t, h] of edges) {
		degree[t]++;
		degree[h]++;
	}
	const isolatedNodes = degree.filter((d) => d === 0).length;

	// standard split: train = the labeled block, val = the next 500 rows
	// (clamped to the unlabeled block for tiny fixtures), test = test.index
	const maskTags = new Array<string>(n).fill("none");
	for (let r = 0; r < raw.y.length; r++) maskTags[r] = "train";
	const valEnd = Math.min(raw.y.length + 500, raw.allx.length);
	for (let r = raw.y.length; r < valEnd; r++) maskTags[r] = "val";
	for (const node of raw.testIndex) maskTags[node] = "test";

	return {
		name,
		n,
		fIn,
		classes,
		features,
		labels,
		edges,
		maskTags,
		droppedSelfLoops: selfLoops,
		droppedDuplicateEdges,
		isolatedNodes,
		paddedTestGaps,
	};
}
