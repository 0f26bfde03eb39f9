/**
 * Minimal pickle reader covering the opcode subset that the citation-network
 * source files (and their modern re-pickles) actually use: protocols 0-4,
 * numpy arrays and dtypes, scipy CSR matrices, and collections.defaultdict.
 *
 * Unknown globals still unpickle into generic object shells; only the
 * factories the converter depends on get first-class decoding.
 */

export type PyValue =
	| null
	| boolean
	| number
	| bigint
	| string
	| Buffer
	| PyValue[]
	| PyTuple
	| Map<PyKey, PyValue>
	| GlobalRef
	| NPDtype
	| NDArray
	| PyObject;

export type PyKey = string | number | bigint | boolean | null;

export class PyTuple {
	constructor(public items: PyValue[]) {}
}

export class GlobalRef {
	readonly module: string;
	readonly name: string;
	constructor(module: string, name: string) {
		// normalize the historical module spellings so lookups are uniform
		this.module = module
			.replace(/^__builtin__$/, "builtins")
			.replace(/^copy_reg$/, "copyreg")
			.replace(/^numpy\.core\./, "numpy._core.");
		this.name = name;
	}
	get qualified(): string {
		return `${this.module}.${this.name}`;
	}
}

export class NPDtype {
	byteorder = "=";
	constructor(public descr: string) {}
	get kind(): string {
		return this.descr[0];
	}
	get itemsize(): number {
		const n = parseInt(this.descr.slice(1), 10);
		if (!Number.isFinite(n)) throw new Error(`unsupported dtype ${this.descr}`);
		return n;
	}
	get littleEndian(): boolean {
		return this.byteorder !== ">";
	}
}

export class NDArray {
	shape: number[] = [0];
	dtype: NPDtype | null = null;
	fortran = false;
	data: Buffer = Buffer.alloc(0);

	get size(): number {
		return this.shape.reduce((a, b) => a * b, 1);
	}

	/** Flat values in C (row-major) order, as JS numbers. */
	toNumbers(): number[] {
		const dt = this.dtype;
		if (!dt) throw new Error("array has no dtype");
		const n = this.size;
		const out = new Array<number>(n);
		const view = new DataView(this.data.buffer, this.data.byteOffset, this.data.length);
		const le = dt.littleEndian;
		const sz = dt.itemsize;
		const read = (off: number): number => {
			switch (dt.descr) {
				case "f4": return view.getFloat32(off, le);
				case "f8": return view.getFloat64(off, le);
				case "i1": return view.getInt8(off);
				case "u1":
				case "b1": return view.getUint8(off);
				case "i2": return view.getInt16(off, le);
				case "u2": return view.getUint16(off, le);
				case "i4": return view.getInt32(off, le);
				case "u4": return view.getUint32(off, le);
				case "i8": return Number(view.getBigInt64(off, le));
				case "u8": return Number(view.getBigUint64(off, le));
				default: throw new Error(`unsupported dtype ${dt.descr}`);
			}
		};
		if (this.fortran && this.shape.length === 2) {
			const [rows, cols] = this.shape;
			for (let r = 0; r < rows; r++)
				for (let c = 0; c < cols; c++) out[r * cols + c] = read((c * rows + r) * sz);
		} else {
			for (let i = 0; i < n; i++) out[i] = read(i * sz);
		}
		return out;
	}
}

export class PyObject {
	attrs = new Map<string, PyValue>();
	constructor(public cls: GlobalRef, public args: PyValue[] = []) {}
}

/** scipy CSR matrix view over a generic unpickled object shell. */
export interface CSRMatrix {
	rows: number;
	cols: number;
	data: NDArray;
	indices: NDArray;
	indptr: NDArray;
}

const CSR_CLASSES = new Set([
	"scipy.sparse._csr.csr_matrix",
	"scipy.sparse.csr.csr_matrix",
	"scipy.sparse._csr.csr_array",
]);

export function asCSR(value: PyValue): CSRMatrix {
	if (!(value instanceof PyObject) || !CSR_CLASSES.has(value.cls.qualified)) {
		throw new Error(`expected a CSR matrix, got ${describe(value)}`);
	}
	const shape = value.attrs.get("_shape") ?? value.attrs.get("shape");
	if (!(shape instanceof PyTuple)) throw new Error("CSR object has no shape");
	const [rows, cols] = shape.items as number[];
	const pull = (key: string): NDArray => {
		const arr = value.attrs.get(key);
		if (!(arr instanceof NDArray)) throw new Error(`CSR object missing ${key}`);
		return arr;
	};
	return { rows, cols, data: pull("data"), indices: pull("indices"), indptr: pull("indptr") };
}

export function describe(v: PyValue): string {
	if (v instanceof PyObject) return `instance of ${v.cls.qualified}`;
	if (v instanceof NDArray) return `ndarray(${v.shape.join("x")})`;
	if (v instanceof PyTuple) return `tuple[${v.items.length}]`;
	if (v === null) return "None";
	return typeof v;
}

function latin1Encode(s: string): Buffer {
	const out = Buffer.alloc(s.length);
	for (let i = 0; i < s.length; i++) {
		const code = s.charCodeAt(i);
		if (code > 0xff) throw new Error("non-latin1 character in byte string");
		out[i] = code;
	}
	return out;
}

function toBuffer(v: PyValue): Buffer {
	if (Buffer.isBuffer(v)) return v;
	if (typeof v === "string") return latin1Encode(v);
	if (Array.isArray(v)) throw new Error("object arrays are not supported");
	throw new Error(`cannot interpret ${describe(v)} as bytes`);
}

/** The callables REDUCE/NEWOBJ may name, mapped to constructions we model. */
function applyCallable(fn: PyValue, args: PyValue[]): PyValue {
	if (!(fn instanceof GlobalRef)) throw new Error(`cannot call ${describe(fn)}`);
	switch (fn.qualified) {
		case "_codecs.encode": {
			const [text, codec] = args;
			if (codec !== "latin1" && codec !== "latin-1") {
				throw new Error(`unsupported byte codec ${String(codec)}`);
			}
			return latin1Encode(text as string);
		}
		case "numpy._core.multiarray._reconstruct":
			return new NDArray();
		case "numpy._core.numeric._frombuffer": {
			const arr = new NDArray();
			arr.data = toBuffer(args[0]);
			arr.dtype = args[1] as NPDtype;
			arr.shape = (args[2] as PyTuple).items as number[];
			arr.fortran = args[3] === "F";
			return arr;
		}
		case "numpy.dtype":
		case "numpy._core.multiarray.dtype":
			return new NPDtype(args[0] as string);
		case "numpy._core.multiarray.scalar": {
			const arr = new NDArray();
			arr.dtype = args[0] as NPDtype;
			arr.shape = [];
			arr.data = toBuffer(args[1]);
			return arr.toNumbers()[0];
		}
		case "collections.defaultdict":
		case "collections.OrderedDict":
			return new Map<PyKey, PyValue>();
		case "builtins.list":
			return args.length ? (args[0] as PyValue[]) : [];
		case "builtins.dict":
			return new Map<PyKey, PyValue>();
		case "builtins.set":
		case "builtins.frozenset":
			return args.length ? (args[0] as PyValue[]) : [];
		case "builtins.bytearray":
			return args.length ? toBuffer(args[0]) : Buffer.alloc(0);
		case "copyreg._reconstructor": {
			const cls = args[0];
			if (cls instanceof GlobalRef) return new PyObject(cls);
			throw new Error("_reconstructor with a non-class argument");
		}
		default:
			return new PyObject(fn, args);
	}
}

function applyBuild(obj: PyValue, state: PyValue): void {
	if (obj instanceof NDArray) {
		// state = (version, shape, dtype, fortran, data)
		const items = (state as PyTuple).items;
		obj.shape = (items[1] as PyTuple).items as number[];
		obj.dtype = items[2] as NPDtype;
		obj.fortran = items[3] === true;
		obj.data = toBuffer(items[4]);
		return;
	}
	if (obj instanceof NPDtype) {
		const items = (state as PyTuple).items;
		obj.byteorder = items[1] as string;
		return;
	}
	if (obj instanceof PyObject) {
		let dictState: PyValue = state;
		if (state instanceof PyTuple && state.items.length === 2) {
			// (dict state, slots state); merge both when present
			const [d, slots] = state.items;
			dictState = d;
			if (slots instanceof Map) {
				for (const [k, v] of slots) obj.attrs.set(String(k), v);
			}
		}
		if (dictState instanceof Map) {
			for (const [k, v] of dictState) obj.attrs.set(String(k), v);
		} else if (dictState !== null) {
			obj.attrs.set("__state__", dictState);
		}
		return;
	}
	throw new Error(`BUILD on unsupported object ${describe(obj)}`);
}

export function loads(buf: Buffer): PyValue {
	const stack: PyValue[] = [];
	const marks: number[] = [];
	const memo = new Map<number, PyValue>();
	let pos = 0;

	const need = (n: number): void => {
		if (pos + n > buf.length) throw new Error("pickle truncated");
	};
	const u8 = (): number => { need(1); return buf[pos++]; };
	const u16 = (): number => { need(2); const v = buf.readUInt16LE(pos); pos += 2; return v; };
	const i32 = (): number => { need(4); const v = buf.readInt32LE(pos); pos += 4; return v; };
	const u32 = (): number => { need(4); const v = buf.readUInt32LE(pos); pos += 4; return v; };
	const u64 = (): number => {
		need(8);
		const v = buf.readBigUInt64LE(pos);
		pos += 8;
		if (v > BigInt(Number.MAX_SAFE_INTEGER)) throw new Error("length overflow");
		return Number(v);
	};
	const bytes = (n: number): Buffer => { need(n); const b = buf.subarray(pos, pos + n); pos += n; return b; };
	const line = (): string => {
		const nl = buf.indexOf(0x0a, pos);
		if (nl < 0) throw new Error("pickle truncated (missing newline)");
		const s = buf.toString("latin1", pos, nl);
		pos = nl + 1;
		return s;
	};
	const pop = (): PyValue => {
		if (!stack.length) throw new Error("pickle stack underflow");
		return stack.pop() as PyValue;
	};
	const popMark = (): PyValue[] => {
		const at = marks.pop();
		if (at === undefined) throw new Error("pickle mark underflow");
		return stack.splice(at);
	};
	const longFromBytes = (raw: Buffer): number | bigint => {
		if (raw.length === 0) return 0;
		let v = 0n;
		for (let i = raw.length - 1; i >= 0; i--) v = (v << 8n) | BigInt(raw[i]);
		if (raw[raw.length - 1] & 0x80) v -= 1n << BigInt(8 * raw.length);
		const asNum = Number(v);
		return Number.isSafeInteger(asNum) ? asNum : v;
	};
	const setItems = (target: PyValue, pairs: PyValue[]): void => {
		if (!(target instanceof Map)) throw new Error("SETITEMS on a non-dict");
		for (let i = 0; i < pairs.length; i += 2) target.set(pairs[i] as PyKey, pairs[i + 1]);
	};

	for (;;) {
		const op = u8();
		switch (op) {
			case 0x80: u8(); break;                       // PROTO
			case 0x95: bytes(8); break;                   // FRAME
			case 0x28: marks.push(stack.length); break;   // MARK (
			case 0x30: pop(); break;                      // POP 0
			case 0x31: popMark(); break;                  // POP_MARK 1
			case 0x32: stack.push(stack[stack.length - 1]); break; // DUP 2

			case 0x4e: stack.push(null); break;           // NONE N
			case 0x88: stack.push(true); break;           // NEWTRUE
			case 0x89: stack.push(false); break;          // NEWFALSE

			case 0x49: {                                  // INT (text) I
				const s = line();
				if (s === "01") stack.push(true);
				else if (s === "00") stack.push(false);
				else stack.push(parseInt(s, 10));
				break;
			}
			case 0x4c: {                                  // LONG (text) L
				const s = line().replace(/L$/, "");
				const v = BigInt(s);
				const n = Number(v);
				stack.push(Number.isSafeInteger(n) ? n : v);
				break;
			}
			case 0x4a: stack.push(i32()); break;          // BININT J
			case 0x4b: stack.push(u8()); break;           // BININT1 K
			case 0x4d: stack.push(u16()); break;          // BININT2 M
			case 0x8a: stack.push(longFromBytes(bytes(u8()))); break;   // LONG1
			case 0x8b: stack.push(longFromBytes(bytes(u32()))); break;  // LONG4

			case 0x46: stack.push(parseFloat(line())); break;           // FLOAT F
			case 0x47: {                                  // BINFLOAT G (big-endian!)
				need(8);
				const v = buf.readDoubleBE(pos);
				pos += 8;
				stack.push(v);
				break;
			}

			case 0x53: {                                  // STRING (text) S
				const s = line();
				const inner = s.replace(/^['"]|['"]$/g, "");
				stack.push(latin1Encode(inner.replace(/\\x([0-9a-fA-F]{2})/g,
					(_, h) => String.fromCharCode(parseInt(h, 16)))
					.replace(/\\n/g, "\n").replace(/\\t/g, "\t")
					.replace(/\\\\/g, "\\")));
				break;
			}
			case 0x55: stack.push(bytes(u8())); break;    // SHORT_BINSTRING U (py2 str)
			case 0x54: stack.push(bytes(u32())); break;   // BINSTRING T

			case 0x58: stack.push(bytes(u32()).toString("utf8")); break;     // BINUNICODE X
			case 0x8c: stack.push(bytes(u8()).toString("utf8")); break;      // SHORT_BINUNICODE
			case 0x8d: stack.push(bytes(u64()).toString("utf8")); break;     // BINUNICODE8
			case 0x56: stack.push(line()); break;                            // UNICODE (text) V

			case 0x42: stack.push(Buffer.from(bytes(u32()))); break;         // BINBYTES B
			case 0x43: stack.push(Buffer.from(bytes(u8()))); break;          // SHORT_BINBYTES C
			case 0x8e: stack.push(Buffer.from(bytes(u64()))); break;         // BINBYTES8

			case 0x29: stack.push(new PyTuple([])); break;                   // EMPTY_TUPLE )
			case 0x74: stack.push(new PyTuple(popMark())); break;            // TUPLE t
			case 0x85: stack.push(new PyTuple([pop()])); break;              // TUPLE1
			case 0x86: { const b = pop(), a = pop(); stack.push(new PyTuple([a, b])); break; } // TUPLE2
			case 0x87: { const c = pop(), b = pop(), a = pop(); stack.push(new PyTuple([a, b, c])); break; } // TUPLE3

			case 0x5d: stack.push([]); break;             // EMPTY_LIST ]
			case 0x6c: stack.push(popMark()); break;      // LIST l
			case 0x61: {                                  // APPEND a
				const v = pop();
				(stack[stack.length - 1] as PyValue[]).push(v);
				break;
			}
			case 0x65: {                                  // APPENDS e
				const items = popMark();
				(stack[stack.length - 1] as PyValue[]).push(...items);
				break;
			}

			case 0x7d: stack.push(new Map<PyKey, PyValue>()); break;  // EMPTY_DICT }
			case 0x64: {                                  // DICT d
				const pairs = popMark();
				const m = new Map<PyKey, PyValue>();
				setItems(m, pairs);
				stack.push(m);
				break;
			}
			case 0x73: {                                  // SETITEM s
				const v = pop(), k = pop();
				setItems(stack[stack.length - 1], [k, v]);
				break;
			}
			case 0x75: {                                  // SETITEMS u
				const pairs = popMark();                   // pop before indexing the target
				setItems(stack[stack.length - 1], pairs);
				break;
			}

			case 0x63: {                                  // GLOBAL c
				const module = line();
				const name = line();
				stack.push(new GlobalRef(module, name));
				break;
			}
			case 0x93: {                                  // STACK_GLOBAL
				const name = pop(), module = pop();
				stack.push(new GlobalRef(module as string, name as string));
				break;
			}

			case 0x52: {                                  // REDUCE R
				const args = pop(), fn = pop();
				stack.push(applyCallable(fn, (args as PyTuple).items));
				break;
			}
			case 0x81: {                                  // NEWOBJ
				const args = pop(), cls = pop();
				stack.push(applyCallable(cls, (args as PyTuple).items));
				break;
			}
			case 0x92: {                                  // NEWOBJ_EX
				pop();                                     // kwargs (unused)
				const args = pop(), cls = pop();
				stack.push(applyCallable(cls, (args as PyTuple).items));
				break;
			}
			case 0x62: {                                  // BUILD b
				const state = pop();
				applyBuild(stack[stack.length - 1], state);
				break;
			}

			case 0x71: memo.set(u8(), stack[stack.length - 1]); break;       // BINPUT q
			case 0x72: memo.set(u32(), stack[stack.length - 1]); break;      // LONG_BINPUT r
			case 0x94: memo.set(memo.size, stack[stack.length - 1]); break;  // MEMOIZE
			case 0x70: memo.set(parseInt(line(), 10), stack[stack.length - 1]); break; // PUT p
			case 0x68: {                                  // BINGET h
				const v = memo.get(u8());
				if (v === undefined) throw new Error("memo miss");
				stack.push(v);
				break;
			}
			case 0x6a: {                                  // LONG_BINGET j
				const v = memo.get(u32());
				if (v === undefined) throw new Error("memo miss");
				stack.push(v);
				break;
			}
			case 0x67: {                                  // GET g
				const v = memo.get(parseInt(line(), 10));
				if (v === undefined) throw new Error("memo miss");
				stack.push(v);
				break;
			}

			case 0x2e:                                    // STOP .
				return pop();

			default:
				throw new Error(`unsupported pickle opcode 0x${op.toString(16)} at ${pos - 1}`);
		}
	}
}
