/* tslint:disable */
/* eslint-disable */

/**
 * Per-cell predicted class, confidence and top-two margin on a square grid,
 * row-major from the top-left corner.
 */
export class Field {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    confidence(): Float64Array;
    converged(): boolean;
    margin(): Float64Array;
    predicted(): Uint32Array;
    resolution(): number;
}

export function minkowskiBall(c: number, radius: number, segments: number): Float64Array;

export function nearestNeighbors(points: Float64Array, qx: number, qy: number, c: number, k: number): Uint32Array;

export function probabilityField(kind: string, params_json: string, points: Float64Array, labels: Uint32Array, x_min: number, x_max: number, y_min: number, y_max: number, resolution: number, seed: number): Field;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_field_free: (a: number, b: number) => void;
    readonly field_confidence: (a: number) => [number, number];
    readonly field_converged: (a: number) => number;
    readonly field_margin: (a: number) => [number, number];
    readonly field_predicted: (a: number) => [number, number];
    readonly field_resolution: (a: number) => number;
    readonly minkowskiBall: (a: number, b: number, c: number) => [number, number, number, number];
    readonly nearestNeighbors: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly probabilityField: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: number, n: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
