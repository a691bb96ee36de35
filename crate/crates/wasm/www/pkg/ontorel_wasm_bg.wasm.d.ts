/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_field_free: (a: number, b: number) => void;
export const field_confidence: (a: number) => [number, number];
export const field_converged: (a: number) => number;
export const field_margin: (a: number) => [number, number];
export const field_predicted: (a: number) => [number, number];
export const field_resolution: (a: number) => number;
export const minkowskiBall: (a: number, b: number, c: number) => [number, number, number, number];
export const nearestNeighbors: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const probabilityField: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number, k: number, l: number, m: number, n: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
