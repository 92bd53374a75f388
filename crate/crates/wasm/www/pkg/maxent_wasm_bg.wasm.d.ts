/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_fitsummary_free: (a: number, b: number) => void;
export const drawSample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
export const fitSample: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
export const fitsummary_accepted: (a: number) => number;
export const fitsummary_attempts: (a: number) => number;
export const fitsummary_coverage: (a: number) => number;
export const fitsummary_fom: (a: number) => number;
export const fitsummary_multipliers: (a: number) => number;
export const fitsummary_pdf: (a: number) => [number, number];
export const fitsummary_spread: (a: number) => [number, number];
export const fitsummary_sqrDelta: (a: number) => [number, number];
export const fitsummary_sqrMu: (a: number) => [number, number];
export const fitsummary_v: (a: number) => [number, number];
export const uniformSqr: (a: number, b: bigint) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
