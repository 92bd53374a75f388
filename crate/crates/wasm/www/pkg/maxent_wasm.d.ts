/* tslint:disable */
/* eslint-disable */

export class FitSummary {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly accepted: number;
    readonly attempts: number;
    readonly coverage: number;
    readonly fom: number;
    readonly multipliers: number;
    readonly pdf: Float64Array;
    /**
     * Pointwise spread of the ensemble; empty with one solution.
     */
    readonly spread: Float64Array;
    readonly sqrDelta: Float64Array;
    readonly sqrMu: Float64Array;
    readonly v: Float64Array;
}

/**
 * Draws `n` values from a named benchmark distribution.
 */
export function drawSample(dist: string, n: number, seed: bigint): Float64Array;

/**
 * Fits `values` with the bundled calibration. `symmetric_about` is NaN for
 * no folding.
 */
export function fitSample(values: Float64Array, seed: bigint, solutions: number, symmetric_about: number): FitSummary;

/**
 * SQR deltas of `n` sorted exact uniforms.
 */
export function uniformSqr(n: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_fitsummary_free: (a: number, b: number) => void;
    readonly drawSample: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly fitSample: (a: number, b: number, c: bigint, d: number, e: number) => [number, number, number];
    readonly fitsummary_accepted: (a: number) => number;
    readonly fitsummary_attempts: (a: number) => number;
    readonly fitsummary_coverage: (a: number) => number;
    readonly fitsummary_fom: (a: number) => number;
    readonly fitsummary_multipliers: (a: number) => number;
    readonly fitsummary_pdf: (a: number) => [number, number];
    readonly fitsummary_spread: (a: number) => [number, number];
    readonly fitsummary_sqrDelta: (a: number) => [number, number];
    readonly fitsummary_sqrMu: (a: number) => [number, number];
    readonly fitsummary_v: (a: number) => [number, number];
    readonly uniformSqr: (a: number, b: bigint) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
