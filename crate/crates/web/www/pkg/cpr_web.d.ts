/* tslint:disable */
/* eslint-disable */

/**
 * Monte Carlo estimates of `E|z1|...` against the closed form `2(1+t^2)/(1-t)`
 * at `points` values of t spread over [-1, 0].
 */
export function lemma22_curve(points: number, samples: number, seed: number): string;

/**
 * One recovery from `m` phaseless measurements of a random k-sparse signal.
 */
export function recover_demo(n: number, k: number, m: number, epsilon: number, seed: number): string;

/**
 * Ratios `(1/m)|A(X)|_1 / |X|_F` over sampled rank-2, k-row-sparse unit matrices.
 */
export function rip_ratios(n: number, k: number, m: number, samples: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly lemma22_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly recover_demo: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly rip_ratios: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
