/* tslint:disable */
/* eslint-disable */

/**
 * Returns `[fidelity, duration_ns]`.
 */
export function cphasePoint(g_ge_mhz: number, lifetime_us: number, delta_ghz: number, grid_n: number): Float64Array;

export function rabiCurve(g_mhz: number, detuning_mhz: number, n: number, t_end_ns: number, points: number): Float64Array;

export function transferCurve(g_mhz: number, lifetime_us: number, step_ns: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cphasePoint: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly rabiCurve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly transferCurve: (a: number, b: number, c: number) => [number, number, number, number];
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
