/* tslint:disable */
/* eslint-disable */

export function calibratedParams(t_k: number): string;

export function decaySweep(t_k: number, t1: number, t2: number): string;

export function g2Trace(t_k: number, omega_r_ghz: number, t1: number, t2: number): string;

export function simulateLineshape(s_ghz: number, lambda_j_hz: number, sigma_j_ghz: number, tau_sd_ns: number, n_traj: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly calibratedParams: (a: number) => [number, number, number, number];
    readonly decaySweep: (a: number, b: number, c: number) => [number, number, number, number];
    readonly g2Trace: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulateLineshape: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
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
