/* tslint:disable */
/* eslint-disable */

export function directivityCurve(width_over_lambda: number, n: number): Float64Array;

export function fnumberDesign(width_m: number, fc: number, bandwidth: number, c: number, threshold: number, steer_deg: number): Float64Array;

export function psfImage(x_mm: number, z_mm: number, tilt_deg: number, f_number: number, c_beamform: number, dynamic_range_db: number): Uint8Array;

/**
 * Side of the square PSF image, in pixels.
 */
export function psfSize(): number;

export function qpCurve(c_true: number, c_min: number, c_max: number, steps: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly directivityCurve: (a: number, b: number) => [number, number];
    readonly fnumberDesign: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly psfImage: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly psfSize: () => number;
    readonly qpCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
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
