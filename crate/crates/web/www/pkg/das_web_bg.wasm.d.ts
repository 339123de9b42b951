/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const directivityCurve: (a: number, b: number) => [number, number];
export const fnumberDesign: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const psfImage: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const psfSize: () => number;
export const qpCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
