/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_picture_free: (a: number, b: number) => void;
export const __wbg_trained_free: (a: number, b: number) => void;
export const picture_height: (a: number) => number;
export const picture_rgba: (a: number) => [number, number];
export const picture_width: (a: number) => number;
export const sampleStrip: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const train: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const trained_summary: (a: number) => [number, number];
export const trained_traceCsv: (a: number) => [number, number];
export const trained_weightMosaic: (a: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
