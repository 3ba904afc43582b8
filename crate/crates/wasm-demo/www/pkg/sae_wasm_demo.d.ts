/* tslint:disable */
/* eslint-disable */

/**
 * RGBA image handed to JavaScript.
 */
export class Picture {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    rgba(): Uint8Array;
    readonly height: number;
    readonly width: number;
}

/**
 * A trained model kept alive on the JavaScript side.
 */
export class Trained {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    summary(): string;
    traceCsv(): string;
    /**
     * Operation 3: first-layer weight tiles.
     */
    weightMosaic(): Picture;
}

/**
 * Operation 1: a strip of synthetic samples of one class.
 */
export function sampleStrip(_class: number, count: number, side: number, noise: number, seed: number): Picture;

/**
 * Operation 2: train on a fresh synthetic corpus.
 */
export function train(side: number, samples_per_class: number, noise: number, hidden1: number, hidden2: number, pretrain_epochs: number, finetune_epochs: number, seed: number): Trained;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_picture_free: (a: number, b: number) => void;
    readonly __wbg_trained_free: (a: number, b: number) => void;
    readonly picture_height: (a: number) => number;
    readonly picture_rgba: (a: number) => [number, number];
    readonly picture_width: (a: number) => number;
    readonly sampleStrip: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly train: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly trained_summary: (a: number) => [number, number];
    readonly trained_traceCsv: (a: number) => [number, number];
    readonly trained_weightMosaic: (a: number) => [number, number, number];
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
