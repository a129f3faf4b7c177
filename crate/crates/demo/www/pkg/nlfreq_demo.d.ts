/* tslint:disable */
/* eslint-disable */

export class Session {
    free(): void;
    [Symbol.dispose](): void;
    amplitudeSlice(varpi: number, a_min: number, a_max: number, count: number): Float64Array;
    frequencySlice(a_u: number, varpi_min: number, varpi_max: number, count: number): Float64Array;
    static fromExpressions(f: string, h: string, params: string): Session;
    /**
     * Built-in model by name, parameters as `"a1=0.5, a2=1"`.
     */
    constructor(name: string, params: string);
    waveform(varpi: number, a_u: number): Float64Array;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_session_free: (a: number, b: number) => void;
    readonly session_amplitudeSlice: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly session_frequencySlice: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly session_fromExpressions: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number];
    readonly session_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly session_waveform: (a: number, b: number, c: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
