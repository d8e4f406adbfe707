/* tslint:disable */
/* eslint-disable */

/**
 * `W_t` over one stream with the bound threshold and the first alarm.
 */
export class Trajectory {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * First alarm after the changepoint, if any.
     */
    readonly alarmTime: number | undefined;
    readonly changepoint: number;
    /**
     * `W_t` for `t = 1..=horizon`; skipped steps are 0.
     */
    readonly stats: Float64Array;
    readonly threshold: number;
    /**
     * `max_j |F⁰(j) − F_c(j)|` between the pre- and post-change spectra.
     */
    readonly tv: number;
}

/**
 * Closed-form threshold for `horizon`, `window` and `alpha`.
 */
export function boundThreshold(horizon: number, window: number, alpha: number): number;

export function powerCurve(threshold: number, rate: number, window: number, points: number): Float64Array;

export function simulate(seed: number, window: number, rate: number, anomaly_share: number, changepoint: number, horizon: number, alpha: number): Trajectory;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_trajectory_free: (a: number, b: number) => void;
    readonly boundThreshold: (a: number, b: number, c: number) => [number, number, number];
    readonly powerCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly trajectory_alarmTime: (a: number) => number;
    readonly trajectory_changepoint: (a: number) => number;
    readonly trajectory_stats: (a: number) => [number, number];
    readonly trajectory_threshold: (a: number) => number;
    readonly trajectory_tv: (a: number) => number;
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
