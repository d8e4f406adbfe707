/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_trajectory_free: (a: number, b: number) => void;
export const boundThreshold: (a: number, b: number, c: number) => [number, number, number];
export const powerCurve: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const trajectory_alarmTime: (a: number) => number;
export const trajectory_changepoint: (a: number) => number;
export const trajectory_stats: (a: number) => [number, number];
export const trajectory_threshold: (a: number) => number;
export const trajectory_tv: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
