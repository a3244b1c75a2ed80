/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_attackview_free: (a: number, b: number) => void;
export const __wbg_playground_free: (a: number, b: number) => void;
export const __wbg_saliencyview_free: (a: number, b: number) => void;
export const attackview_adversarial: (a: number) => [number, number];
export const attackview_elapsedMs: (a: number) => number;
export const attackview_iterations: (a: number) => number;
export const attackview_l0: (a: number) => number;
export const attackview_l2: (a: number) => number;
export const attackview_predicted: (a: number) => number;
export const attackview_probs: (a: number) => [number, number];
export const attackview_success: (a: number) => number;
export const playground_attack: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
export const playground_classify: (a: number, b: number, c: number) => [number, number, number, number];
export const playground_js_new: (a: number, b: number) => [number, number, number];
export const playground_pixelsFromCanvas: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const playground_saliency: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const saliencyview_fjsmaPair: (a: number) => [number, number];
export const saliencyview_fjsmaPairsEvaluated: (a: number) => number;
export const saliencyview_gammaLen: (a: number) => number;
export const saliencyview_jsmaPair: (a: number) => [number, number];
export const saliencyview_jsmaPairsEvaluated: (a: number) => number;
export const saliencyview_topK: (a: number) => [number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
