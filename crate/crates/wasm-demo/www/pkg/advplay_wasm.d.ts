/* tslint:disable */
/* eslint-disable */

/**
 * Attack result flattened for JavaScript.
 */
export class AttackView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    adversarial(): Float32Array;
    probs(): Float32Array;
    readonly elapsedMs: number;
    readonly iterations: number;
    readonly l0: number;
    readonly l2: number;
    readonly predicted: number;
    readonly success: boolean;
}

export class Playground {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `target < 0` means untargeted (FGSM only).
     */
    attack(pixels: Float32Array, algorithm: string, target: number, strength: number, k_percent: number, direction: string): AttackView;
    /**
     * Class probabilities for 784 intensities in `[0, 1]`.
     */
    classify(pixels: Float32Array): Float32Array;
    constructor(model: Uint8Array);
    /**
     * Downsamples a canvas `ImageData` buffer to model input.
     */
    static pixelsFromCanvas(rgba: Uint8Array, width: number, height: number): Float32Array;
    saliency(pixels: Float32Array, target: number, k_percent: number, direction: string): SaliencyView;
}

/**
 * What one saliency round would pick on the current image.
 */
export class SaliencyView {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    fjsmaPair(): Uint32Array;
    /**
     * `[p1, p2]` chosen by the exhaustive search, or empty.
     */
    jsmaPair(): Uint32Array;
    /**
     * Feature indices in FJSMA's apriori set, ascending.
     */
    topK(): Uint32Array;
    readonly fjsmaPairsEvaluated: number;
    readonly gammaLen: number;
    readonly jsmaPairsEvaluated: number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_attackview_free: (a: number, b: number) => void;
    readonly __wbg_playground_free: (a: number, b: number) => void;
    readonly __wbg_saliencyview_free: (a: number, b: number) => void;
    readonly attackview_adversarial: (a: number) => [number, number];
    readonly attackview_elapsedMs: (a: number) => number;
    readonly attackview_iterations: (a: number) => number;
    readonly attackview_l0: (a: number) => number;
    readonly attackview_l2: (a: number) => number;
    readonly attackview_predicted: (a: number) => number;
    readonly attackview_probs: (a: number) => [number, number];
    readonly attackview_success: (a: number) => number;
    readonly playground_attack: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number];
    readonly playground_classify: (a: number, b: number, c: number) => [number, number, number, number];
    readonly playground_js_new: (a: number, b: number) => [number, number, number];
    readonly playground_pixelsFromCanvas: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly playground_saliency: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly saliencyview_fjsmaPair: (a: number) => [number, number];
    readonly saliencyview_fjsmaPairsEvaluated: (a: number) => number;
    readonly saliencyview_gammaLen: (a: number) => number;
    readonly saliencyview_jsmaPair: (a: number) => [number, number];
    readonly saliencyview_jsmaPairsEvaluated: (a: number) => number;
    readonly saliencyview_topK: (a: number) => [number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
