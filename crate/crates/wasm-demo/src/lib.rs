//! WebAssembly bindings for the browser demo in `www/`.
//!
//! The page loads a model file, lets the user draw a digit, and calls three
//! operations: `classify`, `attack` and `saliency`. Each has a plain Rust
//! counterpart on [`Playground`] so it can be tested natively.

use advplay_core::attacks::{select_pair_apriori, select_pair_exhaustive, select_top_k, PairSelection, SearchSpace};
use advplay_core::nn::{decode_model, IMAGE_SIDE, NUM_CLASSES, NUM_FEATURES};
use advplay_core::{run_attack, Algorithm, AttackOutcome, AttackSpec, Classifier, Direction, Error, Image, Network};
use wasm_bindgen::prelude::*;

pub type Result<T> = std::result::Result<T, Error>;

/// Box-filters an RGBA canvas down to 28x28 intensities using the alpha
/// channel, so strokes drawn on a transparent canvas read as ink.
pub fn pixels_from_rgba(rgba: &[u8], width: usize, height: usize) -> Result<Vec<f32>> {
    if width < IMAGE_SIDE || height < IMAGE_SIDE || rgba.len() != width * height * 4 {
        return Err(Error::Argument(format!(
            "expected an RGBA buffer of at least 28x28, got {} bytes for {width}x{height}",
            rgba.len()
        )));
    }
    let mut out = vec![0.0f32; NUM_FEATURES];
    for (cell, v) in out.iter_mut().enumerate() {
        let (cy, cx) = (cell / IMAGE_SIDE, cell % IMAGE_SIDE);
        let (y0, y1) = (cy * height / IMAGE_SIDE, (cy + 1) * height / IMAGE_SIDE);
        let (x0, x1) = (cx * width / IMAGE_SIDE, (cx + 1) * width / IMAGE_SIDE);
        let mut sum = 0u64;
        for y in y0..y1 {
            for x in x0..x1 {
                sum += u64::from(rgba[(y * width + x) * 4 + 3]);
            }
        }
        *v = sum as f32 / (((y1 - y0) * (x1 - x0)) as f32 * 255.0);
    }
    Ok(out)
}

/// What one saliency round would pick on the current image.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct SaliencyView {
    gamma_len: usize,
    top_k: Vec<u32>,
    jsma_pair: Option<PairSelection>,
    jsma_pairs_evaluated: u64,
    fjsma_pair: Option<PairSelection>,
    fjsma_pairs_evaluated: u64,
}

fn pair_indices(p: Option<PairSelection>) -> Vec<u32> {
    p.map(|p| vec![p.p1 as u32, p.p2 as u32]).unwrap_or_default()
}

#[wasm_bindgen]
impl SaliencyView {
    #[wasm_bindgen(getter, js_name = gammaLen)]
    pub fn gamma_len(&self) -> usize {
        self.gamma_len
    }

    /// Feature indices in FJSMA's apriori set, ascending.
    #[wasm_bindgen(js_name = topK)]
    pub fn top_k(&self) -> Vec<u32> {
        self.top_k.clone()
    }

    /// `[p1, p2]` chosen by the exhaustive search, or empty.
    #[wasm_bindgen(js_name = jsmaPair)]
    pub fn jsma_pair(&self) -> Vec<u32> {
        pair_indices(self.jsma_pair)
    }

    #[wasm_bindgen(js_name = fjsmaPair)]
    pub fn fjsma_pair(&self) -> Vec<u32> {
        pair_indices(self.fjsma_pair)
    }

    #[wasm_bindgen(getter, js_name = jsmaPairsEvaluated)]
    pub fn jsma_pairs_evaluated(&self) -> f64 {
        self.jsma_pairs_evaluated as f64
    }

    #[wasm_bindgen(getter, js_name = fjsmaPairsEvaluated)]
    pub fn fjsma_pairs_evaluated(&self) -> f64 {
        self.fjsma_pairs_evaluated as f64
    }
}

/// Attack result flattened for JavaScript.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct AttackView {
    outcome: AttackOutcome,
}

#[wasm_bindgen]
impl AttackView {
    pub fn adversarial(&self) -> Vec<f32> {
        self.outcome.adversarial.pixels().to_vec()
    }

    pub fn probs(&self) -> Vec<f32> {
        self.outcome.adversarial_probs.0.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn predicted(&self) -> usize {
        self.outcome.predicted
    }

    #[wasm_bindgen(getter)]
    pub fn success(&self) -> bool {
        self.outcome.success
    }

    #[wasm_bindgen(getter)]
    pub fn l0(&self) -> usize {
        self.outcome.l0
    }

    #[wasm_bindgen(getter)]
    pub fn l2(&self) -> f64 {
        self.outcome.l2
    }

    #[wasm_bindgen(getter)]
    pub fn iterations(&self) -> usize {
        self.outcome.iterations
    }

    #[wasm_bindgen(getter, js_name = elapsedMs)]
    pub fn elapsed_ms(&self) -> f64 {
        self.outcome.elapsed_seconds * 1000.0
    }
}

impl AttackView {
    pub fn outcome(&self) -> &AttackOutcome {
        &self.outcome
    }
}

#[wasm_bindgen]
pub struct Playground {
    net: Network,
}

impl Playground {
    pub fn new(net: Network) -> Self {
        Playground { net }
    }

    pub fn from_model_bytes(bytes: &[u8]) -> Result<Self> {
        Ok(Playground::new(decode_model(bytes)?))
    }

    pub fn classify_pixels(&self, pixels: &[f32]) -> Result<Vec<f32>> {
        Ok(self.net.forward(&Image::new(pixels.to_vec())?)?.0)
    }

    /// `target` is ignored for FGSM when `None` (untargeted); `k_percent`
    /// only matters for FJSMA.
    pub fn run(
        &self,
        pixels: &[f32],
        algorithm: Algorithm,
        target: Option<usize>,
        strength: f32,
        k_percent: f32,
        direction: Direction,
    ) -> Result<AttackView> {
        let spec = match algorithm {
            Algorithm::Fgsm => AttackSpec::fgsm(strength, target),
            Algorithm::Jsma | Algorithm::Fjsma => {
                let t = target.ok_or_else(|| Error::Argument("saliency attacks need a target class".into()))?;
                let spec = if algorithm == Algorithm::Jsma {
                    AttackSpec::jsma(t, strength)
                } else {
                    AttackSpec::fjsma(t, strength, k_percent)
                };
                spec.with_direction(direction)
            }
        };
        let outcome = run_attack(&self.net, &Image::new(pixels.to_vec())?, &spec)?;
        Ok(AttackView { outcome })
    }

    pub fn saliency_view(
        &self,
        pixels: &[f32],
        target: usize,
        k_percent: f32,
        direction: Direction,
    ) -> Result<SaliencyView> {
        if target >= NUM_CLASSES {
            return Err(Error::Argument(format!("target {target} is outside 0..{NUM_CLASSES}")));
        }
        let spec = AttackSpec::fjsma(target, 100.0, k_percent);
        spec.validate()?;
        let image = Image::new(pixels.to_vec())?;
        let jac = self.net.jacobian(&image)?;
        let gamma = SearchSpace::for_image(image.pixels(), direction);
        let k = spec.apriori_k(NUM_FEATURES).unwrap_or(0);
        let exhaustive = select_pair_exhaustive(&jac, &gamma, target, direction);
        let apriori = select_pair_apriori(&jac, &gamma, target, k, direction);
        Ok(SaliencyView {
            gamma_len: gamma.len(),
            top_k: select_top_k(&jac, &gamma, target, k, direction)
                .into_iter()
                .map(|i| i as u32)
                .collect(),
            jsma_pair: exhaustive.best,
            jsma_pairs_evaluated: exhaustive.pairs_evaluated,
            fjsma_pair: apriori.best,
            fjsma_pairs_evaluated: apriori.pairs_evaluated,
        })
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> std::result::Result<T, JsError> {
    s.parse().map_err(js_err)
}

fn optional_class(t: i32) -> Option<usize> {
    usize::try_from(t).ok()
}

#[wasm_bindgen]
impl Playground {
    #[wasm_bindgen(constructor)]
    pub fn js_new(model: &[u8]) -> std::result::Result<Playground, JsError> {
        Playground::from_model_bytes(model).map_err(js_err)
    }

    /// Class probabilities for 784 intensities in `[0, 1]`.
    pub fn classify(&self, pixels: &[f32]) -> std::result::Result<Vec<f32>, JsError> {
        self.classify_pixels(pixels).map_err(js_err)
    }

    /// `target < 0` means untargeted (FGSM only).
    pub fn attack(
        &self,
        pixels: &[f32],
        algorithm: &str,
        target: i32,
        strength: f32,
        k_percent: f32,
        direction: &str,
    ) -> std::result::Result<AttackView, JsError> {
        self.run(
            pixels,
            parse(algorithm)?,
            optional_class(target),
            strength,
            k_percent,
            parse(direction)?,
        )
        .map_err(js_err)
    }

    pub fn saliency(
        &self,
        pixels: &[f32],
        target: usize,
        k_percent: f32,
        direction: &str,
    ) -> std::result::Result<SaliencyView, JsError> {
        self.saliency_view(pixels, target, k_percent, parse(direction)?)
            .map_err(js_err)
    }

    /// Downsamples a canvas `ImageData` buffer to model input.
    #[wasm_bindgen(js_name = pixelsFromCanvas)]
    pub fn pixels_from_canvas(rgba: &[u8], width: usize, height: usize) -> std::result::Result<Vec<f32>, JsError> {
        pixels_from_rgba(rgba, width, height).map_err(js_err)
    }
}
