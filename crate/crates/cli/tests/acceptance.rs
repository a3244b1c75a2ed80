//! Acceptance gate: runs criteria 1-8 in order and prints one PASS/FAIL line
//! per criterion. Exits non-zero if any criterion fails.
//!
//! Criteria 4, 5, 7 and 8 train the 784-256-256-10 MLP on the full training
//! split. Set `APG_ACCEPTANCE_ARCH=cnn` to use the convolutional network
//! instead (much slower on a CPU).

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::fmt::Write as _;
use std::time::Instant;

use advplay_core::attacks::{
    distances, run_attack, select_pair_apriori, select_pair_exhaustive, Algorithm, AttackOutcome, AttackSpec,
    Direction, SearchSpace,
};
use advplay_core::bench::{format_table, run_sweep_with, BenchReport, SweepConfig};
use advplay_core::mnist::{encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, select_seeds};
use advplay_core::nn::{
    decode_model, encode_model, evaluate, train, Architecture, Dataset, TrainConfig, NUM_CLASSES, NUM_FEATURES,
};
use advplay_core::{Image, Jacobian, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::reference::{finite_difference_check, random_image, random_network};

type Check = Result<String, String>;

struct Gate {
    results: Vec<(u32, bool)>,
}

impl Gate {
    fn run(&mut self, id: u32, title: &str, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_text(&p))));
        let secs = start.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        println!(
            "{} criterion {id}: {title} [{secs:.1} s]\n      {}",
            if ok { "PASS" } else { "FAIL" },
            detail.replace('\n', "\n      ")
        );
        self.results.push((id, ok));
    }
}

fn panic_text(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- criterion 1 ----

fn gradient_oracle() -> Check {
    const H: f64 = 1e-3;
    const TOL: f64 = 1e-4;
    let (mut max_j, mut max_g, mut entries, mut refined) = (0.0f64, 0.0f64, 0usize, 0usize);
    for seed in 0..100u64 {
        let net = random_network(seed);
        let x = random_image(10_000 + seed);
        let class = (seed as usize * 3 + 1) % NUM_CLASSES;
        let r = finite_difference_check(&net, &x, class, H);
        ensure(r.kinks == 0, || {
            format!("triple {seed}: input sits on {} non-differentiable points", r.kinks)
        })?;
        ensure(r.max_jacobian_error <= TOL && r.max_gradient_error <= TOL, || {
            format!("triple {seed}: {r:?} exceeds {TOL}")
        })?;
        max_j = max_j.max(r.max_jacobian_error);
        max_g = max_g.max(r.max_gradient_error);
        entries += r.entries_checked;
        refined += r.refined_steps;
    }
    Ok(format!(
        "100 triples (50 MLP, 50 CNN), {entries} entries, central differences h=1e-3 on an f64 reference;\n\
         max |err| jacobian {max_j:.2e}, input gradient {max_g:.2e} (tol 1e-4); {refined} features used a smaller step next to a ReLU/pool switch"
    ))
}

// ---- criterion 2 ----

/// Independent f64 enumeration of every admissible pair; returns the best
/// score and every pair within `rel` of it.
fn brute_force(j: &Jacobian, gamma: &[usize], t: usize, dir: Direction) -> Option<(f64, Vec<(usize, usize)>)> {
    let mut scored = Vec::new();
    for (a, &p) in gamma.iter().enumerate() {
        for &q in &gamma[a + 1..] {
            let alpha = f64::from(j.get(t, p)) + f64::from(j.get(t, q));
            let beta: f64 = (0..j.classes())
                .filter(|&c| c != t)
                .map(|c| f64::from(j.get(c, p)) + f64::from(j.get(c, q)))
                .sum();
            let ok = match dir {
                Direction::Decrease => alpha < 0.0 && beta > 0.0,
                Direction::Increase => alpha > 0.0 && beta < 0.0,
            };
            if ok {
                scored.push(((-alpha * beta), (p.min(q), p.max(q))));
            }
        }
    }
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if scored.is_empty() {
        return None;
    }
    let near: Vec<(usize, usize)> = scored
        .iter()
        .filter(|s| s.0 >= best - 1e-5 * best.abs().max(1e-12))
        .map(|s| s.1)
        .collect();
    Some((best, near))
}

fn apriori_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut exact, mut near_ties, mut none) = (0, 0, 0);
    for case in 0..1000 {
        let m = rng.gen_range(8..=64);
        let quantized = case % 5 == 0;
        let data: Vec<f32> = (0..NUM_CLASSES * m)
            .map(|_| {
                let v: f32 = rng.gen_range(-1.0..1.0);
                if quantized {
                    (v * 4.0).round() / 4.0
                } else {
                    v
                }
            })
            .collect();
        let j = Jacobian::from_rows(NUM_CLASSES, m, data).unwrap();
        let members: Vec<usize> = if case % 3 == 0 {
            (0..m).filter(|_| rng.gen_bool(0.7)).collect()
        } else {
            (0..m).collect()
        };
        let gamma = SearchSpace::new(members.clone());
        let t = rng.gen_range(0..NUM_CLASSES);
        let dir = if case % 2 == 0 {
            Direction::Decrease
        } else {
            Direction::Increase
        };
        let ex = select_pair_exhaustive(&j, &gamma, t, dir);
        let ap = select_pair_apriori(&j, &gamma, t, m, dir);
        let pair = |s: &advplay_core::attacks::PairSearch| s.best.map(|b| (b.p1, b.p2));
        ensure(pair(&ex) == pair(&ap), || {
            format!(
                "case {case}: exhaustive {:?} != apriori(k=M) {:?}",
                pair(&ex),
                pair(&ap)
            )
        })?;
        let g = gamma.len() as u64;
        ensure(ex.pairs_evaluated == g * g.saturating_sub(1) / 2, || {
            format!("case {case}: exhaustive count")
        })?;
        match (brute_force(&j, &members, t, dir), pair(&ex)) {
            (None, None) => none += 1,
            (Some((_, near)), Some(p)) if near.len() == 1 && near[0] == p => exact += 1,
            (Some((_, near)), Some(p)) if near.contains(&p) && p == *near.iter().min().unwrap() => exact += 1,
            (Some((_, near)), Some(p)) if near.contains(&p) => near_ties += 1,
            (bf, p) => return Err(format!("case {case}: brute force {bf:?} vs implementation {p:?}")),
        }
    }
    Ok(format!(
        "1000 random Jacobians (C=10, M in 8..=64, both directions, 1/3 with partial search spaces, 1/5 quantized to force ties);\n\
         apriori(k=M) == exhaustive in all cases; brute force agrees exactly in {exact}, within f32 rounding of a tie in {near_ties}, no admissible pair in {none}"
    ))
}

// ---- criterion 3 ----

fn budget_fuzz(trained: Option<(&Network, &Dataset)>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nets: Vec<Network> = (0..8).map(random_network).collect();
    let mut counts = [0usize; 3];
    let mut on_trained = 0;
    for run in 0..500 {
        let use_trained = trained.is_some() && run % 5 == 0;
        let (net, x) = match trained {
            Some((n, test)) if use_trained => {
                on_trained += 1;
                (n, test.images[rng.gen_range(0..test.len())].clone())
            }
            _ => (&nets[run % nets.len()], random_image(rng.gen())),
        };
        let target = rng.gen_range(0..NUM_CLASSES);
        let direction = if rng.gen_bool(0.7) {
            Direction::Decrease
        } else {
            Direction::Increase
        };
        let max_upsilon = if use_trained { 30.0 } else { 100.0 };
        let spec = match rng.gen_range(0..3) {
            0 => AttackSpec::fgsm(rng.gen_range(0.0..=1.0), rng.gen_bool(0.5).then_some(target)),
            1 => AttackSpec::jsma(target, rng.gen_range(0.1..=max_upsilon)).with_direction(direction),
            _ => AttackSpec::fjsma(target, rng.gen_range(0.1..=max_upsilon), rng.gen_range(1.0..=100.0))
                .with_direction(direction),
        };
        counts[spec.algorithm as usize] += 1;
        let out = run_attack(net, &x, &spec).map_err(|e| format!("run {run} {spec:?}: {e}"))?;
        let px = out.adversarial.pixels();
        ensure(px.iter().all(|v| (0.0..=1.0).contains(v)), || {
            format!("run {run}: pixel outside [0,1]")
        })?;
        let d = distances(x.pixels(), px).unwrap();
        ensure(d.l0 == out.l0, || {
            format!("run {run}: reported l0 {} != {}", out.l0, d.l0)
        })?;
        match spec.algorithm {
            Algorithm::Fgsm => ensure(out.linf <= f64::from(spec.strength) + 1e-7, || {
                format!("run {run}: linf {} > eps {}", out.linf, spec.strength)
            })?,
            _ => {
                let budget = (NUM_FEATURES as f64 * f64::from(spec.strength) / 100.0).floor() as usize;
                ensure(out.l0 <= budget, || {
                    format!("run {run}: l0 {} > budget {budget}", out.l0)
                })?;
            }
        }
    }
    Ok(format!(
        "500 runs (fgsm {}, jsma {}, fjsma {}; {on_trained} on the trained model, the rest on random networks/images):\n\
         l0 <= floor(M*upsilon/100), linf <= eps+1e-7, pixels in [0,1] held for every run",
        counts[0], counts[1], counts[2]
    ))
}

// ---- criteria 4 and 5 ----

struct SweepRun {
    report: BenchReport,
    accuracy: f64,
    counter_violations: Vec<String>,
    iterations_checked: usize,
}

fn sweep(net: &Network, test: &Dataset, accuracy: f64) -> SweepRun {
    let cfg = SweepConfig {
        sample_count: 200,
        ..SweepConfig::default()
    };
    let mut counter_violations = Vec::new();
    let mut iterations_checked = 0usize;
    let report = run_sweep_with(net, test, &cfg, |cell, seed, out: &AttackOutcome| {
        for (i, s) in out.trace.iter().enumerate() {
            iterations_checked += 1;
            let g = s.gamma_len as u64;
            let ok = match (cell.algorithm, s.k) {
                (Algorithm::Jsma, None) => s.pairs_evaluated == g * (g - 1) / 2,
                (Algorithm::Fjsma, Some(k)) => s.pairs_evaluated <= k as u64 * g,
                _ => false,
            };
            if !ok && counter_violations.len() < 5 {
                counter_violations.push(format!(
                    "{:?} seed {seed} iteration {i}: |gamma|={} k={:?} pairs={}",
                    cell.algorithm, s.gamma_len, s.k, s.pairs_evaluated
                ));
            }
        }
    })
    .expect("sweep runs");
    SweepRun {
        report,
        accuracy,
        counter_violations,
        iterations_checked,
    }
}

fn sweep_shape(run: &SweepRun) -> Check {
    let r = &run.report;
    let ups = [10.0f32, 15.0, 20.0, 25.0];
    let ks = [10.0f32, 15.0, 20.0, 30.0];
    let rate = |a, u, k| r.row(a, u, k).map(|row| row.evasion_rate).expect("grid cell present");
    let mut problems = Vec::new();
    if run.accuracy < 0.97 {
        problems.push(format!("test accuracy {:.4} < 0.97", run.accuracy));
    }
    let series: Vec<(String, Vec<f64>)> = std::iter::once((
        "JSMA".to_string(),
        ups.iter().map(|&u| rate(Algorithm::Jsma, u, None)).collect(),
    ))
    .chain(ks.iter().map(|&k| {
        (
            format!("FJSMA k={k}%"),
            ups.iter().map(|&u| rate(Algorithm::Fjsma, u, Some(k))).collect(),
        )
    }))
    .collect();
    for (name, rates) in &series {
        if rates.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("(a) {name} not monotone in upsilon: {rates:?}"));
        }
    }
    for &u in &ups {
        let gap = (rate(Algorithm::Fjsma, u, Some(15.0)) - rate(Algorithm::Jsma, u, None)).abs();
        if gap > 0.08 {
            problems.push(format!("(b) |FJSMA(15%) - JSMA| = {gap:.3} at upsilon {u}%"));
        }
        let by_k: Vec<f64> = ks.iter().map(|&k| rate(Algorithm::Fjsma, u, Some(k))).collect();
        if by_k.windows(2).any(|w| w[1] < w[0] - 0.03) {
            problems.push(format!("(c) FJSMA rates fall with k at upsilon {u}%: {by_k:?}"));
        }
    }
    let mut detail = format!(
        "test accuracy {:.4}; 200 seeds; checks (a) monotone in upsilon, (b) |FJSMA(15%)-JSMA| <= 0.08, (c) non-decreasing in k within 0.03\n{}",
        run.accuracy,
        format_table(r).trim_end()
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        let _ = write!(detail, "\nviolations: {}", problems.join("; "));
        Err(detail)
    }
}

fn speed_claim(run: &SweepRun) -> Check {
    let r = &run.report;
    let mut lines = Vec::new();
    let mut timing_ok = true;
    for u in [10.0f32, 15.0, 20.0, 25.0] {
        let jsma = r.row(Algorithm::Jsma, u, None).unwrap().mean_seconds;
        let mut parts = Vec::new();
        for k in [10.0f32, 15.0, 20.0, 30.0] {
            let f = r.row(Algorithm::Fjsma, u, Some(k)).unwrap().mean_seconds;
            let ratio = f / jsma;
            timing_ok &= ratio < 0.85;
            parts.push(format!("k={k}%: {ratio:.3}"));
        }
        lines.push(format!("upsilon {u}%: FJSMA/JSMA time {}", parts.join(", ")));
    }
    let counters_ok = run.counter_violations.is_empty();
    let detail = format!(
        "timing (needs < 0.85 everywhere): {}\n{}\npair counters (JSMA = |G|(|G|-1)/2, FJSMA <= k|G|) over {} iterations: {}",
        if timing_ok { "ok" } else { "NOT MET" },
        lines.join("\n"),
        run.iterations_checked,
        if counters_ok { "ok".to_string() } else { run.counter_violations.join("; ") }
    );
    if timing_ok && counters_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- criterion 6 ----

fn data_layer(real: Option<&(Dataset, Dataset)>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [0usize, 1, 7, 64] {
        let raw: Vec<Vec<u8>> = (0..n).map(|_| (0..NUM_FEATURES).map(|_| rng.gen()).collect()).collect();
        let images: Vec<Image> = raw.iter().map(|r| Image::from_u8(r).unwrap()).collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..10)).collect();
        let bytes = encode_idx_images(&images);
        let back = parse_idx_images(&bytes).map_err(|e| e.to_string())?;
        ensure(back == images, || format!("{n}-image fixture did not round-trip"))?;
        ensure(encode_idx_images(&back) == bytes, || {
            "re-encoded image bytes differ".into()
        })?;
        let lb = encode_idx_labels(&labels);
        ensure(parse_idx_labels(&lb).map_err(|e| e.to_string())? == labels, || {
            "labels differ".into()
        })?;
        ensure(encode_idx_labels(&labels) == lb, || {
            "re-encoded label bytes differ".into()
        })?;
    }
    let (train_set, test_set) = real.ok_or("MNIST files not found (run `advplay fetch-data`)")?;
    ensure(train_set.len() == 60_000 && test_set.len() == 10_000, || {
        format!("counts {}/{}", train_set.len(), test_set.len())
    })?;
    for set in [train_set, test_set] {
        ensure(
            set.images
                .iter()
                .flat_map(|i| i.pixels())
                .all(|p| (0.0..=1.0).contains(p)),
            || "pixel outside [0,1]".into(),
        )?;
    }
    Ok("IDX fixtures (0/1/7/64 random images) round-trip bit-exactly; real files: 60000 train / 10000 test, pixels in [0,1], digests pinned".into())
}

// ---- criterion 7 ----

fn service_contract(net: &Network, test: &Dataset, accuracy: f64) -> Check {
    use advplay_service::wire::{AttackResponse, ConfigResponse, ErrorBody, Seed};
    use axum::body::Body;
    use axum::http::{Request, StatusCode};
    use http_body_util::BodyExt;
    use serde_json::{json, Value};
    use tower::ServiceExt;

    let seeds = select_seeds(test, 1, 0, Some(net)).map_err(|e| e.to_string())?;
    let state = advplay_service::AppState::new(net.clone(), &seeds, accuracy, 4).map_err(|e| e.to_string())?;
    let app = advplay_service::router(state, None);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()
        .unwrap();

    rt.block_on(async move {
        let call = |req: Request<Body>| {
            let app = app.clone();
            async move {
                let resp = app.oneshot(req).await.unwrap();
                let status = resp.status();
                (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
            }
        };
        let post = |body: Value| {
            Request::post("/api/attack")
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap()
        };

        let (s, b) = call(Request::get("/api/config").body(Body::empty()).unwrap()).await;
        ensure(s == StatusCode::OK, || format!("config status {s}"))?;
        let cfg: ConfigResponse = serde_json::from_slice(&b).map_err(|e| format!("config schema: {e}"))?;
        let names: Vec<_> = cfg.attacks.iter().map(|a| a.name.as_str()).collect();
        ensure(names == ["fgsm", "jsma", "fjsma"], || format!("attacks {names:?}"))?;
        ensure(cfg.features == 784 && cfg.classes == 10, || "M/C wrong".into())?;
        ensure(cfg.model_accuracy >= 0.97, || format!("model_accuracy {}", cfg.model_accuracy))?;

        let (s, b) = call(Request::get("/api/seeds").body(Body::empty()).unwrap()).await;
        ensure(s == StatusCode::OK, || format!("seeds status {s}"))?;
        let seed_list: Vec<Seed> = serde_json::from_slice(&b).map_err(|e| format!("seeds schema: {e}"))?;
        ensure(seed_list.len() == 10, || format!("{} seeds", seed_list.len()))?;
        for (c, s) in seed_list.iter().enumerate() {
            ensure(usize::from(s.label) == c && advplay_core::nn::argmax(&s.probs) == c, || {
                format!("seed for class {c} misclassified")
            })?;
            ensure(s.pixels.len() == 784 && s.probs.len() == 10, || "seed array lengths".into())?;
        }

        let six = seed_list[6].seed_id;
        let (s, b) = call(post(json!({"attack": "fgsm", "seed_id": six, "strength": 0.0}))).await;
        ensure(s == StatusCode::OK, || format!("fgsm status {s}"))?;
        let r: AttackResponse = serde_json::from_slice(&b).map_err(|e| format!("attack schema: {e}"))?;
        ensure(r.adversarial_pixels == r.original_pixels && !r.success, || "strength-0 FGSM changed the image".into())?;

        let (s, b) = call(post(json!({"attack": "jsma", "seed_id": six, "strength": 20}))).await;
        let err: ErrorBody = serde_json::from_slice(&b).map_err(|e| format!("error schema: {e}"))?;
        ensure(s == StatusCode::BAD_REQUEST && err.field.as_deref() == Some("target"), || {
            format!("missing target gave {s} {err:?}")
        })?;

        let (s, b) = call(post(json!({"attack": "fjsma", "seed_id": six, "target": 5, "strength": 20, "k_percent": 15}))).await;
        ensure(s == StatusCode::OK, || format!("6->5 status {s}"))?;
        let r: AttackResponse = serde_json::from_slice(&b).unwrap();
        ensure(r.success && r.predicted_class == 5 && r.l0 <= 156, || {
            format!("6->5 FJSMA: success {} predicted {} l0 {}", r.success, r.predicted_class, r.l0)
        })?;
        let direct = run_attack(net, &test.images[six], &AttackSpec::fjsma(5, 20.0, 15.0)).unwrap();
        ensure(r.to_outcome().unwrap().same_result(&direct), || "wire response differs from direct call".into())?;

        let bodies: Vec<Value> = (0..20)
            .map(|i| {
                let s = &seed_list[i % 10];
                let t = (usize::from(s.label) + 1) % 10;
                match i % 3 {
                    0 => json!({"attack": "fgsm", "seed_id": s.seed_id, "strength": 0.1}),
                    1 => json!({"attack": "jsma", "seed_id": s.seed_id, "target": t, "strength": 10}),
                    _ => json!({"attack": "fjsma", "seed_id": s.seed_id, "target": t, "strength": 10, "k_percent": 15}),
                }
            })
            .collect();
        let strip = |b: &[u8]| {
            let mut v: Value = serde_json::from_slice(b).unwrap();
            v.as_object_mut().unwrap().remove("elapsed_ms");
            v
        };
        let mut serial = Vec::new();
        for body in &bodies {
            serial.push(strip(&call(post(body.clone())).await.1));
        }
        let handles: Vec<_> = bodies.iter().map(|b| tokio::spawn(call(post(b.clone())))).collect();
        for (i, h) in handles.into_iter().enumerate() {
            let (s, b) = h.await.unwrap();
            ensure(s == StatusCode::OK && strip(&b) == serial[i], || format!("concurrent request {i} differs"))?;
        }

        fn only_numbers(v: &Value, key: &str) -> bool {
            match v {
                Value::String(s) => key == "attack" && s.len() <= 5,
                Value::Array(a) => a.iter().all(|x| only_numbers(x, key)),
                Value::Object(o) => o.iter().all(|(k, x)| only_numbers(x, k)),
                _ => true,
            }
        }
        ensure(serial.iter().all(|v| only_numbers(v, "")), || "response carries non-numeric payload".into())?;

        Ok("config/seeds/attack schemas ok; strength-0 FGSM identity; 400 naming `target`; 6->5 FJSMA (upsilon 20%, k 15%) succeeds and matches a direct call;\n\
            20 concurrent requests identical to serial; bodies hold only numeric arrays and the attack name"
            .to_string())
    })
}

// ---- criterion 8 ----

fn persistence(net: &Network, test: &Dataset) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.apgm");
    advplay_core::nn::save_model(net, &path).map_err(|e| e.to_string())?;
    let loaded = advplay_core::nn::load_model(&path).map_err(|e| e.to_string())?;
    let (a, b) = (evaluate(net, test).unwrap(), evaluate(&loaded, test).unwrap());
    ensure(a.to_bits() == b.to_bits() && &loaded == net, || {
        format!("accuracy {a} vs {b}")
    })?;
    let mut bytes = encode_model(net);
    bytes[1] = b'X';
    let err = decode_model(&bytes).err().ok_or("corrupted magic accepted")?;
    ensure(err.to_string().contains("magic"), || format!("unexpected error {err}"))?;
    Ok(format!(
        "save/load keeps evaluate() = {a:.4} bit-identical; corrupted magic rejected ({err})"
    ))
}

fn main() {
    let arch = match std::env::var("APG_ACCEPTANCE_ARCH").as_deref() {
        Ok("cnn") => Architecture::Cnn,
        _ => Architecture::Mlp,
    };
    let mut gate = Gate { results: Vec::new() };

    gate.run(1, "gradient oracle", gradient_oracle);
    gate.run(2, "FJSMA(k=M) == JSMA == brute force", apriori_equivalence);

    let real = support::data::mnist_dir().map(|d| support::data::load(&d));
    let trained = real.as_ref().map(|(train_set, test_set)| {
        let start = Instant::now();
        let cfg = TrainConfig {
            architecture: arch,
            ..TrainConfig::default()
        };
        let net = train(train_set, &cfg).expect("training");
        let acc = evaluate(&net, test_set).unwrap();
        println!(
            "      trained {arch:?} on 60000 images in {:.1} s, test accuracy {acc:.4}",
            start.elapsed().as_secs_f64()
        );
        (net, acc)
    });
    let missing = || Err::<String, _>("MNIST files not found (run `advplay fetch-data`)".to_string());

    gate.run(3, "budget invariants", || {
        budget_fuzz(trained.as_ref().zip(real.as_ref()).map(|((n, _), (_, t))| (n, t)))
    });

    let sweep_run = trained
        .as_ref()
        .zip(real.as_ref())
        .map(|((n, acc), (_, t))| sweep(n, t, *acc));
    gate.run(4, "desk-scale JSMA/FJSMA sweep", || {
        sweep_run.as_ref().map_or_else(missing, sweep_shape)
    });
    gate.run(5, "speed claim and pair counters", || {
        sweep_run.as_ref().map_or_else(missing, speed_claim)
    });
    gate.run(6, "data layer", || data_layer(real.as_ref()));
    gate.run(7, "service contract", || match (&trained, &real) {
        (Some((n, acc)), Some((_, t))) => service_contract(n, t, *acc),
        _ => missing(),
    });
    gate.run(8, "persistence", || match (&trained, &real) {
        (Some((n, _)), Some((_, t))) => persistence(n, t),
        _ => missing(),
    });

    let failed: Vec<u32> = gate.results.iter().filter(|r| !r.1).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} criteria passed{}",
        gate.results.len() - failed.len(),
        gate.results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(", failed: {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
