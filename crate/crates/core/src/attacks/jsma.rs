use super::saliency::{select_pair_apriori, select_pair_exhaustive, PairSearch, SearchSpace};
use super::{finish, is_success, Algorithm, AttackOutcome, AttackSpec, Direction, IterationStats, SaliencySource};
use crate::error::{Error, Result};
use crate::nn::{Classifier, Image, Jacobian};

/// Targeted JSMA: each round saturates the best admissible pair over the whole
/// search space.
pub fn jsma_attack<C: Classifier + ?Sized>(model: &C, x: &Image, spec: &AttackSpec) -> Result<AttackOutcome> {
    expect_algorithm(spec, Algorithm::Jsma)?;
    saliency_attack(model, x, spec, |jac, gamma, t| {
        (select_pair_exhaustive(jac, gamma, t, spec.direction), None)
    })
}

/// Targeted FJSMA: like JSMA, but the first pair coordinate is restricted to
/// the `k` features with the strongest target-class derivative.
pub fn fjsma_attack<C: Classifier + ?Sized>(model: &C, x: &Image, spec: &AttackSpec) -> Result<AttackOutcome> {
    expect_algorithm(spec, Algorithm::Fjsma)?;
    let k = spec.apriori_k(x.pixels().len()).unwrap_or(0);
    saliency_attack(model, x, spec, |jac, gamma, t| {
        (
            select_pair_apriori(jac, gamma, t, k, spec.direction),
            Some(k.min(gamma.len())),
        )
    })
}

fn expect_algorithm(spec: &AttackSpec, algorithm: Algorithm) -> Result<()> {
    if spec.algorithm != algorithm {
        return Err(Error::Argument(format!(
            "{} called with a {} spec",
            algorithm.name(),
            spec.algorithm.name()
        )));
    }
    spec.validate()
}

fn saliency_attack<C, S>(model: &C, x: &Image, spec: &AttackSpec, mut select: S) -> Result<AttackOutcome>
where
    C: Classifier + ?Sized,
    S: FnMut(&Jacobian, &SearchSpace, usize) -> (PairSearch, Option<usize>),
{
    let t = spec.target.expect("validated targeted spec");
    let budget = spec.feature_budget(x.pixels().len());
    let saturate = match spec.direction {
        Direction::Decrease => 0.0,
        Direction::Increase => 1.0,
    };
    let original_probs = model.forward(x)?;
    let original_class = original_probs.argmax();
    let mut gamma = SearchSpace::for_image(x.pixels(), spec.direction);
    let mut adv = x.clone();
    let mut probs = original_probs.clone();
    let mut changed = 0usize;
    let mut trace = Vec::new();

    loop {
        if is_success(Some(t), original_class, probs.argmax()) {
            break;
        }
        if changed + 2 > budget || gamma.len() < 2 {
            break;
        }
        let jac = match spec.saliency {
            SaliencySource::Probabilities => model.jacobian(&adv)?,
            SaliencySource::Logits => model.logit_jacobian(&adv)?,
        };
        let gamma_len = gamma.len();
        let (search, k) = select(&jac, &gamma, t);
        trace.push(IterationStats {
            gamma_len,
            k,
            pairs_evaluated: search.pairs_evaluated,
            pair: search.best.map(|b| (b.p1, b.p2)),
        });
        let Some(best) = search.best else { break };
        let px = adv.pixels_mut();
        for p in [best.p1, best.p2] {
            if px[p] != saturate {
                changed += 1;
            }
            px[p] = saturate;
            gamma.remove(p);
        }
        probs = model.forward(&adv)?;
    }

    let iterations = trace.iter().filter(|s| s.pair.is_some()).count();
    finish(model, x, spec, original_probs, adv, Some(probs), iterations, trace)
}
