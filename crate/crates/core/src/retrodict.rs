//! Retrodiction of state-preserving channels: the Petz recovery map for
//! faithful states, its extension to arbitrary states, Jeffrey updating of
//! quantum evidence, and the harness that checks the functor laws
//! (recovering, normalizing, compositional, tensorial, inverting,
//! involutive) on seeded random instances.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{is_faithful, support_projection_state, Algebra, Element, State};
use crate::channel::{ad_element, random_channel, BlockMap, Channel};
use crate::dilation::{absolutely_continuous, dilationally_equal};
use crate::error::{Error, Result};
use crate::finstoch;
use crate::generate::{random_isomorphism, random_state, support_reset_channel};
use crate::json;
use crate::linalg::{self, Tolerance};
use crate::parallel::map_trials;

/// A channel together with a prior it acts on and the cached prediction
/// `β = E(α)`.
#[derive(Debug, Clone)]
pub struct StatePreservingMorphism {
    prior: State,
    channel: Channel,
    prediction: State,
}

impl StatePreservingMorphism {
    /// Compute the prediction from the prior.
    pub fn new(prior: State, channel: Channel, tol: Tolerance) -> Result<Self> {
        if channel.domain() != prior.algebra() {
            return Err(Error::DimensionMismatch(
                "channel domain differs from the prior's algebra".into(),
            ));
        }
        let prediction = channel.apply_to_state(&prior, tol)?;
        Ok(StatePreservingMorphism {
            prior,
            channel,
            prediction,
        })
    }

    /// Accept a declared prediction after checking it against `E(α)`.
    pub fn with_prediction(
        prior: State,
        channel: Channel,
        prediction: State,
        tol: Tolerance,
    ) -> Result<Self> {
        let computed = channel.apply(prior.element())?;
        let declared = prediction.element();
        let residual = computed
            .sub(declared)
            .map(|d| d.norm() / 1.0_f64.max(computed.norm()).max(declared.norm()))?;
        if residual > tol.abs_eps {
            return Err(Error::NotAState(format!(
                "declared prediction differs from E(prior) by {residual:.3e}"
            )));
        }
        Ok(StatePreservingMorphism {
            prior,
            channel,
            prediction,
        })
    }

    pub fn prior(&self) -> &State {
        &self.prior
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn prediction(&self) -> &State {
        &self.prediction
    }

    pub fn compose(&self, outer: &StatePreservingMorphism, tol: Tolerance) -> Result<Self> {
        StatePreservingMorphism::new(
            self.prior.clone(),
            outer.channel.compose(&self.channel)?,
            tol,
        )
    }

    pub fn tensor(&self, other: &StatePreservingMorphism, tol: Tolerance) -> Result<Self> {
        StatePreservingMorphism::new(
            self.prior.tensor(&other.prior),
            self.channel.tensor(&other.channel),
            tol,
        )
    }
}

/// A dilationally-equal equivalence class of state-preserving morphisms,
/// carried by an explicit representative. Class equality is decided by the
/// support criterion at the shared prior.
#[derive(Debug, Clone)]
pub struct MorphismClass {
    representative: StatePreservingMorphism,
}

impl MorphismClass {
    pub fn new(representative: StatePreservingMorphism) -> Self {
        MorphismClass { representative }
    }

    pub fn representative(&self) -> &StatePreservingMorphism {
        &self.representative
    }

    pub fn class_eq(&self, other: &MorphismClass, tol: Tolerance) -> Result<bool> {
        let a = &self.representative;
        let b = &other.representative;
        if !a.prior().element().fro_close(b.prior().element(), tol)
            || !a.prediction().element().fro_close(b.prediction().element(), tol)
        {
            return Ok(false);
        }
        dilationally_equal(a.channel().as_map(), b.channel().as_map(), a.prior(), tol)
    }
}

/// Blockwise square root of a state.
fn sqrt_state(state: &State, tol: Tolerance) -> Element {
    let blocks = state
        .element()
        .blocks()
        .iter()
        .map(|b| linalg::psd_sqrt(b, tol).expect("state blocks are PSD"))
        .collect();
    Element::new(state.algebra().clone(), blocks).expect("shapes preserved")
}

/// Blockwise square root of the Moore–Penrose pseudo-inverse of a state.
fn sqrt_pinv_state(state: &State, tol: Tolerance) -> Element {
    let blocks = state
        .element()
        .blocks()
        .iter()
        .map(|b| {
            let pinv = linalg::pinv_psd(b, tol).expect("state blocks are PSD");
            linalg::psd_sqrt(&pinv, tol).expect("pseudo-inverse is PSD")
        })
        .collect();
    Element::new(state.algebra().clone(), blocks).expect("shapes preserved")
}

/// The two summands of the extended recovery map for a raw
/// `(prior, map, prediction)` triple:
/// the sandwiched-adjoint term `Ad_{α^{1/2}} ∘ E* ∘ Ad_{β̂^{1/2}}` and the
/// support-completion term `B ↦ Tr(P_β^⊥ B) · P_α / Tr[P_α]`.
pub fn petz_terms(
    prior: &State,
    map: &BlockMap,
    prediction: &State,
    tol: Tolerance,
) -> Result<(BlockMap, BlockMap)> {
    if map.domain() != prior.algebra() || map.codomain() != prediction.algebra() {
        return Err(Error::DimensionMismatch(
            "map must run from the prior's algebra to the prediction's algebra".into(),
        ));
    }
    let ad_sqrt_prior = ad_element(&sqrt_state(prior, tol));
    let ad_sqrt_pinv_pred = ad_element(&sqrt_pinv_state(prediction, tol));
    let main = ad_sqrt_prior
        .compose(&map.hs_adjoint())?
        .compose(&ad_sqrt_pinv_pred)?;

    let p_prior = support_projection_state(prior, tol);
    let p_pred = support_projection_state(prediction, tol);
    let p_pred_perp = prediction.algebra().unit().sub(&p_pred)?;
    let weight = Complex64::new(1.0 / p_prior.trace().re, 0.0);

    let mut correction = BlockMap::zeros(prediction.algebra(), prior.algebra());
    for (x, px_block) in p_prior.blocks().iter().enumerate() {
        let out = linalg::vec_col(&(px_block * weight));
        for (y, perp_block) in p_pred_perp.blocks().iter().enumerate() {
            let probe = linalg::vec_col(perp_block);
            let t = correction.transfer_mut(x, y);
            for (r, o) in out.iter().enumerate() {
                for (c, p) in probe.iter().enumerate() {
                    t[(r, c)] = o * p.conj();
                }
            }
        }
    }
    Ok((main, correction))
}

/// Extended recovery map as a raw block map (no CPTP re-verification).
pub fn petz_map(prior: &State, map: &BlockMap, prediction: &State, tol: Tolerance) -> Result<BlockMap> {
    let (main, correction) = petz_terms(prior, map, prediction, tol)?;
    main.add(&correction)
}

/// Petz recovery of a morphism with faithful prior and prediction:
/// `Ad_{α^{1/2}} ∘ E* ∘ Ad_{β^{-1/2}}`, a channel from the prediction back
/// to the prior.
pub fn petz_faithful(m: &StatePreservingMorphism, tol: Tolerance) -> Result<StatePreservingMorphism> {
    if !is_faithful(m.prior(), tol) {
        return Err(Error::PriorNotFaithful);
    }
    if !is_faithful(m.prediction(), tol) {
        return Err(Error::PredictionNotFaithful);
    }
    let ad_sqrt_prior = ad_element(&sqrt_state(m.prior(), tol));
    let ad_inv_sqrt_pred = ad_element(&sqrt_pinv_state(m.prediction(), tol));
    let map = ad_sqrt_prior
        .compose(&m.channel().as_map().hs_adjoint())?
        .compose(&ad_inv_sqrt_pred)?;
    let channel = Channel::new(map, tol)?;
    StatePreservingMorphism::with_prediction(
        m.prediction().clone(),
        channel,
        m.prior().clone(),
        tol,
    )
}

/// Extended Petz recovery, defined for every state: the faithful formula
/// with the pseudo-inverse plus a completion term that routes weight
/// outside the prediction's support to the normalized support projection
/// of the prior. The result is a CPTP map recovering `α` from `β`,
/// well-defined up to dilational equality at the prediction.
pub fn petz_extended(m: &StatePreservingMorphism, tol: Tolerance) -> Result<MorphismClass> {
    let map = petz_map(m.prior(), m.channel().as_map(), m.prediction(), tol)?;
    let channel = Channel::new(map, tol)?;
    let representative = StatePreservingMorphism::with_prediction(
        m.prediction().clone(),
        channel,
        m.prior().clone(),
        tol,
    )?;
    Ok(MorphismClass::new(representative))
}

/// Jeffrey's probability kinematics for quantum evidence: push a state
/// `ε ≪ β` on the prediction side backwards through the extended recovery
/// map. Absolute continuity makes the update independent of the class
/// representative.
pub fn jeffrey_update_quantum(
    m: &StatePreservingMorphism,
    evidence: &State,
    tol: Tolerance,
) -> Result<State> {
    if evidence.algebra() != m.prediction().algebra() {
        return Err(Error::DimensionMismatch(
            "evidence must live on the prediction's algebra".into(),
        ));
    }
    if !absolutely_continuous(evidence, m.prediction(), tol)? {
        return Err(Error::EvidenceNotAbsolutelyContinuous);
    }
    let recovery = petz_extended(m, tol)?;
    recovery
        .representative()
        .channel()
        .apply_to_state(evidence, tol)
}

// ---------------------------------------------------------------------------
// Axiom harness
// ---------------------------------------------------------------------------

/// Configuration for the quantum axiom suite.
#[derive(Debug, Clone)]
pub struct AxiomConfig {
    /// Algebras sampled for domains and codomains.
    pub algebras: Vec<Algebra>,
    pub trials: usize,
    pub seed: u64,
    /// Residuals above this threshold are recorded as failures.
    pub residual_tol: f64,
    /// Fraction of trials run with non-faithful priors and squeezed
    /// predictions.
    pub non_faithful_fraction: f64,
    pub tolerance: Tolerance,
    /// Distribute trials across threads (when compiled with the `parallel`
    /// feature). Reports are identical either way.
    pub parallel: bool,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig {
            algebras: vec![
                Algebra::matrix(2),
                Algebra::matrix(3),
                Algebra::classical(2).expect("valid"),
                Algebra::new(vec![2, 1]).expect("valid"),
            ],
            trials: 50,
            seed: 0,
            residual_tol: 1e-9,
            non_faithful_fraction: 0.5,
            tolerance: Tolerance::default(),
            parallel: true,
        }
    }
}

pub const AXIOM_NAMES: [&str; 6] = [
    "recovering",
    "normalizing",
    "compositional",
    "tensorial",
    "inverting",
    "involutive",
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: usize,
    pub seed: u64,
    pub residual: f64,
    /// Serialized prior and channel of the offending instance.
    pub prior: serde_json::Value,
    pub channel: serde_json::Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomResult {
    pub name: String,
    pub trials: usize,
    pub max_residual: f64,
    pub failure_count: usize,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxiomReport {
    pub seed: u64,
    pub trials: usize,
    pub axioms: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.axioms.iter().map(|a| a.max_residual).fold(0.0, f64::max)
    }

    pub fn all_pass(&self) -> bool {
        self.axioms.iter().all(|a| a.failure_count == 0)
    }

    pub fn axiom(&self, name: &str) -> Option<&AxiomResult> {
        self.axioms.iter().find(|a| a.name == name)
    }
}

/// Per-axiom failure cap on embedded instances; counts are always exact.
const MAX_STORED_FAILURES: usize = 16;

struct TrialOutcome {
    residuals: [f64; 6],
    prior: serde_json::Value,
    channel: serde_json::Value,
}

/// Run the six functor-law checks with the extended Petz recovery.
pub fn check_axioms(config: &AxiomConfig) -> Result<AxiomReport> {
    check_axioms_with(config, &|prior, map, prediction, tol| {
        petz_map(prior, map, prediction, tol)
    })
}

/// Run the six functor-law checks with an injected recovery assignment.
/// Used to confirm the harness detects corrupted recovery maps.
pub fn check_axioms_with<R>(config: &AxiomConfig, recovery: &R) -> Result<AxiomReport>
where
    R: Fn(&State, &BlockMap, &State, Tolerance) -> Result<BlockMap> + Sync,
{
    if config.algebras.is_empty() {
        return Err(Error::InvalidInput("axiom suite needs at least one algebra".into()));
    }
    let outcomes: Vec<Result<TrialOutcome>> = map_trials(config.trials, config.parallel, |t| {
        run_trial(config, recovery, t)
    });

    let mut axioms: Vec<AxiomResult> = AXIOM_NAMES
        .iter()
        .map(|&name| AxiomResult {
            name: name.to_string(),
            trials: config.trials,
            max_residual: 0.0,
            failure_count: 0,
            failures: Vec::new(),
        })
        .collect();

    for (t, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        for (k, axiom) in axioms.iter_mut().enumerate() {
            let r = outcome.residuals[k];
            axiom.max_residual = axiom.max_residual.max(r);
            if r > config.residual_tol {
                axiom.failure_count += 1;
                if axiom.failures.len() < MAX_STORED_FAILURES {
                    axiom.failures.push(FailureRecord {
                        trial: t,
                        seed: trial_seed(config.seed, t),
                        residual: r,
                        prior: outcome.prior.clone(),
                        channel: outcome.channel.clone(),
                    });
                }
            }
        }
    }

    Ok(AxiomReport {
        seed: config.seed,
        trials: config.trials,
        axioms,
    })
}

fn trial_seed(base: u64, trial: usize) -> u64 {
    // splitmix64 step keeps trial streams decorrelated
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add((trial as u64).wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Residual between two maps compressed onto the support of a state:
/// `‖(L − R) ∘ Ad_{P}‖_F / max(1, ‖·‖)`.
fn compressed_residual(
    lhs: &BlockMap,
    rhs: &BlockMap,
    state: &State,
    tol: Tolerance,
) -> Result<f64> {
    let compress = ad_element(&support_projection_state(state, tol));
    let l = lhs.compose(&compress)?;
    let r = rhs.compose(&compress)?;
    Ok(l.residual(&r))
}

fn state_residual(a: &Element, b: &Element) -> f64 {
    a.sub(b)
        .map(|d| d.norm() / 1.0_f64.max(a.norm()).max(b.norm()))
        .unwrap_or(f64::INFINITY)
}

/// Generate a state-preserving instance on a sampled pair of algebras; for
/// the non-faithful split both the prior support and the prediction support
/// are strictly smaller than the units.
fn random_morphism<RNG: Rng>(
    rng: &mut RNG,
    algebras: &[Algebra],
    faithful: bool,
    tol: Tolerance,
) -> Result<(State, Channel, State)> {
    let a = algebras[rng.gen_range(0..algebras.len())].clone();
    let b = algebras[rng.gen_range(0..algebras.len())].clone();
    let prior = random_state(rng, &a, faithful, tol);
    let mut channel = random_channel(&a, &b, 2, rng.gen())?;
    if !faithful && b.total_dim() > 1 {
        let squeeze = support_reset_channel(rng, &b, tol)?;
        channel = squeeze.compose(&channel)?;
    }
    let prediction = channel.apply_to_state(&prior, tol)?;
    Ok((prior, channel, prediction))
}

fn run_trial<R>(config: &AxiomConfig, recovery: &R, t: usize) -> Result<TrialOutcome>
where
    R: Fn(&State, &BlockMap, &State, Tolerance) -> Result<BlockMap> + Sync,
{
    let tol = config.tolerance;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, t));
    let faithful = (t as f64 + 0.5) / config.trials.max(1) as f64 >= config.non_faithful_fraction;

    let (prior, channel, prediction) = random_morphism(&mut rng, &config.algebras, faithful, tol)?;
    let prior_doc = serde_json::to_value(json::state_to_doc(&prior)).expect("serializable");
    let channel_doc = serde_json::to_value(json::channel_to_doc(&channel)).expect("serializable");

    let mut residuals = [0.0_f64; 6];

    // recovering: the recovery map is a channel and sends the prediction
    // back to the prior
    let r1 = recovery(&prior, channel.as_map(), &prediction, tol)?;
    let defects = r1.cptp_defects();
    let validity = defects.cp.max(defects.tp);
    let recovered = r1.apply(prediction.element())?;
    residuals[0] = validity.max(state_residual(&recovered, prior.element()));

    // normalizing: recovery of the identity is the identity up to
    // dilational equality at the prior
    let id_map = BlockMap::identity(prior.algebra());
    let r_id = recovery(&prior, &id_map, &prior, tol)?;
    residuals[1] = compressed_residual(&r_id, &id_map, &prior, tol)?;

    // compositional: recovery of a composite is the composite of the
    // recoveries, up to dilational equality at the final prediction
    let c = config.algebras[rng.gen_range(0..config.algebras.len())].clone();
    let outer = random_channel(prediction.algebra(), &c, 2, rng.gen())?;
    let gamma = outer.apply_to_state(&prediction, tol)?;
    let composite = outer.as_map().compose(channel.as_map())?;
    let r_comp = recovery(&prior, &composite, &gamma, tol)?;
    let r_outer = recovery(&prediction, outer.as_map(), &gamma, tol)?;
    let chained = r1.compose(&r_outer)?;
    residuals[2] = compressed_residual(&r_comp, &chained, &gamma, tol)?;

    // tensorial: recovery of a tensor is the tensor of the recoveries, up
    // to dilational equality at the joint prediction
    let (prior2, channel2, prediction2) =
        random_morphism(&mut rng, &config.algebras, faithful, tol)?;
    let joint_prior = prior.tensor(&prior2);
    let joint_map = channel.as_map().tensor(channel2.as_map());
    let joint_prediction = prediction.tensor(&prediction2);
    let r_joint = recovery(&joint_prior, &joint_map, &joint_prediction, tol)?;
    let r2 = recovery(&prior2, channel2.as_map(), &prediction2, tol)?;
    let split = r1.tensor(&r2);
    residuals[3] = compressed_residual(&r_joint, &split, &joint_prediction, tol)?;

    // inverting: recovery of an isomorphism is its inverse
    let (iso, iso_inv, _) = random_isomorphism(&mut rng, prior.algebra())?;
    let iso_prediction = iso.apply_to_state(&prior, tol)?;
    let r_iso = recovery(&prior, iso.as_map(), &iso_prediction, tol)?;
    residuals[4] = compressed_residual(&r_iso, iso_inv.as_map(), &iso_prediction, tol)?;

    // involutive: retrodicting the retrodiction returns the channel, up to
    // dilational equality at the prior; the inner retrodiction must itself
    // be a valid morphism for the outer one to make sense
    residuals[5] = match State::from_element_hermitized(r1.apply(prediction.element())?, tol) {
        Ok(pred1) => {
            let r_back = recovery(&prediction, &r1, &pred1, tol)?;
            validity.max(compressed_residual(&r_back, channel.as_map(), &prior, tol)?)
        }
        Err(_) => f64::INFINITY,
    };

    Ok(TrialOutcome {
        residuals,
        prior: prior_doc,
        channel: channel_doc,
    })
}

// ---------------------------------------------------------------------------
// Classical axiom harness
// ---------------------------------------------------------------------------

/// Configuration for the classical (stochastic-map) axiom suite.
#[derive(Debug, Clone)]
pub struct ClassicalAxiomConfig {
    pub max_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub residual_tol: f64,
    pub parallel: bool,
}

impl Default for ClassicalAxiomConfig {
    fn default() -> Self {
        ClassicalAxiomConfig {
            max_points: 5,
            trials: 100,
            seed: 0,
            residual_tol: 1e-10,
            parallel: true,
        }
    }
}

/// Check the six retrodiction laws for Bayesian inversion on random
/// faithful classical instances. Residuals are entrywise sup-norms.
pub fn check_classical_axioms(config: &ClassicalAxiomConfig) -> Result<AxiomReport> {
    let entry_residual = |a: &finstoch::StochasticMatrix, b: &finstoch::StochasticMatrix| -> f64 {
        let mut worst = 0.0_f64;
        for y in 0..a.n_out() {
            for x in 0..a.n_in() {
                worst = worst.max((a.entry(y, x) - b.entry(y, x)).abs());
            }
        }
        worst
    };

    let outcomes: Vec<Result<[f64; 6]>> = map_trials(config.trials, config.parallel, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(config.seed, t));
        let nx = rng.gen_range(2..=config.max_points);
        let ny = rng.gen_range(2..=config.max_points);
        let nz = rng.gen_range(2..=config.max_points);
        let f = crate::generate::random_stoch(&mut rng, ny, nx);
        let p = crate::generate::random_prob(&mut rng, nx, true);
        let q = f.pushforward(&p)?;
        let f_bar = finstoch::bayes_inverse(&f, &p)?;

        let mut residuals = [0.0_f64; 6];

        // recovering
        residuals[0] = f_bar.pushforward(&q)?.max_abs_diff(&p);

        // normalizing
        let id = finstoch::StochasticMatrix::identity(nx);
        residuals[1] = entry_residual(&finstoch::bayes_inverse(&id, &p)?, &id);

        // compositional
        let g = crate::generate::random_stoch(&mut rng, nz, ny);
        let lhs = finstoch::bayes_inverse(&g.compose(&f)?, &p)?;
        let rhs = f_bar.compose(&finstoch::bayes_inverse(&g, &q)?)?;
        residuals[2] = entry_residual(&lhs, &rhs);

        // tensorial
        let np = rng.gen_range(2..=3);
        let f2 = crate::generate::random_stoch(&mut rng, np, np);
        let p2 = crate::generate::random_prob(&mut rng, np, true);
        let lhs = finstoch::bayes_inverse(&f.tensor(&f2), &p.tensor(&p2))?;
        let rhs = f_bar.tensor(&finstoch::bayes_inverse(&f2, &p2)?);
        residuals[3] = entry_residual(&lhs, &rhs);

        // inverting: permutations invert exactly
        let mut perm: Vec<usize> = (0..nx).collect();
        for i in (1..nx).rev() {
            let j = rng.gen_range(0..=i);
            perm.swap(i, j);
        }
        let sigma = finstoch::StochasticMatrix::deterministic(nx, &perm)?;
        let inv_map: Vec<usize> = {
            let mut out = vec![0; nx];
            for (x, &y) in perm.iter().enumerate() {
                out[y] = x;
            }
            out
        };
        let sigma_inv = finstoch::StochasticMatrix::deterministic(nx, &inv_map)?;
        residuals[4] = entry_residual(&finstoch::bayes_inverse(&sigma, &p)?, &sigma_inv);

        // involutive
        residuals[5] = entry_residual(&finstoch::bayes_inverse(&f_bar, &q)?, &f);

        Ok(residuals)
    });

    let mut axioms: Vec<AxiomResult> = AXIOM_NAMES
        .iter()
        .map(|&name| AxiomResult {
            name: name.to_string(),
            trials: config.trials,
            max_residual: 0.0,
            failure_count: 0,
            failures: Vec::new(),
        })
        .collect();
    for (t, outcome) in outcomes.into_iter().enumerate() {
        let residuals = outcome?;
        for (k, axiom) in axioms.iter_mut().enumerate() {
            axiom.max_residual = axiom.max_residual.max(residuals[k]);
            if residuals[k] > config.residual_tol {
                axiom.failure_count += 1;
                if axiom.failures.len() < MAX_STORED_FAILURES {
                    axiom.failures.push(FailureRecord {
                        trial: t,
                        seed: trial_seed(config.seed, t),
                        residual: residuals[k],
                        prior: serde_json::Value::Null,
                        channel: serde_json::Value::Null,
                    });
                }
            }
        }
    }
    Ok(AxiomReport {
        seed: config.seed,
        trials: config.trials,
        axioms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{embed_prob, extract_prob, uniform_state};
    use crate::channel::{ad_map, embed_stoch, extract_stoch};
    use crate::finstoch::{bayes_inverse, jeffrey_update, StochasticMatrix};
    use crate::generate::{random_prob, random_stoch, random_unitary, support_reset_channel_with};
    use crate::linalg::CMat;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn ket0() -> State {
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        State::new(Element::new(Algebra::matrix(2), vec![m]).unwrap(), tol()).unwrap()
    }

    #[test]
    fn petz_of_identity_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let alpha = random_state(&mut rng, &a, true, tol());
        let m = StatePreservingMorphism::new(alpha, Channel::identity(&a), tol()).unwrap();
        let r = petz_faithful(&m, tol()).unwrap();
        assert!(r
            .channel()
            .as_map()
            .fro_close(&BlockMap::identity(&a), tol()));
    }

    #[test]
    fn petz_of_unitary_is_reverse_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Algebra::matrix(2);
        let alpha = random_state(&mut rng, &a, true, tol());
        let u = random_unitary(&mut rng, 2);
        let e = Channel::new(ad_map(&[u.clone()], &a, &a).unwrap(), tol()).unwrap();
        let m = StatePreservingMorphism::new(alpha, e, tol()).unwrap();
        let r = petz_faithful(&m, tol()).unwrap();
        let expected = ad_map(&[u.adjoint()], &a, &a).unwrap();
        assert!(r.channel().as_map().fro_close(&expected, tol()));
    }

    #[test]
    fn petz_of_depolarizing_at_uniform_is_depolarizing() {
        let a = Algebra::matrix(2);
        let dep = Channel::new(
            BlockMap::from_action(a.clone(), a.clone(), |e| {
                Ok(Element::new(
                    Algebra::matrix(2),
                    vec![CMat::identity(2, 2) * (e.trace() * Complex64::new(0.5, 0.0))],
                )?)
            })
            .unwrap(),
            tol(),
        )
        .unwrap();
        let m = StatePreservingMorphism::new(uniform_state(&a), dep.clone(), tol()).unwrap();
        let r = petz_faithful(&m, tol()).unwrap();
        assert!(r.channel().as_map().fro_close(dep.as_map(), tol()));
        // extended agrees exactly on faithful instances
        let ext = petz_extended(&m, tol()).unwrap();
        assert!(ext
            .representative()
            .channel()
            .as_map()
            .fro_close(r.channel().as_map(), tol()));
    }

    #[test]
    fn petz_faithful_rejects_rank_deficient_states() {
        let a = Algebra::matrix(2);
        let m = StatePreservingMorphism::new(ket0(), Channel::identity(&a), tol()).unwrap();
        assert_eq!(petz_faithful(&m, tol()).unwrap_err(), Error::PriorNotFaithful);
    }

    #[test]
    fn extended_petz_on_pure_prior_absorbs_all_weight() {
        // prior |0><0|, channel id: R(B) = Tr[B] |0><0|
        let a = Algebra::matrix(2);
        let m = StatePreservingMorphism::new(ket0(), Channel::identity(&a), tol()).unwrap();
        let r = petz_extended(&m, tol()).unwrap();
        let expected = BlockMap::from_action(a.clone(), a.clone(), |e| {
            let mut out = CMat::zeros(2, 2);
            out[(0, 0)] = e.trace();
            Ok(Element::new(Algebra::matrix(2), vec![out])?)
        })
        .unwrap();
        assert!(r
            .representative()
            .channel()
            .as_map()
            .fro_close(&expected, tol()));
    }

    #[test]
    fn extended_petz_matches_classical_bayes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let faithful = trial % 2 == 0;
            let f = random_stoch(&mut rng, 4, 4);
            let f = if faithful {
                f
            } else {
                // zero out a row so the prediction has a hole
                let mut rows = f.rows();
                for x in 0..4 {
                    rows[1][x] = 0.0;
                }
                let col_sums: Vec<f64> =
                    (0..4).map(|x| (0..4).map(|y| rows[y][x]).sum()).collect();
                for x in 0..4 {
                    for row in rows.iter_mut() {
                        row[x] /= col_sums[x];
                    }
                }
                StochasticMatrix::from_rows(rows).unwrap()
            };
            let p = random_prob(&mut rng, 4, faithful);
            let m = StatePreservingMorphism::new(embed_prob(&p), embed_stoch(&f), tol()).unwrap();
            let r = petz_extended(&m, tol()).unwrap();
            let got = extract_stoch(r.representative().channel()).unwrap();
            let expected = bayes_inverse(&f, &p).unwrap();
            for y in 0..4 {
                for x in 0..4 {
                    assert!(
                        (got.entry(y, x) - expected.entry(y, x)).abs() < 1e-10,
                        "classical mismatch at ({y},{x}) on trial {trial}"
                    );
                }
            }
        }
    }

    #[test]
    fn quantum_jeffrey_matches_classical_jeffrey() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_stoch(&mut rng, 3, 3);
        let p = random_prob(&mut rng, 3, true);
        let e = random_prob(&mut rng, 3, false);
        let m = StatePreservingMorphism::new(embed_prob(&p), embed_stoch(&f), tol()).unwrap();
        let quantum = jeffrey_update_quantum(&m, &embed_prob(&e), tol()).unwrap();
        let classical = jeffrey_update(&f, &p, &e).unwrap();
        assert!(extract_prob(&quantum).unwrap().max_abs_diff(&classical) < 1e-10);
    }

    #[test]
    fn jeffrey_with_total_evidence_recovers_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let alpha = random_state(&mut rng, &a, false, tol());
        let e = random_channel(&a, &b, 2, 77).unwrap();
        let m = StatePreservingMorphism::new(alpha.clone(), e, tol()).unwrap();
        let updated = jeffrey_update_quantum(&m, m.prediction(), tol()).unwrap();
        assert!(updated.element().fro_close(alpha.element(), tol()));
    }

    #[test]
    fn jeffrey_rejects_unsupported_evidence() {
        // prediction concentrated on |0>, evidence on |1>
        let a = Algebra::matrix(2);
        let m = StatePreservingMorphism::new(ket0(), Channel::identity(&a), tol()).unwrap();
        let mut one = CMat::zeros(2, 2);
        one[(1, 1)] = Complex64::new(1.0, 0.0);
        let evidence =
            State::new(Element::new(a, vec![one]).unwrap(), tol()).unwrap();
        assert_eq!(
            jeffrey_update_quantum(&m, &evidence, tol()).unwrap_err(),
            Error::EvidenceNotAbsolutelyContinuous
        );
    }

    #[test]
    fn jeffrey_is_representative_independent() {
        // two channels equal off the prediction support give the same update
        let a = Algebra::matrix(2);
        let alpha = ket0();
        let e1 = Channel::identity(&a);
        let z = CMat::from_fn(2, 2, |r, c| {
            if r == c {
                Complex64::new(if r == 0 { 1.0 } else { -1.0 }, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let e2 = Channel::new(ad_map(&[z], &a, &a).unwrap(), tol()).unwrap();
        let m1 = StatePreservingMorphism::new(alpha.clone(), e1, tol()).unwrap();
        let m2 = StatePreservingMorphism::new(alpha.clone(), e2, tol()).unwrap();
        assert!(dilationally_equal(m1.channel().as_map(), m2.channel().as_map(), &alpha, tol()).unwrap());

        // evidence absolutely continuous w.r.t. the prediction |0><0|
        let evidence = ket0();
        let u1 = jeffrey_update_quantum(&m1, &evidence, tol()).unwrap();
        let u2 = jeffrey_update_quantum(&m2, &evidence, tol()).unwrap();
        assert!(u1.element().fro_close(u2.element(), tol()));
    }

    #[test]
    fn nullspace_compression_identity() {
        // Ad_{P_α} ∘ E* ∘ Ad_{P_β} = Ad_{P_α} ∘ E* for state-preserving E
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let config = AxiomConfig::default();
        for trial in 0..12 {
            let (prior, channel, prediction) =
                random_morphism(&mut rng, &config.algebras, trial % 2 == 0, tol()).unwrap();
            let ad_pa = ad_element(&support_projection_state(&prior, tol()));
            let ad_pb = ad_element(&support_projection_state(&prediction, tol()));
            let adj = channel.as_map().hs_adjoint();
            let lhs = ad_pa.compose(&adj).unwrap().compose(&ad_pb).unwrap();
            let rhs = ad_pa.compose(&adj).unwrap();
            assert!(lhs.residual(&rhs) < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn recovery_is_well_defined_on_classes() {
        // channels equal off the support retrodict to dilationally equal maps
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        for trial in 0..8 {
            let alpha = random_state(&mut rng, &a, false, tol());
            let p_alpha = support_projection_state(&alpha, tol());
            let base = random_channel(&a, &b, 2, 500 + trial).unwrap();
            let tau1 = random_state(&mut rng, &a, true, tol());
            let tau2 = random_state(&mut rng, &a, true, tol());
            let reset1 = support_reset_channel_with(&p_alpha, &tau1, tol()).unwrap();
            let reset2 = support_reset_channel_with(&p_alpha, &tau2, tol()).unwrap();
            let e1 = base.compose(&reset1).unwrap();
            let e2 = base.compose(&reset2).unwrap();
            assert!(dilationally_equal(e1.as_map(), e2.as_map(), &alpha, tol()).unwrap());

            let m1 = StatePreservingMorphism::new(alpha.clone(), e1, tol()).unwrap();
            let m2 = StatePreservingMorphism::new(alpha.clone(), e2, tol()).unwrap();
            assert!(m1
                .prediction()
                .element()
                .fro_close(m2.prediction().element(), tol()));
            let r1 = petz_extended(&m1, tol()).unwrap();
            let r2 = petz_extended(&m2, tol()).unwrap();
            assert!(r1.class_eq(&r2, tol()).unwrap(), "trial {trial}");
        }
    }

    #[test]
    fn axiom_suite_passes_on_default_instances() {
        let config = AxiomConfig {
            trials: 24,
            seed: 7,
            ..AxiomConfig::default()
        };
        let report = check_axioms(&config).unwrap();
        assert!(report.all_pass(), "report: {report:?}");
        assert!(report.max_residual() <= 1e-9);
    }

    #[test]
    fn axiom_suite_is_deterministic_across_modes() {
        let mut config = AxiomConfig {
            trials: 8,
            seed: 3,
            ..AxiomConfig::default()
        };
        let par = check_axioms(&config).unwrap();
        config.parallel = false;
        let seq = check_axioms(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&par).unwrap(),
            serde_json::to_string(&seq).unwrap()
        );
    }

    #[test]
    fn corrupted_recovery_is_flagged() {
        let config = AxiomConfig {
            trials: 16,
            seed: 11,
            non_faithful_fraction: 1.0,
            ..AxiomConfig::default()
        };
        // dropping the support-completion term breaks trace preservation
        let report = check_axioms_with(&config, &|prior, map, prediction, tol| {
            Ok(petz_terms(prior, map, prediction, tol)?.0)
        })
        .unwrap();
        let recovering = report.axiom("recovering").unwrap();
        assert!(recovering.failure_count > 0);
        let involutive = report.axiom("involutive").unwrap();
        assert!(involutive.failure_count > 0);

        // flipping its sign breaks complete positivity
        let report = check_axioms_with(&config, &|prior, map, prediction, tol| {
            let (main, correction) = petz_terms(prior, map, prediction, tol)?;
            main.add(&correction.scale(Complex64::new(-1.0, 0.0)))
        })
        .unwrap();
        assert!(report.axiom("recovering").unwrap().failure_count > 0);
        assert!(report.axiom("involutive").unwrap().failure_count > 0);
    }

    #[test]
    fn classical_axiom_suite_passes() {
        let config = ClassicalAxiomConfig {
            trials: 60,
            seed: 5,
            ..ClassicalAxiomConfig::default()
        };
        let report = check_classical_axioms(&config).unwrap();
        assert!(report.all_pass(), "report: {report:?}");
        assert!(report.max_residual() <= 1e-10);
    }

    #[test]
    fn class_equality_distinguishes() {
        let a = Algebra::matrix(2);
        let alpha = ket0();
        let id = Channel::identity(&a);
        let m = StatePreservingMorphism::new(alpha.clone(), id, tol()).unwrap();
        let r = petz_extended(&m, tol()).unwrap();
        assert!(r.class_eq(&r, tol()).unwrap());

        let x = CMat::from_fn(2, 2, |r_, c| {
            if r_ != c {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let flip = Channel::new(ad_map(&[x], &a, &a).unwrap(), tol()).unwrap();
        let flipped_prior = flip.apply_to_state(&alpha, tol()).unwrap();
        let m2 = StatePreservingMorphism::new(flipped_prior, flip, tol()).unwrap();
        let r2 = petz_extended(&m2, tol()).unwrap();
        assert!(!r.class_eq(&r2, tol()).unwrap());
    }
}
