//! The two stochastic CRN detectors and the pilot-symbol learning rule.
//!
//! Both detectors keep a single symbol-estimate molecule that is either
//! `Xhat_ON` or `Xhat_OFF` and encode the decision statistic in the flip
//! rates; the detected symbol is read off the fraction of time the molecule
//! spends ON, estimated from decorrelated stationary samples.
//!
//! * The Boltzmann-machine-derived detector keeps one activation reaction per
//!   bound receptor plus a base flip pair, so the OFF->ON rate is
//!   `k (1 + sum of bound weights)` against a fixed ON->OFF rate
//!   `k (1 + |theta_x|)`; its stationary ON probability crosses 1/2 exactly
//!   where the machine's conditional does.
//! * The low-complexity detector needs just two reactions regardless of the
//!   receptor count: bound receptors activate the estimate, active weight
//!   molecules `W_ON` deactivate it, so the count of `W_ON` acts as a tunable
//!   threshold. A pilot-symbol rule moves one weight molecule per detection
//!   error, which lets the receiver learn and track the optimal threshold
//!   in operation.

use crate::channel::{ChannelParams, ReceptorObservation, Symbol};
use crate::crn::{sample_stationary, Crn, CrnState, SpeciesId};
use crate::error::Error;
use crate::reference::{LikelihoodModel, ThresholdDetector};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Parameters of the Boltzmann-machine-derived detector CRN.
///
/// The mapping realizes a nonpositive symbol bias through the reverse-flip
/// rate `k (1 + |theta_x|)`; positive biases have no reaction-rate encoding
/// here, so they are rejected, as are negative receptor weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorCrnParams {
    theta_x: f64,
    weights_yx: Vec<f64>,
    k_scale: f64,
}

impl TaylorCrnParams {
    pub fn new(theta_x: f64, weights_yx: Vec<f64>, k_scale: f64) -> Result<Self, Error> {
        if theta_x > 0.0 {
            return Err(Error::Domain(format!(
                "symbol bias must be <= 0 for the reaction mapping, got {theta_x}"
            )));
        }
        if let Some(w) = weights_yx.iter().find(|w| **w < 0.0) {
            return Err(Error::Domain(format!(
                "receptor weights must be nonnegative, got {w}"
            )));
        }
        if !(k_scale > 0.0) {
            return Err(Error::invalid(format!("k_scale must be > 0, got {k_scale}")));
        }
        Ok(TaylorCrnParams { theta_x, weights_yx, k_scale })
    }

    /// Extract the symbol bias and symbol-receptor weights of a trained
    /// machine. Fails if the machine falls outside the mapping's domain.
    pub fn from_bm(bm: &crate::bm::Fvbm, k_scale: f64) -> Result<Self, Error> {
        TaylorCrnParams::new(bm.symbol_bias(), bm.symbol_weights(), k_scale)
    }

    /// The threshold construction: uniform weights `w_xy` and bias
    /// `-(nu - 1/2) w_xy`. Requires `nu >= 1` so the bias is nonpositive.
    pub fn for_threshold(
        n_receptors: usize,
        nu: usize,
        w_xy: f64,
        k_scale: f64,
    ) -> Result<Self, Error> {
        if !(w_xy > 0.0) {
            return Err(Error::Domain("shared weight must be positive".into()));
        }
        if nu < 1 || nu > n_receptors + 1 {
            return Err(Error::OutOfRange(format!(
                "threshold {nu} outside [1, {}]",
                n_receptors + 1
            )));
        }
        TaylorCrnParams::new(
            -(nu as f64 - 0.5) * w_xy,
            vec![w_xy; n_receptors],
            k_scale,
        )
    }

    pub fn theta_x(&self) -> f64 {
        self.theta_x
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights_yx
    }

    pub fn k_scale(&self) -> f64 {
        self.k_scale
    }

    pub fn n_receptors(&self) -> usize {
        self.weights_yx.len()
    }
}

/// Stationary probability of observing the estimate ON in the
/// Boltzmann-machine-derived CRN with uniform weights, from detailed balance:
/// `(1 + n w) / (2 + n w + |theta_x|)`.
pub fn taylor_stationary_prob(theta_x: f64, w_xy: f64, n_bound: usize) -> f64 {
    let drive = 1.0 + n_bound as f64 * w_xy;
    drive / (drive + 1.0 + theta_x.abs())
}

/// A built detector network: the CRN, its initial state, the species watched
/// for detection, and the total OFF->ON / ON->OFF conversion rates used to
/// size burn-in and sample spacing.
#[derive(Clone, Debug)]
pub struct DetectorCrn {
    pub crn: Crn,
    pub state: CrnState,
    pub x_on: SpeciesId,
    pub x_off: SpeciesId,
    pub rate_on: f64,
    pub rate_off: f64,
}

/// Build the Boltzmann-machine-derived detector CRN for one observation.
///
/// Species: the estimate pair plus one `Y_ON` species per bound receptor.
/// Reactions: the base flip pair (`k` forward, `k (1 + |theta_x|)` back) and
/// one activation per bound receptor with rate `k w_i`. Receptors with zero
/// weight contribute no reaction (their rate would be zero, which is the
/// same as absence). Initial state: the estimate OFF, one molecule per bound
/// receptor.
pub fn build_taylor_crn(
    params: &TaylorCrnParams,
    y: &ReceptorObservation,
) -> Result<DetectorCrn, Error> {
    if y.n_receptors() != params.n_receptors() {
        return Err(Error::invalid(format!(
            "observation has {} receptors, parameters have {}",
            y.n_receptors(),
            params.n_receptors()
        )));
    }
    let k = params.k_scale;
    let mut crn = Crn::new();
    let x_off = crn.add_species("Xhat_OFF");
    let x_on = crn.add_species("Xhat_ON");
    crn.add_reaction(&[(x_off, 1)], &[(x_on, 1)], k)?;
    crn.add_reaction(&[(x_on, 1)], &[(x_off, 1)], k * (1.0 + params.theta_x.abs()))?;
    let mut bound_weight_sum = 0.0;
    let mut initial_ys = Vec::new();
    for (i, (&bound, &w)) in y.states().iter().zip(&params.weights_yx).enumerate() {
        if bound {
            let species = crn.add_species(format!("Y_ON_{i}"));
            initial_ys.push(species);
            bound_weight_sum += w;
            if w > 0.0 {
                crn.add_reaction(&[(species, 1), (x_off, 1)], &[(species, 1), (x_on, 1)], k * w)?;
            }
        }
    }
    let mut state = crn.empty_state();
    state.set_count(x_off, 1);
    for species in initial_ys {
        state.set_count(species, 1);
    }
    Ok(DetectorCrn {
        crn,
        state,
        x_on,
        x_off,
        rate_on: k * (1.0 + bound_weight_sum),
        rate_off: k * (1.0 + params.theta_x.abs()),
    })
}

/// Low-complexity detector state: the active/total weight-molecule counts
/// and the two rate constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcDetectorState {
    pub n_w_on: u64,
    pub n_w_total: u64,
    pub k_on: f64,
    pub k_off: f64,
}

impl LcDetectorState {
    pub fn new(n_w_on: u64, n_w_total: u64, k_on: f64, k_off: f64) -> Result<Self, Error> {
        let st = LcDetectorState { n_w_on, n_w_total, k_on, k_off };
        st.validate()?;
        Ok(st)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_w_on > self.n_w_total {
            return Err(Error::invalid(format!(
                "n_w_on {} exceeds reservoir {}",
                self.n_w_on, self.n_w_total
            )));
        }
        if !(self.k_on > 0.0 && self.k_off > 0.0) {
            return Err(Error::invalid("rate constants must be > 0"));
        }
        Ok(())
    }

    /// Rate-constant ratio `k_off / k_on`; the detector's threshold in
    /// receptor counts is this ratio times the active weight count.
    pub fn ratio(&self) -> f64 {
        self.k_off / self.k_on
    }

    pub fn n_w_off(&self) -> u64 {
        self.n_w_total - self.n_w_on
    }

    /// Pilot update: move one weight molecule toward the MAP threshold on a
    /// detection error. The reservoir saturates at both ends because the
    /// update reactions need an inactive (respectively active) weight
    /// molecule as a reactant.
    pub fn updated(&self, x_hat: Symbol, pilot: &PilotSymbol) -> LcDetectorState {
        let mut next = *self;
        match (x_hat, pilot.value) {
            (Symbol::One, Symbol::Zero) if next.n_w_on < next.n_w_total => next.n_w_on += 1,
            (Symbol::Zero, Symbol::One) if next.n_w_on > 0 => next.n_w_on -= 1,
            _ => {}
        }
        next
    }
}

/// Stationary probability of observing the estimate ON in the
/// low-complexity CRN: `n / (n + (k_off/k_on) n_w_on)`. `None` marks the
/// quiescent 0/0 edge (no bound receptor, no active weight): nothing can
/// fire and the estimate stays frozen at its initial OFF state.
pub fn lc_stationary_prob(n_bound: usize, st: &LcDetectorState) -> Option<f64> {
    if n_bound == 0 && st.n_w_on == 0 {
        return None;
    }
    let n = n_bound as f64;
    Some(n / (n + st.ratio() * st.n_w_on as f64))
}

/// Deterministic decision of the low-complexity detector, the
/// infinite-sample limit: ON-probability at least 1/2 decides one, the
/// quiescent edge decides zero.
pub fn lc_detect_exact(n_bound: usize, st: &LcDetectorState) -> Symbol {
    match lc_stationary_prob(n_bound, st) {
        Some(p) if p >= 0.5 => Symbol::One,
        _ => Symbol::Zero,
    }
}

/// The count threshold the low-complexity detector realizes: the smallest
/// bound count deciding one, `n_receptors + 1` if no count does. Zero bound
/// receptors always decide zero, so the threshold is at least one.
pub fn lc_induced_threshold(st: &LcDetectorState, n_receptors: usize) -> usize {
    let target = st.ratio() * st.n_w_on as f64;
    let nu = target.ceil().max(1.0) as usize;
    nu.min(n_receptors + 1)
}

/// Build the low-complexity detector CRN: two reactions total, with the
/// bound-receptor count and active-weight count as catalyst populations.
pub fn build_lc_crn(n_bound: usize, st: &LcDetectorState) -> DetectorCrn {
    let mut crn = Crn::new();
    let y_on = crn.add_species("Y_ON");
    let w_on = crn.add_species("W_ON");
    let x_off = crn.add_species("Xhat_OFF");
    let x_on = crn.add_species("Xhat_ON");
    crn.add_reaction(&[(y_on, 1), (x_off, 1)], &[(y_on, 1), (x_on, 1)], st.k_on)
        .expect("positive rate by invariant");
    crn.add_reaction(&[(w_on, 1), (x_on, 1)], &[(w_on, 1), (x_off, 1)], st.k_off)
        .expect("positive rate by invariant");
    let mut state = crn.empty_state();
    state.set_count(y_on, n_bound as u64);
    state.set_count(w_on, st.n_w_on);
    state.set_count(x_off, 1);
    DetectorCrn {
        crn,
        state,
        x_on,
        x_off,
        rate_on: n_bound as f64 * st.k_on,
        rate_off: st.n_w_on as f64 * st.k_off,
    }
}

/// Scale-free stationary-sampling policy, resolved against a detector's
/// flip rates: times are measured in mean holding times of the slowest
/// estimate transition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPolicy {
    #[serde(default = "default_burn_in")]
    pub burn_in_holding_times: f64,
    #[serde(default = "default_interval")]
    pub interval_holding_times: f64,
    #[serde(default = "default_m_samples")]
    pub m_samples: usize,
}

fn default_burn_in() -> f64 {
    20.0
}

fn default_interval() -> f64 {
    5.0
}

fn default_m_samples() -> usize {
    401
}

impl Default for SamplingPolicy {
    /// Twenty holding times of burn-in, five between samples, 401 samples
    /// (odd, so the sample mean never ties at one half).
    fn default() -> Self {
        SamplingPolicy { burn_in_holding_times: 20.0, interval_holding_times: 5.0, m_samples: 401 }
    }
}

impl SamplingPolicy {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.burn_in_holding_times >= 0.0)
            || !(self.interval_holding_times > 0.0)
            || self.m_samples == 0
        {
            return Err(Error::invalid("sampling policy values out of range"));
        }
        Ok(())
    }

    /// Absolute times for a detector with the given flip rates. A fully
    /// quiescent detector has no time scale; unit spacing keeps the sampler
    /// well-defined (no event can occur anyway).
    pub fn resolve(&self, rate_on: f64, rate_off: f64) -> SamplingParams {
        let slowest = match (rate_on > 0.0, rate_off > 0.0) {
            (true, true) => rate_on.min(rate_off),
            (true, false) => rate_on,
            (false, true) => rate_off,
            (false, false) => 1.0,
        };
        SamplingParams {
            burn_in: self.burn_in_holding_times / slowest,
            interval: self.interval_holding_times / slowest,
            m: self.m_samples,
        }
    }
}

/// Absolute stationary-sampling parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingParams {
    pub burn_in: f64,
    pub interval: f64,
    pub m: usize,
}

/// Sample-average detection on a built detector CRN: record `m` stationary
/// presence samples of the ON estimate and decide one iff their mean
/// reaches 1/2. A quiescent network yields all-zero samples (the estimate
/// starts OFF), hence symbol zero.
pub fn crn_detect(det: &mut DetectorCrn, sampling: &SamplingParams, rng: &mut impl Rng) -> Symbol {
    let samples = sample_stationary(
        &det.crn,
        &mut det.state,
        det.x_on,
        sampling.burn_in,
        sampling.interval,
        sampling.m,
        rng,
    );
    let ones = samples.iter().filter(|&&s| s).count();
    if 2 * ones >= samples.len() {
        Symbol::One
    } else {
        Symbol::Zero
    }
}

/// A pilot symbol known to the receiver; the molecule carrying it is
/// consumed by the first weight update it triggers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PilotSymbol {
    pub value: Symbol,
    pub consumed: bool,
}

impl PilotSymbol {
    pub fn new(value: Symbol) -> Self {
        PilotSymbol { value, consumed: false }
    }
}

/// Default rate constants for the two weight-update reactions. Any positive
/// values work: the update interval only has to be long enough for the
/// single pilot molecule to react with near certainty.
pub const DEFAULT_UPDATE_RATES: (f64, f64) = (1.0, 1.0);

/// Handles into the learning CRN built by [`build_learning_crn`].
#[derive(Clone, Copy, Debug)]
pub struct LearningCrnSpecies {
    pub x_on: SpeciesId,
    pub x_off: SpeciesId,
    pub pilot_on: SpeciesId,
    pub pilot_off: SpeciesId,
    pub w_on: SpeciesId,
    pub w_off: SpeciesId,
}

/// Chemical realization of the pilot update rule for one pilot interval,
/// with the estimate settled at `x_hat`.
///
/// Two termolecular reactions implement the two error cases: an ON estimate
/// with an OFF pilot molecule activates one weight molecule, an OFF estimate
/// with an ON pilot molecule deactivates one. The pilot molecule is consumed
/// on firing, so at most one weight moves per pilot interval, and a missing
/// weight reactant (reservoir edge) silently disables the update.
pub fn build_learning_crn(
    st: &LcDetectorState,
    x_hat: Symbol,
    pilot: &PilotSymbol,
    update_rates: (f64, f64),
) -> Result<(Crn, CrnState, LearningCrnSpecies), Error> {
    let mut crn = Crn::new();
    let x_off = crn.add_species("Xhat_OFF");
    let x_on = crn.add_species("Xhat_ON");
    let pilot_off = crn.add_species("Xpilot_OFF");
    let pilot_on = crn.add_species("Xpilot_ON");
    let w_on = crn.add_species("W_ON");
    let w_off = crn.add_species("W_OFF");
    crn.add_reaction(
        &[(x_on, 1), (pilot_off, 1), (w_off, 1)],
        &[(x_on, 1), (w_on, 1)],
        update_rates.0,
    )?;
    crn.add_reaction(
        &[(x_off, 1), (pilot_on, 1), (w_on, 1)],
        &[(x_off, 1), (w_off, 1)],
        update_rates.1,
    )?;
    let mut state = crn.empty_state();
    match x_hat {
        Symbol::One => state.set_count(x_on, 1),
        Symbol::Zero => state.set_count(x_off, 1),
    }
    if !pilot.consumed {
        match pilot.value {
            Symbol::One => state.set_count(pilot_on, 1),
            Symbol::Zero => state.set_count(pilot_off, 1),
        }
    }
    state.set_count(w_on, st.n_w_on);
    state.set_count(w_off, st.n_w_off());
    Ok((crn, state, LearningCrnSpecies { x_on, x_off, pilot_on, pilot_off, w_on, w_off }))
}

/// Smallest weight reservoir able to realize any threshold the channel can
/// call for: `ceil((k_off/k_on) n_receptors)`.
pub fn min_reservoir(n_receptors: usize, k_on: f64, k_off: f64) -> u64 {
    assert!(k_on > 0.0 && k_off > 0.0, "rates must be positive");
    (k_off / k_on * n_receptors as f64).ceil() as u64
}

/// How the online learner obtains each pilot decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DetectionMode {
    /// Full stochastic simulation of the detector CRN.
    Sampled(SamplingPolicy),
    /// Deterministic threshold on the stationary ON-probability (the
    /// infinite-sample limit); noiseless and fast.
    Exact,
}

/// One pilot interval: draw an equiprobable pilot symbol, sample the
/// receptors, detect. Returns the pilot and the decision.
pub fn pilot_round(
    channel: &ChannelParams,
    st: &LcDetectorState,
    mode: &DetectionMode,
    rng: &mut impl Rng,
) -> (PilotSymbol, Symbol) {
    let pilot = PilotSymbol::new(Symbol::sample_equiprobable(rng));
    let y = channel.sample_observation(pilot.value, rng);
    let x_hat = match mode {
        DetectionMode::Exact => lc_detect_exact(y.n_bound(), st),
        DetectionMode::Sampled(policy) => {
            let mut det = build_lc_crn(y.n_bound(), st);
            let params = policy.resolve(det.rate_on, det.rate_off);
            crn_detect(&mut det, &params, rng)
        }
    };
    (pilot, x_hat)
}

/// Result of an online training run: the weight trajectory and the exact
/// error rate the detector would achieve after each pilot, both indexed
/// from the initial state (length `n_pilots + 1`).
#[derive(Clone, Debug)]
pub struct OnlineOutcome {
    pub nw_trajectory: Vec<u64>,
    pub ber_curve: Vec<f64>,
}

/// Run pilot-symbol learning against a fixed channel: per pilot, detect with
/// the current weight count and apply the update rule. The per-pilot error
/// rate is computed analytically from the induced count threshold and the
/// exact channel law.
pub fn online_train(
    channel: &ChannelParams,
    st0: LcDetectorState,
    n_pilots: usize,
    mode: &DetectionMode,
    rng: &mut impl Rng,
) -> Result<OnlineOutcome, Error> {
    channel.validate()?;
    st0.validate()?;
    let model = LikelihoodModel::from_channel(channel)?;
    let analytic = |st: &LcDetectorState| {
        let nu = lc_induced_threshold(st, channel.n_receptors);
        let detector = ThresholdDetector::new(nu, channel.n_receptors)
            .expect("induced threshold is clamped into range");
        model.analytic_ber(&detector)
    };
    let mut st = st0;
    let mut nw_trajectory = Vec::with_capacity(n_pilots + 1);
    let mut ber_curve = Vec::with_capacity(n_pilots + 1);
    nw_trajectory.push(st.n_w_on);
    ber_curve.push(analytic(&st));
    for _ in 0..n_pilots {
        let (pilot, x_hat) = pilot_round(channel, &st, mode, rng);
        st = st.updated(x_hat, &pilot);
        nw_trajectory.push(st.n_w_on);
        ber_curve.push(analytic(&st));
    }
    Ok(OnlineOutcome { nw_trajectory, ber_curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{simulate, ssa_step, StepOutcome};
    use crate::rng;
    use proptest::prelude::*;

    fn unit_state(n_w_on: u64) -> LcDetectorState {
        LcDetectorState::new(n_w_on, 30, 1.0, 1.0).unwrap()
    }

    #[test]
    fn taylor_build_reaction_counts() {
        let params = TaylorCrnParams::for_threshold(30, 13, 1.0, 1.0).unwrap();
        let none = ReceptorObservation::from_bound_count(0, 30).unwrap();
        let det = build_taylor_crn(&params, &none).unwrap();
        assert_eq!(det.crn.reactions().len(), 2);

        let all = ReceptorObservation::from_bound_count(30, 30).unwrap();
        let det = build_taylor_crn(&params, &all).unwrap();
        assert_eq!(det.crn.reactions().len(), 32);
        assert_eq!(det.state.count(det.x_off), 1);
        assert_eq!(det.state.count(det.x_on), 0);

        // the restricted set stays far below the full mapping's size
        let n = 30usize;
        let full_mapping = 2 * n * n + 4 * n + 2;
        assert!(det.crn.reactions().len() <= full_mapping);
    }

    #[test]
    fn taylor_params_domain() {
        assert!(TaylorCrnParams::new(0.5, vec![1.0], 1.0).is_err());
        assert!(TaylorCrnParams::new(-0.5, vec![-1.0], 1.0).is_err());
        assert!(TaylorCrnParams::new(-0.5, vec![1.0], 0.0).is_err());
        assert!(TaylorCrnParams::new(0.0, vec![0.0], 2.0).is_ok());
        // nu = 0 would need a positive bias
        assert!(TaylorCrnParams::for_threshold(30, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn taylor_stationary_examples() {
        assert!((taylor_stationary_prob(-12.5, 1.0, 13) - 14.0 / 27.5).abs() < 1e-15);
        assert!((taylor_stationary_prob(-12.5, 1.0, 12) - 13.0 / 26.5).abs() < 1e-15);
        assert!(taylor_stationary_prob(-12.5, 1.0, 13) > 0.5);
        assert!(taylor_stationary_prob(-12.5, 1.0, 12) < 0.5);
        assert_eq!(taylor_stationary_prob(0.0, 1.0, 0), 0.5);
    }

    #[test]
    fn taylor_ssa_matches_detailed_balance_spot_checks() {
        let params = TaylorCrnParams::for_threshold(30, 13, 1.0, 1.0).unwrap();
        let mut rng = rng::stream(31, 0);
        for n_bound in [5usize, 13] {
            let y = ReceptorObservation::from_bound_count(n_bound, 30).unwrap();
            let mut det = build_taylor_crn(&params, &y).unwrap();
            let sampling = SamplingPolicy::default().resolve(det.rate_on, det.rate_off);
            let samples = sample_stationary(
                &det.crn,
                &mut det.state,
                det.x_on,
                sampling.burn_in,
                sampling.interval,
                10_000,
                &mut rng,
            );
            let mean = samples.iter().filter(|&&s| s).count() as f64 / samples.len() as f64;
            let expected = taylor_stationary_prob(params.theta_x(), 1.0, n_bound);
            assert!(
                (mean - expected).abs() < 0.02,
                "n={n_bound}: mean {mean} vs {expected}"
            );
        }
    }

    #[test]
    fn estimate_molecule_is_conserved() {
        let params = TaylorCrnParams::for_threshold(10, 4, 1.0, 1.0).unwrap();
        let y = ReceptorObservation::from_bound_count(6, 10).unwrap();
        let mut det = build_taylor_crn(&params, &y).unwrap();
        let mut rng = rng::stream(32, 0);
        for _ in 0..3_000 {
            match ssa_step(&det.crn, &mut det.state, &mut rng) {
                StepOutcome::Fired { .. } => {
                    assert_eq!(det.state.count(det.x_on) + det.state.count(det.x_off), 1);
                }
                StepOutcome::Quiescent => panic!("flip network cannot quiesce"),
            }
        }

        let mut det = build_lc_crn(6, &unit_state(4));
        for _ in 0..3_000 {
            match ssa_step(&det.crn, &mut det.state, &mut rng) {
                StepOutcome::Fired { .. } => {
                    assert_eq!(det.state.count(det.x_on) + det.state.count(det.x_off), 1);
                }
                StepOutcome::Quiescent => panic!("flip network cannot quiesce"),
            }
        }
    }

    #[test]
    fn lc_build_is_constant_size() {
        for n_bound in [0usize, 7, 30] {
            let det = build_lc_crn(n_bound, &unit_state(13));
            assert_eq!(det.crn.reactions().len(), 2);
            assert_eq!(det.crn.n_species(), 4);
        }
    }

    #[test]
    fn lc_edge_dynamics() {
        let mut rng = rng::stream(33, 0);
        // no bound receptor: activation propensity zero, estimate stays OFF
        let mut det = build_lc_crn(0, &unit_state(5));
        simulate(&det.crn, &mut det.state, 100.0, &mut rng);
        assert_eq!(det.state.count(det.x_on), 0);

        // no active weight: once ON the estimate can never deactivate
        let mut det = build_lc_crn(3, &unit_state(0));
        simulate(&det.crn, &mut det.state, 100.0, &mut rng);
        assert_eq!(det.state.count(det.x_on), 1);
        assert_eq!(ssa_step(&det.crn, &mut det.state, &mut rng), StepOutcome::Quiescent);
    }

    #[test]
    fn lc_stationary_examples() {
        let st = LcDetectorState::new(13, 30, 1.0, 1.0).unwrap();
        assert_eq!(lc_stationary_prob(13, &st), Some(0.5));
        assert_eq!(lc_detect_exact(13, &st), Symbol::One);
        assert_eq!(lc_stationary_prob(0, &st), Some(0.0));
        let st0 = unit_state(0);
        assert_eq!(lc_stationary_prob(4, &st0), Some(1.0));
        assert_eq!(lc_stationary_prob(0, &st0), None);
        assert_eq!(lc_detect_exact(0, &st0), Symbol::Zero);
    }

    #[test]
    fn lc_induced_threshold_tracks_ratio() {
        assert_eq!(lc_induced_threshold(&unit_state(0), 30), 1);
        assert_eq!(lc_induced_threshold(&unit_state(13), 30), 13);
        assert_eq!(lc_induced_threshold(&unit_state(30), 30), 30);
        let half = LcDetectorState::new(13, 30, 2.0, 1.0).unwrap();
        assert_eq!(lc_induced_threshold(&half, 30), 7); // 6.5 rounds up
        let heavy = LcDetectorState::new(40, 40, 1.0, 1.0).unwrap();
        assert_eq!(lc_induced_threshold(&heavy, 30), 31); // beyond any count
    }

    #[test]
    fn crn_detect_edges() {
        let mut rng = rng::stream(34, 0);
        let policy = SamplingPolicy::default();
        // quiescent edge: initial OFF estimate persists
        let mut det = build_lc_crn(0, &unit_state(0));
        let params = policy.resolve(det.rate_on, det.rate_off);
        assert_eq!(crn_detect(&mut det, &params, &mut rng), Symbol::Zero);

        let mut det = build_lc_crn(0, &unit_state(8));
        let params = policy.resolve(det.rate_on, det.rate_off);
        assert_eq!(crn_detect(&mut det, &params, &mut rng), Symbol::Zero);

        let mut det = build_lc_crn(4, &unit_state(0));
        let params = policy.resolve(det.rate_on, det.rate_off);
        assert_eq!(crn_detect(&mut det, &params, &mut rng), Symbol::One);
    }

    #[test]
    fn taylor_detection_at_boundary_count() {
        // stationary probability 0.509 at the threshold count: the sampled
        // decision should land on one in the vast majority of repeats
        let params = TaylorCrnParams::for_threshold(30, 13, 1.0, 1.0).unwrap();
        let y = ReceptorObservation::from_bound_count(13, 30).unwrap();
        let mut rng = rng::stream(35, 0);
        let policy = SamplingPolicy { m_samples: 10_000, ..SamplingPolicy::default() };
        let repeats = 100;
        let wrong = (0..repeats)
            .filter(|_| {
                let mut det = build_taylor_crn(&params, &y).unwrap();
                let sampling = policy.resolve(det.rate_on, det.rate_off);
                crn_detect(&mut det, &sampling, &mut rng) != Symbol::One
            })
            .count();
        assert!(
            (wrong as f64) < 0.05 * repeats as f64,
            "{wrong} wrong decisions out of {repeats}"
        );
    }

    #[test]
    fn update_rule_cases() {
        let st = unit_state(5);
        let pilot0 = PilotSymbol::new(Symbol::Zero);
        let pilot1 = PilotSymbol::new(Symbol::One);
        assert_eq!(st.updated(Symbol::Zero, &pilot0).n_w_on, 5);
        assert_eq!(st.updated(Symbol::One, &pilot1).n_w_on, 5);
        assert_eq!(st.updated(Symbol::One, &pilot0).n_w_on, 6);
        assert_eq!(st.updated(Symbol::Zero, &pilot1).n_w_on, 4);
        // saturation at both reservoir edges
        assert_eq!(unit_state(0).updated(Symbol::Zero, &pilot1).n_w_on, 0);
        assert_eq!(unit_state(30).updated(Symbol::One, &pilot0).n_w_on, 30);
    }

    #[test]
    fn learning_crn_consumes_pilot_once() {
        let st = unit_state(5);
        let pilot = PilotSymbol::new(Symbol::Zero);
        let (crn, mut state, species) =
            build_learning_crn(&st, Symbol::One, &pilot, DEFAULT_UPDATE_RATES).unwrap();
        let mut rng = rng::stream(36, 0);
        match ssa_step(&crn, &mut state, &mut rng) {
            StepOutcome::Fired { .. } => {}
            StepOutcome::Quiescent => panic!("update reaction must fire"),
        }
        assert_eq!(state.count(species.pilot_off), 0);
        assert_eq!(state.count(species.w_on), 6);
        assert_eq!(state.count(species.w_on) + state.count(species.w_off), 30);
        // pilot consumed: propensity of every reaction is now zero
        assert_eq!(ssa_step(&crn, &mut state, &mut rng), StepOutcome::Quiescent);
    }

    #[test]
    fn learning_crn_requires_matching_reactants() {
        // estimate OFF and pilot zero: neither update reaction can fire
        let st = unit_state(5);
        let pilot = PilotSymbol::new(Symbol::Zero);
        let (crn, mut state, species) =
            build_learning_crn(&st, Symbol::Zero, &pilot, DEFAULT_UPDATE_RATES).unwrap();
        let mut rng = rng::stream(37, 0);
        assert_eq!(ssa_step(&crn, &mut state, &mut rng), StepOutcome::Quiescent);
        assert_eq!(state.count(species.w_on), 5);
    }

    #[test]
    fn learning_crn_reproduces_discrete_rule() {
        // long update interval: the chemical outcome must match the discrete
        // update in essentially every trial
        let mut rng = rng::stream(38, 0);
        let mut mismatches = 0usize;
        for trial in 0..1_000u64 {
            let n_w_on = trial % 31;
            let st = unit_state(n_w_on);
            let x_hat = if trial / 31 % 2 == 0 { Symbol::One } else { Symbol::Zero };
            let pilot = PilotSymbol::new(if trial / 62 % 2 == 0 {
                Symbol::One
            } else {
                Symbol::Zero
            });
            let expected = st.updated(x_hat, &pilot).n_w_on;
            let (crn, mut state, species) =
                build_learning_crn(&st, x_hat, &pilot, DEFAULT_UPDATE_RATES).unwrap();
            simulate(&crn, &mut state, 50.0, &mut rng);
            if state.count(species.w_on) != expected {
                mismatches += 1;
            }
            assert_eq!(state.count(species.w_on) + state.count(species.w_off), 30);
        }
        assert!(mismatches <= 10, "{mismatches} of 1000 trials disagreed");
    }

    #[test]
    fn reservoir_sizing() {
        assert_eq!(min_reservoir(30, 1.0, 1.0), 30);
        assert_eq!(min_reservoir(30, 2.0, 1.0), 15);
        assert_eq!(min_reservoir(50, 1.0, 1.0), 50);
    }

    #[test]
    fn stationary_formulas_have_map_property_at_matched_parameters() {
        use crate::reference::LikelihoodModel;
        for (n_receptors, p0, p1) in [
            (30usize, 0.2, 7.0 / 11.0),
            (30, 1.0 / 11.0, 8.0 / 13.0),
            (50, 0.2, 7.0 / 11.0),
            (50, 1.0 / 11.0, 8.0 / 13.0),
        ] {
            let model = LikelihoodModel::new(n_receptors, p0, p1).unwrap();
            let nu = model.optimal_threshold().nu();
            // threshold construction for the derived detector CRN
            let params = TaylorCrnParams::for_threshold(n_receptors, nu, 1.0, 1.0).unwrap();
            assert!(
                model.has_map_property(|n| taylor_stationary_prob(params.theta_x(), 1.0, n)),
                "derived-CRN formula fails MAP property at N={n_receptors}, nu={nu}"
            );
            // matched weight count for the low-complexity CRN at unit ratio
            let st = LcDetectorState::new(nu as u64, n_receptors as u64, 1.0, 1.0).unwrap();
            assert!(
                model.has_map_property(|n| lc_stationary_prob(n, &st).unwrap_or(0.0)),
                "low-complexity formula fails MAP property at N={n_receptors}, nu={nu}"
            );
        }
    }

    #[test]
    fn reloaded_machine_drives_crn_construction() {
        // serialized model -> reload -> reaction-network parameters
        let bm = crate::bm::Fvbm::map_detector(12, 5, 1.0).unwrap();
        let mut buf = Vec::new();
        bm.write_text(&mut buf).unwrap();
        let restored = crate::bm::Fvbm::read_text(buf.as_slice()).unwrap();
        let params = TaylorCrnParams::from_bm(&restored, 2.0).unwrap();
        assert_eq!(params.theta_x(), -4.5);
        assert_eq!(params.weights(), vec![1.0; 12]);
        let y = ReceptorObservation::from_bound_count(5, 12).unwrap();
        let det = build_taylor_crn(&params, &y).unwrap();
        assert_eq!(det.crn.reactions().len(), 7);
        assert!((det.rate_on - 2.0 * 6.0).abs() < 1e-12);
        assert!((det.rate_off - 2.0 * 5.5).abs() < 1e-12);
    }

    #[test]
    fn online_training_on_clean_channel_converges_and_stops() {
        // essentially noiseless channel: zero background, enormous signal
        let channel = ChannelParams::new(0.0, 1e30, 2e-19, 20.0, 10).unwrap();
        let st0 = LcDetectorState::new(0, 10, 1.0, 1.0).unwrap();
        let mut rng = rng::stream(39, 0);
        let out = online_train(&channel, st0, 500, &DetectionMode::Exact, &mut rng).unwrap();
        // with no bound receptors deciding zero and all-bound deciding one,
        // the initial state is already error-free and never moves
        assert!(out.nw_trajectory.iter().all(|&nw| nw == 0));
        assert!(out.ber_curve.iter().all(|&b| b < 1e-9));
    }

    #[test]
    fn online_training_smoke_reaches_threshold_region() {
        let channel = ChannelParams::new(2.5e19, 1.5e20, 2e-19, 20.0, 30).unwrap();
        let st0 = LcDetectorState::new(0, 30, 1.0, 1.0).unwrap();
        let mut rng = rng::stream(40, 0);
        let out = online_train(&channel, st0, 600, &DetectionMode::Exact, &mut rng).unwrap();
        let last = *out.nw_trajectory.last().unwrap();
        assert!(
            (10..=16).contains(&last),
            "weight count {last} far from the optimal threshold 13"
        );
        assert_eq!(out.nw_trajectory.len(), 601);
        assert_eq!(out.ber_curve.len(), 601);
    }

    #[test]
    fn online_training_with_sampled_detection_runs() {
        let channel = ChannelParams::new(2.5e19, 1.5e20, 2e-19, 20.0, 30).unwrap();
        let st0 = LcDetectorState::new(0, 30, 1.0, 1.0).unwrap();
        let mut rng = rng::stream(41, 0);
        let mode = DetectionMode::Sampled(SamplingPolicy {
            m_samples: 51,
            ..SamplingPolicy::default()
        });
        let out = online_train(&channel, st0, 150, &mode, &mut rng).unwrap();
        assert!(*out.nw_trajectory.last().unwrap() > 5);
    }

    proptest! {
        #[test]
        fn update_rule_never_leaves_reservoir(
            n_w_on in 0u64..=30,
            x_hat_bit in 0u8..2,
            pilot_bit in 0u8..2,
            rounds in 1usize..60,
        ) {
            let mut st = unit_state(n_w_on);
            let x_hat = Symbol::from_bit(x_hat_bit).unwrap();
            let pilot = PilotSymbol::new(Symbol::from_bit(pilot_bit).unwrap());
            for _ in 0..rounds {
                st = st.updated(x_hat, &pilot);
                prop_assert!(st.n_w_on <= st.n_w_total);
            }
        }

        #[test]
        fn lc_formula_matches_threshold_decision(
            n_bound in 0usize..=30,
            n_w_on in 0u64..=30,
        ) {
            let st = unit_state(n_w_on);
            let nu = lc_induced_threshold(&st, 30);
            let by_threshold = if n_bound >= nu { Symbol::One } else { Symbol::Zero };
            prop_assert_eq!(lc_detect_exact(n_bound, &st), by_threshold);
        }
    }
}
