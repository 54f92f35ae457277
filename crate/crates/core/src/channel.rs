//! Molecular-communication channel model.
//!
//! A transmitter signals a binary symbol by raising the ligand concentration
//! around the receiver by `delta_c` on top of a background level `c_noise`
//! (binary concentration shift keying). The receiver senses the concentration
//! through `n_receptors` identical, independent ligand-binding receptors;
//! each receptor is bound with a probability set by the concentration and the
//! binding/unbinding rate constants. Receptor states are sampled once per
//! symbol interval and held fixed while the detector runs.

use crate::error::Error;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;

/// A binary transmit symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Zero,
    One,
}

impl Symbol {
    pub fn bit(self) -> u8 {
        match self {
            Symbol::Zero => 0,
            Symbol::One => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self, Error> {
        match bit {
            0 => Ok(Symbol::Zero),
            1 => Ok(Symbol::One),
            other => Err(Error::invalid(format!("symbol bit must be 0 or 1, got {other}"))),
        }
    }

    /// Draw an equiprobable symbol.
    pub fn sample_equiprobable(rng: &mut impl Rng) -> Self {
        if rng.gen::<bool>() {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.bit())
    }
}

/// Stochastic channel parameters: background and signal concentrations
/// (molecules/m^3), receptor binding kinetics, and the receptor count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Background-noise concentration, >= 0.
    pub c_noise: f64,
    /// Concentration increase when a one is transmitted, > 0.
    pub delta_c: f64,
    /// Ligand-receptor binding rate constant (m^3/s), > 0.
    pub k_plus: f64,
    /// Unbinding rate constant (1/s), > 0.
    pub k_minus: f64,
    /// Number of i.i.d. surface receptors, >= 1.
    pub n_receptors: usize,
}

impl ChannelParams {
    pub fn new(
        c_noise: f64,
        delta_c: f64,
        k_plus: f64,
        k_minus: f64,
        n_receptors: usize,
    ) -> Result<Self, Error> {
        let p = ChannelParams { c_noise, delta_c, k_plus, k_minus, n_receptors };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if !(self.c_noise >= 0.0) {
            return Err(Error::invalid(format!("c_noise must be >= 0, got {}", self.c_noise)));
        }
        if !(self.delta_c > 0.0) {
            return Err(Error::invalid(format!("delta_c must be > 0, got {}", self.delta_c)));
        }
        if !(self.k_plus > 0.0) {
            return Err(Error::invalid(format!("k_plus must be > 0, got {}", self.k_plus)));
        }
        if !(self.k_minus > 0.0) {
            return Err(Error::invalid(format!("k_minus must be > 0, got {}", self.k_minus)));
        }
        if self.n_receptors == 0 {
            return Err(Error::invalid("n_receptors must be >= 1"));
        }
        Ok(())
    }

    /// Dissociation ratio `k_minus / k_plus` (a concentration).
    pub fn dissociation(&self) -> f64 {
        self.k_minus / self.k_plus
    }

    /// Ligand concentration around the receiver for symbol `x`:
    /// `c_noise + delta_c * x`.
    pub fn concentration(&self, x: Symbol) -> f64 {
        self.c_noise + self.delta_c * f64::from(x.bit())
    }

    /// Probability that a single receptor is bound given symbol `x`:
    /// `c_x / (c_x + k_minus/k_plus)`. Always in `[0, 1)`.
    pub fn binding_probability(&self, x: Symbol) -> f64 {
        let c = self.concentration(x);
        c / (c + self.dissociation())
    }

    /// Sample the receptor state vector for symbol `x`: each receptor is an
    /// independent Bernoulli draw with the symbol's binding probability.
    pub fn sample_observation(&self, x: Symbol, rng: &mut impl Rng) -> ReceptorObservation {
        ReceptorObservation::sample(self.binding_probability(x), self.n_receptors, rng)
    }

    /// Joint probability of `(y, x)` under equiprobable symbols:
    /// `1/2 * prod_i Pr[Y_i = y_i | X = x]`.
    pub fn joint_pmf(&self, y: &ReceptorObservation, x: Symbol) -> f64 {
        self.joint_pmf_with_prior(y, x, 0.5)
    }

    /// Joint probability with a configurable prior `Pr[X = 1] = prior_one`.
    pub fn joint_pmf_with_prior(&self, y: &ReceptorObservation, x: Symbol, prior_one: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&prior_one));
        let p = self.binding_probability(x);
        let n = y.n_bound() as i32;
        let m = (y.n_receptors() - y.n_bound()) as i32;
        let prior = match x {
            Symbol::One => prior_one,
            Symbol::Zero => 1.0 - prior_one,
        };
        prior * p.powi(n) * (1.0 - p).powi(m)
    }
}

/// Diffusive-pulse parameters used to size `delta_c`; not part of the
/// per-symbol channel itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    /// Number of molecules released instantaneously, > 0.
    pub gamma: f64,
    /// Diffusion coefficient (m^2/s), > 0.
    pub diff_coeff: f64,
    /// Transmitter-receiver distance (m), > 0.
    pub distance: f64,
}

impl DiffusionParams {
    pub fn new(gamma: f64, diff_coeff: f64, distance: f64) -> Result<Self, Error> {
        if !(gamma > 0.0 && diff_coeff > 0.0 && distance > 0.0) {
            return Err(Error::invalid(
                "diffusion parameters gamma, diff_coeff, distance must all be > 0",
            ));
        }
        Ok(DiffusionParams { gamma, diff_coeff, distance })
    }

    /// Concentration at the receiver `tau` seconds after an instantaneous
    /// release: `gamma / (4 pi D tau)^(3/2) * exp(-d^2 / (4 D tau))`.
    pub fn pulse_concentration(&self, tau: f64) -> Result<f64, Error> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("pulse time tau must be > 0, got {tau}")));
        }
        let four_d_tau = 4.0 * self.diff_coeff * tau;
        let norm = (std::f64::consts::PI * four_d_tau).powf(1.5);
        Ok(self.gamma / norm * (-self.distance * self.distance / four_d_tau).exp())
    }

    /// Time of the concentration peak, `d^2 / (6 D)`.
    pub fn peak_time(&self) -> f64 {
        self.distance * self.distance / (6.0 * self.diff_coeff)
    }
}

/// One sampled receptor state vector, held fixed for a symbol interval.
///
/// The bound count is computed at construction, so it is always consistent
/// with the state vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceptorObservation {
    states: Vec<bool>,
    n_bound: usize,
}

impl ReceptorObservation {
    pub fn new(states: Vec<bool>) -> Self {
        let n_bound = states.iter().filter(|&&s| s).count();
        ReceptorObservation { states, n_bound }
    }

    /// Draw `n_receptors` independent Bernoulli(`p`) receptor states.
    pub fn sample(p: f64, n_receptors: usize, rng: &mut impl Rng) -> Self {
        debug_assert!((0.0..=1.0).contains(&p));
        let states = (0..n_receptors).map(|_| rng.gen::<f64>() < p).collect();
        ReceptorObservation::new(states)
    }

    /// Observation with the first `n_bound` receptors bound; receptors are
    /// exchangeable under the i.i.d. channel, so tests and CRN builders that
    /// depend only on the bound count use this.
    pub fn from_bound_count(n_bound: usize, n_receptors: usize) -> Result<Self, Error> {
        if n_bound > n_receptors {
            return Err(Error::OutOfRange(format!(
                "n_bound={n_bound} exceeds n_receptors={n_receptors}"
            )));
        }
        Ok(ReceptorObservation::new(
            (0..n_receptors).map(|i| i < n_bound).collect(),
        ))
    }

    pub fn states(&self) -> &[bool] {
        &self.states
    }

    pub fn n_bound(&self) -> usize {
        self.n_bound
    }

    pub fn n_receptors(&self) -> usize {
        self.states.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn high_noise(n_receptors: usize) -> ChannelParams {
        ChannelParams::new(2.5e19, 1.5e20, 2e-19, 20.0, n_receptors).unwrap()
    }

    fn low_noise(n_receptors: usize) -> ChannelParams {
        ChannelParams::new(1.0e19, 1.5e20, 2e-19, 20.0, n_receptors).unwrap()
    }

    #[test]
    fn concentration_adds_delta_only_for_one() {
        let p = high_noise(30);
        assert_eq!(p.concentration(Symbol::Zero), 2.5e19);
        assert_eq!(p.concentration(Symbol::One), 1.75e20);
        let p = low_noise(30);
        assert_eq!(p.concentration(Symbol::One), 1.6e20);
    }

    #[test]
    fn binding_probability_matches_kinetics() {
        let p = high_noise(30);
        // dissociation ratio 20 / 2e-19 = 1e20
        assert!((p.dissociation() - 1e20).abs() < 1e5);
        assert!((p.binding_probability(Symbol::Zero) - 0.2).abs() < 1e-12);
        assert!((p.binding_probability(Symbol::One) - 7.0 / 11.0).abs() < 1e-12);
        let p = low_noise(30);
        assert!((p.binding_probability(Symbol::Zero) - 1.0 / 11.0).abs() < 1e-12);
        assert!((p.binding_probability(Symbol::One) - 8.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn binding_probability_saturates_below_one() {
        // ten orders of magnitude above the dissociation ratio
        let p = ChannelParams::new(1e30, 1.0, 2e-19, 20.0, 1).unwrap();
        let prob = p.binding_probability(Symbol::Zero);
        assert!(prob > 1.0 - 1e-9 && prob < 1.0);
    }

    #[test]
    fn observation_edge_probabilities() {
        let mut rng = rng::stream(1, 0);
        let all_off = ReceptorObservation::sample(0.0, 30, &mut rng);
        assert_eq!(all_off.n_bound(), 0);
        assert!(all_off.states().iter().all(|&s| !s));
        let all_on = ReceptorObservation::sample(1.0, 30, &mut rng);
        assert_eq!(all_on.n_bound(), 30);
        assert!(all_on.states().iter().all(|&s| s));
        // c_noise = 0 gives binding probability exactly 0 for x = 0
        let p = ChannelParams::new(0.0, 1.0, 2e-19, 20.0, 8).unwrap();
        let y = p.sample_observation(Symbol::Zero, &mut rng);
        assert_eq!(y.n_bound(), 0);
    }

    #[test]
    fn observation_mean_matches_binomial() {
        // mean of n_bound over 1e5 draws within 3 sigma of N*p
        let p = high_noise(30);
        let mut rng = rng::stream(2, 0);
        let draws = 100_000;
        let total: usize = (0..draws)
            .map(|_| p.sample_observation(Symbol::Zero, &mut rng).n_bound())
            .sum();
        let mean = total as f64 / draws as f64;
        let sigma = (30.0 * 0.2 * 0.8 / draws as f64).sqrt();
        assert!(
            (mean - 6.0).abs() < 3.0 * sigma,
            "mean {mean} outside 6 +- {}",
            3.0 * sigma
        );
    }

    #[test]
    fn empirical_n_bound_passes_chi_square() {
        // chi-square goodness of fit against Binomial(30, 0.2) at 1%
        // significance, 1e5 draws. Bins with expected count < 5 are pooled
        // into their inner neighbor from both tails.
        let params = high_noise(30);
        let (n, p) = (30usize, 0.2f64);
        let draws = 100_000usize;
        let mut rng = rng::stream(3, 0);
        let mut counts = vec![0u64; n + 1];
        for _ in 0..draws {
            counts[params.sample_observation(Symbol::Zero, &mut rng).n_bound()] += 1;
        }
        let mut pmf = vec![0.0f64; n + 1];
        for (k, slot) in pmf.iter_mut().enumerate() {
            let mut ln = 0.0;
            for i in 0..k {
                ln += ((n - i) as f64 / (k - i) as f64).ln();
            }
            *slot = (ln + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp();
        }
        let expected: Vec<f64> = pmf.iter().map(|q| q * draws as f64).collect();
        // pool tails until every remaining bin expects >= 5
        let mut lo = 0;
        while expected[..=lo].iter().sum::<f64>() < 5.0 {
            lo += 1;
        }
        let mut hi = n;
        while expected[hi..].iter().sum::<f64>() < 5.0 {
            hi -= 1;
        }
        let mut chi2 = 0.0;
        let mut df = 0i32;
        let mut bin = |obs: f64, exp: f64| {
            chi2 += (obs - exp) * (obs - exp) / exp;
            df += 1;
        };
        bin(
            counts[..=lo].iter().sum::<u64>() as f64,
            expected[..=lo].iter().sum::<f64>(),
        );
        for k in lo + 1..hi {
            bin(counts[k] as f64, expected[k]);
        }
        bin(
            counts[hi..].iter().sum::<u64>() as f64,
            expected[hi..].iter().sum::<f64>(),
        );
        df -= 1;
        // 99th percentile of chi-square for the df values this pooling can
        // produce (scipy.stats.chi2.ppf(0.99, df))
        let critical = match df {
            12 => 26.216967305535853,
            13 => 27.68824961045705,
            14 => 29.141237740672796,
            15 => 30.57791416689249,
            16 => 31.999926908815176,
            _ => panic!("unexpected df {df}"),
        };
        assert!(chi2 < critical, "chi2 {chi2} >= critical {critical} (df {df})");
    }

    #[test]
    fn joint_pmf_examples() {
        let p = ChannelParams::new(2.5e19, 1.5e20, 2e-19, 20.0, 2).unwrap();
        let y = ReceptorObservation::from_bound_count(2, 2).unwrap();
        assert!((p.joint_pmf(&y, Symbol::Zero) - 0.02).abs() < 1e-15);
        // zero binding probability and a bound receptor is impossible
        let p0 = ChannelParams::new(0.0, 1.0, 2e-19, 20.0, 2).unwrap();
        let y1 = ReceptorObservation::from_bound_count(1, 2).unwrap();
        assert_eq!(p0.joint_pmf(&y1, Symbol::Zero), 0.0);
    }

    #[test]
    fn joint_pmf_normalizes() {
        for n_receptors in [1usize, 4, 10] {
            let p = high_noise(n_receptors);
            let mut total = 0.0;
            for bits in 0u32..(1 << n_receptors) {
                let states: Vec<bool> = (0..n_receptors).map(|i| bits >> i & 1 == 1).collect();
                let y = ReceptorObservation::new(states);
                total += p.joint_pmf(&y, Symbol::Zero) + p.joint_pmf(&y, Symbol::One);
            }
            assert!((total - 1.0).abs() < 1e-10, "sum {total} for N={n_receptors}");
        }
    }

    #[test]
    fn pulse_matches_reported_scale() {
        let dp = DiffusionParams::new(1e3, 1e-10, 0.75e-6).unwrap();
        let peak = dp.pulse_concentration(dp.peak_time()).unwrap();
        assert!(
            (1e20..1e21).contains(&peak),
            "peak {peak:e} not in the expected order of magnitude"
        );
        assert!((dp.peak_time() - 9.375e-4).abs() < 1e-9);
        // decays toward zero for long times (polynomially, via the tau^-3/2 front)
        let far = dp.pulse_concentration(1e9).unwrap();
        let farther = dp.pulse_concentration(1e12).unwrap();
        assert!(far < 1e-12 * peak);
        assert!(farther < 1e-4 * far);
        assert!(dp.pulse_concentration(0.0).is_err());
        assert!(dp.pulse_concentration(-1.0).is_err());
    }

    #[test]
    fn pulse_peak_confirmed_by_grid_search() {
        let dp = DiffusionParams::new(1e3, 1e-10, 0.75e-6).unwrap();
        let analytic = dp.peak_time();
        let mut best = (0.0, f64::MIN);
        let steps = 20_000;
        for i in 1..=steps {
            let tau = analytic * 0.2 + analytic * 2.8 * i as f64 / steps as f64;
            let c = dp.pulse_concentration(tau).unwrap();
            if c > best.1 {
                best = (tau, c);
            }
        }
        let grid_step = analytic * 2.8 / steps as f64;
        assert!(
            (best.0 - analytic).abs() <= 2.0 * grid_step,
            "grid argmax {} vs analytic {analytic}",
            best.0
        );
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ChannelParams::new(-1.0, 1.0, 1.0, 1.0, 3).is_err());
        assert!(ChannelParams::new(0.0, 0.0, 1.0, 1.0, 3).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 0.0, 1.0, 3).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 1.0, -2.0, 3).is_err());
        assert!(ChannelParams::new(0.0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(DiffusionParams::new(0.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn binding_probability_in_unit_interval_and_ordered(
            c_noise in 0.0..1e22f64,
            delta_c in 1e10..1e22f64,
            diss in 1e10..1e22f64,
        ) {
            let p = ChannelParams::new(c_noise, delta_c, 1.0, diss, 5).unwrap();
            let p0 = p.binding_probability(Symbol::Zero);
            let p1 = p.binding_probability(Symbol::One);
            prop_assert!((0.0..1.0).contains(&p0));
            prop_assert!((0.0..1.0).contains(&p1));
            // delta_c > 0 makes the one-symbol probability strictly larger
            prop_assert!(p1 > p0);
        }

        #[test]
        fn binding_probability_increases_with_concentration(
            c_lo in 0.0..1e21f64,
            bump in 1e12..1e21f64,
        ) {
            let a = ChannelParams::new(c_lo, 1.0, 2e-19, 20.0, 5).unwrap();
            let b = ChannelParams::new(c_lo + bump, 1.0, 2e-19, 20.0, 5).unwrap();
            prop_assert!(
                b.binding_probability(Symbol::Zero) > a.binding_probability(Symbol::Zero)
            );
        }
    }
}
