//! Exact reference detection machinery.
//!
//! Under the i.i.d.-receptor channel the bound-receptor count is binomial
//! under either symbol, so the MAP detector (equiprobable symbols) reduces to
//! a count threshold. This module computes the binomial likelihoods, the
//! posterior, the optimal threshold, its exact bit error rate, and the
//! surrogate-model check used to validate every other detector in the crate:
//! a probability model f(n) makes MAP-equivalent decisions iff f(n) >= 1/2
//! exactly when the true posterior is >= 1/2.

use crate::channel::{ChannelParams, Symbol};
use crate::error::Error;

/// Binomial likelihood model of the bound-receptor count under each symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct LikelihoodModel {
    n_receptors: usize,
    p0: f64,
    p1: f64,
    ln_choose: Vec<f64>,
}

impl LikelihoodModel {
    /// Requires `0 <= p0 < p1 < 1`; the strict ordering guarantees a
    /// monotone likelihood ratio and hence a single up-crossing threshold.
    pub fn new(n_receptors: usize, p0: f64, p1: f64) -> Result<Self, Error> {
        if n_receptors == 0 {
            return Err(Error::invalid("n_receptors must be >= 1"));
        }
        if !(0.0 <= p0 && p0 < p1 && p1 < 1.0) {
            return Err(Error::invalid(format!(
                "binding probabilities must satisfy 0 <= p0 < p1 < 1, got p0={p0}, p1={p1}"
            )));
        }
        // ln C(N, k) via a cumulative product; exact to rounding for N <= a few thousand
        let mut ln_choose = vec![0.0; n_receptors + 1];
        for k in 1..=n_receptors {
            ln_choose[k] =
                ln_choose[k - 1] + ((n_receptors - k + 1) as f64).ln() - (k as f64).ln();
        }
        Ok(LikelihoodModel { n_receptors, p0, p1, ln_choose })
    }

    /// Model induced by a channel's two binding probabilities.
    pub fn from_channel(params: &ChannelParams) -> Result<Self, Error> {
        LikelihoodModel::new(
            params.n_receptors,
            params.binding_probability(Symbol::Zero),
            params.binding_probability(Symbol::One),
        )
    }

    pub fn n_receptors(&self) -> usize {
        self.n_receptors
    }

    pub fn p(&self, x: Symbol) -> f64 {
        match x {
            Symbol::Zero => self.p0,
            Symbol::One => self.p1,
        }
    }

    fn check_range(&self, n: usize) -> Result<(), Error> {
        if n > self.n_receptors {
            return Err(Error::OutOfRange(format!(
                "count {n} exceeds n_receptors {}",
                self.n_receptors
            )));
        }
        Ok(())
    }

    /// `Pr[N_bound = n | X = x]`, the Binomial(n_receptors, p_x) pmf.
    pub fn likelihood(&self, n: usize, x: Symbol) -> Result<f64, Error> {
        self.check_range(n)?;
        let p = self.p(x);
        let k = n as f64;
        let m = (self.n_receptors - n) as f64;
        // p = 0 needs explicit handling: 0^0 = 1 here
        let value = if p == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (self.ln_choose[n] + k * p.ln() + m * (1.0 - p).ln()).exp()
        };
        Ok(value)
    }

    /// Posterior `Pr[X = 1 | N_bound = n]` under equiprobable symbols.
    pub fn posterior(&self, n: usize) -> Result<f64, Error> {
        self.posterior_with_prior(n, 0.5)
    }

    /// Posterior with `Pr[X = 1] = prior_one`.
    pub fn posterior_with_prior(&self, n: usize, prior_one: f64) -> Result<f64, Error> {
        let l0 = self.likelihood(n, Symbol::Zero)? * (1.0 - prior_one);
        let l1 = self.likelihood(n, Symbol::One)? * prior_one;
        let total = l0 + l1;
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Domain(format!(
                "both likelihoods vanish at n={n}; posterior undefined"
            )));
        }
        Ok(l1 / total)
    }

    /// Smallest count whose posterior reaches 1/2, found by an exact sweep;
    /// `n_receptors + 1` when no count qualifies (the always-zero detector).
    pub fn optimal_threshold(&self) -> ThresholdDetector {
        for n in 0..=self.n_receptors {
            if self.posterior(n).expect("valid model has defined posteriors") >= 0.5 {
                return ThresholdDetector::new(n, self.n_receptors)
                    .expect("threshold within range by construction");
            }
        }
        ThresholdDetector::new(self.n_receptors + 1, self.n_receptors).unwrap()
    }

    /// `Pr[N_bound >= nu | X = x]`, summed from the small tail for accuracy.
    pub fn tail_at_least(&self, nu: usize, x: Symbol) -> f64 {
        if nu > self.n_receptors {
            return 0.0;
        }
        (nu..=self.n_receptors)
            .rev()
            .map(|n| self.likelihood(n, x).unwrap())
            .sum()
    }

    /// Exact error probability of a threshold detector on this model:
    /// half the false-alarm tail plus half the missed-detection mass.
    pub fn analytic_ber(&self, detector: &ThresholdDetector) -> f64 {
        let nu = detector.nu();
        let false_alarm = self.tail_at_least(nu, Symbol::Zero);
        let missed = 1.0 - self.tail_at_least(nu, Symbol::One);
        0.5 * false_alarm + 0.5 * missed
    }

    /// True iff the likelihoods have a single local maximum in `n`
    /// (monotone up to the mode, monotone down after it).
    pub fn is_unimodal(&self, x: Symbol) -> bool {
        let pmf: Vec<f64> = (0..=self.n_receptors)
            .map(|n| self.likelihood(n, x).unwrap())
            .collect();
        let mut descending = false;
        for w in pmf.windows(2) {
            if w[1] >= w[0] {
                if descending {
                    return false;
                }
            } else {
                descending = true;
            }
        }
        true
    }

    /// MAP-property check: `f` makes MAP-equivalent decisions iff
    /// `f(n) >= 1/2 <=> posterior(n) >= 1/2` for every count.
    pub fn has_map_property(&self, f: impl Fn(usize) -> f64) -> bool {
        (0..=self.n_receptors).all(|n| {
            let surrogate = f(n);
            debug_assert!(
                (0.0..=1.0).contains(&surrogate),
                "surrogate value {surrogate} at n={n} is not a probability"
            );
            (surrogate >= 0.5) == (self.posterior(n).unwrap() >= 0.5)
        })
    }
}

/// Count-threshold detector: decides one iff the bound count reaches `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThresholdDetector {
    nu: usize,
    n_receptors: usize,
}

impl ThresholdDetector {
    /// `nu` may range over `[0, n_receptors + 1]`; the two extremes are the
    /// degenerate always-one and always-zero detectors.
    pub fn new(nu: usize, n_receptors: usize) -> Result<Self, Error> {
        if nu > n_receptors + 1 {
            return Err(Error::OutOfRange(format!(
                "threshold {nu} outside [0, {}]",
                n_receptors + 1
            )));
        }
        Ok(ThresholdDetector { nu, n_receptors })
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn n_receptors(&self) -> usize {
        self.n_receptors
    }

    /// Ties decide one: a count equal to the threshold maps to symbol one.
    pub fn detect(&self, n_bound: usize) -> Symbol {
        if n_bound >= self.nu {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn scenario(n_receptors: usize, high_noise: bool) -> LikelihoodModel {
        let (p0, p1) = if high_noise {
            (0.2, 7.0 / 11.0)
        } else {
            (1.0 / 11.0, 8.0 / 13.0)
        };
        LikelihoodModel::new(n_receptors, p0, p1).unwrap()
    }

    #[test]
    fn likelihood_examples() {
        let m = scenario(30, true);
        assert!((m.likelihood(0, Symbol::Zero).unwrap() - 0.8f64.powi(30)).abs() < 1e-18);
        let sym = LikelihoodModel::new(2, 0.25, 0.5).unwrap();
        assert!((sym.likelihood(1, Symbol::One).unwrap() - 0.5).abs() < 1e-15);
        for x in [Symbol::Zero, Symbol::One] {
            let total: f64 = (0..=30).map(|n| m.likelihood(n, x).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(m.likelihood(31, Symbol::Zero).is_err());
    }

    #[test]
    fn posterior_monotone_and_boundary() {
        let m = scenario(30, true);
        let mut prev = -1.0;
        for n in 0..=30 {
            let post = m.posterior(n).unwrap();
            assert!(post >= prev, "posterior decreased at n={n}");
            prev = post;
        }
        assert!(m.posterior(12).unwrap() < 0.5);
        assert!(m.posterior(13).unwrap() > 0.5);
    }

    #[test]
    fn posterior_near_half_for_nearly_equal_probabilities() {
        let m = LikelihoodModel::new(10, 0.4999999, 0.5000001).unwrap();
        for n in 0..=10 {
            assert!((m.posterior(n).unwrap() - 0.5).abs() < 1e-5);
        }
        // equal probabilities are rejected outright
        assert!(LikelihoodModel::new(10, 0.5, 0.5).is_err());
    }

    #[test]
    fn optimal_thresholds_for_reference_scenarios() {
        assert_eq!(scenario(30, true).optimal_threshold().nu(), 13);
        assert_eq!(scenario(30, false).optimal_threshold().nu(), 10);
        assert_eq!(scenario(50, true).optimal_threshold().nu(), 21);
        assert_eq!(scenario(50, false).optimal_threshold().nu(), 16);
    }

    #[test]
    fn detect_tie_goes_to_one() {
        let d = ThresholdDetector::new(13, 30).unwrap();
        assert_eq!(d.detect(13), Symbol::One);
        assert_eq!(d.detect(12), Symbol::Zero);
        let always_one = ThresholdDetector::new(0, 30).unwrap();
        assert_eq!(always_one.detect(0), Symbol::One);
    }

    #[test]
    fn degenerate_detectors_err_half_the_time() {
        let m = scenario(30, true);
        let always_one = ThresholdDetector::new(0, 30).unwrap();
        let always_zero = ThresholdDetector::new(31, 30).unwrap();
        assert!((m.analytic_ber(&always_one) - 0.5).abs() < 1e-12);
        assert!((m.analytic_ber(&always_zero) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn optimal_threshold_minimizes_analytic_ber() {
        for m in [
            scenario(30, true),
            scenario(30, false),
            scenario(50, true),
            scenario(50, false),
        ] {
            let nu = m.optimal_threshold().nu();
            let best = (0..=m.n_receptors() + 1)
                .min_by(|&a, &b| {
                    let ba = m.analytic_ber(&ThresholdDetector::new(a, m.n_receptors()).unwrap());
                    let bb = m.analytic_ber(&ThresholdDetector::new(b, m.n_receptors()).unwrap());
                    ba.partial_cmp(&bb).unwrap()
                })
                .unwrap();
            assert_eq!(nu, best);
        }
    }

    #[test]
    fn binomial_likelihoods_are_unimodal() {
        for m in [
            scenario(30, true),
            scenario(30, false),
            scenario(50, true),
            scenario(50, false),
            LikelihoodModel::new(1, 0.1, 0.9).unwrap(),
        ] {
            assert!(m.is_unimodal(Symbol::Zero));
            assert!(m.is_unimodal(Symbol::One));
        }
    }

    #[test]
    fn map_property_examples() {
        let m = scenario(30, true);
        assert!(m.has_map_property(|n| m.posterior(n).unwrap()));
        assert!(!m.has_map_property(|_| 0.6));
    }

    #[test]
    fn monte_carlo_ber_matches_analytic() {
        let m = scenario(30, true);
        let d = m.optimal_threshold();
        let analytic = m.analytic_ber(&d);
        let mut rng = rng::stream(5, 0);
        let symbols = 200_000usize;
        let mut errors = 0usize;
        for _ in 0..symbols {
            let x = Symbol::sample_equiprobable(&mut rng);
            let p = m.p(x);
            let n_bound = (0..30).filter(|_| rng.gen::<f64>() < p).count();
            if d.detect(n_bound) != x {
                errors += 1;
            }
        }
        let ber = errors as f64 / symbols as f64;
        let se = (analytic * (1.0 - analytic) / symbols as f64).sqrt();
        assert!(
            (ber - analytic).abs() < 3.0 * se,
            "MC {ber} vs analytic {analytic} (3se {})",
            3.0 * se
        );
    }

    #[test]
    fn zero_p0_is_supported() {
        let m = LikelihoodModel::new(5, 0.0, 0.5).unwrap();
        assert_eq!(m.likelihood(0, Symbol::Zero).unwrap(), 1.0);
        assert_eq!(m.likelihood(3, Symbol::Zero).unwrap(), 0.0);
        assert_eq!(m.posterior(3).unwrap(), 1.0);
        // n = 0 still defined
        assert!(m.posterior(0).unwrap() < 0.5);
        assert_eq!(m.optimal_threshold().nu(), 1);
    }

    proptest! {
        #[test]
        fn posterior_monotone_for_random_models(
            n_receptors in 1usize..40,
            p0 in 0.0..0.8f64,
            gap in 0.01..0.2f64,
        ) {
            let p1 = (p0 + gap).min(0.999);
            prop_assume!(p0 < p1 && p1 < 1.0);
            let m = LikelihoodModel::new(n_receptors, p0, p1).unwrap();
            let mut prev = -1.0;
            for n in 0..=n_receptors {
                let post = m.posterior(n).unwrap();
                prop_assert!(post >= prev - 1e-12);
                prev = post;
            }
        }
    }
}
