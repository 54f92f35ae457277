//! Fully-visible Boltzmann machine detector.
//!
//! Node 0 carries the symbol estimate, nodes `1..=n_receptors` mirror the
//! receptor states. The machine's joint law is
//! `p(z) = exp(z' W z / 2 + theta' z) / Z` with a symmetric, zero-diagonal
//! weight matrix; the normalization is never evaluated because sampling and
//! detection only need the node conditionals `sigma(theta_i + sum_j W_ij z_j)`.
//!
//! Entries coupling two receptors carry no information about the symbol and
//! stay pinned at zero throughout training (the `mask`), which shrinks the
//! parameter count to the star of symbol-receptor weights plus biases.
//! Training matches first- and second-order moments of channel data against
//! Gibbs-sampled model moments under a stepped learning-rate schedule.

use crate::channel::{ChannelParams, ReceptorObservation, Symbol};
use crate::error::Error;
use crate::rng::{self, streams};
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fully-visible Boltzmann machine over the symbol node and receptor nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct Fvbm {
    weights: Array2<f64>,
    biases: Array1<f64>,
    mask: Array2<bool>,
}

impl Fvbm {
    /// Validates symmetry, zero diagonal, and that masked-out entries are
    /// exactly zero.
    pub fn new(weights: Array2<f64>, biases: Array1<f64>, mask: Array2<bool>) -> Result<Self, Error> {
        let n = biases.len();
        if weights.dim() != (n, n) || mask.dim() != (n, n) {
            return Err(Error::invalid("weight/mask shape must match bias length"));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("diagonal entry ({i},{i}) must be zero")));
            }
            for j in 0..n {
                if weights[(i, j)] != weights[(j, i)] || mask[(i, j)] != mask[(j, i)] {
                    return Err(Error::invalid(format!("entry ({i},{j}) breaks symmetry")));
                }
                if !mask[(i, j)] && weights[(i, j)] != 0.0 {
                    return Err(Error::invalid(format!(
                        "masked-out entry ({i},{j}) must be zero"
                    )));
                }
            }
        }
        Ok(Fvbm { weights, biases, mask })
    }

    /// Detector structure: only symbol-receptor weights are trainable.
    fn detector_mask(n_nodes: usize) -> Array2<bool> {
        Array2::from_shape_fn((n_nodes, n_nodes), |(i, j)| i != j && (i == 0 || j == 0))
    }

    /// All-zero machine with the detector mask.
    pub fn zeros(n_receptors: usize) -> Self {
        let n = n_receptors + 1;
        Fvbm {
            weights: Array2::zeros((n, n)),
            biases: Array1::zeros(n),
            mask: Self::detector_mask(n),
        }
    }

    /// Random initialization: draw an i.i.d. Gaussian matrix with variance
    /// `1/(n_receptors+1)`, symmetrize as `(V + V')/2`, zero the diagonal and
    /// the receptor-receptor block, and start all biases at zero.
    pub fn init_random(n_receptors: usize, rng: &mut impl Rng) -> Self {
        let n = n_receptors + 1;
        let normal = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("positive std");
        let v = Array2::from_shape_fn((n, n), |_| normal.sample(rng));
        let mask = Self::detector_mask(n);
        let mut weights = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if mask[(i, j)] {
                    weights[(i, j)] = 0.5 * (v[(i, j)] + v[(j, i)]);
                }
            }
        }
        Fvbm { weights, biases: Array1::zeros(n), mask }
    }

    /// Detector with the MAP property for a known threshold: every
    /// symbol-receptor weight equals `w_xy` and the symbol bias is
    /// `-(nu - 1/2) * w_xy`, so the symbol conditional crosses 1/2 exactly
    /// at `n_bound = nu`.
    pub fn map_detector(n_receptors: usize, nu: usize, w_xy: f64) -> Result<Self, Error> {
        if !(w_xy > 0.0) {
            return Err(Error::Domain(format!(
                "MAP construction requires a positive shared weight, got {w_xy}"
            )));
        }
        if nu > n_receptors + 1 {
            return Err(Error::OutOfRange(format!(
                "threshold {nu} outside [0, {}]",
                n_receptors + 1
            )));
        }
        let mut bm = Fvbm::zeros(n_receptors);
        for j in 1..=n_receptors {
            bm.weights[(0, j)] = w_xy;
            bm.weights[(j, 0)] = w_xy;
        }
        bm.biases[0] = -(nu as f64 - 0.5) * w_xy;
        Ok(bm)
    }

    pub fn n_nodes(&self) -> usize {
        self.biases.len()
    }

    pub fn n_receptors(&self) -> usize {
        self.n_nodes() - 1
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn biases(&self) -> &Array1<f64> {
        &self.biases
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    /// Symbol bias `theta_x` (node 0).
    pub fn symbol_bias(&self) -> f64 {
        self.biases[0]
    }

    /// Weights between the symbol node and each receptor node.
    pub fn symbol_weights(&self) -> Vec<f64> {
        (1..self.n_nodes()).map(|j| self.weights[(0, j)]).collect()
    }

    /// `Pr[Z_i = 1 | rest]` given the full node state; entry `i` of `state`
    /// is ignored through the zero diagonal.
    pub fn conditional_prob(&self, i: usize, state: &[bool]) -> f64 {
        debug_assert_eq!(state.len(), self.n_nodes());
        debug_assert!(i < self.n_nodes());
        let field: f64 = self
            .weights
            .row(i)
            .iter()
            .zip(state)
            .filter_map(|(w, &on)| on.then_some(*w))
            .sum();
        sigmoid(self.biases[i] + field)
    }

    /// Gibbs-sample the machine: sequential full sweeps over the nodes with
    /// one recorded sample per sweep. The chain starts from a uniform random
    /// state and no burn-in is discarded. Clamped nodes keep their value.
    pub fn gibbs_sample(
        &self,
        n_samples: usize,
        clamp: &[(usize, bool)],
        rng: &mut impl Rng,
    ) -> Array2<u8> {
        let n = self.n_nodes();
        let mut clamped = vec![None; n];
        for &(i, v) in clamp {
            assert!(i < n, "clamp index {i} out of range");
            clamped[i] = Some(v);
        }
        let mut state: Vec<bool> = (0..n)
            .map(|i| clamped[i].unwrap_or_else(|| rng.gen::<bool>()))
            .collect();
        let mut samples = Array2::zeros((n_samples, n));
        for mut row in samples.rows_mut() {
            for i in 0..n {
                if clamped[i].is_none() {
                    state[i] = rng.gen::<f64>() < self.conditional_prob(i, &state);
                }
            }
            for (slot, &on) in row.iter_mut().zip(&state) {
                *slot = u8::from(on);
            }
        }
        samples
    }

    /// Conditional probability of the symbol node given a receptor
    /// observation, evaluated in closed form:
    /// `sigma(theta_x + sum_i W_{x,i} y_i)`.
    pub fn posterior(&self, y: &ReceptorObservation) -> f64 {
        debug_assert_eq!(y.n_receptors(), self.n_receptors());
        let field: f64 = y
            .states()
            .iter()
            .enumerate()
            .filter(|&(_, &on)| on)
            .map(|(i, _)| self.weights[(0, i + 1)])
            .sum();
        sigmoid(self.biases[0] + field)
    }

    /// Sample-average detection: draw `m_samples` independent symbol-node
    /// samples with the receptors clamped to `y` and decide one iff the
    /// sample mean reaches 1/2.
    pub fn detect_sampled(
        &self,
        y: &ReceptorObservation,
        m_samples: usize,
        rng: &mut impl Rng,
    ) -> Symbol {
        assert!(m_samples >= 1, "m_samples must be >= 1");
        // with the receptors clamped the symbol node has no feedback, so its
        // clamped Gibbs chain is an i.i.d. Bernoulli sequence
        let p = self.posterior(y);
        let ones = (0..m_samples).filter(|_| rng.gen::<f64>() < p).count();
        if 2 * ones >= m_samples {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    /// Deterministic detection, the infinite-sample limit of
    /// [`detect_sampled`](Self::detect_sampled): one iff the symbol
    /// conditional reaches 1/2.
    pub fn detect_exact(&self, y: &ReceptorObservation) -> Symbol {
        if self.posterior(y) >= 0.5 {
            Symbol::One
        } else {
            Symbol::Zero
        }
    }

    /// One moment-matching ascent step: weights move toward the data's
    /// second moments on trainable entries, biases toward the first moments.
    pub fn train_step(
        &mut self,
        data: &MomentEstimates,
        model: &MomentEstimates,
        eta: f64,
    ) -> Result<(), Error> {
        let n = self.n_nodes();
        if data.first.len() != n || model.first.len() != n {
            return Err(Error::invalid("moment shape mismatch"));
        }
        for i in 0..n {
            self.biases[i] += eta * (data.first[i] - model.first[i]);
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.mask[(i, j)] {
                    let delta = eta * (data.second[(i, j)] - model.second[(i, j)]);
                    self.weights[(i, j)] += delta;
                    self.weights[(j, i)] = self.weights[(i, j)];
                }
            }
        }
        Ok(())
    }

    /// Write the flat text form: a header with the receptor count, the bias
    /// vector, then the upper-triangle weights row by row. Values use the
    /// shortest round-tripping decimal form, so reloading is bit-exact.
    pub fn write_text(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "fvbm v1")?;
        writeln!(w, "n_receptors {}", self.n_receptors())?;
        let biases: Vec<String> = self.biases.iter().map(f64::to_string).collect();
        writeln!(w, "theta {}", biases.join(" "))?;
        let n = self.n_nodes();
        for i in 0..n - 1 {
            let row: Vec<String> = (i + 1..n).map(|j| self.weights[(i, j)].to_string()).collect();
            writeln!(w, "w {}", row.join(" "))?;
        }
        Ok(())
    }

    /// Parse the text form written by [`write_text`](Self::write_text).
    /// The detector mask is reinstated on load.
    pub fn read_text(r: impl BufRead) -> Result<Self, Error> {
        let mut lines = r.lines();
        let mut next = || -> Result<String, Error> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of model file".into()))?
                .map_err(Error::Io)
        };
        let header = next()?;
        if header.trim() != "fvbm v1" {
            return Err(Error::Parse(format!("unrecognized header {header:?}")));
        }
        let nr_line = next()?;
        let n_receptors: usize = nr_line
            .strip_prefix("n_receptors ")
            .ok_or_else(|| Error::Parse("expected n_receptors line".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad n_receptors: {e}")))?;
        let n = n_receptors + 1;
        let parse_floats = |line: &str, prefix: &str| -> Result<Vec<f64>, Error> {
            line.strip_prefix(prefix)
                .ok_or_else(|| Error::Parse(format!("expected line starting with {prefix:?}")))?
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|e| Error::Parse(format!("bad float {tok:?}: {e}")))
                })
                .collect()
        };
        let biases = parse_floats(&next()?, "theta ")?;
        if biases.len() != n {
            return Err(Error::Parse(format!("expected {n} biases, got {}", biases.len())));
        }
        let mut weights = Array2::zeros((n, n));
        for i in 0..n - 1 {
            let row = parse_floats(&next()?, "w ")?;
            if row.len() != n - i - 1 {
                return Err(Error::Parse(format!("row {i} has wrong length")));
            }
            for (offset, value) in row.into_iter().enumerate() {
                let j = i + 1 + offset;
                weights[(i, j)] = value;
                weights[(j, i)] = value;
            }
        }
        Fvbm::new(weights, Array1::from_vec(biases), Self::detector_mask(n))
    }
}

/// Empirical first- and second-order moments of a binary sample matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimates {
    pub first: Array1<f64>,
    pub second: Array2<f64>,
}

impl MomentEstimates {
    /// Sample means of `z` and `z z'`. For binary samples the diagonal of
    /// the second moment equals the first moment.
    pub fn from_samples(samples: &ArrayView2<u8>) -> Result<Self, Error> {
        let (s, n) = samples.dim();
        if s == 0 {
            return Err(Error::Domain("cannot estimate moments from zero samples".into()));
        }
        let mut first = Array1::zeros(n);
        let mut second = Array2::zeros((n, n));
        for row in samples.rows() {
            for i in 0..n {
                if row[i] != 0 {
                    first[i] += 1.0;
                    for j in i..n {
                        if row[j] != 0 {
                            second[(i, j)] += 1.0;
                        }
                    }
                }
            }
        }
        let scale = 1.0 / s as f64;
        first.mapv_inplace(|v| v * scale);
        for i in 0..n {
            for j in i..n {
                second[(i, j)] *= scale;
                second[(j, i)] = second[(i, j)];
            }
        }
        Ok(MomentEstimates { first, second })
    }
}

/// Stepped learning-rate schedule: `(first_step, rate)` breakpoints; the
/// rate of the latest breakpoint at or before a step applies, so every step
/// has a defined rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule(Vec<(usize, f64)>);

impl Schedule {
    pub fn new(breakpoints: Vec<(usize, f64)>) -> Result<Self, Error> {
        if breakpoints.first().map(|&(step, _)| step) != Some(0) {
            return Err(Error::invalid("schedule must start at step 0"));
        }
        if !breakpoints.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::invalid("schedule breakpoints must be strictly increasing"));
        }
        if breakpoints.iter().any(|&(_, rate)| !(rate > 0.0)) {
            return Err(Error::invalid("schedule rates must be > 0"));
        }
        Ok(Schedule(breakpoints))
    }

    pub fn constant(rate: f64) -> Self {
        Schedule::new(vec![(0, rate)]).expect("constant schedule is valid")
    }

    /// The stepped schedule used for all training runs here:
    /// 1.0 for steps 0-19, 0.5 for 20-49, 0.1 from step 50 on.
    pub fn stepped() -> Self {
        Schedule::new(vec![(0, 1.0), (20, 0.5), (50, 0.1)]).expect("valid schedule")
    }

    pub fn rate_at(&self, step: usize) -> f64 {
        self.0
            .iter()
            .take_while(|&&(first, _)| first <= step)
            .last()
            .expect("schedule starts at step 0")
            .1
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::stepped()
    }
}

/// Training protocol parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    /// Channel draws used for the data moments, estimated once.
    pub n_data_samples: usize,
    /// Gibbs samples per training step for the model moments.
    pub n_gibbs_samples: usize,
    pub n_steps: usize,
    #[serde(default)]
    pub lr_schedule: Schedule,
    pub seed: u64,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_data_samples == 0 || self.n_gibbs_samples == 0 {
            return Err(Error::invalid("sample counts must be positive"));
        }
        Ok(())
    }
}

/// Training output: one machine snapshot per step, index 0 holding the
/// freshly initialized machine.
pub struct TrainOutput {
    pub snapshots: Vec<Fvbm>,
}

impl TrainOutput {
    pub fn final_bm(&self) -> &Fvbm {
        self.snapshots.last().expect("at least the initial snapshot exists")
    }
}

/// Train a machine against a channel: estimate data moments once from joint
/// channel draws, then repeatedly Gibbs-estimate the model moments and apply
/// a moment-matching step with the scheduled rate.
pub fn train(channel: &ChannelParams, cfg: &TrainingConfig) -> Result<TrainOutput, Error> {
    channel.validate()?;
    cfg.validate()?;
    let n_receptors = channel.n_receptors;
    let n = n_receptors + 1;

    let mut bm = Fvbm::init_random(n_receptors, &mut rng::stream(cfg.seed, streams::INIT));

    let mut data_rng = rng::stream(cfg.seed, streams::TRAIN_DATA);
    let mut data_samples = Array2::zeros((cfg.n_data_samples, n));
    for mut row in data_samples.rows_mut() {
        let x = Symbol::sample_equiprobable(&mut data_rng);
        row[0] = x.bit();
        let y = channel.sample_observation(x, &mut data_rng);
        for (slot, &on) in row.iter_mut().skip(1).zip(y.states()) {
            *slot = u8::from(on);
        }
    }
    let data_moments = MomentEstimates::from_samples(&data_samples.view())?;

    let mut gibbs_rng = rng::stream(cfg.seed, streams::TRAIN_GIBBS);
    let mut snapshots = Vec::with_capacity(cfg.n_steps + 1);
    snapshots.push(bm.clone());
    for step in 0..cfg.n_steps {
        let samples = bm.gibbs_sample(cfg.n_gibbs_samples, &[], &mut gibbs_rng);
        let model_moments = MomentEstimates::from_samples(&samples.view())?;
        bm.train_step(&data_moments, &model_moments, cfg.lr_schedule.rate_at(step))?;
        snapshots.push(bm.clone());
    }
    Ok(TrainOutput { snapshots })
}
