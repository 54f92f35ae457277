//! The three headline experiments: BER versus training step for trained
//! Boltzmann machines, BER versus pilot count for the online-learned CRN
//! detector, and threshold tracking under time-variant background noise.
//!
//! Replicates run on a worker pool; every replicate draws from RNG streams
//! derived from the master seed and its `(scenario, replicate)` index and
//! results are merged by index, so outputs are identical for any thread
//! count.

use crate::bm;
use crate::channel::ChannelParams;
use crate::crn_detectors::{
    lc_induced_threshold, min_reservoir, pilot_round, DetectionMode, LcDetectorState,
    OnlineOutcome,
};
use crate::error::Error;
use crate::experiments::{run_ber, BmDetector, ScenarioConfig, TimeVariantSection};
use crate::reference::{LikelihoodModel, ThresholdDetector};
use crate::rng::{self, streams};
use rayon::prelude::*;

/// One point of a mean-BER curve with its MAP reference.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub scenario: String,
    pub index: usize,
    pub mean_ber: f64,
    pub map_ber: f64,
}

/// Per-index weight-count statistics across replicates.
#[derive(Clone, Debug, PartialEq)]
pub struct NwRow {
    pub scenario: String,
    pub index: usize,
    pub mean_nw: f64,
    pub min_nw: u64,
    pub max_nw: u64,
}

/// Weight tracking against the per-phase optimal threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig4Row {
    pub pilot: usize,
    pub mean_nw: f64,
    pub min_nw: u64,
    pub max_nw: u64,
    pub opt_nu: usize,
}

/// Training experiment output: the mean-BER curve rows plus the final
/// trained machine of every `(scenario, replicate)` pair.
pub struct TrainingExperiment {
    pub rows: Vec<CurveRow>,
    pub trained: Vec<(String, usize, bm::Fvbm)>,
}

/// Train `n_replicates` machines per scenario and evaluate the BER of every
/// per-step snapshot by Monte Carlo (deterministic conditional-threshold
/// decisions, the infinite-sample limit). Emits one row per training step
/// with the replicate-mean BER and the constant MAP reference.
pub fn fig2_experiment(
    scenarios: &[ScenarioConfig],
    training: &super::config::TrainingSection,
    n_replicates: usize,
    master_seed: u64,
) -> Result<TrainingExperiment, Error> {
    let mut rows = Vec::new();
    let mut trained = Vec::new();
    for (s_idx, scenario) in scenarios.iter().enumerate() {
        let channel = &scenario.channel;
        let model = LikelihoodModel::from_channel(channel)?;
        let map_ber = model.analytic_ber(&model.optimal_threshold());
        let per_replicate: Vec<(Vec<f64>, bm::Fvbm)> = (0..n_replicates)
            .into_par_iter()
            .map(|rep| -> Result<(Vec<f64>, bm::Fvbm), Error> {
                let seed =
                    rng::derive_seed(master_seed, streams::replicate(streams::TRAIN, s_idx, rep));
                let cfg = training.to_training_config(seed);
                let out = bm::train(channel, &cfg)?;
                let ber_seed =
                    rng::derive_seed(master_seed, streams::replicate(streams::BER, s_idx, rep));
                let bers = out
                    .snapshots
                    .iter()
                    .enumerate()
                    .map(|(step, snapshot)| {
                        let detector = BmDetector { bm: snapshot.clone(), m_samples: None };
                        let mut rng = rng::stream(ber_seed, step as u64);
                        run_ber(
                            &detector,
                            channel,
                            training.eval_max_errors,
                            training.eval_symbol_cap,
                            &mut rng,
                        )
                        .ber
                    })
                    .collect();
                Ok((bers, out.final_bm().clone()))
            })
            .collect::<Result<_, _>>()?;
        let n_steps = per_replicate[0].0.len();
        for step in 0..n_steps {
            let mean_ber =
                per_replicate.iter().map(|r| r.0[step]).sum::<f64>() / n_replicates as f64;
            rows.push(CurveRow { scenario: scenario.name.clone(), index: step, mean_ber, map_ber });
        }
        for (rep, (_, final_bm)) in per_replicate.into_iter().enumerate() {
            trained.push((scenario.name.clone(), rep, final_bm));
        }
    }
    Ok(TrainingExperiment { rows, trained })
}

/// Online-learning experiment: per scenario, run the pilot-symbol learner
/// from an all-inactive weight reservoir `n_replicates` times and average
/// the per-pilot analytic BER. Also reports weight-count statistics.
pub fn fig3_experiment(
    scenarios: &[ScenarioConfig],
    lc: &super::config::LcSection,
    n_pilots: usize,
    mode: &DetectionMode,
    n_replicates: usize,
    master_seed: u64,
) -> Result<(Vec<CurveRow>, Vec<NwRow>), Error> {
    let mut ber_rows = Vec::new();
    let mut nw_rows = Vec::new();
    for (s_idx, scenario) in scenarios.iter().enumerate() {
        let channel = &scenario.channel;
        let model = LikelihoodModel::from_channel(channel)?;
        let map_ber = model.analytic_ber(&model.optimal_threshold());
        let reservoir = lc
            .n_w_total
            .unwrap_or_else(|| min_reservoir(channel.n_receptors, lc.k_on, lc.k_off));
        let st0 = LcDetectorState::new(0, reservoir, lc.k_on, lc.k_off)?;
        let outcomes: Vec<OnlineOutcome> = (0..n_replicates)
            .into_par_iter()
            .map(|rep| -> Result<OnlineOutcome, Error> {
                let mut rng = rng::stream(
                    master_seed,
                    streams::replicate(streams::ONLINE, s_idx, rep),
                );
                crate::crn_detectors::online_train(channel, st0, n_pilots, mode, &mut rng)
            })
            .collect::<Result<_, _>>()?;
        for pilot in 0..=n_pilots {
            let mean_ber = outcomes.iter().map(|o| o.ber_curve[pilot]).sum::<f64>()
                / n_replicates as f64;
            ber_rows.push(CurveRow {
                scenario: scenario.name.clone(),
                index: pilot,
                mean_ber,
                map_ber,
            });
            let counts = outcomes.iter().map(|o| o.nw_trajectory[pilot]);
            nw_rows.push(NwRow {
                scenario: scenario.name.clone(),
                index: pilot,
                mean_nw: counts.clone().sum::<u64>() as f64 / n_replicates as f64,
                min_nw: counts.clone().min().unwrap(),
                max_nw: counts.max().unwrap(),
            });
        }
    }
    Ok((ber_rows, nw_rows))
}

/// Per-replicate weight trajectory under a time-variant noise schedule.
fn time_variant_replicate(
    tv: &TimeVariantSection,
    st0: LcDetectorState,
    rng: &mut rng::StreamRng,
) -> Result<Vec<u64>, Error> {
    let total = tv.schedule.total_pilots();
    let mut st = st0;
    let mut trajectory = Vec::with_capacity(total + 1);
    trajectory.push(st.n_w_on);
    let mut channel = tv.channel_at(0)?;
    let mut current_noise = channel.c_noise;
    for pilot in 0..total {
        let c_noise = tv.schedule.c_noise_at(pilot);
        if c_noise != current_noise {
            channel = tv.channel_at(pilot)?;
            current_noise = c_noise;
        }
        let (pilot_symbol, x_hat) = pilot_round(&channel, &st, &tv.detection, rng);
        st = st.updated(x_hat, &pilot_symbol);
        trajectory.push(st.n_w_on);
    }
    Ok(trajectory)
}

/// Time-variant tracking experiment: run the online learner through the
/// configured noise schedule and report the replicate mean/min/max weight
/// count per pilot together with the phase-optimal threshold.
pub fn fig4_experiment(
    tv: &TimeVariantSection,
    n_replicates: usize,
    master_seed: u64,
) -> Result<Vec<Fig4Row>, Error> {
    tv.schedule.validate()?;
    let reservoir = tv
        .lc
        .n_w_total
        .unwrap_or_else(|| min_reservoir(tv.n_receptors, tv.lc.k_on, tv.lc.k_off));
    let st0 = LcDetectorState::new(0, reservoir, tv.lc.k_on, tv.lc.k_off)?;
    let trajectories: Vec<Vec<u64>> = (0..n_replicates)
        .into_par_iter()
        .map(|rep| {
            let mut rng =
                rng::stream(master_seed, streams::replicate(streams::ONLINE, 0, rep));
            time_variant_replicate(tv, st0, &mut rng)
        })
        .collect::<Result<_, _>>()?;
    let total = tv.schedule.total_pilots();
    let mut rows = Vec::with_capacity(total + 1);
    for pilot in 0..=total {
        // pilot index 0 is the initial state, attributed to the first phase
        let channel = tv.channel_at(pilot.saturating_sub(1).min(total - 1))?;
        let model = LikelihoodModel::from_channel(&channel)?;
        let counts = trajectories.iter().map(|t| t[pilot]);
        rows.push(Fig4Row {
            pilot,
            mean_nw: counts.clone().sum::<u64>() as f64 / n_replicates as f64,
            min_nw: counts.clone().min().unwrap(),
            max_nw: counts.max().unwrap(),
            opt_nu: model.optimal_threshold().nu(),
        });
    }
    Ok(rows)
}

/// Analytic BER of a weight state against a channel, through the induced
/// count threshold.
pub fn lc_analytic_ber(st: &LcDetectorState, channel: &ChannelParams) -> Result<f64, Error> {
    let model = LikelihoodModel::from_channel(channel)?;
    let nu = lc_induced_threshold(st, channel.n_receptors);
    Ok(model.analytic_ber(&ThresholdDetector::new(nu, channel.n_receptors)?))
}
