//! Mass-action chemical reaction networks and exact stochastic simulation.
//!
//! A network is a set of named species plus reactions with positive rate
//! constants; its stochastic semantics is a continuous-time Markov chain over
//! integer molecule counts. Simulation uses the direct method: draw an
//! exponential waiting time from the total propensity, pick a reaction with
//! probability proportional to its propensity, apply its stoichiometry.
//! Molecule counts here are tiny (one to a few dozen), so exact simulation is
//! cheap and the detectors' steady-state arguments carry over unchanged.

use crate::error::Error;
use rand::Rng;
use std::io::Write;

/// Handle to a declared species.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SpeciesId(usize);

impl SpeciesId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A mass-action reaction: reactant and product multisets are stored as
/// `(species, stoichiometric multiplicity)` pairs.
#[derive(Clone, Debug)]
pub struct Reaction {
    reactants: Vec<(SpeciesId, u32)>,
    products: Vec<(SpeciesId, u32)>,
    rate_constant: f64,
}

impl Reaction {
    pub fn reactants(&self) -> &[(SpeciesId, u32)] {
        &self.reactants
    }

    pub fn products(&self) -> &[(SpeciesId, u32)] {
        &self.products
    }

    pub fn rate_constant(&self) -> f64 {
        self.rate_constant
    }

    /// Propensity in state `counts`: the rate constant times falling
    /// factorials of the reactant counts by their multiplicities. Zero when
    /// any reactant is short, so counts can never go negative.
    pub fn propensity(&self, state: &CrnState) -> f64 {
        let mut a = self.rate_constant;
        for &(species, multiplicity) in &self.reactants {
            let count = state.counts[species.0];
            if count < u64::from(multiplicity) {
                return 0.0;
            }
            for k in 0..u64::from(multiplicity) {
                a *= (count - k) as f64;
            }
        }
        a
    }

    fn apply(&self, state: &mut CrnState) {
        for &(species, multiplicity) in &self.reactants {
            state.counts[species.0] -= u64::from(multiplicity);
        }
        for &(species, multiplicity) in &self.products {
            state.counts[species.0] += u64::from(multiplicity);
        }
    }
}

/// A chemical reaction network definition. Immutable once built; any number
/// of simulations can share one network, each owning its own state and RNG.
#[derive(Clone, Debug, Default)]
pub struct Crn {
    species: Vec<String>,
    reactions: Vec<Reaction>,
}

impl Crn {
    pub fn new() -> Self {
        Crn::default()
    }

    pub fn add_species(&mut self, name: impl Into<String>) -> SpeciesId {
        self.species.push(name.into());
        SpeciesId(self.species.len() - 1)
    }

    /// Register a reaction; the rate constant must be positive and every
    /// referenced species declared.
    pub fn add_reaction(
        &mut self,
        reactants: &[(SpeciesId, u32)],
        products: &[(SpeciesId, u32)],
        rate_constant: f64,
    ) -> Result<usize, Error> {
        if !(rate_constant > 0.0) {
            return Err(Error::invalid(format!(
                "reaction rate constant must be > 0, got {rate_constant}"
            )));
        }
        for &(species, _) in reactants.iter().chain(products) {
            if species.0 >= self.species.len() {
                return Err(Error::invalid(format!("undeclared species id {}", species.0)));
            }
        }
        self.reactions.push(Reaction {
            reactants: reactants.to_vec(),
            products: products.to_vec(),
            rate_constant,
        });
        Ok(self.reactions.len() - 1)
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_name(&self, id: SpeciesId) -> &str {
        &self.species[id.0]
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    /// Fresh state with every count zero at time zero.
    pub fn empty_state(&self) -> CrnState {
        CrnState { counts: vec![0; self.species.len()], time: 0.0 }
    }
}

/// Integer molecule counts plus the simulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct CrnState {
    counts: Vec<u64>,
    time: f64,
}

impl CrnState {
    pub fn count(&self, species: SpeciesId) -> u64 {
        self.counts[species.0]
    }

    pub fn set_count(&mut self, species: SpeciesId, count: u64) {
        self.counts[species.0] = count;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// What a single simulation step did.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// A reaction fired after an exponential waiting time.
    Fired { reaction: usize },
    /// Total propensity is zero; the state can never change again.
    Quiescent,
}

fn draw_event(crn: &Crn, state: &CrnState, rng: &mut impl Rng) -> Option<(usize, f64)> {
    let propensities: Vec<f64> = crn.reactions.iter().map(|r| r.propensity(state)).collect();
    let a0: f64 = propensities.iter().sum();
    if a0 <= 0.0 {
        return None;
    }
    let u: f64 = rng.gen::<f64>();
    let tau = -(u.max(f64::MIN_POSITIVE)).ln() / a0;
    let mut target = rng.gen::<f64>() * a0;
    let mut chosen = crn.reactions.len() - 1;
    for (j, &a) in propensities.iter().enumerate() {
        if target < a {
            chosen = j;
            break;
        }
        target -= a;
    }
    Some((chosen, tau))
}

/// Advance the state by one reaction event, or report quiescence without
/// touching the state.
pub fn ssa_step(crn: &Crn, state: &mut CrnState, rng: &mut impl Rng) -> StepOutcome {
    match draw_event(crn, state, rng) {
        None => StepOutcome::Quiescent,
        Some((reaction, tau)) => {
            state.time += tau;
            crn.reactions[reaction].apply(state);
            StepOutcome::Fired { reaction }
        }
    }
}

/// Simulate until `t_end`: events whose waiting time would overshoot are
/// discarded and the clock is set to `t_end` exactly.
pub fn simulate(crn: &Crn, state: &mut CrnState, t_end: f64, rng: &mut impl Rng) {
    assert!(t_end >= state.time, "t_end must not precede the current time");
    loop {
        match draw_event(crn, state, rng) {
            None => break,
            Some((reaction, tau)) => {
                if state.time + tau > t_end {
                    break;
                }
                state.time += tau;
                crn.reactions[reaction].apply(state);
            }
        }
    }
    state.time = t_end;
}

/// Like [`simulate`] but records `(time, counts)` after every event,
/// starting with the initial state.
pub fn simulate_recording(
    crn: &Crn,
    state: &mut CrnState,
    t_end: f64,
    rng: &mut impl Rng,
) -> Trajectory {
    let mut trajectory = Trajectory {
        n_species: crn.n_species(),
        times: vec![state.time],
        counts: state.counts.clone(),
    };
    assert!(t_end >= state.time, "t_end must not precede the current time");
    loop {
        match draw_event(crn, state, rng) {
            None => break,
            Some((reaction, tau)) => {
                if state.time + tau > t_end {
                    break;
                }
                state.time += tau;
                crn.reactions[reaction].apply(state);
                trajectory.times.push(state.time);
                trajectory.counts.extend_from_slice(&state.counts);
            }
        }
    }
    state.time = t_end;
    trajectory
}

/// Record `m` binary presence observations of `indicator`, spaced `interval`
/// apart after an initial `burn_in`.
pub fn sample_stationary(
    crn: &Crn,
    state: &mut CrnState,
    indicator: SpeciesId,
    burn_in: f64,
    interval: f64,
    m: usize,
    rng: &mut impl Rng,
) -> Vec<bool> {
    assert!(m >= 1, "need at least one sample");
    assert!(interval > 0.0, "interval must be positive");
    assert!(burn_in >= 0.0, "burn-in must be nonnegative");
    let start = state.time + burn_in;
    simulate(crn, state, start, rng);
    let mut observations = Vec::with_capacity(m);
    for k in 1..=m {
        simulate(crn, state, start + interval * k as f64, rng);
        observations.push(state.count(indicator) > 0);
    }
    observations
}

/// Recorded event history of one simulation, row per event.
#[derive(Clone, Debug)]
pub struct Trajectory {
    n_species: usize,
    times: Vec<f64>,
    counts: Vec<u64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn counts_at(&self, row: usize) -> &[u64] {
        &self.counts[row * self.n_species..(row + 1) * self.n_species]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[u64])> {
        self.times
            .iter()
            .enumerate()
            .map(|(row, &t)| (t, self.counts_at(row)))
    }

    /// Dump as CSV: a `time` column followed by one column per species.
    pub fn write_csv(&self, crn: &Crn, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "time")?;
        for name in &crn.species {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (t, counts) in self.rows() {
            write!(w, "{t}")?;
            for c in counts {
                write!(w, ",{c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
