//! Elitist genetic algorithm over mixed categorical / real chromosomes.
//!
//! Each generation keeps the `elite_count` fittest chromosomes unchanged and
//! refills the population with tournament-selected, uniformly crossed and
//! mutated children. Only children are evaluated, so a run costs
//! `population + (generations − 1)·(population − elite)` fitness calls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneSpec {
    /// Index into a set of `count` values.
    Categorical { count: usize },
    Real { lo: f64, hi: f64, log: bool },
}

impl GeneSpec {
    pub fn real(lo: f64, hi: f64) -> Self {
        GeneSpec::Real { lo, hi, log: false }
    }

    pub fn log_real(lo: f64, hi: f64) -> Self {
        GeneSpec::Real { lo, hi, log: true }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            GeneSpec::Categorical { count: 0 } => {
                Err(Error::InvalidParameter("categorical gene with no values".into()))
            }
            GeneSpec::Real { lo, hi, .. } if !(lo < hi) => {
                Err(Error::InvalidParameter(format!("gene interval [{lo}, {hi}] is empty")))
            }
            GeneSpec::Real { lo, log: true, .. } if !(lo > 0.0) => {
                Err(Error::InvalidParameter(format!("log-scale gene needs lo > 0, got {lo}")))
            }
            _ => Ok(()),
        }
    }

    pub fn contains(&self, gene: &Gene) -> bool {
        match (*self, *gene) {
            (GeneSpec::Categorical { count }, Gene::Cat(v)) => v < count,
            (GeneSpec::Real { lo, hi, .. }, Gene::Real(v)) => lo <= v && v <= hi,
            _ => false,
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Gene {
        match *self {
            GeneSpec::Categorical { count } => Gene::Cat(rng.random_range(0..count)),
            GeneSpec::Real { lo, hi, log: false } => Gene::Real(rng.random_range(lo..=hi)),
            GeneSpec::Real { lo, hi, log: true } => {
                Gene::Real(rng.random_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gene {
    Cat(usize),
    Real(f64),
}

impl Gene {
    pub fn as_cat(&self) -> usize {
        match *self {
            Gene::Cat(v) => v,
            Gene::Real(v) => v as usize,
        }
    }

    pub fn as_real(&self) -> f64 {
        match *self {
            Gene::Real(v) => v,
            Gene::Cat(v) => v as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<Gene>,
    pub fitness: Option<f64>,
    /// Global evaluation order, used to break fitness ties.
    #[serde(skip)]
    order: usize,
}

impl Chromosome {
    pub fn new(genes: Vec<Gene>) -> Self {
        Self {
            genes,
            fitness: None,
            order: usize::MAX,
        }
    }

    fn score(&self) -> f64 {
        self.fitness.unwrap_or(f64::NEG_INFINITY)
    }

    /// True when `self` ranks strictly above `other`.
    fn beats(&self, other: &Chromosome) -> bool {
        let (a, b) = (self.score(), other.score());
        a > b || (a == b && self.order < other.order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elite_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
    /// Stop early once the best fitness reaches this value.
    #[serde(default)]
    pub target_fitness: Option<f64>,
    /// With seeds given, fill the rest of generation 0 with seed copies whose
    /// genes are each resampled with this probability, instead of uniform draws.
    #[serde(default)]
    pub seed_spread: Option<f64>,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            generations: 15,
            crossover_rate: 0.8,
            mutation_rate: 0.1,
            elite_count: 2,
            tournament_size: 3,
            seed: 0,
            target_fitness: None,
            seed_spread: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.population_size < 2 {
            return bad("population_size must be >= 2");
        }
        if self.generations < 1 {
            return bad("generations must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(0.0..=1.0).contains(&self.mutation_rate) {
            return bad("crossover and mutation rates must lie in [0,1]");
        }
        if self.elite_count < 1 || self.elite_count >= self.population_size {
            return bad("elite_count must satisfy 1 <= elite_count < population_size");
        }
        if self.tournament_size < 2 {
            return bad("tournament_size must be >= 2");
        }
        if self.seed_spread.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return bad("seed_spread must lie in [0,1]");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: Chromosome,
    /// Best fitness seen so far, after each generation.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

/// Winner of `k` uniform draws (with replacement) from `pop`.
pub fn select_tournament<'a>(pop: &'a [Chromosome], k: usize, rng: &mut impl Rng) -> &'a Chromosome {
    let mut best = &pop[rng.random_range(0..pop.len())];
    for _ in 1..k {
        let cand = &pop[rng.random_range(0..pop.len())];
        if cand.beats(best) {
            best = cand;
        }
    }
    best
}

/// Each gene comes from either parent with probability ½.
pub fn crossover_uniform(a: &Chromosome, b: &Chromosome, rng: &mut impl Rng) -> Chromosome {
    let genes = a
        .genes
        .iter()
        .zip(&b.genes)
        .map(|(&ga, &gb)| if rng.random_bool(0.5) { gb } else { ga })
        .collect();
    Chromosome::new(genes)
}

/// Resamples categorical genes and adds Gaussian noise (σ = 10% of the
/// interval, in log space for log genes) to real ones, each with probability `rate`.
pub fn mutate(chrom: &mut Chromosome, spec: &[GeneSpec], rate: f64, rng: &mut impl Rng) {
    for (gene, gs) in chrom.genes.iter_mut().zip(spec) {
        if !rng.random_bool(rate) {
            continue;
        }
        *gene = match *gs {
            GeneSpec::Categorical { .. } => gs.sample(rng),
            GeneSpec::Real { lo, hi, log } => {
                let (a, b, v) = if log {
                    (lo.ln(), hi.ln(), gene.as_real().ln())
                } else {
                    (lo, hi, gene.as_real())
                };
                let noise = Normal::new(0.0, 0.1 * (b - a)).expect("finite sigma");
                let moved = (v + noise.sample(rng)).clamp(a, b);
                let out = if log { moved.exp() } else { moved };
                Gene::Real(out.clamp(lo, hi))
            }
        };
    }
    chrom.fitness = None;
}

fn evaluate<F>(batch: &mut [Chromosome], fitness: &F, next_order: &mut usize)
where
    F: Fn(&[Gene]) -> f64 + Sync,
{
    let scores: Vec<f64> = {
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            batch.par_iter().map(|c| fitness(&c.genes)).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            batch.iter().map(|c| fitness(&c.genes)).collect()
        }
    };
    for (c, s) in batch.iter_mut().zip(scores) {
        c.fitness = Some(if s.is_nan() { f64::NEG_INFINITY } else { s });
        c.order = *next_order;
        *next_order += 1;
    }
}

/// Runs the GA. `seeds` are placed into generation 0 ahead of random chromosomes.
pub fn run_ga<F>(cfg: &GaConfig, spec: &[GeneSpec], seeds: &[Vec<Gene>], fitness: F) -> Result<GaOutcome>
where
    F: Fn(&[Gene]) -> f64 + Sync,
{
    cfg.validate()?;
    for gs in spec {
        gs.validate()?;
    }
    for s in seeds {
        if s.len() != spec.len() || !s.iter().zip(spec).all(|(g, gs)| gs.contains(g)) {
            return Err(Error::InvalidParameter("seed chromosome outside gene spec".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order = 0usize;
    let mut evaluations = 0usize;

    let mut pop: Vec<Chromosome> = seeds
        .iter()
        .take(cfg.population_size)
        .cloned()
        .map(Chromosome::new)
        .collect();
    let n_seeds = pop.len();
    while pop.len() < cfg.population_size {
        let genes = match cfg.seed_spread {
            Some(p) if n_seeds > 0 => pop[pop.len() % n_seeds]
                .genes
                .iter()
                .zip(spec)
                .map(|(g, gs)| if rng.random_bool(p) { gs.sample(&mut rng) } else { *g })
                .collect(),
            _ => spec.iter().map(|gs| gs.sample(&mut rng)).collect(),
        };
        pop.push(Chromosome::new(genes));
    }
    evaluate(&mut pop, &fitness, &mut order);
    evaluations += pop.len();

    let mut best = pop.iter().fold(&pop[0], |b, c| if c.beats(b) { c } else { b }).clone();
    let mut history = vec![best.score()];
    let reached = |b: &Chromosome| cfg.target_fitness.is_some_and(|t| b.score() >= t);

    for _ in 1..cfg.generations {
        if reached(&best) {
            break;
        }
        pop.sort_by(|a, b| {
            if a.beats(b) {
                std::cmp::Ordering::Less
            } else if b.beats(a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut next: Vec<Chromosome> = pop[..cfg.elite_count].to_vec();
        let mut children = Vec::with_capacity(cfg.population_size - cfg.elite_count);
        while next.len() + children.len() < cfg.population_size {
            let a = select_tournament(&pop, cfg.tournament_size, &mut rng);
            let b = select_tournament(&pop, cfg.tournament_size, &mut rng);
            let mut child = if rng.random_bool(cfg.crossover_rate) {
                crossover_uniform(a, b, &mut rng)
            } else {
                Chromosome::new(a.genes.clone())
            };
            mutate(&mut child, spec, cfg.mutation_rate, &mut rng);
            children.push(child);
        }
        evaluate(&mut children, &fitness, &mut order);
        evaluations += children.len();
        for c in &children {
            if c.beats(&best) {
                best = c.clone();
            }
        }
        next.extend(children);
        pop = next;
        history.push(best.score());
    }

    Ok(GaOutcome {
        best,
        history,
        evaluations,
    })
}
