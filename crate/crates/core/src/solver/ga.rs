//! Genetic-algorithm placement search.
//!
//! A chromosome holds one host per (request, chain position) pair. Decoding
//! charges the substrate gene by gene, in request order, and routes with the
//! same shortest-path linking as the greedy solver. Candidate evaluation is
//! independent per candidate: each gets its own network copy and an RNG stream
//! derived from `(seed, generation, index)`, so serial and parallel runs
//! produce identical traces.

use std::cmp::Ordering;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, SfcRequest};
use crate::seed::derive_seed;
use crate::topology::SubstrateNetwork;

use super::{compare_fitness, embed_request, resolve_all, EmbeddingScheme, Fitness, SfcEmbedding, SolverError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaParams {
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability; `None` means 1 / gene count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation_rate: Option<f64>,
    pub elitism: usize,
}

impl Default for GaParams {
    fn default() -> Self {
        Self {
            population: 20,
            generations: 10,
            tournament_size: 3,
            crossover_rate: 0.9,
            mutation_rate: None,
            elitism: 2,
        }
    }
}

impl GaParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidParams(m.into()));
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.tournament_size < 1 || self.tournament_size > self.population {
            return bad("tournament_size must be in 1..=population");
        }
        if self.elitism > self.population {
            return bad("elitism must not exceed population");
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return bad("crossover_rate must be in [0, 1]");
        }
        if let Some(p) = self.mutation_rate {
            if !(0.0..=1.0).contains(&p) {
                return bad("mutation_rate must be in [0, 1]");
            }
        }
        Ok(())
    }

    pub fn mutation_rate_for(&self, genes: usize) -> f64 {
        self.mutation_rate.unwrap_or(if genes == 0 { 0.0 } else { 1.0 / genes as f64 })
    }
}

/// Host index per (request, chain position), request-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    pub genes: Vec<usize>,
}

impl Chromosome {
    pub fn host_ids(&self, net: &SubstrateNetwork) -> Vec<String> {
        self.genes.iter().map(|&h| net.host_id(h).to_string()).collect()
    }

    pub fn random(genes: usize, hosts: &[usize], rng: &mut impl Rng) -> Self {
        Self { genes: (0..genes).map(|_| hosts[rng.random_range(0..hosts.len())]).collect() }
    }
}

/// Scores a decoded candidate. `stream_seed` seeds any randomness the
/// evaluator needs.
pub trait Evaluator: Sync {
    fn evaluate(&self, chromosome: &Chromosome, scheme: &EmbeddingScheme, stream_seed: u64) -> Fitness;
}

impl<F> Evaluator for F
where
    F: Fn(&Chromosome, &EmbeddingScheme, u64) -> Fitness + Sync,
{
    fn evaluate(&self, chromosome: &Chromosome, scheme: &EmbeddingScheme, stream_seed: u64) -> Fitness {
        self(chromosome, scheme, stream_seed)
    }
}

/// Summary of one evaluated population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub fitness: Vec<Fitness>,
    pub mean_acceptance_ratio: f64,
    pub min_acceptance_ratio: f64,
    pub max_acceptance_ratio: f64,
    /// Latency statistics cover candidates that accepted at least one request.
    pub mean_latency_ms: Option<f64>,
    pub min_latency_ms: Option<f64>,
    pub max_latency_ms: Option<f64>,
    /// Best candidate seen so far, as host ids.
    pub best_chromosome: Vec<String>,
    pub best_fitness: Fitness,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub generations: Vec<GenerationStats>,
}

#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub best: EmbeddingScheme,
    pub best_chromosome: Chromosome,
    pub best_fitness: Fitness,
    pub trace: EvolutionTrace,
    pub evaluations: usize,
}

/// Decodes `chromosome` onto `net`, charging capacity gene by gene.
pub fn decode(
    net: &mut SubstrateNetwork,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
    chromosome: &Chromosome,
) -> Result<EmbeddingScheme, SolverError> {
    let resolved = resolve_all(catalog, sfcrs)?;
    let total: usize = resolved.iter().map(Vec::len).sum();
    if total != chromosome.genes.len() {
        return Err(SolverError::GeneCountMismatch(total, chromosome.genes.len()));
    }
    let n_hosts = net.hosts().len();
    let egress = net.egress_host();
    let mut offset = 0;
    let mut entries = Vec::with_capacity(sfcrs.len());
    for (sfcr, vnfs) in sfcrs.iter().zip(&resolved) {
        let genes = &chromosome.genes[offset..offset + vnfs.len()];
        offset += vnfs.len();
        let outcome = embed_request(net, sfcr, vnfs, |_, position, _, _| {
            let h = genes[position];
            (h < n_hosts && h != egress).then_some(h)
        });
        entries.push(SfcEmbedding { sfcr_id: sfcr.id.clone(), outcome });
    }
    Ok(EmbeddingScheme { entries })
}

/// Uniform crossover applied with probability `p_c`; each gene is exchanged
/// with probability one half.
pub fn crossover(
    a: &Chromosome,
    b: &Chromosome,
    p_c: f64,
    rng: &mut impl Rng,
) -> Result<(Chromosome, Chromosome), SolverError> {
    if a.genes.len() != b.genes.len() {
        return Err(SolverError::GeneCountMismatch(a.genes.len(), b.genes.len()));
    }
    let mut x = a.clone();
    let mut y = b.clone();
    if rng.random_bool(p_c) {
        for i in 0..x.genes.len() {
            if rng.random_bool(0.5) {
                std::mem::swap(&mut x.genes[i], &mut y.genes[i]);
            }
        }
    }
    Ok((x, y))
}

/// Reassigns each gene to a uniformly drawn host with probability `p_m`.
pub fn mutate(c: &Chromosome, p_m: f64, hosts: &[usize], rng: &mut impl Rng) -> Chromosome {
    let mut out = c.clone();
    for g in &mut out.genes {
        if rng.random_bool(p_m) {
            *g = hosts[rng.random_range(0..hosts.len())];
        }
    }
    out
}

/// Best of `k` distinct, uniformly drawn candidates. Returns the winner's
/// index.
pub fn tournament_select(fitness: &[Fitness], k: usize, rng: &mut impl Rng) -> usize {
    let k = k.clamp(1, fitness.len());
    let mut picks = index::sample(rng, fitness.len(), k).into_vec();
    // Sampling order is random; sort so ties go to the lower index.
    picks.sort_unstable();
    picks
        .into_iter()
        .reduce(|best, i| if compare_fitness(&fitness[i], &fitness[best]) == Ordering::Greater { i } else { best })
        .expect("k >= 1")
}

struct Evaluated {
    fitness: Fitness,
    scheme: EmbeddingScheme,
}

struct Context<'a, E: Evaluator> {
    net: &'a SubstrateNetwork,
    sfcrs: &'a [SfcRequest],
    catalog: &'a Catalog,
    evaluator: &'a E,
    seed: u64,
    pool: Option<rayon::ThreadPool>,
}

impl<E: Evaluator> Context<'_, E> {
    fn evaluate_one(&self, generation: usize, idx: usize, c: &Chromosome) -> Result<Evaluated, SolverError> {
        let mut net = self.net.clone();
        let scheme = decode(&mut net, self.sfcrs, self.catalog, c)?;
        let stream = derive_seed(self.seed, generation as u64, idx as u64);
        let fitness = self.evaluator.evaluate(c, &scheme, stream);
        Ok(Evaluated { fitness, scheme })
    }

    fn evaluate_all(&self, generation: usize, todo: &[(usize, &Chromosome)]) -> Result<Vec<Evaluated>, SolverError> {
        match &self.pool {
            Some(pool) => pool.install(|| todo.par_iter().map(|&(i, c)| self.evaluate_one(generation, i, c)).collect()),
            None => todo.iter().map(|&(i, c)| self.evaluate_one(generation, i, c)).collect(),
        }
    }
}

/// Rounding can push a float mean a hair outside the sample range; clamp it.
fn mean_min_max(xs: &[f64]) -> (f64, f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    (mean.clamp(lo, hi), lo, hi)
}

fn stats(
    generation: usize,
    fitness: &[Fitness],
    best: &Chromosome,
    best_fitness: Fitness,
    net: &SubstrateNetwork,
) -> GenerationStats {
    let ars: Vec<f64> = fitness.iter().map(|f| f.acceptance_ratio).collect();
    let lats: Vec<f64> = fitness.iter().filter(|f| f.acceptance_ratio > 0.0).filter_map(|f| f.mean_latency).collect();
    let (mean_l, min_l, max_l) = if lats.is_empty() {
        (None, None, None)
    } else {
        let (mean, lo, hi) = mean_min_max(&lats);
        (Some(mean), Some(lo), Some(hi))
    };
    let (mean_ar, min_ar, max_ar) = mean_min_max(&ars);
    GenerationStats {
        generation,
        fitness: fitness.to_vec(),
        mean_acceptance_ratio: mean_ar,
        min_acceptance_ratio: min_ar,
        max_acceptance_ratio: max_ar,
        mean_latency_ms: mean_l,
        min_latency_ms: min_l,
        max_latency_ms: max_l,
        best_chromosome: best.host_ids(net),
        best_fitness,
    }
}

fn thread_pool(parallelism: Option<usize>) -> Result<Option<rayon::ThreadPool>, SolverError> {
    match parallelism {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(Some)
            .map_err(|e| SolverError::InvalidParams(format!("thread pool: {e}"))),
        _ => Ok(None),
    }
}

/// Evolves host assignments for `sfcrs` and returns the best candidate ever
/// evaluated. `parallelism` bounds concurrent evaluations (`None` or 1 runs
/// serially); the result does not depend on it.
pub fn ga_solve<E: Evaluator>(
    net: &SubstrateNetwork,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
    params: &GaParams,
    evaluator: &E,
    seed: u64,
    parallelism: Option<usize>,
) -> Result<GaOutcome, SolverError> {
    params.validate()?;
    let hosts = net.compute_hosts();
    if hosts.is_empty() {
        return Err(SolverError::NoComputeHosts);
    }
    let genes: usize = resolve_all(catalog, sfcrs)?.iter().map(Vec::len).sum();
    let p_m = params.mutation_rate_for(genes);
    let ctx = Context { net, sfcrs, catalog, evaluator, seed, pool: thread_pool(parallelism)? };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut population: Vec<Chromosome> =
        (0..params.population).map(|_| Chromosome::random(genes, &hosts, &mut rng)).collect();
    let todo: Vec<_> = population.iter().enumerate().collect();
    let evaluated = ctx.evaluate_all(0, &todo)?;
    let mut evaluations = evaluated.len();
    let mut fitness: Vec<Fitness> = evaluated.iter().map(|e| e.fitness).collect();

    let mut best_idx = 0;
    for i in 1..fitness.len() {
        if compare_fitness(&fitness[i], &fitness[best_idx]) == Ordering::Greater {
            best_idx = i;
        }
    }
    let mut best_chromosome = population[best_idx].clone();
    let mut best_fitness = fitness[best_idx];
    let mut best_scheme = evaluated.into_iter().nth(best_idx).expect("index in range").scheme;

    let mut trace = EvolutionTrace::default();
    trace.generations.push(stats(0, &fitness, &best_chromosome, best_fitness, net));

    for generation in 1..=params.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| compare_fitness(&fitness[b], &fitness[a]).then(a.cmp(&b)));

        let mut next: Vec<Chromosome> = Vec::with_capacity(params.population);
        let mut next_fitness: Vec<Option<Fitness>> = Vec::with_capacity(params.population);
        for &i in order.iter().take(params.elitism) {
            next.push(population[i].clone());
            next_fitness.push(Some(fitness[i]));
        }
        while next.len() < params.population {
            let a = tournament_select(&fitness, params.tournament_size, &mut rng);
            let b = tournament_select(&fitness, params.tournament_size, &mut rng);
            let (x, y) = crossover(&population[a], &population[b], params.crossover_rate, &mut rng)?;
            next.push(mutate(&x, p_m, &hosts, &mut rng));
            next_fitness.push(None);
            if next.len() < params.population {
                next.push(mutate(&y, p_m, &hosts, &mut rng));
                next_fitness.push(None);
            }
        }

        // Elites keep their score; only offspring are evaluated.
        let todo: Vec<_> = next.iter().enumerate().filter(|(i, _)| next_fitness[*i].is_none()).collect();
        let evaluated = ctx.evaluate_all(generation, &todo)?;
        evaluations += evaluated.len();
        for (&(i, c), e) in todo.iter().zip(evaluated) {
            next_fitness[i] = Some(e.fitness);
            if compare_fitness(&e.fitness, &best_fitness) == Ordering::Greater {
                best_fitness = e.fitness;
                best_chromosome = c.clone();
                best_scheme = e.scheme;
            }
        }
        population = next;
        fitness = next_fitness.into_iter().map(|f| f.expect("every slot scored")).collect();
        trace.generations.push(stats(generation, &fitness, &best_chromosome, best_fitness, net));
    }

    Ok(GaOutcome { best: best_scheme, best_chromosome, best_fitness, trace, evaluations })
}

/// Baseline: `budget` independent uniformly random chromosomes.
pub fn random_search<E: Evaluator>(
    net: &SubstrateNetwork,
    sfcrs: &[SfcRequest],
    catalog: &Catalog,
    budget: usize,
    evaluator: &E,
    seed: u64,
) -> Result<(Chromosome, Fitness), SolverError> {
    let hosts = net.compute_hosts();
    if hosts.is_empty() {
        return Err(SolverError::NoComputeHosts);
    }
    let genes: usize = resolve_all(catalog, sfcrs)?.iter().map(Vec::len).sum();
    let ctx = Context { net, sfcrs, catalog, evaluator, seed, pool: None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
    let mut best: Option<(Chromosome, Fitness)> = None;
    for i in 0..budget {
        let c = Chromosome::random(genes, &hosts, &mut rng);
        let f = ctx.evaluate_one(0, i, &c)?.fitness;
        if best.as_ref().is_none_or(|(_, b)| compare_fitness(&f, b) == Ordering::Greater) {
            best = Some((c, f));
        }
    }
    best.ok_or(SolverError::InvalidParams("random search budget must be positive".into()))
}
