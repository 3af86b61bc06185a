use std::collections::VecDeque;
use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::stats::{
    acceptance_probability, batch_divergence, batch_weight, coefficient_of_variation, combine_batches,
    correlation_trigger, mixing_rate, EstimatorState,
};
use crate::engine::{RunOptions, SamplerConfig};
use crate::error::Result;
use crate::model::{sample_row, BayesianNetwork, Evidence};
use crate::num::{LogSumExp, Real};
use crate::proposal::{anneal_update, build_proposal, direct_transform, Direction, ProposalDistribution, SampleRecord};
use crate::simplify::{del_edges_given, fit_tables, FitOptions, SimplifiedNetwork};

/// Stream of the acceptance decisions, kept apart from the sample streams.
const CONTROL_STREAM: u64 = u64::MAX;

/// Per-batch record of a run.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats<T> {
    /// Batch index, starting at 1.
    pub k: usize,
    /// `ln P̃_k(e)` from this batch alone.
    pub ln_ptilde_k: T,
    /// Combined estimate after this batch.
    pub ln_ptilde_cum: T,
    /// Divergence estimate `D̂_k`; `None` when no sample was feasible.
    pub d_hat_k: Option<T>,
    /// Coefficient of variation of the batch ratios.
    pub sigma_hat_k: f64,
    pub w_k: f64,
    /// Mixing rate of the update proposed after this batch, 0 when none was.
    pub eta_k: f64,
    pub accepted: bool,
    pub directing_event: Option<Direction>,
}

/// Result of a batched run.
#[derive(Clone, Debug)]
pub struct RunReport<T> {
    pub algorithm: String,
    pub estimate_ln: T,
    pub samples: usize,
    pub batches: Vec<BatchStats<T>>,
    pub wall_seconds: f64,
    pub config: SamplerConfig,
    pub options: RunOptions,
    /// Number of edges removed to build the simplified network.
    pub deleted_edges: usize,
    /// Proposal in force at the end of the run.
    pub proposal: Option<ProposalDistribution<T>>,
}

fn fmt_opt<T: Real>(x: Option<T>) -> String {
    x.map_or_else(|| "inf".to_string(), |v| v.to_string())
}

impl<T: Real> RunReport<T> {
    /// CSV trace, one row per batch.
    pub fn trace_csv(&self) -> String {
        let mut out =
            String::from("k,ln_Ptilde_k,ln_Ptilde_cum,D_hat_k,sigma_hat_k,w_k,eta_k,accepted,directing_event\n");
        for b in &self.batches {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                b.k,
                b.ln_ptilde_k,
                b.ln_ptilde_cum,
                fmt_opt(b.d_hat_k),
                b.sigma_hat_k,
                b.w_k,
                b.eta_k,
                b.accepted,
                b.directing_event.map_or("none", Direction::as_str),
            );
        }
        out
    }

    /// JSON summary of the run.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            algorithm: &'a str,
            estimate_ln: f64,
            #[serde(rename = "M")]
            samples: usize,
            batches: usize,
            wall_seconds: f64,
            config: &'a SamplerConfig,
            options: RunOptions,
            deleted_edges: usize,
            seed: u64,
        }
        let s = Summary {
            algorithm: &self.algorithm,
            estimate_ln: self.estimate_ln.as_f64(),
            samples: self.samples,
            batches: self.batches.len(),
            wall_seconds: self.wall_seconds,
            config: &self.config,
            options: self.options,
            deleted_edges: self.deleted_edges,
            seed: self.config.seed,
        };
        let mut out = serde_json::to_string_pretty(&s).expect("summaries serialize");
        out.push('\n');
        out
    }

    /// Mean `D̂_k` over the last `l` batches with a finite estimate.
    pub fn final_window_d_hat(&self, l: usize) -> Option<T> {
        let tail: Vec<T> = self.batches.iter().rev().filter_map(|b| b.d_hat_k).take(l).collect();
        if tail.is_empty() {
            None
        } else {
            Some(tail.iter().copied().sum::<T>() / T::from_count(tail.len()))
        }
    }

    /// Batches at which a directing event fired.
    pub fn directing_events(&self) -> Vec<(usize, Direction)> {
        self.batches.iter().filter_map(|b| b.directing_event.map(|d| (b.k, d))).collect()
    }
}

/// Summary of a single-proposal estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticEstimate<T> {
    pub estimate_ln: T,
    pub samples: usize,
    /// `ln` of the unbiased sample variance of the ratios.
    pub ln_variance: T,
    /// Divergence estimate over all samples; `None` when none was feasible.
    pub d_hat: Option<T>,
    pub zero_ratios: usize,
}

impl<T: Real> StaticEstimate<T> {
    /// Standard error of the estimate relative to the estimate itself.
    pub fn relative_standard_error(&self) -> T {
        ((self.ln_variance - T::from_count(self.samples).ln()) * T::lit(0.5) - self.estimate_ln).exp()
    }
}

trait Draw<T>: Sync {
    fn draw(&self, rng: &mut ChaCha8Rng) -> SampleRecord<T>;
}

struct FromProposal<'a, T> {
    q: &'a ProposalDistribution<T>,
    net: &'a BayesianNetwork<T>,
}

impl<T: Real> Draw<T> for FromProposal<'_, T> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> SampleRecord<T> {
        self.q.draw_sample(self.net, rng)
    }
}

fn sub_stream(seed: u64, k: usize, worker: usize, workers: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + (k * workers + worker) as u64);
    rng
}

/// Draws one batch. A single worker reads the main stream; several workers
/// each read their own stream derived from the seed, batch and worker index,
/// and their samples are concatenated in worker order.
fn draw_batch<T: Real, D: Draw<T>>(
    sampler: &D,
    size: usize,
    k: usize,
    cfg: &SamplerConfig,
    main: &mut ChaCha8Rng,
) -> Vec<SampleRecord<T>> {
    if cfg.workers <= 1 {
        return (0..size).map(|_| sampler.draw(main)).collect();
    }
    let workers = cfg.workers;
    let share = |w: usize| size / workers + usize::from(w < size % workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    let mut rng = sub_stream(cfg.seed, k, w, workers);
                    (0..share(w)).map(|_| sampler.draw(&mut rng)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sampler worker panicked")).collect()
    })
}

fn summarize<T: Real>(log_ratios: &[T]) -> StaticEstimate<T> {
    let n = log_ratios.len();
    let mut acc = LogSumExp::new();
    log_ratios.iter().for_each(|&l| acc.push(l));
    let estimate_ln = acc.ln() - T::from_count(n).ln();
    let ln_variance = if n < 2 || estimate_ln == T::neg_infinity() {
        T::neg_infinity()
    } else {
        let mean = estimate_ln;
        let sq: T = log_ratios
            .iter()
            .map(|&l| {
                let d = (l - mean).exp() - T::one();
                d * d
            })
            .sum();
        (sq / T::from_count(n - 1)).ln() + mean + mean
    };
    let feasible: Vec<T> = log_ratios.iter().copied().filter(|&l| l != T::neg_infinity()).collect();
    let d_hat = if feasible.is_empty() {
        None
    } else {
        let mean = -feasible.iter().copied().sum::<T>() / T::from_count(feasible.len());
        Some(if feasible.len() == n { mean } else { mean - (T::from_count(feasible.len()) / T::from_count(n)).ln() })
    };
    StaticEstimate { estimate_ln, samples: n, ln_variance, d_hat, zero_ratios: n - feasible.len() }
}

/// Plain importance-sampling estimate from `samples` draws of a fixed
/// proposal, all taken from one stream seeded with `seed`.
pub fn estimate_static<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    q: &ProposalDistribution<T>,
    samples: usize,
    seed: u64,
) -> StaticEstimate<T> {
    debug_assert_eq!(q.evidence(), ev);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_ratios: Vec<T> = (0..samples).map(|_| q.draw_sample(net, &mut rng).log_ratio).collect();
    summarize(&log_ratios)
}

/// Phases one to four: delete edges, fit, compile the proposal and reinstate
/// deleted edges.
pub fn varis_proposal<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cfg: &SamplerConfig,
) -> Result<(SimplifiedNetwork<T>, ProposalDistribution<T>)> {
    ev.check(net)?;
    let simp = del_edges_given(net, ev, cfg.width_bound).exclude_evidence(net, ev);
    let opts = FitOptions { sweeps: cfg.fit_sweeps, tol: cfg.fit_tol, table_cap: cfg.table_cap };
    let simp = fit_tables(net, &simp, cfg.fit, &opts)?;
    let q = build_proposal(net, &simp, ev, cfg.table_cap)?;
    Ok((simp, q))
}

/// Runs the full sampler: builds the proposal, then samples in batches of
/// `m`, optionally adapting the proposal after each batch and directing it
/// when batch estimates and divergences correlate. When no edge was
/// deleted the proposal is the exact posterior and is kept fixed.
pub fn run_varis<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cfg: &SamplerConfig,
    opts: RunOptions,
) -> Result<RunReport<T>> {
    cfg.check()?;
    let start = Instant::now();
    let (simp, q) = varis_proposal(net, ev, cfg)?;
    let exact = simp.deleted_edges().is_empty();
    let mut report = run_varis_from(net, ev, cfg, if exact { RunOptions::STATIC } else { opts }, simp, q)?;
    report.algorithm = algorithm_name(opts).into();
    report.options = opts;
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn algorithm_name(opts: RunOptions) -> &'static str {
    match (opts.adaptive, opts.directing) {
        (false, false) => "varis-static",
        _ => "varis",
    }
}

/// The batch loop of [`run_varis`] starting from a given simplified network
/// and proposal.
pub fn run_varis_from<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cfg: &SamplerConfig,
    opts: RunOptions,
    mut simp: SimplifiedNetwork<T>,
    mut q: ProposalDistribution<T>,
) -> Result<RunReport<T>> {
    cfg.check()?;
    let start = Instant::now();
    let mut main = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut control = ChaCha8Rng::seed_from_u64(cfg.seed);
    control.set_stream(CONTROL_STREAM);
    let weighted = opts.adaptive || opts.directing;
    let mut state = EstimatorState::new();
    let mut batches = Vec::new();
    let mut prev_d: Option<T> = None;
    let mut window: VecDeque<(f64, f64)> = VecDeque::new();
    let mut cooldown = 0usize;
    let mut drawn = 0usize;
    let mut k = 0usize;
    while drawn < cfg.samples {
        k += 1;
        let size = cfg.batch.min(cfg.samples - drawn);
        let batch = draw_batch(&FromProposal { q: &q, net }, size, k, cfg, &mut main);
        drawn += size;
        let log_ratios: Vec<T> = batch.iter().map(|s| s.log_ratio).collect();
        let mut acc = LogSumExp::new();
        log_ratios.iter().for_each(|&l| acc.push(l));
        let ln_ptilde_k = acc.ln() - T::from_count(size).ln();
        let d_hat_k = batch_divergence(&batch);
        let sigma = coefficient_of_variation(&log_ratios);
        let w = batch_weight(sigma, k == 1, cfg);
        state.record(&log_ratios, if weighted { T::lit(w) } else { T::one() });

        let mut accepted = false;
        let mut eta = 0.0;
        if opts.adaptive {
            eta = mixing_rate(k - 1, cfg);
            let p = if k == 1 {
                1.0
            } else {
                let delta = match (d_hat_k, prev_d) {
                    (Some(a), Some(b)) => (a - b).as_f64(),
                    (Some(_), None) => f64::NEG_INFINITY,
                    (None, _) => f64::INFINITY,
                };
                acceptance_probability(k, delta)
            };
            if p >= 1.0 || control.gen::<f64>() < p {
                q = anneal_update(&q, &batch, T::lit(eta));
                accepted = true;
            }
        }
        prev_d = d_hat_k;

        let mut event = None;
        if opts.directing {
            cooldown = cooldown.saturating_sub(1);
            if let Some(d) = d_hat_k {
                if ln_ptilde_k.is_finite() {
                    window.push_back((d.as_f64(), ln_ptilde_k.as_f64()));
                    if window.len() > cfg.window {
                        window.pop_front();
                    }
                }
            }
            if cooldown == 0 && window.len() == cfg.window {
                if let Some(dir) = correlation_trigger(window.make_contiguous(), cfg) {
                    simp = direct_transform(&simp, dir, T::lit(cfg.alpha), T::lit(cfg.beta))?;
                    q = build_proposal(net, &simp, ev, cfg.table_cap)?;
                    cooldown = cfg.cooldown();
                    window.clear();
                    event = Some(dir);
                }
            }
        }

        batches.push(BatchStats {
            k,
            ln_ptilde_k,
            ln_ptilde_cum: combine_batches(&state),
            d_hat_k,
            sigma_hat_k: sigma,
            w_k: if weighted { w } else { 1.0 },
            eta_k: eta,
            accepted,
            directing_event: event,
        });
    }
    Ok(RunReport {
        algorithm: algorithm_name(opts).into(),
        estimate_ln: combine_batches(&state),
        samples: drawn,
        batches,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        options: opts,
        deleted_edges: simp.deleted_edges().len(),
        proposal: Some(q),
    })
}

struct LikelihoodWeighting<'a, T> {
    net: &'a BayesianNetwork<T>,
    evidence: Vec<Option<usize>>,
    order: Vec<usize>,
}

impl<'a, T: Real> LikelihoodWeighting<'a, T> {
    fn new(net: &'a BayesianNetwork<T>, ev: &Evidence) -> Self {
        Self { net, evidence: ev.as_partial(net.num_vars()), order: net.topological_order() }
    }
}

impl<T: Real> Draw<T> for LikelihoodWeighting<'_, T> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> SampleRecord<T> {
        let mut full = vec![0usize; self.order.len()];
        let mut log_q = T::zero();
        let mut log_w = T::zero();
        for &v in &self.order {
            let cpt = self.net.cpt(v);
            let row = cpt.row_index(&full);
            match self.evidence[v] {
                Some(s) => {
                    full[v] = s;
                    let l = cpt.log_prob(row, s);
                    log_w = if l == T::neg_infinity() || log_w == T::neg_infinity() {
                        T::neg_infinity()
                    } else {
                        log_w + l
                    };
                }
                None => {
                    let x = sample_row(cpt.row(row), T::lit(rng.gen::<f64>()));
                    full[v] = x;
                    log_q = log_q + cpt.log_prob(row, x);
                }
            }
        }
        let log_p = if log_w == T::neg_infinity() { log_w } else { log_q + log_w };
        SampleRecord { assignment: full, log_q, log_p, log_ratio: log_w }
    }
}

/// Likelihood weighting: hidden variables drawn from their CPTs in
/// topological order, each sample weighted by the product of the evidence
/// CPT entries.
pub fn likelihood_weighting<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    samples: usize,
    seed: u64,
) -> StaticEstimate<T> {
    let lw = LikelihoodWeighting::new(net, ev);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_ratios: Vec<T> = (0..samples).map(|_| lw.draw(&mut rng).log_ratio).collect();
    summarize(&log_ratios)
}

/// Likelihood weighting with a per-batch trace.
pub fn run_likelihood_weighting<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    cfg: &SamplerConfig,
) -> Result<RunReport<T>> {
    cfg.check()?;
    ev.check(net)?;
    let start = Instant::now();
    let lw = LikelihoodWeighting::new(net, ev);
    let mut main = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = EstimatorState::new();
    let mut batches = Vec::new();
    let (mut drawn, mut k) = (0usize, 0usize);
    while drawn < cfg.samples {
        k += 1;
        let size = cfg.batch.min(cfg.samples - drawn);
        let batch = draw_batch(&lw, size, k, cfg, &mut main);
        drawn += size;
        batches.push(plain_batch_stats(k, &batch, &mut state, false));
    }
    Ok(RunReport {
        algorithm: "lw".into(),
        estimate_ln: combine_batches(&state),
        samples: drawn,
        batches,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        options: RunOptions::STATIC,
        deleted_edges: 0,
        proposal: None,
    })
}

fn plain_batch_stats<T: Real>(
    k: usize,
    batch: &[SampleRecord<T>],
    state: &mut EstimatorState<T>,
    accepted: bool,
) -> BatchStats<T> {
    let log_ratios: Vec<T> = batch.iter().map(|s| s.log_ratio).collect();
    let mut acc = LogSumExp::new();
    log_ratios.iter().for_each(|&l| acc.push(l));
    state.record(&log_ratios, T::one());
    BatchStats {
        k,
        ln_ptilde_k: acc.ln() - T::from_count(batch.len()).ln(),
        ln_ptilde_cum: combine_batches(state),
        d_hat_k: batch_divergence(batch),
        sigma_hat_k: coefficient_of_variation(&log_ratios),
        w_k: 1.0,
        eta_k: 0.0,
        accepted,
        directing_event: None,
    }
}

/// Forward sampler whose local distributions skip states that an observed
/// child, with all its parents now known, assigns probability zero.
struct FeasibleForward<'a, T> {
    net: &'a BayesianNetwork<T>,
    tables: &'a ProposalDistribution<T>,
    /// For each variable, observed children whose last unknown parent it is.
    checks: Vec<Vec<usize>>,
}

impl<'a, T: Real> FeasibleForward<'a, T> {
    fn checks(net: &BayesianNetwork<T>, ev: &Evidence, order: &[usize]) -> Vec<Vec<usize>> {
        let n = net.num_vars();
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in order.iter().enumerate() {
            pos[v] = i;
        }
        let mut checks = vec![Vec::new(); n];
        for (e, _) in ev.iter() {
            let last = net.parents(e).iter().copied().filter(|&p| !ev.contains(p)).max_by_key(|&p| pos[p]);
            if let Some(p) = last {
                checks[p].push(e);
            }
        }
        checks
    }
}

impl<T: Real> Draw<T> for FeasibleForward<'_, T> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> SampleRecord<T> {
        let q = self.tables;
        let mut full = vec![0usize; q.num_vars()];
        for (v, s) in q.evidence().iter() {
            full[v] = s;
        }
        let mut log_q = T::zero();
        for &v in q.order() {
            let t = q.table(v).expect("sampled variable has a table");
            let row = t.row(t.row_index(&full));
            let mut pruned = row.to_vec();
            if !self.checks[v].is_empty() {
                for (x, p) in pruned.iter_mut().enumerate() {
                    full[v] = x;
                    let blocked = self.checks[v].iter().any(|&e| {
                        let cpt = self.net.cpt(e);
                        cpt.prob(cpt.row_index(&full), full[e]) == T::zero()
                    });
                    if blocked {
                        *p = T::zero();
                    }
                }
            }
            let total: T = pruned.iter().copied().sum();
            let dist = if total > T::zero() { &pruned[..] } else { row };
            let z: T = dist.iter().copied().sum();
            let x = sample_row(dist, T::lit(rng.gen::<f64>()));
            full[v] = x;
            log_q = log_q + (dist[x] / z).ln();
        }
        let log_p = self.net.log_prob_full(&full);
        let log_ratio = if log_p == T::neg_infinity() { log_p } else { log_p - log_q };
        SampleRecord { assignment: full, log_q, log_p, log_ratio }
    }
}

/// Self-importance sampling restricted to feasible instances: forward
/// sampling from tables initialized to the CPTs, with one-step evidence
/// pruning, and the tables blended with the weighted state frequencies of
/// each batch at rate `η`.
pub fn sis_star<T: Real>(net: &BayesianNetwork<T>, ev: &Evidence, cfg: &SamplerConfig) -> Result<RunReport<T>> {
    cfg.check()?;
    ev.check(net)?;
    let start = Instant::now();
    let mut tables = ProposalDistribution::prior(net, ev);
    let checks = FeasibleForward::checks(net, ev, tables.order());
    let mut main = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = EstimatorState::new();
    let mut batches = Vec::new();
    let (mut drawn, mut k) = (0usize, 0usize);
    while drawn < cfg.samples {
        k += 1;
        let size = cfg.batch.min(cfg.samples - drawn);
        let sampler = FeasibleForward { net, tables: &tables, checks: checks.clone() };
        let batch = draw_batch(&sampler, size, k, cfg, &mut main);
        drawn += size;
        let mut stats = plain_batch_stats(k, &batch, &mut state, true);
        let eta = mixing_rate(k - 1, cfg);
        stats.eta_k = eta;
        tables = anneal_update(&tables, &batch, T::lit(eta));
        batches.push(stats);
    }
    Ok(RunReport {
        algorithm: "sis".into(),
        estimate_ln: combine_batches(&state),
        samples: drawn,
        batches,
        wall_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
        options: RunOptions { adaptive: true, directing: false },
        deleted_edges: 0,
        proposal: Some(tables),
    })
}

/// Draws `samples` instances of [`sis_star`]'s sampler with the initial
/// tables and no adaptation, returning how many were infeasible. With
/// `prune = false` the sampler is plain forward sampling from the CPTs.
pub fn count_infeasible<T: Real>(
    net: &BayesianNetwork<T>,
    ev: &Evidence,
    samples: usize,
    seed: u64,
    prune: bool,
) -> usize {
    let tables = ProposalDistribution::prior(net, ev);
    let checks =
        if prune { FeasibleForward::checks(net, ev, tables.order()) } else { vec![Vec::new(); net.num_vars()] };
    let sampler = FeasibleForward { net, tables: &tables, checks };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).filter(|_| sampler.draw(&mut rng).log_ratio == T::neg_infinity()).count()
}
