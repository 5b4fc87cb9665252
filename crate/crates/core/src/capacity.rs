//! Capacity engines.
//!
//! [`ba_point_to_point`] is the classical Blahut-Arimoto iteration for a
//! single-user channel. [`gba_sum_capacity`] maximizes `I(X_1..X_K ; Y)` over
//! product input distributions with cyclic per-transmitter exponential-weight
//! updates, refreshing the output marginal after every transmitter. Both work
//! in nats internally and report bits.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    build_game_channel, closed_form_sum_capacity, validate_game_channel, Channel, ChannelMode,
    ChannelParams, TransitionMatrix, DEFAULT_CHECK_TOL,
};
use crate::correlations::dirichlet_ones;
use crate::error::{Error, Result};
use crate::games::Game;
use crate::index::Radix;
use crate::rng::{domain, stream};

/// Independent per-transmitter input distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    factors: Vec<Vec<f64>>,
}

impl ProductDistribution {
    pub fn new(factors: Vec<Vec<f64>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("no factors".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.is_empty() || f.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::Invariant(format!(
                    "factor {i} is empty or has a negative entry"
                )));
            }
            let s: f64 = f.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::Invariant(format!("factor {i} sums to {s}")));
            }
        }
        Ok(Self { factors })
    }

    pub fn uniform(sizes: &[usize]) -> Self {
        Self {
            factors: sizes.iter().map(|&n| vec![1.0 / n as f64; n]).collect(),
        }
    }

    pub fn factors(&self) -> &[Vec<f64>] {
        &self.factors
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.factors.iter().map(Vec::len).collect()
    }

    /// Joint distribution flattened with factor 1 most significant.
    pub fn joint(&self) -> Vec<f64> {
        let mut joint = vec![1.0];
        for f in &self.factors {
            joint = joint
                .iter()
                .flat_map(|&j| f.iter().map(move |&p| j * p))
                .collect();
        }
        joint
    }
}

/// Input law for [`mutual_information`].
#[derive(Debug, Clone, PartialEq)]
pub enum InputDistribution {
    /// Arbitrary joint law over flattened input tuples.
    Joint(Vec<f64>),
    Product(ProductDistribution),
}

fn output_marginal(probs: &[f64], n_out: usize, joint: &[f64]) -> Vec<f64> {
    let mut py = vec![0.0; n_out];
    for (row, &w) in probs.chunks(n_out).zip(joint) {
        if w == 0.0 {
            continue;
        }
        for (acc, &p) in py.iter_mut().zip(row) {
            *acc += w * p;
        }
    }
    py
}

fn mi_nats(probs: &[f64], n_out: usize, joint: &[f64]) -> f64 {
    let py = output_marginal(probs, n_out, joint);
    probs
        .chunks(n_out)
        .zip(joint)
        .filter(|(_, &w)| w > 0.0)
        .map(|(row, &w)| {
            w * row
                .iter()
                .zip(&py)
                .filter(|(&p, _)| p > 0.0)
                .map(|(&p, &q)| p * (p / q).ln())
                .sum::<f64>()
        })
        .sum()
}

/// `I(X; Y)` in bits for the given input law.
pub fn mutual_information(ch: &Channel, d: &InputDistribution) -> Result<f64> {
    let joint = match d {
        InputDistribution::Joint(j) => {
            if j.len() != ch.num_inputs() {
                return Err(Error::DimensionMismatch(format!(
                    "joint law over {} inputs, channel has {}",
                    j.len(),
                    ch.num_inputs()
                )));
            }
            j.clone()
        }
        InputDistribution::Product(p) => {
            if p.sizes() != ch.input_sizes() {
                return Err(Error::DimensionMismatch(format!(
                    "product law sizes {:?}, channel inputs {:?}",
                    p.sizes(),
                    ch.input_sizes()
                )));
            }
            p.joint()
        }
    };
    Ok(mi_nats(ch.probs(), ch.num_outputs(), &joint) / LN_2)
}

/// Per-start diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: usize,
    pub iterations: usize,
    pub final_value: f64,
    pub converged: bool,
    /// Objective in bits at initialization and after every outer iteration.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CapacityResult {
    /// Bits; equals the mutual information at `argmax`.
    pub value: f64,
    pub argmax: ProductDistribution,
    pub best_start: usize,
    pub starts: Vec<StartTrace>,
}

impl CapacityResult {
    pub fn converged_starts(&self) -> usize {
        self.starts.iter().filter(|s| s.converged).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Blahut-Arimoto for one channel. Stops once the capacity bracket
/// `[I(p), max_x D(P(.|x) || p_Y)]` is narrower than `tol` bits.
///
/// Hitting `max_iter` is not an error; the best iterate comes back flagged
/// as unconverged.
pub fn ba_point_to_point(sub: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<CapacityResult> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let n_in = sub.inputs();
    let n_out = sub.outputs();
    let probs = sub.probs();
    let mut p = vec![1.0 / n_in as f64; n_in];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut d = vec![0.0; n_in];
    loop {
        let py = output_marginal(probs, n_out, &p);
        for (dx, row) in d.iter_mut().zip(probs.chunks(n_out)) {
            *dx = row
                .iter()
                .zip(&py)
                .filter(|(&w, _)| w > 0.0)
                .map(|(&w, &q)| w * (w / q).ln())
                .sum();
        }
        let lower: f64 = p.iter().zip(&d).map(|(a, b)| a * b).sum();
        let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        history.push(lower / LN_2);
        if (upper - lower) / LN_2 < tol {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        let m = upper;
        for (px, dx) in p.iter_mut().zip(&d) {
            *px *= (dx - m).exp();
        }
        let s: f64 = p.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric("input distribution collapsed".into()));
        }
        p.iter_mut().for_each(|v| *v /= s);
    }
    let value = mi_nats(probs, n_out, &p) / LN_2;
    Ok(CapacityResult {
        value,
        argmax: ProductDistribution { factors: vec![p] },
        best_start: 0,
        starts: vec![StartTrace {
            start: 0,
            iterations,
            final_value: value,
            converged,
            history,
        }],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitMode {
    /// Every start begins at the uniform product distribution.
    Uniform,
    /// Symmetric Dirichlet(1) draw per transmitter from the start's stream.
    RandomDirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbaConfig {
    /// Stop once one outer iteration improves the objective by less (bits).
    pub tolerance: f64,
    pub max_iterations: usize,
    pub num_starts: usize,
    pub rng_seed: u64,
    pub init: InitMode,
    /// Keep per-iteration objective values in the result.
    pub record_history: bool,
}

impl Default for GbaConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 20_000,
            num_starts: 50,
            rng_seed: 0,
            init: InitMode::RandomDirichlet,
            record_history: false,
        }
    }
}

impl GbaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if self.num_starts == 0 {
            return Err(Error::InvalidArgument("need at least one start".into()));
        }
        Ok(())
    }
}

/// Shared per-channel data for the GBA inner loop.
struct GbaKernel<'a> {
    probs: &'a [f64],
    n_out: usize,
    inputs: &'a Radix,
    /// `Σ_y P(y|x) ln P(y|x)` per input.
    neg_entropy: Vec<f64>,
    /// Flattened input tuples, `inputs.len() × K`.
    digits: Vec<usize>,
}

impl<'a> GbaKernel<'a> {
    fn new(ch: &'a Channel) -> Self {
        let n_out = ch.num_outputs();
        let neg_entropy = ch
            .probs()
            .chunks(n_out)
            .map(|row| row.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum())
            .collect();
        let inputs = ch.input_radix();
        let digits = inputs.iter().flatten().collect();
        Self {
            probs: ch.probs(),
            n_out,
            inputs,
            neg_entropy,
            digits,
        }
    }

    fn k(&self) -> usize {
        self.inputs.sizes().len()
    }

    fn joint(&self, q: &[Vec<f64>]) -> Vec<f64> {
        let k = self.k();
        self.digits
            .chunks(k)
            .map(|x| x.iter().zip(q).map(|(&xi, f)| f[xi]).product())
            .collect()
    }

    /// `r(x) = Σ_y P(y|x) ln(P(y|x)/P(y))` for every input.
    fn divergences(&self, joint: &[f64]) -> Vec<f64> {
        let py = output_marginal(self.probs, self.n_out, joint);
        let ln_py: Vec<f64> = py
            .iter()
            .map(|&v| if v > 0.0 { v.ln() } else { 0.0 })
            .collect();
        self.probs
            .chunks(self.n_out)
            .zip(&self.neg_entropy)
            .map(|(row, &ne)| {
                ne - row
                    .iter()
                    .zip(&ln_py)
                    .filter(|(&p, _)| p > 0.0)
                    .map(|(&p, &l)| p * l)
                    .sum::<f64>()
            })
            .collect()
    }

    fn objective(&self, q: &[Vec<f64>]) -> f64 {
        let joint = self.joint(q);
        let r = self.divergences(&joint);
        joint.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / LN_2
    }

    /// One exponential-weight update of transmitter `i` with the others fixed.
    fn update(&self, q: &mut [Vec<f64>], i: usize) -> Result<()> {
        let k = self.k();
        let joint = self.joint(q);
        let r = self.divergences(&joint);
        let mut d = vec![0.0; q[i].len()];
        for (x, rx) in self.digits.chunks(k).zip(&r) {
            let w: f64 = x
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &xj)| q[j][xj])
                .product();
            d[x[i]] += w * rx;
        }
        let m = d
            .iter()
            .zip(&q[i])
            .filter(|(_, &p)| p > 0.0)
            .map(|(&v, _)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        for (p, dv) in q[i].iter_mut().zip(&d) {
            if *p > 0.0 {
                *p *= (dv - m).exp();
            }
        }
        let s: f64 = q[i].iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Numeric(format!(
                "input distribution of transmitter {i} collapsed"
            )));
        }
        q[i].iter_mut().for_each(|v| *v /= s);
        Ok(())
    }
}

fn run_start(
    kernel: &GbaKernel<'_>,
    sizes: &[usize],
    cfg: &GbaConfig,
    start: usize,
) -> Result<(StartTrace, Vec<Vec<f64>>)> {
    let mut q: Vec<Vec<f64>> = match cfg.init {
        InitMode::Uniform => sizes.iter().map(|&n| vec![1.0 / n as f64; n]).collect(),
        InitMode::RandomDirichlet => {
            let mut rng = stream(cfg.rng_seed, domain::GBA_START, start as u64);
            sizes.iter().map(|&n| dirichlet_ones(&mut rng, n)).collect()
        }
    };
    let mut value = kernel.objective(&q);
    let mut history = if cfg.record_history { vec![value] } else { Vec::new() };
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        for i in 0..sizes.len() {
            kernel.update(&mut q, i)?;
        }
        iterations += 1;
        let next = kernel.objective(&q);
        if cfg.record_history {
            history.push(next);
        }
        let gain = next - value;
        value = next;
        if gain < cfg.tolerance {
            converged = true;
            break;
        }
    }
    Ok((
        StartTrace {
            start,
            iterations,
            final_value: value,
            converged,
            history,
        },
        q,
    ))
}

/// Maximum of `I(X_1..X_K ; Y)` over product inputs, best of `num_starts`.
///
/// Starts run in parallel but each owns its random stream, and the best start
/// is chosen by value with ties going to the lowest index, so the result is
/// independent of the thread count.
pub fn gba_sum_capacity(ch: &Channel, cfg: &GbaConfig) -> Result<CapacityResult> {
    cfg.validate()?;
    let kernel = GbaKernel::new(ch);
    let sizes = ch.input_sizes().to_vec();
    let runs: Vec<(StartTrace, Vec<Vec<f64>>)> = (0..cfg.num_starts)
        .into_par_iter()
        .map(|s| run_start(&kernel, &sizes, cfg, s))
        .collect::<Result<_>>()?;
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |b, (i, (t, _))| if t.final_value > runs[b].0.final_value { i } else { b });
    let mut starts = Vec::with_capacity(runs.len());
    let mut argmax = None;
    for (i, (trace, q)) in runs.into_iter().enumerate() {
        if i == best {
            argmax = Some(q);
        }
        starts.push(trace);
    }
    let argmax = ProductDistribution::new(argmax.expect("at least one start"))?;
    let value = kernel.objective(argmax.factors());
    Ok(CapacityResult {
        value,
        argmax,
        best_start: best,
        starts,
    })
}

/// Lower bound on the cooperation gain for a validated game channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapResult {
    pub closed_form_bits: f64,
    pub gba_bits: f64,
    pub gap_bits: f64,
    /// The raw gap was slightly negative and was reported as 0.
    pub clamped: bool,
    pub converged_starts: usize,
    pub capacity: CapacityResult,
}

/// Gap below which a negative cooperation gap is attributed to roundoff.
pub const GAP_CLAMP_TOL: f64 = 1e-6;

pub fn cooperation_gap(ch: &Channel, g: &Game, cfg: &GbaConfig) -> Result<GapResult> {
    let report = validate_game_channel(ch, g, DEFAULT_CHECK_TOL)?;
    let closed = closed_form_sum_capacity(&report);
    let capacity = gba_sum_capacity(ch, cfg)?;
    let raw = closed - capacity.value;
    let (gap, clamped) = if raw < 0.0 {
        if raw < -GAP_CLAMP_TOL {
            return Err(Error::Numeric(format!(
                "product-input bound {} exceeds the cooperative capacity {closed}",
                capacity.value
            )));
        }
        log::warn!("cooperation gap {raw:e} is negative within tolerance; clamping to 0");
        (0.0, true)
    } else {
        (raw, false)
    };
    Ok(GapResult {
        closed_form_bits: closed,
        gba_bits: capacity.value,
        gap_bits: gap,
        clamped,
        converged_starts: capacity.converged_starts(),
        capacity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eta: f64,
    pub closed_form_bits: f64,
    pub gba_bits: f64,
    pub gap_bits: f64,
    pub converged_starts: usize,
}

/// Gap along `eta_w = 1 − eta`, `eta_l = eta` for per-receiver channels.
/// Rows come back sorted by `eta`.
pub fn eta_sweep(g: &Game, grid: &[f64], cfg: &GbaConfig) -> Result<Vec<SweepRow>> {
    let mut etas = grid.to_vec();
    etas.sort_by(f64::total_cmp);
    etas.into_iter()
        .map(|eta| {
            let at = |e: Error| {
                log::error!("sweep failed at eta={eta}");
                e
            };
            let p = ChannelParams::from_eta(eta, ChannelMode::PerReceiver).map_err(at)?;
            let ch = build_game_channel(g, &p, g.question_sizes()).map_err(at)?;
            let r = cooperation_gap(&ch, g, cfg).map_err(at)?;
            Ok(SweepRow {
                eta,
                closed_form_bits: r.closed_form_bits,
                gba_bits: r.gba_bits,
                gap_bits: r.gap_bits,
                converged_starts: r.converged_starts,
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "eta,closed_form_bits,gba_bits,gap_bits,converged_starts";

pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{:.6},{:.9},{:.9},{:.9},{}\n",
            r.eta, r.closed_form_bits, r.gba_bits, r.gap_bits, r.converged_starts
        ));
    }
    s
}
