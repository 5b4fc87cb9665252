//! Game channels.
//!
//! A [`Channel`] is a dense conditional distribution `P(y | x)` whose input
//! alphabet is factored per transmitter as `X_i = Q_i × A_i`, with
//! `x_i = q_i * |A_i| + a_i`. Inputs are flattened with transmitter 1 most
//! significant, outputs likewise with receiver 1 most significant, and the
//! table is row-major (input outer).
//!
//! A channel has either one receiver per transmitter (an interference
//! channel) or a single receiver that observes the joint output (a
//! multiple-access channel). In the second case the lone receiver's
//! "question" is the full question tuple.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, GameChannelClause, Result};
use crate::games::Game;
use crate::index::Radix;
use crate::info::entropy_bits;

pub const ROW_TOL: f64 = 1e-10;
pub const DEFAULT_CHECK_TOL: f64 = 1e-9;
/// Smallest accepted gap between losing and winning conditional entropies.
pub const STRICTNESS_MARGIN: f64 = 1e-9;

/// A single-input, single-output stochastic matrix `P(y | x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    inputs: usize,
    outputs: usize,
    probs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn new(inputs: usize, outputs: usize, probs: Vec<f64>) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::InvalidArgument("empty alphabet".into()));
        }
        if probs.len() != inputs * outputs {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {inputs}x{outputs} matrix",
                probs.len()
            )));
        }
        check_rows(&probs, outputs)?;
        Ok(Self {
            inputs,
            outputs,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let outputs = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != outputs) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), outputs, rows.concat())
    }

    /// Binary symmetric channel with crossover `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(2, 2, vec![1.0 - p, p, p, 1.0 - p])
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.probs[x * self.outputs..(x + 1) * self.outputs]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.outputs)
    }
}

fn check_rows(probs: &[f64], width: usize) -> Result<()> {
    for (x, row) in probs.chunks(width).enumerate() {
        if row.iter().any(|&p| !(0.0..=1.0 + 1e-12).contains(&p)) {
            return Err(Error::Invariant(format!("row {x} has an entry outside [0,1]")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_TOL {
            return Err(Error::Invariant(format!("row {x} sums to {s}")));
        }
    }
    Ok(())
}

/// Rows are permutations of one another and column sums are constant.
pub fn is_weakly_symmetric(sub: &TransitionMatrix, tol: f64) -> bool {
    let mut reference: Vec<f64> = sub.row(0).to_vec();
    reference.sort_by(f64::total_cmp);
    let rows_match = sub.rows().skip(1).all(|row| {
        let mut sorted = row.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted
            .iter()
            .zip(&reference)
            .all(|(a, b)| (a - b).abs() <= tol)
    });
    if !rows_match {
        return false;
    }
    let col_sums: Vec<f64> = (0..sub.outputs)
        .map(|y| sub.rows().map(|r| r[y]).sum())
        .collect();
    let (lo, hi) = col_sums
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    hi - lo <= tol
}

/// Capacity of a weakly symmetric channel: `log|Y| − H(row)`.
pub fn weakly_symmetric_capacity(sub: &TransitionMatrix) -> Result<f64> {
    if !is_weakly_symmetric(sub, DEFAULT_CHECK_TOL) {
        return Err(Error::Precondition("channel is not weakly symmetric".into()));
    }
    Ok((sub.outputs as f64).log2() - entropy_bits(sub.row(0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    question_sizes: Vec<usize>,
    answer_sizes: Vec<usize>,
    inputs: Radix,
    outputs: Radix,
    probs: Vec<f64>,
}

impl Channel {
    pub fn new(
        question_sizes: &[usize],
        answer_sizes: &[usize],
        output_sizes: &[usize],
        probs: Vec<f64>,
    ) -> Result<Self> {
        let k = question_sizes.len();
        if k == 0 || answer_sizes.len() != k {
            return Err(Error::DimensionMismatch(
                "need matching, nonempty question and answer alphabet lists".into(),
            ));
        }
        if output_sizes.len() != k && output_sizes.len() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} receivers for {k} transmitters; expected {k} or 1",
                output_sizes.len()
            )));
        }
        if question_sizes
            .iter()
            .chain(answer_sizes)
            .chain(output_sizes)
            .any(|&s| s == 0)
        {
            return Err(Error::InvalidArgument("alphabet sizes must be positive".into()));
        }
        let x_sizes: Vec<usize> = question_sizes
            .iter()
            .zip(answer_sizes)
            .map(|(q, a)| q * a)
            .collect();
        let inputs = Radix::new(&x_sizes);
        let outputs = Radix::new(output_sizes);
        if probs.len() != inputs.len() * outputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "channel has {} entries, expected {}",
                probs.len(),
                inputs.len() * outputs.len()
            )));
        }
        check_rows(&probs, outputs.len())?;
        Ok(Self {
            question_sizes: question_sizes.to_vec(),
            answer_sizes: answer_sizes.to_vec(),
            inputs,
            outputs,
            probs,
        })
    }

    /// A single-transmitter channel with a trivial answer alphabet.
    pub fn point_to_point(sub: &TransitionMatrix) -> Self {
        Self::new(&[sub.inputs], &[1], &[sub.outputs], sub.probs.clone())
            .expect("transition matrix is already validated")
    }

    pub fn num_transmitters(&self) -> usize {
        self.question_sizes.len()
    }

    pub fn num_receivers(&self) -> usize {
        self.outputs.sizes().len()
    }

    pub fn question_sizes(&self) -> &[usize] {
        &self.question_sizes
    }

    pub fn answer_sizes(&self) -> &[usize] {
        &self.answer_sizes
    }

    pub fn input_sizes(&self) -> &[usize] {
        self.inputs.sizes()
    }

    pub fn output_sizes(&self) -> &[usize] {
        self.outputs.sizes()
    }

    pub fn input_radix(&self) -> &Radix {
        &self.inputs
    }

    pub fn output_radix(&self) -> &Radix {
        &self.outputs
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row(&self, x_idx: usize) -> &[f64] {
        let n = self.outputs.len();
        &self.probs[x_idx * n..(x_idx + 1) * n]
    }

    /// Input symbol of transmitter `i` for question `q` and answer `a`.
    pub fn input_symbol(&self, i: usize, q: usize, a: usize) -> usize {
        q * self.answer_sizes[i] + a
    }

    /// Splits a flattened input index into per-transmitter questions and answers.
    pub fn split_input(&self, x_idx: usize) -> (Vec<usize>, Vec<usize>) {
        let x = self.inputs.decode(x_idx);
        let q = x.iter().zip(&self.answer_sizes).map(|(x, a)| x / a).collect();
        let a = x.iter().zip(&self.answer_sizes).map(|(x, a)| x % a).collect();
        (q, a)
    }

    /// Transmitters whose questions receiver `r` is meant to learn.
    pub fn receiver_transmitters(&self, r: usize) -> Vec<usize> {
        if self.num_receivers() == self.num_transmitters() {
            vec![r]
        } else {
            (0..self.num_transmitters()).collect()
        }
    }

    /// Size of receiver `r`'s question alphabet.
    pub fn receiver_question_size(&self, r: usize) -> usize {
        self.receiver_transmitters(r)
            .iter()
            .map(|&i| self.question_sizes[i])
            .product()
    }

    /// Receiver `r`'s question index for a question tuple.
    pub fn receiver_question(&self, r: usize, q: &[usize]) -> usize {
        self.receiver_transmitters(r)
            .iter()
            .fold(0, |acc, &i| acc * self.question_sizes[i] + q[i])
    }

    /// The whole channel as one stochastic matrix over flattened alphabets.
    pub fn as_transition_matrix(&self) -> TransitionMatrix {
        TransitionMatrix {
            inputs: self.inputs.len(),
            outputs: self.outputs.len(),
            probs: self.probs.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ChannelDoc {
            question_sizes: self.question_sizes.clone(),
            answer_sizes: self.answer_sizes.clone(),
            output_sizes: self.output_sizes().to_vec(),
            probs: self.probs.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ChannelDoc = serde_json::from_str(s)?;
        Self::new(
            &doc.question_sizes,
            &doc.answer_sizes,
            &doc.output_sizes,
            doc.probs,
        )
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    question_sizes: Vec<usize>,
    answer_sizes: Vec<usize>,
    output_sizes: Vec<usize>,
    probs: Vec<f64>,
}

/// Shannon entropy of the output row for per-transmitter input symbols `x`, in bits.
pub fn conditional_output_entropy(ch: &Channel, x: &[usize]) -> Result<f64> {
    let idx = ch.inputs.encode(x)?;
    Ok(entropy_bits(ch.row(idx)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelMode {
    /// Each receiver sees its own noisy copy of its transmitter's question.
    PerReceiver,
    /// One mixture of a perfect relay of the whole question tuple and uniform noise.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    eta_w: f64,
    eta_l: f64,
    mode: ChannelMode,
}

impl ChannelParams {
    pub fn new(eta_w: f64, eta_l: f64, mode: ChannelMode) -> Result<Self> {
        if !(0.0 <= eta_l && eta_l < eta_w && eta_w <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= eta_l < eta_w <= 1, got eta_w={eta_w}, eta_l={eta_l}"
            )));
        }
        Ok(Self { eta_w, eta_l, mode })
    }

    /// The one-parameter family `eta_w = 1 − eta`, `eta_l = eta`.
    pub fn from_eta(eta: f64, mode: ChannelMode) -> Result<Self> {
        if !(0.0..0.5).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "eta must lie in [0, 0.5), got {eta}"
            )));
        }
        Self::new(1.0 - eta, eta, mode)
    }

    pub fn eta_w(&self) -> f64 {
        self.eta_w
    }

    pub fn eta_l(&self) -> f64 {
        self.eta_l
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }
}

/// Builds the game channel mixing a question relay with uniform noise, with
/// relay strength `eta_w` on winning inputs and `eta_l` on losing ones.
///
/// `output_sizes` must equal the game's question sizes. In global mode the
/// outputs are merged into a single receiver over the question tuple.
pub fn build_game_channel(g: &Game, p: &ChannelParams, output_sizes: &[usize]) -> Result<Channel> {
    if output_sizes != g.question_sizes() {
        return Err(Error::DimensionMismatch(format!(
            "output alphabets {:?} must equal the question alphabets {:?}",
            output_sizes,
            g.question_sizes()
        )));
    }
    let qs = g.question_sizes();
    let as_ = g.answer_sizes();
    let merged = [output_sizes.iter().product::<usize>()];
    let outs: &[usize] = match p.mode {
        ChannelMode::PerReceiver => output_sizes,
        ChannelMode::Global => &merged,
    };
    let x_sizes: Vec<usize> = qs.iter().zip(as_).map(|(q, a)| q * a).collect();
    let xr = Radix::new(&x_sizes);
    let yr = Radix::new(output_sizes);
    let n_out = yr.len();
    let mut probs = Vec::with_capacity(xr.len() * n_out);
    let mut y = vec![0; qs.len()];
    for x in xr.iter() {
        let q: Vec<usize> = x.iter().zip(as_).map(|(x, a)| x / a).collect();
        let a: Vec<usize> = x.iter().zip(as_).map(|(x, a)| x % a).collect();
        let eta = if g.is_winning(&q, &a)? { p.eta_w } else { p.eta_l };
        for yi in 0..n_out {
            let mut idx = yi;
            yr.decode_into(&mut idx, &mut y);
            let v = match p.mode {
                ChannelMode::PerReceiver => y
                    .iter()
                    .zip(&q)
                    .zip(qs)
                    .map(|((&yv, &qv), &n)| {
                        eta * f64::from(u8::from(yv == qv)) + (1.0 - eta) / n as f64
                    })
                    .product(),
                ChannelMode::Global => {
                    let hit = y == q;
                    eta * f64::from(u8::from(hit)) + (1.0 - eta) / n_out as f64
                }
            };
            probs.push(v);
        }
    }
    Channel::new(qs, as_, outs, probs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverReport {
    pub receiver: usize,
    /// Transmitters whose questions this receiver decodes.
    pub transmitters: Vec<usize>,
    pub question_size: usize,
    pub output_size: usize,
    /// Winning sub-channel `P(y_r | q_r)`.
    pub sub_channel: TransitionMatrix,
    pub h_w_bits: f64,
    pub weakly_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameChannelReport {
    pub receivers: Vec<ReceiverReport>,
    /// Largest deviation of a winning row from the product of its factors.
    pub factorization_residual: f64,
    pub max_winning_entropy: f64,
    /// `+inf` when the game has no losing inputs.
    pub min_losing_entropy: f64,
    /// `min_losing_entropy − max_winning_entropy`.
    pub strictness_margin: f64,
}

impl GameChannelReport {
    pub fn h_w(&self) -> Vec<f64> {
        self.receivers.iter().map(|r| r.h_w_bits).collect()
    }

    /// One row per receiver.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("receiver,question_size,output_size,h_w_bits,weakly_symmetric\n");
        for r in &self.receivers {
            let _ = writeln!(
                s,
                "{},{},{},{:.12},{}",
                r.receiver, r.question_size, r.output_size, r.h_w_bits, r.weakly_symmetric
            );
        }
        s
    }
}

fn clause_err(clause: GameChannelClause, detail: String) -> Error {
    Error::GameChannel { clause, detail }
}

/// Checks the three game-channel conditions against `g` and extracts the
/// winning sub-channels and their row entropies.
pub fn validate_game_channel(ch: &Channel, g: &Game, tol: f64) -> Result<GameChannelReport> {
    if ch.question_sizes() != g.question_sizes() || ch.answer_sizes() != g.answer_sizes() {
        return Err(Error::DimensionMismatch(format!(
            "channel alphabets {:?}x{:?} do not match game '{}'",
            ch.question_sizes(),
            ch.answer_sizes(),
            g.name()
        )));
    }
    let nr = ch.num_receivers();
    let out_sizes = ch.output_sizes().to_vec();
    let yr = ch.output_radix();
    let mut sub_rows: Vec<Vec<Option<Vec<f64>>>> = (0..nr)
        .map(|r| vec![None; ch.receiver_question_size(r)])
        .collect();
    let mut residual = 0.0f64;
    let mut max_win = f64::NEG_INFINITY;
    let mut min_lose = f64::INFINITY;
    let mut y = vec![0; nr];
    let mut any_winning = false;

    for x_idx in 0..ch.num_inputs() {
        let (q, a) = ch.split_input(x_idx);
        let row = ch.row(x_idx);
        let h = entropy_bits(row);
        if !g.is_winning(&q, &a)? {
            min_lose = min_lose.min(h);
            continue;
        }
        any_winning = true;
        max_win = max_win.max(h);
        let mut marginals: Vec<Vec<f64>> = out_sizes.iter().map(|&n| vec![0.0; n]).collect();
        for (yi, &p) in row.iter().enumerate() {
            let mut idx = yi;
            yr.decode_into(&mut idx, &mut y);
            for r in 0..nr {
                marginals[r][y[r]] += p;
            }
        }
        for (yi, &p) in row.iter().enumerate() {
            let mut idx = yi;
            yr.decode_into(&mut idx, &mut y);
            let prod: f64 = (0..nr).map(|r| marginals[r][y[r]]).product();
            residual = residual.max((p - prod).abs());
        }
        for (r, marg) in marginals.into_iter().enumerate() {
            let qr = ch.receiver_question(r, &q);
            match &sub_rows[r][qr] {
                None => sub_rows[r][qr] = Some(marg),
                Some(reference) => {
                    let dev = reference
                        .iter()
                        .zip(&marg)
                        .map(|(u, v)| (u - v).abs())
                        .fold(0.0, f64::max);
                    residual = residual.max(dev);
                }
            }
        }
        if residual > tol {
            return Err(clause_err(
                GameChannelClause::Factorization,
                format!(
                    "winning input q={q:?} a={a:?} does not split into per-receiver \
                     factors of the questions alone (residual {residual:e})"
                ),
            ));
        }
    }
    if !any_winning {
        return Err(clause_err(
            GameChannelClause::Factorization,
            "game has no winning inputs, so no winning sub-channel exists".into(),
        ));
    }

    let mut receivers = Vec::with_capacity(nr);
    for (r, rows) in sub_rows.into_iter().enumerate() {
        let mut flat = Vec::with_capacity(rows.len() * out_sizes[r]);
        for (qv, row) in rows.into_iter().enumerate() {
            let row = row.ok_or_else(|| {
                clause_err(
                    GameChannelClause::Factorization,
                    format!("receiver {r}: no winning input carries question {qv}"),
                )
            })?;
            flat.extend(row);
        }
        let n_q = flat.len() / out_sizes[r];
        let sub = TransitionMatrix::new(n_q, out_sizes[r], flat)?;
        let ws = is_weakly_symmetric(&sub, tol);
        if !ws {
            return Err(clause_err(
                GameChannelClause::WeakSymmetry,
                format!("winning sub-channel of receiver {r} is not weakly symmetric"),
            ));
        }
        receivers.push(ReceiverReport {
            receiver: r,
            transmitters: ch.receiver_transmitters(r),
            question_size: n_q,
            output_size: out_sizes[r],
            h_w_bits: entropy_bits(sub.row(0)),
            sub_channel: sub,
            weakly_symmetric: ws,
        });
    }

    let margin = min_lose - max_win;
    if margin < STRICTNESS_MARGIN {
        return Err(clause_err(
            GameChannelClause::LessNoisy,
            format!(
                "max winning conditional entropy {max_win:.12} is not strictly below \
                 min losing conditional entropy {min_lose:.12}"
            ),
        ));
    }
    Ok(GameChannelReport {
        receivers,
        factorization_residual: residual,
        max_winning_entropy: max_win,
        min_losing_entropy: min_lose,
        strictness_margin: margin,
    })
}

/// Sum capacity with a winning cooperation box: `Σ_r (log|Y_r| − h_r)`.
pub fn closed_form_sum_capacity(report: &GameChannelReport) -> f64 {
    report
        .receivers
        .iter()
        .map(|r| (r.output_size as f64).log2() - r.h_w_bits)
        .sum()
}
