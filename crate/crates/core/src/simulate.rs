//! Monte Carlo realization of the cooperative coding scheme.
//!
//! Transmitters feed their questions (codeword symbols) to a shared
//! cooperation box, send `(question, answer)` pairs through the channel, and
//! each receiver decodes its transmitter's question sequence by maximum
//! likelihood under the analytic winning sub-channel.
//!
//! Work is split into fixed-size chunks, each with its own random stream
//! (see [`crate::rng`]), and only integer counts are aggregated, so seeded
//! runs are reproducible regardless of thread count.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{validate_game_channel, Channel, GameChannelReport, DEFAULT_CHECK_TOL};
use crate::correlations::{
    classical_max_win, table_from_shared_randomness, winning_probability, CorrelationTable,
    SharedRandomnessStrategy, DEFAULT_ENUMERATION_BUDGET,
};
use crate::error::{Error, Result};
use crate::games::Game;
use crate::info::{entropy_bits, total_variation};
use crate::rng::{domain, stream};

/// Box entries below this are treated as exact zeros before sampling.
pub const TRUNCATION: f64 = 1e-12;
const CHUNK: usize = 4096;
const WINNING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub block_length: usize,
    /// Number of Monte Carlo trials (blocks or symbols).
    pub samples: usize,
    pub rng_seed: u64,
    /// Bits per channel use per transmitter, for random codebooks.
    #[serde(default)]
    pub rates: Vec<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_length == 0 || self.samples == 0 {
            return Err(Error::InvalidArgument(
                "block length and sample count must be at least 1".into(),
            ));
        }
        if self.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::InvalidArgument("rates must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Samples categorical rows after truncating tiny entries.
#[derive(Debug, Clone)]
struct RowSampler {
    rows: Vec<WeightedIndex<f64>>,
}

impl RowSampler {
    fn new(probs: &[f64], width: usize) -> Result<Self> {
        let rows = probs
            .chunks(width)
            .map(|row| {
                let w = row.iter().map(|&p| if p < TRUNCATION { 0.0 } else { p });
                WeightedIndex::new(w).map_err(|e| Error::Numeric(format!("unsamplable row: {e}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self { rows })
    }

    fn sample<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        self.rows[row].sample(rng)
    }
}

/// Precomputed sampler for a cooperation box.
#[derive(Debug, Clone)]
pub struct BoxSampler<'a> {
    table: &'a CorrelationTable,
    rows: RowSampler,
}

impl<'a> BoxSampler<'a> {
    pub fn new(table: &'a CorrelationTable) -> Result<Self> {
        let rows = RowSampler::new(table.probs(), table.answer_radix().len())?;
        Ok(Self { table, rows })
    }

    /// Answer tuple for question tuple `q`, plus the resulting input symbols.
    pub fn transmit<R: Rng + ?Sized>(&self, q: &[usize], rng: &mut R) -> Result<Vec<usize>> {
        let qi = self.table.question_radix().encode(q)?;
        let a = self.table.answer_radix().decode(self.rows.sample(qi, rng));
        Ok(q
            .iter()
            .zip(&a)
            .zip(self.table.answer_sizes())
            .map(|((&q, &a), &na)| q * na + a)
            .collect())
    }
}

/// For each symbol, draws answers from the box given that symbol's questions
/// and forms the channel inputs `x_i = (q_i, a_i)`.
pub fn cooperative_transmit<R: Rng + ?Sized>(
    q_block: &[Vec<usize>],
    cbox: &CorrelationTable,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let sampler = BoxSampler::new(cbox)?;
    q_block.iter().map(|q| sampler.transmit(q, rng)).collect()
}

/// Memoryless channel use; one output tuple (per receiver) per input tuple.
pub fn channel_sample<R: Rng + ?Sized>(
    ch: &Channel,
    x_block: &[Vec<usize>],
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    let sampler = RowSampler::new(ch.probs(), ch.num_outputs())?;
    x_block
        .iter()
        .map(|x| {
            let xi = ch.input_radix().encode(x)?;
            Ok(ch.output_radix().decode(sampler.sample(xi, rng)))
        })
        .collect()
}

fn check_winning_box(g: &Game, cbox: &CorrelationTable) -> Result<()> {
    let p = winning_probability(g, cbox)?;
    if p < 1.0 - WINNING_TOL {
        return Err(Error::Precondition(format!(
            "box wins '{}' with probability {p}, not 1",
            g.name()
        )));
    }
    Ok(())
}

fn chunks(total: usize) -> Vec<(u64, usize)> {
    (0..total.div_ceil(CHUNK))
        .map(|c| (c as u64, CHUNK.min(total - c * CHUNK)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub samples: usize,
    pub winning_fraction: f64,
    /// Worst total-variation distance over questions, per receiver.
    pub tv_per_receiver: Vec<f64>,
    /// Plug-in estimate of the receivers' dependence given the questions
    /// (`I(Y_1;Y_2|Q)` for two receivers), in bits.
    pub conditional_dependence_bits: f64,
}

/// Checks empirically that, with a winning box, the channel behaves like
/// independent per-receiver sub-channels.
pub fn empirical_decomposition_test(
    ch: &Channel,
    g: &Game,
    cbox: &CorrelationTable,
    samples: usize,
    seed: u64,
) -> Result<DecompositionReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    check_winning_box(g, cbox)?;
    let report = validate_game_channel(ch, g, DEFAULT_CHECK_TOL)?;
    let boxs = BoxSampler::new(cbox)?;
    let chs = RowSampler::new(ch.probs(), ch.num_outputs())?;
    let nq = g.num_question_tuples();
    let ny = ch.num_outputs();
    let qsizes = g.question_sizes().to_vec();

    struct Counts {
        wins: usize,
        joint: Vec<usize>,
    }
    let counts: Vec<Counts> = chunks(samples)
        .into_par_iter()
        .map(|(c, n)| -> Result<Counts> {
            let mut rng = stream(seed, domain::SIM_CHUNK, c);
            let mut out = Counts {
                wins: 0,
                joint: vec![0; nq * ny],
            };
            let mut q = vec![0; qsizes.len()];
            for _ in 0..n {
                for (v, &s) in q.iter_mut().zip(&qsizes) {
                    *v = rng.random_range(0..s);
                }
                let x = boxs.transmit(&q, &mut rng)?;
                let (qq, a) = ch.split_input(ch.input_radix().encode_unchecked(&x));
                if g.is_winning(&qq, &a)? {
                    out.wins += 1;
                }
                let y = chs.sample(ch.input_radix().encode_unchecked(&x), &mut rng);
                out.joint[g.question_radix().encode_unchecked(&q) * ny + y] += 1;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut joint = vec![0usize; nq * ny];
    let mut wins = 0;
    for c in &counts {
        wins += c.wins;
        joint.iter_mut().zip(&c.joint).for_each(|(a, b)| *a += b);
    }

    let nr = ch.num_receivers();
    let yr = ch.output_radix();
    let mut tv = vec![0.0f64; nr];
    // per receiver: counts[qr][y_r]
    let mut marg: Vec<Vec<f64>> = (0..nr)
        .map(|r| vec![0.0; ch.receiver_question_size(r) * ch.output_sizes()[r]])
        .collect();
    let mut dependence = 0.0;
    let mut y = vec![0; nr];
    for qi in 0..nq {
        let q = g.question_radix().decode(qi);
        let row = &joint[qi * ny..(qi + 1) * ny];
        let n_q: usize = row.iter().sum();
        if n_q == 0 {
            continue;
        }
        let p_joint: Vec<f64> = row.iter().map(|&c| c as f64 / n_q as f64).collect();
        let mut per: Vec<Vec<f64>> = ch.output_sizes().iter().map(|&s| vec![0.0; s]).collect();
        for (yi, &p) in p_joint.iter().enumerate() {
            let mut idx = yi;
            yr.decode_into(&mut idx, &mut y);
            for r in 0..nr {
                per[r][y[r]] += p;
                let qr = ch.receiver_question(r, &q);
                marg[r][qr * ch.output_sizes()[r] + y[r]] += row[yi] as f64;
            }
        }
        let sum_h: f64 = per.iter().map(|p| entropy_bits(p)).sum();
        dependence += (n_q as f64 / samples as f64) * (sum_h - entropy_bits(&p_joint));
    }
    for (r, rec) in report.receivers.iter().enumerate() {
        let width = rec.output_size;
        for qr in 0..rec.question_size {
            let counts = &marg[r][qr * width..(qr + 1) * width];
            let total: f64 = counts.iter().sum();
            if total == 0.0 {
                continue;
            }
            let emp: Vec<f64> = counts.iter().map(|c| c / total).collect();
            tv[r] = tv[r].max(total_variation(&emp, rec.sub_channel.row(qr)));
        }
    }
    Ok(DecompositionReport {
        samples,
        winning_fraction: wins as f64 / samples as f64,
        tv_per_receiver: tv,
        conditional_dependence_bits: dependence.max(0.0),
    })
}

/// Per-transmitter codebooks over the question alphabets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    question_sizes: Vec<usize>,
    block_length: usize,
    /// `codewords[transmitter][message][symbol]`.
    codewords: Vec<Vec<Vec<usize>>>,
}

impl Codebook {
    pub fn new(
        question_sizes: Vec<usize>,
        block_length: usize,
        codewords: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if codewords.len() != question_sizes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} codebooks for {} transmitters",
                codewords.len(),
                question_sizes.len()
            )));
        }
        if block_length == 0 {
            return Err(Error::InvalidArgument("block length must be positive".into()));
        }
        for (i, (book, &nq)) in codewords.iter().zip(&question_sizes).enumerate() {
            if book.is_empty() {
                return Err(Error::InvalidArgument(format!("transmitter {i} has no messages")));
            }
            for (m, word) in book.iter().enumerate() {
                if word.len() != block_length {
                    return Err(Error::DimensionMismatch(format!(
                        "transmitter {i} message {m} has length {}, block length {block_length}",
                        word.len()
                    )));
                }
                if let Some(&s) = word.iter().find(|&&s| s >= nq) {
                    return Err(Error::OutOfRange(format!(
                        "transmitter {i} message {m} uses symbol {s}, alphabet size {nq}"
                    )));
                }
            }
        }
        Ok(Self {
            question_sizes,
            block_length,
            codewords,
        })
    }

    /// Message `m` is the constant word `m m .. m`.
    pub fn repetition(question_sizes: &[usize], messages: &[usize], n: usize) -> Result<Self> {
        if messages.len() != question_sizes.len() {
            return Err(Error::DimensionMismatch("one message count per transmitter".into()));
        }
        let codewords = messages
            .iter()
            .zip(question_sizes)
            .map(|(&m, &nq)| {
                if m == 0 || m > nq {
                    return Err(Error::InvalidArgument(format!(
                        "repetition code needs 1..={nq} messages, got {m}"
                    )));
                }
                Ok((0..m).map(|v| vec![v; n]).collect())
            })
            .collect::<Result<_>>()?;
        Self::new(question_sizes.to_vec(), n, codewords)
    }

    /// `ceil(2^(n R_i))` distinct uniformly random codewords per transmitter.
    pub fn random(question_sizes: &[usize], cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.rates.len() != question_sizes.len() {
            return Err(Error::DimensionMismatch("one rate per transmitter".into()));
        }
        let n = cfg.block_length;
        let codewords = question_sizes
            .iter()
            .zip(&cfg.rates)
            .enumerate()
            .map(|(i, (&nq, &rate))| {
                let count = (n as f64 * rate).exp2().ceil() as usize;
                let space = (nq as f64).powi(n as i32);
                if count as f64 > space {
                    return Err(Error::InvalidArgument(format!(
                        "transmitter {i}: {count} codewords exceed the {space} available"
                    )));
                }
                let mut rng = stream(cfg.rng_seed, domain::CODEBOOK, i as u64);
                let mut seen = std::collections::HashSet::with_capacity(count);
                let mut book = Vec::with_capacity(count);
                while book.len() < count {
                    let w: Vec<usize> = (0..n).map(|_| rng.random_range(0..nq)).collect();
                    if seen.insert(w.clone()) {
                        book.push(w);
                    }
                }
                Ok(book)
            })
            .collect::<Result<_>>()?;
        Self::new(question_sizes.to_vec(), n, codewords)
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn message_counts(&self) -> Vec<usize> {
        self.codewords.iter().map(Vec::len).collect()
    }

    pub fn codeword(&self, transmitter: usize, message: usize) -> &[usize] {
        &self.codewords[transmitter][message]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Codebook = serde_json::from_str(s)?;
        Self::new(raw.question_sizes, raw.block_length, raw.codewords)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndToEndReport {
    pub trials: usize,
    pub block_length: usize,
    pub message_counts: Vec<usize>,
    pub winning_fraction: f64,
    pub per_receiver_error_rate: Vec<f64>,
    /// Fraction of trials where any receiver decoded wrongly.
    pub message_error_rate: f64,
}

/// Maximum-likelihood decoder for one receiver under its winning sub-channel.
struct Decoder {
    transmitters: Vec<usize>,
    /// Candidate message tuples for the receiver's transmitters.
    candidates: Vec<Vec<usize>>,
    /// `ln P(y | q_r)`, row-major over receiver questions.
    log_lik: Vec<f64>,
    width: usize,
}

impl Decoder {
    fn new(ch: &Channel, report: &GameChannelReport, book: &Codebook, r: usize) -> Self {
        let transmitters = ch.receiver_transmitters(r);
        let sizes: Vec<usize> = transmitters.iter().map(|&i| book.codewords[i].len()).collect();
        let candidates = crate::index::Radix::new(&sizes).iter().collect();
        let rec = &report.receivers[r];
        let log_lik = rec.sub_channel.probs().iter().map(|p| p.ln()).collect();
        Self {
            transmitters,
            candidates,
            log_lik,
            width: rec.output_size,
        }
    }

    fn decode(&self, ch: &Channel, book: &Codebook, y: &[usize]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        let qs = ch.question_sizes();
        for (c, msgs) in self.candidates.iter().enumerate() {
            let mut ll = 0.0;
            for (j, &yj) in y.iter().enumerate() {
                let qr = self
                    .transmitters
                    .iter()
                    .zip(msgs)
                    .fold(0, |acc, (&i, &m)| acc * qs[i] + book.codewords[i][m][j]);
                ll += self.log_lik[qr * self.width + yj];
                if ll == f64::NEG_INFINITY {
                    break;
                }
            }
            if ll > best.0 {
                best = (ll, c);
            }
        }
        best.1
    }
}

/// Uniform messages, cooperative transmission and per-receiver ML decoding.
pub fn end_to_end(
    ch: &Channel,
    g: &Game,
    cbox: &CorrelationTable,
    book: &Codebook,
    cfg: &SimConfig,
) -> Result<EndToEndReport> {
    cfg.validate()?;
    check_winning_box(g, cbox)?;
    if book.question_sizes != g.question_sizes() {
        return Err(Error::DimensionMismatch(
            "codebook alphabets do not match the game's questions".into(),
        ));
    }
    if book.block_length != cfg.block_length {
        return Err(Error::DimensionMismatch(format!(
            "codebook block length {} but configured {}",
            book.block_length, cfg.block_length
        )));
    }
    let report = validate_game_channel(ch, g, DEFAULT_CHECK_TOL)?;
    let boxs = BoxSampler::new(cbox)?;
    let chs = RowSampler::new(ch.probs(), ch.num_outputs())?;
    let nr = ch.num_receivers();
    let k = ch.num_transmitters();
    let decoders: Vec<Decoder> = (0..nr).map(|r| Decoder::new(ch, &report, book, r)).collect();
    let n = cfg.block_length;

    let tallies: Vec<(Vec<usize>, usize, usize)> = chunks(cfg.samples)
        .into_par_iter()
        .map(|(c, trials)| -> Result<(Vec<usize>, usize, usize)> {
            let mut rng = stream(cfg.rng_seed, domain::SIM_CHUNK, c);
            let mut errs = vec![0; nr];
            let mut tuple_errs = 0;
            let mut wins = 0;
            let mut q = vec![0; k];
            let mut ys: Vec<Vec<usize>> = vec![Vec::with_capacity(n); nr];
            for _ in 0..trials {
                let msgs: Vec<usize> = book
                    .codewords
                    .iter()
                    .map(|b| rng.random_range(0..b.len()))
                    .collect();
                ys.iter_mut().for_each(Vec::clear);
                for j in 0..n {
                    for i in 0..k {
                        q[i] = book.codewords[i][msgs[i]][j];
                    }
                    let x = boxs.transmit(&q, &mut rng)?;
                    let xi = ch.input_radix().encode_unchecked(&x);
                    let (qq, a) = ch.split_input(xi);
                    wins += usize::from(g.is_winning(&qq, &a)?);
                    let yi = chs.sample(xi, &mut rng);
                    let y = ch.output_radix().decode(yi);
                    for r in 0..nr {
                        ys[r].push(y[r]);
                    }
                }
                let mut any = false;
                for (r, dec) in decoders.iter().enumerate() {
                    let got = &dec.candidates[dec.decode(ch, book, &ys[r])];
                    let truth: Vec<usize> = dec.transmitters.iter().map(|&i| msgs[i]).collect();
                    if *got != truth {
                        errs[r] += 1;
                        any = true;
                    }
                }
                tuple_errs += usize::from(any);
            }
            Ok((errs, tuple_errs, wins))
        })
        .collect::<Result<_>>()?;
    let mut errs = vec![0usize; nr];
    let mut tuple_errs = 0;
    let mut wins = 0;
    for (e, t, w) in tallies {
        errs.iter_mut().zip(&e).for_each(|(a, b)| *a += b);
        tuple_errs += t;
        wins += w;
    }
    let trials = cfg.samples as f64;
    Ok(EndToEndReport {
        trials: cfg.samples,
        block_length: n,
        message_counts: book.message_counts(),
        winning_fraction: wins as f64 / (trials * n as f64),
        per_receiver_error_rate: errs.iter().map(|&e| e as f64 / trials).collect(),
        message_error_rate: tuple_errs as f64 / trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureDominanceReport {
    pub passed: bool,
    pub trials: usize,
    pub classical_max: f64,
    pub max_observed: f64,
}

/// Random shared-randomness strategies never beat the best deterministic one.
/// Latent alphabet sizes cycle through 1..=4.
pub fn mixture_dominance_test(g: &Game, trials: usize, seed: u64) -> Result<MixtureDominanceReport> {
    let best = classical_max_win(g, DEFAULT_ENUMERATION_BUDGET)?.value;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, domain::MIXTURE, t as u64);
            let s = SharedRandomnessStrategy::random(
                &mut rng,
                g.question_sizes(),
                g.answer_sizes(),
                1 + t % 4,
            );
            winning_probability(g, &table_from_shared_randomness(&s)?)
        })
        .collect::<Result<_>>()?;
    let max_observed = values.iter().copied().fold(0.0, f64::max);
    Ok(MixtureDominanceReport {
        passed: max_observed <= best + 1e-9,
        trials,
        classical_max: best,
        max_observed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{build_game_channel, ChannelMode, ChannelParams};
    use crate::correlations::{make_pr_box, table_from_deterministic, DeterministicStrategy};
    use crate::games::{make_chsh, make_magic_square};
    use crate::rng::StreamRng;
    use rand::SeedableRng;

    fn chsh_channel(eta: f64) -> Channel {
        let p = ChannelParams::from_eta(eta, ChannelMode::PerReceiver).unwrap();
        build_game_channel(&make_chsh(), &p, &[2, 2]).unwrap()
    }

    fn uniform_questions(n: usize, rng: &mut StreamRng) -> Vec<Vec<usize>> {
        (0..n)
            .map(|_| vec![rng.random_range(0..2), rng.random_range(0..2)])
            .collect()
    }

    fn winning_fraction(x: &[Vec<usize>]) -> f64 {
        let g = make_chsh();
        let wins = x
            .iter()
            .filter(|x| {
                g.is_winning(&[x[0] / 2, x[1] / 2], &[x[0] % 2, x[1] % 2])
                    .unwrap()
            })
            .count();
        wins as f64 / x.len() as f64
    }

    #[test]
    fn pr_box_always_wins() {
        let mut rng = StreamRng::seed_from_u64(3);
        let q = uniform_questions(10_000, &mut rng);
        let x = cooperative_transmit(&q, &make_pr_box(), &mut rng).unwrap();
        assert_eq!(winning_fraction(&x), 1.0);
        for (xs, qs) in x.iter().zip(&q) {
            assert_eq!(xs[0] / 2, qs[0]);
            assert_eq!(xs[1] / 2, qs[1]);
        }
    }

    #[test]
    fn deterministic_and_uniform_boxes_win_at_their_rates() {
        let n = 100_000;
        let mut rng = StreamRng::seed_from_u64(4);
        let q = uniform_questions(n, &mut rng);
        let det = table_from_deterministic(
            &DeterministicStrategy::new(vec![vec![0, 0], vec![0, 0]], vec![2, 2]).unwrap(),
        );
        let f = winning_fraction(&cooperative_transmit(&q, &det, &mut rng).unwrap());
        let sigma = (0.75f64 * 0.25 / n as f64).sqrt();
        assert!((f - 0.75).abs() < 3.0 * sigma, "{f}");
        let uni = CorrelationTable::uniform(&[2, 2], &[2, 2]);
        let f = winning_fraction(&cooperative_transmit(&q, &uni, &mut rng).unwrap());
        let sigma = (0.25f64 / n as f64).sqrt();
        assert!((f - 0.5).abs() < 3.0 * sigma, "{f}");
    }

    #[test]
    fn transmit_rejects_bad_questions() {
        let mut rng = StreamRng::seed_from_u64(0);
        assert!(cooperative_transmit(&[vec![2, 0]], &make_pr_box(), &mut rng).is_err());
    }

    #[test]
    fn channel_sampling() {
        let ch = chsh_channel(0.0);
        // winning input q=(1,0) a=(0,0): deterministic relay of (1,0)
        let x = vec![vec![2, 0]; 100];
        let mut rng = StreamRng::seed_from_u64(9);
        let y = channel_sample(&ch, &x, &mut rng).unwrap();
        assert!(y.iter().all(|y| y == &vec![1, 0]));

        let noisy = chsh_channel(0.2);
        let x = vec![vec![3, 1]; 100_000]; // q=(1,0), a=(1,1): winning
        let y = channel_sample(&noisy, &x, &mut StreamRng::seed_from_u64(10)).unwrap();
        let mut counts = [0.0; 4];
        for v in &y {
            counts[v[0] * 2 + v[1]] += 1.0 / y.len() as f64;
        }
        let row = noisy.row(noisy.input_radix().encode(&[3, 1]).unwrap());
        assert!(total_variation(&counts, row) < 0.01);

        let again = channel_sample(&noisy, &x, &mut StreamRng::seed_from_u64(10)).unwrap();
        assert_eq!(y, again);
    }

    #[test]
    fn decomposition_requires_winning_box() {
        let ch = chsh_channel(0.2);
        let uni = CorrelationTable::uniform(&[2, 2], &[2, 2]);
        let err = empirical_decomposition_test(&ch, &make_chsh(), &uni, 100, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn repetition_codes() {
        let book = Codebook::repetition(&[2, 2], &[2, 2], 5).unwrap();
        assert_eq!(book.codeword(1, 1), &[1, 1, 1, 1, 1]);
        assert!(Codebook::repetition(&[2, 2], &[3, 2], 5).is_err());
        let back = Codebook::from_json(&book.to_json().unwrap()).unwrap();
        assert_eq!(back, book);
        assert!(Codebook::new(vec![2], 2, vec![vec![vec![0, 2]]]).is_err());
    }

    #[test]
    fn random_codebooks_are_distinct_and_seeded() {
        let cfg = SimConfig {
            block_length: 8,
            samples: 1,
            rng_seed: 5,
            rates: vec![0.5, 1.0],
        };
        let a = Codebook::random(&[2, 2], &cfg).unwrap();
        assert_eq!(a.message_counts(), vec![16, 256]);
        let set: std::collections::HashSet<_> = a.codewords[1].iter().collect();
        assert_eq!(set.len(), 256);
        assert_eq!(a, Codebook::random(&[2, 2], &cfg).unwrap());
        let too_many = SimConfig {
            rates: vec![1.5, 0.0],
            ..cfg
        };
        assert!(Codebook::random(&[2, 2], &too_many).is_err());
    }

    #[test]
    fn noiseless_magic_square_round_trip() {
        let g = make_magic_square();
        let p = ChannelParams::from_eta(0.0, ChannelMode::PerReceiver).unwrap();
        let ch = build_game_channel(&g, &p, &[3, 3]).unwrap();
        let cbox = crate::quantum::born_table(&crate::quantum::make_mermin_peres()).unwrap();
        let cfg = SimConfig {
            block_length: 8,
            samples: 500,
            rng_seed: 1,
            rates: vec![1.0, 1.0],
        };
        let book = Codebook::random(&[3, 3], &cfg).unwrap();
        let r = end_to_end(&ch, &g, &cbox, &book, &cfg).unwrap();
        assert_eq!(r.message_error_rate, 0.0);
    }

    #[test]
    fn mixture_dominance_small() {
        let r = mixture_dominance_test(&make_chsh(), 50, 2).unwrap();
        assert!(r.passed);
        assert_eq!(r.classical_max, 0.75);
    }
}
