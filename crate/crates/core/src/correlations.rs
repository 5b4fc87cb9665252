//! Cooperation boxes `P(a | q)` and their evaluation against games.
//!
//! A [`CorrelationTable`] is the common currency: classical strategies,
//! quantum strategies (via the Born rule) and no-signaling boxes all compile
//! down to one. Layout matches [`Game`]: question tuple outer, answer tuple
//! inner, party 1 most significant.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::Game;
use crate::index::Radix;

pub const NORMALIZATION_TOL: f64 = 1e-10;
pub const NO_SIGNALING_TOL: f64 = 1e-9;
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    questions: Radix,
    answers: Radix,
    probs: Vec<f64>,
}

impl CorrelationTable {
    /// Validates shape, range and per-question normalization.
    pub fn new(question_sizes: &[usize], answer_sizes: &[usize], probs: Vec<f64>) -> Result<Self> {
        if question_sizes.len() != answer_sizes.len() || question_sizes.is_empty() {
            return Err(Error::DimensionMismatch(
                "question and answer alphabets must list the same positive number of parties"
                    .into(),
            ));
        }
        let questions = Radix::new(question_sizes);
        let answers = Radix::new(answer_sizes);
        if probs.len() != questions.len() * answers.len() {
            return Err(Error::DimensionMismatch(format!(
                "table has {} entries, expected {}",
                probs.len(),
                questions.len() * answers.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, &p)| !(0.0..=1.0 + 1e-12).contains(&p))
        {
            return Err(Error::Invariant(format!(
                "entry {i} = {p} outside [0, 1]"
            )));
        }
        let n = answers.len();
        for (qi, row) in probs.chunks(n).enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Invariant(format!(
                    "row for question {:?} sums to {s}",
                    questions.decode(qi)
                )));
            }
        }
        Ok(Self {
            questions,
            answers,
            probs,
        })
    }

    /// Every answer tuple equally likely for every question.
    pub fn uniform(question_sizes: &[usize], answer_sizes: &[usize]) -> Self {
        let n: usize = answer_sizes.iter().product();
        let m: usize = question_sizes.iter().product();
        Self::new(question_sizes, answer_sizes, vec![1.0 / n as f64; n * m])
            .expect("uniform table is valid")
    }

    pub fn num_parties(&self) -> usize {
        self.questions.sizes().len()
    }

    pub fn question_sizes(&self) -> &[usize] {
        self.questions.sizes()
    }

    pub fn answer_sizes(&self) -> &[usize] {
        self.answers.sizes()
    }

    pub fn question_radix(&self) -> &Radix {
        &self.questions
    }

    pub fn answer_radix(&self) -> &Radix {
        &self.answers
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Answer distribution for the flattened question index.
    pub fn row(&self, q_idx: usize) -> &[f64] {
        let n = self.answers.len();
        &self.probs[q_idx * n..(q_idx + 1) * n]
    }

    pub fn prob(&self, q: &[usize], a: &[usize]) -> Result<f64> {
        let qi = self.questions.encode(q)?;
        let ai = self.answers.encode(a)?;
        Ok(self.probs[qi * self.answers.len() + ai])
    }

    /// Convex combination `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: f64) -> Result<Self> {
        if self.questions != other.questions || self.answers != other.answers {
            return Err(Error::DimensionMismatch("tables over different alphabets".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidArgument(format!("mixing weight {lambda} not in [0,1]")));
        }
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Ok(Self {
            probs,
            ..self.clone()
        })
    }

    pub fn matches_game(&self, g: &Game) -> bool {
        self.question_sizes() == g.question_sizes() && self.answer_sizes() == g.answer_sizes()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&TableDoc {
            question_sizes: self.question_sizes().to_vec(),
            answer_sizes: self.answer_sizes().to_vec(),
            probs: self.probs.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TableDoc = serde_json::from_str(s)?;
        Self::new(&doc.question_sizes, &doc.answer_sizes, doc.probs)
    }
}

/// On-disk form of a [`CorrelationTable`]; `probs` is row-major.
#[derive(Debug, Serialize, Deserialize)]
struct TableDoc {
    question_sizes: Vec<usize>,
    answer_sizes: Vec<usize>,
    probs: Vec<f64>,
}

/// Shared randomness: a latent variable with local response tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedRandomnessStrategy {
    weights: Vec<f64>,
    /// `responses[v][party][question]` is a distribution over that party's answers.
    responses: Vec<Vec<Vec<Vec<f64>>>>,
}

impl SharedRandomnessStrategy {
    pub fn new(weights: Vec<f64>, responses: Vec<Vec<Vec<Vec<f64>>>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != responses.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} latent weights for {} response sets",
                weights.len(),
                responses.len()
            )));
        }
        check_distribution(&weights, "latent weights")?;
        let shape = |r: &Vec<Vec<Vec<f64>>>| -> Vec<(usize, usize)> {
            r.iter()
                .map(|party| (party.len(), party.first().map_or(0, Vec::len)))
                .collect()
        };
        let reference = shape(&responses[0]);
        if reference.is_empty() || reference.iter().any(|&(q, a)| q == 0 || a == 0) {
            return Err(Error::InvalidArgument("empty response table".into()));
        }
        for (v, resp) in responses.iter().enumerate() {
            if shape(resp) != reference {
                return Err(Error::DimensionMismatch(format!(
                    "latent value {v} has a differently shaped response table"
                )));
            }
            for (i, party) in resp.iter().enumerate() {
                for (q, row) in party.iter().enumerate() {
                    if row.len() != reference[i].1 {
                        return Err(Error::DimensionMismatch(format!(
                            "party {i} question {q} has {} answers",
                            row.len()
                        )));
                    }
                    check_distribution(row, "response row")?;
                }
            }
        }
        Ok(Self { weights, responses })
    }

    /// Random strategy with `latent` values: Dirichlet(1) weights and rows.
    pub fn random<R: Rng + ?Sized>(
        rng: &mut R,
        question_sizes: &[usize],
        answer_sizes: &[usize],
        latent: usize,
    ) -> Self {
        let weights = dirichlet_ones(rng, latent);
        let responses = (0..latent)
            .map(|_| {
                question_sizes
                    .iter()
                    .zip(answer_sizes)
                    .map(|(&nq, &na)| (0..nq).map(|_| dirichlet_ones(rng, na)).collect())
                    .collect()
            })
            .collect();
        Self { weights, responses }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn question_sizes(&self) -> Vec<usize> {
        self.responses[0].iter().map(Vec::len).collect()
    }

    pub fn answer_sizes(&self) -> Vec<usize> {
        self.responses[0].iter().map(|p| p[0].len()).collect()
    }
}

/// One answer per question for every party.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    answer_sizes: Vec<usize>,
    /// `answers[party][question]`.
    answers: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn new(answers: Vec<Vec<usize>>, answer_sizes: Vec<usize>) -> Result<Self> {
        if answers.len() != answer_sizes.len() || answers.is_empty() {
            return Err(Error::DimensionMismatch(
                "one answer function per party required".into(),
            ));
        }
        for (i, (f, &na)) in answers.iter().zip(&answer_sizes).enumerate() {
            if f.is_empty() {
                return Err(Error::InvalidArgument(format!("party {i} has no questions")));
            }
            if let Some(&bad) = f.iter().find(|&&a| a >= na) {
                return Err(Error::OutOfRange(format!(
                    "party {i} answers {bad}, alphabet size {na}"
                )));
            }
        }
        Ok(Self {
            answer_sizes,
            answers,
        })
    }

    pub fn answers(&self) -> &[Vec<usize>] {
        &self.answers
    }

    pub fn answer(&self, party: usize, question: usize) -> usize {
        self.answers[party][question]
    }

    pub fn question_sizes(&self) -> Vec<usize> {
        self.answers.iter().map(Vec::len).collect()
    }

    pub fn answer_sizes(&self) -> &[usize] {
        &self.answer_sizes
    }
}

pub fn table_from_shared_randomness(s: &SharedRandomnessStrategy) -> Result<CorrelationTable> {
    let qs = s.question_sizes();
    let as_ = s.answer_sizes();
    let qr = Radix::new(&qs);
    let ar = Radix::new(&as_);
    let mut probs = vec![0.0; qr.len() * ar.len()];
    let mut a = vec![0; as_.len()];
    for (qi, q) in qr.iter().enumerate() {
        for (ai, slot) in probs[qi * ar.len()..(qi + 1) * ar.len()]
            .iter_mut()
            .enumerate()
        {
            let mut idx = ai;
            ar.decode_into(&mut idx, &mut a);
            *slot = s
                .weights
                .iter()
                .zip(&s.responses)
                .map(|(w, resp)| {
                    w * resp
                        .iter()
                        .enumerate()
                        .map(|(i, party)| party[q[i]][a[i]])
                        .product::<f64>()
                })
                .sum();
        }
    }
    CorrelationTable::new(&qs, &as_, probs)
}

pub fn table_from_deterministic(d: &DeterministicStrategy) -> CorrelationTable {
    let qs = d.question_sizes();
    let qr = Radix::new(&qs);
    let ar = Radix::new(&d.answer_sizes);
    let mut probs = vec![0.0; qr.len() * ar.len()];
    let mut a = vec![0; qs.len()];
    for (qi, q) in qr.iter().enumerate() {
        for (i, &qv) in q.iter().enumerate() {
            a[i] = d.answers[i][qv];
        }
        probs[qi * ar.len() + ar.encode_unchecked(&a)] = 1.0;
    }
    CorrelationTable::new(&qs, &d.answer_sizes, probs).expect("deterministic table is valid")
}

/// Largest single-party marginal drift found by [`is_no_signaling`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoSignalingReport {
    pub no_signaling: bool,
    pub max_deviation: f64,
    /// `(party, own question, own answer)` where the deviation occurred.
    pub worst: Option<(usize, usize, usize)>,
}

/// Checks that each party's answer marginal depends only on its own question.
pub fn is_no_signaling(t: &CorrelationTable, tol: f64) -> NoSignalingReport {
    let k = t.num_parties();
    let qs = t.question_sizes();
    let as_ = t.answer_sizes();
    let mut max_dev = 0.0f64;
    let mut worst = None;
    let mut q = vec![0; k];
    let mut a = vec![0; k];
    for i in 0..k {
        // lo/hi of the marginal P(a_i | q) over q_{-i}, per (q_i, a_i)
        let mut lo = vec![f64::INFINITY; qs[i] * as_[i]];
        let mut hi = vec![f64::NEG_INFINITY; qs[i] * as_[i]];
        for qi in 0..t.questions.len() {
            let mut idx = qi;
            t.questions.decode_into(&mut idx, &mut q);
            let mut marg = vec![0.0; as_[i]];
            for (ai, &p) in t.row(qi).iter().enumerate() {
                let mut idx = ai;
                t.answers.decode_into(&mut idx, &mut a);
                marg[a[i]] += p;
            }
            for (ai, m) in marg.into_iter().enumerate() {
                let slot = q[i] * as_[i] + ai;
                lo[slot] = lo[slot].min(m);
                hi[slot] = hi[slot].max(m);
            }
        }
        for (slot, (l, h)) in lo.iter().zip(&hi).enumerate() {
            let dev = h - l;
            if dev > max_dev {
                max_dev = dev;
                worst = Some((i, slot / as_[i], slot % as_[i]));
            }
        }
    }
    NoSignalingReport {
        no_signaling: max_dev <= tol,
        max_deviation: max_dev,
        worst,
    }
}

/// Winning probability under uniformly random questions.
pub fn winning_probability(g: &Game, t: &CorrelationTable) -> Result<f64> {
    if !t.matches_game(g) {
        return Err(Error::DimensionMismatch(format!(
            "table alphabets {:?}/{:?} do not match game '{}' {:?}/{:?}",
            t.question_sizes(),
            t.answer_sizes(),
            g.name(),
            g.question_sizes(),
            g.answer_sizes()
        )));
    }
    let total: f64 = t
        .probs
        .iter()
        .zip(g.winning_tensor())
        .filter(|(_, &w)| w)
        .map(|(p, _)| p)
        .sum();
    Ok(total / g.num_question_tuples() as f64)
}

/// Winning probability conditioned on each question tuple.
pub fn winning_probability_per_question(g: &Game, t: &CorrelationTable) -> Result<Vec<f64>> {
    if !t.matches_game(g) {
        return Err(Error::DimensionMismatch("table does not match game".into()));
    }
    Ok((0..g.num_question_tuples())
        .map(|qi| {
            t.row(qi)
                .iter()
                .zip(g.winning_row(qi))
                .filter(|(_, &w)| w)
                .map(|(p, _)| p)
                .sum()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalOptimum {
    pub value: f64,
    /// Number of question tuples the maximizer wins.
    pub wins: usize,
    pub strategy: DeterministicStrategy,
}

/// Exact classical optimum by enumerating every deterministic strategy.
///
/// Strategies are enumerated in mixed-radix order over the concatenated
/// answer lists `(f_1(0), f_1(1), .., f_K(last))`; the first maximizer in
/// that order is returned regardless of how the work is split across threads.
pub fn classical_max_win(g: &Game, budget: u64) -> Result<ClassicalOptimum> {
    let k = g.num_parties();
    let qs = g.question_sizes();
    let as_ = g.answer_sizes();
    let needed: f64 = qs
        .iter()
        .zip(as_)
        .map(|(&q, &a)| (a as f64).powi(q as i32))
        .product();
    if needed > budget as f64 {
        return Err(Error::BudgetExceeded { needed, budget });
    }
    let digit_sizes: Vec<usize> = qs
        .iter()
        .zip(as_)
        .flat_map(|(&q, &a)| std::iter::repeat_n(a, q))
        .collect();
    let strategies = Radix::new(&digit_sizes);
    let offsets: Vec<usize> = qs
        .iter()
        .scan(0, |acc, &q| {
            let o = *acc;
            *acc += q;
            Some(o)
        })
        .collect();
    let questions: Vec<Vec<usize>> = g.question_radix().iter().collect();
    let nq = questions.len();

    let count = |s: usize| -> usize {
        let mut digits = vec![0; digit_sizes.len()];
        let mut idx = s;
        strategies.decode_into(&mut idx, &mut digits);
        questions
            .iter()
            .enumerate()
            .filter(|(qi, q)| {
                let ai = (0..k).fold(0, |acc, i| {
                    acc * as_[i] + digits[offsets[i] + q[i]]
                });
                g.is_winning_flat(*qi, ai)
            })
            .count()
    };
    let (wins, best) = (0..strategies.len())
        .into_par_iter()
        .map(|s| (count(s), s))
        .reduce(
            || (0, usize::MAX),
            |x, y| {
                if x.0 > y.0 || (x.0 == y.0 && x.1 < y.1) {
                    x
                } else {
                    y
                }
            },
        );
    let digits = strategies.decode(best);
    let answers = (0..k)
        .map(|i| digits[offsets[i]..offsets[i] + qs[i]].to_vec())
        .collect();
    Ok(ClassicalOptimum {
        value: wins as f64 / nq as f64,
        wins,
        strategy: DeterministicStrategy::new(answers, as_.to_vec())?,
    })
}

/// The PR box: `a1 xor a2 = q1 and q2`, each consistent pair with probability 1/2.
pub fn make_pr_box() -> CorrelationTable {
    let mut probs = Vec::with_capacity(16);
    for q in 0..4usize {
        let (q1, q2) = (q >> 1, q & 1);
        for a in 0..4usize {
            let (a1, a2) = (a >> 1, a & 1);
            probs.push(if (a1 ^ a2) == (q1 & q2) { 0.5 } else { 0.0 });
        }
    }
    CorrelationTable::new(&[2, 2], &[2, 2], probs).expect("PR box is valid")
}

fn check_distribution(p: &[f64], what: &str) -> Result<()> {
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::Invariant(format!("{what} has a negative or non-finite entry")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Invariant(format!("{what} sums to {s}")));
    }
    Ok(())
}

pub(crate) fn dirichlet_ones<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
