//! K-party non-local games.
//!
//! A game is a pair of per-party alphabets (questions and answers) together
//! with a winning set, stored as a dense boolean tensor. Questions and answers
//! are 0-based indices. The tensor is laid out with the question tuple outer
//! and the answer tuple inner, party 1 most significant in both.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Radix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Game {
    name: String,
    questions: Radix,
    answers: Radix,
    winning: Vec<bool>,
}

impl Game {
    /// Builds a game from a fully populated winning tensor.
    pub fn new(
        name: impl Into<String>,
        question_sizes: &[usize],
        answer_sizes: &[usize],
        winning: Vec<bool>,
    ) -> Result<Self> {
        let k = question_sizes.len();
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "a game needs at least 2 parties, got {k}"
            )));
        }
        if answer_sizes.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} question alphabets but {} answer alphabets",
                k,
                answer_sizes.len()
            )));
        }
        if question_sizes.iter().chain(answer_sizes).any(|&s| s == 0) {
            return Err(Error::InvalidArgument(
                "alphabet sizes must be positive".into(),
            ));
        }
        let questions = Radix::new(question_sizes);
        let answers = Radix::new(answer_sizes);
        if winning.len() != questions.len() * answers.len() {
            return Err(Error::DimensionMismatch(format!(
                "winning tensor has {} entries, expected {}",
                winning.len(),
                questions.len() * answers.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            questions,
            answers,
            winning,
        })
    }

    /// Builds a game by evaluating `pred(q, a)` on every tuple.
    pub fn from_predicate<F>(
        name: impl Into<String>,
        question_sizes: &[usize],
        answer_sizes: &[usize],
        pred: F,
    ) -> Result<Self>
    where
        F: Fn(&[usize], &[usize]) -> bool,
    {
        let qr = Radix::new(question_sizes);
        let ar = Radix::new(answer_sizes);
        let mut winning = Vec::with_capacity(qr.len() * ar.len());
        for q in qr.iter() {
            for a in ar.iter() {
                winning.push(pred(&q, &a));
            }
        }
        Self::new(name, question_sizes, answer_sizes, winning)
    }

    pub fn name(&self) -> &str {
        &self.name
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

    pub fn num_question_tuples(&self) -> usize {
        self.questions.len()
    }

    pub fn num_answer_tuples(&self) -> usize {
        self.answers.len()
    }

    /// Winning flags over all answer tuples for the flattened question `q_idx`.
    pub fn winning_row(&self, q_idx: usize) -> &[bool] {
        let n = self.answers.len();
        &self.winning[q_idx * n..(q_idx + 1) * n]
    }

    pub fn winning_tensor(&self) -> &[bool] {
        &self.winning
    }

    pub fn winning_count(&self) -> usize {
        self.winning.iter().filter(|&&w| w).count()
    }

    pub fn is_winning(&self, q: &[usize], a: &[usize]) -> Result<bool> {
        let qi = self.questions.encode(q)?;
        let ai = self.answers.encode(a)?;
        Ok(self.winning[qi * self.answers.len() + ai])
    }

    /// Lookup by flattened indices.
    pub fn is_winning_flat(&self, q_idx: usize, a_idx: usize) -> bool {
        self.winning[q_idx * self.answers.len() + a_idx]
    }

    /// Explicit winning-tuple document for this game.
    pub fn to_spec(&self) -> GameSpec {
        let n = self.answers.len();
        let winning = self
            .winning
            .iter()
            .enumerate()
            .filter(|(_, &w)| w)
            .map(|(i, _)| (self.questions.decode(i / n), self.answers.decode(i % n)))
            .collect();
        GameSpec {
            name: self.name.clone(),
            num_parties: self.num_parties(),
            question_sizes: self.question_sizes().to_vec(),
            answer_sizes: self.answer_sizes().to_vec(),
            builtin: None,
            winning: Some(winning),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_spec())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: GameSpec = serde_json::from_str(s)?;
        game_from_spec(&spec)
    }
}

/// CHSH: binary alphabets, win iff `a1 xor a2 == q1 and q2`.
pub fn make_chsh() -> Game {
    Game::from_predicate("chsh", &[2, 2], &[2, 2], |q, a| (a[0] ^ a[1]) == (q[0] & q[1]))
        .expect("static alphabets")
}

/// Magic square. Questions `0..3` select a row (party 1) or a column
/// (party 2); answers are 3-bit strings stored as integers `0..8` with entry
/// `j` of the string at bit position `j`. Party 1 must answer with even
/// parity, party 2 with odd parity, and they must agree on the shared cell.
pub fn make_magic_square() -> Game {
    Game::from_predicate("magic-square", &[3, 3], &[8, 8], |q, a| {
        let bit = |v: usize, j: usize| (v >> j) & 1;
        a[0].count_ones() % 2 == 0 && a[1].count_ones() % 2 == 1 && bit(a[0], q[1]) == bit(a[1], q[0])
    })
    .expect("static alphabets")
}

/// K-party parity game on binary alphabets. An odd question sum always wins;
/// an even question sum `s` wins iff the answer sum is congruent to `s/2`.
pub fn make_parity(k: usize) -> Result<Game> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "parity game needs K >= 3, got {k}"
        )));
    }
    let sizes = vec![2; k];
    Game::from_predicate(format!("{k}-parity"), &sizes, &sizes, |q, a| {
        let qs: usize = q.iter().sum();
        let asum: usize = a.iter().sum();
        qs % 2 == 1 || asum % 2 == (qs / 2) % 2
    })
}

/// Resolves a built-in game by name. `k` is used by the parity family.
pub fn builtin(name: &str, k: Option<usize>) -> Result<Game> {
    match name.to_ascii_lowercase().as_str() {
        "chsh" => Ok(make_chsh()),
        "magic-square" | "magic_square" | "ms" => Ok(make_magic_square()),
        "parity" | "pp" => make_parity(k.unwrap_or(3)),
        other => {
            // Accept "3-parity", "4-pp" and friends.
            if let Some((n, rest)) = other.split_once('-') {
                if matches!(rest, "parity" | "pp") {
                    if let Ok(k) = n.parse::<usize>() {
                        return make_parity(k);
                    }
                }
            }
            Err(Error::InvalidArgument(format!("unknown game '{name}'")))
        }
    }
}

/// JSON game description. Exactly one of `builtin` and `winning` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub name: String,
    pub num_parties: usize,
    pub question_sizes: Vec<usize>,
    pub answer_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winning: Option<Vec<(Vec<usize>, Vec<usize>)>>,
}

pub fn game_from_spec(spec: &GameSpec) -> Result<Game> {
    if spec.question_sizes.len() != spec.num_parties || spec.answer_sizes.len() != spec.num_parties
    {
        return Err(Error::Malformed(format!(
            "num_parties is {} but alphabets list {} question and {} answer sizes",
            spec.num_parties,
            spec.question_sizes.len(),
            spec.answer_sizes.len()
        )));
    }
    match (&spec.builtin, &spec.winning) {
        (Some(_), Some(_)) => Err(Error::Malformed(
            "specify either `builtin` or `winning`, not both".into(),
        )),
        (None, None) => Err(Error::Malformed(
            "missing winning condition: need `builtin` or `winning`".into(),
        )),
        (Some(b), None) => {
            let g = builtin(b, Some(spec.num_parties))?;
            if g.question_sizes() != spec.question_sizes.as_slice()
                || g.answer_sizes() != spec.answer_sizes.as_slice()
            {
                return Err(Error::Malformed(format!(
                    "declared alphabets do not match built-in game '{b}'"
                )));
            }
            Ok(Game {
                name: spec.name.clone(),
                ..g
            })
        }
        (None, Some(list)) => {
            let qr = Radix::new(&spec.question_sizes);
            let ar = Radix::new(&spec.answer_sizes);
            let mut winning = vec![false; qr.len() * ar.len()];
            let mut seen = HashSet::with_capacity(list.len());
            for (q, a) in list {
                let idx = qr.encode(q)? * ar.len() + ar.encode(a)?;
                if !seen.insert(idx) {
                    return Err(Error::Malformed(format!(
                        "duplicate winning tuple q={q:?} a={a:?}"
                    )));
                }
                winning[idx] = true;
            }
            Game::new(
                spec.name.clone(),
                &spec.question_sizes,
                &spec.answer_sizes,
                winning,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chsh_examples() {
        let g = make_chsh();
        assert!(g.is_winning(&[0, 0], &[0, 0]).unwrap());
        assert!(!g.is_winning(&[1, 1], &[0, 0]).unwrap());
        assert!(g.is_winning(&[0, 0], &[1, 1]).unwrap());
        assert_eq!(g.winning_count(), 8);
        for q in 0..4 {
            assert_eq!(g.winning_row(q).iter().filter(|&&w| w).count(), 2);
        }
    }

    #[test]
    fn magic_square_examples() {
        let g = make_magic_square();
        // First row and column (index 0). a2 = (0,1,1) has even parity.
        assert!(!g.is_winning(&[0, 0], &[0b000, 0b110]).unwrap());
        // a2 = (0,1,0): odd parity, shared cell is entry 0 of both -> 0 = 0.
        assert!(g.is_winning(&[0, 0], &[0b000, 0b010]).unwrap());
        // Same answers on the second row/column: entry 1 differs.
        assert!(!g.is_winning(&[1, 1], &[0b000, 0b010]).unwrap());
        assert!(matches!(
            g.is_winning(&[3, 0], &[0, 0]),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn magic_square_winning_fraction_per_question() {
        // Independent recount: 4 even x 4 odd strings, half agree on the cell.
        let g = make_magic_square();
        for qi in 0..9 {
            let q = g.question_radix().decode(qi);
            let mut count = 0;
            for a1 in 0..8usize {
                for a2 in 0..8usize {
                    let even = a1.count_ones() % 2 == 0;
                    let odd = a2.count_ones() % 2 == 1;
                    if even && odd && ((a1 >> q[1]) & 1) == ((a2 >> q[0]) & 1) {
                        count += 1;
                    }
                }
            }
            assert_eq!(g.winning_row(qi).iter().filter(|&&w| w).count(), count);
            assert_eq!(count, 8);
        }
    }

    #[test]
    fn parity_examples() {
        let g3 = make_parity(3).unwrap();
        for a in g3.answer_radix().iter() {
            assert!(g3.is_winning(&[1, 0, 0], &a).unwrap());
        }
        assert!(g3.is_winning(&[1, 1, 0], &[1, 0, 0]).unwrap());
        assert!(!g3.is_winning(&[0, 0, 0], &[1, 0, 0]).unwrap());
        let g4 = make_parity(4).unwrap();
        assert!(g4.is_winning(&[1, 1, 1, 1], &[0, 0, 0, 0]).unwrap());
        assert!(make_parity(2).is_err());
    }

    #[test]
    fn parity_halves_even_questions() {
        for k in 3..=6 {
            let g = make_parity(k).unwrap();
            let total = g.num_answer_tuples();
            for (qi, q) in g.question_radix().iter().enumerate() {
                let wins = g.winning_row(qi).iter().filter(|&&w| w).count();
                if q.iter().sum::<usize>() % 2 == 1 {
                    assert_eq!(wins, total);
                } else {
                    assert_eq!(wins, total / 2);
                }
            }
        }
    }

    #[test]
    fn spec_builtin_matches_constructor() {
        let spec = GameSpec {
            name: "chsh".into(),
            num_parties: 2,
            question_sizes: vec![2, 2],
            answer_sizes: vec![2, 2],
            builtin: Some("chsh".into()),
            winning: None,
        };
        assert_eq!(game_from_spec(&spec).unwrap(), make_chsh());
    }

    #[test]
    fn spec_errors() {
        let base = GameSpec {
            name: "x".into(),
            num_parties: 2,
            question_sizes: vec![2, 2],
            answer_sizes: vec![2, 2],
            builtin: None,
            winning: Some(vec![(vec![0, 0], vec![0, 0]), (vec![0, 0], vec![0, 0])]),
        };
        assert!(matches!(game_from_spec(&base), Err(Error::Malformed(_))));
        let oob = GameSpec {
            winning: Some(vec![(vec![0, 2], vec![0, 0])]),
            ..base.clone()
        };
        assert!(matches!(game_from_spec(&oob), Err(Error::OutOfRange(_))));
        let neither = GameSpec {
            winning: None,
            ..base.clone()
        };
        assert!(game_from_spec(&neither).is_err());
        assert!(Game::from_json("{\"name\": 3}").is_err());
        let wrong_sizes = GameSpec {
            builtin: Some("chsh".into()),
            winning: None,
            question_sizes: vec![3, 2],
            ..base
        };
        assert!(game_from_spec(&wrong_sizes).is_err());
    }

    #[test]
    fn empty_and_full_winning_lists() {
        let empty = GameSpec {
            name: "never".into(),
            num_parties: 2,
            question_sizes: vec![2, 2],
            answer_sizes: vec![2, 2],
            builtin: None,
            winning: Some(vec![]),
        };
        assert_eq!(game_from_spec(&empty).unwrap().winning_count(), 0);
        let full = make_chsh();
        let all: Vec<_> = full
            .question_radix()
            .iter()
            .flat_map(|q| full.answer_radix().iter().map(move |a| (q.clone(), a)))
            .collect();
        let g = game_from_spec(&GameSpec {
            winning: Some(all),
            ..empty
        })
        .unwrap();
        assert_eq!(g.winning_count(), 16);
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin("4-pp", None).unwrap().num_parties(), 4);
        assert_eq!(builtin("parity", Some(5)).unwrap().num_parties(), 5);
        assert!(builtin("nope", None).is_err());
    }
}
