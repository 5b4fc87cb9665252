//! Reference implementations used as test oracles. These deliberately avoid
//! the library's own code paths (no shared helpers, different formulas).
#![allow(dead_code)]

use gamecap::channels::TransitionMatrix;
use gamecap::games::Game;
use nalgebra::{Complex, DMatrix, DVector};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}

/// `I(X;Y) = H(Y) − H(Y|X)` for a row-major channel and an input law.
pub fn mutual_information(probs: &[f64], n_out: usize, px: &[f64]) -> f64 {
    let mut py = vec![0.0; n_out];
    let mut h_cond = 0.0;
    for (x, &w) in px.iter().enumerate() {
        let row = &probs[x * n_out..(x + 1) * n_out];
        for (y, &p) in row.iter().enumerate() {
            py[y] += w * p;
        }
        h_cond += w * entropy(row);
    }
    entropy(&py) - h_cond
}

/// Joint law of independent inputs, first factor most significant.
pub fn product(factors: &[Vec<f64>]) -> Vec<f64> {
    factors.iter().fold(vec![1.0], |acc, f| {
        acc.iter()
            .flat_map(|&a| f.iter().map(move |&b| a * b))
            .collect()
    })
}

/// Plain Blahut-Arimoto with a fixed iteration budget.
pub fn blahut_arimoto(rows: &[Vec<f64>], iters: usize) -> (f64, Vec<f64>) {
    let nx = rows.len();
    let ny = rows[0].len();
    let mut p = vec![1.0 / nx as f64; nx];
    for _ in 0..iters {
        let q: Vec<f64> = (0..ny)
            .map(|y| (0..nx).map(|x| p[x] * rows[x][y]).sum())
            .collect();
        let c: Vec<f64> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .zip(&q)
                    .filter(|(&w, _)| w > 0.0)
                    .map(|(&w, &qy)| w * (w / qy).log2())
                    .sum::<f64>()
                    .exp2()
            })
            .collect();
        let z: f64 = p.iter().zip(&c).map(|(a, b)| a * b).sum();
        p = p.iter().zip(&c).map(|(a, b)| a * b / z).collect();
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    (mutual_information(&flat, ny, &p), p)
}

/// Points of the probability simplex in `n` coordinates with the given step.
pub fn simplex_grid(n: usize, step: f64) -> Vec<Vec<f64>> {
    let m = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    fn rec(n: usize, left: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / m as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(n - 1, left - c, m, cur, out);
            cur.pop();
        }
    }
    rec(n, m, m, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive search over product inputs for two transmitters.
pub fn grid_search_two(probs: &[f64], n_out: usize, sizes: [usize; 2], step: f64) -> f64 {
    let g1 = simplex_grid(sizes[0], step);
    let g2 = simplex_grid(sizes[1], step);
    let mut best = 0.0f64;
    for a in &g1 {
        for b in &g2 {
            best = best.max(mutual_information(probs, n_out, &product(&[a.clone(), b.clone()])));
        }
    }
    best
}

pub fn dirichlet<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Winning probability of a deterministic strategy straight from the predicate.
pub fn deterministic_win(g: &Game, answers: &[Vec<usize>]) -> f64 {
    let qs = g.question_sizes();
    let total: usize = qs.iter().product();
    let mut wins = 0;
    let mut q = vec![0; qs.len()];
    for mut idx in 0..total {
        for i in (0..qs.len()).rev() {
            q[i] = idx % qs[i];
            idx /= qs[i];
        }
        let a: Vec<usize> = (0..qs.len()).map(|i| answers[i][q[i]]).collect();
        if g.is_winning(&q, &a).unwrap() {
            wins += 1;
        }
    }
    wins as f64 / total as f64
}

/// Random-restart coordinate hill climb over deterministic strategies.
pub fn hill_climb<R: Rng>(g: &Game, restarts: usize, rng: &mut R) -> f64 {
    let qs = g.question_sizes().to_vec();
    let asz = g.answer_sizes().to_vec();
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let mut f: Vec<Vec<usize>> = qs
            .iter()
            .zip(&asz)
            .map(|(&nq, &na)| (0..nq).map(|_| rng.random_range(0..na)).collect())
            .collect();
        let mut cur = deterministic_win(g, &f);
        loop {
            let mut improved = false;
            for i in 0..qs.len() {
                for q in 0..qs[i] {
                    for a in 0..asz[i] {
                        let old = f[i][q];
                        f[i][q] = a;
                        let v = deterministic_win(g, &f);
                        if v > cur + 1e-15 {
                            cur = v;
                            improved = true;
                        } else {
                            f[i][q] = old;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
        }
        best = best.max(cur);
    }
    best
}

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Haar-ish random unitary: QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let mut gauss = || {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let m = CMatrix::from_fn(d, d, |_, _| c(gauss(), gauss()));
    m.qr().q()
}

pub fn random_pure_state<R: Rng>(rng: &mut R, d: usize) -> DVector<C64> {
    let u = random_unitary(rng, d);
    u.column(0).into_owned()
}

/// Rank-one projectors onto the columns of `u`.
pub fn projectors(u: &CMatrix) -> Vec<CMatrix> {
    (0..u.ncols())
        .map(|k| {
            let v = u.column(k);
            v * v.adjoint()
        })
        .collect()
}

/// `P(a|q) = Re tr(ρ ⊗ᵢ M[i][qᵢ][aᵢ])` by forming the full tensor product.
pub fn born_oracle(rho: &CMatrix, ops: &[Vec<Vec<CMatrix>>], q: &[usize], a: &[usize]) -> f64 {
    let m = ops
        .iter()
        .enumerate()
        .map(|(i, per_q)| per_q[q[i]][a[i]].clone())
        .reduce(|acc, x| acc.kronecker(&x))
        .unwrap();
    (rho * m).trace().re
}

/// Random weakly symmetric matrix: `d` shifts of one random row by multiples
/// of `|Y|/d`, each used `r` times, then rows shuffled and columns permuted.
pub fn random_weakly_symmetric<R: Rng>(rng: &mut R) -> TransitionMatrix {
    let ny = rng.random_range(2..=6usize);
    let divisors: Vec<usize> = (1..=ny).filter(|d| ny % d == 0).collect();
    let d = *divisors.choose(rng).unwrap();
    let r = rng.random_range(1..=(6 / d).max(1));
    let step = ny / d;
    // Every residue class mod `step` carries mass 1/step, which keeps the
    // column sums equal under shifts by multiples of `step`.
    let mut base = vec![0.0; ny];
    for class in 0..step {
        let w = dirichlet(rng, d);
        for (j, v) in w.into_iter().enumerate() {
            base[class + j * step] = v / step as f64;
        }
    }
    let mut rows: Vec<Vec<f64>> = (0..d)
        .flat_map(|s| std::iter::repeat_n(s * step, r))
        .map(|shift| (0..ny).map(|y| base[(y + ny - shift) % ny]).collect())
        .collect();
    if rows.len() == 1 {
        rows.push(rows[0].clone());
    }
    rows.shuffle(rng);
    let mut perm: Vec<usize> = (0..ny).collect();
    perm.shuffle(rng);
    let rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| perm.iter().map(|&j| row[j]).collect())
        .collect();
    TransitionMatrix::from_rows(&rows).unwrap()
}

pub fn random_rows<R: Rng>(rng: &mut R, nx: usize, ny: usize) -> Vec<f64> {
    (0..nx).flat_map(|_| dirichlet(rng, ny)).collect()
}
