//! Finite-dimensional quantum strategies.
//!
//! Dense complex matrices only; local systems are small (at most ten qubits in
//! total). [`born_table`] compiles a strategy into a [`CorrelationTable`] by
//! contracting the shared state one party at a time, reusing partial
//! contractions across question prefixes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Complex, DMatrix, DVector};

use crate::correlations::CorrelationTable;
use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const STATE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
pub const MEASUREMENT_TOL: f64 = 1e-9;
const MAX_GHZ_PARTIES: usize = 10;

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    // Symmetrize first so roundoff in the input cannot bias the solver.
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        let herm = hermitian_deviation(&matrix);
        if herm > STATE_TOL {
            return Err(Error::Invariant(format!("state not Hermitian (deviation {herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::Invariant(format!("state trace is {tr}")));
        }
        let min = min_eigenvalue(&matrix);
        if min < -PSD_TOL {
            return Err(Error::Invariant(format!("state has eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// `|psi><psi|` for a unit vector.
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::Invariant(format!("state vector has norm {norm}")));
        }
        Self::new(psi * psi.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// Tensor product of the given states in order.
    pub fn product(states: &[DensityMatrix]) -> Result<Self> {
        let mut it = states.iter();
        let first = it
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty product".into()))?;
        let m = it.fold(first.matrix.clone(), |acc, s| acc.kronecker(&s.matrix));
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Outcome of [`validate_measurement`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub valid: bool,
    /// Most negative eigenvalue over all operators, as a positive number.
    pub psd_violation: f64,
    /// Largest entry of `sum - I` in modulus.
    pub completeness_deviation: f64,
}

/// Checks positivity of every operator and completeness of the set.
pub fn validate_measurement(ops: &[CMatrix], tol: f64) -> MeasurementReport {
    let Some(first) = ops.first() else {
        return MeasurementReport {
            valid: false,
            psd_violation: 0.0,
            completeness_deviation: f64::INFINITY,
        };
    };
    let d = first.nrows();
    if ops.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return MeasurementReport {
            valid: false,
            psd_violation: 0.0,
            completeness_deviation: f64::INFINITY,
        };
    }
    let mut psd_violation = 0.0f64;
    let mut sum = CMatrix::zeros(d, d);
    for m in ops {
        let non_herm = hermitian_deviation(m);
        psd_violation = psd_violation.max(non_herm).max(-min_eigenvalue(m));
        sum += m;
    }
    sum -= CMatrix::identity(d, d);
    let completeness_deviation = sum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    MeasurementReport {
        valid: psd_violation <= tol && completeness_deviation <= tol,
        psd_violation,
        completeness_deviation,
    }
}

/// A POVM for one party and one question, indexed by that party's answer.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    operators: Vec<CMatrix>,
}

impl MeasurementSet {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let r = validate_measurement(&operators, MEASUREMENT_TOL);
        if !r.valid {
            return Err(Error::Invariant(format!(
                "invalid POVM: psd violation {:e}, completeness deviation {:e}",
                r.psd_violation, r.completeness_deviation
            )));
        }
        Ok(Self { operators })
    }

    /// Projective measurement onto the columns of a unitary, outcome `k` for column `k`.
    pub fn from_basis(unitary: &CMatrix) -> Result<Self> {
        let ops = (0..unitary.ncols())
            .map(|k| {
                let v = unitary.column(k);
                v * v.adjoint()
            })
            .collect();
        Self::new(ops)
    }

    /// Joint projective measurement of commuting ±1 observables.
    ///
    /// Outcome `a` has bit `j` set when observable `j` reads −1.
    pub fn from_commuting_observables(obs: &[CMatrix]) -> Result<Self> {
        let d = obs
            .first()
            .ok_or_else(|| Error::InvalidArgument("no observables".into()))?
            .nrows();
        let id = CMatrix::identity(d, d);
        let ops = (0..1usize << obs.len())
            .map(|a| {
                obs.iter().enumerate().fold(id.clone(), |acc, (j, o)| {
                    let sign = if (a >> j) & 1 == 0 { 1.0 } else { -1.0 };
                    acc * (&id + o.scale(sign)).scale(0.5)
                })
            })
            .collect();
        Self::new(ops)
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn num_outcomes(&self) -> usize {
        self.operators.len()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumStrategy {
    local_dims: Vec<usize>,
    state: DensityMatrix,
    /// `measurements[party][question]`.
    measurements: Vec<Vec<MeasurementSet>>,
}

impl QuantumStrategy {
    pub fn new(
        local_dims: Vec<usize>,
        state: DensityMatrix,
        measurements: Vec<Vec<MeasurementSet>>,
    ) -> Result<Self> {
        if local_dims.is_empty() || local_dims.len() != measurements.len() {
            return Err(Error::DimensionMismatch(
                "one local dimension and one measurement list per party".into(),
            ));
        }
        let total: usize = local_dims.iter().product();
        if total != state.dim() {
            return Err(Error::DimensionMismatch(format!(
                "state dimension {} but local dimensions multiply to {total}",
                state.dim()
            )));
        }
        for (i, (sets, &d)) in measurements.iter().zip(&local_dims).enumerate() {
            let Some(first) = sets.first() else {
                return Err(Error::InvalidArgument(format!("party {i} has no questions")));
            };
            for (q, m) in sets.iter().enumerate() {
                if m.dim() != d {
                    return Err(Error::DimensionMismatch(format!(
                        "party {i} question {q} acts on dimension {}, local dimension {d}",
                        m.dim()
                    )));
                }
                if m.num_outcomes() != first.num_outcomes() {
                    return Err(Error::DimensionMismatch(format!(
                        "party {i} has questions with different answer counts"
                    )));
                }
            }
        }
        Ok(Self {
            local_dims,
            state,
            measurements,
        })
    }

    pub fn num_parties(&self) -> usize {
        self.local_dims.len()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.local_dims
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn question_sizes(&self) -> Vec<usize> {
        self.measurements.iter().map(Vec::len).collect()
    }

    pub fn answer_sizes(&self) -> Vec<usize> {
        self.measurements.iter().map(|m| m[0].num_outcomes()).collect()
    }
}

/// Traces out the leading factor of dimension `d` against operator `op`:
/// `out[r, c] = sum_{s,t} op[s, t] * rho[(t, r), (s, c)]`.
fn contract_leading(rho: &[C64], dim: usize, d: usize, op: &CMatrix) -> Vec<C64> {
    let rest = dim / d;
    let mut out = vec![c(0.0, 0.0); rest * rest];
    for s in 0..d {
        for t in 0..d {
            let w = op[(s, t)];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            for r in 0..rest {
                let row = (t * rest + r) * dim + s * rest;
                let src = &rho[row..row + rest];
                let dst = &mut out[r * rest..(r + 1) * rest];
                for (o, x) in dst.iter_mut().zip(src) {
                    *o += w * x;
                }
            }
        }
    }
    out
}

/// Born-rule correlation table `P(a|q) = Tr((⊗ Π_{a_i|q_i}) ρ)`.
pub fn born_table(s: &QuantumStrategy) -> Result<CorrelationTable> {
    let qs = s.question_sizes();
    let as_ = s.answer_sizes();
    let n_answers: usize = as_.iter().product();
    let n_questions: usize = qs.iter().product();
    let mut probs = vec![0.0; n_answers * n_questions];
    let dim = s.state.dim();
    let rho: Vec<C64> = (0..dim)
        .flat_map(|r| (0..dim).map(move |col| (r, col)))
        .map(|(r, col)| s.state.matrix[(r, col)])
        .collect();
    let mut max_imag = 0.0f64;
    descend(s, 0, &rho, dim, 0, 0, &mut probs, n_answers, &mut max_imag);
    if max_imag > STATE_TOL {
        return Err(Error::Numeric(format!(
            "Born probabilities have imaginary residue {max_imag:e}"
        )));
    }
    for p in probs.iter_mut() {
        if *p < 0.0 {
            if *p < -PSD_TOL {
                return Err(Error::Numeric(format!("negative Born probability {p}")));
            }
            *p = 0.0;
        }
    }
    CorrelationTable::new(&qs, &as_, probs)
}

#[allow(clippy::too_many_arguments)]
fn descend(
    s: &QuantumStrategy,
    party: usize,
    rho: &[C64],
    dim: usize,
    q_idx: usize,
    a_idx: usize,
    probs: &mut [f64],
    n_answers: usize,
    max_imag: &mut f64,
) {
    if party == s.num_parties() {
        let v = rho[0];
        *max_imag = max_imag.max(v.im.abs());
        probs[q_idx * n_answers + a_idx] = v.re;
        return;
    }
    let d = s.local_dims[party];
    let sets = &s.measurements[party];
    for (q, set) in sets.iter().enumerate() {
        for (a, op) in set.operators.iter().enumerate() {
            let reduced = contract_leading(rho, dim, d, op);
            descend(
                s,
                party + 1,
                &reduced,
                dim / d,
                q_idx * sets.len() + q,
                a_idx * set.num_outcomes() + a,
                probs,
                n_answers,
                max_imag,
            );
        }
    }
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

/// (|00> + |11>)/sqrt 2
fn bell_pair() -> DVector<C64> {
    let mut v = DVector::zeros(4);
    v[0] = c(FRAC_1_SQRT_2, 0.0);
    v[3] = c(FRAC_1_SQRT_2, 0.0);
    v
}

/// Real orthonormal basis rotated by `theta`: columns `|θ>` and `|θ⊥>`.
fn rotated_basis(theta: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
}

/// Optimal CHSH strategy on a Bell pair. Party 1 measures at angles
/// `0, π/4`, party 2 at `π/8, −π/8`; every question is won with
/// probability `cos²(π/8)`.
pub fn make_tsirelson_chsh() -> QuantumStrategy {
    let state = DensityMatrix::pure(&bell_pair()).expect("Bell state");
    let sets = |angles: [f64; 2]| -> Vec<MeasurementSet> {
        angles
            .iter()
            .map(|&t| MeasurementSet::from_basis(&rotated_basis(t)).expect("orthonormal basis"))
            .collect()
    };
    QuantumStrategy::new(
        vec![2, 2],
        state,
        vec![sets([0.0, PI / 4.0]), sets([PI / 8.0, -PI / 8.0])],
    )
    .expect("static construction")
}

/// Mermin-Peres square on two Bell pairs. Party 1 holds the first qubit of
/// each pair and measures the row observables, party 2 the column
/// observables. Rows multiply to `+I`, columns to `−I`.
pub fn make_mermin_peres() -> QuantumStrategy {
    let (x, y, z, i) = (pauli_x(), pauli_y(), pauli_z(), identity2());
    let square: [[CMatrix; 3]; 3] = [
        [x.kronecker(&i), i.kronecker(&x), x.kronecker(&x)],
        [i.kronecker(&z), z.kronecker(&i), z.kronecker(&z)],
        [
            -x.kronecker(&z),
            -z.kronecker(&x),
            y.kronecker(&y),
        ],
    ];
    // Qubit order A1 A2 B1 B2 with pairs (A1,B1) and (A2,B2).
    let mut psi = DVector::zeros(16);
    for i1 in 0..2 {
        for i2 in 0..2 {
            psi[(i1 << 3) | (i2 << 2) | (i1 << 1) | i2] = c(0.5, 0.0);
        }
    }
    let state = DensityMatrix::pure(&psi).expect("two Bell pairs");
    let rows = (0..3)
        .map(|r| MeasurementSet::from_commuting_observables(&square[r]).expect("commuting row"))
        .collect();
    // On a Bell pair, O ⊗ I acts like I ⊗ Oᵀ; every entry here is invariant
    // under transposition, so party 2 uses the observables as they are.
    let cols = (0..3)
        .map(|col| {
            let obs: Vec<CMatrix> = (0..3).map(|r| square[r][col].transpose()).collect();
            MeasurementSet::from_commuting_observables(&obs).expect("commuting column")
        })
        .collect();
    QuantumStrategy::new(vec![4, 4], state, vec![rows, cols]).expect("static construction")
}

/// GHZ strategy for the K-party parity game. On question 1 a party applies
/// the inverse phase gate, then every party rotates by a Hadamard and
/// measures in the computational basis (an X or Y measurement).
pub fn make_ghz_parity(k: usize) -> Result<QuantumStrategy> {
    if !(3..=MAX_GHZ_PARTIES).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "GHZ strategy supports 3 <= K <= {MAX_GHZ_PARTIES}, got {k}"
        )));
    }
    let dim = 1usize << k;
    let mut psi = DVector::zeros(dim);
    psi[0] = c(FRAC_1_SQRT_2, 0.0);
    psi[dim - 1] = c(FRAC_1_SQRT_2, 0.0);
    let state = DensityMatrix::pure(&psi)?;
    let h = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(-FRAC_1_SQRT_2, 0.0),
        ],
    );
    let s_dag = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)]);
    let local = |q: usize| -> MeasurementSet {
        let u = if q == 0 { h.clone() } else { &h * &s_dag };
        // Measure U then read |a>: the basis vectors are the columns of U†.
        MeasurementSet::from_basis(&u.adjoint()).expect("unitary basis")
    };
    let per_party = vec![local(0), local(1)];
    QuantumStrategy::new(vec![2; k], state, vec![per_party; k])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{
        is_no_signaling, table_from_deterministic, winning_probability,
        winning_probability_per_question, DeterministicStrategy, NO_SIGNALING_TOL,
    };
    use crate::games::{make_chsh, make_magic_square, make_parity};
    use approx::assert_abs_diff_eq;

    fn basis_state(d: usize, k: usize) -> DVector<C64> {
        let mut v = DVector::zeros(d);
        v[k] = c(1.0, 0.0);
        v
    }

    fn computational(d: usize) -> MeasurementSet {
        MeasurementSet::from_basis(&CMatrix::identity(d, d)).unwrap()
    }

    #[test]
    fn validate_measurement_cases() {
        let z = computational(2);
        assert!(validate_measurement(z.operators(), 1e-9).valid);
        assert!(validate_measurement(&[identity2()], 1e-9).valid);
        let r = validate_measurement(&[identity2(), identity2()], 1e-9);
        assert!(!r.valid);
        assert_abs_diff_eq!(r.completeness_deviation, 1.0);
        // non-PSD pair summing to identity
        let bad = [pauli_z(), identity2() - pauli_z()];
        assert!(!validate_measurement(&bad, 1e-9).valid);
    }

    #[test]
    fn density_matrix_checks() {
        assert!(DensityMatrix::new(CMatrix::identity(2, 2)).is_err());
        assert!(DensityMatrix::new(pauli_x().unscale(2.0)).is_err());
        let mixed = DensityMatrix::maximally_mixed(4);
        assert_abs_diff_eq!(mixed.matrix().trace().re, 1.0);
        assert!(DensityMatrix::pure(&DVector::from_element(2, c(1.0, 0.0))).is_err());
    }

    #[test]
    fn product_state_gives_deterministic_table() {
        let s0 = DensityMatrix::pure(&basis_state(2, 0)).unwrap();
        let s1 = DensityMatrix::pure(&basis_state(2, 1)).unwrap();
        let state = DensityMatrix::product(&[s0, s1]).unwrap();
        let flip = MeasurementSet::from_basis(&pauli_x()).unwrap();
        let strat = QuantumStrategy::new(
            vec![2, 2],
            state,
            vec![
                vec![computational(2), flip.clone()],
                vec![computational(2), flip],
            ],
        )
        .unwrap();
        let t = born_table(&strat).unwrap();
        let expect = table_from_deterministic(
            &DeterministicStrategy::new(vec![vec![0, 1], vec![1, 0]], vec![2, 2]).unwrap(),
        );
        for (a, b) in t.probs().iter().zip(expect.probs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_gives_uniform_answers() {
        let strat = QuantumStrategy::new(
            vec![2, 4],
            DensityMatrix::maximally_mixed(8),
            vec![vec![computational(2)], vec![computational(4)]],
        )
        .unwrap();
        let t = born_table(&strat).unwrap();
        for p in t.probs() {
            assert_abs_diff_eq!(*p, 1.0 / 8.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tsirelson_wins_each_question_with_cos_squared() {
        let t = born_table(&make_tsirelson_chsh()).unwrap();
        let g = make_chsh();
        let target = (2.0 + 2f64.sqrt()) / 4.0;
        assert_abs_diff_eq!(winning_probability(&g, &t).unwrap(), target, epsilon = 1e-9);
        for p in winning_probability_per_question(&g, &t).unwrap() {
            assert_abs_diff_eq!(p, (PI / 8.0).cos().powi(2), epsilon = 1e-9);
        }
        assert!(is_no_signaling(&t, NO_SIGNALING_TOL).no_signaling);
    }

    #[test]
    fn mermin_peres_wins_always() {
        let t = born_table(&make_mermin_peres()).unwrap();
        let g = make_magic_square();
        assert_abs_diff_eq!(winning_probability(&g, &t).unwrap(), 1.0, epsilon = 1e-9);
        let mut odd_party1 = 0.0;
        for qi in 0..9 {
            for (ai, p) in t.row(qi).iter().enumerate() {
                let a1 = ai / 8;
                if a1.count_ones() % 2 == 1 {
                    odd_party1 += p;
                }
            }
        }
        assert!(odd_party1 < 1e-9);
        assert!(is_no_signaling(&t, NO_SIGNALING_TOL).no_signaling);
    }

    #[test]
    fn ghz_wins_parity() {
        for k in 3..=5 {
            let t = born_table(&make_ghz_parity(k).unwrap()).unwrap();
            let g = make_parity(k).unwrap();
            assert_abs_diff_eq!(winning_probability(&g, &t).unwrap(), 1.0, epsilon = 1e-9);
            assert!(is_no_signaling(&t, NO_SIGNALING_TOL).no_signaling);
        }
        // all-zero questions: even answer parity with certainty
        let t = born_table(&make_ghz_parity(3).unwrap()).unwrap();
        let even: f64 = t
            .row(0)
            .iter()
            .enumerate()
            .filter(|(a, _)| a.count_ones() % 2 == 0)
            .map(|(_, p)| p)
            .sum();
        assert_abs_diff_eq!(even, 1.0, epsilon = 1e-9);
        assert!(make_ghz_parity(2).is_err());
        assert!(make_ghz_parity(11).is_err());
    }

    #[test]
    fn strategy_shape_errors() {
        let r = QuantumStrategy::new(
            vec![2, 2],
            DensityMatrix::maximally_mixed(8),
            vec![vec![computational(2)], vec![computational(2)]],
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
        let r = QuantumStrategy::new(
            vec![2, 4],
            DensityMatrix::maximally_mixed(8),
            vec![vec![computational(2)], vec![computational(2)]],
        );
        assert!(r.is_err());
    }
}
