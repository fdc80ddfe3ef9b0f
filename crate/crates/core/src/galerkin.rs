//! Truncated Galerkin system: eigenpairs `λ_j² = 2j(2j-1) + m`,
//! `φ_j = sqrt(2j - 1/2) P_{2j-1}`, and the quartic coupling
//! `G_ijkl = ∫ φ_i φ_j φ_k φ_l / sqrt(λ_i λ_j λ_k λ_l)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quartic::QuarticOracle;
use crate::rational::{from_f64_exact, int, parse_rational, rat, rational_sqrt, to_f64, ExactRational};

/// Default truncation dimension.
pub const DEFAULT_DIM: usize = 16;

/// The potential constant `m > 0`, held exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MassParam {
    exact: ExactRational,
}

impl MassParam {
    pub fn new(exact: ExactRational) -> Result<Self> {
        if !exact.is_positive() {
            return Err(Error::Domain(format!("mass parameter must be positive, got {exact}")));
        }
        Ok(Self { exact })
    }

    /// Exact binary value of the float.
    pub fn from_f64(value: f64) -> Result<Self> {
        let exact = from_f64_exact(value).ok_or_else(|| Error::Domain(format!("mass parameter {value} is not finite")))?;
        Self::new(exact)
    }

    /// Accepts `"p/q"` or decimal text.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(parse_rational(text)?)
    }

    pub fn exact(&self) -> &ExactRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        to_f64(&self.exact)
    }

    /// `m ∈ (0, 1/4) ∪ (1/4, 41/4)`.
    pub fn is_kam_admissible(&self) -> bool {
        self.exact < rat(41, 4) && self.exact != rat(1, 4)
    }

    pub fn require_admissible(&self) -> Result<()> {
        if self.is_kam_admissible() {
            Ok(())
        } else {
            Err(Error::InadmissibleMass(self.exact.to_string()))
        }
    }
}

/// Exact `λ_j² = 2j(2j-1) + m`.
pub fn lambda_sq_exact(j: usize, mass: &MassParam) -> ExactRational {
    int((2 * j * (2 * j - 1)) as i64) + mass.exact()
}

pub fn lambda(j: usize, m: f64) -> f64 {
    ((2 * j * (2 * j - 1)) as f64 + m).sqrt()
}

/// Eigenvalues, Legendre degrees and normalisations of the first `dim` modes.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub dim: usize,
    pub mass: MassParam,
    pub lambdas: Vec<f64>,
    pub mode_degrees: Vec<usize>,
    pub norm_factors: Vec<f64>,
}

impl EigenSystem {
    pub fn new(dim: usize, mass: MassParam) -> Self {
        let m = mass.value();
        Self {
            dim,
            lambdas: (1..=dim).map(|j| lambda(j, m)).collect(),
            mode_degrees: (1..=dim).map(|j| 2 * j - 1).collect(),
            norm_factors: (1..=dim).map(|j| (2.0 * j as f64 - 0.5).sqrt()).collect(),
            mass,
        }
    }

    /// Eigenvalue of mode `j` (1-based).
    pub fn lambda(&self, j: usize) -> f64 {
        self.lambdas[j - 1]
    }

    pub fn lambda_sq_exact(&self, j: usize) -> ExactRational {
        lambda_sq_exact(j, &self.mass)
    }
}

/// Squared normalisation `2j - 1/2` of `φ_j`.
pub fn norm_sq(j: usize) -> ExactRational {
    rat(4 * j as i64 - 1, 2)
}

/// Nonzero pattern of the coupling: with Legendre degrees `2i-1, ...` sorted
/// as `a <= b <= c <= d`, the integral is nonzero iff `a + b + c >= d`.
/// (The degree sum of four odd degrees is always even.)
pub fn selection_rule(i: usize, j: usize, k: usize, l: usize) -> bool {
    let mut d = [2 * i - 1, 2 * j - 1, 2 * k - 1, 2 * l - 1];
    d.sort_unstable();
    d[0] + d[1] + d[2] >= d[3]
}

/// `i ± j ± k ± l` even; the same for every sign choice.
pub fn parity_admissible(i: i64, j: i64, k: i64, l: i64) -> bool {
    (i + j + k + l).rem_euclid(2) == 0
}

/// Distinct orderings of a sorted index quadruple.
pub fn multiplicity(key: &[usize; 4]) -> usize {
    let mut mult = 24;
    let mut run = 1;
    for w in key.windows(2) {
        if w[0] == w[1] {
            run += 1;
            mult /= run;
        } else {
            run = 1;
        }
    }
    mult
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorEntry {
    /// `∫ P_{2i-1} P_{2j-1} P_{2k-1} P_{2l-1}`.
    pub legendre_integral: ExactRational,
    /// `Π (2· - 1/2)` over the four modes.
    pub norm_product_sq: ExactRational,
    /// `G_ijkl` including `1 / sqrt(λλλλ)`.
    pub value: f64,
}

impl TensorEntry {
    /// `(∫ φφφφ)²`, always rational.
    pub fn phi_integral_sq(&self) -> ExactRational {
        &self.norm_product_sq * &self.legendre_integral * &self.legendre_integral
    }

    /// `∫ φφφφ` when it is rational.
    pub fn phi_integral_exact(&self) -> Option<ExactRational> {
        rational_sqrt(&self.phi_integral_sq())
    }

    pub fn phi_integral(&self) -> f64 {
        to_f64(&self.norm_product_sq).sqrt() * to_f64(&self.legendre_integral)
    }
}

/// Sparse symmetric coupling tensor keyed by sorted 1-based indices.
#[derive(Clone, Debug)]
pub struct CouplingTensor {
    dim: usize,
    entries: BTreeMap<[usize; 4], TensorEntry>,
    flat: Vec<([usize; 4], f64)>,
}

#[derive(Serialize)]
struct TensorRecord {
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    int_numerator: String,
    int_denominator: String,
    float_value: f64,
}

impl CouplingTensor {
    fn from_entries(dim: usize, entries: BTreeMap<[usize; 4], TensorEntry>) -> Self {
        let flat = entries.iter().map(|(k, e)| (*k, e.value * multiplicity(k) as f64 / 4.0)).collect();
        Self { dim, entries, flat }
    }

    /// The linear model: every coupling is zero.
    pub fn zeroed(dim: usize) -> Self {
        Self::from_entries(dim, BTreeMap::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[usize; 4], &TensorEntry)> {
        self.entries.iter()
    }

    /// Entry for any ordering of the indices.
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Option<&TensorEntry> {
        let mut key = [i, j, k, l];
        key.sort_unstable();
        self.entries.get(&key)
    }

    /// `G_ijkl`, zero when absent.
    pub fn value(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.get(i, j, k, l).map_or(0.0, |e| e.value)
    }

    /// Largest `|∫ φφφφ|` over stored entries.
    pub fn max_phi_integral(&self) -> f64 {
        self.entries.values().map(|e| e.phi_integral().abs()).fold(0.0, f64::max)
    }

    /// `(1/4) Σ_{ijkl} G_ijkl q_i q_j q_k q_l` over all orderings.
    pub fn quartic_energy(&self, q: &[f64]) -> Result<f64> {
        self.check_dim(q.len())?;
        Ok(self
            .flat
            .iter()
            .map(|(k, w)| w * q[k[0] - 1] * q[k[1] - 1] * q[k[2] - 1] * q[k[3] - 1])
            .sum())
    }

    /// `∂G/∂q_j = Σ_{kls} G_jkls q_k q_l q_s`.
    pub fn gradient(&self, q: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(q.len())?;
        let mut grad = vec![0.0; q.len()];
        self.gradient_into(q, &mut grad);
        Ok(grad)
    }

    /// Allocation-free gradient for the integrator; `q` must have length `dim`.
    pub(crate) fn gradient_into(&self, q: &[f64], grad: &mut [f64]) {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (k, w) in &self.flat {
            let v = [q[k[0] - 1], q[k[1] - 1], q[k[2] - 1], q[k[3] - 1]];
            grad[k[0] - 1] += w * v[1] * v[2] * v[3];
            grad[k[1] - 1] += w * v[0] * v[2] * v[3];
            grad[k[2] - 1] += w * v[0] * v[1] * v[3];
            grad[k[3] - 1] += w * v[0] * v[1] * v[2];
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }

    fn records(&self) -> impl Iterator<Item = TensorRecord> + '_ {
        self.entries.iter().map(|(k, e)| TensorRecord {
            i: k[0],
            j: k[1],
            k: k[2],
            l: k[3],
            int_numerator: e.legendre_integral.numer().to_string(),
            int_denominator: e.legendre_integral.denom().to_string(),
            float_value: e.value,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.records() {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        let records: Vec<_> = self.records().collect();
        serde_json::to_writer_pretty(out, &records)?;
        Ok(())
    }

    /// Writes CSV, or JSON when the path ends in `.json`.
    pub fn export(&self, path: &Path) -> Result<()> {
        let io = |e| Error::Io { path: path.display().to_string(), source: e };
        let file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        if path.extension().is_some_and(|e| e == "json") {
            self.write_json(file)
        } else {
            self.write_csv(file)
        }
    }
}

/// All nonzero couplings among the first `sys.dim` modes.
pub fn build_tensor(sys: &EigenSystem) -> Result<CouplingTensor> {
    let dim = sys.dim;
    if dim < 2 {
        return Err(Error::Domain(format!("coupling tensor needs J >= 2, got {dim}")));
    }
    let oracle = QuarticOracle::new(2 * dim - 1);
    let mut keys = Vec::new();
    for i in 1..=dim {
        for j in i..=dim {
            for k in j..=dim {
                for l in k..=dim {
                    if selection_rule(i, j, k, l) {
                        keys.push([i, j, k, l]);
                    }
                }
            }
        }
    }
    let entries = keys
        .into_par_iter()
        .map(|key| {
            let [i, j, k, l] = key;
            let legendre_integral = oracle.integral(2 * i - 1, 2 * j - 1, 2 * k - 1, 2 * l - 1);
            let norm_product_sq = key.iter().fold(int(1), |acc, &t| acc * norm_sq(t));
            let lam = key.iter().map(|&t| sys.lambda(t)).product::<f64>();
            let value = to_f64(&norm_product_sq).sqrt() * to_f64(&legendre_integral) / lam.sqrt();
            (key, TensorEntry { legendre_integral, norm_product_sq, value })
        })
        .collect::<Vec<_>>();
    if let Some((key, _)) = entries.iter().find(|(_, e)| e.legendre_integral.is_zero()) {
        return Err(Error::SelfCheck(format!("selection rule admits {key:?} but the integral vanishes")));
    }
    Ok(CouplingTensor::from_entries(dim, entries.into_iter().collect()))
}

/// Real canonical coordinates of the truncated system.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhaseState {
    pub fn zeros(dim: usize) -> Self {
        Self { q: vec![0.0; dim], p: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }
}

/// `Λ = (1/2) Σ λ_j (p_j² + q_j²)`.
pub fn quadratic_energy(state: &PhaseState, sys: &EigenSystem) -> Result<f64> {
    for got in [state.q.len(), state.p.len()] {
        if got != sys.dim {
            return Err(Error::DimensionMismatch { expected: sys.dim, got });
        }
    }
    Ok(0.5 * state.q.iter().zip(&state.p).zip(&sys.lambdas).map(|((q, p), l)| l * (q * q + p * p)).sum::<f64>())
}

/// `H = Λ + G`.
pub fn hamiltonian_energy(state: &PhaseState, sys: &EigenSystem, tensor: &CouplingTensor) -> Result<f64> {
    Ok(quadratic_energy(state, sys)? + tensor.quartic_energy(&state.q)?)
}

pub fn gradient_g(q: &[f64], tensor: &CouplingTensor) -> Result<Vec<f64>> {
    tensor.gradient(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::legendre::triple_product_integral;
    use crate::quartic::quartic_integral_oracle;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn system(dim: usize, m: f64) -> (EigenSystem, CouplingTensor) {
        let sys = EigenSystem::new(dim, MassParam::from_f64(m).unwrap());
        let t = build_tensor(&sys).unwrap();
        (sys, t)
    }

    #[test]
    fn mass_admissibility() {
        assert!(MassParam::parse("1/4").unwrap().require_admissible().is_err());
        assert!(MassParam::parse("41/4").unwrap().require_admissible().is_err());
        assert!(MassParam::parse("5").unwrap().is_kam_admissible());
        assert!(MassParam::parse("0.1").unwrap().is_kam_admissible());
        assert!(MassParam::parse("0").is_err());
        assert!(MassParam::from_f64(-1.0).is_err());
    }

    #[test]
    fn eigen_system() {
        let sys = EigenSystem::new(6, MassParam::parse("1").unwrap());
        assert_eq!(sys.lambda(1), 3f64.sqrt());
        assert!(sys.lambdas.windows(2).all(|w| w[1] > w[0]));
        for j in 1..=6 {
            assert_eq!(sys.lambda_sq_exact(j) - int((2 * j * (2 * j - 1)) as i64), int(1));
        }
        assert_eq!(sys.mode_degrees, vec![1, 3, 5, 7, 9, 11]);
    }

    #[test]
    fn selection_rule_examples() {
        assert!(selection_rule(1, 1, 1, 1));
        assert!(!selection_rule(1, 1, 1, 5));
        // degrees (1,1,3,5): the integral is 40/693
        assert!(selection_rule(1, 1, 2, 3));
        assert!(!parity_admissible(1, 1, 2, 3));
        assert!(parity_admissible(1, -1, 2, -2));
    }

    #[test]
    fn zero_pattern_matches_oracle() {
        for i in 1..=8 {
            for j in i..=8 {
                for k in j..=8 {
                    for l in k..=8 {
                        let zero = quartic_integral_oracle(2 * i - 1, 2 * j - 1, 2 * k - 1, 2 * l - 1).is_zero();
                        assert_eq!(selection_rule(i, j, k, l), !zero, "{i} {j} {k} {l}");
                    }
                }
            }
        }
    }

    #[test]
    fn oracle_agrees_with_triple_product_route() {
        // ∫P_a P_b P_c P_d = Σ_s (2s+1)/2 ∫P_a P_b P_s ∫P_s P_c P_d
        for key in [[1usize, 3, 5, 7], [3, 3, 9, 11], [1, 5, 5, 9], [7, 7, 7, 7]] {
            let [a, b, c, d] = key;
            let route = (0..=a + b).fold(ExactRational::zero(), |acc, s| {
                acc + triple_product_integral(a, b, s) * triple_product_integral(s, c, d) * rat(2 * s as i64 + 1, 2)
            });
            assert_eq!(route, quartic_integral_oracle(a, b, c, d));
        }
    }

    #[test]
    fn tensor_entries() {
        let (sys, t) = system(6, 1.0);
        let e = t.get(1, 1, 1, 1).unwrap();
        assert_eq!(e.phi_integral_exact(), Some(rat(9, 10)));
        assert!((e.value - 0.9 / 3.0).abs() < 1e-15);
        assert!(t.get(1, 1, 1, 5).is_none());
        assert!(t.get(3, 2, 1, 1).is_some());
        assert_eq!(t.value(1, 2, 3, 1), t.value(3, 1, 1, 2));
        assert!(t.entries().all(|(_, e)| e.legendre_integral.is_positive()));
        assert!(sys.lambda(1) == 3f64.sqrt());
        assert_eq!(t.dim(), 6);
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(&[1, 1, 1, 1]), 1);
        assert_eq!(multiplicity(&[1, 1, 1, 2]), 4);
        assert_eq!(multiplicity(&[1, 1, 2, 2]), 6);
        assert_eq!(multiplicity(&[1, 1, 2, 3]), 12);
        assert_eq!(multiplicity(&[1, 2, 3, 4]), 24);
        assert_eq!(multiplicity(&[1, 2, 2, 2]), 4);
    }

    #[test]
    fn quartic_energy_matches_full_sum() {
        let (_, t) = system(4, 2.0);
        let q = [0.3, -0.2, 0.5, 0.1];
        let mut full = 0.0;
        for i in 1..=4 {
            for j in 1..=4 {
                for k in 1..=4 {
                    for l in 1..=4 {
                        full += t.value(i, j, k, l) * q[i - 1] * q[j - 1] * q[k - 1] * q[l - 1];
                    }
                }
            }
        }
        assert!((t.quartic_energy(&q).unwrap() - full / 4.0).abs() < 1e-14);
    }

    #[test]
    fn energy_examples() {
        let (sys, t) = system(4, 2.0);
        assert_eq!(hamiltonian_energy(&PhaseState::zeros(4), &sys, &t).unwrap(), 0.0);
        let mut s = PhaseState::zeros(4);
        s.q[0] = 1.0;
        let h = hamiltonian_energy(&s, &sys, &t).unwrap();
        assert!((h - (sys.lambda(1) / 2.0 + t.value(1, 1, 1, 1) / 4.0)).abs() < 1e-15);
        s.p[0] = 1.0;
        assert_eq!(hamiltonian_energy(&s, &sys, &CouplingTensor::zeroed(4)).unwrap(), sys.lambda(1));
        assert!(matches!(
            hamiltonian_energy(&PhaseState::zeros(3), &sys, &t),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(gradient_g(&[0.0; 3], &t).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (_, t) = system(8, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for _ in 0..100 {
            let q: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let g = gradient_g(&q, &t).unwrap();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..8 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += h;
                qm[j] -= h;
                let fd = (t.quartic_energy(&qp).unwrap() - t.quartic_energy(&qm).unwrap()) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * norm, "j={j}: {fd} vs {}", g[j]);
            }
        }
    }

    #[test]
    fn coupling_growth_is_logarithmic() {
        // the largest ∫φφφφ is the diagonal ∫φ_J⁴, which creeps up like log J
        let (_, t8) = system(8, 1.0);
        let (_, t12) = system(12, 1.0);
        let (c8, c12) = (t8.max_phi_integral(), t12.max_phi_integral());
        assert!((c8 - t8.get(8, 8, 8, 8).unwrap().phi_integral()).abs() < 1e-15);
        assert!((c8 - 1.63996).abs() < 1e-4 && (c12 - 1.76681).abs() < 1e-4);
        assert!(c12 > c8 && c12 < 2.0);
    }

    #[test]
    fn tensor_export() {
        let (_, t) = system(2, 1.0);
        let mut out = Vec::new();
        t.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("i,j,k,l,int_numerator,int_denominator,float_value\n1,1,1,1,2,5,"));
        assert_eq!(text.lines().count(), 1 + t.len());
    }

    proptest! {
        #[test]
        fn gradient_is_cubic(q in proptest::collection::vec(-1.0f64..1.0, 5), s in -3.0f64..3.0) {
            let sys = EigenSystem::new(5, MassParam::parse("3/2").unwrap());
            let t = build_tensor(&sys).unwrap();
            let g = gradient_g(&q, &t).unwrap();
            let scaled: Vec<f64> = q.iter().map(|v| v * s).collect();
            let gs = gradient_g(&scaled, &t).unwrap();
            for (a, b) in g.iter().zip(&gs) {
                prop_assert!((a * s * s * s - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn permuted_lookups_agree(i in 1usize..7, j in 1usize..7, k in 1usize..7, l in 1usize..7) {
            let sys = EigenSystem::new(6, MassParam::parse("2").unwrap());
            let t = build_tensor(&sys).unwrap();
            let v = t.value(i, j, k, l);
            prop_assert_eq!(v, t.value(l, k, j, i));
            prop_assert_eq!(v, t.value(j, i, l, k));
            prop_assert_eq!(v, t.value(k, l, i, j));
            prop_assert_eq!(v != 0.0, selection_rule(i, j, k, l));
        }
    }
}
