//! Small divisors `δ = λ'_i + λ'_j + λ'_k + λ'_l` with `λ'_j = sgn(j) λ_|j|`,
//! their lower-bound floor `σ(m,n)`, and exhaustive certificates.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::galerkin::MassParam;
use crate::rational::{int, signed_sqrt_sum_bounds, signed_sqrt_sum_is_zero, to_f64, ExactRational};

/// Below this `|δ|` a float divisor is re-decided in exact arithmetic.
pub const EXACT_RECHECK_THRESHOLD: f64 = 1e-9;

/// Substitute for a non-positive `σ` (the `m < 1/4` regime).
pub const SIGMA_CLAMP: f64 = f64::MIN_POSITIVE;

/// Nonzero signed mode index; the sign is the sign of `λ'`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedIndex(i64);

impl SignedIndex {
    pub fn new(value: i64) -> Result<Self> {
        if value == 0 {
            return Err(Error::Domain("signed index must be nonzero".into()));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> i64 {
        self.0
    }

    pub fn abs(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn sign(self) -> i64 {
        self.0.signum()
    }
}

fn to_signed(q: [i64; 4]) -> Result<[SignedIndex; 4]> {
    Ok([SignedIndex::new(q[0])?, SignedIndex::new(q[1])?, SignedIndex::new(q[2])?, SignedIndex::new(q[3])?])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// `λ_j² = 2j(2j-1) + m`, indexed by mode.
    Original,
    /// `λ_n² = n(n+1) + m`, indexed by Legendre degree.
    Renumbered,
}

impl Convention {
    pub fn lambda_sq_base(self, n: usize) -> usize {
        match self {
            Convention::Original => 2 * n * (2 * n - 1),
            Convention::Renumbered => n * (n + 1),
        }
    }

    pub fn lambda(self, n: usize, m: f64) -> f64 {
        (self.lambda_sq_base(n) as f64 + m).sqrt()
    }

    pub fn lambda_sq_exact(self, n: usize, m: &ExactRational) -> ExactRational {
        int(self.lambda_sq_base(n) as i64) + m
    }

    /// Legendre degree behind index `n`.
    pub fn degree(self, n: usize) -> usize {
        match self {
            Convention::Original => 2 * n - 1,
            Convention::Renumbered => n,
        }
    }
}

impl std::str::FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Convention::Original),
            "renumbered" => Ok(Convention::Renumbered),
            _ => Err(Error::Parse(format!("unknown convention {s:?} (expected original or renumbered)"))),
        }
    }
}

/// `δ` in double precision.
pub fn divisor(q: [i64; 4], m: f64, convention: Convention) -> Result<f64> {
    let q = to_signed(q)?;
    Ok(q.iter().map(|s| s.sign() as f64 * convention.lambda(s.abs(), m)).sum())
}

fn sqrt_terms(q: [i64; 4], m: &ExactRational, convention: Convention) -> Vec<(i64, ExactRational)> {
    q.iter().map(|&v| (v.signum(), convention.lambda_sq_exact(v.unsigned_abs() as usize, m))).collect()
}

/// Exact sign of `δ` for a rational mass.
pub fn divisor_sign_exact(q: [i64; 4], m: &ExactRational, convention: Convention) -> Result<Ordering> {
    to_signed(q)?;
    let terms = sqrt_terms(q, m, convention);
    if signed_sqrt_sum_is_zero(&terms) {
        return Ok(Ordering::Equal);
    }
    // nonzero, so refinement terminates
    let mut bits = 64;
    loop {
        let (lo, hi) = signed_sqrt_sum_bounds(&terms, bits);
        if lo > ExactRational::from_integer(0.into()) {
            return Ok(Ordering::Greater);
        }
        if hi < ExactRational::from_integer(0.into()) {
            return Ok(Ordering::Less);
        }
        bits *= 2;
    }
}

/// `|δ|` to full double precision even under heavy cancellation, or `None`
/// when `δ` vanishes exactly.
pub fn divisor_abs_refined(q: [i64; 4], m: &ExactRational, convention: Convention) -> Option<f64> {
    let terms = sqrt_terms(q, m, convention);
    if signed_sqrt_sum_is_zero(&terms) {
        return None;
    }
    let mut bits = 128;
    loop {
        let (lo, hi) = signed_sqrt_sum_bounds(&terms, bits);
        let (lo, hi) = (to_f64(&lo), to_f64(&hi));
        if lo.signum() == hi.signum() && (hi - lo).abs() <= 1e-15 * lo.abs().min(hi.abs()) {
            return Some((0.5 * (lo + hi)).abs());
        }
        bits *= 2;
    }
}

/// Membership in `𝒩`: some pairing `(p,-p), (q,-q)`.
pub fn is_resonant(q: [i64; 4]) -> bool {
    [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)]
        .iter()
        .any(|&(a, b, c, d)| q[a] == -q[b] && q[c] == -q[d])
}

/// Membership in `𝒧`: all nonzero and the smallest `|index|` is at most 2.
pub fn in_normal_form_set(q: [i64; 4]) -> bool {
    q.iter().all(|&v| v != 0) && q.iter().map(|v| v.unsigned_abs()).min().is_some_and(|n| n <= 2)
}

/// Whether `∫ P P P P` over the quadruple's Legendre degrees is nonzero.
pub fn coupling_nonzero(q: [i64; 4], convention: Convention) -> bool {
    let mut d = q.map(|v| convention.degree(v.unsigned_abs() as usize));
    d.sort_unstable();
    (d.iter().sum::<usize>()) % 2 == 0 && d[0] + d[1] + d[2] >= d[3]
}

fn check_sigma_mass(m: f64) -> Result<()> {
    if !(m > 0.0 && m < 41.0 / 4.0) || m == 0.25 {
        return Err(Error::InadmissibleMass(m.to_string()));
    }
    Ok(())
}

/// `W(m,n)`.
pub fn sigma_w(m: f64, n: usize) -> Result<f64> {
    check_sigma_mass(m)?;
    let n = n as f64;
    let s = (n * (n + 1.0) + m).sqrt();
    Ok(if m < 0.25 {
        (1.0 - 4.0 * m) * (n + m) / (2.0 * (s + n) * (s + n + 2.0 * m))
    } else {
        2.0 - (4.0 * m - 1.0) / (4.0 * s + 4.0 * n + 2.0)
    })
}

/// `V(m,n)`, which is negative for `m < 1/4`.
pub fn sigma_v(m: f64, n: usize) -> Result<f64> {
    check_sigma_mass(m)?;
    let n = n as f64;
    let l2 = n * (n + 1.0) + m;
    Ok((m / l2.sqrt()).min(n / (m + 2.0).sqrt()).min((4.0 * m - 1.0) / (4.0 * l2.powf(1.5))))
}

/// `σ(m,n) = min(W, V)` in the renumbered indexing, before clamping.
pub fn sigma_raw(m: f64, n: usize) -> Result<f64> {
    Ok(sigma_w(m, n)?.min(sigma_v(m, n)?))
}

/// `max(σ, SIGMA_CLAMP)` and whether the clamp was needed.
pub fn sigma_floor(m: f64, n: usize) -> Result<(f64, bool)> {
    let raw = sigma_raw(m, n)?;
    Ok(if raw > 0.0 { (raw, false) } else { (SIGMA_CLAMP, true) })
}

/// `2 - (m - 1/4) / (sqrt(i(i+1)+m) + i + 1/2)`.
pub fn gap_margin(i: usize, m: f64) -> f64 {
    let i = i as f64;
    2.0 - (m - 0.25) / ((i * (i + 1.0) + m).sqrt() + i + 0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CertifyOptions {
    pub convention: Convention,
    /// Drop the `min |index| <= 2` restriction.
    pub widen: bool,
    /// Skip quadruples whose coupling integral vanishes identically.
    pub require_coupling: bool,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { convention: Convention::Original, widen: false, require_coupling: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivisorCertificate {
    pub mass: f64,
    pub n_max: usize,
    pub convention: Convention,
    pub min_abs_divisor: f64,
    pub min_abs_witness: [i64; 4],
    pub min_ratio: f64,
    pub witness: [i64; 4],
    pub enumerated: u64,
    pub resonant_skipped: u64,
    pub parity_skipped: u64,
    pub coupling_skipped: u64,
    pub exact_rechecks: u64,
    pub exact_zeros: u64,
    /// `σ` was clamped somewhere in the sweep (`m < 1/4`).
    pub floor_clamped: bool,
}

impl DivisorCertificate {
    pub fn is_positive(&self) -> bool {
        self.exact_zeros == 0 && self.min_abs_divisor > 0.0
    }
}

#[derive(Clone, Debug)]
struct Partial {
    min_abs: (f64, [i64; 4]),
    min_ratio: (f64, [i64; 4]),
    enumerated: u64,
    resonant: u64,
    parity: u64,
    coupling: u64,
    rechecks: u64,
    zeros: u64,
    clamped: bool,
}

impl Partial {
    fn empty() -> Self {
        Self {
            min_abs: (f64::INFINITY, [0; 4]),
            min_ratio: (f64::INFINITY, [0; 4]),
            enumerated: 0,
            resonant: 0,
            parity: 0,
            coupling: 0,
            rechecks: 0,
            zeros: 0,
            clamped: false,
        }
    }

    fn merge(mut self, o: Self) -> Self {
        // ties resolve to the lexicographically smaller witness so results are deterministic
        let better = |a: (f64, [i64; 4]), b: (f64, [i64; 4])| if (b.0, b.1) < (a.0, a.1) { b } else { a };
        self.min_abs = better(self.min_abs, o.min_abs);
        self.min_ratio = better(self.min_ratio, o.min_ratio);
        self.enumerated += o.enumerated;
        self.resonant += o.resonant;
        self.parity += o.parity;
        self.coupling += o.coupling;
        self.rechecks += o.rechecks;
        self.zeros += o.zeros;
        self.clamped |= o.clamped;
        self
    }
}

/// Sweeps every multiset of four indices in `[-n_max, n_max] \ {0}` lying in
/// `𝒧 \ 𝒩` with `i ± j ± k ± l` even, recording the smallest `|δ|` and the
/// smallest `|δ| / σ(m, n)` with `n` the smallest degree.
pub fn certify_range(n_max: usize, mass: &MassParam, options: CertifyOptions) -> Result<DivisorCertificate> {
    if n_max < 2 {
        return Err(Error::Domain(format!("certify_range needs N >= 2, got {n_max}")));
    }
    mass.require_admissible()?;
    let m = mass.value();
    let conv = options.convention;
    let lambdas: Vec<f64> = (0..=n_max).map(|n| if n == 0 { 0.0 } else { conv.lambda(n, m) }).collect();
    let sigmas: Vec<(f64, bool)> = (0..=2.max(if options.widen { n_max } else { 2 }))
        .map(|n| if n == 0 { Ok((0.0, false)) } else { sigma_floor(m, conv.degree(n)) })
        .collect::<Result<_>>()?;
    let idx: Vec<i64> = (-(n_max as i64)..=n_max as i64).filter(|&v| v != 0).collect();
    let count = idx.len();
    let lam = |v: i64| v.signum() as f64 * lambdas[v.unsigned_abs() as usize];

    let total = (0..count)
        .into_par_iter()
        .map(|a| {
            let mut part = Partial::empty();
            for b in a..count {
                for c in b..count {
                    for d in c..count {
                        let q = [idx[a], idx[b], idx[c], idx[d]];
                        let n_min = q.iter().map(|v| v.unsigned_abs() as usize).min().unwrap_or(0);
                        if !options.widen && n_min > 2 {
                            continue;
                        }
                        part.enumerated += 1;
                        if is_resonant(q) {
                            part.resonant += 1;
                            continue;
                        }
                        if !parity_admissible(q) {
                            part.parity += 1;
                            continue;
                        }
                        if options.require_coupling && !coupling_nonzero(q, conv) {
                            part.coupling += 1;
                            continue;
                        }
                        let mut delta = (lam(q[0]) + lam(q[1]) + lam(q[2]) + lam(q[3])).abs();
                        if delta < EXACT_RECHECK_THRESHOLD {
                            part.rechecks += 1;
                            match divisor_abs_refined(q, mass.exact(), conv) {
                                Some(v) => delta = v,
                                None => {
                                    part.zeros += 1;
                                    delta = 0.0;
                                }
                            }
                        }
                        let (sigma, clamped) = sigmas[n_min];
                        part.clamped |= clamped;
                        part = part.merge(Partial {
                            min_abs: (delta, q),
                            min_ratio: (delta / sigma, q),
                            ..Partial::empty()
                        });
                    }
                }
            }
            part
        })
        .reduce(Partial::empty, Partial::merge);

    Ok(DivisorCertificate {
        mass: m,
        n_max,
        convention: conv,
        min_abs_divisor: total.min_abs.0,
        min_abs_witness: total.min_abs.1,
        min_ratio: total.min_ratio.0,
        witness: total.min_ratio.1,
        enumerated: total.enumerated,
        resonant_skipped: total.resonant,
        parity_skipped: total.parity,
        coupling_skipped: total.coupling,
        exact_rechecks: total.rechecks,
        exact_zeros: total.zeros,
        floor_clamped: total.clamped,
    })
}

fn parity_admissible(q: [i64; 4]) -> bool {
    crate::galerkin::parity_admissible(q[0], q[1], q[2], q[3])
}

#[derive(Serialize)]
struct CertificateRow {
    m: f64,
    #[serde(rename = "N")]
    n: usize,
    convention: Convention,
    min_abs_divisor: f64,
    min_ratio: f64,
    witness: String,
    floor_clamped: bool,
}

/// CSV with one row per certificate.
pub fn write_certificates_csv<W: Write>(certs: &[DivisorCertificate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in certs {
        w.serialize(CertificateRow {
            m: c.mass,
            n: c.n_max,
            convention: c.convention,
            min_abs_divisor: c.min_abs_divisor,
            min_ratio: c.min_ratio,
            witness: c.witness.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            floor_clamped: c.floor_clamped,
        })?;
    }
    w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
    Ok(())
}

/// Worst observed slack of the gap inequality
/// `|(λ_j - λ_i) - (λ_l - λ_k)| >= gap_margin(i, m)` (renumbered `λ`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub samples: usize,
    pub worst_slack: f64,
    pub worst_case: ([usize; 4], f64),
}

/// Random quadruples `0 < i <= j <= k <= l <= max_index` with `j - i > l - k`
/// and even index sum, and random `m ∈ (1/4, 41/4)`.
pub fn gap_sample(samples: usize, max_index: usize, seed: u64) -> GapReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let conv = Convention::Renumbered;
    let mut report = GapReport { samples: 0, worst_slack: f64::INFINITY, worst_case: ([0; 4], 0.0) };
    while report.samples < samples {
        let m = rng.gen_range(0.25..41.0 / 4.0);
        if m == 0.25 {
            continue;
        }
        let mut q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(1..=max_index));
        q.sort_unstable();
        let [i, j, k, l] = q;
        if j - i <= l - k || (i + j + k + l) % 2 == 1 {
            continue;
        }
        report.samples += 1;
        let gap = ((conv.lambda(j, m) - conv.lambda(i, m)) - (conv.lambda(l, m) - conv.lambda(k, m))).abs();
        let slack = gap - gap_margin(i, m);
        if slack < report.worst_slack {
            report.worst_slack = slack;
            report.worst_case = (q, m);
        }
    }
    report
}
