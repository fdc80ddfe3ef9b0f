//! Quartic Legendre sequences `P(m,n) = ∫ P_m² P_n²` and
//! `Q(m,n) = ∫ P_{m-1} P_{m+1} P_n²`, their seven-term recursion, the limit
//! sequence `c(m) = lim n P(m,n)`, and a brute-force oracle.

use std::io::Write;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::legendre::legendre_scaled_integer_coeffs;
use crate::poly::{convolve, integrate_integer_symmetric};
use crate::rational::{int, rat, to_f64, ExactRational};

/// Caches the integer-scaled Legendre coefficient vectors used by the oracle.
#[derive(Clone, Debug, Default)]
pub struct QuarticOracle {
    coeffs: Vec<Vec<BigInt>>,
}

impl QuarticOracle {
    pub fn new(max_degree: usize) -> Self {
        Self { coeffs: (0..=max_degree).map(legendre_scaled_integer_coeffs).collect() }
    }

    fn coeffs(&self, n: usize) -> std::borrow::Cow<'_, [BigInt]> {
        match self.coeffs.get(n) {
            Some(c) => std::borrow::Cow::Borrowed(c.as_slice()),
            None => std::borrow::Cow::Owned(legendre_scaled_integer_coeffs(n)),
        }
    }

    /// `∫_{-1}^{1} P_a P_b P_c P_d` by direct polynomial multiplication.
    pub fn integral(&self, a: usize, b: usize, c: usize, d: usize) -> ExactRational {
        let sum = a + b + c + d;
        let top = a.max(b).max(c).max(d);
        if sum % 2 == 1 || 2 * top > sum {
            return ExactRational::zero();
        }
        let ab = convolve(&self.coeffs(a), &self.coeffs(b));
        let cd = convolve(&self.coeffs(c), &self.coeffs(d));
        integrate_integer_symmetric(&convolve(&ab, &cd)) / ExactRational::from_integer(BigInt::one() << sum)
    }
}

/// `∫_{-1}^{1} P_a P_b P_c P_d`, computed independently of every recursion.
pub fn quartic_integral_oracle(a: usize, b: usize, c: usize, d: usize) -> ExactRational {
    QuarticOracle::default().integral(a, b, c, d)
}

fn poly_i(coeffs: &[i64], n: i64) -> BigInt {
    coeffs.iter().rev().fold(BigInt::zero(), |acc, &c| acc * n + c)
}

fn odd_product(n: i64, from: i64, to: i64) -> BigInt {
    (from..=to).step_by(2).fold(BigInt::one(), |acc, k| acc * (2 * n + k))
}

/// Closed forms of rows `m = 0..=3`.
pub fn closed_form_p(m: usize, n: usize) -> Result<ExactRational> {
    let ni = n as i64;
    let (num, den) = match m {
        0 => (BigInt::from(2), BigInt::from(2 * ni + 1)),
        1 => (2 * poly_i(&[-1, 2, 2], ni), odd_product(ni, -1, 3)),
        2 => (poly_i(&[18, -42, -31, 22, 11], ni), odd_product(ni, -3, 5)),
        3 => (poly_i(&[-450, 1110, 703, -780, -305, 102, 34], ni), odd_product(ni, -5, 7)),
        _ => return Err(Error::Domain(format!("closed form only available for rows 0..=3, got m = {m}"))),
    };
    Ok(ExactRational::new(num, den))
}

/// `Q(1,n) = 2n(n+1) / ((2n-1)(2n+1)(2n+3))`.
pub fn closed_form_q1(n: usize) -> ExactRational {
    let ni = n as i64;
    ExactRational::new(BigInt::from(2 * ni * (ni + 1)), odd_product(ni, -1, 3))
}

/// Coefficients of the seven-term recursion
/// `P(m+1,n) = a⁻P(m,n-1) + a⁰P(m,n) + a⁺P(m,n+1)
///           - b⁻P(m-1,n-1) - b⁰P(m-1,n) - b⁺P(m-1,n+1) + c P(m-2,n)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaCoeffs {
    pub m_nm1: ExactRational,
    pub m_n: ExactRational,
    pub m_np1: ExactRational,
    pub mm1_nm1: ExactRational,
    pub mm1_n: ExactRational,
    pub mm1_np1: ExactRational,
    pub mm2_n: ExactRational,
}

impl AlphaCoeffs {
    /// `a⁻ + a⁰ + a⁺ - b⁻ - b⁰ - b⁺ + c`, identically 1.
    pub fn alternating_sum(&self) -> ExactRational {
        &self.m_nm1 + &self.m_n + &self.m_np1 - &self.mm1_nm1 - &self.mm1_n - &self.mm1_np1 + &self.mm2_n
    }
}

/// Recursion coefficients at `(m, n)`. Defined for `m >= 1` wherever
/// `(n-m+1)(n+m) != 0`; the table builder only uses `m >= 2, n >= m+1`.
pub fn alpha_coeffs(m: usize, n: usize) -> Result<AlphaCoeffs> {
    if m == 0 {
        return Err(Error::Domain("recursion coefficients need m >= 1".into()));
    }
    let (m, n) = (m as i64, n as i64);
    let d = (n - m + 1) * (n + m);
    if d == 0 {
        return Err(Error::SingularCoefficient { m, n });
    }
    let e = n * n + n - m * m - m;
    let m1c = (m + 1) * (m + 1) * (m + 1);
    let tn = (2 * n + 1) * (2 * n + 1);
    let sq = |v: ExactRational| &v * &v;
    let m_n = rat(m * (2 * m + 1) * e, m1c * (2 * m - 1)) * (rat((m - 1) * m, d) + rat(2, tn));
    let tail = |k: i64| {
        ExactRational::new(
            BigInt::from((m - 1) * (2 * m - 1) * (2 * m + 1) * e) * k * k,
            BigInt::from(m1c) * d * tn,
        )
    };
    Ok(AlphaCoeffs {
        m_nm1: sq(rat((2 * m + 1) * n, (m + 1) * (2 * n + 1))),
        m_n,
        m_np1: sq(rat((2 * m + 1) * (n + 1), (m + 1) * (2 * n + 1))),
        mm1_nm1: tail(n),
        mm1_n: rat(2 * m * e, m1c * tn) + sq(rat(m, m + 1)),
        mm1_np1: tail(n + 1),
        mm2_n: ExactRational::new(
            BigInt::from((m - 1) * (m - 1) * (m - 1) * (2 * m + 1)) * e,
            BigInt::from(m1c * (2 * m - 1)) * d,
        ),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableMethod {
    ClosedForm,
    Recursion,
    Oracle,
}

/// Dense exact table of `P(m,n)` for `0 <= m <= max_m`, `0 <= n <= max_n`.
#[derive(Clone, Debug)]
pub struct QuarticTable {
    max_m: usize,
    max_n: usize,
    values: Vec<ExactRational>,
    method: TableMethod,
}

#[derive(Serialize)]
struct EntryRecord {
    m: usize,
    n: usize,
    numerator: String,
    denominator: String,
    float_value: f64,
}

impl QuarticTable {
    pub fn max_m(&self) -> usize {
        self.max_m
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn method(&self) -> TableMethod {
        self.method
    }

    /// `P(m,n)`; either ordering of the arguments is accepted as long as it
    /// falls inside the table.
    pub fn get(&self, m: usize, n: usize) -> Option<&ExactRational> {
        if m <= self.max_m && n <= self.max_n {
            Some(&self.values[m * (self.max_n + 1) + n])
        } else if n <= self.max_m && m <= self.max_n {
            Some(&self.values[n * (self.max_n + 1) + m])
        } else {
            None
        }
    }

    fn at(&self, m: usize, n: usize) -> Result<&ExactRational> {
        self.get(m, n)
            .ok_or_else(|| Error::Domain(format!("P({m},{n}) outside table {}x{}", self.max_m, self.max_n)))
    }

    /// `Q(m,n)` from the rows `0..=m` of column `n`. Row 1 uses its closed
    /// form; the general expression is only valid for `m >= 2`.
    pub fn q_value(&self, m: usize, n: usize) -> Result<ExactRational> {
        match m {
            0 => Err(Error::Domain("Q(m,n) needs m >= 1".into())),
            1 => Ok(closed_form_q1(n)),
            _ => {
                let mi = m as i64;
                let mut acc = self.at(m, n)? * rat(mi * mi, 2 * mi - 1)
                    + self.at(m - 1, n)? * rat(1, (2 * mi - 3) * (2 * mi + 1))
                    - self.at(0, n)? * rat(1, 3);
                for i in 1..m - 1 {
                    let ii = i as i64;
                    acc += self.at(i, n)? * rat(1, (2 * ii - 1) * (2 * ii + 3));
                }
                Ok(acc * rat(2 * mi + 1, mi * (mi + 1)))
            }
        }
    }

    /// Float snapshot, row-major, one rounding per entry.
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..=self.max_m)
            .map(|m| (0..=self.max_n).map(|n| to_f64(&self.values[m * (self.max_n + 1) + n])).collect())
            .collect()
    }

    fn records(&self) -> impl Iterator<Item = EntryRecord> + '_ {
        (0..=self.max_m).flat_map(move |m| {
            (0..=self.max_n).map(move |n| {
                let v = &self.values[m * (self.max_n + 1) + n];
                EntryRecord {
                    m,
                    n,
                    numerator: v.numer().to_string(),
                    denominator: v.denom().to_string(),
                    float_value: to_f64(v),
                }
            })
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

/// Builds `P(m,n)` for `m <= max_m`, `n <= max_n`.
///
/// Rows 0..=2 come from closed forms. Row `r + 1` (`r >= 2`) is filled for
/// `n >= r + 1` by the seven-term recursion, which only reads entries with
/// column >= row, and the rest of the table is mirrored by symmetry. Row 3 is
/// checked against its closed form before anything else is built.
pub fn build_p_table(max_m: usize, max_n: usize) -> Result<QuarticTable> {
    if max_m < 3 || max_n < max_m {
        return Err(Error::Domain(format!("build_p_table needs max_n >= max_m >= 3 (got {max_m}, {max_n})")));
    }
    // row r needs row r-1 one column further out
    let width = |r: usize| max_n + max_m.saturating_sub(r);
    let mut rows: Vec<Vec<ExactRational>> = Vec::with_capacity(max_m + 1);
    for r in 0..=2 {
        rows.push((0..=width(r)).map(|n| closed_form_p(r, n)).collect::<Result<_>>()?);
    }
    for m in 2..max_m {
        let r = m + 1;
        let mut row = vec![ExactRational::zero(); width(r) + 1];
        for (n, slot) in row.iter_mut().enumerate().skip(r) {
            let a = alpha_coeffs(m, n)?;
            let p = |i: usize, k: usize| -> &ExactRational { &rows[i][k] };
            *slot = &a.m_nm1 * p(m, n - 1) + &a.m_n * p(m, n) + &a.m_np1 * p(m, n + 1)
                - &a.mm1_nm1 * p(m - 1, n - 1)
                - &a.mm1_n * p(m - 1, n)
                - &a.mm1_np1 * p(m - 1, n + 1)
                + &a.mm2_n * p(m - 2, n);
        }
        for n in 0..r {
            row[n] = rows[n][r].clone();
        }
        if r == 3 {
            for (n, v) in row.iter().enumerate() {
                let expected = closed_form_p(3, n)?;
                if *v != expected {
                    return Err(Error::SelfCheck(format!("row 3 recursion gives {v} at n = {n}, closed form {expected}")));
                }
            }
        }
        rows.push(row);
    }
    let mut values = Vec::with_capacity((max_m + 1) * (max_n + 1));
    for row in rows {
        values.extend(row.into_iter().take(max_n + 1));
    }
    Ok(QuarticTable { max_m, max_n, values, method: TableMethod::Recursion })
}

/// Same table computed entry by entry with the oracle.
pub fn build_p_table_oracle(max_m: usize, max_n: usize) -> QuarticTable {
    let oracle = QuarticOracle::new(max_n);
    let values = (0..=max_m)
        .flat_map(|m| (0..=max_n).map(move |n| (m, n)))
        .map(|(m, n)| oracle.integral(m, m, n, n))
        .collect();
    QuarticTable { max_m, max_n, values, method: TableMethod::Oracle }
}

/// Rows `0..=3` for every column, from closed forms.
pub fn build_p_table_closed_form(max_n: usize) -> Result<QuarticTable> {
    let values = (0..=3)
        .flat_map(|m| (0..=max_n).map(move |n| (m, n)))
        .map(|(m, n)| closed_form_p(m, n))
        .collect::<Result<_>>()?;
    Ok(QuarticTable { max_m: 3, max_n, values, method: TableMethod::ClosedForm })
}

/// `Q(m,n)` for `m >= 1`.
pub fn q_value(m: usize, n: usize) -> Result<ExactRational> {
    if m == 0 {
        return Err(Error::Domain("Q(m,n) needs m >= 1".into()));
    }
    let max_m = m.max(3);
    build_p_table(max_m, n.max(max_m))?.q_value(m, n)
}

/// Right-hand side of the `P` reduction identity, valid for `m >= 2, n >= 1`:
/// `P(m,n) = ((2m-1)/m)² [((n+1)/(2n+1))² P(m-1,n+1) + (n/(2n+1))² P(m-1,n-1)]
///         + 2(n²+n-m²+m)/((2n+1)² m²) Q(m-1,n) - ((m-1)/m)² P(m-2,n)`.
pub fn p_reduction_rhs(
    m: usize,
    n: usize,
    p: impl Fn(usize, usize) -> ExactRational,
    q: impl Fn(usize, usize) -> ExactRational,
) -> Result<ExactRational> {
    if m < 2 || n < 1 {
        return Err(Error::Domain(format!("P reduction needs m >= 2, n >= 1 (got {m}, {n})")));
    }
    let (mi, ni) = (m as i64, n as i64);
    let tn = 2 * ni + 1;
    let lead = rat((2 * mi - 1) * (2 * mi - 1), mi * mi);
    Ok(lead * (rat((ni + 1) * (ni + 1), tn * tn) * p(m - 1, n + 1) + rat(ni * ni, tn * tn) * p(m - 1, n - 1))
        + rat(2 * (ni * ni + ni - mi * mi + mi), tn * tn * mi * mi) * q(m - 1, n)
        - rat((mi - 1) * (mi - 1), mi * mi) * p(m - 2, n))
}

/// Right-hand side of the `Q` recursion, valid for `m >= 2`:
/// `Q(m,n) = (2m+1)m/((m+1)(2m-1)) P(m,n) + (2m+1)(m-1)/((2m-1)(m+1)) Q(m-1,n) - m/(m+1) P(m-1,n)`.
pub fn q_recursion_rhs(
    m: usize,
    n: usize,
    p: impl Fn(usize, usize) -> ExactRational,
    q: impl Fn(usize, usize) -> ExactRational,
) -> Result<ExactRational> {
    if m < 2 {
        return Err(Error::Domain(format!("Q recursion needs m >= 2 (got {m})")));
    }
    let mi = m as i64;
    Ok(rat((2 * mi + 1) * mi, (mi + 1) * (2 * mi - 1)) * p(m, n)
        + rat((2 * mi + 1) * (mi - 1), (2 * mi - 1) * (mi + 1)) * q(m - 1, n)
        - rat(mi, mi + 1) * p(m - 1, n))
}

/// `c(m) = lim_{n→∞} n P(m,n)` and its first differences `C(m) = c(m+1) - c(m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CLimitSeq {
    pub values: Vec<ExactRational>,
    pub diffs: Vec<ExactRational>,
}

impl CLimitSeq {
    /// `15/(16(m+2)) + 1/32`, the bound on `c(m+1)`.
    pub fn upper_bound(m: usize) -> ExactRational {
        rat(15, 16 * (m as i64 + 2)) + rat(1, 32)
    }
}

/// Limits of the recursion coefficients as `n → ∞`.
pub fn limit_alphas(m: usize) -> (ExactRational, ExactRational, ExactRational) {
    let m = m as i64;
    let m1c = (m + 1) * (m + 1) * (m + 1);
    (
        rat((2 * m + 1) * (6 * m * m * m + 2 * m * m - 1), 2 * (2 * m - 1) * m1c),
        rat(6 * m * m * m - 2 * m * m + 1, 2 * m1c),
        rat((m - 1) * (m - 1) * (m - 1) * (2 * m + 1), m1c * (2 * m - 1)),
    )
}

/// `c(0..=max_m)` from the seeds `1, 1/2, 11/32`.
pub fn c_limit(max_m: usize) -> Result<CLimitSeq> {
    if max_m < 3 {
        return Err(Error::Domain(format!("c_limit needs max_m >= 3 (got {max_m})")));
    }
    let mut values = vec![int(1), rat(1, 2), rat(11, 32)];
    for m in 2..max_m {
        let (a0, a1, a2) = limit_alphas(m);
        let next = a0 * &values[m] - a1 * &values[m - 1] + a2 * &values[m - 2];
        values.push(next);
    }
    let diffs = values.windows(2).map(|w| &w[1] - &w[0]).collect();
    Ok(CLimitSeq { values, diffs })
}

/// Largest `m n P(m,n)` over `m, n >= 1` and where it occurs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub sup: f64,
    pub argmax: (usize, usize),
}

pub fn decay_check(table: &QuarticTable) -> DecayReport {
    let mut best = DecayReport { sup: f64::NEG_INFINITY, argmax: (0, 0) };
    for m in 1..=table.max_m {
        for n in 1..=table.max_n {
            let v = to_f64(&(table.values[m * (table.max_n + 1) + n].clone() * BigInt::from(m * n)));
            if v > best.sup {
                best = DecayReport { sup: v, argmax: (m, n) };
            }
        }
    }
    best
}

/// Every entry strictly positive and each row decreasing for `n >= m`.
pub fn check_shape(table: &QuarticTable) -> bool {
    (0..=table.max_m).all(|m| {
        (0..=table.max_n).all(|n| table.get(m, n).is_some_and(|v| v.is_positive()))
            && (m..table.max_n).all(|n| table.get(m, n + 1) < table.get(m, n))
    })
}
