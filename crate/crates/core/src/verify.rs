//! The acceptance criteria as runnable checks. Each check returns a
//! [`Criterion`] carrying its verdict and the measured numbers; tolerances are
//! the constants below.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::divisor::{certify_range, gap_sample, CertifyOptions, Convention};
use crate::dynamics::{extract_frequencies, integrate, torus_residual, SimConfig};
use crate::error::Result;
use crate::galerkin::{build_tensor, CouplingTensor, EigenSystem, MassParam};
use crate::legendre::{derivative_bound_margin, legendre_coeffs};
use crate::normal_form::{
    admissible_grid, build_normal_form_auto, check_a31, check_a32, g_block, reference_constants_match, ACTION_SCALE,
};
use crate::poly::RationalPoly;
use crate::quartic::{
    alpha_coeffs, build_p_table, build_p_table_oracle, c_limit, closed_form_p, closed_form_q1, decay_check, CLimitSeq,
    QuarticOracle,
};
use crate::rational::{int, rat};

pub const DERIVATIVE_MARGIN_FLOOR: f64 = -1e-10;
pub const DERIVATIVE_GRID: usize = 100_000;
pub const GAP_SLACK_FLOOR: f64 = -1e-12;
pub const GAP_SAMPLES: usize = 10_000;
pub const GAP_MAX_INDEX: usize = 400;
pub const GAP_SEED: u64 = 20_240_601;
pub const RATIO_STABILITY: f64 = 0.10;
pub const CERTIFY_MASSES: [f64; 8] = [0.1, 0.2, 0.3, 1.0, 2.0, 5.0, 8.0, 10.0];
pub const CERTIFY_N: [usize; 3] = [20, 30, 40];
pub const LINEAR_FREQ_TOL: f64 = 1e-6;
pub const ENERGY_DRIFT_TOL: f64 = 1e-5;
pub const SLOPE_TOL: f64 = 0.15;
/// Largest tail energy fraction accepted in the frequency-shift runs.
pub const TORUS_RESIDUAL_CAP: f64 = 1e-2;
pub const CONVENTION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {} ({:.2}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

fn timed(id: &'static str, title: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Criterion {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Criterion { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Exact normal-form constants, the `c` seeds and differences, and `Q(1, n)`.
pub fn exact_constants() -> Criterion {
    timed("1", "exact constants", || {
        let table = build_p_table(3, 3)?;
        let g_ok = reference_constants_match(&g_block(&table)?);
        let c = c_limit(3)?;
        let c_ok = c.values == [int(1), rat(1, 2), rat(11, 32), rat(17, 64)]
            && c.diffs[1] == rat(-5, 32)
            && c.diffs[2] == rat(-5, 64);
        let oracle = QuarticOracle::new(24);
        let q_ok = (1..=20).all(|n| closed_form_q1(n) == oracle.integral(0, 2, n, n));
        Ok((g_ok && c_ok && q_ok, format!("g/det g {g_ok}, c(0..3) and C(1..2) {c_ok}, Q(1,1..20) {q_ok}")))
    })
}

/// Recursion table equals the oracle table; row 3 equals its closed form.
pub fn recursion_matches_oracle() -> Criterion {
    timed("2", "recursion-oracle equivalence", || {
        let rec = build_p_table(20, 40)?;
        let ora = build_p_table_oracle(20, 40);
        let mut mismatches = 0usize;
        for m in 0..=20 {
            for n in 0..=40 {
                if rec.get(m, n) != ora.get(m, n) {
                    mismatches += 1;
                }
            }
        }
        let row3 = (0..=40).all(|n| closed_form_p(3, n).ok().as_ref() == rec.get(3, n));
        Ok((mismatches == 0 && row3, format!("{mismatches} mismatches over 21x41 entries, row 3 closed form {row3}")))
    })
}

/// Seven-term coefficients sum (with alternating signs) to one.
pub fn coefficient_identity() -> Criterion {
    timed("3", "coefficient identity", || {
        let one = int(1);
        let bad: Vec<(usize, usize)> = (2..=50usize)
            .into_par_iter()
            .flat_map_iter(|m| (m + 1..=100).map(move |n| (m, n)))
            .filter(|&(m, n)| alpha_coeffs(m, n).map(|a| a.alternating_sum() != one).unwrap_or(true))
            .collect();
        Ok((bad.is_empty(), format!("{} failures over 2<=m<=50, m+1<=n<=100", bad.len())))
    })
}

/// `c` decreasing and below `15/(16(m+2)) + 1/32`.
pub fn limit_sequence_bound() -> Criterion {
    timed("4a", "limit sequence monotone and bounded", || {
        let c = c_limit(201)?;
        let monotone = c.values.windows(2).all(|w| w[1] < w[0]);
        let bounded = (0..=200).all(|m| c.values[m + 1] <= CLimitSeq::upper_bound(m));
        Ok((monotone && bounded, format!("monotone {monotone}, bound holds for m<=200 {bounded}")))
    })
}

/// `sup m n P(m, n)` must not grow from the 20-row to the 40-row table.
pub fn decay_sup_non_increasing() -> Criterion {
    timed("4b", "decay sup non-increasing 20 -> 40 rows", || {
        let small = decay_check(&build_p_table(20, 20)?);
        let large = decay_check(&build_p_table(40, 40)?);
        Ok((
            large.sup <= small.sup,
            format!(
                "sup {:.6} at {:?} (20 rows) vs {:.6} at {:?} (40 rows)",
                small.sup, small.argmax, large.sup, large.argmax
            ),
        ))
    })
}

/// `A31` for `3 <= j <= 500` and `A32` for `3 <= i != j <= 200` on 100 masses.
pub fn nondegeneracy_sweep() -> Criterion {
    timed("5", "nondegeneracy sweep", || {
        let block = g_block(&build_p_table(3, 3)?)?;
        let grid = admissible_grid(100);
        let a31 = check_a31(&block, 3..=500, &grid);
        let a32 = check_a32(&block, 200, &grid);
        Ok((
            a31.holds && a32.holds && grid.len() == 100,
            format!(
                "A31 min first {:.3} (>618), max opposing {:.3} (<441); A32 min first {:.3} (>27), max second {:.3} (<27)",
                a31.min_first, a31.max_opposing, a32.min_first, a32.max_second
            ),
        ))
    })
}

/// Positive divisors at `N = 30`; for `m > 1/4` the min ratio at `N = 20, 40`
/// stays within 10% of the `N = 30` value.
pub fn divisor_certificates() -> Criterion {
    timed("6", "divisor certificates", || {
        let mut ok = true;
        let mut parts = Vec::new();
        for &m in &CERTIFY_MASSES {
            let mass = MassParam::from_f64(m)?;
            let certs = CERTIFY_N
                .iter()
                .map(|&n| certify_range(n, &mass, CertifyOptions::default()))
                .collect::<Result<Vec<_>>>()?;
            let positive = certs[1].is_positive();
            let recorded = certs[1].min_ratio;
            let stable = m < 0.25 || certs.iter().all(|c| (c.min_ratio / recorded - 1.0).abs() <= RATIO_STABILITY);
            ok &= positive && stable;
            let ratios: Vec<String> = if certs[1].floor_clamped {
                vec!["n/a (floor clamped)".into()]
            } else {
                certs.iter().map(|c| format!("{:.4}", c.min_ratio)).collect()
            };
            parts.push(format!(
                "m={m}: min|δ| {:.3e}, ratios {}{}",
                certs[1].min_abs_divisor,
                ratios.join("/"),
                if positive && stable { "" } else { " UNSTABLE" }
            ));
        }
        Ok((ok, parts.join("; ")))
    })
}

/// Random checks of the gap bound `2 - (m - 1/4)/(sqrt(i(i+1)+m) + i + 1/2)`.
pub fn gap_inequality() -> Criterion {
    timed("7", "gap inequality on random quadruples", || {
        let r = gap_sample(GAP_SAMPLES, GAP_MAX_INDEX, GAP_SEED);
        Ok((
            r.worst_slack >= GAP_SLACK_FLOOR,
            format!("{} samples, worst slack {:.6e} at {:?}", r.samples, r.worst_slack, r.worst_case),
        ))
    })
}

/// Derivative identities, the derivative bound on fine grids, and the
/// `∫P_m²P_{n+1}P_{n-1} = ∫P_n²P_{m+1}P_{m-1}` symmetry.
pub fn legendre_identities() -> Criterion {
    timed("8", "Legendre identities", || {
        let x = RationalPoly::x();
        let one_minus_x2 = RationalPoly::new(vec![int(1), int(0), int(-1)]);
        let polys: Vec<RationalPoly> = (0..=50).map(|n| legendre_coeffs(n).into_poly()).collect();
        let identities = (1..=50).all(|n| {
            let nn = int(n as i64);
            let dn = polys[n].derivative();
            let dn1 = polys[n - 1].derivative();
            &(&x * &dn) - &dn1 == polys[n].scale(&nn)
                && &one_minus_x2 * &dn == (&polys[n - 1] - &(&x * &polys[n])).scale(&nn)
        });
        let margins = (1..=100usize)
            .into_par_iter()
            .map(|j| derivative_bound_margin(j, DERIVATIVE_GRID))
            .collect::<Result<Vec<f64>>>()?;
        let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let oracle = QuarticOracle::new(22);
        let symmetric =
            (1..=20).all(|m| (1..=20).all(|n| oracle.integral(m, m, n + 1, n - 1) == oracle.integral(n, n, m + 1, m - 1)));
        Ok((
            identities && worst >= DERIVATIVE_MARGIN_FLOOR && symmetric,
            format!("derivative identities n<=50 {identities}, worst bound margin {worst:.3e}, symmetry {symmetric}"),
        ))
    })
}

/// Free modes rotate at `λ_j`.
pub fn linear_frequencies() -> Criterion {
    timed("9a", "linear-limit frequencies", || {
        let dim = 8;
        let sys = EigenSystem::new(dim, MassParam::parse("2")?);
        let cfg = SimConfig { dim, dt: 0.01, steps: (1 << 16) - 1, initial_action: [0.01, 0.01], tail_amplitude: 0.1, ..Default::default() };
        let traj = integrate(&cfg, &sys, &CouplingTensor::zeroed(dim))?;
        let modes: Vec<usize> = (1..=dim).collect();
        let freqs = extract_frequencies(&traj, &modes)?;
        let worst = freqs.iter().map(|f| (f.frequency / sys.lambda(f.mode) - 1.0).abs()).fold(0.0, f64::max);
        let dominant = freqs.iter().all(|f| f.dominant);
        Ok((worst < LINEAR_FREQ_TOL && dominant, format!("worst relative error {worst:.3e} over {dim} modes")))
    })
}

/// Energy drift at `J = 8`, `dt = 1e-3`, `10^5` steps, amplitude 0.2.
pub fn energy_drift() -> Criterion {
    timed("9b", "energy drift", || {
        let dim = 8;
        let sys = EigenSystem::new(dim, MassParam::parse("2")?);
        let tensor = build_tensor(&sys)?;
        let cfg = SimConfig {
            dim,
            dt: 1e-3,
            steps: 100_000,
            initial_action: [0.04, 0.04],
            tail_amplitude: 0.2,
            stride: 10,
            ..Default::default()
        };
        let drift = integrate(&cfg, &sys, &tensor)?.max_relative_energy_drift();
        Ok((drift < ENERGY_DRIFT_TOL, format!("max |ΔH/H| = {drift:.3e}")))
    })
}

/// Measured shifts `ω_k(s(1,1)) - λ_k` and their least-squares slopes in `s`.
#[derive(Clone, Debug, Serialize)]
pub struct ShiftFit {
    pub scales: Vec<f64>,
    pub shifts: Vec<[f64; 2]>,
    pub slopes: [f64; 2],
    /// `(A (1,1))_k`.
    pub a_row_sums: [f64; 2],
    pub max_residual: f64,
}

pub fn measure_frequency_shift() -> Result<ShiftFit> {
    let dim = 4;
    let mass = MassParam::parse("2")?;
    let sys = EigenSystem::new(dim, mass.clone());
    let tensor = build_tensor(&sys)?;
    let nf = build_normal_form_auto(dim, &mass)?;
    let scales = vec![1e-4, 2e-4, 4e-4];
    let runs = scales
        .par_iter()
        .map(|&s| {
            let cfg = SimConfig { dim, dt: 0.01, steps: (1 << 16) - 1, initial_action: [s, s], ..Default::default() };
            let traj = integrate(&cfg, &sys, &tensor)?;
            let f = extract_frequencies(&traj, &[1, 2])?;
            Ok(([f[0].frequency - sys.lambda(1), f[1].frequency - sys.lambda(2)], torus_residual(&traj, &sys)))
        })
        .collect::<Result<Vec<_>>>()?;
    let shifts: Vec<[f64; 2]> = runs.iter().map(|r| r.0).collect();
    let ss: f64 = scales.iter().map(|s| s * s).sum();
    let slope = |k: usize| scales.iter().zip(&shifts).map(|(s, d)| s * d[k]).sum::<f64>() / ss;
    Ok(ShiftFit {
        slopes: [slope(0), slope(1)],
        a_row_sums: [nf.a[0][0] + nf.a[0][1], nf.a[1][0] + nf.a[1][1]],
        max_residual: runs.iter().map(|r| r.1).fold(0.0, f64::max),
        scales,
        shifts,
    })
}

fn slope_errors(fit: &ShiftFit, scale: f64) -> [f64; 2] {
    [0, 1].map(|k| (fit.slopes[k] / (scale * fit.a_row_sums[k]) - 1.0).abs())
}

/// Shift slopes against `s (A (1,1))` with `s = 3/32` for `I_j = q_j² + p_j²`.
pub fn frequency_shift(fit: &Result<ShiftFit>) -> Criterion {
    timed("9c", "frequency shift slope, actions q²+p²", || {
        let fit = fit.as_ref().map_err(|e| crate::Error::SelfCheck(e.to_string()))?;
        let err = slope_errors(fit, ACTION_SCALE);
        Ok((
            err.iter().all(|&e| e < SLOPE_TOL) && fit.max_residual < TORUS_RESIDUAL_CAP,
            format!(
                "slopes {:.5}/{:.5} vs predicted {:.5}/{:.5}, errors {:.2}%/{:.2}%, tail residual {:.2e}",
                fit.slopes[0],
                fit.slopes[1],
                ACTION_SCALE * fit.a_row_sums[0],
                ACTION_SCALE * fit.a_row_sums[1],
                100.0 * err[0],
                100.0 * err[1],
                fit.max_residual
            ),
        ))
    })
}

/// The same slopes against `A (1,1)` with no action scaling.
pub fn frequency_shift_unscaled(fit: &Result<ShiftFit>) -> Criterion {
    timed("9d", "frequency shift slope, unscaled A", || {
        let fit = fit.as_ref().map_err(|e| crate::Error::SelfCheck(e.to_string()))?;
        let err = slope_errors(fit, 1.0);
        Ok((
            err.iter().all(|&e| e < SLOPE_TOL),
            format!(
                "slopes {:.5}/{:.5} vs {:.5}/{:.5}, errors {:.1}%/{:.1}%",
                fit.slopes[0],
                fit.slopes[1],
                fit.a_row_sums[0],
                fit.a_row_sums[1],
                100.0 * err[0],
                100.0 * err[1]
            ),
        ))
    })
}

/// Mode `j` of the original numbering equals degree `2j - 1` of the renumbered one.
pub fn convention_consistency() -> Criterion {
    timed("10", "cross-convention consistency", || {
        let mut worst: f64 = 0.0;
        for m in [0.05, 0.3, 1.0, 2.5, 7.0, 10.2] {
            for j in 1..=1000 {
                let a = Convention::Original.lambda(j, m);
                let b = Convention::Renumbered.lambda(Convention::Original.degree(j), m);
                worst = worst.max((a / b - 1.0).abs());
            }
        }
        Ok((worst <= CONVENTION_TOL, format!("worst relative difference {worst:.3e} for j<=1000")))
    })
}

/// Every criterion in order.
pub fn run_all() -> Vec<Criterion> {
    let fit = measure_frequency_shift();
    vec![
        exact_constants(),
        recursion_matches_oracle(),
        coefficient_identity(),
        limit_sequence_bound(),
        decay_sup_non_increasing(),
        nondegeneracy_sweep(),
        divisor_certificates(),
        gap_inequality(),
        legendre_identities(),
        linear_frequencies(),
        energy_drift(),
        frequency_shift(&fit),
        frequency_shift_unscaled(&fit),
        convention_consistency(),
    ]
}
