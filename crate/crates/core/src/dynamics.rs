//! Symplectic integration of the truncated Hamiltonian and frequency
//! diagnostics on the resulting trajectories.

use std::io::Write;
use std::path::Path;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::galerkin::{hamiltonian_energy, CouplingTensor, EigenSystem, PhaseState};

/// States whose sup-norm exceeds this are treated as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e8;

/// A peak is dominant when its power beats every bin away from it by this factor.
pub const DOMINANCE_RATIO: f64 = 10.0;

/// Minimum number of samples accepted by [`extract_frequencies`].
pub const MIN_SAMPLES: usize = 1 << 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub dim: usize,
    pub mass: f64,
    pub dt: f64,
    pub steps: usize,
    /// `q_j² + p_j²` on modes 1 and 2.
    pub initial_action: [f64; 2],
    /// Initial `q_j` on modes `j >= 3`.
    pub tail_amplitude: f64,
    /// Record every `stride`-th state.
    pub stride: usize,
    /// When set, tail modes start at `tail_amplitude * U(-1, 1)` drawn from this seed.
    pub seed: Option<u64>,
    /// Replace the coupling tensor by zero.
    pub linear: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dim: 4, mass: 2.0, dt: 0.01, steps: 1 << 16, initial_action: [1e-4, 1e-4], tail_amplitude: 0.0, stride: 1, seed: None, linear: false }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::Domain(format!("dim must be >= 2, got {}", self.dim)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Domain(format!("dt must be positive, got {}", self.dt)));
        }
        if self.initial_action.iter().any(|&a| !(a >= 0.0 && a.is_finite())) {
            return Err(Error::Domain(format!("actions must be >= 0, got {:?}", self.initial_action)));
        }
        if !self.tail_amplitude.is_finite() {
            return Err(Error::Domain("tail amplitude must be finite".into()));
        }
        if self.stride == 0 {
            return Err(Error::Domain("stride must be >= 1".into()));
        }
        Ok(())
    }

    /// `q_j = sqrt(I_j)` on the first two modes, `q_j = tail_amplitude` beyond
    /// (or a seeded random fraction of it), `p = 0`.
    pub fn initial_state(&self) -> PhaseState {
        let mut s = PhaseState::zeros(self.dim);
        s.q[0] = self.initial_action[0].sqrt();
        s.q[1] = self.initial_action[1].sqrt();
        match self.seed {
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                s.q[2..].iter_mut().for_each(|q| *q = self.tail_amplitude * rng.gen_range(-1.0..=1.0));
            }
            None => s.q[2..].iter_mut().for_each(|q| *q = self.tail_amplitude),
        }
        s
    }

    /// Reads `key = value` lines; `#` starts a comment. Keys: `dim`, `mass`,
    /// `dt`, `steps`, `action1`, `action2`, `tail_amplitude`, `stride`, `seed`,
    /// `linear`. Missing keys keep their defaults.
    pub fn parse_key_values(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value, got {raw:?}", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse(format!("line {}: {key} expects {what}, got {value:?}", lineno + 1));
            let float = || -> Result<f64> {
                crate::rational::parse_rational(value).map(|r| crate::rational::to_f64(&r)).map_err(|_| bad("a number"))
            };
            let count = || value.parse::<usize>().map_err(|_| bad("a non-negative integer"));
            match key {
                "dim" => cfg.dim = count()?,
                "mass" => cfg.mass = float()?,
                "dt" => cfg.dt = float()?,
                "steps" => cfg.steps = count()?,
                "action1" => cfg.initial_action[0] = float()?,
                "action2" => cfg.initial_action[1] = float()?,
                "tail_amplitude" => cfg.tail_amplitude = float()?,
                "stride" => cfg.stride = count()?,
                "seed" => cfg.seed = Some(value.parse().map_err(|_| bad("an unsigned integer"))?),
                "linear" => cfg.linear = value.parse().map_err(|_| bad("true or false"))?,
                _ => return Err(Error::Parse(format!("line {}: unknown key {key:?}", lineno + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Strang splitting: half rotation by `λ_j dt/2`, kick `p -= dt ∇G(q)`,
/// half rotation.
pub struct Integrator<'a> {
    sys: &'a EigenSystem,
    tensor: &'a CouplingTensor,
    grad: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(sys: &'a EigenSystem, tensor: &'a CouplingTensor) -> Result<Self> {
        if tensor.dim() != sys.dim {
            return Err(Error::DimensionMismatch { expected: sys.dim, got: tensor.dim() });
        }
        Ok(Self { sys, tensor, grad: vec![0.0; sys.dim] })
    }

    fn rotate(&self, state: &mut PhaseState, h: f64) {
        for ((q, p), l) in state.q.iter_mut().zip(state.p.iter_mut()).zip(&self.sys.lambdas) {
            let (s, c) = (l * h).sin_cos();
            let (q0, p0) = (*q, *p);
            *q = c * q0 + s * p0;
            *p = -s * q0 + c * p0;
        }
    }

    /// One step of size `dt`; a negative `dt` runs the exact inverse.
    pub fn step(&mut self, state: &mut PhaseState, dt: f64) {
        self.rotate(state, 0.5 * dt);
        self.tensor.gradient_into(&state.q, &mut self.grad);
        state.p.iter_mut().zip(&self.grad).for_each(|(p, g)| *p -= dt * g);
        self.rotate(state, 0.5 * dt);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhaseState>,
    pub energies: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max_t |H(t) - H(0)| / |H(0)|`.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let h0 = self.energies[0];
        self.energies.iter().map(|h| ((h - h0) / h0).abs()).fold(0.0, f64::max)
    }

    /// Columns `t, q_1..q_J, p_1..p_J, H`, keeping every `stride`-th row.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let dim = self.states.first().map_or(0, PhaseState::dim);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|j| format!("q{j}")));
        header.extend((1..=dim).map(|j| format!("p{j}")));
        header.push("H".into());
        w.write_record(&header)?;
        for k in (0..self.len()).step_by(stride.max(1)) {
            let s = &self.states[k];
            let row: Vec<String> = std::iter::once(self.times[k])
                .chain(s.q.iter().copied())
                .chain(s.p.iter().copied())
                .chain(std::iter::once(self.energies[k]))
                .map(|v| format!("{v:e}"))
                .collect();
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }

    pub fn export_csv(&self, path: &Path, stride: usize) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        self.write_csv(std::io::BufWriter::new(f), stride)
    }
}

/// Integrates from `config.initial_state()`.
pub fn integrate(config: &SimConfig, sys: &EigenSystem, tensor: &CouplingTensor) -> Result<Trajectory> {
    let (traj, outcome) = integrate_partial(config, sys, tensor)?;
    outcome.map(|()| traj)
}

/// Like [`integrate`], but on blow-up also hands back the states recorded so far.
pub fn integrate_partial(
    config: &SimConfig,
    sys: &EigenSystem,
    tensor: &CouplingTensor,
) -> Result<(Trajectory, Result<()>)> {
    config.validate()?;
    if sys.dim != config.dim {
        return Err(Error::DimensionMismatch { expected: config.dim, got: sys.dim });
    }
    run(config.initial_state(), config.dt, config.steps, config.stride, sys, tensor)
}

pub fn integrate_from(
    state: PhaseState,
    dt: f64,
    steps: usize,
    stride: usize,
    sys: &EigenSystem,
    tensor: &CouplingTensor,
) -> Result<Trajectory> {
    let (traj, outcome) = run(state, dt, steps, stride, sys, tensor)?;
    outcome.map(|()| traj)
}

fn run(
    mut state: PhaseState,
    dt: f64,
    steps: usize,
    stride: usize,
    sys: &EigenSystem,
    tensor: &CouplingTensor,
) -> Result<(Trajectory, Result<()>)> {
    let stride = stride.max(1);
    let mut integ = Integrator::new(sys, tensor)?;
    let cap = steps / stride + 1;
    let mut traj = Trajectory { times: Vec::with_capacity(cap), states: Vec::with_capacity(cap), energies: Vec::with_capacity(cap) };
    let record = |traj: &mut Trajectory, k: usize, s: &PhaseState| -> Result<()> {
        traj.times.push(k as f64 * dt);
        traj.energies.push(hamiltonian_energy(s, sys, tensor)?);
        traj.states.push(s.clone());
        Ok(())
    };
    record(&mut traj, 0, &state)?;
    for k in 1..=steps {
        integ.step(&mut state, dt);
        if !state.is_finite() || state.q.iter().chain(&state.p).any(|v| v.abs() > BLOW_UP_THRESHOLD) {
            return Ok((traj, Err(Error::BlowUp { step: k, time: k as f64 * dt })));
        }
        if k % stride == 0 {
            record(&mut traj, k, &state)?;
        }
    }
    Ok((traj, Ok(())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeFrequency {
    pub mode: usize,
    pub frequency: f64,
    pub power_ratio: f64,
    pub dominant: bool,
}

/// Dominant angular frequency of `z_j = q_j - i p_j` for each listed mode
/// (1-based). A free mode `q = cos λt`, `p = -sin λt` shows up at `+λ`.
///
/// Hann window, FFT, quadratic interpolation of the log-magnitude around the
/// peak bin, then golden-section maximisation of the windowed transform
/// within one bin of that estimate.
pub fn extract_frequencies(traj: &Trajectory, modes: &[usize]) -> Result<Vec<ModeFrequency>> {
    let n = traj.len();
    if n < MIN_SAMPLES {
        return Err(Error::Domain(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    let h = traj.times[1] - traj.times[0];
    if traj.times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.abs().max(1.0)) {
        return Err(Error::Domain("trajectory is not uniformly sampled".into()));
    }
    let dim = traj.states[0].dim();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let window: Vec<f64> = (0..n).map(|k| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
    modes
        .iter()
        .map(|&mode| {
            if mode == 0 || mode > dim {
                return Err(Error::DimensionMismatch { expected: dim, got: mode });
            }
            let signal: Vec<Complex64> =
                traj.states.iter().zip(&window).map(|(s, w)| Complex64::new(s.q[mode - 1], -s.p[mode - 1]) * w).collect();
            let mut spec = signal.clone();
            fft.process(&mut spec);
            let power: Vec<f64> = spec.iter().map(|c| c.norm_sqr()).collect();
            Ok(refine_peak(&signal, &power, h, mode))
        })
        .collect()
}

fn refine_peak(signal: &[Complex64], power: &[f64], h: f64, mode: usize) -> ModeFrequency {
    let n = power.len();
    let (k, &pk) = power.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let guard = 8;
    let off_peak = power
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let d = (*i as isize - k as isize).rem_euclid(n as isize) as usize;
            d.min(n - d) > guard
        })
        .map(|(_, &p)| p)
        .fold(0.0, f64::max);
    let power_ratio = if pk == 0.0 {
        0.0
    } else if off_peak > 0.0 {
        pk / off_peak
    } else {
        f64::INFINITY
    };

    let bin = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let ln = |i: isize| power[i.rem_euclid(n as isize) as usize].max(f64::MIN_POSITIVE).ln();
    let (a, b, c) = (ln(k as isize - 1), ln(k as isize), ln(k as isize + 1));
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let signed_k = if k > n / 2 { k as f64 - n as f64 } else { k as f64 };
    let guess = (signed_k + shift) * bin;

    let amplitude = |omega: f64| -> f64 {
        let step = Complex64::from_polar(1.0, -omega * h);
        let mut phase = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, s) in signal.iter().enumerate() {
            acc += s * phase;
            phase *= step;
            if i % 1024 == 1023 {
                phase = Complex64::from_polar(1.0, -omega * h * (i + 1) as f64);
            }
        }
        acc.norm_sqr()
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (guess - bin, guess + bin);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (amplitude(x1), amplitude(x2));
    while hi - lo > 1e-12 * bin.max(guess.abs()) {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = amplitude(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = amplitude(x2);
        }
    }
    ModeFrequency { mode, frequency: 0.5 * (lo + hi), power_ratio, dominant: power_ratio >= DOMINANCE_RATIO }
}

/// `max_t Σ_{j>=3} λ_j (q_j² + p_j²) / Σ_j λ_j (q_j² + p_j²)`.
pub fn torus_residual(traj: &Trajectory, sys: &EigenSystem) -> f64 {
    traj.states
        .iter()
        .map(|s| {
            let e: Vec<f64> = (0..s.dim()).map(|j| sys.lambdas[j] * (s.q[j] * s.q[j] + s.p[j] * s.p[j])).collect();
            let total: f64 = e.iter().sum();
            if total > 0.0 {
                e[2..].iter().sum::<f64>() / total
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyReport {
    pub config: SimConfig,
    pub eigenvalues: Vec<f64>,
    pub frequencies: Vec<ModeFrequency>,
    pub torus_residual: f64,
    pub max_energy_drift: f64,
}

impl FrequencyReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galerkin::{build_tensor, MassParam};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn forward_then_backward_is_identity(
            q in proptest::collection::vec(-0.3f64..0.3, 4),
            p in proptest::collection::vec(-0.3f64..0.3, 4),
            dt in 1e-3f64..2e-2,
        ) {
            let (sys, t) = model(4, "3/2");
            let mut integ = Integrator::new(&sys, &t).unwrap();
            let start = PhaseState { q, p };
            let mut s = start.clone();
            for _ in 0..500 {
                integ.step(&mut s, dt);
            }
            for _ in 0..500 {
                integ.step(&mut s, -dt);
            }
            for (a, b) in s.q.iter().chain(&s.p).zip(start.q.iter().chain(&start.p)) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    fn model(dim: usize, m: &str) -> (EigenSystem, CouplingTensor) {
        let sys = EigenSystem::new(dim, MassParam::parse(m).unwrap());
        let t = build_tensor(&sys).unwrap();
        (sys, t)
    }

    #[test]
    fn linear_circle_and_period() {
        let sys = EigenSystem::new(3, MassParam::parse("2").unwrap());
        let t = CouplingTensor::zeroed(3);
        let cfg = SimConfig { dim: 3, dt: 1e-3, steps: 2000, initial_action: [0.25, 0.04], tail_amplitude: 0.1, ..Default::default() };
        let traj = integrate(&cfg, &sys, &t).unwrap();
        for s in &traj.states {
            assert!((s.q[0] * s.q[0] + s.p[0] * s.p[0] - 0.25).abs() < 1e-12);
        }
        // a full period of mode 1 is 2π/λ_1 = π
        let steps = 1000;
        let dt = std::f64::consts::PI / steps as f64;
        let traj = integrate_from(cfg.initial_state(), dt, steps, steps, &sys, &t).unwrap();
        let end = traj.states.last().unwrap();
        assert!((end.q[0] - 0.5).abs() < 1e-12 && end.p[0].abs() < 1e-12);
        assert_eq!(torus_residual(&integrate(&SimConfig { tail_amplitude: 0.0, ..cfg }, &sys, &t).unwrap(), &sys), 0.0);
    }

    #[test]
    fn time_reversal() {
        let (sys, t) = model(4, "2");
        let cfg = SimConfig { dt: 1e-3, steps: 5000, initial_action: [0.04, 0.01], tail_amplitude: 0.05, ..Default::default() };
        let mut s = cfg.initial_state();
        let start = s.clone();
        let mut integ = Integrator::new(&sys, &t).unwrap();
        for _ in 0..cfg.steps {
            integ.step(&mut s, cfg.dt);
        }
        for _ in 0..cfg.steps {
            integ.step(&mut s, -cfg.dt);
        }
        for (a, b) in s.q.iter().chain(&s.p).zip(start.q.iter().chain(&start.p)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    fn det(mut a: Vec<Vec<f64>>) -> f64 {
        let n = a.len();
        let mut d = 1.0;
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            if p != c {
                a.swap(p, c);
                d = -d;
            }
            d *= a[c][c];
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
        d
    }

    #[test]
    fn step_jacobian_is_unimodular() {
        let (sys, t) = model(4, "2");
        let mut integ = Integrator::new(&sys, &t).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let eps = 1e-6;
        for _ in 0..5 {
            let base: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.3..0.3)).collect();
            let mut flow = |x: &[f64]| {
                let mut s = PhaseState { q: x[..4].to_vec(), p: x[4..].to_vec() };
                integ.step(&mut s, 1e-2);
                [s.q, s.p].concat()
            };
            let jac: Vec<Vec<f64>> = (0..8)
                .map(|c| {
                    let (mut up, mut dn) = (base.clone(), base.clone());
                    up[c] += eps;
                    dn[c] -= eps;
                    let (fu, fd) = (flow(&up), flow(&dn));
                    (0..8).map(|r| (fu[r] - fd[r]) / (2.0 * eps)).collect()
                })
                .collect();
            assert!((det(jac) - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn energy_drift_short_run() {
        let (sys, t) = model(4, "2");
        let cfg = SimConfig { dt: 1e-3, steps: 20_000, initial_action: [0.04, 0.04], tail_amplitude: 0.2, stride: 10, ..Default::default() };
        let traj = integrate(&cfg, &sys, &t).unwrap();
        assert!(traj.max_relative_energy_drift() < 1e-5);
        assert_eq!(traj.len(), 2001);
    }

    #[test]
    fn linear_frequencies() {
        let sys = EigenSystem::new(3, MassParam::parse("2").unwrap());
        let t = CouplingTensor::zeroed(3);
        let cfg = SimConfig { dim: 3, dt: 0.01, steps: 1 << 14, initial_action: [1.0, 0.5], tail_amplitude: 0.3, ..Default::default() };
        let traj = integrate(&SimConfig { steps: cfg.steps - 1, ..cfg }, &sys, &t).unwrap();
        let f = extract_frequencies(&traj, &[1, 2, 3]).unwrap();
        for r in &f {
            assert!(r.dominant);
            assert!((r.frequency / sys.lambda(r.mode) - 1.0).abs() < 1e-6, "{r:?}");
        }
        assert!((f[0].frequency - 2.0).abs() < 1e-6 && (f[1].frequency - 14f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn silent_mode_is_flagged() {
        let sys = EigenSystem::new(3, MassParam::parse("2").unwrap());
        let t = CouplingTensor::zeroed(3);
        let cfg = SimConfig { dim: 3, steps: 2047, initial_action: [1.0, 0.0], ..Default::default() };
        let traj = integrate(&cfg, &sys, &t).unwrap();
        let f = extract_frequencies(&traj, &[2]).unwrap();
        assert!(!f[0].dominant);
    }

    #[test]
    fn rejects_bad_input() {
        let (sys, t) = model(3, "2");
        assert!(integrate(&SimConfig { dim: 3, dt: 0.0, ..Default::default() }, &sys, &t).is_err());
        assert!(integrate(&SimConfig { dim: 1, ..Default::default() }, &sys, &t).is_err());
        assert!(integrate(&SimConfig { dim: 3, initial_action: [-1.0, 0.0], ..Default::default() }, &sys, &t).is_err());
        let short = integrate(&SimConfig { dim: 3, steps: 100, ..Default::default() }, &sys, &t).unwrap();
        assert!(extract_frequencies(&short, &[1]).is_err());
        let big = SimConfig { dim: 3, dt: 0.1, steps: 10_000, initial_action: [1e6, 1e6], ..Default::default() };
        assert!(matches!(integrate(&big, &sys, &t), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn key_value_config() {
        let cfg = SimConfig::parse_key_values("dim = 6\nmass = 1/3  # exact\naction1=0.01\nseed=9\nlinear = true\n").unwrap();
        assert_eq!((cfg.dim, cfg.seed, cfg.linear), (6, Some(9), true));
        assert!((cfg.mass - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(cfg.initial_action, [0.01, 1e-4]);
        assert!(SimConfig::parse_key_values("dim 6").is_err());
        assert!(SimConfig::parse_key_values("colour = red").is_err());
        assert!(SimConfig::parse_key_values("dt = -1").is_err());
        let seeded = SimConfig { dim: 6, tail_amplitude: 0.1, seed: Some(3), ..Default::default() };
        let (a, b) = (seeded.initial_state(), seeded.initial_state());
        assert_eq!(a, b);
        assert!(a.q[2..].iter().all(|q| q.abs() <= 0.1) && a.q[2] != a.q[3]);
    }

    #[test]
    fn blow_up_keeps_partial_trajectory() {
        let (sys, t) = model(3, "2");
        let cfg = SimConfig { dim: 3, dt: 0.1, steps: 10_000, initial_action: [1e6, 1e6], ..Default::default() };
        let (traj, outcome) = integrate_partial(&cfg, &sys, &t).unwrap();
        assert!(matches!(outcome, Err(Error::BlowUp { .. })));
        assert!(!traj.is_empty() && traj.len() < 10_001);
    }

    #[test]
    fn csv_and_json() {
        let (sys, t) = model(2, "2");
        let traj = integrate(&SimConfig { dim: 2, steps: 10, ..Default::default() }, &sys, &t).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf, 5).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("t,q1,q2,p1,p2,H"));
        let report = FrequencyReport {
            config: SimConfig::default(),
            eigenvalues: sys.lambdas.clone(),
            frequencies: vec![],
            torus_residual: 0.0,
            max_energy_drift: traj.max_relative_energy_drift(),
        };
        let mut buf = Vec::new();
        report.write_json(&mut buf).unwrap();
        assert!(serde_json::from_slice::<serde_json::Value>(&buf).unwrap()["config"]["dim"] == 4);
    }
}
