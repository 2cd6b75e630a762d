//! The discrete complex linear map `x(k+1) = B x(k)` with
//! `B = diag(i omega) + epsilon A`, its initial conditions, and the nonlinear
//! phase equation it linearizes.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::lattice::AdjacencyMatrix;
use crate::linalg::{real_matvec_split, CMatrix, C64, ZERO};
use crate::seed;

/// Intrinsic rotation rate of every node, radians per step.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector(Vec<f64>);

impl FrequencyVector {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if let Some(i) = omega.iter().position(|w| !w.is_finite()) {
            return Err(Error::invalid(format!("omega[{i}] is not finite")));
        }
        Ok(Self(omega))
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dense system matrix of one layer.
///
/// When `B` comes from [`build_system_matrix`] its imaginary part is diagonal;
/// the real part and that diagonal are cached so stepping costs two real
/// matrix-vector products instead of one complex one.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    entries: CMatrix,
    epsilon: f64,
    omega: Option<FrequencyVector>,
    split: Option<SplitForm>,
}

#[derive(Debug, Clone)]
struct SplitForm {
    real: Vec<f64>,
    imag_diag: Vec<f64>,
}

impl SystemMatrix {
    /// Wraps an arbitrary square complex matrix.
    pub fn from_dense(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::invalid("system matrix must be square"));
        }
        let split = split_form(&entries);
        Ok(Self {
            entries,
            epsilon: f64::NAN,
            omega: None,
            split,
        })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.rows()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega(&self) -> Option<&FrequencyVector> {
        self.omega.as_ref()
    }

    /// `y = B x` without bounds checks beyond debug assertions.
    fn apply(&self, x: &[C64], y: &mut [C64], scratch: &mut Scratch) {
        match &self.split {
            Some(split) => {
                let n = self.dim();
                for (k, v) in x.iter().enumerate() {
                    scratch.xr[k] = v.re;
                    scratch.xi[k] = v.im;
                }
                real_matvec_split(&split.real, n, &scratch.xr, &scratch.xi, &mut scratch.yr, &mut scratch.yi);
                for k in 0..n {
                    y[k] = C64::new(scratch.yr[k], scratch.yi[k]) + C64::new(0.0, split.imag_diag[k]) * x[k];
                }
            }
            None => self.entries.matvec_into(x, y),
        }
    }
}

fn split_form(m: &CMatrix) -> Option<SplitForm> {
    let n = m.rows();
    let mut real = Vec::with_capacity(n * n);
    let mut imag_diag = vec![0.0; n];
    for i in 0..n {
        for (j, v) in m.row(i).iter().enumerate() {
            if i == j {
                imag_diag[i] = v.im;
            } else if v.im != 0.0 {
                return None;
            }
            real.push(v.re);
        }
    }
    Some(SplitForm { real, imag_diag })
}

struct Scratch {
    xr: Vec<f64>,
    xi: Vec<f64>,
    yr: Vec<f64>,
    yi: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            xr: vec![0.0; n],
            xi: vec![0.0; n],
            yr: vec![0.0; n],
            yi: vec![0.0; n],
        }
    }
}

/// `b_ij = epsilon a_ij` off the diagonal, `b_ii = i omega_i + epsilon a_ii`.
pub fn build_system_matrix(adj: &AdjacencyMatrix, omega: &FrequencyVector, epsilon: f64) -> Result<SystemMatrix> {
    let n = adj.dim();
    if omega.len() != n {
        return Err(Error::invalid(format!(
            "omega has {} entries, adjacency has {n} nodes",
            omega.len()
        )));
    }
    let w = adj.weights();
    let entries = CMatrix::from_fn(n, n, |i, j| {
        let re = epsilon * w[i * n + j];
        if i == j {
            C64::new(re, omega.as_slice()[i])
        } else {
            C64::new(re, 0.0)
        }
    });
    let split = SplitForm {
        real: w.iter().map(|&a| epsilon * a).collect(),
        imag_diag: omega.as_slice().to_vec(),
    };
    Ok(SystemMatrix {
        entries,
        epsilon,
        omega: Some(omega.clone()),
        split: Some(split),
    })
}

/// Complex node states.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexState(pub Vec<C64>);

impl ComplexState {
    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.0.iter().map(|z| principal_arg(*z)).collect()
    }
}

/// Amplitudes uniform on `[0, 1]`, phases uniform on `[-pi, pi]`.
pub fn sample_initial_state(node_count: usize, seed: u64) -> Result<ComplexState> {
    if node_count == 0 {
        return Err(Error::invalid("node_count must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let mut values: Vec<C64> = (0..node_count)
        .map(|_| {
            let amp: f64 = rng.gen_range(0.0..=1.0);
            let phase: f64 = rng.gen_range(-PI..=PI);
            C64::from_polar(amp, phase)
        })
        .collect();
    // An all-zero draw is measure-zero but would make every later phase undefined.
    if values.iter().all(|z| *z == ZERO) {
        values[0] = C64::new(1.0, 0.0);
    }
    Ok(ComplexState(values))
}

/// One application of the map: the exact product `B x`.
pub fn step(b: &SystemMatrix, x: &ComplexState) -> Result<ComplexState> {
    check_dims(b, x)?;
    let mut y = vec![ZERO; x.len()];
    b.apply(x.as_slice(), &mut y, &mut Scratch::new(x.len()));
    Ok(ComplexState(y))
}

/// Wraps an angle to `(-pi, pi]`.
#[inline]
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

/// Principal argument mapped to `(-pi, pi]` (atan2 can return `-pi` for `-0.0` imaginary parts).
#[inline]
pub fn principal_arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Time-indexed phases (and optionally amplitudes) of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseRecord {
    node_count: usize,
    step_indices: Vec<usize>,
    phases: Vec<f64>,
    amplitudes: Option<Vec<f64>>,
}

impl PhaseRecord {
    /// Assembles a record from row-major `T x n` phases. Phases are wrapped.
    pub fn new(node_count: usize, step_indices: Vec<usize>, phases: Vec<f64>, amplitudes: Option<Vec<f64>>) -> Result<Self> {
        if phases.len() != step_indices.len() * node_count {
            return Err(Error::invalid("phase table shape does not match step count"));
        }
        if step_indices.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("step indices must be strictly increasing"));
        }
        if let Some(a) = &amplitudes {
            if a.len() != phases.len() {
                return Err(Error::invalid("amplitude table shape does not match phases"));
            }
        }
        Ok(Self {
            node_count,
            step_indices,
            phases: phases.into_iter().map(wrap_phase).collect(),
            amplitudes,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn len(&self) -> usize {
        self.step_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step_indices.is_empty()
    }

    pub fn step_indices(&self) -> &[usize] {
        &self.step_indices
    }

    /// Phases of all nodes at the `t`-th recorded sample.
    pub fn phases_at(&self, t: usize) -> &[f64] {
        &self.phases[t * self.node_count..(t + 1) * self.node_count]
    }

    pub fn amplitudes_at(&self, t: usize) -> Option<&[f64]> {
        self.amplitudes
            .as_ref()
            .map(|a| &a[t * self.node_count..(t + 1) * self.node_count])
    }

    /// Position of a step index among the recorded samples.
    pub fn position_of(&self, step: usize) -> Option<usize> {
        self.step_indices.binary_search(&step).ok()
    }

    pub fn has_amplitudes(&self) -> bool {
        self.amplitudes.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    pub steps: usize,
    pub renormalize: bool,
    pub record_every: usize,
    pub record_amplitudes: bool,
}

impl PropagateOptions {
    pub fn new(steps: usize, record_every: usize) -> Self {
        Self {
            steps,
            renormalize: true,
            record_every,
            record_amplitudes: false,
        }
    }
}

/// Iterates the map and records phases at every `record_every`-th step.
///
/// With `renormalize` the state is divided by its largest modulus after each
/// step; a positive real factor leaves every phase unchanged.
pub fn propagate(b: &SystemMatrix, x0: &ComplexState, opts: PropagateOptions) -> Result<PhaseRecord> {
    Ok(propagate_with_state(b, x0, opts)?.0)
}

/// Same as [`propagate`] but also returns the final state.
pub fn propagate_with_state(b: &SystemMatrix, x0: &ComplexState, opts: PropagateOptions) -> Result<(PhaseRecord, ComplexState)> {
    check_dims(b, x0)?;
    if opts.steps == 0 || opts.record_every == 0 {
        return Err(Error::invalid("steps and record_every must be at least 1"));
    }
    let n = x0.len();
    let mut x = x0.0.clone();
    let mut y = vec![ZERO; n];
    let mut scratch = Scratch::new(n);
    let samples = opts.steps / opts.record_every;
    let mut steps_out = Vec::with_capacity(samples);
    let mut phases = Vec::with_capacity(samples * n);
    let mut amps = opts.record_amplitudes.then(|| Vec::with_capacity(samples * n));
    for k in 1..=opts.steps {
        b.apply(&x, &mut y, &mut scratch);
        std::mem::swap(&mut x, &mut y);
        if opts.renormalize {
            let peak = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if !peak.is_finite() {
                return Err(Error::Overflow { step: k });
            }
            if peak > 0.0 {
                let inv = 1.0 / peak;
                x.iter_mut().for_each(|z| *z *= inv);
            }
        } else if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Overflow { step: k });
        }
        if k % opts.record_every == 0 {
            steps_out.push(k);
            phases.extend(x.iter().map(|z| principal_arg(*z)));
            if let Some(a) = amps.as_mut() {
                a.extend(x.iter().map(|z| z.norm()));
            }
        }
    }
    let record = PhaseRecord {
        node_count: n,
        step_indices: steps_out,
        phases,
        amplitudes: amps,
    };
    Ok((record, ComplexState(x)))
}

/// Right-hand side of the nonlinear phase equation
/// `dpsi_i/dt = omega_i + eps sum_j a_ij [sin(psi_j - psi_i) - i cos(psi_j - psi_i)]`
/// for complex `psi`.
pub fn nonlinear_rhs(psi: &[C64], omega: &FrequencyVector, adj: &AdjacencyMatrix, epsilon: f64) -> Result<Vec<C64>> {
    let n = adj.dim();
    if psi.len() != n || omega.len() != n {
        return Err(Error::invalid(format!(
            "psi has {} entries, omega {}, adjacency {n}",
            psi.len(),
            omega.len()
        )));
    }
    let i_unit = C64::new(0.0, 1.0);
    Ok((0..n)
        .map(|i| {
            let coupling: C64 = adj
                .row(i)
                .iter()
                .zip(psi)
                .map(|(&a, &pj)| {
                    let d = pj - psi[i];
                    a * (d.sin() - i_unit * d.cos())
                })
                .sum();
            C64::new(omega.as_slice()[i], 0.0) + epsilon * coupling
        })
        .collect())
}

fn check_dims(b: &SystemMatrix, x: &ComplexState) -> Result<()> {
    if b.dim() != x.len() {
        return Err(Error::invalid(format!(
            "state has {} entries, system matrix is {}x{}",
            x.len(),
            b.dim(),
            b.dim()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, gaussian_adjacency};
    use crate::linalg::relative_error;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_instance(side: usize, seed: u64) -> (AdjacencyMatrix, FrequencyVector, f64) {
        let mut rng = crate::seed::rng(seed);
        let spec = build_lattice(side).unwrap();
        let adj = gaussian_adjacency(&spec, rng.gen_range(0.1..2.0), rng.gen_range(0.5..3.0)).unwrap();
        let omega = FrequencyVector::new((0..spec.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        (adj, omega, rng.gen_range(0.01..0.5))
    }

    /// Naive `B^k x` through repeated dense products, independent of `step`.
    fn matrix_power_apply(b: &CMatrix, x: &[C64], k: usize) -> Vec<C64> {
        let mut p = CMatrix::identity(b.rows());
        for _ in 0..k {
            p = p.matmul(b);
        }
        p.matvec(x)
    }

    #[test]
    fn system_matrix_special_cases() {
        let spec = build_lattice(2).unwrap();
        let zero = AdjacencyMatrix::from_weights(spec, vec![0.0; 16]).unwrap();
        let b = build_system_matrix(&zero, &FrequencyVector::uniform(4, 1.0), 0.3).unwrap();
        assert_eq!(b.entries(), &CMatrix::identity(4).scale(C64::new(0.0, 1.0)));

        let adj = gaussian_adjacency(&spec, 1.0, 1.0).unwrap();
        let omega = FrequencyVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let b = build_system_matrix(&adj, &omega, 0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { C64::new(0.0, omega.as_slice()[i]) } else { ZERO };
                assert_eq!(b.entries()[(i, j)], expect);
            }
        }
    }

    #[test]
    fn system_matrix_two_by_two_lattice_entries() {
        let spec = build_lattice(2).unwrap();
        let adj = gaussian_adjacency(&spec, 1.0, 1.0).unwrap();
        let b = build_system_matrix(&adj, &FrequencyVector::uniform(4, 0.0), 0.1).unwrap();
        // hand evaluation: d^2 in {0, 1, 2}
        let by_d2 = [0.1, 0.1 * (-0.5f64).exp(), 0.1 * (-1.0f64).exp()];
        for i in 0..4 {
            for j in 0..4 {
                let (ri, ci): (usize, usize) = (i / 2, i % 2);
                let (rj, cj) = (j / 2, j % 2);
                let d2 = ri.abs_diff(rj) + ci.abs_diff(cj);
                let got = b.entries()[(i, j)];
                assert!((got.re - by_d2[d2]).abs() < 1e-16 && got.im == 0.0, "({i},{j})");
            }
        }
        assert!(build_system_matrix(&adj, &FrequencyVector::uniform(3, 0.0), 0.1).is_err());
    }

    #[test]
    fn sampled_state_statistics() {
        let a = sample_initial_state(100_000, 11).unwrap();
        assert_eq!(a, sample_initial_state(100_000, 11).unwrap());
        assert_ne!(a, sample_initial_state(100_000, 12).unwrap());
        let mean_amp = a.0.iter().map(|z| z.norm()).sum::<f64>() / a.len() as f64;
        assert!((mean_amp - 0.5).abs() < 0.01, "mean amplitude {mean_amp}");
        let resultant: C64 = a.0.iter().map(|z| C64::from_polar(1.0, z.arg())).sum();
        assert!(resultant.norm() / (a.len() as f64) < 0.02);
        assert!(a.0.iter().all(|z| z.norm() <= 1.0 + 1e-15));
        assert!(sample_initial_state(0, 1).is_err());
    }

    #[test]
    fn single_node_rotates_by_quarter_turns() {
        let spec = build_lattice(2).unwrap();
        let zero = AdjacencyMatrix::from_weights(spec, vec![0.0; 16]).unwrap();
        let b = build_system_matrix(&zero, &FrequencyVector::uniform(4, 1.0), 0.7).unwrap();
        let x0 = ComplexState(vec![C64::new(1.0, 0.0); 4]);
        let x1 = step(&b, &x0).unwrap();
        let x2 = step(&b, &x1).unwrap();
        assert_eq!(x1.0[0], C64::new(0.0, 1.0));
        assert_eq!(x2.0[0], C64::new(-1.0, 0.0));
    }

    #[test]
    fn identity_step_is_noop() {
        let b = SystemMatrix::from_dense(CMatrix::identity(5)).unwrap();
        let x = sample_initial_state(5, 3).unwrap();
        assert_eq!(step(&b, &x).unwrap(), x);
        assert!(step(&b, &sample_initial_state(4, 3).unwrap()).is_err());
    }

    #[test]
    fn five_steps_match_matrix_power() {
        let (adj, omega, eps) = random_instance(3, 5);
        let b = build_system_matrix(&adj, &omega, eps).unwrap();
        let x0 = sample_initial_state(9, 9).unwrap();
        let mut x = x0.clone();
        for _ in 0..5 {
            x = step(&b, &x).unwrap();
        }
        let oracle = matrix_power_apply(b.entries(), x0.as_slice(), 5);
        assert!(relative_error(x.as_slice(), &oracle) <= 1e-10);

        // general complex matrix (no split fast path)
        let mut rng = crate::seed::rng(1);
        let g = CMatrix::from_fn(9, 9, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let gb = SystemMatrix::from_dense(g.clone()).unwrap();
        let mut x = x0.clone();
        for _ in 0..5 {
            x = step(&gb, &x).unwrap();
        }
        assert!(relative_error(x.as_slice(), &matrix_power_apply(&g, x0.as_slice(), 5)) <= 1e-10);
    }

    #[test]
    fn pure_rotation_advances_quarter_turn() {
        let spec = build_lattice(3).unwrap();
        let adj = gaussian_adjacency(&spec, 1.0, 1.0).unwrap();
        let b = build_system_matrix(&adj, &FrequencyVector::uniform(9, 1.0), 0.0).unwrap();
        let x0 = sample_initial_state(9, 2).unwrap();
        let rec = propagate(&b, &x0, PropagateOptions::new(12, 1)).unwrap();
        let start = x0.phases();
        for t in 0..rec.len() {
            let k = rec.step_indices()[t] as f64;
            for (i, &p) in rec.phases_at(t).iter().enumerate() {
                let expect = wrap_phase(start[i] + k * PI / 2.0);
                assert!(circ_dist(p, expect) < 1e-12);
            }
        }
    }

    #[test]
    fn record_bookkeeping() {
        let spec = build_lattice(2).unwrap();
        let adj = gaussian_adjacency(&spec, 1.0, 1.0).unwrap();
        let b = build_system_matrix(&adj, &FrequencyVector::uniform(4, 0.5), 0.1).unwrap();
        let x0 = sample_initial_state(4, 1).unwrap();
        let rec = propagate(&b, &x0, PropagateOptions::new(60, 10)).unwrap();
        assert_eq!(rec.step_indices(), &[10, 20, 30, 40, 50, 60]);
        assert!(!rec.has_amplitudes());
        assert!(propagate(&b, &x0, PropagateOptions::new(0, 1)).is_err());
        assert!(propagate(&b, &x0, PropagateOptions::new(5, 0)).is_err());
    }

    #[test]
    fn raw_overflow_names_step() {
        let b = SystemMatrix::from_dense(CMatrix::identity(2).scale(C64::new(1e200, 0.0))).unwrap();
        let x0 = ComplexState(vec![C64::new(1.0, 0.0); 2]);
        let mut opts = PropagateOptions::new(5, 1);
        opts.renormalize = false;
        match propagate(&b, &x0, opts) {
            Err(Error::Overflow { step }) => assert_eq!(step, 2),
            other => panic!("expected overflow, got {other:?}"),
        }
        opts.renormalize = true;
        assert!(propagate(&b, &x0, opts).is_ok());
    }

    #[test]
    fn renormalized_and_raw_phases_agree() {
        let (adj, omega, eps) = random_instance(3, 21);
        let b = build_system_matrix(&adj, &omega, eps).unwrap();
        let x0 = sample_initial_state(9, 4).unwrap();
        let mut opts = PropagateOptions::new(50, 1);
        let norm = propagate(&b, &x0, opts).unwrap();
        opts.renormalize = false;
        let raw = propagate(&b, &x0, opts).unwrap();
        for t in 0..raw.len() {
            for (a, c) in norm.phases_at(t).iter().zip(raw.phases_at(t)) {
                assert!(circ_dist(*a, *c) < 1e-9);
            }
        }
    }

    #[test]
    fn nonlinear_rhs_cases() {
        let spec = build_lattice(2).unwrap();
        let adj = gaussian_adjacency(&spec, 1.0, 1.0).unwrap();
        let omega = FrequencyVector::new(vec![0.3, -0.2, 1.0, 0.0]).unwrap();
        let psi: Vec<C64> = (0..4).map(|k| C64::new(k as f64, 0.1 * k as f64)).collect();
        let rhs = nonlinear_rhs(&psi, &omega, &adj, 0.0).unwrap();
        for (r, w) in rhs.iter().zip(omega.as_slice()) {
            assert_eq!(*r, C64::new(*w, 0.0));
        }
        // two coupled nodes with equal phases: each term contributes -i a_ij
        let w = vec![0.8, 1.0, 1.0, 0.8];
        let pair = AdjacencyMatrix::from_weights(build_lattice(2).unwrap(), {
            let mut full = vec![0.0; 16];
            full[0] = w[0];
            full[1] = w[1];
            full[4] = w[2];
            full[5] = w[3];
            full
        })
        .unwrap();
        let psi = vec![C64::new(0.4, 0.0); 4];
        let rhs = nonlinear_rhs(&psi, &FrequencyVector::uniform(4, 0.0), &pair, 1.0).unwrap();
        assert!((rhs[0] - C64::new(0.0, -(0.8 + 1.0))).norm() < 1e-15);
        assert!(nonlinear_rhs(&psi[..3], &FrequencyVector::uniform(4, 0.0), &pair, 1.0).is_err());
    }

    fn circ_dist(a: f64, b: f64) -> f64 {
        wrap_phase(a - b).abs()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn change_of_variable_identity(seed in any::<u64>()) {
            let (adj, omega, eps) = random_instance(3, seed);
            let mut rng = crate::seed::rng(seed ^ 0xabc);
            let psi: Vec<C64> = (0..9).map(|_| C64::new(rng.gen_range(-PI..PI), rng.gen_range(-0.5..0.5))).collect();
            let rhs = nonlinear_rhs(&psi, &omega, &adj, eps).unwrap();
            let b = build_system_matrix(&adj, &omega, eps).unwrap();
            let x: Vec<C64> = psi.iter().map(|p| (C64::new(0.0, 1.0) * p).exp()).collect();
            let bx = b.entries().matvec(&x);
            for i in 0..9 {
                let lhs = C64::new(0.0, 1.0) * rhs[i] * x[i];
                prop_assert!((lhs - bx[i]).norm() <= 1e-12 * (1.0 + bx[i].norm()));
            }
        }

        #[test]
        fn propagation_is_linear(seed in any::<u64>()) {
            let (adj, omega, eps) = random_instance(3, seed);
            let b = build_system_matrix(&adj, &omega, eps).unwrap();
            let x = sample_initial_state(9, seed.wrapping_add(1)).unwrap();
            let y = sample_initial_state(9, seed.wrapping_add(2)).unwrap();
            let sum = ComplexState(x.0.iter().zip(&y.0).map(|(a, b)| a + b).collect());
            let mut opts = PropagateOptions::new(20, 20);
            opts.renormalize = false;
            let (_, fx) = propagate_with_state(&b, &x, opts).unwrap();
            let (_, fy) = propagate_with_state(&b, &y, opts).unwrap();
            let (_, fs) = propagate_with_state(&b, &sum, opts).unwrap();
            let added: Vec<C64> = fx.0.iter().zip(&fy.0).map(|(a, b)| a + b).collect();
            prop_assert!(relative_error(&fs.0, &added) <= 1e-9);
        }

        #[test]
        fn propagation_deterministic(seed in any::<u64>()) {
            let (adj, omega, eps) = random_instance(3, seed);
            let b = build_system_matrix(&adj, &omega, eps).unwrap();
            let x = sample_initial_state(9, seed).unwrap();
            let opts = PropagateOptions::new(15, 3);
            prop_assert_eq!(propagate(&b, &x, opts).unwrap(), propagate(&b, &x, opts).unwrap());
        }

        #[test]
        fn wrapped_phase_in_range(theta in -100.0f64..100.0) {
            let w = wrap_phase(theta);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((theta - w) / (2.0 * PI) - ((theta - w) / (2.0 * PI)).round()).abs() < 1e-9);
        }
    }
}
