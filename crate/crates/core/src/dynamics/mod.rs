//! Master-equation dynamics of the processor under piecewise-constant
//! controls.
//!
//! Every segment is simulated in the frame rotating at the bus frequency, so
//! its generator is time independent. The Hamiltonian conserves the total
//! excitation number and no loss channel raises it, which means a state with
//! at most `N` excitations never leaves the span of basis states with at most
//! `N` excitations. [`Evolver`] integrates on that invariant block and embeds
//! the result back into the full layout.

use std::collections::BTreeMap;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

pub mod model;
pub mod ode;
pub mod params;

pub use model::{
    build_dissipators, build_hamiltonian, lindblad_rhs, Channel, Dissipator, HamiltonianTerms, Lindbladian, OperatorSet,
};
pub use params::{ControlKnobs, ControlSchedule, DeviceParams, Segment};

use crate::error::{Error, Result};
use crate::fockspace::{max_abs, CMatrix, CVector, DensityMatrix, Physicality, PureState, SpaceLayout, C64, I, ONE};
use ode::{Rk45Config, StepFailure};

/// Integration scheme for each segment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    /// Exponential of the segment's Liouvillian superoperator.
    Exact,
    /// Classic Runge–Kutta with a fixed step.
    Rk4 { dt_ns: f64 },
    /// Dormand–Prince 5(4) with error control.
    Rk45 { atol: f64, rtol: f64, max_step_ns: f64 },
}

impl Method {
    pub fn rk45_default() -> Self {
        Method::Rk45 {
            atol: 1e-10,
            rtol: 1e-10,
            max_step_ns: 0.01,
        }
    }

    pub fn rk4_default() -> Self {
        Method::Rk4 { dt_ns: 1e-3 }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Method::Exact => Ok(()),
            Method::Rk4 { dt_ns } if dt_ns > 0.0 => Ok(()),
            Method::Rk4 { .. } => Err(Error::param("dt_ns", "must be > 0")),
            Method::Rk45 {
                atol,
                rtol,
                max_step_ns,
            } if atol > 0.0 && rtol > 0.0 && max_step_ns > 0.0 => Ok(()),
            Method::Rk45 { .. } => Err(Error::param("rk45", "tolerances and max step must be > 0")),
        }
    }
}

/// Reference frame in which reported states are expressed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// Plain frame rotating at ω_R; detuned qutrit levels accumulate dynamic
    /// phase across segments.
    Rotating,
    /// Interaction picture of each segment with its clock restarted at the
    /// segment start: the free evolution `exp(-i H_free T)` of every
    /// segment is undone at its end.
    #[default]
    SegmentInteraction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub method: Method,
    /// Output stride; `None` records only the start and segment ends.
    pub sample_every_ns: Option<f64>,
    pub frame: Frame,
    /// Integrate on the excitation-bounded invariant block.
    pub restrict_excitations: bool,
    /// Fail if a recorded state breaks the density-matrix tolerances.
    pub check_physicality: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Exact,
            sample_every_ns: None,
            frame: Frame::SegmentInteraction,
            restrict_excitations: true,
            check_physicality: true,
        }
    }
}

impl SolverOptions {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_sampling(mut self, every_ns: f64) -> Self {
        self.sample_every_ns = Some(every_ns);
        self
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.method.validate()?;
        if let Some(s) = self.sample_every_ns {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::param("sample_every_ns", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Sampled output of one evolution.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub observables: BTreeMap<String, Vec<f64>>,
    /// Worst physicality over all recorded samples.
    pub physicality: Physicality,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }
}

/// Basis indices spanning an invariant block of the dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    indices: Vec<usize>,
    full_dim: usize,
}

impl Subspace {
    pub fn full(layout: SpaceLayout) -> Self {
        let n = layout.total_dim();
        Subspace {
            indices: (0..n).collect(),
            full_dim: n,
        }
    }

    /// Basis states with at most `max_excitations` quanta.
    pub fn excitations_up_to(layout: SpaceLayout, max_excitations: usize) -> Self {
        Subspace {
            indices: (0..layout.total_dim())
                .filter(|&i| layout.label(i).excitations() <= max_excitations)
                .collect(),
            full_dim: layout.total_dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn is_full(&self) -> bool {
        self.indices.len() == self.full_dim
    }

    pub fn reduce(&self, m: &CMatrix) -> CMatrix {
        let k = self.dim();
        CMatrix::from_fn(k, k, |r, c| m[(self.indices[r], self.indices[c])])
    }

    pub fn reduce_diag(&self, d: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| d[i]).collect()
    }

    pub fn embed(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.full_dim, self.full_dim);
        for (r, &i) in self.indices.iter().enumerate() {
            for (c, &j) in self.indices.iter().enumerate() {
                out[(i, j)] = m[(r, c)];
            }
        }
        out
    }

    /// True when `m` has no weight outside the block.
    pub fn contains(&self, m: &CMatrix) -> bool {
        let mut inside = vec![false; self.full_dim];
        for &i in &self.indices {
            inside[i] = true;
        }
        m.iter().enumerate().all(|(k, z)| {
            let (r, c) = (k % self.full_dim, k / self.full_dim);
            (inside[r] && inside[c]) || *z == C64::new(0.0, 0.0)
        })
    }
}

#[derive(Clone, Debug)]
struct Substep {
    len: f64,
    /// Index into the segment's propagator cache (exact method only).
    prop: usize,
}

#[derive(Clone, Debug)]
struct SegmentModel {
    start: f64,
    duration: f64,
    generator: Lindbladian,
    free: Vec<f64>,
    steps: Vec<Substep>,
    propagators: Vec<CMatrix>,
}

/// Precomputed per-segment generators for one schedule, reusable across
/// many initial states.
#[derive(Clone, Debug)]
pub struct Evolver {
    layout: SpaceLayout,
    opts: SolverOptions,
    subspace: Subspace,
    segments: Vec<SegmentModel>,
}

fn plan_substeps(start: f64, duration: f64, stride: Option<f64>) -> Vec<f64> {
    let end = start + duration;
    let eps = 1e-9;
    let mut cuts = Vec::new();
    if let Some(s) = stride {
        let mut k = (start / s).floor() as i64 + 1;
        loop {
            let t = k as f64 * s;
            if t >= end - eps {
                break;
            }
            if t > start + eps {
                cuts.push(t);
            }
            k += 1;
        }
    }
    let mut out = Vec::with_capacity(cuts.len() + 1);
    let mut prev = start;
    for (i, &t) in cuts.iter().enumerate() {
        // Interior strides are exactly `s`; only the first and last pieces
        // are partial.
        let len = match stride {
            Some(s) if i > 0 => s,
            _ => t - prev,
        };
        out.push(len);
        prev = t;
    }
    out.push(end - prev);
    out
}

/// Matrix exponential computed separately on each connected component of
/// the sparsity graph of `m`. The Lindblad generator only links coherences
/// `|i><j|` whose excitation numbers differ by the same amount, so it
/// splits into several much smaller blocks.
pub(crate) fn expm_blockwise(m: &CMatrix) -> CMatrix {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for c in 0..n {
        for r in 0..n {
            if r != c && m[(r, c)] != C64::new(0.0, 0.0) {
                let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }
    let mut out = CMatrix::zeros(n, n);
    for idx in groups.values() {
        let block = CMatrix::from_fn(idx.len(), idx.len(), |r, c| m[(idx[r], idx[c])]).exp();
        for (r, &gr) in idx.iter().enumerate() {
            for (c, &gc) in idx.iter().enumerate() {
                out[(gr, gc)] = block[(r, c)];
            }
        }
    }
    out
}

fn rotate_frame(rho: &CMatrix, free: &[f64], tau: f64) -> CMatrix {
    let phases: Vec<C64> = free.iter().map(|&f| (I * f * tau).exp()).collect();
    CMatrix::from_fn(rho.nrows(), rho.ncols(), |r, c| {
        rho[(r, c)] * phases[r] * phases[c].conj()
    })
}

fn reduced_physicality(rho: &CMatrix, subspace: &Subspace) -> Physicality {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let mut min_eig = SymmetricEigen::new(herm)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if !subspace.is_full() {
        min_eig = min_eig.min(0.0);
    }
    Physicality {
        trace_error: (rho.trace() - ONE).norm(),
        hermiticity_error: max_abs(&(rho - rho.adjoint())),
        min_eigenvalue: min_eig,
    }
}

impl Evolver {
    /// Prepares the generators of every segment for initial states carrying
    /// at most `max_excitations` quanta.
    pub fn new(
        layout: SpaceLayout,
        dev: &DeviceParams,
        schedule: &ControlSchedule,
        opts: SolverOptions,
        max_excitations: usize,
    ) -> Result<Self> {
        dev.validate()?;
        schedule.validate(dev)?;
        let pieces: Vec<(HamiltonianTerms, f64)> = schedule
            .segments
            .iter()
            .map(|seg| (HamiltonianTerms::from_params(dev, &seg.knobs), seg.duration_ns))
            .collect();
        let channels = model::dissipators_from(&OperatorSet::new(layout), dev);
        Evolver::from_terms(layout, &pieces, &channels, opts, max_excitations)
    }

    /// Like [`Evolver::new`] but with explicit Hamiltonian coefficients and
    /// loss channels per segment, e.g. to switch off individual couplings.
    pub fn from_terms(
        layout: SpaceLayout,
        pieces: &[(HamiltonianTerms, f64)],
        channels: &[Dissipator],
        opts: SolverOptions,
        max_excitations: usize,
    ) -> Result<Self> {
        opts.validate()?;
        if pieces.is_empty() {
            return Err(Error::DegenerateSchedule("no segments".into()));
        }
        if let Some((_, d)) = pieces.iter().find(|(_, d)| !(*d > 0.0 && d.is_finite())) {
            return Err(Error::DegenerateSchedule(format!("segment duration {d} ns")));
        }
        let subspace = if opts.restrict_excitations {
            Subspace::excitations_up_to(layout, max_excitations)
        } else {
            Subspace::full(layout)
        };
        let ops = OperatorSet::new(layout);
        let channels: Vec<(CMatrix, f64)> = channels
            .iter()
            .filter(|d| d.rate != 0.0)
            .map(|d| (subspace.reduce(d.operator.matrix()), d.rate))
            .collect();

        let mut start = 0.0;
        let mut segments = Vec::with_capacity(pieces.len());
        let mut cache: Vec<(HamiltonianTerms, f64, CMatrix)> = Vec::new();
        for &(terms, duration_ns) in pieces {
            let h = subspace.reduce(terms.rotating(&ops).matrix());
            let generator = Lindbladian::new(&h, channels.iter().cloned());
            let free = subspace.reduce_diag(&terms.free_diagonal(layout));

            let mut lengths: Vec<f64> = Vec::new();
            let mut steps = Vec::new();
            for len in plan_substeps(start, duration_ns, opts.sample_every_ns) {
                let prop = match lengths.iter().position(|&l| l == len) {
                    Some(p) => p,
                    None => {
                        lengths.push(len);
                        lengths.len() - 1
                    }
                };
                steps.push(Substep { len, prop });
            }
            let propagators = if opts.method == Method::Exact {
                let sup = generator.superoperator();
                lengths
                    .iter()
                    .map(|&l| {
                        let hit = cache.iter().find(|(k, len, _)| *k == terms && *len == l);
                        match hit {
                            Some((_, _, p)) => p.clone(),
                            None => {
                                let p = expm_blockwise(&(&sup * C64::new(l, 0.0)));
                                cache.push((terms, l, p.clone()));
                                p
                            }
                        }
                    })
                    .collect()
            } else {
                Vec::new()
            };
            segments.push(SegmentModel {
                start,
                duration: duration_ns,
                generator,
                free,
                steps,
                propagators,
            });
            start += duration_ns;
        }
        Ok(Evolver {
            layout,
            opts,
            subspace,
            segments,
        })
    }

    pub fn layout(&self) -> SpaceLayout {
        self.layout
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn advance(
        &self,
        seg_index: usize,
        seg: &SegmentModel,
        step: &Substep,
        tau: f64,
        rho: &CMatrix,
        h: &mut f64,
    ) -> Result<CMatrix> {
        let fail = |e: StepFailure| Error::Solver {
            segment: seg_index,
            time_ns: seg.start + e.t,
            reason: e.reason,
        };
        let f = |_t: f64, r: &CMatrix| seg.generator.apply(r);
        let out = match self.opts.method {
            Method::Exact => {
                let n = rho.nrows();
                let v = CVector::from_column_slice(rho.as_slice());
                let w = &seg.propagators[step.prop] * v;
                CMatrix::from_column_slice(n, n, w.as_slice())
            }
            Method::Rk4 { dt_ns } => ode::rk4(&f, tau, rho, tau + step.len, dt_ns),
            Method::Rk45 {
                atol,
                rtol,
                max_step_ns,
            } => {
                let cfg = Rk45Config {
                    atol,
                    rtol,
                    max_step: max_step_ns,
                };
                ode::rk45(&f, tau, rho, tau + step.len, &cfg, h).map_err(fail)?
            }
        };
        if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Solver {
                segment: seg_index,
                time_ns: seg.start + tau + step.len,
                reason: "non-finite state".into(),
            });
        }
        Ok(out)
    }

    fn drive<F>(&self, rho0: &DensityMatrix, mut record: F) -> Result<(CMatrix, Physicality)>
    where
        F: FnMut(f64, &CMatrix),
    {
        if rho0.layout() != self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total_dim(),
                found: rho0.layout().total_dim(),
            });
        }
        if !self.subspace.contains(rho0.matrix()) {
            return Err(Error::param(
                "rho0",
                "initial state carries more excitations than the evolver was prepared for",
            ));
        }
        let mut rho = self.subspace.reduce(rho0.matrix());
        let mut worst = reduced_physicality(&rho, &self.subspace);
        record(0.0, &rho);
        let mut h = 0.0;
        for (k, seg) in self.segments.iter().enumerate() {
            let mut tau = 0.0;
            for step in &seg.steps {
                rho = self.advance(k, seg, step, tau, &rho, &mut h)?;
                tau += step.len;
                let t = seg.start + tau;
                let shown = match self.opts.frame {
                    Frame::Rotating => rho.clone(),
                    Frame::SegmentInteraction => rotate_frame(&rho, &seg.free, tau),
                };
                let phys = reduced_physicality(&shown, &self.subspace);
                if self.opts.check_physicality && !phys.is_physical() {
                    return Err(Error::Solver {
                        segment: k,
                        time_ns: t,
                        reason: format!("unphysical state: {phys:?}"),
                    });
                }
                worst = worst.worst(phys);
                record(t, &shown);
            }
            if self.opts.frame == Frame::SegmentInteraction {
                rho = rotate_frame(&rho, &seg.free, seg.duration);
            }
        }
        Ok((rho, worst))
    }

    /// Full trajectory, sampled per the solver options.
    pub fn run(&self, rho0: &DensityMatrix) -> Result<Trajectory> {
        let mut times = Vec::new();
        let mut reduced = Vec::new();
        let (_, physicality) = self.drive(rho0, |t, r| {
            times.push(t);
            reduced.push(r.clone());
        })?;
        let mut trace = Vec::with_capacity(reduced.len());
        let mut purity = Vec::with_capacity(reduced.len());
        let states = reduced
            .iter()
            .map(|r| {
                trace.push(r.trace().re);
                purity.push((r * r).trace().re);
                DensityMatrix::from_matrix(self.layout, self.subspace.embed(r)).expect("embedding matches layout")
            })
            .collect();
        let mut observables = BTreeMap::new();
        observables.insert("trace".to_string(), trace);
        observables.insert("purity".to_string(), purity);
        Ok(Trajectory {
            times,
            states,
            observables,
            physicality,
        })
    }

    /// Final state only.
    pub fn final_state(&self, rho0: &DensityMatrix) -> Result<(DensityMatrix, Physicality)> {
        let (rho, phys) = self.drive(rho0, |_, _| {})?;
        let full =
            DensityMatrix::from_matrix(self.layout, self.subspace.embed(&rho)).expect("embedding matches layout");
        Ok((full, phys))
    }
}

/// Integrates the master equation over `schedule` starting from `rho0`.
pub fn evolve(
    rho0: &DensityMatrix,
    dev: &DeviceParams,
    schedule: &ControlSchedule,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    Evolver::new(rho0.layout(), dev, schedule, *opts, rho0.max_excitations())?.run(rho0)
}

/// Deterministic probe state spreading weight over all basis states with at
/// most two excitations.
pub fn probe_state(layout: SpaceLayout) -> PureState {
    let amps = CVector::from_iterator(
        layout.total_dim(),
        (0..layout.total_dim()).map(|k| {
            if layout.label(k).excitations() <= 2 {
                (I * 0.7 * k as f64).exp() * (1.0 + 0.3 * (k % 7) as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    );
    PureState::normalized(layout, amps).expect("probe has weight")
}

/// Largest amplitude deviation, over `t ∈ [0, t_span_ns]`, between the
/// closed-system rotating-frame evolution (mapped into the interaction
/// picture) and a direct integration of the explicitly time-dependent
/// interaction-picture Hamiltonian.
pub fn validate_frame(layout: SpaceLayout, dev: &DeviceParams, knobs: &ControlKnobs, t_span_ns: f64) -> Result<f64> {
    dev.validate()?;
    knobs.validate(dev)?;
    if !(t_span_ns > 0.0) {
        return Err(Error::param("t_span_ns", "must be > 0"));
    }
    let ops = OperatorSet::new(layout);
    let terms = HamiltonianTerms::from_params(dev, knobs);
    let psi0 = probe_state(layout);

    // Rotating frame: exact propagation through the eigenbasis of H.
    let eig = SymmetricEigen::new(terms.rotating(&ops).into_matrix());
    let coeffs = eig.eigenvectors.adjoint() * psi0.amplitudes();
    let free = terms.free_diagonal(layout);

    // Interaction picture: each coupling with its e^{iΔt} phase.
    let couplings: Vec<(f64, f64, CMatrix)> = [
        (terms.g_ge, terms.delta_ge, (&ops.a * &ops.raise_ge).into_matrix()),
        (terms.g_ef, terms.delta_ef, (&ops.a * &ops.raise_ef).into_matrix()),
        (
            terms.g_res[0],
            terms.delta_res[0],
            (&ops.b1.adjoint() * &ops.a).into_matrix(),
        ),
        (
            terms.g_res[1],
            terms.delta_res[1],
            (&ops.b2.adjoint() * &ops.a).into_matrix(),
        ),
    ]
    .into_iter()
    .filter(|(g, _, _)| *g != 0.0)
    .collect();
    let rhs = |t: f64, y: &CMatrix| {
        let mut out = CMatrix::zeros(y.nrows(), 1);
        for (g, d, m) in &couplings {
            let ph = (I * d * t).exp() * *g;
            out += (m * y) * ph + (m.adjoint() * y) * ph.conj();
        }
        out * C64::new(0.0, -1.0)
    };
    let cfg = Rk45Config {
        atol: 1e-12,
        rtol: 1e-12,
        max_step: 0.01,
    };

    let samples = 40;
    let mut psi_i = CMatrix::from_column_slice(layout.total_dim(), 1, psi0.amplitudes().as_slice());
    let mut h = 0.0;
    let mut worst: f64 = 0.0;
    for k in 1..=samples {
        let (t_prev, t) = (
            t_span_ns * (k - 1) as f64 / samples as f64,
            t_span_ns * k as f64 / samples as f64,
        );
        psi_i = ode::rk45(&rhs, t_prev, &psi_i, t, &cfg, &mut h).map_err(|e| Error::Solver {
            segment: 0,
            time_ns: e.t,
            reason: e.reason,
        })?;
        let phased = CVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(eig.eigenvalues.iter())
                .map(|(c, &e)| c * (I * (-e * t)).exp()),
        );
        let psi_rot = &eig.eigenvectors * phased;
        for (i, (&f, z)) in free.iter().zip(psi_rot.iter()).enumerate() {
            let mapped = z * (I * f * t).exp();
            worst = worst.max((mapped - psi_i[(i, 0)]).norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{basis_state, Level};
    use std::f64::consts::{PI, SQRT_2};

    fn layout() -> SpaceLayout {
        SpaceLayout::default()
    }

    fn one_segment(duration_ns: f64, knobs: ControlKnobs) -> ControlSchedule {
        ControlSchedule::new("test", vec![Segment { duration_ns, knobs }])
    }

    fn g_rad(mhz: f64) -> f64 {
        crate::units::mhz_to_rad_per_ns(mhz)
    }

    #[test]
    fn substeps_cover_the_segment() {
        let parts = plan_substeps(0.0, 10.0, Some(2.5));
        assert_eq!(parts, vec![2.5, 2.5, 2.5, 2.5]);
        let parts = plan_substeps(1.0, 3.2, Some(1.0));
        assert!((parts.iter().sum::<f64>() - 3.2).abs() < 1e-12);
        assert_eq!(parts.len(), 4);
        assert_eq!(plan_substeps(0.0, 4.0, None), vec![4.0]);
    }

    #[test]
    fn blockwise_exponential_matches_dense() {
        let dev = DeviceParams::default();
        let l = SpaceLayout::new([2, 2, 2]).unwrap();
        let sub = Subspace::excitations_up_to(l, 2);
        let ops = OperatorSet::new(l);
        let h = sub.reduce(
            HamiltonianTerms::from_params(&dev, &ControlKnobs::new(13.0, 7.0, 6.0))
                .rotating(&ops)
                .matrix(),
        );
        let ch: Vec<(CMatrix, f64)> = model::dissipators_from(&ops, &dev.clone().with_lifetimes(0.5, 0.3))
            .into_iter()
            .map(|d| (sub.reduce(d.operator.matrix()), d.rate))
            .collect();
        let sup = Lindbladian::new(&h, ch).superoperator() * C64::new(3.0, 0.0);
        assert!(max_abs(&(expm_blockwise(&sup) - sup.exp())) < 1e-12);
    }

    #[test]
    fn vacuum_is_stationary() {
        let psi = basis_state(layout(), 0, 0, 0, Level::G).unwrap();
        let dev = DeviceParams::reference();
        let s = ControlSchedule::new(
            "mix",
            vec![
                Segment {
                    duration_ns: 7.0,
                    knobs: ControlKnobs::new(50.0, 20.0, 6.65),
                },
                Segment {
                    duration_ns: 3.0,
                    knobs: ControlKnobs::new(0.0, 50.0, 7.37),
                },
            ],
        );
        let traj = evolve(&psi.projector(), &dev, &s, &SolverOptions::default().with_sampling(1.0)).unwrap();
        for rho in &traj.states {
            assert!((rho.expectation(&psi).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn resonant_swap_follows_cos_squared() {
        let l = layout();
        let dev = DeviceParams::reference();
        let psi = basis_state(l, 1, 0, 0, Level::G).unwrap();
        let bus = basis_state(l, 0, 1, 0, Level::G).unwrap();
        let s = one_segment(10.0, ControlKnobs::new(20.0, 0.0, 5.0));
        // Isolate the bus–resonator exchange from the detuned qutrit.
        let dev = DeviceParams { g_ge_mhz: 0.0, ..dev };
        let traj = evolve(
            &psi.projector(),
            &dev,
            &s,
            &SolverOptions::default().with_sampling(0.25),
        )
        .unwrap();
        let g = g_rad(20.0);
        for (t, rho) in traj.times.iter().zip(&traj.states) {
            assert!((rho.expectation(&psi).unwrap() - (g * t).cos().powi(2)).abs() < 1e-10);
            assert!((rho.expectation(&bus).unwrap() - (g * t).sin().powi(2)).abs() < 1e-10);
        }
    }

    #[test]
    fn chain_step_ends_in_minus_excited_qutrit() {
        let l = layout();
        let dev = DeviceParams::reference();
        let t = PI / (SQRT_2 * g_rad(13.0));
        let s = one_segment(t, ControlKnobs::new(13.0, 0.0, 6.65));
        let ev = Evolver::new(l, &dev, &s, SolverOptions::default(), 1).unwrap();
        // Superposition with the vacuum exposes the sign of the amplitude.
        let mut amps = CVector::zeros(l.total_dim());
        amps[l.index(0, 0, 0, Level::G).unwrap()] = C64::new(1.0, 0.0);
        amps[l.index(1, 0, 0, Level::G).unwrap()] = C64::new(1.0, 0.0);
        let psi = PureState::normalized(l, amps).unwrap();
        let (rho, _) = ev.final_state(&psi.projector()).unwrap();
        let mut want = CVector::zeros(l.total_dim());
        want[l.index(0, 0, 0, Level::G).unwrap()] = C64::new(1.0, 0.0);
        want[l.index(0, 0, 0, Level::E).unwrap()] = C64::new(-1.0, 0.0);
        let target = PureState::normalized(l, want).unwrap();
        // Leakage into e↔f is weak but nonzero at δ = 0.72 GHz.
        let f = rho.expectation(&target).unwrap();
        assert!(f > 0.999, "{f}");
    }

    #[test]
    fn amplitude_damping_is_exponential() {
        let l = layout();
        let dev = DeviceParams {
            kappa_1: 10.0,
            ..DeviceParams::reference()
        };
        let psi = basis_state(l, 1, 0, 0, Level::G).unwrap();
        // Purity of p|1><1| + (1-p)|0><0| falls only while p > 1/2, i.e. up
        // to t = ln 2 / κ ≈ 69 ns here.
        let s = one_segment(60.0, ControlKnobs::new(0.0, 0.0, 5.0));
        for method in [Method::Exact, Method::Rk4 { dt_ns: 0.01 }] {
            let traj = evolve(
                &psi.projector(),
                &dev,
                &s,
                &SolverOptions::default().with_method(method).with_sampling(10.0),
            )
            .unwrap();
            for (t, rho) in traj.times.iter().zip(&traj.states) {
                let want = (-0.01 * t).exp();
                assert!(
                    (rho.expectation(&psi).unwrap() - want).abs() < 1e-10,
                    "{method:?} t={t}"
                );
            }
            let purity = &traj.observables["purity"];
            assert!(purity.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn closed_system_conserves_energy() {
        let l = layout();
        let dev = DeviceParams::reference();
        let knobs = ControlKnobs::new(13.0, 30.0, 6.3);
        let s = one_segment(40.0, knobs);
        let h = build_hamiltonian(l, &dev, &knobs).unwrap();
        let rho0 = probe_state(l).projector();
        let opts = SolverOptions::default().with_frame(Frame::Rotating).with_sampling(2.0);
        let traj = evolve(&rho0, &dev, &s, &opts).unwrap();
        let e0 = rho0.expectation_op(&h).unwrap().re;
        let scale = h.max_abs();
        for rho in &traj.states {
            assert!((rho.expectation_op(&h).unwrap().re - e0).abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn frames_differ_only_by_free_phases() {
        let l = layout();
        let dev = DeviceParams::default();
        let s = one_segment(12.0, ControlKnobs::new(13.0, 0.0, 5.0));
        let rho0 = probe_state(l).projector();
        let rot = evolve(&rho0, &dev, &s, &SolverOptions::default().with_frame(Frame::Rotating)).unwrap();
        let int = evolve(&rho0, &dev, &s, &SolverOptions::default()).unwrap();
        let free = HamiltonianTerms::from_params(&dev, &s.segments[0].knobs).free_diagonal(l);
        let mapped = rotate_frame(rot.final_state().matrix(), &free, 12.0);
        assert!(max_abs(&(mapped - int.final_state().matrix())) < 1e-12);
    }

    #[test]
    fn methods_agree() {
        let l = layout();
        let dev = DeviceParams::default();
        let s = ControlSchedule::new(
            "two",
            vec![
                Segment {
                    duration_ns: 5.0,
                    knobs: ControlKnobs::new(50.0, 0.0, 5.0),
                },
                Segment {
                    duration_ns: 2.0,
                    knobs: ControlKnobs::new(0.0, 0.0, 7.37),
                },
            ],
        );
        let rho0 = probe_state(l).projector();
        let exact = evolve(&rho0, &dev, &s, &SolverOptions::default()).unwrap();
        let rk45 = evolve(
            &rho0,
            &dev,
            &s,
            &SolverOptions::default().with_method(Method::rk45_default()),
        )
        .unwrap();
        let rk4 = evolve(
            &rho0,
            &dev,
            &s,
            &SolverOptions::default().with_method(Method::rk4_default()),
        )
        .unwrap();
        let d45 = max_abs(&(exact.final_state().matrix() - rk45.final_state().matrix()));
        let d4 = max_abs(&(exact.final_state().matrix() - rk4.final_state().matrix()));
        assert!(d45 < 1e-7 && d4 < 1e-7, "rk45 {d45:e} rk4 {d4:e}");
    }

    #[test]
    fn full_space_matches_restricted_block() {
        let l = SpaceLayout::new([2, 2, 2]).unwrap();
        let dev = DeviceParams::default();
        let s = one_segment(6.0, ControlKnobs::new(30.0, 10.0, 6.65));
        let rho0 = probe_state(l).projector();
        let small = evolve(&rho0, &dev, &s, &SolverOptions::default()).unwrap();
        let opts = SolverOptions {
            restrict_excitations: false,
            ..SolverOptions::default()
        };
        let full = evolve(&rho0, &dev, &s, &opts).unwrap();
        assert!(max_abs(&(small.final_state().matrix() - full.final_state().matrix())) < 1e-12);
    }

    #[test]
    fn trajectory_times_increase_and_states_are_physical() {
        let l = layout();
        let dev = DeviceParams::default().with_lifetimes(1.0, 1.0);
        let s = one_segment(20.0, ControlKnobs::new(50.0, 50.0, 6.65));
        let traj = evolve(
            &probe_state(l).projector(),
            &dev,
            &s,
            &SolverOptions::default().with_sampling(0.7),
        )
        .unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!((traj.final_time() - 20.0).abs() < 1e-12);
        for rho in &traj.states {
            assert!(rho.physicality().is_physical());
        }
        assert!(traj.physicality.is_physical());
    }

    #[test]
    fn solver_failure_carries_time() {
        let l = layout();
        let s = one_segment(5.0, ControlKnobs::new(50.0, 0.0, 5.0));
        let m = Method::Rk45 {
            atol: 1e-300,
            rtol: 1e-300,
            max_step_ns: 0.01,
        };
        let err = evolve(
            &probe_state(l).projector(),
            &DeviceParams::default(),
            &s,
            &SolverOptions::default().with_method(m),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Solver { segment: 0, .. }), "{err}");
    }

    #[test]
    fn too_many_excitations_rejected() {
        let l = layout();
        let s = one_segment(5.0, ControlKnobs::new(50.0, 0.0, 5.0));
        let ev = Evolver::new(l, &DeviceParams::default(), &s, SolverOptions::default(), 1).unwrap();
        let psi = basis_state(l, 1, 0, 1, Level::G).unwrap();
        assert!(ev.final_state(&psi.projector()).is_err());
    }

    #[test]
    fn frame_validation() {
        let l = layout();
        let dev = DeviceParams::reference();
        let resonant = validate_frame(l, &dev, &ControlKnobs::new(13.0, 0.0, 6.65), 10.0).unwrap();
        assert!(resonant <= 1e-8, "{resonant}");
        let detuned = validate_frame(l, &dev, &ControlKnobs::new(50.0, 0.0, 5.0), 10.0).unwrap();
        assert!(detuned <= 1e-6, "{detuned}");
        let off = validate_frame(
            l,
            &DeviceParams { g_ge_mhz: 0.0, ..dev },
            &ControlKnobs::new(0.0, 0.0, 5.0),
            10.0,
        )
        .unwrap();
        assert!(off <= 1e-12, "{off}");
    }
}
