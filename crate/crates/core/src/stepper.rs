//! Explicit Euler time stepping of the full model and the run driver.
//!
//! One step computes, row by row and in parallel,
//! `F + dt * (A F D_theta + r * (B[F] - rho F / K))`, where `A` is the
//! second-difference matrix in `x` and `D_theta = diag(theta_j)`.

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::diagnostics::DiagnosticRecord;
use crate::error::{Error, Result};
use crate::grid::{build_grid, check_shape, init_field, population_size, DensityVector, Field, Grid};
use crate::params::{InitKind, Params, RightBoundary};
use crate::reproduction::{bruteforce_row_into, FastReproduction, ReproductionMethod, SegregationKernel};

/// Second difference in `x` with a zero-flux first row and a configurable
/// last row: `(1, -2)` for Dirichlet, `(1, -1)` for zero flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianStencil {
    pub inv_dx2: f64,
    pub boundary: RightBoundary,
}

impl LaplacianStencil {
    pub fn new(dx: f64, boundary: RightBoundary) -> Self {
        Self {
            inv_dx2: 1.0 / (dx * dx),
            boundary,
        }
    }

    /// Row `i` of `A v` given the neighbours of `cur`; `prev` is absent on
    /// the first row and `next` on the last.
    #[inline]
    pub fn at(&self, prev: Option<f64>, cur: f64, next: Option<f64>) -> f64 {
        let d = match (prev, next) {
            (Some(p), Some(n)) => p - 2.0 * cur + n,
            (None, Some(n)) => n - cur,
            (Some(p), None) => match self.boundary {
                RightBoundary::Dirichlet => p - 2.0 * cur,
                RightBoundary::Neumann => p - cur,
            },
            (None, None) => match self.boundary {
                RightBoundary::Dirichlet => -cur,
                RightBoundary::Neumann => 0.0,
            },
        };
        d * self.inv_dx2
    }

    /// `A v` for one column.
    pub fn apply_column(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        for i in 0..n {
            let prev = i.checked_sub(1).map(|p| v[p]);
            let next = (i + 1 < n).then(|| v[i + 1]);
            out[i] = self.at(prev, v[i], next);
        }
    }
}

/// The trait-weighted diffusion term `A F D_theta`.
pub fn apply_diffusion(field: &Field, grid: &Grid, boundary: RightBoundary) -> Result<Field> {
    check_shape(field.values.dim(), grid)?;
    let stencil = LaplacianStencil::new(grid.dx, boundary);
    let mut out = Array2::zeros(grid.shape());
    let mut col = vec![0.0; grid.nx()];
    let mut res = vec![0.0; grid.nx()];
    for (j, th) in grid.thetas.iter().enumerate() {
        for (c, v) in col.iter_mut().zip(field.values.column(j)) {
            *c = *v;
        }
        stencil.apply_column(&col, &mut res);
        for (o, r) in out.column_mut(j).iter_mut().zip(&res) {
            *o = th * r;
        }
    }
    Ok(Field { values: out })
}

/// Solver state after `step_index` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub step_index: u64,
    pub field: Field,
    pub rho: DensityVector,
    /// Smallest entry seen so far, including the initial data.
    pub min_value: f64,
}

/// Parameters, mesh and the precomputed operators of one simulation.
#[derive(Debug, Clone)]
pub struct Model {
    params: Params,
    grid: Grid,
    kernel: SegregationKernel,
    fast: FastReproduction,
    stencil: LaplacianStencil,
    method: ReproductionMethod,
}

impl Model {
    pub fn new(params: Params, method: ReproductionMethod) -> Result<Self> {
        let grid = build_grid(&params)?;
        let kernel = SegregationKernel::new(params.lambda2)?;
        let fast = FastReproduction::new(&kernel, &grid);
        let stencil = LaplacianStencil::new(params.dx, params.right_boundary);
        Ok(Self {
            params,
            grid,
            kernel,
            fast,
            stencil,
            method,
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn method(&self) -> ReproductionMethod {
        self.method
    }

    pub fn initial_state(&self, init: InitKind) -> SimState {
        self.state_from_field(init_field(init, &self.grid))
            .expect("initial data built on the model grid")
    }

    pub fn state_from_field(&self, field: Field) -> Result<SimState> {
        let rho = population_size(&field, &self.grid)?;
        let min_value = field.min_value();
        Ok(SimState {
            time: 0.0,
            step_index: 0,
            field,
            rho,
            min_value,
        })
    }

    /// Advances `state` by one Euler step.
    pub fn step(&self, state: &mut SimState) -> Result<()> {
        check_shape(state.field.values.dim(), &self.grid)?;
        let p = &self.params;
        let (nx, nt) = self.grid.shape();
        let f = &state.field.values;
        let rho = &state.rho.rho;
        let thetas = &self.grid.thetas;
        let mut next = Array2::<f64>::zeros((nx, nt));
        let bad = next
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .map_init(
                || (Vec::new(), vec![0.0; nt]),
                |(scratch, birth), (i, mut out)| {
                    let row = f.row(i);
                    let row = row.as_slice().expect("standard layout");
                    match self.method {
                        ReproductionMethod::Fast => self.fast.row_into(row, rho[i], birth, scratch),
                        ReproductionMethod::BruteForce => bruteforce_row_into(
                            row,
                            rho[i],
                            &self.kernel,
                            thetas,
                            self.grid.dtheta,
                            birth,
                        ),
                    }
                    let prev: Option<ArrayView1<f64>> = i.checked_sub(1).map(|q| f.row(q));
                    let below: Option<ArrayView1<f64>> = (i + 1 < nx).then(|| f.row(i + 1));
                    let out = out.as_slice_mut().expect("standard layout");
                    let mut first_bad = None;
                    for j in 0..nt {
                        let lap = self.stencil.at(prev.map(|r| r[j]), row[j], below.map(|r| r[j]));
                        let v = row[j]
                            + p.dt * (thetas[j] * lap + p.r * (birth[j] - rho[i] * row[j] / p.k));
                        if first_bad.is_none() && !v.is_finite() {
                            first_bad = Some((i, j));
                        }
                        out[j] = v;
                    }
                    first_bad
                },
            )
            .flatten()
            .min();
        let step = state.step_index + 1;
        let time = step as f64 * p.dt;
        if let Some((i, j)) = bad {
            return Err(Error::BlowUp { step, time, i, j });
        }
        let field = Field { values: next };
        state.rho = population_size(&field, &self.grid)?;
        state.min_value = state.min_value.min(field.min_value());
        state.field = field;
        state.step_index = step;
        state.time = time;
        Ok(())
    }
}

/// Functional form of [`Model::step`].
pub fn euler_step(model: &Model, state: &SimState) -> Result<SimState> {
    let mut next = state.clone();
    model.step(&mut next)?;
    Ok(next)
}

/// Events emitted by [`run_observed`] in time order.
pub enum RunEvent<'a> {
    /// A diagnostic record; when `snapshot` is set the state is also a snapshot.
    Record(&'a DiagnosticRecord, &'a SimState),
}

/// Step numbers at which diagnostics and snapshots are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub total_steps: u64,
    pub diagnostic_steps: BTreeSet<u64>,
    pub snapshot_steps: BTreeSet<u64>,
}

impl Schedule {
    /// Diagnostics every `diagnostic_dt` and at every snapshot. Snapshots at
    /// each output time not beyond `t_end`, and always at `t_end`.
    pub fn new(params: &Params) -> Self {
        let total_steps = params.steps_for(params.t_end);
        let mut snapshot_steps: BTreeSet<u64> = params
            .output_times
            .iter()
            .map(|t| params.steps_for(*t))
            .filter(|s| *s <= total_steps)
            .collect();
        snapshot_steps.insert(total_steps);
        let stride = params.steps_for(params.diagnostic_dt).max(1);
        let mut diagnostic_steps: BTreeSet<u64> = (0..=total_steps).step_by(stride as usize).collect();
        diagnostic_steps.extend(snapshot_steps.iter().copied());
        Self {
            total_steps,
            diagnostic_steps,
            snapshot_steps,
        }
    }
}

/// Runs to `t_end`, calling `observer` at every scheduled step.
/// The returned state is the final one.
pub fn run_observed<F>(model: &Model, mut state: SimState, mut observer: F) -> Result<SimState>
where
    F: FnMut(RunEvent<'_>) -> Result<()>,
{
    let p = model.params();
    let schedule = Schedule::new(p);
    let mut snapshots = 0usize;
    loop {
        let s = state.step_index;
        if schedule.diagnostic_steps.contains(&s) {
            let mut rec = DiagnosticRecord::measure(
                state.time,
                &state.field,
                &state.rho,
                model.grid(),
                p.front_threshold,
                state.min_value,
            );
            if schedule.snapshot_steps.contains(&s) {
                rec.snapshot = Some(snapshots);
                snapshots += 1;
            }
            observer(RunEvent::Record(&rec, &state))?;
        }
        if s >= schedule.total_steps {
            return Ok(state);
        }
        model.step(&mut state)?;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub step: u64,
    pub field: Field,
    pub rho: DensityVector,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_state: SimState,
    pub records: Vec<DiagnosticRecord>,
    pub snapshots: Vec<Snapshot>,
}

/// Runs a model from the given initial data and keeps everything in memory.
pub fn run(model: &Model, init: InitKind) -> Result<RunOutput> {
    let mut records = Vec::new();
    let mut snapshots = Vec::new();
    let final_state = run_observed(model, model.initial_state(init), |ev| {
        let RunEvent::Record(rec, st) = ev;
        if rec.snapshot.is_some() {
            snapshots.push(Snapshot {
                time: st.time,
                step: st.step_index,
                field: st.field.clone(),
                rho: st.rho.clone(),
            });
        }
        records.push(rec.clone());
        Ok(())
    })?;
    Ok(RunOutput {
        final_state,
        records,
        snapshots,
    })
}

/// Successive-refinement error ratios. For a first-order method in time the
/// time ratio tends to 2; for a second-order stencil the space ratio to 4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub horizon: f64,
    /// `|F_dt - F_dt/2|`, `|F_dt/2 - F_dt/4|` in the max norm at the horizon.
    pub time_errors: [f64; 2],
    pub time_ratio: f64,
    /// Same for `rho` with `dx`, `dx/2`, `dx/4`, compared on the coarse mesh.
    pub space_errors: [f64; 2],
    pub space_ratio: f64,
    /// Time step used for the spatial study.
    pub space_dt: f64,
}

fn final_state(params: &Params, init: InitKind, method: ReproductionMethod) -> Result<SimState> {
    let model = Model::new(params.clone(), method)?;
    let mut state = model.initial_state(init);
    for _ in 0..params.steps_for(params.t_end) {
        model.step(&mut state)?;
    }
    Ok(state)
}

fn max_diff<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Refines `dt` and then `dx` twice, integrating to `horizon` each time.
pub fn convergence_study(
    params: &Params,
    init: InitKind,
    horizon: f64,
    method: ReproductionMethod,
) -> Result<ConvergenceReport> {
    let base = Params {
        t_end: horizon,
        output_times: Vec::new(),
        ..params.clone()
    };
    let time_runs: Vec<SimState> = [1.0, 0.5, 0.25]
        .iter()
        .map(|s| {
            final_state(
                &Params {
                    dt: base.dt * s,
                    ..base.clone()
                },
                init,
                method,
            )
        })
        .collect::<Result<_>>()?;
    let e1 = max_diff(time_runs[0].field.values.iter(), time_runs[1].field.values.iter());
    let e2 = max_diff(time_runs[1].field.values.iter(), time_runs[2].field.values.iter());

    let fine = Params {
        dx: base.dx / 4.0,
        ..base.clone()
    };
    let space_dt = base.dt.min(0.5 * fine.cfl_limit());
    let space_runs: Vec<SimState> = [1.0, 0.5, 0.25]
        .iter()
        .map(|s| {
            final_state(
                &Params {
                    dx: base.dx * s,
                    dt: space_dt,
                    ..base.clone()
                },
                init,
                method,
            )
        })
        .collect::<Result<_>>()?;
    let coarse = |st: &SimState, stride: usize| -> Vec<f64> {
        st.rho.rho.iter().step_by(stride).copied().collect()
    };
    let r0 = coarse(&space_runs[0], 1);
    let r1 = coarse(&space_runs[1], 2);
    let r2 = coarse(&space_runs[2], 4);
    let s1 = max_diff(r0.iter(), r1.iter());
    let s2 = max_diff(r1.iter(), r2.iter());
    Ok(ConvergenceReport {
        horizon,
        time_errors: [e1, e2],
        time_ratio: e1 / e2,
        space_errors: [s1, s2],
        space_ratio: s1 / s2,
        space_dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reproduction::SegregationKernel;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn small_params(nx: usize, ntheta: usize, dtheta: f64) -> Params {
        Params {
            x_max: 4.0 * (nx as f64 - 1.0),
            dtheta,
            theta_max: 1.0 + dtheta * (ntheta as f64 - 1.0),
            t_end: 1.0,
            output_times: vec![],
            ..Params::default()
        }
    }

    #[test]
    fn stencil_examples() {
        let s = LaplacianStencil::new(2.0, RightBoundary::Dirichlet);
        let mut out = vec![0.0; 5];
        s.apply_column(&[3.0; 5], &mut out);
        assert_eq!(out, vec![0.0, 0.0, 0.0, 0.0, -0.75]);
        let lin: Vec<f64> = (0..5).map(|i| 2.0 * i as f64).collect();
        s.apply_column(&lin, &mut out);
        assert_eq!(&out[..4], &[0.5, 0.0, 0.0, 0.0]);
        assert_eq!(out[4], (6.0 - 16.0) / 4.0);
        s.apply_column(&[0.0, 0.0, 4.0, 0.0, 0.0], &mut out);
        assert_eq!(out, vec![0.0, 1.0, -2.0, 1.0, 0.0]);
        let n = LaplacianStencil::new(2.0, RightBoundary::Neumann);
        n.apply_column(&[3.0; 5], &mut out);
        assert_eq!(out, vec![0.0; 5]);
    }

    proptest! {
        #[test]
        fn zero_flux_diffusion_conserves_column_sums(vals in prop::collection::vec(0.0..10.0f64, 12)) {
            let p = Params { right_boundary: RightBoundary::Neumann, ..small_params(4, 3, 0.5) };
            let g = build_grid(&p).unwrap();
            let f = Field { values: Array2::from_shape_vec((4, 3), vals).unwrap() };
            let d = apply_diffusion(&f, &g, RightBoundary::Neumann).unwrap();
            for col in d.values.columns() {
                prop_assert!(col.sum().abs() <= 1e-12 * (1.0 + f.values.sum()));
            }
        }

        #[test]
        fn diffusion_is_linear(a in prop::collection::vec(-5.0..5.0f64, 15),
                               b in prop::collection::vec(-5.0..5.0f64, 15),
                               s in -3.0..3.0f64) {
            let p = small_params(5, 3, 0.5);
            let g = build_grid(&p).unwrap();
            let fa = Field { values: Array2::from_shape_vec((5, 3), a).unwrap() };
            let fb = Field { values: Array2::from_shape_vec((5, 3), b).unwrap() };
            let comb = Field { values: &fa.values * s + &fb.values };
            let lhs = apply_diffusion(&comb, &g, RightBoundary::Dirichlet).unwrap().values;
            let rhs = apply_diffusion(&fa, &g, RightBoundary::Dirichlet).unwrap().values * s
                + apply_diffusion(&fb, &g, RightBoundary::Dirichlet).unwrap().values;
            for (x, y) in lhs.iter().zip(rhs.iter()) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn zero_field_stays_zero() {
        let model = Model::new(small_params(6, 10, 0.5), ReproductionMethod::Fast).unwrap();
        let mut st = model.state_from_field(Field::zeros(model.grid())).unwrap();
        for _ in 0..5 {
            model.step(&mut st).unwrap();
        }
        assert!(st.field.values.iter().all(|v| *v == 0.0));
    }

    /// `rho = K` with a centred Gaussian of variance `2 lambda^2` in trait is
    /// a fixed point of the reaction term; zero-flux in `x` removes diffusion.
    #[test]
    fn homogeneous_equilibrium_is_stationary() {
        let p = Params {
            right_boundary: RightBoundary::Neumann,
            ..small_params(5, 121, 0.25)
        };
        let model = Model::new(p.clone(), ReproductionMethod::Fast).unwrap();
        let g = model.grid();
        let var = 2.0 * p.lambda2;
        let m = 16.0;
        let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
        let values = Array2::from_shape_fn(g.shape(), |(_, j)| {
            p.k * norm * (-(g.thetas[j] - m).powi(2) / (2.0 * var)).exp()
        });
        let f0 = Field { values };
        let mut st = model.state_from_field(f0.clone()).unwrap();
        assert_relative_eq!(st.rho.rho[0], p.k, max_relative = 1e-12);
        for _ in 0..10 {
            model.step(&mut st).unwrap();
        }
        let peak = f0.values.iter().copied().fold(0.0, f64::max);
        let drift = max_diff(st.field.values.iter(), f0.values.iter());
        assert!(drift <= 1e-6 * peak, "drift {drift}");
    }

    /// Hand-computed first step from a single occupied cell.
    #[test]
    fn dirac_first_step() {
        let p = small_params(6, 12, 0.5);
        let model = Model::new(p.clone(), ReproductionMethod::Fast).unwrap();
        let g = model.grid().clone();
        let st0 = model.initial_state(InitKind::Dirac);
        let st1 = euler_step(&model, &st0).unwrap();
        let m = 1.0 / (g.dx * g.dtheta);
        let rho0 = m * g.dtheta;
        let kern = SegregationKernel::new(p.lambda2).unwrap();
        let th0 = g.thetas[0];
        let (dt, dx2) = (p.dt, g.dx * g.dx);
        for i in 0..g.nx() {
            for j in 0..g.ntheta() {
                let expected = match (i, j) {
                    (0, 0) => m + dt * (-th0 * m / dx2 + p.r * (m * g.dtheta * kern.evaluate(0.0) - rho0 * m / p.k)),
                    (0, _) => dt * p.r * m * g.dtheta * kern.evaluate(g.thetas[j] - th0),
                    (1, 0) => dt * th0 * m / dx2,
                    _ => 0.0,
                };
                let got = st1.field.values[[i, j]];
                assert!((got - expected).abs() <= 1e-13 * (1.0 + expected.abs()), "({i},{j}): {got} vs {expected}");
            }
        }
        assert_eq!(st1.step_index, 1);
        assert_relative_eq!(st1.time, p.dt);
    }

    #[test]
    fn fast_and_brute_agree_over_a_run() {
        let p = small_params(8, 14, 2.0 / 3.0);
        let fast = Model::new(p.clone(), ReproductionMethod::Fast).unwrap();
        let brute = Model::new(p, ReproductionMethod::BruteForce).unwrap();
        let a = run(&fast, InitKind::Gaussian).unwrap().final_state;
        let b = run(&brute, InitKind::Gaussian).unwrap().final_state;
        assert_eq!(a.step_index, 50);
        let d = max_diff(a.rho.rho.iter(), b.rho.rho.iter());
        assert!(d <= 1e-8, "{d}");
    }

    #[test]
    fn time_refinement_is_first_order() {
        let p = small_params(12, 30, 0.5);
        let rep = convergence_study(&p, InitKind::Gaussian, 1.0, ReproductionMethod::Fast).unwrap();
        assert!(
            (1.8..=2.2).contains(&rep.time_ratio),
            "ratio {} from {:?}",
            rep.time_ratio,
            rep.time_errors
        );
    }

    #[test]
    fn zero_horizon_gives_one_snapshot() {
        let p = Params {
            t_end: 0.0,
            output_times: vec![],
            ..small_params(4, 5, 0.5)
        };
        let model = Model::new(p, ReproductionMethod::Fast).unwrap();
        let out = run(&model, InitKind::Gaussian).unwrap();
        assert_eq!(out.snapshots.len(), 1);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.snapshots[0].field, init_field(InitKind::Gaussian, model.grid()));
    }

    #[test]
    fn schedule_examples() {
        let p = Params {
            t_end: 1.0,
            output_times: vec![0.5, 2.0],
            diagnostic_dt: 0.3,
            ..small_params(4, 5, 0.5)
        };
        let s = Schedule::new(&p);
        assert_eq!(s.total_steps, 50);
        assert_eq!(s.snapshot_steps.iter().copied().collect::<Vec<_>>(), vec![25, 50]);
        assert!(s.diagnostic_steps.contains(&0) && s.diagnostic_steps.contains(&15));
        assert!(s.diagnostic_steps.contains(&25) && s.diagnostic_steps.contains(&50));
    }

    #[test]
    fn runs_are_deterministic() {
        let p = small_params(10, 20, 0.5);
        let model = Model::new(p, ReproductionMethod::Fast).unwrap();
        let a = run(&model, InitKind::Gaussian).unwrap();
        let b = run(&model, InitKind::Gaussian).unwrap();
        assert_eq!(a.final_state, b.final_state);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn overflow_is_reported_as_blow_up() {
        let p = small_params(4, 5, 0.5);
        let model = Model::new(p, ReproductionMethod::Fast).unwrap();
        let mut f = Field::zeros(model.grid());
        f.values[[2, 3]] = 1e300;
        let mut st = model.state_from_field(f).unwrap();
        match model.step(&mut st) {
            Err(Error::BlowUp { step, i, .. }) => assert_eq!((step, i), (1, 2)),
            other => panic!("{other:?}"),
        }
    }
}
