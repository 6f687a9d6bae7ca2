//! Measured quantities of a run: front positions, mean trait at the front,
//! power-law fits, rescaled profiles and the Hopf-Cole transform.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::grid::{DensityVector, Field, Grid};

/// Mesh point whose population size is closest to the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontPosition {
    pub x: f64,
    pub index: usize,
    /// False when the density vanishes identically; `x` is then 0.
    pub defined: bool,
}

/// `argmin_i |rho_i - threshold|`, ties broken by the smallest index.
pub fn front_position(rho: &[f64], grid: &Grid, threshold: f64) -> FrontPosition {
    if rho.iter().all(|v| *v == 0.0) {
        return FrontPosition {
            x: 0.0,
            index: 0,
            defined: false,
        };
    }
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (i, r) in rho.iter().enumerate() {
        let gap = (r - threshold).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    FrontPosition {
        x: grid.xs[best],
        index: best,
        defined: true,
    }
}

/// Mean trait of the local distribution at spatial index `index`.
pub fn mean_trait_at(field: &Field, grid: &Grid, index: usize) -> Result<f64> {
    if index >= grid.nx() {
        return Err(Error::Shape {
            expected: format!("x index < {}", grid.nx()),
            found: index.to_string(),
        });
    }
    let row = field.values.row(index);
    let mass: f64 = row.sum();
    if !(mass > 0.0) {
        return Err(Error::Undefined(format!(
            "mean trait at x = {}: local mass is {mass}",
            grid.xs[index]
        )));
    }
    let moment: f64 = row.iter().zip(&grid.thetas).map(|(f, th)| f * th).sum();
    Ok(moment / mass)
}

/// Trait variance of the local distribution at `index` (rectangle rule).
pub fn trait_variance_at(field: &Field, grid: &Grid, index: usize) -> Result<f64> {
    let mean = mean_trait_at(field, grid, index)?;
    let row = field.values.row(index);
    let mass: f64 = row.sum();
    let m2: f64 = row
        .iter()
        .zip(&grid.thetas)
        .map(|(f, th)| f * (th - mean) * (th - mean))
        .sum();
    Ok(m2 / mass)
}

/// Largest `x` where the piecewise-linear interpolant of `rho` equals 1/2.
pub fn half_front(rho: &[f64], grid: &Grid) -> Option<f64> {
    let s: Vec<f64> = rho.iter().map(|r| r - 0.5).collect();
    for i in (0..s.len().saturating_sub(1)).rev() {
        let (a, b) = (s[i], s[i + 1]);
        if b == 0.0 {
            return Some(grid.xs[i + 1]);
        }
        if a * b < 0.0 {
            return Some(grid.xs[i] + a / (a - b) * (grid.xs[i + 1] - grid.xs[i]));
        }
    }
    match s.first() {
        Some(v) if *v == 0.0 => Some(grid.xs[0]),
        _ => None,
    }
}

/// `y = C t^p` fitted by least squares in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub n_points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.prefactor * t.powf(self.exponent)
    }
}

/// Points of `(ts, ys)` with `t` in `window`, checked positive and finite.
fn window_points(ts: &[f64], ys: &[f64], window: (f64, f64), min_points: usize) -> Result<Vec<(f64, f64)>> {
    if ts.len() != ys.len() {
        return Err(Error::Shape {
            expected: format!("{} values", ts.len()),
            found: format!("{} values", ys.len()),
        });
    }
    let (lo, hi) = window;
    let slack = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(ys)
        .filter(|(t, _)| **t >= lo - slack && **t <= hi + slack)
        .map(|(t, y)| (*t, *y))
        .collect();
    let bad: Vec<String> = pts
        .iter()
        .filter(|(t, y)| !(*y > 0.0 && y.is_finite() && *t > 0.0))
        .map(|(t, _)| t.to_string())
        .collect();
    if !bad.is_empty() {
        return Err(Error::Domain(format!(
            "non-positive or non-finite values at t = {}",
            bad.join(", ")
        )));
    }
    if pts.len() < min_points {
        return Err(Error::Domain(format!(
            "need at least {min_points} points in [{lo}, {hi}], found {}",
            pts.len()
        )));
    }
    Ok(pts)
}

/// Least-squares prefactor `C` of `y = C t^p` with `p` held fixed, i.e. the
/// geometric mean of `y / t^p` over the window.
pub fn fixed_exponent_prefactor(ts: &[f64], ys: &[f64], exponent: f64, window: (f64, f64)) -> Result<f64> {
    let pts = window_points(ts, ys, window, 1)?;
    let mean = pts.iter().map(|(t, y)| y.ln() - exponent * t.ln()).sum::<f64>() / pts.len() as f64;
    Ok(mean.exp())
}

/// Ordinary least squares of `ln y` on `ln t` over the points with `t` in
/// `window` (inclusive, with a relative slack of 1e-9 for accumulated times).
pub fn loglog_fit(ts: &[f64], ys: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    let pts = window_points(ts, ys, window, 3)?;
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|(_, y)| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all fit times coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(PowerLawFit {
        prefactor: intercept.exp(),
        exponent: slope,
        r_squared,
        window,
        n_points: pts.len(),
    })
}

/// Pairs `(x t^{-5/4}, rho)`.
pub fn self_similar_profile(rho: &[f64], grid: &Grid, t: f64) -> Vec<(f64, f64)> {
    let scale = t.powf(-1.25);
    grid.xs.iter().zip(rho).map(|(x, r)| (x * scale, *r)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeProfile {
    /// `(x, ln max_theta f)` for every mesh point strictly beyond the front.
    pub points: Vec<(f64, f64)>,
    /// Mesh points beyond the front whose maximum was not positive.
    pub omitted: usize,
}

pub fn amplitude_profile(field: &Field, grid: &Grid, front_x: f64) -> AmplitudeProfile {
    let mut points = Vec::new();
    let mut omitted = 0;
    for (i, x) in grid.xs.iter().enumerate() {
        if *x <= front_x {
            continue;
        }
        let m = field
            .values
            .row(i)
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if m > 0.0 {
            points.push((*x, m.ln()));
        } else {
            omitted += 1;
        }
    }
    AmplitudeProfile { points, omitted }
}

/// Pairs `((x - X_half) t^{-1/4}, rho)`.
pub fn rescaled_shape(rho: &[f64], grid: &Grid, t: f64) -> Result<Vec<(f64, f64)>> {
    let x_half = half_front(rho, grid)
        .ok_or_else(|| Error::Undefined(format!("half-density front at t = {t}")))?;
    let scale = t.powf(-0.25);
    Ok(grid
        .xs
        .iter()
        .zip(rho)
        .map(|(x, r)| ((x - x_half) * scale, *r))
        .collect())
}

/// `u(y, eta) = -ln f / t` on `y = x t^{-5/4}`, `eta = theta t^{-1/2}`.
#[derive(Debug, Clone)]
pub struct HopfCole {
    pub ys: Vec<f64>,
    pub etas: Vec<f64>,
    /// NaN where `f <= 0`.
    pub u: Array2<f64>,
    pub masked: usize,
}

pub fn hopf_cole(field: &Field, grid: &Grid, t: f64) -> Result<HopfCole> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("Hopf-Cole transform needs t > 0, got {t}")));
    }
    let ys = grid.xs.iter().map(|x| x * t.powf(-1.25)).collect();
    let etas = grid.thetas.iter().map(|th| th * t.powf(-0.5)).collect();
    let mut masked = 0;
    let u = field.values.mapv(|f| {
        if f > 0.0 {
            -f.ln() / t
        } else {
            masked += 1;
            f64::NAN
        }
    });
    Ok(HopfCole {
        ys,
        etas,
        u,
        masked,
    })
}

/// Linear interpolation of a profile sorted by abscissa; `None` outside.
fn interpolate(profile: &[(f64, f64)], y: f64) -> Option<f64> {
    let first = profile.first()?;
    let last = profile.last()?;
    if y < first.0 || y > last.0 {
        return None;
    }
    let idx = profile.partition_point(|(a, _)| *a < y);
    if idx == 0 {
        return Some(first.1);
    }
    let (a0, v0) = profile[idx - 1];
    let (a1, v1) = profile[idx.min(profile.len() - 1)];
    if a1 == a0 {
        return Some(v1);
    }
    Some(v0 + (y - a0) / (a1 - a0) * (v1 - v0))
}

/// Sup-distance between two profiles over their common abscissa range,
/// sampled at the union of both sets of abscissae.
pub fn sup_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    a.iter()
        .chain(b)
        .filter_map(|(y, _)| Some((interpolate(a, *y)? - interpolate(b, *y)?).abs()))
        .fold(0.0, f64::max)
}

/// Front diagnostics at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub x_num: f64,
    pub front_index: usize,
    pub front_defined: bool,
    /// NaN when the local mass at the front vanishes.
    pub theta_bar: f64,
    /// NaN when `rho` never crosses 1/2.
    pub x_half: f64,
    pub min_field: f64,
    /// Largest density beyond the front.
    pub max_ahead: f64,
    /// Index into the run's snapshot list when a snapshot was taken at `t`.
    pub snapshot: Option<usize>,
}

impl DiagnosticRecord {
    pub fn measure(
        t: f64,
        field: &Field,
        rho: &DensityVector,
        grid: &Grid,
        threshold: f64,
        min_field: f64,
    ) -> Self {
        let rho = rho.as_slice();
        let front = front_position(rho, grid, threshold);
        let theta_bar = if front.defined {
            mean_trait_at(field, grid, front.index).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        let max_ahead = field
            .values
            .rows()
            .into_iter()
            .skip(front.index + 1)
            .flat_map(|r| r.into_iter().copied().collect::<Vec<_>>())
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            t,
            x_num: front.x,
            front_index: front.index,
            front_defined: front.defined,
            theta_bar,
            x_half: half_front(rho, grid).unwrap_or(f64::NAN),
            min_field,
            max_ahead,
            snapshot: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid_with(nx: usize, dx: f64) -> Grid {
        Grid {
            xs: (0..nx).map(|i| i as f64 * dx).collect(),
            thetas: (0..5).map(|j| 1.0 + j as f64 * 0.5).collect(),
            dx,
            dtheta: 0.5,
        }
    }

    #[test]
    fn front_examples() {
        let g = grid_with(4, 4.0);
        let f = front_position(&[1.0, 0.6, 0.01, 0.0], &g, 0.01);
        assert_eq!((f.x, f.index, f.defined), (8.0, 2, true));
        let f = front_position(&[1.0, 0.02, 0.0, 0.0], &g, 0.01);
        assert_eq!(f.x, 4.0);
        let f = front_position(&[0.0; 4], &g, 0.01);
        assert!(!f.defined);
        assert_eq!(f.x, 0.0);
    }

    proptest! {
        #[test]
        fn front_monotone_in_threshold(mut rho in prop::collection::vec(0.0..1.5f64, 2..40),
                                       t1 in 0.001..1.0f64, t2 in 0.001..1.0f64) {
            rho.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let g = grid_with(rho.len(), 1.0);
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = front_position(&rho, &g, lo);
            let b = front_position(&rho, &g, hi);
            prop_assert!(b.x <= a.x);
        }

        #[test]
        fn mean_trait_scale_invariant(row in prop::collection::vec(0.01..3.0f64, 5), s in 0.01..100.0f64) {
            let g = grid_with(1, 1.0);
            let f = Field { values: Array2::from_shape_vec((1, 5), row.clone()).unwrap() };
            let fs = Field { values: f.values.mapv(|v| v * s) };
            let a = mean_trait_at(&f, &g, 0).unwrap();
            let b = mean_trait_at(&fs, &g, 0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }

        #[test]
        fn loglog_recovers_power_laws(c in 0.01..100.0f64, p in -3.0..3.0f64) {
            let ts: Vec<f64> = (1..=30).map(|i| 2.0 * i as f64).collect();
            let ys: Vec<f64> = ts.iter().map(|t| c * t.powf(p)).collect();
            let fit = loglog_fit(&ts, &ys, (1.0, 100.0)).unwrap();
            prop_assert!((fit.prefactor - c).abs() <= 1e-12 * c);
            prop_assert!((fit.exponent - p).abs() <= 1e-12);
            prop_assert!((fit.r_squared - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn mean_trait_examples() {
        let g = grid_with(1, 1.0);
        let mut f = Field {
            values: Array2::zeros((1, 5)),
        };
        f.values[[0, 3]] = 7.0;
        assert_eq!(mean_trait_at(&f, &g, 0).unwrap(), g.thetas[3]);
        let mut f = Field {
            values: Array2::zeros((1, 5)),
        };
        f.values[[0, 1]] = 2.0;
        f.values[[0, 3]] = 2.0;
        assert_relative_eq!(mean_trait_at(&f, &g, 0).unwrap(), g.thetas[2], epsilon = 1e-15);
        let zero = Field {
            values: Array2::zeros((1, 5)),
        };
        assert!(matches!(mean_trait_at(&zero, &g, 0), Err(Error::Undefined(_))));
    }

    #[test]
    fn half_front_examples() {
        let g = grid_with(13, 4.0);
        // crossing between x = 40 and 44 at ratio 1/4
        let mut rho = vec![1.0; 13];
        rho[10] = 0.6;
        rho[11] = 0.2;
        rho[12] = 0.0;
        assert_relative_eq!(half_front(&rho, &g).unwrap(), 41.0, epsilon = 1e-12);
        assert_eq!(half_front(&[1.0; 13], &g), None);
        // two crossings: the larger one wins
        let rho2 = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_relative_eq!(half_front(&rho2, &g).unwrap(), 18.0, epsilon = 1e-12);
    }

    #[test]
    fn loglog_exact_and_errors() {
        let ts: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 * t * t).collect();
        let fit = loglog_fit(&ts, &ys, (1.0, 10.0)).unwrap();
        assert_relative_eq!(fit.prefactor, 3.0, max_relative = 1e-12);
        assert_relative_eq!(fit.exponent, 2.0, epsilon = 1e-12);
        assert_eq!(fit.r_squared, 1.0);
        assert_eq!(fit.n_points, 10);

        let mut bad = ys.clone();
        bad[4] = 0.0;
        bad[6] = -1.0;
        let err = loglog_fit(&ts, &bad, (1.0, 10.0)).unwrap_err().to_string();
        assert!(err.contains("t = 5, 7"), "{err}");
        assert!(loglog_fit(&ts, &ys, (1.0, 2.0)).is_err());
    }

    #[test]
    fn self_similar_identity_at_unit_time() {
        let g = grid_with(6, 4.0);
        let rho = [1.0, 0.9, 0.5, 0.2, 0.1, 0.0];
        let prof = self_similar_profile(&rho, &g, 1.0);
        for ((y, r), (x, r0)) in prof.iter().zip(g.xs.iter().zip(rho)) {
            assert_eq!(*y, *x);
            assert_eq!(*r, r0);
        }
    }

    /// A family `rho(t, x) = h(x t^{-5/4})` collapses exactly in `y`.
    #[test]
    fn self_similar_collapse_of_synthetic_family() {
        let h = |y: f64| 1.0 / (1.0 + (4.0 * (y - 2.0)).exp());
        let g = grid_with(2000, 0.5);
        let t1: f64 = 20.0;
        let t2 = 2f64.powf(0.8) * t1;
        for t in [t1, t2] {
            let rho: Vec<f64> = g.xs.iter().map(|x| h(x * t.powf(-1.25))).collect();
            for (y, r) in self_similar_profile(&rho, &g, t) {
                assert!((r - h(y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rescaled_shape_of_synthetic_family() {
        let phi = |z: f64| 0.5 * (1.0 - (z).tanh());
        let g = grid_with(4000, 0.25);
        for t in [1.0f64, 16.0, 81.0] {
            let front = 300.0 + 3.0 * t;
            let rho: Vec<f64> = g.xs.iter().map(|x| phi((x - front) / t.powf(0.25))).collect();
            let shape = rescaled_shape(&rho, &g, t).unwrap();
            let x_half = half_front(&rho, &g).unwrap();
            // interpolation error of the half-front only, then exact in z
            assert!((x_half - front).abs() < 1e-3);
            for (z, r) in shape {
                let back = z * t.powf(0.25) + x_half;
                assert!((r - phi((back - front) / t.powf(0.25))).abs() <= 1e-12 + 1e-3);
            }
        }
        assert!(rescaled_shape(&vec![1.0; 4000], &g, 2.0).is_err());
    }

    #[test]
    fn rescaled_shape_is_recentering_at_unit_time() {
        let g = grid_with(13, 4.0);
        let mut rho = vec![1.0; 13];
        rho[10] = 0.6;
        rho[11] = 0.2;
        rho[12] = 0.0;
        let shape = rescaled_shape(&rho, &g, 1.0).unwrap();
        for ((z, _), x) in shape.iter().zip(&g.xs) {
            assert_relative_eq!(*z, x - 41.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn amplitude_examples() {
        let g = grid_with(4, 4.0);
        let mut f = Field {
            values: Array2::zeros((4, 5)),
        };
        f.values[[2, 1]] = (-5.0f64).exp();
        f.values[[2, 3]] = 1e-4;
        let prof = amplitude_profile(&f, &g, 4.0);
        assert_eq!(prof.points.len(), 1);
        assert_relative_eq!(prof.points[0].1, -5.0, epsilon = 1e-12);
        assert_eq!(prof.omitted, 1);
    }

    #[test]
    fn hopf_cole_examples() {
        let g = grid_with(3, 4.0);
        let t: f64 = 7.0;
        let f = Field {
            values: Array2::from_elem((3, 5), (-t).exp()),
        };
        let hc = hopf_cole(&f, &g, t).unwrap();
        assert!(hc.u.iter().all(|u| (u - 1.0).abs() < 1e-14));
        assert_eq!(hc.masked, 0);
        let ones = Field {
            values: Array2::from_elem((3, 5), 1.0),
        };
        assert!(hopf_cole(&ones, &g, t).unwrap().u.iter().all(|u| *u == 0.0));
        let mut z = ones.clone();
        z.values[[1, 1]] = 0.0;
        let hc = hopf_cole(&z, &g, t).unwrap();
        assert_eq!(hc.masked, 1);
        assert!(hc.u[[1, 1]].is_nan());
        assert_relative_eq!(hc.ys[1], 4.0 * t.powf(-1.25), epsilon = 1e-15);
        assert_relative_eq!(hc.etas[0], t.powf(-0.5), epsilon = 1e-15);
    }

    #[test]
    fn sup_distance_of_shifted_ramps() {
        let a: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, i as f64 / 10.0)).collect();
        let b: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64, (i as f64 + 1.0) / 10.0)).collect();
        assert_relative_eq!(sup_distance(&a, &b), 0.1, epsilon = 1e-12);
        assert_eq!(sup_distance(&a, &a), 0.0);
    }

    #[test]
    fn fixed_exponent_prefactor_examples() {
        let ts: Vec<f64> = (1..=10).map(f64::from).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.3 * t.powf(1.25)).collect();
        let c = fixed_exponent_prefactor(&ts, &ys, 1.25, (3.0, 10.0)).unwrap();
        assert_relative_eq!(c, 0.3, max_relative = 1e-13);
        // y = 2t, p held at 1: geometric mean of 2t/t
        let ys: Vec<f64> = ts.iter().map(|t| 2.0 * t).collect();
        assert_relative_eq!(fixed_exponent_prefactor(&ts, &ys, 1.0, (1.0, 10.0)).unwrap(), 2.0, max_relative = 1e-14);
        assert!(fixed_exponent_prefactor(&ts, &ys, 1.0, (20.0, 30.0)).is_err());
    }
}
