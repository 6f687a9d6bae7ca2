//! Closed-form large-time solution: the critical speed `y_c`, the mean-trait
//! and amplitude profiles `a(y)`, `b(y)`, the source term `T_y` and its
//! corrector series `u_1`, plus the predicted density and front position.
//!
//! Coordinates are self-similar: `y = x t^{-5/4}`, `eta = theta t^{-1/2}`.

use crate::error::{Error, Result};

pub const ALPHA: f64 = 1.25;
pub const BETA: f64 = 0.5;

/// `4 sqrt(lambda / 3)`.
pub fn critical_y(lambda: f64) -> f64 {
    4.0 * (lambda / 3.0).sqrt()
}

/// Termination rule of the corrector series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub kmax: usize,
    pub tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            kmax: 64,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
}

/// Exponent of the amplitude prefactor `exp[(1 - (x / (y_c t^{5/4}))^p) t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrefactorExponent {
    /// `p = 4/3`, the value consistent with `b(y)`.
    #[default]
    FourThirds,
    /// `p = 1/3`, kept for comparison with the alternative reading.
    OneThird,
}

impl PrefactorExponent {
    pub fn value(self) -> f64 {
        match self {
            PrefactorExponent::FourThirds => 4.0 / 3.0,
            PrefactorExponent::OneThird => 1.0 / 3.0,
        }
    }
}

/// Side of the front a mean-trait prediction refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Behind,
    Ahead,
}

/// Default cap on the half-width of the trait window around `eta / a = 1`.
pub const DEFAULT_HALFWIDTH_CAP: f64 = 0.9;

/// Explicit solution `(y_c, a, b)` for one segregational variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontSolution {
    pub lambda: f64,
    pub y_c: f64,
    /// `a(y) = ka_minus y^{2/5}` for `y <= y_c`.
    pub ka_minus: f64,
    /// `a(y) = ka_plus y^{2/3}` for `y > y_c`.
    pub ka_plus: f64,
    /// `b(y) = kb y^{4/3} - 1` for `y > y_c`.
    pub kb: f64,
}

impl FrontSolution {
    pub fn new(lambda2: f64) -> Result<Self> {
        if !(lambda2 > 0.0 && lambda2.is_finite()) {
            return Err(Error::Domain(format!("lambda2 must be positive, got {lambda2}")));
        }
        let lambda = lambda2.sqrt();
        Ok(Self {
            lambda,
            y_c: critical_y(lambda),
            ka_minus: lambda.powf(0.8) * 6f64.powf(0.2),
            ka_plus: (1.5 * lambda2).cbrt(),
            kb: (3.0 / (16.0 * lambda)).powf(2.0 / 3.0),
        })
    }

    fn lambda2(&self) -> f64 {
        self.lambda * self.lambda
    }

    fn behind(&self, y: f64) -> bool {
        y <= self.y_c
    }

    pub fn a(&self, y: f64) -> f64 {
        if self.behind(y) {
            self.ka_minus * y.powf(0.4)
        } else {
            self.ka_plus * y.powf(2.0 / 3.0)
        }
    }

    /// Derivative of `a`; at `y_c` the left branch is returned.
    pub fn a_prime(&self, y: f64) -> f64 {
        if self.behind(y) {
            0.4 * self.ka_minus * y.powf(-0.6)
        } else {
            (2.0 / 3.0) * self.ka_plus * y.powf(-1.0 / 3.0)
        }
    }

    pub fn b(&self, y: f64) -> f64 {
        if self.behind(y) {
            0.0
        } else {
            self.kb * y.powf(4.0 / 3.0) - 1.0
        }
    }

    pub fn b_prime(&self, y: f64) -> f64 {
        if self.behind(y) {
            0.0
        } else {
            (4.0 / 3.0) * self.kb * y.cbrt()
        }
    }

    fn check_regular(&self, y: f64) -> Result<()> {
        if !(y > 0.0 && y.is_finite()) {
            return Err(Error::Domain(format!("y must be positive, got {y}")));
        }
        if y == self.y_c {
            return Err(Error::Domain(format!(
                "the profiles are not differentiable at y_c = {}",
                self.y_c
            )));
        }
        Ok(())
    }

    fn indicator_behind(&self, y: f64) -> f64 {
        if y < self.y_c {
            1.0
        } else {
            0.0
        }
    }

    /// Left-minus-right residuals of the two profile equations.
    pub fn residual_system(&self, y: f64) -> Result<(f64, f64)> {
        self.check_regular(y)?;
        let (a, ap, b, bp) = (self.a(y), self.a_prime(y), self.b(y), self.b_prime(y));
        let res1 = -b + ALPHA * y * bp - a * bp * bp + self.indicator_behind(y) - 1.0;
        let res2 = -ALPHA * y * ap + BETA * a - 2.0 * self.lambda2() * bp * bp + 2.0 * a * bp * ap;
        Ok((res1, res2))
    }

    /// The cubic `g(y, eta)` evaluated term by term.
    pub fn g(&self, y: f64, eta: f64) -> Result<f64> {
        self.check_regular(y)?;
        let l2 = self.lambda2();
        let (a, ap, b, bp) = (self.a(y), self.a_prime(y), self.b(y), self.b_prime(y));
        let d = eta - a;
        let slope = bp - ap * d / (2.0 * l2);
        Ok(-b - d * d / (4.0 * l2) + ALPHA * y * slope + BETA * eta * d / (2.0 * l2)
            - eta * slope * slope
            + self.indicator_behind(y))
    }

    /// Leading coefficient `gamma` of `P_y(X) = 1 - g(y, a X)`.
    pub fn gamma(&self, y: f64) -> f64 {
        let (a, ap) = (self.a(y), self.a_prime(y));
        let l4 = self.lambda2() * self.lambda2();
        ap * ap * a.powi(3) / (4.0 * l4)
    }

    /// `P_y(1 + d)` from its factored form, accurate for small `d`.
    fn p_offset(&self, y: f64, d: f64) -> f64 {
        if y < self.y_c {
            // P = gamma X (X - 1)^2 with gamma = K_-^5 / (25 lambda^4) = 6/25
            (6.0 / 25.0) * d * d * (1.0 + d)
        } else {
            // P = gamma (X - 1)^2 (X - 2)
            self.gamma(y) * d * d * (d - 1.0)
        }
    }

    /// `P_y(X) = 1 - g(y, a(y) X)`.
    pub fn p_poly(&self, y: f64, x: f64) -> f64 {
        self.p_offset(y, x - 1.0)
    }

    /// Largest half-width `w <= cap` such that `g > 0` for `eta / a(y)` in
    /// `[1 - w, 1 + w]`.
    pub fn admissible_halfwidth(&self, y: f64, cap: f64) -> Result<f64> {
        self.check_regular(y)?;
        let cap = cap.clamp(0.0, 1.0 - 1e-12);
        // P is increasing in |X - 1| on each side of 1 over this range
        let ok = |w: f64| self.p_offset(y, w) < 1.0 && self.p_offset(y, -w) < 1.0;
        if ok(cap) {
            return Ok(cap);
        }
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if ok(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    }

    fn domain_error(&self, y: f64, eta: f64) -> Error {
        let a = self.a(y);
        match self.admissible_halfwidth(y, DEFAULT_HALFWIDTH_CAP) {
            Ok(w) => Error::Domain(format!(
                "g(y = {y}, eta = {eta}) <= 0; admissible window is eta in [{}, {}]",
                a * (1.0 - w),
                a * (1.0 + w)
            )),
            Err(e) => e,
        }
    }

    /// `T_y(eta) = ln g(y, eta)`.
    pub fn t_source(&self, y: f64, eta: f64) -> Result<f64> {
        self.check_regular(y)?;
        let a = self.a(y);
        let p = self.p_offset(y, (eta - a) / a);
        if !(eta > 0.0) || !(p < 1.0) {
            return Err(self.domain_error(y, eta));
        }
        Ok((-p).ln_1p())
    }

    /// `u_1(y, eta) = sum_k 2^k T_y(a + (eta - a) 2^{-k})`.
    pub fn u1(&self, y: f64, eta: f64, opts: SeriesOptions) -> Result<SeriesValue> {
        self.t_source(y, eta)?;
        let a = self.a(y);
        let mut d = (eta - a) / a;
        let mut weight = 1.0;
        let mut value = 0.0;
        let mut last = f64::NAN;
        for k in 0..opts.kmax {
            let term = weight * (-self.p_offset(y, d)).ln_1p();
            value += term;
            last = term.abs();
            if last < opts.tol {
                return Ok(SeriesValue { value, terms: k + 1 });
            }
            weight *= 2.0;
            d *= 0.5;
        }
        Err(Error::NoConvergence {
            kmax: opts.kmax,
            tol: opts.tol,
            last,
        })
    }

    /// `|u1(eta) + u1(a) - 2 u1((eta + a) / 2) - T_y(eta)|`.
    pub fn verify_limit_equation(&self, y: f64, eta: f64, opts: SeriesOptions) -> Result<f64> {
        let a = self.a(y);
        let lhs = self.u1(y, eta, opts)?.value + self.u1(y, a, opts)?.value
            - 2.0 * self.u1(y, 0.5 * (eta + a), opts)?.value;
        Ok((lhs - self.t_source(y, eta)?).abs())
    }

    /// Uniform bound on `|u_1(y, eta)|` for `eta / a(y)` in `J = [1 - w, 1 + w]`.
    /// Behind the front: `|J|^2 sup_J |F''|`, `F = ln(1 - P)`. Ahead:
    /// `y^{8/3} |J|^2 [sup_J |Q''| / y_c^{4/3} + sup_J Q'^2]`, `P = y^{4/3} Q`.
    /// Suprema are taken over a dense sample of `J`.
    pub fn series_bound(&self, y: f64, halfwidth: f64) -> Result<f64> {
        self.check_regular(y)?;
        let w = self.admissible_halfwidth(y, halfwidth)?;
        if w < halfwidth {
            return Err(Error::Domain(format!(
                "half-width {halfwidth} exceeds the admissible {w} at y = {y}"
            )));
        }
        let len = 2.0 * w;
        const SAMPLES: usize = 4001;
        let xs = (0..SAMPLES).map(|i| 1.0 - w + len * i as f64 / (SAMPLES - 1) as f64);
        if y < self.y_c {
            let gamma = 6.0 / 25.0;
            let sup = xs
                .map(|x| {
                    let p = gamma * x * (x - 1.0) * (x - 1.0);
                    let p1 = gamma * (x - 1.0) * (3.0 * x - 1.0);
                    let p2 = gamma * (6.0 * x - 4.0);
                    let q = 1.0 - p;
                    (p2 / q + p1 * p1 / (q * q)).abs()
                })
                .fold(0.0, f64::max);
            Ok(len * len * sup)
        } else {
            let gq = self.gamma(y) / y.powf(4.0 / 3.0);
            let (mut s2, mut s1) = (0.0f64, 0.0f64);
            for x in xs {
                let q1 = gq * (x - 1.0) * (3.0 * x - 5.0);
                let q2 = gq * (6.0 * x - 8.0);
                s1 = s1.max(q1 * q1);
                s2 = s2.max(q2.abs());
            }
            Ok(y.powf(8.0 / 3.0) * len * len * (s2 / self.y_c.powf(4.0 / 3.0) + s1))
        }
    }

    /// `y_c t^{5/4}`.
    pub fn front_position(&self, t: f64) -> f64 {
        self.y_c * t.powf(1.25)
    }

    /// `lambda^{4/5} (6 x^2)^{1/5}` behind, `(3 lambda^2 x^2 / (2 t))^{1/3}` ahead.
    pub fn mean_trait(&self, region: Region, x: f64, t: f64) -> f64 {
        match region {
            Region::Behind => self.lambda.powf(0.8) * (6.0 * x * x).powf(0.2),
            Region::Ahead => (1.5 * self.lambda2() * x * x / t).cbrt(),
        }
    }

    /// Leading-order density: a Gaussian in `theta` of variance `2 lambda^2`
    /// around the mean trait, times the amplitude prefactor ahead of the front.
    pub fn conjecture_density(&self, t: f64, x: f64, theta: f64, exponent: PrefactorExponent) -> f64 {
        let four_l2 = 4.0 * self.lambda2();
        if x <= self.front_position(t) {
            let m = self.mean_trait(Region::Behind, x, t);
            (-(theta - m) * (theta - m) / four_l2).exp()
        } else {
            let m = self.mean_trait(Region::Ahead, x, t);
            let s = x / self.front_position(t);
            ((1.0 - s.powf(exponent.value())) * t - (theta - m) * (theta - m) / four_l2).exp()
        }
    }
}

/// Front position for the model with growth rate `r` and lower trait bound
/// `theta_min`: `4 sqrt(lambda theta_min / 3) r^{3/4} t^{5/4}`, where
/// `lambda` is the rescaled segregational standard deviation.
pub fn front_position_theory(t: f64, lambda: f64, r: f64, theta_min: f64) -> f64 {
    front_coefficient(lambda, r, theta_min) * t.powf(1.25)
}

pub fn front_coefficient(lambda: f64, r: f64, theta_min: f64) -> f64 {
    critical_y(lambda) * theta_min.sqrt() * r.powf(0.75)
}

/// Map between model units and the rescaled units
/// `t' = r t`, `x' = sqrt(r / theta_min) x`, `theta' = theta / theta_min`,
/// `f' = (theta_min / K) f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalMap {
    pub r: f64,
    pub k: f64,
    pub theta_min: f64,
}

impl DimensionalMap {
    pub fn new(r: f64, k: f64, theta_min: f64) -> Result<Self> {
        for (name, v) in [("r", r), ("K", k), ("theta_min", theta_min)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(Self { r, k, theta_min })
    }

    /// `(t, x, theta, f)` in model units to rescaled units.
    pub fn to_rescaled(&self, t: f64, x: f64, theta: f64, f: f64) -> (f64, f64, f64, f64) {
        (
            self.r * t,
            (self.r / self.theta_min).sqrt() * x,
            theta / self.theta_min,
            self.theta_min / self.k * f,
        )
    }

    pub fn from_rescaled(&self, t: f64, x: f64, theta: f64, f: f64) -> (f64, f64, f64, f64) {
        (
            t / self.r,
            x / (self.r / self.theta_min).sqrt(),
            theta * self.theta_min,
            self.k / self.theta_min * f,
        )
    }

    /// Leading-order density in model units.
    pub fn conjecture_density(
        &self,
        sol: &FrontSolution,
        t: f64,
        x: f64,
        theta: f64,
        exponent: PrefactorExponent,
    ) -> f64 {
        let (ts, xs, ths, _) = self.to_rescaled(t, x, theta, 0.0);
        self.from_rescaled(0.0, 0.0, 0.0, sol.conjecture_density(ts, xs, ths, exponent)).3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sol(lambda2: f64) -> FrontSolution {
        FrontSolution::new(lambda2).unwrap()
    }

    #[test]
    fn critical_y_examples() {
        assert!((critical_y(0.5f64.sqrt()) - 1.94).abs() < 5e-3);
        assert!((critical_y(1.0) - 2.31).abs() < 5e-3);
        assert_eq!(critical_y(3.0), 4.0);
    }

    #[test]
    fn constants_match_closed_forms() {
        for l2 in [0.25, 0.5, 1.0, 4.0] {
            let s = sol(l2);
            let l = l2.sqrt();
            assert_relative_eq!(s.kb, (9.0 / (256.0 * l2)).cbrt(), max_relative = 1e-14);
            assert_relative_eq!(s.ka_plus * s.kb, 3.0 / 8.0, max_relative = 1e-14);
            assert_relative_eq!(s.ka_minus.powi(5), 6.0 * l.powi(4), max_relative = 1e-13);
        }
    }

    #[test]
    fn profiles_at_the_critical_point() {
        for l in [0.5f64.sqrt(), 1.0, 2.0] {
            let s = sol(l * l);
            assert!((s.kb * s.y_c.powf(4.0 / 3.0) - 1.0).abs() < 1e-12);
            assert_eq!(s.b(s.y_c), 0.0);
            let left = s.ka_minus * s.y_c.powf(0.4);
            let right = s.ka_plus * s.y_c.powf(2.0 / 3.0);
            assert!((left - right).abs() < 1e-12 * left);
            assert_relative_eq!(s.b(2.0 * s.y_c), 2f64.powf(4.0 / 3.0) - 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn residuals_vanish() {
        for l2 in [0.5, 1.0, 3.0] {
            let s = sol(l2);
            for y in [s.y_c / 2.0, 3.0 * s.y_c] {
                let (r1, r2) = s.residual_system(y).unwrap();
                assert!(r1.abs() < 1e-12 && r2.abs() < 1e-12, "{r1} {r2}");
            }
            assert!(s.residual_system(s.y_c).is_err());
        }
    }

    #[test]
    fn degenerate_profile_satisfies_first_equation() {
        // a = 0, b = -1: -b + 0 - 0 - 1 = 0 wherever the indicator is 0
        let (a, b, bp) = (0.0, -1.0, 0.0);
        let res1: f64 = -b + ALPHA * 1.0 * bp - a * bp * bp + 0.0 - 1.0;
        assert_eq!(res1, 0.0);
    }

    proptest! {
        #[test]
        fn profiles_monotone(y1 in 0.01..20.0f64, y2 in 0.01..20.0f64, l2 in 0.1..4.0f64) {
            let s = sol(l2);
            let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
            prop_assert!(s.a(lo) <= s.a(hi) * (1.0 + 1e-14));
            prop_assert!(s.b(lo) <= s.b(hi) + 1e-14);
            prop_assert!(s.a(lo) > 0.0);
        }

        /// The factored polynomial agrees with the term-by-term cubic.
        #[test]
        fn factored_form_matches_cubic(ry in 0.05..0.95f64, above in any::<bool>(),
                                       x in 0.05..1.9f64, l2 in 0.2..3.0f64) {
            let s = sol(l2);
            let y = if above { s.y_c * (1.0 + 3.0 * ry) } else { s.y_c * ry };
            let eta = s.a(y) * x;
            let direct = 1.0 - s.g(y, eta).unwrap();
            let factored = s.p_poly(y, x);
            prop_assert!((direct - factored).abs() <= 1e-10 * (1.0 + direct.abs()),
                "{} vs {}", direct, factored);
        }
    }

    #[test]
    fn source_vanishes_to_second_order_at_the_mean() {
        let s = sol(0.5);
        for y in [0.4 * s.y_c, 2.5 * s.y_c] {
            let a = s.a(y);
            assert_relative_eq!(s.g(y, a).unwrap(), 1.0, epsilon = 1e-12);
            assert_eq!(s.t_source(y, a).unwrap(), 0.0);
            let fd = |h: f64| (s.t_source(y, a + h).unwrap() - s.t_source(y, a - h).unwrap()) / (2.0 * h);
            let (d1, d2) = (fd(1e-2 * a), fd(5e-3 * a));
            // central differences of a function with T(a) = T'(a) = 0 scale like h^2
            assert!(d2.abs() < d1.abs() * 0.3, "{d1} {d2}");
        }
    }

    #[test]
    fn ahead_region_is_above_one() {
        let s = sol(0.5);
        let y = 2.0 * s.y_c;
        for x in [0.1, 0.5, 0.99, 1.01, 1.5, 1.95] {
            assert!(s.g(y, s.a(y) * x).unwrap() > 1.0);
        }
    }

    #[test]
    fn series_examples() {
        let s = sol(0.5);
        let opts = SeriesOptions::default();
        let y = 0.5 * s.y_c;
        let v = s.u1(y, s.a(y), opts).unwrap();
        assert_eq!((v.value, v.terms), (0.0, 1));
        let err = s.u1(y, 0.0, opts).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let tight = SeriesOptions { kmax: 3, tol: 1e-12 };
        assert!(matches!(s.u1(y, 1.3 * s.a(y), tight), Err(Error::NoConvergence { kmax: 3, .. })));
    }

    #[test]
    fn series_terms_halve() {
        let s = sol(0.5);
        for y in [0.5 * s.y_c, 2.0 * s.y_c] {
            let a = s.a(y);
            let d = 0.05;
            let term = |k: i32| 2f64.powi(k) * s.t_source(y, a * (1.0 + d * 2f64.powi(-k))).unwrap();
            let ratio = term(20) / term(19);
            assert!((ratio - 0.5).abs() < 1e-4, "{ratio}");
        }
    }

    #[test]
    fn limit_equation_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let opts = SeriesOptions { kmax: 64, tol: 1e-10 };
        for l2 in [0.5, 1.0] {
            let s = sol(l2);
            for _ in 0..50 {
                let y = if rng.gen::<bool>() { 0.5 * s.y_c } else { 2.0 * s.y_c };
                let eta = s.a(y) * (1.0 + rng.gen_range(-0.05..0.05));
                let res = s.verify_limit_equation(y, eta, opts).unwrap();
                assert!(res < 1e-8, "{res}");
            }
        }
    }

    #[test]
    fn series_within_bounds() {
        let s = sol(0.5);
        let opts = SeriesOptions::default();
        for y in [0.2 * s.y_c, 0.8 * s.y_c, 1.2 * s.y_c, 3.0 * s.y_c] {
            let w = 0.5;
            let bound = s.series_bound(y, w).unwrap();
            for i in 0..=50 {
                let x = 1.0 - w + 2.0 * w * i as f64 / 50.0;
                let u = s.u1(y, s.a(y) * x, opts).unwrap().value;
                assert!(u.abs() <= bound, "y {y} x {x}: {u} > {bound}");
            }
        }
    }

    #[test]
    fn window_is_capped_below_one() {
        let s = sol(0.5);
        assert_eq!(s.admissible_halfwidth(0.5 * s.y_c, 0.9).unwrap(), 0.9);
        assert!(s.admissible_halfwidth(0.5 * s.y_c, 5.0).unwrap() < 1.0);
    }

    #[test]
    fn mean_trait_examples() {
        let s = sol(0.5);
        for t in [10.0, 50.0, 200.0] {
            let x = s.front_position(t);
            assert_relative_eq!(s.mean_trait(Region::Behind, x, t), (2.0 * t).sqrt(), max_relative = 1e-12);
            assert_relative_eq!(
                s.mean_trait(Region::Behind, x, t),
                s.mean_trait(Region::Ahead, x, t),
                max_relative = 1e-12
            );
        }
        assert_eq!(s.mean_trait(Region::Behind, 0.0, 1.0), 0.0);
    }

    #[test]
    fn conjecture_density_examples() {
        let s = sol(0.5);
        let t = 50.0;
        let x = 0.5 * s.front_position(t);
        let peak = s.mean_trait(Region::Behind, x, t);
        assert_relative_eq!(s.conjecture_density(t, x, peak, PrefactorExponent::FourThirds), 1.0);
        // stationary behind the front
        assert_eq!(
            s.conjecture_density(t, x, peak + 0.7, PrefactorExponent::FourThirds),
            s.conjecture_density(3.0 * t, x, peak + 0.7, PrefactorExponent::FourThirds)
        );
        // continuity at the front
        let xf = s.front_position(t);
        let th = s.mean_trait(Region::Behind, xf, t) + 0.3;
        let left = s.conjecture_density(t, xf, th, PrefactorExponent::FourThirds);
        let right = s.conjecture_density(t, xf * (1.0 + 1e-15), th, PrefactorExponent::FourThirds);
        assert!((left - right).abs() < 1e-12);
        // variance 2 lambda^2: exp(-1/2) at one standard deviation
        let sd = (2.0 * 0.5f64).sqrt();
        assert_relative_eq!(
            s.conjecture_density(t, x, peak + sd, PrefactorExponent::FourThirds),
            (-0.5f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn front_theory_examples() {
        let lambda = 0.5f64.sqrt();
        assert_relative_eq!(
            front_coefficient(lambda, 0.1, 1.0),
            2.0 / (3f64.sqrt() * 5f64.powf(0.75)),
            max_relative = 1e-12
        );
        assert!((front_coefficient(lambda, 0.1, 1.0) - 0.35).abs() < 0.01);
        assert_eq!(front_position_theory(0.0, lambda, 1.0, 1.0), 0.0);
        assert_relative_eq!(front_position_theory(16.0, lambda, 1.0, 1.0), critical_y(lambda) * 32.0);
    }

    #[test]
    fn dimensional_map_round_trip() {
        let id = DimensionalMap::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(id.to_rescaled(2.0, 3.0, 4.0, 5.0), (2.0, 3.0, 4.0, 5.0));
        let m = DimensionalMap::new(0.1, 3.0, 2.0).unwrap();
        let (t, x, th, f) = m.to_rescaled(7.0, 11.0, 13.0, 0.25);
        let back = m.from_rescaled(t, x, th, f);
        for (a, b) in [(back.0, 7.0), (back.1, 11.0), (back.2, 13.0), (back.3, 0.25)] {
            assert!((a - b).abs() <= 1e-14 * b);
        }
        assert!(DimensionalMap::new(0.0, 1.0, 1.0).is_err());
    }

    /// In model units the amplitude ahead of the front is
    /// `exp[r t - (9 x^4 / (256 lambda^2 t^2))^{1/3}]` at the mean trait.
    #[test]
    fn dimensional_prefactor() {
        let s = sol(0.5);
        let m = DimensionalMap::new(0.1, 1.0, 1.0).unwrap();
        let (t, x) = (100.0, 150.0);
        let (ts, xs, _, _) = m.to_rescaled(t, x, 0.0, 0.0);
        assert!(xs > s.front_position(ts));
        let theta = s.mean_trait(Region::Ahead, xs, ts);
        let got = m.conjecture_density(&s, t, x, theta, PrefactorExponent::FourThirds);
        let expected = (0.1 * t - (9.0 * x.powi(4) / (256.0 * 0.5 * t * t)).cbrt()).exp();
        assert_relative_eq!(got, expected, max_relative = 1e-10);
    }
}
