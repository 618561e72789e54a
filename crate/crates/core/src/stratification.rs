//! Stratification profiles λ(z) and the vertical chart θ(z).
//!
//! The vertical part of the elliptic operator is ∂_z(λ ∂_z ·) with a
//! bounded positive profile 1/Λ ≤ λ(z) ≤ Λ. The well-posedness hypotheses
//! also ask for endpoint flatness: λ', λ'', λ''' vanish at z = 0 and z = h.
//! `validate_profile` measures each hypothesis; `solve_vertical_chart`
//! integrates the chart ODE θ'(z) = √λ(θ(z)), θ(0) = 0, which turns the
//! vertical operator into a constant-coefficient one (used by the
//! cross-validating assembly path of the elliptic solver).

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::stencil::{fd_weights, fd_weights_uniform};

/// Functional form of a stratification profile.
#[derive(Clone)]
pub enum ProfileForm {
    /// λ(z) ≡ value.
    Constant { value: f64 },
    /// λ(z) = base + amp · z⁴(h−z)⁴ / (h/2)⁸, i.e. `amp` is the mid-height
    /// amplitude. All derivatives through third order vanish at z = 0, h.
    PolyFlat { base: f64, amp: f64 },
    /// Samples on a uniform grid over [0, h] (at least 6), interpolated
    /// cubically; derivatives come from finite differences of the samples.
    /// Evaluation clamps to [0, h].
    Samples { values: Vec<f64> },
    /// Arbitrary closed form. Must be evaluable somewhat beyond [0, h]
    /// (the chart ODE composes λ with θ, whose range exceeds h when λ > 1);
    /// derivatives come from small-step finite differences of the callable.
    Function { f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for ProfileForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileForm::Constant { value } => write!(f, "Constant({value})"),
            ProfileForm::PolyFlat { base, amp } => write!(f, "PolyFlat(base={base}, amp={amp})"),
            ProfileForm::Samples { values } => write!(f, "Samples(n={})", values.len()),
            ProfileForm::Function { .. } => write!(f, "Function(<callable>)"),
        }
    }
}

/// Stratification profile on [0, h].
#[derive(Debug, Clone)]
pub struct StratificationProfile {
    pub h: f64,
    pub form: ProfileForm,
    /// Λ such that 1/Λ ≤ λ ≤ Λ, measured on a fine scan at construction.
    pub lambda_cap: f64,
}

/// Profile construction / validation failures.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    NonPositive { z: f64, value: f64 },
    BadHeight { got: f64 },
    TooFewSamples { got: usize },
    NotFinite,
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::NonPositive { z, value } => {
                write!(f, "stratification must be strictly positive: λ({z}) = {value}")
            }
            ProfileError::BadHeight { got } => write!(f, "profile height must be positive, got {got}"),
            ProfileError::TooFewSamples { got } => {
                write!(f, "sampled profiles need at least 6 points, got {got}")
            }
            ProfileError::NotFinite => write!(f, "profile contains non-finite values"),
        }
    }
}

impl core::error::Error for ProfileError {}

impl StratificationProfile {
    pub fn new(h: f64, form: ProfileForm) -> Result<Self, ProfileError> {
        if !(h.is_finite() && h > 0.0) {
            return Err(ProfileError::BadHeight { got: h });
        }
        if let ProfileForm::Samples { values } = &form {
            if values.len() < 6 {
                return Err(ProfileError::TooFewSamples { got: values.len() });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(ProfileError::NotFinite);
            }
        }
        let mut profile = StratificationProfile { h, form, lambda_cap: 1.0 };
        // Scan for positivity and the tightest symmetric cap Λ ≥ 1.
        let n_scan = 1024;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..=n_scan {
            let z = h * s as f64 / n_scan as f64;
            let v = profile.lambda(z);
            if !v.is_finite() {
                return Err(ProfileError::NotFinite);
            }
            if v <= 0.0 {
                return Err(ProfileError::NonPositive { z, value: v });
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        profile.lambda_cap = if hi > 1.0 / lo { hi } else { 1.0 / lo };
        if profile.lambda_cap < 1.0 {
            profile.lambda_cap = 1.0;
        }
        Ok(profile)
    }

    pub fn constant(h: f64, value: f64) -> Result<Self, ProfileError> {
        Self::new(h, ProfileForm::Constant { value })
    }

    pub fn poly_flat(h: f64, base: f64, amp: f64) -> Result<Self, ProfileError> {
        Self::new(h, ProfileForm::PolyFlat { base, amp })
    }

    pub fn from_samples(h: f64, values: Vec<f64>) -> Result<Self, ProfileError> {
        Self::new(h, ProfileForm::Samples { values })
    }

    pub fn from_fn(
        h: f64,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, ProfileError> {
        Self::new(h, ProfileForm::Function { f: Arc::new(f) })
    }

    /// λ(z). The chart ODE composes λ with θ, whose range exceeds [0, h]
    /// when λ > 1, so the profile must extend past its domain: `Function`
    /// forms evaluate their formula directly, every other form continues
    /// constantly past the endpoints (a C³ extension whenever the endpoint
    /// flatness hypothesis holds).
    pub fn lambda(&self, z: f64) -> f64 {
        match &self.form {
            ProfileForm::Constant { value } => *value,
            ProfileForm::PolyFlat { base, amp } => {
                let zc = z.clamp(0.0, self.h);
                let s = amp / math::powi(0.5 * self.h, 8);
                let w = self.h - zc;
                base + s * math::powi(zc, 4) * math::powi(w, 4)
            }
            ProfileForm::Samples { values } => self.interp_samples(values, z),
            ProfileForm::Function { f } => f(z),
        }
    }

    /// dλ/dz; analytic for the polynomial forms, differenced otherwise.
    pub fn lambda_prime(&self, z: f64) -> f64 {
        self.lambda_derivative(z, 1)
    }

    /// k-th derivative at z (k = 1, 2, 3).
    pub fn lambda_derivative(&self, z: f64, k: usize) -> f64 {
        assert!((1..=3).contains(&k), "derivative order out of range");
        match &self.form {
            ProfileForm::Constant { .. } => 0.0,
            ProfileForm::PolyFlat { amp, .. } => {
                if !(0.0..=self.h).contains(&z) {
                    return 0.0;
                }
                let s = amp / math::powi(0.5 * self.h, 8);
                let w = self.h - z;
                let pw = |x: f64, n: i32| math::powi(x, n);
                let p = match k {
                    1 => 4.0 * pw(z, 3) * pw(w, 4) - 4.0 * pw(z, 4) * pw(w, 3),
                    2 => {
                        12.0 * pw(z, 2) * pw(w, 4) - 32.0 * pw(z, 3) * pw(w, 3)
                            + 12.0 * pw(z, 4) * pw(w, 2)
                    }
                    _ => {
                        24.0 * z * pw(w, 4) - 144.0 * pw(z, 2) * pw(w, 3)
                            + 144.0 * pw(z, 3) * pw(w, 2)
                            - 24.0 * pw(z, 4) * w
                    }
                };
                s * p
            }
            ProfileForm::Samples { values } => self.sample_derivative(values, z, k),
            ProfileForm::Function { f } => {
                // centered 7-point stencil: order 7−k truncation, step sized
                // to balance truncation against rounding for each k
                let step = self.h * [3e-3, 1e-2, 3e-2][k - 1];
                let xs: [f64; 7] = core::array::from_fn(|t| z + (t as f64 - 3.0) * step);
                let w = fd_weights(z, &xs, k);
                (0..7).map(|t| w[t] * f(xs[t])).sum()
            }
        }
    }

    /// Cubic Lagrange interpolation of the sample array at z (clamped).
    fn interp_samples(&self, values: &[f64], z: f64) -> f64 {
        let n = values.len();
        let dz = self.h / (n - 1) as f64;
        let zc = z.clamp(0.0, self.h);
        let i0 = ((math::floor(zc / dz) as isize) - 1).clamp(0, n as isize - 4) as usize;
        let xs: [f64; 4] = core::array::from_fn(|t| (i0 + t) as f64 * dz);
        let w = fd_weights(zc, &xs, 0);
        (0..4).map(|t| w[t] * values[i0 + t]).sum()
    }

    /// k-th derivative of a sampled profile: finite differences of the
    /// samples on a 6-node window around z (order 6−k on smooth data).
    fn sample_derivative(&self, values: &[f64], z: f64, k: usize) -> f64 {
        let n = values.len();
        let dz = self.h / (n - 1) as f64;
        let zc = z.clamp(0.0, self.h);
        let center = math::floor(zc / dz) as isize;
        let i0 = (center - 2).clamp(0, n as isize - 6) as usize;
        let w = fd_weights_uniform(zc / dz - i0 as f64, 0, 6, k);
        let scale = math::powf(dz, -(k as f64));
        (0..6).map(|t| w[t] * values[i0 + t]).sum::<f64>() * scale
    }
}

/// Measured residuals for each well-posedness hypothesis.
#[derive(Debug, Clone)]
pub struct ProfileReport {
    /// max(0, −min λ): zero iff λ stays positive on the scan.
    pub positivity_residual: f64,
    /// How far λ escapes the band [1/Λ, Λ] for the stored cap.
    pub bound_residual: f64,
    /// max(|λ⁽ᵏ⁾(0)|, |λ⁽ᵏ⁾(h)|) for k = 1, 2, 3.
    pub flatness_residuals: [f64; 3],
}

impl ProfileReport {
    /// All hypotheses hold within tol (positivity must hold outright).
    pub fn passes(&self, tol: f64) -> bool {
        self.positivity_residual == 0.0
            && self.bound_residual <= tol
            && self.flatness_residuals.iter().all(|r| *r <= tol)
    }
}

/// Measures every hypothesis residual for a profile.
pub fn validate_profile(profile: &StratificationProfile) -> ProfileReport {
    let n_scan = 1024;
    let mut min_l = f64::INFINITY;
    let mut max_l = f64::NEG_INFINITY;
    for s in 0..=n_scan {
        let z = profile.h * s as f64 / n_scan as f64;
        let v = profile.lambda(z);
        min_l = min_l.min(v);
        max_l = max_l.max(v);
    }
    let cap = profile.lambda_cap;
    let bound_residual = (1.0 / cap - min_l).max(max_l - cap).max(0.0);
    let mut flatness = [0.0; 3];
    for k in 1..=3 {
        let a = math::abs(profile.lambda_derivative(0.0, k));
        let b = math::abs(profile.lambda_derivative(profile.h, k));
        flatness[k - 1] = if a > b { a } else { b };
    }
    ProfileReport {
        positivity_residual: (-min_l).max(0.0),
        bound_residual,
        flatness_residuals: flatness,
    }
}

/// Vertical chart θ(z): solution of θ' = √λ(θ), θ(0) = 0, tabulated densely.
///
/// `h_tilde` = θ(h) is the transformed height in the composed variable;
/// `h_star` = θ⁻¹(h) is the height of the transformed domain used by the
/// chart-based elliptic assembly (v(·, z*) = u(·, θ(z*)) for z* ∈ [0, h*]).
#[derive(Debug, Clone)]
pub struct VerticalChart {
    pub h: f64,
    pub h_tilde: f64,
    pub h_star: f64,
    /// θ at the n_z uniform vertical nodes of [0, h].
    pub theta_nodes: Vec<f64>,
    /// θ' = √λ(θ) at the same nodes.
    pub theta_prime_nodes: Vec<f64>,
    /// θ⁻¹ sampled at n_z uniform points of [0, h_tilde].
    pub inverse_nodes: Vec<f64>,
    /// Dense integration path (uniform in z), for interpolation.
    z_fine: Vec<f64>,
    theta_fine: Vec<f64>,
    theta_prime_fine: Vec<f64>,
}

/// Chart integration failures.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartError {
    /// Step doubling failed to reach the tolerance before the subdivision cap.
    StepUnderflow { achieved: f64, tol: f64 },
    /// θ never reached h within the integration span (λ degenerate).
    NoCrossing,
}

impl fmt::Display for ChartError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartError::StepUnderflow { achieved, tol } => {
                write!(f, "chart ODE step doubling stalled at error {achieved} (tol {tol})")
            }
            ChartError::NoCrossing => write!(f, "chart never reached the original height"),
        }
    }
}

impl core::error::Error for ChartError {}

/// One classical RK4 step of θ' = √λ(θ).
fn rk4_step(profile: &StratificationProfile, theta: f64, dz: f64) -> f64 {
    let f = |t: f64| math::sqrt(profile.lambda(t));
    let k1 = f(theta);
    let k2 = f(theta + 0.5 * dz * k1);
    let k3 = f(theta + 0.5 * dz * k2);
    let k4 = f(theta + dz * k3);
    theta + dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates θ over [0, span] with `steps` uniform RK4 steps.
fn integrate(profile: &StratificationProfile, span: f64, steps: usize) -> Vec<f64> {
    let dz = span / steps as f64;
    let mut path = Vec::with_capacity(steps + 1);
    let mut theta = 0.0;
    path.push(theta);
    for _ in 0..steps {
        theta = rk4_step(profile, theta, dz);
        path.push(theta);
    }
    path
}

/// Solves the chart ODE with deterministic fixed substeps.
///
/// The global step count is chosen by step doubling: it doubles until the
/// endpoint difference between consecutive refinements drops below
/// `ode_tol`. There is no runtime adaptivity, so the result depends only on
/// the profile, the node count and the tolerance.
pub fn solve_vertical_chart(
    profile: &StratificationProfile,
    n_z: usize,
    ode_tol: f64,
) -> Result<VerticalChart, ChartError> {
    assert!(n_z >= 2, "need at least two vertical nodes");
    let h = profile.h;
    // Integrate past h so θ is guaranteed to cross h (θ' ≥ 1/√Λ > 0 means
    // θ(z) ≥ z/√Λ, so z ≤ h·√Λ suffices; add a small margin). The span is
    // an integer multiple of the node spacing so grid nodes fall exactly on
    // path nodes.
    let intervals = n_z - 1;
    let dz_nodes = h / intervals as f64;
    let span_intervals =
        ((1.0 + math::sqrt(profile.lambda_cap)) * 1.05 * intervals as f64) as usize + 1;
    let span = span_intervals as f64 * dz_nodes;

    let mut sub = 8usize;
    let mut path = integrate(profile, span, span_intervals * sub);
    let achieved = loop {
        let finer = integrate(profile, span, span_intervals * sub * 2);
        let err = math::abs(finer[finer.len() - 1] - path[path.len() - 1]);
        path = finer;
        sub *= 2;
        if err <= ode_tol {
            break err;
        }
        if sub > (1 << 16) {
            return Err(ChartError::StepUnderflow { achieved: err, tol: ode_tol });
        }
    };
    let _ = achieved;
    let steps = span_intervals * sub;

    let dz_fine = span / steps as f64;
    let z_fine: Vec<f64> = (0..=steps).map(|i| i as f64 * dz_fine).collect();
    let theta_prime_fine: Vec<f64> = path.iter().map(|t| math::sqrt(profile.lambda(*t))).collect();

    let hermite = |z: f64| -> f64 {
        let idx = ((z / dz_fine) as usize).min(steps - 1);
        let t = (z - z_fine[idx]) / dz_fine;
        let (p0, p1) = (path[idx], path[idx + 1]);
        let (m0, m1) = (theta_prime_fine[idx] * dz_fine, theta_prime_fine[idx + 1] * dz_fine);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1
    };

    // h lands on a path node by construction of the span
    let h_node = math::round(h / dz_fine) as usize;
    let h_tilde = path[h_node.min(steps)];

    // θ crosses h somewhere in the path; refine the crossing by Newton on
    // the Hermite interpolant (θ' = √λ(θ) is available exactly).
    let cross = path.iter().position(|t| *t >= h).ok_or(ChartError::NoCrossing)?;
    let mut z_star = if cross == 0 { 0.0 } else { z_fine[cross - 1] };
    for _ in 0..60 {
        let val = hermite(z_star) - h;
        let slope = math::sqrt(profile.lambda(hermite(z_star)));
        let next = (z_star - val / slope).clamp(0.0, span);
        if math::abs(next - z_star) < 1e-15 * span {
            z_star = next;
            break;
        }
        z_star = next;
    }
    let h_star = z_star;

    // Grid nodes coincide with path nodes (span is a node multiple).
    let per_node = sub;
    let theta_nodes: Vec<f64> = (0..n_z).map(|k| path[k * per_node]).collect();
    let theta_prime_nodes: Vec<f64> =
        theta_nodes.iter().map(|t| math::sqrt(profile.lambda(*t))).collect();

    // Inverse samples: solve θ(z) = ξ for uniform ξ in [0, h_tilde].
    let mut inverse_nodes = Vec::with_capacity(n_z);
    for l in 0..n_z {
        if l == 0 {
            inverse_nodes.push(0.0);
            continue;
        }
        let target = h_tilde * l as f64 / intervals as f64;
        let pos = path.iter().position(|t| *t >= target).unwrap_or(steps);
        let mut z = z_fine[pos.saturating_sub(1)];
        for _ in 0..60 {
            let val = hermite(z) - target;
            let slope = math::sqrt(profile.lambda(hermite(z)));
            let next = (z - val / slope).clamp(0.0, span);
            if math::abs(next - z) < 1e-15 * span {
                z = next;
                break;
            }
            z = next;
        }
        inverse_nodes.push(z);
    }

    Ok(VerticalChart {
        h,
        h_tilde,
        h_star,
        theta_nodes,
        theta_prime_nodes,
        inverse_nodes,
        z_fine,
        theta_fine: path,
        theta_prime_fine,
    })
}

impl VerticalChart {
    /// θ(z) by cubic Hermite interpolation of the dense path.
    pub fn theta_of(&self, z: f64) -> f64 {
        let steps = self.z_fine.len() - 1;
        let dz = self.z_fine[1] - self.z_fine[0];
        let idx = ((z / dz) as usize).min(steps - 1);
        let t = (z - self.z_fine[idx]) / dz;
        let (p0, p1) = (self.theta_fine[idx], self.theta_fine[idx + 1]);
        let (m0, m1) = (self.theta_prime_fine[idx] * dz, self.theta_prime_fine[idx + 1] * dz);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * p1
            + (t3 - t2) * m1
    }

    /// θ⁻¹(t) by bracketed Newton on the dense path.
    pub fn z_of_theta(&self, target: f64) -> f64 {
        let steps = self.z_fine.len() - 1;
        let span = self.z_fine[steps];
        let pos = self.theta_fine.iter().position(|t| *t >= target).unwrap_or(steps);
        let mut z = self.z_fine[pos.saturating_sub(1)];
        for _ in 0..60 {
            let val = self.theta_of(z) - target;
            let dz = self.z_fine[1] - self.z_fine[0];
            let idx = ((z / dz) as usize).min(steps - 1);
            let slope = self.theta_prime_fine[idx];
            let next = (z - val / slope).clamp(0.0, span);
            if math::abs(next - z) < 1e-15 * span.max(1.0) {
                return next;
            }
            z = next;
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_profile_basics() {
        let p = StratificationProfile::constant(1.0, 2.0).unwrap();
        assert_eq!(p.lambda(0.3), 2.0);
        assert_eq!(p.lambda_prime(0.3), 0.0);
        assert_eq!(p.lambda_cap, 2.0);
        let report = validate_profile(&p);
        assert!(report.passes(1e-8));
    }

    #[test]
    fn rejects_nonpositive_profiles() {
        assert!(matches!(
            StratificationProfile::constant(1.0, -0.5),
            Err(ProfileError::NonPositive { .. })
        ));
        let vals = alloc::vec![1.0, 1.0, -0.2, 1.0, 1.0, 1.0];
        assert!(StratificationProfile::from_samples(1.0, vals).is_err());
    }

    #[test]
    fn cosine_profile_fails_second_order_flatness() {
        // λ = 2 + cos(πz/h): λ' vanishes at the endpoints but λ'' = ∓(π/h)²
        // does not — the report must flag exactly the k = 2 hypothesis.
        let h = 1.5;
        let p = StratificationProfile::from_fn(h, move |z| {
            2.0 + f64::cos(core::f64::consts::PI * z / h)
        })
        .unwrap();
        let report = validate_profile(&p);
        assert!(report.flatness_residuals[0] <= 1e-7, "k=1: {report:?}");
        let expect_k2 = (core::f64::consts::PI / h).powi(2);
        assert!(
            (report.flatness_residuals[1] - expect_k2).abs() < 1e-3 * expect_k2,
            "k=2 residual {} vs {}",
            report.flatness_residuals[1],
            expect_k2
        );
        assert!(!report.passes(1e-8));
    }

    #[test]
    fn poly_flat_passes_flatness() {
        let p = StratificationProfile::poly_flat(1.0, 2.0, 1.0).unwrap();
        let report = validate_profile(&p);
        assert!(report.passes(1e-10), "{report:?}");
        // mid-height value is base + amp by the normalization
        assert_abs_diff_eq!(p.lambda(0.5), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn poly_flat_derivatives_match_differences() {
        let p = StratificationProfile::poly_flat(2.0, 1.5, 0.8).unwrap();
        let eps = 1e-5;
        for z in [0.3, 0.9, 1.4] {
            let fd = (p.lambda(z + eps) - p.lambda(z - eps)) / (2.0 * eps);
            assert_abs_diff_eq!(p.lambda_prime(z), fd, epsilon = 1e-6);
            let fd2 = (p.lambda(z + eps) - 2.0 * p.lambda(z) + p.lambda(z - eps)) / (eps * eps);
            assert_abs_diff_eq!(p.lambda_derivative(z, 2), fd2, epsilon = 1e-4);
            let fd3 = (p.lambda_prime(z + eps) - 2.0 * p.lambda_prime(z)
                + p.lambda_prime(z - eps))
                / (eps * eps);
            assert_abs_diff_eq!(p.lambda_derivative(z, 3), fd3, epsilon = 1e-3);
        }
    }

    #[test]
    fn sampled_profile_tracks_its_source() {
        let h = 1.0;
        let n = 129;
        let src = |z: f64| 2.0 + 0.5 * f64::sin(3.0 * z);
        let vals: Vec<f64> = (0..n).map(|k| src(h * k as f64 / (n - 1) as f64)).collect();
        let p = StratificationProfile::from_samples(h, vals).unwrap();
        for z in [0.0, 0.13, 0.5, 0.77, 1.0] {
            assert_abs_diff_eq!(p.lambda(z), src(z), epsilon = 1e-7);
            assert_abs_diff_eq!(p.lambda_prime(z), 1.5 * f64::cos(3.0 * z), epsilon = 1e-5);
        }
    }

    /// Oracle for the chart: λ(z) = (1+z)² gives θ' = 1 + θ, so θ = eᶻ − 1
    /// in closed form. Cross-check the production integrator against the
    /// closed form and against an independent RK4 at 10× resolution.
    #[test]
    fn chart_matches_exponential_closed_form() {
        let h = 1.0;
        let p = StratificationProfile::from_fn(h, |z| (1.0 + z) * (1.0 + z)).unwrap();
        let n_z = 17;
        let chart = solve_vertical_chart(&p, n_z, 1e-11).unwrap();

        // frozen closed-form endpoint: h_tilde = e − 1
        assert_abs_diff_eq!(chart.h_tilde, core::f64::consts::E - 1.0, epsilon = 1e-9);
        for k in 0..n_z {
            let z = k as f64 / (n_z - 1) as f64;
            assert_abs_diff_eq!(chart.theta_nodes[k], f64::exp(z) - 1.0, epsilon = 1e-9);
        }
        // h_star solves e^z − 1 = 1, i.e. z = ln 2
        assert_abs_diff_eq!(chart.h_star, f64::ln(2.0), epsilon = 1e-9);

        // independent oracle: plain RK4 on θ' = 1 + θ at 10× node resolution
        let steps = 10 * (n_z - 1) * 64;
        let dz = h / steps as f64;
        let mut theta: f64 = 0.0;
        for _ in 0..steps {
            let f = |t: f64| 1.0 + t;
            let k1 = f(theta);
            let k2 = f(theta + 0.5 * dz * k1);
            let k3 = f(theta + 0.5 * dz * k2);
            let k4 = f(theta + dz * k3);
            theta += dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert_abs_diff_eq!(chart.h_tilde, theta, epsilon = 1e-9);
    }

    #[test]
    fn chart_consistency_and_round_trip() {
        let p = StratificationProfile::poly_flat(1.0, 2.0, 1.0).unwrap();
        let chart = solve_vertical_chart(&p, 17, 1e-10).unwrap();
        // (θ')² = λ(θ) at the nodes (θ' stored, λ re-evaluated)
        for k in 0..17 {
            let lhs = chart.theta_prime_nodes[k] * chart.theta_prime_nodes[k];
            let rhs = p.lambda(chart.theta_nodes[k]);
            assert!((lhs - rhs).abs() <= 1e-8, "node {k}: {lhs} vs {rhs}");
        }
        // independent consistency: 4th-order differences of the dense path
        let dzf = chart.z_fine[1] - chart.z_fine[0];
        let n = chart.theta_fine.len();
        for idx in (2..n - 2).step_by(n / 23) {
            let d = (chart.theta_fine[idx - 2] - 8.0 * chart.theta_fine[idx - 1]
                + 8.0 * chart.theta_fine[idx + 1]
                - chart.theta_fine[idx + 2])
                / (12.0 * dzf);
            let want = f64::sqrt(p.lambda(chart.theta_fine[idx]));
            assert!((d - want).abs() <= 1e-8, "path slope {d} vs {want}");
        }
        // round trip θ⁻¹(θ(z)) = z
        for k in 0..=16 {
            let z = k as f64 / 16.0;
            let back = chart.z_of_theta(chart.theta_of(z));
            assert!((back - z).abs() <= 1e-10, "round trip {back} vs {z}");
        }
        // inverse samples are consistent with theta_of
        for (l, zi) in chart.inverse_nodes.iter().enumerate() {
            let target = chart.h_tilde * l as f64 / 16.0;
            assert!((chart.theta_of(*zi) - target).abs() <= 1e-10);
        }
    }

    #[test]
    fn constant_profile_chart_is_linear() {
        let p = StratificationProfile::constant(2.0, 4.0).unwrap();
        let chart = solve_vertical_chart(&p, 9, 1e-12).unwrap();
        // θ' = 2 ⇒ θ = 2z, h_tilde = 4, h_star = 1
        assert_abs_diff_eq!(chart.h_tilde, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chart.h_star, 1.0, epsilon = 1e-10);
        for (k, t) in chart.theta_nodes.iter().enumerate() {
            assert_abs_diff_eq!(*t, 2.0 * (2.0 * k as f64 / 8.0), epsilon = 1e-12);
        }
    }
}
