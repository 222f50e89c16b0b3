//! Hölder-exponent fits over dyadic boxes, boundary Harnack ratios, radial
//! capacities and Hardy ratios.

use serde::Serialize;

use crate::grid::{weighted_energy, weighted_l2_norm, AxiGrid, Field};
use crate::params::alpha_star;
use crate::solver::{flux_form_residual, flux_form_residual_angular, ProbeRegion};
use crate::{Error, ProblemParams, Real, Regime, Result};

/// Least-squares fits with `r2` below this are flagged unreliable.
pub const RELIABLE_R2: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderLevel<T> {
    pub k: i32,
    pub radius: T,
    pub oscillation: T,
}

/// Decay of `osc_{B_ρ} u` over dyadic boxes `B_ρ` centred on `Σ₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderFit<T> {
    /// x-coordinates of the centre (snapped to the nearest grid column).
    pub center: Vec<T>,
    pub levels: Vec<HolderLevel<T>>,
    /// Slope of `log osc` against `log ρ`; `None` when the field is constant on every box.
    pub alpha_hat: Option<T>,
    pub r2: Option<T>,
    pub constant: bool,
    pub reliable: bool,
}

impl<T: Real> HolderFit<T> {
    /// CSV rows `k,radius,oscillation`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,radius,oscillation\n");
        for l in &self.levels {
            out.push_str(&format!("{},{:.16e},{:.16e}\n", l.k, l.radius, l.oscillation));
        }
        out
    }
}

/// Ordinary least squares `y ≈ α x + β`; returns `(α, r²)`.
pub fn least_squares_slope<T: Real>(xs: &[T], ys: &[T]) -> Option<(T, T)> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let n = T::of_usize(xs.len());
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let sxx = xs.iter().fold(T::zero(), |a, &x| a + (x - mx) * (x - mx));
    let sxy = xs.iter().zip(ys).fold(T::zero(), |a, (&x, &y)| a + (x - mx) * (y - my));
    let syy = ys.iter().fold(T::zero(), |a, &y| a + (y - my) * (y - my));
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == T::zero() { T::one() } else { sxy * sxy / (sxx * syy) };
    Some((slope, r2))
}

/// Oscillation of `field` over the boxes `|x - c|_∞ ≤ 2^{-k}`, `r ≤ 2^{-k}`
/// for `k_min ≤ k ≤ k_max`, and the slope of its log-log decay.
pub fn holder_fit<T: Real>(field: &Field<T>, center: &[T], k_min: i32, k_max: i32) -> Result<HolderFit<T>> {
    let vals = field.values();
    box_fit(field.grid(), center, k_min, k_max, |i| (vals[i], vals[i]))
}

/// [`holder_fit`] of the full-space field `w₀(x, |y|) + w₁(x, |y|) cos θ`,
/// where `θ` is the angle of `y` against a fixed axis. Over a box the
/// angular factor sweeps `[-1, 1]`, so each cell contributes `w₀ ± |w₁|`.
pub fn holder_fit_angular<T: Real>(
    w0: &Field<T>,
    w1: &Field<T>,
    center: &[T],
    k_min: i32,
    k_max: i32,
) -> Result<HolderFit<T>> {
    if w0.grid() != w1.grid() {
        return Err(Error::Argument("angular components live on different grids".into()));
    }
    let (v0, v1) = (w0.values(), w1.values());
    box_fit(w0.grid(), center, k_min, k_max, |i| (v0[i] - v1[i].abs(), v0[i] + v1[i].abs()))
}

fn box_fit<T: Real>(
    g: &AxiGrid<T>,
    center: &[T],
    k_min: i32,
    k_max: i32,
    range: impl Fn(usize) -> (T, T),
) -> Result<HolderFit<T>> {
    if center.len() != g.x_dims() {
        return Err(Error::Argument(format!("centre needs {} coordinates, got {}", g.x_dims(), center.len())));
    }
    if k_min > k_max {
        return Err(Error::Argument(format!("need k_min <= k_max, got {k_min} > {k_max}")));
    }
    let c = g.column_x(g.nearest_column(center));
    let columns: Vec<Vec<T>> = (0..g.columns()).map(|col| g.column_x(col)).collect();
    let mut levels = Vec::new();
    for k in k_min..=k_max {
        let rho = T::lit(2f64.powi(-k));
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        let mut count = 0usize;
        for (col, x) in columns.iter().enumerate() {
            if x.iter().zip(&c).any(|(&a, &b)| (a - b).abs() > rho) {
                continue;
            }
            for j in 0..g.dr_res() {
                if g.r_at(j) > rho {
                    break;
                }
                let (l, h) = range(g.index(col, j));
                lo = lo.min(l);
                hi = hi.max(h);
                count += 1;
            }
        }
        if count < 4 {
            return Err(Error::Resolution(format!(
                "the dyadic box of radius 2^-{k} holds {count} cells; at least 4 are needed"
            )));
        }
        levels.push(HolderLevel { k, radius: rho, oscillation: hi - lo });
    }
    let constant = levels.iter().all(|l| l.oscillation == T::zero());
    let (xs, ys): (Vec<T>, Vec<T>) = levels
        .iter()
        .filter(|l| l.oscillation > T::zero())
        .map(|l| (l.radius.ln(), l.oscillation.ln()))
        .unzip();
    let fit = if constant { None } else { least_squares_slope(&xs, &ys) };
    let reliable = fit.is_some_and(|(_, r2)| r2 >= T::lit(RELIABLE_R2));
    Ok(HolderFit {
        center: c,
        levels,
        alpha_hat: fit.map(|f| f.0),
        r2: fit.map(|f| f.1),
        constant,
        reliable,
    })
}

fn require_below_two<T: Real>(params: &ProblemParams<T>) -> Result<T> {
    if params.a_plus_n() < T::lit(2.0) {
        Ok(params.characteristic_exponent())
    } else {
        Err(Error::Domain(format!(
            "the Harnack ratio needs a+n < 2, but a+n = {} is {}",
            params.a_plus_n(),
            params.regime()
        )))
    }
}

/// `w = ũ / r^{2-a-n}` at cell centres.
pub fn harnack_ratio<T: Real>(u: &Field<T>, params: &ProblemParams<T>) -> Result<Field<T>> {
    let t = require_below_two(params)?;
    Ok(u.map_with_coords(|_, r, v| v / r.powf(t)))
}

/// Inverse of [`harnack_ratio`]: `w · r^{2-a-n}`.
pub fn multiply_by_characteristic<T: Real>(w: &Field<T>, params: &ProblemParams<T>) -> Result<Field<T>> {
    let t = require_below_two(params)?;
    Ok(w.map_with_coords(|_, r, v| v * r.powf(t)))
}

/// Interior residual of `w` in the equation with reduced weight `r^{b+n-1}`.
pub fn harnack_residual<T: Real>(w: &Field<T>, params: &ProblemParams<T>) -> Result<T> {
    let b = params.b()?;
    Ok(flux_form_residual(w, b + T::of_usize(params.n) - T::one(), &ProbeRegion::default_for(w.grid())))
}

/// Residual of the ratio of an angular harmonic with eigenvalue `λ`, which
/// carries the zero-order term `λ r^{b+n-3} w`.
pub fn harnack_residual_angular<T: Real>(w: &Field<T>, params: &ProblemParams<T>, lambda: T) -> Result<T> {
    let b = params.b()?;
    let e = b + T::of_usize(params.n) - T::one();
    Ok(flux_form_residual_angular(w, e, lambda, &ProbeRegion::default_for(w.grid())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackCheck<T> {
    pub fit: HolderFit<T>,
    /// `min(1, α*(b, n))`.
    pub cap: T,
    /// Slack allowed above the cap.
    pub allowance: T,
    /// `alpha_hat ≤ cap + allowance`; `None` when no slope was fitted.
    pub within_cap: Option<bool>,
}

pub const HARNACK_ALLOWANCE: f64 = 0.1;

/// Hölder fit of `w` at the `Σ₀` point nearest `center`, compared with
/// the exponent cap `min(1, α*(b, n))`.
pub fn harnack_regularity_check<T: Real>(
    w: &Field<T>,
    params: &ProblemParams<T>,
    center: &[T],
    k_min: i32,
    k_max: i32,
) -> Result<HarnackCheck<T>> {
    let b = params.b()?;
    let cap = T::one().min(alpha_star(b, params.n));
    let fit = holder_fit(w, center, k_min, k_max)?;
    let allowance = T::lit(HARNACK_ALLOWANCE);
    let within_cap = fit.alpha_hat.map(|a| a <= cap + allowance);
    Ok(HarnackCheck { fit, cap, allowance, within_cap })
}

/// As [`harnack_regularity_check`] for the ratio `w₀ + w₁ cos θ` of a field
/// with an axisymmetric part and a first angular harmonic.
pub fn harnack_regularity_check_angular<T: Real>(
    w0: &Field<T>,
    w1: &Field<T>,
    params: &ProblemParams<T>,
    center: &[T],
    k_min: i32,
    k_max: i32,
) -> Result<HarnackCheck<T>> {
    let b = params.b()?;
    let cap = T::one().min(alpha_star(b, params.n));
    let fit = holder_fit_angular(w0, w1, center, k_min, k_max)?;
    let allowance = T::lit(HARNACK_ALLOWANCE);
    let within_cap = fit.alpha_hat.map(|a| a <= cap + allowance);
    Ok(HarnackCheck { fit, cap, allowance, within_cap })
}

/// Eigenvalue `m(m+n-2)` of the degree-`m` spherical harmonics on `S^{n-1}`.
pub fn angular_eigenvalue<T: Real>(m: usize, n: usize) -> T {
    T::of_usize(m * (m + n - 2))
}

/// Closed form `(∫_ε^1 t^{1-a-n} dt)^{-1}`.
pub fn capacity_closed_form<T: Real>(a_plus_n: T, eps: T) -> T {
    let q = T::lit(2.0) - a_plus_n;
    let integral = if q == T::zero() { -eps.ln() } else { (T::one() - eps.powf(q)) / q };
    T::one() / integral
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityPoint<T> {
    pub eps: T,
    pub cap: T,
    pub closed_form: T,
    pub rel_err: T,
}

/// Nodes of the radial grid.
pub const CAPACITY_NODES: usize = 10_000;

/// Minimises `∫_ε^1 t^{a+n-1} (u')²` over piecewise-linear `u` with
/// `u(ε) = 1`, `u(1) = 0` on a log-spaced grid, by solving the tridiagonal
/// Euler–Lagrange system, and compares with the closed form.
pub fn capacity_profile<T: Real>(params: &ProblemParams<T>, eps_list: &[T]) -> Result<Vec<CapacityPoint<T>>> {
    eps_list.iter().map(|&eps| capacity_point(params, eps)).collect()
}

fn capacity_point<T: Real>(params: &ProblemParams<T>, eps: T) -> Result<CapacityPoint<T>> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::Argument(format!("capacity radii must lie in (0, 1), got {eps}")));
    }
    let p = params.reduced_exponent();
    let n = CAPACITY_NODES;
    let log_eps = eps.ln();
    let t: Vec<T> = (0..=n).map(|i| (log_eps * (T::one() - T::of_usize(i) / T::of_usize(n))).exp()).collect();
    let (gn, gw) = crate::quadrature::gauss_legendre::<T>(2);
    let half = T::lit(0.5);
    // Element conductances ∫ t^p dt / h².
    let kappa: Vec<T> = t
        .windows(2)
        .map(|w| {
            let h = w[1] - w[0];
            let mid = half * (w[0] + w[1]);
            let integral = gn.iter().zip(&gw).fold(T::zero(), |acc, (&x, &wt)| acc + wt * (mid + half * h * x).powf(p)) * half * h;
            integral / (h * h)
        })
        .collect();
    // Unknowns u_1..u_{n-1}; u_0 = 1, u_n = 0.
    let m = n - 1;
    let mut diag: Vec<T> = (0..m).map(|i| kappa[i] + kappa[i + 1]).collect();
    let off: Vec<T> = (0..m.saturating_sub(1)).map(|i| -kappa[i + 1]).collect();
    let mut rhs = vec![T::zero(); m];
    rhs[0] = kappa[0];
    for i in 1..m {
        let f = off[i - 1] / diag[i - 1];
        diag[i] = diag[i] - f * off[i - 1];
        rhs[i] = rhs[i] - f * rhs[i - 1];
    }
    let mut u = vec![T::zero(); n + 1];
    u[0] = T::one();
    u[m] = rhs[m - 1] / diag[m - 1];
    for i in (0..m - 1).rev() {
        u[i + 1] = (rhs[i] - off[i] * u[i + 2]) / diag[i];
    }
    let cap = kappa.iter().zip(u.windows(2)).fold(T::zero(), |acc, (&k, w)| acc + k * (w[1] - w[0]) * (w[1] - w[0]));
    if !cap.is_finite() {
        return Err(Error::Numeric(format!("non-finite capacity at eps = {eps}")));
    }
    let closed_form = capacity_closed_form(params.a_plus_n(), eps);
    Ok(CapacityPoint { eps, cap, closed_form, rel_err: ((cap - closed_form) / closed_form).abs() })
}

/// Limit behaviour of `cap(ε)` as `ε → 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CapacityVerdict {
    PositiveFinite,
    Vanishing,
    /// Supersingular: the radial surrogate does not see the divergence.
    DivergingPerPaper,
}

impl CapacityVerdict {
    pub fn for_params<T: Real>(params: &ProblemParams<T>) -> Self {
        match params.regime() {
            Regime::Supersingular => CapacityVerdict::DivergingPerPaper,
            Regime::MidRange => CapacityVerdict::PositiveFinite,
            Regime::Superdegenerate => CapacityVerdict::Vanishing,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CapacityVerdict::PositiveFinite => "positive finite",
            CapacityVerdict::Vanishing => "vanishing",
            CapacityVerdict::DivergingPerPaper => "diverging (per-paper, not surrogate-verified)",
        }
    }
}

/// How `cap(ε)` decays: `ε^{a+n-2}` for `a+n > 2`, `1/ln(1/ε)` at `a+n = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RateKind {
    Power,
    Logarithmic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityRate<T> {
    pub kind: RateKind,
    pub predicted: T,
    pub fitted: T,
    pub rel_err: T,
}

/// Fits the decay rate on the `count` smallest radii: the slope of `ln cap`
/// against `ln ε` (power law) or against `ln ln(1/ε)` (logarithmic, slope −1).
/// `None` outside the superdegenerate regime.
pub fn capacity_rate<T: Real>(params: &ProblemParams<T>, points: &[CapacityPoint<T>], count: usize) -> Option<CapacityRate<T>> {
    if params.regime() != Regime::Superdegenerate {
        return None;
    }
    let mut pts: Vec<&CapacityPoint<T>> = points.iter().collect();
    pts.sort_by(|a, b| a.eps.partial_cmp(&b.eps).unwrap_or(std::cmp::Ordering::Equal));
    pts.truncate(count.max(2));
    let log_case = params.a_plus_n() == T::lit(2.0);
    let xs: Vec<T> = pts
        .iter()
        .map(|p| if log_case { (-p.eps.ln()).ln() } else { p.eps.ln() })
        .collect();
    let ys: Vec<T> = pts.iter().map(|p| p.cap.ln()).collect();
    let (fitted, _) = least_squares_slope(&xs, &ys)?;
    let (kind, predicted) =
        if log_case { (RateKind::Logarithmic, -T::one()) } else { (RateKind::Power, params.a_plus_n() - T::lit(2.0)) };
    Some(CapacityRate { kind, predicted, fitted, rel_err: ((fitted - predicted) / predicted).abs() })
}

/// Zeroes the outermost ring of cells (outer x-columns and the top row).
pub fn mask_outer_ring<T: Real>(u: &Field<T>) -> Field<T> {
    let g = u.grid();
    let lat = g.lattice();
    let mut out = u.clone();
    for idx in 0..g.len() {
        let on_x_edge = (0..g.x_dims()).any(|ax| {
            let i = lat.index_along(idx, ax);
            i == 0 || i + 1 == lat.dims()[ax]
        });
        if on_x_edge || g.row_of(idx) + 1 == g.dr_res() {
            out.values_mut()[idx] = T::zero();
        }
    }
    out
}

/// `∫ r^{a+n-3} ũ² / ∫ r^{a+n-1} |∇ũ|²` after masking the outer ring.
pub fn hardy_ratio<T: Real>(u: &Field<T>, params: &ProblemParams<T>) -> Result<T> {
    let masked = mask_outer_ring(u);
    let an = params.a_plus_n();
    let energy = weighted_energy(&masked, an - T::one());
    if !(energy > T::zero()) {
        return Err(Error::Domain("the masked field has zero weighted energy".into()));
    }
    let mass = weighted_l2_norm(&masked, an - T::lit(3.0));
    Ok(mass * mass / energy)
}
