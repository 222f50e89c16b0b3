//! Flux-form finite-volume discretisation of `-div(r^e ∇ũ) = 0` on the
//! reduced half-space, with the three conditions at `Σ₀`, and of
//! `-div(|y|^a ∇u) = 0` on small full grids.

mod diagnostics;
mod full;

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::grid::{AxiGrid, Field};
use crate::linalg::{pcg, Csr};
use crate::params::{classify_regime, Regime};
use crate::{Error, Real, Result};

pub use diagnostics::{
    angular_derivative_field, flux_form_residual, flux_form_residual_angular, laplacian_identity_residual, laplacian_identity_residual_in,
    v_equation_residual, ProbeRegion,
};
pub use full::solve_full;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Flux data `g(x)` on `Σ₀`.
pub type SigmaData<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// Dirichlet data `(x, r) ↦ value` on the outer boundary.
pub type OuterData<T> = Arc<dyn Fn(&[T], T) -> T + Send + Sync>;

/// Condition imposed on the `r = 0` face.
#[derive(Clone)]
pub enum SigmaCondition<T> {
    /// `lim r^e ∂_r ũ = 0`.
    ConormalHomogeneous,
    /// `-lim r^e ∂_r ũ = g(x)`.
    ConormalFlux(SigmaData<T>),
    /// `ũ = 0` on `Σ₀`.
    DirichletZero,
}

impl<T> SigmaCondition<T> {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaCondition::ConormalHomogeneous => "conormal-homogeneous",
            SigmaCondition::ConormalFlux(_) => "conormal-flux",
            SigmaCondition::DirichletZero => "dirichlet-zero",
        }
    }
}

impl<T> fmt::Debug for SigmaCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Condition at `Σ₀` together with Dirichlet data on the rest of the boundary.
#[derive(Clone)]
pub struct BoundaryCondition<T> {
    pub at_sigma0: SigmaCondition<T>,
    pub outer: OuterData<T>,
}

impl<T> fmt::Debug for BoundaryCondition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryCondition").field("at_sigma0", &self.at_sigma0).finish_non_exhaustive()
    }
}

impl<T: Real> BoundaryCondition<T> {
    pub fn conormal_homogeneous(outer: impl Fn(&[T], T) -> T + Send + Sync + 'static) -> Self {
        Self { at_sigma0: SigmaCondition::ConormalHomogeneous, outer: Arc::new(outer) }
    }

    pub fn conormal_flux(
        g: impl Fn(&[T]) -> T + Send + Sync + 'static,
        outer: impl Fn(&[T], T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { at_sigma0: SigmaCondition::ConormalFlux(Arc::new(g)), outer: Arc::new(outer) }
    }

    pub fn dirichlet_zero(outer: impl Fn(&[T], T) -> T + Send + Sync + 'static) -> Self {
        Self { at_sigma0: SigmaCondition::DirichletZero, outer: Arc::new(outer) }
    }

    /// Checks the condition against the regime of `a + n = weight_exponent + 1`.
    pub fn validate(&self, weight_exponent: T) -> Result<()> {
        let an = weight_exponent + T::one();
        if !an.is_finite() {
            return Err(Error::Config(format!("weight exponent must be finite, got {weight_exponent}")));
        }
        let regime = classify_regime(an, 0);
        match &self.at_sigma0 {
            SigmaCondition::ConormalFlux(_) if regime != Regime::MidRange => Err(Error::Config(format!(
                "conormal flux data on Σ₀ requires the mid-range regime 0 < a+n < 2, but a+n = {an} is {regime}"
            ))),
            SigmaCondition::ConormalHomogeneous if regime == Regime::Supersingular => Err(Error::Config(format!(
                "conormal conditions need an integrable weight (a+n > 0), but a+n = {an} is {regime}"
            ))),
            SigmaCondition::DirichletZero if an >= T::lit(2.0) => Err(Error::Config(format!(
                "the Dirichlet condition on Σ₀ requires a+n < 2, but a+n = {an} is {regime}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Diagnostics of one linear solve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub assembled_unknowns: usize,
    /// Excluded from serialised artifacts so that they stay byte-reproducible.
    #[serde(skip)]
    pub wall_time: f64,
    /// Largest admissible face weight when `e < 0` (the value of `r^e` at `r = h_r/4`).
    pub weight_cap: Option<f64>,
    /// Whether any face weight was actually clipped by the cap.
    pub cap_active: bool,
}

/// Assembled symmetric system `K u = b` on a reduced grid.
#[derive(Clone, Debug)]
pub struct LinearSystem<T> {
    grid: AxiGrid<T>,
    weight_exponent: T,
    matrix: Csr<T>,
    rhs: Vec<T>,
    weight_cap: Option<T>,
    cap_active: bool,
}

impl<T: Real> LinearSystem<T> {
    pub fn grid(&self) -> &AxiGrid<T> {
        &self.grid
    }
    pub fn weight_exponent(&self) -> T {
        self.weight_exponent
    }
    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }
    pub fn unknowns(&self) -> usize {
        self.rhs.len()
    }
    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }
    /// `max |K - Kᵀ|`.
    pub fn max_asymmetry(&self) -> T {
        self.matrix.max_asymmetry()
    }
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.matrix.matvec(u, &mut out);
        out
    }
    /// Cellwise `K u - b`.
    pub fn residual(&self, u: &Field<T>) -> Vec<T> {
        self.apply(u.values()).into_iter().zip(&self.rhs).map(|(ku, &b)| ku - b).collect()
    }
    pub fn weight_cap(&self) -> Option<T> {
        self.weight_cap
    }
}

/// Assembles the flux-form system for weight `r^{weight_exponent}`.
///
/// Interior faces carry conductance `w_f · area / h` with `w_f` the weight at
/// the face centre; outer Dirichlet faces use the half-cell distance. On the
/// `r = 0` face the conormal conditions contribute a flux, and the Dirichlet
/// condition uses the conductance `area · (1-e) / r_0^{1-e}` obtained by
/// integrating `r^{-e}` over the half cell, which is exact for profiles with
/// constant weighted flux.
pub fn assemble<T: Real>(axi: &AxiGrid<T>, weight_exponent: T, bc: &BoundaryCondition<T>) -> Result<LinearSystem<T>> {
    assemble_angular(axi, weight_exponent, T::zero(), bc)
}

/// As [`assemble`] for the angular harmonic `ũ(x, r) Y(θ)` with `Δ_S Y = -λ Y`,
/// which adds the zero-order term `λ r^{e-2} ũ` (midpoint rule per cell).
/// For a spherical harmonic of degree `m` on `S^{n-1}`, `λ = m(m+n-2)`.
pub fn assemble_angular<T: Real>(
    axi: &AxiGrid<T>,
    weight_exponent: T,
    lambda: T,
    bc: &BoundaryCondition<T>,
) -> Result<LinearSystem<T>> {
    bc.validate(weight_exponent)?;
    if !(lambda >= T::zero() && lambda.is_finite()) {
        return Err(Error::Argument(format!("angular eigenvalue must be finite and non-negative, got {lambda}")));
    }
    let e = weight_exponent;
    let lat = axi.lattice();
    let ra = axi.r_axis();
    let hr = axi.hr();
    let cap = (e < T::zero()).then(|| (hr / T::lit(4.0)).powf(e));
    let weight = |r: T| -> (T, bool) {
        let w = r.powf(e);
        match cap {
            Some(c) if w > c => (c, true),
            _ => (w, false),
        }
    };
    let half = T::lit(0.5);
    let n = axi.len();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![T::zero(); n];
    let mut cap_active = false;
    for idx in 0..n {
        let col = axi.column_of(idx);
        let j = axi.row_of(idx);
        let rj = axi.r_at(j);
        let x = axi.column_x(col);
        let mut row = Vec::with_capacity(2 * lat.axes() + 1);
        let mut diag = T::zero();
        for ax in 0..lat.axes() {
            let h = lat.spacing()[ax];
            let area = lat.face_area(ax);
            for forward in [false, true] {
                let sign = if forward { T::one() } else { -T::one() };
                // Face radii as j h_r, so both sides of a face see the same weight bit for bit.
                let r_face = if ax != ra {
                    rj
                } else if forward {
                    hr * T::of_usize(j + 1)
                } else {
                    hr * T::of_usize(j)
                };
                match lat.neighbor(idx, ax, forward) {
                    Some(nb) => {
                        let (w, clipped) = weight(r_face);
                        cap_active |= clipped;
                        let c = w * area / h;
                        diag = diag + c;
                        row.push((nb, -c));
                    }
                    None if ax == ra && !forward => match &bc.at_sigma0 {
                        SigmaCondition::ConormalHomogeneous => {}
                        SigmaCondition::ConormalFlux(g) => rhs[idx] = rhs[idx] + g(&x) * area,
                        SigmaCondition::DirichletZero => {
                            let one_minus = T::one() - e;
                            diag = diag + area * one_minus / rj.powf(one_minus);
                        }
                    },
                    None => {
                        let (w, clipped) = weight(r_face);
                        cap_active |= clipped;
                        let c = w * area / (half * h);
                        diag = diag + c;
                        let value = if ax == ra {
                            (bc.outer)(&x, r_face)
                        } else {
                            let mut xb = x.clone();
                            xb[ax] = sign * axi.x_extent();
                            (bc.outer)(&xb, rj)
                        };
                        rhs[idx] = rhs[idx] + c * value;
                    }
                }
            }
        }
        if lambda > T::zero() {
            diag = diag + lambda * rj.powf(e - T::lit(2.0)) * lat.cell_volume();
        }
        row.push((idx, diag));
        rows.push(row);
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("boundary data produced non-finite values".into()));
    }
    Ok(LinearSystem {
        grid: axi.clone(),
        weight_exponent: e,
        matrix: Csr::from_rows(rows),
        rhs,
        weight_cap: cap,
        cap_active,
    })
}

/// Iteration cap `50 √N + 1000`.
pub fn iteration_cap(unknowns: usize) -> usize {
    (50.0 * (unknowns as f64).sqrt()) as usize + 1000
}

/// Solves an assembled system by Jacobi-preconditioned conjugate gradients.
pub fn solve<T: Real>(system: &LinearSystem<T>, tol: T) -> Result<(Field<T>, SolveReport)> {
    if !(tol > T::zero()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let start = Instant::now();
    let out = pcg(&system.matrix, &system.rhs, tol, iteration_cap(system.unknowns()))?;
    let report = SolveReport {
        iterations: out.iterations,
        relative_residual: out.relative_residual.as_f64(),
        assembled_unknowns: system.unknowns(),
        wall_time: start.elapsed().as_secs_f64(),
        weight_cap: system.weight_cap.map(Real::as_f64),
        cap_active: system.cap_active,
    };
    Ok((Field::new(system.grid.clone(), out.x)?, report))
}
