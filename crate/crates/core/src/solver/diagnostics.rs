//! Residual checks for the identities satisfied by axisymmetric solutions.

use crate::grid::{AxiGrid, Field};
use crate::{Error, ProblemParams, Real, Result};

/// Interior cells `|x_k| ≤ x_half_width`, `r_min ≤ r ≤ r_max` on which
/// residuals are measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRegion<T> {
    pub x_half_width: T,
    pub r_min: T,
    pub r_max: T,
}

impl<T: Real> ProbeRegion<T> {
    /// `|x| ≤ X/2`, `R/8 ≤ r ≤ R/2`.
    pub fn default_for(grid: &AxiGrid<T>) -> Self {
        Self {
            x_half_width: grid.x_extent() / T::lit(2.0),
            r_min: grid.r_extent() / T::lit(8.0),
            r_max: grid.r_extent() / T::lit(2.0),
        }
    }

    pub fn cells(&self, grid: &AxiGrid<T>) -> Vec<usize> {
        (0..grid.len())
            .filter(|&idx| {
                let r = grid.r_at(grid.row_of(idx));
                r >= self.r_min
                    && r <= self.r_max
                    && grid.column_x(grid.column_of(idx)).iter().all(|x| x.abs() <= self.x_half_width)
            })
            .collect()
    }
}

fn same_grid<T: Real>(a: &AxiGrid<T>, b: &AxiGrid<T>) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::Argument("fields live on different grids".into()))
    }
}

/// `ṽ = r⁻¹ ∂_r ũ`, with centred differences in the interior and second-order
/// one-sided differences on the first and last rows.
pub fn angular_derivative_field<T: Real>(u: &Field<T>, axi: &AxiGrid<T>) -> Result<Field<T>> {
    same_grid(u.grid(), axi)?;
    let nr = axi.dr_res();
    let h = axi.hr();
    let two = T::lit(2.0);
    let mut out = u.clone();
    for col in 0..axi.columns() {
        let at = |j: usize| u.at(col, j);
        for j in 0..nr {
            let d = if j == 0 {
                (-T::lit(3.0) * at(0) + T::lit(4.0) * at(1) - at(2)) / (two * h)
            } else if j + 1 == nr {
                (T::lit(3.0) * at(j) - T::lit(4.0) * at(j - 1) + at(j - 2)) / (two * h)
            } else {
                (at(j + 1) - at(j - 1)) / (two * h)
            };
            out.values_mut()[axi.index(col, j)] = d / axi.r_at(j);
        }
    }
    Ok(out)
}

/// `max |−Δ ũ − a ṽ|` over the default probe region, where `Δ = Δ_x + ∂_rr + (n-1) r⁻¹ ∂_r`.
pub fn laplacian_identity_residual<T: Real>(u: &Field<T>, v: &Field<T>, params: &ProblemParams<T>) -> Result<T> {
    laplacian_identity_residual_in(u, v, params, &ProbeRegion::default_for(u.grid()))
}

/// As [`laplacian_identity_residual`] on an explicit region.
///
/// Second derivatives use differences over `2h`, so the check measures the
/// truncation error of the field and not just the equation the solver
/// enforced on its own compact stencil.
pub fn laplacian_identity_residual_in<T: Real>(
    u: &Field<T>,
    v: &Field<T>,
    params: &ProblemParams<T>,
    region: &ProbeRegion<T>,
) -> Result<T> {
    let g = u.grid();
    same_grid(g, v.grid())?;
    let lat = g.lattice();
    let vals = u.values();
    let ra = g.r_axis();
    let four = T::lit(4.0);
    let mut worst = T::zero();
    for idx in region.cells(g) {
        let mut lap = T::zero();
        for ax in 0..lat.axes() {
            let h = lat.spacing()[ax];
            let step = lat.stride(ax);
            let i = lat.index_along(idx, ax);
            if i < 2 || i + 2 >= lat.dims()[ax] {
                return Err(Error::Resolution("probe cells need two neighbours on each side".into()));
            }
            lap = lap + (vals[idx + 2 * step] - T::lit(2.0) * vals[idx] + vals[idx - 2 * step]) / (four * h * h);
            if ax == ra {
                let dr = (vals[idx + step] - vals[idx - step]) / (T::lit(2.0) * h);
                lap = lap + T::of_usize(params.n - 1) * dr / g.r_at(g.row_of(idx));
            }
        }
        worst = worst.max((-lap - params.a * v.values()[idx]).abs());
    }
    Ok(worst)
}

/// `max |div(r^e ∇ f)|` over `region`, in flux form with face-centre weights.
pub fn flux_form_residual<T: Real>(field: &Field<T>, exponent: T, region: &ProbeRegion<T>) -> T {
    flux_form_residual_angular(field, exponent, T::zero(), region)
}

/// `max |div(r^e ∇ f) - λ r^{e-2} f|` over `region`, the residual of an
/// angular harmonic with eigenvalue `λ`.
pub fn flux_form_residual_angular<T: Real>(field: &Field<T>, exponent: T, lambda: T, region: &ProbeRegion<T>) -> T {
    let g = field.grid();
    let lat = g.lattice();
    let vals = field.values();
    let vol = lat.cell_volume();
    let half = T::lit(0.5);
    let mut worst = T::zero();
    for idx in region.cells(g) {
        let rj = g.r_at(g.row_of(idx));
        let mut acc = T::zero();
        for ax in 0..lat.axes() {
            let h = lat.spacing()[ax];
            let area = lat.face_area(ax);
            for forward in [false, true] {
                if let Some(nb) = lat.neighbor(idx, ax, forward) {
                    let rf = if ax == g.r_axis() {
                        if forward { rj + half * h } else { rj - half * h }
                    } else {
                        rj
                    };
                    acc = acc + rf.powf(exponent) * area * (vals[nb] - vals[idx]) / h;
                }
            }
        }
        let reaction = lambda * rj.powf(exponent - T::lit(2.0)) * vals[idx];
        worst = worst.max((acc / vol - reaction).abs());
    }
    worst
}

/// Residual of `ṽ` in the equation with reduced weight `r^{a+n+1}`.
pub fn v_equation_residual<T: Real>(v: &Field<T>, params: &ProblemParams<T>) -> T {
    flux_form_residual(v, params.a_plus_n() + T::one(), &ProbeRegion::default_for(v.grid()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_axigrid;
    use crate::solver::{assemble, solve, BoundaryCondition};

    fn setup(a: f64, n: usize, res: usize) -> (ProblemParams<f64>, AxiGrid<f64>) {
        let p = ProblemParams::new(n + 1, n, a).unwrap();
        let g = make_axigrid(&p, 1.0, 1.0, res, res).unwrap();
        (p, g)
    }

    #[test]
    fn angular_derivative_examples() {
        let (p, g) = setup(-0.5, 2, 32);
        let v = angular_derivative_field(&Field::from_fn(&g, |_, r| r * r), &g).unwrap();
        assert!(v.values().iter().all(|&x| (x - 2.0).abs() < 1e-10));
        let v = angular_derivative_field(&Field::from_fn(&g, |x, _| x[0]), &g).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        let t = p.characteristic_exponent();
        let v = angular_derivative_field(&Field::from_fn(&g, |_, r| r.powf(t)), &g).unwrap();
        for idx in ProbeRegion::default_for(&g).cells(&g) {
            let r = g.r_at(g.row_of(idx));
            let exact = t * r.powf(-p.a_plus_n());
            assert!((v.values()[idx] - exact).abs() < 1e-2 * exact);
        }
    }

    #[test]
    fn identity_residual_examples() {
        let (p, g) = setup(-1.0, 2, 32);
        let u = Field::from_fn(&g, |x, _| x[0]);
        let v = angular_derivative_field(&u, &g).unwrap();
        assert_eq!(laplacian_identity_residual(&u, &v, &p).unwrap(), 0.0);
        for (a, n) in [(-1.0, 2), (-0.5, 3)] {
            let (p, g) = setup(a, n, 32);
            let u = Field::from_fn(&g, |_, r| r * r);
            let v = angular_derivative_field(&u, &g).unwrap();
            let res = laplacian_identity_residual(&u, &v, &p).unwrap();
            assert!((res - (2.0 * n as f64 + 2.0 * a).abs()).abs() < 1e-8, "{res}");
        }
        let other = AxiGrid::new(1, 1.0, 2.0, 32, 32).unwrap();
        assert!(laplacian_identity_residual(&u, &Field::constant(&other, 0.0), &p).is_err());
    }

    #[test]
    fn v_equation_examples() {
        let (p, g) = setup(-1.0, 2, 16);
        assert_eq!(v_equation_residual(&Field::constant(&g, 4.0), &p), 0.0);
        assert!(v_equation_residual(&Field::from_fn(&g, |_, r| r), &p) > 0.1);
    }

    #[test]
    fn identities_hold_for_solved_fields() {
        let outer = |x: &[f64], r: f64| (x[0]).cos() * (r).cosh() + 0.3 * x[0] * x[0] - 0.3 * r * r * 0.5;
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for res in [16, 32, 64] {
            let (p, g) = setup(-1.0, 2, res);
            let sys = assemble(&g, p.reduced_exponent(), &BoundaryCondition::conormal_homogeneous(outer)).unwrap();
            let (u, _) = solve(&sys, 1e-12).unwrap();
            let v = angular_derivative_field(&u, &g).unwrap();
            let id = laplacian_identity_residual(&u, &v, &p).unwrap();
            let ve = v_equation_residual(&v, &p);
            assert!(id < prev.0 && ve < prev.1, "{res}: {id} {ve}");
            prev = (id, ve);
        }
    }
}
