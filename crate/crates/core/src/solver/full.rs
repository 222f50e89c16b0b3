use std::time::Instant;

use super::{iteration_cap, SolveReport};
use crate::grid::{FullField, FullGrid};
use crate::linalg::{pcg, Csr};
use crate::{Error, ProblemParams, Real, Regime, Result};

/// Solves `-div(|y|^a ∇u) = 0` on a full grid with Dirichlet data on every
/// outer face and no condition at `Σ₀`.
///
/// The weight is evaluated at face centres; with an even number of cells per
/// `y`-axis no face centre lies on `Σ₀`, since `n ≥ 2` leaves at least one
/// other `y`-coordinate at a cell centre.
pub fn solve_full<T: Real>(
    full: &FullGrid<T>,
    params: &ProblemParams<T>,
    outer_data: &(dyn Fn(&[T], &[T]) -> T + Sync),
    tol: T,
) -> Result<(FullField<T>, SolveReport)> {
    if params.regime() == Regime::Supersingular {
        return Err(Error::Unsupported(format!(
            "full-grid solves are not supported in the supersingular regime (a+n = {})",
            params.a_plus_n()
        )));
    }
    if params.thin_dim() != full.x_dims() || params.n != full.y_dims() {
        return Err(Error::Argument("full grid does not match (d, n)".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let start = Instant::now();
    let lat = full.lattice();
    let kx = full.x_dims();
    let half = T::lit(0.5);
    let n = full.len();
    let mut rows = Vec::with_capacity(n);
    let mut rhs = vec![T::zero(); n];
    for idx in 0..n {
        let center = lat.center(idx);
        let mut row = Vec::with_capacity(2 * lat.axes() + 1);
        let mut diag = T::zero();
        for ax in 0..lat.axes() {
            let h = lat.spacing()[ax];
            let area = lat.face_area(ax);
            for forward in [false, true] {
                let sign = if forward { T::one() } else { -T::one() };
                let mut face = center.clone();
                face[ax] = face[ax] + sign * half * h;
                let rho = face[kx..].iter().map(|&y| y * y).sum::<T>().sqrt();
                let w = rho.powf(params.a);
                match lat.neighbor(idx, ax, forward) {
                    Some(nb) => {
                        let c = w * area / h;
                        diag = diag + c;
                        row.push((nb, -c));
                    }
                    None => {
                        let c = w * area / (half * h);
                        diag = diag + c;
                        rhs[idx] = rhs[idx] + c * outer_data(&face[..kx], &face[kx..]);
                    }
                }
            }
        }
        row.push((idx, diag));
        rows.push(row);
    }
    if rhs.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("outer data produced non-finite values".into()));
    }
    let matrix = Csr::from_rows(rows);
    let out = pcg(&matrix, &rhs, tol, iteration_cap(n))?;
    let report = SolveReport {
        iterations: out.iterations,
        relative_residual: out.relative_residual.as_f64(),
        assembled_unknowns: n,
        wall_time: start.elapsed().as_secs_f64(),
        weight_cap: None,
        cap_active: false,
    };
    Ok((FullField::new(full.clone(), out.x)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_linear_data() {
        let p = ProblemParams::<f64>::new(3, 2, -0.5).unwrap();
        let g = FullGrid::new(&p, 1.0, 1.0, 8, 8).unwrap();
        let (u, _) = solve_full(&g, &p, &|_, _| 1.5, 1e-12).unwrap();
        assert!(u.values().iter().all(|&v| (v - 1.5).abs() < 1e-9));
        let (u, _) = solve_full(&g, &p, &|x, _| x[0], 1e-12).unwrap();
        for idx in 0..g.len() {
            let (x, _) = g.split_center(idx);
            assert!((u.values()[idx] - x[0]).abs() < 1e-8);
        }
    }

    #[test]
    fn supersingular_is_rejected() {
        let p = ProblemParams::new(3, 2, -2.0).unwrap();
        let g = FullGrid::new(&p, 1.0, 1.0, 4, 4).unwrap();
        assert!(matches!(solve_full(&g, &p, &|_, _| 0.0, 1e-8), Err(Error::Unsupported(_))));
    }
}
