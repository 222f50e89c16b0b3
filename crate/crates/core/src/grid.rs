//! Cell-centred tensor grids on the reduced half-space `(x, r)` and on small
//! full grids in `R^d`, scalar fields on them, and the maps realising
//! `u(x, y) = ũ(x, |y|)`.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::{Error, ProblemParams, Real, Result};

/// Uniform cell-centred tensor lattice; the last axis varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    dims: Vec<usize>,
    strides: Vec<usize>,
    spacing: Vec<T>,
    lower: Vec<T>,
}

impl<T: Real> Lattice<T> {
    /// Lattice covering the box `Π [lower_k, upper_k]`.
    pub fn new(dims: Vec<usize>, lower: Vec<T>, upper: Vec<T>) -> Self {
        assert_eq!(dims.len(), lower.len());
        assert_eq!(dims.len(), upper.len());
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let spacing = dims
            .iter()
            .zip(lower.iter().zip(&upper))
            .map(|(&n, (&lo, &hi))| (hi - lo) / T::of_usize(n))
            .collect();
        Self { dims, strides, spacing, lower }
    }

    pub fn axes(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> &[T] {
        &self.spacing
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> T {
        self.spacing.iter().fold(T::one(), |acc, &h| acc * h)
    }

    /// Area of a face normal to `axis`.
    pub fn face_area(&self, axis: usize) -> T {
        self.spacing
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != axis)
            .fold(T::one(), |acc, (_, &h)| acc * h)
    }

    #[inline]
    pub fn index_along(&self, idx: usize, axis: usize) -> usize {
        (idx / self.strides[axis]) % self.dims[axis]
    }

    #[inline]
    pub fn coord_of_index(&self, axis: usize, i: usize) -> T {
        self.lower[axis] + (T::of_usize(i) + T::lit(0.5)) * self.spacing[axis]
    }

    #[inline]
    pub fn coord(&self, idx: usize, axis: usize) -> T {
        self.coord_of_index(axis, self.index_along(idx, axis))
    }

    pub fn center(&self, idx: usize) -> Vec<T> {
        (0..self.axes()).map(|k| self.coord(idx, k)).collect()
    }

    /// Neighbour one cell away along `axis` (`forward` = increasing index).
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let i = self.index_along(idx, axis);
        if forward {
            (i + 1 < self.dims[axis]).then(|| idx + self.strides[axis])
        } else {
            (i > 0).then(|| idx - self.strides[axis])
        }
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(&i, &s)| i * s).sum()
    }
}

/// Cell-centred grid on `(-X, X)^{d-n} × (0, R)`; the `r` axis is last.
///
/// Cell centres sit at `x_i = -X + (i + 1/2) h_x` and `r_j = (j + 1/2) h_r`,
/// so the weight `r^e` is never evaluated on `r = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiGrid<T> {
    x_dims: usize,
    dx_res: usize,
    dr_res: usize,
    x_extent: T,
    r_extent: T,
    lattice: Lattice<T>,
}

/// Reduced grid for `params`, with `d - n` axes in `x`.
pub fn make_axigrid<T: Real>(
    params: &ProblemParams<T>,
    x_extent: T,
    r_extent: T,
    dx_res: usize,
    dr_res: usize,
) -> Result<AxiGrid<T>> {
    AxiGrid::new(params.thin_dim(), x_extent, r_extent, dx_res, dr_res)
}

impl<T: Real> AxiGrid<T> {
    pub fn new(x_dims: usize, x_extent: T, r_extent: T, dx_res: usize, dr_res: usize) -> Result<Self> {
        if x_dims > 2 {
            return Err(Error::Unsupported(format!(
                "reduced grids support d-n <= 2, got d-n = {x_dims}"
            )));
        }
        if !(x_extent > T::zero() && r_extent > T::zero()) || !x_extent.is_finite() || !r_extent.is_finite() {
            return Err(Error::Argument(format!(
                "grid extents must be positive, got X = {x_extent}, R = {r_extent}"
            )));
        }
        if dr_res < 4 || (x_dims > 0 && dx_res < 4) {
            return Err(Error::Argument(format!(
                "grid resolutions must be at least 4, got dx = {dx_res}, dr = {dr_res}"
            )));
        }
        let mut dims = vec![dx_res; x_dims];
        dims.push(dr_res);
        let mut lower = vec![-x_extent; x_dims];
        lower.push(T::zero());
        let mut upper = vec![x_extent; x_dims];
        upper.push(r_extent);
        Ok(Self {
            x_dims,
            dx_res,
            dr_res,
            x_extent,
            r_extent,
            lattice: Lattice::new(dims, lower, upper),
        })
    }

    pub fn x_dims(&self) -> usize {
        self.x_dims
    }
    pub fn dx_res(&self) -> usize {
        self.dx_res
    }
    pub fn dr_res(&self) -> usize {
        self.dr_res
    }
    pub fn x_extent(&self) -> T {
        self.x_extent
    }
    pub fn r_extent(&self) -> T {
        self.r_extent
    }
    pub fn hx(&self) -> T {
        T::lit(2.0) * self.x_extent / T::of_usize(self.dx_res)
    }
    pub fn hr(&self) -> T {
        self.r_extent / T::of_usize(self.dr_res)
    }
    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }
    pub fn len(&self) -> usize {
        self.lattice.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }
    /// Axis index of `r`.
    pub fn r_axis(&self) -> usize {
        self.x_dims
    }
    /// Number of x-columns, `dx_res^{d-n}`.
    pub fn columns(&self) -> usize {
        self.dx_res.pow(self.x_dims as u32)
    }
    pub fn index(&self, column: usize, row: usize) -> usize {
        column * self.dr_res + row
    }
    pub fn column_of(&self, idx: usize) -> usize {
        idx / self.dr_res
    }
    pub fn row_of(&self, idx: usize) -> usize {
        idx % self.dr_res
    }
    pub fn r_at(&self, row: usize) -> T {
        (T::of_usize(row) + T::lit(0.5)) * self.hr()
    }
    pub fn x_of_index(&self, i: usize) -> T {
        -self.x_extent + (T::of_usize(i) + T::lit(0.5)) * self.hx()
    }
    /// x coordinates of a column.
    pub fn column_x(&self, column: usize) -> Vec<T> {
        let idx = self.index(column, 0);
        (0..self.x_dims).map(|k| self.lattice.coord(idx, k)).collect()
    }
    /// Column whose centre is nearest to `x` (clamped to the grid).
    pub fn nearest_column(&self, x: &[T]) -> usize {
        let mut col = 0;
        for (k, &xk) in x.iter().enumerate().take(self.x_dims) {
            let f = ((xk + self.x_extent) / self.hx() - T::lit(0.5)).round();
            let i = f.max(T::zero()).min(T::of_usize(self.dx_res - 1)).to_usize().unwrap_or(0);
            col += i * self.dx_res.pow((self.x_dims - 1 - k) as u32);
        }
        col
    }
}

/// Scalar grid function on an [`AxiGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: AxiGrid<T>,
    values: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: AxiGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values but the grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite field value at cell {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, r)` at the cell centres.
    pub fn from_fn(grid: &AxiGrid<T>, f: impl Fn(&[T], T) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for col in 0..grid.columns() {
            let x = grid.column_x(col);
            for j in 0..grid.dr_res() {
                values.push(f(&x, grid.r_at(j)));
            }
        }
        Self { grid: grid.clone(), values }
    }

    pub fn constant(grid: &AxiGrid<T>, c: T) -> Self {
        Self { grid: grid.clone(), values: vec![c; grid.len()] }
    }

    pub fn grid(&self) -> &AxiGrid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<T> {
        self.values
    }
    pub fn at(&self, column: usize, row: usize) -> T {
        self.values[self.grid.index(column, row)]
    }

    /// Pointwise map, keeping the grid.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise map with access to the cell centre.
    pub fn map_with_coords(&self, f: impl Fn(&[T], T, T) -> T) -> Self {
        let mut out = self.clone();
        for col in 0..self.grid.columns() {
            let x = self.grid.column_x(col);
            for j in 0..self.grid.dr_res() {
                let idx = self.grid.index(col, j);
                out.values[idx] = f(&x, self.grid.r_at(j), self.values[idx]);
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// CSV with header `x1,...,x_{d-n},r,value`, one cell per line in index
    /// order, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header: Vec<String> = (1..=self.grid.x_dims()).map(|k| format!("x{k}")).collect();
        header.push("r".into());
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for col in 0..self.grid.columns() {
            let x = self.grid.column_x(col);
            for j in 0..self.grid.dr_res() {
                for xk in &x {
                    write!(out, "{xk:.16e},")?;
                }
                writeln!(out, "{:.16e},{:.16e}", self.grid.r_at(j), self.at(col, j))?;
            }
        }
        Ok(())
    }

    /// Reads the format written by [`Field::write_csv`], reconstructing the grid
    /// from the cell centres.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (header, rows) = read_table(input)?;
        let ncoord = header.len() - 1;
        if header.last().map(String::as_str) != Some("value") || header.get(ncoord - 1).map(String::as_str) != Some("r") {
            return Err(Error::Parse(format!("unexpected field header {header:?}")));
        }
        let x_dims = ncoord - 1;
        let (counts, lo, hi) = infer_axes(&rows, ncoord)?;
        let x_extent = if x_dims > 0 { hi[0] } else { T::one() };
        let dx = if x_dims > 0 { counts[0] } else { 4 };
        let grid = AxiGrid::new(x_dims, x_extent, hi[x_dims], dx, counts[x_dims])?;
        if x_dims > 0 && (lo[0] + x_extent).abs() > T::lit(1e-9) * x_extent {
            return Err(Error::Parse("x axis is not symmetric about 0".into()));
        }
        let values = ordered_values(&rows, grid.lattice(), ncoord)?;
        Field::new(grid, values)
    }
}

/// Cell-centred full grid on `(-X, X)^{d-n} × (-R, R)^n`, for `d ≤ 4`.
///
/// The per-axis `y` resolution is even, so no cell centre lies on `Σ₀`.
#[derive(Clone, Debug, PartialEq)]
pub struct FullGrid<T> {
    x_dims: usize,
    y_dims: usize,
    nx: usize,
    ny: usize,
    x_extent: T,
    y_extent: T,
    lattice: Lattice<T>,
}

impl<T: Real> FullGrid<T> {
    pub const MAX_DIM: usize = 4;
    pub const MAX_RES: usize = 64;

    pub fn new(params: &ProblemParams<T>, x_extent: T, y_extent: T, nx: usize, ny: usize) -> Result<Self> {
        let x_dims = params.thin_dim();
        let y_dims = params.n;
        if params.d > Self::MAX_DIM {
            return Err(Error::Unsupported(format!("full grids need d <= {}, got {}", Self::MAX_DIM, params.d)));
        }
        if ny % 2 != 0 {
            return Err(Error::Argument(format!("y resolution must be even, got {ny}")));
        }
        if ny < 2 || ny > Self::MAX_RES || (x_dims > 0 && (nx < 2 || nx > Self::MAX_RES)) {
            return Err(Error::Argument(format!(
                "full-grid resolutions must lie in [2, {}], got nx = {nx}, ny = {ny}",
                Self::MAX_RES
            )));
        }
        if !(x_extent > T::zero() && y_extent > T::zero()) {
            return Err(Error::Argument("grid extents must be positive".into()));
        }
        let mut dims = vec![nx; x_dims];
        dims.extend(std::iter::repeat(ny).take(y_dims));
        let mut lower = vec![-x_extent; x_dims];
        lower.extend(std::iter::repeat(-y_extent).take(y_dims));
        let mut upper = vec![x_extent; x_dims];
        upper.extend(std::iter::repeat(y_extent).take(y_dims));
        Ok(Self { x_dims, y_dims, nx, ny, x_extent, y_extent, lattice: Lattice::new(dims, lower, upper) })
    }

    pub fn x_dims(&self) -> usize {
        self.x_dims
    }
    pub fn y_dims(&self) -> usize {
        self.y_dims
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn x_extent(&self) -> T {
        self.x_extent
    }
    pub fn y_extent(&self) -> T {
        self.y_extent
    }
    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }
    pub fn len(&self) -> usize {
        self.lattice.len()
    }
    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }
    /// `(x, y)` of a cell centre.
    pub fn split_center(&self, idx: usize) -> (Vec<T>, Vec<T>) {
        let c = self.lattice.center(idx);
        let y = c[self.x_dims..].to_vec();
        let mut x = c;
        x.truncate(self.x_dims);
        (x, y)
    }
    /// `|y|` of a cell centre.
    pub fn radius(&self, idx: usize) -> T {
        (self.x_dims..self.lattice.axes())
            .map(|k| {
                let y = self.lattice.coord(idx, k);
                y * y
            })
            .sum::<T>()
            .sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FullField<T> {
    grid: FullGrid<T>,
    values: Vec<T>,
}

impl<T: Real> FullField<T> {
    pub fn new(grid: FullGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Argument(format!(
                "field has {} values but the grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite full-field value".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &FullGrid<T>, f: impl Fn(&[T], &[T]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.split_center(idx);
                f(&x, &y)
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &FullGrid<T> {
        &self.grid
    }
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// CSV with header `x1,...,y1,...,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header: Vec<String> = (1..=self.grid.x_dims).map(|k| format!("x{k}")).collect();
        header.extend((1..=self.grid.y_dims).map(|k| format!("y{k}")));
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (idx, v) in self.values.iter().enumerate() {
            for c in self.grid.lattice.center(idx) {
                write!(out, "{c:.16e},")?;
            }
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let (header, rows) = read_table(input)?;
        let ncoord = header.len() - 1;
        let x_dims = header.iter().filter(|h| h.starts_with('x')).count();
        let y_dims = header.iter().filter(|h| h.starts_with('y')).count();
        if x_dims + y_dims != ncoord || y_dims < 2 {
            return Err(Error::Parse(format!("unexpected full-field header {header:?}")));
        }
        let (counts, _, hi) = infer_axes::<T>(&rows, ncoord)?;
        let params = ProblemParams::new(ncoord, y_dims, T::zero())?;
        let x_extent = if x_dims > 0 { hi[0] } else { T::one() };
        let nx = if x_dims > 0 { counts[0] } else { 2 };
        let grid = FullGrid::new(&params, x_extent, hi[x_dims], nx, counts[x_dims])?;
        let values = ordered_values(&rows, grid.lattice(), ncoord)?;
        FullField::new(grid, values)
    }
}

fn read_table<R: BufRead>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty CSV".into()))??
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    if header.len() < 2 {
        return Err(Error::Parse("CSV header needs at least two columns".into()));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("line {}: expected {} columns", lineno + 2, header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

/// Per-axis cell counts and box bounds inferred from cell centres.
fn infer_axes<T: Real>(rows: &[Vec<f64>], ncoord: usize) -> Result<(Vec<usize>, Vec<T>, Vec<T>)> {
    let mut counts = Vec::with_capacity(ncoord);
    let mut lo = Vec::with_capacity(ncoord);
    let mut hi = Vec::with_capacity(ncoord);
    for k in 0..ncoord {
        let uniq: BTreeSet<u64> = rows.iter().map(|r| r[k].to_bits()).collect();
        let mut vals: Vec<f64> = uniq.into_iter().map(f64::from_bits).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        if vals.len() < 2 {
            return Err(Error::Parse(format!("axis {k} has fewer than two distinct centres")));
        }
        let h = (vals[vals.len() - 1] - vals[0]) / (vals.len() - 1) as f64;
        counts.push(vals.len());
        lo.push(T::lit(vals[0] - 0.5 * h));
        hi.push(T::lit(vals[vals.len() - 1] + 0.5 * h));
    }
    Ok((counts, lo, hi))
}

fn ordered_values<T: Real>(rows: &[Vec<f64>], lattice: &Lattice<T>, ncoord: usize) -> Result<Vec<T>> {
    if rows.len() != lattice.len() {
        return Err(Error::Parse(format!("expected {} rows, found {}", lattice.len(), rows.len())));
    }
    let mut values = vec![T::nan(); lattice.len()];
    for row in rows {
        let mut multi = Vec::with_capacity(ncoord);
        for (k, &c) in row.iter().enumerate().take(ncoord) {
            let h = lattice.spacing()[k].as_f64();
            let i = ((c - lattice.lower()[k].as_f64()) / h - 0.5).round();
            if i < 0.0 || i as usize >= lattice.dims()[k] {
                return Err(Error::Parse(format!("coordinate {c} outside the inferred grid")));
            }
            multi.push(i as usize);
        }
        values[lattice.index(&multi)] = T::lit(row[ncoord]);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse("CSV does not cover every cell exactly once".into()));
    }
    Ok(values)
}

/// Linear interpolation weights along one axis of centres `c_i = lo + (i+1/2)h`,
/// extrapolating linearly inside the half-cell border strips.
fn linear_stencil<T: Real>(t: T, lo: T, h: T, n: usize) -> (usize, T) {
    let f = (t - lo) / h - T::lit(0.5);
    let base = f.floor().max(T::zero()).min(T::of_usize(n.saturating_sub(2)));
    let i = base.to_usize().unwrap_or(0);
    (i, f - base)
}

/// Lifts `ũ(x, r)` to `u(x, y) = ũ(x, |y|)` on a full grid by multilinear
/// interpolation in `(x, r)`.
pub fn lift_axisymmetric<T: Real>(field: &Field<T>, full: &FullGrid<T>) -> Result<FullField<T>> {
    let axi = field.grid();
    if axi.x_dims() != full.x_dims() {
        return Err(Error::Argument(format!(
            "reduced grid has {} x-axes, full grid has {}",
            axi.x_dims(),
            full.x_dims()
        )));
    }
    let slack = T::lit(1e-12);
    let mut offending = Vec::new();
    let mut values = Vec::with_capacity(full.len());
    let lat = axi.lattice();
    let k = axi.x_dims();
    for idx in 0..full.len() {
        let (x, _) = full.split_center(idx);
        let r = full.radius(idx);
        let inside = x.iter().all(|xi| xi.abs() <= axi.x_extent() * (T::one() + slack))
            && r <= axi.r_extent() * (T::one() + slack);
        if !inside {
            offending.push(idx);
            values.push(T::zero());
            continue;
        }
        let mut point = x.clone();
        point.push(r);
        let stencils: Vec<(usize, T)> = (0..=k)
            .map(|ax| linear_stencil(point[ax], lat.lower()[ax], lat.spacing()[ax], lat.dims()[ax]))
            .collect();
        let mut acc = T::zero();
        for corner in 0..(1usize << (k + 1)) {
            let mut w = T::one();
            let mut multi = Vec::with_capacity(k + 1);
            for (ax, &(i, t)) in stencils.iter().enumerate() {
                if corner >> ax & 1 == 1 {
                    w = w * t;
                    multi.push(i + 1);
                } else {
                    w = w * (T::one() - t);
                    multi.push(i);
                }
            }
            acc = acc + w * field.values()[lat.index(&multi)];
        }
        values.push(acc);
    }
    if !offending.is_empty() {
        let shown: Vec<String> = offending.iter().take(8).map(|i| i.to_string()).collect();
        return Err(Error::Range(format!(
            "{} full-grid cells lie outside the reduced grid (first cells: {})",
            offending.len(),
            shown.join(", ")
        )));
    }
    FullField::new(full.clone(), values)
}

/// Averages a full field over `|y|`-shells: the value at `(x_i, r_j)` is the
/// mean over full cells in x-column `i` with `|y| ∈ [r_j - h_r/2, r_j + h_r/2)`.
pub fn restrict_spherical_mean<T: Real>(full_field: &FullField<T>, axi: &AxiGrid<T>) -> Result<Field<T>> {
    let full = full_field.grid();
    if axi.x_dims() != full.x_dims() {
        return Err(Error::Argument("reduced and full grids disagree on d-n".into()));
    }
    let mut sums = vec![T::zero(); axi.len()];
    let mut counts = vec![0usize; axi.len()];
    for idx in 0..full.len() {
        let (x, _) = full.split_center(idx);
        let r = full.radius(idx);
        let j = (r / axi.hr()).floor();
        if j >= T::of_usize(axi.dr_res()) {
            continue;
        }
        let mut col = 0usize;
        let mut ok = true;
        for (ax, &xa) in x.iter().enumerate() {
            let i = ((xa + axi.x_extent()) / axi.hx()).floor();
            if i < T::zero() || i >= T::of_usize(axi.dx_res()) {
                ok = false;
                break;
            }
            col += i.to_usize().unwrap_or(0) * axi.dx_res().pow((axi.x_dims() - 1 - ax) as u32);
        }
        if !ok {
            continue;
        }
        let cell = axi.index(col, j.to_usize().unwrap_or(0));
        sums[cell] = sums[cell] + full_field.values()[idx];
        counts[cell] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Resolution(format!(
            "reduced cell (column {}, row {}) has an empty |y|-shell; refine the full grid",
            axi.column_of(empty),
            axi.row_of(empty)
        )));
    }
    let values = sums.iter().zip(&counts).map(|(&s, &c)| s / T::of_usize(c)).collect();
    Field::new(axi.clone(), values)
}

/// Midpoint approximation of `(∫ r^e ũ² dx dr)^{1/2}`.
pub fn weighted_l2_norm<T: Real>(field: &Field<T>, exponent: T) -> T {
    let g = field.grid();
    let vol = g.lattice().cell_volume();
    let sum: T = (0..g.len())
        .map(|idx| {
            let v = field.values()[idx];
            g.r_at(g.row_of(idx)).powf(exponent) * v * v
        })
        .sum();
    (sum * vol).sqrt()
}

/// `∫ r^e |∇ũ|² dx dr`, with one centred difference per interior face and the
/// weight taken at the face centre.
pub fn weighted_energy<T: Real>(field: &Field<T>, exponent: T) -> T {
    let g = field.grid();
    let lat = g.lattice();
    let vol = lat.cell_volume();
    let vals = field.values();
    let mut sum = T::zero();
    for idx in 0..g.len() {
        let r = g.r_at(g.row_of(idx));
        for ax in 0..lat.axes() {
            if let Some(nb) = lat.neighbor(idx, ax, true) {
                let h = lat.spacing()[ax];
                let rf = if ax == g.r_axis() { r + T::lit(0.5) * h } else { r };
                let q = (vals[nb] - vals[idx]) / h;
                sum = sum + rf.powf(exponent) * q * q;
            }
        }
    }
    sum * vol
}

/// `(∫ |y|^a u² dz)^{1/2}` on a full grid.
pub fn full_weighted_l2_norm<T: Real>(field: &FullField<T>, a: T) -> T {
    let g = field.grid();
    let vol = g.lattice().cell_volume();
    let sum: T = (0..g.len())
        .map(|idx| {
            let v = field.values()[idx];
            g.radius(idx).powf(a) * v * v
        })
        .sum();
    (sum * vol).sqrt()
}
