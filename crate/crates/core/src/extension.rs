//! Poisson-kernel extension of periodic traces on `Σ₀`, the Dirichlet-to-
//! Neumann map, the spectral fractional Laplacian and the energy identity
//! linking them.
//!
//! Traces live on the torus `(-X, X)^{d-n}` with `d - n ∈ {1, 2}`, sampled at
//! cell centres `x_i = -X + (i + 1/2) h` so that they line up with the
//! columns of an [`AxiGrid`] of the same resolution.

use std::io::{BufRead, Write};
use std::sync::OnceLock;

use num_complex::Complex;
use rayon::prelude::*;

use crate::grid::{AxiGrid, Field};
use crate::quadrature::{gauss_legendre, integrate};
use crate::special::{gamma, sphere_area};
use crate::{Error, ProblemParams, Real, Regime, Result};

/// Real samples of a periodic function on `(-X, X)^k`, `k ∈ {1, 2}`.
#[derive(Clone, Debug)]
pub struct TraceFunction<T> {
    x_dims: usize,
    n: usize,
    x_extent: T,
    samples: Vec<T>,
    mean: T,
    spectrum: OnceLock<Vec<Complex<T>>>,
}

impl<T: Real> TraceFunction<T> {
    pub fn new(x_dims: usize, x_extent: T, n: usize, samples: Vec<T>) -> Result<Self> {
        if !(1..=2).contains(&x_dims) {
            return Err(Error::Unsupported(format!("traces need 1 or 2 dimensions, got {x_dims}")));
        }
        if n < 4 || !(x_extent > T::zero()) {
            return Err(Error::Argument(format!("need n >= 4 and X > 0, got n = {n}, X = {x_extent}")));
        }
        if samples.len() != n.pow(x_dims as u32) {
            return Err(Error::Argument(format!("expected {} samples, got {}", n.pow(x_dims as u32), samples.len())));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite trace sample".into()));
        }
        let mean = samples.iter().copied().sum::<T>() / T::of_usize(samples.len());
        Ok(Self { x_dims, n, x_extent, samples, mean, spectrum: OnceLock::new() })
    }

    pub fn from_fn(x_dims: usize, x_extent: T, n: usize, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let h = T::lit(2.0) * x_extent / T::of_usize(n);
        let coord = |i: usize| -x_extent + (T::of_usize(i) + T::lit(0.5)) * h;
        let samples = (0..n.pow(x_dims as u32))
            .map(|idx| {
                let x: Vec<T> = index_to_multi(idx, n, x_dims).into_iter().map(coord).collect();
                f(&x)
            })
            .collect();
        Self::new(x_dims, x_extent, n, samples)
    }

    pub fn x_dims(&self) -> usize {
        self.x_dims
    }
    pub fn resolution(&self) -> usize {
        self.n
    }
    pub fn x_extent(&self) -> T {
        self.x_extent
    }
    pub fn samples(&self) -> &[T] {
        &self.samples
    }
    pub fn mean(&self) -> T {
        self.mean
    }
    pub fn spacing(&self) -> T {
        T::lit(2.0) * self.x_extent / T::of_usize(self.n)
    }
    pub fn coords(&self, idx: usize) -> Vec<T> {
        let h = self.spacing();
        index_to_multi(idx, self.n, self.x_dims)
            .into_iter()
            .map(|i| -self.x_extent + (T::of_usize(i) + T::lit(0.5)) * h)
            .collect()
    }

    /// Integer mode along one axis for DFT index `m`.
    fn mode(&self, m: usize) -> i64 {
        let half = self.n as i64 / 2;
        let m = m as i64;
        if m < self.n as i64 - half { m } else { m - self.n as i64 }
    }

    /// Wave vector `ξ = π m / X` of a spectral index.
    pub fn wavevector(&self, idx: usize) -> Vec<T> {
        index_to_multi(idx, self.n, self.x_dims)
            .into_iter()
            .map(|m| T::PI() * T::lit(self.mode(m) as f64) / self.x_extent)
            .collect()
    }

    /// Coefficients `û` with `u(x_k) = Σ û e^{i ξ·x_k}`; computed once.
    pub fn spectrum(&self) -> &[Complex<T>] {
        self.spectrum.get_or_init(|| {
            let total = self.samples.len();
            let points: Vec<Vec<T>> = (0..total).map(|k| self.coords(k)).collect();
            let norm = T::one() / T::of_usize(total);
            (0..total)
                .into_par_iter()
                .map(|m| {
                    let xi = self.wavevector(m);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (x, &u) in points.iter().zip(&self.samples) {
                        let phase = -xi.iter().zip(x).fold(T::zero(), |p, (&a, &b)| p + a * b);
                        acc = acc + Complex::from_polar(u, phase);
                    }
                    acc * norm
                })
                .collect()
        })
    }

    /// Evaluates `Re Σ c_m e^{i ξ_m·x}` at arbitrary points.
    fn synthesize(&self, coeffs: &[Complex<T>], points: &[Vec<T>]) -> Vec<T> {
        let xis: Vec<Vec<T>> = (0..coeffs.len()).map(|m| self.wavevector(m)).collect();
        points
            .par_iter()
            .map(|x| {
                coeffs.iter().zip(&xis).fold(T::zero(), |acc, (c, xi)| {
                    let phase = xi.iter().zip(x).fold(T::zero(), |p, (&a, &b)| p + a * b);
                    acc + c.re * phase.cos() - c.im * phase.sin()
                })
            })
            .collect()
    }

    /// `(2X)^k Σ |ξ|^{2s} |û|²`, i.e. `∫ |(-Δ)^{s/2} u|²` on the torus by Parseval.
    pub fn ds_norm_sq(&self, s: T) -> T {
        let vol = (T::lit(2.0) * self.x_extent).powi(self.x_dims as i32);
        let sum: T = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(m, c)| {
                let k2 = self.wavevector(m).iter().fold(T::zero(), |a, &x| a + x * x);
                if k2 == T::zero() { T::zero() } else { k2.powf(s) * c.norm_sqr() }
            })
            .sum();
        vol * sum
    }

    /// CSV with header `x1,...,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut header: Vec<String> = (1..=self.x_dims).map(|k| format!("x{k}")).collect();
        header.push("value".into());
        writeln!(out, "{}", header.join(","))?;
        for (idx, v) in self.samples.iter().enumerate() {
            for c in self.coords(idx) {
                write!(out, "{c:.16e},")?;
            }
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let x_dims = cols.len().saturating_sub(1);
        if cols.last() != Some(&"value") || !(1..=2).contains(&x_dims) {
            return Err(Error::Parse(format!("unexpected trace header {header:?}")));
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(e.to_string()))?;
            if row.len() != x_dims + 1 {
                return Err(Error::Parse(format!("expected {} columns", x_dims + 1)));
            }
            rows.push(row);
        }
        let n = (rows.len() as f64).powf(1.0 / x_dims as f64).round() as usize;
        if n.pow(x_dims as u32) != rows.len() || n < 2 {
            return Err(Error::Parse("trace CSV is not a full tensor grid".into()));
        }
        let first = rows[0][x_dims - 1];
        let h = rows
            .iter()
            .map(|r| r[x_dims - 1])
            .find(|&v| v != first)
            .map(|v| v - first)
            .ok_or_else(|| Error::Parse("trace CSV has a single column".into()))?;
        let x_extent = -(first - 0.5 * h);
        Self::new(x_dims, T::lit(x_extent), n, rows.iter().map(|r| T::lit(r[x_dims])).collect())
    }
}

fn index_to_multi(idx: usize, n: usize, dims: usize) -> Vec<usize> {
    let mut out = vec![0; dims];
    let mut rest = idx;
    for k in (0..dims).rev() {
        out[k] = rest % n;
        rest /= n;
    }
    out
}

/// `(-Δ)^s u` on the torus via the multiplier `|ξ|^{2s}`.
pub fn fractional_laplacian_spectral<T: Real>(u: &TraceFunction<T>, s: T) -> Result<TraceFunction<T>> {
    if !(s > T::zero() && s < T::one()) {
        return Err(Error::Argument(format!("fractional order must lie in (0, 1), got {s}")));
    }
    let coeffs: Vec<Complex<T>> = u
        .spectrum()
        .iter()
        .enumerate()
        .map(|(m, c)| {
            let k2 = u.wavevector(m).iter().fold(T::zero(), |a, &x| a + x * x);
            if k2 == T::zero() { Complex::new(T::zero(), T::zero()) } else { c * k2.powf(s) }
        })
        .collect();
    let points: Vec<Vec<T>> = (0..u.samples.len()).map(|k| u.coords(k)).collect();
    TraceFunction::new(u.x_dims, u.x_extent, u.n, u.synthesize(&coeffs, &points))
}

/// `P(x, ρ) = c ρ^{2s} / (|x|² + ρ²)^{(k+2s)/2}` with `k = d - n` and
/// `c = Γ((k+2s)/2) / (π^{k/2} Γ(s))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonKernel<T> {
    pub k: usize,
    pub s: T,
    pub c: T,
}

impl<T: Real> PoissonKernel<T> {
    pub fn new(params: &ProblemParams<T>) -> Result<Self> {
        if params.regime() != Regime::MidRange {
            return Err(Error::Domain(format!(
                "the Poisson kernel needs 0 < a+n < 2, but a+n = {} is {}",
                params.a_plus_n(),
                params.regime()
            )));
        }
        let k = params.thin_dim();
        if k == 0 || T::of_usize(params.d) + params.a < T::lit(2.0) {
            return Err(Error::Unsupported(format!(
                "the extension needs d-n >= 2s, i.e. d+a >= 2 (got d = {}, a = {})",
                params.d, params.a
            )));
        }
        let s = params.s()?;
        let kt = T::of_usize(k);
        let two = T::lit(2.0);
        let c = gamma((kt + two * s) / two) / (T::PI().powf(kt / two) * gamma(s));
        Ok(Self { k, s, c })
    }

    #[inline]
    pub fn eval_sq(&self, x_sq: T, rho: T) -> T {
        let p = (T::of_usize(self.k) + T::lit(2.0) * self.s) / T::lit(2.0);
        self.c * rho.powf(T::lit(2.0) * self.s) / (x_sq + rho * rho).powf(p)
    }

    /// Mass of `P(·, ρ)` outside the ball `|x| > L`.
    ///
    /// With `x = L/u` and `v = u^{2s}` the tail becomes a smooth integral on `(0, 1)`.
    pub fn tail_outside_ball(&self, rho: T, l: T) -> Result<T> {
        let kt = T::of_usize(self.k);
        let two = T::lit(2.0);
        let p = (kt + two * self.s) / two;
        let inv_s = T::one() / self.s;
        let f = |v: T| (l * l + rho * rho * v.powf(inv_s)).powf(-p);
        let body = integrate(f, T::zero(), T::one(), T::lit(1e-15), T::lit(1e-12))?;
        Ok(sphere_area::<T>(self.k) * self.c * rho.powf(two * self.s) * l.powf(kt) / (two * self.s) * body)
    }

    /// Mass outside the square `[-L, L]²` (`k = 2` only), via the radial
    /// antiderivative `∫_R^∞ P ρ' dρ' = c ρ^{2s} (R² + ρ²)^{-s} / (2s)`.
    fn tail_outside_square(&self, rho: T, l: T) -> T {
        let (nodes, weights) = gauss_legendre::<T>(12);
        let two = T::lit(2.0);
        let quarter = T::FRAC_PI_4();
        let mut acc = T::zero();
        // Eight congruent octants; θ ∈ [0, π/4] with R(θ) = L / cos θ.
        for (&t, &w) in nodes.iter().zip(&weights) {
            let theta = quarter * (t + T::one()) / two;
            let r = l / theta.cos();
            acc = acc + w * (r * r + rho * rho).powf(-self.s);
        }
        T::lit(8.0) * quarter / two * acc * self.c * rho.powf(two * self.s) / (two * self.s)
    }
}

/// Pointwise Poisson kernel.
pub fn poisson_kernel<T: Real>(x: &[T], rho: T, params: &ProblemParams<T>) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(Error::Domain(format!("the Poisson kernel needs |y| > 0, got {rho}")));
    }
    let kernel = PoissonKernel::new(params)?;
    if x.len() != kernel.k {
        return Err(Error::Argument(format!("expected a point in R^{}, got {} coordinates", kernel.k, x.len())));
    }
    Ok(kernel.eval_sq(x.iter().fold(T::zero(), |a, &v| a + v * v), rho))
}

/// `∫_{R^{d-n}} P(x, ρ) dx`, by adaptive quadrature on `|x| ≤ 50ρ` plus the tail.
pub fn kernel_mass<T: Real>(rho: T, params: &ProblemParams<T>) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(Error::Domain(format!("the Poisson kernel needs |y| > 0, got {rho}")));
    }
    let kernel = PoissonKernel::new(params)?;
    let l = T::lit(50.0) * rho;
    let km1 = (kernel.k - 1) as i32;
    let inner = integrate(
        |t: T| kernel.eval_sq(t * t, rho) * t.powi(km1),
        T::zero(),
        l,
        T::lit(1e-14),
        T::lit(1e-12),
    )?;
    Ok(sphere_area::<T>(kernel.k) * inner + kernel.tail_outside_ball(rho, l)?)
}

/// Refinement factor of the source grid used for the convolution.
fn fine_factor(x_dims: usize) -> usize {
    if x_dims == 1 { 5 } else { 3 }
}

/// Cell integrals of `P(·, ρ)` over a fine lattice, folded onto the torus.
///
/// Cells with centres in `[-L, L]^k` are integrated explicitly (subdivided
/// Gauss–Legendre near the origin, tensor Gauss–Legendre at moderate range,
/// midpoint far away); the mass beyond `L` is spread evenly, which only
/// affects the mean since far images vary slowly across one period. The
/// central cell receives the complement so that the weights sum to one.
fn periodic_weights<T: Real>(kernel: &PoissonKernel<T>, rho: T, nf: usize, hf: T, images: usize) -> Result<Vec<T>> {
    let k = kernel.k;
    let m = images * nf + nf / 2;
    let l = (T::of_usize(m) + T::lit(0.5)) * hf;
    let tail = if k == 1 { kernel.tail_outside_ball(rho, l)? } else { kernel.tail_outside_square(rho, l) };
    let total = nf.pow(k as u32);
    let mut w = vec![tail / T::of_usize(total); total];
    let (gn, gw) = gauss_legendre::<T>(3);
    let half = T::lit(0.5);
    let span = 2 * m + 1;
    let cell = |c: &[i64]| -> T {
        let far = c.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
        let centre: Vec<T> = c.iter().map(|&v| T::lit(v as f64) * hf).collect();
        let vol = hf.powi(k as i32);
        if far > 8 && k == 2 {
            return vol * kernel.eval_sq(centre.iter().fold(T::zero(), |a, &x| a + x * x), rho);
        }
        let sub = if far <= 1 { 4 } else { 1 };
        let hs = hf / T::of_usize(sub);
        let mut acc = T::zero();
        let npts = sub * gn.len();
        let coord = |axis: usize, p: usize| -> (T, T) {
            let (s, g) = (p / gn.len(), p % gn.len());
            let lo = centre[axis] - half * hf + T::of_usize(s) * hs;
            (lo + half * hs * (gn[g] + T::one()), half * hs * gw[g])
        };
        if k == 1 {
            for p in 0..npts {
                let (x, wt) = coord(0, p);
                acc = acc + wt * kernel.eval_sq(x * x, rho);
            }
        } else {
            for p in 0..npts {
                let (x, wx) = coord(0, p);
                for q in 0..npts {
                    let (y, wy) = coord(1, q);
                    acc = acc + wx * wy * kernel.eval_sq(x * x + y * y, rho);
                }
            }
        }
        acc
    };
    let wrap = |v: i64| v.rem_euclid(nf as i64) as usize;
    let mut explicit = T::zero();
    if k == 1 {
        for i in 0..span {
            let c = i as i64 - m as i64;
            if c == 0 {
                continue;
            }
            let v = cell(&[c]);
            explicit = explicit + v;
            w[wrap(c)] = w[wrap(c)] + v;
        }
    } else {
        let rows: Vec<(T, Vec<(usize, T)>)> = (0..span)
            .into_par_iter()
            .map(|i| {
                let ci = i as i64 - m as i64;
                let mut sum = T::zero();
                let mut parts = Vec::with_capacity(nf);
                let mut acc = vec![T::zero(); nf];
                for j in 0..span {
                    let cj = j as i64 - m as i64;
                    if ci == 0 && cj == 0 {
                        continue;
                    }
                    let v = cell(&[ci, cj]);
                    sum = sum + v;
                    acc[wrap(cj)] = acc[wrap(cj)] + v;
                }
                for (j, v) in acc.into_iter().enumerate() {
                    parts.push((wrap(ci) * nf + j, v));
                }
                (sum, parts)
            })
            .collect();
        for (sum, parts) in rows {
            explicit = explicit + sum;
            for (idx, v) in parts {
                w[idx] = w[idx] + v;
            }
        }
    }
    w[0] = w[0] + (T::one() - explicit - tail);
    Ok(w)
}

/// Images summed explicitly on each side of the central period.
fn explicit_images(x_dims: usize) -> usize {
    if x_dims == 1 { 20 } else { 2 }
}

fn check_compatible<T: Real>(u: &TraceFunction<T>, axi: &AxiGrid<T>, params: &ProblemParams<T>) -> Result<()> {
    if params.thin_dim() != u.x_dims || axi.x_dims() != u.x_dims {
        return Err(Error::Argument(format!(
            "dimension mismatch: d-n = {}, trace has {}, grid has {}",
            params.thin_dim(),
            u.x_dims,
            axi.x_dims()
        )));
    }
    if axi.dx_res() != u.n || (axi.x_extent() - u.x_extent).abs() > T::lit(1e-12) * u.x_extent {
        return Err(Error::Argument(
            "the grid's x-columns must coincide with the trace samples (same resolution and extent)".into(),
        ));
    }
    Ok(())
}

/// `U = u * P(·, r)` on the columns and rows of `axi`, with `u` replaced by
/// its trigonometric interpolant on a finer source grid and `P` integrated
/// over each source cell.
pub fn extend<T: Real>(u: &TraceFunction<T>, axi: &AxiGrid<T>, params: &ProblemParams<T>) -> Result<Field<T>> {
    let kernel = PoissonKernel::new(params)?;
    check_compatible(u, axi, params)?;
    let k = u.x_dims;
    let f = fine_factor(k);
    let nf = f * u.n;
    let hf = u.spacing() / T::of_usize(f);
    let fine_points: Vec<Vec<T>> = (0..nf.pow(k as u32))
        .map(|idx| {
            index_to_multi(idx, nf, k)
                .into_iter()
                .map(|i| -u.x_extent + (T::of_usize(i) + T::lit(0.5)) * hf)
                .collect()
        })
        .collect();
    let fine = u.synthesize(u.spectrum(), &fine_points);
    // Coarse centre i sits on fine centre f·i + (f-1)/2.
    let offset = (f - 1) / 2;
    let targets: Vec<Vec<usize>> = (0..axi.columns())
        .map(|col| index_to_multi(col, u.n, k).into_iter().map(|i| f * i + offset).collect())
        .collect();
    let mut values = vec![T::zero(); axi.len()];
    for j in 0..axi.dr_res() {
        let w = periodic_weights(&kernel, axi.r_at(j), nf, hf, explicit_images(k))?;
        let row: Vec<T> = targets
            .par_iter()
            .map(|t| {
                let mut acc = T::zero();
                if k == 1 {
                    for (src, &v) in fine.iter().enumerate() {
                        acc = acc + w[(t[0] + nf - src) % nf] * v;
                    }
                } else {
                    for s0 in 0..nf {
                        let d0 = (t[0] + nf - s0) % nf;
                        let wrow = &w[d0 * nf..(d0 + 1) * nf];
                        let frow = &fine[s0 * nf..(s0 + 1) * nf];
                        for (s1, &v) in frow.iter().enumerate() {
                            acc = acc + wrow[(t[1] + nf - s1) % nf] * v;
                        }
                    }
                }
                acc
            })
            .collect();
        for (col, v) in row.into_iter().enumerate() {
            values[axi.index(col, j)] = v;
        }
    }
    Field::new(axi.clone(), values)
}

/// Per-column fit `U ≈ u + c r^{2s} + e r²` on the three lowest rows.
#[derive(Clone, Debug, PartialEq)]
struct ProfileFit<T> {
    trace: Vec<T>,
    c: Vec<T>,
    e: Vec<T>,
    /// `|U - model|` on the fourth row relative to the size of `c r^{2s}` there.
    misfit: Vec<T>,
}

fn fit_profiles<T: Real>(field: &Field<T>, s: T) -> Result<ProfileFit<T>> {
    let g = field.grid();
    if g.dr_res() < 4 {
        return Err(Error::Resolution("the DtN fit needs at least four r-rows".into()));
    }
    let two_s = T::lit(2.0) * s;
    let r: Vec<T> = (0..4).map(|j| g.r_at(j)).collect();
    let basis = |rr: T| [T::one(), rr.powf(two_s), rr * rr];
    let m = [basis(r[0]), basis(r[1]), basis(r[2])];
    let inv = invert3(&m).ok_or_else(|| Error::Numeric("singular profile-fit system".into()))?;
    let scale = field.max_abs().max(T::min_positive_value());
    let mut out = ProfileFit { trace: vec![], c: vec![], e: vec![], misfit: vec![] };
    for col in 0..g.columns() {
        let rhs = [field.at(col, 0), field.at(col, 1), field.at(col, 2)];
        let coef: Vec<T> = (0..3).map(|i| (0..3).fold(T::zero(), |a, k| a + inv[i][k] * rhs[k])).collect();
        let b3 = basis(r[3]);
        let model = coef[0] + coef[1] * b3[1] + coef[2] * b3[2];
        let size = (coef[1] * b3[1]).abs() + T::lit(1e-9) * scale;
        out.trace.push(coef[0]);
        out.c.push(coef[1]);
        out.e.push(coef[2]);
        out.misfit.push((field.at(col, 3) - model).abs() / size);
    }
    Ok(out)
}

fn invert3<T: Real>(m: &[[T; 3]; 3]) -> Option<[[T; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    let mut inv = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            let (c, d) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[a][c] * m[b][d] - m[a][d] * m[b][c]) / det;
        }
    }
    Some(inv)
}

/// Relative fourth-row misfit above which a column is flagged unresolved.
pub const DTN_MISFIT_THRESHOLD: f64 = 0.05;

/// Dirichlet-to-Neumann estimate `-lim r^{a+n-1} ∂_r U` per x-column.
#[derive(Clone, Debug)]
pub struct DtnEstimate<T> {
    pub values: TraceFunction<T>,
    /// Largest relative misfit of the profile model on the fourth row.
    pub max_misfit: T,
    /// True when some column's misfit exceeds [`DTN_MISFIT_THRESHOLD`].
    pub unresolved: bool,
}

/// Fits `U ≈ u + c r^{2s} + e r²` on the three lowest rows of each column and
/// returns `-2s c`, the limit of `-r^{1-2s} ∂_r U`.
pub fn dtn<T: Real>(field: &Field<T>, params: &ProblemParams<T>) -> Result<DtnEstimate<T>> {
    let s = params.s()?;
    let g = field.grid();
    if !(1..=2).contains(&g.x_dims()) {
        return Err(Error::Unsupported("the DtN map needs d-n in {1, 2}".into()));
    }
    let fit = fit_profiles(field, s)?;
    let values: Vec<T> = fit.c.iter().map(|&c| -T::lit(2.0) * s * c).collect();
    let max_misfit = fit.misfit.iter().fold(T::zero(), |a, &m| a.max(m));
    Ok(DtnEstimate {
        values: TraceFunction::new(g.x_dims(), g.x_extent(), g.dx_res(), values)?,
        max_misfit,
        unresolved: max_misfit > T::lit(DTN_MISFIT_THRESHOLD),
    })
}

/// `∫ r^{a+n-1} |∇U|²` over the torus times `(0, R)`.
///
/// x-differences wrap periodically; r-differences use interior faces, and
/// the strip below the first row is integrated in closed form from the
/// per-column profile fit, which captures the `r^{2s}` boundary layer.
pub fn extension_energy<T: Real>(field: &Field<T>, params: &ProblemParams<T>) -> Result<T> {
    let s = params.s()?;
    let g = field.grid();
    let e = params.reduced_exponent();
    let lat = g.lattice();
    let vol = lat.cell_volume();
    let vals = field.values();
    let half = T::lit(0.5);
    let mut sum = T::zero();
    for idx in 0..g.len() {
        let rj = g.r_at(g.row_of(idx));
        for ax in 0..lat.axes() {
            let h = lat.spacing()[ax];
            if ax == g.r_axis() {
                if let Some(nb) = lat.neighbor(idx, ax, true) {
                    let q = (vals[nb] - vals[idx]) / h;
                    sum = sum + (rj + half * h).powf(e) * q * q * vol;
                }
            } else {
                let nb = lat.neighbor(idx, ax, true).unwrap_or_else(|| idx - (lat.dims()[ax] - 1) * lat.stride(ax));
                let q = (vals[nb] - vals[idx]) / h;
                sum = sum + rj.powf(e) * q * q * vol;
            }
        }
    }
    let fit = fit_profiles(field, s)?;
    let two_s = T::lit(2.0) * s;
    let r0 = g.r_at(0);
    let four = T::lit(4.0);
    let area = vol / g.hr();
    for col in 0..g.columns() {
        let (c, ee) = (fit.c[col], fit.e[col]);
        let strip = two_s * c * c * r0.powf(two_s)
            + T::lit(2.0) * two_s * c * ee * r0 * r0
            + four * ee * ee * r0.powf(four - two_s) / (four - two_s);
        sum = sum + strip * area;
    }
    Ok(sum)
}

/// Reduced-weighted energy of `Ext(u)` divided by `‖u‖²_{D^s}`; tends to `d_{a,n}`.
pub fn extension_energy_ratio<T: Real>(u: &TraceFunction<T>, params: &ProblemParams<T>, axi: &AxiGrid<T>) -> Result<T> {
    let s = params.s()?;
    let norm = u.ds_norm_sq(s);
    if !(norm > T::zero()) {
        return Err(Error::Domain("the trace has zero D^s norm".into()));
    }
    let ext = extend(u, axi, params)?;
    Ok(extension_energy(&ext, params)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, n: usize, a: f64) -> ProblemParams<f64> {
        ProblemParams::new(d, n, a).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let p = params(3, 2, -1.0);
        let v = poisson_kernel(&[0.0], 0.5, &p).unwrap();
        assert!((v - 1.0 / (std::f64::consts::PI * 0.5)).abs() < 1e-14);
        let x = 0.3;
        let classical = 0.5 / (std::f64::consts::PI * (x * x + 0.25));
        assert!((poisson_kernel(&[x], 0.5, &p).unwrap() - classical).abs() < 1e-14);
        assert!(matches!(poisson_kernel(&[0.0], 0.0, &p), Err(Error::Domain(_))));
        assert!(matches!(poisson_kernel(&[0.0], 1.0, &params(3, 2, 0.5)), Err(Error::Domain(_))));
        // d - n = 1 with s = 0.75 violates d + a >= 2.
        assert!(matches!(poisson_kernel(&[0.0], 1.0, &params(3, 2, -1.5)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn kernel_homogeneity_and_symmetry() {
        for p in [params(3, 2, -0.5), params(4, 2, -1.0)] {
            let k = p.thin_dim();
            let x: Vec<f64> = (0..k).map(|i| 0.3 + 0.2 * i as f64).collect();
            let lam: f64 = 2.7;
            let scaled: Vec<f64> = x.iter().map(|v| lam * v).collect();
            let lhs = poisson_kernel(&scaled, lam * 0.4, &p).unwrap();
            let rhs = lam.powi(-(k as i32)) * poisson_kernel(&x, 0.4, &p).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * rhs);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            assert_eq!(poisson_kernel(&neg, 0.4, &p).unwrap(), poisson_kernel(&x, 0.4, &p).unwrap());
        }
    }

    #[test]
    fn kernel_mass_is_one() {
        for p in [params(3, 2, -1.0), params(3, 2, -0.5), params(4, 2, -1.0)] {
            for rho in [0.1, 1.0] {
                let m = kernel_mass(rho, &p).unwrap();
                assert!((m - 1.0).abs() < 1e-8, "{p:?} rho={rho}: {m}");
            }
        }
    }

    #[test]
    fn periodic_weights_sum_to_one_and_tail_matches_square() {
        let p = params(4, 2, -1.0);
        let k = PoissonKernel::new(&p).unwrap();
        // Square tail lies between the tails of the inscribed and circumscribed disks.
        let sq = k.tail_outside_square(0.3, 2.0);
        let inner = k.tail_outside_ball(0.3, 2.0).unwrap();
        let outer = k.tail_outside_ball(0.3, 2.0 * 2f64.sqrt()).unwrap();
        assert!(outer < sq && sq < inner);
        let w = periodic_weights(&k, 0.05, 12, 2.0 / 12.0, 2).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn spectral_examples() {
        let x_ext = 1.0;
        let xi = std::f64::consts::PI;
        let u = TraceFunction::from_fn(1, x_ext, 16, |x| (xi * x[0]).cos()).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let lu = fractional_laplacian_spectral(&u, s).unwrap();
            for (i, v) in lu.samples().iter().enumerate() {
                let x = u.coords(i)[0];
                assert!((v - xi.powf(2.0 * s) * (xi * x).cos()).abs() < 1e-12);
            }
        }
        let c = TraceFunction::from_fn(2, 1.0, 8, |_| 3.0).unwrap();
        assert!(fractional_laplacian_spectral(&c, 0.3).unwrap().samples().iter().all(|v: &f64| v.abs() < 1e-12));
        let v = TraceFunction::from_fn(1, 1.0, 16, |x| (2.0 * xi * x[0]).sin() + x[0]).unwrap();
        let comb = TraceFunction::new(1, 1.0, 16, u.samples().iter().zip(v.samples()).map(|(a, b)| 2.0 * a - 0.5 * b).collect()).unwrap();
        let lhs = fractional_laplacian_spectral(&comb, 0.4).unwrap();
        let lu = fractional_laplacian_spectral(&u, 0.4).unwrap();
        let lv = fractional_laplacian_spectral(&v, 0.4).unwrap();
        for i in 0..16 {
            assert!((lhs.samples()[i] - (2.0 * lu.samples()[i] - 0.5 * lv.samples()[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_trace_extends_to_constant() {
        let p = params(3, 2, -0.5);
        let u = TraceFunction::from_fn(1, 1.0, 16, |_| 1.0).unwrap();
        let g = AxiGrid::new(1, 1.0, 1.0, 16, 16).unwrap();
        let ext = extend(&u, &g, &p).unwrap();
        assert!(ext.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
        let d = dtn(&ext, &p).unwrap();
        assert!(d.values.samples().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn half_order_single_mode_matches_harmonic_extension() {
        let p = params(3, 2, -1.0);
        let xi = std::f64::consts::PI;
        let u = TraceFunction::from_fn(1, 1.0, 32, |x| (xi * x[0]).cos()).unwrap();
        let g = AxiGrid::new(1, 1.0, 1.0, 32, 64).unwrap();
        let ext = extend(&u, &g, &p).unwrap();
        let mut worst: f64 = 0.0;
        for col in 0..g.columns() {
            let x = g.column_x(col)[0];
            for j in 0..g.dr_res() {
                let exact = (-xi * g.r_at(j)).exp() * (xi * x).cos();
                worst = worst.max((ext.at(col, j) - exact).abs());
            }
        }
        assert!(worst < 1e-3, "{worst}");
        let d = dtn(&ext, &p).unwrap();
        for (i, v) in d.values.samples().iter().enumerate() {
            let x = u.coords(i)[0];
            assert!((v - xi * (xi * x).cos()).abs() < 0.02 * xi, "{i}: {v}");
        }
    }

    #[test]
    fn trace_csv_round_trip() {
        let u = TraceFunction::from_fn(2, 1.5, 4, |x| x[0] - 2.0 * x[1]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = TraceFunction::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back.samples(), u.samples());
        assert_eq!(back.x_extent(), 1.5);
    }
}
