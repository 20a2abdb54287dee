//! Sine-DVR axes and product grids.
//!
//! Each axis is the uniform interior grid of a particle-in-a-box basis on
//! `[q_min, q_max]`. Product grids enumerate points row-major with the first
//! axis (`Q_x`) slow. Grid functions are stored flat in that order, and the
//! quadrature weight of every point is the cell volume `Π Δ`.

use std::f64::consts::PI;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis as NdAxis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ScalarField, TwoComponentField};
use crate::model::NuclearPoint;

/// Smallest axis a run configuration may request.
pub const MIN_CONFIG_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    /// Vibrational quantum `ħω` of the mode, sets the kinetic prefactor.
    pub omega: f64,
}

impl GridSpec {
    pub fn new(q_min: f64, q_max: f64, n_points: usize, omega: f64) -> Self {
        Self {
            q_min,
            q_max,
            n_points,
            omega,
        }
    }

    pub fn length(&self) -> f64 {
        self.q_max - self.q_min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / (self.n_points + 1) as f64
    }

    /// Checks the constraints that apply to configured grids.
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min < self.q_max) {
            return Err(Error::InvalidGrid(format!(
                "q_min ({}) must be below q_max ({})",
                self.q_min, self.q_max
            )));
        }
        if self.n_points < MIN_CONFIG_POINTS {
            return Err(Error::InvalidGrid(format!(
                "at least {MIN_CONFIG_POINTS} points required, got {}",
                self.n_points
            )));
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }

    /// Same extent scaled by `factor` around its center, with `factor` times the points.
    pub fn scaled(&self, factor: usize) -> Self {
        let center = 0.5 * (self.q_min + self.q_max);
        let half = 0.5 * self.length() * factor as f64;
        Self {
            q_min: center - half,
            q_max: center + half,
            n_points: self.n_points * factor,
            omega: self.omega,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Axis {
    spec: GridSpec,
    points: Array1<f64>,
    kinetic: Array2<f64>,
}

/// Builds a sine-DVR axis with the analytic kinetic matrix of
/// `-(ħω/2) d²/dQ²`.
pub fn build_axis(spec: GridSpec) -> Result<Axis> {
    if !(spec.q_min < spec.q_max) || spec.n_points == 0 {
        return Err(Error::InvalidGrid(format!(
            "degenerate axis [{}, {}] with {} points",
            spec.q_min, spec.q_max, spec.n_points
        )));
    }
    let n = spec.n_points;
    let dq = spec.spacing();
    let points = Array1::from_shape_fn(n, |i| spec.q_min + (i + 1) as f64 * dq);

    let np1 = (n + 1) as f64;
    let length = spec.length();
    let prefactor = 0.5 * spec.omega * PI * PI / (2.0 * length * length);
    let inv_sin2 = |x: f64| {
        let s = x.sin();
        1.0 / (s * s)
    };
    let kinetic = Array2::from_shape_fn((n, n), |(i, j)| {
        let (a, b) = ((i + 1) as f64, (j + 1) as f64);
        if i == j {
            prefactor * ((2.0 * np1 * np1 + 1.0) / 3.0 - inv_sin2(PI * a / np1))
        } else {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * prefactor
                * (inv_sin2(PI * (a - b) / (2.0 * np1)) - inv_sin2(PI * (a + b) / (2.0 * np1)))
        }
    });
    Ok(Axis {
        spec,
        points,
        kinetic,
    })
}

impl Axis {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.spec.n_points == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spec.spacing()
    }

    pub fn omega(&self) -> f64 {
        self.spec.omega
    }

    pub fn points(&self) -> ArrayView1<'_, f64> {
        self.points.view()
    }

    /// Quadrature weights; uniform for the sine DVR.
    pub fn weights(&self) -> Array1<f64> {
        Array1::from_elem(self.len(), self.spacing())
    }

    pub fn kinetic(&self) -> ArrayView2<'_, f64> {
        self.kinetic.view()
    }

    /// Analytic kinetic eigenvalues `(ħω/2)(kπ/L)²`, `k = 1..n`.
    pub fn kinetic_spectrum(&self) -> Vec<f64> {
        let l = self.spec.length();
        (1..=self.len())
            .map(|k| 0.5 * self.omega() * (k as f64 * PI / l).powi(2))
            .collect()
    }

    /// Orthogonal, symmetric discrete sine transform matrix.
    fn sine_transform(&self) -> Array2<f64> {
        let n = self.len();
        let np1 = (n + 1) as f64;
        let norm = (2.0 / np1).sqrt();
        Array2::from_shape_fn((n, n), |(i, k)| {
            norm * (PI * ((i + 1) * (k + 1)) as f64 / np1).sin()
        })
    }

    /// Band-limited interpolation from this axis to `targets`.
    ///
    /// Returns `(values, derivatives)`, each `targets.len() × n`, mapping grid
    /// values to the interpolant and its first derivative at the targets.
    pub fn interpolation(&self, targets: ArrayView1<'_, f64>) -> (Array2<f64>, Array2<f64>) {
        let n = self.len();
        let l = self.spec.length();
        let amp = (2.0 / l).sqrt();
        let m = targets.len();
        let mut basis = Array2::zeros((m, n));
        let mut slope = Array2::zeros((m, n));
        for (j, &x) in targets.iter().enumerate() {
            let t = PI * (x - self.spec.q_min) / l;
            for k in 0..n {
                let kk = (k + 1) as f64;
                basis[[j, k]] = amp * (kk * t).sin();
                slope[[j, k]] = amp * (kk * PI / l) * (kk * t).cos();
            }
        }
        let coeff = self.sine_transform() * self.spacing().sqrt();
        (basis.dot(&coeff), slope.dot(&coeff))
    }

    /// Exact derivative of the band-limited interpolant, sampled on this axis.
    pub fn derivative_matrix(&self) -> Array2<f64> {
        self.interpolation(self.points.view()).1
    }

    pub fn nearest_index(&self, value: f64) -> Result<usize> {
        let (lo, hi) = (self.points[0], self.points[self.len() - 1]);
        if value < lo - 0.5 * self.spacing() || value > hi + 0.5 * self.spacing() {
            return Err(Error::OutOfExtent {
                value,
                min: lo,
                max: hi,
            });
        }
        let idx = ((value - lo) / self.spacing()).round() as isize;
        Ok(idx.clamp(0, self.len() as isize - 1) as usize)
    }
}

/// One- or two-dimensional tensor product of sine-DVR axes.
#[derive(Clone, Debug)]
pub struct ProductGrid {
    axes: Vec<Axis>,
}

impl ProductGrid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "product grids have one or two axes, got {}",
                axes.len()
            )));
        }
        Ok(Self { axes })
    }

    pub fn from_specs(specs: &[GridSpec]) -> Result<Self> {
        let axes = specs.iter().map(|s| build_axis(*s)).collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, index: usize) -> Result<&Axis> {
        self.axes.get(index).ok_or(Error::NoSuchAxis {
            axis: index,
            ndim: self.ndim(),
        })
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn total_size(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    pub fn shape(&self) -> (usize, usize) {
        match self.axes.as_slice() {
            [x] => (x.len(), 1),
            [x, y] => (x.len(), y.len()),
            _ => unreachable!(),
        }
    }

    /// Quadrature weight shared by every point.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn point(&self, index: usize) -> NuclearPoint {
        let (_, ny) = self.shape();
        let (ix, iy) = (index / ny, index % ny);
        let qx = self.axes[0].points[ix];
        let qy = if self.ndim() == 2 { self.axes[1].points[iy] } else { 0.0 };
        NuclearPoint { qx, qy }
    }

    pub fn points(&self) -> impl Iterator<Item = NuclearPoint> + '_ {
        (0..self.total_size()).map(|i| self.point(i))
    }

    pub fn specs(&self) -> Vec<GridSpec> {
        self.axes.iter().map(|a| *a.spec()).collect()
    }

    /// Evaluates `f` at every grid point.
    pub fn sample(&self, f: impl Fn(NuclearPoint) -> f64) -> Array1<f64> {
        self.points().map(f).collect()
    }

    /// `y = T x` with the kinetic operator applied axis by axis.
    pub fn apply_kinetic(&self, x: ArrayView1<'_, f64>, mut y: ArrayViewMut1<'_, f64>) {
        match self.axes.as_slice() {
            [ax] => y.assign(&ax.kinetic.dot(&x)),
            [ax, ay] => {
                let (nx, ny) = self.shape();
                let xm = x
                    .into_shape_with_order((nx, ny))
                    .expect("grid function in standard layout");
                let mut out = ax.kinetic.dot(&xm);
                out += &xm.dot(&ay.kinetic);
                y.assign(&Array1::from_iter(out.iter().copied()));
            }
            _ => unreachable!(),
        }
    }

    /// Dense kinetic matrix on the full grid; only sensible for small grids.
    pub fn kinetic_dense(&self) -> Array2<f64> {
        match self.axes.as_slice() {
            [ax] => ax.kinetic.clone(),
            [ax, ay] => {
                let (nx, ny) = self.shape();
                let n = nx * ny;
                let mut t = Array2::zeros((n, n));
                for i in 0..nx {
                    for j in 0..nx {
                        let txij = ax.kinetic[[i, j]];
                        for k in 0..ny {
                            t[[i * ny + k, j * ny + k]] += txij;
                        }
                    }
                    for k in 0..ny {
                        for l in 0..ny {
                            t[[i * ny + k, i * ny + l]] += ay.kinetic[[k, l]];
                        }
                    }
                }
                t
            }
            _ => unreachable!(),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.total_size() {
            return Err(Error::ShapeMismatch {
                expected: self.total_size(),
                actual: len,
            });
        }
        Ok(())
    }

    /// Central finite differences in the interior, second-order one-sided
    /// stencils at the edges.
    pub fn gradient(&self, field: &ScalarField, axis: usize) -> Result<ScalarField> {
        self.check_len(field.len())?;
        let values = self.difference(field.values.view(), axis, |d| d)?;
        Ok(ScalarField::new(values))
    }

    /// Gradient of an angle defined modulo `period`; every difference is
    /// wrapped into `(-period/2, period/2]` before use.
    pub fn angle_gradient(&self, field: &ScalarField, axis: usize, period: f64) -> Result<ScalarField> {
        self.check_len(field.len())?;
        let wrap = move |d: f64| {
            let r = d - period * (d / period).round();
            if r <= -0.5 * period {
                r + period
            } else {
                r
            }
        };
        let values = self.difference(field.values.view(), axis, wrap)?;
        Ok(ScalarField::new(values))
    }

    fn difference(
        &self,
        values: ArrayView1<'_, f64>,
        axis: usize,
        wrap: impl Fn(f64) -> f64,
    ) -> Result<Array1<f64>> {
        let ax = self.axis(axis)?;
        let h = ax.spacing();
        let (nx, ny) = self.shape();
        let grid = values.into_shape_with_order((nx, ny)).expect("standard layout");
        // Lay the differentiated axis out as rows.
        let lanes = if axis == 0 { grid.t() } else { grid.view() };
        let mut out = Array2::<f64>::zeros(lanes.raw_dim());
        for (lane, mut dst) in lanes.outer_iter().zip(out.outer_iter_mut()) {
            let n = lane.len();
            if n < 3 {
                return Err(Error::InvalidGrid("finite differences need 3 points".into()));
            }
            for i in 1..n - 1 {
                dst[i] = wrap(lane[i + 1] - lane[i - 1]) / (2.0 * h);
            }
            let (d1, d2) = (wrap(lane[1] - lane[0]), wrap(lane[2] - lane[0]));
            dst[0] = (4.0 * d1 - d2) / (2.0 * h);
            let (e1, e2) = (wrap(lane[n - 1] - lane[n - 2]), wrap(lane[n - 1] - lane[n - 3]));
            dst[n - 1] = (4.0 * e1 - e2) / (2.0 * h);
        }
        let out = if axis == 0 { out.reversed_axes() } else { out };
        Ok(out.iter().copied().collect::<Vec<_>>().into())
    }

    pub fn inner_product(&self, a: &ScalarField, b: &ScalarField) -> Result<f64> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.cell_volume() * a.values.dot(&b.values))
    }

    pub fn inner_product_two(&self, a: &TwoComponentField, b: &TwoComponentField) -> Result<f64> {
        self.check_len(a.len())?;
        self.check_len(b.len())?;
        Ok(self.cell_volume() * (a.chi1.dot(&b.chi1) + a.chi2.dot(&b.chi2)))
    }

    pub fn norm(&self, a: &ScalarField) -> Result<f64> {
        Ok(self.inner_product(a, a)?.sqrt())
    }

    /// Per-axis spectral interpolation onto `target`.
    pub fn interpolator(&self, target: &ProductGrid) -> Result<SpectralInterpolator> {
        if target.ndim() != self.ndim() {
            return Err(Error::InvalidGrid(format!(
                "cannot interpolate a {}-D grid onto a {}-D grid",
                self.ndim(),
                target.ndim()
            )));
        }
        let (values, slopes) = self
            .axes
            .iter()
            .zip(&target.axes)
            .map(|(src, dst)| src.interpolation(dst.points()))
            .unzip();
        Ok(SpectralInterpolator {
            src_shape: self.shape(),
            values,
            slopes,
        })
    }

    /// Spectral derivative operators of this grid onto itself.
    pub fn self_interpolator(&self) -> SpectralInterpolator {
        let (values, slopes) = self
            .axes
            .iter()
            .map(|a| (Array2::eye(a.len()), a.derivative_matrix()))
            .unzip();
        SpectralInterpolator {
            src_shape: self.shape(),
            values,
            slopes,
        }
    }

    /// Flat index of the grid line closest to `fixed_value` on `axis`,
    /// together with the 1-D indices running along the other axis.
    pub fn cross_section_indices(&self, axis: usize, fixed_value: f64) -> Result<Vec<usize>> {
        if self.ndim() != 2 {
            return Err(Error::InvalidGrid("cross sections need a 2-D grid".into()));
        }
        let idx = self.axis(axis)?.nearest_index(fixed_value)?;
        let (nx, ny) = self.shape();
        Ok(if axis == 0 {
            (0..ny).map(|k| idx * ny + k).collect()
        } else {
            (0..nx).map(|k| k * ny + idx).collect()
        })
    }
}

/// Tensor-product band-limited interpolation between two grids.
#[derive(Clone, Debug)]
pub struct SpectralInterpolator {
    src_shape: (usize, usize),
    values: Vec<Array2<f64>>,
    slopes: Vec<Array2<f64>>,
}

impl SpectralInterpolator {
    /// Interpolated values and the gradient along every axis.
    pub fn apply(&self, field: ArrayView1<'_, f64>) -> (Array1<f64>, Vec<Array1<f64>>) {
        let (nx, ny) = self.src_shape;
        let flat = |a: Array2<f64>| a.iter().copied().collect::<Array1<f64>>();
        match self.values.len() {
            1 => {
                let v = self.values[0].dot(&field);
                let d = self.slopes[0].dot(&field);
                (v, vec![d])
            }
            2 => {
                let f = field.into_shape_with_order((nx, ny)).expect("standard layout");
                let fy = f.dot(&self.values[1].t());
                let v = self.values[0].dot(&fy);
                let dx = self.slopes[0].dot(&fy);
                let dy = self.values[0].dot(&f.dot(&self.slopes[1].t()));
                (flat(v), vec![flat(dx), flat(dy)])
            }
            _ => unreachable!(),
        }
    }
}

/// Row `index` of a flat 2-D grid function viewed as `(nx, ny)`.
pub fn row_of(values: ArrayView1<'_, f64>, shape: (usize, usize), index: usize) -> Array1<f64> {
    values
        .into_shape_with_order(shape)
        .expect("standard layout")
        .index_axis(NdAxis(0), index)
        .to_owned()
}

/// Column `index` of a flat 2-D grid function viewed as `(nx, ny)`.
pub fn column_of(values: ArrayView1<'_, f64>, shape: (usize, usize), index: usize) -> Array1<f64> {
    values
        .into_shape_with_order(shape)
        .expect("standard layout")
        .slice(s![.., index])
        .to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn axis(a: f64, b: f64, n: usize, omega: f64) -> Axis {
        build_axis(GridSpec::new(a, b, n, omega)).unwrap()
    }

    #[test]
    fn two_point_axis_sits_at_thirds() {
        let ax = axis(-1.0, 1.0, 2, 1.0);
        assert_abs_diff_eq!(ax.points()[0], -1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ax.points()[1], 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn config_validation_rejects_small_axes() {
        assert!(GridSpec::new(-1.0, 1.0, 4, 1.0).validate().is_err());
        assert!(GridSpec::new(1.0, -1.0, 40, 1.0).validate().is_err());
        assert!(GridSpec::new(-1.0, 1.0, 40, 0.0).validate().is_err());
        assert!(GridSpec::new(-1.0, 1.0, 40, 1.0).validate().is_ok());
    }

    /// Oracle: the kinetic matrix as an explicit sum over box eigenfunctions.
    #[test]
    fn kinetic_matches_spectral_sum() {
        let ax = axis(-3.0, 2.0, 17, 0.7);
        let n = ax.len();
        let l = 5.0;
        let np1 = (n + 1) as f64;
        for i in 0..n {
            for j in 0..n {
                let mut sum = 0.0;
                for k in 1..=n {
                    let kk = k as f64;
                    let ui = (2.0 / np1).sqrt() * (PI * kk * (i + 1) as f64 / np1).sin();
                    let uj = (2.0 / np1).sqrt() * (PI * kk * (j + 1) as f64 / np1).sin();
                    sum += ui * 0.5 * 0.7 * (kk * PI / l).powi(2) * uj;
                }
                assert_abs_diff_eq!(ax.kinetic()[[i, j]], sum, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn kinetic_spectrum_is_box_spectrum() {
        let ax = axis(-9.0, 9.0, 64, 0.2578);
        let vals = crate::eigen::solve_dense(&ax.kinetic().to_owned()).unwrap().values;
        for (got, want) in vals.iter().zip(ax.kinetic_spectrum()) {
            assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
        }
    }

    #[test]
    fn lowest_box_state_is_an_eigenvector() {
        let ax = axis(-4.0, 6.0, 200, 0.3);
        let l = 10.0;
        let v: Array1<f64> = ax.points().mapv(|x| (PI * (x + 4.0) / l).sin());
        let tv = ax.kinetic().dot(&v);
        let expected = 0.5 * 0.3 * (PI / l).powi(2);
        for (a, b) in tv.iter().zip(v.iter()) {
            assert_abs_diff_eq!(*a, expected * b, epsilon = 1e-10);
        }
    }

    #[test]
    fn kinetic_is_symmetric_positive_definite() {
        let ax = axis(-2.0, 2.0, 30, 1.0);
        let t = ax.kinetic();
        for i in 0..30 {
            for j in 0..30 {
                assert_abs_diff_eq!(t[[i, j]], t[[j, i]], epsilon = 1e-12);
            }
        }
        let vals = crate::eigen::solve_dense(&t.to_owned()).unwrap().values;
        assert!(vals[0] > 0.0);
    }

    #[test]
    fn harmonic_ground_state_is_half_quantum() {
        let omega = 0.2578;
        let ax = axis(-9.0, 9.0, 201, omega);
        let mut h = ax.kinetic().to_owned();
        for (i, x) in ax.points().iter().enumerate() {
            h[[i, i]] += 0.5 * omega * x * x;
        }
        let e = crate::eigen::solve_dense(&h).unwrap().values;
        assert_abs_diff_eq!(e[0], 0.1289, epsilon = 1e-10);
    }

    fn grid1(n: usize, a: f64, b: f64) -> ProductGrid {
        ProductGrid::from_specs(&[GridSpec::new(a, b, n, 1.0)]).unwrap()
    }

    #[test]
    fn gradient_of_constant_and_linear_fields() {
        let g = ProductGrid::from_specs(&[
            GridSpec::new(-2.0, 2.0, 11, 1.0),
            GridSpec::new(-1.0, 3.0, 9, 1.0),
        ])
        .unwrap();
        let c = ScalarField::new(g.sample(|_| 4.2));
        let lin = ScalarField::new(g.sample(|q| 2.0 * q.qx - 0.5 * q.qy));
        for i in 0..2 {
            assert!(g.gradient(&c, i).unwrap().values.iter().all(|v| v.abs() < 1e-12));
        }
        let dx = g.gradient(&lin, 0).unwrap();
        let dy = g.gradient(&lin, 1).unwrap();
        assert!(dx.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(dy.values.iter().all(|v| (v + 0.5).abs() < 1e-12));
    }

    #[test]
    fn gradient_of_sine_within_fd_error() {
        // spacing 0.01
        let g = grid1(599, -3.0, 3.0);
        let f = ScalarField::new(g.sample(|q| q.qx.sin()));
        let d = g.gradient(&f, 0).unwrap();
        for (q, v) in g.points().zip(d.values.iter()) {
            assert!((v - q.qx.cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn gradient_converges_at_second_order() {
        let err = |n: usize| {
            let g = grid1(n, 0.0, 2.0);
            let f = ScalarField::new(g.sample(|q| (1.3 * q.qx).exp().sin()));
            let d = g.gradient(&f, 0).unwrap();
            g.points()
                .zip(d.values.iter())
                .map(|(q, v)| {
                    let u = (1.3 * q.qx).exp();
                    (v - 1.3 * u * u.cos()).abs()
                })
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(99), err(199));
        let order = (e1 / e2).log2();
        assert!(order > 1.8 && order < 2.3, "observed order {order}");
    }

    #[test]
    fn angle_gradient_ignores_branch_jumps() {
        let g = grid1(201, -1.0, 1.0);
        // 0.3 q wrapped into (-pi/2, pi/2] after a shift, i.e. a jump of pi
        let raw = ScalarField::new(g.sample(|q| {
            let a = 0.3 * q.qx + 1.5;
            a - PI * ((a + PI / 2.0) / PI).floor()
        }));
        let d = g.angle_gradient(&raw, 0, PI).unwrap();
        assert!(d.values.iter().all(|v| (v - 0.3).abs() < 1e-10));
    }

    #[test]
    fn inner_product_is_symmetric_and_checks_shape() {
        let g = grid1(50, -2.0, 2.0);
        let a = ScalarField::new(g.sample(|q| (-q.qx * q.qx).exp()));
        let b = ScalarField::new(g.sample(|q| q.qx.cos()));
        assert_abs_diff_eq!(
            g.inner_product(&a, &b).unwrap(),
            g.inner_product(&b, &a).unwrap(),
            epsilon = 1e-15
        );
        assert!(g.inner_product(&a, &a).unwrap() > 0.0);
        let short = ScalarField::new(Array1::zeros(10));
        assert!(matches!(
            g.inner_product(&a, &short),
            Err(Error::ShapeMismatch { expected: 50, actual: 10 })
        ));
    }

    #[test]
    fn spectral_interpolation_is_exact_for_box_modes() {
        let g = grid1(40, -1.0, 3.0);
        let fine = grid1(157, -1.0, 3.0);
        let mode = |x: f64| (3.0 * PI * (x + 1.0) / 4.0).sin();
        let dmode = |x: f64| 3.0 * PI / 4.0 * (3.0 * PI * (x + 1.0) / 4.0).cos();
        let f = g.sample(|q| mode(q.qx));
        let (v, d) = g.interpolator(&fine).unwrap().apply(f.view());
        for (i, q) in fine.points().enumerate() {
            assert_abs_diff_eq!(v[i], mode(q.qx), epsilon = 1e-12);
            assert_abs_diff_eq!(d[0][i], dmode(q.qx), epsilon = 1e-11);
        }
    }

    #[test]
    fn two_dimensional_kinetic_matches_dense() {
        let g = ProductGrid::from_specs(&[
            GridSpec::new(-2.0, 2.0, 7, 0.4),
            GridSpec::new(-1.0, 1.5, 5, 0.1),
        ])
        .unwrap();
        let x = g.sample(|q| (q.qx * 1.7 + q.qy).sin());
        let mut y = Array1::zeros(35);
        g.apply_kinetic(x.view(), y.view_mut());
        let dense = g.kinetic_dense().dot(&x);
        for (a, b) in y.iter().zip(dense.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn cross_section_picks_nearest_line() {
        let g = ProductGrid::from_specs(&[
            GridSpec::new(-2.0, 2.0, 9, 0.4),
            GridSpec::new(-1.0, 1.0, 5, 0.1),
        ])
        .unwrap();
        let idx = g.cross_section_indices(0, 0.05).unwrap();
        assert_eq!(idx.len(), 5);
        assert!(idx.iter().all(|&i| g.point(i).qx.abs() < 1e-12));
        assert!(g.cross_section_indices(0, 5.0).is_err());
    }
}
