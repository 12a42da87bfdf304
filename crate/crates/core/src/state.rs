//! The vector-valued state and the norms and conserved functionals
//! defined on it.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::Field2;
use crate::grid::SpatialGrid;
use crate::resonance::ModeBand;

/// Coefficients of the admissible mass weight `g(j) = a + b j + c j^2`,
/// with `a, c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSpec {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl WeightSpec {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if a < 0.0 || c < 0.0 {
            return Err(CoreError::BadWeight { a, c });
        }
        Ok(WeightSpec { a, b, c })
    }

    /// g = 1: the plain L^2-in-x, l^2-in-j mass.
    pub fn unweighted() -> Self {
        WeightSpec { a: 1.0, b: 0.0, c: 0.0 }
    }

    /// g = <j>^2: the h^1 mass weight.
    pub fn h1() -> Self {
        WeightSpec { a: 1.0, b: 0.0, c: 1.0 }
    }

    #[inline]
    pub fn eval(&self, j: i64) -> f64 {
        self.a + self.b * j as f64 + self.c * (j * j) as f64
    }
}

/// Spatial Lebesgue exponent handled by the mixed norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpatialExponent {
    Two,
    Four,
    Sup,
}

/// Mode-weight exponent of the sequence norm; the system only ever uses
/// a = 0 (plain l^2) and a = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightExponent {
    Zero,
    One,
}

impl WeightExponent {
    #[inline]
    fn bracket_power(self, j: i64) -> f64 {
        match self {
            WeightExponent::Zero => 1.0,
            WeightExponent::One => 1.0 + (j * j) as f64,
        }
    }
}

/// The state `u = {u_j}`: one complex field per retained mode.
#[derive(Debug, Clone)]
pub struct VectorField {
    grid: Arc<SpatialGrid>,
    band: ModeBand,
    modes: Vec<Field2>,
}

impl VectorField {
    pub fn zero(grid: Arc<SpatialGrid>, band: ModeBand) -> Self {
        let modes = (0..band.mode_count())
            .map(|_| Field2::zeros(grid.n()))
            .collect();
        VectorField { grid, band, modes }
    }

    pub fn from_modes(grid: Arc<SpatialGrid>, band: ModeBand, modes: Vec<Field2>) -> Self {
        assert_eq!(modes.len(), band.mode_count(), "one field per mode");
        assert!(
            modes.iter().all(|m| m.n() == grid.n()),
            "all mode fields share the grid dimensions"
        );
        VectorField { grid, band, modes }
    }

    #[inline]
    pub fn grid(&self) -> &Arc<SpatialGrid> {
        &self.grid
    }

    #[inline]
    pub fn band(&self) -> ModeBand {
        self.band
    }

    #[inline]
    pub fn mode(&self, j: i64) -> &Field2 {
        &self.modes[self.band.offset(j).expect("mode outside band")]
    }

    #[inline]
    pub fn mode_mut(&mut self, j: i64) -> &mut Field2 {
        let idx = self.band.offset(j).expect("mode outside band");
        &mut self.modes[idx]
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, &Field2)> {
        self.band.modes().zip(self.modes.iter())
    }

    pub fn modes_mut(&mut self) -> impl Iterator<Item = (i64, &mut Field2)> {
        self.band.modes().zip(self.modes.iter_mut())
    }

    pub fn fields(&self) -> &[Field2] {
        &self.modes
    }

    pub fn fields_mut(&mut self) -> &mut [Field2] {
        &mut self.modes
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(|m| m.is_finite())
    }

    /// Applies a per-mode map, keeping band and grid.
    pub fn map_modes(&self, mut f: impl FnMut(i64, &Field2) -> Field2) -> VectorField {
        let modes = self.modes().map(|(j, m)| f(j, m)).collect();
        VectorField::from_modes(self.grid.clone(), self.band, modes)
    }

    /// Largest pointwise modulus over all modes of the difference.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        assert_eq!(self.band, other.band);
        self.modes
            .iter()
            .zip(&other.modes)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.modes.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }

    /// Shared pointwise density `rho = sum_j |u_j|^2`.
    pub fn density(&self) -> Vec<f64> {
        let len = self.grid.n() * self.grid.n();
        let mut rho = vec![0.0f64; len];
        for field in &self.modes {
            for (r, v) in rho.iter_mut().zip(field.as_slice()) {
                *r += v.norm_sqr();
            }
        }
        rho
    }

    /// Conserved mass with weight `g`: the quadrature sum of
    /// `sum_j g(j) |u_j|^2`.
    pub fn mass(&self, w: &WeightSpec) -> f64 {
        let cell = self.grid.cell_area();
        self.modes()
            .map(|(j, field)| w.eval(j) * field.norm_sq_sum())
            .sum::<f64>()
            * cell
    }

    /// Conserved energy: spectral kinetic part plus the nonnegative
    /// interaction term `(1/4) int (2 rho^2 - sum_j |u_j|^4)`.
    pub fn energy(&self) -> f64 {
        let cell = self.grid.cell_area();
        let mut kinetic = 0.0;
        for field in &self.modes {
            let spec = self.grid.forward(field).expect("grid matches state");
            let n = self.grid.n();
            let data = spec.as_slice();
            for row in 0..n {
                let ky = self.grid.freq(row);
                for col in 0..n {
                    let kx = self.grid.freq(col);
                    kinetic += (kx * kx + ky * ky) * data[row * n + col].norm_sqr();
                }
            }
        }
        kinetic *= 0.5 * cell;

        let rho = self.density();
        let mut quartic = 0.0;
        for field in &self.modes {
            for v in field.as_slice() {
                let m = v.norm_sqr();
                quartic += m * m;
            }
        }
        let rho_sq: f64 = rho.iter().map(|r| r * r).sum();
        let interaction = 0.25 * cell * (2.0 * rho_sq - quartic);
        kinetic + interaction
    }

    /// Pointwise sequence norm `(sum_j <j>^{2a} |u_j(x)|^2)^{1/2}` at every
    /// grid point.
    pub fn pointwise_h_norm(&self, a: WeightExponent) -> Vec<f64> {
        let len = self.grid.n() * self.grid.n();
        let mut acc = vec![0.0f64; len];
        for (j, field) in self.modes() {
            let w = a.bracket_power(j);
            for (s, v) in acc.iter_mut().zip(field.as_slice()) {
                *s += w * v.norm_sqr();
            }
        }
        for s in &mut acc {
            *s = s.sqrt();
        }
        acc
    }

    /// Mixed spatial/sequence norm `|| (sum_j <j>^{2a} |u_j|^2)^{1/2} ||_{L^p_x}`.
    pub fn norm(&self, p: SpatialExponent, a: WeightExponent) -> f64 {
        let values = self.pointwise_h_norm(a);
        let cell = self.grid.cell_area();
        match p {
            SpatialExponent::Two => (values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt(),
            SpatialExponent::Four => {
                (values.iter().map(|v| v.powi(4)).sum::<f64>() * cell).powf(0.25)
            }
            SpatialExponent::Sup => values.into_iter().fold(0.0, f64::max),
        }
    }

    /// L^2-in-x h^a distance between two states.
    pub fn l2h_distance(&self, other: &VectorField, a: WeightExponent) -> f64 {
        assert_eq!(self.band, other.band);
        let cell = self.grid.cell_area();
        let mut sum = 0.0;
        for ((j, fa), (_, fb)) in self.modes().zip(other.modes()) {
            let w = a.bracket_power(j);
            let mut d = 0.0;
            for (x, y) in fa.as_slice().iter().zip(fb.as_slice()) {
                d += (x - y).norm_sqr();
            }
            sum += w * d;
        }
        (sum * cell).sqrt()
    }

    /// Free flow applied to every mode.
    pub fn free_propagate(&self, t: f64) -> VectorField {
        self.map_modes(|_, field| self.grid.free_propagate(field, t).expect("grid matches"))
    }
}

/// Trapezoid-rule accumulator for `int ||.||^p dt` between recorded samples.
#[derive(Debug, Clone)]
pub struct MixedNormAccumulator {
    time_power: f64,
    last: Option<(f64, f64)>,
    integral: f64,
}

impl MixedNormAccumulator {
    pub fn new(time_power: f64) -> Self {
        MixedNormAccumulator {
            time_power,
            last: None,
            integral: 0.0,
        }
    }

    /// Feeds one sample of the spatial norm at time `t`; returns the
    /// running integral of its `p`-th power.
    pub fn push(&mut self, t: f64, value: f64) -> f64 {
        let powered = value.powf(self.time_power);
        if let Some((t0, v0)) = self.last {
            self.integral += 0.5 * (t - t0) * (v0 + powered);
        }
        self.last = Some((t, powered));
        self.integral
    }

    pub fn integral(&self) -> f64 {
        self.integral
    }
}

/// One row of the diagnostics stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub mass_h1: f64,
    pub energy: f64,
    /// Running `int ||u||^4_{L^4_x l^2} dt`.
    pub l4_accum: f64,
    pub morawetz: f64,
    pub x_center: [f64; 2],
    pub xi_center: [f64; 2],
    pub n_scale: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,mass,mass_h1,energy,l4_accum,morawetz,xc_1,xc_2,xi_1,xi_2,N_scale";
}

/// A recorded run: states sampled on a uniform time lattice.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<VectorField>,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory {
            times: Vec::new(),
            states: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, state: VectorField) {
        self.states.push(state);
        self.times.push(t);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, idx: usize) -> &VectorField {
        &self.states[idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &VectorField)> {
        self.times.iter().copied().zip(self.states.iter())
    }

    /// Uniform snapshot spacing; errors when the lattice is irregular.
    pub fn uniform_dt(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(CoreError::TooFewSnapshots {
                need: 2,
                got: self.len(),
            });
        }
        let dt = self.times[1] - self.times[0];
        if dt <= 0.0 {
            return Err(CoreError::IrregularSnapshots);
        }
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(CoreError::IrregularSnapshots);
            }
        }
        Ok(dt)
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

/// Gaussian bump `amp * exp(-|x - c|^2 / (2 sigma^2)) * exp(i x . v)`.
pub fn gaussian_field(
    grid: &SpatialGrid,
    amplitude: f64,
    sigma: f64,
    center: [f64; 2],
    velocity: [f64; 2],
) -> Field2 {
    Field2::from_fn(grid.n(), |row, col| {
        let x = grid.coord(col) - center[0];
        let y = grid.coord(row) - center[1];
        let envelope = amplitude * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
        let phase = grid.coord(col) * velocity[0] + grid.coord(row) * velocity[1];
        Complex64::from_polar(envelope, phase)
    })
}
