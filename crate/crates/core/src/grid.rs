//! Spatial discretization: a periodic square standing in for the plane,
//! unitary spectral transforms, the free propagator, and the Fourier
//! multiplier operators (Littlewood-Paley, Galilean-shifted, fractional
//! derivative) everything else is built from.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};
use crate::field::Field2;

/// Smooth radial cutoff: 1 on `r <= 1`, 0 on `r >= 2`, and the standard
/// exponential transition on (1, 2). Radial and nonincreasing.
#[derive(Debug, Clone, Copy, Default)]
pub struct BumpProfile;

fn exp_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

impl BumpProfile {
    pub fn eval(r: f64) -> f64 {
        let r = r.abs();
        if r <= 1.0 {
            1.0
        } else if r >= 2.0 {
            0.0
        } else {
            let a = exp_step(2.0 - r);
            let b = exp_step(r - 1.0);
            a / (a + b)
        }
    }

    /// Low-pass symbol at dyadic level `i`: eval(2^-i r).
    pub fn low_pass(i: i32, r: f64) -> f64 {
        Self::eval(r * 2f64.powi(-i))
    }

    /// Dyadic shell symbol. Level 0 is the low-pass bump itself; levels
    /// i >= 1 are the telescoped differences; negative levels vanish.
    pub fn shell(i: i32, r: f64) -> f64 {
        if i < 0 {
            0.0
        } else if i == 0 {
            Self::eval(r)
        } else {
            Self::low_pass(i, r) - Self::low_pass(i - 1, r)
        }
    }
}

/// Which Littlewood-Paley symbol a projection applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpMode {
    /// Single dyadic shell (vanishes for negative shell index).
    Shell,
    /// Low-pass up to the given dyadic level.
    LowPass,
}

struct GridFft {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Periodic `n x n` discretization of the square `[-L, L)^2`.
///
/// Grid points are `x_i = -L + i * dx` with `dx = 2L/n`; the frequency
/// lattice is `(pi/L) * {-n/2, ..., n/2 - 1}` per axis with the Nyquist
/// row assigned to `-n/2`. Transforms use the unitary normalization, so
/// the discrete Parseval identity holds exactly.
pub struct SpatialGrid {
    n: usize,
    half_width: f64,
    dx: f64,
    dk: f64,
    k_axis: Vec<f64>,
    fft: GridFft,
}

impl std::fmt::Debug for SpatialGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpatialGrid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .finish()
    }
}

impl SpatialGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Arc<Self>> {
        if !n.is_power_of_two() || n < 8 {
            return Err(CoreError::BadGridSize(n));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(CoreError::BadGridExtent(half_width));
        }
        let dx = 2.0 * half_width / n as f64;
        let dk = std::f64::consts::PI / half_width;
        let k_axis = (0..n).map(|m| dk * signed_index(m, n) as f64).collect();
        let mut planner = FftPlanner::new();
        let fft = GridFft {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Arc::new(SpatialGrid {
            n,
            half_width,
            dx,
            dk,
            k_axis,
            fft,
        }))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.dx
    }

    #[inline]
    pub fn dk(&self) -> f64 {
        self.dk
    }

    /// Quadrature weight of one grid cell.
    #[inline]
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.dx
    }

    /// Frequency at array index `m` (Nyquist mapped to the negative side).
    #[inline]
    pub fn freq(&self, m: usize) -> f64 {
        self.k_axis[m]
    }

    #[inline]
    pub fn nyquist(&self) -> f64 {
        self.dk * (self.n as f64) / 2.0
    }

    pub fn same_grid(&self, other: &SpatialGrid) -> bool {
        self.n == other.n && self.half_width == other.half_width
    }

    fn check_dims(&self, field: &Field2) -> Result<()> {
        if field.n() != self.n {
            return Err(CoreError::DimensionMismatch {
                got: field.n(),
                want: self.n,
            });
        }
        Ok(())
    }

    fn fft2_inplace(&self, field: &mut Field2, forward: bool) {
        let n = self.n;
        let plan = if forward {
            &self.fft.forward
        } else {
            &self.fft.inverse
        };
        let data = field.as_mut_slice();
        plan.process(data);
        transpose_square(data, n);
        plan.process(data);
        transpose_square(data, n);
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Unitary forward transform (physical samples -> spectral coefficients).
    pub fn forward(&self, field: &Field2) -> Result<Field2> {
        self.check_dims(field)?;
        let mut out = field.clone();
        self.fft2_inplace(&mut out, true);
        Ok(out)
    }

    /// Unitary inverse transform.
    pub fn inverse(&self, field: &Field2) -> Result<Field2> {
        self.check_dims(field)?;
        let mut out = field.clone();
        self.fft2_inplace(&mut out, false);
        Ok(out)
    }

    pub fn forward_inplace(&self, field: &mut Field2) {
        assert_eq!(field.n(), self.n, "field does not match grid");
        self.fft2_inplace(field, true);
    }

    pub fn inverse_inplace(&self, field: &mut Field2) {
        assert_eq!(field.n(), self.n, "field does not match grid");
        self.fft2_inplace(field, false);
    }

    /// Multiplies a spectral-side field by a symbol of the frequency vector.
    pub fn multiply_symbol(&self, spectral: &mut Field2, mut symbol: impl FnMut(f64, f64) -> Complex64) {
        assert_eq!(spectral.n(), self.n, "field does not match grid");
        let n = self.n;
        let data = spectral.as_mut_slice();
        for row in 0..n {
            let ky = self.k_axis[row];
            for col in 0..n {
                let kx = self.k_axis[col];
                data[row * n + col] *= symbol(kx, ky);
            }
        }
    }

    /// Applies a Fourier multiplier to a physical-side field.
    pub fn apply_multiplier(
        &self,
        field: &Field2,
        symbol: impl FnMut(f64, f64) -> Complex64,
    ) -> Result<Field2> {
        self.check_dims(field)?;
        let mut out = field.clone();
        self.fft2_inplace(&mut out, true);
        self.multiply_symbol(&mut out, symbol);
        self.fft2_inplace(&mut out, false);
        Ok(out)
    }

    /// Free Schroedinger flow over time `t`: each coefficient picks up the
    /// unimodular factor `exp(-i |k|^2 t)`, so the L^2 mass is preserved
    /// exactly.
    pub fn free_propagate(&self, field: &Field2, t: f64) -> Result<Field2> {
        self.check_dims(field)?;
        let mut out = field.clone();
        self.free_propagate_spectrum(&mut out, t);
        Ok(out)
    }

    /// Same flow, but acting in place on physical samples.
    fn free_propagate_spectrum(&self, field: &mut Field2, t: f64) {
        self.fft2_inplace(field, true);
        self.multiply_symbol(field, |kx, ky| {
            Complex64::from_polar(1.0, -(kx * kx + ky * ky) * t)
        });
        self.fft2_inplace(field, false);
    }

    pub fn free_propagate_inplace(&self, field: &mut Field2, t: f64) {
        assert_eq!(field.n(), self.n, "field does not match grid");
        self.free_propagate_spectrum(field, t);
    }

    /// Littlewood-Paley projection at dyadic level `i`.
    pub fn lp_project(&self, field: &Field2, i: i32, mode: LpMode) -> Result<Field2> {
        if mode == LpMode::Shell && i < 0 {
            self.check_dims(field)?;
            return Ok(Field2::zeros(self.n));
        }
        self.apply_multiplier(field, |kx, ky| {
            let r = kx.hypot(ky);
            let s = match mode {
                LpMode::Shell => BumpProfile::shell(i, r),
                LpMode::LowPass => BumpProfile::low_pass(i, r),
            };
            Complex64::new(s, 0.0)
        })
    }

    /// Rounds a frequency vector to lattice indices, rejecting off-lattice
    /// or out-of-range input.
    pub fn lattice_indices(&self, xi: [f64; 2]) -> Result<[i64; 2]> {
        let mut idx = [0i64; 2];
        for (slot, &v) in idx.iter_mut().zip(xi.iter()) {
            let m = (v / self.dk).round();
            if (v - m * self.dk).abs() > 1e-9 * self.dk.max(1.0) {
                return Err(CoreError::FrequencyOffLattice {
                    value: xi,
                    spacing: self.dk,
                });
            }
            *slot = m as i64;
        }
        let half = (self.n / 2) as i64;
        if idx.iter().any(|&m| m < -half || m >= half) {
            return Err(CoreError::FrequencyOutOfRange {
                value: xi,
                limit: self.nyquist(),
            });
        }
        Ok(idx)
    }

    /// Galilean-shifted projection: the Littlewood-Paley symbol recentered
    /// at `xi0` by plane-wave conjugation. Equals `lp_project` at `xi0 = 0`.
    pub fn galilean_project(
        &self,
        field: &Field2,
        xi0: [f64; 2],
        i: i32,
        mode: LpMode,
    ) -> Result<Field2> {
        let [mx, my] = self.lattice_indices(xi0)?;
        if mode == LpMode::Shell && i < 0 {
            self.check_dims(field)?;
            return Ok(Field2::zeros(self.n));
        }
        self.check_dims(field)?;
        let n = self.n as i64;
        let mut out = field.clone();
        self.fft2_inplace(&mut out, true);
        {
            let data = out.as_mut_slice();
            let nn = self.n;
            for row in 0..nn {
                // Conjugation shifts the spectrum circularly, so the symbol
                // sees the wrapped displacement from xi0.
                let dy = wrapped_freq(signed_index(row, nn) - my, n) * self.dk;
                for col in 0..nn {
                    let dx = wrapped_freq(signed_index(col, nn) - mx, n) * self.dk;
                    let r = dx.hypot(dy);
                    let s = match mode {
                        LpMode::Shell => BumpProfile::shell(i, r),
                        LpMode::LowPass => BumpProfile::low_pass(i, r),
                    };
                    data[row * nn + col] *= s;
                }
            }
        }
        self.fft2_inplace(&mut out, false);
        Ok(out)
    }

    /// Pointwise multiplication by the plane wave `exp(i x . xi)`.
    pub fn modulate(&self, field: &Field2, xi: [f64; 2]) -> Result<Field2> {
        self.check_dims(field)?;
        let n = self.n;
        let mut out = field.clone();
        let data = out.as_mut_slice();
        for row in 0..n {
            let y = self.coord(row);
            for col in 0..n {
                let x = self.coord(col);
                data[row * n + col] *= Complex64::from_polar(1.0, x * xi[0] + y * xi[1]);
            }
        }
        Ok(out)
    }

    /// Spectral translation: returns `x -> field(x - shift)`. Exact for any
    /// real shift since the field is a trigonometric polynomial.
    pub fn translate(&self, field: &Field2, shift: [f64; 2]) -> Result<Field2> {
        self.apply_multiplier(field, |kx, ky| {
            Complex64::from_polar(1.0, -(kx * shift[0] + ky * shift[1]))
        })
    }

    /// Gradient components via the `i k` multiplier.
    pub fn gradient(&self, field: &Field2) -> Result<[Field2; 2]> {
        self.check_dims(field)?;
        let mut spec = field.clone();
        self.fft2_inplace(&mut spec, true);
        let mut gx = spec.clone();
        self.multiply_symbol(&mut gx, |kx, _| Complex64::new(0.0, kx));
        self.fft2_inplace(&mut gx, false);
        let mut gy = spec;
        self.multiply_symbol(&mut gy, |_, ky| Complex64::new(0.0, ky));
        self.fft2_inplace(&mut gy, false);
        Ok([gx, gy])
    }

    /// Laplacian via the `-|k|^2` multiplier.
    pub fn laplacian(&self, field: &Field2) -> Result<Field2> {
        self.apply_multiplier(field, |kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0))
    }

    /// Half-derivative `|nabla|^{1/2}` of a real density. The output is real
    /// up to round-off because the symbol is even.
    pub fn half_derivative(&self, density: &[f64]) -> Result<Vec<f64>> {
        if density.len() != self.n * self.n {
            return Err(CoreError::DimensionMismatch {
                got: (density.len() as f64).sqrt() as usize,
                want: self.n,
            });
        }
        let mut field = Field2::from_vec(
            self.n,
            density.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        );
        self.fft2_inplace(&mut field, true);
        self.multiply_symbol(&mut field, |kx, ky| {
            Complex64::new((kx * kx + ky * ky).sqrt().sqrt(), 0.0)
        });
        self.fft2_inplace(&mut field, false);
        Ok(field.as_slice().iter().map(|v| v.re).collect())
    }

    /// Zeroes spectral content above two thirds of the Nyquist index on
    /// either axis (the 2/3 dealiasing rule). Acts on a spectral-side field.
    pub fn dealias_spectrum(&self, spectral: &mut Field2) {
        assert_eq!(spectral.n(), self.n, "field does not match grid");
        let n = self.n;
        let cutoff = (n / 3) as i64;
        let data = spectral.as_mut_slice();
        for row in 0..n {
            let ry = signed_index(row, n).abs();
            for col in 0..n {
                let rx = signed_index(col, n).abs();
                if rx > cutoff || ry > cutoff {
                    data[row * n + col] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Physical-side L^2 norm squared with the grid quadrature weight.
    pub fn l2_norm_sq(&self, field: &Field2) -> f64 {
        self.cell_area() * field.norm_sq_sum()
    }

    /// Exact dilation by 2 on the same grid: `u -> (1/2) u(x/2)`, realized
    /// by spectral zero-padding to the doubled grid and reading off the
    /// central window. Rejected when the input carries mass outside the
    /// central half of the box, since that mass would leave the domain.
    pub fn dilate_double(&self, field: &Field2) -> Result<Field2> {
        self.check_dims(field)?;
        let total = field.norm_sq_sum();
        if total > 0.0 {
            let mut outside = 0.0;
            let quarter = self.n / 4;
            for row in 0..self.n {
                for col in 0..self.n {
                    let r_off = (row as i64 - (self.n / 2) as i64).unsigned_abs() as usize;
                    let c_off = (col as i64 - (self.n / 2) as i64).unsigned_abs() as usize;
                    if r_off > quarter || c_off > quarter {
                        outside += field.at(row, col).norm_sqr();
                    }
                }
            }
            if outside > 1e-10 * total {
                return Err(CoreError::OutOfResolution(format!(
                    "dilation needs support inside |x| <= L/2; outside mass fraction {:.3e}",
                    outside / total
                )));
            }
        }

        let n = self.n;
        let big = 2 * n;
        let mut spec = field.clone();
        self.fft2_inplace(&mut spec, true);

        // Zero-pad the spectrum onto the doubled lattice.
        let mut padded = Field2::zeros(big);
        for row in 0..n {
            let sr = signed_index(row, n);
            let br = sr.rem_euclid(big as i64) as usize;
            for col in 0..n {
                let sc = signed_index(col, n);
                let bc = sc.rem_euclid(big as i64) as usize;
                *padded.at_mut(br, bc) = spec.at(row, col);
            }
        }

        let mut planner = FftPlanner::new();
        let inv = planner.plan_fft_inverse(big);
        let data = padded.as_mut_slice();
        inv.process(data);
        transpose_square(data, big);
        inv.process(data);
        transpose_square(data, big);
        // Fine-grid samples of the trig polynomial are (1/n) IFFT_big;
        // the dilation prefactor 1/2 turns that into 1/(2n).
        let scale = 1.0 / big as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }

        let mut out = Field2::zeros(n);
        let off = n / 2;
        for row in 0..n {
            for col in 0..n {
                *out.at_mut(row, col) = padded.at(row + off, col + off);
            }
        }
        Ok(out)
    }

    /// Exact contraction by 2 on the same grid: `u -> 2 u(2x)`, a decimation
    /// of the samples. Rejected when the spectrum carries mass in the upper
    /// half of the lattice, which the contracted field cannot represent.
    pub fn contract_double(&self, field: &Field2) -> Result<Field2> {
        self.check_dims(field)?;
        let mut spec = field.clone();
        self.fft2_inplace(&mut spec, true);
        let total = spec.norm_sq_sum();
        if total > 0.0 {
            let mut high = 0.0;
            let quarter = (self.n / 4) as i64;
            for row in 0..self.n {
                for col in 0..self.n {
                    if signed_index(row, self.n).abs() > quarter
                        || signed_index(col, self.n).abs() > quarter
                    {
                        high += spec.at(row, col).norm_sqr();
                    }
                }
            }
            if high > 1e-10 * total {
                return Err(CoreError::OutOfResolution(format!(
                    "contraction would alias; high-frequency mass fraction {:.3e}",
                    high / total
                )));
            }
        }

        let n = self.n;
        let half = (n / 2) as i64;
        let mut out = Field2::zeros(n);
        for row in 0..n {
            let src_r = (2 * row as i64 - half).rem_euclid(n as i64) as usize;
            for col in 0..n {
                let src_c = (2 * col as i64 - half).rem_euclid(n as i64) as usize;
                *out.at_mut(row, col) = 2.0 * field.at(src_r, src_c);
            }
        }
        Ok(out)
    }
}

/// Signed lattice index: `m` for `m < n/2`, else `m - n` (Nyquist to -n/2).
#[inline]
pub fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Wraps a signed index displacement back into `[-n/2, n/2)`.
#[inline]
fn wrapped_freq(delta: i64, n: i64) -> f64 {
    let mut d = delta.rem_euclid(n);
    if d >= n / 2 {
        d -= n;
    }
    d as f64
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for row in 0..n {
        for col in (row + 1)..n {
            data.swap(row * n + col, col * n + row);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_field(grid: &SpatialGrid, seed: u64) -> Field2 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        Field2::from_fn(grid.n(), |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    fn gaussian(grid: &SpatialGrid, sigma: f64) -> Field2 {
        Field2::from_fn(grid.n(), |row, col| {
            let x = grid.coord(col);
            let y = grid.coord(row);
            Complex64::new((-(x * x + y * y) / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    #[test]
    fn rejects_bad_grid_sizes() {
        assert!(SpatialGrid::new(8.0, 100).is_err());
        assert!(SpatialGrid::new(8.0, 4).is_err());
        assert!(SpatialGrid::new(-1.0, 64).is_err());
        assert!(SpatialGrid::new(8.0, 64).is_ok());
    }

    #[test]
    fn constant_field_transforms_to_zero_mode() {
        let grid = SpatialGrid::new(4.0, 16).unwrap();
        let field = Field2::from_fn(16, |_, _| Complex64::new(1.0, 0.0));
        let spec = grid.forward(&field).unwrap();
        assert!((spec.at(0, 0) - Complex64::new(16.0, 0.0)).norm() < 1e-12);
        for row in 0..16 {
            for col in 0..16 {
                if (row, col) != (0, 0) {
                    assert!(spec.at(row, col).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let grid = SpatialGrid::new(6.0, 64).unwrap();
        let field = random_field(&grid, 7);
        let spec = grid.forward(&field).unwrap();
        let back = grid.inverse(&spec).unwrap();
        let scale = field.max_abs();
        assert!(back.max_abs_diff(&field) < 1e-12 * scale);
        // Unitary: the quadrature-weighted sums agree on both sides.
        let phys = grid.l2_norm_sq(&field);
        let freq = grid.cell_area() * spec.norm_sq_sum();
        assert!((phys - freq).abs() < 1e-12 * phys);
    }

    #[test]
    fn free_propagation_is_unitary_and_composes() {
        let grid = SpatialGrid::new(6.0, 64).unwrap();
        let field = random_field(&grid, 3);
        let mass0 = grid.l2_norm_sq(&field);
        let once = grid.free_propagate(&field, 0.37).unwrap();
        assert!((grid.l2_norm_sq(&once) - mass0).abs() < 1e-12 * mass0);
        let twice = grid.free_propagate(&once, 0.21).unwrap();
        let direct = grid.free_propagate(&field, 0.58).unwrap();
        assert!(twice.max_abs_diff(&direct) < 1e-12 * field.max_abs());
        let still = grid.free_propagate(&field, 0.0).unwrap();
        assert!(still.max_abs_diff(&field) < 1e-15);
    }

    #[test]
    fn gaussian_free_flow_matches_closed_form() {
        // e^{it Laplacian} e^{-|x|^2/2} = (1+2it)^{-1} e^{-|x|^2/(2(1+2it))}.
        let grid = SpatialGrid::new(16.0, 256).unwrap();
        let field = gaussian(&grid, 1.0);
        for &t in &[-1.0, -0.3, 0.5, 1.0] {
            let num = grid.free_propagate(&field, t).unwrap();
            let denom = Complex64::new(1.0, 2.0 * t);
            let exact = Field2::from_fn(grid.n(), |row, col| {
                let x = grid.coord(col);
                let y = grid.coord(row);
                (Complex64::new(-(x * x + y * y) / 2.0, 0.0) / denom).exp() / denom
            });
            assert!(num.max_abs_diff(&exact) < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn lp_partition_reconstructs_exactly() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 11);
        // Low-pass at level 0 plus shells up to a level covering the whole
        // lattice telescopes back to the identity.
        let top = (grid.nyquist() * std::f64::consts::SQRT_2).log2().ceil() as i32 + 1;
        let mut sum = grid.lp_project(&field, 0, LpMode::LowPass).unwrap();
        for i in 1..=top {
            sum.add_assign(&grid.lp_project(&field, i, LpMode::Shell).unwrap());
        }
        assert!(sum.max_abs_diff(&field) < 1e-12 * field.max_abs());
    }

    #[test]
    fn separated_shells_have_disjoint_support() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 13);
        let p2 = grid.lp_project(&field, 2, LpMode::Shell).unwrap();
        let p0_of_p2 = grid.lp_project(&p2, 0, LpMode::Shell).unwrap();
        assert!(p0_of_p2.max_abs() < 1e-13 * field.max_abs());
        let p4_of_p2 = grid.lp_project(&p2, 4, LpMode::Shell).unwrap();
        assert!(p4_of_p2.max_abs() < 1e-13 * field.max_abs());
    }

    #[test]
    fn negative_shell_vanishes_and_low_pass_nests() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 17);
        let neg = grid.lp_project(&field, -3, LpMode::Shell).unwrap();
        assert_eq!(neg.max_abs(), 0.0);
        // P_{<=i} then P_{<=i+3} equals P_{<=i} exactly.
        let low = grid.lp_project(&field, 1, LpMode::LowPass).unwrap();
        let relow = grid.lp_project(&low, 4, LpMode::LowPass).unwrap();
        assert!(relow.max_abs_diff(&low) < 1e-13 * field.max_abs());
    }

    #[test]
    fn galilean_matches_conjugation_and_reduces_at_zero() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 19);
        let xi = [2.0 * grid.dk(), -5.0 * grid.dk()];

        let direct = grid.galilean_project(&field, xi, 2, LpMode::Shell).unwrap();
        let down = grid.modulate(&field, [-xi[0], -xi[1]]).unwrap();
        let proj = grid.lp_project(&down, 2, LpMode::Shell).unwrap();
        let conj = grid.modulate(&proj, xi).unwrap();
        assert!(direct.max_abs_diff(&conj) < 1e-12 * field.max_abs());

        let at_zero = grid
            .galilean_project(&field, [0.0, 0.0], 1, LpMode::LowPass)
            .unwrap();
        let plain = grid.lp_project(&field, 1, LpMode::LowPass).unwrap();
        assert!(at_zero.max_abs_diff(&plain) < 1e-14 * field.max_abs());
    }

    #[test]
    fn plane_wave_passes_recentred_low_pass() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let xi = [3.0 * grid.dk(), 1.0 * grid.dk()];
        let wave = grid
            .modulate(&Field2::from_fn(32, |_, _| Complex64::new(1.0, 0.0)), xi)
            .unwrap();
        for i in 0..3 {
            let out = grid.galilean_project(&wave, xi, i, LpMode::LowPass).unwrap();
            assert!(out.max_abs_diff(&wave) < 1e-12);
        }
    }

    #[test]
    fn galilean_rejects_off_lattice_and_out_of_range() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 23);
        let off = grid.galilean_project(&field, [0.5 * grid.dk(), 0.0], 1, LpMode::Shell);
        assert!(matches!(off, Err(CoreError::FrequencyOffLattice { .. })));
        let out = grid.galilean_project(&field, [grid.nyquist() * 2.0, 0.0], 1, LpMode::Shell);
        assert!(matches!(out, Err(CoreError::FrequencyOutOfRange { .. })));
    }

    #[test]
    fn half_derivative_on_plane_wave_density() {
        let grid = SpatialGrid::new(4.0, 64).unwrap();
        let k = [3.0 * grid.dk(), 0.0];
        let density: Vec<f64> = (0..64 * 64)
            .map(|idx| {
                let x = grid.coord(idx % 64);
                (k[0] * x).cos()
            })
            .collect();
        let out = grid.half_derivative(&density).unwrap();
        let expect = k[0].sqrt();
        for (o, d) in out.iter().zip(&density) {
            assert!((o - expect * d).abs() < 1e-10);
        }

        let zero = grid.half_derivative(&vec![0.0; 64 * 64]).unwrap();
        assert!(zero.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn half_derivative_composes_to_full_gradient_modulus() {
        let grid = SpatialGrid::new(4.0, 64).unwrap();
        // Band-limited real density.
        let density: Vec<f64> = (0..64 * 64)
            .map(|idx| {
                let x = grid.coord(idx % 64);
                let y = grid.coord(idx / 64);
                (2.0 * grid.dk() * x).cos() + 0.3 * (5.0 * grid.dk() * y).sin()
            })
            .collect();
        let once = grid.half_derivative(&density).unwrap();
        let twice = grid.half_derivative(&once).unwrap();
        // |nabla| via the full multiplier.
        let mut field = Field2::from_vec(
            64,
            density.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        );
        grid.forward_inplace(&mut field);
        grid.multiply_symbol(&mut field, |kx, ky| Complex64::new(kx.hypot(ky), 0.0));
        grid.inverse_inplace(&mut field);
        for (a, b) in twice.iter().zip(field.as_slice()) {
            assert!((a - b.re).abs() < 1e-10);
        }
    }

    #[test]
    fn multipliers_commute() {
        let grid = SpatialGrid::new(4.0, 32).unwrap();
        let field = random_field(&grid, 29);
        let a = grid
            .lp_project(&grid.free_propagate(&field, 0.3).unwrap(), 2, LpMode::Shell)
            .unwrap();
        let b = grid
            .free_propagate(&grid.lp_project(&field, 2, LpMode::Shell).unwrap(), 0.3)
            .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-12 * field.max_abs());
    }

    #[test]
    fn dilation_round_trips_and_preserves_mass() {
        let grid = SpatialGrid::new(8.0, 64).unwrap();
        let field = gaussian(&grid, 1.0);
        let mass0 = grid.l2_norm_sq(&field);
        let dilated = grid.dilate_double(&field).unwrap();
        let mass1 = grid.l2_norm_sq(&dilated);
        assert!((mass1 - mass0).abs() < 1e-8 * mass0);
        let back = grid.contract_double(&dilated).unwrap();
        assert!(back.max_abs_diff(&field) < 1e-8 * field.max_abs());
    }

    #[test]
    fn contraction_rejects_under_resolved_input() {
        let grid = SpatialGrid::new(8.0, 64).unwrap();
        // Narrow spike has spectrum across the whole lattice.
        let field = gaussian(&grid, 0.2);
        assert!(matches!(
            grid.contract_double(&field),
            Err(CoreError::OutOfResolution(_))
        ));
    }

    #[test]
    fn bump_profile_shape() {
        assert_eq!(BumpProfile::eval(0.3), 1.0);
        assert_eq!(BumpProfile::eval(1.0), 1.0);
        assert_eq!(BumpProfile::eval(2.0), 0.0);
        assert_eq!(BumpProfile::eval(5.0), 0.0);
        let mut prev = 1.0;
        for i in 0..=100 {
            let r = 1.0 + i as f64 / 100.0;
            let v = BumpProfile::eval(r);
            assert!((0.0..=1.0).contains(&v));
            assert!(v <= prev + 1e-15, "not nonincreasing at r = {r}");
            prev = v;
        }
    }
}
