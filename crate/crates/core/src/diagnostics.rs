//! Measurable functionals: scattering probes, almost-periodicity
//! parameters, the interaction Morawetz quantities, and the empirical
//! bilinear frequency-interaction scaling measurement.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::field::Field2;
use crate::grid::{signed_index, LpMode, SpatialGrid};
use crate::initial::{seeded_rng, streams};
use crate::resonance::ModeBand;
use crate::state::{
    MixedNormAccumulator, SpatialExponent, Trajectory, VectorField, WeightExponent, WeightSpec,
};
use rand::Rng;
use std::sync::Arc;

/// Scattering probe output: windowed L^4 accumulation and the Cauchy gaps
/// of the pulled-back states `e^{-it Lap} u(t)`.
#[derive(Debug, Clone)]
pub struct ScatterReport {
    pub times: Vec<f64>,
    /// Per-window increments of `int ||u||^4_{L^4_x l^2} dt`.
    pub l4_increments: Vec<f64>,
    pub l4_total: f64,
    /// `|| pull(t_{m+1}) - pull(t_m) ||_{L^2_x h^1}` for consecutive snapshots.
    pub consecutive_gaps: Vec<f64>,
    /// Gap between the last two snapshots.
    pub final_gap: f64,
    /// Largest gap over all snapshot pairs at or after the onset index.
    pub max_pair_gap: f64,
    pub onset_index: usize,
}

/// Pulls every snapshot back along the free flow and measures how the
/// sequence settles down. `onset_time` marks where the decay is expected
/// to begin (gaps before it are reported but not ranked).
pub fn scattering_probe(traj: &Trajectory, onset_time: f64) -> Result<ScatterReport> {
    if traj.len() < 8 {
        return Err(CoreError::TooFewSnapshots {
            need: 8,
            got: traj.len(),
        });
    }
    let mut l4 = MixedNormAccumulator::new(4.0);
    let mut l4_running = Vec::with_capacity(traj.len());
    let mut pulled: Vec<VectorField> = Vec::with_capacity(traj.len());
    for (t, state) in traj.iter() {
        let norm = state.norm(SpatialExponent::Four, WeightExponent::Zero);
        l4_running.push(l4.push(t, norm));
        pulled.push(state.free_propagate(-t));
    }
    let l4_increments: Vec<f64> = l4_running
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();

    let consecutive_gaps: Vec<f64> = pulled
        .windows(2)
        .map(|w| w[0].l2h_distance(&w[1], WeightExponent::One))
        .collect();
    let final_gap = *consecutive_gaps.last().unwrap();

    let onset_index = traj
        .times()
        .iter()
        .position(|&t| t >= onset_time)
        .unwrap_or(0);
    let mut max_pair_gap = 0.0f64;
    for m in onset_index..pulled.len() {
        for n in (m + 1)..pulled.len() {
            let gap = pulled[m].l2h_distance(&pulled[n], WeightExponent::One);
            max_pair_gap = max_pair_gap.max(gap);
        }
    }
    Ok(ScatterReport {
        times: traj.times().to_vec(),
        l4_increments,
        l4_total: l4.integral(),
        consecutive_gaps,
        final_gap,
        max_pair_gap,
        onset_index,
    })
}

/// Almost-periodicity parameters of a state: mass-weighted position
/// centroid, spectral centroid, and the 50%-mass frequency concentration
/// radius around the spectral centroid (normalized by the reference
/// radius 1).
pub fn extract_params(state: &VectorField) -> Result<([f64; 2], [f64; 2], f64)> {
    let grid = state.grid();
    let mass = state.mass(&WeightSpec::unweighted());
    if !(mass > 0.0) {
        return Err(CoreError::ZeroMass);
    }
    let n = grid.n();

    let mut x_center = [0.0f64; 2];
    for (_, field) in state.modes() {
        let data = field.as_slice();
        for row in 0..n {
            let y = grid.coord(row);
            for col in 0..n {
                let w = data[row * n + col].norm_sqr();
                x_center[0] += grid.coord(col) * w;
                x_center[1] += y * w;
            }
        }
    }
    let cell = grid.cell_area();
    x_center[0] *= cell / mass;
    x_center[1] *= cell / mass;

    let spectra: Vec<Field2> = state
        .fields()
        .iter()
        .map(|f| grid.forward(f).expect("grid matches"))
        .collect();
    let mut xi_center = [0.0f64; 2];
    let mut spec_mass = 0.0f64;
    for spec in &spectra {
        let data = spec.as_slice();
        for row in 0..n {
            let ky = grid.freq(row);
            for col in 0..n {
                let w = data[row * n + col].norm_sqr();
                xi_center[0] += grid.freq(col) * w;
                xi_center[1] += ky * w;
                spec_mass += w;
            }
        }
    }
    xi_center[0] /= spec_mass;
    xi_center[1] /= spec_mass;

    // Smallest radius holding at least half of the spectral mass.
    let mut weighted: Vec<(f64, f64)> = Vec::with_capacity(n * n);
    for spec in &spectra {
        let data = spec.as_slice();
        for row in 0..n {
            let ky = grid.freq(row) - xi_center[1];
            for col in 0..n {
                let kx = grid.freq(col) - xi_center[0];
                let w = data[row * n + col].norm_sqr();
                if w > 0.0 {
                    weighted.push((kx.hypot(ky), w));
                }
            }
        }
    }
    weighted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut acc = 0.0;
    let mut radius = 0.0;
    for (r, w) in weighted {
        acc += w;
        radius = r;
        if acc >= 0.5 * spec_mass {
            break;
        }
    }
    Ok((x_center, xi_center, radius))
}

fn lowpass_state(state: &VectorField, cutoff: Option<i32>) -> VectorField {
    match cutoff {
        None => state.clone(),
        Some(level) => state.map_modes(|_, f| {
            state
                .grid()
                .lp_project(f, level, LpMode::LowPass)
                .expect("grid matches")
        }),
    }
}

/// The unit-vector convolution kernel `z / |z|`, sampled on the
/// displacement lattice in FFT layout, zero at the origin cell and outside
/// the window radius L (so periodic wrap-around cannot masquerade as
/// interaction).
fn morawetz_kernel(grid: &SpatialGrid) -> (Field2, Field2) {
    let n = grid.n();
    let window = grid.half_width();
    let mut kx = Field2::zeros(n);
    let mut ky = Field2::zeros(n);
    for row in 0..n {
        let zy = signed_index(row, n) as f64 * grid.dx();
        for col in 0..n {
            let zx = signed_index(col, n) as f64 * grid.dx();
            let r = zx.hypot(zy);
            if r > 0.0 && r < window {
                *kx.at_mut(row, col) = Complex64::new(zx / r, 0.0);
                *ky.at_mut(row, col) = Complex64::new(zy / r, 0.0);
            }
        }
    }
    (kx, ky)
}

/// Momentum density `p = sum_j Im[conj(w_j) grad w_j]` of a state.
fn momentum_density(state: &VectorField) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = state.grid();
    let len = grid.n() * grid.n();
    let mut px = vec![0.0f64; len];
    let mut py = vec![0.0f64; len];
    for (_, field) in state.modes() {
        let [gx, gy] = grid.gradient(field)?;
        for ((p, q), (u, (vx, vy))) in px.iter_mut().zip(py.iter_mut()).zip(
            field
                .as_slice()
                .iter()
                .zip(gx.as_slice().iter().zip(gy.as_slice())),
        ) {
            *p += (u.conj() * vx).im;
            *q += (u.conj() * vy).im;
        }
    }
    Ok((px, py))
}

/// Interaction Morawetz functional
/// `M(t) = int int rho(y) (x-y)/|x-y| . p(x) dx dy`,
/// with the optional low-pass applied first, evaluated as two FFT
/// convolutions against the vector kernel.
pub fn interaction_morawetz(state: &VectorField, cutoff: Option<i32>) -> Result<f64> {
    let w = lowpass_state(state, cutoff);
    let grid = w.grid().clone();
    let rho = w.density();
    let (px, py) = momentum_density(&w)?;

    let n = grid.n();
    let mut rho_field = Field2::from_vec(
        n,
        rho.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
    );
    grid.forward_inplace(&mut rho_field);

    let (mut kx, mut ky) = morawetz_kernel(&grid);
    grid.forward_inplace(&mut kx);
    grid.forward_inplace(&mut ky);

    // Circular convolution with unitary transforms picks up one factor n.
    let conv_scale = n as f64;
    let mut conv_x = Field2::zeros(n);
    let mut conv_y = Field2::zeros(n);
    for idx in 0..n * n {
        conv_x.as_mut_slice()[idx] = kx.as_slice()[idx] * rho_field.as_slice()[idx] * conv_scale;
        conv_y.as_mut_slice()[idx] = ky.as_slice()[idx] * rho_field.as_slice()[idx] * conv_scale;
    }
    grid.inverse_inplace(&mut conv_x);
    grid.inverse_inplace(&mut conv_y);

    let cell = grid.cell_area();
    let mut total = 0.0;
    for idx in 0..n * n {
        total += conv_x.as_slice()[idx].re * px[idx] + conv_y.as_slice()[idx].re * py[idx];
    }
    Ok(total * cell * cell)
}

/// Direct quadruple-loop evaluation of the same functional; the oracle the
/// FFT route is checked against on small grids.
pub fn interaction_morawetz_direct(state: &VectorField, cutoff: Option<i32>) -> Result<f64> {
    let w = lowpass_state(state, cutoff);
    let grid = w.grid().clone();
    let rho = w.density();
    let (px, py) = momentum_density(&w)?;
    let (kx, ky) = morawetz_kernel(&grid);

    let n = grid.n();
    let mut total = 0.0;
    for xr in 0..n {
        for xc in 0..n {
            let p = (px[xr * n + xc], py[xr * n + xc]);
            if p.0 == 0.0 && p.1 == 0.0 {
                continue;
            }
            let mut conv = (0.0, 0.0);
            for yr in 0..n {
                for yc in 0..n {
                    let r = rho[yr * n + yc];
                    if r == 0.0 {
                        continue;
                    }
                    let dr = (xr + n - yr) % n;
                    let dc = (xc + n - yc) % n;
                    conv.0 += kx.at(dr, dc).re * r;
                    conv.1 += ky.at(dr, dc).re * r;
                }
            }
            total += conv.0 * p.0 + conv.1 * p.1;
        }
    }
    let cell = grid.cell_area();
    Ok(total * cell * cell)
}

/// Cauchy-Schwarz ceiling for the functional:
/// `|M| <= mass * ||w||_{L^2 l^2} * ||grad w||_{L^2 l^2}`.
pub fn morawetz_ceiling(state: &VectorField, cutoff: Option<i32>) -> Result<f64> {
    let w = lowpass_state(state, cutoff);
    let grid = w.grid().clone();
    let mass = w.mass(&WeightSpec::unweighted());
    let l2 = mass.sqrt();
    let mut grad_sq = 0.0;
    for (_, field) in w.modes() {
        let [gx, gy] = grid.gradient(field)?;
        grad_sq += grid.l2_norm_sq(&gx) + grid.l2_norm_sq(&gy);
    }
    Ok(mass * l2 * grad_sq.sqrt())
}

/// Time integral of `|| sum_j |nabla|^{1/2} |w_j|^2 ||^2_{L^2_x}` over a
/// recorded trajectory, by the trapezoid rule.
pub fn morawetz_lhs(traj: &Trajectory, cutoff: Option<i32>) -> Result<f64> {
    if traj.len() < 2 {
        return Err(CoreError::TooFewSnapshots {
            need: 2,
            got: traj.len(),
        });
    }
    let mut acc = MixedNormAccumulator::new(1.0);
    for (t, state) in traj.iter() {
        acc.push(t, half_derivative_density_norm_sq(state, cutoff)?);
    }
    Ok(acc.integral())
}

/// The integrand of the half-derivative Morawetz bound at one instant.
pub fn half_derivative_density_norm_sq(
    state: &VectorField,
    cutoff: Option<i32>,
) -> Result<f64> {
    let w = lowpass_state(state, cutoff);
    let grid = w.grid().clone();
    let n = grid.n();
    let mut total = vec![0.0f64; n * n];
    for (_, field) in w.modes() {
        let density: Vec<f64> = field.as_slice().iter().map(|v| v.norm_sqr()).collect();
        let half = grid.half_derivative(&density)?;
        for (t, h) in total.iter_mut().zip(&half) {
            *t += h;
        }
    }
    Ok(grid.cell_area() * total.iter().map(|v| v * v).sum::<f64>())
}

/// One octave sample of the bilinear measurement.
#[derive(Debug, Clone, Copy)]
pub struct BilinearSample {
    /// Nominal M/N frequency ratio (powers of two).
    pub ratio: f64,
    /// Measured `|| ||u(t)||_{l^2} ||v(t)||_{l^2} ||_{L^p_t L^q_x}`.
    pub value: f64,
}

/// Log-log fit of the bilinear samples.
#[derive(Debug, Clone)]
pub struct BilinearFit {
    pub samples: Vec<BilinearSample>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Probe configuration. The frequency shells are the dyadic
/// Littlewood-Paley shells; `i_low` is the highest low shell and the
/// sweep walks it down through the requested number of octaves.
#[derive(Debug, Clone)]
pub struct BilinearProbeSpec {
    pub grid_half_width: f64,
    pub grid_points: usize,
    /// High shell index: data supported where |k| ~ 2^{i_high}.
    pub i_high: i32,
    /// Largest low shell index.
    pub i_low: i32,
    /// Number of M/N octaves sampled (>= 3 required, walking i_low down).
    pub octaves: usize,
    /// Time exponent p with 1/p + 1/q = 1; `None` means the sup-in-time,
    /// L^1_x endpoint.
    pub time_exponent: Option<f64>,
    /// Random draws averaged per octave.
    pub reps: usize,
    /// Modes per vector (band J; each mode carries an independent packet).
    pub band: u32,
    pub seed: u64,
}

impl BilinearProbeSpec {
    /// Defaults that resolve every shell comfortably at desk scale.
    pub fn standard(seed: u64) -> Self {
        BilinearProbeSpec {
            grid_half_width: 4.0,
            grid_points: 512,
            i_high: 6,
            i_low: 3,
            octaves: 4,
            time_exponent: Some(2.0),
            reps: 3,
            band: 1,
            seed,
        }
    }
}

/// Wave-packet data adapted to a dyadic shell: a Gaussian envelope of
/// width sigma centered at `x_c`, carried to frequency `k0`, then strictly
/// localized to the shell by the Littlewood-Paley symbol.
fn shell_packet(
    grid: &Arc<SpatialGrid>,
    shell: i32,
    sigma: f64,
    x_c: [f64; 2],
    k0: [f64; 2],
    phase: f64,
) -> Result<Field2> {
    let n = grid.n();
    let envelope = Field2::from_fn(n, |row, col| {
        let x = grid.coord(col) - x_c[0];
        let y = grid.coord(row) - x_c[1];
        let gauss = (-(x * x + y * y) / (2.0 * sigma * sigma)).exp();
        let carrier = grid.coord(col) * k0[0] + grid.coord(row) * k0[1] + phase;
        Complex64::from_polar(gauss, carrier)
    });
    let projected = grid.lp_project(&envelope, shell, LpMode::Shell)?;
    let norm_sq = grid.l2_norm_sq(&projected);
    if norm_sq <= 0.0 {
        return Err(CoreError::UnresolvedShell {
            shell,
            detail: "no spectral content survived the shell projection".into(),
        });
    }
    let mut out = projected;
    out.scale(Complex64::new(1.0 / norm_sq.sqrt(), 0.0));
    Ok(out)
}

fn shell_center_radius(shell: i32) -> f64 {
    if shell == 0 {
        1.0
    } else {
        1.5 * 2f64.powi(shell)
    }
}

fn check_shell_resolved(grid: &SpatialGrid, shell: i32) -> Result<()> {
    let upper = 2f64.powi(shell + 1);
    let lower = if shell == 0 { 0.0 } else { 2f64.powi(shell - 1) };
    if upper > grid.nyquist() {
        return Err(CoreError::UnresolvedShell {
            shell,
            detail: format!("shell top {upper} exceeds Nyquist {}", grid.nyquist()),
        });
    }
    if lower > 0.0 && lower < 2.0 * grid.dk() {
        return Err(CoreError::UnresolvedShell {
            shell,
            detail: format!(
                "shell bottom {lower} too close to the lattice spacing {}",
                grid.dk()
            ),
        });
    }
    Ok(())
}

struct PacketPair {
    high: VectorField,
    low: VectorField,
    window: f64,
}

/// Draws one random frequency-localized pair: per-mode packets on the high
/// shell placed upstream so they sweep through the low-shell packets near
/// the middle of the measurement window.
fn draw_pair(
    grid: &Arc<SpatialGrid>,
    band: ModeBand,
    i_high: i32,
    i_low: i32,
    rng: &mut impl Rng,
) -> Result<PacketPair> {
    let sigma = 0.5 / 2f64.powi(i_low);
    let r_high = shell_center_radius(i_high);
    let r_low = shell_center_radius(i_low);
    let travel = 4.0 * sigma;
    let window = travel / r_high;
    let t_mid = 0.5 * window;

    let mut high_fields = Vec::with_capacity(band.mode_count());
    let mut low_fields = Vec::with_capacity(band.mode_count());
    let amp = 1.0 / (band.mode_count() as f64).sqrt();
    for _ in band.modes() {
        let ang: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let k0 = [r_high * ang.cos(), r_high * ang.sin()];
        // Start upstream so the packet center crosses the origin at t_mid.
        let x_c = [-2.0 * k0[0] * t_mid, -2.0 * k0[1] * t_mid];
        let mut f = shell_packet(grid, i_high, sigma, x_c, k0, rng.gen::<f64>())?;
        f.scale(Complex64::new(amp, 0.0));
        high_fields.push(f);

        let ang_low: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let k0_low = [r_low * ang_low.cos(), r_low * ang_low.sin()];
        let mut g = shell_packet(grid, i_low, sigma, [0.0, 0.0], k0_low, rng.gen::<f64>())?;
        g.scale(Complex64::new(amp, 0.0));
        low_fields.push(g);
    }
    Ok(PacketPair {
        high: VectorField::from_modes(grid.clone(), band, high_fields),
        low: VectorField::from_modes(grid.clone(), band, low_fields),
        window,
    })
}

/// Measures `|| ||e^{it Lap} u||_{l^2} . ||e^{it Lap} v||_{l^2} ||` in the
/// mixed norm over the window, sampling the free flow directly.
fn measure_product_norm(
    high: &VectorField,
    low: &VectorField,
    window: f64,
    time_exponent: Option<f64>,
    time_samples: usize,
) -> f64 {
    let grid = high.grid().clone();
    let cell = grid.cell_area();
    let p = time_exponent;
    let q = match p {
        Some(p) => p / (p - 1.0),
        None => 1.0,
    };
    let mut acc = p.map(MixedNormAccumulator::new);
    let mut sup = 0.0f64;
    for s in 0..=time_samples {
        let t = window * s as f64 / time_samples as f64;
        let u = high.free_propagate(t);
        let v = low.free_propagate(t);
        let nu = u.pointwise_h_norm(WeightExponent::Zero);
        let nv = v.pointwise_h_norm(WeightExponent::Zero);
        let spatial = if q == 1.0 {
            nu.iter().zip(&nv).map(|(a, b)| a * b).sum::<f64>() * cell
        } else {
            (nu.iter()
                .zip(&nv)
                .map(|(a, b)| (a * b).powf(q))
                .sum::<f64>()
                * cell)
                .powf(1.0 / q)
        };
        match acc.as_mut() {
            Some(acc) => {
                acc.push(t, spatial);
            }
            None => sup = sup.max(spatial),
        }
    }
    match (acc, p) {
        (Some(acc), Some(p)) => acc.integral().powf(1.0 / p),
        _ => sup,
    }
}

/// Runs the bilinear scaling measurement: random shell-localized pairs per
/// octave of M/N, free evolution, mixed-norm measurement, and a least
/// squares log-log fit of value against ratio.
pub fn bilinear_probe(spec: &BilinearProbeSpec) -> Result<BilinearFit> {
    if spec.octaves < 3 {
        return Err(CoreError::TooFewOctaves {
            need: 3,
            got: spec.octaves,
        });
    }
    if let Some(p) = spec.time_exponent {
        if p < 1.0 || !p.is_finite() {
            return Err(CoreError::UnsupportedExponent(format!(
                "time exponent {p} (need p >= 1 with 1/p + 1/q = 1)"
            )));
        }
    }
    let grid = SpatialGrid::new(spec.grid_half_width, spec.grid_points)?;
    let band = ModeBand::new(spec.band)?;
    check_shell_resolved(&grid, spec.i_high)?;
    let mut rng = seeded_rng(spec.seed, streams::BILINEAR);

    let mut samples = Vec::with_capacity(spec.octaves);
    for octave in 0..spec.octaves {
        let i_low = spec.i_low - octave as i32;
        if i_low < 0 || i_low >= spec.i_high {
            return Err(CoreError::UnresolvedShell {
                shell: i_low,
                detail: "octave sweep left the valid shell range".into(),
            });
        }
        check_shell_resolved(&grid, i_low)?;
        let ratio = 2f64.powi(i_low - spec.i_high);
        let mut value = 0.0;
        for _ in 0..spec.reps.max(1) {
            let pair = draw_pair(&grid, band, spec.i_high, i_low, &mut rng)?;
            value += measure_product_norm(
                &pair.high,
                &pair.low,
                pair.window,
                spec.time_exponent,
                96,
            );
        }
        value /= spec.reps.max(1) as f64;
        samples.push(BilinearSample { ratio, value });
    }
    let (slope, intercept, r_squared) = log_log_fit(&samples);
    Ok(BilinearFit {
        samples,
        slope,
        intercept,
        r_squared,
    })
}

/// Endpoint check at p = infinity: the sup-in-time L^1_x product norm of
/// two free evolutions never exceeds the product of the initial masses.
pub fn bilinear_sup_endpoint(
    high: &VectorField,
    low: &VectorField,
    window: f64,
    time_samples: usize,
) -> (f64, f64) {
    let measured = measure_product_norm(high, low, window, None, time_samples);
    let bound = high.mass(&WeightSpec::unweighted()).sqrt()
        * low.mass(&WeightSpec::unweighted()).sqrt();
    (measured, bound)
}

fn log_log_fit(samples: &[BilinearSample]) -> (f64, f64, f64) {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| (s.ratio.ln(), s.value.ln()))
        .collect();
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &pts {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, intercept, r_squared)
}
