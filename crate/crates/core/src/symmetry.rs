//! The symmetry group of the system acting on states and trajectories.
//!
//! An element g = (theta, xi0, x0, lambda) acts on a solution by
//! `(T_g u)(t, x) = lambda^-1 e^{i theta} e^{i x . xi0} e^{-i t |xi0|^2}
//!  u(t / lambda^2, (x - x0 - 2 xi0 t) / lambda)`,
//! which maps solutions to solutions. Dilations are restricted to dyadic
//! factors realized by spectral resampling; anything else is rejected
//! rather than silently interpolated.

use num_complex::Complex64;

use crate::dynamics::nonlinearity;
use crate::error::{CoreError, Result};
use crate::field::Field2;
use crate::state::{Trajectory, VectorField, WeightExponent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    /// Global phase, radians.
    pub theta: f64,
    /// Galilean boost frequency.
    pub xi: [f64; 2],
    /// Spatial translation.
    pub x0: [f64; 2],
    /// Dilation factor, > 0.
    pub scale: f64,
}

impl GroupElement {
    pub fn identity() -> Self {
        GroupElement {
            theta: 0.0,
            xi: [0.0, 0.0],
            x0: [0.0, 0.0],
            scale: 1.0,
        }
    }

    pub fn phase(theta: f64) -> Self {
        GroupElement { theta, ..Self::identity() }
    }

    pub fn translation(x0: [f64; 2]) -> Self {
        GroupElement { x0, ..Self::identity() }
    }

    pub fn boost(xi: [f64; 2]) -> Self {
        GroupElement { xi, ..Self::identity() }
    }

    pub fn dilation(scale: f64) -> Self {
        GroupElement { scale, ..Self::identity() }
    }

    /// The log2 of the scale when it is an exact power of two.
    pub fn dyadic_exponent(&self) -> Result<i32> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(CoreError::NonDyadicScale(self.scale));
        }
        let p = self.scale.log2();
        let rounded = p.round();
        if (p - rounded).abs() > 1e-12 {
            return Err(CoreError::NonDyadicScale(self.scale));
        }
        Ok(rounded as i32)
    }

    /// Composition in the action order: `apply(self, apply(other, u))
    /// = apply(self.compose(other), u)`.
    ///
    /// Derived by chasing the action formula through itself:
    /// the scales multiply, translations compose as `x0 + lambda x0'`,
    /// boosts as `xi + xi'/lambda`, and the extra constant phase is
    /// `-x0 . xi'/lambda`.
    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        let lam = self.scale;
        let xi = [
            self.xi[0] + other.xi[0] / lam,
            self.xi[1] + other.xi[1] / lam,
        ];
        let x0 = [
            self.x0[0] + lam * other.x0[0],
            self.x0[1] + lam * other.x0[1],
        ];
        let theta = self.theta + other.theta
            - (self.x0[0] * other.xi[0] + self.x0[1] * other.xi[1]) / lam;
        GroupElement {
            theta,
            xi,
            x0,
            scale: lam * other.scale,
        }
    }

    /// Applies the element at outer time `t`. The snapshot passed in is
    /// understood as the solution at inner time `t / lambda^2`; at t = 0
    /// this is just the spatial action.
    ///
    /// Boosts must sit on the frequency lattice and the dilated state must
    /// stay resolved on the grid; otherwise the transform is rejected.
    pub fn apply(&self, state: &VectorField, t: f64) -> Result<VectorField> {
        let grid = state.grid().clone();
        grid.lattice_indices(self.xi)?;
        let exponent = self.dyadic_exponent()?;

        let mut fields: Vec<Field2> = Vec::with_capacity(state.band().mode_count());
        let shift = [
            self.x0[0] + 2.0 * self.xi[0] * t,
            self.x0[1] + 2.0 * self.xi[1] * t,
        ];
        let scalar = Complex64::from_polar(
            1.0,
            self.theta - t * (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1]),
        );
        for (_, field) in state.modes() {
            // u((x - shift)/lambda): dilate first, then translate.
            let mut out = field.clone();
            for _ in 0..exponent.max(0) {
                out = grid.dilate_double(&out)?;
            }
            for _ in 0..(-exponent).max(0) {
                out = grid.contract_double(&out)?;
            }
            out = grid.translate(&out, shift)?;
            out = grid.modulate(&out, self.xi)?;
            out.scale(scalar);
            fields.push(out);
        }
        Ok(VectorField::from_modes(grid, state.band(), fields))
    }
}

/// Residual report from checking that a transformed trajectory still
/// solves the equation.
#[derive(Debug, Clone)]
pub struct CovarianceReport {
    /// Relative residual per interior snapshot.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Snapshot spacing of the transformed trajectory; the centered time
    /// difference floors the residual at O(dt^2).
    pub snapshot_dt: f64,
}

/// Applies `g` to every snapshot and measures the PDE residual
/// `|| i d_t v + Lap v - F(v) ||_{L^2 l^2}` relative to `|| F(v) ||_{L^2 l^2}`,
/// with the time derivative taken by centered differences across snapshots.
pub fn verify_covariance(traj: &Trajectory, g: &GroupElement) -> Result<CovarianceReport> {
    if traj.len() < 3 {
        return Err(CoreError::TooFewSnapshots {
            need: 3,
            got: traj.len(),
        });
    }
    let dt_in = traj.uniform_dt()?;
    let lam_sq = g.scale * g.scale;
    let dt_out = dt_in * lam_sq;

    let transformed: Vec<VectorField> = traj
        .iter()
        .map(|(t_in, state)| g.apply(state, t_in * lam_sq))
        .collect::<Result<_>>()?;

    let mut residuals = Vec::with_capacity(transformed.len().saturating_sub(2));
    for idx in 1..transformed.len() - 1 {
        let v = &transformed[idx];
        let grid = v.grid().clone();
        let f = nonlinearity(v);
        let f_norm = f
            .fields()
            .iter()
            .map(|m| grid.l2_norm_sq(m))
            .sum::<f64>()
            .sqrt();

        let mut residual_sq = 0.0;
        for (((_, prev), (_, next)), (fj, vj)) in transformed[idx - 1]
            .modes()
            .zip(transformed[idx + 1].modes())
            .zip(f.fields().iter().zip(v.fields()))
        {
            let lap = grid.laplacian(vj)?;
            let mut r = Field2::zeros(grid.n());
            let inv_2dt = 1.0 / (2.0 * dt_out);
            for (slot, (((p, nx), l), fv)) in r.as_mut_slice().iter_mut().zip(
                prev.as_slice()
                    .iter()
                    .zip(next.as_slice())
                    .zip(lap.as_slice())
                    .zip(fj.as_slice()),
            ) {
                let dtv = (nx - p) * inv_2dt;
                *slot = Complex64::new(0.0, 1.0) * dtv + l - fv;
            }
            residual_sq += grid.l2_norm_sq(&r);
        }
        residuals.push(residual_sq.sqrt() / f_norm.max(f64::MIN_POSITIVE));
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(CovarianceReport {
        residuals,
        max_residual,
        snapshot_dt: dt_out,
    })
}
