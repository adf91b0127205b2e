//! Thermodynamic-limit mean-field dynamics of the cascaded source-decoder
//! system.
//!
//! The rescaled magnetizations `m_alpha^i = lim 2 <S_alpha^i> / N` obey six
//! coupled polynomial equations in the rescaled time `tau = S t`; the source
//! block is autonomous, the decoder is driven by the source with no
//! back-action. Each subsystem conserves `|m^i|^2 = 1`, which doubles as the
//! step-size health check of the integrator. The rescaled drive satisfies
//! `omega_tilde / kappa = omega / omega_c`.

use num_complex::Complex64 as C64;

use crate::{Error, Result};

const CASIMIR_TOL: f64 = 1e-8;

/// Bloch vectors of source and decoder at one instant of rescaled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanFieldState {
    pub m_source: [f64; 3],
    pub m_decoder: [f64; 3],
    pub time: f64,
}

impl MeanFieldState {
    pub fn new(m_source: [f64; 3], m_decoder: [f64; 3]) -> Self {
        Self {
            m_source,
            m_decoder,
            time: 0.0,
        }
    }

    /// Casimir invariants (|m^S|^2, |m^D|^2).
    pub fn casimirs(&self) -> (f64, f64) {
        let sq = |m: &[f64; 3]| m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
        (sq(&self.m_source), sq(&self.m_decoder))
    }
}

/// Default initial condition: both spins at the north pole, tilted by 1e-3
/// in m_x and renormalized (the exact pole is a fixed point of several
/// right-hand-side terms).
pub fn default_initial_state() -> MeanFieldState {
    let tilt = 1e-3_f64;
    let z = (1.0 - tilt * tilt).sqrt();
    MeanFieldState::new([tilt, 0.0, z], [tilt, 0.0, z])
}

/// Right-hand side of the six mean-field equations of motion, ordered
/// `(dm_x^S, dm_y^S, dm_z^S, dm_x^D, dm_y^D, dm_z^D)`.
pub fn meanfield_rhs(
    state: &MeanFieldState,
    omega_tilde: f64,
    kappa: f64,
    dphi: f64,
) -> [f64; 6] {
    let [sx, sy, sz] = state.m_source;
    let [dx, dy, dz] = state.m_decoder;
    let (c, s) = (dphi.cos(), dphi.sin());

    [
        kappa * sx * sz,
        -omega_tilde * sz + kappa * sy * sz,
        omega_tilde * sy - kappa * (sx * sx + sy * sy),
        kappa * (dx * dz + 2.0 * sx * dz * c - 2.0 * sy * dz * s),
        -omega_tilde * dz + kappa * (dz * dy + 2.0 * sx * dz * s + 2.0 * sy * dz * c),
        omega_tilde * dy
            - 2.0 * kappa * ((sx * dx + sy * dy) * c + (sx * dy - sy * dx) * s)
            - kappa * (dx * dx + dy * dy),
    ]
}

/// Sampled mean-field trajectory.
#[derive(Debug, Clone)]
pub struct MeanFieldTrajectory {
    pub states: Vec<MeanFieldState>,
    /// Largest Casimir deviation from the initial values along the run.
    pub casimir_drift: f64,
}

impl MeanFieldTrajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.time).collect()
    }

    pub fn source_mz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.m_source[2]).collect()
    }

    pub fn decoder_mz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.m_decoder[2]).collect()
    }
}

fn add_scaled(state: &MeanFieldState, k: &[f64; 6], factor: f64) -> MeanFieldState {
    MeanFieldState {
        m_source: [
            state.m_source[0] + factor * k[0],
            state.m_source[1] + factor * k[1],
            state.m_source[2] + factor * k[2],
        ],
        m_decoder: [
            state.m_decoder[0] + factor * k[3],
            state.m_decoder[1] + factor * k[4],
            state.m_decoder[2] + factor * k[5],
        ],
        time: state.time,
    }
}

/// Integrate the mean-field equations with a fixed-step classical
/// fourth-order scheme, sampling every step. Fails with
/// [`Error::CasimirDrift`] if either conserved `|m|^2` drifts beyond 1e-8.
pub fn integrate_meanfield(
    init: &MeanFieldState,
    omega_tilde: f64,
    kappa: f64,
    dphi: f64,
    t_end: f64,
    dt: f64,
) -> Result<MeanFieldTrajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams {
            field: "dt",
            reason: format!("step must be positive, got {dt}"),
        });
    }
    if t_end < 0.0 {
        return Err(Error::InvalidParams {
            field: "t_end",
            reason: "integration window must be >= 0".into(),
        });
    }
    let (c_src0, c_dec0) = init.casimirs();
    let steps = (t_end / dt).round().max(0.0) as usize;
    let mut states = Vec::with_capacity(steps + 1);
    let mut state = *init;
    states.push(state);
    let mut drift: f64 = 0.0;

    for step in 0..steps {
        let k1 = meanfield_rhs(&state, omega_tilde, kappa, dphi);
        let k2 = meanfield_rhs(&add_scaled(&state, &k1, dt / 2.0), omega_tilde, kappa, dphi);
        let k3 = meanfield_rhs(&add_scaled(&state, &k2, dt / 2.0), omega_tilde, kappa, dphi);
        let k4 = meanfield_rhs(&add_scaled(&state, &k3, dt), omega_tilde, kappa, dphi);
        let mut combined = [0.0; 6];
        for i in 0..6 {
            combined[i] = (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0;
        }
        state = add_scaled(&state, &combined, dt);
        state.time = (step + 1) as f64 * dt;

        let (c_src, c_dec) = state.casimirs();
        drift = drift.max((c_src - c_src0).abs()).max((c_dec - c_dec0).abs());
        if drift > CASIMIR_TOL {
            return Err(Error::CasimirDrift {
                drift,
                tolerance: CASIMIR_TOL,
                dt,
            });
        }
        states.push(state);
    }

    Ok(MeanFieldTrajectory {
        states,
        casimir_drift: drift,
    })
}

/// Stationary mean-field amplitudes in the thermodynamic limit:
/// `m_+^S = i omega_tilde / kappa` and
/// `m_+^D = i (omega_tilde / kappa) (1 - 2 e^{i dphi})`.
pub fn meanfield_stationary(omega_tilde: f64, kappa: f64, dphi: f64) -> (C64, C64) {
    let x = omega_tilde / kappa;
    let m_source = C64::new(0.0, x);
    let m_decoder = C64::new(0.0, x) * (1.0 - 2.0 * C64::from_polar(1.0, dphi));
    (m_source, m_decoder)
}

/// Operational persistence criterion: the peak-to-peak amplitude of the
/// series over the last quarter of the window must be at least half of the
/// amplitude over the second quarter, and non-negligible in absolute terms.
/// Requires a window of at least 50 rescaled time units.
pub fn persistent_oscillation(times: &[f64], values: &[f64]) -> Result<bool> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::InvalidParams {
            field: "times",
            reason: "need matching, sufficiently sampled series".into(),
        });
    }
    let span = times[times.len() - 1] - times[0];
    if span < 50.0 {
        return Err(Error::InvalidParams {
            field: "times",
            reason: format!("window {span:.1} shorter than 50 rescaled units"),
        });
    }
    let peak_to_peak = |lo: f64, hi: f64| -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (t, v) in times.iter().zip(values.iter()) {
            let frac = (t - times[0]) / span;
            if frac >= lo && frac < hi {
                min = min.min(*v);
                max = max.max(*v);
            }
        }
        if min.is_finite() {
            max - min
        } else {
            0.0
        }
    };
    let second_quarter = peak_to_peak(0.25, 0.50);
    let last_quarter = peak_to_peak(0.75, 1.0);
    Ok(last_quarter >= 0.5 * second_quarter && last_quarter > 1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn south_pole_is_fixed_point_of_pure_decay() {
        let state = MeanFieldState::new([0.0, 0.0, -1.0], [0.0, 0.0, -1.0]);
        let rhs = meanfield_rhs(&state, 0.0, 1.0, 0.0);
        for v in rhs {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn stationary_source_values_zero_the_source_flow() {
        // m_x = 0, m_y = omega_tilde/kappa kills the source block for any m_z.
        let omega_tilde = 0.4;
        for mz in [-0.9, -0.3, 0.6] {
            let state = MeanFieldState::new([0.0, omega_tilde, mz], [0.1, 0.2, -0.5]);
            let rhs = meanfield_rhs(&state, omega_tilde, 1.0, 0.7);
            for v in &rhs[..3] {
                assert!(v.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn mirrored_decoder_flow_at_zero_dphi() {
        // Substituting m^D = (-m_x^S, -m_y^S, m_z^S) at dphi = 0 sends the
        // decoder flow to (+dx_S, +dy_S, -dz_S): the mirror configuration
        // traces the source flow with the z-component reversed.
        let samples = [
            [0.3, -0.5, 0.81],
            [0.0, 0.4, -0.92],
            [-0.6, 0.1, 0.79],
        ];
        for m in samples {
            let mirrored = [-m[0], -m[1], m[2]];
            let state = MeanFieldState::new(m, mirrored);
            let rhs = meanfield_rhs(&state, 0.35, 1.0, 0.0);
            assert!((rhs[3] - rhs[0]).abs() < 1e-14);
            assert!((rhs[4] - rhs[1]).abs() < 1e-14);
            assert!((rhs[5] + rhs[2]).abs() < 1e-14);
        }
    }

    #[test]
    fn stationary_amplitudes() {
        let (ms, md) = meanfield_stationary(0.3, 1.0, 0.0);
        assert!((ms - C64::new(0.0, 0.3)).norm() < 1e-15);
        assert!((md - C64::new(0.0, -0.3)).norm() < 1e-15);
        let (_, md) = meanfield_stationary(0.3, 1.0, PI);
        assert!((md - C64::new(0.0, 0.9)).norm() < 1e-15);
    }

    #[test]
    fn source_block_is_autonomous() {
        // Permuting the decoder initial condition must leave the source
        // trajectory bit-identical.
        let a = MeanFieldState::new([1e-3, 0.0, (1.0_f64 - 1e-6).sqrt()], [0.2, -0.3, 0.93]);
        let b = MeanFieldState::new([1e-3, 0.0, (1.0_f64 - 1e-6).sqrt()], [-0.5, 0.1, -0.86]);
        let ta = integrate_meanfield(&a, 0.5, 1.0, 1.0, 20.0, 1e-3).unwrap();
        let tb = integrate_meanfield(&b, 0.5, 1.0, 1.0, 20.0, 1e-3).unwrap();
        for (sa, sb) in ta.states.iter().zip(tb.states.iter()) {
            assert_eq!(sa.m_source, sb.m_source);
        }
    }

    #[test]
    fn casimir_conservation_along_trajectory() {
        let traj = integrate_meanfield(&default_initial_state(), 0.5, 1.0, PI, 100.0, 1e-3)
            .unwrap();
        assert!(traj.casimir_drift < 1e-8);
    }

    #[test]
    fn persistence_classifier_on_synthetic_series() {
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.05).collect();
        let steady: Vec<f64> = times.iter().map(|t| 3.0 * (-0.1 * t).exp()).collect();
        let oscillating: Vec<f64> = times.iter().map(|t| (2.0 * t).sin()).collect();
        assert!(!persistent_oscillation(&times, &steady).unwrap());
        assert!(persistent_oscillation(&times, &oscillating).unwrap());
        // Window too short is an error, not a silent answer.
        assert!(persistent_oscillation(&times[..100], &oscillating[..100]).is_err());
    }
}
