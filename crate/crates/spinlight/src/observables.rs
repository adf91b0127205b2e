//! Stationary-state diagnostics of the cascaded system: output intensity,
//! purity, reduced von Neumann entropies and the three-regime phase diagram.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::analytics::cascaded_critical_frequency;
use crate::linalg::dagger;
use crate::liouvillian::{build_cascaded, cascaded_model};
use crate::params::ModelParams;
use crate::spectral::{steady_state_opts, DensityMatrix, SpectralOptions};
use crate::{Error, Result};

/// Which half of the source-decoder product space to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    Source,
    Decoder,
}

/// Dynamical regime of the cascaded pair at a phase-diagram point.
///
/// Boundaries are the analytic mean-field lines, not numerically detected
/// transitions: finite-N steady states are smooth crossovers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// I: both subsystems stationary (omega < omega_c_casc).
    Stationary,
    /// II: decoder in the time-crystal regime (omega_c_casc <= omega < omega_c).
    DecoderTimeCrystal,
    /// III: both subsystems in the time-crystal regime (omega >= omega_c).
    BothTimeCrystal,
}

/// Classify a parameter point by the analytic boundaries.
pub fn classify_regime(n: usize, kappa: f64, omega: f64, dphi: f64) -> Regime {
    let omega_c = n as f64 * kappa / 2.0;
    let omega_casc = cascaded_critical_frequency(n, kappa, dphi);
    if omega < omega_casc {
        Regime::Stationary
    } else if omega < omega_c {
        Regime::DecoderTimeCrystal
    } else {
        Regime::BothTimeCrystal
    }
}

/// Stationary output intensity `kappa <L_casc^dag L_casc>_ss` of the cascaded
/// system (units of kappa).
pub fn stationary_intensity(params: &ModelParams) -> Result<f64> {
    let gen = build_cascaded(params)?;
    let rho = crate::spectral::steady_state(&gen)?;
    let model = cascaded_model(params)?;
    intensity_of(&model.jump, &rho, params.kappa)
}

fn intensity_of(jump: &Array2<C64>, rho: &DensityMatrix, kappa: f64) -> Result<f64> {
    let ldl = dagger(jump).dot(jump);
    let value = kappa * rho.expectation(&ldl).re;
    // <L^dag L> is an expectation of a positive operator; tiny negative
    // values are numerical noise.
    Ok(value.max(0.0))
}

/// Tr(rho^2).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Partial trace of a bipartite state with local dimensions `dims`.
pub fn partial_trace(
    rho_joint: &Array2<C64>,
    dims: (usize, usize),
    keep: Subsystem,
) -> Result<Array2<C64>> {
    let (da, db) = dims;
    if rho_joint.nrows() != da * db || rho_joint.ncols() != da * db {
        return Err(Error::InvalidParams {
            field: "dims",
            reason: format!(
                "joint dimension {} does not factor as {} x {}",
                rho_joint.nrows(),
                da,
                db
            ),
        });
    }
    let mut out = match keep {
        Subsystem::Source => Array2::<C64>::zeros((da, da)),
        Subsystem::Decoder => Array2::<C64>::zeros((db, db)),
    };
    match keep {
        Subsystem::Source => {
            for a in 0..da {
                for a2 in 0..da {
                    let mut acc = C64::default();
                    for b in 0..db {
                        acc += rho_joint[[a * db + b, a2 * db + b]];
                    }
                    out[[a, a2]] = acc;
                }
            }
        }
        Subsystem::Decoder => {
            for b in 0..db {
                for b2 in 0..db {
                    let mut acc = C64::default();
                    for a in 0..da {
                        acc += rho_joint[[a * db + b, a * db + b2]];
                    }
                    out[[b, b2]] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// Von Neumann entropy of a reduced state, `-sum lambda ln lambda`, with
/// eigenvalues clipped at 1e-14 to absorb numerically negative populations.
pub fn reduced_entropy(
    rho_joint: &DensityMatrix,
    subsystem: Subsystem,
    dims: (usize, usize),
) -> Result<f64> {
    let reduced = partial_trace(rho_joint.data(), dims, subsystem)?;
    let herm = crate::linalg::hermitize(&reduced);
    let (eigs, _) = herm.eigh(UPLO::Lower)?;
    let mut entropy = 0.0;
    for lambda in eigs.iter() {
        if *lambda > 1e-14 {
            entropy -= lambda * lambda.ln();
        }
    }
    Ok(entropy)
}

/// Diagnostics of one phase-diagram cell. Solver failures are recorded in
/// the cell rather than aborting the sweep.
#[derive(Debug, Clone)]
pub struct PhaseDiagramCell {
    pub omega_over_omega_c: f64,
    pub dphi: f64,
    pub intensity: f64,
    pub purity: f64,
    pub entropy_source: f64,
    pub entropy_decoder: f64,
    pub regime: Regime,
    pub failure: Option<String>,
}

/// Sweep the stationary diagnostics of the cascaded system over a grid of
/// drive ratios and phase differences. Cells are independent parallel tasks;
/// the output ordering is deterministic (omega-major, then dphi).
pub fn phase_diagram(
    n: usize,
    kappa: f64,
    omega_ratios: &[f64],
    dphi_grid: &[f64],
) -> Result<Vec<PhaseDiagramCell>> {
    if omega_ratios.is_empty() || dphi_grid.is_empty() {
        return Err(Error::InvalidParams {
            field: "grid",
            reason: "phase-diagram grids must be non-empty".into(),
        });
    }
    let points: Vec<(f64, f64)> = omega_ratios
        .iter()
        .flat_map(|&w| dphi_grid.iter().map(move |&p| (w, p)))
        .collect();

    let cells: Vec<PhaseDiagramCell> = points
        .par_iter()
        .map(|&(ratio, dphi)| phase_diagram_cell(n, kappa, ratio, dphi))
        .collect();
    Ok(cells)
}

fn phase_diagram_cell(n: usize, kappa: f64, ratio: f64, dphi: f64) -> PhaseDiagramCell {
    let dim = n + 1;
    let regime = classify_regime(n, kappa, ratio * n as f64 * kappa / 2.0, dphi);
    let mut cell = PhaseDiagramCell {
        omega_over_omega_c: ratio,
        dphi,
        intensity: f64::NAN,
        purity: f64::NAN,
        entropy_source: f64::NAN,
        entropy_decoder: f64::NAN,
        regime,
        failure: None,
    };
    let run = || -> Result<(f64, f64, f64, f64)> {
        let params = ModelParams::from_omega_ratio(n, ratio, kappa)?.with_dphi(dphi)?;
        let gen = build_cascaded(&params)?;
        let rho = steady_state_opts(&gen, &SpectralOptions::default())?;
        let model = cascaded_model(&params)?;
        let intensity = intensity_of(&model.jump, &rho, kappa)?;
        let pur = rho.purity();
        let s_src = reduced_entropy(&rho, Subsystem::Source, (dim, dim))?;
        let s_dec = reduced_entropy(&rho, Subsystem::Decoder, (dim, dim))?;
        Ok((intensity, pur, s_src, s_dec))
    };
    match run() {
        Ok((intensity, pur, s_src, s_dec)) => {
            cell.intensity = intensity;
            cell.purity = pur;
            cell.entropy_source = s_src;
            cell.entropy_decoder = s_dec;
        }
        Err(e) => cell.failure = Some(e.to_string()),
    }
    cell
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;
    use ndarray::Array1;

    #[test]
    fn purity_endpoints() {
        let pure = DensityMatrix::basis_state(4, 2);
        assert!((purity(&pure) - 1.0).abs() < 1e-14);
        let mixed = DensityMatrix::maximally_mixed(36);
        assert!((purity(&mixed) - 1.0 / 36.0).abs() < 1e-14);
    }

    #[test]
    fn partial_trace_preserves_trace_and_factors_products() {
        // |psi> = |0>_S (x) (|0>+|1>)_D / sqrt(2)
        let mut psi = Array1::<C64>::zeros(6);
        psi[0] = cr(1.0 / 2.0_f64.sqrt());
        psi[1] = cr(1.0 / 2.0_f64.sqrt());
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let src = partial_trace(rho.data(), (2, 3), Subsystem::Source).unwrap();
        let dec = partial_trace(rho.data(), (2, 3), Subsystem::Decoder).unwrap();
        assert!((crate::linalg::trace(&src) - cr(1.0)).norm() < 1e-12);
        assert!((crate::linalg::trace(&dec) - cr(1.0)).norm() < 1e-12);
        assert!((src[[0, 0]] - cr(1.0)).norm() < 1e-12);
        assert!((dec[[0, 1]] - cr(0.5)).norm() < 1e-12);
    }

    #[test]
    fn product_pure_state_has_zero_entropy() {
        let mut psi = Array1::<C64>::zeros(9);
        psi[0] = cr(1.0);
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let s_src = reduced_entropy(&rho, Subsystem::Source, (3, 3)).unwrap();
        let s_dec = reduced_entropy(&rho, Subsystem::Decoder, (3, 3)).unwrap();
        assert!(s_src.abs() < 1e-12);
        assert!(s_dec.abs() < 1e-12);
    }

    #[test]
    fn entangled_pure_state_has_symmetric_entropies() {
        // Schmidt symmetry: for a pure joint state both reductions share the
        // spectrum.
        let mut psi = Array1::<C64>::zeros(4);
        psi[0] = cr(0.6_f64.sqrt());
        psi[3] = cr(0.4_f64.sqrt());
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let s_src = reduced_entropy(&rho, Subsystem::Source, (2, 2)).unwrap();
        let s_dec = reduced_entropy(&rho, Subsystem::Decoder, (2, 2)).unwrap();
        let expected = -(0.6 * 0.6_f64.ln() + 0.4 * 0.4_f64.ln());
        assert!((s_src - s_dec).abs() < 1e-10);
        assert!((s_src - expected).abs() < 1e-10);
    }

    #[test]
    fn regime_boundaries_follow_analytic_lines() {
        // At dphi = pi the cascaded line sits at omega_c / 3.
        assert_eq!(
            classify_regime(6, 1.0, 0.9, std::f64::consts::PI),
            Regime::Stationary
        );
        assert_eq!(
            classify_regime(6, 1.0, 1.1, std::f64::consts::PI),
            Regime::DecoderTimeCrystal
        );
        assert_eq!(
            classify_regime(6, 1.0, 3.0, std::f64::consts::PI),
            Regime::BothTimeCrystal
        );
        // At dphi = 0 the intermediate regime is empty.
        assert_eq!(classify_regime(6, 1.0, 2.9, 0.0), Regime::Stationary);
        assert_eq!(classify_regime(6, 1.0, 3.0, 0.0), Regime::BothTimeCrystal);
    }

    #[test]
    fn undriven_cascade_emits_nothing() {
        let params = ModelParams::new(2, 0.0, 1.0).unwrap();
        let intensity = stationary_intensity(&params).unwrap();
        assert!(intensity < 1e-10);
    }
}
