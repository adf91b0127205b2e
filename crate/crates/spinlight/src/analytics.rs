//! Closed-form companions to the numerics: Holstein-Primakoff fluctuation
//! theory for the stationary regime and first-order superspin perturbation
//! theory for the strong-driving regime.
//!
//! These are fast standalone evaluators and, throughout the test suite, the
//! independent oracles the spectral solvers are benchmarked against.

use num_complex::Complex64 as C64;

/// Stationary-regime QFI rate of the emission field, `4 omega^2 / kappa`.
pub fn hp_qfi_rate(omega: f64, kappa: f64) -> f64 {
    4.0 * omega * omega / kappa
}

/// Strong-driving limit of the QFI rate,
/// `kappa N (N+2) [ (N-1)(N+3)/135 + 2/3 ]`, exact as `omega/omega_c -> inf`.
pub fn superspin_qfi_rate(n: usize, kappa: f64) -> f64 {
    let nf = n as f64;
    kappa * nf * (nf + 2.0) * ((nf - 1.0) * (nf + 3.0) / 135.0 + 2.0 / 3.0)
}

/// One approximate generator eigenvalue labelled by superspin quantum numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperspinMode {
    pub j: usize,
    pub jx: i64,
    pub lambda: C64,
}

/// First-order perturbative spectrum of the vectorized generator,
/// `lambda_{j,jx} = i omega jx - (kappa/4) (jx^2 + j(j+1))` over the full
/// `(N+1)^2` table `j = 0..N`, `jx = -j..j`.
#[derive(Debug, Clone)]
pub struct SuperspinSpectrum {
    pub n: usize,
    pub entries: Vec<SuperspinMode>,
}

pub fn superspin_spectrum(n: usize, omega: f64, kappa: f64) -> SuperspinSpectrum {
    let mut entries = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for jx in -(j as i64)..=(j as i64) {
            let lambda = C64::new(
                -kappa / 4.0 * ((jx * jx) as f64 + (j * (j + 1)) as f64),
                omega * jx as f64,
            );
            entries.push(SuperspinMode { j, jx, lambda });
        }
    }
    SuperspinSpectrum { n, entries }
}

/// Disconnected plateau of the strong-driving correlation function,
/// `N^2 (N+2)^2 / 36` (the square of the maximally-mixed intensity).
pub fn superspin_plateau(n: usize) -> f64 {
    let nf = n as f64;
    nf * nf * (nf + 2.0) * (nf + 2.0) / 36.0
}

/// Stationary intensity expectation in the maximally mixed state,
/// `<S_+ S_->_ss = N(N+2)/6`.
pub fn superspin_intensity(n: usize) -> f64 {
    let nf = n as f64;
    nf * (nf + 2.0) / 6.0
}

/// Strong-driving closed form of the intensity correlation,
///
/// ```text
/// C(tau) = N^2(N+2)^2/36
///        - N(N+2)/12 e^{-3 kappa tau/4} cos(omega tau)
///        + (N-1)N(N+2)(N+3)/240 (e^{-5 kappa tau/2} cos(2 omega tau)
///                                + e^{-3 kappa tau/2}/3)
/// ```
pub fn superspin_correlation(n: usize, omega: f64, kappa: f64, tau: f64) -> f64 {
    let nf = n as f64;
    let p1 = nf * (nf + 2.0) / 12.0;
    let p2 = (nf - 1.0) * nf * (nf + 2.0) * (nf + 3.0) / 240.0;
    superspin_plateau(n) - p1 * (-0.75 * kappa * tau).exp() * (omega * tau).cos()
        + p2 * ((-2.5 * kappa * tau).exp() * (2.0 * omega * tau).cos()
            + (-1.5 * kappa * tau).exp() / 3.0)
}

/// Connected part of [`superspin_correlation`] (plateau removed).
pub fn superspin_correlation_connected(n: usize, omega: f64, kappa: f64, tau: f64) -> f64 {
    superspin_correlation(n, omega, kappa, tau) - superspin_plateau(n)
}

/// Closed-form time integral of the connected correlation; each damped cosine
/// integrates to the real part of a Lorentzian, `a / (a^2 + b^2)`.
pub fn superspin_connected_integral(n: usize, omega: f64, kappa: f64) -> f64 {
    let nf = n as f64;
    let p1 = nf * (nf + 2.0) / 12.0;
    let p2 = (nf - 1.0) * nf * (nf + 2.0) * (nf + 3.0) / 240.0;
    let lor = |a: f64, b: f64| a / (a * a + b * b);
    -p1 * lor(0.75 * kappa, omega)
        + p2 * (lor(2.5 * kappa, 2.0 * omega) + 1.0 / 3.0 * (1.0 / (1.5 * kappa)))
}

/// QFI rate predicted by the superspin correlation at finite drive,
/// `8 kappa^2 Int[C_c] + 4 kappa <L^dag L>_ss`. Converges to
/// [`superspin_qfi_rate`] as `omega -> inf`.
pub fn superspin_qfi_integral(n: usize, omega: f64, kappa: f64) -> f64 {
    8.0 * kappa * kappa * superspin_connected_integral(n, omega, kappa)
        + 4.0 * kappa * superspin_intensity(n)
}

/// Holstein-Primakoff solution for one bosonized ensemble: the displacement
/// `beta` and the fluctuation coefficients of `m_{-,1} = a b + b b^dag`,
/// where `a = (4 - 3|beta|^2) / (2 sqrt(k))`, `b = -beta^2 / (2 sqrt(k))`
/// and `k = 2 - |beta|^2`. For the decoder of a cascaded pair `b` is
/// genuinely complex; for a single ensemble it is real and non-negative.
#[derive(Debug, Clone, Copy)]
pub struct HpSolution {
    pub beta: C64,
    pub a: f64,
    pub b: C64,
    /// Inside the stationary regime of this (sub)system.
    pub valid: bool,
}

impl HpSolution {
    /// |b/a|; at most one inside the validity regime.
    pub fn ratio(&self) -> f64 {
        self.b.norm() / self.a
    }

    /// Leading mean-field amplitude `m_{+,0} = conj(beta) sqrt(2 - |beta|^2)`.
    pub fn m_plus0(&self) -> C64 {
        self.beta.conj() * (2.0 - self.beta.norm_sqr()).sqrt()
    }

    /// Fock amplitudes of the fluctuation vacuum: only even states are
    /// populated, `c_{2n} ~ (-b/a)^n sqrt((2n-1)!!/(2n)!!)`, normalized,
    /// truncated once the (geometrically bounded) tail mass drops below
    /// `tail_tol`. Index in the returned vector is the Fock occupation.
    pub fn fock_coefficients(&self, tail_tol: f64) -> Vec<C64> {
        let ratio = -self.b / self.a;
        let r2 = ratio.norm_sqr();
        let mut even = vec![C64::new(1.0, 0.0)];
        let mut mass = 1.0;
        if r2 > 0.0 && r2 < 1.0 {
            let mut c = C64::new(1.0, 0.0);
            for m in 0..20_000 {
                let nf = m as f64;
                c *= ratio * ((2.0 * nf + 1.0) / (2.0 * nf + 2.0)).sqrt();
                even.push(c);
                mass += c.norm_sqr();
                let tail_bound = c.norm_sqr() * r2 / (1.0 - r2);
                if tail_bound < tail_tol * mass {
                    break;
                }
            }
        }
        let norm = mass.sqrt();
        let mut out = vec![C64::default(); 2 * even.len() - 1];
        for (m, c) in even.into_iter().enumerate() {
            out[2 * m] = c / norm;
        }
        out
    }
}

fn hp_from_drive(drive: f64, beta: C64) -> HpSolution {
    let valid = drive <= 1.0;
    if !valid {
        return HpSolution {
            beta: C64::new(f64::NAN, f64::NAN),
            a: f64::NAN,
            b: C64::new(f64::NAN, f64::NAN),
            valid,
        };
    }
    let root = (1.0 - drive * drive).sqrt();
    let k = 1.0 + root;
    let a = (1.0 + 3.0 * root) / (2.0 * k.sqrt());
    let b = -beta * beta / (2.0 * k.sqrt());
    HpSolution { beta, a, b, valid }
}

/// Holstein-Primakoff solution of the single ensemble at rescaled drive
/// `x = omega_tilde / kappa = omega / omega_c`. Valid for `x <= 1`;
/// outside the regime the fields are NaN and `valid` is false.
pub fn hp_single(omega_tilde_over_kappa: f64) -> HpSolution {
    let x = omega_tilde_over_kappa;
    if x > 1.0 {
        return hp_from_drive(x, C64::default());
    }
    let beta = C64::new(0.0, -(1.0 - (1.0 - x * x).sqrt()).sqrt());
    hp_from_drive(x, beta)
}

/// Holstein-Primakoff solution of the cascaded source-decoder pair. The
/// source solution is that of a single ensemble; the decoder sees the
/// effective drive `x sqrt(5 - 4 cos(dphi))` and carries the complex
/// displacement `beta_D = -i x (1 - 2 e^{-i dphi}) / sqrt(1 + sqrt(1 - y^2))`.
pub fn hp_cascaded(omega_tilde_over_kappa: f64, dphi: f64) -> (HpSolution, HpSolution) {
    let x = omega_tilde_over_kappa;
    let source = hp_single(x);

    let y = x * (5.0 - 4.0 * dphi.cos()).sqrt();
    let decoder = if y > 1.0 {
        hp_from_drive(y, C64::default())
    } else {
        let denom = (1.0 + (1.0 - y * y).sqrt()).sqrt();
        let beta = C64::new(0.0, -x) * (1.0 - 2.0 * C64::from_polar(1.0, -dphi)) / denom;
        hp_from_drive(y, beta)
    };
    (source, decoder)
}

/// Decoder critical drive: the cascaded stationary regime ends at
/// `omega_c_casc = omega_c / sqrt(5 - 4 cos(dphi))`, with `omega_c = N kappa / 2`.
pub fn cascaded_critical_frequency(n: usize, kappa: f64, dphi: f64) -> f64 {
    (n as f64) * kappa / 2.0 / (5.0 - 4.0 * dphi.cos()).sqrt()
}

/// A closed-form prediction that may sit on a removable or genuine
/// singularity of its formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HpPrediction {
    /// Plain value.
    Value(f64),
    /// The formula is 0/0 at this point; the analytic limit is returned.
    Limit(f64),
    /// The denominator vanishes with a nonzero numerator.
    Divergent,
}

impl HpPrediction {
    pub fn value(&self) -> Option<f64> {
        match self {
            HpPrediction::Value(v) | HpPrediction::Limit(v) => Some(*v),
            HpPrediction::Divergent => None,
        }
    }
}

/// Stationary-regime homodyne estimation error,
/// `sqrt(kappa) / (2 omega |cos(phase_offset)|)`; divergent where the probed
/// quadrature carries no signal.
pub fn hp_error_homodyne(omega: f64, kappa: f64, phase_offset: f64) -> HpPrediction {
    let c = phase_offset.cos().abs();
    if omega <= 0.0 || c < 1e-12 {
        return HpPrediction::Divergent;
    }
    HpPrediction::Value(kappa.sqrt() / (2.0 * omega * c))
}

/// Stationary-regime absorber estimation error,
/// `sqrt(kappa (1 - cos(dphi)) / (2 omega^2 sin^2(dphi)))`; the `dphi -> 0`
/// limit `sqrt(kappa)/(2 omega)` saturates the QFI bound.
pub fn hp_error_absorber(omega: f64, kappa: f64, dphi: f64) -> HpPrediction {
    if omega <= 0.0 {
        return HpPrediction::Divergent;
    }
    if dphi.abs() < 1e-12 {
        return HpPrediction::Limit(kappa.sqrt() / (2.0 * omega));
    }
    let s = dphi.sin();
    if s.abs() < 1e-12 {
        return HpPrediction::Divergent;
    }
    HpPrediction::Value((kappa * (1.0 - dphi.cos()) / (2.0 * omega * omega * s * s)).sqrt())
}

/// Leading-order dominant eigenvalue of the QFI-deformed generator,
/// `lambda_0(dphi) = (e^{-i dphi} - 1) omega^2 / kappa`.
pub fn hp_lambda_qfi(dphi: f64, omega: f64, kappa: f64) -> C64 {
    (C64::from_polar(1.0, -dphi) - 1.0) * omega * omega / kappa
}

/// Leading-order counting large-deviation function of the cascaded system,
/// `theta_c(s, dphi) = 2 (e^{-s} - 1) (omega^2 / kappa) (1 - cos(dphi))`.
pub fn hp_theta_counting(s: f64, omega: f64, kappa: f64, dphi: f64) -> f64 {
    2.0 * ((-s).exp() - 1.0) * omega * omega / kappa * (1.0 - dphi.cos())
}

/// Leading-order homodyne large-deviation function in the sign convention of
/// the deformed generator built by this crate,
/// `theta_h(s, chi) = 2 s omega sin(chi) / sqrt(kappa) + s^2 / 2`
/// with `chi = phi - beta`.
pub fn hp_theta_homodyne(s: f64, omega: f64, kappa: f64, phase_offset: f64) -> f64 {
    2.0 * s * omega * phase_offset.sin() / kappa.sqrt() + s * s / 2.0
}
