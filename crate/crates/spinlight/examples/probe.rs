use num_complex::Complex64 as C64;
use spinlight::analytics;
use spinlight::liouvillian::*;
use spinlight::metrology::{self, MetrologyOptions};
use spinlight::params::ModelParams;
use spinlight::spectral::*;
use std::time::Instant;

fn main() {
    // Matrix-free tilted solve at N=7 (d^2 = 4096) and N=11 (d^2 = 20736)
    for n in [7usize, 11] {
        let params = ModelParams::from_omega_ratio(n, 4.0, 1.0).unwrap().with_dphi(0.005).unwrap();
        let casc = build_cascaded(&params).unwrap();
        let cm = cascaded_model(&params).unwrap();
        let tilted = tilt_counting(&casc, &cm.jump, -0.001, 1.0);
        println!("N={n}: dim {} superdim {} bound {:.1}", tilted.dim(), tilted.superdim(), tilted.norm_bound());
        let t = Instant::now();
        let res = dominant_eigenvalue(&tilted, None).unwrap();
        println!("  lambda = {:.6e}  residual {:.2e}  iters {}  time {:?}",
            res.eigenvalue, res.residual, res.iterations, t.elapsed());
        // HP reference (stationary-regime formula, wrong regime here, just scale):
        let hp = analytics::hp_theta_counting(-0.001, params.omega, 1.0, 0.005);
        println!("  hp-scale reference {:.4e}", hp);
    }

    // Full absorber_error at N=7 with parallel stencil
    let t = Instant::now();
    let params = ModelParams::from_omega_ratio(7, 4.0, 1.0).unwrap().with_dphi(0.005).unwrap();
    let err = metrology::absorber_error(&params, &MetrologyOptions::default()).unwrap();
    println!("absorber_error N=7: {:.6} (sigma {:.4}, dsig {:.4}) flags {:?} time {:?}",
        err.value, err.numerator, err.denominator, err.flags, t.elapsed());
}
