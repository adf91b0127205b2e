//! Spectral engine: steady states, dominant eigenvalues, propagation,
//! two-time correlation functions and finite-difference derivative
//! extraction.
//!
//! Two solver regimes share one interface. Generators whose vectorized
//! dimension `d^2` stays at or below [`SpectralOptions::dense_limit`] are
//! assembled as dense supermatrices and handled by LAPACK (full
//! eigendecomposition for dominant eigenvalues, LU-based inverse iteration
//! for steady states). Larger generators are never assembled: dominant
//! eigenvalues come from Arnoldi iteration on the time propagator
//! `exp(L dt)` — whose eigenvalue moduli order the spectrum by real part,
//! exactly the quantity of interest — followed by a Rayleigh-Ritz polish on
//! the exact generator; steady states come from long-time propagation.
//!
//! The propagator is applied with a classical fixed-step fourth-order
//! integrator, stepped well inside its stability region. Since the
//! integrator map is a rational function of the generator, both share
//! eigenvectors exactly; accuracy of the reported eigenvalue rests on the
//! polish stage, not on the integrator.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, Factorize, Solve, UPLO};
use num_complex::Complex64 as C64;

use crate::linalg::{
    cr, expectation, fro_norm, hermitize, identity, inner, trace, unvectorize, vec_norm,
    vectorize,
};
use crate::liouvillian::Superoperator;
use crate::{Error, Result};

/// Tuning knobs of the spectral solvers. The defaults reproduce every
/// documented tolerance; tests and sweeps override single fields.
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    /// Residual target `|L v - lambda v| / |v|`.
    pub tol: f64,
    /// Largest vectorized dimension d^2 for which dense supermatrices are
    /// assembled and factored.
    pub dense_limit: usize,
    /// Iteration cap for inverse iteration / steady-state propagation blocks.
    pub max_iterations: usize,
    /// Krylov subspace dimension for the propagator Arnoldi stage.
    pub krylov_dim: usize,
    /// Coarse time step (units of 1/kappa) the propagator advances per
    /// Arnoldi application.
    pub propagator_dt: f64,
    /// Restart cap for the Arnoldi stage.
    pub max_restarts: usize,
    /// Two top eigenvalues closer than this in real part count as degenerate.
    pub degeneracy_gap: f64,
    /// Warm start vector for the matrix-free path.
    pub start_vector: Option<Array1<C64>>,
    /// Total propagation time cap for matrix-free steady states.
    pub max_time: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            dense_limit: 2500,
            max_iterations: 200,
            krylov_dim: 30,
            propagator_dt: 0.4,
            max_restarts: 60,
            degeneracy_gap: 1e-9,
            start_vector: None,
            max_time: 20_000.0,
        }
    }
}

/// A d x d complex density matrix with validated physicality.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    data: Array2<C64>,
}

impl DensityMatrix {
    /// Validate Hermiticity (1e-10), unit trace (1e-10) and positivity
    /// (smallest eigenvalue >= -1e-8) of `data`.
    pub fn new(data: Array2<C64>) -> Result<Self> {
        let herm_dev = crate::linalg::max_abs_diff(&data, &hermitize(&data));
        if herm_dev > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("not Hermitian: deviation {herm_dev:.3e}"),
            });
        }
        let tr = trace(&data);
        if (tr - cr(1.0)).norm() > 1e-10 {
            return Err(Error::InvalidState {
                reason: format!("trace {} differs from 1", tr),
            });
        }
        let herm = hermitize(&data);
        let (eigs, _) = herm.eigh(UPLO::Lower)?;
        let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::InvalidState {
                reason: format!("negative eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(Self { data: herm })
    }

    /// Pure state |psi><psi| from an (unnormalized) state vector.
    pub fn from_pure(psi: &Array1<C64>) -> Result<Self> {
        let norm = vec_norm(&psi.view());
        if norm == 0.0 {
            return Err(Error::InvalidState {
                reason: "zero state vector".into(),
            });
        }
        let d = psi.len();
        let data = Array2::from_shape_fn((d, d), |(i, j)| {
            psi[i] * psi[j].conj() / cr(norm * norm)
        });
        Ok(Self { data })
    }

    /// Basis state |k><k|.
    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut data = Array2::zeros((dim, dim));
        data[[k, k]] = cr(1.0);
        Self { data }
    }

    /// Maximally mixed state 1/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            data: identity(dim).mapv(|z| z / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Expectation value Tr[op rho].
    pub fn expectation(&self, op: &Array2<C64>) -> C64 {
        expectation(&op.view(), &self.data.view())
    }
}

/// Outcome of a dominant-eigenvalue solve.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub eigenvalue: C64,
    pub right_vector: Array1<C64>,
    /// `|L v - lambda v| / |v|`.
    pub residual: f64,
    pub iterations: usize,
    /// Runner-up eigenvalue when the top two real parts are closer than the
    /// degeneracy threshold; the caller decides how to proceed.
    pub degenerate_with: Option<C64>,
}

// ---------------------------------------------------------------------------
// Propagation
// ---------------------------------------------------------------------------

fn rk4_step(gen: &Superoperator, rho: &Array2<C64>, h: f64) -> Array2<C64> {
    let k1 = gen.apply(rho);
    let k2 = gen.apply(&(rho + &k1.mapv(|z| z * (h / 2.0))));
    let k3 = gen.apply(&(rho + &k2.mapv(|z| z * (h / 2.0))));
    let k4 = gen.apply(&(rho + &k3.mapv(|z| z * h)));
    rho + &(k1 + k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + k4).mapv(|z| z * (h / 6.0))
}

/// Advance an arbitrary matrix by `e^{L t}` with fixed fourth-order steps.
fn propagate_matrix(gen: &Superoperator, rho: &Array2<C64>, t: f64, dt: f64) -> Array2<C64> {
    if t == 0.0 {
        return rho.clone();
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut state = rho.clone();
    for _ in 0..steps {
        state = rk4_step(gen, &state, h);
    }
    state
}

/// Default step: half the stability limit of the fourth-order scheme.
fn default_step(gen: &Superoperator) -> f64 {
    2.0 / gen.norm_bound().max(1e-12)
}

/// Propagate a density matrix: `rho(t) = e^{L t}[rho0]`.
///
/// `dt` bounds the integrator step; when omitted, a stability-limited default
/// is used. Accuracy-critical callers (high-precision correlation tests)
/// should pass an explicit step. For trace-preserving generators the trace is
/// preserved exactly by the scheme; a drift beyond 1e-9 signals failure.
pub fn propagate(
    gen: &Superoperator,
    rho0: &DensityMatrix,
    t: f64,
    dt: Option<f64>,
) -> Result<DensityMatrix> {
    if t < 0.0 {
        return Err(Error::InvalidParams {
            field: "t",
            reason: "propagation time must be >= 0".into(),
        });
    }
    let step = dt.unwrap_or_else(|| default_step(gen)).min(default_step(gen));
    let out = propagate_matrix(gen, rho0.data(), t, step);
    if gen.is_trace_preserving() {
        let drift = (trace(&out) - cr(1.0)).norm();
        if drift > 1e-9 {
            return Err(Error::StepFailure {
                reason: format!("trace drifted by {drift:.3e} over t = {t}"),
            });
        }
    }
    let norm = fro_norm(&out);
    if !norm.is_finite() || norm > 1e6 {
        return Err(Error::StepFailure {
            reason: format!("state norm {norm:.3e} after t = {t}; step too large"),
        });
    }
    Ok(DensityMatrix { data: hermitize(&out) })
}

// ---------------------------------------------------------------------------
// Steady states
// ---------------------------------------------------------------------------

/// Fix the phase and trace of a candidate null vector and Hermitize it.
fn normalize_density(candidate: &Array2<C64>) -> Result<Array2<C64>> {
    let tr = trace(candidate);
    if tr.norm() < 1e-12 * fro_norm(candidate).max(1e-300) {
        return Err(Error::InvalidState {
            reason: "null vector has vanishing trace; not a state".into(),
        });
    }
    Ok(hermitize(&candidate.mapv(|z| z / tr)))
}

fn steady_state_dense(gen: &Superoperator, opts: &SpectralOptions) -> Result<DensityMatrix> {
    let d = gen.dim();
    let shift = 1e-7 * gen.norm_bound().max(1.0);
    let mut dense = gen.to_dense();
    for k in 0..d * d {
        dense[[k, k]] -= cr(shift);
    }
    let lu = dense.factorize()?;

    let solve_from = |start: Array1<C64>| -> Result<(Array2<C64>, f64, usize)> {
        let mut x = start;
        let mut residual = f64::INFINITY;
        for it in 0..opts.max_iterations {
            let mut y = lu.solve(&x)?;
            let norm = vec_norm(&y.view());
            if !norm.is_finite() || norm == 0.0 {
                return Err(Error::NonConvergence {
                    what: "steady-state inverse iteration",
                    residual,
                    iterations: it,
                });
            }
            y.mapv_inplace(|z| z / norm);
            residual = vec_norm(&gen.apply_vec(&y.view()).view());
            x = y;
            if residual < opts.tol {
                return Ok((unvectorize(&x.view(), d), residual, it + 1));
            }
        }
        Err(Error::NonConvergence {
            what: "steady-state inverse iteration",
            residual,
            iterations: opts.max_iterations,
        })
    };

    let start_mixed = vectorize(&identity(d).mapv(|z| z / d as f64));
    let (rho_a, _, _) = solve_from(start_mixed)?;
    let rho_a = normalize_density(&rho_a)?;

    // A second start probes for a degenerate null space, which must be
    // reported rather than silently resolved.
    let graded = Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            cr(1.0 + i as f64)
        } else {
            C64::default()
        }
    });
    let start_graded = vectorize(&graded.mapv(|z| z / trace(&graded)));
    let (rho_b, _, _) = solve_from(start_graded)?;
    let rho_b = normalize_density(&rho_b)?;
    let split = crate::linalg::max_abs_diff(&rho_a, &rho_b);
    if split > 1e-6 {
        return Err(Error::NonConvergence {
            what: "steady state (degenerate zero eigenvalue)",
            residual: split,
            iterations: 0,
        });
    }

    DensityMatrix::new(rho_a)
}

fn steady_state_matrix_free(gen: &Superoperator, opts: &SpectralOptions) -> Result<DensityMatrix> {
    let d = gen.dim();
    let dt = default_step(gen);
    let block = 5.0_f64;
    let mut rho = identity(d).mapv(|z| z / d as f64);
    let mut elapsed = 0.0;
    let mut residual = f64::INFINITY;
    while elapsed < opts.max_time {
        rho = propagate_matrix(gen, &rho, block, dt);
        rho = normalize_density(&rho)?;
        elapsed += block;
        residual = fro_norm(&gen.apply(&rho)) / fro_norm(&rho);
        if residual < opts.tol {
            return DensityMatrix::new(rho);
        }
    }
    Err(Error::NonConvergence {
        what: "steady-state propagation",
        residual,
        iterations: (opts.max_time / block) as usize,
    })
}

/// Stationary state of a trace-preserving generator.
pub fn steady_state(gen: &Superoperator) -> Result<DensityMatrix> {
    steady_state_opts(gen, &SpectralOptions::default())
}

/// [`steady_state`] with explicit solver options.
pub fn steady_state_opts(gen: &Superoperator, opts: &SpectralOptions) -> Result<DensityMatrix> {
    if !gen.is_trace_preserving() {
        return Err(Error::InvalidParams {
            field: "gen",
            reason: "steady states are defined for trace-preserving generators".into(),
        });
    }
    if gen.superdim() <= opts.dense_limit {
        steady_state_dense(gen, opts)
    } else {
        steady_state_matrix_free(gen, opts)
    }
}

// ---------------------------------------------------------------------------
// Dominant eigenvalues
// ---------------------------------------------------------------------------

fn residual_of(gen: &Superoperator, v: &Array1<C64>, lambda: C64) -> f64 {
    let lv = gen.apply_vec(&v.view());
    let n = vec_norm(&v.view());
    let diff = &lv - &v.mapv(|z| z * lambda);
    vec_norm(&diff.view()) / n
}

fn dominant_dense(
    gen: &Superoperator,
    hint: Option<C64>,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    let dense = gen.to_dense();
    let (eigvals, eigvecs) = dense.eig()?;

    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| {
        eigvals[b]
            .re
            .partial_cmp(&eigvals[a].re)
            .unwrap()
            .then(eigvals[b].im.abs().partial_cmp(&eigvals[a].im.abs()).unwrap())
            .then(eigvals[b].im.partial_cmp(&eigvals[a].im).unwrap())
    });

    let top_re = eigvals[order[0]].re;
    let near_top: Vec<usize> = order
        .iter()
        .cloned()
        .take_while(|&i| top_re - eigvals[i].re < opts.degeneracy_gap)
        .collect();

    // Tie-breaking: honor the hint when one is supplied, otherwise pick the
    // largest |Im| (positive branch for determinism) and report the runner-up.
    let chosen = if let (Some(h), true) = (hint, near_top.len() > 1) {
        *near_top
            .iter()
            .min_by(|&&a, &&b| {
                (eigvals[a] - h)
                    .norm()
                    .partial_cmp(&(eigvals[b] - h).norm())
                    .unwrap()
            })
            .unwrap()
    } else {
        near_top[0]
    };
    let degenerate_with = if near_top.len() > 1 {
        near_top
            .iter()
            .find(|&&i| i != chosen)
            .map(|&i| eigvals[i])
    } else {
        None
    };

    let v = eigvecs.column(chosen).to_owned();
    let lambda = eigvals[chosen];
    Ok(SpectralResult {
        eigenvalue: lambda,
        residual: residual_of(gen, &v, lambda),
        right_vector: v,
        iterations: 1,
        degenerate_with,
    })
}

/// Arnoldi factorization of `op` starting from `v0`; returns the orthonormal
/// basis and the (m+1) x m Hessenberg matrix (modified Gram-Schmidt with one
/// reorthogonalization pass).
fn arnoldi<F>(op: &F, v0: &Array1<C64>, m: usize) -> (Vec<Array1<C64>>, Array2<C64>)
where
    F: Fn(&Array1<C64>) -> Array1<C64>,
{
    let mut basis: Vec<Array1<C64>> = Vec::with_capacity(m + 1);
    let mut h = Array2::<C64>::zeros((m + 1, m));
    let norm = vec_norm(&v0.view());
    basis.push(v0.mapv(|z| z / norm));

    for j in 0..m {
        let mut w = op(&basis[j]);
        for (i, vi) in basis.iter().enumerate() {
            let coeff = inner(&vi.view(), &w.view());
            w = &w - &vi.mapv(|z| z * coeff);
            h[[i, j]] += coeff;
        }
        // One reorthogonalization pass holds the basis together for the
        // strongly non-normal generators handled here.
        for (i, vi) in basis.iter().enumerate() {
            let coeff = inner(&vi.view(), &w.view());
            w = &w - &vi.mapv(|z| z * coeff);
            h[[i, j]] += coeff;
        }
        let wnorm = vec_norm(&w.view());
        h[[j + 1, j]] = cr(wnorm);
        if wnorm < 1e-140 {
            // Invariant subspace found.
            break;
        }
        basis.push(w.mapv(|z| z / wnorm));
    }
    (basis, h)
}

/// Ritz pairs of the operator represented by the Hessenberg matrix.
fn ritz_pairs(
    basis: &[Array1<C64>],
    h: &Array2<C64>,
) -> Result<Vec<(C64, Array1<C64>, f64, f64)>> {
    let m = basis.len().min(h.ncols());
    let hm = h.slice(ndarray::s![..m, ..m]).to_owned();
    let (vals, vecs) = hm.eig()?;
    let h_last = if m < h.nrows() {
        h[[m, m - 1]].norm()
    } else {
        0.0
    };
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let y = vecs.column(k);
        let mut x = Array1::<C64>::zeros(basis[0].len());
        for (i, vi) in basis.iter().take(m).enumerate() {
            x = &x + &vi.mapv(|z| z * y[i]);
        }
        let nrm = vec_norm(&x.view());
        if nrm > 0.0 {
            x.mapv_inplace(|z| z / nrm);
        }
        // Residual estimate in the represented operator and overlap with the
        // start vector (first basis vector).
        let res_est = h_last * y[m - 1].norm();
        let overlap = y[0].norm();
        out.push((vals[k], x, res_est, overlap));
    }
    Ok(out)
}

fn dominant_matrix_free(
    gen: &Superoperator,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    let d = gen.dim();
    let bound = gen.norm_bound().max(1e-12);
    let dt_inner = 2.0 / bound;
    let n_inner = (opts.propagator_dt / dt_inner).ceil().max(1.0) as usize;

    let propagator = |v: &Array1<C64>| -> Array1<C64> {
        let mut rho = unvectorize(&v.view(), d);
        for _ in 0..n_inner {
            rho = rk4_step(gen, &rho, dt_inner);
        }
        vectorize(&rho)
    };
    let action = |v: &Array1<C64>| gen.apply_vec(&v.view());

    let mut v0 = match &opts.start_vector {
        Some(v) => v.clone(),
        None => vectorize(&identity(d).mapv(|z| z / d as f64)),
    };
    let mut applies = 0usize;

    // Stage 1: Arnoldi on the propagator isolates the eigenvector whose
    // eigenvalue has the largest real part.
    let mut stage1_ok = false;
    for _ in 0..opts.max_restarts {
        let (basis, h) = arnoldi(&propagator, &v0, opts.krylov_dim);
        applies += basis.len();
        let pairs = ritz_pairs(&basis, &h)?;
        let best = pairs
            .iter()
            .max_by(|a, b| a.0.norm().partial_cmp(&b.0.norm()).unwrap())
            .expect("nonempty Krylov space");
        v0 = best.1.clone();
        if best.2 / best.0.norm().max(1e-300) < 1e-8 {
            stage1_ok = true;
            break;
        }
    }
    if !stage1_ok {
        // Fallback: plain propagation power iteration with a longer window.
        let long_inner = 4 * n_inner;
        for _ in 0..opts.max_iterations {
            let mut rho = unvectorize(&v0.view(), d);
            for _ in 0..long_inner {
                rho = rk4_step(gen, &rho, dt_inner);
            }
            applies += 1;
            let w = vectorize(&rho);
            let n = vec_norm(&w.view());
            if !n.is_finite() || n == 0.0 {
                break;
            }
            v0 = w.mapv(|z| z / n);
        }
    }

    // Stage 2: Rayleigh-Ritz polish on the exact generator; the propagator
    // only supplied the subspace, the eigenvalue comes from L itself.
    let mut best: Option<SpectralResult> = None;
    let mut degenerate_with = None;
    for sweep in 0..12 {
        let (basis, h) = arnoldi(&action, &v0, 15.min(gen.superdim()));
        applies += basis.len();
        let mut pairs = ritz_pairs(&basis, &h)?;
        pairs.sort_by(|a, b| b.3.partial_cmp(&a.3).unwrap());
        let (lambda, x, _, _) = pairs[0].clone();

        pairs.sort_by(|a, b| b.0.re.partial_cmp(&a.0.re).unwrap());
        if pairs.len() > 1 && (pairs[0].0.re - pairs[1].0.re).abs() < opts.degeneracy_gap {
            degenerate_with = Some(pairs[1].0);
        }

        let res = residual_of(gen, &x, lambda);
        let improved = best.as_ref().map(|b| res < b.residual).unwrap_or(true);
        if improved {
            best = Some(SpectralResult {
                eigenvalue: lambda,
                right_vector: x.clone(),
                residual: res,
                iterations: applies,
                degenerate_with,
            });
        }
        if res < opts.tol * 1e-2 || (!improved && sweep > 2) {
            break;
        }
        v0 = x;
    }

    let result = best.expect("at least one polish sweep ran");
    if result.residual > opts.tol {
        return Err(Error::NonConvergence {
            what: "matrix-free dominant eigenvalue",
            residual: result.residual,
            iterations: result.iterations,
        });
    }
    Ok(result)
}

/// Eigenvalue of maximal real part of a generator.
///
/// `hint` is consulted only to break real-part ties (degenerate tops); ties
/// without a hint resolve toward the largest |Im| and report the runner-up in
/// [`SpectralResult::degenerate_with`].
pub fn dominant_eigenvalue(gen: &Superoperator, hint: Option<C64>) -> Result<SpectralResult> {
    dominant_eigenvalue_opts(gen, hint, &SpectralOptions::default())
}

/// [`dominant_eigenvalue`] with explicit solver options.
pub fn dominant_eigenvalue_opts(
    gen: &Superoperator,
    hint: Option<C64>,
    opts: &SpectralOptions,
) -> Result<SpectralResult> {
    if gen.superdim() <= opts.dense_limit {
        dominant_dense(gen, hint, opts)
    } else {
        dominant_matrix_free(gen, opts)
    }
}

// ---------------------------------------------------------------------------
// Two-time correlations
// ---------------------------------------------------------------------------

/// Intensity-intensity correlation `C(tau) = Tr[L^dag L e^{L tau}(L rho_ss L^dag)]`
/// evaluated by direct propagation at the requested (ascending) lags.
pub fn two_time_correlation(
    gen: &Superoperator,
    l_jump: &Array2<C64>,
    rho_ss: &DensityMatrix,
    taus: &[f64],
    dt: Option<f64>,
) -> Result<Vec<C64>> {
    if taus.windows(2).any(|w| w[1] < w[0]) || taus.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParams {
            field: "taus",
            reason: "lags must be non-negative and ascending".into(),
        });
    }
    let l_dag = crate::linalg::dagger(l_jump);
    let ldl = l_dag.dot(l_jump);
    let mut sigma = l_jump.dot(rho_ss.data()).dot(&l_dag);
    let step = dt.unwrap_or_else(|| default_step(gen)).min(default_step(gen));

    let mut out = Vec::with_capacity(taus.len());
    let mut now = 0.0;
    for &tau in taus {
        let advance = tau - now;
        if advance > 0.0 {
            sigma = propagate_matrix(gen, &sigma, advance, step);
            now = tau;
        }
        out.push(expectation(&ldl.view(), &sigma.view()));
    }
    Ok(out)
}

/// Modal decomposition of the correlation function from a dense
/// eigendecomposition of the generator: `C(tau) = sum_k w_k e^{lambda_k tau}`.
///
/// The zero mode carries the disconnected plateau `<L^dag L>_ss^2`; the
/// remaining modes make up the connected part, whose time integral is
/// available in closed form.
pub struct CorrelationModes {
    /// (lambda_k, weight_k) for the non-stationary modes.
    pub modes: Vec<(C64, C64)>,
    /// Weight carried by the zero mode (the plateau).
    pub plateau: C64,
    /// Stationary intensity expectation `<L^dag L>_ss`.
    pub intensity: f64,
}

impl CorrelationModes {
    /// Evaluate C(tau).
    pub fn eval(&self, tau: f64) -> C64 {
        let mut acc = self.plateau;
        for (lambda, w) in &self.modes {
            acc += w * (lambda * tau).exp();
        }
        acc
    }

    /// Closed-form integral of the connected part,
    /// `int_0^inf (C(tau) - plateau) dtau = sum_k -w_k / lambda_k`.
    pub fn connected_integral(&self) -> C64 {
        self.modes
            .iter()
            .map(|(lambda, w)| -w / lambda)
            .sum()
    }
}

/// Build [`CorrelationModes`] for `C(tau) = Tr[L^dag L e^{L tau}(L rho_ss L^dag)]`
/// via dense eigendecomposition (requires `d^2 <= dense_limit`).
pub fn correlation_modes(
    gen: &Superoperator,
    l_jump: &Array2<C64>,
    rho_ss: &DensityMatrix,
    opts: &SpectralOptions,
) -> Result<CorrelationModes> {
    if gen.superdim() > opts.dense_limit {
        return Err(Error::InvalidParams {
            field: "gen",
            reason: format!(
                "modal correlation needs a dense decomposition (d^2 = {} > {})",
                gen.superdim(),
                opts.dense_limit
            ),
        });
    }
    let dense = gen.to_dense();
    let (eigvals, eigvecs) = dense.eig()?;

    let l_dag = crate::linalg::dagger(l_jump);
    let ldl = l_dag.dot(l_jump);
    let u = vectorize(&l_jump.dot(rho_ss.data()).dot(&l_dag));
    let w_left = vectorize(&ldl); // Tr[X^dag Y] pairing with X = L^dag L (Hermitian)

    // Expansion coefficients of the initial condition in the right eigenbasis.
    let lu = eigvecs.factorize()?;
    let coeff = lu.solve(&u)?;

    let intensity = expectation(&ldl.view(), &rho_ss.data().view()).re;

    let mut order: Vec<usize> = (0..eigvals.len()).collect();
    order.sort_by(|&a, &b| eigvals[b].re.partial_cmp(&eigvals[a].re).unwrap());
    let zero_idx = order[0];

    let mut modes = Vec::new();
    let mut plateau = C64::default();
    for k in 0..eigvals.len() {
        let weight = coeff[k] * inner(&w_left.view(), &eigvecs.column(k));
        if k == zero_idx {
            plateau += weight;
        } else if weight.norm() > 0.0 {
            modes.push((eigvals[k], weight));
        }
    }
    Ok(CorrelationModes {
        modes,
        plateau,
        intensity,
    })
}

/// Time integral of the connected correlation by adaptive propagation with an
/// exponential-tail cutoff, for generators too large to decompose densely.
///
/// Stops once |C_c| stays below `cutoff * |C_c(0)|` for a full block, and
/// reports non-convergence past `max_time`.
pub fn connected_correlation_integral_quadrature(
    gen: &Superoperator,
    l_jump: &Array2<C64>,
    rho_ss: &DensityMatrix,
    cutoff: f64,
    dt: Option<f64>,
    max_time: f64,
) -> Result<f64> {
    let l_dag = crate::linalg::dagger(l_jump);
    let ldl = l_dag.dot(l_jump);
    let intensity = expectation(&ldl.view(), &rho_ss.data().view()).re;
    let plateau = intensity * intensity;

    let mut sigma = l_jump.dot(rho_ss.data()).dot(&l_dag);
    let step = dt.unwrap_or_else(|| default_step(gen)).min(default_step(gen));

    let c0 = (expectation(&ldl.view(), &sigma.view()).re - plateau).abs();
    if c0 == 0.0 {
        return Ok(0.0);
    }
    let mut integral = 0.0;
    let mut prev = expectation(&ldl.view(), &sigma.view()).re - plateau;
    let mut t = 0.0;
    let mut quiet = 0usize;
    while t < max_time {
        sigma = rk4_step(gen, &sigma, step);
        t += step;
        let cur = expectation(&ldl.view(), &sigma.view()).re - plateau;
        integral += 0.5 * (prev + cur) * step;
        prev = cur;
        if cur.abs() < cutoff * c0 {
            quiet += 1;
            // A sustained quiet stretch (one decay unit) ends the quadrature.
            if quiet as f64 * step > 1.0 {
                return Ok(integral);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence {
        what: "connected correlation quadrature",
        residual: prev.abs() / c0,
        iterations: (max_time / step) as usize,
    })
}

// ---------------------------------------------------------------------------
// Finite-difference derivatives
// ---------------------------------------------------------------------------

/// A derivative value with a stencil-halving error estimate.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub error_estimate: f64,
    /// Set when halving the stencil moved the result by more than 1%,
    /// indicating non-smoothness (expected near critical points).
    pub suspect: bool,
}

fn flag_suspect(value: f64, error: f64) -> bool {
    error > 0.01 * value.abs().max(1e-300)
}

/// Central second derivative at zero with one Richardson refinement.
pub fn second_derivative_at_zero<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> DerivativeEstimate {
    let f0 = f(0.0);
    let coarse = (f(h) - 2.0 * f0 + f(-h)) / (h * h);
    let hh = h / 2.0;
    let fine = (f(hh) - 2.0 * f0 + f(-hh)) / (hh * hh);
    let value = (4.0 * fine - coarse) / 3.0;
    let error_estimate = (value - fine).abs();
    DerivativeEstimate {
        value,
        error_estimate,
        suspect: flag_suspect(value, error_estimate),
    }
}

/// Central first derivative at zero with one Richardson refinement.
pub fn first_derivative_at_zero<F: FnMut(f64) -> f64>(mut f: F, h: f64) -> DerivativeEstimate {
    let coarse = (f(h) - f(-h)) / (2.0 * h);
    let hh = h / 2.0;
    let fine = (f(hh) - f(-hh)) / (2.0 * hh);
    let value = (4.0 * fine - coarse) / 3.0;
    let error_estimate = (value - fine).abs();
    DerivativeEstimate {
        value,
        error_estimate,
        suspect: flag_suspect(value, error_estimate),
    }
}

/// Mixed second derivative d^2 f / dx dy at the origin on a centered
/// four-point stencil with one Richardson refinement.
pub fn mixed_second_derivative<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    hx: f64,
    hy: f64,
) -> DerivativeEstimate {
    let mut stencil = |ax: f64, ay: f64| {
        (f(ax, ay) - f(-ax, ay) - f(ax, -ay) + f(-ax, -ay)) / (4.0 * ax * ay)
    };
    let coarse = stencil(hx, hy);
    let fine = stencil(hx / 2.0, hy / 2.0);
    let value = (4.0 * fine - coarse) / 3.0;
    let error_estimate = (value - fine).abs();
    DerivativeEstimate {
        value,
        error_estimate,
        suspect: flag_suspect(value, error_estimate),
    }
}
