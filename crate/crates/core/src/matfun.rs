//! Small dense matrix functions.
//!
//! Everything here targets the `n ≤ 16` regime of plant models: the matrix
//! exponential, `expc(X) = I + X/2! + X²/3! + … = ∫₀¹ e^{Xs} ds`, spectra,
//! a vectorized continuous Lyapunov solver and transmission zeros of a
//! square plant.

use nalgebra::SymmetricEigen;

use crate::{Error, Matrix, Result, C64};

/// Taylor degree used on the scaled argument (‖X/2^s‖₁ ≤ 1/2).
const TAYLOR_DEGREE: usize = 18;
/// Generalized eigenvalues beyond this modulus are treated as infinite.
pub const INFINITE_ZERO_MODULUS: f64 = 1e8;

pub(crate) fn ensure_square(x: &Matrix, what: &str) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(Error::invalid(format!(
            "{what}: expected a square matrix, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(x.nrows())
}

pub(crate) fn ensure_finite(x: &Matrix, what: &str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what}: non-finite entry")))
    }
}

fn one_norm(x: &Matrix) -> f64 {
    x.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn spectral_norm(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone().svd(false, false).singular_values.max()
}

/// Smallest singular value.
pub fn min_singular_value(x: &Matrix) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.clone().svd(false, false).singular_values.min()
}

/// Eigenvalues of the symmetric part `(X + Xᵀ)/2`, ascending.
pub fn symmetric_eigenvalues(x: &Matrix) -> Vec<f64> {
    let sym = (x + x.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn lambda_min_sym(x: &Matrix) -> f64 {
    symmetric_eigenvalues(x).first().copied().unwrap_or(f64::NAN)
}

pub fn lambda_max_sym(x: &Matrix) -> f64 {
    symmetric_eigenvalues(x).last().copied().unwrap_or(f64::NAN)
}

/// Matrix exponential by scaling and squaring around a Taylor kernel.
pub fn mat_exp(x: &Matrix) -> Result<Matrix> {
    let n = ensure_square(x, "mat_exp")?;
    ensure_finite(x, "mat_exp")?;
    let norm = one_norm(x);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = x * 2f64.powi(-squarings);
    let eye = Matrix::identity(n, n);
    let mut r = eye.clone();
    for k in (1..=TAYLOR_DEGREE).rev() {
        r = &eye + (&scaled * &r) / k as f64;
    }
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `expc(X) = Σ_{j≥0} X^j/(j+1)!`.
///
/// Read off as the top-right block of `exp([[X, I], [0, 0]])`, which needs
/// no inverse and stays exact at singular `X`.
pub fn expc(x: &Matrix) -> Result<Matrix> {
    let n = ensure_square(x, "expc")?;
    let mut aug = Matrix::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(x);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    let e = mat_exp(&aug)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// `Σ(μ) = expc(μA) − I`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDecomposition {
    pub sigma: Matrix,
    pub mu: f64,
}

impl SigmaDecomposition {
    pub fn new(a: &Matrix, mu: f64) -> Result<Self> {
        if !(mu >= 0.0) {
            return Err(Error::invalid(format!("graininess must be >= 0, got {mu}")));
        }
        let n = ensure_square(a, "sigma")?;
        let sigma = expc(&(a * mu))? - Matrix::identity(n, n);
        Ok(SigmaDecomposition { sigma, mu })
    }

    pub fn norm(&self) -> f64 {
        spectral_norm(&self.sigma)
    }
}

fn sort_complex(v: &mut [C64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues via a real Schur decomposition (Hessenberg + shifted QR),
/// sorted by real then imaginary part.
pub fn spectrum(x: &Matrix) -> Result<Vec<C64>> {
    let n = ensure_square(x, "spectrum")?;
    ensure_finite(x, "spectrum")?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut ev: Vec<C64> = x.complex_eigenvalues().iter().copied().collect();
    sort_complex(&mut ev);
    Ok(ev)
}

pub fn is_hurwitz(x: &Matrix) -> Result<bool> {
    Ok(spectrum(x)?.iter().all(|l| l.re < 0.0))
}

/// Solves `Fᵀ P + P F = −Q` for symmetric `P`.
///
/// Vectorized as `(I ⊗ Fᵀ + Fᵀ ⊗ I) vec(P) = −vec(Q)`.
pub fn solve_lyapunov_continuous(f: &Matrix, q: &Matrix) -> Result<Matrix> {
    let n = ensure_square(f, "lyapunov F")?;
    if q.shape() != (n, n) {
        return Err(Error::invalid(format!(
            "lyapunov: Q must be {n}x{n}, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    ensure_finite(f, "lyapunov F")?;
    ensure_finite(q, "lyapunov Q")?;
    let asym = (q - q.transpose()).abs().max();
    if asym > 1e-12 * q.abs().max().max(1.0) {
        return Err(Error::invalid("lyapunov: Q must be symmetric"));
    }
    let spec = spectrum(f)?;
    if let Some(bad) = spec.iter().find(|l| l.re >= 0.0) {
        return Err(Error::NoSolution(format!("lyapunov: F is not Hurwitz (eigenvalue {bad})")));
    }
    let ft = f.transpose();
    let eye = Matrix::identity(n, n);
    let op = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = -Matrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NoSolution("lyapunov: singular Kronecker operator".into()))?;
    let p = Matrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// Finite transmission zeros of a square plant, the roots of
/// `det [[A − λI, B], [C, 0]]`.
///
/// When `CB` is invertible the infinite eigenvalues of the pencil are
/// deflated exactly: the zeros are the eigenvalues of
/// `(I − B(CB)⁻¹C) A` restricted to `ker C`. Otherwise the pencil
/// determinant of `λE − F` is interpolated as a polynomial and its roots
/// taken, dropping any beyond [`INFINITE_ZERO_MODULUS`].
pub fn transmission_zeros(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Vec<C64>> {
    let n = ensure_square(a, "transmission_zeros A")?;
    let m = b.ncols();
    if b.nrows() != n || c.ncols() != n {
        return Err(Error::invalid(format!(
            "transmission_zeros: inconsistent shapes A {n}x{n}, B {}x{}, C {}x{}",
            b.nrows(),
            b.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    if c.nrows() != m {
        return Err(Error::Unsupported(format!(
            "transmission_zeros: non-square plant ({m} inputs, {} outputs)",
            c.nrows()
        )));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(c, "C")?;

    let cb = c * b;
    let well_conditioned = m > 0 && {
        let sv = cb.clone().svd(false, false).singular_values;
        sv.min() > 1e-10 * sv.max().max(1e-300)
    };
    let mut zeros =
        if well_conditioned { deflated_zeros(a, b, c, &cb)? } else { pencil_zeros(a, b, c)? };
    sort_complex(&mut zeros);
    Ok(zeros)
}

fn deflated_zeros(a: &Matrix, b: &Matrix, c: &Matrix, cb: &Matrix) -> Result<Vec<C64>> {
    let n = a.nrows();
    let m = b.ncols();
    if n == m {
        return Ok(Vec::new());
    }
    let cb_inv =
        cb.clone().try_inverse().ok_or_else(|| Error::NoSolution("CB is singular".into()))?;
    let proj = Matrix::identity(n, n) - b * cb_inv * c;
    // Orthonormal basis of ker C: eigenvectors of CᵀC for the n − m smallest eigenvalues.
    let eig = SymmetricEigen::new(c.transpose() * c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let kernel = Matrix::from_fn(n, n - m, |r, k| eig.eigenvectors[(r, order[k])]);
    let reduced = kernel.transpose() * proj * a * &kernel;
    spectrum(&reduced)
}

/// Roots of `p(λ) = det(λE − F)` with `F = [[A, B], [C, 0]]`, `E = diag(I, 0)`.
///
/// `p` has degree at most `n`; its coefficients are recovered by sampling
/// the determinant on a circle and applying an inverse DFT. Leading
/// coefficients that vanish to round-off are the infinite eigenvalues of the
/// pencil and are trimmed before the companion-matrix root solve.
fn pencil_zeros(a: &Matrix, b: &Matrix, c: &Matrix) -> Result<Vec<C64>> {
    use nalgebra::DMatrix;

    let n = a.nrows();
    let m = b.ncols();
    let size = n + m;
    let samples = n + 1;
    let radius = 1.0 + a.abs().max();
    let pencil = |lam: C64| {
        DMatrix::<C64>::from_fn(size, size, |i, j| {
            let f = if i < n && j < n {
                a[(i, j)]
            } else if i < n {
                b[(i, j - n)]
            } else if j < n {
                c[(i - n, j)]
            } else {
                0.0
            };
            let e = if i == j && i < n { lam } else { C64::new(0.0, 0.0) };
            e - C64::new(f, 0.0)
        })
    };
    let step = std::f64::consts::TAU / samples as f64;
    let values: Vec<C64> = (0..samples)
        .map(|j| pencil(C64::from_polar(radius, step * j as f64)).lu().determinant())
        .collect();
    // Scaled coefficients s_k = c_k r^k.
    let scaled: Vec<f64> = (0..samples)
        .map(|k| {
            let sum: C64 = values
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -step * (j * k) as f64))
                .sum();
            sum.re / samples as f64
        })
        .collect();
    let peak = scaled.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if peak == 0.0 || !peak.is_finite() {
        return Err(Error::NoSolution("Rosenbrock pencil is singular".into()));
    }
    let Some(degree) = scaled.iter().rposition(|v| v.abs() > 1e-10 * peak) else {
        return Err(Error::NoSolution("Rosenbrock pencil is singular".into()));
    };
    if degree == 0 {
        return Ok(Vec::new());
    }
    // Companion matrix of the monic polynomial in the scaled variable λ/r.
    let lead = scaled[degree];
    let mut companion = Matrix::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for k in 0..degree {
        companion[(k, degree - 1)] = -scaled[k] / lead;
    }
    Ok(spectrum(&companion)?
        .into_iter()
        .map(|z| z * radius)
        .filter(|l| l.norm() <= INFINITE_ZERO_MODULUS)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let z = Matrix::zeros(3, 3);
        assert_eq!(mat_exp(&z).unwrap(), Matrix::identity(3, 3));
        let d = mat_exp(&m(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert_relative_eq!(d[(0, 0)], std::f64::consts::E, max_relative = 1e-14);
        assert_relative_eq!(d[(1, 1)], (-1f64).exp(), max_relative = 1e-14);
        assert_eq!(d[(0, 1)], 0.0);
    }

    #[test]
    fn exp_of_rotation_generator() {
        let th = 0.7;
        let r = mat_exp(&m(2, 2, &[0.0, th, -th, 0.0])).unwrap();
        let expect = m(2, 2, &[th.cos(), th.sin(), -th.sin(), th.cos()]);
        assert!((r - expect).abs().max() < 1e-14);
    }

    #[test]
    fn exp_rejects_non_square() {
        assert!(matches!(mat_exp(&Matrix::zeros(2, 3)), Err(Error::InvalidArgument(_))));
        assert!(matches!(expc(&Matrix::zeros(3, 2)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn exp_large_norm_matches_scalar() {
        let r = mat_exp(&m(1, 1, &[-9.5])).unwrap();
        assert_relative_eq!(r[(0, 0)], (-9.5f64).exp(), max_relative = 1e-13);
        let r = mat_exp(&m(1, 1, &[10.0])).unwrap();
        assert_relative_eq!(r[(0, 0)], 10f64.exp(), max_relative = 1e-13);
    }

    #[test]
    fn expc_cases() {
        assert_eq!(expc(&Matrix::zeros(2, 2)).unwrap(), Matrix::identity(2, 2));
        let s = expc(&m(1, 1, &[1.0])).unwrap();
        assert_relative_eq!(s[(0, 0)], std::f64::consts::E - 1.0, max_relative = 1e-14);
        let ln2 = std::f64::consts::LN_2;
        let d = expc(&m(2, 2, &[ln2, 0.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(d[(0, 0)], 1.0 / ln2, max_relative = 1e-14);
        assert_relative_eq!(d[(1, 1)], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn expc_of_nilpotent_is_series() {
        // X² = 0, so expc(X) = I + X/2 exactly.
        let x = m(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expc(&x).unwrap();
        assert!((e - m(2, 2, &[1.0, 1.5, 0.0, 1.0])).abs().max() < 1e-15);
    }

    #[test]
    fn expc_imaginary_scalar_is_shifted_sinc() {
        // expc(iθ) = e^{iθ/2} sinc(θ/2), realized on the 2x2 real form of iθ.
        for th in [0.3, 1.0, 2.5, -4.0] {
            let e = expc(&m(2, 2, &[0.0, -th, th, 0.0])).unwrap();
            let z = C64::new(e[(0, 0)], e[(1, 0)]);
            let half = th / 2.0;
            let expect = C64::new(0.0, half).exp() * (half.sin() / half);
            assert!((z - expect).norm() < 1e-14, "θ = {th}");
        }
    }

    #[test]
    fn spectrum_cases() {
        let ev = spectrum(&m(2, 2, &[0.0, 1.0, -1.0, 1.0])).unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((ev[0] - C64::new(0.5, -r3)).norm() < 1e-12);
        assert!((ev[1] - C64::new(0.5, r3)).norm() < 1e-12);
        let ev = spectrum(&m(2, 2, &[2.0, 0.0, 0.0, 3.0])).unwrap();
        assert!((ev[0].re - 2.0).abs() < 1e-14 && (ev[1].re - 3.0).abs() < 1e-14);
        let ev = spectrum(&m(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|l| l.norm() < 1e-12));
    }

    #[test]
    fn lyapunov_cases() {
        let p =
            solve_lyapunov_continuous(&(-Matrix::identity(2, 2)), &(Matrix::identity(2, 2) * 2.0))
                .unwrap();
        assert!((p - Matrix::identity(2, 2)).abs().max() < 1e-14);
        let p =
            solve_lyapunov_continuous(&m(2, 2, &[-1.0, 0.0, 0.0, -2.0]), &Matrix::identity(2, 2))
                .unwrap();
        assert!((p - m(2, 2, &[0.5, 0.0, 0.0, 0.25])).abs().max() < 1e-14);
    }

    #[test]
    fn lyapunov_general_residual() {
        let f = m(2, 2, &[0.0, 1.0, -1.0, -1.0]);
        let q = Matrix::identity(2, 2);
        let p = solve_lyapunov_continuous(&f, &q).unwrap();
        let res = f.transpose() * &p + &p * &f + &q;
        assert!(res.norm() <= 1e-9 * q.norm());
        assert!(lambda_min_sym(&p) > 0.0);
        // Hand solution: P = [[1.5, 0.5], [0.5, 1.0]].
        assert!((p - m(2, 2, &[1.5, 0.5, 0.5, 1.0])).abs().max() < 1e-12);
    }

    #[test]
    fn lyapunov_rejects_unstable() {
        let r = solve_lyapunov_continuous(&m(1, 1, &[0.5]), &m(1, 1, &[1.0]));
        assert!(matches!(r, Err(Error::NoSolution(_))));
    }

    #[test]
    fn zeros_of_example_plant() {
        let a = m(2, 2, &[0.0, 1.0, -1.0, 1.0]);
        let b = m(2, 1, &[1.0, 1.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        let z = transmission_zeros(&a, &b, &c).unwrap();
        assert_eq!(z.len(), 1);
        assert!(z[0].norm() < 1e-12);
        let z2 = transmission_zeros(&a, &(b * 2.0), &c).unwrap();
        assert_eq!(z2.len(), 1);
        assert!(z2[0].norm() < 1e-12);
    }

    #[test]
    fn zeros_of_first_order_plant() {
        let one = m(1, 1, &[1.0]);
        assert!(transmission_zeros(&m(1, 1, &[-1.0]), &one, &one).unwrap().is_empty());
    }

    #[test]
    fn zeros_via_pencil_when_cb_singular() {
        // G(s) = (s + 2) / ((s + 1)(s + 3)(s - 1)), relative degree 2 so CB = 0.
        // Companion form: s³ + 3s² − s − 3.
        let a = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 3.0, 1.0, -3.0]);
        let b = m(3, 1, &[0.0, 0.0, 1.0]);
        let c = m(1, 3, &[2.0, 1.0, 0.0]);
        let z = transmission_zeros(&a, &b, &c).unwrap();
        assert_eq!(z.len(), 1, "{z:?}");
        assert!((z[0] - C64::new(-2.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn zeros_non_square_unsupported() {
        let a = Matrix::identity(2, 2);
        let b = Matrix::identity(2, 2);
        let c = m(1, 2, &[1.0, 0.0]);
        assert!(matches!(transmission_zeros(&a, &b, &c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sigma_vanishes_with_mu() {
        let a = m(2, 2, &[0.0, 1.0, -1.0, 1.0]);
        let s0 = SigmaDecomposition::new(&a, 0.0).unwrap();
        assert_eq!(s0.norm(), 0.0);
        assert!(SigmaDecomposition::new(&a, -1.0).is_err());
    }
}
