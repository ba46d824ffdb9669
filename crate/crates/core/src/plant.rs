//! The LTI truth model and its propagation on dense runs and scattered
//! points.

use crate::matfun::{ensure_finite, expc};
use crate::{Error, Matrix, Result, Vector};

/// `x' = Ax + Bu`, `y = Cx`, `x(0) = x0`, with `m` inputs and outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiPlant {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    x0: Vector,
}

impl LtiPlant {
    pub fn new(a: Matrix, b: Matrix, c: Matrix, x0: Vector) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::invalid(format!(
                "A must be square and non-empty, got {}x{}",
                n,
                a.ncols()
            )));
        }
        if b.nrows() != n || b.ncols() == 0 {
            return Err(Error::invalid(format!(
                "B must be {n}xm, got {}x{}",
                b.nrows(),
                b.ncols()
            )));
        }
        let m = b.ncols();
        if c.nrows() != m || c.ncols() != n {
            return Err(Error::invalid(format!(
                "C must be {m}x{n}, got {}x{}",
                c.nrows(),
                c.ncols()
            )));
        }
        if x0.len() != n {
            return Err(Error::invalid(format!("x0 must have length {n}, got {}", x0.len())));
        }
        ensure_finite(&a, "A")?;
        ensure_finite(&b, "B")?;
        ensure_finite(&c, "C")?;
        if !x0.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("x0: non-finite entry"));
        }
        Ok(LtiPlant { a, b, c, x0 })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn cb(&self) -> Matrix {
        &self.c * &self.b
    }

    pub fn output(&self, x: &Vector) -> Vector {
        &self.c * x
    }

    /// `Â = expc(μA)A`, `B̂ = expc(μA)B`.
    pub fn discretize(&self, mu: f64) -> Result<DiscretizedPlant> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("graininess must be >= 0, got {mu}")));
        }
        if mu == 0.0 {
            return Ok(DiscretizedPlant { a_hat: self.a.clone(), b_hat: self.b.clone(), mu });
        }
        let e = expc(&(&self.a * mu))?;
        Ok(DiscretizedPlant { a_hat: &e * &self.a, b_hat: &e * &self.b, mu })
    }

    /// Closed-loop delta-dynamics matrix `expc(μA)(A − kBC)`.
    pub fn closed_loop_matrix(&self, k: f64, mu: f64) -> Result<Matrix> {
        let d = self.discretize(mu)?;
        Ok(&d.a_hat - &d.b_hat * &self.c * k)
    }

    /// One sample-and-hold step across a scattered point.
    ///
    /// The output is sampled at the left endpoint and `u = −k y` is held
    /// for `μ`; returns `(x(t + μ), y(t))`.
    pub fn step_scattered(&self, x: &Vector, k: f64, mu: f64) -> Result<(Vector, Vector)> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("scattered step needs mu > 0, got {mu}")));
        }
        self.check_state(x)?;
        let d = self.discretize(mu)?;
        let y = self.output(x);
        let u = &y * -k;
        let x_next = x + (&d.a_hat * x + &d.b_hat * u) * mu;
        Ok((x_next, y))
    }

    /// Integrates `x' = (A − kBC)x` over a dense run with classic RK4 at
    /// step `h_int` (shortened last step), coupled to `k' = ‖y‖²` when the
    /// gain law is adaptive.
    pub fn run_dense(
        &self,
        x: &Vector,
        k: f64,
        duration: f64,
        h_int: f64,
        gain_law: GainLaw,
    ) -> Result<DenseRun> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!("dense run needs duration > 0, got {duration}")));
        }
        if !(h_int > 0.0 && h_int.is_finite()) {
            return Err(Error::invalid(format!("dense run needs h_int > 0, got {h_int}")));
        }
        self.check_state(x)?;
        let bc = &self.b * &self.c;
        let field = |x: &Vector, k: f64| -> (Vector, f64) {
            let dx = &self.a * x - &bc * x * k;
            let dk = match gain_law {
                GainLaw::Frozen => 0.0,
                GainLaw::SquaredOutput => self.output(x).norm_squared(),
            };
            (dx, dk)
        };

        let steps = ((duration / h_int) - 1e-9).ceil().max(1.0) as usize;
        let mut samples = Vec::with_capacity(steps + 1);
        let mut xs = x.clone();
        let mut ks = k;
        samples.push(DenseSample { t: 0.0, x: xs.clone(), k: ks });
        for i in 0..steps {
            let t0 = i as f64 * h_int;
            let t1 = if i + 1 == steps { duration } else { (i + 1) as f64 * h_int };
            let h = t1 - t0;
            let (k1x, k1k) = field(&xs, ks);
            let (k2x, k2k) = field(&(&xs + &k1x * (h / 2.0)), ks + k1k * h / 2.0);
            let (k3x, k3k) = field(&(&xs + &k2x * (h / 2.0)), ks + k2k * h / 2.0);
            let (k4x, k4k) = field(&(&xs + &k3x * h), ks + k3k * h);
            xs += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
            ks += (k1k + 2.0 * k2k + 2.0 * k3k + k4k) * h / 6.0;
            samples.push(DenseSample { t: t1, x: xs.clone(), k: ks });
        }
        Ok(DenseRun { x_end: xs, k_end: ks, samples })
    }

    fn check_state(&self, x: &Vector) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::invalid(format!(
                "state has length {}, plant order is {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// Exact time-scale form of the plant at graininess `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedPlant {
    pub a_hat: Matrix,
    pub b_hat: Matrix,
    pub mu: f64,
}

impl DiscretizedPlant {
    /// `I + μÂ`, which equals `e^{μA}`.
    pub fn transition(&self) -> Matrix {
        let n = self.a_hat.nrows();
        Matrix::identity(n, n) + &self.a_hat * self.mu
    }
}

/// Gain evolution on dense runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainLaw {
    Frozen,
    /// `k' = ‖y‖²`.
    SquaredOutput,
}

/// Sample of a dense run; `t` is measured from the start of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSample {
    pub t: f64,
    pub x: Vector,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseRun {
    pub x_end: Vector,
    pub k_end: f64,
    /// Start state followed by the state after every step.
    pub samples: Vec<DenseSample>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::mat_exp;

    fn scalar(a: f64, b: f64, c: f64) -> LtiPlant {
        LtiPlant::new(
            Matrix::from_element(1, 1, a),
            Matrix::from_element(1, 1, b),
            Matrix::from_element(1, 1, c),
            Vector::from_element(1, 1.0),
        )
        .unwrap()
    }

    fn example() -> LtiPlant {
        LtiPlant::new(
            Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 1.0]),
            Matrix::from_row_slice(2, 1, &[1.0, 1.0]),
            Matrix::from_row_slice(1, 2, &[1.0, 0.0]),
            Vector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn construction_checks_shapes() {
        let a = Matrix::identity(2, 2);
        let b = Matrix::zeros(2, 1);
        assert!(LtiPlant::new(a.clone(), b.clone(), Matrix::zeros(1, 3), Vector::zeros(2)).is_err());
        assert!(LtiPlant::new(a.clone(), b.clone(), Matrix::zeros(1, 2), Vector::zeros(3)).is_err());
        assert!(LtiPlant::new(
            a.clone(),
            Matrix::zeros(3, 1),
            Matrix::zeros(1, 2),
            Vector::zeros(2)
        )
        .is_err());
        let mut bad = a.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(LtiPlant::new(bad, b, Matrix::zeros(1, 2), Vector::zeros(2)).is_err());
    }

    #[test]
    fn discretize_at_zero_is_identity_map() {
        let p = example();
        let d = p.discretize(0.0).unwrap();
        assert_eq!(&d.a_hat, p.a());
        assert_eq!(&d.b_hat, p.b());
        assert!(p.discretize(-0.1).is_err());
    }

    #[test]
    fn discretize_scalar_closed_form() {
        let ln2 = std::f64::consts::LN_2;
        let d = scalar(1.0, 1.0, 1.0).discretize(ln2).unwrap();
        let expect = 1.0 / ln2;
        assert!((d.a_hat[(0, 0)] - expect).abs() < 1e-14);
        assert!((d.b_hat[(0, 0)] - expect).abs() < 1e-14);
    }

    #[test]
    fn discretized_transition_is_exponential() {
        let p = example();
        for mu in [0.01, 0.3, 1.7, 3.0] {
            let d = p.discretize(mu).unwrap();
            let e = mat_exp(&(p.a() * mu)).unwrap();
            assert!((d.transition() - e).abs().max() < 1e-10);
        }
    }

    #[test]
    fn scattered_step_cases() {
        // A = 0, B = C = I: x(1 − μk).
        let p = LtiPlant::new(
            Matrix::zeros(2, 2),
            Matrix::identity(2, 2),
            Matrix::identity(2, 2),
            Vector::zeros(2),
        )
        .unwrap();
        let x = Vector::from_vec(vec![2.0, -1.0]);
        let (xn, y) = p.step_scattered(&x, 3.0, 0.1).unwrap();
        assert_eq!(y, x);
        assert!((xn - &x * 0.7).abs().max() < 1e-15);

        let s = scalar(1.0, 1.0, 1.0);
        let one = Vector::from_element(1, 1.0);
        let (xn, _) = s.step_scattered(&one, 0.0, std::f64::consts::LN_2).unwrap();
        assert!((xn[0] - 2.0).abs() < 1e-14);
        let (xn, _) = s.step_scattered(&one, 2.0, 0.1).unwrap();
        assert!((xn[0] - (2.0 - 0.1f64.exp())).abs() < 1e-12);
        assert!(s.step_scattered(&one, 1.0, 0.0).is_err());
    }

    #[test]
    fn dense_run_frozen_matches_exponential() {
        let p = example();
        let x = Vector::from_vec(vec![1.0, -0.5]);
        let k = 3.0;
        let run = p.run_dense(&x, k, 1.3, 1e-3, GainLaw::Frozen).unwrap();
        let acl = p.a() - p.b() * p.c() * k;
        let expect = mat_exp(&(acl * 1.3)).unwrap() * &x;
        assert!((&run.x_end - expect).abs().max() < 1e-8);
        assert_eq!(run.k_end, k);
        assert!((run.samples.last().unwrap().t - 1.3).abs() < 1e-15);
        assert_eq!(run.samples.len(), 1301);
    }

    #[test]
    fn dense_run_from_equilibrium() {
        let p = example();
        let run = p.run_dense(&Vector::zeros(2), 0.7, 2.0, 0.01, GainLaw::SquaredOutput).unwrap();
        assert_eq!(run.x_end, Vector::zeros(2));
        assert_eq!(run.k_end, 0.7);
    }

    #[test]
    fn dense_run_rejects_bad_arguments() {
        let p = example();
        assert!(p.run_dense(p.x0(), 1.0, 0.0, 0.1, GainLaw::Frozen).is_err());
        assert!(p.run_dense(p.x0(), 1.0, 1.0, 0.0, GainLaw::Frozen).is_err());
        assert!(p.run_dense(&Vector::zeros(3), 1.0, 1.0, 0.1, GainLaw::Frozen).is_err());
    }

    #[test]
    fn dense_run_scalar_high_gain_decays() {
        // a = b = c = 1, k0 = 5: x' = (1 − k)x, k' = x².
        let s = scalar(1.0, 1.0, 1.0);
        let x = Vector::from_element(1, 1.0);
        let run = s.run_dense(&x, 5.0, 2.0, 1e-3, GainLaw::SquaredOutput).unwrap();
        let mags: Vec<f64> = run.samples.iter().map(|s| s.x[0].abs()).collect();
        assert!(mags.windows(2).all(|w| w[1] < w[0]));

        // Oracle: the same coupled scalar ODE at a tenfold finer step.
        let (mut xo, mut ko) = (1.0f64, 5.0f64);
        let h = 1e-4;
        let f = |x: f64, k: f64| ((1.0 - k) * x, x * x);
        for _ in 0..20_000 {
            let (a1, b1) = f(xo, ko);
            let (a2, b2) = f(xo + a1 * h / 2.0, ko + b1 * h / 2.0);
            let (a3, b3) = f(xo + a2 * h / 2.0, ko + b2 * h / 2.0);
            let (a4, b4) = f(xo + a3 * h, ko + b3 * h);
            xo += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            ko += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        assert!(run.k_end > 5.0);
        assert!((run.k_end - ko).abs() < 1e-10);
        assert!((run.x_end[0] - xo).abs() < 1e-10);
    }
}
