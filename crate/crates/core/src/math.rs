//! Numerically stable scalar/vector kernels and a small row-major matrix.
//!
//! Probability ratios are computed in the log domain throughout; raw
//! probabilities are only materialized for final reports.

use crate::error::{Error, Result};

pub const LN_2PI: f64 = 1.8378770664093453;

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "matrix data length {} != {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "matvec: input length {} != cols {}",
                x.len(),
                self.cols
            )));
        }
        let mut y = vec![0.0; self.rows];
        for (r, out) in y.iter_mut().enumerate() {
            *out = dot(self.row(r), x);
        }
        Ok(y)
    }

    /// y = A^T x
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::dim(format!(
                "matvec_transpose: input length {} != rows {}",
                x.len(),
                self.rows
            )));
        }
        let mut y = vec![0.0; self.cols];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            for (yc, &a) in y.iter_mut().zip(self.row(r)) {
                *yc += xr * a;
            }
        }
        Ok(y)
    }

    /// A += scale * u v^T
    pub fn add_outer(&mut self, u: &[f64], v: &[f64], scale: f64) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, &ur) in u.iter().enumerate() {
            let s = scale * ur;
            if s == 0.0 {
                continue;
            }
            for (a, &vc) in self.row_mut(r).iter_mut().zip(v) {
                *a += s * vc;
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        debug_assert_eq!(self.rows, other.rows);
        debug_assert_eq!(self.cols, other.cols);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// max(v) + log sum exp(v - max(v)); exact for length-1 input.
pub fn log_sum_exp(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::dim("log_sum_exp of empty vector"));
    }
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if v.len() == 1 {
        return Ok(m);
    }
    let s: f64 = v.iter().map(|&x| (x - m).exp()).sum();
    Ok(m + s.ln())
}

/// Softmax computed via the log domain; entries positive, sum to 1.
pub fn softmax(v: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(v)?;
    Ok(v.iter().map(|&x| (x - lse).exp()).collect())
}

pub fn log_softmax(v: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(v)?;
    Ok(v.iter().map(|&x| x - lse).collect())
}

/// Entropy -sum p log p of a categorical given log-probabilities.
pub fn entropy_from_log_probs(log_p: &[f64]) -> f64 {
    log_p
        .iter()
        .map(|&lp| {
            let p = lp.exp();
            if p > 0.0 {
                -p * lp
            } else {
                0.0
            }
        })
        .sum()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// log sigmoid(x) = -softplus(-x)
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

/// Closed-form KL(N(mu, diag sigma^2) || N(0, I)) in nats.
/// 0.5 * sum(mu_d^2 + sigma_d^2 - 1 - 2 ln sigma_d)
pub fn gaussian_kl_to_standard(mu: &[f64], sigma: &[f64]) -> Result<f64> {
    if mu.len() != sigma.len() {
        return Err(Error::dim(format!(
            "gaussian_kl_to_standard: mu length {} != sigma length {}",
            mu.len(),
            sigma.len()
        )));
    }
    let mut acc = 0.0;
    for (&m, &s) in mu.iter().zip(sigma) {
        if s <= 0.0 {
            return Err(Error::domain(format!("sigma must be positive, got {s}")));
        }
        acc += m * m + s * s - 1.0 - 2.0 * s.ln();
    }
    Ok(0.5 * acc)
}

/// Same KL with sigma parameterized as exp(log_sigma), positivity by construction.
pub fn gaussian_kl_to_standard_from_log_sigma(mu: &[f64], log_sigma: &[f64]) -> f64 {
    debug_assert_eq!(mu.len(), log_sigma.len());
    let mut acc = 0.0;
    for (&m, &ls) in mu.iter().zip(log_sigma) {
        let s2 = (2.0 * ls).exp();
        acc += m * m + s2 - 1.0 - 2.0 * ls;
    }
    0.5 * acc
}

/// log N(z; mu, diag exp(log_sigma)^2)
pub fn log_normal_diag(z: &[f64], mu: &[f64], log_sigma: &[f64]) -> f64 {
    debug_assert_eq!(z.len(), mu.len());
    debug_assert_eq!(z.len(), log_sigma.len());
    let mut acc = 0.0;
    for ((&zd, &md), &ls) in z.iter().zip(mu).zip(log_sigma) {
        let inv_s = (-ls).exp();
        let u = (zd - md) * inv_s;
        acc += -0.5 * LN_2PI - ls - 0.5 * u * u;
    }
    acc
}

/// log N(z; 0, I)
pub fn log_standard_normal(z: &[f64]) -> f64 {
    z.iter().map(|&zd| -0.5 * LN_2PI - 0.5 * zd * zd).sum()
}

/// Binary entropy -p ln p - (1-p) ln(1-p), with 0 ln 0 := 0.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("binary_entropy: p={p} outside [0,1]")));
    }
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.ln();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).ln();
    }
    Ok(h)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (1/n).
pub fn variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|&x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Purpose, SeededRng};

    #[test]
    fn log_sum_exp_symmetry_and_stability() {
        assert!((log_sum_exp(&[0.0, 0.0]).unwrap() - 2f64.ln()).abs() < 1e-15);
        // huge inputs must not overflow
        let v = log_sum_exp(&[1000.0, 1000.0]).unwrap();
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        // direct evaluation: ln(e^0 + e^{ln 3}) = ln 4
        let v = log_sum_exp(&[0.0, 3f64.ln()]).unwrap();
        assert!((v - 4f64.ln()).abs() < 1e-14);
        // exact for singletons
        assert_eq!(log_sum_exp(&[-7.25]).unwrap(), -7.25);
        assert!(log_sum_exp(&[]).is_err());
    }

    #[test]
    fn softmax_basics() {
        let p = softmax(&[0.0, 0.0, 0.0]).unwrap();
        for &pi in &p {
            assert!((pi - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&[0.0, 2f64.ln()]).unwrap();
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn softmax_shift_invariance_and_sum() {
        let mut rng = SeededRng::new(11).substream(Purpose::Test, 0, 0);
        for _ in 0..200 {
            let n = 1 + (rng.next_u64() % 12) as usize;
            let v: Vec<f64> = (0..n).map(|_| rng.normal() * 5.0).collect();
            let c = rng.normal() * 10.0;
            let shifted: Vec<f64> = v.iter().map(|&x| x + c).collect();
            let p = softmax(&v).unwrap();
            let q = softmax(&shifted).unwrap();
            let sum: f64 = p.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            for (&a, &b) in p.iter().zip(&q) {
                assert!((a - b).abs() < 1e-12);
                assert!(a > 0.0);
            }
        }
    }

    #[test]
    fn softmax_consistent_with_log_sum_exp() {
        let mut rng = SeededRng::new(12).substream(Purpose::Test, 0, 0);
        for _ in 0..100 {
            let v: Vec<f64> = (0..8).map(|_| rng.normal() * 3.0).collect();
            let lse = log_sum_exp(&v).unwrap();
            let p = softmax(&v).unwrap();
            for (i, &pi) in p.iter().enumerate() {
                assert!(((v[i] - lse).exp() - pi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gaussian_kl_identity_and_formula_cases() {
        assert_eq!(gaussian_kl_to_standard(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!((gaussian_kl_to_standard(&[1.0], &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        let v = gaussian_kl_to_standard(&[0.0], &[2.0]).unwrap();
        assert!((v - (1.5 - 2f64.ln())).abs() < 1e-12);
        assert!((v - 0.806853).abs() < 1e-6);
        assert!(gaussian_kl_to_standard(&[0.0], &[0.0]).is_err());
        assert!(gaussian_kl_to_standard(&[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn gaussian_kl_nonnegative_and_matches_log_sigma_form() {
        let mut rng = SeededRng::new(13).substream(Purpose::Test, 0, 0);
        for _ in 0..500 {
            let d = 1 + (rng.next_u64() % 5) as usize;
            let mu: Vec<f64> = (0..d).map(|_| rng.normal() * 2.0).collect();
            let ls: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
            let sigma: Vec<f64> = ls.iter().map(|&x| x.exp()).collect();
            let a = gaussian_kl_to_standard(&mu, &sigma).unwrap();
            let b = gaussian_kl_to_standard_from_log_sigma(&mu, &ls);
            assert!(a >= 0.0);
            assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }

    /// Closed form vs a Monte-Carlo estimate of E_q[log q - log p], one
    /// scalar Gaussian per trial. A seeded run keeps the 3-sigma bound exact.
    #[test]
    fn gaussian_kl_matches_mc_oracle() {
        let root = SeededRng::new(20260810);
        let n = 1_000_000usize;
        for trial in 0..100u64 {
            let mut rng = root.substream(Purpose::Test, 1, trial);
            let mu = rng.normal() * 1.5;
            let log_sigma = rng.normal() * 0.5;
            let sigma = log_sigma.exp();
            let closed = gaussian_kl_to_standard(&[mu], &[sigma]).unwrap();

            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..n {
                let z = mu + sigma * rng.normal();
                let t = log_normal_diag(&[z], &[mu], &[log_sigma]) - log_standard_normal(&[z]);
                sum += t;
                sum_sq += t * t;
            }
            let m = sum / n as f64;
            let var = (sum_sq / n as f64 - m * m).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (m - closed).abs() <= 3.0 * se.max(1e-9),
                "trial {trial}: mc {m} vs closed {closed} (se {se})"
            );
        }
    }

    #[test]
    fn binary_entropy_endpoints_and_value() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 2f64.ln()).abs() < 1e-15);
        // direct evaluation: -0.1 ln 0.1 - 0.9 ln 0.9
        assert!((binary_entropy(0.1).unwrap() - 0.325083).abs() < 1e-6);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn matrix_ops() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let y = a.matvec(&[1.0, 0.0, -1.0]).unwrap();
        assert_eq!(y, vec![-2.0, -2.0]);
        let yt = a.matvec_transpose(&[1.0, 1.0]).unwrap();
        assert_eq!(yt, vec![5.0, 7.0, 9.0]);
        assert!(a.matvec(&[1.0, 2.0]).is_err());
        assert!(a.matvec_transpose(&[1.0, 2.0, 3.0]).is_err());
        assert!(Matrix::from_vec(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn entropy_from_log_probs_uniform() {
        let lp = log_softmax(&[0.0; 7]).unwrap();
        assert!((entropy_from_log_probs(&lp) - 7f64.ln()).abs() < 1e-12);
    }
}
