//! Linear readout training and scoring.
//!
//! Ridge weights minimise `|S w - y|^2 + lambda |w_features|^2`; the bias
//! weight is not penalised. The solve goes through a Householder QR of the
//! augmented matrix `[S; sqrt(lambda) E]`, where `E` selects feature columns,
//! so one factorisation serves any number of targets.

use nalgebra::{DMatrix, DVector, QR};

use crate::driver::StateMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutWeights {
    /// One weight per state-matrix column, bias last.
    pub weights: Vec<f64>,
    pub regularization: f64,
}

/// A factorised ridge problem for a fixed state matrix.
pub struct RidgeSolver {
    rows: usize,
    augmented_rows: usize,
    cols: usize,
    lambda: f64,
    qr: QR<f64, nalgebra::Dyn, nalgebra::Dyn>,
    r: DMatrix<f64>,
}

impl RidgeSolver {
    pub fn new(s: &StateMatrix, lambda: f64) -> Result<Self> {
        if lambda.is_nan() || lambda < 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "lambda {lambda} must be finite and >= 0"
            )));
        }
        let (m, p) = (s.rows(), s.cols());
        if m == 0 {
            return Err(Error::InvalidArgument("state matrix has no rows".into()));
        }
        let penalized = if lambda > 0.0 { s.n_features() } else { 0 };
        let mut a = DMatrix::<f64>::zeros(m + penalized, p);
        for r in 0..m {
            for (c, v) in s.row(r).iter().enumerate() {
                a[(r, c)] = *v;
            }
        }
        let root = lambda.sqrt();
        for c in 0..penalized {
            a[(m + c, c)] = root;
        }
        if m + penalized < p {
            return Err(Error::Singular {
                rank: m + penalized,
                cols: p,
            });
        }
        let qr = QR::new(a);
        let r = qr.r();
        let diag_max = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let tol = f64::EPSILON * (m + penalized).max(p) as f64 * diag_max;
        let rank = (0..p).filter(|&i| r[(i, i)].abs() > tol).count();
        if rank < p || diag_max == 0.0 {
            return Err(Error::Singular { rank, cols: p });
        }
        Ok(Self {
            rows: m,
            augmented_rows: m + penalized,
            cols: p,
            lambda,
            qr,
            r,
        })
    }

    pub fn fit(&self, target: &[f64]) -> Result<ReadoutWeights> {
        if target.len() != self.rows {
            return Err(Error::dims(self.rows, target.len()));
        }
        let mut b = DVector::<f64>::zeros(self.augmented_rows);
        b.rows_mut(0, self.rows).copy_from_slice(target);
        self.qr.q_tr_mul(&mut b);
        let rhs = b.rows(0, self.cols).into_owned();
        let w = self.r.solve_upper_triangular(&rhs).ok_or(Error::Singular {
            rank: 0,
            cols: self.cols,
        })?;
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular {
                rank: 0,
                cols: self.cols,
            });
        }
        Ok(ReadoutWeights {
            weights: w.iter().copied().collect(),
            regularization: self.lambda,
        })
    }
}

pub fn train_ridge(s: &StateMatrix, target: &[f64], lambda: f64) -> Result<ReadoutWeights> {
    if target.len() != s.rows() {
        return Err(Error::dims(s.rows(), target.len()));
    }
    RidgeSolver::new(s, lambda)?.fit(target)
}

/// `S w`.
pub fn predict(s: &StateMatrix, w: &ReadoutWeights) -> Result<Vec<f64>> {
    if w.weights.len() != s.cols() {
        return Err(Error::dims(s.cols(), w.weights.len()));
    }
    Ok((0..s.rows())
        .map(|r| s.row(r).iter().zip(&w.weights).map(|(a, b)| a * b).sum())
        .collect())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Squared Pearson correlation `cov^2 / (var(y) var(y_t))`; zero when either
/// series is constant or the lengths are unusable.
pub fn capacity(y: &[f64], target: &[f64]) -> f64 {
    if y.len() != target.len() || y.len() < 2 {
        return 0.0;
    }
    let (my, mt) = (mean(y), mean(target));
    let (mut cov, mut vy, mut vt) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(target) {
        let (da, db) = (a - my, b - mt);
        cov += da * db;
        vy += da * da;
        vt += db * db;
    }
    if vy <= 0.0 || vt <= 0.0 {
        return 0.0;
    }
    let c = cov * cov / (vy * vt);
    c.clamp(0.0, 1.0)
}

/// `sqrt(sum (y - y_t)^2 / (N var(y_t)))` with population variance.
pub fn nrmse(y: &[f64], target: &[f64]) -> Result<f64> {
    if y.len() != target.len() {
        return Err(Error::dims(target.len(), y.len()));
    }
    if target.is_empty() {
        return Err(Error::ZeroVariance);
    }
    let var = variance(target);
    if var <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let sse: f64 = y.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / (target.len() as f64 * var)).sqrt())
}

/// Weights as CSV rows `column,weight`.
pub fn write_weights_csv<W: std::io::Write>(w: &ReadoutWeights, out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["column", "weight"])?;
    let last = w.weights.len().saturating_sub(1);
    for (i, v) in w.weights.iter().enumerate() {
        let name = if i == last {
            "bias".to_string()
        } else {
            format!("f{i}")
        };
        csv.write_record([name, format!("{v:e}")])?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(rows: usize, features: usize, rng: &mut impl Rng) -> StateMatrix {
        let f: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..features).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        StateMatrix::from_features(0, &f).unwrap()
    }

    #[test]
    fn square_full_rank_interpolates() {
        // 4 features + bias = 5 columns, 5 rows
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_state(5, 4, &mut rng);
        let y: Vec<f64> = (0..5).map(|i| i as f64 - 1.5).collect();
        let w = train_ridge(&s, &y, 0.0).unwrap();
        let p = predict(&s, &w).unwrap();
        for (a, b) in p.iter().zip(&y) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn huge_lambda_shrinks_feature_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_state(50, 8, &mut rng);
        let y: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w = train_ridge(&s, &y, 1e12).unwrap();
        let norm = w.weights[..8].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-6);
        // the unpenalised bias converges to the target mean
        assert!((w.weights[8] - mean(&y)).abs() < 1e-6);
    }

    #[test]
    fn singular_unregularized_system_is_reported() {
        let f: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let s = StateMatrix::from_features(0, &f).unwrap();
        let y = vec![1.0; 10];
        assert!(matches!(
            train_ridge(&s, &y, 0.0),
            Err(Error::Singular { .. })
        ));
        assert!(train_ridge(&s, &y, 1e-3).is_ok());
    }

    #[test]
    fn residual_grows_with_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(60, 10, &mut rng);
        let y: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut last = 0.0;
        for lambda in [0.0, 1e-4, 1e-2, 1.0, 10.0, 1e3] {
            let p = predict(&s, &train_ridge(&s, &y, lambda).unwrap()).unwrap();
            let res: f64 = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            assert!(res >= last - 1e-12);
            last = res;
        }
    }

    #[test]
    fn predict_edge_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_state(7, 3, &mut rng);
        let zero = ReadoutWeights {
            weights: vec![0.0; 4],
            regularization: 0.0,
        };
        assert!(predict(&s, &zero).unwrap().iter().all(|v| *v == 0.0));
        let bias = ReadoutWeights {
            weights: vec![0.0, 0.0, 0.0, 1.0],
            regularization: 0.0,
        };
        assert!(predict(&s, &bias).unwrap().iter().all(|v| *v == 1.0));
        let bad = ReadoutWeights {
            weights: vec![0.0; 3],
            regularization: 0.0,
        };
        assert!(predict(&s, &bad).is_err());
    }

    #[test]
    fn capacity_of_affine_images() {
        let y: Vec<f64> = (0..100).map(|i| ((i * 37) % 17) as f64).collect();
        assert!((capacity(&y, &y) - 1.0).abs() < 1e-12);
        let z: Vec<f64> = y.iter().map(|v| -3.0 * v + 2.0).collect();
        assert!((capacity(&z, &y) - 1.0).abs() < 1e-12);
        assert_eq!(capacity(&vec![1.0; 100], &y), 0.0);
    }

    #[test]
    fn capacity_of_independent_sequences_is_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..5000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert!(capacity(&a, &b) < 0.002);
    }

    #[test]
    fn nrmse_edge_cases() {
        let t: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        assert_eq!(nrmse(&t, &t).unwrap(), 0.0);
        let m = vec![mean(&t); t.len()];
        assert!((nrmse(&m, &t).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            nrmse(&t, &vec![2.0; 50]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn nrmse_and_capacity_identity_for_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_state(200, 6, &mut rng);
        let y: Vec<f64> = (0..200)
            .map(|r| s.row(r)[0] * 0.7 - s.row(r)[3] * s.row(r)[1] + rng.random_range(-0.3..0.3))
            .collect();
        let p = predict(&s, &train_ridge(&s, &y, 0.0).unwrap()).unwrap();
        let n = nrmse(&p, &y).unwrap();
        assert!((n * n + capacity(&p, &y) - 1.0).abs() < 1e-6);
    }
}
