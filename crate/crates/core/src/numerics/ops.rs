//! Elementwise activations, row softmax, and inverted dropout.

use crate::error::{Error, Result};

use super::{CsrMatrix, DenseMatrix, RngStream};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;

pub fn relu(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| v.max(0.0))
}

/// Derivative mask of [`relu`]; the subgradient at zero is 0.
pub fn relu_mask(x: &DenseMatrix) -> DenseMatrix {
    x.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

pub fn leaky_relu(x: &DenseMatrix, slope: f64) -> DenseMatrix {
    x.map(|v| if v > 0.0 { v } else { slope * v })
}

/// Derivative mask of [`leaky_relu`]; the subgradient at zero is `slope`.
pub fn leaky_relu_mask(x: &DenseMatrix, slope: f64) -> DenseMatrix {
    x.map(|v| if v > 0.0 { 1.0 } else { slope })
}

/// `ln(sum_k exp(row_k))`, stable for large entries.
pub fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function `1 / (1 + e^-x)`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_rows(logits: &DenseMatrix) -> DenseMatrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    row.iter_mut().for_each(|v| *v /= sum);
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Inverted dropout. Returns the output and the multiplicative mask applied
/// (entries are `0` or `1/(1-rate)`; all ones when disabled).
pub fn dropout(
    x: &DenseMatrix,
    rate: f64,
    rng: &mut RngStream,
    enabled: bool,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_rate(rate)?;
    if !enabled || rate == 0.0 {
        return Ok((x.clone(), DenseMatrix::filled(x.rows(), x.cols(), 1.0)));
    }
    let keep = 1.0 / (1.0 - rate);
    let mask_values = (0..x.rows() * x.cols())
        .map(|_| if rng.uniform() < rate { 0.0 } else { keep })
        .collect();
    let mask = DenseMatrix::from_vec(x.rows(), x.cols(), mask_values)?;
    let mut out = x.clone();
    out.hadamard_assign(&mask)?;
    Ok((out, mask))
}

/// Inverted dropout over the stored entries of a sparse matrix. Implicit
/// zeros stay zero, so this matches dense dropout on the same matrix.
pub fn sparse_dropout(
    x: &CsrMatrix,
    rate: f64,
    rng: &mut RngStream,
    enabled: bool,
) -> Result<CsrMatrix> {
    check_rate(rate)?;
    if !enabled || rate == 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 / (1.0 - rate);
    let values = x
        .values()
        .iter()
        .map(|&v| if rng.uniform() < rate { 0.0 } else { v * keep })
        .collect();
    Ok(x.with_values(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_family_values() {
        let x = DenseMatrix::from_rows(&[vec![-1.0, 0.0, 2.0]]);
        assert_eq!(relu(&x).as_slice(), &[0.0, 0.0, 2.0]);
        assert_eq!(relu_mask(&x).as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(leaky_relu(&x, 0.2).as_slice(), &[-0.2, 0.0, 2.0]);
        assert_eq!(leaky_relu_mask(&x, 0.2).as_slice(), &[0.2, 0.2, 1.0]);
    }

    #[test]
    fn softmax_edge_cases() {
        let s = softmax_rows(&DenseMatrix::from_rows(&[vec![0.0, 0.0], vec![1000.0, 0.0]]));
        assert_eq!(s.row(0), &[0.5, 0.5]);
        assert_eq!(s.row(1)[0], 1.0);
        assert!(s.row(1)[1] < 1e-300);
        assert!(s.is_finite());
    }

    #[test]
    fn stable_scalar_helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(800.0), 800.0);
        assert!(softplus(-800.0) >= 0.0);
        assert!((log_sum_exp(&[700.0, 700.0]) - (700.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn dropout_disabled_or_zero_rate_is_identity() {
        let x = DenseMatrix::from_rows(&[vec![1.0, -2.0], vec![3.0, 4.0]]);
        let mut rng = RngStream::new(1);
        let (y, mask) = dropout(&x, 0.5, &mut rng, false).unwrap();
        assert_eq!(y, x);
        assert!(mask.as_slice().iter().all(|&m| m == 1.0));
        let (y, _) = dropout(&x, 0.0, &mut rng, true).unwrap();
        assert_eq!(y, x);
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
    }

    #[test]
    fn dropout_survival_fraction() {
        let x = DenseMatrix::filled(1000, 100, 1.0);
        let mut rng = RngStream::new(2024).substream("dropout-test");
        let (y, _) = dropout(&x, 0.5, &mut rng, true).unwrap();
        let survivors = y.as_slice().iter().filter(|&&v| v != 0.0).count();
        let frac = survivors as f64 / 1e5;
        assert!((frac - 0.5).abs() < 0.01, "surviving fraction {frac}");
        // inverted scaling keeps the mean near the input
        let mean = y.as_slice().iter().sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02);
    }

    #[test]
    fn sparse_dropout_matches_dense_semantics() {
        let x = CsrMatrix::from_row_entries(3, &[vec![(0, 1.0), (2, 2.0)], vec![(1, 4.0)]]).unwrap();
        let mut rng = RngStream::new(5);
        let y = sparse_dropout(&x, 0.5, &mut rng, true).unwrap();
        for (&a, &b) in x.values().iter().zip(y.values()) {
            assert!(b == 0.0 || b == 2.0 * a);
        }
    }

    proptest! {
        #[test]
        fn softmax_rows_sum_to_one_and_are_shift_invariant(
            row in proptest::collection::vec(-50.0f64..50.0, 1..10),
            shift in -100.0f64..100.0,
        ) {
            let a = softmax_rows(&DenseMatrix::from_rows(&[row.clone()]));
            let shifted: Vec<f64> = row.iter().map(|v| v + shift).collect();
            let b = softmax_rows(&DenseMatrix::from_rows(&[shifted]));
            prop_assert!((a.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.as_slice().iter().all(|&p| p >= 0.0));
            prop_assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }
}
