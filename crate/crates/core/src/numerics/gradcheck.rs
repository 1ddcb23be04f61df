use crate::error::{Error, Result};

use super::{DenseMatrix, RngStream};

pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Relative error used by the gradient gate.
pub fn relative_error(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / (fd.abs() + analytic.abs()).max(1e-8)
}

/// Compares `analytic` against central differences of `loss` at `params`.
///
/// When the parameter tensors hold more than `max_coords` scalars, a seeded
/// sample of that many coordinates is checked. Returns the maximum relative
/// error seen.
pub fn finite_difference_check<F>(
    mut loss: F,
    params: &[DenseMatrix],
    analytic: &[DenseMatrix],
    step: f64,
    max_coords: usize,
    rng: &mut RngStream,
) -> Result<f64>
where
    F: FnMut(&[DenseMatrix]) -> f64,
{
    let report = piecewise_difference_check(
        |ps| (loss(ps), Vec::new()),
        params,
        analytic,
        step,
        max_coords,
        rng,
    )?;
    Ok(report.max_relative_error)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation changed the activation pattern.
    pub skipped: usize,
}

/// Central-difference check for piecewise-smooth losses.
///
/// `loss` returns the value together with the sign pattern of every
/// pre-activation that passes through a kink. A coordinate whose `+step` or
/// `-step` evaluation changes that pattern straddles a kink, where the
/// central difference is not a derivative; it is skipped and counted.
pub fn piecewise_difference_check<F>(
    mut loss: F,
    params: &[DenseMatrix],
    analytic: &[DenseMatrix],
    step: f64,
    max_coords: usize,
    rng: &mut RngStream,
) -> Result<FdReport>
where
    F: FnMut(&[DenseMatrix]) -> (f64, Vec<bool>),
{
    if params.len() != analytic.len()
        || params.iter().zip(analytic).any(|(p, g)| p.shape() != g.shape())
    {
        return Err(Error::shape(
            "finite_difference_check",
            "analytic gradients do not match parameter shapes",
        ));
    }
    let mut coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(t, p)| (0..p.as_slice().len()).map(move |i| (t, i)))
        .collect();
    if coords.len() > max_coords {
        rng.shuffle(&mut coords);
        coords.truncate(max_coords);
        coords.sort_unstable();
    }

    let mut work = params.to_vec();
    let (_, base) = loss(&work);
    let mut report = FdReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for (t, i) in coords {
        let orig = work[t].as_slice()[i];
        work[t].as_mut_slice()[i] = orig + step;
        let (plus, p_plus) = loss(&work);
        work[t].as_mut_slice()[i] = orig - step;
        let (minus, p_minus) = loss(&work);
        work[t].as_mut_slice()[i] = orig;
        if p_plus != base || p_minus != base {
            report.skipped += 1;
            continue;
        }
        let fd = (plus - minus) / (2.0 * step);
        report.checked += 1;
        report.max_relative_error = report
            .max_relative_error
            .max(relative_error(fd, analytic[t].as_slice()[i]));
    }
    Ok(report)
}
