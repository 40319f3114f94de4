//! Adaptive threshold selection and soft thresholding of per-cluster
//! transform coefficients.
//!
//! The threshold for a cluster is the (m*+1)-th largest coefficient
//! magnitude, so at most m* coefficients survive the shrink. Two keep-count
//! rules are available: proportional to the compression ratio times the
//! cluster's coefficient count, or a fixed fraction of it.

use crate::error::{Error, Result};
use crate::patch::{ClusterCoeffs, CoefficientSet};
use crate::real::Real;

/// How the per-cluster keep count m* is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShrinkagePolicy {
    /// m*_c = round(csr * N_c^(c)), clamped to [1, N_c^(c) - 1].
    CsrProportional { csr: f64 },
    /// m*_c = round(keep_fraction * N_c^(c)), clamped likewise.
    /// Fractions around [0.5, 1) are the empirically comfortable range.
    FixedFraction { keep_fraction: f64 },
}

impl ShrinkagePolicy {
    pub fn rate(&self) -> f64 {
        match *self {
            ShrinkagePolicy::CsrProportional { csr } => csr,
            ShrinkagePolicy::FixedFraction { keep_fraction } => keep_fraction,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ShrinkagePolicy::CsrProportional { csr } => {
                if !(csr > 0.0 && csr <= 1.0) {
                    return Err(Error::invalid(format!("csr must be in (0, 1], got {csr}")));
                }
            }
            ShrinkagePolicy::FixedFraction { keep_fraction } => {
                if !(keep_fraction > 0.0 && keep_fraction < 1.0) {
                    return Err(Error::invalid(format!(
                        "keep fraction must be in (0, 1), got {keep_fraction}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Keep count for a cluster of `n_c` coefficients.
    pub fn keep_count(&self, n_c: usize) -> usize {
        if n_c < 2 {
            return n_c;
        }
        ((self.rate() * n_c as f64).round() as usize).clamp(1, n_c - 1)
    }
}

/// lambda = (m_star + 1)-th largest absolute value.
///
/// Soft-thresholding at this lambda zeroes every |coefficient| <= lambda,
/// so ties at the cut only reduce the surviving count below m_star.
pub fn select_lambda<R: Real>(coeffs: &[R], m_star: usize) -> Result<R> {
    if m_star == 0 || m_star >= coeffs.len() {
        return Err(Error::invalid(format!(
            "m* must satisfy 1 <= m* < {}, got {m_star}",
            coeffs.len()
        )));
    }
    let mut mags: Vec<R> = coeffs.iter().map(|c| c.abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(mags[m_star])
}

/// beta_i = sign(alpha_i) * max(|alpha_i| - lambda, 0).
pub fn soft_threshold<R: Real>(coeffs: &[R], lambda: R) -> Result<Vec<R>> {
    if lambda < R::zero() {
        return Err(Error::invalid("threshold must be non-negative"));
    }
    Ok(coeffs
        .iter()
        .map(|&a| {
            let mag = a.abs() - lambda;
            if mag > R::zero() {
                a.signum() * mag
            } else {
                R::zero()
            }
        })
        .collect())
}

/// Per-cluster threshold selection + shrink. Returns the shrunk set and the
/// lambda used for each cluster.
pub fn shrink_set<R: Real>(
    set: &CoefficientSet<R>,
    policy: &ShrinkagePolicy,
) -> Result<(CoefficientSet<R>, Vec<R>)> {
    policy.validate()?;
    let mut lambdas = Vec::with_capacity(set.clusters.len());
    let mut clusters = Vec::with_capacity(set.clusters.len());
    for cluster in &set.clusters {
        let n_c = cluster.coeffs.len();
        let m_star = policy.keep_count(n_c);
        let lambda = if m_star >= n_c {
            R::zero()
        } else {
            select_lambda(&cluster.coeffs, m_star)?
        };
        let coeffs = soft_threshold(&cluster.coeffs, lambda)?;
        lambdas.push(lambda);
        clusters.push(ClusterCoeffs {
            members: cluster.members.clone(),
            coeffs,
        });
    }
    Ok((CoefficientSet::new(clusters, set.patch_len()), lambdas))
}
