//! Welch and paired two-sided t-tests.

use serde::Serialize;
use thiserror::Error;

use crate::special::student_t_two_sided;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub reject_h0: bool,
    pub alpha: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TestError {
    #[error("each sample needs at least 2 observations (got {0})")]
    TooFewObservations(usize),
    #[error("sample has zero variance")]
    DegenerateSample,
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// The decision rule: reject the null hypothesis iff `p < alpha`.
pub fn decide(p: f64, alpha: f64) -> bool {
    p < alpha
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

fn check(xs: &[f64]) -> Result<(), TestError> {
    if xs.len() < 2 {
        return Err(TestError::TooFewObservations(xs.len()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(TestError::NonFinite);
    }
    Ok(())
}

fn result(t: f64, df: f64, alpha: f64) -> TestResult {
    let p = student_t_two_sided(t, df);
    TestResult { t_statistic: t, degrees_of_freedom: df, p_value: p, reject_h0: decide(p, alpha), alpha }
}

/// Unequal-variance two-sample test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult, TestError> {
    check(a)?;
    check(b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    if va == 0.0 || vb == 0.0 {
        return Err(TestError::DegenerateSample);
    }
    let qa = va / a.len() as f64;
    let qb = vb / b.len() as f64;
    let se2 = qa + qb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (qa * qa / (a.len() - 1) as f64 + qb * qb / (b.len() - 1) as f64);
    Ok(result(t, df, alpha))
}

/// Paired test on the per-participant differences `a[i] - b[i]`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<TestResult, TestError> {
    if a.len() != b.len() {
        return Err(TestError::LengthMismatch(a.len(), b.len()));
    }
    check(a)?;
    check(b)?;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (md, vd) = mean_var(&d);
    if vd == 0.0 {
        return Err(TestError::DegenerateSample);
    }
    let n = d.len() as f64;
    Ok(result(md / (vd / n).sqrt(), n - 1.0, alpha))
}
