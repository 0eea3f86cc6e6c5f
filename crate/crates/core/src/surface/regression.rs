//! Global polynomial regression baselines for throughput prediction.
//!
//! Full trivariate quadratic (10 terms) and cubic (20 terms) surfaces over
//! (p, cc, pp), fit by least squares on the normal equations. Inputs are
//! rescaled to [0, 1] per axis before solving to keep the Gram matrix well
//! conditioned; the stored coefficients are converted back to the raw
//! monomial basis so evaluation and inspection use plain powers of the
//! original variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionKind {
    Quadratic,
    Cubic,
}

impl RegressionKind {
    fn degree(&self) -> u32 {
        match self {
            RegressionKind::Quadratic => 2,
            RegressionKind::Cubic => 3,
        }
    }

    pub fn term_count(&self) -> usize {
        terms(self.degree()).len()
    }
}

/// Exponents of one monomial term: p^a * cc^b * pp^c.
type Term = (u32, u32, u32);

/// All exponent triples with total degree <= `deg`, ordered by total degree
/// then lexicographically. The order is part of the coefficient layout.
fn terms(deg: u32) -> Vec<Term> {
    let mut out = Vec::new();
    for total in 0..=deg {
        for a in (0..=total).rev() {
            for b in (0..=total - a).rev() {
                out.push((a, b, total - a - b));
            }
        }
    }
    out
}

fn term_name(t: Term) -> &'static str {
    // Names follow the fixed term order; used in rank-deficiency reports.
    const NAMES: &[(Term, &str)] = &[
        ((0, 0, 0), "1"),
        ((1, 0, 0), "p"),
        ((0, 1, 0), "cc"),
        ((0, 0, 1), "pp"),
        ((2, 0, 0), "p^2"),
        ((1, 1, 0), "p*cc"),
        ((1, 0, 1), "p*pp"),
        ((0, 2, 0), "cc^2"),
        ((0, 1, 1), "cc*pp"),
        ((0, 0, 2), "pp^2"),
        ((3, 0, 0), "p^3"),
        ((2, 1, 0), "p^2*cc"),
        ((2, 0, 1), "p^2*pp"),
        ((1, 2, 0), "p*cc^2"),
        ((1, 1, 1), "p*cc*pp"),
        ((1, 0, 2), "p*pp^2"),
        ((0, 3, 0), "cc^3"),
        ((0, 2, 1), "cc^2*pp"),
        ((0, 1, 2), "cc*pp^2"),
        ((0, 0, 3), "pp^3"),
    ];
    NAMES
        .iter()
        .find(|(term, _)| *term == t)
        .map(|(_, name)| *name)
        .expect("unknown term")
}

/// Polynomial throughput model in raw (p, cc, pp) coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub kind: RegressionKind,
    /// Raw-basis coefficients in the fixed term order of [`RegressionKind`].
    #[serde(with = "numfmt::vec")]
    pub coefficients: Vec<f64>,
    #[serde(with = "numfmt")]
    pub r_squared: f64,
}

impl RegressionModel {
    /// Predicted rate, unclamped. Callers that need the model as a
    /// throughput surface clamp at zero.
    pub fn eval(&self, p: f64, cc: f64, pp: f64) -> f64 {
        terms(self.kind.degree())
            .iter()
            .zip(&self.coefficients)
            .map(|(&(a, b, c), w)| w * pw(p, a) * pw(cc, b) * pw(pp, c))
            .sum()
    }

    pub fn gradient(&self, p: f64, cc: f64, pp: f64) -> [f64; 3] {
        let mut g = [0.0; 3];
        for (&(a, b, c), w) in terms(self.kind.degree()).iter().zip(&self.coefficients) {
            if a > 0 {
                g[0] += w * a as f64 * pw(p, a - 1) * pw(cc, b) * pw(pp, c);
            }
            if b > 0 {
                g[1] += w * b as f64 * pw(p, a) * pw(cc, b - 1) * pw(pp, c);
            }
            if c > 0 {
                g[2] += w * c as f64 * pw(p, a) * pw(cc, b) * pw(pp, c - 1);
            }
        }
        g
    }

    pub fn hessian(&self, p: f64, cc: f64, pp: f64) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (&(a, b, c), w) in terms(self.kind.degree()).iter().zip(&self.coefficients) {
            let e = [a, b, c];
            let x = [p, cc, pp];
            for i in 0..3 {
                for j in i..3 {
                    let mut exp = e;
                    let mut factor = *w;
                    for axis in [i, j] {
                        if exp[axis] == 0 {
                            factor = 0.0;
                            break;
                        }
                        factor *= exp[axis] as f64;
                        exp[axis] -= 1;
                    }
                    if factor != 0.0 {
                        let v = factor
                            * pw(x[0], exp[0])
                            * pw(x[1], exp[1])
                            * pw(x[2], exp[2]);
                        h[i][j] += v;
                        if i != j {
                            h[j][i] += v;
                        }
                    }
                }
            }
        }
        h
    }
}

fn pw(x: f64, e: u32) -> f64 {
    match e {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(e as i32),
    }
}

/// Least-squares fit of `kind` through `(p, cc, pp, throughput)` samples.
///
/// Needs at least as many samples as terms. A rank-deficient design (for
/// example a parameter axis that never varies) is reported as an error
/// naming the unresolvable terms rather than silently pinning them.
pub fn fit_regression(samples: &[([f64; 3], f64)], kind: RegressionKind) -> Result<RegressionModel> {
    let term_list = terms(kind.degree());
    let k = term_list.len();
    if samples.len() < k {
        return Err(Error::Fit(format!(
            "{kind:?} regression needs at least {k} samples, got {}",
            samples.len()
        )));
    }
    // Per-axis scale to [0, max] -> [0, 1]; zero max degenerates to 1.
    let mut scale = [1.0f64; 3];
    for axis in 0..3 {
        let max = samples
            .iter()
            .map(|(x, _)| x[axis].abs())
            .fold(0.0f64, f64::max);
        scale[axis] = if max > 0.0 { 1.0 / max } else { 1.0 };
    }
    // Normal equations in the scaled basis.
    let mut gram = vec![vec![0.0f64; k]; k];
    let mut rhs = vec![0.0f64; k];
    for (x, y) in samples {
        let row: Vec<f64> = term_list
            .iter()
            .map(|&(a, b, c)| {
                pw(x[0] * scale[0], a) * pw(x[1] * scale[1], b) * pw(x[2] * scale[2], c)
            })
            .collect();
        for i in 0..k {
            for j in i..k {
                gram[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * y;
        }
    }
    for i in 0..k {
        for j in 0..i {
            gram[i][j] = gram[j][i];
        }
    }
    let solution = solve_with_pivoting(gram, rhs, &term_list)?;
    // Back to the raw monomial basis: each scaled term carries scale^exp.
    let coefficients: Vec<f64> = term_list
        .iter()
        .zip(&solution)
        .map(|(&(a, b, c), w)| w * pw(scale[0], a) * pw(scale[1], b) * pw(scale[2], c))
        .collect();
    let model = RegressionModel {
        kind,
        coefficients,
        r_squared: 0.0,
    };
    let mean_y = samples.iter().map(|(_, y)| y).sum::<f64>() / samples.len() as f64;
    let ss_tot: f64 = samples.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ss_res: f64 = samples
        .iter()
        .map(|(x, y)| (y - model.eval(x[0], x[1], x[2])).powi(2))
        .sum();
    let r_squared = if ss_tot > 1e-12 * mean_y.abs().max(1.0) {
        1.0 - ss_res / ss_tot
    } else if ss_res <= 1e-9 {
        1.0
    } else {
        0.0
    };
    Ok(RegressionModel { r_squared, ..model })
}

/// Gaussian elimination with partial pivoting; pivots below threshold mark
/// their columns as unresolvable and abort with the offending term names.
fn solve_with_pivoting(
    mut a: Vec<Vec<f64>>,
    mut b: Vec<f64>,
    term_list: &[Term],
) -> Result<Vec<f64>> {
    let k = b.len();
    let scale_ref = a
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let threshold = 1e-12 * scale_ref;
    let mut deficient = Vec::new();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[piv][col].abs() <= threshold {
            deficient.push(term_name(term_list[col]));
            continue;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..k {
            if r == col {
                continue;
            }
            let w = a[r][col] / a[col][col];
            if w != 0.0 {
                for c in col..k {
                    a[r][c] -= w * a[col][c];
                }
                b[r] -= w * b[col];
            }
        }
    }
    if !deficient.is_empty() {
        return Err(Error::RankDeficient { terms: deficient });
    }
    Ok((0..k).map(|i| b[i] / a[i][i]).collect())
}
