//! Bicubic interpolation over a complete rectangular grid.
//!
//! The surface is the tensor product of one-dimensional relaxed cubic
//! splines: knot second derivatives are extracted along rows, along columns,
//! and along rows of the column result (the two orders commute), and each
//! grid rectangle then carries an explicit 4x4 local coefficient block. The
//! result interpolates every vertex, is C2 across shared rectangle edges,
//! and has zero second derivative normal to the outer boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt;

use super::spline::locate;

/// Value plus first and second partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxx: f64,
    pub fxy: f64,
    pub fyy: f64,
}

/// Bicubic spline surface on the grid `x_knots` x `y_knots`.
///
/// `values[i][j]` is the sample at `(x_knots[i], y_knots[j])`. Cell `(i, j)`
/// covers `[x_i, x_{i+1}] x [y_j, y_{j+1}]` and evaluates as
/// `sum K[a][b] s^a t^b` with `s = x - x_i`, `t = y - y_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BicubicRepr", into = "BicubicRepr")]
pub struct BicubicGridSurface {
    x_knots: Vec<f64>,
    y_knots: Vec<f64>,
    values: Vec<Vec<f64>>,
    d2x: Vec<Vec<f64>>,
    d2y: Vec<Vec<f64>>,
    d2xy: Vec<Vec<f64>>,
    blocks: Vec<[[f64; 4]; 4]>,
}

impl BicubicGridSurface {
    /// Fit a complete grid. Requires at least 3 knots per axis, strictly
    /// increasing, and a full `values` matrix.
    pub fn fit(x_knots: Vec<f64>, y_knots: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = x_knots.len();
        let m = y_knots.len();
        if n < 3 || m < 3 {
            return Err(Error::Fit(format!(
                "bicubic fit needs a grid of at least 3x3 knots, got {n}x{m}"
            )));
        }
        for knots in [&x_knots, &y_knots] {
            if !knots.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::Fit("bicubic knots must be strictly increasing".into()));
            }
        }
        if values.len() != n || values.iter().any(|row| row.len() != m) {
            return Err(Error::Fit("bicubic value matrix does not match the grid".into()));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Fit("bicubic fit given non-finite values".into()));
        }
        let (d2x, d2y, d2xy) = second_derivative_fields(&x_knots, &y_knots, &values);
        let blocks = assemble_blocks(&x_knots, &y_knots, &values, &d2x, &d2y, &d2xy);
        Ok(BicubicGridSurface {
            x_knots,
            y_knots,
            values,
            d2x,
            d2y,
            d2xy,
            blocks,
        })
    }

    /// Rebuild from persisted parts; derivative fields are recomputed from
    /// the stored values, so a round trip is exact arithmetic replay.
    pub fn from_values(
        x_knots: Vec<f64>,
        y_knots: Vec<f64>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        Self::fit(x_knots, y_knots, values)
    }

    pub fn x_knots(&self) -> &[f64] {
        &self.x_knots
    }

    pub fn y_knots(&self) -> &[f64] {
        &self.y_knots
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    fn cell(&self, x: f64, y: f64) -> (usize, usize) {
        (locate(&self.x_knots, x), locate(&self.y_knots, y))
    }

    fn block(&self, i: usize, j: usize) -> &[[f64; 4]; 4] {
        &self.blocks[i * (self.y_knots.len() - 1) + j]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i, j) = self.cell(x, y);
        let k = self.block(i, j);
        let s = x - self.x_knots[i];
        let t = y - self.y_knots[j];
        let sp = [1.0, s, s * s, s * s * s];
        let tp = [1.0, t, t * t, t * t * t];
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                acc += k[a][b] * sp[a] * tp[b];
            }
        }
        acc
    }

    /// Value and all partials up to second order at `(x, y)`. At a knot line
    /// the left-closed cell convention decides which polynomial is used.
    pub fn jet2(&self, x: f64, y: f64) -> Jet2 {
        let (i, j) = self.cell(x, y);
        let k = self.block(i, j);
        let s = x - self.x_knots[i];
        let t = y - self.y_knots[j];
        let sp = [1.0, s, s * s, s * s * s];
        let tp = [1.0, t, t * t, t * t * t];
        let dsp = [0.0, 1.0, 2.0 * s, 3.0 * s * s];
        let dtp = [0.0, 1.0, 2.0 * t, 3.0 * t * t];
        let d2sp = [0.0, 0.0, 2.0, 6.0 * s];
        let d2tp = [0.0, 0.0, 2.0, 6.0 * t];
        let mut jet = Jet2 {
            f: 0.0,
            fx: 0.0,
            fy: 0.0,
            fxx: 0.0,
            fxy: 0.0,
            fyy: 0.0,
        };
        for a in 0..4 {
            for b in 0..4 {
                let c = k[a][b];
                jet.f += c * sp[a] * tp[b];
                jet.fx += c * dsp[a] * tp[b];
                jet.fy += c * sp[a] * dtp[b];
                jet.fxx += c * d2sp[a] * tp[b];
                jet.fxy += c * dsp[a] * dtp[b];
                jet.fyy += c * sp[a] * d2tp[b];
            }
        }
        jet
    }
}

/// Row-major field of values over the knot grid.
type Field = Vec<Vec<f64>>;

/// Solve the natural-spline tridiagonal system along every column (d2x),
/// every row (d2y), and along rows of d2x (the cross field).
fn second_derivative_fields(
    x_knots: &[f64],
    y_knots: &[f64],
    values: &[Vec<f64>],
) -> (Field, Field, Field) {
    let n = x_knots.len();
    let m = y_knots.len();
    let mut d2x = vec![vec![0.0; m]; n];
    for j in 0..m {
        let col: Vec<f64> = (0..n).map(|i| values[i][j]).collect();
        let ms = super::spline::CubicSpline1D::from_knots(x_knots.to_vec(), col);
        for i in 0..n {
            d2x[i][j] = ms.second_derivatives()[i];
        }
    }
    let mut d2y = vec![vec![0.0; m]; n];
    for i in 0..n {
        let ms = super::spline::CubicSpline1D::from_knots(y_knots.to_vec(), values[i].clone());
        d2y[i].copy_from_slice(ms.second_derivatives());
    }
    let mut d2xy = vec![vec![0.0; m]; n];
    for i in 0..n {
        let ms = super::spline::CubicSpline1D::from_knots(y_knots.to_vec(), d2x[i].clone());
        d2xy[i].copy_from_slice(ms.second_derivatives());
    }
    (d2x, d2y, d2xy)
}

/// Expand the Hermite-style corner data of each rectangle into a local
/// monomial coefficient block.
fn assemble_blocks(
    x_knots: &[f64],
    y_knots: &[f64],
    values: &[Vec<f64>],
    d2x: &[Vec<f64>],
    d2y: &[Vec<f64>],
    d2xy: &[Vec<f64>],
) -> Vec<[[f64; 4]; 4]> {
    let n = x_knots.len();
    let m = y_knots.len();
    let mut blocks = Vec::with_capacity((n - 1) * (m - 1));
    for i in 0..n - 1 {
        let hx = x_knots[i + 1] - x_knots[i];
        let sx = basis_polys(hx);
        for j in 0..m - 1 {
            let hy = y_knots[j + 1] - y_knots[j];
            let sy = basis_polys(hy);
            let mut k = [[0.0f64; 4]; 4];
            for u in 0..2 {
                for v in 0..2 {
                    let z = values[i + u][j + v];
                    let mx = d2x[i + u][j + v];
                    let my = d2y[i + u][j + v];
                    let mxy = d2xy[i + u][j + v];
                    // (alpha, beta) pairs along x and y: value terms use
                    // alpha, second-derivative terms use beta.
                    for a in 0..4 {
                        for b in 0..4 {
                            k[a][b] += z * sx.alpha[u][a] * sy.alpha[v][b]
                                + mx * sx.beta[u][a] * sy.alpha[v][b]
                                + my * sx.alpha[u][a] * sy.beta[v][b]
                                + mxy * sx.beta[u][a] * sy.beta[v][b];
                        }
                    }
                }
            }
            blocks.push(k);
        }
    }
    blocks
}

struct BasisPolys {
    /// alpha[0], alpha[1]: linear blending of the two knot values, as
    /// monomial coefficients in the local coordinate.
    alpha: [[f64; 4]; 2],
    /// beta[0], beta[1]: curvature contributions of the two knot second
    /// derivatives.
    beta: [[f64; 4]; 2],
}

/// Monomial coefficients of the 1-D natural-spline reconstruction basis on
/// an interval of width `h`:
///   g(s) = z0*a0(s) + z1*a1(s) + M0*b0(s) + M1*b1(s).
fn basis_polys(h: f64) -> BasisPolys {
    BasisPolys {
        alpha: [[1.0, -1.0 / h, 0.0, 0.0], [0.0, 1.0 / h, 0.0, 0.0]],
        beta: [
            [0.0, -h / 3.0, 0.5, -1.0 / (6.0 * h)],
            [0.0, -h / 6.0, 0.0, 1.0 / (6.0 * h)],
        ],
    }
}

#[derive(Serialize, Deserialize)]
struct BicubicRepr {
    #[serde(with = "numfmt::vec")]
    x_knots: Vec<f64>,
    #[serde(with = "numfmt::vec")]
    y_knots: Vec<f64>,
    #[serde(with = "numfmt::vec2")]
    values: Vec<Vec<f64>>,
}

impl From<BicubicGridSurface> for BicubicRepr {
    fn from(s: BicubicGridSurface) -> Self {
        BicubicRepr {
            x_knots: s.x_knots,
            y_knots: s.y_knots,
            values: s.values,
        }
    }
}

impl TryFrom<BicubicRepr> for BicubicGridSurface {
    type Error = Error;

    fn try_from(r: BicubicRepr) -> Result<Self> {
        BicubicGridSurface::from_values(r.x_knots, r.y_knots, r.values)
    }
}
