//! Lattice aggregation of observations and hole filling.
//!
//! Observations land on the integer parameter lattice spanned by the values
//! that actually occur. Each pp level forms one (p, cc) sheet; lattice cells
//! nobody sampled are filled by Jacobi-style neighbor averaging, which
//! converges to the discrete harmonic interpolant of the observed cells.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::ParamTriple;

/// Mean/std summary of the observations at one lattice point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeObservation {
    pub params: ParamTriple,
    pub mean: f64,
    pub std: f64,
    pub n: u32,
}

/// Population mean and standard deviation (1/N form).
pub(crate) fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Aggregate raw `(params, throughput)` samples into per-point summaries,
/// ordered by (cc, p, pp).
pub fn summarize_samples(samples: &[(ParamTriple, f64)]) -> Vec<LatticeObservation> {
    let mut by_point: BTreeMap<ParamTriple, Vec<f64>> = BTreeMap::new();
    for (params, th) in samples {
        by_point.entry(*params).or_default().push(*th);
    }
    by_point
        .into_iter()
        .map(|(params, ths)| {
            let (mean, std) = mean_std(&ths);
            LatticeObservation {
                params,
                mean,
                std,
                n: ths.len() as u32,
            }
        })
        .collect()
}

/// One filled (p, cc) sheet at a fixed pp level.
#[derive(Debug, Clone, PartialEq)]
pub struct SheetGrid {
    pub pp: u32,
    /// `values[p_idx][cc_idx]`, complete after hole filling.
    pub values: Vec<Vec<f64>>,
    /// Which cells held real observations.
    pub observed: Vec<Vec<bool>>,
}

/// Complete lattice for one cluster/band slice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLattice {
    pub p_axis: Vec<u32>,
    pub cc_axis: Vec<u32>,
    pub pp_knots: Vec<u32>,
    pub sheets: Vec<SheetGrid>,
    /// Fraction of lattice cells that had to be synthesized.
    pub fill_fraction: f64,
}

impl ParamLattice {
    pub fn cell_count(&self) -> usize {
        self.p_axis.len() * self.cc_axis.len() * self.pp_knots.len()
    }
}

/// Build the lattice from per-point summaries: axes are the sorted unique
/// observed values, one sheet per pp level, holes filled by neighbor
/// averaging until fixpoint.
pub fn build_grid(observations: &[LatticeObservation]) -> Result<ParamLattice> {
    if observations.is_empty() {
        return Err(Error::Fit("no observations to grid".into()));
    }
    let mut p_axis: Vec<u32> = observations.iter().map(|o| o.params.p).collect();
    let mut cc_axis: Vec<u32> = observations.iter().map(|o| o.params.cc).collect();
    let mut pp_knots: Vec<u32> = observations.iter().map(|o| o.params.pp).collect();
    for axis in [&mut p_axis, &mut cc_axis, &mut pp_knots] {
        axis.sort_unstable();
        axis.dedup();
    }
    let index_of = |axis: &[u32], v: u32| axis.binary_search(&v).expect("value on axis");
    let mut sheets = Vec::with_capacity(pp_knots.len());
    let mut holes = 0usize;
    for &pp in &pp_knots {
        let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; cc_axis.len()]; p_axis.len()];
        for o in observations.iter().filter(|o| o.params.pp == pp) {
            cells[index_of(&p_axis, o.params.p)][index_of(&cc_axis, o.params.cc)] = Some(o.mean);
        }
        holes += cells.iter().flatten().filter(|c| c.is_none()).count();
        let (values, observed) = fill_holes(cells);
        sheets.push(SheetGrid { pp, values, observed });
    }
    let total = p_axis.len() * cc_axis.len() * pp_knots.len();
    Ok(ParamLattice {
        p_axis,
        cc_axis,
        pp_knots,
        fill_fraction: holes as f64 / total as f64,
        sheets,
    })
}

/// Jacobi relaxation: every hole repeatedly becomes the mean of its valued
/// 4-neighbors until all holes have values and nothing moves more than a
/// relative 1e-9. Sweeps read the previous iteration only, so the result is
/// independent of traversal order.
fn fill_holes(cells: Vec<Vec<Option<f64>>>) -> (Vec<Vec<f64>>, Vec<Vec<bool>>) {
    let rows = cells.len();
    let cols = cells[0].len();
    let observed: Vec<Vec<bool>> = cells
        .iter()
        .map(|row| row.iter().map(|c| c.is_some()).collect())
        .collect();
    let scale = cells
        .iter()
        .flatten()
        .flatten()
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut current = cells;
    for _ in 0..10_000 {
        let mut next = current.clone();
        let mut max_delta = 0.0f64;
        let mut any_hole = false;
        for r in 0..rows {
            for c in 0..cols {
                if observed[r][c] {
                    continue;
                }
                let mut sum = 0.0;
                let mut count = 0usize;
                let mut push = |v: Option<f64>| {
                    if let Some(v) = v {
                        sum += v;
                        count += 1;
                    }
                };
                if r > 0 {
                    push(current[r - 1][c]);
                }
                if r + 1 < rows {
                    push(current[r + 1][c]);
                }
                if c > 0 {
                    push(current[r][c - 1]);
                }
                if c + 1 < cols {
                    push(current[r][c + 1]);
                }
                if count == 0 {
                    any_hole = true;
                    continue;
                }
                let fresh = sum / count as f64;
                match current[r][c] {
                    Some(old) => max_delta = max_delta.max((fresh - old).abs()),
                    None => any_hole = true,
                }
                next[r][c] = Some(fresh);
            }
        }
        current = next;
        if !any_hole && max_delta <= 1e-9 * scale {
            break;
        }
    }
    let values = current
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.expect("grid filled")).collect())
        .collect();
    (values, observed)
}
