//! Deterministic DBSCAN over Euclidean feature space.
//!
//! Points are visited in input order. A point is core when at least
//! `min_pts` points (itself included) lie within `eps`. A border point joins
//! the first cluster whose expansion reaches it and is never reassigned.
//! Cluster ids are handed out in discovery order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DbscanError {
    #[error("eps must be positive and finite, got {0}")]
    InvalidEps(f64),
    #[error("min_pts must be at least 1")]
    InvalidMinPts,
    #[error("k = {k} needs 1 <= k < {n} points")]
    KTooLarge { k: usize, n: usize },
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("point {index} has {got} dimensions, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    pub const DEFAULT_MIN_PTS: usize = 4;

    pub fn new(eps: f64, min_pts: usize) -> Result<Self, DbscanError> {
        let p = Self { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), DbscanError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(DbscanError::InvalidEps(self.eps));
        }
        if self.min_pts == 0 {
            return Err(DbscanError::InvalidMinPts);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster_id(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(id) => Some(id),
            ClusterLabel::Noise => None,
        }
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_points<P: AsRef<[f64]>>(points: &[P]) -> Result<(), DbscanError> {
    let Some(first) = points.first() else {
        return Ok(());
    };
    let dim = first.as_ref().len();
    for (index, p) in points.iter().enumerate() {
        let p = p.as_ref();
        if p.len() != dim {
            return Err(DbscanError::DimensionMismatch {
                index,
                got: p.len(),
                expected: dim,
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(DbscanError::NonFinite(index));
        }
    }
    Ok(())
}

pub fn dbscan<P>(points: &[P], params: &DbscanParams) -> Result<Vec<ClusterLabel>, DbscanError>
where
    P: AsRef<[f64]> + Sync,
{
    params.validate()?;
    check_points(points)?;
    let eps_sq = params.eps * params.eps;
    let neighbors: Vec<Vec<usize>> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = points[i].as_ref();
            (0..points.len())
                .filter(|&j| squared_distance(p, points[j].as_ref()) <= eps_sq)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= params.min_pts).collect();

    let mut labels: Vec<Option<ClusterLabel>> = vec![None; points.len()];
    let mut next_id = 0;
    let mut queue = std::collections::VecDeque::new();
    for i in 0..points.len() {
        if labels[i].is_some() {
            continue;
        }
        if !core[i] {
            labels[i] = Some(ClusterLabel::Noise);
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[i] = Some(ClusterLabel::Cluster(id));
        queue.extend(neighbors[i].iter().copied());
        while let Some(q) = queue.pop_front() {
            match labels[q] {
                Some(ClusterLabel::Cluster(_)) => {}
                Some(ClusterLabel::Noise) => labels[q] = Some(ClusterLabel::Cluster(id)),
                None => {
                    labels[q] = Some(ClusterLabel::Cluster(id));
                    if core[q] {
                        queue.extend(neighbors[q].iter().copied());
                    }
                }
            }
        }
    }
    Ok(labels
        .into_iter()
        .map(|l| l.expect("every point visited"))
        .collect())
}

/// Distance from each point to its k-th nearest other point, sorted ascending.
pub fn k_distance_curve<P>(points: &[P], k: usize) -> Result<Vec<f64>, DbscanError>
where
    P: AsRef<[f64]> + Sync,
{
    if k == 0 || k >= points.len() {
        return Err(DbscanError::KTooLarge { k, n: points.len() });
    }
    check_points(points)?;
    let mut curve: Vec<f64> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = points[i].as_ref();
            let mut d: Vec<f64> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| squared_distance(p, points[j].as_ref()))
                .collect();
            d.select_nth_unstable_by(k - 1, f64::total_cmp);
            d[k - 1].sqrt()
        })
        .collect();
    curve.sort_by(f64::total_cmp);
    Ok(curve)
}

/// `rank,k_distance` CSV for elbow inspection.
pub fn k_distance_csv(curve: &[f64]) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("rank,k_distance\n");
    for (i, d) in curve.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", crate::numfmt::fmt_sig(*d));
    }
    out
}
