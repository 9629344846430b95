//! Alternating fit of a structure to a color cloud: assign every color to its
//! nearest triangle, then rotate each colored vertex about the axis to the
//! angle of its cluster centroid, until the vertices stop turning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{wrap_angle, LinearColor, RADIAL_EPS};
use crate::error::{Error, Result};
use crate::geometry::{rotate_about_axis, Triangle3, Vec3};
use crate::structure::{assign, assign_triangles, Assignment, TriangularStructure, ANGLE_SEPARATION};

const CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Convergence threshold on the largest per-iteration vertex rotation, in
    /// radians.
    pub angle_tol: f64,
    /// Clusters smaller than this keep their angle for the iteration.
    pub min_cluster_size: usize,
    /// Fit on every `stride`-th color only.
    pub stride: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_iters: 100, angle_tol: 1e-4, min_cluster_size: 1, stride: 1 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.angle_tol.is_nan() || self.angle_tol <= 0.0 {
            return Err(Error::InvalidConfig("angle_tol must be positive".into()));
        }
        if self.stride < 1 {
            return Err(Error::InvalidConfig("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Objective of the previous assignment under the rotated structure, and of
/// the fresh assignment that replaced it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignStep {
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    /// Sum of squared color-to-triangle distances over the full cloud.
    pub final_objective: f64,
    /// Objective after each assignment step, on the fitted subsample.
    pub objective_trace: Vec<f64>,
    pub assign_steps: Vec<AssignStep>,
    pub converged: bool,
    /// Largest vertex rotation called for by the last iteration, radians.
    /// On convergence this final sub-tolerance turn is not applied.
    pub last_angle_delta: f64,
}

#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub structure: TriangularStructure,
    pub assignment: Assignment,
    pub report: FitReport,
}

pub fn fit(cloud: &[LinearColor], init: &TriangularStructure, cfg: &FitConfig) -> Result<FitOutcome> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    cfg.validate()?;

    let sample: Vec<LinearColor>;
    let sample: &[LinearColor] = if cfg.stride > 1 {
        sample = cloud.iter().step_by(cfg.stride).copied().collect();
        &sample
    } else {
        cloud
    };

    let axis = *init.axis();
    let mut vertices: Vec<LinearColor> = init.colored().to_vec();
    let mut trace = Vec::new();
    let mut assign_steps = Vec::new();
    let mut previous: Option<Vec<u32>> = None;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_delta = 0.0;

    for iter in 1..=cfg.max_iters {
        iterations = iter;
        let triangles = triangles_of(&axis, &vertices);
        let labels = assign_triangles(sample, &triangles);
        let after = objective_of(sample, &triangles, &labels);
        if let Some(prev) = previous.take() {
            let before = objective_of(sample, &triangles, &prev);
            assign_steps.push(AssignStep { before, after });
        }
        trace.push(after);

        let (sums, counts) = cluster_sums(sample, &labels, vertices.len());
        let mut deltas = vec![0.0; vertices.len()];
        let current: Vec<f64> = vertices.iter().map(|&v| axis.to_cylindrical(v).theta).collect();
        let mut next = current.clone();
        for i in 0..vertices.len() {
            if counts[i] == 0 || counts[i] < cfg.min_cluster_size {
                continue;
            }
            let centroid = sums[i] / counts[i] as f64;
            let cc = axis.to_cylindrical(centroid.into());
            if cc.r < RADIAL_EPS {
                continue;
            }
            let delta = wrap_angle(cc.theta - current[i]);
            let candidate = current[i] + delta;
            let clashes = next
                .iter()
                .enumerate()
                .any(|(j, &other)| j != i && wrap_angle(candidate - other).abs() < ANGLE_SEPARATION);
            if clashes {
                continue;
            }
            deltas[i] = delta;
            next[i] = candidate;
        }
        last_delta = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if last_delta < cfg.angle_tol {
            // Stop before the sub-tolerance turn, so refitting the result
            // reproduces this assignment and leaves every angle in place.
            converged = true;
            break;
        }
        for (v, &d) in vertices.iter_mut().zip(&deltas) {
            if d != 0.0 {
                *v = rotate_about_axis((*v).into(), &axis, d).into();
            }
        }
        // Keep the working order equal to the order of the returned
        // structure, which tie-breaking during assignment depends on.
        let mut order: Vec<usize> = (0..vertices.len()).collect();
        let thetas: Vec<f64> = vertices.iter().map(|&v| axis.to_cylindrical(v).theta).collect();
        order.sort_by(|&x, &y| thetas[x].total_cmp(&thetas[y]));
        let mut labels = labels;
        if order.iter().enumerate().any(|(n, &o)| n != o) {
            let mut rank = vec![0u32; order.len()];
            for (n, &o) in order.iter().enumerate() {
                rank[o] = n as u32;
            }
            vertices = order.iter().map(|&o| vertices[o]).collect();
            labels.iter_mut().for_each(|l| *l = rank[*l as usize]);
        }
        previous = Some(labels);
    }

    let structure = TriangularStructure::new(axis, vertices)?;
    let assignment = assign(cloud, &structure);
    let final_objective = objective(cloud, &structure, &assignment)?;
    Ok(FitOutcome {
        structure,
        assignment,
        report: FitReport {
            iterations,
            final_objective,
            objective_trace: trace,
            assign_steps,
            converged,
            last_angle_delta: last_delta,
        },
    })
}

/// Sum of squared distances from each color to its assigned triangle.
pub fn objective(cloud: &[LinearColor], s: &TriangularStructure, asg: &Assignment) -> Result<f64> {
    if asg.len() != cloud.len() {
        return Err(Error::LengthMismatch { expected: cloud.len(), actual: asg.len() });
    }
    Ok(objective_of(cloud, s.triangles(), asg.indices()))
}

fn triangles_of(axis: &crate::color::IlluminantAxis, vertices: &[LinearColor]) -> Vec<Triangle3> {
    vertices.iter().map(|&v| Triangle3::new(axis.a().into(), axis.b().into(), v.into())).collect()
}

// Per-chunk partial sums are combined in chunk order, so the result does not
// depend on the number of worker threads.
fn objective_of(cloud: &[LinearColor], triangles: &[Triangle3], labels: &[u32]) -> f64 {
    let partials: Vec<f64> = cloud
        .par_chunks(CHUNK)
        .zip(labels.par_chunks(CHUNK))
        .map(|(colors, idx)| {
            colors
                .iter()
                .zip(idx)
                .map(|(&c, &i)| triangles[i as usize].distance_squared(c.into()))
                .sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

fn cluster_sums(cloud: &[LinearColor], labels: &[u32], k: usize) -> (Vec<Vec3>, Vec<usize>) {
    let partials: Vec<(Vec<Vec3>, Vec<usize>)> = cloud
        .par_chunks(CHUNK)
        .zip(labels.par_chunks(CHUNK))
        .map(|(colors, idx)| {
            let mut sums = vec![Vec3::ZERO; k];
            let mut counts = vec![0usize; k];
            for (&c, &i) in colors.iter().zip(idx) {
                sums[i as usize] += c.into();
                counts[i as usize] += 1;
            }
            (sums, counts)
        })
        .collect();
    let mut sums = vec![Vec3::ZERO; k];
    let mut counts = vec![0usize; k];
    for (s, c) in partials {
        for i in 0..k {
            sums[i] += s[i];
            counts[i] += c[i];
        }
    }
    (sums, counts)
}
