//! Evaluation metrics: interpenetration volume and depth, contact ratio,
//! wrist-trajectory diversity, guidance adherence, feature-space diversity
//! and multimodality, and a nearest-centroid action classifier over
//! handcrafted motion features.
//!
//! All sequence metrics operate in canonical coordinates; the hand geometry
//! comes from the capsule-style surface proxy of the hand model.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{closest_point, contains, signed_distance, TriangleMesh};
use crate::guidance::GraspReference;
use crate::hand::{surface_points, HandShape};
use crate::math::{vec3, Vec3};
use crate::repr::SequenceSample;
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Default contact threshold (meters) for the contact ratio.
pub const CONTACT_THRESHOLD: f64 = 0.005;
/// Default wrist-displacement threshold (meters) for handedness accuracy.
pub const MOVE_THRESHOLD: f64 = 0.05;

/// Aggregated evaluation results for a batch of sequences.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricsReport {
    /// Interpenetration volume, cm^3 (mean over frames, then batch).
    pub iv_cm3: f64,
    /// Maximum interpenetration depth, mm.
    pub id_mm: f64,
    /// Contact ratio in [0, 1].
    pub cr: f64,
    /// Sample diversity (m), mean pairwise wrist-trajectory distance within
    /// repeated samples of one condition.
    pub sd_m: Option<f64>,
    /// Overall diversity (m) across all samples.
    pub od_m: Option<f64>,
    /// Grasp error (m) against references.
    pub ge_m: Option<f64>,
    /// Handedness accuracy in [0, 1].
    pub ha: Option<f64>,
    /// Wrist speed (m/s) at the grasp-to-interaction transition.
    pub t_vel: Option<f64>,
    pub div: f64,
    pub div_std: f64,
    pub mm: f64,
    pub mm_std: f64,
    pub action_correctness: Option<f64>,
}

/// Per-frame hand proxy spheres in object-local coordinates.
fn proxy_in_object_frame(
    sample: &SequenceSample,
    left_shape: &HandShape,
    right_shape: &HandShape,
    frame: usize,
    density: usize,
) -> Result<Vec<(Vec3, f64)>> {
    let obj_inv = sample.object_transform(frame)?.inverse();
    let mut out = Vec::new();
    for (track, shape) in [(&sample.left, left_shape), (&sample.right, right_shape)] {
        let pose = track.pose_at(frame);
        for (p, r) in surface_points(shape, &pose, density)? {
            out.push((obj_inv.apply(p), r));
        }
    }
    Ok(out)
}

/// Interpenetration volume (cm^3, mean over frames) and maximum

/// interpenetration depth (mm) of the hand proxy against the posed object.
///
/// IV voxelizes the union of proxy spheres at `voxel_m` resolution in the
/// object frame and counts voxel centers inside the mesh. The depth of a
/// proxy sphere with center distance `d` (signed) and radius `r` is
/// `max(0, r - d)`, the depth of its deepest surface point, so IV and ID
/// detect the same penetration set.
pub fn interpenetration(
    sample: &SequenceSample,
    mesh: &TriangleMesh,
    left_shape: &HandShape,
    right_shape: &HandShape,
    voxel_m: f64,
    density: usize,
) -> Result<(f64, f64)> {
    if !mesh.watertight() {
        return Err(Error::SignUndefined);
    }
    let aabb = mesh.aabb();
    let mut volume_sum = 0.0;
    let mut max_depth: f64 = 0.0;
    for frame in 0..sample.n_frames {
        let spheres = proxy_in_object_frame(sample, left_shape, right_shape, frame, density)?;
        // depth from signed distances at the sphere centers
        let mut candidates: BTreeSet<(i64, i64, i64)> = BTreeSet::new();
        for &(c, r) in &spheres {
            let near = aabb.distance_sq(c) <= r * r;
            if !near {
                continue;
            }
            let d = signed_distance(mesh, c)?;
            max_depth = max_depth.max(r - d);
            // collect voxel candidates inside this sphere
            let lo = |v: f64| libm::floor((v - r) / voxel_m) as i64;
            let hi = |v: f64| libm::floor((v + r) / voxel_m) as i64;
            for ix in lo(c.x)..=hi(c.x) {
                for iy in lo(c.y)..=hi(c.y) {
                    for iz in lo(c.z)..=hi(c.z) {
                        let center = vec3(
                            (ix as f64 + 0.5) * voxel_m,
                            (iy as f64 + 0.5) * voxel_m,
                            (iz as f64 + 0.5) * voxel_m,
                        );
                        if (center - c).norm_sq() <= r * r {
                            candidates.insert((ix, iy, iz));
                        }
                    }
                }
            }
        }
        let mut count = 0usize;
        for &(ix, iy, iz) in &candidates {
            let center = vec3(
                (ix as f64 + 0.5) * voxel_m,
                (iy as f64 + 0.5) * voxel_m,
                (iz as f64 + 0.5) * voxel_m,
            );
            if aabb.distance_sq(center) > 0.0 {
                continue;
            }
            if contains(mesh, center)? {
                count += 1;
            }
        }
        volume_sum += count as f64 * voxel_m * voxel_m * voxel_m;
    }
    let iv_m3 = volume_sum / sample.n_frames as f64;
    Ok((iv_m3 * 1e6, max_depth.max(0.0) * 1e3))
}

/// Mean over frames of the fraction of proxy points within
/// `threshold_m` of the object surface (unsigned distance).
pub fn contact_ratio(
    sample: &SequenceSample,
    mesh: &TriangleMesh,
    left_shape: &HandShape,
    right_shape: &HandShape,
    density: usize,
    threshold_m: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for frame in 0..sample.n_frames {
        let spheres = proxy_in_object_frame(sample, left_shape, right_shape, frame, density)?;
        let mut hits = 0usize;
        for &(c, _r) in &spheres {
            let d = closest_point(mesh, c)?.distance;
            if d <= threshold_m {
                hits += 1;
            }
        }
        total += hits as f64 / spheres.len() as f64;
    }
    Ok(total / sample.n_frames as f64)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    libm::sqrt(
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum(),
    )
}

fn mean_pairwise(vs: &[Vec<f64>]) -> f64 {
    let n = vs.len();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += euclidean(&vs[i], &vs[j]);
            count += 1;
        }
    }
    sum / count as f64
}

/// Sample diversity: mean over conditions of the mean pairwise distance
/// between the wrist-trajectory vectors of that condition's samples.
pub fn sample_diversity(groups: &[Vec<Vec<f64>>]) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut sum = 0.0;
    for g in groups {
        if g.len() < 2 {
            return Err(Error::SingleSamplePerCondition);
        }
        sum += mean_pairwise(g);
    }
    Ok(sum / groups.len() as f64)
}

/// Overall diversity: mean pairwise distance across all samples.
pub fn overall_diversity(all: &[Vec<f64>]) -> Result<f64> {
    if all.len() < 2 {
        return Err(Error::SingleSamplePerCondition);
    }
    Ok(mean_pairwise(all))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GuidanceMetrics {
    pub ge_m: f64,
    pub ha: f64,
    pub t_vel: f64,
}

/// Grasp error, handedness accuracy, and transition wrist speed.
///
/// GE is the mean wrist-position error at the final grasp frame over the
/// reference's active hands. HA checks that the set of hands moving more
/// than `move_threshold` during the grasp stage equals the active set.
/// T_vel takes, per wrist, the larger of the two one-step speeds around the
/// boundary (frames `n_g-1..n_g+1`), then averages over both wrists.
pub fn guidance_metrics(
    batch: &[SequenceSample],
    refs: &[GraspReference],
    n_grasp: usize,
    move_threshold: f64,
) -> Result<GuidanceMetrics> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.len() != refs.len() {
        return Err(Error::ShapeMismatch {
            field: "refs",
            expected: batch.len(),
            got: refs.len(),
        });
    }
    let mut ge_sum = 0.0;
    let mut ha_sum = 0.0;
    let mut tv_sum = 0.0;
    for (sample, reference) in batch.iter().zip(refs.iter()) {
        reference.validate()?;
        if n_grasp == 0 || n_grasp + 1 >= sample.n_frames {
            return Err(Error::ShapeMismatch {
                field: "n_grasp",
                expected: sample.n_frames,
                got: n_grasp,
            });
        }
        let (mut err, mut active) = (0.0, 0usize);
        if let Some(p) = &reference.left {
            err += sample.left.tau[n_grasp - 1].distance(p.tau);
            active += 1;
        }
        if let Some(p) = &reference.right {
            err += sample.right.tau[n_grasp - 1].distance(p.tau);
            active += 1;
        }
        ge_sum += err / active as f64;

        let moving = |track: &crate::repr::HandTrack| {
            (0..n_grasp)
                .map(|i| track.tau[i].distance(track.tau[0]))
                .fold(0.0, f64::max)
                > move_threshold
        };
        let moved = (moving(&sample.left), moving(&sample.right));
        let expected = reference.active();
        ha_sum += if moved == expected { 1.0 } else { 0.0 };

        let dt = 1.0 / sample.frame_rate;
        let mut wrist_speed = 0.0;
        for track in [&sample.left, &sample.right] {
            let s1 = track.tau[n_grasp].distance(track.tau[n_grasp - 1]) / dt;
            let s2 = track.tau[n_grasp + 1].distance(track.tau[n_grasp]) / dt;
            wrist_speed += s1.max(s2);
        }
        tv_sum += wrist_speed / 2.0;
    }
    let n = batch.len() as f64;
    Ok(GuidanceMetrics {
        ge_m: ge_sum / n,
        ha: ha_sum / n,
        t_vel: tv_sum / n,
    })
}

/// Handcrafted 48-dim motion feature of one sequence.
///
/// Layout:
/// - 0..3   left wrist: net displacement, path length, max displacement
/// - 3..6   right wrist: same
/// - 6..9   object net displacement (x, y, z components)
/// - 9..12  object displacement: net norm, path length, max norm
/// - 12..15 object rotation: net angle, max angle, rotation path length
/// - 15..18 left wrist-to-object-center distance: min, mean, final
/// - 18..21 right: same
/// - 21..24 left wrist speed histogram (3 bins)
/// - 24..27 right wrist speed histogram
/// - 27..36 object velocity histograms per axis (|vx|, |vy|, |vz|)
/// - 36..39 object speed histogram
/// - 39..42 left wrist |vz| histogram
/// - 42..45 right wrist |vz| histogram
/// - 45..48 object rotation speed histogram
pub const FEATURE_DIM: usize = 48;

const SPEED_EDGES: [f64; 2] = [0.02, 0.12];
const ROT_SPEED_EDGES: [f64; 2] = [0.2, 1.0];

fn histogram3(values: impl Iterator<Item = f64>, edges: [f64; 2], out: &mut [f64]) {
    let mut counts = [0.0; 3];
    let mut n = 0usize;
    for v in values {
        let bin = if v < edges[0] {
            0
        } else if v < edges[1] {
            1
        } else {
            2
        };
        counts[bin] += 1.0;
        n += 1;
    }
    if n > 0 {
        for (o, c) in out.iter_mut().zip(counts.iter()) {
            *o = c / n as f64;
        }
    }
}

fn displacement_stats(track: &[Vec3], out: &mut [f64]) {
    let n = track.len();
    out[0] = track[n - 1].distance(track[0]);
    out[1] = (1..n).map(|i| track[i].distance(track[i - 1])).sum();
    out[2] = (0..n)
        .map(|i| track[i].distance(track[0]))
        .fold(0.0, f64::max);
}

/// Pure function of the sequence; used by the action classifier and the
/// diversity/multimodality metrics.
pub fn handcrafted_feature(sample: &SequenceSample) -> Result<Vec<f64>> {
    let n = sample.n_frames;
    if n < 2 {
        return Err(Error::EmptyBatch);
    }
    let dt = 1.0 / sample.frame_rate;
    let mut f = vec![0.0; FEATURE_DIM];

    displacement_stats(&sample.left.tau, &mut f[0..3]);
    displacement_stats(&sample.right.tau, &mut f[3..6]);

    let obj = &sample.object.tau;
    let net = obj[n - 1] - obj[0];
    f[6] = net.x;
    f[7] = net.y;
    f[8] = net.z;
    displacement_stats(obj, &mut f[9..12]);

    let r0 = sample.object.phi[0].to_matrix()?;
    let mut prev = r0;
    let mut rot_path = 0.0;
    let mut max_angle: f64 = 0.0;
    let mut rot_speeds = Vec::with_capacity(n - 1);
    for i in 1..n {
        let ri = sample.object.phi[i].to_matrix()?;
        let step = prev.angle_to(&ri);
        rot_path += step;
        rot_speeds.push(step / dt);
        max_angle = max_angle.max(r0.angle_to(&ri));
        prev = ri;
    }
    f[12] = r0.angle_to(&sample.object.phi[n - 1].to_matrix()?);
    f[13] = max_angle;
    f[14] = rot_path;

    for (base, track) in [(15usize, &sample.left.tau), (18, &sample.right.tau)] {
        let dists: Vec<f64> = (0..n).map(|i| track[i].distance(obj[i])).collect();
        f[base] = dists.iter().cloned().fold(f64::INFINITY, f64::min);
        f[base + 1] = dists.iter().sum::<f64>() / n as f64;
        f[base + 2] = dists[n - 1];
    }

    let speeds = |track: &[Vec3]| {
        let dt = dt;
        (1..track.len())
            .map(move |i| track[i].distance(track[i - 1]) / dt)
            .collect::<Vec<f64>>()
    };
    histogram3(speeds(&sample.left.tau).into_iter(), SPEED_EDGES, &mut f[21..24]);
    histogram3(speeds(&sample.right.tau).into_iter(), SPEED_EDGES, &mut f[24..27]);
    for (axis, base) in [(0usize, 27usize), (1, 30), (2, 33)] {
        let vals = (1..n).map(|i| {
            let d = obj[i] - obj[i - 1];
            let c = match axis {
                0 => d.x,
                1 => d.y,
                _ => d.z,
            };
            c.abs() / dt
        });
        histogram3(vals, SPEED_EDGES, &mut f[base..base + 3]);
    }
    histogram3(speeds(obj).into_iter(), SPEED_EDGES, &mut f[36..39]);
    for (track, base) in [(&sample.left.tau, 39usize), (&sample.right.tau, 42)] {
        let vals = (1..n).map(|i| (track[i].z - track[i - 1].z).abs() / dt);
        histogram3(vals, SPEED_EDGES, &mut f[base..base + 3]);
    }
    histogram3(rot_speeds.into_iter(), ROT_SPEED_EDGES, &mut f[45..48]);
    Ok(f)
}

/// Nearest-centroid classifier over z-scored handcrafted features.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CentroidClassifier {
    pub labels: Vec<String>,
    centroids: Vec<Vec<f64>>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl CentroidClassifier {
    pub fn fit(features: &[Vec<f64>], labels: &[String]) -> Result<CentroidClassifier> {
        if features.is_empty() || features.len() != labels.len() {
            return Err(Error::EmptyDataset);
        }
        let dim = features[0].len();
        let n = features.len() as f64;
        let mut mean = vec![0.0; dim];
        for f in features {
            for (m, v) in mean.iter_mut().zip(f.iter()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for f in features {
            for ((s, m), v) in var.iter_mut().zip(mean.iter()).zip(f.iter()) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std: Vec<f64> = var
            .into_iter()
            .map(|v| {
                let s = libm::sqrt(v / n);
                if s < 1e-9 {
                    1.0
                } else {
                    s
                }
            })
            .collect();

        let mut class_labels: Vec<String> = Vec::new();
        for l in labels {
            if !class_labels.contains(l) {
                class_labels.push(l.clone());
            }
        }
        class_labels.sort();
        let mut centroids = vec![vec![0.0; dim]; class_labels.len()];
        let mut counts = vec![0usize; class_labels.len()];
        for (f, l) in features.iter().zip(labels.iter()) {
            let k = class_labels.iter().position(|c| c == l).unwrap();
            counts[k] += 1;
            for (c, (v, (m, s))) in centroids[k]
                .iter_mut()
                .zip(f.iter().zip(mean.iter().zip(std.iter())))
            {
                *c += (v - m) / s;
            }
        }
        for (c, k) in centroids.iter_mut().zip(counts.iter()) {
            for v in c.iter_mut() {
                *v /= *k as f64;
            }
        }
        Ok(CentroidClassifier {
            labels: class_labels,
            centroids,
            mean,
            std,
        })
    }

    pub fn predict(&self, feature: &[f64]) -> &str {
        let z: Vec<f64> = feature
            .iter()
            .zip(self.mean.iter().zip(self.std.iter()))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.centroids.iter().enumerate() {
            let d = euclidean(&z, c);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        &self.labels[best]
    }
}

/// Fraction of sequences whose predicted action equals the prompted one.
pub fn action_correctness(
    classifier: &CentroidClassifier,
    features: &[Vec<f64>],
    prompted: &[String],
) -> Result<f64> {
    if features.is_empty() || features.len() != prompted.len() {
        return Err(Error::EmptyBatch);
    }
    let correct = features
        .iter()
        .zip(prompted.iter())
        .filter(|(f, p)| classifier.predict(f) == p.as_str())
        .count();
    Ok(correct as f64 / features.len() as f64)
}

/// Subset-based diversity and multimodality over feature vectors.
///
/// DIV draws two subsets of size `subset_n` across all classes and averages
/// `|v_i - v'_i|`; MM does the same within each class and averages over
/// classes. Both are repeated `reps` times; the mean and standard deviation
/// over repetitions are returned. Draws are without replacement when enough
/// samples exist, with replacement otherwise.
pub fn diversity_multimodality(
    features: &[Vec<f64>],
    labels: &[String],
    subset_n: usize,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64, f64, f64)> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::EmptyBatch);
    }
    let mut classes: Vec<String> = Vec::new();
    for l in labels {
        if !classes.contains(l) {
            classes.push(l.clone());
        }
    }
    classes.sort();
    let by_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|c| {
            (0..labels.len())
                .filter(|i| &labels[*i] == c)
                .collect::<Vec<usize>>()
        })
        .collect();
    if by_class.iter().any(|c| c.is_empty()) {
        return Err(Error::EmptyBatch);
    }

    let draw = |r: &mut rand_chacha::ChaCha8Rng, pool: &[usize], n: usize| -> Vec<usize> {
        if pool.len() >= n {
            // partial Fisher-Yates without replacement
            let mut idx: Vec<usize> = pool.to_vec();
            for i in 0..n {
                let j = i + rng::uniform_usize(r, idx.len() - i);
                idx.swap(i, j);
            }
            idx.truncate(n);
            idx
        } else {
            (0..n)
                .map(|_| pool[rng::uniform_usize(r, pool.len())])
                .collect()
        }
    };

    let all: Vec<usize> = (0..features.len()).collect();
    let mut div_values = Vec::with_capacity(reps);
    let mut mm_values = Vec::with_capacity(reps);
    for rep in 0..reps {
        let mut r = rng::chacha(seed, &[0x646976, rep as u64]);
        let a = draw(&mut r, &all, subset_n);
        let b = draw(&mut r, &all, subset_n);
        let div = a
            .iter()
            .zip(b.iter())
            .map(|(i, j)| euclidean(&features[*i], &features[*j]))
            .sum::<f64>()
            / subset_n as f64;
        div_values.push(div);

        let mut mm_sum = 0.0;
        for pool in &by_class {
            let a = draw(&mut r, pool, subset_n);
            let b = draw(&mut r, pool, subset_n);
            mm_sum += a
                .iter()
                .zip(b.iter())
                .map(|(i, j)| euclidean(&features[*i], &features[*j]))
                .sum::<f64>()
                / subset_n as f64;
        }
        mm_values.push(mm_sum / by_class.len() as f64);
    }
    let stats = |vs: &[f64]| {
        let m = vs.iter().sum::<f64>() / vs.len() as f64;
        let var = vs.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vs.len() as f64;
        (m, libm::sqrt(var))
    };
    let (div, div_std) = stats(&div_values);
    let (mm, mm_std) = stats(&mm_values);
    Ok((div, div_std, mm, mm_std))
}
