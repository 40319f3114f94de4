//! Overlapping patch machinery: the extraction map Q, the pixel-averaging
//! synthesis map W (so that W Q = I on images), per-patch orthonormal 2-D
//! DCT, optional seeded k-means clustering, and a 1-D orthonormal DCT along
//! the patch index inside each cluster.
//!
//! Boundary policy: the last patch position on each axis is clamped inward
//! so every pixel is covered and W Q stays an exact identity.

use crate::error::{Error, Result};
use crate::image::ImagePlane;
use crate::real::{rf, Real};
use crate::rng::Rng;

/// Geometry of the overlapping patch decomposition.
#[derive(Debug, Clone)]
pub struct PatchSystem {
    patch_edge: usize,
    stride: usize,
    width: usize,
    height: usize,
    xs: Vec<usize>,
    ys: Vec<usize>,
    coverage: Vec<u32>,
}

fn axis_positions(dim: usize, edge: usize, stride: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let last = dim - edge;
    let mut p = 0;
    loop {
        if p >= last {
            v.push(last);
            break;
        }
        v.push(p);
        p += stride;
    }
    v
}

impl PatchSystem {
    pub fn new(width: usize, height: usize, patch_edge: usize, stride: usize) -> Result<Self> {
        if patch_edge == 0 || stride == 0 {
            return Err(Error::invalid("patch edge and stride must be positive"));
        }
        if patch_edge > width.min(height) {
            return Err(Error::invalid(format!(
                "patch edge {patch_edge} exceeds image dimension {}x{}",
                width, height
            )));
        }
        let xs = axis_positions(width, patch_edge, stride);
        let ys = axis_positions(height, patch_edge, stride);
        let mut coverage = vec![0u32; width * height];
        for &py in &ys {
            for &px in &xs {
                for dy in 0..patch_edge {
                    for dx in 0..patch_edge {
                        coverage[(py + dy) * width + px + dx] += 1;
                    }
                }
            }
        }
        debug_assert!(coverage.iter().all(|&c| c > 0));
        Ok(PatchSystem {
            patch_edge,
            stride,
            width,
            height,
            xs,
            ys,
            coverage,
        })
    }

    pub fn patch_edge(&self) -> usize {
        self.patch_edge
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    /// q = patch_edge^2, pixels per patch.
    pub fn patch_len(&self) -> usize {
        self.patch_edge * self.patch_edge
    }

    pub fn patch_count(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    /// Total coefficient count N_c = q * patch_count.
    pub fn coefficient_count(&self) -> usize {
        self.patch_len() * self.patch_count()
    }

    /// Number of patches covering each pixel.
    pub fn coverage_counts(&self) -> &[u32] {
        &self.coverage
    }

    /// Top-left corners in raster order.
    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ys
            .iter()
            .flat_map(move |&y| self.xs.iter().map(move |&x| (x, y)))
    }

    pub fn extract<R: Real>(&self, x: &ImagePlane<R>) -> Result<PatchStack<R>> {
        if (x.width(), x.height()) != (self.width, self.height) {
            return Err(Error::SizeMismatch(format!(
                "patch system is {}x{}, image is {}x{}",
                self.width,
                self.height,
                x.width(),
                x.height()
            )));
        }
        let e = self.patch_edge;
        let mut data = Vec::with_capacity(self.coefficient_count());
        for (px, py) in self.positions() {
            for dy in 0..e {
                for dx in 0..e {
                    data.push(x.get(px + dx, py + dy));
                }
            }
        }
        Ok(PatchStack {
            edge: e,
            n_patches: self.patch_count(),
            data,
        })
    }

    /// Each pixel becomes the mean of its copies across covering patches.
    pub fn average_synthesize<R: Real>(&self, patches: &PatchStack<R>) -> Result<ImagePlane<R>> {
        if patches.edge != self.patch_edge || patches.n_patches != self.patch_count() {
            return Err(Error::SizeMismatch(format!(
                "patch stack ({} patches, edge {}) does not fit system ({} patches, edge {})",
                patches.n_patches,
                patches.edge,
                self.patch_count(),
                self.patch_edge
            )));
        }
        let e = self.patch_edge;
        let mut acc = vec![R::zero(); self.width * self.height];
        for (idx, (px, py)) in self.positions().enumerate() {
            let patch = patches.patch(idx);
            for dy in 0..e {
                for dx in 0..e {
                    acc[(py + dy) * self.width + px + dx] += patch[dy * e + dx];
                }
            }
        }
        for (a, &c) in acc.iter_mut().zip(&self.coverage) {
            *a /= rf::<R>(c as f64);
        }
        ImagePlane::new(self.width, self.height, acc)
    }
}

/// Dense stack of patches, one contiguous q-length block per patch in
/// raster order of top-left corners.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchStack<R: Real> {
    edge: usize,
    n_patches: usize,
    data: Vec<R>,
}

impl<R: Real> PatchStack<R> {
    pub fn new(edge: usize, n_patches: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != edge * edge * n_patches {
            return Err(Error::SizeMismatch(format!(
                "patch stack data length {} != {} patches x {}",
                data.len(),
                n_patches,
                edge * edge
            )));
        }
        Ok(PatchStack { edge, n_patches, data })
    }

    pub fn edge(&self) -> usize {
        self.edge
    }

    pub fn n_patches(&self) -> usize {
        self.n_patches
    }

    pub fn patch(&self, i: usize) -> &[R] {
        let q = self.edge * self.edge;
        &self.data[i * q..(i + 1) * q]
    }

    pub fn patch_mut(&mut self, i: usize) -> &mut [R] {
        let q = self.edge * self.edge;
        &mut self.data[i * q..(i + 1) * q]
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }
}

/// Orthonormal DCT-II matrix, row-major n x n.
/// C[k][j] = c_k cos(pi (2j+1) k / (2n)), c_0 = sqrt(1/n), c_k = sqrt(2/n).
pub fn dct_matrix<R: Real>(n: usize) -> Vec<R> {
    let mut c = vec![R::zero(); n * n];
    for k in 0..n {
        let ck = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for j in 0..n {
            let angle = std::f64::consts::PI * (2 * j + 1) as f64 * k as f64 / (2.0 * n as f64);
            c[k * n + j] = rf::<R>(ck * angle.cos());
        }
    }
    c
}

/// Apply `B . p . B^T` (transpose = false) or `B^T . p . B` (transpose =
/// true) to a square patch in place, using `scratch` of the same length.
fn separable_2d<R: Real>(p: &mut [R], basis: &[R], e: usize, transpose: bool, scratch: &mut [R]) {
    let at = |k: usize, j: usize| {
        if transpose {
            basis[j * e + k]
        } else {
            basis[k * e + j]
        }
    };
    // rows: scratch = B p
    for k in 0..e {
        for col in 0..e {
            let mut s = R::zero();
            for j in 0..e {
                s += at(k, j) * p[j * e + col];
            }
            scratch[k * e + col] = s;
        }
    }
    // columns: p = scratch B^T
    for row in 0..e {
        for k in 0..e {
            let mut s = R::zero();
            for j in 0..e {
                s += scratch[row * e + j] * at(k, j);
            }
            p[row * e + k] = s;
        }
    }
}

/// Orthonormal 2-D DCT of every patch.
pub fn dct2_analyze<R: Real>(patches: &PatchStack<R>) -> PatchStack<R> {
    transform_stack(patches, false)
}

/// Inverse (DCT-III) of [`dct2_analyze`].
pub fn dct2_synthesize<R: Real>(coeffs: &PatchStack<R>) -> PatchStack<R> {
    transform_stack(coeffs, true)
}

fn transform_stack<R: Real>(patches: &PatchStack<R>, inverse: bool) -> PatchStack<R> {
    let e = patches.edge;
    let basis = dct_matrix::<R>(e);
    let mut out = patches.clone();
    let mut scratch = vec![R::zero(); e * e];
    for i in 0..out.n_patches {
        separable_2d(out.patch_mut(i), &basis, e, inverse, &mut scratch);
    }
    out
}

/// Which cluster each patch belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    n_clusters: usize,
    labels: Vec<usize>,
}

impl ClusterAssignment {
    pub fn single(n_patches: usize) -> Self {
        ClusterAssignment {
            n_clusters: 1,
            labels: vec![0; n_patches],
        }
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Patch indices per cluster, ascending within each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }
}

/// Seeded k-means on raw patch pixel vectors. `c = 1` short-circuits to the
/// trivial assignment. Fixed 20 iterations; ties and empty clusters are
/// resolved deterministically so identical seeds give identical labels.
pub fn cluster_patches<R: Real>(
    patches: &PatchStack<R>,
    c: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = patches.n_patches;
    if c == 0 {
        return Err(Error::invalid("cluster count must be at least 1"));
    }
    if c > n {
        return Err(Error::invalid(format!(
            "cannot form {c} clusters from {n} patches"
        )));
    }
    if c == 1 {
        return Ok(ClusterAssignment::single(n));
    }
    let q = patches.edge * patches.edge;
    let mut rng = Rng::new(seed);
    let init = rng.sample_distinct(0, n, c);
    let mut centroids: Vec<Vec<R>> = init.iter().map(|&i| patches.patch(i).to_vec()).collect();
    let mut labels = vec![0usize; n];

    let dist2 = |a: &[R], b: &[R]| -> R {
        let mut s = R::zero();
        for (x, y) in a.iter().zip(b) {
            let d = *x - *y;
            s += d * d;
        }
        s
    };

    for _ in 0..20 {
        // assign (ties -> lowest cluster index)
        for (i, label) in labels.iter_mut().enumerate() {
            let p = patches.patch(i);
            let mut best = 0;
            let mut best_d = dist2(p, &centroids[0]);
            for (k, cent) in centroids.iter().enumerate().skip(1) {
                let d = dist2(p, cent);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            *label = best;
        }
        // update
        let mut sums = vec![vec![R::zero(); q]; c];
        let mut counts = vec![0usize; c];
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, &v) in sums[l].iter_mut().zip(patches.patch(i)) {
                *s += v;
            }
        }
        for k in 0..c {
            if counts[k] == 0 {
                // refill with the patch farthest from its own centroid
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dist2(patches.patch(a), &centroids[labels[a]]);
                        let db = dist2(patches.patch(b), &centroids[labels[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[k] = patches.patch(far).to_vec();
                labels[far] = k;
                counts[k] = 1;
            } else {
                let inv = R::one() / rf::<R>(counts[k] as f64);
                for (cent, s) in centroids[k].iter_mut().zip(&sums[k]) {
                    *cent = *s * inv;
                }
            }
        }
    }
    // final assignment pass so labels match the returned centroids
    for (i, label) in labels.iter_mut().enumerate() {
        let p = patches.patch(i);
        let mut best = 0;
        let mut best_d = dist2(p, &centroids[0]);
        for (k, cent) in centroids.iter().enumerate().skip(1) {
            let d = dist2(p, cent);
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        *label = best;
    }
    // guarantee non-empty clusters after the final pass
    let mut counts = vec![0usize; c];
    for &l in &labels {
        counts[l] += 1;
    }
    for k in 0..c {
        if counts[k] == 0 {
            let donor = (0..n).find(|&i| counts[labels[i]] > 1).ok_or_else(|| {
                Error::invalid("cannot form non-empty clusters")
            })?;
            counts[labels[donor]] -= 1;
            labels[donor] = k;
            counts[k] = 1;
        }
    }
    Ok(ClusterAssignment {
        n_clusters: c,
        labels,
    })
}

/// Per-cluster transform coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet<R: Real> {
    /// For each cluster: member patch indices (ascending) and their
    /// coefficients, laid out member-major (q values per member).
    pub clusters: Vec<ClusterCoeffs<R>>,
    patch_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCoeffs<R: Real> {
    pub members: Vec<usize>,
    pub coeffs: Vec<R>,
}

impl<R: Real> CoefficientSet<R> {
    pub fn new(clusters: Vec<ClusterCoeffs<R>>, patch_len: usize) -> Self {
        CoefficientSet { clusters, patch_len }
    }

    pub fn total_len(&self) -> usize {
        self.clusters.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn patch_len(&self) -> usize {
        self.patch_len
    }
}

/// Apply an orthonormal DCT (or its inverse) along the member axis for each
/// of the q coefficient positions of one cluster.
fn stack_transform<R: Real>(coeffs: &mut [R], q: usize, n_members: usize, inverse: bool) {
    if n_members < 2 {
        return;
    }
    let basis = dct_matrix::<R>(n_members);
    let mut line = vec![R::zero(); n_members];
    for t in 0..q {
        for i in 0..n_members {
            line[i] = coeffs[i * q + t];
        }
        for k in 0..n_members {
            let mut s = R::zero();
            for j in 0..n_members {
                let b = if inverse {
                    basis[j * n_members + k]
                } else {
                    basis[k * n_members + j]
                };
                s += b * line[j];
            }
            coeffs[k * q + t] = s;
        }
    }
}

/// 2-D DCT per patch, then (optionally) a 1-D orthonormal DCT along the
/// patch index within each cluster. With a single cluster and
/// `stack_dct = false` this reduces to [`dct2_analyze`] regrouped per
/// cluster.
pub fn analyze3d<R: Real>(
    patches: &PatchStack<R>,
    assignment: &ClusterAssignment,
    stack_dct: bool,
) -> Result<CoefficientSet<R>> {
    if assignment.labels().len() != patches.n_patches {
        return Err(Error::SizeMismatch(format!(
            "{} labels for {} patches",
            assignment.labels().len(),
            patches.n_patches
        )));
    }
    let q = patches.edge * patches.edge;
    let spatial = dct2_analyze(patches);
    let clusters = assignment
        .members()
        .into_iter()
        .map(|members| {
            let mut coeffs = Vec::with_capacity(members.len() * q);
            for &i in &members {
                coeffs.extend_from_slice(spatial.patch(i));
            }
            if stack_dct {
                let n_members = members.len();
                stack_transform(&mut coeffs, q, n_members, false);
            }
            ClusterCoeffs { members, coeffs }
        })
        .collect();
    Ok(CoefficientSet {
        clusters,
        patch_len: q,
    })
}

/// Exact inverse of [`analyze3d`] with the same assignment and flag.
pub fn synthesize3d<R: Real>(
    set: &CoefficientSet<R>,
    assignment: &ClusterAssignment,
    edge: usize,
    stack_dct: bool,
) -> Result<PatchStack<R>> {
    let q = edge * edge;
    if set.patch_len != q {
        return Err(Error::SizeMismatch(format!(
            "coefficient set has patch length {}, expected {q}",
            set.patch_len
        )));
    }
    let n_patches = assignment.labels().len();
    let mut data = vec![R::zero(); n_patches * q];
    for cluster in &set.clusters {
        if cluster.coeffs.len() != cluster.members.len() * q {
            return Err(Error::SizeMismatch(
                "cluster coefficient block has wrong length".into(),
            ));
        }
        let mut coeffs = cluster.coeffs.clone();
        if stack_dct {
            stack_transform(&mut coeffs, q, cluster.members.len(), true);
        }
        for (slot, &patch_idx) in cluster.members.iter().enumerate() {
            if patch_idx >= n_patches {
                return Err(Error::SizeMismatch(format!(
                    "cluster member {patch_idx} out of range"
                )));
            }
            data[patch_idx * q..(patch_idx + 1) * q]
                .copy_from_slice(&coeffs[slot * q..(slot + 1) * q]);
        }
    }
    let spatial = PatchStack::new(edge, n_patches, data)?;
    Ok(dct2_synthesize(&spatial))
}
