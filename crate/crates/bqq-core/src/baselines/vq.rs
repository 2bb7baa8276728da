//! Vector quantization with seeded k-means++ clustering, optionally with a
//! uniform-quantized codebook.

use crate::error::{Error, Result};
use crate::footprint::MemoryFootprint;
use crate::matrix::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::uq::{uq_grid, UqCode};

const KMEANS_TOL: f64 = 1e-6;
const KMEANS_MAX_ITERS: usize = 100;

/// Codebook storage: raw centroids or their uniform-quantized form.
#[derive(Debug, Clone, PartialEq)]
pub enum VqCodebook {
    Real(DenseMatrix),
    Quantized(UqCode),
}

impl VqCodebook {
    fn to_dense(&self) -> DenseMatrix {
        match self {
            VqCodebook::Real(m) => m.clone(),
            VqCodebook::Quantized(code) => code.dequantize(),
        }
    }
}

/// VQ code: the matrix flattened into `vec_dim`-length vectors (zero-padded
/// tail), each assigned to one centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct VqCode {
    pub rows: usize,
    pub cols: usize,
    pub vec_dim: usize,
    pub pad_len: usize,
    pub codebook: VqCodebook,
    pub assignments: Vec<u32>,
}

impl VqCode {
    pub fn num_centroids(&self) -> usize {
        match &self.codebook {
            VqCodebook::Real(m) => m.rows(),
            VqCodebook::Quantized(code) => code.rows,
        }
    }

    pub fn dequantize(&self) -> DenseMatrix {
        let centroids = self.codebook.to_dense();
        let total = self.rows * self.cols;
        let mut flat = Vec::with_capacity(total + self.pad_len);
        for &a in &self.assignments {
            flat.extend_from_slice(centroids.row(a as usize));
        }
        flat.truncate(total);
        DenseMatrix::from_vec_unchecked(self.rows, self.cols, flat)
    }

    /// Index width is `ceil(log2 k)` bits; a quantized codebook stores its
    /// entries as binary payload plus the two grid scalars.
    pub fn footprint(&self, scalar_bits: u32) -> MemoryFootprint {
        let k = self.num_centroids() as u64;
        let index_bits = if k <= 1 { 0 } else { (64 - (k - 1).leading_zeros()) as u64 };
        let binary = self.assignments.len() as u64 * index_bits;
        match &self.codebook {
            VqCodebook::Real(m) => {
                MemoryFootprint::new(binary, m.len() as u64, scalar_bits)
            }
            VqCodebook::Quantized(code) => {
                let f = code.footprint(scalar_bits);
                MemoryFootprint::new(binary + f.binary_bits, f.scalar_count, scalar_bits)
            }
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Flatten row-major and zero-pad to a whole number of vectors.
fn to_vectors(w: &DenseMatrix, vec_dim: usize) -> (Vec<Vec<f64>>, usize) {
    let mut flat = w.values().to_vec();
    let rem = flat.len() % vec_dim;
    let pad = if rem == 0 { 0 } else { vec_dim - rem };
    flat.resize(flat.len() + pad, 0.0);
    let vectors = flat.chunks(vec_dim).map(|c| c.to_vec()).collect();
    (vectors, pad)
}

fn kmeans_pp_init(vectors: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(vectors[rng.random_range(0..vectors.len())].clone());
    let mut dist: Vec<f64> = vectors
        .iter()
        .map(|v| squared_distance(v, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total <= 0.0 {
            // All points coincide with a centroid; pick uniformly.
            rng.random_range(0..vectors.len())
        } else {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = vectors.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(vectors[next].clone());
        let newest = centroids.last().unwrap();
        for (d, v) in dist.iter_mut().zip(vectors) {
            let nd = squared_distance(v, newest);
            if nd < *d {
                *d = nd;
            }
        }
    }
    centroids
}

fn assign(vectors: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<u32>, f64) {
    let mut assignments = Vec::with_capacity(vectors.len());
    let mut sse = 0.0;
    for v in vectors {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, centroid) in centroids.iter().enumerate() {
            let d = squared_distance(v, centroid);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        assignments.push(best as u32);
        sse += best_d;
    }
    (assignments, sse)
}

/// Seeded k-means++ init plus Lloyd iterations until the within-cluster SSE
/// improves by less than `1e-6` relative or 100 iterations. Empty clusters
/// keep their previous centroid, so the SSE trace never increases.
///
/// Returns `(centroids, assignments, sse_trace)`.
pub(crate) fn lloyd(
    vectors: &[Vec<f64>],
    vec_dim: usize,
    k: usize,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<u32>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeans_pp_init(vectors, k, &mut rng);
    let (mut assignments, mut sse) = assign(vectors, &centroids);
    let mut trace = vec![sse];
    for _ in 0..KMEANS_MAX_ITERS {
        // Update step: centroid = mean of its cluster.
        let mut sums = vec![vec![0.0f64; vec_dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignments) {
            counts[a as usize] += 1;
            for (s, &x) in sums[a as usize].iter_mut().zip(v) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centroids[c] = sums[c].clone();
            }
        }
        let (new_assignments, new_sse) = assign(vectors, &centroids);
        let improved = sse - new_sse;
        assignments = new_assignments;
        trace.push(new_sse);
        let done = improved <= KMEANS_TOL * sse.max(1.0);
        sse = new_sse;
        if done {
            break;
        }
    }
    (centroids, assignments, trace)
}

/// Seeded k-means++ vector quantization.
///
/// With `centroid_bits` set the final codebook is grid-search
/// uniform-quantized and assignments are recomputed against the quantized
/// centroids.
pub fn vq_kmeans(
    w: &DenseMatrix,
    vec_dim: usize,
    k: usize,
    seed: u64,
    centroid_bits: Option<u32>,
) -> Result<VqCode> {
    if vec_dim == 0 {
        return Err(Error::invalid("vec_dim must be positive"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    let (vectors, pad_len) = to_vectors(w, vec_dim);
    if k > vectors.len() {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} available vectors",
            vectors.len()
        )));
    }

    let (centroids, mut assignments, _trace) = lloyd(&vectors, vec_dim, k, seed);

    let codebook_matrix = DenseMatrix::from_vec_unchecked(
        k,
        vec_dim,
        centroids.into_iter().flatten().collect(),
    );
    let codebook = match centroid_bits {
        None => VqCodebook::Real(codebook_matrix),
        Some(bits) => {
            let quantized = uq_grid(&codebook_matrix, bits, 100)?;
            // Re-assign against the quantized centroids so indices match
            // what dequantization will actually use.
            let deq = quantized.dequantize();
            let centroids: Vec<Vec<f64>> = (0..k).map(|c| deq.row(c).to_vec()).collect();
            let (reassigned, _) = assign(&vectors, &centroids);
            assignments = reassigned;
            VqCodebook::Quantized(quantized)
        }
    };

    Ok(VqCode {
        rows: w.rows(),
        cols: w.cols(),
        vec_dim,
        pad_len,
        codebook,
        assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::mse;
    use crate::synth::gen_gaussian;

    #[test]
    fn k_equal_to_distinct_vectors_is_exact() {
        // 4 distinct 2-vectors, k = 4.
        let w = DenseMatrix::from_vec(2, 4, vec![0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0])
            .unwrap();
        let code = vq_kmeans(&w, 2, 4, 1, None).unwrap();
        assert_eq!(mse(&w, &code.dequantize()).unwrap(), 0.0);
    }

    #[test]
    fn two_separated_clusters_recover_their_means() {
        // Vectors near (0,0) and near (10,10).
        let w = DenseMatrix::from_vec(
            4,
            2,
            vec![0.1, -0.1, -0.1, 0.1, 10.1, 9.9, 9.9, 10.1],
        )
        .unwrap();
        let code = vq_kmeans(&w, 2, 2, 3, None).unwrap();
        let cb = match &code.codebook {
            VqCodebook::Real(m) => m.clone(),
            _ => unreachable!(),
        };
        let mut rows: Vec<Vec<f64>> = (0..2).map(|i| cb.row(i).to_vec()).collect();
        rows.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((rows[0][0] - 0.0).abs() < 1e-12 && (rows[0][1] - 0.0).abs() < 1e-12);
        assert!((rows[1][0] - 10.0).abs() < 1e-12 && (rows[1][1] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn padding_is_excluded_from_reconstruction() {
        let w = gen_gaussian(3, 3, 7); // 9 values, vec_dim 4 pads 3 zeros
        let code = vq_kmeans(&w, 4, 2, 5, None).unwrap();
        assert_eq!(code.pad_len, 3);
        let deq = code.dequantize();
        assert_eq!(deq.shape(), (3, 3));
    }

    #[test]
    fn k_larger_than_vector_count_errors() {
        let w = gen_gaussian(2, 2, 1);
        assert!(vq_kmeans(&w, 2, 3, 0, None).is_err());
    }

    #[test]
    fn quantized_codebook_shrinks_footprint() {
        let w = gen_gaussian(16, 16, 9);
        let plain = vq_kmeans(&w, 8, 16, 2, None).unwrap();
        let quant = vq_kmeans(&w, 8, 16, 2, Some(4)).unwrap();
        assert!(quant.footprint(32).total_bits() < plain.footprint(32).total_bits());
    }

    #[test]
    fn determinism_under_fixed_seed() {
        let w = gen_gaussian(12, 12, 31);
        let a = vq_kmeans(&w, 4, 8, 77, None).unwrap();
        let b = vq_kmeans(&w, 4, 8, 77, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lloyd_objective_is_monotone() {
        let w = gen_gaussian(20, 20, 13);
        let (vectors, _) = to_vectors(&w, 5);
        for seed in 0..4 {
            let (_, _, trace) = lloyd(&vectors, 5, 10, seed);
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-12, "sse increased: {pair:?}");
            }
        }
    }
}
