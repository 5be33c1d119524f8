//! Dense linear-algebra helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Deterministic generator used for every sampling step.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent sub-seed (splitmix64 step).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_vector<R: Rng>(rng: &mut R, n: usize) -> Vector {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Haar-ish random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Mat {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            let mut col = q.column_mut(j);
            col.neg_mut();
        }
    }
    q
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues in ascending order.
pub fn sym_eigen_sorted(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Orthonormal basis of the range of an orthogonal projector.
pub fn projector_range(proj: &Mat) -> Mat {
    let (values, vectors) = sym_eigen_sorted(proj);
    let cols: Vec<usize> = (0..values.len()).filter(|&i| values[i] > 0.5).collect();
    vectors.select_columns(cols.iter())
}

/// Orthonormal basis of the orthogonal complement of the span of `basis`'s columns
/// (the columns must already be orthonormal).
pub fn orthonormal_complement(basis: &Mat) -> Mat {
    let n = basis.nrows();
    let proj = Mat::identity(n, n) - basis * basis.transpose();
    projector_range(&proj)
}

/// Thin singular value decomposition `a = u diag(s) v_t`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub singular_values: Vector,
    pub v_t: Mat,
}

impl Svd {
    /// Minimum-norm least-squares solution, ignoring singular values `<= eps`.
    pub fn solve(&self, b: &Vector, eps: f64) -> Vector {
        let mut c = self.u.transpose() * b;
        for (ci, s) in c.iter_mut().zip(self.singular_values.iter()) {
            *ci = if *s > eps { *ci / s } else { 0.0 };
        }
        self.v_t.transpose() * c
    }

    fn residual(&self, a: &Mat) -> f64 {
        let rec = &self.u * Mat::from_diagonal(&self.singular_values) * &self.v_t - a;
        max_abs(&rec).max(gram_residual(&self.u)).max(gram_residual(&self.v_t.transpose()))
    }
}

fn raw_svd(a: &Mat) -> Option<Svd> {
    let svd = a.clone().svd(true, true);
    Some(Svd {
        u: svd.u?,
        singular_values: svd.singular_values,
        v_t: svd.v_t?,
    })
}

/// SVD with a verified reconstruction. The LAPACK-free bidiagonal iteration occasionally
/// returns inconsistent factors, so the result is checked and recomputed on the transpose
/// or a randomly rotated copy when needed.
pub fn checked_svd(a: &Mat) -> Svd {
    let tol = 1e-10 * (1.0 + max_abs(a));
    let ok = |s: &Svd| s.residual(a) <= tol;
    if let Some(s) = raw_svd(a).filter(ok) {
        return s;
    }
    if let Some(s) = raw_svd(&a.transpose()).map(|s| Svd {
        u: s.v_t.transpose(),
        singular_values: s.singular_values,
        v_t: s.u.transpose(),
    }) {
        if ok(&s) {
            return s;
        }
    }
    let mut rng = seeded_rng(0x5bd1_e995);
    let mut best: Option<(f64, Svd)> = None;
    for _ in 0..8 {
        let q = random_orthogonal(&mut rng, a.nrows());
        if let Some(s) = raw_svd(&(&q * a)) {
            let s = Svd {
                u: q.transpose() * s.u,
                ..s
            };
            let r = s.residual(a);
            if r <= tol {
                return s;
            }
            if best.as_ref().is_none_or(|(b, _)| r < *b) {
                best = Some((r, s));
            }
        }
    }
    log::warn!("SVD reconstruction check failed on every retry");
    best.map(|(_, s)| s).expect("at least one SVD attempt")
}

/// Orthonormal basis of the column span, discarding directions whose singular value is
/// below `rel_tol * sigma_max`.
pub fn orthonormal_span(cols: &Mat, rel_tol: f64) -> Mat {
    if cols.ncols() == 0 {
        return Mat::zeros(cols.nrows(), 0);
    }
    let svd = checked_svd(cols);
    let u = svd.u;
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Mat::zeros(cols.nrows(), 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rel_tol * smax)
        .collect();
    u.select_columns(keep.iter())
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(cols: &Mat, rel_tol: f64) -> usize {
    if cols.ncols() == 0 || cols.nrows() == 0 {
        return 0;
    }
    let sv = checked_svd(cols).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Max-norm deviation of the Gram matrix of `cols` from the identity.
pub fn gram_residual(cols: &Mat) -> f64 {
    let g = cols.transpose() * cols;
    let n = g.nrows();
    let mut r = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            r = r.max((g[(i, j)] - target).abs());
        }
    }
    r
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(*b);
        c += b.ncols();
    }
    out
}

pub fn columns_to_matrix(rows: usize, cols: &[Vector]) -> Mat {
    let mut out = Mat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// One eigenvalue cluster: representative value and multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Merge ascending eigenvalues whose consecutive gaps are below `gap_tol`.
pub fn cluster_values(sorted: &[f64], gap_tol: f64) -> Vec<Cluster> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &v in sorted {
        match out.last_mut() {
            Some((sum, count)) if v - last <= gap_tol => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
        last = v;
    }
    out.into_iter()
        .map(|(sum, count)| Cluster {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect()
}

/// Round to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

/// Serde adapters storing vectors as float arrays and matrices as column lists.
pub mod serde_columns {
    use super::{Mat, Vector};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        let cols: Vec<Vec<f64>> = m.column_iter().map(|c| c.iter().copied().collect()).collect();
        (m.nrows(), cols).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let (rows, cols): (usize, Vec<Vec<f64>>) = Deserialize::deserialize(d)?;
        if cols.iter().any(|c| c.len() != rows) {
            return Err(serde::de::Error::custom("column length mismatch"));
        }
        let vs: Vec<Vector> = cols.into_iter().map(Vector::from_vec).collect();
        Ok(super::columns_to_matrix(rows, &vs))
    }
}

pub mod serde_vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        let data: Vec<f64> = Deserialize::deserialize(d)?;
        Ok(Vector::from_vec(data))
    }
}
