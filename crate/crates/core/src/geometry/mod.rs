//! Extrinsic geometry of submanifolds of the unit sphere: shape operators, the Gauss-equation
//! Ricci tensor, its covariant derivative (closed forms where known, otherwise a
//! finite-difference connection oracle), sectional curvature and the defect scans that
//! decide the curvature classes.
//!
//! All bilinear forms are stored as matrices in the orthonormal tangent basis of a
//! [`PointFrame`]; tangent vectors are passed around as coordinates in that basis.

pub mod fixtures;
pub mod focal;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fkm::TangentFrame;
use crate::linalg::{
    cluster_values, derive_seed, random_unit, seeded_rng, serde_columns, serde_vector, sym_eigen_sorted,
    sym_eigenvalues, Cluster, Mat, SeededRng, Vector,
};

/// Central-difference step of the numeric oracles.
pub const FD_STEP: f64 = 1e-5;
/// Eigenvalue clustering gap.
pub const CLUSTER_GAP: f64 = 1e-6;

/// Orthonormal tangent and normal bases at a point of a submanifold of `S^{N-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointFrame {
    #[serde(with = "serde_vector")]
    pub x: Vector,
    #[serde(with = "serde_columns")]
    pub tangent: Mat,
    #[serde(with = "serde_columns")]
    pub normal: Mat,
}

impl From<&TangentFrame> for PointFrame {
    fn from(f: &TangentFrame) -> Self {
        PointFrame {
            x: f.point.x.clone(),
            tangent: f.tangent.clone(),
            normal: f.normal.clone(),
        }
    }
}

impl PointFrame {
    pub fn dim(&self) -> usize {
        self.tangent.ncols()
    }

    pub fn tangent_projector(&self) -> Mat {
        &self.tangent * self.tangent.transpose()
    }

    pub fn normal_projector(&self) -> Mat {
        &self.normal * self.normal.transpose()
    }
}

/// A submanifold of the unit sphere that can produce frames, curves and shape operators.
pub trait Submanifold: Send + Sync {
    fn label(&self) -> String;
    fn ambient_dim(&self) -> usize;
    fn dim(&self) -> usize;

    fn codim(&self) -> usize {
        self.ambient_dim() - 1 - self.dim()
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame>;

    /// One shape operator per normal column of `frame`, in its tangent basis.
    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        shape_operators_numeric(self, frame, FD_STEP)
    }

    /// A smooth curve with `c(0) = x` and `c'(0) = v` for tangent `v`.
    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector>;

    fn random_point(&self, seed: u64) -> Result<Vector>;

    /// `(nabla_Z rho)` in the tangent basis of `geom` when a closed form is available;
    /// `z` holds tangent coordinates.
    fn nabla_ricci_closed(&self, _geom: &EmbeddedGeometry, _z: &Vector) -> Option<Mat> {
        None
    }
}

/// Shape operators `A_eta X = -(d/dt N(c(t)) N(c(t))^T eta)^T`, by central differences of the
/// normal projector along curves (one Richardson level).
pub fn shape_operators_numeric<M: Submanifold + ?Sized>(mf: &M, frame: &PointFrame, h: f64) -> Result<Vec<Mat>> {
    let n = frame.dim();
    let p = frame.normal.ncols();
    let mut ops = vec![Mat::zeros(n, n); p];
    for i in 0..n {
        let v = frame.tangent.column(i).into_owned();
        let proj = |t: f64| -> Result<Mat> { Ok(mf.frame_at(&mf.curve(&frame.x, &v, t)?)?.normal_projector()) };
        let diff = |s: f64| -> Result<Mat> { Ok((proj(s)? - proj(-s)?) / (2.0 * s)) };
        let d = (diff(h / 2.0)? * 4.0 - diff(h)?) / 3.0;
        let tangential = frame.tangent.transpose() * d * &frame.normal;
        for (a, op) in ops.iter_mut().enumerate() {
            op.set_column(i, &(-tangential.column(a)));
        }
    }
    Ok(ops)
}

/// Ricci tensor from the Gauss equation for a submanifold of the unit sphere:
/// `rho = (n - 1) g + sum tr(A_a) A_a - sum A_a^2`.
pub fn ricci_gauss(shape_ops: &[Mat], n: usize) -> Mat {
    let mut rho = Mat::identity(n, n) * (n as f64 - 1.0);
    for a in shape_ops {
        let tr = a.trace();
        if tr != 0.0 {
            rho += a * tr;
        }
        rho -= a * a;
    }
    (&rho + rho.transpose()) * 0.5
}

/// Frame, shape operators and Ricci tensor at one point.
#[derive(Debug, Clone)]
pub struct EmbeddedGeometry {
    pub frame: PointFrame,
    pub shape_ops: Vec<Mat>,
    pub ricci: Mat,
}

impl EmbeddedGeometry {
    pub fn at<M: Submanifold + ?Sized>(mf: &M, x: &Vector) -> Result<Self> {
        let frame = mf.frame_at(x)?;
        let shape_ops = mf.shape_operators(&frame)?;
        Ok(Self::from_parts(frame, shape_ops))
    }

    pub fn from_parts(frame: PointFrame, shape_ops: Vec<Mat>) -> Self {
        let ricci = ricci_gauss(&shape_ops, frame.dim());
        EmbeddedGeometry {
            frame,
            shape_ops,
            ricci,
        }
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn x(&self) -> &Vector {
        &self.frame.x
    }

    /// Tangent coordinates of an ambient vector.
    pub fn coords(&self, v: &Vector) -> Vector {
        self.frame.tangent.transpose() * v
    }

    /// Ambient vector with the given tangent coordinates.
    pub fn vector(&self, c: &Vector) -> Vector {
        &self.frame.tangent * c
    }

    /// `rho(Pi U, Pi V)` as an ambient bilinear form.
    pub fn ambient_ricci(&self) -> Mat {
        &self.frame.tangent * &self.ricci * self.frame.tangent.transpose()
    }

    pub fn ricci_value(&self, x: &Vector, y: &Vector) -> f64 {
        x.dot(&(&self.ricci * y))
    }

    /// Shape operator of an arbitrary normal vector (ambient).
    pub fn shape_operator_along(&self, eta: &Vector) -> Mat {
        let c = self.frame.normal.transpose() * eta;
        let n = self.dim();
        let mut out = Mat::zeros(n, n);
        for (ci, a) in c.iter().zip(&self.shape_ops) {
            out += a * *ci;
        }
        out
    }

    pub fn max_asymmetry(&self) -> f64 {
        self.shape_ops
            .iter()
            .map(|a| (a - a.transpose()).amax())
            .fold(0.0, f64::max)
    }

    pub fn max_trace(&self) -> f64 {
        self.shape_ops.iter().map(|a| a.trace().abs()).fold(0.0, f64::max)
    }
}

/// `(nabla_Z rho)(X, Y) = d/dt rho_{c(t)}(Pi X, Pi Y)` at `t = 0` for the tangential
/// extensions of constant vectors, whose covariant derivative vanishes at the base point.
/// Central differences with step `h` and one Richardson level.
pub fn nabla_ricci_numeric<M: Submanifold + ?Sized>(
    mf: &M,
    geom: &EmbeddedGeometry,
    z: &Vector,
    h: f64,
) -> Result<Mat> {
    if !(h > 1e-12) {
        return Err(Error::invalid(format!("finite-difference step {h} underflows")));
    }
    let zv = geom.vector(z);
    let x = geom.x();
    let form = |t: f64| -> Result<Mat> { Ok(EmbeddedGeometry::at(mf, &mf.curve(x, &zv, t)?)?.ambient_ricci()) };
    let diff = |s: f64| -> Result<Mat> { Ok((form(s)? - form(-s)?) / (2.0 * s)) };
    let d = (diff(h / 2.0)? * 4.0 - diff(h)?) / 3.0;
    let t = &geom.frame.tangent;
    let out = t.transpose() * d * t;
    Ok((&out + out.transpose()) * 0.5)
}

/// Closed form when the manifold provides one, otherwise the numeric oracle.
pub fn nabla_ricci<M: Submanifold + ?Sized>(mf: &M, geom: &EmbeddedGeometry, z: &Vector) -> Result<Mat> {
    match mf.nabla_ricci_closed(geom, z) {
        Some(m) => Ok(m),
        None => nabla_ricci_numeric(mf, geom, z, FD_STEP),
    }
}

/// `D[i] = nabla_{e_i} rho` for every tangent basis vector.
pub fn nabla_ricci_tensor<M: Submanifold + ?Sized>(mf: &M, geom: &EmbeddedGeometry) -> Result<Vec<Mat>> {
    let n = geom.dim();
    (0..n)
        .map(|i| {
            let mut e = Vector::zeros(n);
            e[i] = 1.0;
            nabla_ricci(mf, geom, &e)
        })
        .collect()
}

fn bilinear(m: &Mat, x: &Vector, y: &Vector) -> f64 {
    x.dot(&(m * y))
}

/// A sampled defect value with the sample that realized it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub value: f64,
    pub samples: usize,
    /// Tangent coordinates of the maximizing sample `(X, Y, Z)` (empty when unsampled).
    pub witness: Vec<Vec<f64>>,
    /// Set when no samples were taken, so the zero value carries no information.
    pub unsampled: bool,
}

impl Defect {
    fn empty() -> Self {
        Defect {
            value: 0.0,
            samples: 0,
            witness: Vec::new(),
            unsampled: true,
        }
    }

    fn offer(&mut self, value: f64, witness: &[&Vector]) {
        self.samples += 1;
        self.unsampled = false;
        let v = value.abs();
        if v > self.value || self.witness.is_empty() {
            self.value = self.value.max(v);
            if v >= self.value {
                self.witness = witness.iter().map(|w| w.iter().copied().collect()).collect();
            }
        }
    }

    pub fn merge(&mut self, other: Defect) {
        if other.unsampled {
            return;
        }
        if self.unsampled || other.value > self.value {
            self.value = other.value;
            self.witness = other.witness;
        }
        self.samples += other.samples;
        self.unsampled = false;
    }
}

/// `sup |(nabla_X rho)(X, X)|` over `n_samples` random unit tangent directions.
pub fn cyclic_defect_at<M: Submanifold + ?Sized>(
    mf: &M,
    geom: &EmbeddedGeometry,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<Defect> {
    let mut d = Defect::empty();
    if n_samples == 0 {
        warn!("cyclic defect requested with zero samples");
        return Ok(d);
    }
    for _ in 0..n_samples {
        let x = random_unit(rng, geom.dim());
        let nab = nabla_ricci(mf, geom, &x)?;
        d.offer(bilinear(&nab, &x, &x), &[&x]);
    }
    Ok(d)
}

/// `sup |(nabla_X rho)(Y, Z) - (nabla_Y rho)(X, Z)|` over random unit triples.
pub fn codazzi_defect_at<M: Submanifold + ?Sized>(
    mf: &M,
    geom: &EmbeddedGeometry,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<Defect> {
    let mut d = Defect::empty();
    let n = geom.dim();
    for _ in 0..n_samples {
        let x = random_unit(rng, n);
        let y = random_unit(rng, n);
        let z = random_unit(rng, n);
        let v = bilinear(&nabla_ricci(mf, geom, &x)?, &y, &z) - bilinear(&nabla_ricci(mf, geom, &y)?, &x, &z);
        d.offer(v, &[&x, &y, &z]);
    }
    Ok(d)
}

/// `sup |(nabla_Z rho)(X, Y)|` over random unit triples.
pub fn parallel_defect_at<M: Submanifold + ?Sized>(
    mf: &M,
    geom: &EmbeddedGeometry,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<Defect> {
    let mut d = Defect::empty();
    let n = geom.dim();
    for _ in 0..n_samples {
        let x = random_unit(rng, n);
        let y = random_unit(rng, n);
        let z = random_unit(rng, n);
        d.offer(bilinear(&nabla_ricci(mf, geom, &z)?, &x, &y), &[&x, &y, &z]);
    }
    Ok(d)
}

/// For every pair of basis vectors `(e_i, e_j)` the best `Z` is the normalized vector
/// `((nabla_{e_k} rho)(e_i, e_j))_k`; the largest such norm is a lower bound for the
/// sup of `|nabla rho|` over unit triples.
pub fn parallel_basis_scan(tensor: &[Mat]) -> Defect {
    let n = tensor.len();
    let mut d = Defect::empty();
    for i in 0..n {
        for j in i..n {
            let g = Vector::from_iterator(n, tensor.iter().map(|m| m[(i, j)]));
            let norm = g.norm();
            let mut ei = Vector::zeros(n);
            ei[i] = 1.0;
            let mut ej = Vector::zeros(n);
            ej[j] = 1.0;
            let z = if norm > 0.0 { &g / norm } else { g.clone() };
            d.offer(norm, &[&ei, &ej, &z]);
        }
    }
    d
}

/// Distance of the Ricci tensor from a multiple of the metric: `max |lambda_i - mean|`.
pub fn einstein_defect(geom: &EmbeddedGeometry) -> f64 {
    let vals = sym_eigenvalues(&geom.ricci);
    let mean = vals.iter().sum::<f64>() / vals.len().max(1) as f64;
    vals.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
}

pub fn ricci_operator_spectrum(ricci: &Mat, gap_tol: f64) -> Vec<Cluster> {
    cluster_values(&sym_eigenvalues(ricci), gap_tol)
}

/// `Sec(X ∧ Y) = 1 + Ã(X, Y) - B̃(X, Y)` for orthonormal tangent `X, Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sectional {
    pub sec: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
}

pub fn sectional_curvature(geom: &EmbeddedGeometry, x: &Vector, y: &Vector) -> Sectional {
    let mut a_tilde = 0.0;
    let mut b_tilde = 0.0;
    for a in &geom.shape_ops {
        let ax = a * x;
        let ay = a * y;
        a_tilde += ax.dot(x) * ay.dot(y);
        b_tilde += ax.dot(y).powi(2);
    }
    Sectional {
        sec: 1.0 + a_tilde - b_tilde,
        a_tilde,
        b_tilde,
    }
}

/// Same curvature through the ambient second fundamental form `h(X, Y)` (a vector in
/// the normal space): `1 + <h(X, X), h(Y, Y)> - |h(X, Y)|^2`. Arguments are tangent
/// coordinates.
pub fn sectional_curvature_ambient(geom: &EmbeddedGeometry, x: &Vector, y: &Vector) -> f64 {
    let h = |u: &Vector, v: &Vector| -> Vector {
        let coeffs = Vector::from_iterator(geom.shape_ops.len(), geom.shape_ops.iter().map(|a| u.dot(&(a * v))));
        &geom.frame.normal * coeffs
    };
    let hxx = h(x, x);
    let hyy = h(y, y);
    let hxy = h(x, y);
    let xy = x.dot(y);
    // curvature-1 ambient term for a possibly non-orthonormal pair
    x.norm_squared() * y.norm_squared() - xy * xy + hxx.dot(&hyy) - hxy.norm_squared()
}

/// Extremes of `rho(X, X)` over sampled unit directions and over the exact spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciScan {
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// Multiplicity of the top eigenvalue (gap `CLUSTER_GAP`).
    pub max_multiplicity: usize,
    /// Tangent coordinates of a top eigenvector.
    pub argmax: Vec<f64>,
}

pub fn ricci_direction_scan(geom: &EmbeddedGeometry, n_samples: usize, rng: &mut SeededRng) -> RicciScan {
    let n = geom.dim();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let x = random_unit(rng, n);
        let r = geom.ricci_value(&x, &x);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (vals, vecs) = sym_eigen_sorted(&geom.ricci);
    let top = *vals.last().expect("nonempty tangent space");
    let max_multiplicity = vals.iter().filter(|v| top - **v <= CLUSTER_GAP).count();
    RicciScan {
        sampled_min: lo,
        sampled_max: hi,
        eig_min: vals[0],
        eig_max: top,
        max_multiplicity,
        argmax: vecs.column(n - 1).iter().copied().collect(),
    }
}

/// Sampling plan for [`curvature_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    pub directions: usize,
    pub triples: usize,
    pub pairs: usize,
    /// Triples on which the closed form is compared against the numeric oracle.
    pub oracle_triples: usize,
    /// Whether to scan all basis pairs for the parallel defect.
    pub basis_scan: bool,
    pub seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            directions: 200,
            triples: 100,
            pairs: 2000,
            oracle_triples: 0,
            basis_scan: true,
            seed: 0,
        }
    }
}

/// Aggregated curvature data over a set of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub dim: usize,
    pub points: usize,
    pub seed: u64,
    /// Ricci matrix at the first point, in its tangent basis.
    #[serde(with = "serde_columns")]
    pub ricci: Mat,
    pub ricci_spectrum: Vec<Cluster>,
    pub cyclic_defect: f64,
    pub codazzi_defect: f64,
    pub parallel_defect: f64,
    pub einstein_defect: f64,
    pub sec_min: f64,
    pub sec_max: f64,
    pub a_tilde_max: f64,
    pub ricci_min: f64,
    pub ricci_max: f64,
    pub shape_spectrum: Vec<Cluster>,
    pub max_shape_asymmetry: f64,
    pub max_shape_trace: f64,
    pub oracle_discrepancy: Option<f64>,
    pub sample_count: usize,
}

/// Maximum discrepancy between closed-form and oracle `(nabla_Z rho)(X, Y)` over random
/// triples; `None` when the manifold has no closed form.
pub fn oracle_discrepancy<M: Submanifold + ?Sized>(
    mf: &M,
    geom: &EmbeddedGeometry,
    n_triples: usize,
    rng: &mut SeededRng,
) -> Result<Option<f64>> {
    let n = geom.dim();
    let mut worst: Option<f64> = None;
    for _ in 0..n_triples {
        let z = random_unit(rng, n);
        let Some(closed) = mf.nabla_ricci_closed(geom, &z) else {
            return Ok(None);
        };
        let numeric = nabla_ricci_numeric(mf, geom, &z, FD_STEP)?;
        let x = random_unit(rng, n);
        let y = random_unit(rng, n);
        let diff = (bilinear(&closed, &x, &y) - bilinear(&numeric, &x, &y)).abs();
        worst = Some(worst.map_or(diff, |w: f64| w.max(diff)));
    }
    Ok(worst)
}

/// Eigenvalues of shape operators of random unit normals, clustered.
pub fn shape_spectrum(geom: &EmbeddedGeometry, rng: &mut SeededRng) -> Vec<Cluster> {
    let p = geom.frame.normal.ncols();
    if p == 0 {
        return cluster_values(&vec![0.0; geom.dim()], CLUSTER_GAP);
    }
    let c = random_unit(rng, p);
    let eta = &geom.frame.normal * c;
    cluster_values(&sym_eigenvalues(&geom.shape_operator_along(&eta)), CLUSTER_GAP)
}

/// Evaluate every defect, curvature bound and spectrum at the given points.
pub fn curvature_report<M: Submanifold + ?Sized>(mf: &M, points: &[Vector], opts: &ScanOptions) -> Result<CurvatureReport> {
    if points.is_empty() {
        return Err(Error::invalid("at least one point is required"));
    }
    let mut cyclic = Defect::empty();
    let mut codazzi = Defect::empty();
    let mut parallel = Defect::empty();
    let mut einstein = 0.0_f64;
    let (mut sec_min, mut sec_max, mut a_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut ricci_min, mut ricci_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut oracle: Option<f64> = None;
    let mut first: Option<(Mat, Vec<Cluster>)> = None;
    let mut asym = 0.0_f64;
    let mut trace = 0.0_f64;
    let mut samples = 0;
    for (i, x) in points.iter().enumerate() {
        let mut rng = seeded_rng(derive_seed(opts.seed, i as u64));
        let geom = EmbeddedGeometry::at(mf, x)?;
        let n = geom.dim();
        asym = asym.max(geom.max_asymmetry());
        trace = trace.max(geom.max_trace());
        cyclic.merge(cyclic_defect_at(mf, &geom, opts.directions, &mut rng)?);
        codazzi.merge(codazzi_defect_at(mf, &geom, opts.triples, &mut rng)?);
        parallel.merge(parallel_defect_at(mf, &geom, opts.triples, &mut rng)?);
        if opts.basis_scan {
            parallel.merge(parallel_basis_scan(&nabla_ricci_tensor(mf, &geom)?));
        }
        einstein = einstein.max(einstein_defect(&geom));
        for _ in 0..opts.pairs {
            let xv = random_unit(&mut rng, n);
            let g = random_unit(&mut rng, n);
            let yv = (&g - &xv * g.dot(&xv)).normalize();
            let s = sectional_curvature(&geom, &xv, &yv);
            sec_min = sec_min.min(s.sec);
            sec_max = sec_max.max(s.sec);
            a_max = a_max.max(s.a_tilde);
        }
        let scan = ricci_direction_scan(&geom, opts.directions, &mut rng);
        ricci_min = ricci_min.min(scan.eig_min.min(scan.sampled_min));
        ricci_max = ricci_max.max(scan.eig_max.max(scan.sampled_max));
        if opts.oracle_triples > 0 {
            if let Some(d) = oracle_discrepancy(mf, &geom, opts.oracle_triples, &mut rng)? {
                oracle = Some(oracle.map_or(d, |o: f64| o.max(d)));
            }
        }
        samples += opts.directions + 2 * opts.triples + opts.pairs;
        if first.is_none() {
            let spectrum = shape_spectrum(&geom, &mut rng);
            first = Some((geom.ricci.clone(), spectrum));
        }
    }
    let (ricci, shape_spectrum) = first.expect("nonempty points");
    Ok(CurvatureReport {
        dim: mf.dim(),
        points: points.len(),
        seed: opts.seed,
        ricci_spectrum: ricci_operator_spectrum(&ricci, CLUSTER_GAP),
        ricci,
        cyclic_defect: cyclic.value,
        codazzi_defect: codazzi.value,
        parallel_defect: parallel.value,
        einstein_defect: einstein,
        sec_min,
        sec_max,
        a_tilde_max: a_max,
        ricci_min,
        ricci_max,
        shape_spectrum,
        max_shape_asymmetry: asym,
        max_shape_trace: trace,
        oracle_discrepancy: oracle,
        sample_count: samples,
    })
}

#[cfg(test)]
mod tests {
    use super::fixtures::{GreatSphere, QuadricHypersurface};
    use super::*;

    #[test]
    fn spectrum_of_identity_is_one_cluster() {
        let c = ricci_operator_spectrum(&Mat::identity(5, 5), CLUSTER_GAP);
        assert_eq!(c, vec![Cluster { value: 1.0, multiplicity: 5 }]);
    }

    #[test]
    fn great_sphere_is_flat_in_every_test() {
        let s = GreatSphere::new(7, 4).unwrap();
        let x = s.random_point(3).unwrap();
        let g = EmbeddedGeometry::at(&s, &x).unwrap();
        assert!((&g.ricci - Mat::identity(4, 4) * 3.0).amax() < 1e-14);
        let mut rng = seeded_rng(1);
        let z = random_unit(&mut rng, 4);
        let d = nabla_ricci_numeric(&s, &g, &z, FD_STEP).unwrap();
        assert!(d.amax() < 1e-7);
        assert!(codazzi_defect_at(&s, &g, 5, &mut rng).unwrap().value < 1e-7);
        let xv = random_unit(&mut rng, 4);
        let yv = {
            let v = random_unit(&mut rng, 4);
            (&v - &xv * v.dot(&xv)).normalize()
        };
        assert!((sectional_curvature(&g, &xv, &yv).sec - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_cyclic_sample_is_flagged() {
        let s = GreatSphere::new(5, 2).unwrap();
        let g = EmbeddedGeometry::at(&s, &s.random_point(1).unwrap()).unwrap();
        let mut rng = seeded_rng(0);
        let d = cyclic_defect_at(&s, &g, 0, &mut rng).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.unsampled);
    }

    #[test]
    fn quadric_fixture_shape_operators_match_numeric() {
        let q = QuadricHypersurface::new(vec![1.0, 1.5, 2.2, 3.1, 4.0], 2.5).unwrap();
        let x = q.random_point(11).unwrap();
        let frame = q.frame_at(&x).unwrap();
        let analytic = q.shape_operators(&frame).unwrap();
        let numeric = shape_operators_numeric(&q, &frame, FD_STEP).unwrap();
        for (a, b) in analytic.iter().zip(&numeric) {
            assert!((a - b).amax() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn quadric_fixture_is_not_cyclic_parallel() {
        let q = QuadricHypersurface::new(vec![1.0, 1.5, 2.2, 3.1, 4.0], 2.5).unwrap();
        let x = q.random_point(2).unwrap();
        let g = EmbeddedGeometry::at(&q, &x).unwrap();
        let mut rng = seeded_rng(9);
        assert!(cyclic_defect_at(&q, &g, 20, &mut rng).unwrap().value > 1e-3);
    }

    #[test]
    fn both_sectional_routes_agree() {
        let q = QuadricHypersurface::new(vec![1.0, 1.5, 2.2, 3.1, 4.0, 5.5], 3.0).unwrap();
        let g = EmbeddedGeometry::at(&q, &q.random_point(4).unwrap()).unwrap();
        let mut rng = seeded_rng(4);
        for _ in 0..20 {
            let xv = random_unit(&mut rng, g.dim());
            let v = random_unit(&mut rng, g.dim());
            let yv = (&v - &xv * v.dot(&xv)).normalize();
            let a = sectional_curvature(&g, &xv, &yv).sec;
            let amb = sectional_curvature_ambient(&g, &xv, &yv);
            assert!((a - amb).abs() < 1e-12);
        }
    }
}
