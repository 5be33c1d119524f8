//! The homogeneous focal submanifolds with `(m1, m2) = (2, 2)` and `(4, 5)` as orbits of
//! isotropy representations.
//!
//! Both families live in skew-symmetric 5x5 matrices: real ones for `SO(5)` acting by
//! conjugation, complex ones for `U(5)` acting by `g . Z = conj(g) Z g^{-1}`. The Lie algebra
//! action is `[m, Z] = conj(m) Z - Z m`, which for real `m` is the usual commutator.
//! Vectors of `p` are stored by their strictly upper triangular entries (real, or real and
//! imaginary parts), an orthonormal system for `<A, B> = Re Tr(A B^*) / 2`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{EmbeddedGeometry, PointFrame, Submanifold};
use crate::linalg::{checked_svd, orthonormal_complement, orthonormal_span, seeded_rng, Mat, Vector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

const N: usize = 5;
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OrbitCase {
    #[serde(rename = "so5_cp3")]
    So5Cp3,
    #[serde(rename = "so5_grassmann")]
    So5Grassmann,
    #[serde(rename = "u5_M1_14")]
    U5M1,
    #[serde(rename = "u5_M2_13")]
    U5M2,
}

impl OrbitCase {
    pub const ALL: [OrbitCase; 4] = [OrbitCase::So5Cp3, OrbitCase::So5Grassmann, OrbitCase::U5M1, OrbitCase::U5M2];

    pub fn id(self) -> &'static str {
        match self {
            OrbitCase::So5Cp3 => "so5_cp3",
            OrbitCase::So5Grassmann => "so5_grassmann",
            OrbitCase::U5M1 => "u5_M1_14",
            OrbitCase::U5M2 => "u5_M2_13",
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, OrbitCase::U5M1 | OrbitCase::U5M2)
    }

    /// `(m1, m2)` of the isoparametric family.
    pub fn multiplicities(self) -> (usize, usize) {
        if self.is_complex() {
            (4, 5)
        } else {
            (2, 2)
        }
    }

    pub fn expected_dim(self) -> usize {
        match self {
            OrbitCase::So5Cp3 | OrbitCase::So5Grassmann => 6,
            OrbitCase::U5M1 => 14,
            OrbitCase::U5M2 => 13,
        }
    }
}

impl fmt::Display for OrbitCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for OrbitCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OrbitCase::ALL
            .into_iter()
            .find(|c| c.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown orbit '{s}'")))
    }
}

fn c(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

fn ci(im: f64) -> C64 {
    Complex::new(0.0, im)
}

/// `diag(J, ..)` blocks with `J = [[0, 1], [-1, 0]]` placed at the listed diagonal offsets.
fn j_blocks(offsets: &[usize], scale: f64) -> CMat {
    let mut z = CMat::zeros(N, N);
    for &o in offsets {
        z[(o, o + 1)] = c(scale);
        z[(o + 1, o)] = c(-scale);
    }
    z
}

/// `[m, z] = conj(m) z - z m`.
pub fn bracket(m: &CMat, z: &CMat) -> CMat {
    m.map(|v| v.conj()) * z - z * m
}

fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() * 0.5
}

/// Immutable description of one orbit: base point, `k`, its isotropy at `z0` and `m`.
#[derive(Debug, Clone)]
pub struct OrbitData {
    pub case: OrbitCase,
    pub z0: CMat,
    /// Orthonormal basis of `k` (`so(5)` or `u(5)`).
    pub k_basis: Vec<CMat>,
    /// Orthonormal basis of the isotropy algebra `k_{z0}`.
    pub isotropy_basis: Vec<CMat>,
    /// Orthonormal basis of `m`, the complement of `k_{z0}` in `k`.
    pub m_basis: Vec<CMat>,
    /// Unit normals at `z0` (tangent to the sphere).
    pub normals: Vec<CMat>,
}

impl OrbitData {
    pub fn p_dim(&self) -> usize {
        if self.case.is_complex() {
            N * (N - 1)
        } else {
            N * (N - 1) / 2
        }
    }

    pub fn dim(&self) -> usize {
        self.m_basis.len()
    }

    pub fn codim(&self) -> usize {
        self.p_dim() - 1 - self.dim()
    }

    pub fn to_coords(&self, z: &CMat) -> Vector {
        let mut out = Vector::zeros(self.p_dim());
        let mut k = 0;
        for i in 0..N {
            for j in (i + 1)..N {
                out[k] = z[(i, j)].re;
                k += 1;
                if self.case.is_complex() {
                    out[k] = z[(i, j)].im;
                    k += 1;
                }
            }
        }
        out
    }

    pub fn from_coords(&self, v: &Vector) -> CMat {
        let mut z = CMat::zeros(N, N);
        let mut k = 0;
        for i in 0..N {
            for j in (i + 1)..N {
                let e = if self.case.is_complex() {
                    k += 2;
                    Complex::new(v[k - 2], v[k - 1])
                } else {
                    k += 1;
                    c(v[k - 1])
                };
                z[(i, j)] = e;
                z[(j, i)] = -e;
            }
        }
        z
    }

    /// Columns are the coordinates of `[k_a, x]` over the basis of `k`.
    pub fn ad_matrix(&self, x: &CMat) -> Mat {
        let cols: Vec<Vector> = self.k_basis.iter().map(|k| self.to_coords(&bracket(k, x))).collect();
        Mat::from_columns(&cols)
    }

    /// Element of `k` from coefficients over `k_basis`.
    pub fn k_element(&self, coeffs: &Vector) -> CMat {
        let mut m = CMat::zeros(N, N);
        for (k, a) in self.k_basis.iter().zip(coeffs.iter()) {
            m += k * c(*a);
        }
        m
    }

    /// Element of `m` from coefficients over `m_basis`.
    pub fn m_element(&self, coeffs: &[f64]) -> CMat {
        let mut m = CMat::zeros(N, N);
        for (k, a) in self.m_basis.iter().zip(coeffs) {
            m += k * c(*a);
        }
        m
    }

    /// Orthogonal projection of an element of `k` onto `m`.
    pub fn project_to_m(&self, m: &CMat) -> CMat {
        let mut out = CMat::zeros(N, N);
        for b in &self.m_basis {
            out += b * c(inner(m, b));
        }
        out
    }

    /// The minimal-norm `m` in `k` with `[m, x] = v`; `v` in coordinates.
    pub fn solve_generator(&self, x: &CMat, v: &Vector) -> Result<CMat> {
        let ad = self.ad_matrix(x);
        let svd = checked_svd(&ad);
        let coeffs = svd.solve(v, RANK_TOL * svd.singular_values.max().max(1.0));
        let resid = (&ad * &coeffs - v).amax();
        if resid > 1e-8 * (1.0 + v.amax()) {
            return Err(Error::invalid(format!("vector is not tangent to the orbit (residual {resid:.2e})")));
        }
        Ok(self.k_element(&coeffs))
    }

    /// Group element `exp(m)` acting on `z`.
    pub fn act(&self, m: &CMat, z: &CMat) -> CMat {
        let g = m.clone().exp();
        g.map(|v| v.conj()) * z * g.adjoint()
    }

    /// Tangential projection at `z0`, in coordinates.
    fn tangent_projection(&self, frame: &PointFrame, z: &CMat) -> Vector {
        let t = &frame.tangent;
        t * (t.transpose() * self.to_coords(z))
    }

    /// Frame at `z0`, with the stored normals.
    pub fn base_frame(&self) -> Result<PointFrame> {
        let x = self.to_coords(&self.z0);
        let tangent = orthonormal_span(&self.ad_matrix(&self.z0), RANK_TOL);
        let cols: Vec<Vector> = self.normals.iter().map(|n| self.to_coords(n)).collect();
        Ok(PointFrame {
            x,
            tangent,
            normal: Mat::from_columns(&cols),
        })
    }

    pub fn to_doc(&self) -> OrbitDoc {
        let enc = |z: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..N).map(|i| (0..N).map(|j| [z[(i, j)].re, z[(i, j)].im]).collect()).collect()
        };
        OrbitDoc {
            case_id: self.case,
            dim: self.dim(),
            codim: self.codim(),
            z0: enc(&self.z0),
            normals: self.normals.iter().map(enc).collect(),
        }
    }
}

/// Serialized form: complex entries as `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitDoc {
    pub case_id: OrbitCase,
    pub dim: usize,
    pub codim: usize,
    pub z0: Vec<Vec<[f64; 2]>>,
    pub normals: Vec<Vec<Vec<[f64; 2]>>>,
}

fn k_basis(complex: bool) -> Vec<CMat> {
    let mut out = Vec::new();
    for i in 0..N {
        for j in (i + 1)..N {
            let mut e = CMat::zeros(N, N);
            e[(i, j)] = c(1.0);
            e[(j, i)] = c(-1.0);
            out.push(e);
            if complex {
                let mut f = CMat::zeros(N, N);
                f[(i, j)] = ci(1.0);
                f[(j, i)] = ci(1.0);
                out.push(f);
            }
        }
    }
    if complex {
        for i in 0..N {
            let mut d = CMat::zeros(N, N);
            d[(i, i)] = ci(std::f64::consts::SQRT_2);
            out.push(d);
        }
    }
    out
}

/// The six normals `diag(0, X_a)` with `X_a` skew in `gl(3, C)`.
fn standard_m2_normals() -> Vec<CMat> {
    let mut out = Vec::new();
    for (i, j) in [(2, 3), (2, 4), (3, 4)] {
        for unit in [c(1.0), ci(1.0)] {
            let mut x = CMat::zeros(N, N);
            x[(i, j)] = unit;
            x[(j, i)] = -unit;
            out.push(x);
        }
    }
    out
}

pub fn build_orbit(case: OrbitCase) -> Result<OrbitData> {
    let z0 = match case {
        OrbitCase::So5Cp3 | OrbitCase::U5M1 => j_blocks(&[0, 2], std::f64::consts::FRAC_1_SQRT_2),
        OrbitCase::So5Grassmann | OrbitCase::U5M2 => j_blocks(&[0], 1.0),
    };
    let k_basis = k_basis(case.is_complex());
    let mut data = OrbitData {
        case,
        z0,
        k_basis,
        isotropy_basis: Vec::new(),
        m_basis: Vec::new(),
        normals: Vec::new(),
    };
    let ad = data.ad_matrix(&data.z0);
    let svd = checked_svd(&ad);
    let v_t = &svd.v_t;
    let smax = svd.singular_values.max();
    let kd = data.k_basis.len();
    // Rows of v_t with nonzero singular values span m; the rest span k_{z0}.
    let mut m_rows = Vec::new();
    for (r, s) in svd.singular_values.iter().enumerate() {
        if *s > RANK_TOL * smax {
            m_rows.push(r);
        }
    }
    let m_span = Mat::from_columns(&m_rows.iter().map(|&r| v_t.row(r).transpose()).collect::<Vec<_>>());
    let iso_span = orthonormal_complement(&m_span);
    data.m_basis = m_span.column_iter().map(|col| data.k_element(&col.into_owned())).collect();
    data.isotropy_basis = iso_span.column_iter().map(|col| data.k_element(&col.into_owned())).collect();
    debug_assert_eq!(data.m_basis.len() + data.isotropy_basis.len(), kd);
    if data.dim() != case.expected_dim() {
        return Err(Error::Internal(format!(
            "{case}: orbit dimension {} differs from {}",
            data.dim(),
            case.expected_dim()
        )));
    }
    let frame_t = orthonormal_span(&data.ad_matrix(&data.z0), RANK_TOL);
    data.normals = if case == OrbitCase::U5M2 {
        standard_m2_normals()
    } else {
        let x = data.to_coords(&data.z0);
        let mut span = frame_t.clone();
        span = span.insert_column(0, 0.0);
        span.set_column(0, &x);
        orthonormal_complement(&span)
            .column_iter()
            .map(|col| data.from_coords(&col.into_owned()))
            .collect()
    };
    Ok(data)
}

/// `[m, z0]` in coordinates.
pub fn orbit_tangent(orbit: &OrbitData, m: &CMat) -> Vector {
    orbit.to_coords(&bracket(m, &orbit.z0))
}

/// `m'` in `m` with `[m', z0] = [m, [m, z0]]^T`.
pub fn orbit_connection_term(orbit: &OrbitData, m: &CMat) -> Result<CMat> {
    let frame = orbit.base_frame()?;
    let v = orbit.tangent_projection(&frame, &bracket(m, &bracket(m, &orbit.z0)));
    let mp = orbit.solve_generator(&orbit.z0, &v)?;
    let mp = orbit.project_to_m(&mp);
    let check = (orbit.to_coords(&bracket(&mp, &orbit.z0)) - &v).amax();
    if check > 1e-9 {
        return Err(Error::Internal(format!("connection term inconsistent (residual {check:.2e})")));
    }
    Ok(mp)
}

/// `A_xi [m, z0] = -[m, xi]^T` as a matrix in the orthonormal tangent basis at `z0`.
pub fn orbit_shape_operator(orbit: &OrbitData, xi: &CMat) -> Result<Mat> {
    let frame = orbit.base_frame()?;
    Ok(shape_operator_at(orbit, &orbit.z0, &frame, &[orbit.to_coords(xi)])?.remove(0))
}

fn shape_operator_at(orbit: &OrbitData, x: &CMat, frame: &PointFrame, normals: &[Vector]) -> Result<Vec<Mat>> {
    let t = &frame.tangent;
    let n = t.ncols();
    let gens: Vec<CMat> = (0..n)
        .map(|i| orbit.solve_generator(x, &t.column(i).into_owned()))
        .collect::<Result<_>>()?;
    Ok(normals
        .iter()
        .map(|xi| {
            let xi = orbit.from_coords(xi);
            let mut a = Mat::zeros(n, n);
            for (i, m) in gens.iter().enumerate() {
                a.set_column(i, &-(t.transpose() * orbit.to_coords(&bracket(m, &xi))));
            }
            (&a + a.transpose()) * 0.5
        })
        .collect())
}

/// The two inner products `(<[m, xi]^T, [m, [m, xi]^T]^T>, <[m, xi]^T, [m', xi]^T>)` at `z0`.
pub fn class_a_terms(orbit: &OrbitData, m: &CMat, xi: &CMat) -> Result<(f64, f64)> {
    let frame = orbit.base_frame()?;
    let mp = orbit_connection_term(orbit, m)?;
    let u = orbit.tangent_projection(&frame, &bracket(m, xi));
    let w = orbit.tangent_projection(&frame, &bracket(m, &orbit.from_coords(&u)));
    let v = orbit.tangent_projection(&frame, &bracket(&mp, xi));
    Ok((u.dot(&w), u.dot(&v)))
}

/// `sup_m |sum_a <[m, xi_a]^T, [m, [m, xi_a]^T]^T> - <[m, xi_a]^T, [m', xi_a]^T>|` over
/// random unit `m` in `m`.
pub fn homog_class_a_defect(orbit: &OrbitData, n_samples: usize, seed: u64) -> Result<f64> {
    let mut rng = seeded_rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_samples {
        let coeffs: Vec<f64> = (0..orbit.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let norm = coeffs.iter().map(|a| a * a).sum::<f64>().sqrt();
        let m = orbit.m_element(&coeffs.iter().map(|a| a / norm).collect::<Vec<_>>());
        let mut total = 0.0;
        for xi in &orbit.normals {
            let (a, b) = class_a_terms(orbit, &m, xi)?;
            total += a - b;
        }
        worst = worst.max(total.abs());
    }
    Ok(worst)
}

/// A random group element `exp(m)`, `m` Gaussian in `k`.
pub fn random_group_generator(orbit: &OrbitData, rng: &mut impl Rng) -> CMat {
    let coeffs = Vector::from_fn(orbit.k_basis.len(), |_, _| rng.sample::<f64, _>(StandardNormal) * 1.5);
    orbit.k_element(&coeffs)
}

/// An orbit as a submanifold of the unit sphere of `p`.
#[derive(Debug, Clone)]
pub struct HomogeneousOrbit {
    pub data: OrbitData,
}

impl HomogeneousOrbit {
    pub fn new(case: OrbitCase) -> Result<Self> {
        Ok(HomogeneousOrbit {
            data: build_orbit(case)?,
        })
    }

    pub fn base_point(&self) -> Vector {
        self.data.to_coords(&self.data.z0)
    }
}

impl Submanifold for HomogeneousOrbit {
    fn label(&self) -> String {
        self.data.case.id().to_string()
    }

    fn ambient_dim(&self) -> usize {
        self.data.p_dim()
    }

    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame> {
        if (x.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("point is off the unit sphere"));
        }
        let xm = self.data.from_coords(x);
        if (&self.base_point() - x).amax() < 1e-14 {
            return self.data.base_frame();
        }
        let tangent = orthonormal_span(&self.data.ad_matrix(&xm), RANK_TOL);
        if tangent.ncols() != self.dim() {
            return Err(Error::invalid(format!(
                "point is not on the orbit: tangent rank {} instead of {}",
                tangent.ncols(),
                self.dim()
            )));
        }
        let span = tangent.clone().insert_column(0, 0.0);
        let mut span = span;
        span.set_column(0, x);
        Ok(PointFrame {
            x: x.clone(),
            tangent,
            normal: orthonormal_complement(&span),
        })
    }

    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        let normals: Vec<Vector> = frame.normal.column_iter().map(|c| c.into_owned()).collect();
        shape_operator_at(&self.data, &self.data.from_coords(&frame.x), frame, &normals)
    }

    /// `exp(t m) . x` with `[m, x] = v`.
    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        let xm = self.data.from_coords(x);
        let m = self.data.solve_generator(&xm, v)?;
        Ok(self.data.to_coords(&self.data.act(&(m * c(t)), &xm)))
    }

    fn random_point(&self, seed: u64) -> Result<Vector> {
        let mut rng = seeded_rng(seed);
        let g = random_group_generator(&self.data, &mut rng);
        Ok(self.data.to_coords(&self.data.act(&g, &self.data.z0)))
    }

    /// Invariance of `rho` under the Killing field `K(p) = [m, p]` with `K(x) = Z`:
    /// `(nabla_Z rho)(X, Y) = -rho([m, X]^T, Y) - rho(X, [m, Y]^T)`.
    fn nabla_ricci_closed(&self, geom: &EmbeddedGeometry, z: &Vector) -> Option<Mat> {
        let xm = self.data.from_coords(geom.x());
        let m = self.data.solve_generator(&xm, &geom.vector(z)).ok()?;
        let t = &geom.frame.tangent;
        let n = t.ncols();
        let mut mz = Mat::zeros(n, n);
        for j in 0..n {
            let tj = self.data.from_coords(&t.column(j).into_owned());
            mz.set_column(j, &(t.transpose() * self.data.to_coords(&bracket(&m, &tj))));
        }
        Some(-(mz.transpose() * &geom.ricci + &geom.ricci * mz))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{nabla_ricci_numeric, ricci_operator_spectrum, shape_operators_numeric, FD_STEP};
    use crate::linalg::{hstack, random_unit, sym_eigenvalues};
    use rand::SeedableRng;

    fn j() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)])
    }

    fn embed(blocks: &[((usize, usize), CMat)], anti_hermitian: bool) -> CMat {
        let mut m = CMat::zeros(N, N);
        for ((r, s), b) in blocks {
            for i in 0..b.nrows() {
                for k in 0..b.ncols() {
                    m[(r + i, s + k)] += b[(i, k)];
                    if r != s {
                        let low = if anti_hermitian { -b[(i, k)].conj() } else { -b[(i, k)] };
                        m[(s + k, r + i)] += low;
                    }
                }
            }
        }
        m
    }

    fn rand_c(rng: &mut impl Rng, r: usize, s: usize, complex: bool) -> CMat {
        CMat::from_fn(r, s, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = if complex { rng.sample(StandardNormal) } else { 0.0 };
            Complex::new(re, im)
        })
    }

    fn counts(vals: &[f64]) -> (usize, usize, usize) {
        let z = vals.iter().filter(|v| v.abs() < 1e-6).count();
        let p = vals.iter().filter(|v| (*v - 1.0).abs() < 1e-6).count();
        let n = vals.iter().filter(|v| (*v + 1.0).abs() < 1e-6).count();
        (z, p, n)
    }

    fn close(a: &CMat, b: &CMat) -> f64 {
        (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn orbit_dimensions_and_isotropy() {
        for case in OrbitCase::ALL {
            let o = build_orbit(case).unwrap();
            assert!((inner(&o.z0, &o.z0) - 1.0).abs() < 1e-15);
            assert_eq!(o.dim(), case.expected_dim());
            for y in &o.isotropy_basis {
                assert!(close(&bracket(y, &o.z0), &CMat::zeros(N, N)) < 1e-13);
            }
            let frame = o.base_frame().unwrap();
            assert_eq!(frame.normal.ncols(), o.codim());
            let x = Mat::from_columns(std::slice::from_ref(&frame.x));
            let span = hstack(&[&frame.tangent, &frame.normal, &x]);
            let g = span.transpose() * &span;
            assert!((g - Mat::identity(o.p_dim(), o.p_dim())).amax() < 1e-12);
        }
    }

    #[test]
    fn unit_normal_shape_spectra() {
        let expected = [(2, 2, 2), (2, 2, 2), (4, 5, 5), (5, 4, 4)];
        for (case, exp) in OrbitCase::ALL.into_iter().zip(expected) {
            let o = HomogeneousOrbit::new(case).unwrap();
            let x = o.random_point(3).unwrap();
            let geom = EmbeddedGeometry::at(&o, &x).unwrap();
            let mut rng = seeded_rng(11);
            let eta = &geom.frame.normal * random_unit(&mut rng, geom.frame.normal.ncols());
            let a = geom.shape_operator_along(&eta);
            assert_eq!(counts(&sym_eigenvalues(&a)), exp, "{case}");
            assert!(a.trace().abs() < 1e-10);
        }
    }

    #[test]
    fn bracket_shape_operators_match_curves() {
        for case in OrbitCase::ALL {
            let o = HomogeneousOrbit::new(case).unwrap();
            let x = o.random_point(4).unwrap();
            let geom = EmbeddedGeometry::at(&o, &x).unwrap();
            let num = shape_operators_numeric(&o, &geom.frame, FD_STEP).unwrap();
            for (a, b) in geom.shape_ops.iter().zip(&num) {
                assert!((a - b).amax() < 1e-6, "{case}");
            }
        }
    }

    #[test]
    fn killing_form_of_nabla_rho_matches_oracle() {
        for case in OrbitCase::ALL {
            let o = HomogeneousOrbit::new(case).unwrap();
            let x = o.random_point(6).unwrap();
            let geom = EmbeddedGeometry::at(&o, &x).unwrap();
            let mut rng = seeded_rng(7);
            let z = random_unit(&mut rng, geom.dim());
            let closed = o.nabla_ricci_closed(&geom, &z).unwrap();
            let num = nabla_ricci_numeric(&o, &geom, &z, FD_STEP).unwrap();
            assert!((&closed - &num).amax() < 1e-5, "{case}: {}", (closed - num).amax());
        }
    }

    #[test]
    fn cp3_block_formulas() {
        let o = build_orbit(OrbitCase::So5Cp3).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        for _ in 0..5 {
            let (a1, a2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let a = CMat::from_row_slice(2, 2, &[c(a1), c(a2), c(a2), c(-a1)]);
            let b = rand_c(&mut rng, 2, 1, false);
            let cc = rand_c(&mut rng, 2, 1, false);
            let m = embed(&[((0, 2), a.clone()), ((0, 4), b.clone()), ((2, 4), cc.clone())], true);
            assert!(close(&o.project_to_m(&m), &m) < 1e-12);
            let expect = embed(
                &[
                    ((0, 2), &a * j() * c(2.0 * s2)),
                    ((0, 4), -(j() * &b) * c(s2)),
                    ((2, 4), -(j() * &cc) * c(s2)),
                ],
                false,
            );
            assert!(close(&bracket(&m, &o.z0), &expect) < 1e-12);
            let mp = orbit_connection_term(&o, &m).unwrap();
            let expect = embed(&[((0, 4), -(&a * &cc) * c(3.0)), ((2, 4), (&a * &b) * c(3.0))], true);
            assert!(close(&mp, &expect) < 1e-10);
        }
    }

    #[test]
    fn u5_m2_block_formulas_and_spectrum() {
        let o = build_orbit(OrbitCase::U5M2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let lam = ci(rng.sample(StandardNormal));
        let big_a = rand_c(&mut rng, 2, 3, true);
        let m = embed(&[((0, 0), CMat::identity(2, 2) * lam), ((0, 2), big_a.clone())], true);
        assert!(close(&o.project_to_m(&m), &m) < 1e-12);
        let x_expect = -embed(&[((0, 0), j() * lam * c(2.0)), ((0, 2), j() * &big_a)], false);
        assert!(close(&bracket(&m, &o.z0), &x_expect) < 1e-12);
        let mp = orbit_connection_term(&o, &m).unwrap();
        let expect = embed(&[((0, 2), -(&big_a * lam) * c(3.0))], true);
        assert!(close(&mp, &expect) < 1e-10);

        let frame = o.base_frame().unwrap();
        let ops: Vec<Mat> = o.normals.iter().map(|xi| orbit_shape_operator(&o, xi).unwrap()).collect();
        let sum_sq: Mat = ops.iter().map(|a| a * a).sum();
        let xc = frame.tangent.transpose() * o.to_coords(&x_expect);
        let img = o.from_coords(&(&frame.tangent * (&sum_sq * xc)));
        let a_part = -embed(&[((0, 2), j() * &big_a * c(4.0))], false);
        assert!(close(&img, &a_part) < 1e-10);
        let geom = EmbeddedGeometry::from_parts(frame, ops);
        let spec = ricci_operator_spectrum(&geom.ricci, 1e-9);
        assert_eq!(spec.len(), 2);
        assert!((spec[0].value - 8.0).abs() < 1e-9 && spec[0].multiplicity == 12);
        assert!((spec[1].value - 12.0).abs() < 1e-9 && spec[1].multiplicity == 1);
    }

    #[test]
    fn u5_m1_connection_formula() {
        let o = build_orbit(OrbitCase::U5M1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let a0 = rand_c(&mut rng, 2, 2, true);
        // A with conj(A) J = -J A.
        let a = (&a0 + j() * a0.map(|v| v.conj()) * j()) * c(0.5);
        assert!(close(&(a.map(|v| v.conj()) * j()), &-(j() * &a)) < 1e-12);
        let lam = ci(rng.sample(StandardNormal));
        let mu = ci(rng.sample(StandardNormal));
        let b = rand_c(&mut rng, 2, 1, true);
        let cc = rand_c(&mut rng, 2, 1, true);
        let m = embed(
            &[
                ((0, 0), CMat::identity(2, 2) * lam),
                ((2, 2), CMat::identity(2, 2) * mu),
                ((0, 2), a.clone()),
                ((0, 4), b.clone()),
                ((2, 4), cc.clone()),
            ],
            true,
        );
        assert!(close(&o.project_to_m(&m), &m) < 1e-12);
        let s2 = std::f64::consts::FRAC_1_SQRT_2;
        let abar = a.map(|v| v.conj());
        let expect = embed(
            &[
                ((0, 0), j() * lam * c(-2.0 * s2)),
                ((2, 2), j() * mu * c(-2.0 * s2)),
                ((0, 2), &abar * j() * c(2.0 * s2)),
                ((0, 4), -(j() * &b) * c(s2)),
                ((2, 4), -(j() * &cc) * c(s2)),
            ],
            false,
        );
        assert!(close(&bracket(&m, &o.z0), &expect) < 1e-12);
        let mp = orbit_connection_term(&o, &m).unwrap();
        let top = -(&b * lam + &a * &cc) * c(3.0);
        let mid = -(&cc * mu - abar.transpose() * &b) * c(3.0);
        let expect = embed(&[((0, 4), top), ((2, 4), mid)], true);
        assert!(close(&mp, &expect) < 1e-10);
    }

    #[test]
    fn class_a_identities_hold_termwise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for case in [OrbitCase::So5Cp3, OrbitCase::U5M2] {
            let o = build_orbit(case).unwrap();
            for _ in 0..5 {
                let coeffs: Vec<f64> = (0..o.dim()).map(|_| rng.sample(StandardNormal)).collect();
                let m = o.m_element(&coeffs);
                let w: Vec<f64> = (0..o.normals.len()).map(|_| rng.sample(StandardNormal)).collect();
                let mut xi = CMat::zeros(N, N);
                for (n, wi) in o.normals.iter().zip(&w) {
                    xi += n * c(*wi);
                }
                let (a, b) = class_a_terms(&o, &m, &xi).unwrap();
                assert!(a.abs() < 1e-10 && b.abs() < 1e-10, "{case}: {a} {b}");
            }
        }
        for case in OrbitCase::ALL {
            let o = build_orbit(case).unwrap();
            assert!(homog_class_a_defect(&o, 20, 9).unwrap() < 1e-10, "{case}");
        }
    }

    #[test]
    fn einstein_and_non_einstein_orbits() {
        let grass = HomogeneousOrbit::new(OrbitCase::So5Grassmann).unwrap();
        let geom = EmbeddedGeometry::at(&grass, &grass.base_point()).unwrap();
        assert_eq!(ricci_operator_spectrum(&geom.ricci, 1e-9).len(), 1);
        let cp3 = HomogeneousOrbit::new(OrbitCase::So5Cp3).unwrap();
        let geom = EmbeddedGeometry::at(&cp3, &cp3.base_point()).unwrap();
        assert!(ricci_operator_spectrum(&geom.ricci, 1e-9).len() > 1);
    }

    #[test]
    fn group_action_preserves_spectra() {
        let o = HomogeneousOrbit::new(OrbitCase::U5M1).unwrap();
        let base = EmbeddedGeometry::at(&o, &o.base_point()).unwrap();
        let moved = EmbeddedGeometry::at(&o, &o.random_point(21).unwrap()).unwrap();
        let a = sym_eigenvalues(&base.ricci);
        let b = sym_eigenvalues(&moved.ricci);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9));
    }

    #[test]
    fn doc_serializes_complex_entries() {
        let o = build_orbit(OrbitCase::U5M2).unwrap();
        let doc = o.to_doc();
        assert_eq!(doc.normals.len(), 6);
        let s = serde_json::to_string(&doc).unwrap();
        assert!(s.contains("\"u5_M2_13\""));
        assert_eq!(serde_json::from_str::<OrbitDoc>(&s).unwrap(), doc);
    }
}
