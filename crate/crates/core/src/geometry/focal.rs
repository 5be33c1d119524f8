//! The focal submanifolds of an FKM polynomial as [`Submanifold`]s, with the closed-form
//! shape operators, Ricci tensors and covariant derivatives that hold on them.

use crate::clifford::{clifford_sphere_frame, CliffordSystem};
use crate::error::{Error, Result};
use crate::fkm::{
    frame_m1, frame_m2, m2_point_from_vector, project_to_m1_with, random_m1_point, random_m2_point, FocalPoint,
    FocalSet, NewtonOptions,
};
use crate::geometry::{EmbeddedGeometry, PointFrame, Submanifold};
use crate::linalg::{Mat, Vector};

/// `M1 = {<P_a x, x> = 0}` of a Clifford system.
#[derive(Debug, Clone)]
pub struct FocalM1 {
    pub sys: CliffordSystem,
}

/// `M2 = {P x = x}` of a Clifford system.
#[derive(Debug, Clone)]
pub struct FocalM2 {
    pub sys: CliffordSystem,
}

impl FocalM1 {
    pub fn new(sys: CliffordSystem) -> Self {
        FocalM1 { sys }
    }

    fn point(&self, x: &Vector) -> FocalPoint {
        FocalPoint {
            x: x.clone(),
            manifold: FocalSet::M1,
            fixing_p: None,
            constraints: Vec::new(),
        }
    }
}

impl FocalM2 {
    pub fn new(sys: CliffordSystem) -> Self {
        FocalM2 { sys }
    }
}

/// Columns `T^T P_a P_b v` for `a < b`.
fn pair_columns(sys: &CliffordSystem, tangent: &Mat, v: &Vector) -> Mat {
    let pv: Vec<Vector> = sys.generators().iter().map(|p| p * v).collect();
    let m = sys.m;
    let mut out = Mat::zeros(tangent.ncols(), m * (m + 1) / 2);
    let mut c = 0;
    for a in 0..=m {
        for b in (a + 1)..=m {
            out.set_column(c, &(tangent.transpose() * (sys.generator(a) * &pv[b])));
            c += 1;
        }
    }
    out
}

/// Columns `T^T P_a v` for all `a`.
fn single_columns(sys: &CliffordSystem, tangent: &Mat, v: &Vector) -> Mat {
    let cols: Vec<Vector> = sys.generators().iter().map(|p| tangent.transpose() * (p * v)).collect();
    Mat::from_columns(&cols)
}

fn sym_outer(a: &Mat, b: &Mat) -> Mat {
    let ab = a * b.transpose();
    &ab + ab.transpose()
}

/// `A_eta X = -(P_eta X)^T` for the normal `eta = sum_a c_a P_a x`, one matrix per normal
/// column of the frame.
pub fn shape_operators_m1(sys: &CliffordSystem, frame: &PointFrame) -> Vec<Mat> {
    let t = &frame.tangent;
    let reduced: Vec<Mat> = sys.generators().iter().map(|p| t.transpose() * p * t).collect();
    let px: Vec<Vector> = sys.generators().iter().map(|p| p * &frame.x).collect();
    frame
        .normal
        .column_iter()
        .map(|eta| {
            let mut a = Mat::zeros(t.ncols(), t.ncols());
            for (r, pxj) in reduced.iter().zip(&px) {
                let c = eta.dot(pxj);
                if c != 0.0 {
                    a -= r * c;
                }
            }
            a
        })
        .collect()
}

/// Shape operator of the single normal `P_alpha x` (ambient frame).
pub fn shape_operator_m1(sys: &CliffordSystem, frame: &PointFrame, alpha: usize) -> Mat {
    let t = &frame.tangent;
    -(t.transpose() * sys.generator(alpha) * t)
}

/// `rho = 2(l - m - 2) g + sum_{a != b} <., P_a P_b x> <., P_a P_b x>` in the tangent basis.
pub fn ricci_closed_form_m1(sys: &CliffordSystem, frame: &PointFrame) -> Mat {
    let n = frame.dim();
    let u = pair_columns(sys, &frame.tangent, &frame.x);
    Mat::identity(n, n) * (2.0 * (sys.l as f64 - sys.m as f64 - 2.0)) + &u * u.transpose() * 2.0
}

/// `(nabla_Z rho)(X, Y) = 2 sum_{a<b} <X, P_a P_b Z><Y, P_a P_b x> + <X, P_a P_b x><Y, P_a P_b Z>`
/// as a matrix in the tangent basis; `z` is an ambient tangent vector.
pub fn nabla_ricci_m1(sys: &CliffordSystem, frame: &PointFrame, z: &Vector) -> Mat {
    let u = pair_columns(sys, &frame.tangent, &frame.x);
    let vz = pair_columns(sys, &frame.tangent, z);
    sym_outer(&vz, &u) * 2.0
}

/// Scalar form of [`nabla_ricci_m1`] for ambient tangent vectors.
pub fn nabla_sigma_m1(sys: &CliffordSystem, x: &Vector, xv: &Vector, yv: &Vector, zv: &Vector) -> f64 {
    let mut s = 0.0;
    for a in 0..=sys.m {
        for b in (a + 1)..=sys.m {
            let pab = sys.generator(a) * sys.generator(b);
            let px = &pab * x;
            let pz = &pab * zv;
            s += xv.dot(&pz) * yv.dot(&px) + xv.dot(&px) * yv.dot(&pz);
        }
    }
    2.0 * s
}

/// `A(X, Y) = sum_{a<b} <X, P_a P_b x> P_a P_b Y + <X, P_a P_b Y> P_a P_b x` and the norm
/// of its component off `L = R x ⊕ Span{P_a x}`.
pub fn a_tensor_m1(sys: &CliffordSystem, x: &Vector, xv: &Vector, yv: &Vector) -> (Vector, f64) {
    let n = x.len();
    let mut out = Vector::zeros(n);
    for a in 0..=sys.m {
        for b in (a + 1)..=sys.m {
            let pab = sys.generator(a) * sys.generator(b);
            let px = &pab * x;
            let py = &pab * yv;
            out += &py * xv.dot(&px) + &px * xv.dot(&py);
        }
    }
    let mut l_basis = vec![x.clone()];
    l_basis.extend(sys.generators().iter().map(|p| p * x));
    let mut off = out.clone();
    for b in &l_basis {
        let c = off.dot(b);
        off -= b * c;
    }
    let r = off.norm();
    (out, r)
}

/// `B(X) = sum_{a<b} <X, P_a P_b x> P_a P_b X`, which equals `A(X, X)`.
pub fn b_vector_m1(sys: &CliffordSystem, x: &Vector, xv: &Vector) -> Vector {
    a_tensor_m1(sys, x, xv, xv).0
}

/// Shape operators of `M2`:
/// `A_eta X = (sum_a <P_a X, x> P_a eta + <P_a X, eta> P_a x)^T`.
pub fn shape_operators_m2(sys: &CliffordSystem, frame: &PointFrame) -> Vec<Mat> {
    let t = &frame.tangent;
    let c = single_columns(sys, t, &frame.x);
    frame
        .normal
        .column_iter()
        .map(|eta| {
            let e = single_columns(sys, t, &eta.into_owned());
            sym_outer(&e, &c)
        })
        .collect()
}

/// `V(X, Y) = sum_a <X, P_a x><Y, P_a x>` and
/// `W(X, Y) = sum_{a != b} <X, P_a P_b x><Y, P_a P_b x> - 2 V(X, Y)` in the tangent basis.
pub fn v_w_m2(sys: &CliffordSystem, frame: &PointFrame) -> (Mat, Mat) {
    let h = single_columns(sys, &frame.tangent, &frame.x);
    let u = pair_columns(sys, &frame.tangent, &frame.x);
    let v = &h * h.transpose();
    let w = &u * u.transpose() * 2.0 - &v * 2.0;
    (v, w)
}

/// `tau = sum A_a^2 = m g + (l - 2m) V - W`.
pub fn tau_closed_form_m2(sys: &CliffordSystem, frame: &PointFrame) -> Mat {
    let n = frame.dim();
    let (v, w) = v_w_m2(sys, frame);
    Mat::identity(n, n) * sys.m as f64 + v * (sys.l as f64 - 2.0 * sys.m as f64) - w
}

/// `rho = (l + m - 2) g - tau`.
pub fn ricci_closed_form_m2(sys: &CliffordSystem, frame: &PointFrame) -> Mat {
    let n = frame.dim();
    Mat::identity(n, n) * (sys.l as f64 + sys.m as f64 - 2.0) - tau_closed_form_m2(sys, frame)
}

/// `(nabla_Z V, nabla_Z W)` as matrices in the tangent basis:
/// `nabla_Z V = sum_a <., P_a Z><., P_a x> + sym`,
/// `nabla_Z W = sum_{a != b} <., P_a P_b Z><., P_a P_b x> + sym - 2 nabla_Z V`.
pub fn nabla_v_w_m2_matrices(sys: &CliffordSystem, frame: &PointFrame, z: &Vector) -> (Mat, Mat) {
    let t = &frame.tangent;
    let dv = sym_outer(&single_columns(sys, t, z), &single_columns(sys, t, &frame.x));
    let dw = sym_outer(&pair_columns(sys, t, z), &pair_columns(sys, t, &frame.x)) * 2.0 - &dv * 2.0;
    (dv, dw)
}

/// Scalar `((nabla_Z V)(X, Y), (nabla_Z W)(X, Y))` for ambient tangent vectors.
pub fn nabla_v_w_m2(sys: &CliffordSystem, frame: &PointFrame, xv: &Vector, yv: &Vector, zv: &Vector) -> (f64, f64) {
    let (dv, dw) = nabla_v_w_m2_matrices(sys, frame, zv);
    let xc = frame.tangent.transpose() * xv;
    let yc = frame.tangent.transpose() * yv;
    (xc.dot(&(&dv * &yc)), xc.dot(&(&dw * &yc)))
}

/// `nabla rho = -nabla tau = -(l - 2m) nabla V + nabla W`.
pub fn nabla_ricci_m2(sys: &CliffordSystem, frame: &PointFrame, z: &Vector) -> Mat {
    let (dv, dw) = nabla_v_w_m2_matrices(sys, frame, z);
    dw - dv * (sys.l as f64 - 2.0 * sys.m as f64)
}

/// The triple `(X, Y, Z) = (Q_1 Q_2 x, Q_1 x, Q_2 x)` at a point of `M2` (needs `m >= 2`).
pub fn m2_witness_triple(sys: &CliffordSystem, pt: &FocalPoint) -> Result<(Vector, Vector, Vector)> {
    if sys.m < 2 {
        return Err(Error::invalid("the triple needs m >= 2"));
    }
    let c = pt
        .fixing_p
        .as_ref()
        .ok_or_else(|| Error::invalid("M2 point without fixing element"))?;
    let q = clifford_sphere_frame(sys, c)?;
    let x = &pt.x;
    Ok((&q.matrices[1] * (&q.matrices[2] * x), &q.matrices[1] * x, &q.matrices[2] * x))
}

impl Submanifold for FocalM1 {
    fn label(&self) -> String {
        format!("M1 of ({}, {}) [{}]", self.sys.m, self.sys.l - self.sys.m - 1, self.sys.family)
    }

    fn ambient_dim(&self) -> usize {
        self.sys.ambient_dim()
    }

    fn dim(&self) -> usize {
        2 * self.sys.l - self.sys.m - 2
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame> {
        Ok(PointFrame::from(&frame_m1(&self.sys, &self.point(x))?))
    }

    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        Ok(shape_operators_m1(&self.sys, frame))
    }

    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        let opts = NewtonOptions {
            polish: true,
            ..NewtonOptions::default()
        };
        Ok(project_to_m1_with(&self.sys, &(x + v * t), &opts)?.x)
    }

    fn random_point(&self, seed: u64) -> Result<Vector> {
        Ok(random_m1_point(&self.sys, seed)?.x)
    }

    fn nabla_ricci_closed(&self, geom: &EmbeddedGeometry, z: &Vector) -> Option<Mat> {
        Some(nabla_ricci_m1(&self.sys, &geom.frame, &geom.vector(z)))
    }
}

impl Submanifold for FocalM2 {
    fn label(&self) -> String {
        format!("M2 of ({}, {}) [{}]", self.sys.m, self.sys.l - self.sys.m - 1, self.sys.family)
    }

    fn ambient_dim(&self) -> usize {
        self.sys.ambient_dim()
    }

    fn dim(&self) -> usize {
        self.sys.l + self.sys.m - 1
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame> {
        let pt = m2_point_from_vector(&self.sys, x)?;
        Ok(PointFrame::from(&frame_m2(&self.sys, &pt)?))
    }

    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        Ok(shape_operators_m2(&self.sys, frame))
    }

    /// `R(y) = normalize((I + P(y)) y)` with `P(y)` the normalized `sum <P_a y, y> P_a`.
    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        let y = x + v * t;
        let c = self.sys.quadratic_values(&y);
        let cn: f64 = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if cn < 1e-12 {
            return Err(Error::invalid("retraction undefined on M1"));
        }
        let c: Vec<f64> = c.iter().map(|a| a / cn).collect();
        let p = self.sys.combination(&c);
        Ok((&y + p * &y).normalize())
    }

    fn random_point(&self, seed: u64) -> Result<Vector> {
        Ok(random_m2_point(&self.sys, seed)?.x)
    }

    fn nabla_ricci_closed(&self, geom: &EmbeddedGeometry, z: &Vector) -> Option<Mat> {
        Some(nabla_ricci_m2(&self.sys, &geom.frame, &geom.vector(z)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{build_clifford_system, CliffordFamily};
    use crate::geometry::{nabla_ricci_numeric, shape_operators_numeric, FD_STEP};
    use crate::linalg::{random_unit, seeded_rng, sym_eigenvalues};

    fn counts(vals: &[f64]) -> (usize, usize, usize) {
        let z = vals.iter().filter(|v| v.abs() < 1e-6).count();
        let p = vals.iter().filter(|v| (*v - 1.0).abs() < 1e-6).count();
        let n = vals.iter().filter(|v| (*v + 1.0).abs() < 1e-6).count();
        (z, p, n)
    }

    #[test]
    fn m1_shape_spectrum_and_kernel() {
        let sys = build_clifford_system(3, 2, CliffordFamily::Standard).unwrap();
        let mf = FocalM1::new(sys.clone());
        let x = mf.random_point(2).unwrap();
        let geom = EmbeddedGeometry::at(&mf, &x).unwrap();
        let a0 = shape_operator_m1(&sys, &geom.frame, 0);
        assert_eq!(counts(&sym_eigenvalues(&a0)), (3, 4, 4));
        for b in 1..=3 {
            let v = geom.coords(&(sys.generator(0) * (sys.generator(b) * &x)));
            assert!((&a0 * v).amax() < 1e-12);
        }
        assert!(a0.trace().abs() < 1e-12);
    }

    #[test]
    fn m1_closed_forms_match_gauss_and_oracle() {
        let sys = build_clifford_system(2, 2, CliffordFamily::Standard).unwrap();
        let mf = FocalM1::new(sys.clone());
        let x = mf.random_point(5).unwrap();
        let geom = EmbeddedGeometry::at(&mf, &x).unwrap();
        assert!((ricci_closed_form_m1(&sys, &geom.frame) - &geom.ricci).amax() < 1e-9);
        let numeric = shape_operators_numeric(&mf, &geom.frame, FD_STEP).unwrap();
        for (a, b) in geom.shape_ops.iter().zip(&numeric) {
            assert!((a - b).amax() < 1e-6);
        }
        let mut rng = seeded_rng(3);
        for _ in 0..3 {
            let z = random_unit(&mut rng, geom.dim());
            let closed = mf.nabla_ricci_closed(&geom, &z).unwrap();
            let num = nabla_ricci_numeric(&mf, &geom, &z, FD_STEP).unwrap();
            assert!((closed - num).amax() < 1e-5);
        }
    }

    #[test]
    fn m2_closed_forms_match_gauss_and_oracle() {
        let sys = build_clifford_system(3, 2, CliffordFamily::Standard).unwrap();
        let mf = FocalM2::new(sys.clone());
        let x = mf.random_point(8).unwrap();
        let geom = EmbeddedGeometry::at(&mf, &x).unwrap();
        let tau: Mat = geom.shape_ops.iter().map(|a| a * a).sum();
        assert!((tau_closed_form_m2(&sys, &geom.frame) - tau).amax() < 1e-9);
        assert!((ricci_closed_form_m2(&sys, &geom.frame) - &geom.ricci).amax() < 1e-9);
        let numeric = shape_operators_numeric(&mf, &geom.frame, FD_STEP).unwrap();
        for (a, b) in geom.shape_ops.iter().zip(&numeric) {
            assert!((a - b).amax() < 1e-6);
        }
        let mut rng = seeded_rng(4);
        for _ in 0..3 {
            let z = random_unit(&mut rng, geom.dim());
            let closed = mf.nabla_ricci_closed(&geom, &z).unwrap();
            let num = nabla_ricci_numeric(&mf, &geom, &z, FD_STEP).unwrap();
            assert!((&closed - &num).amax() < 1e-5, "{}", (closed - num).amax());
        }
    }

    #[test]
    fn m2_shape_spectrum_and_plus_eigenvectors() {
        let sys = build_clifford_system(2, 2, CliffordFamily::Standard).unwrap();
        let mf = FocalM2::new(sys.clone());
        let x = mf.random_point(1).unwrap();
        let geom = EmbeddedGeometry::at(&mf, &x).unwrap();
        let pt = m2_point_from_vector(&sys, &x).unwrap();
        let q = clifford_sphere_frame(&sys, pt.fixing_p.as_ref().unwrap()).unwrap();
        let mut rng = seeded_rng(2);
        let eta = &geom.frame.normal * random_unit(&mut rng, geom.frame.normal.ncols());
        let a = geom.shape_operator_along(&eta);
        assert_eq!(counts(&sym_eigenvalues(&a)), (1, 2, 2));
        for qi in &q.matrices[1..] {
            let v = geom.coords(&(qi * (&x + &eta)));
            assert!((&a * &v - &v).amax() < 1e-10);
        }
    }
}
