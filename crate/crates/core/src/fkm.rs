//! The FKM polynomial `F(x) = |x|^4 - 2 sum <P_a x, x>^2` and its two focal submanifolds
//!
//! * `M1 = {x in S^{2l-1} : <P_a x, x> = 0 for all a}` (where `F = 1`),
//! * `M2 = {x in S^{2l-1} : P x = x for some P in the Clifford sphere}` (where `F = -1`),
//!
//! with point generators (Newton projection, eigenspace sampling, joint eigenvectors of
//! commuting 4-products, restricted maximization) and orthonormal frames.

use log::debug;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{clifford_sphere_frame, CliffordSystem};
use crate::error::{Error, Result};
use crate::linalg::{
    checked_svd, derive_seed, gaussian_vector, numerical_rank, orthonormal_complement, projector_range, random_unit,
    seeded_rng, serde_columns, serde_vector, sym_eigen_sorted, Mat, SeededRng, Vector,
};

/// Tolerance used when validating that a point lies on a focal set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FocalSet {
    M1,
    M2,
}

impl std::fmt::Display for FocalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FocalSet::M1 => "M1",
            FocalSet::M2 => "M2",
        })
    }
}

impl std::str::FromStr for FocalSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M1" | "m1" => Ok(FocalSet::M1),
            "M2" | "m2" => Ok(FocalSet::M2),
            other => Err(Error::invalid(format!("unknown focal set `{other}`"))),
        }
    }
}

/// A point on one of the focal submanifolds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocalPoint {
    #[serde(with = "serde_vector")]
    pub x: Vector,
    pub manifold: FocalSet,
    /// Coefficients `c` of the fixing element `P = sum c_a P_a` (M2 only).
    pub fixing_p: Option<Vec<f64>>,
    /// Index quadruples `(a, b, c, d)` with `P_a P_b P_c P_d x = x`.
    #[serde(default)]
    pub constraints: Vec<[usize; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Numeric,
}

/// Orthonormal tangent and normal bases (normals inside the sphere, all orthogonal to `x`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TangentFrame {
    pub point: FocalPoint,
    #[serde(with = "serde_columns")]
    pub tangent: Mat,
    #[serde(with = "serde_columns")]
    pub normal: Mat,
    /// Coefficient rows of `Q_0 = P, Q_1, ..., Q_m` (M2 only).
    pub q_frame: Option<Vec<Vec<f64>>>,
    pub provenance: Provenance,
}

pub fn fkm_value(sys: &CliffordSystem, x: &Vector) -> f64 {
    let r2 = x.norm_squared();
    let s: f64 = sys.quadratic_values(x).iter().map(|v| v * v).sum();
    r2 * r2 - 2.0 * s
}

/// Euclidean gradient `4|x|^2 x - 8 sum <P_a x, x> P_a x`.
pub fn fkm_gradient(sys: &CliffordSystem, x: &Vector) -> Vector {
    let mut g = x * (4.0 * x.norm_squared());
    for p in sys.generators() {
        let px = p * x;
        let c = px.dot(x);
        g -= px * (8.0 * c);
    }
    g
}

/// Gradient of the restriction of `F` to the unit sphere at a unit `x`.
pub fn spherical_gradient(sys: &CliffordSystem, x: &Vector) -> Vector {
    let g = fkm_gradient(sys, x);
    let radial = g.dot(x);
    g - x * radial
}

/// Spherical Laplacian of `F|_S` by second differences along great circles, one
/// Richardson level.
pub fn spherical_laplacian_numeric(sys: &CliffordSystem, x: &Vector, h: f64) -> f64 {
    let n = x.len();
    let basis = orthonormal_complement(&Mat::from_columns(std::slice::from_ref(x)));
    debug_assert_eq!(basis.ncols(), n - 1);
    let f0 = fkm_value(sys, x);
    let second = |step: f64| -> f64 {
        let (s, c) = step.sin_cos();
        basis
            .column_iter()
            .map(|e| {
                let plus = x * c + e * s;
                let minus = x * c - e * s;
                (fkm_value(sys, &plus) - 2.0 * f0 + fkm_value(sys, &minus)) / (step * step)
            })
            .sum()
    };
    let coarse = second(h);
    let fine = second(h / 2.0);
    (4.0 * fine - coarse) / 3.0
}

/// Measured `|grad f|^2` and `Laplacian f` on one level set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoparametricReport {
    pub level: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub grad_sq_mean: f64,
    pub grad_sq_spread: f64,
    pub laplacian_mean: f64,
    pub laplacian_spread: f64,
    /// Predicted values `16 (1 - f^2)` and `4 (N + 2)(1 - f) - 16 (m + 1)` for a
    /// quartic of this form on `S^{N-1}`.
    pub predicted_grad_sq: f64,
    pub predicted_laplacian: f64,
}

impl IsoparametricReport {
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.grad_sq_spread <= tol && self.laplacian_spread <= tol
    }
}

/// Sample `n_samples` points of `f^{-1}(level)` and measure the spread of `|grad f|^2` and
/// `Laplacian f` over them.
pub fn isoparametric_consistency(
    sys: &CliffordSystem,
    level: f64,
    n_samples: usize,
    seed: u64,
) -> Result<IsoparametricReport> {
    if !(level > -1.0 && level < 1.0) {
        return Err(Error::invalid(format!("level {level} is not a regular value in (-1, 1)")));
    }
    let n = sys.ambient_dim();
    let mut grads = Vec::with_capacity(n_samples);
    let mut laps = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let sub = derive_seed(seed, i as u64);
        let mut rng = seeded_rng(sub);
        let x = project_to_level(sys, &random_unit(&mut rng, n), level, sub)?;
        grads.push(spherical_gradient(sys, &x).norm_squared());
        laps.push(spherical_laplacian_numeric(sys, &x, 2e-3));
    }
    let stats = |v: &[f64]| -> (f64, f64) {
        if v.is_empty() {
            return (f64::NAN, 0.0);
        }
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (mean, hi - lo)
    };
    let (grad_sq_mean, grad_sq_spread) = stats(&grads);
    let (laplacian_mean, laplacian_spread) = stats(&laps);
    let nn = n as f64;
    Ok(IsoparametricReport {
        level,
        n_samples,
        seed,
        grad_sq_mean,
        grad_sq_spread,
        laplacian_mean,
        laplacian_spread,
        predicted_grad_sq: 16.0 * (1.0 - level * level),
        predicted_laplacian: 4.0 * (nn + 2.0) * (1.0 - level) - 16.0 * (sys.m as f64 + 1.0),
    })
}

/// Newton flow along the spherical gradient onto `F = level`.
fn project_to_level(sys: &CliffordSystem, x0: &Vector, level: f64, seed: u64) -> Result<Vector> {
    let mut x = x0.normalize();
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        let f = fkm_value(sys, &x);
        residual = (f - level).abs();
        if residual <= 1e-14 {
            return Ok(x);
        }
        let g = spherical_gradient(sys, &x);
        let g2 = g.norm_squared();
        if g2 < 1e-20 {
            break;
        }
        let mut step = 1.0;
        loop {
            let trial = (&x - &g * (step * (f - level) / g2)).normalize();
            if (fkm_value(sys, &trial) - level).abs() < residual || step < 1e-6 {
                x = trial;
                break;
            }
            step *= 0.5;
        }
    }
    if residual <= 1e-12 {
        return Ok(x);
    }
    Err(Error::NonConvergence {
        iterations: 100,
        residual,
        seed: Some(seed),
        last_iterate: x.iter().copied().collect(),
    })
}

/// Options for the Gauss-Newton projection onto a set of quadric constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Keep iterating after `tol` is met, until the residual stops decreasing.
    pub polish: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 50,
            restarts: 8,
            seed: 0,
            polish: false,
        }
    }
}

fn quadric_residual(mats: &[Mat], targets: &[f64], x: &Vector) -> Vector {
    let k = mats.len();
    let mut r = Vector::zeros(k + 1);
    for (j, m) in mats.iter().enumerate() {
        r[j] = (m * x).dot(x) - targets[j];
    }
    r[k] = x.norm_squared() - 1.0;
    r
}

fn single_newton_run(mats: &[Mat], targets: &[f64], x0: &Vector, opts: &NewtonOptions) -> (Vector, f64, usize) {
    let n = x0.len();
    let k = mats.len();
    let mut x = x0.clone();
    let mut r = quadric_residual(mats, targets, &x);
    let mut res = r.amax();
    let mut iters = 0;
    while iters < opts.max_iter {
        if res <= opts.tol && !opts.polish {
            break;
        }
        if res < 1e-16 {
            break;
        }
        iters += 1;
        let mut jac = Mat::zeros(k + 1, n);
        for (j, m) in mats.iter().enumerate() {
            jac.row_mut(j).copy_from(&(m * &x * 2.0).transpose());
        }
        jac.row_mut(k).copy_from(&(&x * 2.0).transpose());
        let svd = checked_svd(&jac);
        let smax = svd.singular_values.max();
        let step = -svd.solve(&r, 1e-12 * smax.max(1e-300));
        let merit = r.norm_squared();
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = &x + &step * alpha;
            let rt = quadric_residual(mats, targets, &trial);
            if rt.norm_squared() < merit {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        res = r.amax();
    }
    (x, res, iters)
}

/// Min-norm Gauss-Newton onto `{<M_j x, x> = c_j} ∩ S`, with line search and random
/// restarts from perturbations of `x0`.
pub fn newton_quadrics(mats: &[Mat], targets: &[f64], x0: &Vector, opts: &NewtonOptions) -> Result<Vector> {
    if x0.norm() == 0.0 {
        return Err(Error::invalid("starting point must be nonzero"));
    }
    if mats.len() != targets.len() {
        return Err(Error::invalid("one target per quadric required"));
    }
    let mut best: Option<(Vector, f64)> = None;
    let mut total_iters = 0;
    let mut start = x0.clone();
    for attempt in 0..=opts.restarts {
        let (x, res, iters) = single_newton_run(mats, targets, &start, opts);
        total_iters += iters;
        if res <= opts.tol {
            let xn = x.normalize();
            // normalizing moves the quadric values by O(eps); keep whichever is better
            let rn = quadric_residual(mats, targets, &xn).amax();
            return Ok(if rn <= res { xn } else { x });
        }
        if best.as_ref().is_none_or(|(_, r)| res < *r) {
            best = Some((x, res));
        }
        let mut rng = seeded_rng(derive_seed(opts.seed, attempt as u64 + 1));
        let noise = gaussian_vector(&mut rng, x0.len()) * (0.3 * x0.norm() / (x0.len() as f64).sqrt());
        start = x0 + noise;
        debug!("newton restart {attempt}: residual {res:.3e}");
    }
    let (x, residual) = best.expect("at least one attempt");
    Err(Error::NonConvergence {
        iterations: total_iters,
        residual,
        seed: Some(opts.seed),
        last_iterate: x.iter().copied().collect(),
    })
}

fn check_unit(x: &Vector) -> Result<()> {
    let n = x.norm();
    if (n - 1.0).abs() > MEMBERSHIP_TOL {
        return Err(Error::invalid(format!("point is not unit, |x| = {n}")));
    }
    Ok(())
}

/// Max over `a` of `|<P_a x, x>|`.
pub fn m1_residual(sys: &CliffordSystem, x: &Vector) -> f64 {
    sys.quadratic_values(x).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn project_to_m1(sys: &CliffordSystem, x0: &Vector, max_iter: usize, tol: f64) -> Result<FocalPoint> {
    let opts = NewtonOptions {
        tol,
        max_iter,
        ..NewtonOptions::default()
    };
    project_to_m1_with(sys, x0, &opts)
}

pub fn project_to_m1_with(sys: &CliffordSystem, x0: &Vector, opts: &NewtonOptions) -> Result<FocalPoint> {
    if x0.len() != sys.ambient_dim() {
        return Err(Error::invalid("dimension mismatch"));
    }
    let targets = vec![0.0; sys.m + 1];
    let x = newton_quadrics(sys.generators(), &targets, x0, opts)?;
    Ok(FocalPoint {
        x,
        manifold: FocalSet::M1,
        fixing_p: None,
        constraints: Vec::new(),
    })
}

pub fn random_m1_point(sys: &CliffordSystem, seed: u64) -> Result<FocalPoint> {
    let mut rng = seeded_rng(seed);
    let x0 = random_unit(&mut rng, sys.ambient_dim());
    let opts = NewtonOptions {
        seed,
        ..NewtonOptions::default()
    };
    project_to_m1_with(sys, &x0, &opts)
}

/// Uniform random unit vector in `E_+(P)` for `P = sum c_a P_a`.
pub fn sample_m2(sys: &CliffordSystem, coeffs: &[f64], seed: u64) -> Result<FocalPoint> {
    let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if coeffs.len() != sys.m + 1 || (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("fixing element must be a unit vector of length m + 1"));
    }
    let n = sys.ambient_dim();
    let p = sys.combination(coeffs);
    let mut rng = seeded_rng(seed);
    loop {
        let g = gaussian_vector(&mut rng, n);
        let v = (&g + &p * &g) * 0.5;
        let vn = v.norm();
        if vn > 1e-6 {
            return Ok(FocalPoint {
                x: v / vn,
                manifold: FocalSet::M2,
                fixing_p: Some(coeffs.to_vec()),
                constraints: Vec::new(),
            });
        }
    }
}

pub fn random_m2_point(sys: &CliffordSystem, seed: u64) -> Result<FocalPoint> {
    let mut rng = seeded_rng(seed);
    let c = random_unit(&mut rng, sys.m + 1);
    sample_m2(sys, c.as_slice(), derive_seed(seed, 1))
}

/// Recover the fixing element of a point of `M2`: `c_a = <P_a x, x>`.
pub fn m2_point_from_vector(sys: &CliffordSystem, x: &Vector) -> Result<FocalPoint> {
    check_unit(x)?;
    let c = sys.quadratic_values(x);
    let cn: f64 = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c: Vec<f64> = c.iter().map(|v| v / cn).collect();
    let pt = FocalPoint {
        x: x.clone(),
        manifold: FocalSet::M2,
        fixing_p: Some(c),
        constraints: Vec::new(),
    };
    validate_point(sys, &pt)?;
    Ok(pt)
}

/// Check the membership invariants of a focal point.
pub fn validate_point(sys: &CliffordSystem, pt: &FocalPoint) -> Result<()> {
    if pt.x.len() != sys.ambient_dim() {
        return Err(Error::invalid("point dimension does not match the system"));
    }
    check_unit(&pt.x)?;
    match pt.manifold {
        FocalSet::M1 => {
            let r = m1_residual(sys, &pt.x);
            if r > MEMBERSHIP_TOL {
                return Err(Error::invalid(format!("point is off M1 (residual {r:.3e})")));
            }
        }
        FocalSet::M2 => {
            let c = pt
                .fixing_p
                .as_ref()
                .ok_or_else(|| Error::invalid("M2 point without fixing element"))?;
            if c.len() != sys.m + 1 {
                return Err(Error::invalid("fixing element has the wrong length"));
            }
            let p = sys.combination(c);
            let r = (&p * &pt.x - &pt.x).amax();
            if r > MEMBERSHIP_TOL {
                return Err(Error::invalid(format!("P x != x (residual {r:.3e})")));
            }
        }
    }
    for q in &pt.constraints {
        let r = (quad_product(sys, q)? * &pt.x - &pt.x).amax();
        if r > MEMBERSHIP_TOL {
            return Err(Error::invalid(format!("constraint {q:?} violated ({r:.3e})")));
        }
    }
    Ok(())
}

/// Löwdin orthonormalization: the orthonormal frame closest to the given columns.
fn symmetric_orthonormalize(cols: &Mat) -> Mat {
    let g = cols.transpose() * cols;
    let (vals, vecs) = sym_eigen_sorted(&g);
    let inv_sqrt = Mat::from_diagonal(&Vector::from_iterator(vals.len(), vals.iter().map(|v| 1.0 / v.sqrt())));
    cols * (&vecs * inv_sqrt * vecs.transpose())
}

/// Normal basis `{P_0 x, ..., P_m x}` and its orthogonal complement in `x^perp`.
pub fn frame_m1(sys: &CliffordSystem, pt: &FocalPoint) -> Result<TangentFrame> {
    if pt.manifold != FocalSet::M1 {
        return Err(Error::invalid("frame_m1 needs an M1 point"));
    }
    validate_point(sys, pt)?;
    let x = &pt.x;
    let raw = Mat::from_columns(&sys.generators().iter().map(|p| p * x).collect::<Vec<_>>());
    let normal = symmetric_orthonormalize(&raw);
    let mut span = Mat::zeros(x.len(), normal.ncols() + 1);
    span.set_column(0, x);
    span.columns_mut(1, normal.ncols()).copy_from(&normal);
    let tangent = orthonormal_complement(&span);
    Ok(TangentFrame {
        point: pt.clone(),
        tangent,
        normal,
        q_frame: None,
        provenance: Provenance::ClosedForm,
    })
}

/// `T_x M2 = {w in E_+(P) : w ⊥ x} ⊕ Span{Q_1 x, ..., Q_m x}`; normals complete it in `x^perp`.
pub fn frame_m2(sys: &CliffordSystem, pt: &FocalPoint) -> Result<TangentFrame> {
    if pt.manifold != FocalSet::M2 {
        return Err(Error::invalid("frame_m2 needs an M2 point"));
    }
    validate_point(sys, pt)?;
    let c = pt.fixing_p.as_ref().expect("validated");
    let frame = clifford_sphere_frame(sys, c)?;
    let x = &pt.x;
    let n = x.len();
    let p = &frame.matrices[0];
    let plus = (Mat::identity(n, n) + p) * 0.5 - x * x.transpose();
    let w = projector_range(&plus);
    let qx: Vec<Vector> = frame.matrices[1..].iter().map(|q| q * x).collect();
    let mut tangent = Mat::zeros(n, w.ncols() + qx.len());
    tangent.columns_mut(0, w.ncols()).copy_from(&w);
    for (i, v) in qx.iter().enumerate() {
        tangent.set_column(w.ncols() + i, v);
    }
    let tangent = symmetric_orthonormalize(&tangent);
    let mut span = Mat::zeros(n, tangent.ncols() + 1);
    span.set_column(0, x);
    span.columns_mut(1, tangent.ncols()).copy_from(&tangent);
    let normal = orthonormal_complement(&span);
    Ok(TangentFrame {
        point: pt.clone(),
        tangent,
        normal,
        q_frame: Some(frame.coefficients),
        provenance: Provenance::ClosedForm,
    })
}

/// `P_a P_b P_c P_d`.
pub fn quad_product(sys: &CliffordSystem, q: &[usize; 4]) -> Result<Mat> {
    if q.iter().any(|&i| i > sys.m) {
        return Err(Error::invalid(format!("quadruple {q:?} has an index above m = {}", sys.m)));
    }
    let mut sorted = *q;
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid(format!("quadruple {q:?} repeats an index")));
    }
    Ok(sys.product(q))
}

/// Joint eigenspace of commuting 4-products. Each product is restricted to the space
/// found so far; its `+1` eigenspace is taken when nonempty, otherwise its `-1`
/// eigenspace, in which case the quadruple is reordered so that its product fixes the
/// subspace. Returns the orthonormal basis and the (possibly reordered) quadruples.
pub fn joint_eigenspace(
    sys: &CliffordSystem,
    quads: &[[usize; 4]],
    signs: Option<&[i8]>,
) -> Result<(Mat, Vec<[usize; 4]>)> {
    let products = quads.iter().map(|q| quad_product(sys, q)).collect::<Result<Vec<_>>>()?;
    for (i, a) in products.iter().enumerate() {
        for (j, b) in products.iter().enumerate().skip(i + 1) {
            let comm = a * b - b * a;
            if comm.amax() > 1e-9 {
                return Err(Error::invalid(format!(
                    "products for {:?} and {:?} do not commute",
                    quads[i], quads[j]
                )));
            }
        }
    }
    if let Some(s) = signs {
        if s.len() != quads.len() || s.iter().any(|v| v.abs() != 1) {
            return Err(Error::invalid("one sign in {+1, -1} per quadruple required"));
        }
    }
    let n = sys.ambient_dim();
    let mut basis = Mat::identity(n, n);
    let mut fixed = Vec::with_capacity(quads.len());
    for (i, (q, prod)) in quads.iter().zip(&products).enumerate() {
        let restricted = basis.transpose() * prod * &basis;
        let (vals, vecs) = sym_eigen_sorted(&restricted);
        let pick = |sign: f64| -> Vec<usize> { (0..vals.len()).filter(|&j| vals[j] * sign > 0.5).collect() };
        let wanted: Vec<f64> = match signs {
            Some(s) => vec![s[i] as f64],
            None => vec![1.0, -1.0],
        };
        let mut chosen = None;
        for sign in wanted {
            let cols = pick(sign);
            if !cols.is_empty() {
                chosen = Some((sign, cols));
                break;
            }
        }
        let (sign, cols) = chosen.ok_or_else(|| {
            Error::Infeasible(format!("joint eigenspace becomes empty at quadruple {q:?}"))
        })?;
        basis = &basis * vecs.select_columns(cols.iter());
        fixed.push(if sign > 0.0 { *q } else { [q[1], q[0], q[2], q[3]] });
    }
    Ok((basis, fixed))
}

/// Generators reduced to a subspace: `B^T P_a B`.
fn reduced_generators(sys: &CliffordSystem, basis: &Mat) -> Vec<Mat> {
    sys.generators().iter().map(|p| basis.transpose() * p * basis).collect()
}

/// A unit vector in the joint eigenspace of the given commuting 4-products that lies on
/// `M1`. Indices anticommuting with some product vanish automatically on that space;
/// the remaining quadrics are solved by Newton inside it.
pub fn common_eigvec_point(sys: &CliffordSystem, quads: &[[usize; 4]]) -> Result<FocalPoint> {
    let (basis, fixed) = joint_eigenspace(sys, quads, None)?;
    let reduced = reduced_generators(sys, &basis);
    let d = basis.ncols();
    let targets = vec![0.0; reduced.len()];
    let mut rng = seeded_rng(0x5eed_0001);
    let y0 = random_unit(&mut rng, d);
    let opts = NewtonOptions {
        seed: 0x5eed_0001,
        max_iter: 100,
        ..NewtonOptions::default()
    };
    let y = newton_quadrics(&reduced, &targets, &y0, &opts).map_err(|e| match e {
        Error::NonConvergence { residual, .. } => Error::Infeasible(format!(
            "joint eigenspace of dimension {d} meets M1 nowhere found (residual {residual:.3e})"
        )),
        other => other,
    })?;
    let pt = FocalPoint {
        x: &basis * y,
        manifold: FocalSet::M1,
        fixing_p: None,
        constraints: fixed,
    };
    validate_point(sys, &pt)?;
    Ok(pt)
}

/// Outcome of maximizing `F` on the unit sphere of a joint eigenspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestrictedMaximum {
    pub point: FocalPoint,
    pub f_max: f64,
    pub subspace_dim: usize,
    /// Generator indices whose quadric does not vanish identically on the subspace.
    pub active_indices: Vec<usize>,
    pub on_m1: bool,
}

/// Projected gradient ascent (step 0.1, backtracking, 32 restarts) of `F` on the unit
/// sphere of `E' = ∩ E_±(quad)`, followed by a Newton polish onto `M1` when the maximum
/// reaches 1.
pub fn maximize_restricted_f(
    sys: &CliffordSystem,
    quads: &[[usize; 4]],
    signs: Option<&[i8]>,
    seed: u64,
) -> Result<RestrictedMaximum> {
    let (basis, fixed) = joint_eigenspace(sys, quads, signs)?;
    let reduced = reduced_generators(sys, &basis);
    let active_indices: Vec<usize> = (0..reduced.len()).filter(|&a| reduced[a].amax() > 1e-12).collect();
    let active: Vec<Mat> = active_indices.iter().map(|&a| reduced[a].clone()).collect();
    let d = basis.ncols();
    let f_red = |y: &Vector| -> f64 {
        let r2 = y.norm_squared();
        r2 * r2 - 2.0 * active.iter().map(|m| (m * y).dot(y).powi(2)).sum::<f64>()
    };
    let grad = |y: &Vector| -> Vector {
        let mut g = y * (4.0 * y.norm_squared());
        for m in &active {
            let my = m * y;
            g -= &my * (8.0 * my.dot(y));
        }
        let radial = g.dot(y);
        g - y * radial
    };
    let mut best: Option<(Vector, f64)> = None;
    for restart in 0..32u64 {
        let mut rng: SeededRng = seeded_rng(derive_seed(seed, restart));
        let mut y = random_unit(&mut rng, d);
        let mut fy = f_red(&y);
        for _ in 0..5000 {
            let g = grad(&y);
            if g.norm() < 1e-11 {
                break;
            }
            let mut step = 0.1;
            let mut moved = false;
            while step > 1e-12 {
                let trial = (&y + &g * step).normalize();
                let ft = f_red(&trial);
                if ft > fy {
                    y = trial;
                    fy = ft;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(_, f)| fy > *f) {
            best = Some((y, fy));
        }
        if fy > 1.0 - 1e-10 {
            break;
        }
    }
    let (mut y, mut f_max) = best.expect("32 restarts");
    if f_max > 1.0 - 1e-6 {
        let targets = vec![0.0; reduced.len()];
        let opts = NewtonOptions {
            seed,
            ..NewtonOptions::default()
        };
        if let Ok(polished) = newton_quadrics(&reduced, &targets, &y, &opts) {
            y = polished;
            f_max = f_red(&y);
        }
    }
    let x = &basis * &y;
    let on_m1 = m1_residual(sys, &x) <= MEMBERSHIP_TOL;
    Ok(RestrictedMaximum {
        point: FocalPoint {
            x,
            manifold: FocalSet::M1,
            fixing_p: None,
            constraints: fixed,
        },
        f_max,
        subspace_dim: d,
        active_indices,
        on_m1,
    })
}

/// Columns `P_a P_b x` for `a < b`, in lexicographic order.
pub fn v_space_generators(sys: &CliffordSystem, x: &Vector) -> Mat {
    let px: Vec<Vector> = sys.generators().iter().map(|p| p * x).collect();
    let mut cols = Vec::new();
    for a in 0..=sys.m {
        for b in (a + 1)..=sys.m {
            cols.push(sys.generator(a) * &px[b]);
        }
    }
    Mat::from_columns(&cols)
}

/// `dim Span{P_a P_b x : a < b}` with singular values counted above `tol * sigma_max`.
pub fn v_space_dimension(sys: &CliffordSystem, pt: &FocalPoint, tol: f64) -> Result<usize> {
    if pt.manifold != FocalSet::M1 {
        return Err(Error::invalid("the span is defined for M1 points"));
    }
    Ok(numerical_rank(&v_space_generators(sys, &pt.x), tol))
}

/// A random direction in `x^perp` convenient for tests.
pub fn random_perpendicular<R: Rng>(rng: &mut R, x: &Vector) -> Vector {
    let g = gaussian_vector(rng, x.len());
    let v = &g - x * g.dot(x);
    v.normalize()
}
