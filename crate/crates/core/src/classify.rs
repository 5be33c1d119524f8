//! Batch classification: case specifications, the witness library, verdicts and reports.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clifford::{
    build_clifford_system, clifford_sphere_frame, irreducible_dimension, product_trace_invariant, verify_clifford_system, CliffordFamily,
    CliffordSystem, DEFAULT_VERIFY_TOL,
};
use crate::error::{Error, Result};
use crate::fkm::{
    common_eigvec_point, m2_point_from_vector, maximize_restricted_f, v_space_generators, FocalSet,
};
use crate::geometry::focal::{a_tensor_m1, b_vector_m1, m2_witness_triple, FocalM1, FocalM2};
use crate::geometry::{
    curvature_report, nabla_ricci, nabla_ricci_tensor, parallel_basis_scan, ricci_operator_spectrum,
    EmbeddedGeometry, ScanOptions, Submanifold, CLUSTER_GAP,
};
use crate::linalg::{derive_seed, numerical_rank, round_sig, serde_vector, Cluster, Mat, Vector};
use crate::orbits::{HomogeneousOrbit, OrbitCase, OrbitDoc};

/// Relative singular-value cutoff for ranks of spans.
pub const RANK_TOL: f64 = 1e-9;
/// Significant digits kept in emitted reports.
pub const REPORT_DIGITS: usize = 12;

/// One case: an OT-FKM focal set or a homogeneous orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CaseSpec {
    Otfkm {
        focal: FocalSet,
        m: usize,
        k: usize,
        clifford_family: CliffordFamily,
    },
    Homogeneous {
        case_id: OrbitCase,
    },
}

impl CaseSpec {
    pub fn otfkm(focal: FocalSet, m: usize, k: usize, clifford_family: CliffordFamily) -> Self {
        CaseSpec::Otfkm {
            focal,
            m,
            k,
            clifford_family,
        }
    }

    pub fn homogeneous(case_id: OrbitCase) -> Self {
        CaseSpec::Homogeneous { case_id }
    }

    /// `l = k delta(m)` for OT-FKM cases.
    pub fn l(&self) -> Result<Option<usize>> {
        match self {
            CaseSpec::Otfkm { m, k, .. } => Ok(Some(k * irreducible_dimension(*m)?)),
            CaseSpec::Homogeneous { .. } => Ok(None),
        }
    }

    /// `(m1, m2)` of the isoparametric family.
    pub fn multiplicities(&self) -> Result<(usize, usize)> {
        match self {
            CaseSpec::Otfkm { m, .. } => {
                let l = self.l()?.unwrap_or(0);
                if l < m + 2 {
                    return Err(Error::invalid(format!("{self}: l - m - 1 must be positive")));
                }
                Ok((*m, l - m - 1))
            }
            CaseSpec::Homogeneous { case_id } => Ok(case_id.multiplicities()),
        }
    }

    /// Which focal set the case is, counting the orbits by their dimension.
    pub fn focal(&self) -> FocalSet {
        match self {
            CaseSpec::Otfkm { focal, .. } => *focal,
            CaseSpec::Homogeneous { case_id } => match case_id {
                OrbitCase::U5M2 => FocalSet::M2,
                _ => FocalSet::M1,
            },
        }
    }

    /// Lower bound `2(m2 - 1)` on `rho(X, X)` for `M1` (roles swapped on `M2`).
    pub fn ricci_lower_bound(&self) -> Result<f64> {
        let (m1, m2) = self.multiplicities()?;
        let other = if self.focal() == FocalSet::M1 { m2 } else { m1 };
        Ok(2.0 * (other as f64 - 1.0))
    }

    fn sort_key(&self) -> (usize, usize, u8, String) {
        let (a, b) = self.multiplicities().unwrap_or((usize::MAX, usize::MAX));
        let kind = matches!(self, CaseSpec::Homogeneous { .. }) as u8;
        (a, b, kind, self.to_string())
    }

    fn stream(&self) -> u64 {
        // FNV-1a over the spec string: stable across runs and platforms.
        self.to_string()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
    }
}

impl fmt::Display for CaseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseSpec::Otfkm {
                focal,
                m,
                k,
                clifford_family,
            } => {
                write!(f, "otfkm:{focal}:{m}:{k}")?;
                if *clifford_family != CliffordFamily::Standard {
                    write!(f, ":{clifford_family}")?;
                }
                Ok(())
            }
            CaseSpec::Homogeneous { case_id } => write!(f, "homog:{case_id}"),
        }
    }
}

impl FromStr for CaseSpec {
    type Err = Error;

    /// `otfkm:M1:4:2[:family]` or `homog:<id>`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let bad = || Error::invalid(format!("cannot parse case '{s}'; expected otfkm:M1:4:2[:family] or homog:<id>"));
        match parts.as_slice() {
            ["otfkm", focal, m, k, rest @ ..] if rest.len() <= 1 => {
                let focal: FocalSet = focal.parse()?;
                let m: usize = m.parse().map_err(|_| bad())?;
                let k: usize = k.parse().map_err(|_| bad())?;
                let clifford_family = match rest.first() {
                    Some(f) => f.parse()?,
                    None => CliffordFamily::Standard,
                };
                Ok(CaseSpec::otfkm(focal, m, k, clifford_family))
            }
            ["homog", id] => Ok(CaseSpec::homogeneous(id.parse()?)),
            _ => Err(bad()),
        }
    }
}

/// `(m, k, family)` of every OT-FKM system in the default table.
pub fn otfkm_systems() -> Vec<(usize, usize, CliffordFamily)> {
    use CliffordFamily::*;
    let mut out: Vec<(usize, usize, CliffordFamily)> = (3..=10).map(|k| (1, k, Standard)).collect();
    out.extend([
        (2, 2, Standard),
        (3, 2, Standard),
        (4, 2, Definite),
        (4, 2, Indefinite),
        (5, 1, Standard),
        (5, 2, Standard),
        (6, 1, Standard),
        (6, 2, Standard),
        (7, 2, Standard),
        (7, 3, Standard),
        (8, 2, Definite),
        (8, 2, Indefinite),
        (8, 3, Standard),
        (8, 4, Standard),
        (9, 1, Standard),
        (9, 2, Standard),
        (10, 1, Standard),
        (11, 1, Standard),
        (12, 1, Standard),
    ]);
    out
}

/// Both focal sets of every system in [`otfkm_systems`] and the four orbits.
pub fn default_cases() -> Vec<CaseSpec> {
    let mut out = Vec::new();
    for (m, k, fam) in otfkm_systems() {
        for focal in [FocalSet::M1, FocalSet::M2] {
            out.push(CaseSpec::otfkm(focal, m, k, fam));
        }
    }
    out.extend(OrbitCase::ALL.into_iter().map(CaseSpec::homogeneous));
    out
}

/// Verdicts the classification theorems predict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expected {
    pub is_a: bool,
    pub is_b: bool,
    pub is_ricci_parallel: bool,
    pub is_einstein: bool,
}

pub fn expected_verdicts(spec: &CaseSpec) -> Expected {
    let (parallel, einstein) = match *spec {
        CaseSpec::Otfkm {
            focal: FocalSet::M1,
            m,
            k,
            clifford_family,
        } => {
            let definite_43 = m == 4 && k == 2 && clifford_family != CliffordFamily::Indefinite;
            ((m == 2 && k == 2) || (m == 6 && k == 1) || definite_43, definite_43)
        }
        CaseSpec::Otfkm {
            focal: FocalSet::M2, m, ..
        } => (m == 1, false),
        CaseSpec::Homogeneous { case_id } => {
            let g = case_id == OrbitCase::So5Grassmann;
            (g, g)
        }
    };
    Expected {
        is_a: true,
        is_b: parallel,
        is_ricci_parallel: parallel,
        is_einstein: einstein,
    }
}

/// Sampling and decision parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Random points per case (the witness point comes on top).
    pub points: usize,
    /// Random directions per point for the cyclic and Ricci scans.
    pub directions: usize,
    pub triples: usize,
    pub pairs: usize,
    /// Closed form vs finite-difference triples per point.
    pub oracle_triples: usize,
    /// Positive verdicts need every defect at or below this.
    pub tol: f64,
    /// Negative verdicts need a witness at or above this.
    pub witness_tol: f64,
    /// Cap on the ambient dimension `2l`.
    pub max_ambient: usize,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            points: 5,
            directions: 200,
            triples: 100,
            pairs: 2000,
            oracle_triples: 20,
            tol: 1e-8,
            witness_tol: 1e-2,
            max_ambient: 256,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || self.directions == 0 || self.triples == 0 || self.pairs == 0 {
            return Err(Error::invalid("points, directions, triples and pairs must be positive"));
        }
        if !(self.tol > 0.0 && self.tol < self.witness_tol) {
            return Err(Error::invalid("need 0 < tol < witness_tol"));
        }
        Ok(())
    }

    fn scan_options(&self, seed: u64) -> ScanOptions {
        ScanOptions {
            directions: self.directions,
            triples: self.triples,
            pairs: self.pairs,
            oracle_triples: self.oracle_triples,
            basis_scan: true,
            seed,
        }
    }
}

/// A constructed case.
#[derive(Debug, Clone)]
pub enum CaseManifold {
    M1(FocalM1),
    M2(FocalM2),
    Orbit(HomogeneousOrbit),
}

impl CaseManifold {
    pub fn build(spec: &CaseSpec, max_ambient: usize) -> Result<Self> {
        match *spec {
            CaseSpec::Otfkm {
                focal,
                m,
                k,
                clifford_family,
            } => {
                let sys = build_clifford_system(m, k, clifford_family)?;
                if sys.ambient_dim() > max_ambient {
                    return Err(Error::invalid(format!(
                        "{spec}: ambient dimension {} exceeds the cap {max_ambient}",
                        sys.ambient_dim()
                    )));
                }
                Ok(match focal {
                    FocalSet::M1 => CaseManifold::M1(FocalM1::new(sys)),
                    FocalSet::M2 => CaseManifold::M2(FocalM2::new(sys)),
                })
            }
            CaseSpec::Homogeneous { case_id } => Ok(CaseManifold::Orbit(HomogeneousOrbit::new(case_id)?)),
        }
    }

    pub fn manifold(&self) -> &dyn Submanifold {
        match self {
            CaseManifold::M1(m) => m,
            CaseManifold::M2(m) => m,
            CaseManifold::Orbit(o) => o,
        }
    }

    pub fn system(&self) -> Option<&CliffordSystem> {
        match self {
            CaseManifold::M1(m) => Some(&m.sys),
            CaseManifold::M2(m) => Some(&m.sys),
            CaseManifold::Orbit(_) => None,
        }
    }
}

/// Hard-coded evidence against Ricci parallelism at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub description: String,
    #[serde(with = "serde_vector")]
    pub point: Vector,
    /// Ambient tangent vectors `(X, Y, Z)`.
    pub triple: [Vec<f64>; 3],
    /// `|(nabla_Z rho)(X, Y)|`.
    pub value: f64,
    /// Largest `|nabla rho|` over basis pairs at the point.
    pub basis_scan: f64,
    /// `max |(nabla_{e_i} rho)(e_j, e_k) - (nabla_{e_j} rho)(e_i, e_k)|` at the point.
    pub codazzi: f64,
    pub einstein: f64,
    pub dim_vx: Option<usize>,
    pub l_minus_one: Option<usize>,
    /// Case-specific quantities (named scalars).
    pub notes: Vec<(String, f64)>,
}

/// Where to look and, optionally, which triple to evaluate.
struct WitnessPlan {
    description: String,
    point: Vector,
    triple: Option<[Vector; 3]>,
    notes: Vec<(String, f64)>,
}

fn pp(sys: &CliffordSystem, idx: &[usize], x: &Vector) -> Vector {
    sys.product(idx) * x
}

fn pair_quads(upto: usize) -> Vec<[usize; 4]> {
    let mut q = Vec::new();
    for a in 0..upto {
        for b in (a + 1)..upto {
            q.push([2 * a, 2 * a + 1, 2 * b, 2 * b + 1]);
        }
    }
    q
}

/// The commuting 4-products whose common eigenvectors serve as special points.
pub fn special_quads(m: usize) -> Option<Vec<[usize; 4]>> {
    Some(match m {
        3 | 4 => vec![[0, 1, 2, 3]],
        5 => vec![[0, 1, 2, 3], [0, 1, 4, 5]],
        6 => vec![[0, 1, 2, 3], [0, 1, 4, 5], [0, 2, 4, 6]],
        7 => vec![[0, 1, 2, 3], [0, 1, 4, 5], [0, 1, 6, 7], [0, 2, 4, 6]],
        8 => vec![[2, 4, 6, 8], [3, 4, 7, 8], [5, 6, 7, 8]],
        9 => pair_quads(5),
        10 => vec![[0, 1, 2, 3], [0, 1, 4, 5], [4, 5, 6, 7], [2, 3, 8, 9]],
        11 => pair_quads(6),
        12 => vec![
            [0, 1, 2, 3],
            [4, 5, 6, 7],
            [0, 1, 8, 9],
            [2, 3, 8, 9],
            [6, 7, 10, 11],
            [0, 2, 8, 12],
        ],
        _ => return None,
    })
}

/// Component of `v` off `L = R x ⊕ Span{P_a x}`.
fn off_l(sys: &CliffordSystem, x: &Vector, v: &Vector) -> Vector {
    let mut basis = vec![x.clone()];
    basis.extend(sys.generators().iter().map(|p| p * x));
    let mut out = v.clone();
    for b in &basis {
        let c = out.dot(b);
        out -= b * c;
    }
    out
}

fn m1_plan(sys: &CliffordSystem, seed: u64, mf: &dyn Submanifold) -> Result<WitnessPlan> {
    let m = sys.m;
    let k = sys.k;
    let indefinite = sys.family == CliffordFamily::Indefinite;
    let plan = |description: String, point: Vector| WitnessPlan {
        description,
        point,
        triple: None,
        notes: Vec::new(),
    };
    Ok(match (m, k) {
        (3, _) => {
            let pt = common_eigvec_point(sys, &special_quads(3).expect("m = 3"))?;
            plan("point fixed by P0P1P2P3; basis scan".into(), pt.x)
        }
        (4, 2) if indefinite => {
            let pt = common_eigvec_point(sys, &[[0, 1, 2, 3]])?;
            let x = pt.x;
            let xv = pp(sys, &[0, 1], &x) + pp(sys, &[0, 2, 4], &x);
            let off = off_l(sys, &x, &b_vector_m1(sys, &x, &xv));
            let r = off.norm();
            WitnessPlan {
                description: "x = P0P1P2P3 x; X = Y = P0P1x + P0P2P4x, Z along the part of B(X) off L".into(),
                triple: Some([xv.clone(), xv, off / r]),
                point: x,
                notes: vec![("b_off_l".into(), r)],
            }
        }
        (5, _) => {
            let pt = common_eigvec_point(sys, &special_quads(5).expect("m = 5"))?;
            let x = pt.x;
            let w = pp(sys, &[0, 2, 4], &x);
            let y = pp(sys, &[0, 2, 5], &x);
            let (a, _) = a_tensor_m1(sys, &x, &w, &y);
            let p45 = pp(sys, &[4, 5], &x);
            WitnessPlan {
                description: "common eigenvector of P0P1P2P3, P0P1P4P5; A(P0P2P4x, P0P2P5x) = 3 P4P5x".into(),
                triple: Some([w, p45.clone(), y]),
                notes: vec![
                    ("a_off_l".into(), off_l(sys, &x, &a).norm()),
                    ("a_minus_3p4p5x".into(), (&a - &p45 * 3.0).norm()),
                ],
                point: x,
            }
        }
        (6, 2) | (7, _) | (9, 2) | (11, 1) | (12, 1) => {
            let quads = special_quads(m).expect("listed m");
            let pt = common_eigvec_point(sys, &quads)?;
            plan(format!("common eigenvector of {} commuting 4-products", quads.len()), pt.x)
        }
        (8, 2) if indefinite => {
            let ext = sys.extended()?;
            let pt = common_eigvec_point(&ext, &pair_quads(5))?;
            let mut p = plan(
                "common eigenvector of P_{2a}P_{2a+1}P_{2b}P_{2b+1} (a < b <= 4) of the extended system".into(),
                pt.x.clone(),
            );
            p.notes.push((
                "dim_vx_extended".into(),
                numerical_rank(&v_space_generators(&ext, &pt.x), RANK_TOL) as f64,
            ));
            p
        }
        (8, 2) => {
            let rm = maximize_restricted_f(sys, &special_quads(8).expect("m = 8"), None, seed)?;
            let x = rm.point.x;
            let xv = pp(sys, &[0, 3], &x);
            let yv = pp(sys, &[0, 2], &x);
            let (a, _) = a_tensor_m1(sys, &x, &xv, &yv);
            let off = off_l(sys, &x, &a);
            let r = off.norm();
            WitnessPlan {
                description: "maximum of F on E'; A(P0P3x, P0P2x) = 2 P2P3x".into(),
                triple: Some([xv, off.clone() / r, yv]),
                notes: vec![
                    ("f_max".into(), rm.f_max),
                    ("a_off_l".into(), r),
                    ("a_minus_2p2p3x".into(), (&a - pp(sys, &[2, 3], &x) * 2.0).norm()),
                ],
                point: x,
            }
        }
        (8, _) => {
            let rm = maximize_restricted_f(sys, &special_quads(8).expect("m = 8"), None, seed)?;
            let mut p = plan("maximum of F on E'; basis scan".into(), rm.point.x);
            p.notes.push(("f_max".into(), rm.f_max));
            p.notes.push(("e_prime_dim".into(), rm.subspace_dim as f64));
            p
        }
        (9, 1) => {
            let pt = common_eigvec_point(sys, &pair_quads(5))?;
            let x = pt.x;
            WitnessPlan {
                description: "common eigenvector; X = P0P1x, Y = P0P2x, Z = P1P2x".into(),
                triple: Some([pp(sys, &[0, 1], &x), pp(sys, &[0, 2], &x), pp(sys, &[1, 2], &x)]),
                point: x,
                notes: Vec::new(),
            }
        }
        (10, 1) => {
            let rm = maximize_restricted_f(sys, &special_quads(10).expect("m = 10"), None, seed)?;
            let x = rm.point.x.clone();
            let geom = EmbeddedGeometry::at(mf, &x)?;
            let rho = geom.ambient_ricci();
            let s = |v: Vector| v.dot(&(&rho * &v)) / v.norm_squared();
            let mut p = plan("maximum of F = |x|^4 - 2<P10x, x>^2 on E'; basis scan".into(), x.clone());
            p.notes.push(("f_max".into(), rm.f_max));
            p.notes.push(("rho_p0p1x".into(), s(pp(sys, &[0, 1], &x))));
            p.notes.push(("rho_p0p10x".into(), s(pp(sys, &[0, 10], &x))));
            p
        }
        _ => plan("random point; basis scan".into(), mf.random_point(seed)?),
    })
}

fn witness_plan(spec: &CaseSpec, cm: &CaseManifold, seed: u64) -> Result<Option<WitnessPlan>> {
    if expected_verdicts(spec).is_ricci_parallel {
        return Ok(None);
    }
    let mf = cm.manifold();
    Ok(Some(match cm {
        CaseManifold::M1(f) => m1_plan(&f.sys, seed, mf)?,
        CaseManifold::M2(f) => {
            let sys = &f.sys;
            let x = mf.random_point(seed)?;
            let pt = m2_point_from_vector(sys, &x)?;
            let (a, b, c) = m2_witness_triple(sys, &pt)?;
            let q = clifford_sphere_frame(sys, pt.fixing_p.as_ref().expect("M2 points carry their fixing element"))?;
            // sum over ordered i != j in 1..=m, {i, j} != {1, 2}, of <Q1Q2x, QiQjx>^2
            let mut squares = 0.0;
            for i in 1..=sys.m {
                for j in 1..=sys.m {
                    if i != j && !matches!((i, j), (1, 2) | (2, 1)) {
                        squares += a.dot(&(&q.matrices[i] * (&q.matrices[j] * &x))).powi(2);
                    }
                }
            }
            let base = sys.l as f64 - 2.0 * sys.m as f64 + 2.0;
            WitnessPlan {
                description: "random point; X = Q1Q2x, Y = Q1x, Z = Q2x".into(),
                point: x,
                triple: Some([a, b, c]),
                notes: vec![
                    ("l_minus_2m_plus_2".into(), base),
                    ("extra_squares".into(), squares),
                    ("predicted".into(), base + squares),
                ],
            }
        }
        CaseManifold::Orbit(o) => WitnessPlan {
            description: "base point z0; basis scan".into(),
            point: o.base_point(),
            triple: None,
            notes: Vec::new(),
        },
    }))
}

/// `max |D_i(j, k) - D_j(i, k)|` for `D_i = nabla_{e_i} rho`.
pub fn codazzi_basis_defect(tensor: &[Mat]) -> f64 {
    let n = tensor.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = tensor[i].row(j) - tensor[j].row(i);
            worst = worst.max(d.amax());
        }
    }
    worst
}

fn evaluate_plan(mf: &dyn Submanifold, sys: Option<&CliffordSystem>, plan: WitnessPlan) -> Result<Witness> {
    let geom = EmbeddedGeometry::at(mf, &plan.point)?;
    let tensor = nabla_ricci_tensor(mf, &geom)?;
    let scan = parallel_basis_scan(&tensor);
    let mut notes = plan.notes;
    let (triple, value) = match plan.triple {
        Some([x, y, z]) => {
            let tangency = [&x, &y, &z]
                .iter()
                .map(|v| (geom.vector(&geom.coords(v)) - *v).norm())
                .fold(0.0, f64::max);
            notes.push(("tangency_residual".into(), tangency));
            let d = nabla_ricci(mf, &geom, &geom.coords(&z))?;
            let value = geom.coords(&x).dot(&(&d * geom.coords(&y))).abs();
            ([x, y, z].map(|v| v.iter().copied().collect()), value)
        }
        None => {
            let t: Vec<Vec<f64>> = scan
                .witness
                .iter()
                .map(|c| geom.vector(&Vector::from_vec(c.clone())).iter().copied().collect())
                .collect();
            let triple: [Vec<f64>; 3] = t.try_into().map_err(|_| Error::Internal("empty basis scan".into()))?;
            (triple, scan.value)
        }
    };
    let (dim_vx, l_minus_one) = match (sys, mf.dim() == sys.map_or(0, |s| 2 * s.l - s.m - 2)) {
        (Some(s), true) => (
            Some(numerical_rank(&v_space_generators(s, &plan.point), RANK_TOL)),
            Some(s.l - 1),
        ),
        _ => (None, None),
    };
    Ok(Witness {
        description: plan.description,
        point: plan.point,
        triple,
        value,
        basis_scan: scan.value,
        codazzi: codazzi_basis_defect(&tensor),
        einstein: crate::geometry::einstein_defect(&geom),
        dim_vx,
        l_minus_one,
        notes,
    })
}

/// The hard-coded witness of a case (`None` for the Ricci-parallel ones).
pub fn case_witness(spec: &CaseSpec, cfg: &RunConfig) -> Result<Option<Witness>> {
    let cm = CaseManifold::build(spec, cfg.max_ambient)?;
    let seed = derive_seed(cfg.seed, spec.stream());
    witness_for(spec, &cm, seed)
}

fn witness_for(spec: &CaseSpec, cm: &CaseManifold, seed: u64) -> Result<Option<Witness>> {
    let is_m1 = matches!(cm, CaseManifold::M1(_));
    match witness_plan(spec, cm, derive_seed(seed, 0xfeed))? {
        Some(plan) => Ok(Some(evaluate_plan(
            cm.manifold(),
            if is_m1 { cm.system() } else { None },
            plan,
        )?)),
        None => Ok(None),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Positive,
    Negative,
    Indeterminate,
}

impl Verdict {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::Positive => Some(true),
            Verdict::Negative => Some(false),
            Verdict::Indeterminate => None,
        }
    }

    fn decide(defect: f64, evidence: f64, tol: f64, witness_tol: f64) -> Verdict {
        if defect <= tol {
            Verdict::Positive
        } else if evidence >= witness_tol {
            Verdict::Negative
        } else {
            Verdict::Indeterminate
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Positive => "yes",
            Verdict::Negative => "no",
            Verdict::Indeterminate => "??",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliffordSummary {
    pub l: usize,
    pub family: CliffordFamily,
    pub max_anticommutator_residual: f64,
    pub trace_invariant_q: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Defects {
    pub cyclic: f64,
    pub codazzi: f64,
    pub parallel: f64,
    pub einstein: f64,
    pub oracle_discrepancy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub sec_min: f64,
    pub sec_max: f64,
    pub a_tilde_max: f64,
    pub ricci_min: f64,
    pub ricci_max: f64,
    pub ricci_lower_bound: f64,
    pub shape_spectrum: Vec<Cluster>,
    pub max_shape_trace: f64,
}

/// One row of the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub spec: CaseSpec,
    pub m1: usize,
    pub m2: usize,
    pub focal: FocalSet,
    pub dim: usize,
    pub ambient_dim: usize,
    pub seed: u64,
    pub clifford: Option<CliffordSummary>,
    pub orbit: Option<OrbitDoc>,
    pub is_a: Verdict,
    pub is_b: Verdict,
    pub is_ricci_parallel: Verdict,
    pub is_einstein: Verdict,
    pub expected: Expected,
    pub matches_expected: bool,
    pub dim_vx_at_witness: Option<usize>,
    pub ricci_spectrum: Vec<Cluster>,
    pub defects: Defects,
    pub bounds: Bounds,
    pub witness: Option<Witness>,
    pub error: Option<String>,
}

impl CaseReport {
    fn errored(spec: &CaseSpec, seed: u64, err: &Error) -> Self {
        let (m1, m2) = spec.multiplicities().unwrap_or((0, 0));
        CaseReport {
            case: spec.to_string(),
            spec: *spec,
            m1,
            m2,
            focal: spec.focal(),
            dim: 0,
            ambient_dim: 0,
            seed,
            clifford: None,
            orbit: None,
            is_a: Verdict::Indeterminate,
            is_b: Verdict::Indeterminate,
            is_ricci_parallel: Verdict::Indeterminate,
            is_einstein: Verdict::Indeterminate,
            expected: expected_verdicts(spec),
            matches_expected: false,
            dim_vx_at_witness: None,
            ricci_spectrum: Vec::new(),
            defects: Defects::default(),
            bounds: Bounds::default(),
            witness: None,
            error: Some(err.to_string()),
        }
    }

    pub fn verdicts(&self) -> [Verdict; 4] {
        [self.is_a, self.is_b, self.is_ricci_parallel, self.is_einstein]
    }

    fn compare(&self) -> bool {
        let e = self.expected;
        self.error.is_none()
            && self.is_a.as_bool() == Some(e.is_a)
            && self.is_b.as_bool() == Some(e.is_b)
            && self.is_ricci_parallel.as_bool() == Some(e.is_ricci_parallel)
            && self.is_einstein.as_bool() == Some(e.is_einstein)
    }
}

/// Construct the case, scan random points plus the witness point, decide.
pub fn run_case(spec: &CaseSpec, cfg: &RunConfig) -> CaseReport {
    let seed = derive_seed(cfg.seed, spec.stream());
    match run_case_inner(spec, cfg, seed) {
        Ok(r) => r,
        Err(e) => {
            warn!("{spec}: {e}");
            CaseReport::errored(spec, seed, &e)
        }
    }
}

fn run_case_inner(spec: &CaseSpec, cfg: &RunConfig, seed: u64) -> Result<CaseReport> {
    cfg.validate()?;
    let (m1, m2) = spec.multiplicities()?;
    let cm = CaseManifold::build(spec, cfg.max_ambient)?;
    let mf = cm.manifold();
    info!("{spec}: dim {} in S^{}", mf.dim(), mf.ambient_dim() - 1);
    let clifford = match cm.system() {
        Some(sys) => {
            let v = verify_clifford_system(sys, DEFAULT_VERIFY_TOL);
            if !v.passed {
                return Err(Error::Internal(format!("{spec}: Clifford relations fail")));
            }
            Some(CliffordSummary {
                l: sys.l,
                family: sys.family,
                max_anticommutator_residual: v.max_anticommutator_residual,
                trace_invariant_q: if sys.m % 4 == 0 {
                    Some(product_trace_invariant(sys)?)
                } else {
                    None
                },
            })
        }
        None => None,
    };
    let mut points = (0..cfg.points)
        .map(|i| mf.random_point(derive_seed(seed, i as u64 + 1)))
        .collect::<Result<Vec<_>>>()?;
    let witness = witness_for(spec, &cm, seed)?;
    if let Some(w) = &witness {
        points.push(w.point.clone());
    }
    let report = curvature_report(mf, &points, &cfg.scan_options(seed))?;

    let w_value = witness.as_ref().map_or(0.0, |w| w.value.max(w.basis_scan));
    let w_codazzi = witness.as_ref().map_or(0.0, |w| w.codazzi);
    let parallel_sup = report.parallel_defect.max(w_value);
    let codazzi_sup = report.codazzi_defect.max(w_codazzi);
    let is_a = Verdict::decide(report.cyclic_defect, report.cyclic_defect, cfg.tol, cfg.witness_tol);
    let is_b = Verdict::decide(codazzi_sup, codazzi_sup, cfg.tol, cfg.witness_tol);
    let is_ricci_parallel = Verdict::decide(parallel_sup, parallel_sup, cfg.tol, cfg.witness_tol);
    let is_einstein = Verdict::decide(report.einstein_defect, report.einstein_defect, cfg.tol, cfg.witness_tol);

    let mut row = CaseReport {
        case: spec.to_string(),
        spec: *spec,
        m1,
        m2,
        focal: spec.focal(),
        dim: mf.dim(),
        ambient_dim: mf.ambient_dim(),
        seed,
        clifford,
        orbit: match &cm {
            CaseManifold::Orbit(o) => Some(o.data.to_doc()),
            _ => None,
        },
        is_a,
        is_b,
        is_ricci_parallel,
        is_einstein,
        expected: expected_verdicts(spec),
        matches_expected: false,
        dim_vx_at_witness: witness.as_ref().and_then(|w| w.dim_vx),
        ricci_spectrum: report.ricci_spectrum.clone(),
        defects: Defects {
            cyclic: report.cyclic_defect,
            codazzi: codazzi_sup,
            parallel: parallel_sup,
            einstein: report.einstein_defect,
            oracle_discrepancy: report.oracle_discrepancy,
        },
        bounds: Bounds {
            sec_min: report.sec_min,
            sec_max: report.sec_max,
            a_tilde_max: report.a_tilde_max,
            ricci_min: report.ricci_min,
            ricci_max: report.ricci_max,
            ricci_lower_bound: spec.ricci_lower_bound()?,
            shape_spectrum: report.shape_spectrum.clone(),
            max_shape_trace: report.max_shape_trace,
        },
        witness,
        error: None,
    };
    for (name, v) in [
        ("A", row.is_a),
        ("B", row.is_b),
        ("Ricci parallel", row.is_ricci_parallel),
        ("Einstein", row.is_einstein),
    ] {
        if v == Verdict::Indeterminate {
            warn!("{spec}: {name} verdict falls between the tolerances");
        }
    }
    row.matches_expected = row.compare();
    Ok(row)
}

/// All rows of a run, sorted by `(m1, m2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub config: RunConfig,
    pub rows: Vec<CaseReport>,
}

impl ClassificationTable {
    /// Violations of `parallel => A and B` and `Einstein => parallel`.
    pub fn consistency_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            if r.is_ricci_parallel == Verdict::Positive
                && (r.is_a != Verdict::Positive || r.is_b != Verdict::Positive)
            {
                out.push(format!("{}: Ricci parallel but not both A and B", r.case));
            }
            if r.is_einstein == Verdict::Positive && r.is_ricci_parallel != Verdict::Positive {
                out.push(format!("{}: Einstein but not Ricci parallel", r.case));
            }
        }
        out
    }

    pub fn errors(&self) -> Vec<(&str, &str)> {
        self.rows
            .iter()
            .filter_map(|r| r.error.as_deref().map(|e| (r.case.as_str(), e)))
            .collect()
    }

    pub fn mismatches(&self) -> Vec<&CaseReport> {
        self.rows.iter().filter(|r| !r.matches_expected).collect()
    }

    pub fn all_match(&self) -> bool {
        self.mismatches().is_empty() && self.consistency_violations().is_empty()
    }

    /// The table after a round trip through the rounded JSON form.
    pub fn canonical(&self) -> Result<Self> {
        Ok(serde_json::from_value(rounded_value(self)?)?)
    }
}

fn thread_count(cfg: &RunConfig) -> Option<usize> {
    cfg.threads.or_else(|| {
        std::env::var("ISOPAR_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

/// Run every case in parallel; single-threaded merge and sort.
pub fn run_table(cases: &[CaseSpec], cfg: &RunConfig) -> Result<ClassificationTable> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count(cfg) {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Internal(e.to_string()))?;
    let mut rows: Vec<CaseReport> = pool.install(|| cases.par_iter().map(|c| run_case(c, cfg)).collect());
    rows.sort_by_key(|r| r.spec.sort_key());
    Ok(ClassificationTable { config: *cfg, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::invalid(format!("unknown format '{s}'"))),
        }
    }
}

fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            if let Some(f) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig(f, REPORT_DIGITS)) {
                    *n = r;
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(round_value),
        serde_json::Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

fn rounded_value<T: Serialize>(t: &T) -> Result<serde_json::Value> {
    let mut v = serde_json::to_value(t)?;
    round_value(&mut v);
    Ok(v)
}

/// Pretty JSON with floats rounded to [`REPORT_DIGITS`] significant digits.
pub fn to_json<T: Serialize>(t: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&rounded_value(t)?)?)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    case: &'a str,
    m1: usize,
    m2: usize,
    focal: String,
    dim: usize,
    is_a: Verdict,
    is_b: Verdict,
    is_ricci_parallel: Verdict,
    is_einstein: Verdict,
    matches_expected: bool,
    cyclic_defect: f64,
    codazzi_defect: f64,
    parallel_defect: f64,
    einstein_defect: f64,
    witness_value: Option<f64>,
    dim_vx_at_witness: Option<usize>,
    sec_max: f64,
    a_tilde_max: f64,
    ricci_min: f64,
    ricci_lower_bound: f64,
    oracle_discrepancy: Option<f64>,
    error: Option<&'a str>,
}

fn r12(x: f64) -> f64 {
    round_sig(x, REPORT_DIGITS)
}

pub fn to_csv(table: &ClassificationTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &table.rows {
        w.serialize(CsvRow {
            case: &r.case,
            m1: r.m1,
            m2: r.m2,
            focal: r.focal.to_string(),
            dim: r.dim,
            is_a: r.is_a,
            is_b: r.is_b,
            is_ricci_parallel: r.is_ricci_parallel,
            is_einstein: r.is_einstein,
            matches_expected: r.matches_expected,
            cyclic_defect: r12(r.defects.cyclic),
            codazzi_defect: r12(r.defects.codazzi),
            parallel_defect: r12(r.defects.parallel),
            einstein_defect: r12(r.defects.einstein),
            witness_value: r.witness.as_ref().map(|w| r12(w.value)),
            dim_vx_at_witness: r.dim_vx_at_witness,
            sec_max: r12(r.bounds.sec_max),
            a_tilde_max: r12(r.bounds.a_tilde_max),
            ricci_min: r12(r.bounds.ricci_min),
            ricci_lower_bound: r.bounds.ricci_lower_bound,
            oracle_discrepancy: r.defects.oracle_discrepancy.map(r12),
            error: r.error.as_deref(),
        })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

pub fn to_markdown(table: &ClassificationTable) -> String {
    let mut s = String::new();
    s.push_str("| case | (m1, m2) | dim | A | B | Ricci parallel | Einstein | parallel defect | dim V_x | expected |\n");
    s.push_str("|---|---|---|---|---|---|---|---|---|---|\n");
    for r in &table.rows {
        s.push_str(&format!(
            "| `{}` | ({}, {}) | {} | {} | {} | {} | {} | {:.3e} | {} | {} |\n",
            r.case,
            r.m1,
            r.m2,
            r.dim,
            r.is_a,
            r.is_b,
            r.is_ricci_parallel,
            r.is_einstein,
            r.defects.parallel,
            r.dim_vx_at_witness.map_or("-".to_string(), |d| d.to_string()),
            if r.matches_expected { "match" } else { "MISMATCH" }
        ));
    }
    let parallel: Vec<&str> = table
        .rows
        .iter()
        .filter(|r| r.is_ricci_parallel == Verdict::Positive)
        .map(|r| r.case.as_str())
        .collect();
    let einstein: Vec<&str> = table
        .rows
        .iter()
        .filter(|r| r.is_einstein == Verdict::Positive)
        .map(|r| r.case.as_str())
        .collect();
    let all_a = table.rows.iter().all(|r| r.is_a == Verdict::Positive);
    s.push('\n');
    s.push_str(&format!(
        "- cyclic parallel Ricci tensor on every row: {}\n",
        if all_a { "yes" } else { "no" }
    ));
    s.push_str(&format!("- Ricci parallel: {}\n", parallel.join(", ")));
    s.push_str(&format!("- Einstein: {}\n", einstein.join(", ")));
    for v in table.consistency_violations() {
        s.push_str(&format!("- inconsistent: {v}\n"));
    }
    s
}

pub fn render(table: &ClassificationTable, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => to_json(table),
        ReportFormat::Csv => to_csv(table),
        ReportFormat::Markdown => Ok(to_markdown(table)),
    }
}

pub fn emit_report(table: &ClassificationTable, format: ReportFormat, path: &Path) -> Result<()> {
    let text = render(table, format)?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Top Ricci eigenvalue at a point fixed by `P0P1P2P3` against random points of `M1`
/// for `m = 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaReport {
    pub l: usize,
    pub bound: f64,
    pub omega_max: f64,
    pub omega_multiplicity: usize,
    pub random_max: Vec<f64>,
}

pub fn omega_locus(k: usize, n_random: usize, seed: u64) -> Result<OmegaReport> {
    let sys = build_clifford_system(3, k, CliffordFamily::Standard)?;
    let mf = FocalM1::new(sys.clone());
    let pt = common_eigvec_point(&sys, &[[0, 1, 2, 3]])?;
    let geom = EmbeddedGeometry::at(&mf, &pt.x)?;
    let spec = ricci_operator_spectrum(&geom.ricci, CLUSTER_GAP);
    let top = *spec.last().ok_or_else(|| Error::Internal("empty spectrum".into()))?;
    let random_max = (0..n_random)
        .map(|i| {
            let x = mf.random_point(derive_seed(seed, i as u64))?;
            let g = EmbeddedGeometry::at(&mf, &x)?;
            Ok(crate::linalg::sym_eigenvalues(&g.ricci).last().copied().unwrap_or(f64::NAN))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OmegaReport {
        l: sys.l,
        bound: 2.0 * sys.l as f64 - 6.0,
        omega_max: top.value,
        omega_multiplicity: top.multiplicity,
        random_max,
    })
}

/// `dim V_x` at one of the special points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VDimEntry {
    pub label: String,
    pub dim: usize,
    pub expected: usize,
    /// `true` when only `dim <= expected` is claimed.
    pub upper_bound: bool,
    pub l_minus_one: usize,
}

impl VDimEntry {
    pub fn holds(&self) -> bool {
        if self.upper_bound {
            self.dim <= self.expected
        } else {
            self.dim == self.expected
        }
    }
}

/// `dim V_x` at the special points of the cases `m = 4` (indefinite), 5, 7, 8 and the
/// restricted maxima for `m = 8`.
pub fn v_dim_ledger(seed: u64) -> Result<Vec<VDimEntry>> {
    use CliffordFamily::*;
    let mut out = Vec::new();
    let mut push = |label: &str, sys: &CliffordSystem, x: &Vector, expected: usize, upper: bool| {
        out.push(VDimEntry {
            label: label.to_string(),
            dim: numerical_rank(&v_space_generators(sys, x), RANK_TOL),
            expected,
            upper_bound: upper,
            l_minus_one: sys.l - 1,
        });
    };
    let sys = build_clifford_system(4, 2, Indefinite)?;
    push("(4,3) q = 0, P0P1P2P3 x = x", &sys, &common_eigvec_point(&sys, &[[0, 1, 2, 3]])?.x, 7, false);
    for k in [1, 2] {
        let sys = build_clifford_system(5, k, Standard)?;
        let x = common_eigvec_point(&sys, &special_quads(5).expect("m = 5"))?.x;
        push(&format!("({}, {}) common eigenvector", 5, sys.l - 6), &sys, &x, 7, false);
    }
    for k in [2, 3] {
        let sys = build_clifford_system(7, k, Standard)?;
        let x = common_eigvec_point(&sys, &special_quads(7).expect("m = 7"))?.x;
        push(&format!("({}, {}) common eigenvector", 7, sys.l - 8), &sys, &x, 7, false);
    }
    let sys = build_clifford_system(8, 2, Indefinite)?;
    let x = common_eigvec_point(&sys.extended()?, &pair_quads(5))?.x;
    push("(8,7) indefinite, extended common eigenvector", &sys, &x, 21, false);
    for (k, fam) in [(2, Definite), (2, Indefinite), (3, Standard), (4, Standard)] {
        let sys = build_clifford_system(8, k, fam)?;
        let rm = maximize_restricted_f(&sys, &special_quads(8).expect("m = 8"), None, seed)?;
        if !rm.on_m1 {
            return Err(Error::Internal(format!("(8, k = {k}) restricted maximum is off M1")));
        }
        push(&format!("(8, {}) {fam} restricted maximum", sys.l - 9), &sys, &rm.point.x, 22, true);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> RunConfig {
        RunConfig {
            points: 2,
            directions: 20,
            triples: 10,
            pairs: 50,
            oracle_triples: 2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn spec_round_trip() {
        for s in ["otfkm:M1:4:2:indefinite", "otfkm:M2:1:3", "homog:u5_M2_13", "homog:so5_cp3"] {
            let spec: CaseSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("otfkm:M3:1:3".parse::<CaseSpec>().is_err());
        assert!("homog:so6".parse::<CaseSpec>().is_err());
        assert!("otfkm:M1:x:2".parse::<CaseSpec>().is_err());
    }

    #[test]
    fn default_table_shape() {
        let cases = default_cases();
        assert_eq!(cases.len(), 2 * otfkm_systems().len() + 4);
        let parallel: Vec<String> = cases
            .iter()
            .filter(|c| expected_verdicts(c).is_ricci_parallel)
            .map(|c| c.to_string())
            .collect();
        assert!(parallel.contains(&"otfkm:M1:2:2".to_string()));
        assert!(parallel.contains(&"otfkm:M1:6:1".to_string()));
        assert!(parallel.contains(&"otfkm:M1:4:2:definite".to_string()));
        assert!(parallel.contains(&"homog:so5_grassmann".to_string()));
        assert_eq!(parallel.len(), 3 + 8 + 1);
        for c in &cases {
            let e = expected_verdicts(c);
            assert!(!e.is_einstein || e.is_ricci_parallel);
        }
    }

    #[test]
    fn m2_with_m_one_is_parallel() {
        let r = run_case(&"otfkm:M2:1:3".parse().unwrap(), &quick());
        assert!(r.error.is_none(), "{:?}", r.error);
        assert_eq!(r.is_ricci_parallel, Verdict::Positive);
        assert_eq!(r.is_einstein, Verdict::Negative);
        assert!(r.matches_expected);
    }

    #[test]
    fn sp2_focal_set_is_einstein() {
        let r = run_case(&"otfkm:M1:4:2:definite".parse().unwrap(), &quick());
        assert_eq!(r.is_einstein, Verdict::Positive);
        assert!(r.matches_expected, "{r:?}");
    }

    #[test]
    fn m2_13_orbit_row() {
        let r = run_case(&"homog:u5_M2_13".parse().unwrap(), &quick());
        assert_eq!(r.is_a, Verdict::Positive);
        assert_eq!(r.is_ricci_parallel, Verdict::Negative);
        assert!(r.matches_expected);
        let spec = &r.ricci_spectrum;
        assert_eq!(spec.len(), 2);
        assert_eq!((spec[0].multiplicity, spec[1].multiplicity), (12, 1));
    }

    #[test]
    fn witnesses_carry_the_stated_values() {
        let cfg = RunConfig::default();
        let w = case_witness(&"otfkm:M1:5:1".parse().unwrap(), &cfg).unwrap().unwrap();
        let note = |w: &Witness, k: &str| w.notes.iter().find(|(n, _)| n == k).unwrap().1;
        assert!((note(&w, "a_off_l") - 3.0).abs() < 1e-9);
        assert!(note(&w, "a_minus_3p4p5x") < 1e-9);
        assert!((w.value - 6.0).abs() < 1e-9);
        let w = case_witness(&"otfkm:M1:9:1".parse().unwrap(), &cfg).unwrap().unwrap();
        assert!((w.value / 4.0 - 1.5).abs() < 1e-9);
        let w = case_witness(&"otfkm:M1:8:2:definite".parse().unwrap(), &cfg).unwrap().unwrap();
        assert!(note(&w, "a_minus_2p2p3x") < 1e-9);
        for case in ["otfkm:M2:2:2", "otfkm:M2:3:2", "otfkm:M2:5:1", "otfkm:M2:4:2:indefinite", "otfkm:M2:9:1"] {
            let w = case_witness(&case.parse().unwrap(), &cfg).unwrap().unwrap();
            assert!((w.value - note(&w, "predicted")).abs() < 1e-8, "{case}: {} vs {:?}", w.value, w.notes);
        }
        assert!(case_witness(&"otfkm:M1:2:2".parse().unwrap(), &cfg).unwrap().is_none());
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let cases: Vec<CaseSpec> = ["otfkm:M2:1:3", "homog:so5_cp3"].iter().map(|s| s.parse().unwrap()).collect();
        let cfg = quick();
        let t1 = run_table(&cases, &cfg).unwrap();
        let t2 = run_table(&cases, &RunConfig { threads: Some(1), ..cfg }).unwrap();
        let j1 = to_json(&t1).unwrap();
        assert_eq!(j1, to_json(&t2).unwrap());
        let back: ClassificationTable = serde_json::from_str(&j1).unwrap();
        assert_eq!(back, t1.canonical().unwrap());
        assert_eq!(to_json(&back).unwrap(), j1);
        let csv = to_csv(&t1).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(to_markdown(&t1).contains("homog:so5_cp3"));
    }

    #[test]
    fn errors_become_rows() {
        let spec = CaseSpec::otfkm(FocalSet::M1, 12, 1, CliffordFamily::Standard);
        let r = run_case(&spec, &RunConfig { max_ambient: 64, ..quick() });
        assert!(r.error.is_some());
        assert!(!r.matches_expected);
    }

    #[test]
    fn codazzi_of_symmetric_tensor_vanishes() {
        let n = 3;
        let mut t = vec![Mat::zeros(n, n); n];
        for (i, m) in t.iter_mut().enumerate() {
            for j in 0..n {
                for k in 0..n {
                    m[(j, k)] = (i + j + k) as f64;
                }
            }
        }
        assert_eq!(codazzi_basis_defect(&t), 0.0);
        t[0][(1, 2)] += 1.0;
        assert_eq!(codazzi_basis_defect(&t), 1.0);
    }
}
