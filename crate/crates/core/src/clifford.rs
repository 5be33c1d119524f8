//! Symmetric Clifford systems `{P_0, ..., P_m}` on `R^{2l}`.
//!
//! Irreducible systems are assembled from anticommuting complex structures on
//! `R^{delta(m)}`: left multiplications by imaginary Cayley-Dickson units for
//! `m <= 8`, and the 8-fold periodicity `delta(m + 8) = 16 delta(m)` beyond that.
//! Every generator has entries in `{-1, 0, 1}`, so all Clifford relations hold
//! exactly in floating point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, Mat, Vector};

/// Which inequivalent family of a reducible system to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CliffordFamily {
    Standard,
    Definite,
    Indefinite,
}

impl fmt::Display for CliffordFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CliffordFamily::Standard => "standard",
            CliffordFamily::Definite => "definite",
            CliffordFamily::Indefinite => "indefinite",
        })
    }
}

impl FromStr for CliffordFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" => Ok(CliffordFamily::Standard),
            "definite" => Ok(CliffordFamily::Definite),
            "indefinite" => Ok(CliffordFamily::Indefinite),
            other => Err(Error::invalid(format!("unknown clifford family `{other}`"))),
        }
    }
}

/// Dimension of an irreducible module of the Clifford algebra `C_{m-1}`.
pub fn irreducible_dimension(m: usize) -> Result<usize> {
    if m < 1 {
        return Err(Error::invalid("m must be at least 1"));
    }
    const BASE: [usize; 8] = [1, 2, 4, 4, 8, 8, 8, 8];
    let periods = (m - 1) / 8;
    let rem = m - 8 * periods;
    Ok(BASE[rem - 1] * 16usize.pow(periods as u32))
}

/// A symmetric Clifford system together with its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSystem {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub family: CliffordFamily,
    generators: Vec<Mat>,
}

/// Residuals of the defining relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliffordVerification {
    pub max_anticommutator_residual: f64,
    pub max_symmetry_residual: f64,
    pub trace_invariant_q: Option<i64>,
    pub passed: bool,
}

pub const DEFAULT_VERIFY_TOL: f64 = 1e-12;

impl CliffordSystem {
    /// Wrap arbitrary generators (e.g. a conjugated system). No checks are made.
    pub fn from_generators(m: usize, k: usize, family: CliffordFamily, generators: Vec<Mat>) -> Result<Self> {
        if generators.len() != m + 1 {
            return Err(Error::invalid(format!(
                "expected {} generators, got {}",
                m + 1,
                generators.len()
            )));
        }
        let n = generators[0].nrows();
        if !n.is_multiple_of(2) || generators.iter().any(|g| g.nrows() != n || g.ncols() != n) {
            return Err(Error::invalid("generators must be square of a common even size"));
        }
        Ok(CliffordSystem {
            m,
            k,
            l: n / 2,
            family,
            generators,
        })
    }

    /// The irreducible system on `R^{2 delta(m)}` with no feasibility requirement on
    /// the focal multiplicities.
    pub fn irreducible(m: usize) -> Result<Self> {
        let delta = irreducible_dimension(m)?;
        let structures = complex_structures(m - 1, delta);
        let mut generators = symmetric_from_structures(delta, &structures);
        if m.is_multiple_of(4) {
            // orient so that P_0 ... P_m = +Id
            let n = 2 * delta;
            let full = generators.iter().fold(Mat::identity(n, n), |acc, g| acc * g);
            if full.trace() < 0.0 {
                generators[m].neg_mut();
            }
        }
        Ok(CliffordSystem {
            m,
            k: 1,
            l: delta,
            family: CliffordFamily::Standard,
            generators,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.l
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    pub fn generator(&self, alpha: usize) -> &Mat {
        &self.generators[alpha]
    }

    /// Multiplicities `(m_1, m_2) = (m, l - m - 1)`.
    pub fn multiplicities(&self) -> (usize, isize) {
        (self.m, self.l as isize - self.m as isize - 1)
    }

    /// `sum_a c_a P_a`.
    pub fn combination(&self, coeffs: &[f64]) -> Mat {
        let n = self.ambient_dim();
        let mut out = Mat::zeros(n, n);
        for (c, p) in coeffs.iter().zip(&self.generators) {
            if *c != 0.0 {
                out += p * *c;
            }
        }
        out
    }

    /// `(<P_0 x, x>, ..., <P_m x, x>)`.
    pub fn quadratic_values(&self, x: &Vector) -> Vec<f64> {
        self.generators.iter().map(|p| x.dot(&(p * x))).collect()
    }

    /// Product `P_{i_1} P_{i_2} ... P_{i_r}`.
    pub fn product(&self, indices: &[usize]) -> Mat {
        let n = self.ambient_dim();
        let mut out = Mat::identity(n, n);
        for &i in indices {
            out *= &self.generators[i];
        }
        out
    }

    /// Conjugate every generator by an orthogonal matrix: `P -> O P O^T`.
    pub fn conjugated(&self, o: &Mat) -> Self {
        let generators = self.generators.iter().map(|p| o * p * o.transpose()).collect();
        CliffordSystem {
            generators,
            ..self.clone()
        }
    }

    /// Drop all generators after `P_keep`.
    pub fn truncated(&self, keep: usize) -> Result<Self> {
        if keep > self.m || keep < 1 {
            return Err(Error::invalid("truncation index out of range"));
        }
        Ok(CliffordSystem {
            m: keep,
            k: self.ambient_dim() / (2 * irreducible_dimension(keep)?),
            l: self.l,
            family: CliffordFamily::Standard,
            generators: self.generators[..=keep].to_vec(),
        })
    }

    /// Append one generator anticommuting with all others. Available for two-module
    /// indefinite systems, where `[[0, U], [U^T, 0]]` with `U = a_0 ... a_{m-1}` of one
    /// module's generators does the job.
    pub fn extended(&self) -> Result<Self> {
        if self.family != CliffordFamily::Indefinite || self.k != 2 {
            return Err(Error::Unsupported(
                "extension is implemented for two-module indefinite systems".into(),
            ));
        }
        let module = CliffordSystem::irreducible(self.m)?;
        let half = module.ambient_dim();
        let u = module.product(&(0..self.m).collect::<Vec<_>>());
        let mut extra = Mat::zeros(2 * half, 2 * half);
        extra.view_mut((0, half), (half, half)).copy_from(&u);
        extra.view_mut((half, 0), (half, half)).copy_from(&u.transpose());
        let mut generators = self.generators.clone();
        generators.push(extra);
        Ok(CliffordSystem {
            m: self.m + 1,
            k: self.ambient_dim() / (2 * irreducible_dimension(self.m + 1)?),
            l: self.l,
            family: CliffordFamily::Standard,
            generators,
        })
    }

    pub fn is_integral(&self) -> bool {
        self.generators
            .iter()
            .all(|g| g.iter().all(|v| v.fract() == 0.0))
    }
}

/// Build the system used for the OT-FKM polynomial with multiplicities `(m, k delta(m) - m - 1)`.
pub fn build_clifford_system(m: usize, k: usize, family: CliffordFamily) -> Result<CliffordSystem> {
    if m < 1 || k < 1 {
        return Err(Error::invalid("m and k must be at least 1"));
    }
    let delta = irreducible_dimension(m)?;
    let l = k * delta;
    if l < m + 2 {
        return Err(Error::invalid(format!(
            "(m, k) = ({m}, {k}) gives l = {l}; need l - m - 1 > 0"
        )));
    }
    match family {
        CliffordFamily::Standard => {}
        CliffordFamily::Definite | CliffordFamily::Indefinite if !m.is_multiple_of(4) => {
            return Err(Error::UnsupportedFamily(format!(
                "{family} requires m divisible by 4, got m = {m}"
            )));
        }
        CliffordFamily::Indefinite if k < 2 => {
            return Err(Error::UnsupportedFamily(
                "indefinite family needs at least two irreducible modules".into(),
            ));
        }
        _ => {}
    }
    let module = CliffordSystem::irreducible(m)?;
    let block = module.ambient_dim();
    let n = 2 * l;
    let mut generators = vec![Mat::zeros(n, n); m + 1];
    for (alpha, g) in generators.iter_mut().enumerate() {
        for b in 0..k {
            let flip = family == CliffordFamily::Indefinite && alpha == m && b == k - 1;
            let src = module.generator(alpha);
            let mut view = g.view_mut((b * block, b * block), (block, block));
            if flip {
                view.copy_from(&(-src));
            } else {
                view.copy_from(src);
            }
        }
    }
    Ok(CliffordSystem {
        m,
        k,
        l,
        family,
        generators,
    })
}

/// Max-norm residuals of `P_a^T = P_a` and `P_a P_b + P_b P_a = 2 delta_ab I`.
pub fn verify_clifford_system(sys: &CliffordSystem, tol: f64) -> CliffordVerification {
    let n = sys.ambient_dim();
    let id = Mat::identity(n, n);
    let mut sym = 0.0_f64;
    let mut anti = 0.0_f64;
    let gens = sys.generators();
    for (a, pa) in gens.iter().enumerate() {
        sym = sym.max(max_abs(&(pa - pa.transpose())));
        for pb in &gens[a..] {
            let mut ac = pa * pb + pb * pa;
            if std::ptr::eq(pa, pb) {
                ac -= &id * 2.0;
            }
            anti = anti.max(max_abs(&ac));
        }
    }
    let q = product_trace_invariant(sys).ok();
    CliffordVerification {
        max_anticommutator_residual: anti,
        max_symmetry_residual: sym,
        trace_invariant_q: q,
        passed: anti <= tol && sym <= tol,
    }
}

/// `q = Trace(P_0 ... P_m) / (2 delta(m))`, so the full product is `+-Id` exactly when
/// `|q| = k`, and `q = 0` for the balanced indefinite systems.
pub fn product_trace_invariant(sys: &CliffordSystem) -> Result<i64> {
    if !sys.m.is_multiple_of(4) {
        return Err(Error::Unsupported(format!(
            "trace invariant needs m divisible by 4, got m = {}",
            sys.m
        )));
    }
    let all: Vec<usize> = (0..=sys.m).collect();
    let trace = sys.product(&all).trace();
    let delta = irreducible_dimension(sys.m)? as f64;
    let q = trace / (2.0 * delta);
    let rounded = q.round();
    if (q - rounded).abs() > 1e-6 {
        return Err(Error::Internal(format!("non-integral trace invariant {q}")));
    }
    Ok(rounded as i64)
}

/// Orthonormal basis `{Q_0 = P, Q_1, ..., Q_m}` of `Span{P_a}` under
/// `<A, B> = Trace(AB) / 2l`, returned as coefficient rows and matrices.
#[derive(Debug, Clone)]
pub struct SphereFrame {
    pub coefficients: Vec<Vec<f64>>,
    pub matrices: Vec<Mat>,
}

pub fn clifford_sphere_frame(sys: &CliffordSystem, coeffs: &[f64]) -> Result<SphereFrame> {
    if coeffs.len() != sys.m + 1 {
        return Err(Error::invalid("coefficient vector has the wrong length"));
    }
    let norm: f64 = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("coefficients must be a unit vector, |c| = {norm}")));
    }
    let c = Vector::from_column_slice(coeffs) / norm;
    let dim = sys.m + 1;
    let mut basis: Vec<Vector> = vec![c];
    // Gram-Schmidt over the standard basis; directions parallel to the span are skipped.
    for e in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = Vector::zeros(dim);
        v[e] = 1.0;
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let vn = v.norm();
        if vn > 1e-8 {
            basis.push(v / vn);
        }
    }
    if basis.len() != dim {
        return Err(Error::Internal("sphere frame completion failed".into()));
    }
    let coefficients: Vec<Vec<f64>> = basis.iter().map(|b| b.iter().copied().collect()).collect();
    let matrices = coefficients.iter().map(|row| sys.combination(row)).collect();
    Ok(SphereFrame {
        coefficients,
        matrices,
    })
}

/// Anticommuting skew-symmetric complex structures `E_1..E_r` on `R^n`.
fn complex_structures(r: usize, n: usize) -> Vec<Mat> {
    if r == 0 {
        return Vec::new();
    }
    if r <= 7 {
        // left multiplication by imaginary units of the Cayley-Dickson algebra of dim n
        return (1..=r).map(|i| left_multiplication(i, n)).collect();
    }
    // periodicity: r + 8 structures on R^{16 n} from r structures on R^n
    let inner = complex_structures(r - 8, n / 16);
    let eight = eight_structures();
    let omega = eight.iter().fold(Mat::identity(16, 16), |acc, f| acc * f);
    let inner_dim = n / 16;
    let mut out: Vec<Mat> = eight
        .iter()
        .map(|f| Mat::identity(inner_dim, inner_dim).kronecker(f))
        .collect();
    out.extend(inner.iter().map(|e| e.kronecker(&omega)));
    out
}

/// Eight anticommuting complex structures on `R^16`: `P_0 P_j` for the irreducible
/// nine-generator symmetric system built from the octonions.
fn eight_structures() -> Vec<Mat> {
    let oct: Vec<Mat> = (1..=7).map(|i| left_multiplication(i, 8)).collect();
    let sym = symmetric_from_structures(8, &oct);
    (1..=8).map(|j| &sym[0] * &sym[j]).collect()
}

/// `P_0 = diag(I, -I)`, `P_1 = [[0, I], [I, 0]]`, `P_{1+i} = [[0, E_i], [-E_i, 0]]`.
fn symmetric_from_structures(n: usize, structures: &[Mat]) -> Vec<Mat> {
    let id = Mat::identity(n, n);
    let mut out = Vec::with_capacity(structures.len() + 2);
    let mut p0 = Mat::zeros(2 * n, 2 * n);
    p0.view_mut((0, 0), (n, n)).copy_from(&id);
    p0.view_mut((n, n), (n, n)).copy_from(&(-&id));
    out.push(p0);
    let mut p1 = Mat::zeros(2 * n, 2 * n);
    p1.view_mut((0, n), (n, n)).copy_from(&id);
    p1.view_mut((n, 0), (n, n)).copy_from(&id);
    out.push(p1);
    for e in structures {
        let mut p = Mat::zeros(2 * n, 2 * n);
        p.view_mut((0, n), (n, n)).copy_from(e);
        p.view_mut((n, 0), (n, n)).copy_from(&(-e));
        out.push(p);
    }
    out
}

/// Matrix of `v -> e_i * v` in the Cayley-Dickson algebra of dimension `n` (1, 2, 4 or 8).
fn left_multiplication(i: usize, n: usize) -> Mat {
    let mut unit = vec![0i64; n];
    unit[i] = 1;
    let mut out = Mat::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0i64; n];
        e[j] = 1;
        let prod = cd_mul(&unit, &e);
        for (r, v) in prod.iter().enumerate() {
            out[(r, j)] = *v as f64;
        }
    }
    out
}

fn cd_conj(a: &[i64]) -> Vec<i64> {
    let mut out: Vec<i64> = a.iter().map(|v| -v).collect();
    out[0] = a[0];
    out
}

/// `(p, q)(r, s) = (p r - conj(s) q, s p + q conj(r))`.
fn cd_mul(a: &[i64], b: &[i64]) -> Vec<i64> {
    let n = a.len();
    if n == 1 {
        return vec![a[0] * b[0]];
    }
    let h = n / 2;
    let (p, q) = a.split_at(h);
    let (r, s) = b.split_at(h);
    let pr = cd_mul(p, r);
    let sq = cd_mul(&cd_conj(s), q);
    let sp = cd_mul(s, p);
    let qr = cd_mul(q, &cd_conj(r));
    let mut out = Vec::with_capacity(n);
    out.extend(pr.iter().zip(&sq).map(|(x, y)| x - y));
    out.extend(sp.iter().zip(&qr).map(|(x, y)| x + y));
    out
}

/// JSON document `{m, k, l, family, generators}` with row-major integer generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordSystemDoc {
    pub m: usize,
    pub k: usize,
    pub l: usize,
    pub family: CliffordFamily,
    pub generators: Vec<Vec<Vec<i64>>>,
}

impl CliffordSystem {
    pub fn to_doc(&self) -> Result<CliffordSystemDoc> {
        if !self.is_integral() {
            return Err(Error::Unsupported(
                "only integral systems serialize to the integer document".into(),
            ));
        }
        let generators = self
            .generators
            .iter()
            .map(|g| {
                (0..g.nrows())
                    .map(|r| (0..g.ncols()).map(|c| g[(r, c)] as i64).collect())
                    .collect()
            })
            .collect();
        Ok(CliffordSystemDoc {
            m: self.m,
            k: self.k,
            l: self.l,
            family: self.family,
            generators,
        })
    }

    pub fn from_doc(doc: &CliffordSystemDoc) -> Result<Self> {
        let n = 2 * doc.l;
        let mut generators = Vec::with_capacity(doc.generators.len());
        for g in &doc.generators {
            if g.len() != n || g.iter().any(|row| row.len() != n) {
                return Err(Error::invalid("generator shape does not match 2l"));
            }
            generators.push(Mat::from_fn(n, n, |r, c| g[r][c] as f64));
        }
        CliffordSystem::from_generators(doc.m, doc.k, doc.family, generators)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc()?)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: CliffordSystemDoc = serde_json::from_str(s)?;
        CliffordSystem::from_doc(&doc)
    }
}
