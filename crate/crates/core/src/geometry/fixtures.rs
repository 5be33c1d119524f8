//! Reference submanifolds with known curvature, used as positive and negative controls.

use crate::error::{Error, Result};
use crate::fkm::{newton_quadrics, NewtonOptions};
use crate::geometry::{PointFrame, Submanifold};
use crate::linalg::{orthonormal_complement, random_unit, seeded_rng, Mat, Vector};

/// The great sphere `S^n = S^{N-1} ∩ R^{n+1}`: totally geodesic, constant curvature 1.
#[derive(Debug, Clone)]
pub struct GreatSphere {
    ambient: usize,
    dim: usize,
}

impl GreatSphere {
    pub fn new(ambient: usize, dim: usize) -> Result<Self> {
        if dim < 1 || dim + 1 > ambient {
            return Err(Error::invalid("need 1 <= n < N"));
        }
        Ok(GreatSphere { ambient, dim })
    }
}

impl Submanifold for GreatSphere {
    fn label(&self) -> String {
        format!("great S^{} in S^{}", self.dim, self.ambient - 1)
    }

    fn ambient_dim(&self) -> usize {
        self.ambient
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame> {
        let k = self.dim + 1;
        if x.rows(k, self.ambient - k).amax() > 1e-9 || (x.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("point is off the great sphere"));
        }
        let mut head = Mat::zeros(k, 1);
        head.set_column(0, &x.rows(0, k));
        let inner = orthonormal_complement(&head);
        let mut tangent = Mat::zeros(self.ambient, self.dim);
        tangent.view_mut((0, 0), (k, self.dim)).copy_from(&inner);
        let mut normal = Mat::zeros(self.ambient, self.ambient - k);
        for j in 0..self.ambient - k {
            normal[(k + j, j)] = 1.0;
        }
        Ok(PointFrame {
            x: x.clone(),
            tangent,
            normal,
        })
    }

    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        Ok(vec![Mat::zeros(self.dim, self.dim); frame.normal.ncols()])
    }

    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        Ok((x + v * t).normalize())
    }

    fn random_point(&self, seed: u64) -> Result<Vector> {
        let mut rng = seeded_rng(seed);
        let mut x = Vector::zeros(self.ambient);
        x.rows_mut(0, self.dim + 1).copy_from(&random_unit(&mut rng, self.dim + 1));
        Ok(x)
    }
}

/// The hypersurface `{x in S^{N-1} : sum d_i x_i^2 = c}` of the sphere. Not minimal, and
/// for generic `d` its Ricci tensor is not cyclic parallel.
#[derive(Debug, Clone)]
pub struct QuadricHypersurface {
    diag: Vec<f64>,
    level: f64,
    quadric: Mat,
}

impl QuadricHypersurface {
    pub fn new(diag: Vec<f64>, level: f64) -> Result<Self> {
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if diag.len() < 3 || !(level > lo && level < hi) {
            return Err(Error::invalid("need at least 3 coefficients and min d < c < max d"));
        }
        let quadric = Mat::from_diagonal(&Vector::from_vec(diag.clone()));
        Ok(QuadricHypersurface { diag, level, quadric })
    }

    fn project(&self, y: &Vector, polish: bool) -> Result<Vector> {
        let opts = NewtonOptions {
            polish,
            ..NewtonOptions::default()
        };
        newton_quadrics(std::slice::from_ref(&self.quadric), &[self.level], y, &opts)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let dx = &self.quadric * x;
        let g = dx.dot(x);
        dx - x * g
    }
}

impl Submanifold for QuadricHypersurface {
    fn label(&self) -> String {
        format!("quadric hypersurface in S^{}", self.diag.len() - 1)
    }

    fn ambient_dim(&self) -> usize {
        self.diag.len()
    }

    fn dim(&self) -> usize {
        self.diag.len() - 2
    }

    fn frame_at(&self, x: &Vector) -> Result<PointFrame> {
        let g = self.gradient(x);
        let gn = g.norm();
        if gn < 1e-8 {
            return Err(Error::invalid("singular point of the quadric"));
        }
        let normal = Mat::from_columns(&[g / gn]);
        let span = Mat::from_columns(&[x.clone(), normal.column(0).into_owned()]);
        Ok(PointFrame {
            x: x.clone(),
            tangent: orthonormal_complement(&span),
            normal,
        })
    }

    /// `A = -(T^T D T - <Dx, x> I) / |Dx - <Dx, x> x|`.
    fn shape_operators(&self, frame: &PointFrame) -> Result<Vec<Mat>> {
        let x = &frame.x;
        let gn = self.gradient(x).norm();
        let val = (&self.quadric * x).dot(x);
        let t = &frame.tangent;
        let n = t.ncols();
        let a = -(t.transpose() * &self.quadric * t - Mat::identity(n, n) * val) / gn;
        Ok(vec![a])
    }

    fn curve(&self, x: &Vector, v: &Vector, t: f64) -> Result<Vector> {
        self.project(&(x + v * t), true)
    }

    fn random_point(&self, seed: u64) -> Result<Vector> {
        let mut rng = seeded_rng(seed);
        self.project(&random_unit(&mut rng, self.diag.len()), true)
    }
}
