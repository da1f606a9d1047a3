//! Matrix Lie algebras, their groups, and the basis projection that every
//! other module leans on.

use nalgebra::{DMatrix, DVector};

use super::constants::StructureConstants;
use super::expm;
use crate::error::{Error, Result};

/// Coordinates of an algebra element with respect to an algebra's basis.
pub type Coords = DVector<f64>;

/// Tolerance on the least-squares residual when projecting onto a basis.
pub const CLOSURE_TOL: f64 = 1e-10;

/// Gram determinant below which a basis is rejected as dependent.
pub const GRAM_TOL: f64 = 1e-12;

/// One algebraic condition cutting a matrix group out of `GL(m)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    /// Top-left `size × size` block is orthogonal with unit determinant.
    OrthogonalBlock { size: usize },
    /// `gᵀ J g = J` for `J = diag(signature)`, with unit determinant.
    PseudoOrthogonal { signature: Vec<f64> },
    UnitDeterminant,
    /// Last row equals `(0, …, 0, 1)`.
    AffineBottomRow,
    /// Upper triangular with ones on the diagonal.
    UnipotentUpper,
    /// All off-diagonal entries vanish.
    Diagonal,
}

impl Constraint {
    pub fn defect(&self, g: &DMatrix<f64>) -> f64 {
        let m = g.nrows();
        match self {
            Constraint::OrthogonalBlock { size } => {
                let r = g.view((0, 0), (*size, *size)).into_owned();
                let gram = r.transpose() * &r - DMatrix::identity(*size, *size);
                max_abs(&gram).max((r.determinant() - 1.0).abs())
            }
            Constraint::PseudoOrthogonal { signature } => {
                let j = DMatrix::from_diagonal(&DVector::from_column_slice(signature));
                let d = g.transpose() * &j * g - &j;
                max_abs(&d).max((g.determinant() - 1.0).abs())
            }
            Constraint::UnitDeterminant => (g.determinant() - 1.0).abs(),
            Constraint::AffineBottomRow => (0..m)
                .map(|j| {
                    let target = if j == m - 1 { 1.0 } else { 0.0 };
                    (g[(m - 1, j)] - target).abs()
                })
                .fold(0.0, f64::max),
            Constraint::UnipotentUpper => {
                let mut worst: f64 = 0.0;
                for i in 0..m {
                    worst = worst.max((g[(i, i)] - 1.0).abs());
                    for j in 0..i {
                        worst = worst.max(g[(i, j)].abs());
                    }
                }
                worst
            }
            Constraint::Diagonal => {
                let mut worst: f64 = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        if i != j {
                            worst = worst.max(g[(i, j)].abs());
                        }
                    }
                }
                worst
            }
        }
    }
}

/// Conjunction of constraints; the empty predicate accepts every matrix.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroupPredicate(pub Vec<Constraint>);

impl GroupPredicate {
    pub fn none() -> Self {
        GroupPredicate(Vec::new())
    }

    pub fn defect(&self, g: &DMatrix<f64>) -> f64 {
        self.0.iter().map(|c| c.defect(g)).fold(0.0, f64::max)
    }
}

/// Which exponential to use. Closed forms are exact for the matrix shapes
/// they name; everything else goes through scaling and squaring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpForm {
    Generic,
    /// 3×3 skew-symmetric matrices (Rodrigues).
    Rotation3,
    /// 3×3 `[[W, v], [0, 0]]` with `W` 2×2 skew.
    Euclidean2,
    /// 4×4 `[[W, v], [0, 0]]` with `W` 3×3 skew.
    Euclidean3,
}

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    name: String,
    size: usize,
    basis: Vec<DMatrix<f64>>,
    predicate: GroupPredicate,
    exp_form: ExpForm,
    /// Rows map a vectorized matrix to least-squares basis coordinates.
    projector: DMatrix<f64>,
}

impl LieAlgebra {
    /// Builds an algebra from basis matrices, rejecting dependent or
    /// bracket-open bases.
    pub fn new(name: &str, basis: Vec<DMatrix<f64>>, predicate: GroupPredicate) -> Result<Self> {
        let size = match basis.first() {
            Some(b) => b.nrows(),
            None => return Err(Error::BadParams("empty basis".into())),
        };
        if basis.iter().any(|b| b.nrows() != size || b.ncols() != size) {
            return Err(Error::BadParams("basis matrices must be square and equal-sized".into()));
        }
        let n = basis.len();
        let mut stacked = DMatrix::zeros(size * size, n);
        for (k, b) in basis.iter().enumerate() {
            stacked.column_mut(k).copy_from_slice(b.as_slice());
        }
        let gram = stacked.transpose() * &stacked;
        if gram.determinant().abs() <= GRAM_TOL {
            return Err(Error::SingularMatrix(format!("basis of `{name}` is linearly dependent")));
        }
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix(format!("Gram matrix of `{name}`")))?;
        let projector = gram_inv * stacked.transpose();
        let alg = LieAlgebra {
            name: name.to_string(),
            size,
            basis,
            predicate,
            exp_form: ExpForm::Generic,
            projector,
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let c = &alg.basis[i] * &alg.basis[j] - &alg.basis[j] * &alg.basis[i];
                alg.project(&c)?;
            }
        }
        Ok(alg)
    }

    pub fn with_exp_form(mut self, form: ExpForm) -> Self {
        self.exp_form = form;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn matrix_size(&self) -> usize {
        self.size
    }

    pub fn basis(&self) -> &[DMatrix<f64>] {
        &self.basis
    }

    pub fn predicate(&self) -> &GroupPredicate {
        &self.predicate
    }

    pub fn exp_form(&self) -> ExpForm {
        self.exp_form
    }

    pub fn zero(&self) -> Coords {
        Coords::zeros(self.dim())
    }

    pub fn unit(&self, k: usize) -> Coords {
        let mut c = self.zero();
        c[k] = 1.0;
        c
    }

    pub fn to_matrix(&self, coords: &Coords) -> DMatrix<f64> {
        debug_assert_eq!(coords.len(), self.dim());
        let mut m = DMatrix::zeros(self.size, self.size);
        for (c, b) in coords.iter().zip(&self.basis) {
            if *c != 0.0 {
                m += b * *c;
            }
        }
        m
    }

    /// Least-squares coordinates and the max-norm residual, without judging it.
    pub fn project_unchecked(&self, m: &DMatrix<f64>) -> (Coords, f64) {
        let v = DVector::from_column_slice(m.as_slice());
        let coords = &self.projector * v;
        let residual = max_abs(&(self.to_matrix(&coords) - m));
        (coords, residual)
    }

    /// Coordinates of `m`, failing if `m` is not in the span (relative to its size).
    pub fn project(&self, m: &DMatrix<f64>) -> Result<Coords> {
        let (coords, residual) = self.project_unchecked(m);
        if residual > CLOSURE_TOL * max_abs(m).max(1.0) {
            return Err(Error::BasisClosure { residual });
        }
        Ok(coords)
    }

    pub fn bracket(&self, x: &Coords, y: &Coords) -> Result<Coords> {
        let (a, b) = (self.to_matrix(x), self.to_matrix(y));
        self.project(&(&a * &b - &b * &a))
    }

    pub fn structure_constants(&self) -> Result<StructureConstants> {
        let n = self.dim();
        let mut c = StructureConstants::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                let b = &self.basis[i] * &self.basis[j] - &self.basis[j] * &self.basis[i];
                let coords = self.project(&b)?;
                for k in 0..n {
                    c.set(k, i, j, coords[k]);
                }
            }
        }
        Ok(c)
    }

    /// `exp(t·A)` as a group matrix.
    pub fn exp(&self, a: &Coords, t: f64) -> DMatrix<f64> {
        expm::exp_with_form(&(self.to_matrix(a) * t), self.exp_form)
    }

    /// `Ad_g A = g A g⁻¹`, projected back onto the basis.
    pub fn adjoint(&self, g: &DMatrix<f64>, a: &Coords) -> Result<Coords> {
        let inv = g
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::SingularMatrix("adjoint of a non-invertible matrix".into()))?;
        self.project(&(g * self.to_matrix(a) * inv))
    }

    /// Max-norm violation of the group predicate.
    pub fn constraint_defect(&self, g: &DMatrix<f64>) -> f64 {
        self.predicate.defect(g)
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
