//! Dense complex matrix helpers shared by the simulation and the oracle.
//!
//! Hamiltonians in this crate conserve excitation number (or are diagonal),
//! so their nonzero pattern splits into many small connected blocks.
//! [`HermitianEigen`] exploits that: it diagonalizes each block separately and
//! keeps the eigenvectors block-sparse, which makes basis changes cost
//! roughly `O(n^2 b)` for block size `b` instead of `O(n^3)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Kronecker product `a ⊗ b`; the left factor indexes the slow (outer) axis.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for p in 0..br {
                for q in 0..bc {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

/// Largest absolute entry of `m - m†`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn trace(m: &CMatrix) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `tr[a b]` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for p in 0..n {
        for q in 0..a.ncols() {
            acc += a[(p, q)] * b[(q, p)];
        }
    }
    acc
}

/// `a b - b a`
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Row-compressed view of a matrix's nonzero entries.
///
/// Used for products where the left factor is a sparse operator (a
/// Hamiltonian or a Pauli factor) and the right factor is dense.
#[derive(Debug, Clone)]
pub struct SparseRows {
    n: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    pub fn new(m: &CMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .filter_map(|j| {
                        let z = m[(i, j)];
                        (z != ZERO).then_some((j, z))
                    })
                    .collect()
            })
            .collect();
        SparseRows { n: m.ncols(), rows }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `self * x`
    pub fn mul_dense(&self, x: &CMatrix) -> CMatrix {
        assert_eq!(self.n, x.nrows(), "sparse product shape mismatch");
        let mut out = CMatrix::zeros(self.rows.len(), x.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(k, s) in row {
                for j in 0..x.ncols() {
                    out[(i, j)] += s * x[(k, j)];
                }
            }
        }
        out
    }

    /// `[self, x]` for Hermitian `self`, using `x h = (h x†)†`.
    pub fn commutator_hermitian(&self, x: &CMatrix) -> CMatrix {
        let left = self.mul_dense(x);
        let right = self.mul_dense(&x.adjoint()).adjoint();
        left - right
    }
}

#[derive(Debug, Clone)]
struct EigenBlock {
    /// Original basis indices belonging to this block.
    indices: Vec<usize>,
    /// Position of this block's first eigenvalue in the global eigen ordering.
    offset: usize,
    /// Columns are eigenvectors restricted to `indices`.
    vectors: CMatrix,
}

/// Eigendecomposition `H = V diag(E) V†` of a Hermitian matrix, computed
/// independently on each connected block of its nonzero pattern.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    dim: usize,
    values: Vec<f64>,
    blocks: Vec<EigenBlock>,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Shape(format!("hamiltonian must be square, got {}x{}", h.nrows(), h.ncols())));
        }
        let defect = hermiticity_defect(h);
        let tol = 1e-12 * max_abs(h).max(1.0);
        if defect > tol {
            return Err(Error::InvalidHamiltonian(format!(
                "|H - H^dagger| = {defect:.3e} exceeds {tol:.1e}"
            )));
        }

        let dim = h.nrows();
        let mut values = Vec::with_capacity(dim);
        let mut blocks = Vec::new();
        for indices in connected_blocks(h) {
            let m = indices.len();
            let sub = CMatrix::from_fn(m, m, |p, q| h[(indices[p], indices[q])]);
            let offset = values.len();
            let vectors = if m == 1 {
                values.push(sub[(0, 0)].re);
                CMatrix::from_element(1, 1, ONE)
            } else {
                let eig = SymmetricEigen::new(sub);
                values.extend(eig.eigenvalues.iter().copied());
                eig.eigenvectors
            };
            blocks.push(EigenBlock { indices, offset, vectors });
        }
        Ok(HermitianEigen { dim, values, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Dense eigenvector matrix `V`.
    pub fn eigenvectors(&self) -> CMatrix {
        let mut v = CMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            for (p, &row) in b.indices.iter().enumerate() {
                for q in 0..b.indices.len() {
                    v[(row, b.offset + q)] = b.vectors[(p, q)];
                }
            }
        }
        v
    }

    /// `V† a V`
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.check_shape(a);
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b1 in &self.blocks {
            for b2 in &self.blocks {
                let sub = CMatrix::from_fn(b1.indices.len(), b2.indices.len(), |p, q| {
                    a[(b1.indices[p], b2.indices[q])]
                });
                if sub.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let t = b1.vectors.adjoint() * sub * &b2.vectors;
                out.view_mut((b1.offset, b2.offset), t.shape()).copy_from(&t);
            }
        }
        out
    }

    /// `V a V†`
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.check_shape(a);
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for b1 in &self.blocks {
            for b2 in &self.blocks {
                let sub = a.view((b1.offset, b2.offset), (b1.indices.len(), b2.indices.len()));
                if sub.iter().all(|z| *z == ZERO) {
                    continue;
                }
                let t = &b1.vectors * sub * b2.vectors.adjoint();
                for (p, &row) in b1.indices.iter().enumerate() {
                    for (q, &col) in b2.indices.iter().enumerate() {
                        out[(row, col)] = t[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Phases `exp(-i E_m t)`.
    pub fn phases(&self, t: f64) -> DVector<C64> {
        DVector::from_iterator(self.dim, self.values.iter().map(|&e| C64::from_polar(1.0, -e * t)))
    }

    fn check_shape(&self, a: &CMatrix) {
        assert_eq!(
            a.shape(),
            (self.dim, self.dim),
            "operator shape does not match the decomposed hamiltonian"
        );
    }
}

/// Connected components of the graph with an edge wherever `h[i][j] != 0`.
fn connected_blocks(h: &CMatrix) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if h[(i, j)] != ZERO || h[(j, i)] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}
