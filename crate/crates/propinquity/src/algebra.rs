//! Finite-dimensional C*-algebra arithmetic.
//!
//! Algebras are finite direct sums of full matrix blocks over the complex
//! numbers. Elements carry one matrix per block; states are block-weighted
//! density matrices; *-morphisms are stored as raw real-linear maps on
//! self-adjoint coordinates together with a validation certificate.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, LinMap, RVec, STRUCT_TOL};

/// Tolerance for validation certificates (unitality, multiplicativity).
pub const CERT_TOL: f64 = 1e-9;

/// Tolerance on state positivity: smallest density eigenvalue may dip this far.
pub const STATE_POS_TOL: f64 = 1e-10;

/// A finite direct sum of full matrix blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CStarAlgebra {
    block_dims: Vec<usize>,
    label: String,
    coord_offsets: Vec<usize>,
    sa_dim: usize,
}

impl CStarAlgebra {
    pub fn new(block_dims: Vec<usize>, label: impl Into<String>) -> Result<Arc<CStarAlgebra>> {
        if block_dims.is_empty() {
            return Err(Error::Structure(
                "an algebra needs at least one block".into(),
            ));
        }
        if block_dims.iter().any(|&n| n == 0) {
            return Err(Error::Structure("block dimensions must be positive".into()));
        }
        let mut coord_offsets = Vec::with_capacity(block_dims.len());
        let mut off = 0;
        for &n in &block_dims {
            coord_offsets.push(off);
            off += n * n;
        }
        Ok(Arc::new(CStarAlgebra {
            block_dims,
            label: label.into(),
            coord_offsets,
            sa_dim: off,
        }))
    }

    /// The direct sum, blocks of `a` first.
    pub fn direct_sum(
        a: &CStarAlgebra,
        b: &CStarAlgebra,
        label: impl Into<String>,
    ) -> Arc<CStarAlgebra> {
        let mut dims = a.block_dims.clone();
        dims.extend_from_slice(&b.block_dims);
        CStarAlgebra::new(dims, label).expect("nonempty dims")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Real dimension of the self-adjoint part, `Σ n_b²`.
    pub fn sa_dim(&self) -> usize {
        self.sa_dim
    }

    pub fn n_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// True when every block is 1x1, i.e. the algebra is a function algebra.
    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&n| n == 1)
    }

    pub fn coord_offset(&self, block: usize) -> usize {
        self.coord_offsets[block]
    }

    pub fn unit(self: &Arc<Self>) -> Element {
        let blocks = self
            .block_dims
            .iter()
            .map(|&n| CMat::identity(n, n))
            .collect();
        Element {
            algebra: self.clone(),
            blocks,
        }
    }

    pub fn zero(self: &Arc<Self>) -> Element {
        let blocks = self.block_dims.iter().map(|&n| CMat::zeros(n, n)).collect();
        Element {
            algebra: self.clone(),
            blocks,
        }
    }

    /// Coordinates of the unit in the self-adjoint coordinate system.
    pub fn unit_coords(&self) -> RVec {
        let mut v = RVec::zeros(self.sa_dim);
        for (b, &n) in self.block_dims.iter().enumerate() {
            let off = self.coord_offsets[b];
            for i in 0..n {
                v[off + i] = 1.0;
            }
        }
        v
    }
}

pub fn same_algebra(a: &Arc<CStarAlgebra>, b: &Arc<CStarAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// An element of a block algebra: one complex matrix per block.
#[derive(Debug, Clone)]
pub struct Element {
    algebra: Arc<CStarAlgebra>,
    blocks: Vec<CMat>,
}

impl Element {
    pub fn new(algebra: Arc<CStarAlgebra>, blocks: Vec<CMat>) -> Result<Element> {
        if blocks.len() != algebra.n_blocks() {
            return Err(Error::Structure("block count mismatch".into()));
        }
        for (m, &n) in blocks.iter().zip(algebra.block_dims()) {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Structure(format!(
                    "block shape {}x{} does not match algebra block size {}",
                    m.nrows(),
                    m.ncols(),
                    n
                )));
            }
        }
        Ok(Element { algebra, blocks })
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMat {
        &self.blocks[b]
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.blocks
            .iter()
            .all(|m| linalg::is_hermitian(m, STRUCT_TOL))
    }

    pub fn adjoint(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
        })
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
        })
    }

    pub fn scale(&self, t: f64) -> Element {
        let f = Complex64::new(t, 0.0);
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m * f).collect(),
        }
    }

    pub fn scale_c(&self, z: Complex64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|m| m * z).collect(),
        }
    }

    /// Blockwise product.
    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a * b)
            .collect();
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks,
        })
    }

    fn check_same(&self, other: &Element) -> Result<()> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::Structure(format!(
                "elements of different algebras: {} vs {}",
                self.algebra.label(),
                other.algebra.label()
            )));
        }
        Ok(())
    }

    /// Hermitian and anti-Hermitian parts, `x = h + ik` with `h, k` self-adjoint.
    pub fn hermitian_parts(&self) -> (Element, Element) {
        let adj = self.adjoint();
        let h = Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&adj.blocks)
                .map(|(a, b)| (a + b) * Complex64::new(0.5, 0.0))
                .collect(),
        };
        let k = Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&adj.blocks)
                .map(|(a, b)| (a - b) * Complex64::new(0.0, -0.5))
                .collect(),
        };
        (h, k)
    }

    /// Encodes a self-adjoint element into real coordinates:
    /// per block, the diagonal first, then (Re, Im) of the strict upper triangle.
    pub fn sa_coords(&self) -> Result<RVec> {
        if !self.is_self_adjoint() {
            return Err(Error::Domain("element is not self-adjoint".into()));
        }
        let alg = &self.algebra;
        let mut v = RVec::zeros(alg.sa_dim());
        for (b, m) in self.blocks.iter().enumerate() {
            let n = m.nrows();
            let off = alg.coord_offset(b);
            let mut k = off;
            for i in 0..n {
                v[k] = m[(i, i)].re;
                k += 1;
            }
            for i in 0..n {
                for j in i + 1..n {
                    v[k] = m[(i, j)].re;
                    v[k + 1] = m[(i, j)].im;
                    k += 2;
                }
            }
        }
        Ok(v)
    }

    /// Decodes real coordinates back into a self-adjoint element.
    pub fn from_sa_coords(algebra: &Arc<CStarAlgebra>, v: &RVec) -> Element {
        assert_eq!(v.len(), algebra.sa_dim());
        let mut blocks = Vec::with_capacity(algebra.n_blocks());
        for (b, &n) in algebra.block_dims().iter().enumerate() {
            let off = algebra.coord_offset(b);
            let mut m = CMat::zeros(n, n);
            let mut k = off;
            for i in 0..n {
                m[(i, i)] = Complex64::new(v[k], 0.0);
                k += 1;
            }
            for i in 0..n {
                for j in i + 1..n {
                    let z = Complex64::new(v[k], v[k + 1]);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                    k += 2;
                }
            }
            blocks.push(m);
        }
        Element {
            algebra: algebra.clone(),
            blocks,
        }
    }
}

/// Largest spectral norm over the blocks.
pub fn operator_norm(a: &Element) -> f64 {
    a.blocks()
        .iter()
        .map(linalg::spectral_norm)
        .fold(0.0, f64::max)
}

/// Jordan product `(ab + ba)/2`; self-adjoint inputs give a self-adjoint output.
pub fn jordan_product(a: &Element, b: &Element) -> Result<Element> {
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    Ok(ab.add(&ba)?.scale(0.5))
}

/// Lie product `(ab - ba)/(2i)`; self-adjoint inputs give a self-adjoint output.
pub fn lie_product(a: &Element, b: &Element) -> Result<Element> {
    let ab = a.mul(b)?;
    let ba = b.mul(a)?;
    Ok(ab.sub(&ba)?.scale_c(Complex64::new(0.0, -0.5)))
}

/// A state: nonnegative block weights summing to one, one unit-trace
/// positive-semidefinite density per block carrying positive weight.
#[derive(Debug, Clone)]
pub struct State {
    algebra: Arc<CStarAlgebra>,
    weights: Vec<f64>,
    densities: Vec<CMat>,
}

impl State {
    pub fn new(
        algebra: Arc<CStarAlgebra>,
        weights: Vec<f64>,
        densities: Vec<CMat>,
    ) -> Result<State> {
        if weights.len() != algebra.n_blocks() || densities.len() != algebra.n_blocks() {
            return Err(Error::Structure("state block count mismatch".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!(
                "state weights sum to {total}, expected 1"
            )));
        }
        for (b, (&w, d)) in weights.iter().zip(&densities).enumerate() {
            if w < -1e-12 {
                return Err(Error::Domain(format!("negative weight {w} on block {b}")));
            }
            let n = algebra.block_dims()[b];
            if d.nrows() != n || d.ncols() != n {
                return Err(Error::Structure("density shape mismatch".into()));
            }
            if w > 1e-12 {
                if !linalg::is_hermitian(d, STRUCT_TOL) {
                    return Err(Error::Domain(format!(
                        "density on block {b} is not Hermitian"
                    )));
                }
                let tr: Complex64 = d.trace();
                if (tr.re - 1.0).abs() > STATE_POS_TOL || tr.im.abs() > STATE_POS_TOL {
                    return Err(Error::Domain(format!(
                        "density on block {b} has trace {tr}"
                    )));
                }
                let min_eig = linalg::hermitian_eigenvalues(d)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < -STATE_POS_TOL {
                    return Err(Error::Domain(format!(
                        "density on block {b} has eigenvalue {min_eig}"
                    )));
                }
            }
        }
        Ok(State {
            algebra,
            weights,
            densities,
        })
    }

    /// Dirac-style state: full weight on one block, density projecting onto a
    /// basis vector. On a commutative algebra this is evaluation at a point.
    pub fn dirac(algebra: &Arc<CStarAlgebra>, block: usize, basis_index: usize) -> Result<State> {
        if block >= algebra.n_blocks() || basis_index >= algebra.block_dims()[block] {
            return Err(Error::Structure("dirac index out of range".into()));
        }
        let weights = (0..algebra.n_blocks())
            .map(|b| if b == block { 1.0 } else { 0.0 })
            .collect();
        let densities = algebra
            .block_dims()
            .iter()
            .enumerate()
            .map(|(b, &n)| {
                let mut d = CMat::zeros(n, n);
                if b == block {
                    d[(basis_index, basis_index)] = Complex64::new(1.0, 0.0);
                } else {
                    d.fill_diagonal(Complex64::new(1.0 / n as f64, 0.0));
                }
                d
            })
            .collect();
        State::new(algebra.clone(), weights, densities)
    }

    /// Uniform weights, maximally mixed density on every block.
    pub fn maximally_mixed(algebra: &Arc<CStarAlgebra>) -> State {
        let nb = algebra.n_blocks();
        let weights = vec![1.0 / nb as f64; nb];
        let densities = algebra
            .block_dims()
            .iter()
            .map(|&n| CMat::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0))
            .collect();
        State {
            algebra: algebra.clone(),
            weights,
            densities,
        }
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn densities(&self) -> &[CMat] {
        &self.densities
    }

    /// `Σ_b w_b tr(ρ_b a_b)`; real on self-adjoint input.
    pub fn eval(&self, a: &Element) -> Result<Complex64> {
        if !same_algebra(&self.algebra, a.algebra()) {
            return Err(Error::Structure(
                "state and element live on different algebras".into(),
            ));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for ((&w, d), m) in self.weights.iter().zip(&self.densities).zip(a.blocks()) {
            if w != 0.0 {
                acc += Complex64::new(w, 0.0) * (d * m).trace();
            }
        }
        Ok(acc)
    }

    /// The functional as a vector on self-adjoint coordinates, so that
    /// `phi(a) = functional_coords · sa_coords(a)` for self-adjoint `a`.
    pub fn functional_coords(&self) -> RVec {
        let alg = &self.algebra;
        let mut v = RVec::zeros(alg.sa_dim());
        for (b, (&w, d)) in self.weights.iter().zip(&self.densities).enumerate() {
            if w == 0.0 {
                continue;
            }
            let n = d.nrows();
            let off = alg.coord_offset(b);
            let mut k = off;
            for i in 0..n {
                v[k] = w * d[(i, i)].re;
                k += 1;
            }
            for i in 0..n {
                for j in i + 1..n {
                    // tr(ρ a) picks up 2 Re(ρ_ij conj(a_ij)) from the (i,j) pair
                    v[k] = 2.0 * w * d[(i, j)].re;
                    v[k + 1] = 2.0 * w * d[(i, j)].im;
                    k += 2;
                }
            }
        }
        v
    }

    /// Rebuilds a state from a functional vector; fails if the functional is
    /// not positive and unital within tolerance.
    pub fn from_functional(algebra: &Arc<CStarAlgebra>, f: &RVec) -> Result<State> {
        if f.len() != algebra.sa_dim() {
            return Err(Error::Structure("functional dimension mismatch".into()));
        }
        let mut weights = Vec::with_capacity(algebra.n_blocks());
        let mut densities = Vec::with_capacity(algebra.n_blocks());
        for (b, &n) in algebra.block_dims().iter().enumerate() {
            let off = algebra.coord_offset(b);
            let mut sigma = CMat::zeros(n, n);
            let mut k = off;
            for i in 0..n {
                sigma[(i, i)] = Complex64::new(f[k], 0.0);
                k += 1;
            }
            for i in 0..n {
                for j in i + 1..n {
                    let z = Complex64::new(f[k] / 2.0, f[k + 1] / 2.0);
                    sigma[(i, j)] = z;
                    sigma[(j, i)] = z.conj();
                    k += 2;
                }
            }
            let w = sigma.trace().re;
            if w < -STATE_POS_TOL {
                return Err(Error::Domain(format!(
                    "functional has negative mass {w} on block {b}"
                )));
            }
            let w = w.max(0.0);
            if w > STATE_POS_TOL {
                let min_eig = linalg::hermitian_eigenvalues(&sigma)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                if min_eig < -STATE_POS_TOL {
                    return Err(Error::Domain(format!(
                        "functional is not positive on block {b}: eigenvalue {min_eig}"
                    )));
                }
                densities.push(sigma * Complex64::new(1.0 / w, 0.0));
            } else {
                densities.push(CMat::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0));
            }
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "functional has total mass {total}, expected 1"
            )));
        }
        // renormalize the rounding residue so downstream checks see mass one
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(State {
            algebra: algebra.clone(),
            weights,
            densities,
        })
    }

    /// Convex combination `t·self + (1-t)·other`.
    pub fn mix(&self, other: &State, t: f64) -> Result<State> {
        if !same_algebra(&self.algebra, &other.algebra) {
            return Err(Error::Structure(
                "mixing states on different algebras".into(),
            ));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("mixing weight {t} outside [0,1]")));
        }
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut densities = Vec::with_capacity(self.densities.len());
        for b in 0..self.weights.len() {
            let w = t * self.weights[b] + (1.0 - t) * other.weights[b];
            let sigma = &self.densities[b] * Complex64::new(t * self.weights[b], 0.0)
                + &other.densities[b] * Complex64::new((1.0 - t) * other.weights[b], 0.0);
            if w > STATE_POS_TOL {
                densities.push(sigma * Complex64::new(1.0 / w, 0.0));
            } else {
                let n = self.densities[b].nrows();
                densities.push(CMat::identity(n, n) * Complex64::new(1.0 / n as f64, 0.0));
            }
            weights.push(w);
        }
        Ok(State {
            algebra: self.algebra.clone(),
            weights,
            densities,
        })
    }
}

/// How the multiplicativity check covered basis pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairCoverage {
    /// Every pair of self-adjoint coordinate basis elements.
    Exhaustive,
    /// This many random self-adjoint pairs (large algebras).
    Sampled(usize),
}

/// Validation report for a *-morphism.
#[derive(Debug, Clone)]
pub struct MorphismReport {
    pub unital_violation: f64,
    pub adjoint_violation: f64,
    pub mult_violation: f64,
    pub rank: usize,
    pub coverage: PairCoverage,
    pub epimorphism: bool,
    pub monomorphism: bool,
}

/// A unital *-morphism candidate stored as a real-linear map on self-adjoint
/// coordinates and extended complex-linearly. Correctness is enforced by
/// validation, not by construction.
#[derive(Debug, Clone)]
pub struct StarMorphism {
    source: Arc<CStarAlgebra>,
    target: Arc<CStarAlgebra>,
    map: LinMap,
}

impl StarMorphism {
    pub fn from_linmap(
        source: Arc<CStarAlgebra>,
        target: Arc<CStarAlgebra>,
        map: LinMap,
    ) -> Result<StarMorphism> {
        if map.cols() != source.sa_dim() || map.rows() != target.sa_dim() {
            return Err(Error::Structure(format!(
                "morphism map is {}x{}, expected {}x{}",
                map.rows(),
                map.cols(),
                target.sa_dim(),
                source.sa_dim()
            )));
        }
        Ok(StarMorphism {
            source,
            target,
            map,
        })
    }

    pub fn identity(algebra: &Arc<CStarAlgebra>) -> StarMorphism {
        StarMorphism {
            source: algebra.clone(),
            target: algebra.clone(),
            map: LinMap::identity(algebra.sa_dim()),
        }
    }

    /// Projection of a direct sum onto a contiguous run of blocks.
    /// `first_block` indexes into `sum`'s blocks; the run must match `target`.
    pub fn projection(
        sum: &Arc<CStarAlgebra>,
        target: &Arc<CStarAlgebra>,
        first_block: usize,
    ) -> Result<StarMorphism> {
        let tb = target.block_dims();
        let sb = sum.block_dims();
        if first_block + tb.len() > sb.len() || sb[first_block..first_block + tb.len()] != *tb {
            return Err(Error::Structure(
                "projection blocks do not match target".into(),
            ));
        }
        let mut entries = Vec::new();
        for (k, _) in tb.iter().enumerate() {
            let src_off = sum.coord_offset(first_block + k);
            let tgt_off = target.coord_offset(k);
            let n2 = tb[k] * tb[k];
            for i in 0..n2 {
                entries.push(((tgt_off + i) as u32, (src_off + i) as u32, 1.0));
            }
        }
        StarMorphism::from_linmap(
            sum.clone(),
            target.clone(),
            LinMap::from_triplets(target.sa_dim(), sum.sa_dim(), entries),
        )
    }

    /// Pullback along a point map for commutative algebras:
    /// `f ↦ f ∘ point_map`, where `point_map[t]` is the source point under `t`.
    pub fn commutative_pullback(
        source: &Arc<CStarAlgebra>,
        target: &Arc<CStarAlgebra>,
        point_map: &[usize],
    ) -> Result<StarMorphism> {
        if !source.is_commutative() || !target.is_commutative() {
            return Err(Error::Structure(
                "point pullback needs commutative algebras".into(),
            ));
        }
        if point_map.len() != target.n_blocks() {
            return Err(Error::Structure("point map length mismatch".into()));
        }
        let mut entries = Vec::new();
        for (t, &s) in point_map.iter().enumerate() {
            if s >= source.n_blocks() {
                return Err(Error::Structure("point map index out of range".into()));
            }
            entries.push((t as u32, s as u32, 1.0));
        }
        StarMorphism::from_linmap(
            source.clone(),
            target.clone(),
            LinMap::from_triplets(target.sa_dim(), source.sa_dim(), entries),
        )
    }

    /// Unital block-diagonal embedding of `source` into a single-block algebra,
    /// repeating source block `b` `multiplicity[b]` times along the diagonal.
    /// Requires `Σ multiplicity[b] · n_b` = target block size.
    pub fn block_diagonal_embedding(
        source: &Arc<CStarAlgebra>,
        target: &Arc<CStarAlgebra>,
        multiplicity: &[usize],
    ) -> Result<StarMorphism> {
        if target.n_blocks() != 1 {
            return Err(Error::Structure(
                "embedding target must be a single block".into(),
            ));
        }
        if multiplicity.len() != source.n_blocks() || multiplicity.iter().any(|&m| m == 0) {
            return Err(Error::Structure(
                "one positive multiplicity per source block".into(),
            ));
        }
        let total: usize = multiplicity
            .iter()
            .zip(source.block_dims())
            .map(|(&m, &n)| m * n)
            .sum();
        let nt = target.block_dims()[0];
        if total != nt {
            return Err(Error::Structure(format!(
                "multiplicities fill {total} of {nt} target dimensions"
            )));
        }
        // coordinate index helpers for a single block of size n at offset `off`
        let coord = |off: usize, n: usize, i: usize, j: usize| -> (usize, Option<usize>) {
            // returns (index of Re part, index of Im part) for i <= j
            if i == j {
                (off + i, None)
            } else {
                let mut k = off + n;
                // pairs are laid out row by row
                let before = (0..i).map(|r| n - 1 - r).sum::<usize>() + (j - i - 1);
                k += 2 * before;
                (k, Some(k + 1))
            }
        };
        let mut entries = Vec::new();
        let mut diag_pos = 0;
        for (b, (&m, &n)) in multiplicity.iter().zip(source.block_dims()).enumerate() {
            let s_off = source.coord_offset(b);
            for _copy in 0..m {
                for i in 0..n {
                    for j in i..n {
                        let (s_re, s_im) = coord(s_off, n, i, j);
                        let (t_re, t_im) = coord(0, nt, diag_pos + i, diag_pos + j);
                        entries.push((t_re as u32, s_re as u32, 1.0));
                        if let (Some(si), Some(ti)) = (s_im, t_im) {
                            entries.push((ti as u32, si as u32, 1.0));
                        }
                    }
                }
                diag_pos += n;
            }
        }
        StarMorphism::from_linmap(
            source.clone(),
            target.clone(),
            LinMap::from_triplets(target.sa_dim(), source.sa_dim(), entries),
        )
    }

    /// The automorphism `a ↦ u a u*` of a single-block algebra for a diagonal
    /// unitary with the given phases.
    pub fn conjugation_by_diagonal(
        algebra: &Arc<CStarAlgebra>,
        block: usize,
        phases: &[Complex64],
    ) -> Result<StarMorphism> {
        let n = algebra.block_dims()[block];
        if phases.len() != n {
            return Err(Error::Structure("phase count mismatch".into()));
        }
        let mut entries = Vec::new();
        // identity on all other blocks
        for (b, &nb) in algebra.block_dims().iter().enumerate() {
            if b != block {
                let off = algebra.coord_offset(b);
                for k in 0..nb * nb {
                    entries.push(((off + k) as u32, (off + k) as u32, 1.0));
                }
            }
        }
        let off = algebra.coord_offset(block);
        // (u a u*)_ij = u_i conj(u_j) a_ij: a rotation of the (Re, Im) pair
        for i in 0..n {
            entries.push(((off + i) as u32, (off + i) as u32, 1.0));
        }
        let mut k = off + n;
        for i in 0..n {
            for j in i + 1..n {
                let w = phases[i] * phases[j].conj();
                entries.push((k as u32, k as u32, w.re));
                entries.push((k as u32, (k + 1) as u32, -w.im));
                entries.push(((k + 1) as u32, k as u32, w.im));
                entries.push(((k + 1) as u32, (k + 1) as u32, w.re));
                k += 2;
            }
        }
        StarMorphism::from_linmap(
            algebra.clone(),
            algebra.clone(),
            LinMap::from_triplets(algebra.sa_dim(), algebra.sa_dim(), entries),
        )
    }

    /// Permutation of the points of a commutative algebra: `f ↦ f ∘ perm`.
    pub fn permute_points(algebra: &Arc<CStarAlgebra>, perm: &[usize]) -> Result<StarMorphism> {
        StarMorphism::commutative_pullback(algebra, algebra, perm)
    }

    /// The automorphism `a ↦ u a u*` of one block for an arbitrary unitary,
    /// built column by column on the self-adjoint coordinate basis.
    pub fn conjugation_by_unitary(
        algebra: &Arc<CStarAlgebra>,
        block: usize,
        u: &CMat,
    ) -> Result<StarMorphism> {
        let n = algebra.block_dims()[block];
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Structure("unitary shape mismatch".into()));
        }
        let dim = algebra.sa_dim();
        let mut dense = crate::linalg::RMat::zeros(dim, dim);
        // identity on the other blocks
        for (b, &nb) in algebra.block_dims().iter().enumerate() {
            if b != block {
                let off = algebra.coord_offset(b);
                for k in 0..nb * nb {
                    dense[(off + k, off + k)] = 1.0;
                }
            }
        }
        let off = algebra.coord_offset(block);
        let uh = u.adjoint();
        for k in 0..n * n {
            let mut v = RVec::zeros(dim);
            v[off + k] = 1.0;
            let e = Element::from_sa_coords(algebra, &v);
            let img = u * e.block(block) * &uh;
            let mut blocks: Vec<CMat> = algebra
                .block_dims()
                .iter()
                .map(|&m| CMat::zeros(m, m))
                .collect();
            blocks[block] = img;
            let w = Element::new(algebra.clone(), blocks)?.sa_coords()?;
            for r in 0..dim {
                dense[(r, off + k)] = w[r];
            }
        }
        StarMorphism::from_linmap(algebra.clone(), algebra.clone(), LinMap::from_dense(&dense))
    }

    pub fn source(&self) -> &Arc<CStarAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CStarAlgebra> {
        &self.target
    }

    pub fn map(&self) -> &LinMap {
        &self.map
    }

    /// `other ∘ self` fails unless the codomains chain.
    pub fn then(&self, other: &StarMorphism) -> Result<StarMorphism> {
        if !same_algebra(&self.target, &other.source) {
            return Err(Error::Structure("morphism composition mismatch".into()));
        }
        StarMorphism::from_linmap(
            self.source.clone(),
            other.target.clone(),
            other.map.compose(&self.map),
        )
    }

    /// Applies the morphism, extending complex-linearly off the self-adjoint part.
    pub fn apply(&self, a: &Element) -> Result<Element> {
        if !same_algebra(a.algebra(), &self.source) {
            return Err(Error::Structure(
                "element not in the morphism source".into(),
            ));
        }
        if a.is_self_adjoint() {
            let v = a.sa_coords()?;
            return Ok(Element::from_sa_coords(&self.target, &self.map.apply(&v)));
        }
        let (h, k) = a.hermitian_parts();
        let hh = Element::from_sa_coords(&self.target, &self.map.apply(&h.sa_coords()?));
        let kk = Element::from_sa_coords(&self.target, &self.map.apply(&k.sa_coords()?));
        hh.add(&kk.scale_c(Complex64::new(0.0, 1.0)))
    }

    /// Pulls a state on the target back to a state on the source, i.e. the
    /// dual map `phi ↦ phi ∘ self`.
    pub fn pull_state(&self, phi: &State) -> Result<State> {
        if !same_algebra(phi.algebra(), &self.target) {
            return Err(Error::Structure("state not on the morphism target".into()));
        }
        let f = self.map.tr_apply(&phi.functional_coords());
        State::from_functional(&self.source, &f)
    }

    /// Validates unitality, *-preservation, multiplicativity on basis pairs,
    /// and the surjectivity rank. Never fails; failures live in the report.
    pub fn validate(&self) -> MorphismReport {
        let unit_src = self.source.unit();
        let unit_img = self.apply(&unit_src).expect("unit in source");
        let unital_violation =
            operator_norm(&unit_img.sub(&self.target.unit()).expect("same algebra"));

        // *-preservation is automatic for the stored representation:
        // the map acts on self-adjoint coordinates and is extended
        // complex-linearly, so π(x*) = π(x)* identically.
        let adjoint_violation = 0.0;

        let dim = self.source.sa_dim();
        let mut mult_violation: f64 = 0.0;
        let mut check_pair = |x: &Element, y: &Element| {
            let lhs = self
                .apply(&x.mul(y).expect("same algebra"))
                .expect("source");
            let rhs = self
                .apply(x)
                .expect("source")
                .mul(&self.apply(y).expect("source"))
                .expect("target");
            let v = operator_norm(&lhs.sub(&rhs).expect("target"));
            if v > mult_violation {
                mult_violation = v;
            }
        };
        let coverage = if dim <= 32 {
            let basis: Vec<Element> = (0..dim)
                .map(|i| {
                    let mut v = RVec::zeros(dim);
                    v[i] = 1.0;
                    Element::from_sa_coords(&self.source, &v)
                })
                .collect();
            for x in &basis {
                for y in &basis {
                    check_pair(x, y);
                }
            }
            PairCoverage::Exhaustive
        } else {
            let mut rng = crate::rng::seeded(0x6d6f7270);
            let n = 256;
            for _ in 0..n {
                let x = random_self_adjoint(&self.source, &mut rng);
                let y = random_self_adjoint(&self.source, &mut rng);
                check_pair(&x, &y);
            }
            PairCoverage::Sampled(n)
        };

        let rank = linalg::rank(&self.map.to_dense(), CERT_TOL);
        let structural = unital_violation <= CERT_TOL && mult_violation <= CERT_TOL;
        MorphismReport {
            unital_violation,
            adjoint_violation,
            mult_violation,
            rank,
            coverage,
            epimorphism: structural && rank == self.target.sa_dim(),
            monomorphism: structural && rank == self.source.sa_dim(),
        }
    }
}

/// Per-block Gaussian Hermitian element: diagonal entries N(0,1), off-diagonal
/// real and imaginary parts N(0, 1/2).
pub fn random_self_adjoint<R: Rng>(algebra: &Arc<CStarAlgebra>, rng: &mut R) -> Element {
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&n| {
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                let d: f64 = StandardNormal.sample(rng);
                m[(i, i)] = Complex64::new(d, 0.0);
                for j in i + 1..n {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    let z = Complex64::new(re * inv_sqrt2, im * inv_sqrt2);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                }
            }
            m
        })
        .collect();
    Element::new(algebra.clone(), blocks).expect("shapes match by construction")
}

/// Random (not necessarily self-adjoint) element with independent Gaussian entries.
pub fn random_element<R: Rng>(algebra: &Arc<CStarAlgebra>, rng: &mut R) -> Element {
    let blocks = algebra
        .block_dims()
        .iter()
        .map(|&n| {
            let mut m = CMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    m[(i, j)] = Complex64::new(re, im);
                }
            }
            m
        })
        .collect();
    Element::new(algebra.clone(), blocks).expect("shapes match by construction")
}

/// Vector of the functional coordinates of a linear functional given by block
/// matrices sigma (not necessarily normalized); used by tests and solvers.
pub fn functional_from_sigmas(algebra: &Arc<CStarAlgebra>, sigmas: &[CMat]) -> RVec {
    let mut v = RVec::zeros(algebra.sa_dim());
    for (b, s) in sigmas.iter().enumerate() {
        let n = s.nrows();
        let off = algebra.coord_offset(b);
        let mut k = off;
        for i in 0..n {
            v[k] = s[(i, i)].re;
            k += 1;
        }
        for i in 0..n {
            for j in i + 1..n {
                v[k] = 2.0 * s[(i, j)].re;
                v[k + 1] = 2.0 * s[(i, j)].im;
                k += 2;
            }
        }
    }
    v
}

pub fn dvector_c(xs: &[(f64, f64)]) -> DVector<Complex64> {
    DVector::from_iterator(xs.len(), xs.iter().map(|&(re, im)| Complex64::new(re, im)))
}
