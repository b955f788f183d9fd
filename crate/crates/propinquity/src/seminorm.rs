//! Lip-norm candidates as finite maxima of operator-norm atoms.
//!
//! Every atom evaluates as the operator norm of an explicitly stored
//! real-linear image of the element, so the resulting seminorm is convex,
//! lower semicontinuous by construction, homogeneous and subadditive, and its
//! kernel is exactly checkable by Gaussian elimination.

use std::sync::{Arc, OnceLock};

use crate::algebra::{operator_norm, random_self_adjoint, CStarAlgebra, Element, StarMorphism};
use crate::error::{Error, Result};
use crate::interval::{Interval, Status};
use crate::linalg::{self, LinMap, RMat, RVec};

/// Pivot tolerance for kernel certificates.
pub const KERNEL_TOL: f64 = 1e-9;

/// What the atom encodes; evaluation always goes through the stored map.
#[derive(Debug, Clone)]
pub enum AtomKind {
    /// `(f(x) - f(y)) / m(x, y)` on a function algebra.
    PairDifference { x: usize, y: usize, weight: f64 },
    /// `(a - α^g(a)) / ℓ(g)` for a validated *-automorphism.
    ActionDifference { element: String, weight: f64 },
    /// `i[D, a]` for a fixed diagonal self-adjoint operator.
    Commutator { operator: String },
    /// `(ρ_A(a) - ρ_B(b)) / D` for two embeddings into a common algebra.
    MorphismDifference { scale: f64 },
    /// `(d_1 - d_2) / γ` on a doubled algebra.
    DoublingDifference { scale: f64 },
    /// An inner atom pulled back through a *-morphism.
    ComponentPullback { via: String },
}

/// One operator-norm atom `a ↦ ‖T(a)‖`.
#[derive(Debug, Clone)]
pub struct SeminormAtom {
    kind: AtomKind,
    map: LinMap,
    target: Arc<CStarAlgebra>,
}

impl SeminormAtom {
    pub fn new(kind: AtomKind, map: LinMap, target: Arc<CStarAlgebra>) -> Result<SeminormAtom> {
        if map.rows() != target.sa_dim() {
            return Err(Error::Structure(
                "atom map rows do not match its target algebra".into(),
            ));
        }
        Ok(SeminormAtom { kind, map, target })
    }

    /// `(f(x) - f(y)) / m_xy` on a commutative algebra.
    pub fn pair_difference(
        algebra: &Arc<CStarAlgebra>,
        x: usize,
        y: usize,
        m_xy: f64,
    ) -> Result<SeminormAtom> {
        if !algebra.is_commutative() {
            return Err(Error::Structure(
                "pair atoms need a commutative algebra".into(),
            ));
        }
        if x == y || x >= algebra.n_blocks() || y >= algebra.n_blocks() {
            return Err(Error::Structure("pair atom indices out of range".into()));
        }
        if !(m_xy > 0.0) || !m_xy.is_finite() {
            return Err(Error::Domain(format!(
                "pair weight needs 0 < m, got {m_xy}"
            )));
        }
        let target = CStarAlgebra::new(vec![1], "scalar")?;
        let w = 1.0 / m_xy;
        let map = LinMap::from_triplets(
            1,
            algebra.sa_dim(),
            vec![(0, x as u32, w), (0, y as u32, -w)],
        );
        SeminormAtom::new(AtomKind::PairDifference { x, y, weight: w }, map, target)
    }

    /// `(a - α(a)) / ℓ` for an automorphism given as a stored morphism.
    pub fn action_difference(
        algebra: &Arc<CStarAlgebra>,
        auto: &StarMorphism,
        element: impl Into<String>,
        length: f64,
    ) -> Result<SeminormAtom> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Domain(format!(
                "length value must be positive, got {length}"
            )));
        }
        let id = LinMap::identity(algebra.sa_dim());
        let map = id.sub(auto.map()).scaled(1.0 / length);
        SeminormAtom::new(
            AtomKind::ActionDifference {
                element: element.into(),
                weight: 1.0 / length,
            },
            map,
            algebra.clone(),
        )
    }

    /// `i[D, a]` for a per-block diagonal operator `D`.
    pub fn commutator(
        algebra: &Arc<CStarAlgebra>,
        diagonals: &[Vec<f64>],
        operator: impl Into<String>,
    ) -> Result<SeminormAtom> {
        if diagonals.len() != algebra.n_blocks()
            || diagonals
                .iter()
                .zip(algebra.block_dims())
                .any(|(d, &n)| d.len() != n)
        {
            return Err(Error::Structure("diagonal operator shape mismatch".into()));
        }
        let mut entries = Vec::new();
        for (b, &n) in algebra.block_dims().iter().enumerate() {
            let off = algebra.coord_offset(b);
            let mut k = off + n;
            for i in 0..n {
                for j in i + 1..n {
                    // i[D,a]_ij = i (d_i - d_j) a_ij rotates the (Re, Im) pair
                    let w = diagonals[b][i] - diagonals[b][j];
                    entries.push((k as u32, (k + 1) as u32, -w));
                    entries.push(((k + 1) as u32, k as u32, w));
                    k += 2;
                }
            }
        }
        let map = LinMap::from_triplets(algebra.sa_dim(), algebra.sa_dim(), entries);
        SeminormAtom::new(
            AtomKind::Commutator {
                operator: operator.into(),
            },
            map,
            algebra.clone(),
        )
    }

    /// `(ρ_A(π_A ·) - ρ_B(π_B ·)) / scale` given precomposed maps into a common
    /// target; the caller supplies the two full maps from the carrier.
    pub fn morphism_difference(
        carrier: &Arc<CStarAlgebra>,
        via_a: &LinMap,
        via_b: &LinMap,
        common: &Arc<CStarAlgebra>,
        scale: f64,
    ) -> Result<SeminormAtom> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Domain(format!(
                "scale must be positive, got {scale}"
            )));
        }
        if via_a.cols() != carrier.sa_dim() || via_b.cols() != carrier.sa_dim() {
            return Err(Error::Structure(
                "morphism difference source mismatch".into(),
            ));
        }
        let map = via_a.sub(via_b).scaled(1.0 / scale);
        SeminormAtom::new(
            AtomKind::MorphismDifference { scale: 1.0 / scale },
            map,
            common.clone(),
        )
    }

    /// `(d_1 - d_2) / γ` on a doubled algebra whose first `half` blocks mirror
    /// the second half.
    pub fn doubling_difference(
        doubled: &Arc<CStarAlgebra>,
        half: &Arc<CStarAlgebra>,
        gamma: f64,
    ) -> Result<SeminormAtom> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        let hd = half.sa_dim();
        if doubled.sa_dim() != 2 * hd {
            return Err(Error::Structure("doubled algebra is not two copies".into()));
        }
        let mut entries = Vec::with_capacity(2 * hd);
        for i in 0..hd {
            entries.push((i as u32, i as u32, 1.0 / gamma));
            entries.push((i as u32, (i + hd) as u32, -1.0 / gamma));
        }
        let map = LinMap::from_triplets(hd, doubled.sa_dim(), entries);
        SeminormAtom::new(
            AtomKind::DoublingDifference { scale: 1.0 / gamma },
            map,
            half.clone(),
        )
    }

    /// Pulls this atom back through `pi`: the new atom evaluates
    /// `a ↦ ‖T(pi(a))‖` on the source of `pi`.
    pub fn pullback(&self, pi: &StarMorphism, via: impl Into<String>) -> Result<SeminormAtom> {
        if pi.target().sa_dim() != self.map.cols() {
            return Err(Error::Structure("pullback morphism target mismatch".into()));
        }
        SeminormAtom::new(
            AtomKind::ComponentPullback { via: via.into() },
            self.map.compose(pi.map()),
            self.target.clone(),
        )
    }

    pub fn kind(&self) -> &AtomKind {
        &self.kind
    }

    pub fn map(&self) -> &LinMap {
        &self.map
    }

    pub fn target(&self) -> &Arc<CStarAlgebra> {
        &self.target
    }

    /// `‖T(a)‖` from the coordinates of a self-adjoint element.
    pub fn eval_coords(&self, v: &RVec) -> f64 {
        let img = Element::from_sa_coords(&self.target, &self.map.apply(v));
        operator_norm(&img)
    }

    pub fn image_element(&self, v: &RVec) -> Element {
        Element::from_sa_coords(&self.target, &self.map.apply(v))
    }
}

/// A Lip-norm candidate: the maximum of finitely many atoms.
#[derive(Debug, Clone)]
pub struct SeminormSpec {
    algebra: Arc<CStarAlgebra>,
    atoms: Vec<SeminormAtom>,
}

impl SeminormSpec {
    pub fn new(algebra: Arc<CStarAlgebra>, atoms: Vec<SeminormAtom>) -> Result<SeminormSpec> {
        if atoms.is_empty() {
            return Err(Error::Structure(
                "a seminorm needs at least one atom".into(),
            ));
        }
        for a in &atoms {
            if a.map.cols() != algebra.sa_dim() {
                return Err(Error::Structure(
                    "atom source does not match the algebra".into(),
                ));
            }
        }
        Ok(SeminormSpec { algebra, atoms })
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        &self.algebra
    }

    pub fn atoms(&self) -> &[SeminormAtom] {
        &self.atoms
    }

    /// `max_i ‖T_i(a)‖` on self-adjoint input; rejects other elements.
    pub fn eval(&self, a: &Element) -> Result<f64> {
        if !a.is_self_adjoint() {
            return Err(Error::Domain(
                "seminorms are evaluated on self-adjoint elements".into(),
            ));
        }
        let v = a.sa_coords()?;
        Ok(self.eval_coords(&v))
    }

    pub fn eval_coords(&self, v: &RVec) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.eval_coords(v))
            .fold(0.0, f64::max)
    }

    /// The atom attaining the maximum, with its value.
    pub fn active_atom(&self, v: &RVec) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, a) in self.atoms.iter().enumerate() {
            let val = a.eval_coords(v);
            if val > best.1 {
                best = (i, val);
            }
        }
        best
    }

    /// `max_i ‖T_i(1)‖`; zero (bit-exactly for maps built to kill the unit).
    pub fn unit_violation(&self) -> f64 {
        let u = self.algebra.unit_coords();
        self.eval_coords(&u)
    }

    /// True when the MK optimization is a linear program: the algebra and all
    /// atom targets are function algebras, so every norm is a max of absolute
    /// linear functionals.
    pub fn lp_compatible(&self) -> bool {
        self.algebra.is_commutative() && self.atoms.iter().all(|a| a.target.is_commutative())
    }

    /// Stacks every atom row into one dense matrix (rows × sa_dim); only
    /// meaningful for LP-compatible seminorms where rows are coordinates.
    pub fn stacked_rows(&self) -> RMat {
        let total: usize = self.atoms.iter().map(|a| a.map.rows()).sum();
        let mut m = RMat::zeros(total, self.algebra.sa_dim());
        let mut off = 0;
        for a in &self.atoms {
            for &(r, c, v) in a.map.entries() {
                m[(off + r as usize, c as usize)] = v;
            }
            off += a.map.rows();
        }
        m
    }
}

/// Result of the kernel (Lipschitz-pair) check.
#[derive(Debug, Clone)]
pub struct KernelCertificate {
    pub kernel_dim: usize,
    pub spanned_by_unit: bool,
    pub unit_violation: f64,
    pub passed: bool,
}

/// Nullspace of all atoms restricted to the column span of `basis`
/// (the identity for a plain check). Returns a basis of the kernel in the
/// ambient coordinates.
fn kernel_basis(spec: &SeminormSpec, basis: RMat) -> RMat {
    let mut b = basis;
    for atom in &spec.atoms {
        if b.ncols() == 0 {
            break;
        }
        let composed = atom.map.to_dense() * &b;
        let ns = linalg::nullspace(&composed, KERNEL_TOL);
        if ns.ncols() == b.ncols() {
            continue; // atom vanishes on the whole current kernel
        }
        b = &b * ns;
        // re-normalize columns to keep the pivot tolerance meaningful
        for k in 0..b.ncols() {
            let n = b.column(k).norm();
            if n > 0.0 {
                for i in 0..b.nrows() {
                    b[(i, k)] /= n;
                }
            }
        }
    }
    b
}

/// Kernel check: stacks the atom maps and certifies that the joint nullspace
/// is exactly the span of the unit.
pub fn check_lipschitz_pair(spec: &SeminormSpec) -> KernelCertificate {
    let dim = spec.algebra.sa_dim();
    check_lipschitz_pair_restricted(spec, RMat::identity(dim, dim), &spec.algebra.unit_coords())
}

/// Same check inside a subspace (used by chain spaces): `basis` columns span
/// the subspace, `unit` is the ambient unit vector (must lie in the span).
pub fn check_lipschitz_pair_restricted(
    spec: &SeminormSpec,
    basis: RMat,
    unit: &RVec,
) -> KernelCertificate {
    let unit_violation = spec.eval_coords(unit);
    let kernel = kernel_basis(spec, basis);
    let kernel_dim = kernel.ncols();
    let spanned_by_unit = if kernel_dim == 1 {
        let k = kernel.column(0);
        let un = unit.norm();
        if un == 0.0 {
            false
        } else {
            let proj = k.dot(&(unit / un));
            (k - (unit / un) * proj).norm() <= 1e-7
        }
    } else {
        false
    };
    KernelCertificate {
        kernel_dim,
        spanned_by_unit,
        unit_violation,
        passed: kernel_dim == 1 && spanned_by_unit && unit_violation <= 1e-9,
    }
}

/// Result of the randomized Leibniz check.
#[derive(Debug, Clone)]
pub struct LeibnizReport {
    pub trials: usize,
    pub seed: u64,
    pub max_violation: f64,
}

/// Source of the diameter value attached to a quantum metric space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterEstimate {
    pub interval: Interval,
    pub status: Status,
}

/// An algebra with a certified Lip-norm.
#[derive(Debug)]
pub struct QuantumMetricSpace {
    seminorm: SeminormSpec,
    kernel: KernelCertificate,
    leibniz: LeibnizReport,
    diameter: OnceLock<DiameterEstimate>,
}

impl QuantumMetricSpace {
    /// Runs the kernel certificate (must pass) and a build-time Leibniz probe.
    pub fn try_new(seminorm: SeminormSpec) -> Result<Arc<QuantumMetricSpace>> {
        Self::try_new_with_diameter(seminorm, None)
    }

    /// Variant for constructions that come with a proven diameter bound
    /// (doubling, direct sums); avoids recomputing what a lemma already gives.
    pub fn try_new_with_diameter(
        seminorm: SeminormSpec,
        diameter: Option<DiameterEstimate>,
    ) -> Result<Arc<QuantumMetricSpace>> {
        let kernel = check_lipschitz_pair(&seminorm);
        if !kernel.passed {
            return Err(Error::Certificate(format!(
                "kernel check failed on {}: dim {} (unit violation {:.3e})",
                seminorm.algebra().label(),
                kernel.kernel_dim,
                kernel.unit_violation
            )));
        }
        let dim = seminorm.algebra().sa_dim();
        let trials = (4096 / dim.max(1)).clamp(4, 64);
        let qms = QuantumMetricSpace {
            seminorm,
            kernel,
            leibniz: LeibnizReport {
                trials: 0,
                seed: 0,
                max_violation: 0.0,
            },
            diameter: OnceLock::new(),
        };
        let leibniz = check_leibniz(&qms, trials, 42);
        if leibniz.max_violation > 1e-9 {
            return Err(Error::Certificate(format!(
                "Leibniz check failed on {}: violation {:.3e}",
                qms.seminorm.algebra().label(),
                leibniz.max_violation
            )));
        }
        let qms = QuantumMetricSpace { leibniz, ..qms };
        if let Some(d) = diameter {
            let _ = qms.diameter.set(d);
        }
        Ok(Arc::new(qms))
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        self.seminorm.algebra()
    }

    pub fn seminorm(&self) -> &SeminormSpec {
        &self.seminorm
    }

    pub fn kernel_certificate(&self) -> &KernelCertificate {
        &self.kernel
    }

    pub fn leibniz_report(&self) -> &LeibnizReport {
        &self.leibniz
    }

    pub fn eval(&self, a: &Element) -> Result<f64> {
        self.seminorm.eval(a)
    }

    pub fn lp_compatible(&self) -> bool {
        self.seminorm.lp_compatible()
    }

    /// Diameter of the state space under the MK metric. Exact for function
    /// algebras (maximum over Dirac pairs, each an exact LP); an averaging
    /// bound for pure group-action seminorms; a flagged heuristic otherwise.
    pub fn diameter(&self) -> DiameterEstimate {
        *self.diameter.get_or_init(|| crate::mk::diameter_auto(self))
    }

    /// Upper bound on `sup{‖a - φ0(a)1‖ : L(a) ≤ 1}`; since every state value
    /// of such an `a` stays within the MK diameter of `φ0(a)`, the diameter
    /// estimate's upper end serves.
    pub fn pinned_radius(&self, _phi0: &crate::algebra::State) -> f64 {
        self.diameter().interval.hi
    }
}

/// Randomized Leibniz check: reports the worst of
/// `L(a∘b) - ‖a‖L(b) - ‖b‖L(a)` and the Lie analogue over seeded trials.
pub fn check_leibniz(qms: &QuantumMetricSpace, trials: usize, seed: u64) -> LeibnizReport {
    let alg = qms.algebra();
    let mut rng = crate::rng::seeded(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = random_self_adjoint(alg, &mut rng);
        let b = random_self_adjoint(alg, &mut rng);
        let la = qms.seminorm.eval(&a).expect("self-adjoint");
        let lb = qms.seminorm.eval(&b).expect("self-adjoint");
        let na = operator_norm(&a);
        let nb = operator_norm(&b);
        let budget = na * lb + nb * la;
        let jordan = crate::algebra::jordan_product(&a, &b).expect("same algebra");
        let lie = crate::algebra::lie_product(&a, &b).expect("same algebra");
        let vj = qms.seminorm.eval(&jordan).expect("self-adjoint") - budget;
        let vl = qms.seminorm.eval(&lie).expect("self-adjoint") - budget;
        worst = worst.max(vj).max(vl);
    }
    LeibnizReport {
        trials,
        seed,
        max_violation: worst.max(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::State;

    fn two_point_space(m: f64) -> Arc<QuantumMetricSpace> {
        let alg = CStarAlgebra::new(vec![1, 1], "X2").unwrap();
        let atom = SeminormAtom::pair_difference(&alg, 0, 1, m).unwrap();
        QuantumMetricSpace::try_new(SeminormSpec::new(alg, vec![atom]).unwrap()).unwrap()
    }

    #[test]
    fn pair_difference_formula() {
        let qms = two_point_space(2.0);
        let alg = qms.algebra().clone();
        let mut v = RVec::zeros(2);
        v[1] = 2.0;
        let f = Element::from_sa_coords(&alg, &v);
        // |0 - 2| / 2 = 1
        assert!((qms.eval(&f).unwrap() - 1.0).abs() < 1e-12);
        // constants are killed exactly
        assert_eq!(qms.seminorm().unit_violation(), 0.0);
    }

    #[test]
    fn constant_function_has_zero_seminorm() {
        let alg = CStarAlgebra::new(vec![1, 1, 1], "X3").unwrap();
        let atoms = vec![
            SeminormAtom::pair_difference(&alg, 0, 1, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 1, 2, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 0, 2, 2.0).unwrap(),
        ];
        let qms =
            QuantumMetricSpace::try_new(SeminormSpec::new(alg.clone(), atoms).unwrap()).unwrap();
        let c = alg.unit().scale(7.5);
        assert!(qms.eval(&c).unwrap() < 1e-12);
    }

    #[test]
    fn flip_action_seminorm() {
        // C(Z_2) with the flip, ℓ = π, f = (0, π): ‖f - f∘flip‖/π = 1
        let alg = CStarAlgebra::new(vec![1, 1], "CZ2").unwrap();
        let flip = StarMorphism::permute_points(&alg, &[1, 0]).unwrap();
        let atom =
            SeminormAtom::action_difference(&alg, &flip, "flip", std::f64::consts::PI).unwrap();
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg.clone(), vec![atom]).unwrap())
            .unwrap();
        let mut v = RVec::zeros(2);
        v[1] = std::f64::consts::PI;
        let f = Element::from_sa_coords(&alg, &v);
        assert!((qms.eval(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_self_adjoint_input() {
        let qms = two_point_space(1.0);
        let alg = qms.algebra().clone();
        let mut blocks = alg.zero().blocks().to_vec();
        blocks[0][(0, 0)] = num_complex::Complex64::new(0.0, 1.0);
        let x = Element::new(alg, blocks).unwrap();
        assert!(matches!(qms.eval(&x), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_fails_when_a_block_is_uncovered() {
        // atoms covering only the first two points of a 3-point algebra
        let alg = CStarAlgebra::new(vec![1, 1, 1], "X3").unwrap();
        let atoms = vec![SeminormAtom::pair_difference(&alg, 0, 1, 1.0).unwrap()];
        let spec = SeminormSpec::new(alg, atoms).unwrap();
        let cert = check_lipschitz_pair(&spec);
        assert!(!cert.passed);
        assert!(cert.kernel_dim >= 2);
        assert!(QuantumMetricSpace::try_new(spec).is_err());
    }

    #[test]
    fn homogeneity_and_subadditivity() {
        let qms = two_point_space(1.5);
        let alg = qms.algebra().clone();
        let mut rng = crate::rng::seeded(5);
        for _ in 0..100 {
            let a = random_self_adjoint(&alg, &mut rng);
            let b = random_self_adjoint(&alg, &mut rng);
            let la = qms.eval(&a).unwrap();
            let lb = qms.eval(&b).unwrap();
            let t = -2.75;
            assert!((qms.eval(&a.scale(t)).unwrap() - t.abs() * la).abs() < 1e-10);
            assert!(qms.eval(&a.add(&b).unwrap()).unwrap() <= la + lb + 1e-9);
        }
    }

    #[test]
    fn rescaled_pair_atoms_stay_leibniz() {
        // scaling a pair-difference atom cannot break Leibniz: each atom is
        // Leibniz on its own and the property is scale-invariant
        let alg = CStarAlgebra::new(vec![1, 1, 1], "X3").unwrap();
        let atoms = vec![
            SeminormAtom::pair_difference(&alg, 0, 1, 1.0 / 10.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 1, 2, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 0, 2, 2.0).unwrap(),
        ];
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms).unwrap()).unwrap();
        let report = check_leibniz(&qms, 300, 7);
        assert_eq!(report.max_violation, 0.0);
    }

    #[test]
    fn corrupted_atom_map_breaks_leibniz() {
        // a genuinely corrupted atom payload: a second-difference map kills
        // the unit and keeps the kernel trivial, but f = (1, 0, -1) squares to
        // (1, 0, 1) with T(f) = 0 and T(f²) = 2, violating the inequality
        let alg = CStarAlgebra::new(vec![1, 1, 1], "X3c").unwrap();
        let scalar = CStarAlgebra::new(vec![1], "scalar").unwrap();
        let second_diff = SeminormAtom::new(
            AtomKind::PairDifference {
                x: 0,
                y: 2,
                weight: 1.0,
            },
            LinMap::from_triplets(1, 3, vec![(0, 0, 3.0), (0, 1, -6.0), (0, 2, 3.0)]),
            scalar,
        )
        .unwrap();
        let atoms = vec![
            second_diff,
            SeminormAtom::pair_difference(&alg, 0, 1, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 1, 2, 1.0).unwrap(),
        ];
        let spec = SeminormSpec::new(alg.clone(), atoms).unwrap();
        let kernel = check_lipschitz_pair(&spec);
        assert!(kernel.passed);
        let qms = QuantumMetricSpace {
            seminorm: spec,
            kernel,
            leibniz: LeibnizReport {
                trials: 0,
                seed: 0,
                max_violation: 0.0,
            },
            diameter: OnceLock::new(),
        };
        // deterministic counterexample first
        let f = Element::from_sa_coords(&alg, &RVec::from_vec(vec![1.0, 0.0, -1.0]));
        let sq = crate::algebra::jordan_product(&f, &f).unwrap();
        let defect = qms.seminorm.eval(&sq).unwrap()
            - 2.0 * crate::algebra::operator_norm(&f) * qms.seminorm.eval(&f).unwrap();
        assert!(defect > 1.0, "hand counterexample defect {defect}");
        let report = check_leibniz(&qms, 500, 7);
        assert!(report.max_violation > 0.0, "corrupted map must be detected");
    }

    #[test]
    fn pinned_radius_matches_the_diameter() {
        // 2-point space with m = 2: the state space has MK diameter 2
        let qms = two_point_space(2.0);
        let phi = State::dirac(qms.algebra(), 0, 0).unwrap();
        assert!((qms.pinned_radius(&phi) - 2.0).abs() < 1e-9);

        // 3-point line 0-1-2: diameter 2 again
        let alg = CStarAlgebra::new(vec![1, 1, 1], "line3").unwrap();
        let atoms = vec![
            SeminormAtom::pair_difference(&alg, 0, 1, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 1, 2, 1.0).unwrap(),
            SeminormAtom::pair_difference(&alg, 0, 2, 2.0).unwrap(),
        ];
        let line = QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms).unwrap()).unwrap();
        let psi = State::dirac(line.algebra(), 1, 0).unwrap();
        assert!((line.pinned_radius(&psi) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn trivial_algebra_via_zero_commutator() {
        let alg = CStarAlgebra::new(vec![1], "pt").unwrap();
        let atom = SeminormAtom::commutator(&alg, &[vec![0.0]], "zero").unwrap();
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg.clone(), vec![atom]).unwrap())
            .unwrap();
        let d = qms.diameter();
        assert_eq!(d.interval.hi, 0.0);
        let phi = State::dirac(&alg, 0, 0).unwrap();
        assert_eq!(qms.pinned_radius(&phi), 0.0);
    }
}
