//! Constructors for concrete spaces: finite metric spaces as function
//! algebras with Lipschitz seminorms, circle subgroup discretizations, fuzzy
//! tori (twisted group algebras of finite quotients of Z^d metrized by the
//! dual action), validated finite group actions, and an exhaustive
//! Gromov-Hausdorff oracle for tiny spaces.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{random_self_adjoint, CStarAlgebra, Element, StarMorphism};
use crate::error::{Error, Result};
use crate::interval::{Interval, Status};
use crate::linalg::RMat;
use crate::seminorm::{DiameterEstimate, QuantumMetricSpace, SeminormAtom, SeminormSpec};
use crate::tunnel::{build_direct_sum_tunnel, Tunnel};

/// A finite metric space: labelled points with a symmetric distance matrix.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    m: RMat,
}

impl FiniteMetricSpace {
    pub fn new(labels: Vec<String>, m: RMat) -> Result<FiniteMetricSpace> {
        let n = labels.len();
        if n == 0 || m.nrows() != n || m.ncols() != n {
            return Err(Error::Structure("metric matrix shape mismatch".into()));
        }
        for i in 0..n {
            if m[(i, i)].abs() > 1e-12 {
                return Err(Error::Domain(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(Error::Domain(format!("asymmetry at ({i},{j})")));
                }
                if i != j && m[(i, j)] <= 0.0 {
                    return Err(Error::Domain(format!(
                        "distance must be positive off the diagonal at ({i},{j})"
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if m[(i, j)] > m[(i, k)] + m[(k, j)] + 1e-12 {
                        return Err(Error::Domain(format!(
                            "triangle inequality fails: m({i},{j}) > m({i},{k}) + m({k},{j})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteMetricSpace { labels, m })
    }

    pub fn with_unit_labels(m: RMat, prefix: &str) -> Result<FiniteMetricSpace> {
        let labels = (0..m.nrows()).map(|i| format!("{prefix}{i}")).collect();
        FiniteMetricSpace::new(labels, m)
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn diam(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.n() {
            for j in 0..self.n() {
                d = d.max(self.m[(i, j)]);
            }
        }
        d
    }
}

/// `C(X)` with the Lipschitz seminorm of the metric: one pair-difference atom
/// per unordered pair, with pairs lying on a geodesic through a third point
/// pruned (their constraint is implied, the seminorm is unchanged).
pub fn space_from_finite_metric(
    x: &FiniteMetricSpace,
    label: impl Into<String>,
) -> Result<Arc<QuantumMetricSpace>> {
    let n = x.n();
    let alg = CStarAlgebra::new(vec![1; n], label)?;
    let mut atoms = Vec::new();
    if n == 1 {
        atoms.push(SeminormAtom::commutator(&alg, &[vec![0.0]], "zero")?);
    }
    for i in 0..n {
        'pair: for j in i + 1..n {
            for k in 0..n {
                if k != i && k != j {
                    let through = x.dist(i, k) + x.dist(k, j);
                    if through <= x.dist(i, j) * (1.0 + 1e-12) {
                        continue 'pair; // geodesically dominated
                    }
                }
            }
            atoms.push(SeminormAtom::pair_difference(&alg, i, j, x.dist(i, j))?);
        }
    }
    // Dirac states recover the metric, so the MK diameter is the metric diameter
    let diameter = DiameterEstimate {
        interval: Interval::point(x.diam()),
        status: Status::Exact,
    };
    QuantumMetricSpace::try_new_with_diameter(SeminormSpec::new(alg, atoms)?, Some(diameter))
}

/// The cyclic subgroup `Z_k` of the circle with the arc-length metric
/// `m(j, j') = 2π · min(|j-j'|, k-|j-j'|)/k`.
pub fn circle_metric(k: usize) -> Result<FiniteMetricSpace> {
    if k == 0 {
        return Err(Error::Domain("circle subgroup needs k >= 1".into()));
    }
    let mut m = RMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let d = (i as i64 - j as i64).unsigned_abs() as usize;
            let d = d.min(k - d);
            m[(i, j)] = TAU * d as f64 / k as f64;
        }
    }
    FiniteMetricSpace::with_unit_labels(m, "p")
}

pub fn circle_subgroup_space(k: usize) -> Result<Arc<QuantumMetricSpace>> {
    space_from_finite_metric(&circle_metric(k)?, format!("Z{k}"))
}

/// A covering relation between two finite metric spaces.
#[derive(Debug, Clone)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn new(pairs: Vec<(usize, usize)>, nx: usize, ny: usize) -> Result<Correspondence> {
        let mut cover_x = vec![false; nx];
        let mut cover_y = vec![false; ny];
        for &(i, j) in &pairs {
            if i >= nx || j >= ny {
                return Err(Error::Structure("correspondence index out of range".into()));
            }
            cover_x[i] = true;
            cover_y[j] = true;
        }
        if !cover_x.iter().all(|&c| c) || !cover_y.iter().all(|&c| c) {
            return Err(Error::Domain("relation does not cover both factors".into()));
        }
        Ok(Correspondence { pairs })
    }

    /// `max |m_X(x,x') - m_Y(y,y')|` over related pairs.
    pub fn distortion(&self, x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> f64 {
        let mut dis: f64 = 0.0;
        for &(i, j) in &self.pairs {
            for &(i2, j2) in &self.pairs {
                dis = dis.max((x.dist(i, i2) - y.dist(j, j2)).abs());
            }
        }
        dis
    }

    /// The identity correspondence on a space with itself.
    pub fn identity(n: usize) -> Correspondence {
        Correspondence {
            pairs: (0..n).map(|i| (i, i)).collect(),
        }
    }

    /// The full relation `X × Y`.
    pub fn full(nx: usize, ny: usize) -> Correspondence {
        let mut pairs = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                pairs.push((i, j));
            }
        }
        Correspondence { pairs }
    }

    /// Relates each point of `Z_k` to its refinements in `Z_kk` (`kk` a
    /// multiple of `k`); composition of doubling correspondences.
    pub fn circle_refinement(k: usize, kk: usize) -> Result<Correspondence> {
        if k == 0 || kk % k != 0 {
            return Err(Error::Domain(format!("{kk} is not a multiple of {k}")));
        }
        let ratio = kk / k;
        Ok(Correspondence {
            pairs: (0..kk).map(|c| (c / ratio, c)).collect(),
        })
    }
}

/// Exhaustive Gromov-Hausdorff distance `½ · min over covering relations of
/// the distortion`; requires `|X|·|Y| ≤ 16` cells.
pub fn gh_distance_exact(
    x: &FiniteMetricSpace,
    y: &FiniteMetricSpace,
) -> Result<(f64, Correspondence)> {
    let cells = x.n() * y.n();
    if cells > 16 {
        return Err(Error::Resource(format!(
            "{cells} relation cells exceed the exhaustive budget of 16; \
             use the flagged greedy fallback"
        )));
    }
    let mut best: Option<(f64, Correspondence)> = None;
    for mask in 1u32..(1u32 << cells) {
        let pairs: Vec<(usize, usize)> = (0..cells)
            .filter(|c| mask & (1 << c) != 0)
            .map(|c| (c / y.n(), c % y.n()))
            .collect();
        let Ok(rel) = Correspondence::new(pairs, x.n(), y.n()) else {
            continue;
        };
        let dis = rel.distortion(x, y);
        if best.as_ref().map_or(true, |(b, _)| dis < *b) {
            best = Some((dis, rel));
        }
    }
    let (dis, rel) = best.ok_or_else(|| Error::Domain("no covering relation".into()))?;
    Ok((dis / 2.0, rel))
}

/// Greedy covering relation by eccentricity matching; an upper bound on the
/// distortion, clearly not the optimum. Used when the exhaustive oracle is
/// over budget.
pub fn gh_distance_greedy(x: &FiniteMetricSpace, y: &FiniteMetricSpace) -> (f64, Correspondence) {
    let ecc = |s: &FiniteMetricSpace, i: usize| -> f64 {
        (0..s.n()).map(|j| s.dist(i, j)).fold(0.0, f64::max)
    };
    let mut pairs = Vec::new();
    for i in 0..x.n() {
        let j = (0..y.n())
            .min_by(|&a, &b| {
                (ecc(x, i) - ecc(y, a))
                    .abs()
                    .total_cmp(&(ecc(x, i) - ecc(y, b)).abs())
            })
            .expect("nonempty");
        pairs.push((i, j));
    }
    for j in 0..y.n() {
        if !pairs.iter().any(|&(_, jj)| jj == j) {
            let i = (0..x.n())
                .min_by(|&a, &b| {
                    (ecc(y, j) - ecc(x, a))
                        .abs()
                        .total_cmp(&(ecc(y, j) - ecc(x, b)).abs())
                })
                .expect("nonempty");
            pairs.push((i, j));
        }
    }
    let rel = Correspondence { pairs };
    (rel.distortion(x, y) / 2.0, rel)
}

/// The direct-sum tunnel over `C(R)`: both function algebras embed by
/// composing with the coordinate projections of the relation, and the
/// morphism-difference atom is scaled by `1/ε`.
pub fn correspondence_to_tunnel(
    x: &FiniteMetricSpace,
    x_qms: &Arc<QuantumMetricSpace>,
    y: &FiniteMetricSpace,
    y_qms: &Arc<QuantumMetricSpace>,
    rel: &Correspondence,
    epsilon: f64,
) -> Result<Tunnel> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("tunnel scale must be positive".into()));
    }
    // re-validate coverage against the actual spaces
    let rel = Correspondence::new(rel.pairs.clone(), x.n(), y.n())?;
    let e = CStarAlgebra::new(
        vec![1; rel.pairs.len()],
        format!("R({},{})", x_qms.algebra().label(), y_qms.algebra().label()),
    )?;
    let map_x: Vec<usize> = rel.pairs.iter().map(|&(i, _)| i).collect();
    let map_y: Vec<usize> = rel.pairs.iter().map(|&(_, j)| j).collect();
    let rho_x = StarMorphism::commutative_pullback(x_qms.algebra(), &e, &map_x)?;
    let rho_y = StarMorphism::commutative_pullback(y_qms.algebra(), &e, &map_y)?;
    build_direct_sum_tunnel(x_qms, y_qms, &rho_x, &rho_y, epsilon)
}

/// Specification of a fuzzy torus: the twisted group algebra of
/// `Z_{k_1} × … × Z_{k_d}` with a skew-bicharacter given by its phase matrix,
/// metrized by the dual torus action with the arc-length max length function.
///
/// The algebra is realized exactly, never as the span of shifts inside a
/// larger matrix algebra: a symmetric twist gives the function algebra on the
/// dual group with the translation action (unitarily equivalent to the
/// twisted algebra), and a nondegenerate twist in the canonical
/// two-dimensional form gives the clock-and-shift matrix algebra with the
/// inner dual action. Twists with a proper nontrivial radical would need the
/// block decomposition of the radical and are out of scope.
#[derive(Debug, Clone)]
pub struct FuzzyTorusSpec {
    pub dims: Vec<usize>,
    pub theta: Vec<Vec<Complex64>>,
    pub label: String,
}

pub const FUZZY_TORUS_MAX_DIM: usize = 36;

impl FuzzyTorusSpec {
    pub fn new(
        dims: Vec<usize>,
        theta: Vec<Vec<Complex64>>,
        label: impl Into<String>,
    ) -> Result<FuzzyTorusSpec> {
        let d = dims.len();
        if d == 0 || dims.iter().any(|&k| k == 0) {
            return Err(Error::Domain("torus dimensions must be positive".into()));
        }
        let total: usize = dims.iter().product();
        if total > FUZZY_TORUS_MAX_DIM {
            return Err(Error::Resource(format!(
                "fuzzy torus of dimension {total} exceeds the cap {FUZZY_TORUS_MAX_DIM}"
            )));
        }
        if theta.len() != d || theta.iter().any(|r| r.len() != d) {
            return Err(Error::Structure("theta must be d x d".into()));
        }
        for i in 0..d {
            for j in 0..d {
                let t = theta[i][j];
                if (t.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::Domain(format!("theta[{i}][{j}] is not a phase")));
                }
                if (t - theta[j][i].conj()).norm() > 1e-9 {
                    return Err(Error::Domain("theta is not antisymmetric as phases".into()));
                }
                // the lift from the quotient is unambiguous only for roots of
                // unity of the right order
                let pi_ = powi(t, dims[i] as i64);
                let pj = powi(t, dims[j] as i64);
                if (pi_ - Complex64::new(1.0, 0.0)).norm() > 1e-9
                    || (pj - Complex64::new(1.0, 0.0)).norm() > 1e-9
                {
                    return Err(Error::Domain(format!(
                        "theta[{i}][{j}] is not a root of unity of order dividing the \
                         quotient orders; the bicharacter lift is ambiguous"
                    )));
                }
            }
        }
        Ok(FuzzyTorusSpec {
            dims,
            theta,
            label: label.into(),
        })
    }

    /// Trivial skew-bicharacter.
    pub fn untwisted(dims: Vec<usize>, label: impl Into<String>) -> Result<FuzzyTorusSpec> {
        let d = dims.len();
        let theta = vec![vec![Complex64::new(1.0, 0.0); d]; d];
        FuzzyTorusSpec::new(dims, theta, label)
    }

    pub fn group_order(&self) -> usize {
        self.dims.iter().product()
    }

    fn index_to_multi(&self, mut idx: usize) -> Vec<usize> {
        let mut g = vec![0usize; self.dims.len()];
        for axis in (0..self.dims.len()).rev() {
            g[axis] = idx % self.dims[axis];
            idx /= self.dims[axis];
        }
        g
    }

    fn multi_to_index(&self, g: &[usize]) -> usize {
        let mut idx = 0;
        for (axis, &k) in self.dims.iter().enumerate() {
            idx = idx * k + (g[axis] % k);
        }
        idx
    }

    /// Arc-length max length function on the dual grid:
    /// `ℓ(g) = max_i 2π · min(g_i, k_i - g_i) / k_i`.
    pub fn length(&self, g: &[usize]) -> f64 {
        g.iter()
            .zip(&self.dims)
            .map(|(&gi, &k)| TAU * (gi.min(k - gi)) as f64 / k as f64)
            .fold(0.0, f64::max)
    }

    /// Antisymmetrized pairing `β(g, h) = σ(g,h)/σ(h,g)`; its radical decides
    /// which exact realization applies.
    fn beta(&self, g: &[usize], h: &[usize]) -> Complex64 {
        let d = self.dims.len();
        let mut s = Complex64::new(1.0, 0.0);
        for i in 0..d {
            for j in i + 1..d {
                let e = (g[i] * h[j]) as i64 - (h[i] * g[j]) as i64;
                s *= powi(self.theta[i][j], e);
            }
        }
        s
    }

    fn radical_size(&self) -> usize {
        let n = self.group_order();
        let d = self.dims.len();
        let mut count = 0;
        'g: for idx in 0..n {
            let g = self.index_to_multi(idx);
            for axis in 0..d {
                let mut e = vec![0usize; d];
                e[axis] = 1 % self.dims[axis];
                if (self.beta(&g, &e) - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
                    continue 'g;
                }
            }
            count += 1;
        }
        count
    }
}

fn powi(z: Complex64, n: i64) -> Complex64 {
    let (r, th) = z.to_polar();
    Complex64::from_polar(r.powi(n as i32), th * n as f64)
}

#[derive(Debug, Clone)]
enum TorusRealization {
    /// Symmetric twist: the Gelfand picture on the dual group, dual action by
    /// translations.
    Commutative,
    /// Nondegenerate twist in canonical form: clock-and-shift on `C^k`,
    /// `VU = ωUV`, with the dual action inner via powers of the generators.
    ClockShift { k: usize, q_inv: usize },
}

/// A built fuzzy torus: the quantum metric space together with access to the
/// twisted-shift generators and the dual action in the chosen realization.
#[derive(Debug)]
pub struct FuzzyTorus {
    pub spec: FuzzyTorusSpec,
    pub qms: Arc<QuantumMetricSpace>,
    realization: TorusRealization,
}

impl FuzzyTorus {
    pub fn build(spec: FuzzyTorusSpec) -> Result<FuzzyTorus> {
        let n = spec.group_order();
        let radical = spec.radical_size();
        let realization = if radical == n {
            TorusRealization::Commutative
        } else if radical == 1 {
            // canonical nondegenerate form: square two-torus with a primitive
            // twist; anything else needs a Darboux decomposition
            if spec.dims.len() == 2 && spec.dims[0] == spec.dims[1] {
                let k = spec.dims[0];
                let q = phase_exponent(spec.theta[0][1], k).ok_or_else(|| {
                    Error::Resource(
                        "nondegenerate twist is not a k-th root of unity in canonical form".into(),
                    )
                })?;
                let q_inv = (1..k).find(|s| (s * q) % k == 1).ok_or_else(|| {
                    Error::Resource(format!(
                        "twist exponent {q} is not invertible mod {k}; \
                         the pairing is not primitive"
                    ))
                })?;
                TorusRealization::ClockShift { k, q_inv }
            } else {
                return Err(Error::Resource(
                    "nondegenerate twists are realized only in the canonical square \
                     two-dimensional clock-shift form"
                        .into(),
                ));
            }
        } else {
            return Err(Error::Resource(format!(
                "twist has a proper radical of size {radical}; realizing it needs the \
                 block decomposition of the radical, which is out of scope"
            )));
        };

        let (alg, block) = match &realization {
            TorusRealization::Commutative => {
                (CStarAlgebra::new(vec![1; n], spec.label.clone())?, 0)
            }
            TorusRealization::ClockShift { k, .. } => {
                (CStarAlgebra::new(vec![*k], spec.label.clone())?, 0)
            }
        };
        let _ = block;

        let mut atoms = Vec::new();
        if n == 1 {
            let zeros = vec![vec![0.0; alg.block_dims()[0]]; alg.n_blocks()];
            atoms.push(SeminormAtom::commutator(&alg, &zeros, "zero")?);
        }
        for m_idx in 1..n {
            let m = spec.index_to_multi(m_idx);
            let auto = dual_auto(&spec, &realization, &alg, &m)?;
            let ell = spec.length(&m);
            atoms.push(SeminormAtom::action_difference(
                &alg,
                &auto,
                format!("chi{m_idx}"),
                ell,
            )?);
        }
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms)?)?;
        Ok(FuzzyTorus {
            spec,
            qms,
            realization,
        })
    }

    pub fn algebra(&self) -> &Arc<CStarAlgebra> {
        self.qms.algebra()
    }

    /// The dual-action automorphism for the dual element `m`.
    pub fn dual_automorphism(&self, m: &[usize]) -> Result<StarMorphism> {
        dual_auto(&self.spec, &self.realization, self.qms.algebra(), m)
    }

    /// The image of the group element `W_g` in the realization.
    pub fn group_element(&self, g: &[usize]) -> Result<Element> {
        if g.len() != self.spec.dims.len() {
            return Err(Error::Structure("group element arity mismatch".into()));
        }
        match &self.realization {
            TorusRealization::Commutative => {
                // Gelfand transform: the function χ_x(g) on the dual group
                let n = self.spec.group_order();
                let alg = self.qms.algebra();
                let blocks: Vec<crate::linalg::CMat> = (0..n)
                    .map(|x_idx| {
                        let x = self.spec.index_to_multi(x_idx);
                        let arg: f64 = x
                            .iter()
                            .zip(g)
                            .zip(&self.spec.dims)
                            .map(|((&xi, &gi), &k)| TAU * (xi * gi) as f64 / k as f64)
                            .sum();
                        crate::linalg::CMat::from_element(1, 1, Complex64::from_polar(1.0, arg))
                    })
                    .collect();
                Element::new(alg.clone(), blocks)
            }
            TorusRealization::ClockShift { k, .. } => {
                // W_(g1, g2) = U^{g1} V^{g2}: (U^a V^b) e_x = ω^{bx} e_{x+a}
                let k = *k;
                let omega = self.spec.theta[0][1];
                let mut w = crate::linalg::CMat::zeros(k, k);
                for x in 0..k {
                    w[((x + g[0]) % k, x)] = powi(omega, (g[1] * x) as i64);
                }
                Element::new(self.qms.algebra().clone(), vec![w])
            }
        }
    }

    /// The twisted-shift generator along one axis.
    pub fn generator(&self, axis: usize) -> Result<Element> {
        if axis >= self.spec.dims.len() {
            return Err(Error::Structure("generator axis out of range".into()));
        }
        let mut g = vec![0usize; self.spec.dims.len()];
        g[axis] = 1 % self.spec.dims[axis];
        self.group_element(&g)
    }
}

fn phase_exponent(z: Complex64, k: usize) -> Option<usize> {
    let q = (z.arg() * k as f64 / TAU).round().rem_euclid(k as f64) as usize % k;
    let back = Complex64::from_polar(1.0, TAU * q as f64 / k as f64);
    if (z - back).norm() <= 1e-9 {
        Some(q)
    } else {
        None
    }
}

fn dual_auto(
    spec: &FuzzyTorusSpec,
    realization: &TorusRealization,
    alg: &Arc<CStarAlgebra>,
    m: &[usize],
) -> Result<StarMorphism> {
    match realization {
        TorusRealization::Commutative => {
            // (α^m f)(x) = f(x + m): translation on the dual group
            let n = spec.group_order();
            let point_map: Vec<usize> = (0..n)
                .map(|x_idx| {
                    let x = spec.index_to_multi(x_idx);
                    let shifted: Vec<usize> = x
                        .iter()
                        .zip(m)
                        .zip(&spec.dims)
                        .map(|((&xi, &mi), &k)| (xi + mi) % k)
                        .collect();
                    spec.multi_to_index(&shifted)
                })
                .collect();
            StarMorphism::commutative_pullback(alg, alg, &point_map)
        }
        TorusRealization::ClockShift { k, q_inv } => {
            // conjugation by V^s U^t scales U by ω^s and V by ω^{-t};
            // (V^s U^t) e_x = ω^{s(x+t)} e_{x+t}
            let s = (m[0] * q_inv) % k;
            let t = ((k - m[1] % k) * q_inv) % k;
            let omega = spec.theta[0][1];
            let mut w = crate::linalg::CMat::zeros(*k, *k);
            for x in 0..*k {
                w[((x + t) % k, x)] = powi(omega, (s * ((x + t) % k)) as i64);
            }
            StarMorphism::conjugation_by_unitary(alg, 0, &w)
        }
    }
}

/// The fuzzy torus as a quantum metric space: one action-difference atom per
/// nontrivial dual element, certificates run at construction.
pub fn fuzzy_torus_space(spec: &FuzzyTorusSpec) -> Result<Arc<QuantumMetricSpace>> {
    Ok(FuzzyTorus::build(spec.clone())?.qms)
}

/// A validated finite group action: per-element *-automorphisms with length
/// values, and an optional multiplication table for the homomorphism check.
/// The identity element is implicit and excluded from the list.
#[derive(Debug)]
pub struct GroupActionSpec {
    pub label: String,
    pub algebra: Arc<CStarAlgebra>,
    pub elements: Vec<(String, StarMorphism, f64)>,
    /// `table[i][j]` = index of `g_i g_j` in `elements`, `None` for identity.
    pub table: Option<Vec<Vec<Option<usize>>>>,
}

/// Builds the action seminorm `L(a) = sup_g ‖a - α^g(a)‖ / ℓ(g)` after
/// validating the automorphisms and (when a table is given) the homomorphism
/// property on sampled elements. Ergodicity is certified by the kernel check.
pub fn group_action_space(spec: &GroupActionSpec) -> Result<Arc<QuantumMetricSpace>> {
    if spec.elements.is_empty() {
        return Err(Error::Structure(
            "a group action needs nontrivial elements".into(),
        ));
    }
    for (name, auto, len) in &spec.elements {
        if !(*len > 0.0) {
            return Err(Error::Domain(format!("length of {name} must be positive")));
        }
        let rep = auto.validate();
        if !(rep.epimorphism && rep.monomorphism) {
            return Err(Error::Certificate(format!(
                "{name} is not a *-automorphism"
            )));
        }
    }
    if let Some(table) = &spec.table {
        let mut rng = crate::rng::seeded(0x616374);
        let k = spec.elements.len();
        if table.len() != k || table.iter().any(|r| r.len() != k) {
            return Err(Error::Structure(
                "multiplication table shape mismatch".into(),
            ));
        }
        let probes: Vec<Element> = (0..4)
            .map(|_| random_self_adjoint(&spec.algebra, &mut rng))
            .collect();
        for i in 0..k {
            for j in 0..k {
                for a in &probes {
                    let lhs = spec.elements[i].1.apply(&spec.elements[j].1.apply(a)?)?;
                    let rhs = match table[i][j] {
                        Some(idx) => spec.elements[idx].1.apply(a)?,
                        None => a.clone(),
                    };
                    let v = crate::algebra::operator_norm(&lhs.sub(&rhs)?);
                    if v > 1e-9 {
                        return Err(Error::Certificate(format!(
                            "action is not a homomorphism at pair ({i},{j}): violation {v:.2e}"
                        )));
                    }
                }
            }
        }
    }
    let mut atoms = Vec::new();
    for (name, auto, len) in &spec.elements {
        atoms.push(SeminormAtom::action_difference(
            &spec.algebra,
            auto,
            name.clone(),
            *len,
        )?);
    }
    let alg = CStarAlgebra::new(spec.algebra.block_dims().to_vec(), spec.label.clone())?;
    // rebuild atoms against the relabelled algebra (same coordinates)
    let atoms = atoms
        .into_iter()
        .map(|a| {
            SeminormAtom::new(
                a.kind().clone(),
                a.map().clone(),
                relabel_target(&alg, a.target()),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms)?)
}

fn relabel_target(new_alg: &Arc<CStarAlgebra>, old: &Arc<CStarAlgebra>) -> Arc<CStarAlgebra> {
    if old.block_dims() == new_alg.block_dims() {
        new_alg.clone()
    } else {
        old.clone()
    }
}
