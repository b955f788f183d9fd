//! Journeys (finite chains of tunnels), the propinquity upper-bound registry,
//! and truncated chain spaces from the completeness construction.
//!
//! Journey length is the exact interval sum of the leg lengths; the registry
//! stores the best known journey per space pair and realizes a compatible
//! tunnel class as a predicate filter. Space identity is the registry label,
//! never structural isomorphism testing.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::algebra::{operator_norm, same_algebra, CStarAlgebra, Element, StarMorphism, State};
use crate::error::{Error, Result};
use crate::interval::{Interval, Status};
use crate::linalg::{self, RMat, RVec};
use crate::mk::{self, MkConfig};
use crate::seminorm::{
    check_lipschitz_pair_restricted, KernelCertificate, QuantumMetricSpace, SeminormAtom,
    SeminormSpec,
};
use crate::tunnel::{build_direct_sum_tunnel, build_identity_tunnel, Tunnel};

/// An ordered chain of tunnels whose endpoints match by registry identity.
#[derive(Debug, Clone)]
pub struct Journey {
    legs: Vec<Arc<Tunnel>>,
}

impl Journey {
    pub fn new(legs: Vec<Arc<Tunnel>>) -> Result<Journey> {
        if legs.is_empty() {
            return Err(Error::Structure("a journey needs at least one leg".into()));
        }
        for w in legs.windows(2) {
            if !same_algebra(w[0].cod().algebra(), w[1].dom().algebra()) {
                return Err(Error::Structure(format!(
                    "legs do not chain: {} ends at {}, next starts at {}",
                    w[0].class_tag(),
                    w[0].cod().algebra().label(),
                    w[1].dom().algebra().label()
                )));
            }
        }
        Ok(Journey { legs })
    }

    pub fn single(t: Tunnel) -> Journey {
        Journey {
            legs: vec![Arc::new(t)],
        }
    }

    pub fn legs(&self) -> &[Arc<Tunnel>] {
        &self.legs
    }

    pub fn size(&self) -> usize {
        self.legs.len()
    }

    pub fn dom(&self) -> &Arc<QuantumMetricSpace> {
        self.legs.first().expect("nonempty").dom()
    }

    pub fn cod(&self) -> &Arc<QuantumMetricSpace> {
        self.legs.last().expect("nonempty").cod()
    }

    /// Sum of the leg length intervals (exact interval arithmetic).
    pub fn length(&self) -> Interval {
        self.legs
            .iter()
            .map(|t| t.metrics().length)
            .fold(Interval::zero(), Interval::add)
    }

    pub fn status(&self) -> Status {
        self.legs
            .iter()
            .map(|t| t.metrics().status)
            .fold(Status::Exact, Status::merge)
    }

    /// Concatenation; endpoints must match as registered spaces.
    pub fn compose(&self, other: &Journey) -> Result<Journey> {
        if !same_algebra(self.cod().algebra(), other.dom().algebra()) {
            return Err(Error::Structure(format!(
                "cannot compose: {} does not meet {}",
                self.cod().algebra().label(),
                other.dom().algebra().label()
            )));
        }
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().cloned());
        Ok(Journey { legs })
    }

    /// Reversed tunnels in reverse order; length is preserved bit for bit
    /// because reversed tunnels share their measurement cache.
    pub fn reversed(&self) -> Journey {
        Journey {
            legs: self
                .legs
                .iter()
                .rev()
                .map(|t| Arc::new(t.reversed()))
                .collect(),
        }
    }

    /// Removes loops: no registered space appears twice among the endpoints.
    /// Never increases the upper length.
    pub fn reduced(&self) -> Journey {
        let mut legs = self.legs.clone();
        'outer: loop {
            let labels: Vec<String> = std::iter::once(legs[0].dom().algebra().label().to_string())
                .chain(legs.iter().map(|t| t.cod().algebra().label().to_string()))
                .collect();
            for i in 0..labels.len() {
                // farthest matching endpoint gives the largest excision
                for j in (i + 1..labels.len()).rev() {
                    if labels[i] == labels[j] {
                        if i == 0 && j == labels.len() - 1 {
                            // whole journey is a loop; keep a single identity leg
                            let qms = legs[0].dom().clone();
                            let id = build_identity_tunnel(&qms)
                                .expect("identity tunnel on a certified space");
                            legs = vec![Arc::new(id)];
                            break 'outer;
                        }
                        legs.drain(i..j);
                        continue 'outer;
                    }
                }
            }
            break;
        }
        Journey { legs }
    }

    /// Chains per-leg lifts into an itinerary `a = η_0 → … → η_n` and checks
    /// the accumulated fundamental estimate on the final image.
    pub fn lift_itinerary(&self, a: &Element, r: f64) -> Result<ItineraryReport> {
        let mut stages = vec![a.clone()];
        let mut current = a.clone();
        for leg in &self.legs {
            let w = leg.lift_element(&current, r)?;
            current = w.image;
            stages.push(current.clone());
        }
        let bound = operator_norm(a) + r * self.length().hi + 1e-6;
        let final_norm = operator_norm(stages.last().expect("nonempty"));
        Ok(ItineraryReport {
            stages,
            final_norm,
            bound,
            within_bound: final_norm <= bound,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ItineraryReport {
    pub stages: Vec<Element>,
    pub final_norm: f64,
    pub bound: f64,
    pub within_bound: bool,
}

/// Which tunnels a registry admits into its journeys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TunnelClassFilter {
    All,
    /// Direct-sum carriers with coordinate projections (plus identities,
    /// which every compatible class contains).
    DirectSumOnly,
    /// A user class by tag (identities always pass).
    Custom(String),
}

impl TunnelClassFilter {
    fn admits(&self, tunnel: &Tunnel) -> bool {
        match self {
            TunnelClassFilter::All => true,
            TunnelClassFilter::DirectSumOnly => {
                tunnel.class_tag() == "identity"
                    || tunnel.shape() == crate::tunnel::TunnelShape::DirectSum
            }
            TunnelClassFilter::Custom(tag) => {
                tunnel.class_tag() == "identity" || tunnel.class_tag() == tag
            }
        }
    }

    fn admits_journey(&self, j: &Journey) -> bool {
        j.legs().iter().all(|t| self.admits(t))
    }
}

/// Best-known journey lengths between registered spaces.
#[derive(Debug)]
pub struct PropinquityRegistry {
    filter: TunnelClassFilter,
    spaces: BTreeMap<String, Arc<QuantumMetricSpace>>,
    journeys: BTreeMap<(String, String), Vec<Journey>>,
    /// Bounds imported from an exported registry document; these carry no
    /// witness journey, only the recorded interval.
    imported: BTreeMap<(String, String), (Interval, Status, usize)>,
}

impl PropinquityRegistry {
    pub fn new(filter: TunnelClassFilter) -> PropinquityRegistry {
        PropinquityRegistry {
            filter,
            spaces: BTreeMap::new(),
            journeys: BTreeMap::new(),
            imported: BTreeMap::new(),
        }
    }

    pub fn spaces(&self) -> impl Iterator<Item = (&String, &Arc<QuantumMetricSpace>)> {
        self.spaces.iter()
    }

    pub fn get_space(&self, id: &str) -> Option<&Arc<QuantumMetricSpace>> {
        self.spaces.get(id)
    }

    /// Registers under the algebra's label; labels are unique per run.
    pub fn register_space(&mut self, qms: Arc<QuantumMetricSpace>) -> Result<String> {
        let id = qms.algebra().label().to_string();
        if let Some(prev) = self.spaces.get(&id) {
            if !same_algebra(prev.algebra(), qms.algebra()) {
                return Err(Error::Lookup(format!(
                    "label {id} already registered with a different algebra"
                )));
            }
        }
        self.spaces.insert(id.clone(), qms);
        Ok(id)
    }

    pub fn register_journey(&mut self, j: Journey) -> Result<()> {
        let a = j.dom().algebra().label().to_string();
        let b = j.cod().algebra().label().to_string();
        if !self.spaces.contains_key(&a) || !self.spaces.contains_key(&b) {
            return Err(Error::Lookup(format!(
                "journey endpoints {a}, {b} must be registered"
            )));
        }
        self.journeys.entry((a, b)).or_default().push(j);
        Ok(())
    }

    fn candidates(&self, a: &str, b: &str) -> Vec<Journey> {
        let mut out = Vec::new();
        if let Some(js) = self.journeys.get(&(a.to_string(), b.to_string())) {
            out.extend(js.iter().cloned());
        }
        if let Some(js) = self.journeys.get(&(b.to_string(), a.to_string())) {
            out.extend(js.iter().map(Journey::reversed));
        }
        out
    }

    /// Minimal `length.hi` over registered journeys passing the class filter,
    /// with the witness. For an unseen pair the compatible class guarantees a
    /// journey: identity for a pair with itself, otherwise the explicit
    /// direct-sum tunnel through canonical embeddings.
    pub fn bound(&mut self, a: &str, b: &str) -> Result<(Interval, Journey)> {
        let (qa, qb) = match (self.spaces.get(a), self.spaces.get(b)) {
            (Some(x), Some(y)) => (x.clone(), y.clone()),
            _ => {
                return Err(Error::Lookup(format!(
                    "both spaces must be registered before querying ({a}, {b})"
                )))
            }
        };
        let mut candidates: Vec<Journey> = self
            .candidates(a, b)
            .into_iter()
            .filter(|j| self.filter.admits_journey(j))
            .collect();
        if candidates.is_empty() {
            let auto = if a == b {
                Journey::single(build_identity_tunnel(&qa)?)
            } else {
                Journey::single(canonical_direct_sum_tunnel(&qa, &qb, None)?)
            };
            self.register_journey(auto.clone())?;
            candidates.push(auto);
        }
        let best = candidates
            .into_iter()
            .min_by(|x, y| x.length().hi.total_cmp(&y.length().hi))
            .expect("nonempty");
        Ok((best.length(), best))
    }

    /// One round of transitive closure: for every chained pair of stored
    /// journeys, registers their composition. Length additivity is exact, so
    /// the registry triangle inequality holds after this call.
    pub fn auto_compose(&mut self) -> Result<usize> {
        let keys: Vec<(String, String)> = self.journeys.keys().cloned().collect();
        let mut added = 0;
        for (a, b) in &keys {
            for (b2, c) in &keys {
                if b == b2 && a != c {
                    let left = self.best_stored(a, b);
                    let right = self.best_stored(b2, c);
                    if let (Some(l), Some(r)) = (left, right) {
                        let composed = l.compose(&r)?;
                        let better = self
                            .candidates(a, c)
                            .into_iter()
                            .all(|j| j.length().hi > composed.length().hi);
                        if better {
                            self.register_journey(composed)?;
                            added += 1;
                        }
                    }
                }
            }
        }
        Ok(added)
    }

    fn best_stored(&self, a: &str, b: &str) -> Option<Journey> {
        self.candidates(a, b)
            .into_iter()
            .filter(|j| self.filter.admits_journey(j))
            .min_by(|x, y| x.length().hi.total_cmp(&y.length().hi))
    }

    /// Best known bound combining live journeys with imported records; the
    /// returned note says which source won.
    pub fn best_known(&mut self, a: &str, b: &str) -> Result<(Interval, Status, String)> {
        let (live, witness) = self.bound(a, b)?;
        let key = if a <= b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        match self.imported.get(&key) {
            Some(&(iv, status, legs)) if iv.hi < live.hi => {
                Ok((iv, status, format!("imported record ({legs} legs)")))
            }
            _ => Ok((
                live,
                witness.status(),
                format!("live journey ({} legs)", witness.size()),
            )),
        }
    }

    /// Serializes the bound table to a line-based text document:
    /// one `space` line per registered space, one `pair` line per pair with a
    /// registered journey.
    pub fn export_bounds(&mut self) -> Result<String> {
        use std::fmt::Write as _;
        let mut out = String::from("propinquity_registry v1\n");
        for (id, qms) in &self.spaces {
            let dims: Vec<String> = qms
                .algebra()
                .block_dims()
                .iter()
                .map(|d| d.to_string())
                .collect();
            let _ = writeln!(out, "space id={id} blocks={}", dims.join("+"));
        }
        let mut pairs: Vec<(String, String)> = self
            .journeys
            .keys()
            .map(|(a, b)| {
                if a <= b {
                    (a.clone(), b.clone())
                } else {
                    (b.clone(), a.clone())
                }
            })
            .collect();
        pairs.sort();
        pairs.dedup();
        for (a, b) in pairs {
            let (iv, witness) = self.bound(&a, &b)?;
            let _ = writeln!(
                out,
                "pair a={a} b={b} lo={:.17e} hi={:.17e} legs={} status={}",
                iv.lo,
                iv.hi,
                witness.size(),
                witness.status()
            );
        }
        Ok(out)
    }

    /// Reads a document produced by [`export_bounds`]; pair endpoints must be
    /// registered. Returns the number of records imported.
    pub fn import_bounds(&mut self, text: &str) -> Result<usize> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "propinquity_registry v1" => {}
            _ => {
                return Err(Error::Structure(
                    "not a registry document (missing header)".into(),
                ))
            }
        }
        let mut count = 0;
        for (lineno, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("space ") {
                continue;
            }
            let Some(rest) = line.strip_prefix("pair ") else {
                return Err(Error::Structure(format!(
                    "line {}: unknown record",
                    lineno + 2
                )));
            };
            let mut fields = BTreeMap::new();
            for tok in rest.split_whitespace() {
                let Some((k, v)) = tok.split_once('=') else {
                    return Err(Error::Structure(format!(
                        "line {}: bad token {tok}",
                        lineno + 2
                    )));
                };
                fields.insert(k.to_string(), v.to_string());
            }
            let get = |k: &str| {
                fields
                    .get(k)
                    .cloned()
                    .ok_or_else(|| Error::Structure(format!("line {}: missing {k}", lineno + 2)))
            };
            let (a, b) = (get("a")?, get("b")?);
            if !self.spaces.contains_key(&a) || !self.spaces.contains_key(&b) {
                return Err(Error::Lookup(format!(
                    "imported pair ({a}, {b}) references unregistered spaces"
                )));
            }
            let lo: f64 = get("lo")?
                .parse()
                .map_err(|_| Error::Structure(format!("line {}: bad lo", lineno + 2)))?;
            let hi: f64 = get("hi")?
                .parse()
                .map_err(|_| Error::Structure(format!("line {}: bad hi", lineno + 2)))?;
            let legs: usize = get("legs")?.parse().unwrap_or(1);
            let status = match get("status")?.as_str() {
                "exact" => Status::Exact,
                "certified_lower_bound" => Status::CertifiedLowerBound,
                "heuristic" => Status::Heuristic,
                _ => Status::Interval,
            };
            let key = if a <= b { (a, b) } else { (b, a) };
            let record = (Interval::nonneg(lo, hi), status, legs);
            match self.imported.get(&key) {
                Some(&(prev, _, _)) if prev.hi <= record.0.hi => {}
                _ => {
                    self.imported.insert(key, record);
                }
            }
            count += 1;
        }
        Ok(count)
    }
}

/// The explicit tunnel between arbitrary registered spaces: block-diagonal
/// unital faithful representations into one matrix algebra (the product
/// function algebra when both spaces are commutative), scaled by the larger
/// diameter estimate.
pub fn canonical_direct_sum_tunnel(
    a: &Arc<QuantumMetricSpace>,
    b: &Arc<QuantumMetricSpace>,
    d_scale: Option<f64>,
) -> Result<Tunnel> {
    let d_scale = d_scale.unwrap_or_else(|| {
        a.diameter()
            .interval
            .hi
            .max(b.diameter().interval.hi)
            .max(1e-6)
    });
    let (rho_a, rho_b) = if a.algebra().is_commutative() && b.algebra().is_commutative() {
        let na = a.algebra().n_blocks();
        let nb = b.algebra().n_blocks();
        let e = CStarAlgebra::new(
            vec![1; na * nb],
            format!("{}x{}", a.algebra().label(), b.algebra().label()),
        )?;
        let map_a: Vec<usize> = (0..na * nb).map(|r| r / nb).collect();
        let map_b: Vec<usize> = (0..na * nb).map(|r| r % nb).collect();
        (
            StarMorphism::commutative_pullback(a.algebra(), &e, &map_a)?,
            StarMorphism::commutative_pullback(b.algebra(), &e, &map_b)?,
        )
    } else {
        let sa: usize = a.algebra().block_dims().iter().sum();
        let sb: usize = b.algebra().block_dims().iter().sum();
        let e = CStarAlgebra::new(vec![sa * sb], format!("M{}", sa * sb))?;
        (
            StarMorphism::block_diagonal_embedding(
                a.algebra(),
                &e,
                &vec![sb; a.algebra().n_blocks()],
            )?,
            StarMorphism::block_diagonal_embedding(
                b.algebra(),
                &e,
                &vec![sa; b.algebra().n_blocks()],
            )?,
        )
    };
    build_direct_sum_tunnel(a, b, &rho_a, &rho_b, d_scale)
}

/// Desk-scale caps on the truncated chain construction.
const CHAIN_MAX_LEGS: usize = 8;
const CHAIN_MAX_TOTAL_DIM: usize = 64;

/// The truncated chain space: tuples over consecutive tunnel carriers whose
/// coordinates are compatible under the facing surjections, carrying the
/// max seminorm.
#[derive(Debug)]
pub struct ChainSpace {
    ambient: Arc<CStarAlgebra>,
    seminorm: SeminormSpec,
    subspace: RMat,
    kernel: KernelCertificate,
    constraints: RMat,
    pub n: usize,
    pub diameter: Interval,
    pub diameter_status: Status,
    pub bound_rhs: f64,
    pub bound_ok: bool,
}

impl ChainSpace {
    pub fn ambient(&self) -> &Arc<CStarAlgebra> {
        &self.ambient
    }

    pub fn kernel_certificate(&self) -> &KernelCertificate {
        &self.kernel
    }

    pub fn subspace_dim(&self) -> usize {
        self.subspace.ncols()
    }

    /// Max of the per-carrier seminorms; defined on any ambient element.
    pub fn eval(&self, d: &Element) -> Result<f64> {
        self.seminorm.eval(d)
    }

    /// Worst violation of the compatibility constraints by `d`.
    pub fn membership_violation(&self, d: &Element) -> Result<f64> {
        let v = d.sa_coords()?;
        let r = &self.constraints * v;
        Ok(r.iter().fold(0.0f64, |m, x| m.max(x.abs())))
    }

    /// Projects ambient coordinates onto the compatible subspace.
    pub fn project(&self, d: &Element) -> Result<Element> {
        let q = linalg::orthonormalize_columns(&self.subspace);
        let v = d.sa_coords()?;
        Ok(Element::from_sa_coords(
            &self.ambient,
            &(&q * (q.transpose() * v)),
        ))
    }
}

/// Builds `H_n` over `tunnels[0..=n]`: carriers `D_0, …, D_n` glued by
/// `ω_j(d_j) = π_{j+1}(d_{j+1})`. Runs the kernel certificate inside the
/// compatibility subspace and compares the diameter against the uniform
/// bound `diam(S(D_0)) + 4·Σ lengths`.
pub fn build_chain_space(tunnels: &[Arc<Tunnel>], n: usize, eps_slack: f64) -> Result<ChainSpace> {
    if tunnels.is_empty() || n >= tunnels.len() {
        return Err(Error::Structure(format!(
            "chain of depth {n} needs {} tunnels, got {}",
            n + 1,
            tunnels.len()
        )));
    }
    if n > CHAIN_MAX_LEGS {
        return Err(Error::Resource(format!(
            "chain depth {n} exceeds the cap {CHAIN_MAX_LEGS}"
        )));
    }
    for j in 0..n {
        if !same_algebra(tunnels[j].cod().algebra(), tunnels[j + 1].dom().algebra()) {
            return Err(Error::Structure(format!(
                "tunnels {j} and {} do not chain",
                j + 1
            )));
        }
    }
    let carriers: Vec<&Arc<QuantumMetricSpace>> =
        tunnels[..=n].iter().map(|t| t.carrier()).collect();
    let total_dim: usize = carriers
        .iter()
        .map(|c| c.algebra().block_dims().iter().sum::<usize>())
        .sum();
    if total_dim > CHAIN_MAX_TOTAL_DIM {
        return Err(Error::Resource(format!(
            "chain total block dimension {total_dim} exceeds the cap {CHAIN_MAX_TOTAL_DIM}"
        )));
    }

    let mut ambient = carriers[0].algebra().clone();
    for c in &carriers[1..] {
        ambient = CStarAlgebra::direct_sum(&ambient, c.algebra(), "chain");
    }
    let ambient = CStarAlgebra::new(
        ambient.block_dims().to_vec(),
        format!("H{}[{}]", n, carriers[0].algebra().label()),
    )?;

    // ambient projections onto each carrier
    let mut first_block = 0;
    let mut projections = Vec::with_capacity(carriers.len());
    for c in &carriers {
        projections.push(StarMorphism::projection(
            &ambient,
            c.algebra(),
            first_block,
        )?);
        first_block += c.algebra().n_blocks();
    }

    let mut atoms: Vec<SeminormAtom> = Vec::new();
    for (j, c) in carriers.iter().enumerate() {
        for atom in c.seminorm().atoms() {
            atoms.push(atom.pullback(&projections[j], format!("leg{j}"))?);
        }
    }
    let seminorm = SeminormSpec::new(ambient.clone(), atoms)?;

    // compatibility constraints ω_j ∘ Ξ_j = π_{j+1} ∘ Ξ_{j+1}
    let mut rows_total = 0;
    let mut blocks_rows = Vec::new();
    for j in 0..n {
        let left = tunnels[j].pi_cod().map().compose(projections[j].map());
        let right = tunnels[j + 1]
            .pi_dom()
            .map()
            .compose(projections[j + 1].map());
        let diff = left.sub(&right).to_dense();
        rows_total += diff.nrows();
        blocks_rows.push(diff);
    }
    let mut constraints = RMat::zeros(rows_total.max(1), ambient.sa_dim());
    let mut off = 0;
    for blk in &blocks_rows {
        constraints
            .view_mut((off, 0), (blk.nrows(), blk.ncols()))
            .copy_from(blk);
        off += blk.nrows();
    }
    let subspace = if n == 0 {
        RMat::identity(ambient.sa_dim(), ambient.sa_dim())
    } else {
        linalg::nullspace(&constraints, 1e-9)
    };
    let unit = ambient.unit_coords();
    if linalg::solve_consistent(&subspace, &unit, 1e-7).is_none() {
        return Err(Error::Inconsistency(
            "chain constraints exclude the unit; the tunnels are inconsistent".into(),
        ));
    }

    let kernel = check_lipschitz_pair_restricted(&seminorm, subspace.clone(), &unit);
    if !kernel.passed {
        return Err(Error::Inconsistency(format!(
            "chain seminorm kernel is {}-dimensional inside the compatibility subspace",
            kernel.kernel_dim
        )));
    }

    // diameter of the restricted state space
    let cfg = MkConfig::default();
    let (diameter, diameter_status) = if ambient.is_commutative() {
        let diracs: Vec<RVec> = (0..ambient.n_blocks())
            .map(|i| {
                State::dirac(&ambient, i, 0)
                    .expect("index")
                    .functional_coords()
            })
            .collect();
        let mut best: f64 = 0.0;
        for i in 0..diracs.len() {
            for j in i + 1..diracs.len() {
                let r = mk::mk_raw(&seminorm, &diracs[i], &diracs[j], Some(&subspace), &cfg)?;
                best = best.max(r.value);
            }
        }
        (Interval::point(best), Status::Exact)
    } else {
        // flagged lower estimate over sampled restricted functionals
        let mut best: f64 = 0.0;
        let states: Vec<RVec> = (0..ambient.n_blocks())
            .map(|i| {
                State::dirac(&ambient, i, 0)
                    .expect("index")
                    .functional_coords()
            })
            .collect();
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let r = mk::mk_raw(&seminorm, &states[i], &states[j], Some(&subspace), &cfg)?;
                best = best.max(r.value);
            }
        }
        (Interval::point(best), Status::Heuristic)
    };

    let sum_lengths: f64 = tunnels[..=n].iter().map(|t| t.metrics().length.hi).sum();
    let bound_rhs = carriers[0].diameter().interval.hi + 4.0 * sum_lengths + eps_slack;
    let bound_ok = diameter.hi <= bound_rhs;

    Ok(ChainSpace {
        ambient,
        seminorm,
        subspace,
        kernel,
        constraints,
        n,
        diameter,
        diameter_status,
        bound_rhs,
        bound_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seminorm::SeminormAtom;
    use crate::tunnel::TunnelShape;

    fn classical(points: usize, unit: f64, label: &str) -> Arc<QuantumMetricSpace> {
        let alg = CStarAlgebra::new(vec![1; points], label).unwrap();
        let mut atoms = Vec::new();
        for i in 0..points {
            for j in i + 1..points {
                atoms.push(
                    SeminormAtom::pair_difference(&alg, i, j, unit * (j - i) as f64).unwrap(),
                );
            }
        }
        QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms).unwrap()).unwrap()
    }

    fn identity_leg(q: &Arc<QuantumMetricSpace>) -> Arc<Tunnel> {
        Arc::new(build_identity_tunnel(q).unwrap())
    }

    #[test]
    fn composition_is_exactly_additive_and_associative() {
        let a = classical(2, 1.0, "A");
        let b = classical(2, 2.0, "B");
        let c = classical(2, 3.0, "C");
        let jab = Journey::single(canonical_direct_sum_tunnel(&a, &b, None).unwrap());
        let jbc = Journey::single(canonical_direct_sum_tunnel(&b, &c, None).unwrap());
        let jcc = Journey::new(vec![identity_leg(&c)]).unwrap();
        let left = jab.compose(&jbc).unwrap().compose(&jcc).unwrap();
        let right = jab.compose(&jbc.compose(&jcc).unwrap()).unwrap();
        assert_eq!(left.size(), 3);
        let sum = jab.length().add(jbc.length()).add(jcc.length());
        assert_eq!(left.length(), sum);
        assert_eq!(right.length(), sum);
        for (l, r) in left.legs().iter().zip(right.legs()) {
            assert!(Arc::ptr_eq(l, r));
        }
    }

    #[test]
    fn reversal_preserves_length_bit_for_bit() {
        let a = classical(2, 1.0, "A");
        let b = classical(3, 1.0, "B");
        let j = Journey::single(canonical_direct_sum_tunnel(&a, &b, None).unwrap());
        let r = j.reversed();
        assert_eq!(j.length(), r.length());
        let rr = r.reversed();
        assert_eq!(rr.length(), j.length());
        assert_eq!(rr.size(), j.size());
    }

    #[test]
    fn reduction_removes_loops() {
        let a = classical(2, 1.0, "A");
        let b = classical(2, 2.0, "B");
        let c = classical(2, 3.0, "C");
        let ab = Journey::single(canonical_direct_sum_tunnel(&a, &b, None).unwrap());
        let ba = ab.reversed();
        let ac = Journey::single(canonical_direct_sum_tunnel(&a, &c, None).unwrap());
        let looped = ab.compose(&ba).unwrap().compose(&ac).unwrap();
        assert_eq!(looped.size(), 3);
        let reduced = looped.reduced();
        assert_eq!(reduced.size(), 1);
        assert_eq!(reduced.dom().algebra().label(), "A");
        assert_eq!(reduced.cod().algebra().label(), "C");
        assert!(reduced.length().hi <= looped.length().hi + 1e-15);
        // already reduced journeys are unchanged
        let again = reduced.reduced();
        assert_eq!(again.size(), reduced.size());
    }

    #[test]
    fn registry_is_symmetric_and_triangular() {
        let a = classical(2, 1.0, "A");
        let b = classical(2, 2.0, "B");
        let c = classical(2, 3.0, "C");
        let mut reg = PropinquityRegistry::new(TunnelClassFilter::All);
        reg.register_space(a.clone()).unwrap();
        reg.register_space(b.clone()).unwrap();
        reg.register_space(c.clone()).unwrap();
        let (ab, _) = reg.bound("A", "B").unwrap();
        let (ba, _) = reg.bound("B", "A").unwrap();
        assert_eq!(ab.hi, ba.hi);
        let (bc, _) = reg.bound("B", "C").unwrap();
        reg.auto_compose().unwrap();
        let (ac, witness) = reg.bound("A", "C").unwrap();
        assert!(ac.hi <= ab.hi + bc.hi + 1e-12);
        assert!(witness.size() <= 2);
        // identity journey on a pair with itself
        let (aa, _) = reg.bound("A", "A").unwrap();
        assert_eq!(aa.hi, 0.0);
    }

    #[test]
    fn direct_sum_only_filter_still_connects_everything() {
        let a = classical(2, 1.0, "A");
        let b = classical(3, 1.0, "B");
        let mut reg = PropinquityRegistry::new(TunnelClassFilter::DirectSumOnly);
        reg.register_space(a.clone()).unwrap();
        reg.register_space(b.clone()).unwrap();
        let (iv, j) = reg.bound("A", "B").unwrap();
        assert!(iv.hi.is_finite());
        assert!(j.legs().iter().all(|t| t.shape() == TunnelShape::DirectSum));
    }

    #[test]
    fn registry_export_import_round_trip() {
        let a = classical(2, 1.0, "A");
        let b = classical(3, 1.0, "B");
        let mut reg = PropinquityRegistry::new(TunnelClassFilter::All);
        reg.register_space(a.clone()).unwrap();
        reg.register_space(b.clone()).unwrap();
        let (bound, _) = reg.bound("A", "B").unwrap();
        let doc = reg.export_bounds().unwrap();
        assert!(doc.starts_with("propinquity_registry v1\n"));
        assert!(doc.contains("space id=A"));
        assert!(doc.contains("pair a=A b=B"));

        // a fresh registry with the same spaces accepts the document
        let mut fresh = PropinquityRegistry::new(TunnelClassFilter::All);
        fresh.register_space(a).unwrap();
        fresh.register_space(b).unwrap();
        assert_eq!(fresh.import_bounds(&doc).unwrap(), 1);
        let (iv, _, note) = fresh.best_known("A", "B").unwrap();
        assert!(iv.hi <= bound.hi + 1e-15);
        assert!(note.contains("legs"));

        // garbage and unregistered endpoints are rejected
        assert!(fresh.import_bounds("nonsense").is_err());
        assert!(fresh
            .import_bounds(
                "propinquity_registry v1\npair a=A b=Zmissing lo=0 hi=1 legs=1 status=exact"
            )
            .is_err());
    }

    #[test]
    fn chain_of_depth_zero_is_the_first_carrier() {
        let a = classical(3, 1.0, "A");
        let t = identity_leg(&a);
        let chain = build_chain_space(&[t], 0, 0.0).unwrap();
        assert!(chain.kernel_certificate().passed);
        assert_eq!(chain.diameter_status, Status::Exact);
        let direct = a.diameter().interval.hi;
        assert!((chain.diameter.hi - direct).abs() < 1e-9);
        assert!(chain.bound_ok);
    }

    #[test]
    fn chain_over_one_identity_tunnel_is_the_diagonal() {
        let a = classical(2, 2.0, "A");
        let legs = vec![identity_leg(&a), identity_leg(&a)];
        let chain = build_chain_space(&legs, 1, 0.0).unwrap();
        // diagonal subalgebra of C(X) ⊕ C(X): 2 free coordinates
        assert_eq!(chain.subspace_dim(), 2);
        assert!((chain.diameter.hi - a.diameter().interval.hi).abs() < 1e-9);
        assert!(chain.bound_ok);
        // compatibility: diagonal elements pass, skewed ones do not
        let mut v = RVec::zeros(4);
        v[0] = 1.0;
        v[1] = 2.0;
        v[2] = 1.0;
        v[3] = 2.0;
        let d = Element::from_sa_coords(chain.ambient(), &v);
        assert!(chain.membership_violation(&d).unwrap() < 1e-12);
        v[3] = 5.0;
        let d2 = Element::from_sa_coords(chain.ambient(), &v);
        assert!(chain.membership_violation(&d2).unwrap() > 1.0);
    }

    #[test]
    fn chain_seminorm_dominates_coordinates() {
        let a = classical(2, 2.0, "A");
        let legs = vec![identity_leg(&a), identity_leg(&a)];
        let chain = build_chain_space(&legs, 1, 0.0).unwrap();
        let mut rng = crate::rng::seeded(3);
        for _ in 0..20 {
            let d = crate::algebra::random_self_adjoint(chain.ambient(), &mut rng);
            let h = chain.eval(&d).unwrap();
            let v = d.sa_coords().unwrap();
            let d0 = Element::from_sa_coords(a.algebra(), &RVec::from_vec(vec![v[0], v[1]]));
            let d1 = Element::from_sa_coords(a.algebra(), &RVec::from_vec(vec![v[2], v[3]]));
            assert!(h >= a.eval(&d0).unwrap() - 1e-12);
            assert!(h >= a.eval(&d1).unwrap() - 1e-12);
        }
    }

    #[test]
    fn chain_over_direct_sum_tunnels_obeys_uniform_bound() {
        let a = classical(2, 2.0, "A");
        let b = classical(2, 1.0, "B");
        let c = classical(2, 1.5, "C");
        let t0 = Arc::new(canonical_direct_sum_tunnel(&a, &b, None).unwrap());
        let t1 = Arc::new(canonical_direct_sum_tunnel(&b, &c, None).unwrap());
        let chain = build_chain_space(&[t0, t1], 1, 0.0).unwrap();
        assert!(chain.kernel_certificate().passed);
        assert!(
            chain.bound_ok,
            "diam {} rhs {}",
            chain.diameter.hi, chain.bound_rhs
        );
    }

    #[test]
    fn itinerary_respects_accumulated_bound() {
        let a = classical(2, 2.0, "A");
        let b = classical(2, 2.0, "B");
        let t = canonical_direct_sum_tunnel(&a, &b, None).unwrap();
        let j = Journey::single(t);
        let mut v = RVec::zeros(2);
        v[1] = 2.0;
        let elt = Element::from_sa_coords(a.algebra(), &v);
        let r = a.eval(&elt).unwrap();
        let rep = j.lift_itinerary(&elt, r).unwrap();
        assert_eq!(rep.stages.len(), 2);
        assert!(rep.within_bound);
    }
}
