//! Tunnels: a carrier quantum metric space with two validated *-epimorphisms
//! whose quotient seminorms recover the endpoint Lip-norms, measured by reach
//! (Hausdorff distance between the pulled-back state spaces), depth (Hausdorff
//! distance from the carrier's state space to the convex hull of the two
//! images), and length (their maximum).
//!
//! Fully commutative tunnels are measured exactly: the Hausdorff distance
//! between convex sets is attained at extreme points, and the extreme points
//! of a pushed-forward state space are the pulled Dirac functionals, so each
//! one-sided supremum is a finite family of hull-distance linear programs.
//! Identity tunnels and direct-sum tunnels carry structural zero certificates
//! for reach and depth respectively. Everything else is bracketed on nets.

use std::sync::{Arc, OnceLock};

use crate::algebra::{
    operator_norm, random_self_adjoint, same_algebra, Element, StarMorphism, State,
};
use crate::error::{Error, Result};
use crate::interval::{Interval, Status};
use crate::linalg::{self, RVec};
use crate::mk::{
    self, build_state_net, dist_functional_to_hull, hausdorff_distance, pushforward_net, MkConfig,
    StateNet,
};
use crate::seminorm::{DiameterEstimate, QuantumMetricSpace, SeminormAtom, SeminormSpec};
use crate::simplex::{self, LpOutcome, LpProblem, VarKind};

/// Structural knowledge about how the tunnel was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TunnelShape {
    /// Carrier is the domain itself; both surjections are isometric
    /// isomorphisms, so reach and depth vanish identically.
    Identity,
    /// Carrier is `A ⊕ B` with the coordinate projections; every state of the
    /// carrier is a convex combination of the two images, so depth vanishes.
    DirectSum,
    General,
}

/// Finite-probe admissibility certificate.
#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    /// Worst observed lift slack: `min L_D(lift) - L_endpoint(probe)`.
    pub eps_lift: f64,
    /// Worst observed violation of `L_endpoint(π(d)) ≤ L_D(d)`.
    pub contraction_violation: f64,
    pub probes: usize,
    pub seed: u64,
}

/// Reach, depth and their maximum, as intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelMetrics {
    pub reach: Interval,
    pub depth: Interval,
    pub length: Interval,
    /// Net resolution used (zero on the exact route).
    pub net_resolution: f64,
    pub status: Status,
}

/// A lift of `input` through the tunnel with its checked norm bounds.
#[derive(Debug, Clone)]
pub struct LiftWitness {
    pub input: Element,
    pub radius: f64,
    pub lift: Element,
    pub image: Element,
    pub lift_lipnorm: f64,
    /// `‖π_B(d)‖ ≤ ‖a‖ + r·reach.hi + tol`
    pub image_norm_ok: bool,
    /// `‖d‖ ≤ ‖a‖ + 2r·length.hi + tol`
    pub lift_norm_ok: bool,
}

#[derive(Debug)]
pub struct Tunnel {
    dom: Arc<QuantumMetricSpace>,
    cod: Arc<QuantumMetricSpace>,
    carrier: Arc<QuantumMetricSpace>,
    pi_dom: StarMorphism,
    pi_cod: StarMorphism,
    shape: TunnelShape,
    class_tag: String,
    admissibility: AdmissibilityReport,
    pub d_scale_warning: bool,
    metrics: Arc<OnceLock<TunnelMetrics>>,
}

const LIFT_PROBE_SEED: u64 = 0x6c696674;

impl Tunnel {
    /// Validates the surjections and runs the finite admissibility probe.
    pub fn build(
        dom: Arc<QuantumMetricSpace>,
        cod: Arc<QuantumMetricSpace>,
        carrier: Arc<QuantumMetricSpace>,
        pi_dom: StarMorphism,
        pi_cod: StarMorphism,
        shape: TunnelShape,
        class_tag: impl Into<String>,
    ) -> Result<Tunnel> {
        if !same_algebra(pi_dom.source(), carrier.algebra())
            || !same_algebra(pi_cod.source(), carrier.algebra())
            || !same_algebra(pi_dom.target(), dom.algebra())
            || !same_algebra(pi_cod.target(), cod.algebra())
        {
            return Err(Error::Structure(
                "tunnel maps do not chain with the spaces".into(),
            ));
        }
        for (name, pi) in [("domain", &pi_dom), ("codomain", &pi_cod)] {
            let rep = pi.validate();
            if !rep.epimorphism {
                return Err(Error::Certificate(format!(
                    "{name} surjection failed validation: rank {}/{}, unital {:.2e}, mult {:.2e}",
                    rep.rank,
                    pi.target().sa_dim(),
                    rep.unital_violation,
                    rep.mult_violation
                )));
            }
        }
        let mut tunnel = Tunnel {
            dom,
            cod,
            carrier,
            pi_dom,
            pi_cod,
            shape,
            class_tag: class_tag.into(),
            admissibility: AdmissibilityReport {
                eps_lift: 0.0,
                contraction_violation: 0.0,
                probes: 0,
                seed: LIFT_PROBE_SEED,
            },
            d_scale_warning: false,
            metrics: Arc::new(OnceLock::new()),
        };
        tunnel.admissibility = tunnel.probe_admissibility()?;
        Ok(tunnel)
    }

    fn probe_admissibility(&self) -> Result<AdmissibilityReport> {
        let mut rng = crate::rng::seeded(LIFT_PROBE_SEED);
        let mut contraction: f64 = 0.0;
        let n_random = if self.carrier.algebra().sa_dim() <= 64 {
            64
        } else {
            16
        };
        for _ in 0..n_random {
            let d = random_self_adjoint(self.carrier.algebra(), &mut rng);
            let ld = self.carrier.eval(&d)?;
            for (pi, side) in [(&self.pi_dom, &self.dom), (&self.pi_cod, &self.cod)] {
                let la = side.eval(&pi.apply(&d)?)?;
                contraction = contraction.max(la - ld);
            }
        }
        let mut eps_lift: f64 = 0.0;
        let mut probes = 0;
        if self.shape != TunnelShape::Identity {
            for (pi, side) in [(&self.pi_dom, &self.dom), (&self.pi_cod, &self.cod)] {
                let dim = side.algebra().sa_dim();
                // full basis on small sides, a deterministic stride above that:
                // the certificate stays finite and honest either way
                let stride = dim.div_ceil(24);
                let mut probe_coords: Vec<RVec> = (0..dim)
                    .step_by(stride)
                    .map(|i| {
                        let mut v = RVec::zeros(dim);
                        v[i] = 1.0;
                        v
                    })
                    .collect();
                for _ in 0..n_random.min(16) {
                    probe_coords.push(random_self_adjoint(side.algebra(), &mut rng).sa_coords()?);
                }
                for v in probe_coords {
                    let a = Element::from_sa_coords(side.algebra(), &v);
                    let la = side.eval(&a)?;
                    if la < 1e-12 {
                        continue;
                    }
                    let a = a.scale(1.0 / la);
                    let (min_l, _) = self.minimize_lift(pi, &a.sa_coords()?, None)?;
                    eps_lift = eps_lift.max(min_l - 1.0);
                    probes += 1;
                }
            }
        }
        Ok(AdmissibilityReport {
            eps_lift: eps_lift.max(0.0),
            contraction_violation: contraction.max(0.0),
            probes,
            seed: LIFT_PROBE_SEED,
        })
    }

    /// Minimizes `L_D` over the fiber of `pi` above the coordinates `a`.
    /// Returns the best value and the lift coordinates. An optional secondary
    /// objective picks among near-minimal lifts (used for target sampling):
    /// it then maximizes `u·z` subject to `L_D ≤ cap`.
    fn minimize_lift(
        &self,
        pi: &StarMorphism,
        a: &RVec,
        secondary: Option<(&RVec, f64)>,
    ) -> Result<(f64, RVec)> {
        let p = pi.map().to_dense();
        let d0 = linalg::solve_consistent(&p, a, 1e-9).ok_or_else(|| {
            Error::Inconsistency("validated epimorphism has an empty fiber".into())
        })?;
        let kernel = linalg::nullspace(&p, 1e-9);
        let kdim = kernel.ncols();
        if kdim == 0 {
            let v = self.carrier.seminorm().eval_coords(&d0);
            return Ok((v, d0));
        }
        if self.carrier.lp_compatible() {
            let rows = self.carrier.seminorm().stacked_rows();
            let rk = &rows * &kernel;
            let r0 = &rows * &d0;
            match secondary {
                None => {
                    // minimize t subject to |r0 + rk z| ≤ t
                    let mut obj = vec![0.0; kdim + 1];
                    obj[kdim] = -1.0;
                    let mut vars = vec![VarKind::Free; kdim];
                    vars.push(VarKind::NonNeg);
                    let mut lp = LpProblem::new(vars, obj);
                    for m in 0..rk.nrows() {
                        let mut row: Vec<f64> = rk.row(m).iter().copied().collect();
                        row.push(-1.0);
                        lp.leq(row.clone(), -r0[m]);
                        let mut neg: Vec<f64> = rk.row(m).iter().map(|v| -v).collect();
                        neg.push(-1.0);
                        lp.leq(neg, r0[m]);
                    }
                    match simplex::solve(&lp)? {
                        LpOutcome::Optimal { value, solution } => {
                            let z = solution.rows(0, kdim).into_owned();
                            Ok((-value, &d0 + &kernel * z))
                        }
                        _ => Err(Error::Solver("lift program did not solve".into())),
                    }
                }
                Some((u, cap)) => {
                    let uk = kernel.transpose() * u;
                    let mut lp =
                        LpProblem::new(vec![VarKind::Free; kdim], uk.iter().copied().collect());
                    for m in 0..rk.nrows() {
                        let row: Vec<f64> = rk.row(m).iter().copied().collect();
                        lp.leq(row.clone(), cap - r0[m]);
                        lp.leq(row.iter().map(|v| -v).collect(), cap + r0[m]);
                    }
                    match simplex::solve(&lp)? {
                        LpOutcome::Optimal { solution, .. } => {
                            let d = &d0 + &kernel * solution;
                            Ok((self.carrier.seminorm().eval_coords(&d), d))
                        }
                        LpOutcome::Infeasible => {
                            Err(Error::Solver("no lift within the requested radius".into()))
                        }
                        LpOutcome::Unbounded => {
                            Err(Error::Inconsistency("unbounded lift sampler".into()))
                        }
                    }
                }
            }
        } else {
            // subgradient descent on the fiber coordinates
            let spec = self.carrier.seminorm();
            let eval = |z: &RVec| spec.eval_coords(&(&d0 + &kernel * z));
            let mut z = match secondary {
                Some((u, _)) => {
                    let mut v = kernel.transpose() * u;
                    let n = v.norm();
                    if n > 0.0 {
                        v /= n;
                    }
                    v
                }
                None => RVec::zeros(kdim),
            };
            let mut best = eval(&z);
            let mut best_z = z.clone();
            let iters = 2000;
            for t in 1..=iters {
                let d = &d0 + &kernel * &z;
                let (active, _) = spec.active_atom(&d);
                let atom = &spec.atoms()[active];
                let img = atom.image_element(&d);
                let (b_star, _) = img
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(b, m)| (b, linalg::spectral_norm(m)))
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |acc, it| if it.1 > acc.1 { it } else { acc },
                    );
                let (lam, v) = linalg::hermitian_top_eigenpair(img.block(b_star));
                let sigmas: Vec<_> = img
                    .blocks()
                    .iter()
                    .enumerate()
                    .map(|(b, m)| {
                        if b == b_star {
                            (&v * v.adjoint()) * num_complex::Complex64::new(lam.signum(), 0.0)
                        } else {
                            crate::linalg::CMat::zeros(m.nrows(), m.ncols())
                        }
                    })
                    .collect();
                let f_sig = crate::algebra::functional_from_sigmas(atom.target(), &sigmas);
                let g = kernel.transpose() * atom.map().tr_apply(&f_sig);
                let gn = g.norm();
                if gn < 1e-14 {
                    break;
                }
                z -= g * (best.max(1.0) / gn / (t as f64).sqrt());
                let val = eval(&z);
                if val < best {
                    best = val;
                    best_z = z.clone();
                }
            }
            Ok((best, &d0 + &kernel * best_z))
        }
    }

    pub fn dom(&self) -> &Arc<QuantumMetricSpace> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<QuantumMetricSpace> {
        &self.cod
    }

    pub fn carrier(&self) -> &Arc<QuantumMetricSpace> {
        &self.carrier
    }

    pub fn pi_dom(&self) -> &StarMorphism {
        &self.pi_dom
    }

    pub fn pi_cod(&self) -> &StarMorphism {
        &self.pi_cod
    }

    pub fn shape(&self) -> TunnelShape {
        self.shape
    }

    pub fn class_tag(&self) -> &str {
        &self.class_tag
    }

    pub fn admissibility(&self) -> &AdmissibilityReport {
        &self.admissibility
    }

    /// Swaps the two surjections. The reversed tunnel shares the measurement
    /// cache: reach and depth are symmetric in the two images, so the metrics
    /// are identical by definition, bit for bit.
    pub fn reversed(&self) -> Tunnel {
        Tunnel {
            dom: self.cod.clone(),
            cod: self.dom.clone(),
            carrier: self.carrier.clone(),
            pi_dom: self.pi_cod.clone(),
            pi_cod: self.pi_dom.clone(),
            shape: self.shape,
            class_tag: self.class_tag.clone(),
            admissibility: self.admissibility.clone(),
            d_scale_warning: self.d_scale_warning,
            metrics: self.metrics.clone(),
        }
    }

    fn default_net_resolution(&self) -> f64 {
        let d = self
            .dom
            .diameter()
            .interval
            .hi
            .max(self.cod.diameter().interval.hi);
        (0.05 * d).max(1e-6)
    }

    /// Cached metrics at the default net policy.
    pub fn metrics(&self) -> TunnelMetrics {
        *self.metrics.get_or_init(|| {
            self.measure(self.default_net_resolution(), &MkConfig::default())
                .expect("default measurement")
        })
    }

    /// Measures reach and depth at the given net resolution (ignored on the
    /// exact and structural routes).
    pub fn measure(&self, eps_net: f64, cfg: &MkConfig) -> Result<TunnelMetrics> {
        let (reach, rs, r_res) = self.compute_reach(eps_net, cfg)?;
        let (depth, ds, d_res) = self.compute_depth(eps_net, cfg)?;
        let status = rs.merge(ds);
        Ok(TunnelMetrics {
            reach,
            depth,
            length: reach.join_max(depth),
            net_resolution: r_res.max(d_res),
            status,
        })
    }

    fn fully_commutative(&self) -> bool {
        self.dom.lp_compatible() && self.cod.lp_compatible() && self.carrier.lp_compatible()
    }

    fn pulled_dirac_functionals(&self, pi: &StarMorphism, side: &QuantumMetricSpace) -> Vec<RVec> {
        (0..side.algebra().n_blocks())
            .map(|i| {
                let f = State::dirac(side.algebra(), i, 0)
                    .expect("index")
                    .functional_coords();
                pi.map().tr_apply(&f)
            })
            .collect()
    }

    /// Reach: Hausdorff distance between the two pulled-back state spaces.
    pub fn compute_reach(&self, eps_net: f64, cfg: &MkConfig) -> Result<(Interval, Status, f64)> {
        if self.shape == TunnelShape::Identity {
            return Ok((Interval::zero(), Status::Exact, 0.0));
        }
        if self.fully_commutative() {
            let gens_a = self.pulled_dirac_functionals(&self.pi_dom, &self.dom);
            let gens_b = self.pulled_dirac_functionals(&self.pi_cod, &self.cod);
            let mut sup: f64 = 0.0;
            for p in &gens_a {
                sup = sup.max(dist_functional_to_hull(&self.carrier, p, &gens_b, None)?);
            }
            for q in &gens_b {
                sup = sup.max(dist_functional_to_hull(&self.carrier, q, &gens_a, None)?);
            }
            return Ok((Interval::point(sup), Status::Exact, 0.0));
        }
        let (net_a, net_b) = self.pulled_nets(eps_net)?;
        let (iv, status) = hausdorff_distance(&net_a, &net_b, &self.carrier, cfg)?;
        Ok((iv, status, eps_net))
    }

    /// Depth: Hausdorff distance from the carrier's state space to the closed
    /// convex hull of the two images.
    pub fn compute_depth(&self, eps_net: f64, cfg: &MkConfig) -> Result<(Interval, Status, f64)> {
        match self.shape {
            TunnelShape::Identity | TunnelShape::DirectSum => {
                return Ok((Interval::zero(), Status::Exact, 0.0));
            }
            TunnelShape::General => {}
        }
        self.compute_depth_via_nets(eps_net, cfg)
    }

    /// Net-route depth, also usable to cross-check the structural shortcuts.
    pub fn compute_depth_via_nets(
        &self,
        eps_net: f64,
        cfg: &MkConfig,
    ) -> Result<(Interval, Status, f64)> {
        if self.fully_commutative() {
            let mut gens: Vec<RVec> = self.pulled_dirac_functionals(&self.pi_dom, &self.dom);
            gens.extend(self.pulled_dirac_functionals(&self.pi_cod, &self.cod));
            let carrier_diracs: Vec<RVec> = (0..self.carrier.algebra().n_blocks())
                .map(|i| {
                    State::dirac(self.carrier.algebra(), i, 0)
                        .expect("index")
                        .functional_coords()
                })
                .collect();
            let mut sup: f64 = 0.0;
            for z in &carrier_diracs {
                sup = sup.max(dist_functional_to_hull(&self.carrier, z, &gens, None)?);
            }
            for p in &gens {
                sup = sup.max(dist_functional_to_hull(
                    &self.carrier,
                    p,
                    &carrier_diracs,
                    None,
                )?);
            }
            return Ok((Interval::point(sup), Status::Exact, 0.0));
        }
        let carrier_net = build_state_net(&self.carrier, eps_net)?;
        let (net_a, net_b) = self.pulled_nets(eps_net)?;
        // mixing grid over the hull of the two images
        let diam = self.carrier.diameter().interval.hi.max(eps_net);
        let steps = (diam / eps_net).ceil().max(1.0) as usize;
        let mut hull_states = Vec::new();
        for pa in &net_a.states {
            for pb in &net_b.states {
                for k in 0..=steps {
                    let t = k as f64 / steps as f64;
                    hull_states.push(pa.mix(pb, 1.0 - t)?);
                }
            }
        }
        let mut certified = net_a.certified && net_b.certified && carrier_net.certified;
        const HULL_CAP: usize = 20_000;
        if hull_states.len() > HULL_CAP {
            let stride = hull_states.len().div_ceil(HULL_CAP);
            hull_states = hull_states.into_iter().step_by(stride).collect();
            certified = false;
        }
        let hull_net = StateNet {
            states: hull_states,
            resolution: net_a.resolution.max(net_b.resolution) + 0.5 * eps_net,
            certified,
            source: "hull".into(),
        };
        let (iv, status) = hausdorff_distance(&carrier_net, &hull_net, &self.carrier, cfg)?;
        Ok((iv, status, eps_net))
    }

    fn pulled_nets(&self, eps_net: f64) -> Result<(StateNet, StateNet)> {
        let slack = self.admissibility.eps_lift;
        let mut net_a = pushforward_net(&build_state_net(&self.dom, eps_net)?, &self.pi_dom)?;
        let mut net_b = pushforward_net(&build_state_net(&self.cod, eps_net)?, &self.pi_cod)?;
        // the dual maps are isometric only up to the admissibility slack
        net_a.resolution += slack;
        net_b.resolution += slack;
        Ok((net_a, net_b))
    }

    /// Produces a lift of `a` with `L_D ≤ r + ε_lift` and checks both norm
    /// estimates against the measured reach and length.
    pub fn lift_element(&self, a: &Element, r: f64) -> Result<LiftWitness> {
        let la = self.dom.eval(a)?;
        if r < la - 1e-9 {
            return Err(Error::Domain(format!(
                "lift radius {r} below the element's Lip-norm {la}"
            )));
        }
        let coords = a.sa_coords()?;
        let (min_l, d) = self.minimize_lift(&self.pi_dom, &coords, None)?;
        let slack = self.admissibility.eps_lift + 1e-7;
        if min_l > r + slack {
            return Err(Error::Solver(format!(
                "lift feasibility not reached: best Lip-norm {min_l:.6} > radius {r} + slack"
            )));
        }
        let lift = Element::from_sa_coords(self.carrier.algebra(), &d);
        let back = self.pi_dom.apply(&lift)?;
        let recon = operator_norm(&back.sub(a)?);
        if recon > 1e-8 {
            return Err(Error::Inconsistency(format!(
                "lift does not project back to the input: error {recon:.2e}"
            )));
        }
        let image = self.pi_cod.apply(&lift)?;
        let m = self.metrics();
        let tol = 1e-6;
        let na = operator_norm(a);
        let image_norm_ok = operator_norm(&image) <= na + r * m.reach.hi + tol;
        let lift_norm_ok = operator_norm(&lift) <= na + 2.0 * r * m.length.hi + tol;
        Ok(LiftWitness {
            input: a.clone(),
            radius: r,
            lift,
            image,
            lift_lipnorm: min_l,
            image_norm_ok,
            lift_norm_ok,
        })
    }

    /// Samples several lifts of `a` at radius `r` by optimizing random kernel
    /// directions, measures the spread of their images, and checks the Jordan
    /// and Lie product membership radii against the tunnel length.
    pub fn target_diameter_check(
        &self,
        a: &Element,
        r: f64,
        samples: usize,
        seed: u64,
    ) -> Result<TargetDiameterReport> {
        let la = self.dom.eval(a)?;
        if r < la - 1e-9 {
            return Err(Error::Domain("target radius below the Lip-norm".into()));
        }
        let coords = a.sa_coords()?;
        let mut rng = crate::rng::seeded(seed);
        let mut images: Vec<Element> = Vec::new();
        let mut lifts: Vec<Element> = Vec::new();
        let cap = r + self.admissibility.eps_lift + 1e-9;
        for _ in 0..samples.max(1) {
            let u = random_self_adjoint(self.carrier.algebra(), &mut rng).sa_coords()?;
            let lifted = match self.minimize_lift(&self.pi_dom, &coords, Some((&u, cap))) {
                Ok((l, d)) if l <= cap + 1e-7 => Some(d),
                _ => None,
            };
            let d = match lifted {
                Some(d) => d,
                None => self.minimize_lift(&self.pi_dom, &coords, None)?.1,
            };
            let lift = Element::from_sa_coords(self.carrier.algebra(), &d);
            images.push(self.pi_cod.apply(&lift)?);
            lifts.push(lift);
        }
        let mut spread: f64 = 0.0;
        for (i, b) in images.iter().enumerate() {
            for b2 in images.iter().skip(i + 1) {
                spread = spread.max(operator_norm(&b.sub(b2)?));
            }
        }
        let m = self.metrics();
        let tol = 1e-6;
        let spread_bound = 2.0 * r * m.reach.hi + tol;

        // Jordan/Lie membership: products of lifts of (a, a') land in the
        // enlarged target radius r(‖a‖ + ‖a'‖ + 4 r length)
        let na = operator_norm(a);
        let mut product_ok = true;
        let mut worst_product_excess: f64 = 0.0;
        for _ in 0..3 {
            let mut aprime = random_self_adjoint(self.dom.algebra(), &mut rng);
            let lap = self.dom.eval(&aprime)?;
            if lap > 1e-12 {
                aprime = aprime.scale(r / lap);
            }
            let (lp2, d2) = self.minimize_lift(&self.pi_dom, &aprime.sa_coords()?, None)?;
            if lp2 > cap + 1e-7 {
                continue;
            }
            let lift2 = Element::from_sa_coords(self.carrier.algebra(), &d2);
            let radius = r * (na + operator_norm(&aprime) + 4.0 * r * m.length.hi) + tol;
            for product in [
                crate::algebra::jordan_product(&lifts[0], &lift2)?,
                crate::algebra::lie_product(&lifts[0], &lift2)?,
            ] {
                let ld = self.carrier.eval(&product)?;
                let lb = self.cod.eval(&self.pi_cod.apply(&product)?)?;
                let excess = (ld - radius).max(lb - radius);
                worst_product_excess = worst_product_excess.max(excess);
                if excess > 0.0 {
                    product_ok = false;
                }
            }
        }
        Ok(TargetDiameterReport {
            samples: images.len(),
            spread,
            spread_bound,
            spread_ok: spread <= spread_bound,
            product_ok,
            worst_product_excess,
        })
    }
}

/// Report of the sampled target-set diameter and product-membership checks.
#[derive(Debug, Clone)]
pub struct TargetDiameterReport {
    pub samples: usize,
    pub spread: f64,
    pub spread_bound: f64,
    pub spread_ok: bool,
    pub product_ok: bool,
    pub worst_product_excess: f64,
}

/// The trivial tunnel `(A, L_A, id, id)`.
pub fn build_identity_tunnel(qms: &Arc<QuantumMetricSpace>) -> Result<Tunnel> {
    let id = StarMorphism::identity(qms.algebra());
    Tunnel::build(
        qms.clone(),
        qms.clone(),
        qms.clone(),
        id.clone(),
        id,
        TunnelShape::Identity,
        "identity",
    )
}

/// The tunnel `(A, L_A, id, h)` for a validated isometric isomorphism `h`.
/// Rejects `h` unless it is a *-isomorphism with `L_B ∘ h = L_A` on probes.
pub fn build_isometric_tunnel(
    dom: &Arc<QuantumMetricSpace>,
    cod: &Arc<QuantumMetricSpace>,
    h: StarMorphism,
) -> Result<Tunnel> {
    if !same_algebra(h.source(), dom.algebra()) || !same_algebra(h.target(), cod.algebra()) {
        return Err(Error::Structure("isomorphism endpoints mismatch".into()));
    }
    let rep = h.validate();
    if !(rep.epimorphism && rep.monomorphism) {
        return Err(Error::Certificate("h is not a *-isomorphism".into()));
    }
    let dim = dom.algebra().sa_dim();
    let mut rng = crate::rng::seeded(0x69736f);
    let mut worst: f64 = 0.0;
    let mut probes: Vec<Element> = (0..dim)
        .map(|i| {
            let mut v = RVec::zeros(dim);
            v[i] = 1.0;
            Element::from_sa_coords(dom.algebra(), &v)
        })
        .collect();
    for _ in 0..32 {
        probes.push(random_self_adjoint(dom.algebra(), &mut rng));
    }
    for a in &probes {
        let la = dom.eval(a)?;
        let lb = cod.eval(&h.apply(a)?)?;
        worst = worst.max((la - lb).abs());
    }
    if worst > 1e-9 {
        return Err(Error::Certificate(format!(
            "h is not isometric: seminorm transport violation {worst:.3e}"
        )));
    }
    Tunnel::build(
        dom.clone(),
        cod.clone(),
        dom.clone(),
        StarMorphism::identity(dom.algebra()),
        h,
        TunnelShape::Identity,
        "identity",
    )
}

/// The explicit tunnel between arbitrary spaces through unital faithful
/// representations into a common algebra:
/// `L(a, b) = max{L_A(a), L_B(b), ‖ρ_A(a) − ρ_B(b)‖ / D}` on `A ⊕ B`.
pub fn build_direct_sum_tunnel(
    dom: &Arc<QuantumMetricSpace>,
    cod: &Arc<QuantumMetricSpace>,
    rho_dom: &StarMorphism,
    rho_cod: &StarMorphism,
    d_scale: f64,
) -> Result<Tunnel> {
    if !(d_scale > 0.0) {
        return Err(Error::Domain(format!("D must be positive, got {d_scale}")));
    }
    if !same_algebra(rho_dom.source(), dom.algebra())
        || !same_algebra(rho_cod.source(), cod.algebra())
        || !same_algebra(rho_dom.target(), rho_cod.target())
    {
        return Err(Error::Structure(
            "embeddings do not share a common algebra".into(),
        ));
    }
    for (name, rho) in [("left", rho_dom), ("right", rho_cod)] {
        let rep = rho.validate();
        if !rep.monomorphism {
            return Err(Error::Certificate(format!(
                "{name} embedding failed validation (rank {}, unital {:.2e}, mult {:.2e})",
                rep.rank, rep.unital_violation, rep.mult_violation
            )));
        }
    }
    let sum = crate::algebra::CStarAlgebra::direct_sum(
        dom.algebra(),
        cod.algebra(),
        format!("{}(+){}", dom.algebra().label(), cod.algebra().label()),
    );
    let proj_dom = StarMorphism::projection(&sum, dom.algebra(), 0)?;
    let proj_cod = StarMorphism::projection(&sum, cod.algebra(), dom.algebra().n_blocks())?;

    let mut atoms: Vec<SeminormAtom> = Vec::new();
    for atom in dom.seminorm().atoms() {
        atoms.push(atom.pullback(&proj_dom, "pi_dom")?);
    }
    for atom in cod.seminorm().atoms() {
        atoms.push(atom.pullback(&proj_cod, "pi_cod")?);
    }
    let via_dom = rho_dom.map().compose(proj_dom.map());
    let via_cod = rho_cod.map().compose(proj_cod.map());
    atoms.push(SeminormAtom::morphism_difference(
        &sum,
        &via_dom,
        &via_cod,
        rho_dom.target(),
        d_scale,
    )?);

    let dd = dom.diameter();
    let dc = cod.diameter();
    let diameter = DiameterEstimate {
        interval: Interval::new(
            dd.interval.lo.max(dc.interval.lo),
            dd.interval.hi + dc.interval.hi + d_scale,
        ),
        status: dd.status.merge(dc.status).merge(Status::Interval),
    };
    let carrier =
        QuantumMetricSpace::try_new_with_diameter(SeminormSpec::new(sum, atoms)?, Some(diameter))?;
    let mut tunnel = Tunnel::build(
        dom.clone(),
        cod.clone(),
        carrier,
        proj_dom,
        proj_cod,
        TunnelShape::DirectSum,
        "direct_sum",
    )?;
    tunnel.d_scale_warning = d_scale + 1e-12 < dd.interval.hi.max(dc.interval.hi);
    Ok(tunnel)
}

/// The doubling Lip-norm `L_γ(d_1, d_2) = max{L(d_1), L(d_2), ‖d_1 - d_2‖/γ}`
/// on `D ⊕ D`, with its proven diameter bound `diam(S(D)) + 2γ`.
pub fn build_doubling_lipnorm(
    qms: &Arc<QuantumMetricSpace>,
    gamma: f64,
) -> Result<Arc<QuantumMetricSpace>> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let alg = qms.algebra();
    let doubled =
        crate::algebra::CStarAlgebra::direct_sum(alg, alg, format!("{}(x2)", alg.label()));
    let p1 = StarMorphism::projection(&doubled, alg, 0)?;
    let p2 = StarMorphism::projection(&doubled, alg, alg.n_blocks())?;
    let mut atoms: Vec<SeminormAtom> = Vec::new();
    for atom in qms.seminorm().atoms() {
        atoms.push(atom.pullback(&p1, "first")?);
        atoms.push(atom.pullback(&p2, "second")?);
    }
    atoms.push(SeminormAtom::doubling_difference(&doubled, alg, gamma)?);
    let d = qms.diameter();
    let diameter = DiameterEstimate {
        interval: Interval::new(d.interval.lo, d.interval.hi + 2.0 * gamma),
        status: d.status.merge(Status::Interval),
    };
    QuantumMetricSpace::try_new_with_diameter(SeminormSpec::new(doubled, atoms)?, Some(diameter))
}

/// The doubling construction packaged as a tunnel from `D` to itself.
pub fn build_doubling_tunnel(qms: &Arc<QuantumMetricSpace>, gamma: f64) -> Result<Tunnel> {
    let carrier = build_doubling_lipnorm(qms, gamma)?;
    let alg = qms.algebra();
    let p1 = StarMorphism::projection(carrier.algebra(), alg, 0)?;
    let p2 = StarMorphism::projection(carrier.algebra(), alg, alg.n_blocks())?;
    Tunnel::build(
        qms.clone(),
        qms.clone(),
        carrier,
        p1,
        p2,
        TunnelShape::DirectSum,
        "doubling",
    )
}

/// Pullbacks of a state through both doubling projections stay within `γ`
/// of each other in `mk_{L_γ}`; exposed for the doubling estimate checks.
pub fn doubling_pullback_distance(
    doubled: &Arc<QuantumMetricSpace>,
    base: &Arc<QuantumMetricSpace>,
    phi: &State,
    cfg: &MkConfig,
) -> Result<mk::MkResult> {
    let alg = base.algebra();
    let p1 = StarMorphism::projection(doubled.algebra(), alg, 0)?;
    let p2 = StarMorphism::projection(doubled.algebra(), alg, alg.n_blocks())?;
    let f1 = p1.map().tr_apply(&phi.functional_coords());
    let f2 = p2.map().tr_apply(&phi.functional_coords());
    mk::mk_between_functionals(doubled, &f1, &f2, None, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CStarAlgebra;

    fn classical(points: usize, unit: f64, label: &str) -> Arc<QuantumMetricSpace> {
        // path graph with equal edge lengths
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

    #[test]
    fn identity_tunnel_has_zero_length() {
        let qms = classical(2, 2.0, "X2");
        let t = build_identity_tunnel(&qms).unwrap();
        let m = t.metrics();
        assert_eq!(m.reach, Interval::zero());
        assert_eq!(m.depth, Interval::zero());
        assert_eq!(m.length, Interval::zero());
        assert_eq!(m.status, Status::Exact);
        assert_eq!(t.admissibility().eps_lift, 0.0);
    }

    #[test]
    fn isometric_tunnel_accepts_atom_preserving_map_and_rejects_others() {
        let qms = classical(2, 2.0, "X2");
        // the flip permutation preserves the pair atom
        let flip = StarMorphism::permute_points(qms.algebra(), &[1, 0]).unwrap();
        let t = build_isometric_tunnel(&qms, &qms, flip).unwrap();
        assert_eq!(t.metrics().length, Interval::zero());

        // a non-isometric (rescaled) target seminorm is rejected
        let other = classical(2, 4.0, "X2s");
        let relabel = StarMorphism::from_linmap(
            qms.algebra().clone(),
            other.algebra().clone(),
            crate::linalg::LinMap::identity(2),
        )
        .unwrap();
        assert!(matches!(
            build_isometric_tunnel(&qms, &other, relabel),
            Err(Error::Certificate(_))
        ));
    }

    #[test]
    fn self_direct_sum_tunnel_reach_tracks_the_scale() {
        // matched embeddings admit perfect lifts at any scale; the reach of
        // the explicit tunnel is pinned at the scale by cross-side constants
        let a = classical(2, 2.0, "X2");
        let b = classical(2, 2.0, "X2copy");
        let e = CStarAlgebra::new(vec![1, 1], "E2").unwrap();
        let rho_a = StarMorphism::commutative_pullback(a.algebra(), &e, &[0, 1]).unwrap();
        let rho_b = StarMorphism::commutative_pullback(b.algebra(), &e, &[0, 1]).unwrap();
        for d_scale in [0.05, 2.0] {
            let t = build_direct_sum_tunnel(&a, &b, &rho_a, &rho_b, d_scale).unwrap();
            assert!(t.admissibility().eps_lift <= 1e-12);
            let m = t.metrics();
            assert_eq!(m.status, Status::Exact);
            assert_eq!(m.depth, Interval::zero());
            assert!(
                (m.reach.hi - d_scale).abs() <= 1e-9,
                "reach {} should equal the scale {}",
                m.reach.hi,
                d_scale
            );
        }
    }

    #[test]
    fn direct_sum_regularity_bound() {
        // length of the explicit tunnel is at most D (here D = max diameters)
        let a = classical(2, 2.0, "A");
        let b = classical(3, 1.0, "B");
        // block-diagonal embeddings into C(X x Y)
        let e = CStarAlgebra::new(vec![1; 6], "E").unwrap();
        let map_a: Vec<usize> = (0..6).map(|r| r / 3).collect();
        let map_b: Vec<usize> = (0..6).map(|r| r % 3).collect();
        let rho_a = StarMorphism::commutative_pullback(a.algebra(), &e, &map_a).unwrap();
        let rho_b = StarMorphism::commutative_pullback(b.algebra(), &e, &map_b).unwrap();
        let d = a.diameter().interval.hi.max(b.diameter().interval.hi);
        let t = build_direct_sum_tunnel(&a, &b, &rho_a, &rho_b, d).unwrap();
        let m = t.metrics();
        assert_eq!(m.status, Status::Exact);
        assert!(
            m.length.hi <= d + 1e-9,
            "length {} exceeds D {}",
            m.length.hi,
            d
        );
        assert_eq!(m.depth, Interval::zero());
    }

    #[test]
    fn reversal_shares_metrics_bit_for_bit() {
        let a = classical(2, 2.0, "A");
        let id = StarMorphism::identity(a.algebra());
        let t = build_direct_sum_tunnel(&a, &a, &id, &id, 2.0).unwrap();
        let m = t.metrics();
        let r = t.reversed();
        let mr = r.metrics();
        assert_eq!(m, mr);
        let rr = r.reversed();
        assert_eq!(rr.metrics(), m);
    }

    #[test]
    fn lift_through_identity_is_the_element_itself() {
        let qms = classical(3, 1.0, "X3");
        let t = build_identity_tunnel(&qms).unwrap();
        let mut v = RVec::zeros(3);
        v[0] = 0.0;
        v[1] = 1.0;
        v[2] = 2.0;
        let a = Element::from_sa_coords(qms.algebra(), &v);
        let la = qms.eval(&a).unwrap();
        let w = t.lift_element(&a, la).unwrap();
        assert!(operator_norm(&w.lift.sub(&a).unwrap()) < 1e-9);
        assert!(w.image_norm_ok && w.lift_norm_ok);
        assert!(w.lift_lipnorm <= la + 1e-9);
    }

    #[test]
    fn lift_through_direct_sum_satisfies_bounds() {
        let a = classical(2, 2.0, "A");
        let b = classical(2, 2.0, "B");
        let e = CStarAlgebra::new(vec![1, 1], "E").unwrap();
        let rho_a = StarMorphism::commutative_pullback(a.algebra(), &e, &[0, 1]).unwrap();
        let rho_b = StarMorphism::commutative_pullback(b.algebra(), &e, &[0, 1]).unwrap();
        let t = build_direct_sum_tunnel(&a, &b, &rho_a, &rho_b, 2.0).unwrap();
        let mut v = RVec::zeros(2);
        v[1] = 2.0;
        let elt = Element::from_sa_coords(a.algebra(), &v);
        let la = a.eval(&elt).unwrap();
        let w = t.lift_element(&elt, la + 0.5).unwrap();
        assert!(w.image_norm_ok && w.lift_norm_ok);
        // the radius-aware quotient condition
        assert!(w.lift_lipnorm <= la + t.admissibility().eps_lift + 1e-7);
    }

    #[test]
    fn target_diameter_of_identity_tunnel_is_zero() {
        let qms = classical(3, 1.0, "X3");
        let t = build_identity_tunnel(&qms).unwrap();
        let mut v = RVec::zeros(3);
        v[1] = 1.0;
        let a = Element::from_sa_coords(qms.algebra(), &v);
        let r = qms.eval(&a).unwrap();
        let rep = t.target_diameter_check(&a, r, 6, 3).unwrap();
        assert!(rep.spread < 1e-9);
        assert!(rep.spread_ok && rep.product_ok);
    }

    #[test]
    fn doubling_lipnorm_examples() {
        let qms = classical(2, 2.0, "X2");
        let gamma = 0.25;
        let doubled = build_doubling_lipnorm(&qms, gamma).unwrap();
        // diagonal elements recover the base seminorm
        let mut rng = crate::rng::seeded(9);
        for _ in 0..20 {
            let d = random_self_adjoint(qms.algebra(), &mut rng);
            let v = d.sa_coords().unwrap();
            let mut w = RVec::zeros(4);
            w[0] = v[0];
            w[1] = v[1];
            w[2] = v[0];
            w[3] = v[1];
            let pair = Element::from_sa_coords(doubled.algebra(), &w);
            let l1 = qms.eval(&d).unwrap();
            let l2 = doubled.eval(&pair).unwrap();
            assert!((l1 - l2).abs() < 1e-10);
        }
        // pullbacks of one state through the two projections stay within γ
        let phi = State::dirac(qms.algebra(), 0, 0).unwrap();
        let r = doubling_pullback_distance(&doubled, &qms, &phi, &MkConfig::default()).unwrap();
        assert_eq!(r.status, Status::Exact);
        assert!(r.value <= gamma + 1e-9);
    }

    #[test]
    fn doubling_third_atom_inactive_for_large_gamma() {
        let qms = classical(2, 2.0, "X2");
        let doubled = build_doubling_lipnorm(&qms, 1e6).unwrap();
        let mut rng = crate::rng::seeded(21);
        for _ in 0..20 {
            let d1 = random_self_adjoint(qms.algebra(), &mut rng);
            let d2 = random_self_adjoint(qms.algebra(), &mut rng);
            let v1 = d1.sa_coords().unwrap();
            let v2 = d2.sa_coords().unwrap();
            let mut w = RVec::zeros(4);
            w[0] = v1[0];
            w[1] = v1[1];
            w[2] = v2[0];
            w[3] = v2[1];
            let pair = Element::from_sa_coords(doubled.algebra(), &w);
            let expect = qms.eval(&d1).unwrap().max(qms.eval(&d2).unwrap());
            assert!((doubled.eval(&pair).unwrap() - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn doubling_tunnel_depth_contains_zero_and_reach_below_gamma() {
        let qms = classical(2, 2.0, "X2");
        let gamma = 0.5;
        let t = build_doubling_tunnel(&qms, gamma).unwrap();
        let m = t.metrics();
        assert!(m.depth.contains(0.0));
        assert!(m.reach.hi <= gamma + 1e-9);
        // the net route brackets the structural zero depth
        let (iv, _, _) = t.compute_depth_via_nets(0.4, &MkConfig::default()).unwrap();
        assert!(iv.lo <= 1e-9);
        assert!(iv.hi <= gamma + 2.0 * 0.4 + 1e-9);
    }
}
