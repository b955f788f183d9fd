//! The Monge-Kantorovich metric on state spaces, with two solver routes.
//!
//! On function algebras (every block 1x1, every atom target commutative) the
//! dual optimization `sup{φ(a) - ψ(a) : L(a) ≤ 1}` is a linear program over
//! the polytope cut out by the atom rows, solved exactly by the dense simplex.
//! On matrix algebras the spectral-norm ball is not polyhedral; a switching
//! subgradient ascent returns a certified lower bound with the rescaled
//! feasible witness. Every downstream interval records which route ran.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::{functional_from_sigmas, CStarAlgebra, Element, StarMorphism, State};
use crate::error::{Error, Result};
use crate::interval::{Interval, Status};
use crate::linalg::{self, CMat, RMat, RVec};
use crate::seminorm::{AtomKind, DiameterEstimate, QuantumMetricSpace, SeminormSpec};
use crate::simplex::{self, LpOutcome, LpProblem, VarKind};

/// Solver knobs; the CLI exposes them as global flags.
#[derive(Debug, Clone, Copy)]
pub struct MkConfig {
    /// Subgradient iteration budget.
    pub iters: usize,
    /// Feasibility tolerance on `L(a) ≤ 1`.
    pub tol: f64,
    /// Optional override of the diminishing step scale.
    pub step_scale: Option<f64>,
}

impl Default for MkConfig {
    fn default() -> Self {
        MkConfig {
            iters: 5000,
            tol: 1e-9,
            step_scale: None,
        }
    }
}

/// Outcome of one MK evaluation.
#[derive(Debug, Clone)]
pub struct MkResult {
    pub value: f64,
    /// Feasible self-adjoint element attaining `value` (after rescaling).
    pub witness: Element,
    pub status: Status,
    pub iterations: usize,
    /// Last observed constraint violation `max(0, L(x) - 1)` of the raw iterate.
    pub residual: f64,
}

/// `mk_L(φ, ψ)` between two states of the same certified space.
pub fn mk_distance(
    qms: &QuantumMetricSpace,
    phi: &State,
    psi: &State,
    cfg: &MkConfig,
) -> Result<MkResult> {
    if !crate::algebra::same_algebra(phi.algebra(), qms.algebra())
        || !crate::algebra::same_algebra(psi.algebra(), qms.algebra())
    {
        return Err(Error::Structure(
            "states do not live on the space's algebra".into(),
        ));
    }
    mk_between_functionals(
        qms,
        &phi.functional_coords(),
        &psi.functional_coords(),
        None,
        cfg,
    )
}

/// Forces the switching-subgradient route even where the LP route applies.
/// The certified lower bound must never exceed the exact value; tests use
/// this entry to cross-check the two routes on commutative instances.
pub fn mk_distance_iterative(
    qms: &QuantumMetricSpace,
    phi: &State,
    psi: &State,
    cfg: &MkConfig,
) -> Result<MkResult> {
    let f_phi = phi.functional_coords();
    let f_psi = psi.functional_coords();
    let c = &f_phi - &f_psi;
    if c.norm() < 1e-14 {
        return Ok(MkResult {
            value: 0.0,
            witness: qms.algebra().zero(),
            status: Status::Exact,
            iterations: 0,
            residual: 0.0,
        });
    }
    Ok(mk_subgradient(qms.seminorm(), &c, &f_phi, None, cfg))
}

/// Functional-level entry point. `subspace`, when present, restricts the
/// optimization to `a = B z` (chain spaces); its columns must contain the unit.
pub fn mk_between_functionals(
    qms: &QuantumMetricSpace,
    f_phi: &RVec,
    f_psi: &RVec,
    subspace: Option<&RMat>,
    cfg: &MkConfig,
) -> Result<MkResult> {
    mk_raw(qms.seminorm(), f_phi, f_psi, subspace, cfg)
}

/// Same computation on a bare seminorm; chain spaces use it because their
/// kernel is trivial only within the compatibility subspace, so they are not
/// standalone certified spaces.
pub(crate) fn mk_raw(
    spec: &SeminormSpec,
    f_phi: &RVec,
    f_psi: &RVec,
    subspace: Option<&RMat>,
    cfg: &MkConfig,
) -> Result<MkResult> {
    let c = f_phi - f_psi;
    if c.norm() < 1e-14 {
        return Ok(MkResult {
            value: 0.0,
            witness: spec.algebra().zero(),
            status: Status::Exact,
            iterations: 0,
            residual: 0.0,
        });
    }
    if spec.lp_compatible() {
        mk_lp(spec, &c, f_phi, subspace)
    } else {
        Ok(mk_subgradient(spec, &c, f_phi, subspace, cfg))
    }
}

fn mk_lp(spec: &SeminormSpec, c: &RVec, pin: &RVec, subspace: Option<&RMat>) -> Result<MkResult> {
    let rows = spec.stacked_rows();
    let (rows, c_red, pin_red) = match subspace {
        Some(b) => (&rows * b, b.transpose() * c, b.transpose() * pin),
        None => (rows, c.clone(), pin.clone()),
    };
    let nvars = c_red.len();
    let mut lp = LpProblem::new(vec![VarKind::Free; nvars], c_red.iter().copied().collect());
    for m in 0..rows.nrows() {
        let r: Vec<f64> = rows.row(m).iter().copied().collect();
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        lp.leq(r, 1.0);
        lp.leq(neg, 1.0);
    }
    lp.eq(pin_red.iter().copied().collect(), 0.0);
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, solution } => {
            let coords = match subspace {
                Some(b) => b * &solution,
                None => solution,
            };
            let witness = Element::from_sa_coords(spec.algebra(), &coords);
            Ok(MkResult {
                value,
                witness,
                status: Status::Exact,
                iterations: 0,
                residual: 0.0,
            })
        }
        LpOutcome::Unbounded => Err(Error::Inconsistency(
            "MK linear program unbounded; the kernel certificate must be wrong".into(),
        )),
        LpOutcome::Infeasible => Err(Error::Inconsistency("MK linear program infeasible".into())),
    }
}

/// Switching subgradient ascent: objective steps while feasible, steps against
/// a supergradient of `L` (top eigenvector of the active atom's image) when
/// the constraint is violated, with diminishing steps `c/sqrt(t)`.
fn mk_subgradient(
    spec: &SeminormSpec,
    c: &RVec,
    pin: &RVec,
    subspace: Option<&RMat>,
    cfg: &MkConfig,
) -> MkResult {
    let ortho = subspace.map(linalg::orthonormalize_columns);
    let pin_eff = match &ortho {
        Some(q) => q * (q.transpose() * pin),
        None => pin.clone(),
    };
    let pin_norm_sq = pin_eff.dot(&pin_eff);
    let project = |v: &RVec| -> RVec {
        let v1 = match &ortho {
            Some(q) => q * (q.transpose() * v),
            None => v.clone(),
        };
        if pin_norm_sq > 0.0 {
            &v1 - &pin_eff * (pin_eff.dot(&v1) / pin_norm_sq)
        } else {
            v1
        }
    };
    let g_obj = project(c);

    // start from the rescaled objective direction: feasible and aligned
    let l_c = spec.eval_coords(&g_obj).max(1e-12);
    let mut x = &g_obj / l_c;
    let mut best_val = c.dot(&x);
    let mut best_x = x.clone();

    let scale = cfg.step_scale.unwrap_or_else(|| {
        let base = x.norm().max(1.0);
        base / g_obj.norm().max(1e-12)
    });

    let mut residual = 0.0;
    for t in 1..=cfg.iters {
        let eta = scale / (t as f64).sqrt();
        let lx = spec.eval_coords(&x);
        residual = (lx - 1.0).max(0.0);
        if lx <= 1.0 + cfg.tol {
            let val = c.dot(&x);
            if val > best_val {
                best_val = val;
                best_x = x.clone();
            }
            x += &g_obj * eta;
        } else {
            // rescaled iterate is always feasible; keep it as a candidate
            let val = c.dot(&x) / lx;
            if val > best_val {
                best_val = val;
                best_x = &x / lx;
            }
            let (active, _) = spec.active_atom(&x);
            let atom = &spec.atoms()[active];
            let img = atom.image_element(&x);
            // supergradient: sign(λ) v v* on the block carrying the norm
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
            let sigmas: Vec<CMat> = img
                .blocks()
                .iter()
                .enumerate()
                .map(|(b, m)| {
                    if b == b_star {
                        let vv = &v * v.adjoint();
                        vv * Complex64::new(lam.signum(), 0.0)
                    } else {
                        CMat::zeros(m.nrows(), m.ncols())
                    }
                })
                .collect();
            let f_sig = functional_from_sigmas(atom.target(), &sigmas);
            let g_con = project(&atom.map().tr_apply(&f_sig));
            let gn = g_con.norm();
            if gn > 1e-14 {
                x -= &g_con * (eta / gn);
            }
        }
    }
    // final polish: certify the witness
    let lw = spec.eval_coords(&best_x);
    if lw > 1.0 {
        best_x /= lw;
        best_val = c.dot(&best_x);
    }
    MkResult {
        value: best_val.max(0.0),
        witness: Element::from_sa_coords(spec.algebra(), &best_x),
        status: Status::CertifiedLowerBound,
        iterations: cfg.iters,
        residual,
    }
}

/// Exact distance (in `mk_L`) from the functional `p` to the convex hull of
/// the functionals `gens`, all living on the space's algebra. LP route only.
///
/// Uses the duality `sup{c·f : ‖Rf‖_∞ ≤ 1} = min{‖λ‖_1 : R^T λ = c}` to fold
/// the minimization over the hull into a single linear program.
pub fn dist_functional_to_hull(
    qms: &QuantumMetricSpace,
    p: &RVec,
    gens: &[RVec],
    subspace: Option<&RMat>,
) -> Result<f64> {
    dist_functional_to_hull_raw(qms.seminorm(), p, gens, subspace)
}

pub(crate) fn dist_functional_to_hull_raw(
    spec: &SeminormSpec,
    p: &RVec,
    gens: &[RVec],
    subspace: Option<&RMat>,
) -> Result<f64> {
    if !spec.lp_compatible() {
        return Err(Error::Structure(
            "exact hull distance needs the LP route".into(),
        ));
    }
    if gens.is_empty() {
        return Err(Error::Structure("empty generator family".into()));
    }
    let rows = spec.stacked_rows();
    let (rows, p_red, gens_red): (RMat, RVec, Vec<RVec>) = match subspace {
        Some(b) => (
            &rows * b,
            b.transpose() * p,
            gens.iter().map(|g| b.transpose() * g).collect(),
        ),
        None => (rows, p.clone(), gens.to_vec()),
    };
    let m = rows.nrows();
    let k = gens_red.len();
    let dim = p_red.len();
    // variables: λ+ (m), λ- (m), μ (k)
    let mut objective = vec![0.0; 2 * m + k];
    for v in objective.iter_mut().take(2 * m) {
        *v = -1.0;
    }
    let mut lp = LpProblem::new(vec![VarKind::NonNeg; 2 * m + k], objective);
    for i in 0..dim {
        let mut row = vec![0.0; 2 * m + k];
        for j in 0..m {
            let r = rows[(j, i)];
            row[j] = r;
            row[m + j] = -r;
        }
        for (j, g) in gens_red.iter().enumerate() {
            row[2 * m + j] = g[i];
        }
        lp.eq(row, p_red[i]);
    }
    let mut simplex_row = vec![0.0; 2 * m + k];
    for v in simplex_row.iter_mut().skip(2 * m) {
        *v = 1.0;
    }
    lp.eq(simplex_row, 1.0);
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(-value),
        LpOutcome::Infeasible => Err(Error::Inconsistency(
            "hull-distance program infeasible; functional outside the dual range".into(),
        )),
        LpOutcome::Unbounded => Err(Error::Inconsistency(
            "hull-distance program unbounded".into(),
        )),
    }
}

/// A finite net of states with a resolution claim.
#[derive(Debug, Clone)]
pub struct StateNet {
    pub states: Vec<State>,
    pub resolution: f64,
    pub certified: bool,
    pub source: String,
}

const MAX_NET_STATES: usize = 20_000;

/// Worst-case ℓ1 rounding factor for the simplex grid on `n` coordinates:
/// rounding down to the grid and redistributing the deficit moves mass at most
/// `2 m (n - m) / n · δ` for the worst split `m`.
fn simplex_grid_factor(n: usize) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let m = n / 2;
    let worst = (m * (n - m)).max((n / 2 + n % 2) * (n - n / 2 - n % 2));
    2.0 * worst as f64 / n as f64
}

fn compositions(total: usize, parts: usize, cap: usize) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; parts];
    fn rec(
        idx: usize,
        rem: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        cap: usize,
    ) -> bool {
        if out.len() > cap {
            return false;
        }
        if idx + 1 == cur.len() {
            cur[idx] = rem;
            out.push(cur.clone());
            return true;
        }
        for v in 0..=rem {
            cur[idx] = v;
            if !rec(idx + 1, rem - v, cur, out, cap) {
                return false;
            }
        }
        true
    }
    if rec(0, total, &mut cur, &mut out, cap) {
        Some(out)
    } else {
        None
    }
}

/// Builds a net of the full state space at target MK resolution `epsilon`.
///
/// Function algebras get a certified simplex grid; a mix of 1x1 and 2x2
/// blocks gets a certified weight-grid x Bloch-grid product; anything with a
/// block of size 3 or larger falls back to a flagged heuristic sample.
pub fn build_state_net(qms: &QuantumMetricSpace, epsilon: f64) -> Result<StateNet> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "net resolution must be positive, got {epsilon}"
        )));
    }
    let alg = qms.algebra().clone();
    let label = format!("full:{}", alg.label());
    let diam = qms.diameter();

    if alg.is_commutative() {
        let n = alg.n_blocks();
        if n == 1 || diam.interval.hi == 0.0 {
            return Ok(StateNet {
                states: vec![State::dirac(&alg, 0, 0)?],
                resolution: 0.0,
                certified: true,
                source: label,
            });
        }
        let factor = simplex_grid_factor(n);
        let q = ((diam.interval.hi * factor) / (2.0 * epsilon))
            .ceil()
            .max(1.0) as usize;
        let Some(grid) = compositions(q, n, MAX_NET_STATES) else {
            let min_eps = diam.interval.hi * factor / 2.0; // q = 1 still too big
            return Err(Error::Resource(format!(
                "net at resolution {epsilon} needs more than {MAX_NET_STATES} states; \
                 coarsest achievable here is about {min_eps:.4}"
            )));
        };
        let states = grid
            .into_iter()
            .map(|k| {
                let weights: Vec<f64> = k.iter().map(|&v| v as f64 / q as f64).collect();
                let densities = (0..n).map(|_| CMat::identity(1, 1)).collect();
                State::new(alg.clone(), weights, densities)
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(StateNet {
            states,
            resolution: epsilon,
            certified: diam.status != Status::Heuristic,
            source: label,
        });
    }

    let max_block = alg.block_dims().iter().copied().max().unwrap();
    let radius = diam.interval.hi.max(1e-9);
    if max_block <= 2 {
        // budget: half the resolution to the block weights, half to densities
        let n = alg.n_blocks();
        let mut block_nets: Vec<Vec<CMat>> = Vec::with_capacity(n);
        let trace_mesh = epsilon / (2.0 * radius);
        for &nb in alg.block_dims() {
            if nb == 1 {
                block_nets.push(vec![CMat::identity(1, 1)]);
            } else {
                block_nets.push(bloch_net(trace_mesh));
            }
        }
        let weight_grids = if n == 1 {
            vec![vec![1.0]]
        } else {
            let factor = simplex_grid_factor(n);
            let q = ((2.0 * radius * factor) / epsilon).ceil().max(1.0) as usize;
            match compositions(q, n, MAX_NET_STATES) {
                Some(g) => g
                    .into_iter()
                    .map(|k| k.iter().map(|&v| v as f64 / q as f64).collect())
                    .collect(),
                None => {
                    return Err(Error::Resource(
                        "weight grid exceeds the net state budget".into(),
                    ))
                }
            }
        };
        let mut total: usize = weight_grids.len();
        for b in &block_nets {
            total = total.saturating_mul(b.len());
        }
        if total > MAX_NET_STATES {
            // subsample deterministically and drop the certification flag
            let states = sampled_states(&alg, MAX_NET_STATES.min(512), 0x6e6574)?;
            return Ok(StateNet {
                states,
                resolution: epsilon,
                certified: false,
                source: label,
            });
        }
        let mut states = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for w in &weight_grids {
            loop {
                let densities: Vec<CMat> = idx
                    .iter()
                    .zip(&block_nets)
                    .map(|(&i, net)| net[i].clone())
                    .collect();
                states.push(State::new(alg.clone(), w.clone(), densities)?);
                // odometer over block net choices
                let mut carry = true;
                for (i, net) in idx.iter_mut().zip(&block_nets) {
                    if carry {
                        *i += 1;
                        if *i >= net.len() {
                            *i = 0;
                        } else {
                            carry = false;
                        }
                    }
                }
                if carry {
                    break;
                }
            }
        }
        let certified = diam.status != Status::Heuristic;
        return Ok(StateNet {
            states,
            resolution: epsilon,
            certified,
            source: label,
        });
    }

    // blocks of size ≥ 3: random pure states plus mixing, heuristic
    let states = sampled_states(&alg, 256, 0x6e6574)?;
    Ok(StateNet {
        states,
        resolution: epsilon,
        certified: false,
        source: label,
    })
}

/// Cubic Bloch-ball lattice with trace-norm covering radius ≤ `mesh`,
/// built by clamping cube lattice points into the ball.
fn bloch_net(mesh: f64) -> Vec<CMat> {
    let h = (mesh * 2.0 / 3f64.sqrt()).min(2.0);
    let steps = (1.0 / h).ceil() as i64;
    let mut out = Vec::new();
    for ix in -steps..=steps {
        for iy in -steps..=steps {
            for iz in -steps..=steps {
                let mut r = [ix as f64 * h, iy as f64 * h, iz as f64 * h];
                let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
                if norm > 1.0 {
                    // keep boundary coverage by projecting just-outside points
                    if norm > 1.0 + h * 3f64.sqrt() {
                        continue;
                    }
                    for v in r.iter_mut() {
                        *v /= norm;
                    }
                }
                let mut d = CMat::zeros(2, 2);
                d[(0, 0)] = Complex64::new((1.0 + r[2]) / 2.0, 0.0);
                d[(1, 1)] = Complex64::new((1.0 - r[2]) / 2.0, 0.0);
                d[(0, 1)] = Complex64::new(r[0] / 2.0, -r[1] / 2.0);
                d[(1, 0)] = Complex64::new(r[0] / 2.0, r[1] / 2.0);
                out.push(d);
            }
        }
    }
    out
}

fn sampled_states(alg: &Arc<CStarAlgebra>, count: usize, seed: u64) -> Result<Vec<State>> {
    let mut rng = crate::rng::seeded(seed);
    let mut states = vec![State::maximally_mixed(alg)];
    for b in 0..alg.n_blocks() {
        for i in 0..alg.block_dims()[b] {
            states.push(State::dirac(alg, b, i)?);
        }
    }
    while states.len() < count {
        let weights = random_simplex_point(alg.n_blocks(), &mut rng);
        let densities = alg
            .block_dims()
            .iter()
            .map(|&n| random_density(n, &mut rng))
            .collect();
        states.push(State::new(alg.clone(), weights, densities)?);
    }
    Ok(states)
}

fn random_simplex_point<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(rng.random::<f64>().max(1e-12)).ln())
        .collect();
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    w
}

fn random_density<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let mut g = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
    }
    let d = &g * g.adjoint();
    let tr = d.trace().re.max(1e-12);
    d * Complex64::new(1.0 / tr, 0.0)
}

/// Pullback of every net state through `pi` (the net then covers the image of
/// the dual map inside the source's state space).
pub fn pushforward_net(net: &StateNet, pi: &StarMorphism) -> Result<StateNet> {
    let states = net
        .states
        .iter()
        .map(|s| pi.pull_state(s))
        .collect::<Result<Vec<State>>>()?;
    Ok(StateNet {
        states,
        resolution: net.resolution,
        certified: net.certified,
        source: format!("pushforward:{}", net.source),
    })
}

/// Discrete Hausdorff distance between two nets inside the same ambient
/// space, bracketed by the net resolutions.
pub fn hausdorff_distance(
    net_a: &StateNet,
    net_b: &StateNet,
    ambient: &QuantumMetricSpace,
    cfg: &MkConfig,
) -> Result<(Interval, Status)> {
    if net_a.states.is_empty() || net_b.states.is_empty() {
        return Err(Error::Structure(
            "Hausdorff distance of an empty net".into(),
        ));
    }
    for s in net_a.states.iter().chain(net_b.states.iter()) {
        if !crate::algebra::same_algebra(s.algebra(), ambient.algebra()) {
            return Err(Error::Structure(
                "net state outside the ambient algebra".into(),
            ));
        }
    }
    let mut status = Status::Interval;
    let mut d = vec![vec![0.0; net_b.states.len()]; net_a.states.len()];
    for (i, p) in net_a.states.iter().enumerate() {
        for (j, q) in net_b.states.iter().enumerate() {
            let r = mk_distance(ambient, p, q, cfg)?;
            if r.status == Status::CertifiedLowerBound {
                status = Status::Heuristic;
            }
            d[i][j] = r.value;
        }
    }
    let sup_ab = d
        .iter()
        .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let sup_ba = (0..net_b.states.len())
        .map(|j| d.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let (ea, eb) = (net_a.resolution, net_b.resolution);
    let lo = (sup_ab - eb).max(sup_ba - ea).max(0.0);
    let hi = (ea + sup_ab).max(eb + sup_ba);
    if !(net_a.certified && net_b.certified) {
        status = Status::Heuristic;
    }
    Ok((Interval::nonneg(lo, hi), status))
}

/// Max pairwise MK over the net, widened by twice the resolution.
pub fn diameter_estimate(
    qms: &QuantumMetricSpace,
    net: &StateNet,
    cfg: &MkConfig,
) -> Result<(Interval, Status)> {
    let mut status = if net.certified {
        Status::Interval
    } else {
        Status::Heuristic
    };
    let mut best: f64 = 0.0;
    for (i, p) in net.states.iter().enumerate() {
        for q in net.states.iter().skip(i + 1) {
            let r = mk_distance(qms, p, q, cfg)?;
            if r.status == Status::CertifiedLowerBound {
                status = Status::Heuristic;
            }
            best = best.max(r.value);
        }
    }
    Ok((Interval::new(best, best + 2.0 * net.resolution), status))
}

/// Build-time diameter: exact over Dirac pairs on the LP route, an averaging
/// bound for pure action seminorms, a flagged sample otherwise.
pub(crate) fn diameter_auto(qms: &QuantumMetricSpace) -> DiameterEstimate {
    let alg = qms.algebra();
    if qms.lp_compatible() {
        let n = alg.n_blocks();
        let cfg = MkConfig::default();
        let mut best: f64 = 0.0;
        let diracs: Vec<RVec> = (0..n)
            .map(|i| {
                State::dirac(alg, i, 0)
                    .expect("in range")
                    .functional_coords()
            })
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                if let Ok(r) = mk_between_functionals(qms, &diracs[i], &diracs[j], None, &cfg) {
                    best = best.max(r.value);
                }
            }
        }
        return DiameterEstimate {
            interval: Interval::point(best),
            status: Status::Exact,
        };
    }
    // pure group-action seminorm: averaging over the orbit pins every
    // Lipschitz element within the mean length of the unit's multiples
    let action_lengths: Option<Vec<f64>> = qms
        .seminorm()
        .atoms()
        .iter()
        .map(|a| match a.kind() {
            AtomKind::ActionDifference { weight, .. } => Some(1.0 / weight),
            _ => None,
        })
        .collect();
    if let Some(lengths) = action_lengths {
        let group_order = lengths.len() + 1;
        let hi = 2.0 * lengths.iter().sum::<f64>() / group_order as f64;
        return DiameterEstimate {
            interval: Interval::new(0.0, hi),
            status: Status::Interval,
        };
    }
    // flagged heuristic: best MK value over a few sampled states
    let cfg = MkConfig {
        iters: 1500,
        ..MkConfig::default()
    };
    let states = sampled_states(alg, 6, 0x64696d).unwrap_or_default();
    let mut best: f64 = 0.0;
    for (i, p) in states.iter().enumerate() {
        for q in states.iter().skip(i + 1) {
            if let Ok(r) = mk_distance(qms, p, q, &cfg) {
                best = best.max(r.value);
            }
        }
    }
    DiameterEstimate {
        interval: Interval::point(best),
        status: Status::Heuristic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seminorm::{SeminormAtom, SeminormSpec};

    fn classical_line(ms: &[f64]) -> Arc<QuantumMetricSpace> {
        // path metric space 0 - 1 - ... with given consecutive distances
        let n = ms.len() + 1;
        let alg = CStarAlgebra::new(vec![1; n], "line").unwrap();
        let mut atoms = Vec::new();
        let mut cum = vec![0.0; n];
        for i in 1..n {
            cum[i] = cum[i - 1] + ms[i - 1];
        }
        for i in 0..n {
            for j in i + 1..n {
                atoms.push(SeminormAtom::pair_difference(&alg, i, j, cum[j] - cum[i]).unwrap());
            }
        }
        QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms).unwrap()).unwrap()
    }

    #[test]
    fn dirac_distance_on_two_points() {
        let qms = classical_line(&[2.0]);
        let alg = qms.algebra();
        let dx = State::dirac(alg, 0, 0).unwrap();
        let dy = State::dirac(alg, 1, 0).unwrap();
        let r = mk_distance(&qms, &dx, &dy, &MkConfig::default()).unwrap();
        assert_eq!(r.status, Status::Exact);
        assert!((r.value - 2.0).abs() < 1e-9);
        // witness reproduces the value and is feasible
        let wv = dx.eval(&r.witness).unwrap().re - dy.eval(&r.witness).unwrap().re;
        assert!((wv - r.value).abs() < 1e-8);
        assert!(qms.eval(&r.witness).unwrap() <= 1.0 + 1e-9);
    }

    #[test]
    fn mixed_versus_middle_dirac_on_three_point_line() {
        // transport to a Dirac is forced: cost = Σ μ_x m(x, mid) = 1
        let qms = classical_line(&[1.0, 1.0]);
        let alg = qms.algebra();
        let ends = State::new(
            alg.clone(),
            vec![0.5, 0.0, 0.5],
            vec![
                CMat::identity(1, 1),
                CMat::identity(1, 1),
                CMat::identity(1, 1),
            ],
        )
        .unwrap();
        let mid = State::dirac(alg, 1, 0).unwrap();
        let r = mk_distance(&qms, &ends, &mid, &MkConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mk_of_state_with_itself_is_zero() {
        let qms = classical_line(&[1.0, 2.0]);
        let phi = State::dirac(qms.algebra(), 2, 0).unwrap();
        let r = mk_distance(&qms, &phi, &phi, &MkConfig::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn exact_diameter_matches_metric() {
        let qms = classical_line(&[1.0, 1.0]);
        let d = qms.diameter();
        assert_eq!(d.status, Status::Exact);
        assert!((d.interval.hi - 2.0).abs() < 1e-9);
    }

    #[test]
    fn two_point_net_counts_match_the_mesh_formula() {
        let qms = classical_line(&[2.0]);
        let net = build_state_net(&qms, 0.1).unwrap();
        // diam 2, ε = 0.1: grid q = diam·factor/(2ε) = 10, hence 11 weights
        assert_eq!(net.states.len(), 11);
        assert!(net.certified);
    }

    #[test]
    fn trivial_algebra_net_is_single_state() {
        let alg = CStarAlgebra::new(vec![1], "pt").unwrap();
        let atom = SeminormAtom::commutator(&alg, &[vec![0.0]], "zero").unwrap();
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg, vec![atom]).unwrap()).unwrap();
        let net = build_state_net(&qms, 0.25).unwrap();
        assert_eq!(net.states.len(), 1);
        assert_eq!(net.resolution, 0.0);
    }

    #[test]
    fn bloch_net_size_matches_count_oracle() {
        // count oracle from the mesh formula: lattice step h = 2·mesh/√3,
        // points of the cube lattice within (or just outside) the unit ball
        let mesh = 0.4f64;
        let net = bloch_net(mesh);
        let h = 2.0 * mesh / 3f64.sqrt();
        let steps = (1.0 / h).ceil() as i64;
        let mut expected = 0;
        for ix in -steps..=steps {
            for iy in -steps..=steps {
                for iz in -steps..=steps {
                    let n = ((ix * ix + iy * iy + iz * iz) as f64).sqrt() * h;
                    if n <= 1.0 + h * 3f64.sqrt() {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(net.len(), expected);
    }

    #[test]
    fn too_fine_a_net_is_a_resource_error_with_achievable_hint() {
        // 8 points at mesh 1e-4 needs far more states than the budget
        let alg = CStarAlgebra::new(vec![1; 8], "big").unwrap();
        let mut atoms = Vec::new();
        for i in 0..8 {
            for j in i + 1..8 {
                atoms.push(SeminormAtom::pair_difference(&alg, i, j, 1.0).unwrap());
            }
        }
        let qms = QuantumMetricSpace::try_new(SeminormSpec::new(alg, atoms).unwrap()).unwrap();
        match build_state_net(&qms, 1e-4) {
            Err(Error::Resource(msg)) => assert!(msg.contains("achievable")),
            other => panic!("expected a resource error, got {other:?}"),
        }
    }

    #[test]
    fn hausdorff_rejects_mixed_algebra_nets() {
        let a = classical_line(&[1.0]);
        let b = classical_line(&[1.0, 1.0]);
        let na = build_state_net(&a, 0.2).unwrap();
        let nb = build_state_net(&b, 0.2).unwrap();
        assert!(matches!(
            hausdorff_distance(&na, &nb, &a, &MkConfig::default()),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn shared_values_are_send_and_sync() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<CStarAlgebra>();
        assert_send_sync::<Element>();
        assert_send_sync::<State>();
        assert_send_sync::<StarMorphism>();
        assert_send_sync::<QuantumMetricSpace>();
        assert_send_sync::<crate::tunnel::Tunnel>();
        assert_send_sync::<crate::journey::Journey>();
    }

    #[test]
    fn hausdorff_of_identical_nets_is_tight_around_zero() {
        let qms = classical_line(&[2.0]);
        let net = build_state_net(&qms, 0.1).unwrap();
        let (iv, status) = hausdorff_distance(&net, &net, &qms, &MkConfig::default()).unwrap();
        assert_eq!(iv.lo, 0.0);
        assert!(iv.hi <= 2.0 * 0.1 + 1e-12);
        assert_eq!(status, Status::Interval);
    }

    #[test]
    fn hausdorff_of_singleton_diracs_centers_on_mk() {
        let qms = classical_line(&[2.0]);
        let alg = qms.algebra();
        let mk_net = |i: usize| StateNet {
            states: vec![State::dirac(alg, i, 0).unwrap()],
            resolution: 0.05,
            certified: true,
            source: "singleton".into(),
        };
        let (iv, _) =
            hausdorff_distance(&mk_net(0), &mk_net(1), &qms, &MkConfig::default()).unwrap();
        assert!(iv.contains(2.0));
        assert!((iv.lo - 1.95).abs() < 1e-9 && (iv.hi - 2.05).abs() < 1e-9);
    }

    #[test]
    fn diameter_estimate_brackets_truth() {
        let qms = classical_line(&[1.0, 1.0]);
        let net = build_state_net(&qms, 0.2).unwrap();
        let (iv, status) = diameter_estimate(&qms, &net, &MkConfig::default()).unwrap();
        assert!(iv.contains(2.0));
        assert_eq!(status, Status::Interval);
    }

    #[test]
    fn hull_distance_agrees_with_mk_on_singletons() {
        let qms = classical_line(&[1.0, 2.0]);
        let alg = qms.algebra();
        let p = State::dirac(alg, 0, 0).unwrap().functional_coords();
        let g = State::dirac(alg, 2, 0).unwrap().functional_coords();
        let d = dist_functional_to_hull(&qms, &p, &[g], None).unwrap();
        assert!((d - 3.0).abs() < 1e-9);
    }

    #[test]
    fn hull_distance_to_full_simplex_is_zero() {
        let qms = classical_line(&[1.0, 2.0]);
        let alg = qms.algebra();
        let gens: Vec<RVec> = (0..3)
            .map(|i| State::dirac(alg, i, 0).unwrap().functional_coords())
            .collect();
        let mixed = State::new(
            alg.clone(),
            vec![0.2, 0.5, 0.3],
            vec![CMat::identity(1, 1); 3],
        )
        .unwrap();
        let d = dist_functional_to_hull(&qms, &mixed.functional_coords(), &gens, None).unwrap();
        assert!(d.abs() < 1e-9);
    }
}
