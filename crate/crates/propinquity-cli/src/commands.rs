//! The batch commands behind each CLI subcommand. Each returns a report and
//! an exit class; all randomness is seeded through the global flag.

use std::sync::Arc;

use propinquity::error::Error;
use propinquity::journey::{
    build_chain_space, canonical_direct_sum_tunnel, Journey, PropinquityRegistry, TunnelClassFilter,
};
use propinquity::mk::MkConfig;
use propinquity::seminorm::check_leibniz;
use propinquity::tunnel::{build_identity_tunnel, Tunnel};
use propinquity::zoo::{
    correspondence_to_tunnel, gh_distance_exact, gh_distance_greedy, Correspondence,
};
use propinquity::{Interval, QuantumMetricSpace, State, Status};

use crate::config::{BuiltSpace, ChainConfig, SpaceConfig};
use crate::report::{Row, RunReport};

/// Exit classes per the interface contract: 0 pass, 1 certificate/solver
/// failure, 2 usage or parse.
pub enum Outcome {
    Pass(RunReport),
    CertificateFail(RunReport),
}

pub struct Globals {
    pub seed: u64,
    pub iters: usize,
    pub tol: f64,
    pub net_resolution: Option<f64>,
}

impl Globals {
    pub fn mk_config(&self) -> MkConfig {
        MkConfig {
            iters: self.iters,
            tol: self.tol,
            step_scale: None,
        }
    }

    fn resolution_for(&self, qms: &QuantumMetricSpace) -> f64 {
        self.net_resolution
            .unwrap_or_else(|| (0.05 * qms.diameter().interval.hi).max(1e-6))
    }
}

fn status_str(s: Status) -> String {
    s.to_string()
}

/// `check`: kernel, Leibniz and diameter certificates; nonzero exit iff any
/// certificate fails.
pub fn cmd_check(cfg: &SpaceConfig, g: &Globals) -> Result<Outcome, Error> {
    let mut rep = RunReport::new(format!("check {}", cfg.label()), g.seed, g.tol, g.iters);
    match cfg.build() {
        Ok(space) => {
            let kernel = space.qms.kernel_certificate();
            rep.push(Row::scalar("kernel_dim", kernel.kernel_dim as f64, "exact"));
            rep.push(Row::flag("kernel_pass", kernel.passed));
            let leib = check_leibniz(&space.qms, 1000, g.seed);
            rep.push(
                Row::scalar("leibniz_violation", leib.max_violation, "exact")
                    .with_note(format!("trials={}", leib.trials)),
            );
            let leib_ok = leib.max_violation <= 1e-9;
            rep.push(Row::flag("leibniz_pass", leib_ok));
            let d = space.qms.diameter();
            rep.push(Row::interval(
                "diameter",
                d.interval.lo,
                d.interval.hi,
                status_str(d.status),
            ));
            if kernel.passed && leib_ok {
                Ok(Outcome::Pass(rep))
            } else {
                Ok(Outcome::CertificateFail(rep))
            }
        }
        Err(Error::Certificate(msg)) => {
            rep.push(Row::flag("certificates", false).with_note(msg));
            Ok(Outcome::CertificateFail(rep))
        }
        Err(e) => Err(e),
    }
}

fn parse_state(spec: &str, qms: &Arc<QuantumMetricSpace>) -> Result<State, Error> {
    let alg = qms.algebra();
    if let Some(rest) = spec.strip_prefix("dirac:") {
        let idx: usize = rest
            .parse()
            .map_err(|_| Error::Domain(format!("bad dirac index {rest}")))?;
        return State::dirac(alg, idx, 0);
    }
    if spec == "mixed" {
        return Ok(State::maximally_mixed(alg));
    }
    if let Some(rest) = spec.strip_prefix("weights:") {
        if !alg.is_commutative() {
            return Err(Error::Domain(
                "weight-literal states need a commutative algebra".into(),
            ));
        }
        let weights: Vec<f64> = rest
            .split(',')
            .map(|w| w.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Error::Domain(format!("bad weight list {rest}")))?;
        let densities = (0..alg.n_blocks())
            .map(|_| propinquity::linalg::CMat::identity(1, 1))
            .collect();
        return State::new(alg.clone(), weights, densities);
    }
    Err(Error::Domain(format!(
        "unknown state literal {spec}; use dirac:<i>, mixed, or weights:w1,w2,..."
    )))
}

/// `dist`: one MK distance row with its provenance.
pub fn cmd_dist(
    cfg: &SpaceConfig,
    state_a: &str,
    state_b: &str,
    g: &Globals,
) -> Result<Outcome, Error> {
    let space = cfg.build()?;
    let phi = parse_state(state_a, &space.qms)?;
    let psi = parse_state(state_b, &space.qms)?;
    let r = propinquity::mk::mk_distance(&space.qms, &phi, &psi, &g.mk_config())?;
    let mut rep = RunReport::new(
        format!("dist {} {state_a} {state_b}", cfg.label()),
        g.seed,
        g.tol,
        g.iters,
    );
    rep.push(
        Row::scalar("mk", r.value, status_str(r.status)).with_note(format!(
            "iterations={} residual={:.3e}",
            r.iterations, r.residual
        )),
    );
    Ok(Outcome::Pass(rep))
}

pub enum TunnelConstruction {
    Identity,
    DirectSum { d_scale: Option<f64> },
    Correspondence { epsilon: Option<f64> },
}

fn build_tunnel(
    a: &BuiltSpace,
    b: &BuiltSpace,
    construction: &TunnelConstruction,
) -> Result<(Tunnel, Vec<Row>), Error> {
    let mut extra = Vec::new();
    let tunnel = match construction {
        TunnelConstruction::Identity => {
            if a.label != b.label {
                return Err(Error::Domain(
                    "the identity construction needs the same space twice".into(),
                ));
            }
            build_identity_tunnel(&a.qms)?
        }
        TunnelConstruction::DirectSum { d_scale } => {
            canonical_direct_sum_tunnel(&a.qms, &b.qms, *d_scale)?
        }
        TunnelConstruction::Correspondence { epsilon } => {
            let (Some(mx), Some(my)) = (&a.metric, &b.metric) else {
                return Err(Error::Domain(
                    "the correspondence construction needs metric-space configs".into(),
                ));
            };
            let (dis, rel, exact) = if mx.n() * my.n() <= 16 {
                let (gh, rel) = gh_distance_exact(mx, my)?;
                (2.0 * gh, rel, true)
            } else {
                let (gh, rel) = gh_distance_greedy(mx, my);
                (2.0 * gh, rel, false)
            };
            extra.push(
                Row::scalar("distortion", dis, if exact { "exact" } else { "heuristic" })
                    .with_note(format!("relation_size={}", rel.pairs.len())),
            );
            let eps = epsilon.unwrap_or((dis / 2.0).max(1e-9));
            extra.push(Row::scalar("epsilon", eps, "exact"));
            correspondence_to_tunnel(mx, &a.qms, my, &b.qms, &rel, eps)?
        }
    };
    Ok((tunnel, extra))
}

/// `tunnel`: reach, depth, length intervals plus the admissibility slack.
pub fn cmd_tunnel(
    cfg_a: &SpaceConfig,
    cfg_b: &SpaceConfig,
    construction: &TunnelConstruction,
    g: &Globals,
) -> Result<Outcome, Error> {
    let a = cfg_a.build()?;
    let b = cfg_b.build()?;
    let (tunnel, extra) = build_tunnel(&a, &b, construction)?;
    let eps = g.resolution_for(&tunnel.carrier().clone());
    let m = tunnel.measure(eps, &g.mk_config())?;
    let mut rep = RunReport::new(
        format!("tunnel {} {}", a.label, b.label),
        g.seed,
        g.tol,
        g.iters,
    );
    rep.net_resolution = Some(m.net_resolution);
    for r in extra {
        rep.push(r);
    }
    rep.push(Row::interval(
        "reach",
        m.reach.lo,
        m.reach.hi,
        status_str(m.status),
    ));
    rep.push(Row::interval(
        "depth",
        m.depth.lo,
        m.depth.hi,
        status_str(m.status),
    ));
    rep.push(Row::interval(
        "length",
        m.length.lo,
        m.length.hi,
        status_str(m.status),
    ));
    rep.push(
        Row::scalar("eps_lift", tunnel.admissibility().eps_lift, "exact")
            .with_note(format!("probes={}", tunnel.admissibility().probes)),
    );
    if tunnel.d_scale_warning {
        rep.push(
            Row::flag("d_scale_at_least_diameters", false)
                .with_note("scale below the diameter estimates"),
        );
    }
    Ok(Outcome::Pass(rep))
}

/// `journey`: best registered journey bound between the two spaces, seeding
/// the registry with the correspondence tunnel when the metric data allows.
/// A registry document, when given, is imported first and re-exported with
/// the new bound afterwards.
pub fn cmd_journey(
    cfg_a: &SpaceConfig,
    cfg_b: &SpaceConfig,
    registry_path: Option<&str>,
    g: &Globals,
) -> Result<Outcome, Error> {
    let a = cfg_a.build()?;
    let b = cfg_b.build()?;
    let mut reg = PropinquityRegistry::new(TunnelClassFilter::All);
    reg.register_space(a.qms.clone())?;
    reg.register_space(b.qms.clone())?;
    if let Some(path) = registry_path {
        if let Ok(doc) = std::fs::read_to_string(path) {
            reg.import_bounds(&doc)?;
        }
    }
    if let (Some(mx), Some(my)) = (&a.metric, &b.metric) {
        if mx.n() * my.n() <= 16 && a.label != b.label {
            let (gh, rel) = gh_distance_exact(mx, my)?;
            let eps = (gh).max(1e-9);
            let t = correspondence_to_tunnel(mx, &a.qms, my, &b.qms, &rel, eps)?;
            reg.register_journey(Journey::single(t))?;
        }
    }
    let (bound, status, note) = reg.best_known(&a.label, &b.label)?;
    let mut rep = RunReport::new(
        format!("journey {} {}", a.label, b.label),
        g.seed,
        g.tol,
        g.iters,
    );
    rep.push(Row::interval("bound", bound.lo, bound.hi, status_str(status)).with_note(note));
    if let Some(path) = registry_path {
        let doc = reg.export_bounds()?;
        std::fs::write(path, doc)
            .map_err(|e| Error::Structure(format!("cannot write registry {path}: {e}")))?;
    }
    Ok(Outcome::Pass(rep))
}

/// `converge`: journey bounds for `(C(Z_k), C(Z_kmax))` over the listed `k`,
/// with the monotonicity and `π/k` comparison flags.
pub fn cmd_converge(k_list: &[usize], k_max: usize, g: &Globals) -> Result<Outcome, Error> {
    if k_list.is_empty() || k_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("k list must be strictly ascending".into()));
    }
    for &k in k_list {
        if k == 0 || k_max % k != 0 {
            return Err(Error::Domain(format!("{k_max} is not a multiple of {k}")));
        }
    }
    let z_max = propinquity::zoo::circle_subgroup_space(k_max)?;
    let m_max = propinquity::zoo::circle_metric(k_max)?;
    let mut rep = RunReport::new(format!("converge k_max={k_max}"), g.seed, g.tol, g.iters);
    let slack = g.net_resolution.unwrap_or(0.0);
    let mut bounds: Vec<Interval> = Vec::new();
    for &k in k_list {
        let bound = if k == k_max {
            let t = build_identity_tunnel(&z_max)?;
            Journey::single(t).length()
        } else {
            let zk = propinquity::zoo::circle_subgroup_space(k)?;
            let mk_metric = propinquity::zoo::circle_metric(k)?;
            let rel = Correspondence::circle_refinement(k, k_max)?;
            let dis = rel.distortion(&mk_metric, &m_max);
            let t = correspondence_to_tunnel(
                &mk_metric,
                &zk,
                &m_max,
                &z_max,
                &rel,
                (dis / 2.0).max(1e-12),
            )?;
            Journey::single(t).length()
        };
        let budget = std::f64::consts::PI / k as f64 + 4.0 * slack;
        rep.push(
            Row::interval(format!("k{k}"), bound.lo, bound.hi, "exact")
                .with_note(format!("le_pi_over_k={}", bound.hi <= budget + 1e-12)),
        );
        bounds.push(bound);
    }
    let non_increasing = bounds
        .windows(2)
        .all(|w| w[1].hi <= w[0].hi + 2.0 * slack + 1e-12);
    rep.push(Row::flag("non_increasing", non_increasing));
    Ok(Outcome::Pass(rep))
}

/// `chain`: truncated chain space diameter against the uniform bound.
pub fn cmd_chain(chain: &ChainConfig, n: Option<usize>, g: &Globals) -> Result<Outcome, Error> {
    if chain.spaces.len() < 2 {
        return Err(Error::Domain("a chain needs at least two spaces".into()));
    }
    let spaces: Vec<BuiltSpace> = chain
        .spaces
        .iter()
        .map(|c| c.build())
        .collect::<Result<_, _>>()?;
    let mut tunnels = Vec::new();
    for w in spaces.windows(2) {
        tunnels.push(Arc::new(canonical_direct_sum_tunnel(
            &w[0].qms, &w[1].qms, None,
        )?));
    }
    let n = n.unwrap_or(tunnels.len() - 1);
    let slack = 4.0 * g.net_resolution.unwrap_or(0.0);
    let chain_space = build_chain_space(&tunnels, n, slack)?;
    let mut rep = RunReport::new(format!("chain n={n}"), g.seed, g.tol, g.iters);
    rep.push(Row::interval(
        "chain_diameter",
        chain_space.diameter.lo,
        chain_space.diameter.hi,
        status_str(chain_space.diameter_status),
    ));
    rep.push(Row::scalar("bound_rhs", chain_space.bound_rhs, "exact"));
    rep.push(Row::flag("bound_ok", chain_space.bound_ok));
    rep.push(Row::flag(
        "kernel_pass",
        chain_space.kernel_certificate().passed,
    ));
    rep.push(Row::scalar(
        "subspace_dim",
        chain_space.subspace_dim() as f64,
        "exact",
    ));
    if chain_space.bound_ok && chain_space.kernel_certificate().passed {
        Ok(Outcome::Pass(rep))
    } else {
        Ok(Outcome::CertificateFail(rep))
    }
}

/// `gh`: exhaustive Gromov-Hausdorff value, or the flagged greedy bound when
/// the instance is over the exhaustive budget.
pub fn cmd_gh(cfg_a: &SpaceConfig, cfg_b: &SpaceConfig, g: &Globals) -> Result<Outcome, Error> {
    let a = cfg_a.build()?;
    let b = cfg_b.build()?;
    let (Some(mx), Some(my)) = (&a.metric, &b.metric) else {
        return Err(Error::Domain("gh needs metric-space configs".into()));
    };
    let mut rep = RunReport::new(
        format!("gh {} {}", a.label, b.label),
        g.seed,
        g.tol,
        g.iters,
    );
    match gh_distance_exact(mx, my) {
        Ok((v, rel)) => {
            rep.push(
                Row::scalar("gh", v, "exact")
                    .with_note(format!("relation_size={}", rel.pairs.len())),
            );
        }
        Err(Error::Resource(msg)) => {
            let (v, rel) = gh_distance_greedy(mx, my);
            rep.push(
                Row::scalar("gh_upper", v, "heuristic")
                    .with_note(format!("greedy fallback ({}): {msg}", rel.pairs.len())),
            );
        }
        Err(e) => return Err(e),
    }
    Ok(Outcome::Pass(rep))
}
