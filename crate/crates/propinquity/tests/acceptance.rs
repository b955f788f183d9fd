//! Acceptance suite: every release criterion at its stated tolerance, one
//! pass/fail line per criterion (visible with `--nocapture`).
//!
//! The headline coincidence and completeness results are proofs, not numbers;
//! what is checked here are the explicit inequalities at desk scale.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng as _;

use propinquity::algebra::{operator_norm, random_self_adjoint, State};
use propinquity::journey::{
    build_chain_space, canonical_direct_sum_tunnel, Journey, PropinquityRegistry, TunnelClassFilter,
};
use propinquity::linalg::RMat;
use propinquity::mk::{self, MkConfig};
use propinquity::seminorm::{check_leibniz, QuantumMetricSpace};
use propinquity::tunnel::{
    build_doubling_lipnorm, build_identity_tunnel, doubling_pullback_distance, Tunnel,
};
use propinquity::zoo::{
    self, circle_metric, gh_distance_exact, space_from_finite_metric, Correspondence,
    FiniteMetricSpace, FuzzyTorusSpec,
};
use propinquity::Status;

fn seeded(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand_chacha::rand_core::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

fn random_metric<R: rand::Rng>(n: usize, rng: &mut R) -> FiniteMetricSpace {
    let mut m = RMat::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let w = 0.2 + 2.8 * rng.random::<f64>();
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[(i, k)] + m[(k, j)];
                if i != j && via < m[(i, j)] {
                    m[(i, j)] = via;
                }
            }
        }
    }
    FiniteMetricSpace::with_unit_labels(m, "p").expect("valid metric")
}

fn random_simplex_state<R: rand::Rng>(qms: &Arc<QuantumMetricSpace>, rng: &mut R) -> State {
    let n = qms.algebra().n_blocks();
    let mut w: Vec<f64> = (0..n)
        .map(|_| -(rng.random::<f64>().max(1e-12)).ln())
        .collect();
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
    let densities = qms
        .algebra()
        .block_dims()
        .iter()
        .map(|&k| propinquity::linalg::CMat::identity(k, k))
        .collect();
    State::new(qms.algebra().clone(), w, densities).expect("valid state")
}

fn report(id: u32, name: &str, started: Instant, detail: String) {
    println!(
        "acceptance {id:02} {name}: PASS ({:.2}s) {detail}",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_01_dirac_recovery() {
    let started = Instant::now();
    let mut rng = seeded(1);
    let cfg = MkConfig::default();
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = 2 + (trial % 5);
        let x = random_metric(n, &mut rng);
        let qms = space_from_finite_metric(&x, format!("dirac{trial}")).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                let di = State::dirac(qms.algebra(), i, 0).unwrap();
                let dj = State::dirac(qms.algebra(), j, 0).unwrap();
                let r = mk::mk_distance(&qms, &di, &dj, &cfg).unwrap();
                assert_eq!(r.status, Status::Exact);
                let err = (r.value - x.dist(i, j)).abs();
                worst = worst.max(err);
                assert!(err <= 1e-9, "space {trial}: |mk - m| = {err}");
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 10.0, "runtime {elapsed}s exceeds 10s");
    report(
        1,
        "dirac recovery",
        started,
        format!("50 spaces, worst |mk - m| = {worst:.2e}"),
    );
}

#[test]
fn acceptance_02_leibniz_suite() {
    let started = Instant::now();
    let mut rng = seeded(2);
    let mut spaces: Vec<Arc<QuantumMetricSpace>> = Vec::new();
    for n in [3usize, 4, 6] {
        let x = random_metric(n, &mut rng);
        spaces.push(space_from_finite_metric(&x, format!("leib{n}")).unwrap());
    }
    spaces.push(zoo::circle_subgroup_space(4).unwrap());
    spaces
        .push(zoo::fuzzy_torus_space(&FuzzyTorusSpec::untwisted(vec![2], "lt2").unwrap()).unwrap());
    spaces
        .push(zoo::fuzzy_torus_space(&FuzzyTorusSpec::untwisted(vec![3], "lt3").unwrap()).unwrap());
    let minus = Complex64::new(-1.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    spaces.push(
        zoo::fuzzy_torus_space(
            &FuzzyTorusSpec::new(vec![2, 2], vec![vec![one, minus], vec![minus, one]], "lp22")
                .unwrap(),
        )
        .unwrap(),
    );
    let w3 = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
    spaces.push(
        zoo::fuzzy_torus_space(
            &FuzzyTorusSpec::new(
                vec![3, 3],
                vec![vec![one, w3], vec![w3.conj(), one]],
                "lt33",
            )
            .unwrap(),
        )
        .unwrap(),
    );
    // a group-action space: cyclic rotation of four points with arc lengths
    let c4 = propinquity::CStarAlgebra::new(vec![1; 4], "lact#base").unwrap();
    let rot = |s: usize| {
        let perm: Vec<usize> = (0..4).map(|i| (i + s) % 4).collect();
        propinquity::StarMorphism::permute_points(&c4, &perm).unwrap()
    };
    spaces.push(
        zoo::group_action_space(&zoo::GroupActionSpec {
            label: "lact".into(),
            algebra: c4.clone(),
            elements: vec![
                ("r1".into(), rot(1), PI / 2.0),
                ("r2".into(), rot(2), PI),
                ("r3".into(), rot(3), PI / 2.0),
            ],
            table: Some(vec![
                vec![Some(1), Some(2), None],
                vec![Some(2), None, Some(0)],
                vec![None, Some(0), Some(1)],
            ]),
        })
        .unwrap(),
    );
    let mut worst: f64 = 0.0;
    for (i, qms) in spaces.iter().enumerate() {
        let rep = check_leibniz(qms, 1000, 42 + i as u64);
        worst = worst.max(rep.max_violation);
        assert!(
            rep.max_violation <= 1e-9,
            "space {} violates Leibniz by {}",
            qms.algebra().label(),
            rep.max_violation
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "runtime {elapsed}s exceeds 60s");
    report(
        2,
        "leibniz suite",
        started,
        format!(
            "{} spaces x 1000 pairs, worst violation {worst:.2e}",
            spaces.len()
        ),
    );
}

#[test]
fn acceptance_03_identity_tunnel() {
    let started = Instant::now();
    let mut rng = seeded(3);
    for trial in 0..5 {
        let x = random_metric(2 + (trial % 4), &mut rng);
        let qms = space_from_finite_metric(&x, format!("idt{trial}")).unwrap();
        let eps_net = 0.02 * qms.diameter().interval.hi;
        let t = build_identity_tunnel(&qms).unwrap();
        let m = t.measure(eps_net, &MkConfig::default()).unwrap();
        assert!(
            m.length.hi <= 2.0 * eps_net,
            "length {} > 2ε = {}",
            m.length.hi,
            2.0 * eps_net
        );
        let r = t.reversed();
        assert_eq!(r.metrics().reach, m.reach, "reach symmetric under reversal");
        assert_eq!(r.metrics().depth, m.depth);
        let rr = r.reversed();
        assert_eq!(rr.metrics(), t.metrics(), "double reversal exact");
    }
    report(
        3,
        "identity tunnel",
        started,
        "length ≤ 2ε_net, reversal exact".into(),
    );
}

fn twenty_random_classical_pairs() -> Vec<(Arc<QuantumMetricSpace>, Arc<QuantumMetricSpace>, Tunnel)>
{
    let mut rng = seeded(4);
    let mut out = Vec::new();
    for trial in 0..20 {
        let x = random_metric(2 + (trial % 4), &mut rng);
        let y = random_metric(2 + ((trial + 2) % 4), &mut rng);
        let qx = space_from_finite_metric(&x, format!("pA{trial}")).unwrap();
        let qy = space_from_finite_metric(&y, format!("pB{trial}")).unwrap();
        let t = canonical_direct_sum_tunnel(&qx, &qy, None).unwrap();
        out.push((qx, qy, t));
    }
    out
}

#[test]
fn acceptance_04_direct_sum_depth() {
    let started = Instant::now();
    for (qx, _qy, t) in twenty_random_classical_pairs() {
        let eps_net = 0.02 * qx.diameter().interval.hi;
        let m = t.metrics();
        assert!(m.depth.contains(0.0), "depth misses 0");
        assert!(
            m.depth.hi <= 2.0 * eps_net,
            "depth hi {} > {}",
            m.depth.hi,
            2.0 * eps_net
        );
    }
    report(
        4,
        "direct-sum depth",
        started,
        "20 pairs, depth = [0,0] exactly".into(),
    );
}

#[test]
fn acceptance_05_regularity_bound() {
    let started = Instant::now();
    let mut worst_gap = f64::NEG_INFINITY;
    for (qx, qy, t) in twenty_random_classical_pairs() {
        let d = qx.diameter().interval.hi.max(qy.diameter().interval.hi);
        let eps_net = 0.02 * d;
        let m = t.metrics();
        let budget = d + 4.0 * eps_net;
        worst_gap = worst_gap.max(m.length.hi - d);
        assert!(
            m.length.hi <= budget + 1e-9,
            "length {} exceeds max diameter {} + 4ε",
            m.length.hi,
            d
        );
    }
    report(
        5,
        "regularity bound",
        started,
        format!("20 pairs, worst length - maxdiam = {worst_gap:.2e}"),
    );
}

/// The shared 500-lift sweep for criteria 6 and 7.
fn lift_sweep() -> (Vec<(Tunnel, Vec<propinquity::LiftWitness>)>, usize) {
    let mut rng = seeded(67);
    let mut tunnels: Vec<Tunnel> = Vec::new();
    for trial in 0..3 {
        let x = random_metric(2 + trial, &mut rng);
        let qx = space_from_finite_metric(&x, format!("swI{trial}")).unwrap();
        tunnels.push(build_identity_tunnel(&qx).unwrap());
    }
    for trial in 0..4 {
        let x = random_metric(2 + (trial % 3), &mut rng);
        let y = random_metric(2 + ((trial + 1) % 3), &mut rng);
        let qx = space_from_finite_metric(&x, format!("swA{trial}")).unwrap();
        let qy = space_from_finite_metric(&y, format!("swB{trial}")).unwrap();
        tunnels.push(canonical_direct_sum_tunnel(&qx, &qy, None).unwrap());
    }
    for trial in 0..3 {
        let x = random_metric(2, &mut rng);
        let y = random_metric(3, &mut rng);
        let qx = space_from_finite_metric(&x, format!("swCx{trial}")).unwrap();
        let qy = space_from_finite_metric(&y, format!("swCy{trial}")).unwrap();
        let (gh, rel) = gh_distance_exact(&x, &y).unwrap();
        let t = zoo::correspondence_to_tunnel(&x, &qx, &y, &qy, &rel, gh.max(0.05)).unwrap();
        tunnels.push(t);
    }
    let mut total = 0;
    let mut out = Vec::new();
    for t in tunnels {
        let mut witnesses = Vec::new();
        while witnesses.len() < 50 {
            let mut a = random_self_adjoint(t.dom().algebra(), &mut rng);
            let la = t.dom().eval(&a).unwrap();
            if la > 1e-9 {
                a = a.scale(1.0 / la);
            }
            let la = t.dom().eval(&a).unwrap();
            let r = la + rng.random::<f64>();
            let w = t.lift_element(&a, r).unwrap();
            witnesses.push(w);
            total += 1;
        }
        out.push((t, witnesses));
    }
    (out, total)
}

#[test]
fn acceptance_06_fundamental_and_lift_estimates() {
    let started = Instant::now();
    let (sweep, total) = lift_sweep();
    assert!(total >= 500, "sweep produced {total} < 500 lifts");
    for (t, witnesses) in &sweep {
        let m = t.metrics();
        for w in witnesses {
            let na = operator_norm(&w.input);
            let nb = operator_norm(&w.image);
            let nd = operator_norm(&w.lift);
            assert!(
                nb <= na + w.radius * m.reach.hi + 1e-6,
                "fundamental estimate: ‖b‖ = {nb} > {na} + r·reach"
            );
            assert!(
                nd <= na + 2.0 * w.radius * m.length.hi + 1e-6,
                "lift bound: ‖d‖ = {nd} > {na} + 2r·length"
            );
            assert!(w.image_norm_ok && w.lift_norm_ok);
            // the image also stays within the radius for the quotient seminorm
            let lb = t.cod().eval(&w.image).unwrap();
            assert!(lb <= w.radius + t.admissibility().eps_lift + 1e-7);
        }
    }
    report(
        6,
        "fundamental and lift estimates",
        started,
        format!("{total} lifts checked"),
    );
}

#[test]
fn acceptance_07_target_diameter() {
    let started = Instant::now();
    let (sweep, _) = lift_sweep();
    let mut checks = 0;
    for (t, witnesses) in sweep.iter() {
        for w in witnesses.iter().take(3) {
            let rep = t
                .target_diameter_check(&w.input, w.radius, 6, 7 + checks as u64)
                .unwrap();
            assert!(
                rep.spread_ok,
                "target spread {} exceeds 2r·reach bound {}",
                rep.spread, rep.spread_bound
            );
            assert!(rep.product_ok, "product membership radius violated");
            checks += 1;
        }
    }
    report(
        7,
        "target diameter",
        started,
        format!("{checks} sampled target sets"),
    );
}

#[test]
fn acceptance_08_journey_algebra() {
    let started = Instant::now();
    let mut rng = seeded(8);
    let x = random_metric(3, &mut rng);
    let y = random_metric(2, &mut rng);
    let z = random_metric(4, &mut rng);
    let qx = space_from_finite_metric(&x, "JA").unwrap();
    let qy = space_from_finite_metric(&y, "JB").unwrap();
    let qz = space_from_finite_metric(&z, "JC").unwrap();
    let jxy = Journey::single(canonical_direct_sum_tunnel(&qx, &qy, None).unwrap());
    let jyz = Journey::single(canonical_direct_sum_tunnel(&qy, &qz, None).unwrap());
    // additivity: bit-level equality of the interval ends
    let composed = jxy.compose(&jyz).unwrap();
    assert_eq!(composed.length(), jxy.length().add(jyz.length()));
    // reversal invariance: bit-level
    assert_eq!(composed.reversed().length(), composed.length());
    assert_eq!(composed.reversed().reversed().length(), composed.length());

    let mut reg = PropinquityRegistry::new(TunnelClassFilter::All);
    reg.register_space(qx.clone()).unwrap();
    reg.register_space(qy.clone()).unwrap();
    reg.register_space(qz.clone()).unwrap();
    reg.register_journey(jxy.clone()).unwrap();
    reg.register_journey(jyz.clone()).unwrap();
    reg.auto_compose().unwrap();
    let (bxy, _) = reg.bound("JA", "JB").unwrap();
    let (byz, _) = reg.bound("JB", "JC").unwrap();
    let (bxz, _) = reg.bound("JA", "JC").unwrap();
    assert!(bxz.hi <= bxy.hi + byz.hi + 1e-12, "registry triangle");
    let (byx, _) = reg.bound("JB", "JA").unwrap();
    assert_eq!(bxy.hi, byx.hi, "registry symmetry exact");
    assert_eq!(bxy.lo, byx.lo);
    report(
        8,
        "journey algebra",
        started,
        "additivity, reversal, registry triangle".into(),
    );
}

#[test]
fn acceptance_09_doubling_construction() {
    let started = Instant::now();
    let mut rng = seeded(9);
    let gamma = 0.25;
    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let x = random_metric(2, &mut rng);
        let qms = space_from_finite_metric(&x, format!("dbl{trial}")).unwrap();
        let doubled = build_doubling_lipnorm(&qms, gamma).unwrap();
        let phi = random_simplex_state(&qms, &mut rng);
        let r = doubling_pullback_distance(&doubled, &qms, &phi, &MkConfig::default()).unwrap();
        assert_eq!(
            r.status,
            Status::Exact,
            "2-point classical carriers take the LP path"
        );
        assert!(r.residual <= 1e-9, "LP residual {}", r.residual);
        worst = worst.max(r.value);
        assert!(
            r.value <= gamma + r.residual + 1e-9,
            "mk between pullbacks {} exceeds γ = {gamma}",
            r.value
        );
    }
    report(
        9,
        "doubling construction",
        started,
        format!("20 states, worst pullback distance {worst:.6} ≤ γ = {gamma}"),
    );
}

#[test]
fn acceptance_10_circle_convergence() {
    let started = Instant::now();
    let k_max = 64;
    let eps_net = 0.05 * PI; // slack allowance; the route itself is exact
    let z_max = zoo::circle_subgroup_space(k_max).unwrap();
    let m_max = circle_metric(k_max).unwrap();
    let mut bounds = Vec::new();
    for k in [2usize, 4, 8, 16, 32] {
        let zk = zoo::circle_subgroup_space(k).unwrap();
        let mk_small = circle_metric(k).unwrap();
        let rel = Correspondence::circle_refinement(k, k_max).unwrap();
        let dis = rel.distortion(&mk_small, &m_max);
        // distortion arithmetic oracle: the refinement relation distorts by
        // at most (2π/k_max)·(k_max/k - 1) < 2π/k
        assert!(dis / 2.0 <= PI / k as f64 + 1e-12);
        let t =
            zoo::correspondence_to_tunnel(&mk_small, &zk, &m_max, &z_max, &rel, dis / 2.0).unwrap();
        let j = Journey::single(t);
        let b = j.length();
        assert!(
            b.hi <= PI / k as f64 + 4.0 * eps_net,
            "bound({k}) = {} exceeds π/{k} + 4ε",
            b.hi
        );
        bounds.push((k, b));
    }
    for w in bounds.windows(2) {
        assert!(
            w[1].1.hi <= w[0].1.hi + 2.0 * eps_net,
            "bounds must be non-increasing: {} then {}",
            w[0].1.hi,
            w[1].1.hi
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "runtime {elapsed}s exceeds 5 minutes");
    let detail: Vec<String> = bounds
        .iter()
        .map(|(k, b)| format!("k={k}: {:.4}", b.hi))
        .collect();
    report(10, "circle convergence", started, detail.join(", "));
}

#[test]
fn acceptance_11_chain_diameter() {
    let started = Instant::now();
    let mut rng = seeded(11);
    for trial in 0..10 {
        let legs = 2 + (trial % 3); // up to 4 tunnels
        let mut spaces = Vec::new();
        for s in 0..=legs {
            let x = random_metric(2 + (s % 2), &mut rng);
            spaces.push(space_from_finite_metric(&x, format!("ch{trial}s{s}")).unwrap());
        }
        let mut tunnels = Vec::new();
        for w in spaces.windows(2) {
            tunnels.push(Arc::new(
                canonical_direct_sum_tunnel(&w[0], &w[1], None).unwrap(),
            ));
        }
        let n = tunnels.len() - 1;
        let chain = build_chain_space(&tunnels, n, 0.0).unwrap();
        assert!(chain.kernel_certificate().passed);
        assert_eq!(chain.diameter_status, Status::Exact);
        assert!(
            chain.bound_ok,
            "chain {trial}: diam {} exceeds rhs {}",
            chain.diameter.hi, chain.bound_rhs
        );
    }
    report(
        11,
        "chain diameter",
        started,
        "10 chains within diam₀ + 4Σλ".into(),
    );
}

#[test]
fn acceptance_12_gh_oracle() {
    let started = Instant::now();
    let two = |m: f64| {
        let mut mat = RMat::zeros(2, 2);
        mat[(0, 1)] = m;
        mat[(1, 0)] = m;
        FiniteMetricSpace::with_unit_labels(mat, "x").unwrap()
    };
    let pt = FiniteMetricSpace::with_unit_labels(RMat::zeros(1, 1), "o").unwrap();
    let (half, _) = gh_distance_exact(&two(1.0), &pt).unwrap();
    assert_eq!(half, 0.5);
    let (one, _) = gh_distance_exact(&two(1.0), &two(3.0)).unwrap();
    assert_eq!(one, 1.0);

    // metric axioms on triples up to 4 points, exact by enumeration
    let mut rng = seeded(12);
    let mut triples = vec![
        (
            random_metric(2, &mut rng),
            random_metric(3, &mut rng),
            random_metric(2, &mut rng),
        ),
        (
            random_metric(3, &mut rng),
            random_metric(3, &mut rng),
            random_metric(3, &mut rng),
        ),
        (
            random_metric(4, &mut rng),
            random_metric(4, &mut rng),
            random_metric(4, &mut rng),
        ),
    ];
    triples.push((two(1.0), two(2.0), two(4.0)));
    for (x, y, z) in &triples {
        let (xy, _) = gh_distance_exact(x, y).unwrap();
        let (yx, _) = gh_distance_exact(y, x).unwrap();
        assert!((xy - yx).abs() <= 1e-12, "symmetry");
        let (yz, _) = gh_distance_exact(y, z).unwrap();
        let (xz, _) = gh_distance_exact(x, z).unwrap();
        assert!(xz <= xy + yz + 1e-12, "triangle: {xz} > {xy} + {yz}");
        let (xx, _) = gh_distance_exact(x, x).unwrap();
        assert!(xx <= 1e-12, "reflexivity");
    }
    report(
        12,
        "gh oracle",
        started,
        "worked pairs exact, axioms on ≤4-point triples".into(),
    );
}
