use std::collections::BTreeSet;

use cellia::channel::{generate, generate_with, ChannelDump, Coverage, GaussianSampler};
use cellia::converse::{bound_report, q};
use cellia::ia_schemes::{effective_links, seed_direction, solve, SolutionDump};
use cellia::lattice::{build_graph, inactive_set_and_clusters, EisensteinPoint};
use cellia::linalg::{complex_gaussian, sigma_min, CMat};
use cellia::verifier::{certify_alignment, InterferenceModel};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn two_by_two_design_is_local_to_each_cluster() {
    let g = build_graph(3).unwrap();
    let part = inactive_set_and_clusters(&g);
    let base = generate(&g, 2, 2, 11);
    let before = solve(&g, &part, &base).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);

    for cluster in part.clusters.iter().filter(|c| !c.partial) {
        let edge = cluster.edges[0];
        let mut perturbed = base.clone();
        perturbed.cross.insert(edge, complex_gaussian(&mut rng, 2, 2));
        let after = solve(&g, &part, &perturbed).unwrap();
        let members: BTreeSet<EisensteinPoint> = cluster.roles.members().into_iter().collect();
        for (p, cell) in &before.cells {
            if !members.contains(p) {
                assert_eq!(
                    cell.tx, after.cells[p].tx,
                    "cell {p} moved when cluster {} changed",
                    cluster.center
                );
            }
        }
        assert!(certify_alignment(&g, &perturbed, &after, 1e-9, InterferenceModel::Directed).pass);
    }
}

#[test]
fn perturbing_a_silent_link_changes_no_precoder() {
    let g = build_graph(3).unwrap();
    let part = inactive_set_and_clusters(&g);
    let base = generate(&g, 2, 2, 12);
    let before = solve(&g, &part, &base).unwrap();
    let edge = *g
        .directed_edges()
        .iter()
        .find(|e| part.is_inactive(e.tx))
        .expect("some edge leaves a silent cell");
    let mut perturbed = base.clone();
    perturbed
        .cross
        .insert(edge, complex_gaussian(&mut ChaCha8Rng::seed_from_u64(1), 2, 2));
    let after = solve(&g, &part, &perturbed).unwrap();
    for (p, cell) in &before.cells {
        assert_eq!(cell.tx, after.cells[p].tx, "cell {p}");
    }
}

#[test]
fn tampered_precoder_is_reported() {
    let g = build_graph(3).unwrap();
    let part = inactive_set_and_clusters(&g);
    for (n, seed) in [(2, 3u64), (3, 4), (4, 5)] {
        let ch = generate(&g, 2, n, seed);
        let mut sol = solve(&g, &part, &ch).unwrap();
        let victim = *g
            .vertices()
            .iter()
            .find(|p| sol.dof(**p) == 1 && g.directed_edges().iter().any(|e| e.tx == **p && sol.dof(e.rx) > 0))
            .unwrap();
        let d = seed_direction(seed ^ 0xdead_beef, victim);
        sol.cells.get_mut(&victim).unwrap().tx = CMat::from_column_slice(2, 1, d.as_slice());
        let cert = certify_alignment(&g, &ch, &sol, 1e-9, InterferenceModel::Directed);
        assert!(!cert.pass, "{n} antennas: tampering with {victim} went unnoticed");
        assert!(!cert.failing_edges.is_empty());
        assert!(cert.failing_edges.iter().all(|f| f.residual > 1e-9));
        assert!(
            cert.failing_edges.iter().any(|f| f.edge.tx == victim),
            "{:?}",
            cert.failing_edges
        );
    }
}

#[test]
fn effective_links_are_well_conditioned() {
    let g = build_graph(3).unwrap();
    let part = inactive_set_and_clusters(&g);
    for n in 2..=4 {
        let ch = generate(&g, 2, n, 21);
        let sol = solve(&g, &part, &ch).unwrap();
        let links = effective_links(&sol, &ch).unwrap();
        assert_eq!(links.len(), g.len());
        for (p, eff) in &links {
            let d = sol.dof(*p);
            assert_eq!(eff.shape(), (d, d), "cell {p}");
            if d > 0 {
                assert!(sigma_min(eff) > 1e-6, "cell {p}");
            }
        }
    }
}

#[test]
fn achieved_dof_never_exceeds_the_bounds() {
    for r in 1..=6 {
        let g = build_graph(r).unwrap();
        let part = inactive_set_and_clusters(&g);
        let sol = solve(&g, &part, &generate(&g, 2, 2, 8)).unwrap();
        let expected = Ratio::new((g.len() - part.inactive.len()) as i64, g.len() as i64);
        assert_eq!(sol.average_dof(), expected, "r={r}");
        let bound = bound_report(&g, 2, None, false).unwrap();
        let achieved = q(*expected.numer() as i128, *expected.denom() as i128);
        assert!(achieved <= bound.lp_value.0, "r={r}");
        assert!(bound.lp_value.0 <= bound.dual_bound.0, "r={r}");
    }
}

#[test]
fn dumps_round_trip_to_the_same_certificate() {
    let g = build_graph(2).unwrap();
    let part = inactive_set_and_clusters(&g);
    let ch = generate(&g, 2, 4, 17);
    let sol = solve(&g, &part, &ch).unwrap();
    let cert = certify_alignment(&g, &ch, &sol, 1e-9, InterferenceModel::Directed);

    let ch_json = serde_json::to_string(&ChannelDump::from(&ch)).unwrap();
    let sol_json = serde_json::to_string(&sol.dump(Some(cert.summary()))).unwrap();
    let ch2 = serde_json::from_str::<ChannelDump>(&ch_json)
        .unwrap()
        .into_channel_set()
        .unwrap();
    let sol2 = serde_json::from_str::<SolutionDump>(&sol_json)
        .unwrap()
        .into_solution()
        .unwrap();
    assert_eq!(
        certify_alignment(&g, &ch2, &sol2, 1e-9, InterferenceModel::Directed),
        cert
    );
    assert_eq!(sol2.average_dof(), sol.average_dof());
}

#[test]
fn cancellation_is_what_makes_the_scheme_work() {
    let g = build_graph(3).unwrap();
    let part = inactive_set_and_clusters(&g);
    let ch = generate_with(&g, 2, 2, 9, Coverage::BothDirections, &mut GaussianSampler::new(9));
    let sol = solve(&g, &part, &ch).unwrap();
    let directed = certify_alignment(&g, &ch, &sol, 1e-9, InterferenceModel::Directed);
    assert!(directed.pass);
    let all = certify_alignment(&g, &ch, &sol, 1e-9, InterferenceModel::AllNeighbors);
    assert!(!all.pass);
    assert_eq!(all.edges_checked, 2 * directed.edges_checked);
}
