use pmflow_web::{geometry_view, polar_view, solve_view, MAX_CELLS};

#[test]
fn geometry_curves_meet_at_the_corner_points() {
    let g = geometry_view(1.4, 0.5, 0.3).unwrap();
    let curve = |name: &str| g.curves.iter().find(|(n, _)| *n == name).map(|(_, p)| p.clone()).unwrap();
    let near = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).hypot(a[1] - b[1]) < 1e-9;
    assert!(near(*curve("chord").first().unwrap(), g.p1) && near(*curve("chord").last().unwrap(), g.p2));
    assert!(near(*curve("shock_N").first().unwrap(), g.p2));
    let text = serde_json::to_string(&g).unwrap();
    assert!(text.contains("\"elling_liu_f\""));
}

#[test]
fn polar_starts_at_the_incoming_state() {
    let p = polar_view(3.0, 1.4, 100).unwrap();
    assert_eq!(p.curve[0], [0.0, 3.0]);
    assert!(p.curve.iter().all(|c| c[0] <= p.theta_detach + 1e-12));
}

#[test]
fn oversized_solves_are_refused() {
    assert!(solve_view(1.4, 0.5, 0.2, 64, 33).is_err());
    assert!(64 * 32 <= MAX_CELLS);
}
