use tristruct_bench::Workload;

#[test]
fn workload_plan_matches_parallel_and_serial() {
    let w = Workload::fixture("sunset_gradient");
    assert_eq!(w.assignment.len(), w.colors.len());
    let plan = w.plan(40.0, 1.5);
    let serial = plan.apply_all_serial(&w.colors, &w.assignment).unwrap();
    let parallel = plan.apply_all(&w.colors, &w.assignment).unwrap();
    assert_eq!(serial, parallel);
    assert!(serial.iter().all(|c| c.in_gamut()));
}
