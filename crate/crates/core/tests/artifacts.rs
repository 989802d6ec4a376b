use std::fs::File;

use bria::auction::{run_bria, AuctionConfig};
use bria::environments::{DecoySpec, EasyOptions};
use bria::hypotheses::{const_hypothesis, face_value_hypothesis, guarantee_hypothesis};
use bria::io::{read_trace, write_hypotheses_csv, write_ledger_csv, write_trace_csv};
use bria::metrics::{coverage_audit, empirical_record, overestimation_trajectory, AuditParams};
use bria::numeric::Sequence;

#[test]
fn metrics_survive_a_csv_round_trip() {
    let floor = Sequence::cycle(vec![0.3, 0.7]).unwrap();
    let registry = vec![
        guarantee_hypothesis("g", "guaranteed", floor.clone()),
        face_value_hypothesis("face"),
        const_hypothesis("decoy", "decoy", 0.9).unwrap(),
    ];
    let mut env = EasyOptions::new(floor, DecoySpec::default(), 4).unwrap();
    let run = run_bria(&mut env, &registry, 500, &AuctionConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("trace.csv");
    let hyp_path = dir.path().join("hypotheses.csv");
    write_trace_csv(&run.trace, File::create(&trace_path).unwrap()).unwrap();
    write_hypotheses_csv(&run.trace, File::create(&hyp_path).unwrap()).unwrap();
    write_ledger_csv(&run, File::create(dir.path().join("ledger.csv")).unwrap()).unwrap();

    let back = read_trace(
        File::open(&trace_path).unwrap(),
        File::open(&hyp_path).unwrap(),
    )
    .unwrap();
    assert_eq!(
        overestimation_trajectory(&back),
        overestimation_trajectory(&run.trace)
    );
    let params = AuditParams::default();
    for log in run.trace.logs() {
        let id = log.id();
        assert_eq!(
            empirical_record(&back, id, log.tested(), 500).unwrap(),
            empirical_record(&run.trace, id, log.tested(), 500).unwrap()
        );
        assert_eq!(
            coverage_audit(&back, id, &params).unwrap(),
            coverage_audit(&run.trace, id, &params).unwrap()
        );
    }
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 1 + 500 * registry.len());
}
