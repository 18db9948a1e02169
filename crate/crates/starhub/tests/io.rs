use starhub::corpus::{generate_corpus, read_corpus, write_corpus, CorpusConfig};
use starhub::io::{read_instance, write_instance, IoError};
use starhub_core::exact::solve_exact;
use starhub_core::InstanceError;

/// Objective on the file's own hub order, with external labels.
fn cost_in_file_order(ell: &[u64], c: &[Vec<f64>], w: &[Vec<f64>], f: &[usize]) -> f64 {
    let mut total = 0.0;
    for p in 0..c.len() {
        for q in 0..c.len() {
            if p == q {
                continue;
            }
            let hub = if f[p] == f[q] { 0.0 } else { (ell[f[p]] + ell[f[q]]) as f64 };
            total += w[p][q] * (c[p][f[p]] + c[q][f[q]] + hub);
        }
    }
    total
}

#[test]
fn corpus_survives_a_directory_round_trip() {
    let corpus = generate_corpus(&CorpusConfig {
        count: 12,
        ..Default::default()
    });
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &corpus).unwrap();
    let back = read_corpus(dir.path()).unwrap();
    assert_eq!(back, corpus);
    for e in &corpus {
        assert_eq!(write_instance(&read_instance(&write_instance(&e.instance)).unwrap()), write_instance(&e.instance));
    }
}

#[test]
fn unsorted_hubs_are_resorted_without_changing_the_objective() {
    let ell = [9u64, 1, 4];
    let c = vec![vec![1.0, 7.0, 2.5], vec![3.0, 0.5, 6.0]];
    let w = vec![vec![0.0, 2.0], vec![1.5, 0.0]];
    let text = format!(
        "{{\"h\": 3, \"n\": 2, \"ell\": {ell:?}, \"c\": {c:?}, \"w\": {w:?}}}",
    );
    let inst = read_instance(&text).unwrap();
    assert_eq!(inst.spoke_lengths(), &[1, 4, 9]);
    assert_eq!(inst.hub_ids(), &[1, 2, 0]);
    assert_eq!(inst.collection_cost(0, 2), 1.0);

    let mut best = f64::INFINITY;
    for a in 0..3 {
        for b in 0..3 {
            best = best.min(cost_in_file_order(&ell, &c, &w, &[a, b]));
        }
    }
    let sol = solve_exact(&inst, 1_000).unwrap();
    assert!((sol.value - best).abs() < 1e-12, "{} vs {best}", sol.value);
    let labels: Vec<usize> = sol.assignment.as_slice().iter().map(|&i| inst.hub_id(i)).collect();
    assert!((cost_in_file_order(&ell, &c, &w, &labels) - best).abs() < 1e-12);

    let rewritten = write_instance(&inst);
    assert!(rewritten.contains("\"hub_ids\": [1, 2, 0]"));
    assert_eq!(read_instance(&rewritten).unwrap(), inst);
}

#[test]
fn malformed_files_are_rejected() {
    let self_demand = "{\"h\": 1, \"n\": 2, \"ell\": [0], \"c\": [[1], [1]], \"w\": [[0, 1], [1, 3]]}";
    assert!(matches!(
        read_instance(self_demand),
        Err(IoError::Invalid(InstanceError::SelfDemand(1)))
    ));
    let extra = "{\"h\": 1, \"n\": 1, \"ell\": [0], \"c\": [[1]], \"w\": [[0]], \"k\": 1}";
    assert!(matches!(read_instance(extra), Err(IoError::Parse { .. })));
    let ragged = "{\"h\": 2, \"n\": 1, \"ell\": [0, 1], \"c\": [[1]], \"w\": [[0]]}";
    assert!(matches!(read_instance(ragged), Err(IoError::Field { field: "c", .. })));
    let labels = "{\"h\": 2, \"n\": 1, \"ell\": [0, 1], \"c\": [[1, 2]], \"w\": [[0]], \"hub_ids\": [0, 0]}";
    assert!(matches!(read_instance(labels), Err(IoError::Invalid(_))));
}
