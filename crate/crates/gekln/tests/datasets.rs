//! Reference-dataset statistics. These run only when the public exports
//! are mounted:
//!
//! - `EKLN_ASSIST_CSV`: ASSISTments 2009-2010 skill-builder CSV
//! - `EKLN_KDD_TSV`: KDD Cup Algebra 2005-2006 training TSV
//!
//! Without the environment variables each test prints SKIP and passes,
//! since the corpora cannot be redistributed with the repository.

use std::collections::HashSet;
use std::path::PathBuf;

use gekln::data::{
    build_dataset, merge_concepts_per_exercise, merge_duplicate_attempts, parse_log_file,
    split_dataset, LogFormat, ParseOptions,
};
use gekln::graph::build_graph;

fn env_path(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from)
}

#[test]
fn assist_statistics_match_the_reference_table() {
    let Some(path) = env_path("EKLN_ASSIST_CSV") else {
        println!("SKIP: set EKLN_ASSIST_CSV to check the ASSIST corpus statistics");
        return;
    };
    let parsed = parse_log_file(&path, &ParseOptions::new(LogFormat::AssistCsv)).unwrap();
    let records = merge_duplicate_attempts(parsed.records);
    let ds = build_dataset(&records).unwrap();
    println!(
        "assist: M={} N={} O={} logs={} density={:.4}%",
        ds.num_students,
        ds.num_exercises,
        ds.num_concepts,
        ds.logs.len(),
        ds.density() * 100.0
    );
    assert_eq!(ds.num_students, 4163);
    assert_eq!(ds.num_exercises, 17746);
    assert_eq!(ds.num_concepts, 123);
    assert_eq!(ds.logs.len(), 278_868);
    assert!((ds.density() - 0.0037).abs() < 0.0002);
}

#[test]
fn assist_graph_edges_equal_distinct_triples() {
    let Some(path) = env_path("EKLN_ASSIST_CSV") else {
        println!("SKIP: set EKLN_ASSIST_CSV to check train-graph edge counts");
        return;
    };
    let parsed = parse_log_file(&path, &ParseOptions::new(LogFormat::AssistCsv)).unwrap();
    let records = merge_duplicate_attempts(parsed.records);
    let ds = build_dataset(&records).unwrap();
    let split = split_dataset(&ds, 0.2, 42).unwrap();
    let graph = build_graph(&split.train, ds.num_students, ds.num_exercises).unwrap();
    let distinct: HashSet<(usize, usize, u8)> = split
        .train
        .iter()
        .map(|l| (l.student, l.exercise, l.score))
        .collect();
    assert_eq!(graph.num_edges(), distinct.len());
}

#[test]
fn kdd_concept_merge_yields_the_reference_count() {
    let Some(path) = env_path("EKLN_KDD_TSV") else {
        println!("SKIP: set EKLN_KDD_TSV to check the KDD corpus statistics");
        return;
    };
    let parsed = parse_log_file(&path, &ParseOptions::new(LogFormat::KddTsv)).unwrap();
    let records = merge_duplicate_attempts(parsed.records);
    let records = merge_concepts_per_exercise(records);
    let ds = build_dataset(&records).unwrap();
    println!(
        "kdd: M={} N={} O={} logs={}",
        ds.num_students,
        ds.num_exercises,
        ds.num_concepts,
        ds.logs.len()
    );
    assert_eq!(ds.num_concepts, 437);
}
