use topicgraph::config::ExperimentConfig;
use topicgraph::corpus::{InputFormat, Label};
use topicgraph::experiment::{run_experiment, Session};
use topicgraph::gcn::init_model;
use topicgraph::synthetic;

const TWEETS: &str = "\
t1\tfalse\tBREAKING: aliens landed in Ohio!!! http://fake.example/x #aliens
t2\ttrue\tCity council approves new budget for public schools
t3\tunverified\tRumors say the mayor resigned www.gossip.example
t4\tfalse\tShocking: drinking bleach cures flu, doctors hate it
t5\ttrue\tLocal team wins the regional championship game
t6\tnon-rumor\tNice weather today in the park
t7\tfalse\tSecret moon base photos leaked by insiders
t8\ttrue\tPublic library extends weekend opening hours
t9\tfalse\tok
";

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn tsv_twitter_profile_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = write(dir.path(), "tweets.tsv", TWEETS);
    cfg.data.format = InputFormat::Tsv;
    cfg.graph.clusters = vec![2];
    cfg.graph.r = 0.5;
    cfg.graph.top_k = 2;
    cfg.lda.iterations = 50;
    cfg.lda.burn_in = 10;
    cfg.train.epochs = 5;
    cfg.train.split_ratio = 0.5;
    cfg.out_dir = dir.path().join("out");

    let session = Session::load(&cfg).unwrap();
    let corpus = session.corpus();
    // unverified / non-rumor dropped, t9 too short.
    let ids: Vec<&str> = corpus.documents().iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, ["t1", "t2", "t4", "t5", "t7", "t8"]);
    assert!(corpus.documents()[0]
        .tokens
        .iter()
        .all(|t| !t.contains("http") && !t.contains("example")));
    assert_eq!(corpus.labels()[0], Label::Fake);

    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.outcome.graphs.len(), 2);
    assert_eq!(report.outcome.masks.test_count(), 2);
}

#[test]
fn label_overrides_extend_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = write(dir.path(), "tweets.tsv", TWEETS);
    cfg.data.format = InputFormat::Tsv;
    cfg.apply_overrides(&["data.labels.unverified=0"]).unwrap();
    let session = Session::load(&cfg).unwrap();
    assert!(session.corpus().documents().iter().any(|d| d.id == "t3"));
}

#[test]
fn unknown_label_is_an_ingest_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.data.path = write(dir.path(), "bad.tsv", "a\tmaybe\tsome words here\n");
    cfg.data.format = InputFormat::Tsv;
    let err = Session::load(&cfg).err().unwrap().to_string();
    assert!(err.contains("ingest") && err.contains("maybe"), "{err}");
}

#[test]
fn reference_combination_builds_56_graphs() {
    let mut session = Session::new(synthetic::to_corpus(&synthetic::separable(2, 80, 15)));
    let mut cfg = ExperimentConfig::default();
    cfg.lda.iterations = 20;
    cfg.lda.burn_in = 5;
    let (_, graphs) = session.build_graphs(&cfg).unwrap();
    assert_eq!(graphs.len(), 56);
    let dims: Vec<usize> = graphs.iter().map(|g| g.input_dim()).collect();
    assert_eq!(init_model(&dims, 0).unwrap().dims.head_input(), 1792);
}

#[test]
fn same_seed_same_outcome_in_memory() {
    let corpus = synthetic::to_corpus(&synthetic::separable(4, 60, 12));
    let mut cfg = ExperimentConfig::default();
    cfg.graph.clusters = vec![2];
    cfg.lda.iterations = 40;
    cfg.lda.burn_in = 20;
    cfg.train.epochs = 15;
    let a = Session::new(corpus.clone()).execute(&cfg).unwrap();
    let b = Session::new(corpus).execute(&cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.history.to_csv(), b.history.to_csv());
}
