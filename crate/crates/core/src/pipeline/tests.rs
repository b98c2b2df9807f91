use super::*;
use crate::corpus::Domain;
use chrono::NaiveDate;

/// Three text concepts and the standard scripted fixture in `dir`.
pub(crate) fn fixture_manifest(dir: &Path) -> RunManifest {
    let corpus = crate::simulate::demo_corpus();
    let corpus_path = dir.join("corpus.json");
    corpus::write_manifest(&corpus, &corpus_path).unwrap();
    let fixture_path = dir.join("fixture.json");
    std::fs::write(&fixture_path, Fixture::standard().to_json()).unwrap();
    let mut m = RunManifest::new(&corpus_path);
    m.out = dir.join("out");
    m.scripted = Some(fixture_path);
    m.authoring_seed = Some(0);
    m
}

fn read_tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[tokio::test]
async fn author_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let m = fixture_manifest(dir.path());
    let fixture = Fixture::load(m.scripted.as_ref().unwrap()).unwrap();
    let provider = Arc::new(fixture.provider());
    let p = Pipeline::new(m).unwrap().with_provider(provider.clone());

    let first = p.cmd_author(false).await.unwrap();
    assert_eq!((first.lessons_written, first.quizzes_written, first.skipped), (3, 3, 0));
    let calls = provider.request_count();
    assert!(calls > 0);
    let lesson = std::fs::read(p.lessons_dir().join("song-paper-harbour.json")).unwrap();

    let again = p.cmd_author(false).await.unwrap();
    assert_eq!((again.lessons_written, again.quizzes_written, again.skipped), (0, 0, 6));
    assert_eq!(provider.request_count(), calls);

    let forced = p.cmd_author(true).await.unwrap();
    assert_eq!(forced.quizzes_written, 3);
    assert!(provider.request_count() > calls);
    assert_eq!(std::fs::read(p.lessons_dir().join("song-paper-harbour.json")).unwrap(), lesson);
    assert!(p.audit_dir().join("song-paper-harbour.jsonl").exists());

    let report = p.cmd_validate().unwrap();
    assert_eq!(report.contexts, 3);
    assert!(report.ok(), "{report}");
}

#[tokio::test]
async fn full_matrix_is_deterministic_and_resumable() {
    let run_once = |dir: PathBuf| async move {
        let p = Pipeline::new(fixture_manifest(&dir)).unwrap();
        p.cmd_author(false).await.unwrap();
        let s = p.cmd_run().await.unwrap();
        (p, s)
    };
    let (a_dir, b_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (a, sa) = run_once(a_dir.path().to_path_buf()).await;
    // 3 concepts x 3 scenarios x 3 seeds.
    assert_eq!(sa.transcripts, 27);
    assert_eq!(sa.already_done, 0);
    // Static runs evaluate once; dynamic runs at rounds 0..=5.
    assert_eq!(sa.records, 9 + 18 * 6);
    let (b, _) = run_once(b_dir.path().to_path_buf()).await;
    assert_eq!(
        std::fs::read(a.records_path()).unwrap(),
        std::fs::read(b.records_path()).unwrap()
    );
    assert_eq!(read_tree(&a.transcripts_dir()), read_tree(&b.transcripts_dir()));

    let again = a.cmd_run().await.unwrap();
    assert_eq!(again.already_done, 27);
    assert_eq!(a.load_transcripts().unwrap().len(), 27);

    let written = a.cmd_report().unwrap();
    assert!(!written.is_empty());
    assert!(written.iter().all(|p| p.exists()));

    let m = a.cmd_features().unwrap();
    assert_eq!(m.len(), 18 * 5);
    let header = std::fs::read_to_string(a.run_dir().join("features.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 45);
    assert!(a.run_dir().join("features_index.csv").exists());
}

#[tokio::test]
async fn run_requires_authoring() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(fixture_manifest(dir.path())).unwrap();
    let err = p.cmd_run().await.unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(matches!(p.cmd_report(), Err(PipelineError::Config(_))));
    assert!(matches!(p.cmd_gainfit(), Err(PipelineError::Config(_))));
}

#[tokio::test]
async fn borrowed_cells_follow_their_sources() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture_manifest(dir.path());
    m.student_models = vec!["student".into(), "student-b".into()];
    m.scenarios = vec![Scenario::DynamicWithLesson, Scenario::BorrowedTranscript];
    m.seeds = vec![0];
    m.teacher_reference = false;
    m.borrow = Some(BorrowSpec {
        from_student: "student".into(),
        from_scenario: Scenario::DynamicWithLesson,
    });
    let p = Pipeline::new(m).unwrap();
    let corpus = p.load_corpus().unwrap();
    let cells = p.cells(&corpus);
    // Two direct cells per concept, then one borrowed cell per concept.
    assert_eq!(cells.len(), 9);
    assert!(cells[..6].iter().all(|c| c.source.is_none()));
    let b = &cells[6];
    assert_eq!(b.config.student_model, "student-b");
    assert!(b.run_id().contains("__from__"));
    assert!(cells[..6].iter().any(|c| Some(c.run_id()) == b.source));

    p.cmd_author(false).await.unwrap();
    let s = p.cmd_run().await.unwrap();
    assert_eq!(s.transcripts, 9);
}

#[test]
fn cell_order_is_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let p = Pipeline::new(fixture_manifest(dir.path())).unwrap();
    let corpus = p.load_corpus().unwrap();
    let ids: Vec<String> = p.cells(&corpus).iter().map(Cell::run_id).collect();
    assert_eq!(ids.len(), 27);
    assert_eq!(ids.iter().collect::<std::collections::BTreeSet<_>>().len(), 27);
    assert!(ids[0].starts_with("song-paper-harbour__"));
    assert_eq!(ids, p.cells(&corpus).iter().map(Cell::run_id).collect::<Vec<_>>());
}

#[test]
fn teacher_reference_adds_one_cell_per_concept_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture_manifest(dir.path());
    m.teacher_reference = true;
    let p = Pipeline::new(m).unwrap();
    let cells = p.cells(&p.load_corpus().unwrap());
    assert_eq!(cells.len(), 36);
    let teacher: Vec<&Cell> = cells.iter().filter(|c| c.config.scenario == Scenario::TeacherReference).collect();
    assert_eq!(teacher.len(), 9);
    assert!(teacher.iter().all(|c| c.config.student_model == "teacher"));
}

#[tokio::test]
async fn resume_after_interrupt_matches_uninterrupted_run() {
    let (a_dir, b_dir) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut ma = fixture_manifest(a_dir.path());
    ma.seeds = vec![0];
    let mut mb = fixture_manifest(b_dir.path());
    mb.seeds = vec![0];
    let a = Pipeline::new(ma).unwrap();
    let b = Pipeline::new(mb).unwrap();
    for p in [&a, &b] {
        p.cmd_author(false).await.unwrap();
        p.cmd_run().await.unwrap();
    }
    // Simulate a kill: cut one event log short, drop another run entirely,
    // and lose the records file.
    let runs: Vec<PathBuf> = {
        let mut v: Vec<PathBuf> = std::fs::read_dir(b.transcripts_dir()).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v
    };
    let dynamic = runs.iter().find(|p| p.to_string_lossy().contains("dynamic-lesson")).unwrap();
    let events = std::fs::read_dir(dynamic)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "jsonl"))
        .unwrap();
    let text = std::fs::read_to_string(&events).unwrap();
    let keep: Vec<&str> = text.lines().take(4).collect();
    std::fs::write(&events, keep.join("\n") + "\n{\"torn").unwrap();
    crate::dialogue::RunStore::at(dynamic)
        .write_state(&crate::dialogue::RunState {
            completed_events: 4,
            last_event: "student_question:2".into(),
            done: false,
        })
        .unwrap();
    std::fs::remove_dir_all(runs.iter().find(|p| *p != dynamic).unwrap()).unwrap();
    std::fs::remove_file(b.records_path()).unwrap();

    let s = b.cmd_run().await.unwrap();
    assert_eq!(s.transcripts, 9);
    assert_eq!(s.already_done, 7);
    assert_eq!(read_tree(&a.transcripts_dir()), read_tree(&b.transcripts_dir()));
    assert_eq!(std::fs::read(a.records_path()).unwrap(), std::fs::read(b.records_path()).unwrap());
}

#[test]
fn validate_reports_corpus_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = fixture_manifest(dir.path());
    let mut corpus = corpus::load_manifest(&m.corpus).unwrap();
    corpus.contexts[1].published_at = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, corpus::manifest_to_string(&corpus)).unwrap();
    m.corpus = bad;
    let r = Pipeline::new(m).unwrap().cmd_validate().unwrap();
    assert!(!r.ok());
    assert_eq!(r.contexts, 3);
}

#[test]
fn gainfit_on_synthetic_rows() {
    let (x, y) = gainmodel::synthetic_benchmark(120, N_FEATURES, 0.05, 1);
    let rows = x
        .iter()
        .zip(&y)
        .map(|(r, &t)| {
            let mut values = [0.0; features::N_COLUMNS];
            values[..N_FEATURES].copy_from_slice(r);
            values[N_FEATURES] = t;
            features::FeatureVector { values }
        })
        .collect();
    let keys = (0..120)
        .map(|i| features::RowKey {
            run_id: format!("r{i}"),
            concept_id: format!("c{}", i % 3),
            domain: if i % 2 == 0 { Domain::SongLyrics } else { Domain::NewsArticles },
            round: 1,
        })
        .collect();
    let matrix = FeatureMatrix { keys, rows };
    let settings = GainfitSettings {
        grid: vec![gainmodel::ForestParams {
            n_trees: 30,
            ..Default::default()
        }],
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let s = gainfit(&matrix, &settings, dir.path()).unwrap();
    assert_eq!((s.held_out.train_rows, s.held_out.test_rows), (96, 24));
    assert_eq!(s.per_domain_r2.len(), 2);
    assert_eq!(s.top_features.len(), 10);
    assert!(dir.path().join("model.json").exists());
    assert!(dir.path().join("reports/importances.csv").exists());
    assert!(dir.path().join("reports/gainfit.json").exists());

    let tiny = FeatureMatrix {
        keys: matrix.keys[..4].to_vec(),
        rows: matrix.rows[..4].to_vec(),
    };
    let err = gainfit(&tiny, &settings, dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}
