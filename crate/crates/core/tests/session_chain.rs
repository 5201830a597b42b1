mod common;

use std::sync::Arc;

use common::scenario;
use suif_core::diff_engine::apply_diff;
use suif_core::generation_engine::{generate_initial, GenerationOptions};
use suif_core::provider_gateway::Gateway;
use suif_core::session_store::{Attachments, SessionStore};
use suif_core::{Error, Provenance, SemanticState};

fn set(s: &SemanticState, path: &str, text: &str) -> SemanticState {
    let p = s.parse_path(path).unwrap();
    s.set_attribute(&p, text, Provenance::User, 1).unwrap()
}

fn texts(s: &SemanticState) -> Vec<(String, String)> {
    s.filled()
        .into_iter()
        .map(|(p, v)| (s.slot_ref(&p).unwrap().to_string(), v.text().to_string()))
        .collect()
}

/// Ten commits, one of them a rollback, plus an artifact attachment.
fn scripted(store: &SessionStore) -> String {
    let id = store.create_session("chain").unwrap().id().to_string();
    let commit = |s: SemanticState, label: &str| {
        store.commit(&id, s, Attachments::default(), label).unwrap();
    };
    let mut s = SemanticState::new();
    s = set(&s, "product.description", "habit tracker app");
    commit(s.clone(), "1");
    s = set(&s, "design_system.color", "Dark Mode");
    commit(s.clone(), "2");
    s = s.add_component("Album.Card").unwrap().0;
    commit(s.clone(), "3");
    s = set(&s, "component.Album.Card.type", "Card");
    commit(s.clone(), "4");
    s = set(&s, "design_system.color", "Neon Green");
    commit(s.clone(), "5");
    store.rollback(&id, 2).unwrap();
    s = store.load(&id).unwrap().current_state().clone();
    s = set(&s, "feature.function", "recommendation hub");
    commit(s.clone(), "7");
    let art = generate_initial(&s, 7, &Gateway::mock(), &GenerationOptions::default()).unwrap();
    store
        .commit(&id, s.clone(), Attachments { artifact: Some(art), graph: None }, "8")
        .unwrap();
    s = s.clear_attribute(&s.parse_path("product.description").unwrap()).unwrap();
    commit(s.clone(), "9");
    s = s.add_component("Hero").unwrap().0;
    commit(s, "10");
    id
}

#[test]
fn folding_diffs_reproduces_every_state() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let id = scripted(&store);
    let session = store.load(&id).unwrap();
    assert_eq!(session.versions().len(), 11);
    assert_eq!(session.versions()[6].label, "rollback to v2");

    let mut folded = session.versions()[0].state.clone();
    for record in &session.versions()[1..] {
        folded = apply_diff(&folded, record.diff_from_parent.as_ref().unwrap(), record.version).unwrap();
        assert_eq!(texts(&folded), texts(&record.state), "v{}", record.version);
        let names = |s: &SemanticState| s.components().iter().map(|c| c.name().to_string()).collect::<Vec<_>>();
        assert_eq!(names(&folded), names(&record.state));
    }
    let rows = session.history();
    assert_eq!(rows.len(), 11);
    assert!(rows[5].changelog.iter().any(|l| l.contains("Neon Green")));
}

#[test]
fn committed_records_never_change_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let id = store.create_session("a").unwrap().id().to_string();
    store
        .commit(&id, set(&SemanticState::new(), "product.goal", "g"), Attachments::default(), "1")
        .unwrap();
    let snapshot: Vec<Vec<u8>> = (0..=1).map(|v| store.record_bytes(&id, v).unwrap()).collect();
    store.commit(&id, SemanticState::new(), Attachments::default(), "2").unwrap();
    store.rollback(&id, 1).unwrap();
    for (v, bytes) in snapshot.iter().enumerate() {
        assert_eq!(&store.record_bytes(&id, v as u64).unwrap(), bytes);
    }
}

#[test]
fn export_import_round_trips_byte_equal_records() {
    let src_dir = tempfile::tempdir().unwrap();
    let src = SessionStore::open(src_dir.path()).unwrap();
    let id = scripted(&src);
    let bundle = src.export_bundle(&id).unwrap();

    let dst_dir = tempfile::tempdir().unwrap();
    let dst = SessionStore::open(dst_dir.path()).unwrap();
    let imported = dst.import_bundle(&bundle).unwrap();
    assert_eq!(imported, id);
    for v in 0..=10 {
        assert_eq!(src.record_bytes(&id, v).unwrap(), dst.record_bytes(&imported, v).unwrap());
    }
    assert_eq!(dst.export_bundle(&imported).unwrap(), bundle);
    assert_eq!(
        src.load(&id).unwrap().current_artifact(),
        dst.load(&imported).unwrap().current_artifact()
    );

    // Importing again collides and gets a fresh id with the same records.
    let again = dst.import_bundle(&bundle).unwrap();
    assert_ne!(again, id);
    for v in 0..=10 {
        assert_eq!(dst.record_bytes(&again, v).unwrap(), src.record_bytes(&id, v).unwrap());
    }
}

#[test]
fn export_of_unknown_session_fails() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    assert!(matches!(store.export_bundle("missing"), Err(Error::UnknownSession(_))));
}

#[test]
fn blobs_are_shared_across_versions() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::open(dir.path()).unwrap();
    let id = store.create_session("b").unwrap().id().to_string();
    let state = scenario("habit_tracker");
    let art = generate_initial(&state, 1, &Gateway::mock(), &GenerationOptions::default()).unwrap();
    store.commit(&id, state.clone(), Attachments { artifact: Some(art.clone()), graph: None }, "g1").unwrap();
    store.commit(&id, state, Attachments { artifact: Some(art), graph: None }, "g2").unwrap();
    assert_eq!(std::fs::read_dir(dir.path().join("blobs")).unwrap().count(), 1);
}

#[test]
fn concurrent_commits_serialize() {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(SessionStore::open(dir.path()).unwrap());
    let id = store.create_session("c").unwrap().id().to_string();
    let threads: Vec<_> = (0..16)
        .map(|i| {
            let store = store.clone();
            let id = id.clone();
            std::thread::spawn(move || {
                store
                    .update(&id, |s| {
                        let next = set(s.current_state(), "feature.content", &format!("value {i}"));
                        s.next_record(next, Attachments::default(), "edit")
                    })
                    .unwrap()
                    .version
            })
        })
        .collect();
    let mut versions: Vec<u64> = threads.into_iter().map(|t| t.join().unwrap()).collect();
    versions.sort();
    assert_eq!(versions, (1..=16).collect::<Vec<_>>());
    let reopened = SessionStore::open(dir.path()).unwrap();
    assert_eq!(reopened.load(&id).unwrap().versions().len(), 17);
}
