use shm_core::dataset::{generate_fixture_dataset, render_fixture, FixtureSidecar, FixtureSpec};
use shm_core::models::{fit_naive_bayes, fit_random_forest, labeled_features, ForestParams, ShallowModel, TrainingSet};
use shm_core::{load_manifest, ImageRecord};

#[test]
fn fixture_on_disk_matches_in_memory_render() {
    let dir = tempfile::tempdir().unwrap();
    let spec = FixtureSpec { images: 4, ..FixtureSpec::default() };
    let (_, sidecar) = generate_fixture_dataset(&spec, 21, dir.path()).unwrap();
    let manifest = load_manifest(&dir.path().join("manifest.json")).unwrap();
    let rendered = render_fixture(&spec, 21).unwrap();
    assert_eq!(manifest.len(), rendered.len());
    for (entry, (rec, truth)) in manifest.entries.iter().zip(&rendered) {
        let loaded = ImageRecord::load(entry).unwrap();
        assert_eq!(loaded.rgb, rec.rgb);
        assert_eq!(loaded.component_mask, rec.component_mask);
        assert_eq!(loaded.damage_mask, rec.damage_mask);
        assert_eq!(loaded.defect_masks, rec.defect_masks);
        assert_eq!(&truth.id, &entry.id);
    }
    assert_eq!(FixtureSidecar::load(&dir.path().join("sidecar.json")).unwrap(), sidecar);
}

#[test]
fn saved_models_predict_identically_after_reload() {
    let recs = render_fixture(&FixtureSpec::default(), 5).unwrap();
    let mut items = Vec::new();
    for (rec, _) in &recs {
        items.extend(labeled_features(rec, 16).unwrap());
    }
    let data = TrainingSet::from_features(&items);
    let dir = tempfile::tempdir().unwrap();
    let params = ForestParams { n_trees: 15, ..ForestParams::new(3) };
    for model in [
        ShallowModel::RandomForest(fit_random_forest(&data, params).unwrap()),
        ShallowModel::NaiveBayes(fit_naive_bayes(&data, true).unwrap()),
    ] {
        let path = dir.path().join(format!("{}.json", model.name()));
        model.save(&path).unwrap();
        let back = ShallowModel::load(&path).unwrap();
        for (fv, _) in &items {
            assert_eq!(back.predict_features(fv).unwrap(), model.predict_features(fv).unwrap());
        }
    }
}

#[test]
fn tampered_model_file_is_rejected() {
    let data = TrainingSet::new(vec![vec![0.0], vec![1.0]], vec![shm_core::DamageState::Light, shm_core::DamageState::Severe]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    ShallowModel::NaiveBayes(fit_naive_bayes(&data, false).unwrap()).save(&path).unwrap();
    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    doc["version"] = 99.into();
    std::fs::write(&path, serde_json::to_vec(&doc).unwrap()).unwrap();
    assert!(ShallowModel::load(&path).is_err());
}
