use super::*;
use crate::labeler::{label_point, BoundaryTable, PhaseLabel};
use crate::scft::SimConfig;

fn tiny_sim() -> SimConfig {
    SimConfig {
        lattice: [8, 8],
        system_size: [8.0, 8.0],
        contour_steps: 10,
        max_iterations: 20,
        ..SimConfig::default()
    }
}

fn two_point_grid() -> GridSpec {
    GridSpec {
        f_start: 0.5,
        f_stop: 0.5,
        chi_start: 0.1,
        chi_stop: 1.0,
        chi_step: 0.9,
        ..GridSpec::default()
    }
}

fn full_plan() -> DatasetManifest {
    plan_dataset(&GridSpec::default(), &SimConfig::default(), SeedCounts::default(), &BoundaryTable::shipped()).unwrap()
}

#[test]
fn default_grid_has_170_points() {
    let g = build_grid(&GridSpec::default()).unwrap();
    assert_eq!(g.len(), 170);
    assert_eq!(GridSpec::default().f_values().unwrap().len(), 17);
    assert_eq!(GridSpec::default().chi_n_values().unwrap(), vec![2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0, 22.5, 25.0]);
    // f-major: chi varies fastest
    assert_eq!((g[1].f_index, g[1].chi_index), (0, 1));
    assert_eq!((g[10].f_index, g[10].chi_index), (1, 0));
    assert_eq!(g[169].f, 0.5);
}

#[test]
fn collapsed_f_axis_gives_ten_points() {
    let spec = GridSpec {
        f_start: 0.4,
        f_stop: 0.4,
        ..GridSpec::default()
    };
    assert_eq!(build_grid(&spec).unwrap().len(), 10);
}

#[test]
fn desk_grid_is_five_by_four() {
    let spec = GridSpec::desk();
    assert_eq!(spec.f_values().unwrap(), vec![0.3, 0.35, 0.4, 0.45, 0.5]);
    assert_eq!(spec.chi_n_values().unwrap(), vec![2.5, 10.0, 17.5, 25.0]);
    assert_eq!(build_grid(&spec).unwrap().len(), 20);
}

#[test]
fn misaligned_step_is_a_grid_error() {
    let spec = GridSpec {
        f_step: 0.03,
        ..GridSpec::default()
    };
    assert!(matches!(build_grid(&spec), Err(crate::Error::Grid(_))));
    let spec = GridSpec {
        f_stop: 1.2,
        f_step: 0.1,
        ..GridSpec::default()
    };
    assert!(build_grid(&spec).is_err());
}

#[test]
fn full_plan_counts() {
    let plan = full_plan();
    assert_eq!(plan.count(Split::Train), 4080);
    assert_eq!(plan.count(Split::Test), 1700);
    assert_eq!(plan.point_count(Split::Train), 170);
    assert!(!plan.is_generated());
}

#[test]
fn splits_are_disjoint_and_seeds_distinct() {
    let plan = full_plan();
    let mut seen = std::collections::HashSet::new();
    for s in &plan.samples {
        assert!(seen.insert(s.seed), "seed collision at {}", s.key.id());
        assert_eq!(s.seed, s.key.seed());
    }
    let train: std::collections::HashSet<_> = plan.split(Split::Train).map(|s| (s.key.f_index, s.key.chi_index, s.seed)).collect();
    assert!(plan.split(Split::Test).all(|s| !train.contains(&(s.key.f_index, s.key.chi_index, s.seed))));
}

#[test]
fn labels_rederive_from_the_table() {
    let table = BoundaryTable::shipped();
    let plan = full_plan();
    plan.verify_labels(&table).unwrap();
    for s in plan.samples.iter().step_by(97) {
        assert_eq!(s.label, label_point(s.f, s.chi_n, &table).unwrap());
    }
    let mut bad = plan.clone();
    bad.samples[0].label = PhaseLabel::Gyroid;
    assert!(bad.verify_labels(&table).is_err());
}

#[test]
fn variant_a_keeps_45_training_points() {
    let plan = full_plan();
    let thinned = downsample_training(&plan, &DownsampleSpec::variant(ThinningVariant::A)).unwrap();
    // 17 - 8 surviving f values times 10 - 5 surviving chiN values
    assert_eq!(thinned.point_count(Split::Train), 9 * 5);
    assert_eq!(thinned.count(Split::Train), 45 * 24);
    assert_eq!(thinned.count(Split::Test), 1700);
    assert!(thinned.split(Split::Train).all(|s| [5.0, 10.0, 15.0, 20.0, 25.0].contains(&s.chi_n)));
}

#[test]
fn variants_differ_only_in_omitted_chi_n_rows() {
    let a = DownsampleSpec::variant(ThinningVariant::A);
    let b = DownsampleSpec::variant(ThinningVariant::B);
    assert_eq!(a.omit_f, b.omit_f);
    assert_eq!(a.omit_f.len(), 8);
    assert_eq!(a.omit_f[0], 0.3125);
    assert_eq!(a.omit_f[7], 0.4875);
    let plan = full_plan();
    let tb = downsample_training(&plan, &b).unwrap();
    assert_eq!(tb.point_count(Split::Train), 45);
    assert!(tb.split(Split::Train).all(|s| [2.5, 7.5, 12.5, 17.5, 22.5].contains(&s.chi_n)));
}

#[test]
fn empty_downsample_is_identity() {
    let plan = full_plan();
    assert_eq!(downsample_training(&plan, &DownsampleSpec::none()).unwrap(), plan);
}

#[test]
fn downsample_spec_errors() {
    let plan = full_plan();
    let off_grid = DownsampleSpec {
        variant: None,
        omit_f: vec![0.31],
        omit_chi_n: vec![],
    };
    assert!(matches!(downsample_training(&plan, &off_grid), Err(crate::Error::Spec(_))));
    let everything = DownsampleSpec {
        variant: None,
        omit_f: GridSpec::default().f_values().unwrap(),
        omit_chi_n: vec![],
    };
    assert!(matches!(downsample_training(&plan, &everything), Err(crate::Error::Spec(_))));
}

fn manifest_with_counts(counts: [usize; 4]) -> DatasetManifest {
    let mut plan = plan_dataset(&two_point_grid(), &tiny_sim(), SeedCounts { train: 1, test: 1 }, &BoundaryTable::shipped()).unwrap();
    let template = plan.samples[0].clone();
    plan.samples.clear();
    let mut replica = 0;
    for (code, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            let mut s = template.clone();
            s.key.replica = replica;
            s.label = PhaseLabel::from_code(code).unwrap();
            replica += 1;
            plan.samples.push(s);
        }
    }
    plan
}

#[test]
fn balancing_equalizes_to_min_count() {
    let m = manifest_with_counts([8, 4, 6, 2]);
    let b = balance_classes(&m, 1).unwrap();
    assert_eq!(b.class_counts(Split::Train), [2, 2, 2, 2]);
    assert_eq!(b.balance.as_ref().unwrap().counts_before, [8, 4, 6, 2]);
    // seeded and without replacement
    assert_eq!(b, balance_classes(&m, 1).unwrap());
    let mut keys: Vec<_> = b.samples.iter().map(|s| s.key).collect();
    keys.dedup();
    assert_eq!(keys.len(), 8);
}

#[test]
fn balanced_input_keeps_counts() {
    let m = manifest_with_counts([3, 3, 3, 3]);
    let b = balance_classes(&m, 9).unwrap();
    assert_eq!(b.class_counts(Split::Train), [3, 3, 3, 3]);
    assert_eq!(b.samples.len(), m.samples.len());
}

#[test]
fn empty_class_cannot_be_balanced() {
    let m = manifest_with_counts([3, 0, 3, 3]);
    assert!(matches!(balance_classes(&m, 0), Err(crate::Error::Balance(_))));
}

#[test]
fn variant_a_balanced_set_is_class_equal() {
    let plan = full_plan();
    let thinned = downsample_training(&plan, &DownsampleSpec::variant(ThinningVariant::A)).unwrap();
    let balanced = balance_classes(&thinned, 0).unwrap();
    let counts = balanced.class_counts(Split::Train);
    assert!(counts.iter().all(|&c| c == counts[0]));
    // every point contributes 24 images, so the minimum class is a multiple of 24
    assert_eq!(counts[0] % 24, 0);
    assert_eq!(balanced.count(Split::Test), 1700);
}

#[test]
fn manifest_round_trip_is_byte_identical() {
    let plan = full_plan();
    let text = plan.to_json().unwrap();
    let again = DatasetManifest::from_json(&text).unwrap();
    assert_eq!(again, plan);
    assert_eq!(again.to_json().unwrap(), text);
}

#[test]
fn toy_generation_counts_resumes_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan_dataset(&two_point_grid(), &tiny_sim(), SeedCounts { train: 1, test: 1 }, &BoundaryTable::shipped()).unwrap();
    assert_eq!(plan.samples.len(), 4);

    let mut calls = Vec::new();
    let (m1, r1) = generate_dataset(dir.path(), &plan, 1, |p| calls.push(p)).unwrap();
    assert_eq!(r1.generated, 4);
    assert_eq!(m1.count(Split::Train), 2);
    assert_eq!(m1.count(Split::Test), 2);
    assert_eq!(calls.last().unwrap(), &Progress { done: 4, total: 4 });
    let bytes1 = std::fs::read(dir.path().join(CONTAINER_FILE)).unwrap();
    assert_eq!(bytes1.len(), 4 * 64 * 4);

    // completed run is a no-op with identical checksums
    let (m2, r2) = generate_dataset(dir.path(), &plan, 1, |_| {}).unwrap();
    assert_eq!(r2, GenerateReport { generated: 0, reused: 4, failed: 0 });
    assert_eq!(m2.content_checksum(), m1.content_checksum());
    assert_eq!(std::fs::read(dir.path().join(CONTAINER_FILE)).unwrap(), bytes1);

    // a corrupted image is recomputed to the same bytes
    let mut corrupt = bytes1.clone();
    corrupt[300] ^= 0xff;
    std::fs::write(dir.path().join(CONTAINER_FILE), &corrupt).unwrap();
    let (m3, r3) = generate_dataset(dir.path(), &plan, 2, |_| {}).unwrap();
    assert_eq!(r3.generated, 1);
    assert_eq!(r3.reused, 3);
    assert_eq!(m3, m1);
    assert_eq!(std::fs::read(dir.path().join(CONTAINER_FILE)).unwrap(), bytes1);

    // a fresh directory regenerates identical content
    let other = tempfile::tempdir().unwrap();
    let (m4, _) = generate_dataset(other.path(), &plan, 3, |_| {}).unwrap();
    assert_eq!(m4.content_checksum(), m1.content_checksum());

    let ds = load_dataset(dir.path()).unwrap();
    assert_eq!(ds.len(), 4);
    assert_eq!(ds.split(Split::Train).count(), 2);
    for (s, image) in ds.samples() {
        assert_eq!(crate::checksum::sha256_hex(&image_bytes(image)), *s.checksum.as_ref().unwrap());
    }
}

#[test]
fn missing_dataset_gives_guidance() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_dataset(dir.path().join("nope")).unwrap_err();
    assert!(matches!(err, crate::Error::MissingDataset(_)));
    assert!(err.to_string().contains("qerc generate"));
}

#[test]
fn restrict_follows_thinned_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plan_dataset(&two_point_grid(), &tiny_sim(), SeedCounts { train: 2, test: 1 }, &BoundaryTable::shipped()).unwrap();
    let (_, _) = generate_dataset(dir.path(), &plan, 8, |_| {}).unwrap();
    let ds = load_dataset(dir.path()).unwrap();
    let spec = DownsampleSpec {
        variant: None,
        omit_f: vec![],
        omit_chi_n: vec![2.5],
    };
    let thinned = downsample_training(&ds.manifest, &spec).unwrap();
    let sub = ds.restrict(&thinned).unwrap();
    assert_eq!(sub.split(Split::Train).count(), 2);
    assert_eq!(sub.split(Split::Test).count(), 2);
    for (s, image) in sub.samples() {
        let (_, original) = ds.samples().find(|(o, _)| o.key == s.key).unwrap();
        assert_eq!(image, original);
    }
}

#[test]
fn png_export_writes_grayscale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.png");
    let image: Vec<f32> = (0..16).map(|i| i as f32 / 15.0).collect();
    export_png(&image, [4, 4], &path).unwrap();
    let back = image::open(&path).unwrap().to_luma8();
    assert_eq!(back.dimensions(), (4, 4));
    assert_eq!(back.get_pixel(0, 0).0[0], 0);
    assert_eq!(back.get_pixel(3, 3).0[0], 255);
    assert!(export_png(&image, [3, 4], &path).is_err());
}
