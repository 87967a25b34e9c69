use std::fs;

use nalgebra::DMatrix;
use ngds::dataio::*;
use ngds::pipeline::extract_sample_point;
use ngds::*;

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        classes: 3,
        samples_per_class: 5,
        dims: vec![6, 7, 5],
        seed,
        ..SynthSpec::default()
    }
}

#[test]
fn tensor_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = DenseTensor::from_fn(vec![3, 2, 4], |i| (i[0] as f64 - 1.5) * 0.1 + i[1] as f64 - i[2] as f64 * 1e-9).unwrap();
    let path = dir.path().join("t.nmt");
    write_tensor(&path, &t).unwrap();
    let back = read_tensor(&path).unwrap();
    assert_eq!(back, t);
    assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));

    let bytes = fs::read(&path).unwrap();
    let mut flipped = bytes.clone();
    flipped[bytes.len() - 9] ^= 0x40;
    assert!(matches!(decode_tensor(&flipped), Err(Error::Checksum { .. })));
    assert!(matches!(decode_tensor(&bytes[..bytes.len() - 3]), Err(Error::Truncated(_))));
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_tensor(&bad), Err(Error::Format { offset: 0, .. })));
    assert!(matches!(read_tensor(&dir.path().join("absent.nmt")), Err(Error::MissingFile(_))));

    let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    write_matrix(&dir.path().join("m.nmt"), &m).unwrap();
    assert_eq!(read_matrix(&dir.path().join("m.nmt")).unwrap(), m);
}

#[test]
fn noiseless_class_subspaces_share_a_direction() {
    let spec = SynthSpec {
        within_noise: 0.0,
        shared_dim: 1,
        ..small_spec(3)
    };
    let data = generate_synthetic(&spec).unwrap();
    for mode in &data.planted {
        for a in 0..spec.classes {
            for b in a + 1..spec.classes {
                let p = Subspace::new(mode.class_basis(a)).unwrap();
                let q = Subspace::new(mode.class_basis(b)).unwrap();
                let angles = principal_angles(&p, &q, None).unwrap();
                assert!(angles.angles[0] <= 1e-10);
            }
        }
    }
}

#[test]
fn synthetic_output_is_byte_identical_per_seed() {
    let (d1, d2, d3) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_synthetic(&small_spec(21)).unwrap().write(d1.path()).unwrap();
    generate_synthetic(&small_spec(21)).unwrap().write(d2.path()).unwrap();
    generate_synthetic(&small_spec(22)).unwrap().write(d3.path()).unwrap();
    let mut names: Vec<_> = fs::read_dir(d1.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 16);
    let mut differs = false;
    for n in &names {
        let a = fs::read(d1.path().join(n)).unwrap();
        assert_eq!(a, fs::read(d2.path().join(n)).unwrap(), "{n:?}");
        differs |= a != fs::read(d3.path().join(n)).unwrap();
    }
    assert!(differs);
}

#[test]
fn manifest_round_trip_loads_the_same_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&small_spec(4)).unwrap();
    data.write(dir.path()).unwrap();
    let manifest = DatasetManifest::load(&dir.path().join("manifest.txt")).unwrap();
    assert_eq!(manifest.class_sizes(), vec![5, 5, 5]);
    let train = manifest.load_dataset(Some(Split::Train)).unwrap();
    let expect = data.split(Split::Train);
    assert_eq!(train.labels, expect.labels);
    for (a, b) in train.samples.iter().zip(&expect.samples) {
        assert_eq!(a.tensor, b.tensor);
    }
    assert_eq!(manifest.load_dataset(None).unwrap().len(), 15);

    // a tensor whose dims disagree with the header is rejected
    write_tensor(&dir.path().join("c0_s0.nmt"), &DenseTensor::zeros(vec![6, 7, 4]).unwrap()).unwrap();
    assert!(matches!(manifest.load_dataset(None), Err(Error::Dimension(_))));
}

fn features_dir(data: &SynthData, manifest: &DatasetManifest, f: impl Fn(&DenseTensor) -> DMatrix<f64>) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (e, s) in manifest.entries.iter().zip(&data.dataset.samples) {
        write_matrix(&dir.path().join(&e.path), &f(&s.tensor)).unwrap();
    }
    dir
}

#[test]
fn feature_replacement_contracts() {
    let root = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&small_spec(5)).unwrap();
    let manifest = data.write(root.path()).unwrap();
    let mut config = PipelineConfig::with_method(Method::Pgm);
    config.per_mode_dims = Some(vec![2, 2, 2]);

    // the mode-2 unfolding itself: nothing changes
    let same = features_dir(&data, &manifest, |t| t.unfold(1).unwrap().matrix);
    let rep = FeatureReplacement::from_dir(1, 7, same.path(), &manifest);
    let with = ingest_feature_modes(&manifest, None, &[rep]).unwrap();
    for (a, b) in with.samples.iter().zip(&data.dataset.samples) {
        let pa = extract_sample_point(a, &config).unwrap();
        let pb = extract_sample_point(b, &config).unwrap();
        assert_eq!(pa.parts, pb.parts);
    }

    // arbitrary features only touch their own mode
    let other = features_dir(&data, &manifest, |t| {
        let u = t.unfold(0).unwrap().matrix;
        DMatrix::from_fn(4, 9, |i, j| u[(i, j)].sin() + (i * j) as f64 * 0.01)
    });
    let rep = FeatureReplacement::from_dir(0, 4, other.path(), &manifest);
    let with = ingest_feature_modes(&manifest, None, &[rep]).unwrap();
    for (a, b) in with.samples.iter().zip(&data.dataset.samples) {
        let pa = extract_sample_point(a, &config).unwrap();
        let pb = extract_sample_point(b, &config).unwrap();
        assert_eq!(pa.parts[0].ambient_dim(), 4);
        assert_eq!(&pa.parts[1..], &pb.parts[1..]);
    }

    // declared row count disagrees with the files
    let rep = FeatureReplacement::from_dir(0, 5, other.path(), &manifest);
    let msg = ingest_feature_modes(&manifest, None, &[rep]).unwrap_err().to_string();
    assert!(msg.contains("mode 1") && msg.contains("expected 5") && msg.contains("found 4"), "{msg}");
}

#[test]
fn model_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_synthetic(&small_spec(6)).unwrap();
    let train = data.split(Split::Train);
    let probes = data.split(Split::Test);
    for method in [Method::Pgm, Method::NmodeWgds] {
        let model = fit(&train, &PipelineConfig::with_method(method)).unwrap();
        let path = dir.path().join("model.nmm");
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.config, model.config);
        assert_eq!(back.weights, model.weights);
        assert_eq!(back.fisher, model.fisher);
        assert_eq!(back.search_trace, model.search_trace);
        assert_eq!(format!("{:?}", back.class_angles), format!("{:?}", model.class_angles));
        assert_eq!(back.class_angles.is_some(), method.uses_gds());
        for s in &probes.samples {
            let (a, b) = (model.classify(s).unwrap(), back.classify(s).unwrap());
            assert_eq!(a.label, b.label);
            assert_eq!(a.distance.to_bits(), b.distance.to_bits());
        }

        let bytes = fs::read(&path).unwrap();
        assert!(matches!(decode_model(&bytes[..bytes.len() - 10]), Err(Error::Checksum { .. })));
        let wrong = DenseTensor::zeros(vec![6, 7, 4]).unwrap();
        let err = back.classify(&Sample::new(wrong)).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)), "{err}");
    }
}
