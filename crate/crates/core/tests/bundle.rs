use pbrgen_core::camera::Camera;
use pbrgen_core::fixtures::studio;
use pbrgen_core::groundtruth::{extract_boundaries, read_bundle, write_bundle, Backend, FrameBundle, Gray16Image};
use pbrgen_core::raster::{render_visibility, shade_directional, DirectionalRig};
use pbrgen_core::scene::AccelScene;
use pbrgen_core::{Error, Vec3};

fn bundle() -> FrameBundle {
    let accel = AccelScene::new(studio());
    let cam = Camera::look_at(Vec3::new(2.0, 4.0, -3.0), Vec3::new(2.0, 0.5, 1.5), 70f64.to_radians(), 48, 36).unwrap();
    let vis = render_visibility(&accel, &cam);
    let color = shade_directional(&cam, &vis, &DirectionalRig::default()).unwrap();
    let names = accel.scene().categories.names().to_vec();
    FrameBundle::from_vis(&vis, color, &cam, 3, Backend::RasterDl, 99, &names).unwrap()
}

#[test]
fn round_trip_is_lossless() {
    let b = bundle();
    b.check().unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&b, dir.path()).unwrap();
    let back = read_bundle(dir.path()).unwrap();
    assert_eq!(back.color, b.color);
    assert_eq!(back.depth, b.depth);
    assert_eq!(back.normal, b.normal);
    assert_eq!(back.semantic, b.semantic);
    assert_eq!(back.instance, b.instance);
    assert_eq!(back.boundary, b.boundary);
    assert_eq!((back.camera_id, back.backend, back.seed), (3, Backend::RasterDl, 99));
    assert_eq!(back.categories, b.categories);
    let (w, h) = b.dimensions();
    assert!((back.camera.yaw - b.camera.yaw).abs() < 1e-9 && (w, h) == (48, 36));
}

#[test]
fn generated_channels_are_consistent() {
    let b = bundle();
    let (w, h) = b.dimensions();
    let ids = b.instance_ids();
    let bnd = extract_boundaries(w, h, &ids);
    assert!(b.boundary.as_raw().iter().zip(&bnd).all(|(&p, &e)| (p == 255) == e));
    for i in 0..ids.len() {
        let bg = ids[i] == 0;
        assert_eq!(bg, b.semantic.as_raw()[i] == 0);
        assert_eq!(bg, b.depth.as_raw()[i] == 0);
        let n = &b.normal.as_raw()[3 * i..3 * i + 3];
        assert_eq!(bg, n == [0, 0, 0]);
    }
    assert!(ids.iter().any(|&i| i != 0) && ids.iter().any(|&i| i == 0));
}

#[test]
fn missing_channel_is_named() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle(), dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("normal.png")).unwrap();
    match read_bundle(dir.path()) {
        Err(Error::MissingChannel(c)) => assert_eq!(c, "normal"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn resolution_mismatch_is_detected() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle(), dir.path()).unwrap();
    Gray16Image::new(5, 5).save(dir.path().join("depth.png")).unwrap();
    assert!(matches!(read_bundle(dir.path()), Err(Error::ResolutionMismatch(_))));
}

#[test]
fn unknown_backend_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle(), dir.path()).unwrap();
    let meta = dir.path().join("meta.txt");
    let text = std::fs::read_to_string(&meta).unwrap().replace("backend=raster-dl", "backend=opengl");
    std::fs::write(&meta, text).unwrap();
    assert!(matches!(read_bundle(dir.path()), Err(Error::UnknownBackend(b)) if b == "opengl"));
}

#[test]
fn inconsistent_bundle_is_not_written() {
    let mut b = bundle();
    let i = b.instance_ids().iter().position(|&id| id == 0).unwrap();
    b.depth.as_mut()[i] = 1234;
    let dir = tempfile::tempdir().unwrap();
    assert!(write_bundle(&b, dir.path()).is_err());
}
