use approx::assert_relative_eq;
use proptest::prelude::*;

use inview_core::reconstruct::{apply_diffraction, backproject_geometric, backproject_normal, PsfModel};
use inview_core::{
    capture, reconstruct, CaptureSettings, OpticalSystemConfig, PlaneGrid, PointEmitter, ReconstructOptions,
    Scene, TiltedPlaneSpec,
};

fn cfg(m: usize) -> OpticalSystemConfig {
    OpticalSystemConfig::new(m, m, 10.0, 50.0, 35.0).with_z_i_override(Some(360.0))
}

fn emitter(x: f64, y: f64, z: f64) -> Scene {
    Scene {
        points: vec![PointEmitter { x, y, z, intensity: 1.0 }],
        planes: Vec::new(),
    }
}

#[test]
fn captured_point_is_recovered_in_place() {
    let c = cfg(6);
    let settings = CaptureSettings::filling(&c, 100);
    for (x0, y0, z0) in [(0.0, 0.0, 250.0), (3.3, -1.7, 200.0), (-6.0, 4.5, 300.0)] {
        let (eis, report) = capture(&emitter(x0, y0, z0), &c, &settings).unwrap();
        assert!(report.vignetted < report.projections);
        let grid = PlaneGrid::new(12.0, 12.0, 0.2).unwrap();
        let r = backproject_geometric(&eis, &TiltedPlaneSpec::new(0.0, 0.0, z0, grid).unwrap()).unwrap();
        let (i, j) = r.field.argmax();
        assert!((r.field.x(i) - x0).abs() <= grid.sample_pitch, "x: {} vs {x0}", r.field.x(i));
        assert!((r.field.y(j) - y0).abs() <= grid.sample_pitch, "y: {} vs {y0}", r.field.y(j));
    }
}

#[test]
fn zero_tilt_matches_the_normal_view_path() {
    let c = cfg(4);
    let (eis, _) = capture(&emitter(1.0, 2.0, 180.0), &c, &CaptureSettings::filling(&c, 40)).unwrap();
    for grid in [PlaneGrid::new(8.0, 5.0, 0.25).unwrap(), PlaneGrid::new(3.0, 3.0, 0.07).unwrap()] {
        let tilted = backproject_geometric(&eis, &TiltedPlaneSpec::new(0.0, 0.0, 180.0, grid).unwrap()).unwrap();
        let normal = backproject_normal(&eis, 180.0, &grid).unwrap();
        let peak = normal.max();
        assert!(peak > 0.0);
        for (a, b) in tilted.field.data.iter().zip(&normal.data) {
            assert!((a - b).abs() <= 1e-12 * peak);
        }
    }
}

#[test]
fn single_strip_equals_one_global_convolution() {
    let c = cfg(4);
    let (eis, _) = capture(&emitter(0.5, 0.0, 360.0), &c, &CaptureSettings::filling(&c, 200)).unwrap();
    let grid = PlaneGrid::new(1.0, 1.0, 0.01).unwrap();
    let plane = TiltedPlaneSpec::new(0.0, 0.0, 360.0, grid).unwrap();
    let geo = backproject_geometric(&eis, &plane).unwrap().field;
    let model = PsfModel::Pupil { kernel_size: 512, pupil_sample_pitch: Some(10.0 / 96.0) };
    let narrow = apply_diffraction(&geo, &plane, &c, Some(0.01), model).unwrap();
    let wide = apply_diffraction(&geo, &plane, &c, Some(5.0), model).unwrap();
    assert_eq!(narrow.data, wide.data);
}

#[test]
fn diffraction_conserves_energy() {
    let c = cfg(4);
    let (eis, _) = capture(&emitter(0.0, 0.0, 360.0), &c, &CaptureSettings::filling(&c, 300)).unwrap();
    for tx in [0.0, 12.0] {
        let grid = PlaneGrid::new(1.2, 1.2, 0.005).unwrap();
        let plane = TiltedPlaneSpec::new(tx, 0.0, 360.0, grid).unwrap();
        let geo = reconstruct(&eis, &plane, &ReconstructOptions::geometric()).unwrap().field.sum();
        let dif = reconstruct(&eis, &plane, &ReconstructOptions::diffraction()).unwrap().field.sum();
        assert!((dif / geo - 1.0).abs() < 0.01, "tilt {tx}: {dif} vs {geo}");
    }
}

#[test]
fn impulse_psf_reproduces_geometric_mode_on_tilted_planes() {
    let c = cfg(4);
    let (eis, _) = capture(&emitter(-1.0, 1.0, 220.0), &c, &CaptureSettings::filling(&c, 32)).unwrap();
    let grid = PlaneGrid::new(10.0, 8.0, 0.2).unwrap();
    for (tx, ty) in [(0.0, 0.0), (15.0, 0.0), (-20.0, 10.0)] {
        let plane = TiltedPlaneSpec::new(tx, ty, 220.0, grid).unwrap();
        let geo = reconstruct(&eis, &plane, &ReconstructOptions::geometric()).unwrap();
        let opts = ReconstructOptions { psf: PsfModel::Impulse, ..ReconstructOptions::diffraction() };
        let imp = reconstruct(&eis, &plane, &opts).unwrap();
        let peak = geo.field.max();
        for (a, b) in geo.field.data.iter().zip(&imp.field.data) {
            assert!((a - b).abs() <= 1e-12 * peak);
        }
    }
}

#[test]
fn defocused_reconstruction_is_wider() {
    let c = cfg(6);
    let (eis, _) = capture(&emitter(0.0, 0.0, 300.0), &c, &CaptureSettings::filling(&c, 100)).unwrap();
    let grid = PlaneGrid::new(15.0, 15.0, 0.1).unwrap();
    let at = |z: f64| {
        let f = backproject_geometric(&eis, &TiltedPlaneSpec::new(0.0, 0.0, z, grid).unwrap()).unwrap().field;
        f.max() / f.sum()
    };
    assert!(at(300.0) > at(390.0));
}

#[test]
fn central_image_of_axial_point_is_mirror_symmetric() {
    let c = cfg(5);
    let (eis, _) = capture(&emitter(0.0, 0.0, 240.0), &c, &CaptureSettings::filling(&c, 41)).unwrap();
    let (nx, ny) = (eis.pixels_x, eis.pixels_y);
    for p in 0..5 {
        for q in 0..5 {
            let a = eis.image(p, q);
            let b = eis.image(4 - p, 4 - q);
            for j in 0..ny {
                for i in 0..nx {
                    let mirrored = b[(ny - 1 - j) * nx + (nx - 1 - i)];
                    assert_relative_eq!(a[j * nx + i], mirrored, max_relative = 1e-12, epsilon = 1e-300);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capture_is_linear(
        x in -8.0..8.0f64,
        y in -8.0..8.0f64,
        z in 100.0..500.0f64,
        exp in -20i32..20,
        a in 0.1..10.0f64,
    ) {
        let c = cfg(3);
        let settings = CaptureSettings::filling(&c, 24);
        let scene = emitter(x, y, z);
        let (base, _) = capture(&scene, &c, &settings).unwrap();
        let pow2 = 2f64.powi(exp);
        let (scaled, _) = capture(&scene.scaled(pow2), &c, &settings).unwrap();
        let expected = base.scaled(pow2);
        prop_assert_eq!(scaled.images(), expected.images());
        let (general, _) = capture(&scene.scaled(a), &c, &settings).unwrap();
        for (g, b) in general.images().iter().flatten().zip(base.images().iter().flatten()) {
            prop_assert!((g - a * b).abs() <= 1e-14 * (a * b).abs());
        }
    }

    #[test]
    fn reconstruction_is_non_negative(tx in -40.0..40.0f64, ty in -40.0..40.0f64) {
        let c = cfg(3);
        let (eis, _) = capture(&emitter(1.0, -1.0, 200.0), &c, &CaptureSettings::filling(&c, 16)).unwrap();
        let plane = TiltedPlaneSpec::new(tx, ty, 200.0, PlaneGrid::new(6.0, 6.0, 0.3).unwrap()).unwrap();
        let r = reconstruct(&eis, &plane, &ReconstructOptions::geometric()).unwrap();
        prop_assert!(r.field.data.iter().all(|&v| v >= 0.0));
        prop_assert_eq!((r.field.nx, r.field.ny), plane.grid.counts());
    }
}
