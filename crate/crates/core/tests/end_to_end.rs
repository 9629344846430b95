use tristruct_core::editing::{EditPlan, EditScript, EditedStructure};
use tristruct_core::fitting::{fit, FitConfig};
use tristruct_core::geometry::rotate_color;
use tristruct_core::imaging::{decode_cloud_binary, parse_ply_vertices, save_image};
use tristruct_core::pipeline::{recolor_image, Init};
use tristruct_core::testkit::fixtures;
use tristruct_core::{
    assign, export_cloud, load_image, srgb_to_linear, Error, IlluminantAxis, LinearColor, TriangularStructure,
};

#[test]
fn fixture_materials_are_recovered() {
    let img = fixtures::fixture("three_materials").unwrap();
    let init = Init::Uniform.structure(IlluminantAxis::gray(), 3).unwrap();
    let out = fit(&img.to_linear(), &init, &FitConfig { stride: 3, ..FitConfig::default() }).unwrap();
    assert!(out.report.converged);
    let mut want = [20f64, 140.0, 260.0].map(|d| tristruct_core::color::wrap_angle(d.to_radians()));
    want.sort_by(f64::total_cmp);
    for (got, want) in out.structure.angles().iter().zip(want) {
        assert!((got - want).abs() < 0.05, "{got} vs {want}");
    }
}

#[test]
fn structure_and_script_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = TriangularStructure::from_angles(IlluminantAxis::gray(), &[0.1, 1.9, -2.2]).unwrap();
    let path = dir.path().join("s.json");
    s.save(&path).unwrap();
    assert_eq!(TriangularStructure::load(&path).unwrap(), s);

    let script = EditScript::uniform_rotation(&s, 0.4);
    let spath = dir.path().join("e.json");
    std::fs::write(&spath, script.to_json()).unwrap();
    assert_eq!(EditScript::load(&spath).unwrap(), script);

    let missing = dir.path().join("missing.json");
    assert!(matches!(TriangularStructure::load(&missing), Err(Error::Io { .. })));
}

#[test]
fn png_round_trip_and_lossy_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let img = fixtures::fixture("sunset_gradient").unwrap();
    let png = dir.path().join("x.png");
    save_image(&img, &png).unwrap();
    assert_eq!(load_image(&png).unwrap(), img);
    let jpg = dir.path().join("x.jpg");
    assert!(matches!(save_image(&img, &jpg), Err(Error::LossyOutput)));
}

#[test]
fn recolor_uniform_rotation_is_rigid() {
    let img = fixtures::fixture("five_materials").unwrap();
    let linear = img.to_linear();
    let s = fit(&linear, &Init::Uniform.structure(IlluminantAxis::gray(), 5).unwrap(), &FitConfig::default())
        .unwrap()
        .structure;
    let script = EditScript::uniform_rotation(&s, 1.0);
    let out = recolor_image(&img, &s, &script).unwrap();
    let axis = s.axis();
    let mut checked = 0;
    for (o, p) in out.pixels().iter().zip(img.pixels()) {
        let rotated = rotate_color(srgb_to_linear(*p), axis, 1.0);
        if !rotated.in_gamut() {
            continue;
        }
        let want = tristruct_core::linear_to_srgb(rotated).unwrap();
        for (x, y) in o.channels().iter().zip(want.channels()) {
            assert!((*x as i32 - y as i32).abs() <= 1, "{o:?} vs {want:?}");
        }
        checked += 1;
    }
    assert!(checked > img.len() / 4, "{checked}");
}

#[test]
fn filter_plan_agrees_with_free_functions() {
    let img = fixtures::fixture("two_materials_bleeding").unwrap();
    let linear: Vec<LinearColor> = img.to_linear().into_iter().step_by(97).collect();
    let s = TriangularStructure::uniform(IlluminantAxis::gray(), 2).unwrap();
    let asg = assign(&linear, &s);
    let es = EditedStructure::identity(s.clone());
    let plan = EditPlan::new(&es, 0.5).unwrap();
    for (n, &c) in linear.iter().enumerate() {
        let direct = tristruct_core::filter_point(c, &s, asg.get(n), 0.5);
        assert!(plan.transform(c, asg.get(n)).max_abs_diff(direct) < 1e-12);
    }
}

#[test]
fn cloud_exports_agree() {
    let img = fixtures::fixture("sky_and_grass").unwrap();
    let s = TriangularStructure::uniform(IlluminantAxis::gray(), 4).unwrap();
    let export = export_cloud(&img, Some(&s), 5000).unwrap();
    let ply = parse_ply_vertices(&export.to_ply()).unwrap();
    let bin = decode_cloud_binary(&export.to_binary()).unwrap();
    assert_eq!(ply.len(), export.points.len() + 2 + 4);
    assert_eq!(bin.points.len(), export.points.len());
    for (k, ((pos, col), (bpos, bcol))) in ply.iter().zip(&bin.points).enumerate() {
        let src = img.pixels()[k * export.stride];
        let lin = srgb_to_linear(src);
        assert_eq!(*pos, [lin.r, lin.g, lin.b]);
        assert_eq!(*bpos, [lin.r as f32, lin.g as f32, lin.b as f32]);
        assert_eq!(col, bcol);
    }
    assert_eq!(bin.structure.unwrap().2.len(), 4);
}
