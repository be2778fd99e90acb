use std::ffi::{CStr, CString};
use std::ptr;

use glueshadow_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gs_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn doubling() -> *mut GsMap {
    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { gs_map_new_piecewise_linear(2.0, 2.0, 0.5, &mut map) },
        GsStatus::Ok
    );
    map
}

#[test]
fn map_forward_and_inverse() {
    let map = doubling();
    unsafe {
        assert_eq!(gs_map_dim(map), 1);
        assert_eq!(gs_map_branch_count(map), 2);
        let mut out = 0.0;
        assert_eq!(gs_map_forward(map, &0.3, &mut out), GsStatus::Ok);
        assert_eq!(out, 0.6);
        assert_eq!(gs_map_inverse_branch(map, &0.9, &0.6, &mut out), GsStatus::Ok);
        assert_eq!(out, 0.8);
        assert_eq!(gs_map_forward(map, &f64::NAN, &mut out), GsStatus::Usage);
        assert!(!last_error().is_empty());
        gs_map_free(map);
    }
}

#[test]
fn invalid_parameters_and_null_pointers() {
    let mut map = ptr::null_mut();
    unsafe {
        assert_eq!(gs_map_new_piecewise_linear(-1.0, 2.0, 0.5, &mut map), GsStatus::Usage);
        assert!(map.is_null());
        assert!(last_error().contains("a"));
        assert_eq!(gs_map_new_neutral(0.5, 0.5, ptr::null_mut()), GsStatus::NullPointer);
        assert_eq!(gs_map_forward(ptr::null(), &0.1, &mut 0.0), GsStatus::NullPointer);
        assert!(gs_report_uniform_error(ptr::null()).is_nan());
        assert_eq!(gs_pseudo_len(ptr::null()), 0);
        gs_map_free(ptr::null_mut());
        gs_report_free(ptr::null_mut());
        gs_pseudo_free(ptr::null_mut());
    }
}

#[test]
fn planar_and_toral_maps() {
    let mut affine = ptr::null_mut();
    let mut torus = ptr::null_mut();
    unsafe {
        assert_eq!(
            gs_map_new_affine(
                2.0,
                0.5,
                [1.0, 0.0].as_ptr(),
                [1.0, 1.0].as_ptr(),
                [0.0, 0.0].as_ptr(),
                &mut affine
            ),
            GsStatus::Ok
        );
        assert_eq!(gs_map_dim(affine), 2);
        let mut out = [0.0; 2];
        assert_eq!(
            gs_map_forward(affine, [1.0, 1.0].as_ptr(), out.as_mut_ptr()),
            GsStatus::Ok
        );
        // (1, 1) is the contracting direction
        assert!((out[0] - 0.5).abs() < 1e-15 && (out[1] - 0.5).abs() < 1e-15);
        assert_eq!(gs_map_new_torus([2i64, 1, 1, 1].as_ptr(), &mut torus), GsStatus::Ok);
        assert_eq!(
            gs_map_forward(torus, [0.25, 0.5].as_ptr(), out.as_mut_ptr()),
            GsStatus::Ok
        );
        assert_eq!(out, [0.0, 0.75]);
        assert_eq!(gs_map_new_torus([1i64, 1, 0, 1].as_ptr(), &mut torus), GsStatus::Usage);
        gs_map_free(affine);
    }
}

#[test]
fn shadowing_run_through_handles() {
    let map = doubling();
    let mut pseudo = ptr::null_mut();
    let mut report = ptr::null_mut();
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        assert_eq!(
            gs_pseudo_generate(map, 0, 0.01, 1.0, 3, 2000, &mut pseudo),
            GsStatus::Ok
        );
        assert_eq!(gs_pseudo_len(pseudo), 2000);
        assert!(gs_pseudo_moment_count(pseudo) > 1000);
        assert_eq!(gs_parallel_glue(map, pseudo, &mut report), GsStatus::Ok);
        assert!(gs_report_defect(report) <= 1e-10);
        assert!(gs_report_level_count(report) > 5);
        let u = gs_report_uniform_error(report);
        assert!(u > 0.0 && u <= 0.02);
        assert!(gs_report_q_limsup(report) <= u && gs_report_limit_error(report) <= u);

        let mut bound = 0.0;
        assert_eq!(gs_report_check(report, 0, 0, 0.01, &mut bound), GsStatus::Ok);
        assert_eq!(bound, 0.02);
        assert_eq!(gs_report_check(report, 0, 0, 1e-6, &mut bound), GsStatus::BoundFailure);
        assert_eq!(gs_report_check(report, 2, 2, 0.01, &mut bound), GsStatus::BoundFailure);
        assert!(bound.is_nan());
        assert_eq!(gs_report_check(report, 9, 0, 0.01, &mut bound), GsStatus::Usage);

        let mut p = [0.0];
        assert_eq!(gs_report_point(report, 1999, p.as_mut_ptr()), GsStatus::Ok);
        assert_eq!(gs_report_point(report, 2000, p.as_mut_ptr()), GsStatus::Usage);

        let path = CString::new(dir.path().join("run.csv").to_str().unwrap()).unwrap();
        assert_eq!(gs_report_write_csv(report, pseudo, path.as_ptr()), GsStatus::Ok);
        let csv = std::fs::read_to_string(dir.path().join("run.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2001);

        assert_eq!(
            gs_pseudo_generate(map, 7, 0.01, 1.0, 3, 10, &mut pseudo),
            GsStatus::Usage
        );
        gs_report_free(report);
        gs_map_free(map);
    }
}

#[test]
fn neutral_failure_is_numerical_or_usage() {
    let mut map = ptr::null_mut();
    let mut pseudo = ptr::null_mut();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(gs_map_new_piecewise_linear(0.9, 2.0, 0.5, &mut map), GsStatus::Ok);
        assert_eq!(gs_pseudo_generate(map, 2, 0.3, 1.0, 1, 200, &mut pseudo), GsStatus::Ok);
        // non-full branches: the strict construction cannot always invert
        let s = gs_parallel_glue(map, pseudo, &mut report);
        assert!(matches!(s, GsStatus::Ok | GsStatus::Numerical), "{s:?}");
        if s == GsStatus::Numerical {
            assert!(report.is_null());
            assert!(!last_error().is_empty());
        }
        gs_report_free(report);
        gs_pseudo_free(pseudo);
        gs_map_free(map);
    }
}

#[test]
fn one_step_bounds() {
    let (mut u, mut inv, mut w, mut ordered) = (0.0, 0.0, 0.0, 0);
    unsafe {
        assert_eq!(
            gs_neutral_one_step_bounds(1.0, 1.0, 1.0, &mut u, &mut inv, &mut w, &mut ordered),
            GsStatus::Ok
        );
        assert_eq!(u, 0.5);
        assert!((inv - (5f64.sqrt() - 1.0) / 2.0).abs() < 1e-15);
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ordered, 1);
        assert_eq!(
            gs_neutral_one_step_bounds(
                1.0,
                1.0,
                0.0,
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            GsStatus::Usage
        );
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/glueshadow.h")).unwrap();
    for f in [
        "gs_map_new_piecewise_linear",
        "gs_map_new_neutral",
        "gs_map_new_affine",
        "gs_map_new_torus",
        "gs_map_free",
        "gs_map_forward",
        "gs_map_inverse_branch",
        "gs_pseudo_generate",
        "gs_parallel_glue",
        "gs_report_uniform_error",
        "gs_report_check",
        "gs_report_write_csv",
        "gs_last_error_message",
        "gs_neutral_one_step_bounds",
        "typedef struct GsMap GsMap;",
        "GS_STATUS_PANIC = 5",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
