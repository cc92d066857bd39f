use std::ffi::CStr;
use std::ptr;

use lmcf_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe {
        lmcf_last_error_message(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

fn ale(alpha: &[f64], a: i64, b: i64) -> *mut LmcfAle {
    let mut h = ptr::null_mut();
    let s = unsafe { lmcf_ale_new(alpha.len(), alpha.as_ptr(), 0.0, a, b, &mut h) };
    assert_eq!(s, LmcfStatus::Ok, "{}", last_error());
    h
}

#[test]
fn vertices_of_the_n2_polygon() {
    let h = ale(&[1.0, 1.0], 1, 1);
    let mut xy = [0.0; 2];
    let expect = [[3.0, 0.0], [1.0, -1.0], [0.0, -2.0]];
    for (k, e) in expect.iter().enumerate() {
        assert_eq!(
            unsafe { lmcf_ale_vertex(h, k, xy.as_mut_ptr()) },
            LmcfStatus::Ok
        );
        assert_eq!(xy, *e);
    }
    assert_eq!(
        unsafe { lmcf_ale_vertex(h, 3, xy.as_mut_ptr()) },
        LmcfStatus::InvalidArgument
    );
    unsafe { lmcf_ale_free(h) };
}

#[test]
fn solve_level_round_trip() {
    let h = ale(&[1.0, 2.0], 1, 1);
    let dim = unsafe { lmcf_ale_slice_dim(h) };
    assert_eq!(dim, 6);
    let mut p = vec![0.0; dim];
    let mut xy = [0.0; 2];
    for sheet in 0..4 {
        assert_eq!(
            unsafe { lmcf_ale_solve_level(h, 4.0, -1.5, sheet, p.as_mut_ptr(), p.len()) },
            LmcfStatus::Ok
        );
        assert_eq!(
            unsafe { lmcf_ale_mu_g(h, p.as_ptr(), p.len(), xy.as_mut_ptr()) },
            LmcfStatus::Ok
        );
        assert!(
            (xy[0] - 4.0).abs() < 1e-9 && (xy[1] + 1.5).abs() < 1e-9,
            "{xy:?}"
        );
    }
    assert_eq!(
        unsafe { lmcf_ale_solve_level(h, 4.0, -1.5, 4, p.as_mut_ptr(), p.len()) },
        LmcfStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { lmcf_ale_solve_level(h, 4.0, -1.5, 0, p.as_mut_ptr(), 2) },
        LmcfStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { lmcf_ale_solve_level(h, -5.0, 0.0, 0, p.as_mut_ptr(), p.len()) },
        LmcfStatus::OutsideDomain
    );
    assert!(last_error().contains("outside the moment polygon"));
    unsafe { lmcf_ale_free(h) };
}

#[test]
fn schedule_and_weights() {
    let h = ale(&[1.0], 1, 1);
    let mut times = [0.0; 2];
    let (mut k0, mut t) = (0i64, 0.0);
    assert_eq!(
        unsafe { lmcf_ale_schedule(h, 2.0, times.as_mut_ptr(), 2, &mut k0, &mut t) },
        LmcfStatus::Ok
    );
    assert_eq!((times, k0, t), ([1.0, 3.0], 0, 1.0));
    let (mut l1, mut l2) = (0, 0);
    assert_eq!(
        unsafe { lmcf_ale_blowup_weights(h, 0, &mut l1, &mut l2) },
        LmcfStatus::Ok
    );
    assert_eq!((l1, l2), (3, -2));
    assert_eq!(
        unsafe { lmcf_ale_schedule(h, 1.0, times.as_mut_ptr(), 2, &mut k0, &mut t) },
        LmcfStatus::OnFixedLevel
    );
    unsafe { lmcf_ale_free(h) };
}

#[test]
fn ale_flow_trajectory() {
    let h = ale(&[1.0], 1, 1);
    let mut tr = ptr::null_mut();
    assert_eq!(
        unsafe { lmcf_ale_flow(h, 2.0, 4, 0.2, 0.01, &mut tr) },
        LmcfStatus::Ok,
        "{}",
        last_error()
    );
    unsafe {
        assert_eq!(lmcf_trajectory_seeds(tr), 16);
        assert_eq!(lmcf_trajectory_dim(tr), 4);
        let n = lmcf_trajectory_samples(tr);
        let mut t = 0.0;
        assert_eq!(lmcf_trajectory_time(tr, n - 1, &mut t), LmcfStatus::Ok);
        assert!((t - 0.2).abs() < 1e-12);
        assert!(lmcf_trajectory_max_drift(tr) < 1e-8);
        let mut p = [0.0; 4];
        assert_eq!(
            lmcf_trajectory_point(tr, n - 1, 3, p.as_mut_ptr(), 4),
            LmcfStatus::Ok
        );
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(
            lmcf_trajectory_point(tr, n, 0, p.as_mut_ptr(), 4),
            LmcfStatus::NotFound
        );
        lmcf_trajectory_free(tr);
        lmcf_ale_free(h);
    }
}

#[test]
fn shrinker_handle() {
    let w = [1i64, 1];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(lmcf_shrinker_new(w.as_ptr(), 2, &mut h), LmcfStatus::Ok);
        let mut a = 0.0;
        assert_eq!(lmcf_shrinker_alpha_c(h, 1.0, &mut a), LmcfStatus::Ok);
        assert_eq!(a, -1.0);
        let mut tr = ptr::null_mut();
        assert_eq!(
            lmcf_shrinker_flow(h, 1.0, 8, 7, 0.25, 0.0, &mut tr),
            LmcfStatus::Ok
        );
        assert!(lmcf_trajectory_max_drift(tr) < 1e-8);
        lmcf_trajectory_free(tr);
        lmcf_shrinker_free(h);
    }
    let zero = [1i64, 0];
    assert_eq!(
        unsafe { lmcf_shrinker_new(zero.as_ptr(), 2, &mut h) },
        LmcfStatus::OutsideDomain
    );
    assert!(last_error().contains("zero"));
}

#[test]
fn null_handling() {
    unsafe {
        assert_eq!(
            lmcf_ale_vertex(ptr::null(), 0, ptr::null_mut()),
            LmcfStatus::NullPointer
        );
        assert_eq!(
            lmcf_ale_new(1, [1.0].as_ptr(), 0.0, 1, 1, ptr::null_mut()),
            LmcfStatus::NullPointer
        );
        assert_eq!(lmcf_trajectory_samples(ptr::null()), 0);
        assert!(lmcf_trajectory_max_drift(ptr::null()).is_nan());
        lmcf_ale_free(ptr::null_mut());
        lmcf_shrinker_free(ptr::null_mut());
        lmcf_trajectory_free(ptr::null_mut());
        assert_eq!(
            lmcf_last_error_message(ptr::null_mut(), 0),
            "out is null".len()
        );
    }
}

#[test]
fn invalid_action_is_reported() {
    let mut h = ptr::null_mut();
    // b = -l a for l = 1 is excluded.
    let s = unsafe { lmcf_ale_new(1, [1.0].as_ptr(), 0.0, 1, -1, &mut h) };
    assert_ne!(s, LmcfStatus::Ok);
    assert!(h.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(lmcf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/lmcf.h");
    let header = std::fs::read_to_string(path).unwrap();
    for name in [
        "lmcf_ale_new",
        "lmcf_ale_free",
        "lmcf_ale_solve_level",
        "lmcf_ale_schedule",
        "lmcf_shrinker_new",
        "lmcf_trajectory_point",
        "lmcf_last_error_message",
        "typedef struct LmcfAle LmcfAle;",
        "LMCF_STATUS_BUFFER_TOO_SMALL = 8",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/include/lmcf.h");
    let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c", path])
        .output()
    else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
