use std::ffi::{c_char, CString};
use std::process::Command;
use std::ptr;

use filament_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 512];
    let n = unsafe { filament_last_error(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.truncate(n.min(buf.len()) - 1);
    String::from_utf8(buf).unwrap()
}

#[test]
fn profile_solve_eval_free() {
    let mut p: *mut FilamentProfile = ptr::null_mut();
    let s = unsafe { filament_profile_solve(FilamentProfileMode::Pair, 20.0, 0.0, 40.0, 4001, 1e-12, 100, &mut p) };
    assert_eq!(s, FilamentStatus::Ok, "{}", last_error());
    let mut info = FilamentProfileInfo::default();
    assert_eq!(unsafe { filament_profile_info(p, &mut info) }, FilamentStatus::Ok);
    assert_eq!(info.nodes, 4001);
    assert!(info.max_ratio < 1.0);
    let (mut re, mut im) = (0.0, 0.0);
    assert_eq!(unsafe { filament_profile_eval(p, 0.0, &mut re, &mut im) }, FilamentStatus::Ok);
    assert_eq!((re, im), (1.0, 0.0));
    let t = 0.04;
    assert_eq!(unsafe { filament_profile_eval_h(p, t, 0.0, &mut re, &mut im) }, FilamentStatus::Ok);
    assert!((re - t.sqrt()).abs() < 1e-14 && im.abs() < 1e-14);

    let mut small = vec![0.0; 10];
    let s = unsafe {
        filament_profile_samples(p, small.as_mut_ptr(), small.as_mut_ptr(), small.as_mut_ptr(), small.len())
    };
    assert_eq!(s, FilamentStatus::BufferTooSmall);
    let (mut x, mut ur, mut ui) = (vec![0.0; 4001], vec![0.0; 4001], vec![0.0; 4001]);
    let s = unsafe { filament_profile_samples(p, x.as_mut_ptr(), ur.as_mut_ptr(), ui.as_mut_ptr(), 4001) };
    assert_eq!(s, FilamentStatus::Ok);
    assert_eq!(x[4000], 40.0);
    unsafe { filament_profile_free(p) };
}

#[test]
fn error_codes() {
    let mut p: *mut FilamentProfile = ptr::null_mut();
    let s = unsafe { filament_profile_solve(FilamentProfileMode::Pair, -1.0, 0.0, 40.0, 401, 1e-12, 100, &mut p) };
    assert_eq!(s, FilamentStatus::InvalidArgument);
    assert!(p.is_null());
    assert!(last_error().contains("α"));
    let s = unsafe { filament_profile_solve(FilamentProfileMode::Pair, 0.1, 0.0, 40.0, 4001, 1e-12, 100, &mut p) };
    assert_eq!(s, FilamentStatus::NoConvergence);
    let s = unsafe { filament_profile_solve(FilamentProfileMode::Pair, 20.0, 0.0, 40.0, 401, 1e-12, 100, ptr::null_mut()) };
    assert_eq!(s, FilamentStatus::NullPointer);
    let path = CString::new("/nonexistent/profile.json").unwrap();
    assert_eq!(unsafe { filament_profile_load(path.as_ptr(), &mut p) }, FilamentStatus::Io);
    let cmd = CString::new("launch").unwrap();
    let cfg = CString::new("{}").unwrap();
    assert_eq!(unsafe { filament_run(cmd.as_ptr(), cfg.as_ptr()) }, FilamentStatus::InvalidArgument);
    unsafe { filament_profile_free(ptr::null_mut()) };
}

#[test]
fn pv_polygon_rotates() {
    let mut tr: *mut FilamentPvTrajectory = ptr::null_mut();
    let s = unsafe { filament_pv_integrate(3, 1.0, 0, 0.0, 1.0, 1e-3, &mut tr) };
    assert_eq!(s, FilamentStatus::Ok, "{}", last_error());
    let (mut frames, mut n) = (0usize, 0usize);
    assert_eq!(unsafe { filament_pv_shape(tr, &mut frames, &mut n) }, FilamentStatus::Ok);
    assert_eq!((frames, n), (1001, 3));
    let (mut t, mut re, mut im) = (0.0, vec![0.0; 3], vec![0.0; 3]);
    let s = unsafe { filament_pv_frame(tr, frames - 1, &mut t, re.as_mut_ptr(), im.as_mut_ptr(), 3) };
    assert_eq!(s, FilamentStatus::Ok);
    // ω = (N−1)/2 = 1
    assert!((re[0] - t.cos()).abs() < 1e-8 && (im[0] - t.sin()).abs() < 1e-8);
    let s = unsafe { filament_pv_frame(tr, frames, &mut t, re.as_mut_ptr(), im.as_mut_ptr(), 3) };
    assert_eq!(s, FilamentStatus::InvalidArgument);
    unsafe { filament_pv_free(tr) };
}

#[test]
fn run_profile_command() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!(
        r#"{{"radial":{{"x_max":40.0,"m":4001}},"output_dir":{}}}"#,
        serde_json::to_string(dir.path()).unwrap()
    );
    let cmd = CString::new("profile").unwrap();
    let cfg = CString::new(cfg).unwrap();
    assert_eq!(unsafe { filament_run(cmd.as_ptr(), cfg.as_ptr()) }, FilamentStatus::Ok, "{}", last_error());
    let path = CString::new(dir.path().join("profile.json").to_str().unwrap()).unwrap();
    let mut p: *mut FilamentProfile = ptr::null_mut();
    assert_eq!(unsafe { filament_profile_load(path.as_ptr(), &mut p) }, FilamentStatus::Ok);
    unsafe { filament_profile_free(p) };
    assert!(dir.path().join("config.json").exists());
}

/// The generated header compiles as C and declares every entry point.
#[test]
fn header_compiles_as_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use_header.c");
    std::fs::write(
        &src,
        r#"#include "filament.h"
int probe(void) {
    FilamentProfile *p = 0;
    FilamentProfileInfo info;
    FilamentStatus s = filament_profile_solve(FILAMENT_PROFILE_MODE_PAIR, 20.0, 0.0, 40.0, 401, 1e-12, 50, &p);
    if (s == FILAMENT_STATUS_OK) { filament_profile_info(p, &info); filament_profile_free(p); }
    FilamentPvTrajectory *t = 0;
    filament_pv_integrate(3, 1.0, 0, 0.0, 1.0, 1e-3, &t);
    filament_pv_free(t);
    char buf[64];
    return (int)filament_last_error(buf, sizeof buf) + (int)filament_run("verify", "{}");
}
"#,
    )
    .unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.path().join("use_header.o"))
        .arg("-I")
        .arg(include)
        .arg(&src)
        .output()
        .expect("a C compiler on PATH");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
