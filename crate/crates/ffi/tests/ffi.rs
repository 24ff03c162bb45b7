use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use repdyn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(repdyn_last_error()) }.to_string_lossy().into_owned()
}

fn system(kind: u32, a: f64, rho: f64, beta: f64, tb: f64, tr: f64) -> *mut RepdynSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { repdyn_system_new(kind, a, rho, beta, tb, tr, &mut sys) }, RepdynStatus::Ok);
    sys
}

#[test]
fn rhs_matches_replicator_formula() {
    let sys = system(REPDYN_SCENARIO_CONST, 0.15, 0.9, 0.25, 0.0, 0.0);
    let x = 0.4;
    let mut out = [0.0];
    assert_eq!(unsafe { repdyn_system_rhs(sys, [x].as_ptr(), 1, out.as_mut_ptr()) }, RepdynStatus::Ok);
    let (a, rho, beta) = (0.15, 0.9, 0.25);
    let p_c = rho * (1.0 - beta * (1.0 - x));
    let p_a = rho * (1.0 + beta * x);
    let expect = x * (1.0 - x) * (p_c / (a + p_c) - p_a / (1.0 + a));
    assert!((out[0] - expect).abs() < 1e-15);
    assert_eq!(unsafe { repdyn_system_dim(sys) }, 1);
    unsafe { repdyn_system_free(sys) };
}

#[test]
fn integrate_and_copy() {
    let sys = system(REPDYN_SCENARIO_BETA, 0.8, 0.2, 0.5, 400.0, 0.0);
    let mut tr = ptr::null_mut();
    let s0 = [0.5, 0.5];
    assert_eq!(unsafe { repdyn_integrate(sys, s0.as_ptr(), 2, 100.0, 10.0, &mut tr) }, RepdynStatus::Ok);
    let n = unsafe { repdyn_trajectory_len(tr) };
    let d = unsafe { repdyn_trajectory_dim(tr) };
    assert_eq!((n, d), (11, 2));
    let mut times = vec![0.0; n];
    let mut states = vec![0.0; n * d];
    assert_eq!(unsafe { repdyn_trajectory_copy(tr, times.as_mut_ptr(), states.as_mut_ptr()) }, RepdynStatus::Ok);
    assert_eq!(times[10], 100.0);
    assert_eq!(&states[..2], &s0);
    unsafe {
        repdyn_trajectory_free(tr);
        repdyn_system_free(sys);
    }
}

#[test]
fn classify_and_hopf() {
    let sys = system(REPDYN_SCENARIO_BETA, 0.8, 0.2, 0.5, 400.0, 0.0);
    let mut o = -7;
    assert_eq!(unsafe { repdyn_classify(sys, [0.5, 0.5].as_ptr(), 2, &mut o) }, RepdynStatus::Ok);
    assert_eq!(o, REPDYN_OUTCOME_LIMIT_CYCLE);
    unsafe { repdyn_system_free(sys) };

    let mut tau = 0.0;
    assert_eq!(unsafe { repdyn_hopf_threshold(REPDYN_SCENARIO_BETA, 0.8, 0.2, 0.5, &mut tau) }, RepdynStatus::Ok);
    assert!(tau > 104.0 && tau < 200.0, "{tau}");
    assert_eq!(unsafe { repdyn_hopf_threshold(REPDYN_SCENARIO_BETA, 0.8, 0.65, 0.5, &mut tau) }, RepdynStatus::Ok);
    assert!(tau.is_nan());
    let st = unsafe { repdyn_hopf_threshold(REPDYN_SCENARIO_CONST, 0.8, 0.2, 0.5, &mut tau) };
    assert_eq!(st, RepdynStatus::Unsupported);
}

#[test]
fn errors_are_reported() {
    let mut sys = ptr::null_mut();
    let st = unsafe { repdyn_system_new(REPDYN_SCENARIO_CONST, 0.15, 1.5, 0.2, 0.0, 0.0, &mut sys) };
    assert_eq!(st, RepdynStatus::InvalidArgument);
    assert!(sys.is_null());
    assert!(last_error().contains("rho"), "{}", last_error());
    assert_eq!(unsafe { repdyn_system_new(9, 0.15, 0.5, 0.2, 0.0, 0.0, &mut sys) }, RepdynStatus::InvalidArgument);
    let st = unsafe { repdyn_system_new(REPDYN_SCENARIO_RHO, 0.15, 0.5, 0.2, 0.0, -1.0, &mut sys) };
    assert_eq!(st, RepdynStatus::InvalidArgument);
    assert_eq!(
        unsafe { repdyn_system_new(0, 0.1, 0.5, 0.2, 0.0, 0.0, ptr::null_mut()) },
        RepdynStatus::NullPointer
    );

    let sys = system(REPDYN_SCENARIO_CONST, 0.15, 0.9, 0.25, 0.0, 0.0);
    let mut out = [0.0; 2];
    let st = unsafe { repdyn_system_rhs(sys, [0.5, 0.5].as_ptr(), 2, out.as_mut_ptr()) };
    assert_eq!(st, RepdynStatus::InvalidArgument);
    assert!(!last_error().is_empty());
    let mut o = 0;
    assert_eq!(unsafe { repdyn_classify(sys, ptr::null(), 1, &mut o) }, RepdynStatus::NullPointer);
    let mut tr = ptr::null_mut();
    assert_eq!(unsafe { repdyn_integrate(sys, [0.5].as_ptr(), 1, 10.0, 1.0, &mut tr) }, RepdynStatus::Ok);
    assert!(last_error().is_empty());
    unsafe {
        repdyn_trajectory_free(tr);
        repdyn_system_free(sys);
        repdyn_system_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(repdyn_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compile and run a C program against the generated header and the static
/// library. Skipped when no C compiler is available.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("librepdyn_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "repdyn.h"
int main(void) {
    RepdynSystem *sys = NULL;
    if (repdyn_system_new(REPDYN_SCENARIO_CONST, 0.15, 0.8, 0.2, 0.0, 0.0, &sys) != REPDYN_STATUS_OK) return 1;
    double x0 = 0.5;
    RepdynTrajectory *tr = NULL;
    if (repdyn_integrate(sys, &x0, 1, 5000.0, 100.0, &tr) != REPDYN_STATUS_OK) return 2;
    size_t n = repdyn_trajectory_len(tr);
    double t[64], s[64];
    if (n > 64 || repdyn_trajectory_copy(tr, t, s) != REPDYN_STATUS_OK) return 3;
    printf("%zu %.6f\n", n, s[n - 1]);
    repdyn_trajectory_free(tr);
    RepdynSystem *bad = NULL;
    if (repdyn_system_new(REPDYN_SCENARIO_CONST, -1.0, 0.8, 0.2, 0.0, 0.0, &bad) != REPDYN_STATUS_INVALID_ARGUMENT) return 4;
    if (repdyn_last_error()[0] == '\0') return 5;
    repdyn_system_free(sys);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = tmp.path().join("main");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.trim(), "51 1.000000");
}
