use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use channel_metric_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(cm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn family(name: &str, params: Option<&str>, theta: f64) -> (CmStatus, *mut CmChannelPoint) {
    let name = CString::new(name).unwrap();
    let params = params.map(|p| CString::new(p).unwrap());
    let mut out = ptr::null_mut();
    let s = unsafe {
        cm_point_from_family(
            name.as_ptr(),
            params.as_ref().map_or(ptr::null(), |p| p.as_ptr()),
            theta,
            &mut out,
        )
    };
    (s, out)
}

#[test]
fn bitflip_metrics() {
    let (s, p) = family("bitflip", None, 0.1);
    assert_eq!(s, CmStatus::Ok);
    let (mut d_in, mut d_out) = (0, 0);
    unsafe {
        assert_eq!(cm_point_dims(p, &mut d_in, &mut d_out), CmStatus::Ok);
        assert_eq!((d_in, d_out), (2, 2));
        let mut v = 0.0;
        assert_eq!(cm_g_min(p, ptr::null(), &mut v), CmStatus::Ok);
        assert!((v - 1.0 / 0.09).abs() < 1e-6);
        assert_eq!(cm_g_r_output(p, ptr::null(), &mut v), CmStatus::Ok);
        assert!((v - 1.0 / 0.09).abs() < 1e-6);
        assert_eq!(cm_g_max_upper(p, &mut v), CmStatus::Ok);
        assert!((v - 1.0 / 0.09).abs() < 1e-3);
        let (mut r, mut capped) = (0.0, 7u8);
        assert_eq!(cm_cp_ball_radius(p, &mut r, &mut capped), CmStatus::Ok);
        assert!((r - 0.1).abs() < 1e-6);
        assert_eq!(capped, 0);
        cm_point_free(p);
    }
}

#[test]
fn options_are_validated() {
    let (_, p) = family("bitflip", None, 0.2);
    let mut o = cm_options_default();
    let mut v = 0.0;
    unsafe {
        o.restarts = 2;
        assert_eq!(cm_g_min(p, &o, &mut v), CmStatus::Ok);
        o.tol = 0.0;
        assert_eq!(cm_g_min(p, &o, &mut v), CmStatus::Config);
        assert!(last_error().contains("tol"));
        cm_point_free(p);
    }
}

#[test]
fn errors_and_nulls() {
    let (s, p) = family("bogus", None, 0.1);
    assert_eq!(s, CmStatus::Config);
    assert!(p.is_null());
    assert!(last_error().contains("bogus"));

    let (s, _) = family("depolarized_phase", Some("{\"r\": 2}"), 0.0);
    assert_eq!(s, CmStatus::Config);
    let (s, _) = family("depolarized_phase", Some("not json"), 0.0);
    assert_eq!(s, CmStatus::Config);

    let mut v = 0.0;
    unsafe {
        assert_eq!(cm_g_min(ptr::null(), ptr::null(), &mut v), CmStatus::NullPointer);
        assert_eq!(
            cm_point_from_family(ptr::null(), ptr::null(), 0.1, ptr::null_mut()),
            CmStatus::NullPointer
        );
        cm_point_free(ptr::null_mut());
    }
}

#[test]
fn spec_json_roundtrip() {
    let spec = CString::new(r#"{"name": "phase_unitary", "theta": 0.0}"#).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            cm_point_from_spec_json(spec.as_ptr(), &mut p),
            CmStatus::Ok,
            "{}",
            last_error()
        );
        let mut v = 0.0;
        assert_eq!(cm_g_min(p, ptr::null(), &mut v), CmStatus::Ok);
        assert!((v - 1.0).abs() < 1e-6);
        assert_eq!(cm_g_max_upper(p, &mut v), CmStatus::Ok);
        assert!(v.is_infinite());
        cm_point_free(p);
    }
    let bad = CString::new("{").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { cm_point_from_spec_json(bad.as_ptr(), &mut p) },
        CmStatus::Config
    );
}

#[test]
fn state_fishers() {
    // ρ = diag(0.75, 0.25), δ = diag(1, -1)/2
    let rho = [0.75, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25, 0.0];
    let delta = [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, -0.5, 0.0];
    let (mut s, mut r) = (0.0, 0.0);
    unsafe {
        assert_eq!(cm_sld_fisher(rho.as_ptr(), delta.as_ptr(), 2, &mut s), CmStatus::Ok);
        assert_eq!(cm_rld_fisher(rho.as_ptr(), delta.as_ptr(), 2, &mut r), CmStatus::Ok);
    }
    // commuting case: both equal the classical value Σ δ²/p
    let expected = 0.25 / 0.75 + 0.25 / 0.25;
    assert!((s - expected).abs() < 1e-12 && (r - expected).abs() < 1e-12);

    let not_state = [2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    assert_eq!(
        unsafe { cm_sld_fisher(not_state.as_ptr(), delta.as_ptr(), 2, &mut s) },
        CmStatus::Config
    );
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(cm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// `target/<profile>` of the running test binary.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = artifact_dir().join("libchannel_metric_ffi.a");
    assert!(lib.exists(), "static library not found at {}", lib.display());
    let out_dir = std::env::temp_dir().join(format!("cm-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&out_dir).unwrap();
    let exe = out_dir.join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(manifest.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
