use std::ffi::{CStr, CString};
use std::ptr;

use opflab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(opflab_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn dimensions() {
    assert_eq!(opflab_dim_mn(3, 2), 36);
    assert_eq!(opflab_dim_nn(3, 2), 27);
    assert_eq!(opflab_dim_nn(1, 2), 0);
}

#[test]
fn opf_round_trip() {
    unsafe {
        let mut f = ptr::null_mut();
        // |0⟩⟨0| on C^2 at degree 1.
        let re = [1.0, 0.0, 0.0, 0.0];
        assert_eq!(
            opflab_opf_from_matrix(2, 1, re.as_ptr(), ptr::null(), &mut f),
            OpflabStatus::Ok
        );
        assert_eq!(opflab_opf_dim(f), 2);
        assert_eq!(opflab_opf_degree(f), 1);

        let s = 0.5f64.sqrt();
        let mut psi = ptr::null_mut();
        assert_eq!(
            opflab_ket_new([s, s].as_ptr(), ptr::null(), 2, &mut psi),
            OpflabStatus::Ok
        );
        let mut v = -1.0;
        assert_eq!(opflab_opf_evaluate(f, psi, &mut v), OpflabStatus::Ok);
        assert!((v - 0.5).abs() < 1e-15);

        let mut json = ptr::null_mut();
        assert_eq!(opflab_opf_to_json(f, &mut json), OpflabStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"d\": 2"));
        opflab_string_free(json);

        opflab_ket_free(psi);
        opflab_opf_free(f);
    }
}

#[test]
fn validation_errors_carry_messages() {
    unsafe {
        let mut f = ptr::null_mut();
        let re = [2.0, 0.0, 0.0, 0.0];
        assert_eq!(
            opflab_opf_from_matrix(2, 1, re.as_ptr(), ptr::null(), &mut f),
            OpflabStatus::NotPhysical
        );
        assert!(f.is_null());
        assert!(!last_error().is_empty());

        let mut k = ptr::null_mut();
        assert_eq!(
            opflab_ket_new([1.0, 1.0].as_ptr(), ptr::null(), 2, &mut k),
            OpflabStatus::NotPhysical
        );
        assert_eq!(
            opflab_ket_new(ptr::null(), ptr::null(), 2, &mut k),
            OpflabStatus::NullPointer
        );
        assert_eq!(opflab_opf_unit(2, 40, &mut f), OpflabStatus::InvalidArgument);

        let mut v = 0.0;
        assert_eq!(
            opflab_opf_evaluate(ptr::null(), ptr::null(), &mut v),
            OpflabStatus::NullPointer
        );
        assert_eq!(last_error(), "opf is null");
    }
}

#[test]
fn star_products() {
    unsafe {
        let (mut f, mut g, mut fg) = (ptr::null_mut(), ptr::null_mut(), ptr::null_mut());
        assert_eq!(opflab_opf_random(1, 2, 2, &mut f), OpflabStatus::Ok);
        assert_eq!(opflab_opf_unit(2, 2, &mut g), OpflabStatus::Ok);
        let toy = CString::new("toy").unwrap();
        assert_eq!(opflab_opf_star(toy.as_ptr(), f, g, &mut fg), OpflabStatus::Ok);
        assert_eq!(opflab_opf_dim(fg), 4);
        opflab_opf_free(fg);

        let quantum = CString::new("quantum").unwrap();
        assert_eq!(
            opflab_opf_star(quantum.as_ptr(), f, g, &mut fg),
            OpflabStatus::DimensionMismatch
        );
        let bogus = CString::new("classical").unwrap();
        assert_eq!(
            opflab_opf_star(bogus.as_ptr(), f, g, &mut fg),
            OpflabStatus::UnknownName
        );
        opflab_opf_free(f);
        opflab_opf_free(g);
    }
}

fn run(args: &[&str]) -> (OpflabStatus, *mut OpflabReport) {
    let owned: Vec<CString> = args.iter().map(|a| CString::new(*a).unwrap()).collect();
    let ptrs: Vec<*const std::ffi::c_char> = owned.iter().map(|c| c.as_ptr()).collect();
    let mut report = ptr::null_mut();
    let status = unsafe { opflab_report_run(ptrs.as_ptr(), ptrs.len(), &mut report) };
    (status, report)
}

#[test]
fn reports() {
    unsafe {
        let (status, r) = run(&["--seed", "2", "distinguish"]);
        assert_eq!(status, OpflabStatus::Ok);
        let mut passed = false;
        assert_eq!(opflab_report_passed(r, &mut passed), OpflabStatus::Ok);
        assert!(passed);
        assert_eq!(opflab_report_len(r), 3);
        let mut text = ptr::null_mut();
        assert_eq!(opflab_report_render(r, true, &mut text), OpflabStatus::Ok);
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("3 of 3 checks passed"));
        opflab_string_free(text);
        opflab_report_free(r);

        let (status, r) = run(&["--trials", "10", "verify", "toy"]);
        assert_eq!(status, OpflabStatus::Ok);
        assert_eq!(opflab_report_passed(r, &mut passed), OpflabStatus::Ok);
        assert!(!passed);
        opflab_report_free(r);

        let (status, r) = run(&["estimate", "nothing"]);
        assert_eq!(status, OpflabStatus::UnknownName);
        assert!(r.is_null());
        let (status, _) = run(&["--no-such-flag"]);
        assert_eq!(status, OpflabStatus::InvalidArgument);
    }
}

#[test]
fn header_lists_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/opflab.h")).unwrap();
    for symbol in [
        "typedef struct OpflabOpf OpflabOpf;",
        "OPFLAB_STATUS_OK = 0",
        "opflab_last_error",
        "opflab_opf_from_matrix",
        "opflab_opf_star",
        "opflab_report_run",
        "opflab_report_free",
        "opflab_string_free",
    ] {
        assert!(header.contains(symbol), "{symbol} missing from header");
    }
}

/// Compiles `tests/smoke.c` against the static library when a C compiler is
/// on the path; skipped otherwise.
#[test]
fn c_program_links() {
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libopflab_ffi.a");
    let has_cc = std::process::Command::new("cc").arg("--version").output().is_ok();
    if !has_cc || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile_dir();
    let bin = dir.join("smoke");
    let status = std::process::Command::new("cc")
        .arg(format!("-I{}", manifest.join("include").display()))
        .arg(manifest.join("tests/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"schema_version\": 1"));
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("opflab-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
