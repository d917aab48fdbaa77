use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;

use zetasign_ffi::*;

fn text(buf: &[c_char]) -> String {
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string()
}

fn last_error() -> String {
    let mut buf = [0 as c_char; 512];
    assert_eq!(unsafe { zs_last_error(buf.as_mut_ptr(), buf.len(), std::ptr::null_mut()) }, ZsStatus::Ok);
    text(&buf)
}

#[test]
fn psi_handle_lifecycle() {
    let sigma = CString::new("1.0").unwrap();
    let mut h = std::ptr::null_mut();
    assert_eq!(unsafe { zs_psi_new(sigma.as_ptr(), 4.0, 20, &mut h) }, ZsStatus::Ok);
    assert!(!h.is_null());
    let (mut v, mut e) = (0.0, 1.0);
    assert_eq!(unsafe { zs_psi_eval(h, 0.0, &mut v, &mut e) }, ZsStatus::Ok);
    assert_eq!(v, 1.0);
    assert!(e < 1e-19);
    let mut buf = [0 as c_char; 64];
    let mut need = 0usize;
    assert_eq!(unsafe { zs_psi_eval_text(h, 0.0, buf.as_mut_ptr(), buf.len(), &mut need) }, ZsStatus::Ok);
    assert_eq!(text(&buf), "1.0000000000000000000");
    assert_eq!(need, 22);
    // psi is even.
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        zs_psi_eval(h, 1.5, &mut a, std::ptr::null_mut());
        zs_psi_eval(h, -1.5, &mut b, std::ptr::null_mut());
        zs_psi_free(h);
        zs_psi_free(std::ptr::null_mut());
    }
    assert_eq!(a, b);
    assert!(a.abs() < 1.0);
}

#[test]
fn errors_carry_codes_and_messages() {
    let sigma = CString::new("0.4").unwrap();
    let mut h = std::ptr::null_mut();
    assert_eq!(unsafe { zs_psi_new(sigma.as_ptr(), 4.0, 20, &mut h) }, ZsStatus::Domain);
    assert!(h.is_null());
    assert!(last_error().contains("sigma"));
    assert_eq!(unsafe { zs_psi_new(std::ptr::null(), 4.0, 20, &mut h) }, ZsStatus::NullPointer);
    let mut v = 0.0;
    assert_eq!(unsafe { zs_psi_eval(std::ptr::null(), 1.0, &mut v, std::ptr::null_mut()) }, ZsStatus::NullPointer);
    let mut buf = [0 as c_char; 4];
    let mut need = 0usize;
    assert_eq!(unsafe { zs_qcoeff(7, 4, buf.as_mut_ptr(), buf.len(), &mut need) }, ZsStatus::BufferTooSmall);
    assert_eq!(need, 7);
    assert_eq!(unsafe { zs_qcoeff(3, 4, buf.as_mut_ptr(), buf.len(), &mut need) }, ZsStatus::InvalidArgument);
    // Success clears the message.
    let mut big = [0 as c_char; 16];
    assert_eq!(unsafe { zs_qcoeff(7, 4, big.as_mut_ptr(), big.len(), &mut need) }, ZsStatus::Ok);
    assert_eq!(text(&big), "648240");
    assert_eq!(last_error(), "");
}

#[test]
fn density_through_the_abi() {
    let sigma = CString::new("1.0").unwrap();
    let mut buf = [0 as c_char; 64];
    let (mut v, mut e) = (0.0, 0.0);
    let s = unsafe {
        zs_density(sigma.as_ptr(), ZsDensityKind::D, 0, 12, &mut v, &mut e, buf.as_mut_ptr(), buf.len(), std::ptr::null_mut())
    };
    assert_eq!(s, ZsStatus::Ok, "{}", last_error());
    assert_eq!(text(&buf), "3.78866236067e-7");
    assert!((v - 3.7886623606688718671e-7).abs() < 1e-18);
    let sigma = CString::new("0.6").unwrap();
    let s = unsafe {
        zs_density(sigma.as_ptr(), ZsDensityKind::Gap, 0, 8, &mut v, &mut e, buf.as_mut_ptr(), buf.len(), std::ptr::null_mut())
    };
    assert_eq!(s, ZsStatus::Ok, "{}", last_error());
    assert_eq!(text(&buf), "8.0733290e-11");
}

#[test]
fn version_is_static_text() {
    let v = unsafe { CStr::from_ptr(zs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include").join("zetasign.h")
}

#[test]
fn header_declares_the_abi() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in ["zs_psi_new", "zs_psi_eval", "zs_psi_eval_text", "zs_psi_free", "zs_density", "zs_qcoeff", "zs_last_error", "zs_version"] {
        assert!(h.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(h.contains("typedef struct ZsPsi ZsPsi;"));
    assert!(h.contains("ZS_STATUS_BUFFER_TOO_SMALL = 8"));
}

/// A C program against the header and the static library.
#[test]
fn c_client_links_and_runs() {
    let Some(cc) = ["cc", "gcc", "clang"].into_iter().find(|c| Command::new(c).arg("--version").output().is_ok()) else {
        eprintln!("no C compiler; skipped");
        return;
    };
    // target/<profile>/deps/abi-... -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libzetasign_ffi.a");
    let dir = std::env::temp_dir().join(format!("zetasign-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("client.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include <string.h>
#include "zetasign.h"
int main(void) {
    ZsPsi *h = NULL;
    if (zs_psi_new("0.8", 2.0, 15, &h) != ZS_STATUS_OK) return 1;
    double v = 0.0, e = 0.0;
    if (zs_psi_eval(h, 0.0, &v, &e) != ZS_STATUS_OK || v != 1.0) return 2;
    zs_psi_free(h);
    char buf[32];
    size_t need = 0;
    if (zs_qcoeff(6, 1, buf, sizeof buf, &need) != ZS_STATUS_OK || strcmp(buf, "14400") != 0) return 3;
    if (zs_psi_new("0.3", 2.0, 15, &h) != ZS_STATUS_DOMAIN) return 4;
    printf("%s\n", buf);
    return 0;
}
"#,
    )
    .unwrap();
    let include = header().parent().unwrap().to_path_buf();
    if !lib.exists() {
        // Library not built as a static archive in this profile; still
        // make sure the header compiles.
        let s = Command::new(cc).arg("-fsyntax-only").arg("-I").arg(&include).arg(&src).status().unwrap();
        assert!(s.success());
        return;
    }
    let bin = dir.join("client");
    let out = Command::new(cc)
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lmpfr", "-lgmp", "-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "14400");
    std::fs::remove_dir_all(&dir).ok();
}
