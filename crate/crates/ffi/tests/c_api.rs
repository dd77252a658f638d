use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use widthlab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let n = unsafe { wl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    if n == 0 {
        return String::new();
    }
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn query(m: usize, k: usize, n: u64, q: f64, s: f64, balls: &[(f64, f64, f64)]) -> *mut WlQuery {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wl_query_new(m, k, n, q, s, &mut h) }, WlStatus::Ok);
    for &(nu, p, t) in balls {
        assert_eq!(unsafe { wl_query_add_ball(h, nu, p, t) }, WlStatus::Ok, "{}", last_error());
    }
    h
}

#[test]
fn lambda_and_errors() {
    let mut v = 0.0;
    assert_eq!(unsafe { wl_lambda_pq(1.0, 4.0, &mut v) }, WlStatus::Ok);
    assert_eq!(v, 1.0);
    assert_eq!(unsafe { wl_lambda_pq(0.5, 4.0, &mut v) }, WlStatus::InvalidParameter);
    assert!(last_error().contains("exponent"));
    assert_eq!(unsafe { wl_lambda_pq(2.0, 4.0, ptr::null_mut()) }, WlStatus::NullPointer);
    // success clears the message
    assert_eq!(unsafe { wl_lambda_pq(2.0, 4.0, &mut v) }, WlStatus::Ok);
    assert_eq!(unsafe { wl_last_error_message(ptr::null_mut(), 0) }, 0);
}

#[test]
fn truncated_error_message() {
    let mut v = 0.0;
    unsafe { wl_lambda_pq(0.5, 4.0, &mut v) };
    let full = unsafe { wl_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [1 as c_char; 6];
    assert_eq!(unsafe { wl_last_error_message(buf.as_mut_ptr(), buf.len()) }, full);
    assert_eq!(buf[5], 0);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 5);
}

#[test]
fn phi_estimate_predict_match_library() {
    let h = query(16, 4, 8, 4.0, 4.0, &[(1.0, 1.0, 1.0), (2.0, 4.0, 4.0)]);
    let mut phi = [0.0; 5];
    assert_eq!(unsafe { wl_phi_all(h, phi.as_mut_ptr()) }, WlStatus::Ok);
    let lib = widthlab::WidthQuery::new(
        widthlab::Shape::new(16, 4).unwrap(),
        8,
        widthlab::ExponentPair::new(4.0, 4.0).unwrap(),
        &[
            (1.0, widthlab::ExponentPair::new(1.0, 1.0).unwrap()),
            (2.0, widthlab::ExponentPair::new(4.0, 4.0).unwrap()),
        ],
    )
    .unwrap();
    assert_eq!(phi, widthlab::phi_all(&lib).unwrap());
    let (mut value, mut j) = (0.0, 0u32);
    assert_eq!(unsafe { wl_estimate(h, &mut value, &mut j) }, WlStatus::Ok);
    assert_eq!(value, phi.iter().cloned().fold(f64::INFINITY, f64::min));
    let (mut pj, mut boundary) = (0u32, 0);
    assert_eq!(unsafe { wl_predict(h, &mut pj, &mut boundary) }, WlStatus::Ok);
    assert!((1..=5).contains(&pj));
    unsafe { wl_query_free(h) };
}

#[test]
fn domain_and_arity_errors() {
    let h = query(16, 4, 8, 4.0, 4.0, &[(1.0, 6.0, 1.0)]);
    let mut phi = [0.0; 5];
    assert_eq!(unsafe { wl_phi_all(h, phi.as_mut_ptr()) }, WlStatus::OutsideDomain);
    assert!(last_error().contains("exceeds"));
    unsafe { wl_query_free(h) };

    let h = query(4, 4, 2, 4.0, 4.0, &[(1.0, 2.0, 2.0), (1.0, 3.0, 3.0)]);
    assert_eq!(unsafe { wl_query_add_ball(h, 1.0, 2.0, 2.0) }, WlStatus::InvalidParameter);
    unsafe { wl_query_free(h) };

    let h = query(4, 4, 2, 4.0, 4.0, &[(1.0, 2.0, 2.0)]);
    let (mut j, mut b) = (0u32, 0);
    assert_eq!(unsafe { wl_predict(h, &mut j, &mut b) }, WlStatus::InvalidParameter);
    unsafe { wl_query_free(h) };

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wl_query_new(0, 4, 1, 4.0, 4.0, &mut h) }, WlStatus::InvalidParameter);
    assert!(h.is_null());
}

#[test]
fn json_query() {
    let text = CString::new(
        r#"{"m":8,"k":4,"n":4,"q":4,"sigma":"6","balls":[{"nu":1,"p":"3/2","theta":2},{"nu":0.5,"p":3,"theta":3}]}"#,
    )
    .unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wl_query_from_json(text.as_ptr(), &mut h) }, WlStatus::Ok, "{}", last_error());
    let mut phi = [0.0; 5];
    assert_eq!(unsafe { wl_phi_all(h, phi.as_mut_ptr()) }, WlStatus::Ok);
    unsafe { wl_query_free(h) };

    let bad = CString::new(r#"{"m":8}"#).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { wl_query_from_json(bad.as_ptr(), &mut h) }, WlStatus::InvalidParameter);
}

#[test]
fn witness_round_trip_and_negative_control() {
    let h = query(8, 4, 4, 4.0, 4.0, &[(1.0, 1.0, 2.0), (0.5, 3.0, 3.0)]);
    let mut w = ptr::null_mut();
    assert_eq!(unsafe { wl_witness_build(h, 1000, 0, &mut w) }, WlStatus::Ok, "{}", last_error());
    let mut ratio = 0.0;
    assert_eq!(unsafe { wl_witness_verify(w, &mut ratio) }, WlStatus::Ok);
    assert!(ratio <= 1.0 + 1e-9);

    let mut s = ptr::null_mut();
    assert_eq!(unsafe { wl_witness_to_json(w, &mut s) }, WlStatus::Ok);
    let doc: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(s) }.to_str().unwrap()).unwrap();
    unsafe { wl_string_free(s) };
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["verified"], true);

    let (mut c, mut r, mut l) = (0.0, 0usize, 0usize);
    assert_eq!(unsafe { wl_witness_info(w, &mut c, &mut r, &mut l, ptr::null_mut()) }, WlStatus::Ok);
    assert_eq!(c, doc["scale"].as_f64().unwrap());
    assert_eq!((r as u64, l as u64), (doc["r"].as_u64().unwrap(), doc["l"].as_u64().unwrap()));

    assert_eq!(unsafe { wl_witness_rescale(w, 2.0 / ratio) }, WlStatus::Ok);
    assert_eq!(unsafe { wl_witness_verify(w, &mut ratio) }, WlStatus::PropertyFailure);
    assert!((ratio - 2.0).abs() < 1e-9);
    assert!(last_error().contains("offending vertex"));
    unsafe {
        wl_witness_free(w);
        wl_query_free(h);
    }
}

#[test]
fn suite_by_name() {
    let name = CString::new("holder").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { wl_verify_suite(name.as_ptr(), 7, 100, &mut report) }, WlStatus::Ok);
    let r: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(report) }.to_str().unwrap()).unwrap();
    unsafe { wl_string_free(report) };
    assert_eq!(r["seed"], 7);
    assert_eq!(r["cases"], 100);
    let bad = CString::new("nope").unwrap();
    assert_eq!(unsafe { wl_verify_suite(bad.as_ptr(), 0, 0, ptr::null_mut()) }, WlStatus::InvalidParameter);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(wl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/widthlab.h")).unwrap();
    for name in [
        "wl_query_new",
        "wl_query_from_json",
        "wl_query_add_ball",
        "wl_query_free",
        "wl_phi_all",
        "wl_estimate",
        "wl_predict",
        "wl_witness_build",
        "wl_witness_verify",
        "wl_witness_to_json",
        "wl_witness_free",
        "wl_verify_suite",
        "wl_string_free",
        "wl_last_error_message",
        "typedef struct WlQuery WlQuery",
        "WL_STATUS_PROPERTY_FAILURE",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
    let src = std::env::temp_dir().join(format!("widthlab_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        "#include \"widthlab.h\"\nint main(void) { WlQuery *q = 0; double v;\n\
         return wl_query_new(2, 2, 1, 4.0, 4.0, &q) == WL_STATUS_OK && wl_lambda_pq(2.0, 4.0, &v) == 0; }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
        .expect("a C compiler is available");
    let _ = std::fs::remove_file(&src);
    assert!(status.success());
}
