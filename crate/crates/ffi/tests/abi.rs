use std::ffi::{CStr, CString};
use std::ptr;

use maxinfo_ffi::*;

fn last_error() -> String {
    let p = mx_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn identity(n: usize) -> *mut MxMatrix {
    let mut data = vec![0.0f64; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
    }
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { mx_matrix_from_f64(data.as_ptr(), n, n, &mut m) }, MxStatus::Ok);
    m
}

#[test]
fn select_round_trip() {
    unsafe {
        let m = identity(4);
        assert_eq!((mx_matrix_rows(m), mx_matrix_cols(m)), (4, 4));
        let c = mx_config_new();
        assert_eq!(mx_config_set_rank(c, 4), MxStatus::Ok);
        assert_eq!(mx_config_set_bounds(c, 1, 4), MxStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(mx_select(m, c, &mut r), MxStatus::Ok);
        assert_eq!(mx_report_len(r), 4);

        let mut buf = [0usize; 4];
        let mut written = 0;
        assert_eq!(mx_report_indices(r, buf.as_mut_ptr(), 4, &mut written), MxStatus::Ok);
        assert_eq!((buf, written), ([0, 1, 2, 3], 4));
        assert_eq!(mx_report_indices(r, buf.as_mut_ptr(), 2, &mut written), MxStatus::BufferTooSmall);
        assert_eq!(written, 4);

        let mut json = ptr::null_mut();
        assert_eq!(mx_report_to_json(r, true, &mut json), MxStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        assert!(text.contains("\"selected_indices\""));
        assert!(text.contains("\"maxvol_ms\": 0.0"));
        mx_string_free(json);

        mx_report_free(r);
        mx_config_free(c);
        mx_matrix_free(m);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(mx_matrix_from_f64(ptr::null(), 2, 2, &mut m), MxStatus::NullPointer);
        let nan = [f64::NAN, 1.0];
        assert_eq!(mx_matrix_from_f64(nan.as_ptr(), 1, 2, &mut m), MxStatus::InvalidInput);
        assert!(m.is_null());

        let m = identity(3);
        let c = mx_config_new();
        mx_config_set_bounds(c, 5, 2);
        assert_eq!(mx_config_validate(c), MxStatus::InvalidConfig);
        let mut r = ptr::null_mut();
        assert_eq!(mx_select(m, c, &mut r), MxStatus::InvalidConfig);
        assert!(last_error().contains("min"));
        assert!(r.is_null());

        mx_config_set_bounds(c, 1, 3);
        mx_config_set_mode(c, MxMode::Chunked);
        mx_config_set_chunks(c, 4);
        assert_eq!(mx_select(m, c, &mut r), MxStatus::InvalidConfig);

        assert_eq!(mx_select(ptr::null(), c, &mut r), MxStatus::NullPointer);
        mx_config_free(c);
        mx_matrix_free(m);

        let missing = CString::new("/nonexistent/x.mxif").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(mx_matrix_read(missing.as_ptr(), &mut m), MxStatus::Io);

        // NULL is accepted by every free function
        mx_matrix_free(ptr::null_mut());
        mx_config_free(ptr::null_mut());
        mx_report_free(ptr::null_mut());
        mx_string_free(ptr::null_mut());
    }
}

#[test]
fn file_input_and_helpers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.mxif");
    let bytes: Vec<u8> = [&b"MXIF"[..], &[1, 0, 0, 0], &2u32.to_le_bytes(), &2u32.to_le_bytes()]
        .concat()
        .into_iter()
        .chain([3.0f32, 0.0, 0.0, 4.0].iter().flat_map(|v| v.to_le_bytes()))
        .collect();
    std::fs::write(&path, &bytes).unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut m = ptr::null_mut();
        assert_eq!(mx_matrix_read(cpath.as_ptr(), &mut m), MxStatus::Ok);
        assert_eq!(mx_matrix_rows(m), 2);
        mx_matrix_free(m);

        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert_eq!(mx_matrix_read(cpath.as_ptr(), &mut m), MxStatus::Format);

        let mut v = 0.0;
        let a = [3.0, 0.0, 0.0, 4.0];
        assert_eq!(mx_rect_vol(a.as_ptr(), 2, 2, &mut v), MxStatus::Ok);
        assert!((v - 12.0).abs() < 1e-12);

        let mut buf = [0usize; 5];
        assert_eq!(mx_uniform_sample(10, 5, buf.as_mut_ptr(), 5), MxStatus::Ok);
        assert_eq!(buf, [0, 2, 4, 6, 9]);
        assert_eq!(mx_uniform_sample(3, 4, buf.as_mut_ptr(), 5), MxStatus::InvalidConfig);
        assert_eq!(CStr::from_ptr(mx_version()).to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_matches_exports() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/maxinfo.h")).unwrap();
    for f in [
        "mx_matrix_from_f32",
        "mx_matrix_read_csv",
        "mx_config_set_tol_convention",
        "mx_select",
        "mx_report_indices",
        "mx_report_to_json",
        "mx_string_free",
        "mx_rect_vol",
        "MX_STATUS_BUFFER_TOO_SMALL",
        "typedef struct MxReport MxReport",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}
