use std::ffi::{CStr, CString};
use std::ptr;

use kodual_ffi::*;

unsafe fn take_string(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_owned();
    kd_string_free(s);
    out
}

unsafe fn describe(g: *mut KdGroup) -> String {
    let mut s = ptr::null_mut();
    assert_eq!(kd_group_to_string(g, &mut s), KdStatus::Ok);
    kd_group_free(g);
    take_string(s)
}

#[test]
fn cokernel_of_a_matrix() {
    unsafe {
        // [[2, 0], [0, 6], [0, 0]] has cokernel Z ⊕ Z/2 ⊕ Z/6.
        let a = [2i64, 0, 0, 6, 0, 0];
        let mut g = ptr::null_mut();
        assert_eq!(kd_cokernel(3, 2, a.as_ptr(), &mut g), KdStatus::Ok);
        let mut rank = 0;
        let mut n = 0;
        assert_eq!(kd_group_free_rank(g, &mut rank), KdStatus::Ok);
        assert_eq!(kd_group_torsion_len(g, &mut n), KdStatus::Ok);
        assert_eq!((rank, n), (1, 2));
        let mut d = ptr::null_mut();
        assert_eq!(kd_group_torsion(g, 1, &mut d), KdStatus::Ok);
        assert_eq!(take_string(d), "6");
        assert_eq!(kd_group_torsion(g, 2, &mut d), KdStatus::InvalidParameter);
        kd_group_free(g);
    }
}

#[test]
fn null_arguments_are_rejected() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(kd_cokernel(1, 1, ptr::null(), &mut g), KdStatus::NullPointer);
        assert_eq!(kd_cokernel(0, 0, ptr::null(), ptr::null_mut()), KdStatus::NullPointer);
        let mut n = 0;
        assert_eq!(kd_group_free_rank(ptr::null(), &mut n), KdStatus::NullPointer);
        assert!(!kd_last_error().is_null());
        kd_group_free(ptr::null_mut());
        kd_string_free(ptr::null_mut());
    }
}

#[test]
fn tate_and_units_cohomology() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(kd_c2_tate(KdC2Module::Trivial, 0, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "Z/2");
        assert_eq!(kd_c2_tate(KdC2Module::Sign, 0, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "0");
        assert_eq!(kd_c2_tate(KdC2Module::Regular, 1, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "0");
        assert_eq!(kd_units_cohomology(1, 5, 3, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "Z/2");
    }
}

#[test]
fn picard_kernel_and_errors() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(kd_picard_kernel(3, 5, 4, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "Z/16");
        assert_eq!(kd_picard_kernel(7, 5, 4, &mut g), KdStatus::NotAGenerator);
        let msg = CStr::from_ptr(kd_last_error()).to_str().unwrap();
        assert!(msg.contains('7'), "{msg}");
    }
}

#[test]
fn ko_and_its_anderson_dual() {
    unsafe {
        let mut ko = ptr::null_mut();
        assert_eq!(kd_ko_homotopy(-8, 16, &mut ko), KdStatus::Ok);
        let (mut lo, mut hi) = (0, 0);
        assert_eq!(kd_graded_window(ko, &mut lo, &mut hi), KdStatus::Ok);
        assert_eq!((lo, hi), (-8, 16));
        let mut g = ptr::null_mut();
        assert_eq!(kd_graded_get(ko, 4, &mut g), KdStatus::Ok);
        assert_eq!(describe(g), "Z");
        assert_eq!(kd_graded_get(ko, 17, &mut g), KdStatus::OutsideWindow);

        let mut shift = -1;
        assert_eq!(kd_detect_shift(ko, KdReference::Ko, 8, &mut shift), KdStatus::Ok);
        assert_eq!(shift, 0);
        let mut dual = ptr::null_mut();
        assert_eq!(kd_anderson_dual(ko, &mut dual), KdStatus::Ok);
        assert_eq!(kd_detect_shift(dual, KdReference::Ko, 8, &mut shift), KdStatus::Ok);
        assert_eq!(shift, 4);
        assert_eq!(kd_detect_shift(dual, KdReference::Ku, 2, &mut shift), KdStatus::NoShift);
        kd_graded_free(dual);
        kd_graded_free(ko);
    }
}

#[test]
fn graded_json_round_trip() {
    unsafe {
        let text = CString::new(r#"{"window":[0,3],"groups":{"0":"Z","1":"Z/2"}}"#).unwrap();
        let mut g = ptr::null_mut();
        assert_eq!(kd_graded_from_json(text.as_ptr(), &mut g), KdStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(kd_graded_to_json(g, &mut s), KdStatus::Ok);
        let json = take_string(s);
        let mut again = ptr::null_mut();
        let c = CString::new(json).unwrap();
        assert_eq!(kd_graded_from_json(c.as_ptr(), &mut again), KdStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(kd_graded_get(again, 1, &mut h), KdStatus::Ok);
        assert_eq!(describe(h), "Z/2");
        kd_graded_free(again);
        kd_graded_free(g);

        let bad = CString::new("{").unwrap();
        assert_eq!(kd_graded_from_json(bad.as_ptr(), &mut g), KdStatus::Parse);
    }
}

#[test]
fn chart_rendering() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(kd_hfpss_chart(KdChartFormat::Ascii, &mut s), KdStatus::Ok);
        assert!(take_string(s).contains("[]"));
        assert_eq!(kd_hfpss_chart(KdChartFormat::Svg, &mut s), KdStatus::Ok);
        assert!(take_string(s).starts_with("<svg"));
    }
}
