use std::ffi::{c_char, CStr};
use std::ptr;

use jacobi_lattice_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    unsafe { jl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn phi_values_match_laguerre() {
    let mut v = [0.0; 4];
    let s = unsafe { jl_phi_values(2.0, v.as_mut_ptr(), v.len()) };
    assert_eq!(s, JlStatus::Ok);
    // L_2(2) = (4 - 8 + 2)/2, L_3(2) = (-8 + 36 - 36 + 6)/6
    assert_eq!(v[..3], [1.0, -1.0, -1.0]);
    assert!((v[3] + 1.0 / 3.0).abs() < 1e-15);
}

#[test]
fn g_factor_reports_domain_errors() {
    let (mut g, mut w) = (0.0, 0.0);
    assert_eq!(unsafe { jl_g_factor(1.0, 1.0, &mut g, &mut w) }, JlStatus::Ok);
    assert!((w - g * (-1f64).exp()).abs() < 1e-16);
    assert_eq!(unsafe { jl_g_factor(1.0, -1.0, &mut g, &mut w) }, JlStatus::Domain);
    assert!(last_error().contains("coupling"));
    assert_eq!(unsafe { jl_g_factor(1.0, 1.0, ptr::null_mut(), &mut w) }, JlStatus::NullPointer);
}

#[test]
fn bound_state_handle_round_trip() {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { jl_bound_state_new(1.0, &mut h) }, JlStatus::Ok);
    let mut l0 = 0.0;
    assert_eq!(unsafe { jl_bound_state_energy(h, &mut l0) }, JlStatus::Ok);
    assert!(l0 > -0.5 && l0 < -0.4);
    let mut buf = [0.0; 8];
    let (mut written, mut total) = (0, 0);
    let s = unsafe { jl_bound_state_vector(h, buf.as_mut_ptr(), buf.len(), &mut written, &mut total) };
    assert_eq!(s, JlStatus::Ok);
    assert_eq!(written, 8);
    assert!(total > 8);
    assert!(buf[0] > 0.0 && buf.windows(2).all(|p| p[1].abs() < p[0].abs()));
    unsafe { jl_bound_state_free(h) };
    unsafe { jl_bound_state_free(ptr::null_mut()) };
}

#[test]
fn kernel_table_closed_form_and_bounds() {
    let times = [0.0, 2.0];
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { jl_kernel_table_new(0.0, times.as_ptr(), 2, 3, &mut h) }, JlStatus::Ok);
    let (mut re, mut im, mut err) = (0.0, 0.0, 0.0);
    assert_eq!(unsafe { jl_kernel_table_get(h, 1, 0, 0, &mut re, &mut im, &mut err) }, JlStatus::Ok);
    // 1/(1 + 2i)
    assert!((re - 0.2).abs() < 1e-10 && (im + 0.4).abs() < 1e-10);
    assert_eq!(unsafe { jl_kernel_table_get(h, 2, 0, 0, &mut re, &mut im, &mut err) }, JlStatus::Grid);
    assert_eq!(unsafe { jl_kernel_table_get(h, 0, 4, 0, &mut re, &mut im, &mut err) }, JlStatus::Grid);
    unsafe { jl_kernel_table_free(h) };
}

#[test]
fn decay_curve_handle() {
    let times = [10.0, 100.0];
    let mut h = ptr::null_mut();
    let s = unsafe { jl_decay_curve_new(1.0, 4.0, -3.0, 40, times.as_ptr(), 2, 1, &mut h) };
    assert_eq!(s, JlStatus::Ok, "{}", last_error());
    let mut small = [0.0; 1];
    let s = unsafe { jl_decay_curve_values(h, small.as_mut_ptr(), ptr::null_mut(), 1) };
    assert_eq!(s, JlStatus::BufferTooSmall);
    let (mut v, mut e) = ([0.0; 2], [0.0; 2]);
    assert_eq!(unsafe { jl_decay_curve_values(h, v.as_mut_ptr(), e.as_mut_ptr(), 2) }, JlStatus::Ok);
    assert!(v[1] < v[0] && v[1] > 0.0);
    unsafe { jl_decay_curve_free(h) };
    let s = unsafe { jl_decay_curve_new(1.0, 4.0, -2.0, 40, times.as_ptr(), 2, 1, &mut h) };
    assert_eq!(s, JlStatus::Domain);
}

#[test]
fn completeness_through_the_abi() {
    let mut d = 1.0;
    assert_eq!(unsafe { jl_completeness_deviation(0.0, 2, 3, &mut d) }, JlStatus::Ok);
    assert!(d < 1e-9);
    assert_eq!(unsafe { jl_completeness_deviation(2.0, 1, 1, &mut d) }, JlStatus::Ok);
    assert!(d < 1e-9);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(jl_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
