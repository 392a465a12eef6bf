use std::ffi::CStr;
use std::ptr;

use liouvlab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ll_last_error()) }.to_string_lossy().into_owned()
}

fn qubit(j: f64) -> *mut LlSystem {
    let mut sys = ptr::null_mut();
    let s = unsafe { ll_system_new(2, j, 0.0, 4.4, 0.1, 0.0, 0.0, &mut sys) };
    assert_eq!(s, LlStatus::Ok);
    sys
}

#[test]
fn spectrum_at_ep_coalesces() {
    let sys = qubit(0.525);
    let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
    assert_eq!(unsafe { ll_spectrum(sys, re.as_mut_ptr(), im.as_mut_ptr(), 4) }, LlStatus::Ok);
    // Two real eigenvalues meet at -(3γe/4 + γφ/2) = -3.35.
    let near = re.iter().filter(|&&x| (x + 3.35).abs() < 1e-3).count();
    assert_eq!(near, 2, "{re:?}");
    assert!(re.iter().any(|x| x.abs() < 1e-10));
    unsafe { ll_system_free(sys) };
}

#[test]
fn steady_state_is_normalized() {
    let sys = qubit(1.0);
    let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
    assert_eq!(unsafe { ll_steady_state(sys, re.as_mut_ptr(), im.as_mut_ptr(), 4) }, LlStatus::Ok);
    assert!((re[0] + re[3] - 1.0).abs() < 1e-12);
    assert!(re[3] > 0.0 && re[3] < 0.5);
    assert!((re[1] - re[2]).abs() < 1e-12 && (im[1] + im[2]).abs() < 1e-12);
    unsafe { ll_system_free(sys) };
}

#[test]
fn evolution_conserves_trace() {
    let sys = qubit(1.8);
    let rho_re = [0.0, 0.0, 0.0, 1.0];
    let rho_im = [0.0; 4];
    let times: Vec<f64> = (0..50).map(|k| 0.02 * k as f64).collect();
    let mut pops = vec![0.0; 100];
    let s = unsafe {
        ll_evolve_populations(sys, rho_re.as_ptr(), rho_im.as_ptr(), times.as_ptr(), times.len(), pops.as_mut_ptr())
    };
    assert_eq!(s, LlStatus::Ok);
    assert_eq!(pops[1], 1.0);
    for row in pops.chunks(2) {
        assert!((row[0] + row[1] - 1.0).abs() < 1e-10);
    }
    unsafe { ll_system_free(sys) };
}

#[test]
fn fit_recovers_parameters() {
    let times: Vec<f64> = (0..400).map(|k| 0.025 * k as f64).collect();
    let values: Vec<f64> = times.iter().map(|t| 0.4 * (-0.3 * t).exp() * (2.1 * t + 0.5).sin() + 0.2).collect();
    let mut fit = LlFit::default();
    assert_eq!(
        unsafe { ll_fit_damped_sine(times.as_ptr(), values.as_ptr(), times.len(), &mut fit) },
        LlStatus::Ok
    );
    assert!((fit.omega - 2.1).abs() < 1e-6 && (fit.gamma - 0.3).abs() < 1e-6);
    assert!(fit.converged);
}

#[test]
fn ep_coupling_and_errors() {
    let mut j = 0.0;
    assert_eq!(unsafe { ll_qubit_ep_coupling(4.4, 0.1, &mut j) }, LlStatus::Ok);
    assert!((j - 0.525).abs() < 1e-12);
    assert_eq!(unsafe { ll_qubit_ep_coupling(1.0, 1.0, &mut j) }, LlStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn invalid_input_reports_codes() {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { ll_system_new(4, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, &mut sys) }, LlStatus::InvalidArgument);
    assert!(sys.is_null());
    assert_eq!(unsafe { ll_system_new(2, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, &mut sys) }, LlStatus::InvalidArgument);
    assert!(last_error().contains("gamma_e"), "{}", last_error());
    assert_eq!(
        unsafe { ll_system_new(2, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, ptr::null_mut()) },
        LlStatus::NullPointer
    );

    let sys = qubit(1.0);
    let (mut re, mut im) = ([0.0; 9], [0.0; 9]);
    assert_eq!(unsafe { ll_spectrum(sys, re.as_mut_ptr(), im.as_mut_ptr(), 9) }, LlStatus::InvalidArgument);
    assert_eq!(unsafe { ll_spectrum(ptr::null(), re.as_mut_ptr(), im.as_mut_ptr(), 4) }, LlStatus::NullPointer);
    assert_eq!(unsafe { ll_spectrum(sys, ptr::null_mut(), im.as_mut_ptr(), 4) }, LlStatus::NullPointer);
    assert_eq!(unsafe { ll_system_set_drive(sys, f64::NAN, 0.0) }, LlStatus::InvalidArgument);
    assert_eq!(unsafe { ll_system_dim(sys) }, 2);
    assert_eq!(unsafe { ll_system_dim(ptr::null()) }, 0);
    unsafe {
        ll_system_free(sys);
        ll_system_free(ptr::null_mut());
    }
}

#[test]
fn qutrit_handle() {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { ll_system_new(3, 1.0, 0.0, 4.2, 0.2, 0.3, 0.75, &mut sys) }, LlStatus::Ok);
    assert_eq!(unsafe { ll_system_dim(sys) }, 3);
    let (mut re, mut im) = ([0.0; 9], [0.0; 9]);
    assert_eq!(unsafe { ll_spectrum(sys, re.as_mut_ptr(), im.as_mut_ptr(), 9) }, LlStatus::Ok);
    assert!(re.iter().all(|&x| x <= 1e-10));
    unsafe { ll_system_free(sys) };
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(ll_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
