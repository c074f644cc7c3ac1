use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use mission_profile::basis::make_bspline_basis;
use mission_profile::exchange::sample_to_json;
use mission_profile::fdcore::{BasisSet, FunctionalSample};
use mission_profile::simgen::{gen_temperature_day, DayConfig};
use mission_profile::smoothing::{smooth_sample, SmoothingConfig};
use mission_profile_ffi::*;

fn sample_json() -> String {
    let config = DayConfig { n_regular: 10, n_cold: 1, n_carsharing: 1, seed: 3, ..DayConfig::default() };
    let data = gen_temperature_day(&config).unwrap();
    let basis = make_bspline_basis(data.domain_end, 30, 4, 2).unwrap();
    let bases = BasisSet::shared(basis, 2).unwrap();
    let smoothing = SmoothingConfig { lambda: 1e-3, ..SmoothingConfig::default() };
    let sample: FunctionalSample = smooth_sample(&bases, &data.series, &smoothing).unwrap().0;
    sample_to_json(&sample).unwrap()
}

#[test]
fn sample_analysis_round_trip() {
    let json = CString::new(sample_json()).unwrap();
    let mut sample = ptr::null_mut();
    unsafe {
        assert_eq!(mp_sample_from_json(json.as_ptr(), &mut sample), MpStatus::Ok);
        assert_eq!((mp_sample_len(sample), mp_sample_p(sample)), (12, 2));

        let mut back = ptr::null_mut();
        assert_eq!(mp_sample_to_json(sample, &mut back), MpStatus::Ok);
        assert_eq!(CStr::from_ptr(back).to_bytes(), json.as_bytes());
        mp_string_free(back);

        let mut x = [0.0; 2];
        assert_eq!(mp_sample_eval(sample, 0, 12.0, x.as_mut_ptr(), 2), MpStatus::Ok);
        assert_eq!(mp_sample_eval(sample, 99, 12.0, x.as_mut_ptr(), 2), MpStatus::Input);
        let mut ip = 0.0;
        assert_eq!(mp_sample_inner_product(sample, 1, 1, &mut ip), MpStatus::Ok);
        assert!(ip > 0.0);

        let mut report = ptr::null_mut();
        assert_eq!(mp_analyze(sample, 64, 0.5, 50, 1, &mut report), MpStatus::Ok);
        let n = mp_report_len(report);
        assert_eq!(n, 12);
        let (mut fao, mut depth, mut flags) = (vec![0.0; n], vec![0.0; n], vec![0u8; n]);
        assert_eq!(mp_report_fao(report, fao.as_mut_ptr(), n), MpStatus::Ok);
        assert_eq!(mp_report_depth(report, depth.as_mut_ptr(), n), MpStatus::Ok);
        assert_eq!(mp_report_flags(report, flags.as_mut_ptr(), n), MpStatus::Ok);
        for (a, d) in fao.iter().zip(&depth) {
            assert!((d - 1.0 / (1.0 + a)).abs() < 1e-15);
        }
        let mut count = 0;
        let mut central = vec![0usize; 2];
        assert_eq!(mp_report_central_set(report, central.as_mut_ptr(), 2, &mut count), MpStatus::BufferTooSmall);
        assert_eq!(count, 6);
        central.resize(count, 0);
        assert_eq!(mp_report_central_set(report, central.as_mut_ptr(), count, &mut count), MpStatus::Ok);
        assert!(central.windows(2).all(|w| w[0] < w[1]));

        let mut text = ptr::null_mut();
        assert_eq!(mp_report_to_json(report, &mut text), MpStatus::Ok);
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("central_set"));
        mp_string_free(text);
        mp_report_free(report);

        assert_eq!(mp_analyze(sample, 64, 1.5, 50, 1, &mut report), MpStatus::Config);
        mp_sample_free(sample);
    }
}

#[test]
fn fit_matches_line() {
    let mut basis = ptr::null_mut();
    unsafe {
        assert_eq!(mp_basis_new(1.0, 6, 4, 2, &mut basis), MpStatus::Ok);
        let t: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.0 + 2.0 * t).collect();
        let mut c = [0.0; 6];
        assert_eq!(mp_fit_coordinate(basis, t.as_ptr(), y.as_ptr(), 20, 1.0, c.as_mut_ptr(), 6), MpStatus::Ok);
        let mut phi = [0.0; 6];
        assert_eq!(mp_basis_eval(basis, 0.3, phi.as_mut_ptr(), 6), MpStatus::Ok);
        let fitted: f64 = phi.iter().zip(&c).map(|(a, b)| a * b).sum();
        assert!((fitted - 1.6).abs() < 1e-10);
        assert_eq!(mp_fit_coordinate(ptr::null(), t.as_ptr(), y.as_ptr(), 20, 1.0, c.as_mut_ptr(), 6), MpStatus::NullPointer);
        mp_basis_free(basis);
    }
}

const C_SMOKE: &str = r#"
#include <stdio.h>
#include <string.h>
#include "mission_profile.h"

int main(void) {
    MpBasis *basis = NULL;
    if (mp_basis_new(1.0, 8, 4, 2, &basis) != MP_STATUS_OK) return 1;
    double phi[8];
    if (mp_basis_eval(basis, 0.25, phi, 8) != MP_STATUS_OK) return 2;
    double sum = 0.0;
    for (int i = 0; i < 8; i++) sum += phi[i];
    if (sum < 1.0 - 1e-12 || sum > 1.0 + 1e-12) return 3;
    mp_basis_free(basis);
    double v[3] = {0.0, 1.0, 10.0}, mc = 0.0;
    if (mp_medcouple(v, 3, &mc) != MP_STATUS_OK || mc < 0.8 - 1e-12 || mc > 0.8 + 1e-12) return 4;
    MpSample *s = NULL;
    if (mp_sample_from_json("{}", &s) != MP_STATUS_INPUT) return 5;
    if (strlen(mp_last_error_message()) == 0) return 6;
    printf("ok %s\n", mp_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libmission_profile_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("smoke.c");
    std::fs::write(&src, C_SMOKE).unwrap();
    let exe = tmp.path().join("smoke");
    let build = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "smoke exited {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn which_cc() -> Result<String, ()> {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    match Command::new(&cc).arg("--version").output() {
        Ok(o) if o.status.success() => Ok(cc),
        _ => Err(()),
    }
}
