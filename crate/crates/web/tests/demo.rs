use resobus_web::{cphase_point, rabi_curve, transfer_curve};

#[test]
fn transfer_curve_moves_the_photon_to_r2() {
    let c = transfer_curve(50.0, 1e9, 0.1).unwrap();
    assert_eq!(c.len() % 4, 0);
    let last = &c[c.len() - 4..];
    assert!((last[0] - 10.0).abs() < 1e-9);
    assert!(last[3] > 0.999);
    assert!((c[1] - 1.0).abs() < 1e-12);
}

#[test]
fn lossy_transfer_ends_lower() {
    let lossless = transfer_curve(50.0, 1e9, 1.0).unwrap();
    let lossy = transfer_curve(50.0, 10.0, 1.0).unwrap();
    assert!(lossy.last().unwrap() < lossless.last().unwrap());
}

#[test]
fn rabi_curves_agree() {
    for (detuning, n) in [(0.0, 0), (20.0, 1), (-35.0, 0)] {
        let c = rabi_curve(13.0, detuning, n, 60.0, 120).unwrap();
        for row in c.chunks(3) {
            assert!((row[1] - row[2]).abs() < 1e-9, "{row:?}");
        }
    }
}

#[test]
fn rabi_rejects_photons_beyond_the_truncation() {
    assert!(rabi_curve(13.0, 0.0, 2, 10.0, 10).is_err());
    assert!(rabi_curve(13.0, 0.0, 0, 10.0, 0).is_err());
}

#[test]
fn cphase_point_matches_the_reference_gate() {
    let p = cphase_point(13.0, 50.0, 0.72, 8).unwrap();
    assert!((p.duration_ns - 91.589).abs() < 1e-3);
    assert!((p.fidelity - 0.9973).abs() < 2e-4, "{}", p.fidelity);
}
