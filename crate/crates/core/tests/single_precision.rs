use cw_core::analysis::classify_blowup_set;
use cw_core::{run, InitialData, RunOptions, RunStatus, SimParams32, SimParams64};

#[test]
fn f32_run_tracks_f64() {
    let p32 = SimParams32::default();
    let p64 = SimParams64::default();
    let (o32, _) = run(&p32, &InitialData::sine(10.0f32), RunOptions::default()).unwrap();
    let (o64, _) = run(&p64, &InitialData::sine(10.0f64), RunOptions::default()).unwrap();
    assert_eq!(o32.status, RunStatus::BlewUp);
    assert_eq!(o64.status, RunStatus::BlewUp);
    let rel = (o32.t_num_partial as f64 / o64.t_num_partial - 1.0).abs();
    assert!(rel < 1e-4, "T_num differs by {rel:e}");
    assert!(o32.n_final.abs_diff(o64.n_final) <= 1);
}

#[test]
fn f32_classification_matches_f64() {
    let base32 = SimParams32 {
        p: 2.0,
        q: 1.0,
        h: 0.5,
        ..Default::default()
    };
    let base64 = SimParams64 {
        p: 2.0,
        q: 1.0,
        h: 0.5,
        ..Default::default()
    };
    let (_, h32) = run(&base32, &InitialData::sine(10.0f32), RunOptions::default()).unwrap();
    let (_, h64) = run(&base64, &InitialData::sine(10.0f64), RunOptions::default()).unwrap();
    let r32 = classify_blowup_set(&h32, &base32).unwrap();
    let r64 = classify_blowup_set(&h64, &base64).unwrap();
    for k in -2..=2 {
        assert_eq!(r32.verdict(k), r64.verdict(k), "offset {k}");
    }
}
