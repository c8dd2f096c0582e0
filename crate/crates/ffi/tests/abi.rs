use std::ffi::{CStr, CString};
use std::ptr;

use dffc_ffi::*;

fn last_error() -> String {
    let p = dffc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn scalar_entry_points() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            dffc_instantaneous_hardness(0.5, 0.05, 0.1, &mut out),
            DffcStatus::Ok
        );
        assert_eq!(out, 1.0);
        assert_eq!(
            dffc_instantaneous_hardness(0.5, 0.2, 0.1, &mut out),
            DffcStatus::InvalidSchedule
        );
        assert!(last_error().contains("0.2"));
        assert_eq!(
            dffc_instantaneous_hardness(0.5, 0.1, 0.1, ptr::null_mut()),
            DffcStatus::NullPointer
        );

        assert_eq!(dffc_cosine_lr(0.1, 0.001, 20, 1, &mut out), DffcStatus::Ok);
        assert_eq!(out, 0.1);
        assert_eq!(
            dffc_cosine_lr(0.1, 0.001, 20, 21, &mut out),
            DffcStatus::InvalidSchedule
        );
    }
    let v = unsafe { CStr::from_ptr(dffc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn hardness_handle_lifecycle() {
    let prior = [0.2, 0.4, 0.0];
    let mut h = ptr::null_mut();
    unsafe {
        assert_eq!(
            dffc_hardness_new(prior.as_ptr(), 3, 0.9, 0.5, &mut h),
            DffcStatus::Ok
        );
        assert_eq!(dffc_hardness_len(h), 3);
        assert_eq!(dffc_hardness_update(h, 0, 1.0, true), DffcStatus::Ok);
        assert_eq!(dffc_hardness_update(h, 1, 5.0, false), DffcStatus::Ok);
        assert_eq!(
            dffc_hardness_update(h, 7, 1.0, true),
            DffcStatus::IndexOutOfRange
        );

        let mut dfh = [0.0; 3];
        assert_eq!(dffc_hardness_dfh(h, dfh.as_mut_ptr(), 3), DffcStatus::Ok);
        assert!((dfh[0] - 1.0).abs() < 1e-12);
        assert!((dfh[1] - 0.2).abs() < 1e-12);
        assert_eq!(dfh[2], 0.0);
        assert_eq!(
            dffc_hardness_dfh(h, dfh.as_mut_ptr(), 2),
            DffcStatus::ShapeMismatch
        );

        let mut json = ptr::null_mut();
        assert_eq!(dffc_hardness_to_json(h, &mut json), DffcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(dffc_hardness_from_json(json, &mut back), DffcStatus::Ok);
        let mut dih = [0.0; 3];
        assert_eq!(dffc_hardness_dih(back, dih.as_mut_ptr(), 3), DffcStatus::Ok);
        assert!((dih[0] - 0.9).abs() < 1e-12);
        dffc_string_free(json);
        dffc_hardness_free(back);
        dffc_hardness_free(h);

        assert_eq!(dffc_hardness_len(ptr::null()), 0);
        assert_eq!(
            dffc_hardness_update(ptr::null_mut(), 0, 1.0, true),
            DffcStatus::NullPointer
        );
        assert_eq!(
            dffc_hardness_new(prior.as_ptr(), 3, 1.5, 0.5, &mut h),
            DffcStatus::InvalidArgument
        );
        let bad = CString::new("{not json").unwrap();
        assert_eq!(
            dffc_hardness_from_json(bad.as_ptr(), &mut h),
            DffcStatus::Format
        );
        dffc_hardness_free(ptr::null_mut());
        dffc_string_free(ptr::null_mut());
    }
}

#[test]
fn schedule_and_selection() {
    let milestones = [2usize, 5, 8, 12, 15];
    let mut s = ptr::null_mut();
    let mut k = 0usize;
    unsafe {
        assert_eq!(
            dffc_schedule_new(milestones.as_ptr(), 5, 0.9, 1000, 1000, 20, &mut s),
            DffcStatus::Ok
        );
        let sizes: Vec<usize> = (1..=20)
            .map(|t| {
                assert_eq!(dffc_schedule_pool_size(s, t, &mut k), DffcStatus::Ok);
                k
            })
            .collect();
        assert_eq!(sizes[7], 810);
        assert_eq!(sizes[19], 656);
        assert_eq!(
            dffc_schedule_pool_size(s, 0, &mut k),
            DffcStatus::InvalidArgument
        );
        dffc_schedule_free(s);

        let bad = [3usize, 2];
        assert_eq!(
            dffc_schedule_new(bad.as_ptr(), 2, 0.9, 0, 10, 5, &mut s),
            DffcStatus::InvalidArgument
        );

        let scores = [0.1, 0.9, 0.5, 0.9];
        let mut ids = [0usize; 2];
        assert_eq!(
            dffc_select_hard_pool(scores.as_ptr(), 4, 2, ids.as_mut_ptr()),
            DffcStatus::Ok
        );
        assert_eq!(ids, [1, 3]);
        assert_eq!(
            dffc_select_easy_pool(scores.as_ptr(), 4, 2, ids.as_mut_ptr()),
            DffcStatus::Ok
        );
        assert_eq!(ids, [0, 2]);
        assert_eq!(
            dffc_select_hard_pool(scores.as_ptr(), 4, 5, ids.as_mut_ptr()),
            DffcStatus::InvalidArgument
        );
        assert_eq!(
            dffc_select_easy_pool(scores.as_ptr(), 4, 0, ptr::null_mut()),
            DffcStatus::Ok
        );
    }
}

#[test]
fn metrics() {
    let a = [0.0f32, 0.0, 1.0, 1.0];
    let b = [0.0f32, 0.5, 1.0, 1.0];
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            dffc_ssim(a.as_ptr(), b.as_ptr(), 2, 2, &mut out),
            DffcStatus::Ok
        );
        assert!((out - 62622518.0 / 72196893.0).abs() < 1e-12);
        assert_eq!(
            dffc_tampering_ratio(a.as_ptr(), b.as_ptr(), 2, 2, 1.0 / 255.0, &mut out),
            DffcStatus::Ok
        );
        assert_eq!(out, 0.25);

        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(
            dffc_roc_auc(scores.as_ptr(), labels.as_ptr(), 4, &mut out),
            DffcStatus::Ok
        );
        assert_eq!(out, 0.75);
        let same = [1.0; 4];
        assert_eq!(
            dffc_roc_auc(scores.as_ptr(), same.as_ptr(), 4, &mut out),
            DffcStatus::UndefinedAuc
        );
    }
}

#[test]
fn train_from_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = CString::new(
        r#"{"mode": "dffc", "total_epochs": 3, "hidden": 4,
            "dataset": {"n_train": 40, "n_test": 20},
            "schedule": {"milestones": [1, 2], "easy_pool_size": 5}}"#,
    )
    .unwrap();
    let out_dir = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut metrics = ptr::null_mut();
    unsafe {
        assert_eq!(
            dffc_train_json(config.as_ptr(), out_dir.as_ptr(), &mut metrics),
            DffcStatus::Ok
        );
        let rows: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(metrics).to_str().unwrap()).unwrap();
        assert_eq!(rows.as_array().unwrap().len(), 3);
        dffc_string_free(metrics);

        let typo = CString::new(r#"{"total_epoch": 3}"#).unwrap();
        assert_eq!(
            dffc_train_json(typo.as_ptr(), ptr::null(), ptr::null_mut()),
            DffcStatus::Format
        );
        assert!(last_error().contains("total_epoch"));
    }
    assert!(dir.path().join("metrics.csv").exists());
    assert!(dir.path().join("model.bin").exists());
}
