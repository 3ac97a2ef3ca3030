use std::ffi::{c_char, CStr, CString};
use std::ptr;

use namoplan::mazenamo::stacked_blocker;
use namoplan_ffi::*;

fn take_string(p: *mut c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { namo_string_free(p) };
    s
}

fn last_error() -> Option<String> {
    let p = namo_last_error();
    (!p.is_null()).then(|| take_string(p))
}

fn stacked_task() -> *mut NamoTask {
    let (grid, _) = stacked_blocker();
    let json = CString::new(serde_json::to_string(&grid.to_record()).unwrap()).unwrap();
    let mut task = ptr::null_mut();
    assert_eq!(unsafe { namo_task_from_record_json(json.as_ptr(), &mut task) }, NamoStatus::Ok);
    task
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(namo_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn record_to_pddl_and_back() {
    let task = stacked_task();
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { namo_task_to_pddl(task, &mut text) }, NamoStatus::Ok);
    let text = CString::new(take_string(text)).unwrap();
    let mut again = ptr::null_mut();
    assert_eq!(unsafe { namo_task_from_pddl(text.as_ptr(), &mut again) }, NamoStatus::Ok);
    unsafe {
        assert_eq!(namo_task_entity_count(task), namo_task_entity_count(again));
        assert!(namo_task_entity_count(task) > 0);
        namo_task_free(task);
        namo_task_free(again);
    }
}

#[test]
fn reference_plan_validates_and_broken_plan_does_not() {
    let task = stacked_task();
    let (_, plan) = stacked_blocker();
    let good = CString::new(plan.to_string()).unwrap();
    let mut valid = false;
    assert_eq!(unsafe { namo_validate_plan(task, good.as_ptr(), &mut valid) }, NamoStatus::Ok);
    assert!(valid);
    let first_only: String = plan.to_string().lines().skip(1).collect::<Vec<_>>().join("\n");
    let bad = CString::new(first_only).unwrap();
    assert_eq!(unsafe { namo_validate_plan(task, bad.as_ptr(), &mut valid) }, NamoStatus::Ok);
    assert!(!valid);
    unsafe { namo_task_free(task) };
}

#[test]
fn pure_planner_solves_and_reports_json() {
    let task = stacked_task();
    let method = CString::new("pure").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { namo_plan(task, ptr::null(), method.as_ptr(), 5.0, 0, &mut out) },
        NamoStatus::Ok
    );
    let v: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(v["success"], true);
    assert_eq!(v["method"], "pure");
    unsafe { namo_task_free(task) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let mut task = ptr::null_mut();
    assert_eq!(unsafe { namo_task_from_pddl(ptr::null(), &mut task) }, NamoStatus::NullArgument);
    assert!(last_error().unwrap().contains("null"));
    assert!(task.is_null());

    let junk = CString::new("(define (problem").unwrap();
    assert_eq!(unsafe { namo_task_from_pddl(junk.as_ptr(), &mut task) }, NamoStatus::Parse);
    assert!(last_error().is_some());

    assert_eq!(unsafe { namo_task_generate(2, 0, &mut task) }, NamoStatus::InvalidArgument);

    let task = stacked_task();
    assert!(last_error().is_none());
    let flax = CString::new("flax").unwrap();
    let nope = CString::new("dijkstra").unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(namo_plan(task, ptr::null(), flax.as_ptr(), 1.0, 0, &mut out), NamoStatus::NullArgument);
        assert_eq!(namo_plan(task, ptr::null(), nope.as_ptr(), 1.0, 0, &mut out), NamoStatus::InvalidArgument);
        let pure = CString::new("pure").unwrap();
        assert_eq!(namo_plan(task, ptr::null(), pure.as_ptr(), -1.0, 0, &mut out), NamoStatus::InvalidArgument);
        assert!(out.is_null());
        let mut model = ptr::null_mut();
        let bad = CString::new("{}").unwrap();
        assert_eq!(namo_model_from_json(bad.as_ptr(), &mut model), NamoStatus::Model);
        namo_task_free(task);
        namo_task_free(ptr::null_mut());
        namo_model_free(ptr::null_mut());
        namo_string_free(ptr::null_mut());
    }
}

#[test]
fn generated_tasks_are_deterministic() {
    let render = |seed| {
        let mut t = ptr::null_mut();
        assert_eq!(unsafe { namo_task_generate(8, seed, &mut t) }, NamoStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(unsafe { namo_task_to_pddl(t, &mut s) }, NamoStatus::Ok);
        unsafe { namo_task_free(t) };
        take_string(s)
    };
    assert_eq!(render(7), render(7));
    assert_ne!(render(7), render(8));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/namoplan.h")).unwrap();
    for name in [
        "namo_task_from_pddl",
        "namo_task_from_record_json",
        "namo_task_generate",
        "namo_task_to_pddl",
        "namo_task_entity_count",
        "namo_task_free",
        "namo_model_from_json",
        "namo_model_free",
        "namo_plan",
        "namo_validate_plan",
        "namo_last_error",
        "namo_string_free",
        "namo_version",
        "NAMO_STATUS_OK",
        "typedef struct NamoTask NamoTask",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
