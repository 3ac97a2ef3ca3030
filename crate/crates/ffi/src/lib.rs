//! C ABI over the namoplan library.
//!
//! Tasks and models are opaque handles owned by the caller and released with
//! their `_free` function. Every fallible call returns a [`NamoStatus`]; on
//! failure the message is available from [`namo_last_error`] on the same
//! thread. Strings returned through out-parameters are released with
//! [`namo_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use namoplan::gnn::{self, ModelParams};
use namoplan::mazenamo::{generate, mazenamo_domain, GenConfig, InstanceRecord};
use namoplan::pddl::{emit_task, parse_plan, parse_task, validate_plan, Task};
use namoplan::pipeline::{run_method, FixedScores, GnnScorer, Method, PipelineConfig, Timing};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamoStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidArgument = 4,
    Model = 5,
    Planner = 6,
    Panic = 7,
}

/// A planning task in the maze domain.
pub struct NamoTask {
    task: Task,
}

/// Trained scoring network weights.
pub struct NamoModel {
    params: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(NamoStatus, String);

impl Failure {
    fn new(status: NamoStatus, msg: impl ToString) -> Self {
        Failure(status, msg.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NamoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NamoStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NamoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(NamoStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(NamoStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(NamoStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(NamoStatus::NullArgument, "output pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(NamoStatus::NullArgument, "output pointer is null"));
    }
    let c = CString::new(s).map_err(|e| Failure::new(NamoStatus::Planner, e))?;
    *out = c.into_raw();
    Ok(())
}

/// Parses a problem file written against the maze domain.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_task_from_pddl(text: *const c_char, out: *mut *mut NamoTask) -> NamoStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let task = parse_task(text, &mazenamo_domain()).map_err(|e| Failure::new(NamoStatus::Parse, e))?;
        put(out, NamoTask { task })
    })
}

/// Builds a task from an instance record in JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_task_from_record_json(json: *const c_char, out: *mut *mut NamoTask) -> NamoStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let record: InstanceRecord = serde_json::from_str(json).map_err(|e| Failure::new(NamoStatus::Parse, e))?;
        let grid = record.to_grid().map_err(|e| Failure::new(NamoStatus::InvalidArgument, e))?;
        let mut task = grid.to_task();
        task.name = record.id;
        put(out, NamoTask { task })
    })
}

/// Samples an `n x n` maze with the default cell probabilities.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_task_generate(n: usize, seed: u64, out: *mut *mut NamoTask) -> NamoStatus {
    guard(|| {
        let grid = generate(&GenConfig::new(n, seed)).map_err(|e| Failure::new(NamoStatus::InvalidArgument, e))?;
        put(out, NamoTask { task: grid.to_task() })
    })
}

/// Writes the task as a problem file.
///
/// # Safety
/// `task` must come from this library and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_task_to_pddl(task: *const NamoTask, out: *mut *mut c_char) -> NamoStatus {
    guard(|| {
        let task = ref_arg(task, "task")?;
        put_string(out, emit_task(&task.task))
    })
}

/// Number of objects in the task.
///
/// # Safety
/// `task` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn namo_task_entity_count(task: *const NamoTask) -> usize {
    task.as_ref().map_or(0, |t| t.task.entities.len())
}

/// # Safety
/// `task` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn namo_task_free(task: *mut NamoTask) {
    if !task.is_null() {
        drop(Box::from_raw(task));
    }
}

/// Loads network weights from their JSON serialisation.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_model_from_json(json: *const c_char, out: *mut *mut NamoModel) -> NamoStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let params = gnn::from_json(json).map_err(|e| Failure::new(NamoStatus::Model, e))?;
        put(out, NamoModel { params })
    })
}

/// # Safety
/// `model` must be null or come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn namo_model_free(model: *mut NamoModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Runs one planner and writes the result record as JSON.
///
/// `method` is one of `pure`, `ploi`, `ploi+comp`, `ploi+relax`, `flax`.
/// `model` may be null only for `pure`. A nonzero `wall_clock` measures the
/// budget in real seconds; otherwise the deterministic work clock is used.
/// A failed search is not an error: check `success` in the JSON.
///
/// # Safety
/// Handles must come from this library, `method` must be NUL-terminated and
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_plan(
    task: *const NamoTask,
    model: *const NamoModel,
    method: *const c_char,
    budget_secs: f64,
    wall_clock: i32,
    out_json: *mut *mut c_char,
) -> NamoStatus {
    guard(|| {
        let task = ref_arg(task, "task")?;
        let name = str_arg(method, "method")?;
        let method = Method::parse(name)
            .ok_or_else(|| Failure::new(NamoStatus::InvalidArgument, format!("unknown method `{name}`")))?;
        let mut cfg = PipelineConfig {
            budget_secs,
            ..PipelineConfig::default()
        };
        if wall_clock != 0 {
            cfg.timing = Timing::Wall;
        }
        let domain = mazenamo_domain();
        let result = match model.as_ref() {
            Some(m) => run_method(method, &domain, &task.task, &GnnScorer(&m.params), &cfg),
            None if !method.needs_model() => run_method(method, &domain, &task.task, &FixedScores::default(), &cfg),
            None => {
                return Err(Failure::new(
                    NamoStatus::NullArgument,
                    format!("method `{name}` needs a model"),
                ))
            }
        };
        let result = result.map_err(|e| match e {
            namoplan::pipeline::PipelineError::Config(_) => Failure::new(NamoStatus::InvalidArgument, e),
            _ => Failure::new(NamoStatus::Planner, e),
        })?;
        let json = serde_json::to_string(&result).map_err(|e| Failure::new(NamoStatus::Planner, e))?;
        put_string(out_json, json)
    })
}

/// Checks a plan (one `(action args...)` per line) against the task.
///
/// # Safety
/// `task` must come from this library, `plan` must be NUL-terminated and
/// `out_valid` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn namo_validate_plan(task: *const NamoTask, plan: *const c_char, out_valid: *mut bool) -> NamoStatus {
    guard(|| {
        let task = ref_arg(task, "task")?;
        let plan = parse_plan(str_arg(plan, "plan")?).map_err(|e| Failure::new(NamoStatus::Parse, e))?;
        let verdict =
            validate_plan(&mazenamo_domain(), &task.task, &plan).map_err(|e| Failure::new(NamoStatus::Planner, e))?;
        if out_valid.is_null() {
            return Err(Failure::new(NamoStatus::NullArgument, "out_valid is null"));
        }
        *out_valid = verdict.is_valid();
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The caller owns
/// the returned string.
#[no_mangle]
pub extern "C" fn namo_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn namo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn namo_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
