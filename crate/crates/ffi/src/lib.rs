//! C ABI for the `ddnet` engine.
//!
//! Models are opaque handles created by [`ddnet_model_new`] or
//! [`ddnet_model_load`] and released with [`ddnet_model_free`]. Fallible
//! functions return a [`DdnetStatus`]; on failure a description is kept per
//! thread and can be read with [`ddnet_last_error_message`].
//!
//! Coordinates are passed frame-major as `frames * num_joints * coord_dim`
//! floats. A handle may be used from several threads at once for prediction,
//! but must not be freed while in use.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ddnet::features::{compute_jcd, jcd_dim, DEFAULT_FRAMES};
use ddnet::io::{load_weights, save_weights};
use ddnet::{build_feature_bundle, DdNet, Error, JointFrame, ModelConfig, SkeletonSequence};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidInput = 3,
    Shape = 4,
    Io = 5,
    Parse = 6,
    Corrupt = 7,
    Version = 8,
    Incompatible = 9,
    BufferTooSmall = 10,
    Internal = 11,
}

/// Opaque model handle.
pub struct DdnetModel {
    inner: DdNet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> DdnetStatus {
    match e {
        Error::InvalidInput(_) | Error::DegenerateBatch(_) => DdnetStatus::InvalidInput,
        Error::InvalidArgument(_) | Error::Config(_) => DdnetStatus::InvalidArgument,
        Error::Shape(_) => DdnetStatus::Shape,
        Error::Io { .. } => DdnetStatus::Io,
        Error::Parse { .. } => DdnetStatus::Parse,
        Error::Corrupt(_) => DdnetStatus::Corrupt,
        Error::Version { .. } => DdnetStatus::Version,
        Error::Incompatible(_) => DdnetStatus::Incompatible,
        Error::Diverged { .. } => DdnetStatus::Internal,
    }
}

fn fail(status: DdnetStatus, msg: impl Into<String>) -> DdnetStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DdnetStatus>) -> DdnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdnetStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DdnetStatus::Internal, "internal panic"),
    }
}

fn check(r: ddnet::Result<()>) -> Result<(), DdnetStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

fn lift<T>(r: ddnet::Result<T>) -> Result<T, DdnetStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, DdnetStatus> {
    if path.is_null() {
        return Err(fail(DdnetStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(DdnetStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn model_arg<'a>(model: *const DdnetModel) -> Result<&'a DdNet, DdnetStatus> {
    model
        .as_ref()
        .map(|m| &m.inner)
        .ok_or_else(|| fail(DdnetStatus::NullPointer, "model handle is null"))
}

fn boxed(out: *mut *mut DdnetModel, inner: DdNet) -> Result<(), DdnetStatus> {
    unsafe { *out = Box::into_raw(Box::new(DdnetModel { inner })) };
    Ok(())
}

/// Creates a randomly initialized model using the default temporal length.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_new(
    num_joints: u32,
    coord_dim: u32,
    num_classes: u32,
    filters: u32,
    seed: u64,
    out: *mut *mut DdnetModel,
) -> DdnetStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DdnetStatus::NullPointer, "out is null"));
        }
        let cfg = ModelConfig::new(num_joints as usize, coord_dim as usize, num_classes as usize)
            .with_filters(filters as usize);
        boxed(out, lift(DdNet::new(cfg, seed))?)
    })
}

/// Loads a weight file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_load(path: *const c_char, out: *mut *mut DdnetModel) -> DdnetStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(DdnetStatus::NullPointer, "out is null"));
        }
        let path = path_arg(path)?;
        boxed(out, lift(load_weights(path))?)
    })
}

/// Writes a weight file.
///
/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_save(model: *const DdnetModel, path: *const c_char) -> DdnetStatus {
    guard(|| {
        let m = model_arg(model)?;
        let path = path_arg(path)?;
        check(save_weights(m, path))
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_free(model: *mut DdnetModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of output classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_num_classes(model: *const DdnetModel) -> u32 {
    model.as_ref().map_or(0, |m| m.inner.config().num_classes as u32)
}

/// Joints per frame expected by the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_num_joints(model: *const DdnetModel) -> u32 {
    model.as_ref().map_or(0, |m| m.inner.config().num_joints as u32)
}

/// Coordinates per joint expected by the model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_coord_dim(model: *const DdnetModel) -> u32 {
    model.as_ref().map_or(0, |m| m.inner.config().coord_dim as u32)
}

/// Trainable parameter count, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_param_count(model: *const DdnetModel) -> u64 {
    model.as_ref().map_or(0, |m| m.inner.num_parameters() as u64)
}

/// Classifies one sequence.
///
/// Writes the predicted class to `class_out` and, when `probs_out` is not
/// null, the softmax distribution to `probs_out[0..num_classes]`.
///
/// # Safety
/// `coords` must point to `frames * num_joints * coord_dim` floats,
/// `class_out` must be valid, and `probs_out` null or valid for `probs_len` floats.
#[no_mangle]
pub unsafe extern "C" fn ddnet_model_predict(
    model: *const DdnetModel,
    coords: *const f32,
    frames: usize,
    num_joints: u32,
    coord_dim: u32,
    class_out: *mut u32,
    probs_out: *mut f32,
    probs_len: usize,
) -> DdnetStatus {
    guard(|| {
        let m = model_arg(model)?;
        if coords.is_null() || class_out.is_null() {
            return Err(fail(DdnetStatus::NullPointer, "coords or class_out is null"));
        }
        let (n, d) = (num_joints as usize, coord_dim as usize);
        let cfg = m.config();
        if n != cfg.num_joints || d != cfg.coord_dim {
            return Err(fail(
                DdnetStatus::Incompatible,
                format!("model expects {} joints in {}D, got {n} in {d}D", cfg.num_joints, cfg.coord_dim),
            ));
        }
        let classes = cfg.num_classes;
        if !probs_out.is_null() && probs_len < classes {
            return Err(fail(
                DdnetStatus::BufferTooSmall,
                format!("probability buffer holds {probs_len} values, need {classes}"),
            ));
        }
        let len = frames
            .checked_mul(n * d)
            .ok_or_else(|| fail(DdnetStatus::InvalidArgument, "sequence size overflows"))?;
        let data = slice::from_raw_parts(coords, len).to_vec();
        let seq = lift(SkeletonSequence::new(n, d, data))?;
        let bundle = lift(build_feature_bundle(&seq, cfg.frames))?;
        let (class, probs) = lift(m.predict(&bundle))?;
        *class_out = class as u32;
        if !probs_out.is_null() {
            slice::from_raw_parts_mut(probs_out, classes).copy_from_slice(&probs);
        }
        Ok(())
    })
}

/// Pairwise joint distances of one frame into `out[0..N(N-1)/2]`.
///
/// # Safety
/// `coords` must point to `num_joints * coord_dim` floats and `out` to `out_len` floats.
#[no_mangle]
pub unsafe extern "C" fn ddnet_compute_jcd(
    coords: *const f32,
    num_joints: u32,
    coord_dim: u32,
    out: *mut f32,
    out_len: usize,
) -> DdnetStatus {
    guard(|| {
        if coords.is_null() || out.is_null() {
            return Err(fail(DdnetStatus::NullPointer, "coords or out is null"));
        }
        let (n, d) = (num_joints as usize, coord_dim as usize);
        let need = jcd_dim(n);
        if out_len < need {
            return Err(fail(DdnetStatus::BufferTooSmall, format!("output holds {out_len} values, need {need}")));
        }
        let frame = lift(JointFrame::from_flat(d, slice::from_raw_parts(coords, n * d).to_vec()))?;
        slice::from_raw_parts_mut(out, need).copy_from_slice(&compute_jcd(&frame));
        Ok(())
    })
}

/// Temporal length sequences are resampled to by default.
#[no_mangle]
pub extern "C" fn ddnet_default_frames() -> u32 {
    DEFAULT_FRAMES as u32
}

/// Copies the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL,
/// or 0 when no error has been recorded. `buf` may be null to query the length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ddnet_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ddnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
