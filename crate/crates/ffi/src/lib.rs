//! C ABI over the `kronsketch` tensor tree and its solvers.
//!
//! Every function returns a [`KsStatus`]. On failure the message is kept in a
//! thread-local slot readable through [`ks_last_error_message`]. Matrices
//! cross the boundary as row-major `double` buffers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kronsketch::linalg::{DenseMatrix, SparseVector};
use kronsketch::sketch::{choose_m, BaseFamily, TensorFamily};
use kronsketch::solvers::{lowrank_query, regression_query};
use kronsketch::tree::{TensorTree, TreeConfig};
use kronsketch::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    Parse = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsBaseFamily {
    CountSketch = 0,
    Osnap = 1,
    Srht = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsTensorFamily {
    TensorSketch = 0,
    TensorSrht = 1,
}

impl From<KsBaseFamily> for BaseFamily {
    fn from(f: KsBaseFamily) -> Self {
        match f {
            KsBaseFamily::CountSketch => BaseFamily::CountSketch,
            KsBaseFamily::Osnap => BaseFamily::Osnap,
            KsBaseFamily::Srht => BaseFamily::Srht,
        }
    }
}

impl From<KsTensorFamily> for TensorFamily {
    fn from(f: KsTensorFamily) -> Self {
        match f {
            KsTensorFamily::TensorSketch => TensorFamily::TensorSketch,
            KsTensorFamily::TensorSrht => TensorFamily::TensorSrht,
        }
    }
}

/// Opaque tensor tree handle.
pub struct KsTree {
    tree: TensorTree,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

struct Failure(KsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } => KsStatus::DimensionMismatch,
            Error::Config(_) | Error::DimensionOverflow(_) | Error::NotPowerOfTwo(_) => KsStatus::InvalidArgument,
            Error::Parse(_) => KsStatus::Parse,
            Error::Io { .. } => KsStatus::Io,
            _ => KsStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: KsStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {message}"));
            KsStatus::Panic
        }
    }
}

unsafe fn tree_ref<'a>(tree: *const KsTree) -> Result<&'a KsTree, Failure> {
    tree.as_ref()
        .map_or_else(|| fail(KsStatus::NullPointer, "tree handle is null"), Ok)
}

unsafe fn tree_mut<'a>(tree: *mut KsTree) -> Result<&'a mut KsTree, Failure> {
    tree.as_mut()
        .map_or_else(|| fail(KsStatus::NullPointer, "tree handle is null"), Ok)
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        Ok(&[])
    } else if data.is_null() {
        fail(KsStatus::NullPointer, format!("{what} is null"))
    } else {
        Ok(std::slice::from_raw_parts(data, len))
    }
}

unsafe fn out_slice<'a>(data: *mut f64, len: usize, needed: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return fail(
            KsStatus::BufferTooSmall,
            format!("{what} holds {len} values, {needed} needed"),
        );
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return fail(KsStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts_mut(data, needed))
}

unsafe fn matrix(data: *const f64, rows: usize, cols: usize, what: &str) -> Result<DenseMatrix, Failure> {
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Failure(KsStatus::InvalidArgument, format!("{what} shape overflows")))?;
    Ok(DenseMatrix::new(rows, cols, slice(data, len, what)?.to_vec())?)
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(KsStatus::NullPointer, "path is null");
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KsStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return fail(KsStatus::NullPointer, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

/// Message for the most recent failure on this thread. Empty when none has
/// occurred. The pointer stays valid until the next failing call on the
/// same thread.
#[no_mangle]
pub extern "C" fn ks_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a tree over `q` factors. Factor `i` is `rows[i] × cols[i]`, stored
/// row-major at `data[i]`. The handle is written to `out` and must be
/// released with [`ks_tree_free`].
///
/// # Safety
/// `data`, `rows` and `cols` must point to `q` valid entries and each
/// `data[i]` to `rows[i] * cols[i]` doubles.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ks_tree_new(
    q: usize,
    data: *const *const f64,
    rows: *const usize,
    cols: *const usize,
    c_family: KsBaseFamily,
    t_family: KsTensorFamily,
    m: usize,
    seed: u64,
    adaptive: bool,
    out: *mut *mut KsTree,
) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return fail(KsStatus::NullPointer, "output pointer is null");
        }
        out.write(ptr::null_mut());
        if q == 0 {
            return fail(KsStatus::InvalidArgument, "at least one factor is required");
        }
        if data.is_null() || rows.is_null() || cols.is_null() {
            return fail(KsStatus::NullPointer, "factor arrays are null");
        }
        let (data, rows, cols) = (
            std::slice::from_raw_parts(data, q),
            std::slice::from_raw_parts(rows, q),
            std::slice::from_raw_parts(cols, q),
        );
        let factors = (0..q)
            .map(|i| matrix(data[i], rows[i], cols[i], "factor data"))
            .collect::<Result<Vec<_>, _>>()?;
        let config = TreeConfig::new(c_family.into(), t_family.into(), m)
            .with_seed(seed)
            .with_adaptive(adaptive);
        let tree = TensorTree::initialize(factors, config)?;
        out.write(Box::into_raw(Box::new(KsTree { tree })));
        Ok(())
    })
}

/// # Safety
/// `tree` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_free(tree: *mut KsTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Adds the `rows × cols` matrix `delta` to factor `i` (zero-based).
///
/// # Safety
/// `tree` must be a live handle and `delta` must hold `rows * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_update(
    tree: *mut KsTree,
    i: usize,
    delta: *const f64,
    rows: usize,
    cols: usize,
) -> KsStatus {
    guard(|| {
        let t = tree_mut(tree)?;
        let b = matrix(delta, rows, cols, "delta")?;
        Ok(t.tree.update(i, &b)?)
    })
}

/// Like [`ks_tree_update`] but redraws the sketches on the update path. The
/// tree must have been built with `adaptive` set.
///
/// # Safety
/// Same as [`ks_tree_update`].
#[no_mangle]
pub unsafe extern "C" fn ks_tree_update_adaptive(
    tree: *mut KsTree,
    i: usize,
    delta: *const f64,
    rows: usize,
    cols: usize,
) -> KsStatus {
    guard(|| {
        let t = tree_mut(tree)?;
        let b = matrix(delta, rows, cols, "delta")?;
        Ok(t.tree.update_adaptive(i, &b)?)
    })
}

/// Nodes recomputed by the most recent update.
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_last_recompute_count(tree: *const KsTree, out: *mut usize) -> KsStatus {
    guard(|| write_out(out, tree_ref(tree)?.tree.recompute_count()))
}

/// Shape of the root sketch `S(A_1 ⊗ … ⊗ A_q)`.
///
/// # Safety
/// `tree` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_root_shape(tree: *const KsTree, rows: *mut usize, cols: *mut usize) -> KsStatus {
    guard(|| {
        let (r, c) = tree_ref(tree)?.tree.root().shape();
        write_out(rows, r)?;
        write_out(cols, c)
    })
}

/// Copies the root sketch row-major into `out`, which holds `len` doubles.
///
/// # Safety
/// `tree` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_root_copy(tree: *const KsTree, out: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let root = tree_ref(tree)?.tree.root();
        let src = root.as_slice();
        out_slice(out, len, src.len(), "output buffer")?.copy_from_slice(src);
        Ok(())
    })
}

/// Sketches the sparse vector given by `nnz` (index, value) pairs of
/// logical length `n`. Writes `m` values to `out`.
///
/// # Safety
/// `indices` and `values` must hold `nnz` entries; `out` must hold `len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_sketch_vector(
    tree: *const KsTree,
    n: usize,
    indices: *const usize,
    values: *const f64,
    nnz: usize,
    out: *mut f64,
    len: usize,
) -> KsStatus {
    guard(|| {
        let t = tree_ref(tree)?;
        let b = sparse(n, indices, values, nnz)?;
        let s = t.tree.sketch_vector(&b)?;
        out_slice(out, len, s.len(), "output buffer")?.copy_from_slice(s.as_slice());
        Ok(())
    })
}

unsafe fn sparse(n: usize, indices: *const usize, values: *const f64, nnz: usize) -> Result<SparseVector, Failure> {
    let idx: &[usize] = if nnz == 0 {
        &[]
    } else if indices.is_null() {
        return fail(KsStatus::NullPointer, "indices are null");
    } else {
        std::slice::from_raw_parts(indices, nnz)
    };
    let vals = slice(values, nnz, "values")?;
    Ok(SparseVector::new(
        n,
        idx.iter().copied().zip(vals.iter().copied()).collect(),
    )?)
}

/// Solves the sketched regression `min ‖S A x − S b‖` for the current tree.
/// `b_sketch` is an already-sketched label of length `m`; `x` receives `d`
/// values.
///
/// # Safety
/// `b_sketch` must hold `m` doubles and `x` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_regression_query(
    tree: *const KsTree,
    b_sketch: *const f64,
    m: usize,
    x: *mut f64,
    len: usize,
) -> KsStatus {
    guard(|| {
        let t = tree_ref(tree)?;
        let b = kronsketch::linalg::DenseVector::new(slice(b_sketch, m, "b_sketch")?.to_vec())?;
        let sol = regression_query(&t.tree, &b)?;
        out_slice(x, len, sol.len(), "x")?.copy_from_slice(sol.as_slice());
        Ok(())
    })
}

/// Rank-`k` projector rows `U_k` (`k × d`, row-major) from the sketched
/// root.
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_lowrank_query(tree: *const KsTree, k: usize, out: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let t = tree_ref(tree)?;
        let res = lowrank_query(&t.tree, k)?;
        let src = res.uk.as_slice();
        out_slice(out, len, src.len(), "output buffer")?.copy_from_slice(src);
        Ok(())
    })
}

/// Sketch dimension from the bound for `(c_family, t_family)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ks_choose_m(
    c_family: KsBaseFamily,
    t_family: KsTensorFamily,
    dim: f64,
    q: usize,
    eps: f64,
    delta: f64,
    c_factor: f64,
    out: *mut usize,
) -> KsStatus {
    guard(|| {
        let m = choose_m(c_family.into(), t_family.into(), dim, q, eps, delta, c_factor)?;
        write_out(out, m)
    })
}

/// # Safety
/// `tree` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_write_snapshot(tree: *const KsTree, path: *const c_char) -> KsStatus {
    guard(|| {
        let t = tree_ref(tree)?;
        Ok(t.tree.write_snapshot(self::path(path)?)?)
    })
}

/// Restores a tree written by [`ks_tree_write_snapshot`].
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_tree_read_snapshot(path: *const c_char, out: *mut *mut KsTree) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return fail(KsStatus::NullPointer, "output pointer is null");
        }
        out.write(ptr::null_mut());
        let tree = TensorTree::read_snapshot(self::path(path)?)?;
        out.write(Box::into_raw(Box::new(KsTree { tree })));
        Ok(())
    })
}
