//! C ABI over `privcc`.
//!
//! Objects are opaque handles created by `privcc_*_new`/`_load`/`_derive`
//! and released with the matching `_free`. Every fallible call returns a
//! [`PrivccStatus`]; on failure the message is available from
//! [`privcc_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use privcc::cost::cost;
use privcc::dp::run;
use privcc::refcc::{alg_cc, alg_cc_prime, AgreementVectors};
use privcc::{Clustering, DeriveInput, Error, PrivacyParams, SignedGraph};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PrivccStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    InvalidArgument = 3,
    TooLarge = 4,
    Io = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// A signed graph given by its `+` edges.
pub struct PrivccGraph(SignedGraph);

/// Derived privacy parameters.
pub struct PrivccParams(PrivacyParams);

/// A clustering with per-vertex light-singleton flags.
pub struct PrivccClustering(Clustering);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> PrivccStatus {
    match e {
        Error::Parse { .. } => PrivccStatus::Parse,
        Error::Size(_) => PrivccStatus::TooLarge,
        Error::Io(_) => PrivccStatus::Io,
        _ => PrivccStatus::InvalidArgument,
    }
}

fn fail(status: PrivccStatus, msg: impl Into<String>) -> PrivccStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), PrivccStatus>) -> PrivccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PrivccStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(PrivccStatus::Internal, "internal panic"),
    }
}

fn check<T>(r: privcc::Result<T>) -> Result<T, PrivccStatus> {
    r.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, PrivccStatus> {
    p.as_ref()
        .ok_or_else(|| fail(PrivccStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PrivccStatus> {
    p.as_mut()
        .ok_or_else(|| fail(PrivccStatus::NullPointer, format!("{what} is null")))
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn privcc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn privcc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` vertices from `m` edges `(us[i], vs[i])`.
///
/// # Safety
/// `us` and `vs` must each point to `m` readable values (may be null when
/// `m == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_graph_new(
    n: usize,
    us: *const u32,
    vs: *const u32,
    m: usize,
    out: *mut *mut PrivccGraph,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (us, vs) = if m == 0 {
            (&[][..], &[][..])
        } else {
            (
                slice::from_raw_parts(deref(us, "us")?, m),
                slice::from_raw_parts(deref(vs, "vs")?, m),
            )
        };
        let edges = us.iter().zip(vs).map(|(&u, &v)| (u as usize, v as usize));
        let g = check(SignedGraph::from_edges(n, edges))?;
        *out = Box::into_raw(Box::new(PrivccGraph(g)));
        Ok(())
    })
}

/// Loads an edge-list file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_graph_load(
    path: *const c_char,
    out: *mut *mut PrivccGraph,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = CStr::from_ptr(deref(path, "path")?)
            .to_str()
            .map_err(|_| fail(PrivccStatus::InvalidArgument, "path is not UTF-8"))?;
        let file = check(File::open(path).map_err(Error::from))?;
        let g = check(SignedGraph::load_edge_list(BufReader::new(file)))?;
        *out = Box::into_raw(Box::new(PrivccGraph(g)));
        Ok(())
    })
}

/// # Safety
/// `g` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn privcc_graph_free(g: *mut PrivccGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_graph_num_vertices(g: *const PrivccGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// # Safety
/// `g` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_graph_num_edges(g: *const PrivccGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Derives parameters for `(epsilon, delta)` with agreement and lightness
/// thresholds `beta` and `lambda`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_derive(
    epsilon: f64,
    delta: f64,
    beta: f64,
    lambda: f64,
    out: *mut *mut PrivccParams,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let input = DeriveInput::new(epsilon, delta).beta(beta).lambda(lambda);
        let p = check(PrivacyParams::derive(&input))?;
        *out = Box::into_raw(Box::new(PrivccParams(p)));
        Ok(())
    })
}

/// Sets the noise multiplier. Any value other than 1 makes runs non-private.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_set_noise_multiplier(
    p: *mut PrivccParams,
    s: f64,
) -> PrivccStatus {
    guard(|| {
        let p = out_ptr(p, "params")?;
        if !(s.is_finite() && s >= 0.0) {
            return Err(fail(
                PrivccStatus::InvalidArgument,
                format!("noise multiplier must be >= 0, got {s}"),
            ));
        }
        p.0 = p.0.clone().with_noise_multiplier(s);
        Ok(())
    })
}

/// Overrides T0; a negative value restores the derived one. Overrides make
/// runs non-private.
///
/// # Safety
/// `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_set_t0_override(
    p: *mut PrivccParams,
    t0: f64,
) -> PrivccStatus {
    guard(|| {
        let p = out_ptr(p, "params")?;
        if t0.is_nan() {
            return Err(fail(PrivccStatus::InvalidArgument, "T0 override is NaN"));
        }
        p.0 = p.0.clone().with_t0_override((t0 >= 0.0).then_some(t0));
        Ok(())
    })
}

/// Effective degree threshold T0, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_t0(p: *const PrivccParams) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.t0())
}

/// 1 when the parameters no longer carry the privacy guarantee.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_non_private(p: *const PrivccParams) -> bool {
    p.as_ref().is_some_and(|p| p.0.non_private())
}

/// # Safety
/// `p` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn privcc_params_free(p: *mut PrivccParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Runs the private pipeline.
///
/// # Safety
/// `g` and `p` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_cluster(
    g: *const PrivccGraph,
    p: *const PrivccParams,
    seed: u64,
    out: *mut *mut PrivccClustering,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = deref(g, "graph")?;
        let p = deref(p, "params")?;
        let (c, _) = run(&g.0, &p.0, seed);
        *out = Box::into_raw(Box::new(PrivccClustering(c)));
        Ok(())
    })
}

/// Runs the non-private reference procedure with constant thresholds.
/// With `light_singletons == false` light vertices stay in their component.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_refcc(
    g: *const PrivccGraph,
    beta: f64,
    lambda: f64,
    light_singletons: bool,
    out: *mut *mut PrivccClustering,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let g = deref(g, "graph")?;
        let vectors = AgreementVectors::constant(g.0.n(), beta, lambda);
        let c = if light_singletons {
            check(alg_cc(&g.0, &vectors))?
        } else {
            check(alg_cc_prime(&g.0, &vectors))?
        };
        *out = Box::into_raw(Box::new(PrivccClustering(c)));
        Ok(())
    })
}

/// Builds a clustering from `n` labels.
///
/// # Safety
/// `labels` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_from_labels(
    labels: *const u64,
    n: usize,
    out: *mut *mut PrivccClustering,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let labels: Vec<usize> = if n == 0 {
            Vec::new()
        } else {
            slice::from_raw_parts(deref(labels, "labels")?, n)
                .iter()
                .map(|&l| l as usize)
                .collect()
        };
        *out = Box::into_raw(Box::new(PrivccClustering(Clustering::from_labels(&labels))));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_len(c: *const PrivccClustering) -> usize {
    c.as_ref().map_or(0, |c| c.0.n())
}

/// # Safety
/// `c` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_num_clusters(c: *const PrivccClustering) -> usize {
    c.as_ref().map_or(0, |c| c.0.num_clusters())
}

/// Copies cluster labels into `buf`, which must hold at least
/// `privcc_clustering_len` entries.
///
/// # Safety
/// `c` must be a live handle; `buf` must point to `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_labels(
    c: *const PrivccClustering,
    buf: *mut u64,
    cap: usize,
) -> PrivccStatus {
    guard(|| {
        let c = deref(c, "clustering")?;
        let labels = c.0.assignment();
        if cap < labels.len() {
            return Err(fail(
                PrivccStatus::BufferTooSmall,
                format!("need {} entries, got {cap}", labels.len()),
            ));
        }
        let buf = out_ptr(buf, "buf").map(|b| slice::from_raw_parts_mut(b, labels.len()))?;
        for (dst, &l) in buf.iter_mut().zip(labels) {
            *dst = l as u64;
        }
        Ok(())
    })
}

/// Copies light-singleton flags (0 or 1) into `buf`.
///
/// # Safety
/// `c` must be a live handle; `buf` must point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_light(
    c: *const PrivccClustering,
    buf: *mut u8,
    cap: usize,
) -> PrivccStatus {
    guard(|| {
        let c = deref(c, "clustering")?;
        let flags = c.0.singleton_light();
        if cap < flags.len() {
            return Err(fail(
                PrivccStatus::BufferTooSmall,
                format!("need {} entries, got {cap}", flags.len()),
            ));
        }
        let buf = out_ptr(buf, "buf").map(|b| slice::from_raw_parts_mut(b, flags.len()))?;
        for (dst, &f) in buf.iter_mut().zip(flags) {
            *dst = u8::from(f);
        }
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn privcc_clustering_free(c: *mut PrivccClustering) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Disagreement cost of `c` on `g`.
///
/// # Safety
/// `g` and `c` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn privcc_cost(
    g: *const PrivccGraph,
    c: *const PrivccClustering,
    out: *mut u64,
) -> PrivccStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let report = check(cost(&deref(g, "graph")?.0, &deref(c, "clustering")?.0))?;
        *out = report.total;
        Ok(())
    })
}
