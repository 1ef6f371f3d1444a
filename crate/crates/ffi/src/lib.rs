//! C ABI over the simulator.
//!
//! Every function returns a [`RaseStatus`]; on failure a description is kept
//! per thread and can be read with [`rase_last_error_message`]. Objects are
//! opaque handles released with their `_free` function, and strings returned
//! through `char **` outputs must be released with [`rase_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rase_sim::engine::{decode_sfc_header, encode_sfc_header, SfcHeader};
use rase_sim::experiment::{run_experiment, Experiment, ExperimentConfig, ExperimentReport, RunOptions};
use rase_sim::routing::{shortest_path, RoutingError};
use rase_sim::topology::{NetworkSpec, SubstrateNetwork, TopologyError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaseStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidInput = 4,
    UnknownId = 5,
    InsufficientCapacity = 6,
    NoPath = 7,
    ExperimentFailed = 8,
    Panic = 9,
}

/// Substrate network with mutable residual capacities.
pub struct RaseNetwork(SubstrateNetwork);

/// Result of a completed experiment.
pub struct RaseReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

struct Failure(RaseStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: RaseStatus, message: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, message.into()))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> RaseStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            RaseStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RaseStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(RaseStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(RaseStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or(Failure(RaseStatus::NullArgument, format!("{what} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or(Failure(RaseStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(RaseStatus::NullArgument, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .or_else(|_| fail(RaseStatus::InvalidInput, "string contains an interior NUL"))
}

fn topology_failure(e: TopologyError) -> Failure {
    let status = match e {
        TopologyError::UnknownNode(_) | TopologyError::UnknownHost(_) | TopologyError::UnknownLink(_) => {
            RaseStatus::UnknownId
        }
        TopologyError::InsufficientCpu { .. }
        | TopologyError::InsufficientMemory { .. }
        | TopologyError::InsufficientBandwidth { .. } => RaseStatus::InsufficientCapacity,
        _ => RaseStatus::InvalidInput,
    };
    Failure(status, e.to_string())
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rase_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string produced by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn rase_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a network from its JSON description.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rase_network_from_json(json: *const c_char, out: *mut *mut RaseNetwork) -> RaseStatus {
    guard(|| {
        let json = text(json, "json")?;
        let spec: NetworkSpec =
            serde_json::from_str(json).map_err(|e| Failure(RaseStatus::ParseError, e.to_string()))?;
        let net = SubstrateNetwork::new(&spec).map_err(topology_failure)?;
        put(out, Box::into_raw(Box::new(RaseNetwork(net))))
    })
}

/// Releases a network. Null is ignored.
///
/// # Safety
/// `net` must come from [`rase_network_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rase_network_free(net: *mut RaseNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Reserves `demand` cores on `host`. Nothing changes on failure.
///
/// # Safety
/// `net` must be a live handle and `host` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rase_network_allocate_cpu(
    net: *mut RaseNetwork,
    host: *const c_char,
    demand: f64,
) -> RaseStatus {
    guard(|| {
        let net = handle_mut(net, "net")?;
        net.0.allocate_cpu(text(host, "host")?, demand).map_err(topology_failure)
    })
}

/// Returns `amount` cores to `host`.
///
/// # Safety
/// `net` must be a live handle and `host` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rase_network_release_cpu(
    net: *mut RaseNetwork,
    host: *const c_char,
    amount: f64,
) -> RaseStatus {
    guard(|| {
        let net = handle_mut(net, "net")?;
        net.0.release_cpu(text(host, "host")?, amount).map_err(topology_failure)
    })
}

/// Writes the unreserved cores of `host` to `out`.
///
/// # Safety
/// `net` must be a live handle, `host` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_network_residual_cpu(
    net: *const RaseNetwork,
    host: *const c_char,
    out: *mut f64,
) -> RaseStatus {
    guard(|| {
        let net = handle(net, "net")?;
        let id = text(host, "host")?;
        let h = net.0.host(id).ok_or(Failure(RaseStatus::UnknownId, format!("unknown host {id:?}")))?;
        put(out, net.0.residual_cpu(h))
    })
}

/// Writes the unreserved bandwidth (Mbps) of `link` to `out`.
///
/// # Safety
/// `net` must be a live handle, `link` a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_network_residual_bandwidth(
    net: *const RaseNetwork,
    link: *const c_char,
    out: *mut f64,
) -> RaseStatus {
    guard(|| {
        let net = handle(net, "net")?;
        let id = text(link, "link")?;
        let l = net.0.link(id).ok_or(Failure(RaseStatus::UnknownId, format!("unknown link {id:?}")))?;
        put(out, net.0.residual_bandwidth(l))
    })
}

/// Writes the propagation delay (ms) of the least-delay path from `src` to
/// `dst` using only links with at least `min_bandwidth` Mbps left.
///
/// # Safety
/// `net` must be a live handle, `src`/`dst` NUL-terminated strings and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_shortest_path_cost(
    net: *const RaseNetwork,
    src: *const c_char,
    dst: *const c_char,
    min_bandwidth: f64,
    out: *mut f64,
) -> RaseStatus {
    guard(|| {
        let net = handle(net, "net")?;
        let path = shortest_path(&net.0, text(src, "src")?, text(dst, "dst")?, min_bandwidth).map_err(|e| {
            let status = match e {
                RoutingError::NoPath { .. } => RaseStatus::NoPath,
                RoutingError::UnknownNode(_) => RaseStatus::UnknownId,
            };
            Failure(status, e.to_string())
        })?;
        put(out, path.total_propagation)
    })
}

/// Encodes an SFC header from an id and `len` VNF names.
///
/// # Safety
/// `sfc_id` and each of the `len` entries of `chain` must be NUL-terminated
/// strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rase_header_encode(
    sfc_id: *const c_char,
    chain: *const *const c_char,
    len: usize,
    out: *mut *mut c_char,
) -> RaseStatus {
    guard(|| {
        let id = text(sfc_id, "sfc_id")?;
        if chain.is_null() && len > 0 {
            return fail(RaseStatus::NullArgument, "chain is null");
        }
        let names =
            (0..len).map(|i| text(*chain.add(i), "chain entry").map(str::to_string)).collect::<FfiResult<Vec<_>>>()?;
        let header = SfcHeader { sfc_id: id.to_string(), chain: names };
        let encoded = encode_sfc_header(&header).map_err(|e| Failure(RaseStatus::InvalidInput, e.to_string()))?;
        put(out, owned_string(encoded)?)
    })
}

/// Decodes an SFC header into its id and its VNF names joined by commas.
///
/// # Safety
/// `header` must be a NUL-terminated string; `out_sfc_id` and `out_chain`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn rase_header_decode(
    header: *const c_char,
    out_sfc_id: *mut *mut c_char,
    out_chain: *mut *mut c_char,
) -> RaseStatus {
    guard(|| {
        if out_sfc_id.is_null() || out_chain.is_null() {
            return fail(RaseStatus::NullArgument, "output pointer is null");
        }
        let h =
            decode_sfc_header(text(header, "header")?).map_err(|e| Failure(RaseStatus::ParseError, e.to_string()))?;
        let id = owned_string(h.sfc_id)?;
        let chain = match owned_string(h.chain.join(",")) {
            Ok(c) => c,
            Err(e) => {
                rase_string_free(id);
                return Err(e);
            }
        };
        put(out_sfc_id, id)?;
        put(out_chain, chain)
    })
}

/// Runs an experiment described by `config_json`. Relative file references
/// resolve against `base_dir`, or the working directory when it is null.
/// No report files are written.
///
/// # Safety
/// `config_json` must be a NUL-terminated string, `base_dir` null or
/// NUL-terminated, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_experiment_run(
    config_json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut RaseReport,
) -> RaseStatus {
    guard(|| {
        let json = text(config_json, "config_json")?;
        let base = if base_dir.is_null() { "." } else { text(base_dir, "base_dir")? };
        let config: ExperimentConfig =
            serde_json::from_str(json).map_err(|e| Failure(RaseStatus::ParseError, e.to_string()))?;
        let exp = Experiment::from_config(config, Path::new(base))
            .map_err(|e| Failure(RaseStatus::InvalidInput, e.to_string()))?;
        let report = run_experiment(&exp, &RunOptions::default())
            .map_err(|e| Failure(RaseStatus::ExperimentFailed, e.to_string()))?;
        put(out, Box::into_raw(Box::new(RaseReport(report))))
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `report` must come from [`rase_experiment_run`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rase_report_free(report: *mut RaseReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Writes the fraction of accepted requests to `out`.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_report_acceptance_ratio(report: *const RaseReport, out: *mut f64) -> RaseStatus {
    guard(|| put(out, handle(report, "report")?.0.acceptance_ratio))
}

/// Writes the mean latency (ms) over accepted chains to `out`, or NaN when
/// nothing was accepted.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_report_mean_latency(report: *const RaseReport, out: *mut f64) -> RaseStatus {
    guard(|| put(out, handle(report, "report")?.0.mean_latency_ms.unwrap_or(f64::NAN)))
}

/// Serializes the report as JSON.
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rase_report_to_json(report: *const RaseReport, out: *mut *mut c_char) -> RaseStatus {
    guard(|| {
        let json = handle(report, "report")?.0.to_json();
        put(out, owned_string(json)?)
    })
}
