//! C interface to `actcause`.
//!
//! Models live behind the opaque [`AcScm`] handle. Contexts, options and
//! results cross the boundary as JSON strings; strings returned by this
//! library must be released with [`ac_string_free`]. Every call returns an
//! [`AcStatus`]; on failure [`ac_last_error`] describes the problem.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use actcause::benchmarks::Builtin;
use actcause::report::{self, Algorithm, Graph, IdentifyOptions, Model, RunReport};
use actcause::{Domain, Error, FnOracle, Intervention, Scm, SearchSpace, Value, VarId};
use serde::Deserialize;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Schema = 3,
    InvalidConfig = 4,
    Budget = 5,
    TargetNotActual = 6,
    Oracle = 7,
    Model = 8,
    Panic = 9,
}

/// Opaque model handle.
pub struct AcScm {
    model: Model,
    name: String,
}

/// User oracle: receives the intervention as parallel arrays of variable
/// positions and value positions (indices into the declared domains) and
/// returns 1 when the target still holds, 0 when it does not and a negative
/// number on failure.
pub type AcOracleFn = Option<
    unsafe extern "C" fn(
        user: *mut c_void,
        vars: *const u32,
        values: *const u32,
        len: usize,
    ) -> i32,
>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AcStatus {
    match e {
        e if e.is_budget() => AcStatus::Budget,
        Error::Schema(_) | Error::Json(_) => AcStatus::Schema,
        Error::InvalidConfig(_) | Error::IncompatibleHeuristic(_) => AcStatus::InvalidConfig,
        Error::TargetNotActual => AcStatus::TargetNotActual,
        Error::Oracle { .. } => AcStatus::Oracle,
        _ => AcStatus::Model,
    }
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(Error::Schema(e.to_string()))
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AcStatus::Ok
        }
        Ok(Err(Failure::Null(arg))) => {
            set_error(&format!("`{arg}` is null"));
            AcStatus::NullArgument
        }
        Ok(Err(Failure::Utf8(arg))) => {
            set_error(&format!("`{arg}` is not valid UTF-8"));
            AcStatus::InvalidUtf8
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            AcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, arg: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(arg));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(arg))
}

unsafe fn opt_text<'a>(p: *const c_char, arg: &'static str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, arg).map(Some)
    }
}

unsafe fn give(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = CString::new(s)
        .map_err(|e| Error::Schema(e.to_string()))?
        .into_raw();
    Ok(())
}

unsafe fn handle<'a>(scm: *const AcScm) -> Result<&'a AcScm, Failure> {
    scm.as_ref().ok_or(Failure::Null("scm"))
}

fn options(json: Option<&str>) -> Result<IdentifyOptions, Failure> {
    Ok(match json {
        Some(j) => serde_json::from_str(j)?,
        None => IdentifyOptions::default(),
    })
}

/// Message of the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ac_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a model from its JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ac_scm_from_json(json: *const c_char, out: *mut *mut AcScm) -> AcStatus {
    guard(|| {
        let scm = Scm::from_json(text(json, "json")?)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = Box::into_raw(Box::new(AcScm {
            model: Model::Explicit(scm),
            name: "json".into(),
        }));
        Ok(())
    })
}

/// Builds a builtin model: `rock-throwing`, `smk:K`, `smk-nonboolean:K`,
/// `smk-blackbox:K` or `smk-noisy:K[:RATE]`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ac_scm_builtin(name: *const c_char, out: *mut *mut AcScm) -> AcStatus {
    guard(|| {
        let b: Builtin = text(name, "name")?.parse()?;
        let model = Model::from_builtin(b)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = Box::into_raw(Box::new(AcScm {
            model,
            name: b.to_string(),
        }));
        Ok(())
    })
}

/// Serializes the model (for the black-box and noisy builtins, the
/// underlying Boolean model).
///
/// # Safety
/// `scm` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ac_scm_to_json(scm: *const AcScm, out: *mut *mut c_char) -> AcStatus {
    guard(|| give(out, handle(scm)?.model.scm().to_json()))
}

/// # Safety
/// `scm` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn ac_scm_free(scm: *mut AcScm) {
    if !scm.is_null() {
        drop(Box::from_raw(scm));
    }
}

unsafe fn identify_impl(
    scm: *const AcScm,
    context: *const c_char,
    opts: *const c_char,
    force_isi: bool,
    out: *mut *mut c_char,
) -> AcStatus {
    guard(|| {
        let h = handle(scm)?;
        let ctx = report::parse_context(h.model.scm(), text(context, "context")?)?;
        let mut opts = options(opt_text(opts, "options")?)?;
        if force_isi {
            opts.algorithm = Algorithm::Isi;
        }
        let (mut rep, _) = report::run_identify(&h.model, &h.name, &ctx, &opts)?;
        rep.runtime_s = None;
        give(out, serde_json::to_string(&rep)?)
    })
}

/// Identifies causes in `context` (JSON object or array of exogenous
/// values). `options` is an options JSON object or null for defaults. The
/// report JSON is written to `out`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ac_identify(
    scm: *const AcScm,
    context: *const c_char,
    options: *const c_char,
    out: *mut *mut c_char,
) -> AcStatus {
    identify_impl(scm, context, options, false, out)
}

/// Like [`ac_identify`] with the sub-instance algorithm.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ac_identify_isi(
    scm: *const AcScm,
    context: *const c_char,
    options: *const c_char,
    out: *mut *mut c_char,
) -> AcStatus {
    identify_impl(scm, context, options, true, out)
}

/// Enumerates every cause with at most `max_size` intervened variables.
/// A `budget` of 0 selects the default.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ac_exact(
    scm: *const AcScm,
    context: *const c_char,
    max_size: usize,
    budget: u64,
    out: *mut *mut c_char,
) -> AcStatus {
    guard(|| {
        let h = handle(scm)?;
        let ctx = report::parse_context(h.model.scm(), text(context, "context")?)?;
        let budget = if budget == 0 {
            actcause::exact::DEFAULT_EXACT_BUDGET
        } else {
            budget as u128
        };
        let (rep, _) = report::run_exact(&h.model, &h.name, &ctx, max_size, budget)?;
        give(out, serde_json::to_string(&rep)?)
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDecl {
    name: String,
    domain: Domain,
    actual: Value,
}

/// Search space handed in with a user oracle. `parents` and `roots` are
/// only needed for the sub-instance algorithm.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceDecl {
    variables: Vec<VariableDecl>,
    #[serde(default)]
    parents: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    roots: Vec<String>,
}

type ParentsAndRoots = (Vec<Vec<VarId>>, Vec<VarId>);

fn build_space(decl: &SpaceDecl) -> Result<(SearchSpace, Option<ParentsAndRoots>), Error> {
    let names: Vec<String> = decl.variables.iter().map(|v| v.name.clone()).collect();
    let domains: Vec<Domain> = decl.variables.iter().map(|v| v.domain.clone()).collect();
    let v_star = decl
        .variables
        .iter()
        .map(|v| {
            v.domain
                .index_of(v.actual)
                .ok_or_else(|| Error::ValueOutsideDomain {
                    variable: v.name.clone(),
                    value: v.actual.to_string(),
                })
        })
        .collect::<Result<Vec<u32>, Error>>()?;
    let n = names.len();
    let space = SearchSpace::new(names, domains, v_star, (0..n as u32).map(VarId).collect())?;
    if decl.roots.is_empty() {
        return Ok((space, None));
    }
    let mut parents = vec![Vec::new(); n];
    for (child, ps) in &decl.parents {
        parents[space.var(child)?.index()] =
            ps.iter().map(|p| space.var(p)).collect::<Result<_, _>>()?;
    }
    let roots = decl
        .roots
        .iter()
        .map(|r| space.var(r))
        .collect::<Result<_, _>>()?;
    Ok((space, Some((parents, roots))))
}

/// Identifies causes with a user oracle over the variables declared in
/// `space` (JSON: `{"variables": [{"name", "domain", "actual"}], "parents":
/// {name: [names]}, "roots": [names]}`). The callback is invoked
/// sequentially on the calling thread.
///
/// # Safety
/// Pointers must be valid; `oracle` must be safe to call with `user`.
#[no_mangle]
pub unsafe extern "C" fn ac_identify_oracle(
    space: *const c_char,
    oracle: AcOracleFn,
    user: *mut c_void,
    options: *const c_char,
    out: *mut *mut c_char,
) -> AcStatus {
    guard(|| {
        let f = oracle.ok_or(Failure::Null("oracle"))?;
        let decl: SpaceDecl = serde_json::from_str(text(space, "space")?)?;
        let opts = self::options(opt_text(options, "options")?)?;
        let (space, graph) = build_space(&decl)?;
        let names = space.names.clone();
        let call = |e: &Intervention| -> Result<bool, Error> {
            let vars: Vec<u32> = e.pairs().iter().map(|p| p.0 .0).collect();
            let values: Vec<u32> = e.pairs().iter().map(|p| p.1).collect();
            let r = f(user, vars.as_ptr(), values.as_ptr(), vars.len());
            match r {
                0 => Ok(false),
                1 => Ok(true),
                code => Err(Error::Oracle {
                    intervention: e
                        .pairs()
                        .iter()
                        .map(|&(v, x)| {
                            format!("{}={}", names[v.index()], space.domains[v.index()].value(x))
                        })
                        .collect::<Vec<_>>()
                        .join(", "),
                    message: format!("callback returned {code}"),
                }),
            }
        };
        let oracle = FnOracle::new(call, space.v_star.clone());
        let g = graph.as_ref().map(|(p, r)| Graph {
            parents: p,
            roots: r,
        });
        let (causes, stats) = report::identify_with(&space, &oracle, g, &opts)?;
        let rep = RunReport {
            model: "callback".into(),
            options: opts,
            context: Vec::new(),
            causes: report::cause_records(&space, &causes),
            stats,
            runtime_s: None,
        };
        give(out, serde_json::to_string(&rep)?)
    })
}
