//! C ABI over the pagezones core.
//!
//! Every fallible call returns a [`PzStatus`]; on failure the message is
//! available from [`pz_last_error`] on the same thread. Strings handed out by
//! the library must be released with [`pz_string_free`]; handles with their
//! own `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pagezones::align::{score_page_pair, AlignmentParams};
use pagezones::annotate::PageAnnotation;
use pagezones::metrics::{pearson, pixel_metrics, tally_page, ConfusionTally};
use pagezones::ocr::{normalize_text, NormalizationConfig};
use pagezones::region::NUM_LABELS;
use pagezones::tei::{parse_edition, SelectorRuleSet};
use pagezones::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PzStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ConfigError = 4,
    InvalidInput = 5,
    Undefined = 6,
    SegmentTooLong = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque region selector rule set.
pub struct PzRuleSet(SelectorRuleSet);

/// Opaque pixel confusion tally.
pub struct PzTally(ConfusionTally);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PzPixelMetrics {
    pub p_acc: f64,
    pub m_acc: f64,
    pub m_iu: f64,
    pub f_iu: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PzStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Xml { .. } | Error::Json { .. } | Error::Pattern { .. } => PzStatus::ParseError,
            Error::Config(_) => PzStatus::ConfigError,
            Error::Io { .. } => PzStatus::Io,
            Error::SegmentTooLong { .. } => PzStatus::SegmentTooLong,
            Error::Undefined(_) => PzStatus::Undefined,
            _ => PzStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PzStatus::NullArgument, format!("{what} is null"))
}

/// Run `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PzStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PzStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PzStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn out_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(PzStatus::InvalidInput, "output contains a NUL byte".into()))
}

/// Message of the last failed call on this thread, or null. Owned by the
/// library; valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn pz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Bundled rule set by name (`dta`, `tcp`, `wwo`).
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_rules_builtin(name: *const c_char, out: *mut *mut PzRuleSet) -> PzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rules = SelectorRuleSet::builtin(str_arg(name, "name")?)?;
        *out = Box::into_raw(Box::new(PzRuleSet(rules)));
        Ok(())
    })
}

/// Rule set from TOML source.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_rules_from_toml(toml: *const c_char, out: *mut *mut PzRuleSet) -> PzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let rules = SelectorRuleSet::from_toml_str(str_arg(toml, "toml")?)?;
        *out = Box::into_raw(Box::new(PzRuleSet(rules)));
        Ok(())
    })
}

/// # Safety
/// `rules` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pz_rules_free(rules: *mut PzRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Page records of one TEI edition as ndjson, written to `*out`.
///
/// # Safety
/// `xml` must point to `len` readable bytes; string arguments must be
/// NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_extract_ndjson(
    rules: *const PzRuleSet,
    xml: *const u8,
    len: usize,
    edition_id: *const c_char,
    out: *mut *mut c_char,
) -> PzStatus {
    guard(|| {
        if rules.is_null() || xml.is_null() || out.is_null() {
            return Err(null("rules, xml or out"));
        }
        let bytes = std::slice::from_raw_parts(xml, len);
        let ed = parse_edition(bytes, &(*rules).0, str_arg(edition_id, "edition_id")?)?;
        let mut s = String::new();
        for p in &ed.pages {
            s.push_str(&serde_json::to_string(p).map_err(|e| Failure(PzStatus::InvalidInput, e.to_string()))?);
            s.push('\n');
        }
        *out = out_string(s)?;
        Ok(())
    })
}

/// Text normalized with the default character map.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_normalize_text(text: *const c_char, out: *mut *mut c_char) -> PzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = out_string(normalize_text(str_arg(text, "text")?, &NormalizationConfig::default()))?;
        Ok(())
    })
}

/// Share of aligned matching characters relative to the longer text, with
/// default alignment parameters.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_score_page_pair(a: *const c_char, b: *const c_char, out: *mut f64) -> PzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = score_page_pair(str_arg(a, "a")?, str_arg(b, "b")?, &AlignmentParams::default())?;
        Ok(())
    })
}

/// Empty confusion tally over all region classes plus background.
#[no_mangle]
pub extern "C" fn pz_tally_new() -> *mut PzTally {
    Box::into_raw(Box::new(PzTally(ConfusionTally::new(NUM_LABELS))))
}

/// Add one reference/prediction page pair, both as annotation JSON.
///
/// # Safety
/// `tally` must be a live handle; JSON arguments must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn pz_tally_add_page(
    tally: *mut PzTally,
    reference_json: *const c_char,
    predicted_json: *const c_char,
    scale: u32,
) -> PzStatus {
    guard(|| {
        if tally.is_null() {
            return Err(null("tally"));
        }
        let r = PageAnnotation::from_json(str_arg(reference_json, "reference_json")?)?;
        let p = PageAnnotation::from_json(str_arg(predicted_json, "predicted_json")?)?;
        let t = tally_page(&r, &p, scale)?;
        let acc = &mut (*tally).0;
        *acc = std::mem::replace(acc, ConfusionTally::new(NUM_LABELS)).merge(&t);
        Ok(())
    })
}

/// Add the counts of `from` into `into`.
///
/// # Safety
/// Both must be live handles.
#[no_mangle]
pub unsafe extern "C" fn pz_tally_merge(into: *mut PzTally, from: *const PzTally) -> PzStatus {
    guard(|| {
        if into.is_null() || from.is_null() {
            return Err(null("into or from"));
        }
        let acc = &mut (*into).0;
        *acc = std::mem::replace(acc, ConfusionTally::new(NUM_LABELS)).merge(&(*from).0);
        Ok(())
    })
}

/// # Safety
/// `tally` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_tally_metrics(
    tally: *const PzTally,
    exclude_background: bool,
    out: *mut PzPixelMetrics,
) -> PzStatus {
    guard(|| {
        if tally.is_null() || out.is_null() {
            return Err(null("tally or out"));
        }
        let m = pixel_metrics(&(*tally).0, exclude_background)?;
        *out = PzPixelMetrics {
            p_acc: m.p_acc,
            m_acc: m.m_acc,
            m_iu: m.m_iu,
            f_iu: m.f_iu,
        };
        Ok(())
    })
}

/// # Safety
/// `tally` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pz_tally_free(tally: *mut PzTally) {
    if !tally.is_null() {
        drop(Box::from_raw(tally));
    }
}

/// Pearson correlation of `n` pairs with its two-sided p-value.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `r` and `p_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pz_pearson(
    x: *const f64,
    y: *const f64,
    n: usize,
    r: *mut f64,
    p_value: *mut f64,
) -> PzStatus {
    guard(|| {
        if x.is_null() || y.is_null() || r.is_null() || p_value.is_null() {
            return Err(null("x, y, r or p_value"));
        }
        let c = pearson(std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n))?;
        *r = c.r;
        *p_value = c.p_value;
        Ok(())
    })
}
