//! C ABI for gamecap.
//!
//! Objects are opaque handles created by the `gc_*_builtin`,
//! `gc_channel_build` and `gc_*_from_json` calls and released with the
//! matching `gc_*_free`. Every fallible call returns a
//! [`GcStatus`]; on failure [`gc_last_error_message`] describes the cause.
//! Strings returned by the library are freed with [`gc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gamecap::capacity::{cooperation_gap, gba_sum_capacity, GbaConfig, InitMode};
use gamecap::channels::{
    build_game_channel, closed_form_sum_capacity, validate_game_channel, Channel, ChannelMode,
    ChannelParams, DEFAULT_CHECK_TOL,
};
use gamecap::correlations::{
    classical_max_win, is_no_signaling, make_pr_box, winning_probability, CorrelationTable,
    DEFAULT_ENUMERATION_BUDGET,
};
use gamecap::games::{builtin, Game};
use gamecap::quantum::{born_table, make_ghz_parity, make_mermin_peres, make_tsirelson_chsh};
use gamecap::Error;

/// Result codes. `GC_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcStatus {
    GcOk = 0,
    GcNullPointer = 1,
    GcInvalidArgument = 2,
    GcDimensionMismatch = 3,
    GcOutOfRange = 4,
    GcMalformed = 5,
    GcInvariant = 6,
    GcNotGameChannel = 7,
    GcBudgetExceeded = 8,
    GcNumeric = 9,
    GcPrecondition = 10,
    GcJson = 11,
    GcIo = 12,
    GcInvalidUtf8 = 13,
    GcPanic = 99,
}

/// Built-in cooperation boxes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcBox {
    /// PR box for CHSH.
    GcBoxPr = 0,
    /// Optimal qubit strategy for CHSH.
    GcBoxTsirelson = 1,
    /// Two Bell pairs for the magic square.
    GcBoxMerminPeres = 2,
    /// GHZ strategy for the K-player parity game.
    GcBoxGhz = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GcChannelMode {
    GcPerReceiver = 0,
    GcGlobal = 1,
}

/// Options for the multi-start Blahut-Arimoto search.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcGbaOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub num_starts: usize,
    pub rng_seed: u64,
    /// When true, start every run from the uniform distribution.
    pub uniform_init: bool,
}

/// A non-local game.
pub struct GcGame(Game);
/// A conditional distribution of answers given questions.
pub struct GcTable(CorrelationTable);
/// A multi-terminal channel.
pub struct GcChannel(Channel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(GcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidArgument(_) => GcStatus::GcInvalidArgument,
            Error::DimensionMismatch(_) => GcStatus::GcDimensionMismatch,
            Error::OutOfRange(_) => GcStatus::GcOutOfRange,
            Error::Malformed(_) => GcStatus::GcMalformed,
            Error::Invariant(_) => GcStatus::GcInvariant,
            Error::GameChannel { .. } => GcStatus::GcNotGameChannel,
            Error::BudgetExceeded { .. } => GcStatus::GcBudgetExceeded,
            Error::Numeric(_) => GcStatus::GcNumeric,
            Error::Precondition(_) => GcStatus::GcPrecondition,
            Error::Json(_) => GcStatus::GcJson,
            Error::Io(_) => GcStatus::GcIo,
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GcStatus::GcOk
        }
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            GcStatus::GcPanic
        }
    }
}

fn null() -> Failure {
    Failure(GcStatus::GcNullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(null)
}

unsafe fn string<'a>(s: *const c_char) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null());
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(GcStatus::GcInvalidUtf8, "string is not UTF-8".into()))
}

fn give<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn give_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(GcStatus::GcInvalidUtf8, "interior NUL in output".into()))
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn gc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Built-in game by name (`chsh`, `magic-square`, `parity`, `N-parity`).
/// `k` is the parity game's player count; 0 selects the default.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_game_builtin(
    name: *const c_char,
    k: usize,
    out_game: *mut *mut GcGame,
) -> GcStatus {
    guard(|| {
        let dst = out(out_game)?;
        let g = builtin(string(name)?, (k != 0).then_some(k))?;
        *dst = give(GcGame(g));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_game_from_json(
    json: *const c_char,
    out_game: *mut *mut GcGame,
) -> GcStatus {
    guard(|| {
        let dst = out(out_game)?;
        *dst = give(GcGame(Game::from_json(string(json)?)?));
        Ok(())
    })
}

/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_game_to_json(game: *const GcGame, out_json: *mut *mut c_char) -> GcStatus {
    guard(|| {
        let dst = out(out_json)?;
        *dst = give_string(deref(game)?.0.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_game_num_parties(game: *const GcGame, out_k: *mut usize) -> GcStatus {
    guard(|| {
        *out(out_k)? = deref(game)?.0.num_parties();
        Ok(())
    })
}

/// # Safety
/// `game` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_game_free(game: *mut GcGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Best winning probability over deterministic strategies.
///
/// # Safety
/// `game` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_classical_max_win(game: *const GcGame, out_p: *mut f64) -> GcStatus {
    guard(|| {
        let dst = out(out_p)?;
        *dst = classical_max_win(&deref(game)?.0, DEFAULT_ENUMERATION_BUDGET)?.value;
        Ok(())
    })
}

/// Built-in cooperation box. `k` is the player count for `GcBoxGhz`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_table_builtin(
    kind: GcBox,
    k: usize,
    out_table: *mut *mut GcTable,
) -> GcStatus {
    guard(|| {
        let dst = out(out_table)?;
        let t = match kind {
            GcBox::GcBoxPr => make_pr_box(),
            GcBox::GcBoxTsirelson => born_table(&make_tsirelson_chsh())?,
            GcBox::GcBoxMerminPeres => born_table(&make_mermin_peres())?,
            GcBox::GcBoxGhz => born_table(&make_ghz_parity(k)?)?,
        };
        *dst = give(GcTable(t));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_table_from_json(
    json: *const c_char,
    out_table: *mut *mut GcTable,
) -> GcStatus {
    guard(|| {
        let dst = out(out_table)?;
        *dst = give(GcTable(CorrelationTable::from_json(string(json)?)?));
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_table_free(table: *mut GcTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_winning_probability(
    game: *const GcGame,
    table: *const GcTable,
    out_p: *mut f64,
) -> GcStatus {
    guard(|| {
        let dst = out(out_p)?;
        *dst = winning_probability(&deref(game)?.0, &deref(table)?.0)?;
        Ok(())
    })
}

/// Writes whether the table is no-signaling at `tol` and the largest
/// marginal deviation found.
///
/// # Safety
/// `table` must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_is_no_signaling(
    table: *const GcTable,
    tol: f64,
    out_ok: *mut bool,
    out_deviation: *mut f64,
) -> GcStatus {
    guard(|| {
        let (ok, dev) = (out(out_ok)?, out(out_deviation)?);
        let r = is_no_signaling(&deref(table)?.0, tol);
        *ok = r.no_signaling;
        *dev = r.max_deviation;
        Ok(())
    })
}

/// Game channel with winning reliability `eta_w` and losing reliability
/// `eta_l`; receiver alphabets equal the question alphabets.
///
/// # Safety
/// `game` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_build(
    game: *const GcGame,
    eta_w: f64,
    eta_l: f64,
    mode: GcChannelMode,
    out_channel: *mut *mut GcChannel,
) -> GcStatus {
    guard(|| {
        let dst = out(out_channel)?;
        let g = &deref(game)?.0;
        let mode = match mode {
            GcChannelMode::GcPerReceiver => ChannelMode::PerReceiver,
            GcChannelMode::GcGlobal => ChannelMode::Global,
        };
        let p = ChannelParams::new(eta_w, eta_l, mode)?;
        *dst = give(GcChannel(build_game_channel(g, &p, g.question_sizes())?));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_from_json(
    json: *const c_char,
    out_channel: *mut *mut GcChannel,
) -> GcStatus {
    guard(|| {
        let dst = out(out_channel)?;
        *dst = give(GcChannel(Channel::from_json(string(json)?)?));
        Ok(())
    })
}

/// # Safety
/// `channel` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_to_json(
    channel: *const GcChannel,
    out_json: *mut *mut c_char,
) -> GcStatus {
    guard(|| {
        let dst = out(out_json)?;
        *dst = give_string(deref(channel)?.0.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `channel` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gc_channel_free(channel: *mut GcChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Cooperative sum capacity in bits. Fails with `GcNotGameChannel` when the
/// channel is not a game channel for `game`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_closed_form_capacity(
    channel: *const GcChannel,
    game: *const GcGame,
    out_bits: *mut f64,
) -> GcStatus {
    guard(|| {
        let dst = out(out_bits)?;
        let report = validate_game_channel(&deref(channel)?.0, &deref(game)?.0, DEFAULT_CHECK_TOL)?;
        *dst = closed_form_sum_capacity(&report);
        Ok(())
    })
}

/// Library defaults: tolerance 1e-9, 20000 iterations, 50 random starts.
#[no_mangle]
pub extern "C" fn gc_gba_default_options() -> GcGbaOptions {
    let d = GbaConfig::default();
    GcGbaOptions {
        tolerance: d.tolerance,
        max_iterations: d.max_iterations,
        num_starts: d.num_starts,
        rng_seed: d.rng_seed,
        uniform_init: false,
    }
}

fn config(o: &GcGbaOptions) -> GbaConfig {
    GbaConfig {
        tolerance: o.tolerance,
        max_iterations: o.max_iterations,
        num_starts: o.num_starts,
        rng_seed: o.rng_seed,
        init: if o.uniform_init {
            InitMode::Uniform
        } else {
            InitMode::RandomDirichlet
        },
        record_history: false,
    }
}

/// Sum capacity over independent inputs, in bits.
///
/// # Safety
/// `channel` and `options` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_gba_sum_capacity(
    channel: *const GcChannel,
    options: *const GcGbaOptions,
    out_bits: *mut f64,
) -> GcStatus {
    guard(|| {
        let dst = out(out_bits)?;
        *dst = gba_sum_capacity(&deref(channel)?.0, &config(deref(options)?))?.value;
        Ok(())
    })
}

/// Closed-form cooperative capacity minus the independent-input capacity.
///
/// # Safety
/// Pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gc_cooperation_gap(
    channel: *const GcChannel,
    game: *const GcGame,
    options: *const GcGbaOptions,
    out_bits: *mut f64,
) -> GcStatus {
    guard(|| {
        let dst = out(out_bits)?;
        let cfg = config(deref(options)?);
        *dst = cooperation_gap(&deref(channel)?.0, &deref(game)?.0, &cfg)?.gap_bits;
        Ok(())
    })
}
