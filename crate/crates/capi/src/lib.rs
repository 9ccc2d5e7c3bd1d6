//! C ABI over the game engine and the t-test statistics.
//!
//! Conventions: every function is `sdna_`-prefixed; fallible calls return
//! [`SdnaStatus`] and leave a message for [`sdna_last_error`]; objects cross
//! the boundary as opaque pointers owned by the caller and released with the
//! matching `_free` function. Passing a pointer obtained from anywhere else,
//! or using one after freeing it, is undefined behavior.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use sdn_arena::game::{action_count, GameSession, Role};
use sdn_arena::stats;
use sdn_arena::topology::{self, TopologyConfig};

/// Result code of a fallible call. Anything but `Ok` leaves a message
/// readable through `sdna_last_error` on the calling thread.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SdnaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument was out of range for the call.
    InvalidArgument = 2,
    /// A config file or TOML string failed to parse or validate.
    ParseError = 3,
    /// The move was rejected by the game rules.
    RuleViolation = 4,
    /// The statistics routine rejected its inputs.
    StatsError = 5,
    /// A caller-supplied buffer is too small.
    BufferTooSmall = 6,
}

/// Side identifier shared with the C world.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SdnaRole {
    Attacker = 0,
    Defender = 1,
}

/// What one applied action returned.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SdnaTurnOutcome {
    /// Reward of the acting side.
    pub reward: i32,
    /// Non-zero once the game is decided.
    pub done: bool,
    /// Winning side when `done`, otherwise -1.
    pub winner: i32,
    pub defender_turns: u64,
    pub defender_score: i64,
    pub attacker_score: i64,
}

/// Flat mirror of the library's t-test report. `pearson` is NaN when the
/// correlation is undefined or not part of the chosen test.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SdnaTTestReport {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub pearson: f64,
    pub df: f64,
    pub t_stat: f64,
    pub p_one_tail: f64,
    pub t_crit_one_tail: f64,
    pub p_two_tail: f64,
    pub t_crit_two_tail: f64,
    pub alpha: f64,
}

/// Opaque topology config handle.
pub struct SdnaConfig {
    inner: Arc<TopologyConfig>,
}

/// Opaque game session handle.
pub struct SdnaGame {
    inner: GameSession,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: SdnaStatus, message: impl std::fmt::Display) -> SdnaStatus {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(text).unwrap_or_default();
    });
    status
}

fn null_arg(name: &str) -> SdnaStatus {
    fail(SdnaStatus::NullArgument, format!("{name} must not be null"))
}

/// Message of the most recent failure on this thread, empty string if none.
/// The pointer stays valid until the next failing `sdna_` call on the same
/// thread.
#[no_mangle]
pub extern "C" fn sdna_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sdna_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Build the bundled default network config.
///
/// # Safety
/// `out` must point to writable `SdnaConfig *` storage.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_default(out: *mut *mut SdnaConfig) -> SdnaStatus {
    if out.is_null() {
        return null_arg("out");
    }
    let cfg = SdnaConfig {
        inner: Arc::new(TopologyConfig::default_config()),
    };
    unsafe { out.write(Box::into_raw(Box::new(cfg))) };
    SdnaStatus::Ok
}

/// Load and validate a TOML config file.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` as in
/// [`sdna_config_default`].
#[no_mangle]
pub unsafe extern "C" fn sdna_config_load(
    path: *const c_char,
    out: *mut *mut SdnaConfig,
) -> SdnaStatus {
    if path.is_null() {
        return null_arg("path");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => p,
        Err(_) => return fail(SdnaStatus::InvalidArgument, "path is not valid UTF-8"),
    };
    match topology::load_config(Path::new(path)) {
        Ok(cfg) => {
            let cfg = SdnaConfig {
                inner: Arc::new(cfg),
            };
            unsafe { out.write(Box::into_raw(Box::new(cfg))) };
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::ParseError, e),
    }
}

/// Parse and validate a TOML config from memory.
///
/// # Safety
/// `text` must be a NUL-terminated UTF-8 string; `out` as in
/// [`sdna_config_default`].
#[no_mangle]
pub unsafe extern "C" fn sdna_config_from_toml(
    text: *const c_char,
    out: *mut *mut SdnaConfig,
) -> SdnaStatus {
    if text.is_null() {
        return null_arg("text");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => return fail(SdnaStatus::InvalidArgument, "text is not valid UTF-8"),
    };
    match topology::from_toml_str(text) {
        Ok(cfg) => {
            let cfg = SdnaConfig {
                inner: Arc::new(cfg),
            };
            unsafe { out.write(Box::into_raw(Box::new(cfg))) };
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::ParseError, e),
    }
}

/// Release a config handle. Null is a no-op.
///
/// # Safety
/// `cfg` must come from an `sdna_config_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_free(cfg: *mut SdnaConfig) {
    if !cfg.is_null() {
        drop(unsafe { Box::from_raw(cfg) });
    }
}

/// Number of hosts.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_host_count(cfg: *const SdnaConfig) -> usize {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.host_count(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Number of subnet switches.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_switch_count(cfg: *const SdnaConfig) -> usize {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.switch_count(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Number of links.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_link_count(cfg: *const SdnaConfig) -> usize {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.link_count(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Length of the observation vector (hosts + links).
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_observation_len(cfg: *const SdnaConfig) -> usize {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.observation_len(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Host id the critical service starts on.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_critical_server(cfg: *const SdnaConfig) -> usize {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.critical_server(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Total points in play; the two scores always sum to this.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_score_total(cfg: *const SdnaConfig) -> i64 {
    match unsafe { cfg.as_ref() } {
        Some(cfg) => cfg.inner.s_max(),
        None => {
            null_arg("cfg");
            0
        }
    }
}

/// Size of a role's action space under this config.
///
/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_config_action_count(
    cfg: *const SdnaConfig,
    role: SdnaRole,
) -> usize {
    let Some(cfg) = (unsafe { cfg.as_ref() }) else {
        null_arg("cfg");
        return 0;
    };
    let role = match role {
        SdnaRole::Attacker => Role::Attacker,
        SdnaRole::Defender => Role::Defender,
    };
    action_count(role, &cfg.inner)
}

/// Start a game with the given per-agent turn cap.
///
/// # Safety
/// `cfg` must be a live config handle; `out` must point to writable
/// `SdnaGame *` storage.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_new(
    cfg: *const SdnaConfig,
    turn_cap_per_agent: u64,
    out: *mut *mut SdnaGame,
) -> SdnaStatus {
    let Some(cfg) = (unsafe { cfg.as_ref() }) else {
        return null_arg("cfg");
    };
    if out.is_null() {
        return null_arg("out");
    }
    match GameSession::new(Arc::clone(&cfg.inner), turn_cap_per_agent) {
        Ok(session) => {
            unsafe { out.write(Box::into_raw(Box::new(SdnaGame { inner: session }))) };
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::InvalidArgument, e),
    }
}

/// Release a game handle. Null is a no-op.
///
/// # Safety
/// `game` must come from [`sdna_game_new`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_free(game: *mut SdnaGame) {
    if !game.is_null() {
        drop(unsafe { Box::from_raw(game) });
    }
}

/// Side whose turn it is.
///
/// # Safety
/// `game` must be a live game handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_to_move(game: *const SdnaGame) -> SdnaRole {
    let Some(game) = (unsafe { game.as_ref() }) else {
        null_arg("game");
        return SdnaRole::Attacker;
    };
    match game.inner.to_move() {
        Role::Attacker => SdnaRole::Attacker,
        Role::Defender => SdnaRole::Defender,
    }
}

/// Winning side, or -1 while the game is still running.
///
/// # Safety
/// `game` must be a live game handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_winner(game: *const SdnaGame) -> i32 {
    let Some(game) = (unsafe { game.as_ref() }) else {
        null_arg("game");
        return -1;
    };
    match game.inner.winner() {
        Some(Role::Attacker) => 0,
        Some(Role::Defender) => 1,
        None => -1,
    }
}

/// Current scoreboard.
///
/// # Safety
/// `game` must be a live game handle; score pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_scores(
    game: *const SdnaGame,
    defender: *mut i64,
    attacker: *mut i64,
) -> SdnaStatus {
    let Some(game) = (unsafe { game.as_ref() }) else {
        return null_arg("game");
    };
    if defender.is_null() {
        return null_arg("defender");
    }
    if attacker.is_null() {
        return null_arg("attacker");
    }
    let scores = game.inner.scoreboard();
    unsafe {
        defender.write(scores.defender);
        attacker.write(scores.attacker);
    }
    SdnaStatus::Ok
}

/// Turns played so far over both sides.
///
/// # Safety
/// `game` must be a live game handle.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_total_turns(game: *const SdnaGame) -> u64 {
    let Some(game) = (unsafe { game.as_ref() }) else {
        null_arg("game");
        return 0;
    };
    game.inner.total_turns()
}

/// Copy the current observation into `buf`. `len` must equal the config's
/// observation length.
///
/// # Safety
/// `game` must be a live game handle; `buf` must point to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_observation(
    game: *const SdnaGame,
    buf: *mut f64,
    len: usize,
) -> SdnaStatus {
    let Some(game) = (unsafe { game.as_ref() }) else {
        return null_arg("game");
    };
    if buf.is_null() {
        return null_arg("buf");
    }
    let obs = game.inner.observation();
    if len < obs.len() {
        return fail(
            SdnaStatus::BufferTooSmall,
            format!("observation needs {} slots, buffer has {len}", obs.len()),
        );
    }
    unsafe { ptr::copy_nonoverlapping(obs.as_ptr(), buf, obs.len()) };
    SdnaStatus::Ok
}

/// List the actions legal for the side to move. `capacity` bounds how many
/// indices fit in `buf`; `written` receives the count.
///
/// # Safety
/// `game` must be a live game handle; `buf` must point to `capacity` writable
/// `size_t` slots; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_legal_actions(
    game: *const SdnaGame,
    buf: *mut usize,
    capacity: usize,
    written: *mut usize,
) -> SdnaStatus {
    let Some(game) = (unsafe { game.as_ref() }) else {
        return null_arg("game");
    };
    if buf.is_null() {
        return null_arg("buf");
    }
    if written.is_null() {
        return null_arg("written");
    }
    let legal = match game.inner.legal_actions(game.inner.to_move()) {
        Ok(legal) => legal,
        Err(e) => return fail(SdnaStatus::RuleViolation, e),
    };
    if capacity < legal.len() {
        return fail(
            SdnaStatus::BufferTooSmall,
            format!("{} legal actions, buffer has {capacity}", legal.len()),
        );
    }
    unsafe {
        ptr::copy_nonoverlapping(legal.as_ptr(), buf, legal.len());
        written.write(legal.len());
    }
    SdnaStatus::Ok
}

/// Apply one action for `role` and report what happened.
///
/// # Safety
/// `game` must be a live game handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdna_game_step(
    game: *mut SdnaGame,
    role: SdnaRole,
    action: usize,
    out: *mut SdnaTurnOutcome,
) -> SdnaStatus {
    let Some(game) = (unsafe { game.as_mut() }) else {
        return null_arg("game");
    };
    if out.is_null() {
        return null_arg("out");
    }
    let role = match role {
        SdnaRole::Attacker => Role::Attacker,
        SdnaRole::Defender => Role::Defender,
    };
    match game.inner.step(role, action) {
        Ok(outcome) => {
            let scores = game.inner.scoreboard();
            unsafe {
                out.write(SdnaTurnOutcome {
                    reward: outcome.reward,
                    done: outcome.done,
                    winner: match outcome.winner {
                        Some(Role::Attacker) => 0,
                        Some(Role::Defender) => 1,
                        None => -1,
                    },
                    defender_turns: outcome.defender_turns_so_far,
                    defender_score: scores.defender,
                    attacker_score: scores.attacker,
                });
            }
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::RuleViolation, e),
    }
}

fn report_out(report: &stats::TTestReport) -> SdnaTTestReport {
    SdnaTTestReport {
        mean_x: report.mean_x,
        mean_y: report.mean_y,
        var_x: report.var_x,
        var_y: report.var_y,
        pearson: report.pearson.unwrap_or(f64::NAN),
        df: report.df,
        t_stat: report.t_stat,
        p_one_tail: report.p_one_tail,
        t_crit_one_tail: report.t_crit_one_tail,
        p_two_tail: report.p_two_tail,
        t_crit_two_tail: report.t_crit_two_tail,
        alpha: report.alpha,
    }
}

/// Two-sample paired t-test over two equally long arrays.
///
/// # Safety
/// `xs` and `ys` must point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sdna_paired_ttest(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    alpha: f64,
    out: *mut SdnaTTestReport,
) -> SdnaStatus {
    if xs.is_null() {
        return null_arg("xs");
    }
    if ys.is_null() {
        return null_arg("ys");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let xs = unsafe { std::slice::from_raw_parts(xs, len) };
    let ys = unsafe { std::slice::from_raw_parts(ys, len) };
    match stats::paired_ttest(xs, ys, alpha) {
        Ok(report) => {
            unsafe { out.write(report_out(&report)) };
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::StatsError, e),
    }
}

/// Two-sample pooled-variance t-test over two arrays.
///
/// # Safety
/// `xs` must point to `len_x` readable doubles and `ys` to `len_y`; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn sdna_unpaired_ttest(
    xs: *const f64,
    len_x: usize,
    ys: *const f64,
    len_y: usize,
    alpha: f64,
    out: *mut SdnaTTestReport,
) -> SdnaStatus {
    if xs.is_null() {
        return null_arg("xs");
    }
    if ys.is_null() {
        return null_arg("ys");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let xs = unsafe { std::slice::from_raw_parts(xs, len_x) };
    let ys = unsafe { std::slice::from_raw_parts(ys, len_y) };
    match stats::unpaired_ttest(xs, ys, alpha) {
        Ok(report) => {
            unsafe { out.write(report_out(&report)) };
            SdnaStatus::Ok
        }
        Err(e) => fail(SdnaStatus::StatsError, e),
    }
}
