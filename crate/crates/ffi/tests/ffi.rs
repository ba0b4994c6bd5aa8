use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use cutblur_ffi::*;

const RELAY: &str = r#"
data = ["0", "1"]

[[location]]
name = "src"
traces = [["a:0"], ["a:1"]]

[[location]]
name = "relay"
initial = "s"
transitions = [["s", "a:0", "g0"], ["s", "a:1", "g1"], ["g0", "b:0", "t"], ["g1", "b:1", "t"]]

[[location]]
name = "sink"
traces = [["b:0"], ["b:1"]]

[[channel]]
name = "a"
from = "src"
to = "relay"

[[channel]]
name = "b"
from = "relay"
to = "sink"

[sets]
input = ["a"]
"#;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(cb_last_error()) }.to_string_lossy().into_owned()
}

fn load(text: &str) -> Result<*mut CbFrame, CbStatus> {
    let mut frame = ptr::null_mut();
    let status = unsafe { cb_frame_from_toml(c(text).as_ptr(), &mut frame) };
    if status == CbStatus::Ok {
        Ok(frame)
    } else {
        assert!(frame.is_null());
        Err(status)
    }
}

#[test]
fn relay_round_trip() {
    let frame = load(RELAY).unwrap();
    let mut analysis = ptr::null_mut();
    unsafe {
        assert_eq!(cb_analysis_new(frame, 4, 0, false, &mut analysis), CbStatus::Ok);
        cb_frame_free(frame);
        let mut n = 0;
        assert_eq!(cb_analysis_executions(analysis, &mut n), CbStatus::Ok);
        assert_eq!(n, 5);
        let mut holds = true;
        assert_eq!(cb_no_disclosure(analysis, c("input").as_ptr(), c("b").as_ptr(), &mut holds), CbStatus::Ok);
        assert!(!holds);
        assert_eq!(cb_no_disclosure(analysis, c("a").as_ptr(), c("").as_ptr(), &mut holds), CbStatus::Ok);
        assert!(holds);
        let mut json = ptr::null_mut();
        assert_eq!(cb_runs_json(analysis, c("a").as_ptr(), &mut json), CbStatus::Ok);
        let runs: Vec<String> = serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(runs.len(), 3);
        assert!(runs.contains(&"a=[1]".to_string()));
        cb_string_free(json);
        cb_analysis_free(analysis);
    }
    assert_eq!(last_error(), "");
}

#[test]
fn errors_map_to_codes() {
    assert_eq!(load("data = [").unwrap_err(), CbStatus::Parse);
    assert!(last_error().contains("line"));
    let broken = RELAY.replace("to = \"sink\"", "to = \"nowhere\"");
    assert!(matches!(load(&broken).unwrap_err(), CbStatus::InvalidFrame | CbStatus::Parse));
    assert!(!last_error().is_empty());

    let frame = load(RELAY).unwrap();
    unsafe {
        let mut analysis = ptr::null_mut();
        assert_eq!(cb_analysis_new(frame, 2, 5, false, &mut analysis), CbStatus::Bound);
        assert!(analysis.is_null());
        assert_eq!(cb_analysis_new(frame, 4, 0, true, &mut analysis), CbStatus::Ok);
        let mut holds = false;
        assert_eq!(cb_no_disclosure(analysis, c("zz").as_ptr(), c("a").as_ptr(), &mut holds), CbStatus::UnknownName);
        assert!(last_error().contains("zz"));
        assert_eq!(cb_no_disclosure(analysis, ptr::null(), c("a").as_ptr(), &mut holds), CbStatus::NullArg);
        let bad = [0xffu8, 0];
        assert_eq!(cb_no_disclosure(analysis, bad.as_ptr().cast(), c("a").as_ptr(), &mut holds), CbStatus::Utf8);
        assert_eq!(cb_analysis_executions(ptr::null(), &mut 0), CbStatus::NullArg);
        assert_eq!(cb_frame_from_toml(c(RELAY).as_ptr(), ptr::null_mut()), CbStatus::NullArg);
        cb_analysis_free(analysis);
        cb_frame_free(frame);
        cb_frame_free(ptr::null_mut());
        cb_analysis_free(ptr::null_mut());
        cb_string_free(ptr::null_mut());
    }
    let version = unsafe { CStr::from_ptr(cb_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/cutblur.h")
}

#[test]
fn header_declares_the_interface() {
    let text = std::fs::read_to_string(header()).unwrap();
    for name in [
        "cb_frame_from_toml",
        "cb_frame_free",
        "cb_analysis_new",
        "cb_analysis_free",
        "cb_analysis_executions",
        "cb_no_disclosure",
        "cb_runs_json",
        "cb_string_free",
        "cb_last_error",
        "cb_version",
        "CB_STATUS_BOUND = 7",
        "typedef struct CbFrame CbFrame",
    ] {
        assert!(text.contains(name), "{name} missing from the header");
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "cutblur.h"

int main(int argc, char **argv) {
    FILE *f = fopen(argv[1], "rb");
    static char buf[4096];
    size_t n = fread(buf, 1, sizeof buf - 1, f);
    buf[n] = 0;
    fclose(f);
    CbFrame *frame = NULL;
    if (cb_frame_from_toml(buf, &frame) != CB_STATUS_OK) return 10;
    CbAnalysis *a = NULL;
    if (cb_analysis_new(frame, 4, 0, false, &a) != CB_STATUS_OK) return 11;
    cb_frame_free(frame);
    bool holds = true;
    if (cb_no_disclosure(a, "input", "b", &holds) != CB_STATUS_OK || holds) return 12;
    if (cb_no_disclosure(a, "nope", "b", &holds) != CB_STATUS_UNKNOWN_NAME) return 13;
    if (strlen(cb_last_error()) == 0) return 14;
    char *runs = NULL;
    if (cb_runs_json(a, "b", &runs) != CB_STATUS_OK) return 15;
    printf("%s\n", runs);
    cb_string_free(runs);
    cb_analysis_free(a);
    return 0;
}
"#;

/// Compiles and runs a C client against the static library when a C
/// compiler and the archive are available.
#[test]
fn c_client_links_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let archive = exe.parent().unwrap().parent().unwrap().join("libcutblur_ffi.a");
    if !archive.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or no static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    let bin = dir.path().join("client");
    let frame = dir.path().join("relay.toml");
    std::fs::write(&src, C_PROGRAM).unwrap();
    std::fs::write(&frame, RELAY).unwrap();
    let built = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&archive)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(built.status.success(), "{}", String::from_utf8_lossy(&built.stderr));
    let ran = Command::new(&bin).arg(&frame).output().unwrap();
    assert_eq!(ran.status.code(), Some(0));
    let runs: Vec<String> = serde_json::from_slice(&ran.stdout).unwrap();
    assert_eq!(runs.len(), 3);
}
