//! Compiles a small C program against the generated header and links it
//! with the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "dffc.h"

int main(void) {
    double s = 0.0;
    if (dffc_instantaneous_hardness(0.5, 0.05, 0.1, &s) != DFFC_STATUS_OK || s != 1.0) return 1;
    if (dffc_instantaneous_hardness(0.5, 0.0, 0.1, &s) != DFFC_STATUS_INVALID_SCHEDULE) return 2;
    if (dffc_last_error() == NULL || strlen(dffc_last_error()) == 0) return 3;

    double prior[3] = {0.0, 0.5, 1.0};
    DffcHardness *h = NULL;
    if (dffc_hardness_new(prior, 3, 0.9, 0.5, &h) != DFFC_STATUS_OK) return 4;
    double dfh[3];
    if (dffc_hardness_dfh(h, dfh, 3) != DFFC_STATUS_OK || dfh[2] != 0.5) return 5;
    size_t ids[1];
    if (dffc_select_hard_pool(dfh, 3, 1, ids) != DFFC_STATUS_OK || ids[0] != 2) return 6;
    dffc_hardness_free(h);
    printf("ok %s\n", dffc_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok()
}

#[test]
fn header_compiles_and_links() {
    if !have_cc() {
        eprintln!("no C compiler on PATH; skipping");
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(
        header_dir.join("dffc.h").exists(),
        "build script writes include/dffc.h"
    );
    let lib = target_dir().join("libdffc_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping link step", lib.display());
        return;
    }
    let work = tempfile::tempdir().unwrap();
    let src = work.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = work.path().join("main");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&header_dir)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status.code()
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
