//! Canonical ASCII renderings of the charts. Regenerate with
//! `KODUAL_BLESS=1 cargo test --test golden` after an intended change.

use std::path::PathBuf;
use std::process::Command;

const FIGURES: &[(&str, &[&str])] = &[
    ("fig1_s2rho_e1", &["sseq", "run", "s2rho", "--page", "1"]),
    ("fig1_ku_e1", &["sseq", "run", "hfpss-ku-e1", "--window", "-2:8", "--filtrations", "0:4", "--page", "1"]),
    ("fig2_s2rho_e2", &["sseq", "run", "s2rho", "--page", "2"]),
    ("fig2_ku_e2", &["sseq", "run", "hfpss-ku", "--window", "-2:8", "--filtrations", "0:4", "--max-page", "2"]),
    ("fig3_hfpss_ku", &["sseq", "run", "hfpss-ku", "--max-page", "4", "--window", "-8:16", "--filtrations", "0:6"]),
    ("fig4_tate_ku", &["sseq", "run", "tate-ku", "--window", "-8:8", "--filtrations", "-6:6"]),
    ("fig5_hoss_ku", &["sseq", "run", "hoss-ku", "--window", "-8:12", "--filtrations", "-6:0"]),
    ("fig6_anderson_hfpss", &["sseq", "run", "anderson-hfpss", "--window", "-8:12", "--filtrations", "0:6", "--page", "4"]),
];

fn render(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_kodual"))
        .args(args)
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).expect("utf-8")
}

#[test]
fn figures_match_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("KODUAL_BLESS").is_some();
    for (name, args) in FIGURES {
        let got = render(args);
        let path = dir.join(format!("{name}.txt"));
        if bless {
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(got, want, "{name} differs from {}", path.display());
    }
}

#[test]
fn output_is_deterministic() {
    for (_, args) in FIGURES {
        assert_eq!(render(args), render(args));
    }
}
