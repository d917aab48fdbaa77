use zetasign::cli::{format_value, parse_density_csv, reparse_value, run_with, OutputRecord, CSV_HEADER};
use rug::Float;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["zetasign"];
    full.extend_from_slice(args);
    let code = run_with(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn psi_at_zero_is_one() {
    let (code, out, _) = run(&["psi", "--sigma", "0.8", "--x", "0", "--digits", "10"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1.000000000");
}

#[test]
fn density_prints_known_digits() {
    let (code, out, _) = run(&["density", "--sigma", "1.0", "--kind", "d", "--digits", "20"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "3.7886623606688718671e-7");
}

#[test]
fn csv_rows_round_trip() {
    let (code, out, _) = run(&["--format", "csv", "table2", "--rows", "0.6,0.7", "--digits", "12"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().next().unwrap(), CSV_HEADER);
    let rows = parse_density_csv(&out).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["sigma"], "0.6");
    assert_eq!(rows[0]["kind"], "d");
    let v = reparse_value(&rows[0]["value"], 128).unwrap();
    assert_eq!(format_value(&v, 12), rows[0]["value"]);
}

#[test]
fn json_records_parse() {
    let (code, out, _) = run(&["--format", "json", "primezeta", "--s", "2", "--digits", "15"]);
    assert_eq!(code, 0);
    let recs: Vec<OutputRecord> = serde_json::from_str(&out).unwrap();
    assert_eq!(recs[0].command, "primezeta");
    let v: Float = reparse_value(&recs[0].value, 64).unwrap();
    assert!((v.to_f64() - 0.452247420041065).abs() < 1e-14);
}

#[test]
fn qcoeff_rows_and_sums() {
    let (code, out, _) = run(&["qcoeff", "--n", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.split_whitespace().count(), 3);
    let (code, out, _) = run(&["qcoeff", "--n", "12", "--sum-check"]);
    assert_eq!(code, 0);
    assert!(!out.contains("MISMATCH"));
}

#[test]
fn rational_ifactor_is_exact() {
    let (code, out, _) = run(&["ifactor", "--b", "4", "--x", "0", "--method", "rational"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("1 = "), "{out}");
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["psi", "--sigma"]).0, 2);
    assert_eq!(run(&["nosuch"]).0, 2);
    assert_eq!(run(&["density", "--sigma", "0.4", "--digits", "5"]).0, 3);
    assert_eq!(run(&["psi", "--sigma", "1", "--x", "1", "--digits", "50", "--max-digits", "30"]).0, 4);
    assert_eq!(run(&["density", "--sigma", "0.8", "--kind", "bogus"]).0, 2);
    let (code, _, err) = run(&["mc", "--sigma", "0.8", "--cutoff", "100000", "--prime-limit", "1000"]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = std::env::temp_dir().join(format!("zetasign-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("conf");
    std::fs::write(&path, "max_digits = 30\nformat = json\n").unwrap();
    let p = path.to_str().unwrap();
    assert_eq!(run(&["--config", p, "psi", "--sigma", "1", "--x", "1", "--digits", "25"]).0, 4);
    let (code, out, _) =
        run(&["--config", p, "--max-digits", "80", "--format", "text", "psi", "--sigma", "1", "--x", "0", "--digits", "5"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1.0000");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn quick_check_suite_passes() {
    let (code, out, _) = run(&["checks", "--suite", "identities"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.lines().all(|l| l.starts_with("PASS")));
}
