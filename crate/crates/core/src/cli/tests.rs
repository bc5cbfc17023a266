use super::*;

fn run_args(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("awareness-auction").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn preset_text(p: PresetArg) -> String {
    p.file().to_json()
}

#[test]
fn float_format_matches_twelve_significant_digits() {
    assert_eq!(format_float(0.0), "0");
    assert_eq!(format_float(-0.0), "0");
    assert_eq!(format_float(1.75), "1.75");
    assert_eq!(format_float(1.0 / 3.0), "0.333333333333");
    assert_eq!(format_float(505.0 / 132.0), "3.82575757576");
    assert_eq!(format_float(-2.5e-7), "-2.5e-7");
    assert_eq!(format_float(1.23456789012345e15), "1.23456789012e15");
    assert_eq!(format_float(123456789012.0), "123456789012");
    assert_eq!(format_float(9.999999999999995), "10");
    assert_eq!(format_float(1e-5), "0.00001");
}

#[test]
fn every_preset_round_trips() {
    for p in PresetArg::ALL {
        let text = preset_text(p);
        let parsed = parse_scenario_str(&text).unwrap_or_else(|e| panic!("{}: {e}", p.name()));
        let again = ScenarioFile::from_parts(&parsed.scenario, &parsed.policy, &parsed.estimator).to_json();
        assert_eq!(text, again, "{}", p.name());
    }
}

#[test]
fn missing_info_defaults_to_full() {
    let mut file = PresetArg::D1.file();
    file.info.clear();
    let parsed = file.build().unwrap();
    let (_, p) = presets::d1();
    assert_eq!(parsed.policy, p);
}

#[test]
fn numbers_accept_both_forms() {
    let text = preset_text(PresetArg::Coins).replace("\"1/2\"", "0.5");
    let parsed = parse_scenario_str(&text).unwrap();
    assert_eq!(parsed.scenario, presets::coins().0);
}

#[test]
fn invariant_errors_name_the_cell() {
    let text = preset_text(PresetArg::D1);
    let mut file: ScenarioFile = serde_json::from_str(&text).unwrap();
    if let DistributionEntry::Discrete { atoms } = &mut file.characteristics[1].distribution[0] {
        atoms[0].prob = NumberEntry::Text("1/3".into());
    }
    let e = file.build().unwrap_err();
    assert_eq!(e.location, "characteristics[1].distribution[0]");
    assert!(e.message.starts_with("bidder 1, characteristic 2:"), "{e}");

    let mut file: ScenarioFile = serde_json::from_str(&text).unwrap();
    file.awareness[1] = vec![2];
    let e = file.build().unwrap_err();
    assert_eq!(e.location, "awareness[1]");
    assert!(e.message.contains("bidder 2"), "{e}");

    let mut file: ScenarioFile = serde_json::from_str(&text).unwrap();
    file.info[1].insert("2".into(), InfoEntry::Named("full".into()));
    let e = file.build().unwrap_err();
    assert_eq!(e.location, "info[1].2");

    let mut file: ScenarioFile = serde_json::from_str(&text).unwrap();
    file.characteristics[0].distribution.pop();
    assert_eq!(file.build().unwrap_err().location, "characteristics[0].distribution");

    let mut file: ScenarioFile = serde_json::from_str(&text).unwrap();
    file.estimator.backend = "quantum".into();
    assert_eq!(file.build().unwrap_err().location, "estimator.backend");
}

#[test]
fn syntax_and_schema_errors_carry_positions() {
    let e = parse_scenario_str("{\"bidders\": 2,\n \"characteristics\": [,]}").unwrap_err();
    assert!(e.location.contains("line 2"), "{e}");
    let e = parse_scenario_str("{\"bidders\": 2, \"characteristics\": [{\"distribution\": [{\"type\": \"uniform\", \"lo\": 1}]}], \"awareness\": []}")
        .unwrap_err();
    assert!(e.location.starts_with("characteristics[0].distribution[0]"), "{e}");
    assert!(e.message.contains("hi"), "{e}");
    let e = parse_scenario_str("{\"bidders\": 2, \"colour\": 1}").unwrap_err();
    assert!(e.message.contains("colour"), "{e}");
}

#[test]
fn reports_emit_csv_and_aligned_text() {
    let mut doc = ReportDocument::default();
    doc.exact("revenue", &rational::ratio(7, 4), "exact");
    doc.estimate("fee", &Estimate::sampled(0.5, Some(0.01)), Backend::MonteCarlo);
    doc.text("awareness", "{1,2}", "exact");
    let csv = String::from_utf8(doc.emit(Format::Csv)).unwrap();
    assert_eq!(
        csv,
        "field,value,stderr,backend\nrevenue,1.75,,exact\nrevenue.exact,7/4,,exact\nfee,0.5,0.01,mc\nawareness,\"{1,2}\",,exact\n"
    );
    let text = String::from_utf8(doc.emit(Format::Text)).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "field          value  stderr  backend");
    assert_eq!(lines[2], "revenue.exact  7/4            exact");
    assert!(text.lines().all(|l| l == l.trim_end()));
    assert!(!text.contains('\r'));
}

#[test]
fn exit_codes() {
    let (code, out, _) = run_args(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("tradeoff"));
    assert!(!out.contains("inject"));
    assert_eq!(run_args(&["bogus"]).0, EXIT_INPUT);
    assert_eq!(run_args(&["fees"]).0, EXIT_INPUT);
    assert_eq!(run_args(&["fees", "--scenario", "/nonexistent/x.json"]).0, EXIT_INPUT);
    let (code, out, _) = run_args(&["verify", "--count", "2"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.ends_with("status,pass,,exact\n"));
    // Scenario 2 of seed 0 has a zero-margin strict claim.
    let (code, out, _) = run_args(&["verify", "--count", "3"]);
    assert_eq!(code, EXIT_VERIFICATION);
    assert!(out.contains("failure.1,lemma7 scenario 2"));
    let (code, out, err) = run_args(&["verify", "--count", "2", "--inject-failure"]);
    assert_eq!(code, EXIT_VERIFICATION);
    assert!(out.contains("status,fail"));
    assert!(err.contains("verification failed"));
}

#[test]
fn example_command_prints_the_preset() {
    let (code, out, _) = run_args(&["example", "d1"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, preset_text(PresetArg::D1));
}
