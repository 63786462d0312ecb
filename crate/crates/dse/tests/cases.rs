use dse::case::{parse_case, Case, CaseError, CaseFormat, BUNDLED};
use dse_core::grid::BusKind;

#[test]
fn bundled_dimensions() {
    for (name, buses, branches, n, m) in
        [("ieee14", 14, 20, 27, 82), ("ieee30", 30, 41, 59, 172), ("ieee57", 57, 80, 113, 331)]
    {
        let case = Case::load(name).unwrap();
        assert_eq!(case.system.bus_count(), buses, "{name}");
        assert_eq!(case.system.branch_count(), branches, "{name}");
        assert_eq!(case.system.state_dim(), n, "{name}");
        assert_eq!(case.plan.len(), m, "{name}");
        assert_eq!(case.system.buses[case.system.slack].kind, BusKind::Slack);
    }
}

#[test]
fn cdf_and_matpower_agree() {
    for name in ["ieee14", "ieee30", "ieee57"] {
        let a = Case::load(name).unwrap().system;
        let b = Case::load(&format!("{name}.m")).unwrap().system;
        assert_eq!(a.bus_count(), b.bus_count());
        assert_eq!(a.slack, b.slack);
        for (x, y) in a.buses.iter().zip(&b.buses) {
            assert_eq!((x.label, x.kind), (y.label, y.kind), "{name}");
            assert!((x.magnitude - y.magnitude).abs() < 1e-3, "{name} bus {}", x.label);
            assert!((x.angle - y.angle).abs() < 1e-3, "{name} bus {}", x.label);
        }
        let (ya, yb) = (a.admittance().unwrap(), b.admittance().unwrap());
        for i in 0..a.bus_count() {
            for j in 0..a.bus_count() {
                let (p, q) = (ya.entry(i, j), yb.entry(i, j));
                assert!((p.re - q.re).abs() < 1e-6 && (p.im - q.im).abs() < 1e-6, "{name} Y[{i},{j}]");
            }
        }
    }
}

/// Complex numbers as `(re, im)` for an assembly independent of the library.
fn inv((a, b): (f64, f64)) -> (f64, f64) {
    let d = a * a + b * b;
    (a / d, -b / d)
}

#[test]
fn ieee14_admittance_matches_brute_force() {
    let sys = Case::load("ieee14").unwrap().system;
    let l = sys.bus_count();
    let mut y = vec![vec![(0.0, 0.0); l]; l];
    let mut add = |i: usize, j: usize, (re, im): (f64, f64)| {
        y[i][j].0 += re;
        y[i][j].1 += im;
    };
    for br in &sys.branches {
        let (g, b) = inv((br.resistance, br.reactance));
        let t = br.tap;
        add(br.from, br.from, (g / (t * t), (b + br.charging / 2.0) / (t * t)));
        add(br.to, br.to, (g, b + br.charging / 2.0));
        add(br.from, br.to, (-g / t, -b / t));
        add(br.to, br.from, (-g / t, -b / t));
    }
    for sh in &sys.shunts {
        add(sh.bus, sh.bus, (sh.conductance, sh.susceptance));
    }
    let adm = sys.admittance().unwrap();
    for (i, row) in y.iter().enumerate() {
        for (j, &(re, im)) in row.iter().enumerate() {
            let e = adm.entry(i, j);
            assert!((e.re - re).abs() < 1e-9 && (e.im - im).abs() < 1e-9, "Y[{i},{j}]");
        }
    }
    let taps = sys.branches.iter().filter(|b| b.tap != 1.0).count();
    assert_eq!(taps, 3);
    assert_eq!(sys.shunts.len(), 1);
    assert!((sys.shunts[0].susceptance - 0.19).abs() < 1e-12);
}

#[test]
fn handcrafted_two_bus_cdf() {
    let text = "\
 01/01/00 HAND                  100.0 2000 W two bus
BUS DATA FOLLOWS                            2 ITEMS
   1 Bus 1         1  1  3 1.0000  0.000      0.0       0.0     0.0     0.0    0.00  1.000     0.0     0.0  0.0000  0.0000    0
   2 Bus 2         1  1  0 0.9800 -2.000     10.0       5.0     0.0     0.0    0.00  0.000     0.0     0.0  0.0000  0.0000    0
-999
BRANCH DATA FOLLOWS                         1 ITEMS
   1    2  1 1  1 0   0.01000    0.10000   0.00000    0     0     0    0 0  0.0000    0.00
-999
END OF DATA
";
    let sys = parse_case(text, CaseFormat::Cdf).unwrap();
    assert_eq!((sys.bus_count(), sys.branch_count()), (2, 1));
    assert!(sys.admittance().is_none());
    assert_eq!(sys.base_mva, 100.0);
    assert!((sys.buses[1].angle + 2f64.to_radians()).abs() < 1e-15);
    let case = Case::from_text("two", text, CaseFormat::Cdf).unwrap();
    assert_eq!(case.system.state_dim(), 3);
}

#[test]
fn handcrafted_two_bus_matpower() {
    let text = "\
function mpc = two
mpc.baseMVA = 100;
mpc.bus = [
\t1\t3\t0\t0\t0\t0\t1\t1.0\t0\t0\t1\t1.1\t0.9;
\t2\t1\t10\t5\t0\t50\t1\t0.98\t-2\t0\t1\t1.1\t0.9;
];
mpc.gen = [ 1 0 0 0 0 1 100 1 0 0 ];
mpc.branch = [
\t1\t2\t0.01\t0.1\t0\t0\t0\t0\t0\t0\t1\t-360\t360;
\t1\t2\t0.01\t0.1\t0\t0\t0\t0\t0\t0\t0\t-360\t360;
];
";
    let sys = parse_case(text, CaseFormat::Matpower).unwrap();
    assert_eq!(sys.branch_count(), 1, "out-of-service branch is skipped");
    assert_eq!(sys.shunts.len(), 1);
    assert!((sys.shunts[0].susceptance - 0.5).abs() < 1e-15);
}

fn parse_error(text: &str, format: CaseFormat) -> (usize, usize, String) {
    match parse_case(text, format) {
        Err(CaseError::Parse(e)) => (e.line, e.column, e.message),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn empty_files_are_rejected() {
    assert_eq!(parse_error("", CaseFormat::Cdf).0, 1);
    assert_eq!(parse_error("  \n", CaseFormat::Matpower).0, 1);
}

#[test]
fn errors_carry_positions() {
    let cdf = BUNDLED[0].1.replacen("1.0600", "1.06x0", 1);
    let (line, column, msg) = parse_error(&cdf, CaseFormat::Cdf);
    assert_eq!((line, column), (3, 28), "{msg}");

    let cdf = BUNDLED[0].1.replacen("   2    4  1", "   2   99  1", 1);
    let (line, column, msg) = parse_error(&cdf, CaseFormat::Cdf);
    assert_eq!((line, column), (22, 6));
    assert!(msg.contains("unknown bus 99"));

    let m = BUNDLED[3].1.replacen("1.045000", "1.04y", 1);
    let (line, _, msg) = parse_error(&m, CaseFormat::Matpower);
    assert_eq!(line, 15, "{msg}");

    let m = BUNDLED[3].1.replacen("];", "", 1);
    assert!(parse_case(&m, CaseFormat::Matpower).is_err());
}

#[test]
fn duplicate_slack_is_rejected() {
    let cdf = BUNDLED[0].1.replacen("1  1  2 1.0450", "1  1  3 1.0450", 1);
    assert!(matches!(parse_case(&cdf, CaseFormat::Cdf), Err(CaseError::Network(_))));
}

#[test]
fn unknown_case_names_are_config_errors() {
    let err = Case::load("ieee999").unwrap_err().to_string();
    assert!(err.contains("ieee999"), "{err}");
}
