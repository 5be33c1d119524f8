//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! `PASS`/`FAIL` line; the shared verdict table is computed once.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use isopar::classify::{
    default_cases, omega_locus, otfkm_systems, run_case, v_dim_ledger, CaseManifold, CaseReport, CaseSpec,
    ClassificationTable, RunConfig, Verdict,
};
use isopar::fkm::FocalSet;
use isopar::geometry::{ricci_operator_spectrum, EmbeddedGeometry, CLUSTER_GAP};
use isopar::linalg::{derive_seed, random_unit, seeded_rng, sym_eigenvalues};
use isopar::orbits::OrbitCase;
use isopar::{build_clifford_system, verify_clifford_system};

const SEED: u64 = 20240917;

struct Run {
    table: ClassificationTable,
    elapsed: BTreeMap<String, Duration>,
}

fn run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = RunConfig {
            seed: SEED,
            ..RunConfig::default()
        };
        let timed: Vec<(CaseReport, Duration)> = default_cases()
            .par_iter()
            .map(|c| {
                let t = Instant::now();
                let r = run_case(c, &cfg);
                (r, t.elapsed())
            })
            .collect();
        let elapsed = timed.iter().map(|(r, d)| (r.case.clone(), *d)).collect();
        let mut rows: Vec<CaseReport> = timed.into_iter().map(|(r, _)| r).collect();
        rows.sort_by_key(|r| (r.m1, r.m2, r.case.clone()));
        Run {
            table: ClassificationTable { config: cfg, rows },
            elapsed,
        }
    })
}

fn report(id: u32, name: &str, failures: &[String]) {
    // straight to the stderr handle so the verdict line survives the test harness capture
    let mut err = std::io::stderr().lock();
    let status = if failures.is_empty() { "PASS" } else { "FAIL" };
    let _ = writeln!(err, "{status} criterion {id}: {name}");
    for f in failures {
        let _ = writeln!(err, "    {f}");
    }
    assert!(failures.is_empty(), "criterion {id} failed: {failures:#?}");
}

fn row<'a>(t: &'a ClassificationTable, case: &str) -> &'a CaseReport {
    t.rows.iter().find(|r| r.case == case).unwrap_or_else(|| panic!("{case} missing"))
}

#[test]
fn criterion_01_clifford_validity() {
    let t = Instant::now();
    let mut failures = Vec::new();
    for (m, k, fam) in otfkm_systems() {
        match build_clifford_system(m, k, fam) {
            Ok(sys) if sys.ambient_dim() <= 256 => {
                let v = verify_clifford_system(&sys, 0.0);
                if v.max_anticommutator_residual != 0.0 || v.max_symmetry_residual != 0.0 || !v.passed {
                    failures.push(format!("({m},{k},{fam}): residual {:e}", v.max_anticommutator_residual));
                }
            }
            Ok(_) => {}
            Err(e) => failures.push(format!("({m},{k},{fam}): {e}")),
        }
    }
    let elapsed = t.elapsed();
    if elapsed > Duration::from_secs(5) {
        failures.push(format!("took {elapsed:?}"));
    }
    report(1, "Clifford relations hold exactly", &failures);
}

#[test]
fn criterion_02_shape_spectra() {
    let mut cases = default_cases();
    cases.retain(|c| !matches!(c, CaseSpec::Homogeneous { .. }));
    cases.extend(OrbitCase::ALL.into_iter().map(CaseSpec::homogeneous));
    let failures: Vec<String> = cases
        .par_iter()
        .flat_map_iter(|spec| {
            let mut out = Vec::new();
            let (m1, m2) = spec.multiplicities().unwrap();
            let (zero, pm) = if spec.focal() == FocalSet::M1 { (m1, m2) } else { (m2, m1) };
            let cm = CaseManifold::build(spec, 256).unwrap();
            let mf = cm.manifold();
            let mut rng = seeded_rng(derive_seed(SEED, 2));
            for i in 0..5 {
                let x = mf.random_point(derive_seed(SEED, 100 + i)).unwrap();
                let g = EmbeddedGeometry::at(mf, &x).unwrap();
                let nn = g.frame.normal.ncols();
                let mut normals: Vec<_> = (0..nn).map(|a| g.frame.normal.column(a).into_owned()).collect();
                normals.extend((0..5).map(|_| &g.frame.normal * random_unit(&mut rng, nn)));
                for eta in &normals {
                    let ev = sym_eigenvalues(&g.shape_operator_along(eta));
                    let mut counts = [0usize; 3];
                    for v in &ev {
                        let r = v.round();
                        if (v - r).abs() > 1e-6 || r.abs() > 1.0 {
                            out.push(format!("{spec}: eigenvalue {v}"));
                            break;
                        }
                        counts[(r + 1.0) as usize] += 1;
                    }
                    if counts != [pm, zero, pm] {
                        out.push(format!("{spec}: multiplicities (-1,0,1) = {counts:?}, expected ({pm},{zero},{pm})"));
                    }
                }
            }
            out.truncate(3);
            out
        })
        .collect();
    report(2, "unit-normal shape operators have spectrum {-1,0,1} with the predicted multiplicities", &failures);
}

#[test]
fn criterion_03_cyclic_parallel() {
    let r = run();
    let cfg = r.table.config;
    let mut failures = Vec::new();
    if cfg.points < 5 || cfg.directions < 200 {
        failures.push(format!("sampling budget {} points x {} directions", cfg.points, cfg.directions));
    }
    for row in &r.table.rows {
        if let Some(e) = &row.error {
            failures.push(format!("{}: {e}", row.case));
        } else if row.defects.cyclic > 1e-8 || row.is_a != Verdict::Positive {
            failures.push(format!("{}: cyclic defect {:e}", row.case, row.defects.cyclic));
        }
        let t = r.elapsed[&row.case];
        if t > Duration::from_secs(120) {
            failures.push(format!("{}: took {t:?}", row.case));
        }
    }
    report(3, "every focal submanifold is an A-manifold", &failures);
}

#[test]
fn criterion_04_ricci_parallel_matrix() {
    let r = run();
    let mut failures = Vec::new();
    for row in &r.table.rows {
        if row.expected.is_ricci_parallel {
            if row.defects.parallel > 1e-8 {
                failures.push(format!("{}: parallel defect {:e}", row.case, row.defects.parallel));
            }
            continue;
        }
        match &row.witness {
            Some(w) if w.value >= 1e-2 => {}
            Some(w) => failures.push(format!("{}: witness value {:e}", row.case, w.value)),
            None => failures.push(format!("{}: no witness", row.case)),
        }
        if row.is_ricci_parallel != Verdict::Negative {
            failures.push(format!("{}: verdict {}", row.case, row.is_ricci_parallel));
        }
    }
    let note = |case: &str, key: &str| {
        let w = row(&r.table, case).witness.as_ref().expect("witness");
        w.notes.iter().find(|(k, _)| k == key).map(|(_, v)| *v).expect("note")
    };
    for case in ["otfkm:M1:5:1", "otfkm:M1:5:2"] {
        if note(case, "a_minus_3p4p5x") > 1e-9 {
            failures.push(format!("{case}: A(w, X) differs from 3 P4P5x"));
        }
    }
    let w96 = row(&r.table, "otfkm:M1:9:1").witness.as_ref().expect("witness").value;
    if w96 / 4.0 < 1.5 - 1e-9 {
        failures.push(format!("(9,6): 1/4 |nabla rho| = {}", w96 / 4.0));
    }
    for row in r.table.rows.iter().filter(|r| r.focal == FocalSet::M2 && !r.expected.is_ricci_parallel) {
        if let (Some(w), Some(l)) = (&row.witness, row.spec.l().unwrap()) {
            let bound = l as f64 - 2.0 * row.m1 as f64 + 4.0;
            if w.value < bound - 1e-9 {
                println!(
                    "    note {}: Q1Q2x/Q1x/Q2x triple gives {:.6}, below l-2m+4 = {bound}; exact value l-2m+2+sum = {:.6}",
                    row.case,
                    w.value,
                    w.notes.iter().find(|(k, _)| k == "predicted").map_or(f64::NAN, |(_, v)| *v)
                );
            }
        }
    }
    report(4, "Ricci-parallel exactly on the predicted list, witnesses elsewhere", &failures);
}

#[test]
fn criterion_05_m2_13_spectrum() {
    let cm = CaseManifold::build(&CaseSpec::homogeneous(OrbitCase::U5M2), 256).unwrap();
    let mf = cm.manifold();
    let mut failures = Vec::new();
    for i in 0..5 {
        let x = mf.random_point(derive_seed(SEED, 500 + i)).unwrap();
        let g = EmbeddedGeometry::at(mf, &x).unwrap();
        let ev = sym_eigenvalues(&g.ricci);
        let spec = ricci_operator_spectrum(&g.ricci, CLUSTER_GAP);
        let ok = ev.len() == 13
            && ev[..12].iter().all(|v| (v - 8.0).abs() <= 1e-9)
            && (ev[12] - 12.0).abs() <= 1e-9;
        if !ok {
            failures.push(format!("point {i}: {spec:?}"));
        }
    }
    report(5, "Ricci spectrum of the 13-dimensional orbit is {8^12, 12^1}", &failures);
}

#[test]
fn criterion_06_einstein_list() {
    let r = run();
    let mut failures = Vec::new();
    for case in ["otfkm:M1:4:2:definite", "homog:so5_grassmann"] {
        let d = row(&r.table, case).defects.einstein;
        if d > 1e-8 {
            failures.push(format!("{case}: Einstein defect {d:e}"));
        }
    }
    for case in ["homog:so5_cp3", "homog:u5_M1_14", "homog:u5_M2_13"] {
        let d = row(&r.table, case).defects.einstein;
        if d < 1e-2 {
            failures.push(format!("{case}: Einstein defect only {d:e}"));
        }
    }
    for row in &r.table.rows {
        if (row.is_einstein == Verdict::Positive) != row.expected.is_einstein {
            failures.push(format!("{}: Einstein verdict {}", row.case, row.is_einstein));
        }
    }
    report(6, "Einstein exactly for Sp(2)-type (4,3) and the Grassmannian orbit", &failures);
}

#[test]
fn criterion_07_v_dimensions() {
    let mut failures = Vec::new();
    match v_dim_ledger(SEED) {
        Ok(entries) => {
            for e in entries {
                println!("    dim V_x {}: {} (target {}{})", e.label, e.dim, if e.upper_bound { "<= " } else { "" }, e.expected);
                if !e.holds() {
                    failures.push(format!("{}: {} vs {}", e.label, e.dim, e.expected));
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    report(7, "dim V_x at the special points", &failures);
}

#[test]
fn criterion_08_curvature_bounds() {
    let r = run();
    let mut failures = Vec::new();
    let pairs = r.table.config.pairs * r.table.config.points;
    if pairs < 10_000 {
        failures.push(format!("only {pairs} pairs per case"));
    }
    for row in &r.table.rows {
        let b = &row.bounds;
        if b.sec_max > 2.0 + 1e-9 {
            failures.push(format!("{}: Sec {:.12}", row.case, b.sec_max));
        }
        if b.a_tilde_max > 1.0 + 1e-9 {
            failures.push(format!("{}: A~ {:.12}", row.case, b.a_tilde_max));
        }
        if b.ricci_min < b.ricci_lower_bound - 1e-9 {
            failures.push(format!("{}: Ric {:.12} < {}", row.case, b.ricci_min, b.ricci_lower_bound));
        }
    }
    report(8, "Sec <= 2, A~ <= 1 and the Ricci lower bound", &failures);
}

#[test]
fn criterion_09_omega_locus() {
    let mut failures = Vec::new();
    match omega_locus(2, 5, SEED) {
        Ok(o) => {
            println!(
                "    l = {}: Omega-point max {} (mult {}), random maxima {:?}",
                o.l, o.omega_max, o.omega_multiplicity, o.random_max
            );
            if (o.omega_max - o.bound).abs() > 1e-8 {
                failures.push(format!("Omega-point max {} vs {}", o.omega_max, o.bound));
            }
            if o.random_max.len() < 5 {
                failures.push("fewer than 5 random points".into());
            }
            for v in &o.random_max {
                if *v > o.bound - 1e-2 {
                    failures.push(format!("random point max {v} too close to {}", o.bound));
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    report(9, "maximal Ricci direction 2l-6 is attained only on a proper subset", &failures);
}

#[test]
fn criterion_10_oracle_coherence() {
    let r = run();
    let cfg = r.table.config;
    let mut failures = Vec::new();
    if cfg.oracle_triples * cfg.points < 100 {
        failures.push(format!("only {} oracle triples per case", cfg.oracle_triples * cfg.points));
    }
    for row in &r.table.rows {
        match row.defects.oracle_discrepancy {
            Some(d) if d <= 1e-5 => {}
            Some(d) => failures.push(format!("{}: discrepancy {d:e}", row.case)),
            None => failures.push(format!("{}: no closed form compared", row.case)),
        }
    }
    report(10, "closed-form covariant derivatives agree with the finite-difference oracle", &failures);
}

#[test]
fn table_is_consistent_and_matches() {
    let r = run();
    let v = r.table.consistency_violations();
    assert!(v.is_empty(), "{v:?}");
    let bad: Vec<&str> = r.table.mismatches().iter().map(|r| r.case.as_str()).collect();
    assert!(bad.is_empty(), "mismatched rows: {bad:?}");
}
