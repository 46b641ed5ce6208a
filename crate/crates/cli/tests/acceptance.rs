use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use cellia::channel::generate;
use cellia::converse::{best_lambda, bound_report, config_vectors, int, lp_solve_exact, q, to_f64, Q};
use cellia::ia_schemes::{align_two_streams, solve, BeamformerSolution};
use cellia::lattice::{build_graph, inactive_set_and_clusters, InterferenceGraph};
use cellia::linalg::{complex_gaussian, normalize, rank, CMat};
use cellia::verifier::{certify_alignment, measure_rates, Certificate, InterferenceModel};
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const TOLERANCE: f64 = 1e-9;
const MIN_GAIN: f64 = 1e-6;
const SLOPE_SLACK: f64 = 0.05;
const POWERS: [f64; 2] = [1e3, 1e6];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Run {
    graph: InterferenceGraph,
    solution: BeamformerSolution,
    certificate: Certificate,
    slope: f64,
}

fn run(r: u32, m: usize, n: usize, seed: u64) -> Result<Run, String> {
    let graph = build_graph(r).map_err(|e| e.to_string())?;
    let partition = inactive_set_and_clusters(&graph);
    let channels = generate(&graph, m, n, seed);
    let solution = solve(&graph, &partition, &channels).map_err(|e| format!("r={r} seed={seed}: {e}"))?;
    let certificate = certify_alignment(&graph, &channels, &solution, TOLERANCE, InterferenceModel::Directed);
    let rates = measure_rates(&graph, &channels, &solution, &POWERS).map_err(|e| e.to_string())?;
    Ok(Run {
        graph,
        solution,
        certificate,
        slope: rates.average_dof_slope,
    })
}

fn certified(run: &Run, label: &str) -> Result<(), String> {
    let c = &run.certificate;
    ensure(c.pass, || {
        format!(
            "{label}: certificate failed, max residual {:.3e}, {} failing edges, {} weak cells",
            c.max_residual,
            c.failing_edges.len(),
            c.weak_cells.len()
        )
    })?;
    let gain = c.min_direct_gain.unwrap_or(0.0);
    ensure(gain > MIN_GAIN, || format!("{label}: min direct gain {gain:.3e}"))
}

fn counting() -> Outcome {
    let start = Instant::now();
    for r in 1..=10u32 {
        let g = build_graph(r).map_err(|e| e.to_string())?;
        let r64 = r as usize;
        let v = 4 * r64 * r64 + 3 * r64 + usize::from(r.is_multiple_of(2));
        let t = 4 * r64 * r64 - r64;
        ensure(g.len() == v, || format!("r={r}: |V|={} expected {v}", g.len()))?;
        ensure(g.triangles().len() == t, || {
            format!("r={r}: |T|={} expected {t}", g.triangles().len())
        })?;
        ensure(g.external_count() <= 12 * r64 + 3, || {
            format!("r={r}: |V_ex|={} exceeds {}", g.external_count(), 12 * r64 + 3)
        })?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("r=1..10 counts exact in {elapsed:?}"))
}

fn two_by_two() -> Outcome {
    let target = 7.0 / 9.0;
    let mut worst_slope: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for seed in 0..100u64 {
        let run = run(3, 2, 2, seed)?;
        certified(&run, &format!("seed {seed}"))?;
        ensure(run.solution.average_dof() == Ratio::new(7, 9), || {
            format!("seed {seed}: average DoF {}", run.solution.average_dof())
        })?;
        let dev = (run.slope - target).abs();
        ensure(dev <= SLOPE_SLACK, || format!("seed {seed}: slope {:.4}", run.slope))?;
        worst_slope = worst_slope.max(dev);
        worst_residual = worst_residual.max(run.certificate.max_residual);
    }
    Ok(format!(
        "100 seeds certified, DoF 7/9, max residual {worst_residual:.2e}, max slope deviation {worst_slope:.4}"
    ))
}

fn two_by_three() -> Outcome {
    let mut notes = Vec::new();
    for r in [2u32, 4] {
        let run = run(r, 2, 3, 42)?;
        certified(&run, &format!("r={r}"))?;
        ensure(run.solution.average_dof() == Ratio::from_integer(1), || {
            format!("r={r}: average DoF {}", run.solution.average_dof())
        })?;
        ensure((run.slope - 1.0).abs() <= SLOPE_SLACK, || {
            format!("r={r}: slope {:.4}", run.slope)
        })?;
        notes.push(format!("r={r} slope {:.4}", run.slope));
    }
    Ok(format!("DoF 1 exactly; {}", notes.join(", ")))
}

fn two_by_four() -> Outcome {
    let run = run(3, 2, 4, 42)?;
    certified(&run, "r=3")?;
    let achieved = run.solution.average_dof();
    let achieved_f = *achieved.numer() as f64 / *achieved.denom() as f64;
    let floor = 7.0 / 6.0 - 3.0 / (run.graph.len() as f64).sqrt();
    ensure(achieved_f >= floor, || {
        format!("average DoF {achieved} below {floor:.4}")
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x6c656d6d61);
    for draw in 0..1000 {
        let h_da = complex_gaussian(&mut rng, 4, 2);
        let h_db = complex_gaussian(&mut rng, 4, 2);
        let h_dc = complex_gaussian(&mut rng, 4, 2);
        let v_a = normalize(&complex_gaussian(&mut rng, 2, 1).column(0).into_owned());
        let h_a = &h_da * &v_a;
        let l = align_two_streams(&h_a, &h_db, &h_dc).map_err(|e| format!("draw {draw}: {e}"))?;
        ensure(l.v_b.norm() <= 1.0 + 1e-12 && l.v_c.norm() <= 1.0 + 1e-12, || {
            format!("draw {draw}: norms {} {}", l.v_b.norm(), l.v_c.norm())
        })?;
        let lhs = &h_db * &l.v_b + &h_dc * &l.v_c;
        let rhs = h_a.scale(l.gamma);
        let err = (lhs - &rhs).norm();
        ensure(err <= TOLERANCE * rhs.norm().max(1.0), || {
            format!("draw {draw}: identity error {err:.3e}")
        })?;
        let g = CMat::from_columns(&[h_a.clone(), &h_db * &l.v_b, &h_dc * &l.v_c]);
        ensure(rank(&g) == 2, || format!("draw {draw}: rank(G) = {}", rank(&g)))?;
    }
    Ok(format!(
        "r=3 DoF {achieved} >= {floor:.4}; 1000 construction draws pass"
    ))
}

fn converse_m2() -> Outcome {
    let mut prev_gap: Option<Q> = None;
    let mut bound_r3 = None;
    for r in 1..=20u32 {
        let g = build_graph(r).map_err(|e| e.to_string())?;
        let report = bound_report(&g, 2, None, false).map_err(|e| e.to_string())?;
        let v = g.len() as i128;
        let expected = q(3, 4) * q(g.triangles().len() as i128, v) + q(5, 2) * q(g.external_count() as i128, v);
        ensure(report.dual_bound.0 == expected, || {
            format!("r={r}: dual bound {} expected {expected}", report.dual_bound.0)
        })?;
        let gap = expected - q(3, 4);
        let envelope = 45.0 / (2.0 * (v as f64).sqrt());
        ensure(to_f64(&gap) <= envelope, || {
            format!("r={r}: gap {gap} exceeds {envelope:.4}")
        })?;
        if let Some(p) = prev_gap {
            ensure(gap < p, || format!("r={r}: gap {gap} not below previous {p}"))?;
        }
        prev_gap = Some(gap);
        if r == 3 {
            bound_r3 = Some(expected);
        }
    }
    let b3 = bound_r3.expect("r=3 visited");
    ensure(q(7, 9) <= b3, || format!("7/9 exceeds bound {b3} at r=3"))?;
    Ok(format!(
        "closed form exact for r=1..20, gap decreasing, 7/9 <= {b3} at r=3"
    ))
}

fn lp_internals() -> Outcome {
    let (_, s, g) = config_vectors(2);
    let ints = |xs: &[i128]| xs.iter().map(|&x| int(x)).collect::<Vec<_>>();
    ensure(s == ints(&[0, 1, 2, 2, 3]), || format!("s = {s:?}"))?;
    ensure(g == ints(&[0, -2, 0, -1, 3]), || format!("g = {g:?}"))?;
    let lp = lp_solve_exact(&s, &g, q(1, 3), int(0), int(0)).map_err(|e| e.to_string())?;
    ensure(lp.value.0 == q(3, 4), || format!("LP value {}", lp.value.0))?;
    let x_star = vec![int(0), int(0), int(0), q(3, 4), q(1, 4)];
    let x: Vec<Q> = lp.x.iter().map(|f| f.0).collect();
    ensure(x == x_star, || format!("x* = {x:?}"))?;
    let (lambda, _) = best_lambda(&s, &g).map_err(|e| e.to_string())?;
    ensure(lambda == q(1, 4), || format!("lambda* = {lambda}"))?;
    Ok("value 3/4, x* = [0,0,0,3/4,1/4], lambda* = 1/4".into())
}

fn cli(args: &[&str]) -> Result<(String, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cellia"))
        .args(args)
        .env_remove("CELLIA_OUTPUT_DIR")
        .output()
        .map_err(|e| format!("spawn {args:?}: {e}"))?;
    let stdout = String::from_utf8(out.stdout).map_err(|e| e.to_string())?;
    Ok((stdout, out.status.code().unwrap_or(-1)))
}

fn cli_json(args: &[&str]) -> Result<Value, String> {
    let (text, code) = cli(args)?;
    ensure(code == 0, || format!("{args:?} exited {code}: {text}"))?;
    serde_json::from_str(&text).map_err(|e| format!("{args:?}: {e}"))
}

fn table() -> Outcome {
    type Expected = (u32, &'static [(&'static str, &'static str, bool)]);
    let tables: [Expected; 3] = [
        (
            2,
            &[
                ("[0,0,0]", "0", false),
                ("[0,0,1]", "1/2", false),
                ("[0,0,2]", "2/3", false),
                ("[0,1,1]", "3/4", true),
                ("[1,1,1]", "3/4", true),
            ],
        ),
        (
            3,
            &[
                ("[0,0,0]", "0", false),
                ("[0,0,1]", "5/9", false),
                ("[0,0,2]", "8/9", false),
                ("[0,0,3]", "1", false),
                ("[0,1,1]", "17/18", false),
                ("[0,1,2]", "10/9", false),
                ("[1,1,1]", "7/6", true),
                ("[1,1,2]", "7/6", true),
            ],
        ),
        (
            4,
            &[
                ("[0,0,0]", "0", false),
                ("[0,0,1]", "7/12", false),
                ("[0,0,2]", "1", false),
                ("[0,0,3]", "5/4", false),
                ("[0,0,4]", "4/3", false),
                ("[0,1,1]", "25/24", false),
                ("[0,1,2]", "4/3", false),
                ("[0,1,3]", "35/24", false),
                ("[0,2,2]", "3/2", false),
                ("[1,1,1]", "11/8", false),
                ("[1,1,2]", "37/24", false),
                ("[1,1,3]", "37/24", false),
                ("[1,2,2]", "19/12", true),
                ("[2,2,2]", "3/2", false),
            ],
        ),
    ];
    for (m, rows) in tables {
        let doc = cli_json(&["table", "--m", &m.to_string()])?;
        let got = doc["rows"].as_array().ok_or("rows missing")?;
        ensure(got.len() == rows.len(), || {
            format!("M={m}: {} rows, expected {}", got.len(), rows.len())
        })?;
        for (row, &(config, f, star)) in got.iter().zip(rows) {
            let c = serde_json::to_string(&row["config"]).map_err(|e| e.to_string())?;
            let fv = row["f"]["exact"].as_str().unwrap_or_default();
            let is_max = row["is_max"].as_bool().unwrap_or(false);
            ensure(c == config && fv == f && is_max == star, || {
                format!("M={m}: got {c} {fv} max={is_max}, expected {config} {f} max={star}")
            })?;
        }
    }
    for m in 1..=10u32 {
        let doc = cli_json(&["table", "--m", &m.to_string()])?;
        let max: Q = doc["max"]["exact"]
            .as_str()
            .unwrap_or_default()
            .parse()
            .map_err(|_| "bad max")?;
        let limit = q(2 * m as i128, 5);
        ensure(max <= limit, || format!("M={m}: max {max} exceeds {limit}"))?;
        ensure(doc["ceiling"]["holds"] == Value::Bool(true), || {
            format!("M={m}: ceiling flag false")
        })?;
    }
    Ok("M=2,3,4 tables exact; max f_M <= 2M/5 for M=1..10".into())
}

fn oracle_sandwich() -> Outcome {
    let doc = cli_json(&["oracle", "--r", "1", "--m", "2"])?;
    let field = |k: &str| -> Result<Q, String> {
        doc[k]["exact"]
            .as_str()
            .unwrap_or_default()
            .parse()
            .map_err(|_| format!("{k} missing"))
    };
    let (oracle, lp, dual) = (field("oracle_value")?, field("lp_value")?, field("dual_bound")?);
    ensure(oracle <= lp && lp <= dual, || {
        format!("oracle {oracle}, LP {lp}, dual {dual} out of order")
    })?;
    ensure(oracle >= q(6, 7), || format!("oracle {oracle} below 6/7"))?;
    let run = run(1, 2, 2, 42)?;
    let achieved = run.solution.average_dof();
    let achieved = q(*achieved.numer() as i128, *achieved.denom() as i128);
    ensure(achieved <= oracle, || {
        format!("2x2 scheme {achieved} above oracle {oracle}")
    })?;
    Ok(format!("{oracle} <= {lp} <= {dual}; scheme point {achieved}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (ch, sol) = (path("channels.json"), path("solution.json"));
    let invocations: Vec<Vec<String>> = vec![
        vec!["graph".into(), "--r".into(), "3".into()],
        vec!["run".into(), "--r".into(), "3".into(), "--seed".into(), "42".into()],
        vec![
            "run".into(),
            "--r".into(),
            "2".into(),
            "--m".into(),
            "2".into(),
            "--n".into(),
            "3".into(),
            "--seed".into(),
            "7".into(),
        ],
        vec![
            "run".into(),
            "--r".into(),
            "3".into(),
            "--n".into(),
            "4".into(),
            "--dump-channels".into(),
            ch.clone(),
            "--dump-solution".into(),
            sol.clone(),
        ],
        vec!["certify".into(), "--channels".into(), ch, "--solution".into(), sol],
        vec!["bound".into(), "--r".into(), "5".into(), "--m".into(), "2".into()],
        vec!["table".into(), "--m".into(), "4".into()],
        vec!["sweep".into(), "--r-list".into(), "1,2,3".into()],
        vec!["oracle".into(), "--r".into(), "1".into()],
    ];
    for args in &invocations {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let (first, c1) = cli(&args)?;
        let (second, c2) = cli(&args)?;
        ensure(c1 == 0 && c2 == 0, || format!("{} exited {c1}/{c2}", args[0]))?;
        ensure(first == second, || format!("{} output differs between runs", args[0]))?;
        serde_json::from_str::<Value>(&first).map_err(|e| format!("{}: {e}", args[0]))?;
    }
    ensure(Path::new(&path("solution.json")).exists(), || {
        "solution dump missing".into()
    })?;
    Ok(format!("{} invocations byte-identical", invocations.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("lattice counting", counting),
        ("2x2 achievability", two_by_two),
        ("2x3 achievability", two_by_three),
        ("2x4 achievability", two_by_four),
        ("M=2 dual bound", converse_m2),
        ("LP internals", lp_internals),
        ("f_M table", table),
        ("oracle sandwich", oracle_sandwich),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
