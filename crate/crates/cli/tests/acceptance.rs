//! Acceptance suite: one line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svfix::fixpoint::{approx_solution_set, SolutionSet};
use svfix::geometry::{distance_point_set, inflation_containment};
use svfix::mapping::{SetValuedMap, SetValuedMapDef};
use svfix::quasieq::{h_set, m1_set, m2_set, m_set_of, Which};
use svfix_cli::config::{Instance, RunConfig};
use svfix_cli::corpus;
use svfix_cli::output::{
    parse_report, read_certificate_csv, read_solution_csv, read_stackelberg_csv,
    read_witnesses_csv, Report,
};
use svfix_cli::run::{execute, Command};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)*) => {
        if !$cond {
            return Err(format!($($msg)*));
        }
    };
}

fn cfg(name: &str) -> Result<RunConfig, String> {
    corpus::config(name)
        .ok_or(format!("no instance {name}"))?
        .map_err(|e| e.to_string())
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["svfix"];
    argv.extend_from_slice(args);
    svfix_cli::run(argv)
}

fn read(dir: &Path, file: &str) -> Result<String, String> {
    std::fs::read_to_string(dir.join(file)).map_err(|e| format!("{file}: {e}"))
}

fn report(dir: &Path, file: &str) -> Result<Report, String> {
    parse_report(&read(dir, file)?)
}

fn key(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

fn point_set(s: &SolutionSet) -> HashSet<Vec<u64>> {
    s.points.iter().map(|p| key(p)).collect()
}

fn included(a: &SolutionSet, b: &SolutionSet) -> bool {
    let bs = point_set(b);
    a.points.iter().all(|p| bs.contains(&key(p)))
}

/// Hausdorff distance between sorted reals and `[a, b]`; the sup over the
/// interval is attained at an endpoint or a midpoint between neighbors.
fn hausdorff_to_interval(pts: &[f64], a: f64, b: f64) -> f64 {
    let near = |t: f64| {
        pts.iter()
            .map(|p| (p - t).abs())
            .fold(f64::INFINITY, f64::min)
    };
    let out = pts
        .iter()
        .map(|&p| (a - p).max(p - b).max(0.0))
        .fold(0.0, f64::max);
    let mut cands = vec![a, b];
    cands.extend(pts.windows(2).map(|w| ((w[0] + w[1]) / 2.0).clamp(a, b)));
    let inn = cands.into_iter().map(near).fold(0.0, f64::max);
    out.max(inn)
}

fn ac1(tmp: &Path) -> Outcome {
    let t = Instant::now();
    let c = cfg("example31")?;
    let Instance::Pfpp {
        map,
        lambda0,
        epsilon0,
    } = &c.instance
    else {
        return Err("example31 is not a fixed-point instance".into());
    };
    ensure!(
        lambda0 == &[0.0] && *epsilon0 == Some(0.1) && map.domain().h() == 1e-3,
        "unexpected anchors"
    );
    let dir = tmp.join("ac1");
    let solve = dir.join("solve");
    let code = cli(&["solve", "example31", "--out", solve.to_str().unwrap()]);
    ensure!(code == 0, "solve exit {code}");
    let pts: Vec<f64> = read_solution_csv(&read(&solve, "solution.csv")?, 1)?
        .into_iter()
        .map(|(p, _)| p[0])
        .collect();
    // roots of 2x^2 - 4x + 1
    let (a, b) = (1.0 - 2f64.sqrt() / 2.0, 1.0 + 2f64.sqrt() / 2.0);
    let d = hausdorff_to_interval(&pts, a, b);
    ensure!(d <= 2e-3, "Hausdorff distance {d} > 2e-3");
    let certify = dir.join("certify");
    let code = cli(&["certify", "example31", "--out", certify.to_str().unwrap()]);
    ensure!(code == 0, "certify exit {code}");
    let r = report(&certify, "report.txt")?;
    ensure!(
        r.get("certificate.solution_lsc") == Some("pass"),
        "S certificate {:?}",
        r.get("certificate.solution_lsc")
    );
    ensure!(
        r.get("certificate.approx_lsc") == Some("pass"),
        "E certificate {:?}",
        r.get("certificate.approx_lsc")
    );
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "runtime {secs:.1}s");
    Ok(format!(
        "{} points, Hausdorff {d:.2e}, S and E certificates pass, {secs:.2}s",
        pts.len()
    ))
}

fn ac2(tmp: &Path) -> Outcome {
    let t = Instant::now();
    let dir = tmp.join("ac2");
    let code = cli(&["audit", "example31-literal", "--out", dir.to_str().unwrap()]);
    ensure!(code == 2, "audit exit {code}");
    let r = report(&dir, "report.txt")?;
    ensure!(
        r.get("solution_lsc.range_containment") == Some("fail"),
        "range check not failing"
    );
    let details = report(&dir, "details.txt")?;
    let d = details
        .get("solution_lsc.range_containment")
        .ok_or("no range detail")?;
    // "max_excess = V at x = (X), parameter = (L) ..."
    let num_after = |tag: &str| -> Result<f64, String> {
        let rest = d.split(tag).nth(1).ok_or(format!("no `{tag}` in `{d}`"))?;
        let tok: String = rest
            .trim_start_matches([' ', '('])
            .chars()
            .take_while(|c| !matches!(c, ' ' | ')' | ','))
            .collect();
        tok.parse().map_err(|_| format!("bad number `{tok}`"))
    };
    let (v, x, l) = (
        num_after("max_excess =")?,
        num_after("at x =")?,
        num_after("parameter =")?,
    );
    let want = 1.0 + 8f64.sqrt() - 2.0;
    ensure!(
        (v - want).abs() <= 1e-6,
        "worst violation {v}, expected {want}"
    );
    ensure!(x == 2.0 && l == 0.0, "located at ({x}, {l})");
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "runtime {secs:.1}s");
    Ok(format!(
        "range containment fails by {v:.9} at (2, 0), {secs:.2}s"
    ))
}

fn ac3(tmp: &Path) -> Outcome {
    let t = Instant::now();
    let h = 1e-4;
    let dir = tmp.join("ac3");
    let cert = dir.join("certify");
    let code = cli(&["certify", "diagonal", "--out", cert.to_str().unwrap()]);
    ensure!(code == 2, "certify exit {code}");
    let ws = read_witnesses_csv(&read(&cert, "s_witnesses.csv")?, 1)?;
    let w0 = ws
        .iter()
        .find(|w| w.point == [0.0])
        .ok_or("no witness at x0 = 0")?;
    ensure!(
        w0.verdict.as_str() == "fail",
        "witness 0 verdict {}",
        w0.verdict
    );
    let plateau = w0.plateau.ok_or("no plateau")?;
    ensure!((plateau - 1.0).abs() <= 2.0 * h, "plateau {plateau}");
    let rows = read_certificate_csv(&read(&cert, "s_certificate.csv")?, 1)?;
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.witness_id == w0.witness_id)
        .map(|r| r.d_n)
        .collect();
    ensure!(
        tail.len() >= 4
            && tail[tail.len() - 4..]
                .iter()
                .all(|d| (d - 1.0).abs() <= 2.0 * h),
        "curve {tail:?}"
    );
    let audit = dir.join("audit");
    let code = cli(&["audit", "diagonal", "--out", audit.to_str().unwrap()]);
    ensure!(code == 2, "audit exit {code}");
    let r = report(&audit, "report.txt")?;
    ensure!(
        r.get("solution_lsc.graph_rotund") == Some("fail"),
        "rotundity not failing"
    );
    for k in [
        "solution_lsc.map_lsc",
        "solution_lsc.map_usc",
        "approx_lsc.map_usc_in_x",
        "approx_lsc.map_lsc_in_param",
    ] {
        ensure!(r.get(k) == Some("pass"), "{k} = {:?}", r.get(k));
    }
    let other_failures: Vec<&str> = r
        .lines
        .iter()
        .filter(|(k, v)| {
            k.starts_with("solution_lsc.") && k != "solution_lsc.graph_rotund" && v != "pass"
        })
        .map(|(k, _)| k.as_str())
        .collect();
    ensure!(
        other_failures.is_empty(),
        "other failing hypotheses {other_failures:?}"
    );
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 10.0, "runtime {secs:.1}s");
    Ok(format!(
        "witness x0 = 0 plateaus at {plateau}, rotundity is the only failed hypothesis, {secs:.2}s"
    ))
}

fn ac4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut violations, mut inside) = (0usize, 0usize);
    let mut kinds = BTreeMap::new();
    let cases = 1500;
    for case in 0..cases {
        let shape = oracles::random_shape(&mut rng);
        *kinds
            .entry(format!("{shape:?}").split('(').next().unwrap().to_string())
            .or_insert(0) += 1;
        let set = shape.set();
        let a = if case % 3 == 0 {
            shape.on_set(&mut rng)
        } else {
            [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)]
        };
        let delta = rng.random_range(0.01..2.0);
        let zero = shape.oracle(a) <= 1e-9;
        let lib_zero = distance_point_set(&a, &set).map_err(|e| e.to_string())? <= 1e-9;
        let holds = inflation_containment(&a, &set, delta, 64)
            .map_err(|e| e.to_string())?
            .holds;
        violations += usize::from(holds != zero || lib_zero != zero);
        inside += usize::from(zero);
    }
    ensure!(violations == 0, "{violations} violations");
    ensure!(
        kinds.len() == 3 && inside > 0,
        "shape mix {kinds:?}, {inside} inside"
    );
    Ok(format!(
        "{cases} cases {kinds:?}, {inside} with a in A, 0 violations"
    ))
}

/// The fixed-point map behind each instance and its anchor parameter.
fn fixed_point_map(c: &RunConfig) -> (&SetValuedMapDef, &[f64], Option<f64>) {
    match &c.instance {
        Instance::Pfpp {
            map,
            lambda0,
            epsilon0,
        } => (map, lambda0, *epsilon0),
        Instance::Stackelberg { inst, x0, .. } => (inst.follower(), x0, None),
        Instance::QuasiEq { inst, lambda0, .. } => (inst.k(), lambda0, None),
    }
}

fn ac5() -> Outcome {
    let mut pairs = 0usize;
    let mut violations = Vec::new();
    for name in corpus::names() {
        let c = cfg(name)?;
        let (map, lambda0, eps0) = fixed_point_map(&c);
        let tol = c.opts.tol_for(map);
        let top = eps0
            .filter(|e| *e > 0.0)
            .map_or(20.0 * map.domain().h(), |e| 2.0 * e);
        let eps: Vec<f64> = (0..20).map(|i| top * i as f64 / 19.0).collect();
        let sets: Vec<SolutionSet> = eps
            .iter()
            .map(|&e| approx_solution_set(map, lambda0, e, tol).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
        for i in 0..sets.len() {
            for j in i..sets.len() {
                pairs += 1;
                if !included(&sets[i], &sets[j]) {
                    violations.push(format!("{name}: eps {} vs {}", eps[i], eps[j]));
                }
            }
        }
    }
    ensure!(violations.is_empty(), "{violations:?}");
    Ok(format!(
        "{} instances, {pairs} ordered pairs, 0 violations",
        corpus::names().count()
    ))
}

fn ac6() -> Outcome {
    let mut premises = Vec::new();
    let mut counterexamples = Vec::new();
    for name in corpus::names() {
        let c = cfg(name)?;
        let o = execute(&c, Command::Certify).map_err(|e| e.to_string())?;
        let r = parse_report(o.report().ok_or("no report")?)?;
        let ok = |v: &str| v == "pass" || v == "vacuous";
        let all_ok = |prefix: &str| {
            let vs: Vec<&str> = r
                .lines
                .iter()
                .filter(|(k, _)| k.starts_with(prefix))
                .map(|(_, v)| v.as_str())
                .collect();
            !vs.is_empty() && vs.iter().all(|v| ok(v))
        };
        let mut implication = |label: String, premise: bool, cert: &str| {
            if premise {
                premises.push(label.clone());
                if !r.get(cert).is_some_and(ok) {
                    counterexamples.push(label);
                }
            }
        };
        match &c.instance {
            Instance::Pfpp { epsilon0, .. } => {
                implication(
                    format!("{name}/S"),
                    all_ok("solution_lsc."),
                    "certificate.solution_lsc",
                );
                let e_ok = epsilon0.is_some_and(|e| e > 0.0);
                implication(
                    format!("{name}/E"),
                    e_ok && all_ok("approx_lsc."),
                    "certificate.approx_lsc",
                );
            }
            Instance::Stackelberg { .. } => {
                implication(
                    format!("{name}/R"),
                    all_ok("solution_lsc."),
                    "certificate.response_lsc",
                );
            }
            Instance::QuasiEq { which, .. } => {
                for w in which {
                    let a = format!("{}_lsc", w.as_str());
                    let routes = [
                        format!("{a}.route_semicontinuity"),
                        format!("{a}.route_inclusion"),
                    ];
                    let premise = routes.iter().any(|k| r.get(k).is_some_and(ok));
                    implication(
                        format!("{name}/{}", w.as_str()),
                        premise,
                        &format!("certificate.{a}"),
                    );
                }
            }
        }
    }
    ensure!(
        counterexamples.is_empty(),
        "counterexamples {counterexamples:?}"
    );
    ensure!(!premises.is_empty(), "no instance meets the hypotheses");
    Ok(format!("hypotheses met on {premises:?}, 0 counterexamples"))
}

fn ac7() -> Outcome {
    let t = Instant::now();
    let c = cfg("stackelberg-box")?;
    let Instance::Stackelberg { inst, .. } = &c.instance else {
        return Err("not a bilevel instance".into());
    };
    let h = 1e-3;
    ensure!(
        inst.leader().h() == h && inst.follower().domain().h() == h,
        "grids are not h = 1e-3"
    );
    let tol = c.opts.tol_for(inst.follower());
    // exhaustive enumeration over both grids
    let grid = |j: usize| (j as f64 * h).min(1.0);
    let n = 1001;
    let mut best: Option<(f64, f64, f64)> = None;
    for i in 0..n {
        let x = grid(i);
        let (lo, hi) = ((x / 2.0 - 0.2).max(0.0), (x / 2.0 + 0.2).min(1.0));
        for j in 0..n {
            let y = grid(j);
            if (lo - y).max(y - hi).max(0.0) <= tol {
                let f = (x - 0.5) * (x - 0.5) + y;
                if best.is_none_or(|b| f < b.2) {
                    best = Some((x, y, f));
                }
            }
        }
    }
    let (ox, oy, ov) = best.ok_or("oracle found nothing")?;
    ensure!(
        (ox - 0.4).abs() < 1e-12 && (ov - 0.01).abs() < 1e-12,
        "oracle ({ox}, {ov}) is off the analytic optimum"
    );
    let dir = tmp_dir()?;
    let code = cli(&[
        "stackelberg",
        "stackelberg-box",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    ensure!(code == 0, "stackelberg exit {code}");
    let opt = read_stackelberg_csv(&read(dir.path(), "table_optimistic.csv")?, 1, 1)?;
    ensure!(
        opt.x_star == [ox] && opt.value == ov && opt.y_star == [oy],
        "solver ({:?}, {}) vs oracle ({ox}, {ov})",
        opt.x_star,
        opt.value
    );
    let r = report(dir.path(), "report.txt")?;
    ensure!(
        r.get("certificate.response_lsc") == Some("pass"),
        "response certificate {:?}",
        r.get("certificate.response_lsc")
    );
    let mut checked = Vec::new();
    for name in corpus::names() {
        let c = cfg(name)?;
        if !matches!(c.instance, Instance::Stackelberg { .. }) {
            continue;
        }
        let o = execute(&c, Command::Solve).map_err(|e| e.to_string())?;
        let table = |m: &str| read_stackelberg_csv(&o.files[&format!("table_{m}.csv")], 1, 1);
        let (po, ps, pp) = (
            table("optimistic")?,
            table("selection")?,
            table("pessimistic")?,
        );
        ensure!(
            po.value <= ps.value && ps.value <= pp.value,
            "{name}: values {} {} {}",
            po.value,
            ps.value,
            pp.value
        );
        for ((a, b), c) in po.rows.iter().zip(&ps.rows).zip(&pp.rows) {
            let (a, b, c) = (
                a.1.ok_or("empty")?,
                b.1.ok_or("empty")?,
                c.1.ok_or("empty")?,
            );
            ensure!(a <= b && b <= c, "{name}: row values {a} {b} {c}");
        }
        checked.push(name);
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "runtime {secs:.1}s");
    Ok(format!("optimistic (x*, value) = ({ox}, {ov}) matches the oracle, ordering holds on {checked:?}, {secs:.2}s"))
}

fn tmp_dir() -> Result<tempfile::TempDir, String> {
    tempfile::tempdir().map_err(|e| e.to_string())
}

fn ac8() -> Outcome {
    let t = Instant::now();
    let c = cfg("qep-linear")?;
    let Instance::QuasiEq { inst, .. } = &c.instance else {
        return Err("not a quasi-equilibrium instance".into());
    };
    let tol = c.opts.tol_for(inst.k());
    let h = inst.domain().h();
    let mu = inst.cone().mu();
    let xs: Vec<f64> = (0..=128).map(|j| j as f64 * h).collect();
    for u in [0.25, 0.5, 0.75, 1.5] {
        // exhaustive feasibility: no y in K = [0, 1] puts y - x + u in -int C
        let ys: Vec<f64> = (0..=256).map(|k| k as f64 / 256.0).collect();
        let oracle: Vec<f64> = xs
            .iter()
            .copied()
            .filter(|&x| ys.iter().all(|&y| y - x + u > -mu))
            .collect();
        let want: Vec<f64> = xs.iter().copied().filter(|&x| x <= u.min(1.0)).collect();
        ensure!(
            oracle == want,
            "oracle disagrees with [0, min(u, 1)] at u = {u}"
        );
        let m1: Vec<f64> = m1_set(inst, &[u], &[0.0], tol)
            .map_err(|e| e.to_string())?
            .points
            .iter()
            .map(|p| p[0])
            .collect();
        ensure!(
            m1 == want,
            "M1 at u = {u} has {} points, expected {}",
            m1.len(),
            want.len()
        );
    }
    let mut nest_checks = 0;
    for name in corpus::names() {
        let c = cfg(name)?;
        let Instance::QuasiEq {
            inst, u0, lambda0, ..
        } = &c.instance
        else {
            continue;
        };
        let tol = c.opts.tol_for(inst.k());
        let (om, pa) = (inst.omega(), inst.k().params());
        let mut us = vec![
            u0.clone(),
            om.lo().to_vec(),
            om.hi().to_vec(),
            om.center().to_vec(),
        ];
        us.dedup();
        let mut ls = vec![lambda0.clone(), pa.lo().to_vec(), pa.hi().to_vec()];
        ls.dedup();
        for l in &ls {
            let hs = h_set(inst, l, tol).map_err(|e| e.to_string())?;
            for u in &us {
                let m1 = m1_set(inst, u, l, tol).map_err(|e| e.to_string())?;
                let m2 = m2_set(inst, u, l, tol).map_err(|e| e.to_string())?;
                ensure!(
                    included(&m2, &m1) && included(&m1, &hs),
                    "{name}: nesting fails at u = {u:?}, l = {l:?}"
                );
                nest_checks += 1;
            }
        }
    }
    let dir = tmp_dir()?;
    let code = cli(&["certify", "m1-fail", "--out", dir.path().to_str().unwrap()]);
    ensure!(code == 2, "m1-fail certify exit {code}");
    let ws = read_witnesses_csv(&read(dir.path(), "m1_witnesses.csv")?, 1)?;
    let failing = ws
        .iter()
        .find(|w| w.verdict.as_str() == "fail")
        .ok_or("no failing witness stored")?;
    let base = read_solution_csv(&read(dir.path(), "m1_base.csv")?, 1)?;
    ensure!(
        base.iter().any(|(p, _)| p == &failing.point),
        "witness not in the stored base set"
    );
    let m1_fail = cfg("m1-fail")?;
    if let Instance::QuasiEq {
        inst, u0, lambda0, ..
    } = &m1_fail.instance
    {
        let s = m_set_of(inst, Which::M1, u0, lambda0, m1_fail.opts.tol_for(inst.k()))
            .map_err(|e| e.to_string())?;
        ensure!(
            s.len() == base.len(),
            "stored base set differs from a recomputation"
        );
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "runtime {secs:.1}s");
    Ok(format!(
        "M1 = grid ∩ [0, min(u, 1)] for 4 values of u, {nest_checks} nesting checks, m1-fail witness at x = {}, {secs:.2}s",
        failing.point[0]
    ))
}

fn tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

fn ac9() -> Outcome {
    let t = Instant::now();
    let (a, b) = (tmp_dir()?, tmp_dir()?);
    for d in [&a, &b] {
        let code = cli(&["corpus", "--out", d.path().to_str().unwrap()]);
        ensure!(code == 0, "corpus exit {code}");
    }
    let (ta, tb) = (tree(a.path())?, tree(b.path())?);
    ensure!(
        ta.len() > corpus::names().count(),
        "only {} files",
        ta.len()
    );
    ensure!(ta.keys().eq(tb.keys()), "file lists differ");
    let differing: Vec<&String> = ta
        .iter()
        .filter(|(k, v)| tb[*k] != **v)
        .map(|(k, _)| k)
        .collect();
    ensure!(differing.is_empty(), "differing files {differing:?}");
    let bytes: usize = ta.values().map(Vec::len).sum();
    Ok(format!(
        "two corpus runs, {} files, {bytes} bytes, identical, {:.2}s",
        ta.len(),
        t.elapsed().as_secs_f64()
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let root = tmp.path().to_path_buf();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("AC1 example regression", Box::new(|| ac1(&root))),
        ("AC2 literal radicand", Box::new(|| ac2(&root))),
        ("AC3 counterexample discrimination", Box::new(|| ac3(&root))),
        ("AC4 inflation cancellation", Box::new(ac4)),
        ("AC5 epsilon family monotonicity", Box::new(ac5)),
        ("AC6 hypotheses imply certificates", Box::new(ac6)),
        ("AC7 bilevel oracle and mode ordering", Box::new(ac7)),
        ("AC8 quasi-equilibrium sets", Box::new(ac8)),
        ("AC9 determinism", Box::new(ac9)),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".into()));
        match r {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
