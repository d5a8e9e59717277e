//! CSV and key=value writers, and readers for the same schemas.

use std::collections::BTreeMap;

use svfix::certifier::LscRun;
use svfix::{Certificate, HypothesisAudit, Verdict};

fn join<T: ToString>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

/// `witness_id,seq_id,n,lambda_1..,epsilon,d_n,verdict`, one row per step.
pub fn certificate_csv(c: &Certificate) -> String {
    let p = c.anchor.param.len();
    let mut header = vec!["witness_id".to_string(), "seq_id".into(), "n".into()];
    header.extend(names("lambda", p));
    header.extend(["epsilon".to_string(), "d_n".into(), "verdict".into()]);
    let mut s = join(header) + "\n";
    for r in &c.records {
        for (step, d) in r.steps.iter().zip(&r.distances) {
            let mut row = vec![
                r.witness_id.to_string(),
                r.seq_id.to_string(),
                step.n.to_string(),
            ];
            row.extend(step.param.iter().map(|v| v.to_string()));
            row.push(step.epsilon.map_or(String::new(), |e| e.to_string()));
            row.push(d.to_string());
            row.push(r.verdict.to_string());
            s += &join(row);
            s.push('\n');
        }
    }
    s
}

/// `witness_id,coord_1..,verdict,plateau`, one row per witness.
pub fn witnesses_csv(c: &Certificate) -> String {
    let dim = c.records.first().map_or(0, |r| r.witness.len());
    let mut header = vec!["witness_id".to_string()];
    header.extend(names("coord", dim));
    header.extend(["verdict".to_string(), "plateau".into()]);
    let mut s = join(header) + "\n";
    let mut by_id: BTreeMap<usize, (Vec<f64>, Verdict, Option<f64>)> = BTreeMap::new();
    for r in &c.records {
        let e = by_id
            .entry(r.witness_id)
            .or_insert_with(|| (r.witness.to_vec(), Verdict::Vacuous, None));
        e.1 = e.1.combine(r.verdict);
        if let Some(p) = r.plateau {
            e.2 = Some(e.2.map_or(p, |q: f64| q.max(p)));
        }
    }
    for (id, (w, v, p)) in by_id {
        let mut row = vec![id.to_string()];
        row.extend(w.iter().map(|x| x.to_string()));
        row.push(v.to_string());
        row.push(p.map_or(String::new(), |p| p.to_string()));
        s += &join(row);
        s.push('\n');
    }
    s
}

/// `seq_id,n,coord_1..,residual`, one row per point of every step set.
pub fn step_sets_csv(run: &LscRun, dim: usize) -> String {
    let mut header = vec!["seq_id".to_string(), "n".into()];
    header.extend(names("coord", dim));
    header.push("residual".into());
    let mut s = join(header) + "\n";
    for st in &run.step_sets {
        for (p, r) in st.set.points.iter().zip(&st.set.residuals) {
            let mut row = vec![st.seq_id.to_string(), st.n.to_string()];
            row.extend(p.iter().map(|x| x.to_string()));
            row.push(r.to_string());
            s += &join(row);
            s.push('\n');
        }
    }
    s
}

/// `key=value` lines in insertion order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub lines: Vec<(String, String)>,
}

impl Report {
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    pub fn audit(&mut self, a: &HypothesisAudit) {
        for c in &a.checks {
            self.set(format!("{}.{}", a.name, c.name), c.verdict);
        }
    }

    /// Check details go to a separate report so the verdict lines stay
    /// `check=verdict`.
    pub fn audit_details(&mut self, a: &HypothesisAudit) {
        for c in &a.checks {
            self.set(
                format!("{}.{}", a.name, c.name),
                c.detail.replace('\n', " "),
            );
        }
    }

    pub fn certificate(&mut self, key: &str, c: &Certificate) {
        self.set(format!("certificate.{key}"), c.verdict);
        self.set(format!("certificate.{key}.witnesses"), witness_count(c));
        self.set(format!("certificate.{key}.failures"), c.failures().count());
        if let Some(r) = &c.reason {
            self.set(format!("certificate.{key}.reason"), r);
        }
    }

    pub fn render(&self) -> String {
        self.lines
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn witness_count(c: &Certificate) -> usize {
    let mut ids: Vec<usize> = c.records.iter().map(|r| r.witness_id).collect();
    ids.dedup();
    ids.len()
}

pub fn parse_report(text: &str) -> Result<Report, String> {
    let mut r = Report::default();
    for (i, l) in text.lines().enumerate() {
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| format!("report line {}: no `=`", i + 1))?;
        r.set(k, v);
    }
    Ok(r)
}

/// A CSV split into its header and rows, with the header checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn f64_at(&self, row: usize, col: &str) -> Option<f64> {
        self.rows.get(row)?.get(self.column(col)?)?.parse().ok()
    }
}

pub fn parse_csv(text: &str) -> Result<Table, String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or("empty csv")?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, l) in lines.enumerate() {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != header.len() {
            return Err(format!(
                "row {}: {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}

fn expect_header(t: &Table, want: &[String]) -> Result<(), String> {
    if t.header != want {
        return Err(format!("header {:?}, expected {:?}", t.header, want));
    }
    Ok(())
}

fn num(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("`{s}` is not a number"))
}

/// Points and residuals of a solution-set CSV of dimension `dim`.
pub fn read_solution_csv(text: &str, dim: usize) -> Result<Vec<(Vec<f64>, f64)>, String> {
    let t = parse_csv(text)?;
    let mut want = names("coord", dim);
    want.push("residual".into());
    expect_header(&t, &want)?;
    t.rows
        .iter()
        .map(|r| {
            let v: Vec<f64> = r.iter().map(|s| num(s)).collect::<Result<_, _>>()?;
            Ok((v[..dim].to_vec(), v[dim]))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateRow {
    pub witness_id: usize,
    pub seq_id: usize,
    pub n: usize,
    pub param: Vec<f64>,
    pub epsilon: Option<f64>,
    pub d_n: f64,
    pub verdict: Verdict,
}

pub fn read_certificate_csv(text: &str, param_dim: usize) -> Result<Vec<CertificateRow>, String> {
    let t = parse_csv(text)?;
    let mut want = vec!["witness_id".to_string(), "seq_id".into(), "n".into()];
    want.extend(names("lambda", param_dim));
    want.extend(["epsilon".to_string(), "d_n".into(), "verdict".into()]);
    expect_header(&t, &want)?;
    let idx = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("`{s}` is not an index"))
    };
    t.rows
        .iter()
        .map(|r| {
            let p = param_dim;
            Ok(CertificateRow {
                witness_id: idx(&r[0])?,
                seq_id: idx(&r[1])?,
                n: idx(&r[2])?,
                param: r[3..3 + p]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_, _>>()?,
                epsilon: if r[3 + p].is_empty() {
                    None
                } else {
                    Some(num(&r[3 + p])?)
                },
                d_n: num(&r[4 + p])?,
                verdict: Verdict::parse(&r[5 + p])
                    .ok_or_else(|| format!("bad verdict `{}`", r[5 + p]))?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessRow {
    pub witness_id: usize,
    pub point: Vec<f64>,
    pub verdict: Verdict,
    pub plateau: Option<f64>,
}

pub fn read_witnesses_csv(text: &str, dim: usize) -> Result<Vec<WitnessRow>, String> {
    let t = parse_csv(text)?;
    let mut want = vec!["witness_id".to_string()];
    want.extend(names("coord", dim));
    want.extend(["verdict".to_string(), "plateau".into()]);
    expect_header(&t, &want)?;
    t.rows
        .iter()
        .map(|r| {
            Ok(WitnessRow {
                witness_id: r[0]
                    .parse()
                    .map_err(|_| format!("`{}` is not an index", r[0]))?,
                point: r[1..=dim]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_, _>>()?,
                verdict: Verdict::parse(&r[dim + 1]).ok_or("bad verdict")?,
                plateau: if r[dim + 2].is_empty() {
                    None
                } else {
                    Some(num(&r[dim + 2])?)
                },
            })
        })
        .collect()
}

/// `(seq_id, n) -> points with residuals` from a step-set CSV.
pub fn read_step_sets_csv(
    text: &str,
    dim: usize,
) -> Result<BTreeMap<(usize, usize), Vec<(Vec<f64>, f64)>>, String> {
    let t = parse_csv(text)?;
    let mut want = vec!["seq_id".to_string(), "n".into()];
    want.extend(names("coord", dim));
    want.push("residual".into());
    expect_header(&t, &want)?;
    let mut out: BTreeMap<(usize, usize), Vec<(Vec<f64>, f64)>> = BTreeMap::new();
    for r in &t.rows {
        let key = (
            r[0].parse().map_err(|_| "bad seq_id")?,
            r[1].parse().map_err(|_| "bad n")?,
        );
        let v: Vec<f64> = r[2..].iter().map(|s| num(s)).collect::<Result<_, _>>()?;
        out.entry(key)
            .or_default()
            .push((v[..dim].to_vec(), v[dim]));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StackelbergTable {
    pub rows: Vec<(Vec<f64>, Option<f64>, Option<Vec<f64>>, usize)>,
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
    pub value: f64,
    pub mode: String,
}

pub fn read_stackelberg_csv(text: &str, n1: usize, n2: usize) -> Result<StackelbergTable, String> {
    let mut lines: Vec<&str> = text.lines().collect();
    let last = lines.pop().ok_or("empty table")?;
    let body = lines.join("\n");
    let t = parse_csv(&body)?;
    let mut want = names("x", n1);
    want.push("inner_value".into());
    want.extend(names("r_y", n2));
    want.push("set_size".into());
    expect_header(&t, &want)?;
    let opt = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let mut rows = Vec::new();
    for r in &t.rows {
        let x: Vec<f64> = r[..n1].iter().map(|s| num(s)).collect::<Result<_, _>>()?;
        let v = opt(&r[n1])?;
        let y: Vec<Option<f64>> = r[n1 + 1..n1 + 1 + n2]
            .iter()
            .map(|s| opt(s))
            .collect::<Result<_, _>>()?;
        let y = y.into_iter().collect::<Option<Vec<f64>>>();
        let size = r[n1 + 1 + n2].parse().map_err(|_| "bad set_size")?;
        rows.push((x, v, y, size));
    }
    let f: Vec<&str> = last.split(',').collect();
    if f.len() != n1 + n2 + 2 {
        return Err(format!("final line has {} fields", f.len()));
    }
    Ok(StackelbergTable {
        rows,
        x_star: f[..n1].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
        y_star: f[n1..n1 + n2]
            .iter()
            .map(|s| num(s))
            .collect::<Result<_, _>>()?,
        value: num(f[n1 + n2])?,
        mode: f[n1 + n2 + 1].to_string(),
    })
}
