//! CSV tables for `compute` and `compare`.

use crate::{write, CliError};
use akhiezer::formulas::ThetaPipeline;
use akhiezer::numerics::comparison_points;
use akhiezer::opoly::{required_order, stieltjes, stieltjes_unchecked, RecurrenceTable};
use akhiezer::quadrature::InnerProductEngine;
use akhiezer::verify::{defaults, reference, CheckRecord, Report, RunConfig, Status};
use akhiezer::IntervalSet;
use num_complex::Complex64 as C;
use std::path::Path;

fn failed<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// Shortest round-trip form; exponent notation away from moderate magnitudes, no −0.
fn num(x: f64) -> String {
    let x = x + 0.0;
    if x != 0.0 && !(1e-4..1e15).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        writer.write_record(header).map_err(failed)?;
        Ok(Table { writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), CliError> {
        self.writer.write_record(fields).map_err(failed)
    }

    fn save(self, path: &Path) -> Result<(), CliError> {
        let bytes = self.writer.into_inner().map_err(failed)?;
        write(path, &bytes)
    }
}

fn engine(config: &RunConfig) -> Result<(IntervalSet, InnerProductEngine), CliError> {
    let set = config.validate()?;
    let engine = InnerProductEngine::new(&set, config.order).map_err(failed)?;
    Ok((set, engine))
}

fn pipeline(config: &RunConfig, set: &IntervalSet) -> Result<ThetaPipeline, CliError> {
    ThetaPipeline::new(set.clone(), config.order, config.theta_tol).map_err(failed)
}

/// Writes the four compute tables and returns their file names.
pub fn compute(config: &RunConfig, out: &Path) -> Result<Vec<&'static str>, CliError> {
    let (set, engine) = engine(config)?;
    let n_max = config.n_max;
    let table = stieltjes(&engine, n_max + 1).map_err(failed)?;
    let pipe = pipeline(config, &set)?;

    let mut rec = Table::new(&["n", "a_quadrature", "b_quadrature", "h_quadrature", "a_theta", "b_theta", "h_theta"])?;
    for n in 1..=n_max {
        rec.row(&[
            n.to_string(),
            num(table.a(n)),
            num(table.b(n)),
            num(table.h(n)),
            num(pipe.a(n).map_err(failed)?),
            num(pipe.b(n).map_err(failed)?),
            num(pipe.h(n).map_err(failed)?),
        ])?;
    }
    rec.save(&out.join("recurrence.csv"))?;

    let mut samples = Table::new(&["n", "z_re", "z_im", "quadrature_re", "quadrature_im", "theta_re", "theta_im"])?;
    let points = comparison_points(&set, config.samples);
    for n in 1..=n_max {
        for &z in &points {
            let q = table.eval_p(n, z);
            let t = pipe.p(n, z).map_err(failed)?;
            samples.row(&[n.to_string(), num(z.re), num(z.im), num(q.re), num(q.im), num(t.re), num(t.im)])?;
        }
    }
    samples.save(&out.join("p_samples.csv"))?;

    let mut res = Table::new(&["n", "j", "endpoint", "delta", "c11", "c12", "c21", "c22"])?;
    for n in 1..=n_max {
        let r = akhiezer::monodromy::residues(&table, &set, n);
        for (j, c) in r.c.iter().enumerate() {
            res.row(&[
                n.to_string(),
                (j + 1).to_string(),
                set.endpoint(j).label(),
                num(r.deltas[j]),
                num(c[(0, 0)]),
                num(c[(0, 1)]),
                num(c[(1, 0)]),
                num(c[(1, 1)]),
            ])?;
        }
    }
    res.save(&out.join("residues.csv"))?;

    let pd = &pipe.surface.periods;
    let mut per = Table::new(&["quantity", "row", "col", "re", "im"])?;
    let entry = |name: &str, row: String, col: String, v: C| [name.to_string(), row, col, num(v.re), num(v.im)];
    per.row(&entry("capacity", String::new(), String::new(), C::from(pd.capacity)))?;
    for (name, m) in [("A", &pd.a), ("B", &pd.b)] {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                per.row(&entry(name, (i + 1).to_string(), (j + 1).to_string(), m[(i, j)]))?;
            }
        }
    }
    for (p, &v) in pd.lambdas.iter().enumerate() {
        per.row(&entry("lambda", p.to_string(), String::new(), v))?;
    }
    for (name, v) in [("L", &pd.l), ("u_inf", &pd.u_inf)] {
        for (i, &x) in v.iter().enumerate() {
            per.row(&entry(name, (i + 1).to_string(), String::new(), x))?;
        }
    }
    per.save(&out.join("periods.csv"))?;

    Ok(vec!["recurrence.csv", "p_samples.csv", "residues.csv", "periods.csv"])
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Worst deviation per quantity over the certified rows.
struct Tally {
    id: &'static str,
    tolerance: f64,
    worst: Option<(f64, String)>,
}

impl Tally {
    fn push(&mut self, deviation: f64, at: impl FnOnce() -> String) {
        let worse = match &self.worst {
            None => true,
            Some((w, _)) => deviation > *w || deviation.is_nan() && !w.is_nan(),
        };
        if worse {
            self.worst = Some((deviation, at()));
        }
    }

    fn record(self) -> CheckRecord {
        let reference = reference(self.id).unwrap_or_default().to_string();
        match self.worst {
            Some((residual, at)) => {
                let passed = residual <= self.tolerance;
                CheckRecord {
                    id: self.id.into(),
                    reference,
                    residual: Some(residual),
                    tolerance: self.tolerance,
                    status: if passed { Status::Pass } else { Status::Fail },
                    passed,
                    detail: Some(format!("worst at {at}")),
                    runtime_ms: None,
                }
            }
            None => CheckRecord {
                id: self.id.into(),
                reference,
                residual: None,
                tolerance: self.tolerance,
                status: Status::Skipped,
                passed: true,
                detail: Some("no quadrature-certified rows".into()),
                runtime_ms: None,
            },
        }
    }
}

/// Writes compare.csv and report.json; the report covers certified rows only.
pub fn compare(config: &RunConfig, out: &Path) -> Result<Report, CliError> {
    let (set, engine) = engine(config)?;
    if set.genus() == 0 {
        return Err(CliError::Usage("compare needs at least one gap".into()));
    }
    let n_max = config.n_max;
    let table: RecurrenceTable = stieltjes_unchecked(&engine, n_max).map_err(failed)?;
    let pipe = pipeline(config, &set)?;
    let points = comparison_points(&set, defaults::COMPARISON_POINTS);

    let mut tallies: Vec<Tally> = ["cross.h", "cross.a", "cross.b", "cross.hankel", "cross.p"]
        .into_iter()
        .map(|id| Tally {
            id,
            tolerance: config.tolerance(id).expect("known check"),
            worst: None,
        })
        .collect();

    let mut csv = Table::new(&[
        "n",
        "quantity",
        "z_re",
        "z_im",
        "quadrature_re",
        "quadrature_im",
        "theta_re",
        "theta_im",
        "deviation",
        "status",
    ])?;
    for n in 1..=n_max {
        let certified = required_order(n) <= config.order;
        let mut emit = |k: usize, name: &str, z: Option<C>, q: C, t: C, deviation: f64| -> Result<(), CliError> {
            let status = if !certified {
                "quadrature-uncertified"
            } else {
                tallies[k].push(deviation, || match z {
                    Some(z) => format!("n={n}, z={z}"),
                    None => format!("n={n}"),
                });
                if deviation <= tallies[k].tolerance {
                    "ok"
                } else {
                    "exceeds"
                }
            };
            let (zr, zi) = z.map_or((String::new(), String::new()), |z| (num(z.re), num(z.im)));
            csv.row(&[
                n.to_string(),
                name.to_string(),
                zr,
                zi,
                num(q.re),
                num(q.im),
                num(t.re),
                num(t.im),
                num(deviation),
                status.to_string(),
            ])
        };
        let (h, a, b) = (pipe.h(n).map_err(failed)?, pipe.a(n).map_err(failed)?, pipe.b(n).map_err(failed)?);
        emit(0, "h", None, table.h(n).into(), h.into(), rel(h, table.h(n)))?;
        emit(1, "a", None, table.a(n).into(), a.into(), rel(a, table.a(n)))?;
        emit(2, "b", None, table.b(n).into(), b.into(), (b - table.b(n)).abs())?;
        let d = pipe.hankel(n).map_err(failed)?;
        let dq = table.hankel_product(n + 1);
        emit(3, "hankel", None, dq.into(), d.into(), rel(d, dq))?;
        for &z in &points {
            let q = table.eval_p(n, z);
            let t = pipe.p(n, z).map_err(failed)?;
            emit(4, "P", Some(z), q, t, (t - q).norm() / (1.0 + q.norm()))?;
        }
    }
    csv.save(&out.join("compare.csv"))?;

    let records = tallies.into_iter().map(Tally::record).collect();
    let report = Report::new(config, set.genus(), records);
    write(&out.join("report.json"), report.to_json().as_bytes())?;
    Ok(report)
}
